#include "windtrade/optim.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

namespace windtrade {

namespace {

// Large but finite so the simplex can still order vertices.
constexpr double kPenalty = 1e300;

struct Context {
    const std::function<double(std::span<const double>)>* objective;
    std::vector<double> buffer;
};

double trampoline(const gsl_vector* v, void* params) {
    auto* ctx = static_cast<Context*>(params);
    for (std::size_t i = 0; i < ctx->buffer.size(); ++i) ctx->buffer[i] = gsl_vector_get(v, i);
    try {
        const double value = (*ctx->objective)(ctx->buffer);
        return std::isfinite(value) ? value : kPenalty;
    } catch (...) {
        return kPenalty;
    }
}

struct VectorDeleter {
    void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};
struct MinimizerDeleter {
    void operator()(gsl_multimin_fminimizer* m) const { gsl_multimin_fminimizer_free(m); }
};

}  // namespace

SimplexResult minimize_simplex(const std::function<double(std::span<const double>)>& objective,
                               std::vector<double> start, std::vector<double> step,
                               const SimplexOptions& options) {
    const std::size_t n = start.size();
    if (n == 0 || step.size() != n) throw std::invalid_argument("minimize_simplex: bad dimensions");
    gsl_set_error_handler_off();

    Context ctx{&objective, std::vector<double>(n)};
    gsl_multimin_function fn{&trampoline, n, &ctx};
    std::unique_ptr<gsl_vector, VectorDeleter> x(gsl_vector_alloc(n));
    std::unique_ptr<gsl_vector, VectorDeleter> ss(gsl_vector_alloc(n));
    std::unique_ptr<gsl_multimin_fminimizer, MinimizerDeleter> m(
        gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n));

    for (std::size_t i = 0; i < n; ++i) gsl_vector_set(x.get(), i, start[i]);
    SimplexResult result{start, trampoline(x.get(), &ctx), 0, false};

    for (std::size_t run = 0; run <= options.restarts; ++run) {
        for (std::size_t i = 0; i < n; ++i) {
            gsl_vector_set(x.get(), i, result.x[i]);
            gsl_vector_set(ss.get(), i, step[i]);
        }
        gsl_multimin_fminimizer_set(m.get(), &fn, x.get(), ss.get());
        bool converged = false;
        std::size_t it = 0;
        std::size_t idle = 0;
        double last_size = std::numeric_limits<double>::infinity();
        double last_value = std::numeric_limits<double>::infinity();
        while (it < options.max_iterations) {
            ++it;
            if (gsl_multimin_fminimizer_iterate(m.get()) != GSL_SUCCESS) break;
            const double size = gsl_multimin_fminimizer_size(m.get());
            const double value = gsl_multimin_fminimizer_minimum(m.get());
            const gsl_vector* cur = gsl_multimin_fminimizer_x(m.get());
            double scale = 1.0;
            for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(gsl_vector_get(cur, i)));
            // A simplex that neither shrinks nor improves has hit floating-point resolution.
            idle = (size < last_size || value < last_value) ? 0 : idle + 1;
            last_size = std::min(last_size, size);
            last_value = std::min(last_value, value);
            if (size < options.size_tolerance * scale || idle > 20 * (n + 1)) {
                converged = true;
                break;
            }
        }
        result.iterations += it;
        result.converged = result.converged || converged;
        const double value = gsl_multimin_fminimizer_minimum(m.get());
        const bool improved = value < result.value;
        if (improved) {
            const gsl_vector* best = gsl_multimin_fminimizer_x(m.get());
            for (std::size_t i = 0; i < n; ++i) result.x[i] = gsl_vector_get(best, i);
            result.value = value;
        }
        if (!converged || (run > 0 && !improved)) break;
    }
    return result;
}

}  // namespace windtrade
