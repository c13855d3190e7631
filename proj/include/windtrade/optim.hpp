#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace windtrade {

struct SimplexOptions {
    std::size_t max_iterations = 5000;
    /// Stop when the simplex size falls below this times max(1, |x|_inf).
    double size_tolerance = 1e-8;
    std::size_t restarts = 2;       ///< extra runs started from the previous optimum
};

struct SimplexResult {
    std::vector<double> x;
    double value;
    std::size_t iterations;
    bool converged;
};

/// Derivative-free Nelder-Mead minimization. Non-finite objective values and
/// exceptions thrown by the objective are treated as +infinity.
SimplexResult minimize_simplex(const std::function<double(std::span<const double>)>& objective,
                               std::vector<double> start, std::vector<double> step,
                               const SimplexOptions& options = {});

}  // namespace windtrade
