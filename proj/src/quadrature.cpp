#include "windtrade/quadrature.hpp"

#include <numbers>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace windtrade {

// Golub-Welsch eigenvalues of the Jacobi matrix as starting values, then a
// Newton polish on the orthonormal recurrence for the physicists' weight
// exp(-x^2). The polish also yields the weights to full precision.
GaussHermiteRule::GaussHermiteRule(std::size_t n) {
    if (n == 0) throw std::invalid_argument("GaussHermiteRule: n must be positive");
    const auto size = static_cast<Eigen::Index>(n);
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(size);
    Eigen::VectorXd off(std::max<Eigen::Index>(size - 1, 0));
    for (Eigen::Index k = 0; k + 1 < size; ++k) off[k] = std::sqrt(0.5 * static_cast<double>(k + 1));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd guess = solver.eigenvalues();

    const double pim4 = std::pow(std::numbers::pi, -0.25);
    const auto nd = static_cast<double>(n);
    nodes_.resize(n);
    weights_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double z = guess[static_cast<Eigen::Index>(i)];
        double pp = 1.0;
        for (int it = 0; it < 20; ++it) {
            double p1 = pim4;
            double p2 = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                const auto jd = static_cast<double>(j);
                p1 = z * std::sqrt(2.0 / (jd + 1.0)) * p2 - std::sqrt(jd / (jd + 1.0)) * p3;
            }
            pp = std::sqrt(2.0 * nd) * p2;
            const double step = p1 / pp;
            z -= step;
            if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(z))) break;
        }
        nodes_[i] = std::numbers::sqrt2 * z;
        weights_[i] = 2.0 / (pp * pp) * std::numbers::inv_sqrtpi;
    }
}

}  // namespace windtrade
