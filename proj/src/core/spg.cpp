#include "core/spg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cnhp {

namespace {

Eigen::VectorXd project(const Eigen::VectorXd& x, const Eigen::VectorXd& lower,
                        const Eigen::VectorXd& upper) {
    return x.cwiseMax(lower).cwiseMin(upper);
}

}  // namespace

BoxMaximizeResult box_maximize(const BoxObjective& objective, const Eigen::VectorXd& x0,
                               const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                               const BoxMaximizeOptions& options) {
    const auto n = x0.size();
    if (lower.size() != n || upper.size() != n) {
        throw std::invalid_argument("box bounds must match the variable dimension");
    }
    if ((lower.array() > upper.array()).any()) {
        throw std::invalid_argument("box lower bounds exceed upper bounds");
    }

    BoxMaximizeResult result;
    result.x = project(x0, lower, upper);
    Eigen::VectorXd grad(n);
    result.value = objective(result.x, grad);
    if (!std::isfinite(result.value)) {
        throw std::runtime_error("objective is not finite at the starting point");
    }

    double bb_step = 1.0;
    for (int iter = 0; iter < options.max_iterations; ++iter) {
        result.iterations = iter;
        const Eigen::VectorXd residual = project(result.x + grad, lower, upper) - result.x;
        if (residual.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance) {
            result.converged = true;
            break;
        }

        const Eigen::VectorXd direction =
            project(result.x + bb_step * grad, lower, upper) - result.x;
        const double slope = grad.dot(direction);
        if (slope <= 0.0) {
            result.converged = true;
            break;
        }

        double t = 1.0;
        double candidate_value = 0.0;
        Eigen::VectorXd candidate;
        Eigen::VectorXd candidate_grad(n);
        bool accepted = false;
        for (int bt = 0; bt < options.max_backtracks; ++bt) {
            candidate = project(result.x + t * direction, lower, upper);
            candidate_value = objective(candidate, candidate_grad);
            if (std::isfinite(candidate_value) &&
                candidate_value >= result.value + options.armijo_c1 * t * slope) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;

        const Eigen::VectorXd s = candidate - result.x;
        const Eigen::VectorXd y = candidate_grad - grad;
        const double sy = -s.dot(y);
        const double ss = s.dot(s);
        bb_step = (sy > 1e-14 && std::isfinite(sy)) ? ss / sy : 1.0;
        bb_step = std::clamp(bb_step, 1e-10, 1e10);

        result.x = candidate;
        result.value = candidate_value;
        grad = candidate_grad;
    }
    return result;
}

}  // namespace cnhp
