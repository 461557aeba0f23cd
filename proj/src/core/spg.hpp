#pragma once

#include <Eigen/Dense>
#include <functional>

namespace cnhp {

struct BoxMaximizeOptions {
    int max_iterations = 200;
    double gradient_tolerance = 1e-8;
    double armijo_c1 = 1e-4;
    int max_backtracks = 40;
};

struct BoxMaximizeResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Objective callback: returns f(x) and writes the gradient.
using BoxObjective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

/// Spectral projected gradient ascent (Barzilai-Borwein steps, monotone Armijo
/// backtracking) over a coordinate box. Deterministic; never leaves the box;
/// the returned value never falls below f(x0).
BoxMaximizeResult box_maximize(const BoxObjective& objective, const Eigen::VectorXd& x0,
                               const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                               const BoxMaximizeOptions& options = BoxMaximizeOptions());

}  // namespace cnhp
