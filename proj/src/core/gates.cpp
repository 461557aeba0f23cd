#include "core/gates.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "core/mathutil.hpp"

namespace cnhp {

namespace {

// tanh evaluated on |x| with the sign restored, so f(-x) == -f(x) bitwise.
double odd_tanh(double x) {
    const double t = std::tanh(std::abs(x));
    return x < 0.0 ? -t : t;
}

}  // namespace

void GateSet::validate() const {
    if (tau <= 0.0) throw std::invalid_argument("gate temperature must be positive");
    if (density_cap <= 0.0 || density_cap > 1.0) {
        throw std::invalid_argument("density cap must lie in (0,1]");
    }
    if (xi.rows() != raw_weights.rows() || xi.cols() != raw_weights.cols()) {
        throw std::invalid_argument("gate log-odds and raw weights must share a shape");
    }
    if (!xi.allFinite() || !raw_weights.allFinite()) {
        throw std::invalid_argument("gate parameters contain non-finite values");
    }
}

double default_density_cap(GateDirection direction) {
    return direction == GateDirection::kInnovationToResponse ? 0.50 : 0.25;
}

GateSet GateSet::open(GateDirection direction, int rows, int cols, double xi_init) {
    GateSet g;
    g.direction = direction;
    g.xi = Eigen::MatrixXd::Constant(rows, cols, xi_init);
    g.raw_weights = Eigen::MatrixXd::Zero(rows, cols);
    g.density_cap = default_density_cap(direction);
    return g;
}

double gate_value(double xi, double u, double tau) {
    if (!(u > 0.0 && u < 1.0)) {
        throw std::invalid_argument("gate noise must lie strictly inside (0,1)");
    }
    const double arg = (logit(u) + xi) / tau;
    return clamp01(0.5 + 0.5 * odd_tanh(0.5 * arg));
}

Eigen::MatrixXd gate_sample(const GateSet& g, const Eigen::MatrixXd& u) {
    g.validate();
    if (u.rows() != g.xi.rows() || u.cols() != g.xi.cols()) {
        throw std::invalid_argument("gate noise shape mismatch");
    }
    Eigen::MatrixXd out(g.xi.rows(), g.xi.cols());
    for (int i = 0; i < g.xi.rows(); ++i) {
        for (int j = 0; j < g.xi.cols(); ++j) out(i, j) = gate_value(g.xi(i, j), u(i, j), g.tau);
    }
    return out;
}

double expected_gate(double xi, double tau) {
    constexpr int kNodes = 1024;
    constexpr int kHalf = kNodes / 2;
    double acc = 0.0;
    for (int i = 0; i < kHalf; ++i) {
        const double u = (i + 0.5) / kNodes;
        const double l = logit(u);
        acc += odd_tanh(0.5 * (l + xi) / tau) + odd_tanh(0.5 * (-l + xi) / tau);
    }
    return clamp01(0.5 + 0.5 * acc / kNodes);
}

Eigen::MatrixXd expected_gate(const GateSet& g) {
    g.validate();
    Eigen::MatrixXd out(g.xi.rows(), g.xi.cols());
    for (int i = 0; i < g.xi.rows(); ++i) {
        for (int j = 0; j < g.xi.cols(); ++j) out(i, j) = expected_gate(g.xi(i, j), g.tau);
    }
    return out;
}

double sparsity_penalty(const std::vector<GateSet>& gatesets, double lambda_sp) {
    if (lambda_sp < 0.0) throw std::invalid_argument("sparsity weight must be non-negative");
    double total = 0.0;
    for (const GateSet& g : gatesets) total += expected_gate(g).sum();
    return lambda_sp * total;
}

ActiveStructure active_structure(const GateSet& g, double threshold) {
    g.validate();
    if (threshold < 0.0) throw std::invalid_argument("threshold must be non-negative");
    const Eigen::MatrixXd score = g.raw_weights.cwiseAbs().cwiseProduct(expected_gate(g));

    struct Entry {
        double score;
        int index;
    };
    std::vector<Entry> above;
    for (int j = 0; j < score.cols(); ++j) {
        for (int i = 0; i < score.rows(); ++i) {
            const int flat = i + j * static_cast<int>(score.rows());
            if (score(i, j) > threshold) above.push_back({score(i, j), flat});
        }
    }
    const int max_active =
        static_cast<int>(std::floor(g.density_cap * static_cast<double>(g.entries())));
    std::sort(above.begin(), above.end(), [](const Entry& a, const Entry& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.index < b.index;
    });
    if (static_cast<int>(above.size()) > max_active) above.resize(max_active);

    ActiveStructure out;
    out.mask = Eigen::MatrixXi::Zero(score.rows(), score.cols());
    for (const Entry& e : above) {
        out.mask(e.index % score.rows(), e.index / score.rows()) = 1;
    }
    out.density = g.entries() > 0
                      ? static_cast<double>(above.size()) / static_cast<double>(g.entries())
                      : 0.0;
    return out;
}

}  // namespace cnhp
