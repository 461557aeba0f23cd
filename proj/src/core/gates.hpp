#pragma once

#include <Eigen/Dense>
#include <vector>

namespace cnhp {

enum class GateDirection {
    kInnovationToResponse,
    kResponseToInnovation,
};

// Hard-concrete gates over one coupling matrix. Each entry carries a log-odds
// parameter xi and a raw weight theta; the gate value for noise u in (0,1) is
// clamp01(sigmoid((logit(u) + xi) / tau)). The clamp is inactive for the plain
// sigmoid, so exact zeros only arise from the threshold stage below.
struct GateSet {
    GateDirection direction = GateDirection::kInnovationToResponse;
    Eigen::MatrixXd xi;
    Eigen::MatrixXd raw_weights;
    double tau = 2.0 / 3.0;
    double density_cap = 0.5;

    int entries() const { return static_cast<int>(xi.size()); }
    void validate() const;

    static GateSet open(GateDirection direction, int rows, int cols, double xi_init = 1.0);
};

double default_density_cap(GateDirection direction);

double gate_value(double xi, double u, double tau);
Eigen::MatrixXd gate_sample(const GateSet& g, const Eigen::MatrixXd& u);

// Deterministic 1024-node quadrature over u; nodes are mirrored in logit space
// so expected_gate is exactly 0.5 at xi = 0.
double expected_gate(double xi, double tau);
Eigen::MatrixXd expected_gate(const GateSet& g);

double sparsity_penalty(const std::vector<GateSet>& gatesets, double lambda_sp);

struct ActiveStructure {
    Eigen::MatrixXi mask;
    double density = 0.0;
};

// Entry active iff |theta| * E[g] > threshold; if more than
// floor(density_cap * entries) qualify, only the highest-scoring survive.
ActiveStructure active_structure(const GateSet& g, double threshold = 0.03);

}  // namespace cnhp
