#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "core/forecast_head.hpp"
#include "core/gates.hpp"
#include "core/hawkes.hpp"
#include "core/latent_state.hpp"
#include "core/panel.hpp"

namespace cnhp {

struct FitConfig {
    int em_iterations = 6;
    double ridge = 1e-4;
    double blend_alpha = 0.65;
    double count_selfexciting_mix = 0.0;
    bool enable_ir = true;
    bool enable_ri = false;
    bool enable_head = true;
    bool enable_calendar = true;
    bool enable_context = true;
    bool head_uses_state = false;
    std::uint64_t seed = 20260408ull;
    int latent_dim = 2;
    double lambda_sp = 0.01;
    double tau = 2.0 / 3.0;
    double xi_init = 1.0;

    void validate() const;
};

const std::vector<std::string>& variant_registry();
FitConfig make_variant(const FitConfig& base, const std::string& name);

// Month-aligned bundle: events on [0, months), counts and response rows for
// the same months.
struct PanelData {
    EventStream stream;
    CountPanel counts;
    ResponseSeries response;

    int months() const { return counts.months(); }
    void validate() const;
    PanelData window(int begin, int end) const;
    PanelData prefix(int month_count) const { return window(0, month_count); }
};

struct CoupledModel {
    HawkesParams hawkes;     // gamma stored raw; effective_gamma applies gates
    StateSpaceParams state;  // B stored raw; effective_input_map applies gates
    GateSet gate_ir;
    GateSet gate_ri;
    HeadParams head;
    FitConfig config;
    Eigen::VectorXd x_mean;  // log1p-count standardization from the fit window
    Eigen::VectorXd x_std;
    int train_months = 0;
    std::vector<double> objective_trace;  // initial value, then one per iteration

    Eigen::MatrixXd effective_input_map() const;
    Eigen::MatrixXd effective_gamma() const;
};

// Standardized log1p counts used as transition inputs.
Eigen::MatrixXd transition_inputs(const CountPanel& counts, const Eigen::VectorXd& x_mean,
                                  const Eigen::VectorXd& x_std);

struct ObjectiveParts {
    double event_loglik = 0.0;
    double response_loglik = 0.0;
    double dynamics_loglik = 0.0;
    double kl = 0.0;
    double sparsity = 0.0;

    double total() const {
        return event_loglik + response_loglik + dynamics_loglik - kl - sparsity;
    }
};

// States backing the objective: two filter passes, the second with mlp offsets
// evaluated at the first pass's smoothed means.
FilteredStates model_states(const CoupledModel& model, const PanelData& data);

ObjectiveParts joint_objective_parts(const CoupledModel& model, const PanelData& data);
double joint_objective(const CoupledModel& model, const PanelData& data);

// EM-style fit: per outer iteration, an E-step followed by ridge updates of
// the state block, a projected quasi-Newton Hawkes step, and gate coordinate
// sweeps. Every sub-step is accepted only if the joint objective does not
// decrease, so the recorded trace is monotone.
CoupledModel fit_coupled(const FitConfig& cfg, const PanelData& train);

// Rescales the latent space so the observation map has unit Frobenius norm,
// making coupling magnitudes comparable across fits. Predictions unchanged.
void canonicalize_scale(CoupledModel& model);

// One-step-ahead forecasts for months [begin, end); each month uses only data
// strictly before it. Entries that need unavailable history are NaN.
struct ForecastSeries {
    int begin = 0;
    Eigen::VectorXd count_total;
    Eigen::VectorXd response;
};

ForecastSeries forecast_coupled(const CoupledModel& model, const PanelData& data, int begin,
                                int end);

// Expected total events in [month, month+1) with no future events assumed:
// the kernel decays from its state at the month boundary and the integral is
// a fixed 64-panel trapezoid.
double decayed_month_integral(const HawkesParams& params, const KernelState& state,
                              const Eigen::VectorXd& z_m);

/// Per-destination split of the same quadrature.
Eigen::VectorXd decayed_month_rates(const HawkesParams& params, const KernelState& state,
                                    const Eigen::VectorXd& z_m);

}  // namespace cnhp
