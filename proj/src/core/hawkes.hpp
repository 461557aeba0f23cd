#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "core/panel.hpp"
#include "core/rng.hpp"

namespace cnhp {

/// Time-sorted marked point process on [0, t_end]; time is measured in months
/// and month m covers [m, m+1).
struct EventStream {
    std::vector<double> times;
    std::vector<int> components;
    double t_end{0.0};
    int dim{0};

    [[nodiscard]] std::size_t size() const { return times.size(); }
    void validate() const;
    /// Events with time in [begin, end), re-timed so `begin` maps to 0.
    [[nodiscard]] EventStream window(double begin, double end) const;
};

/// Parameters of the softplus-link exponential-kernel process. alpha(j, d) and
/// omega(j, d) describe excitation from source j onto destination d; the kernel
/// alpha * omega * exp(-omega * dt) integrates to alpha. gamma(d, k) couples
/// destination d to latent coordinate k of the piecewise-constant state.
struct HawkesParams {
    Eigen::VectorXd mu;
    Eigen::MatrixXd alpha;
    Eigen::MatrixXd omega;
    Eigen::MatrixXd gamma;

    [[nodiscard]] int dim() const { return static_cast<int>(mu.size()); }
    [[nodiscard]] int latent_dim() const { return static_cast<int>(gamma.cols()); }
    void validate() const;
    static HawkesParams zeros(int dim, int latent_dim);
};

/// Sufficient statistics of the exponential kernels between events:
/// U(j,d) = sum_{s<=t} exp(-omega(j,d)(t-s)) over events of j,
/// V(j,d) = sum_{s<=t} (t-s) exp(-omega(j,d)(t-s)).
/// The normalized kernel sum is S = omega .* U and dS/domega = U - omega .* V.
class KernelState {
  public:
    explicit KernelState(Eigen::MatrixXd omega);
    void advance(double dt);
    void add_event(int component);
    void reset();
    [[nodiscard]] const Eigen::MatrixXd& U() const { return u_; }
    [[nodiscard]] const Eigen::MatrixXd& V() const { return v_; }
    [[nodiscard]] const Eigen::MatrixXd& omega() const { return omega_; }

  private:
    Eigen::MatrixXd omega_;
    Eigen::MatrixXd u_;
    Eigen::MatrixXd v_;
};

struct HawkesGrad {
    Eigen::VectorXd mu;
    Eigen::MatrixXd alpha;
    Eigen::MatrixXd omega;
    Eigen::MatrixXd gamma;

    static HawkesGrad zeros(int dim, int latent_dim);
};

struct HawkesLogLik {
    double value{0.0};
    double log_term{0.0};
    double compensator{0.0};
    HawkesGrad grad;
};

/// Pre-activation vector mu + (alpha .* S)^T 1 + gamma z for one instant.
Eigen::VectorXd hawkes_preactivation(const HawkesParams& params, const KernelState& state,
                                     const Eigen::VectorXd& z);

/// Intensity at the left limit of time t; replays the stream, O(events).
Eigen::VectorXd hawkes_intensity(const HawkesParams& params, const EventStream& stream,
                                 const Eigen::MatrixXd& z, double t);

/// Event log likelihood over [0, t_end] with the compensator integrated by the
/// trapezoid rule on segments delimited by month boundaries and event times.
/// z has one row per whole month of the horizon. Gradients are exact gradients
/// of this quadrature, not of the continuous integral.
HawkesLogLik hawkes_loglik(const HawkesParams& params, const EventStream& stream,
                           const Eigen::MatrixXd& z, bool want_grad = true);

struct ThinningConfig {
    double t_end{0.0};
    std::uint64_t seed{0};
    std::size_t max_events{2000000};
};

/// Ogata thinning, one month at a time, so callers may couple each month's
/// latent input to previously simulated months. The dominating rate is
/// refreshed at accepted events and month boundaries.
class ThinningSimulator {
  public:
    ThinningSimulator(const HawkesParams& params, std::uint64_t seed,
                      std::size_t max_events = 2000000);

    /// Simulates the month [months_done, months_done + 1).
    void simulate_month(const Eigen::VectorXd& z_m);

    int months_done() const { return months_; }

    /// Events so far, as a stream ending at the last completed month boundary.
    EventStream stream() const;

  private:
    HawkesParams params_;
    Rng rng_;
    KernelState state_;
    std::vector<double> times_;
    std::vector<int> components_;
    std::size_t max_events_;
    double t_ = 0.0;
    int months_ = 0;
};

/// Whole-horizon thinning with a fixed latent path. Requires spectral radius
/// of alpha below one.
EventStream simulate_hawkes(const HawkesParams& params, const Eigen::MatrixXd& z,
                            const ThinningConfig& config);

/// Spectral radius of the branching matrix alpha.
double branching_radius(const Eigen::MatrixXd& alpha);

/// Month-by-component event counts; months = round(t_end).
Eigen::MatrixXd monthly_counts(const EventStream& stream);

/// Deterministic count-preserving event placement: the c events of a component
/// in month m land at m + (i+1)/(c+1).
EventStream synthesize_events(const CountPanel& panel);

}  // namespace cnhp
