#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace cnhp {

/// One-hidden-layer tanh correction. Input weights stay frozen after seeding;
/// only the output layer is refit (ridge) during training, so the correction
/// behaves like a random-feature expansion.
struct MlpCorrection {
    Eigen::MatrixXd w_in;   // width x in_dim
    Eigen::VectorXd b_in;   // width
    Eigen::MatrixXd w_out;  // out_dim x width
    Eigen::VectorXd b_out;  // out_dim

    [[nodiscard]] int width() const { return static_cast<int>(w_in.rows()); }
    [[nodiscard]] int in_dim() const { return static_cast<int>(w_in.cols()); }
    [[nodiscard]] int out_dim() const { return static_cast<int>(w_out.rows()); }
    [[nodiscard]] Eigen::VectorXd hidden(const Eigen::VectorXd& input) const;
    [[nodiscard]] Eigen::VectorXd eval(const Eigen::VectorXd& input) const;

    static MlpCorrection zeros(int in_dim, int out_dim, int width);
    /// Frozen random input layer (seeded), zero output layer.
    static MlpCorrection random_features(int in_dim, int out_dim, int width, std::uint64_t seed);
};

/// Linear-Gaussian monthly dynamics with a small nonlinear correction:
///   z_m = A z_{m-1} + B x_{m-1} + mlp(z_{m-1}, x_{m-1}, c_m) + N(0, diag(q))
///   y_m = observe_map z_m + N(0, diag(r))
/// z_0 has prior N(0, I).
struct StateSpaceParams {
    Eigen::MatrixXd A;            // K x K
    Eigen::MatrixXd B;            // K x D
    Eigen::VectorXd q_diag;       // K
    Eigen::MatrixXd observe_map;  // channels x K
    Eigen::VectorXd r_diag;       // channels
    MlpCorrection mlp;
    int milestone_dim{0};

    [[nodiscard]] int latent_dim() const { return static_cast<int>(A.rows()); }
    [[nodiscard]] int input_dim() const { return static_cast<int>(B.cols()); }
    [[nodiscard]] int channels() const { return static_cast<int>(observe_map.rows()); }
    void validate() const;

    static StateSpaceParams defaults(int latent_dim, int input_dim, int channels, int mlp_width,
                                     std::uint64_t seed);
};

Eigen::VectorXd transition_mean(const StateSpaceParams& p, const Eigen::VectorXd& z_prev,
                                const Eigen::VectorXd& x_prev, const Eigen::VectorXd& c);

Eigen::VectorXd observation_mean(const StateSpaceParams& p, const Eigen::VectorXd& z);

/// Scales the matrix down if its spectral radius exceeds `cap`.
Eigen::MatrixXd cap_spectral_radius(Eigen::MatrixXd a, double cap);

struct FilterInputs {
    Eigen::MatrixXd x;  // M x D; row m-1 drives the transition into month m
    Eigen::MatrixXd c;  // M x milestone_dim; row m enters the month-m transition
    Eigen::MatrixXd y;  // M x channels

    [[nodiscard]] int months() const { return static_cast<int>(y.rows()); }
    void validate(const StateSpaceParams& p) const;
};

/// The mlp correction evaluated along a frozen latent path, as an M x K matrix
/// of known additive transition inputs (row 0 is zero; no transition feeds
/// month 0). An empty frozen path means a zero path.
Eigen::MatrixXd mlp_offsets(const StateSpaceParams& p, const Eigen::MatrixXd& x,
                            const Eigen::MatrixXd& c, const Eigen::MatrixXd& frozen_means);

struct FilteredStates {
    Eigen::MatrixXd smoothed_mean;   // M x K
    Eigen::MatrixXd smoothed_var;    // M x K, diagonal of the smoothed covariance
    Eigen::MatrixXd predicted_mean;  // M x K, one-step priors from the forward pass
    Eigen::MatrixXd filtered_mean;   // M x K, causal posteriors from the forward pass
    double response_loglik{0.0};     // at the smoothed means
    double dynamics_loglik{0.0};     // at the smoothed means, z_0 prior included
    double kl{0.0};                  // sum_m KL(smoothed_m || predicted_m)
    double marginal_loglik{0.0};     // exact log p(y) of the linearized system
};

/// Exact Kalman filter + RTS smoother with the mlp contribution supplied as a
/// known offset path (EM-style linearization).
FilteredStates filter_smooth(const StateSpaceParams& p, const FilterInputs& in,
                             const Eigen::MatrixXd& offsets);

/// log p(y | z) with both evaluated along an explicit latent path.
double response_loglik_at(const StateSpaceParams& p, const Eigen::MatrixXd& z_path,
                          const Eigen::MatrixXd& y);

/// log p(z) along an explicit path, using the supplied transition offsets and
/// including the standard-normal z_0 prior.
double dynamics_loglik_at(const StateSpaceParams& p, const Eigen::MatrixXd& z_path,
                          const Eigen::MatrixXd& x, const Eigen::MatrixXd& offsets);

struct SampledPath {
    Eigen::MatrixXd z;  // M x K
    Eigen::MatrixXd y;  // M x channels
};

/// Ancestral sampling of the generative model (mlp evaluated at the sampled
/// states, not a frozen path). Draw order: the K transition noises of month m,
/// months ascending, then the observation noises of every month ascending.
SampledPath sample_path(const StateSpaceParams& p, const Eigen::MatrixXd& x,
                        const Eigen::MatrixXd& c, const Eigen::VectorXd& z0,
                        std::uint64_t seed);

}  // namespace cnhp
