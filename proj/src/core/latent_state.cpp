#include "core/latent_state.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

#include "core/rng.hpp"

namespace cnhp {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double gaussian_diag_loglik(const Eigen::VectorXd& value, const Eigen::VectorXd& mean,
                            const Eigen::VectorXd& var_diag) {
    double ll = 0.0;
    for (int i = 0; i < value.size(); ++i) {
        const double resid = value[i] - mean[i];
        ll -= 0.5 * (kLog2Pi + std::log(var_diag[i]) + resid * resid / var_diag[i]);
    }
    return ll;
}

double log_det_spd(const Eigen::MatrixXd& m) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) {
        throw std::runtime_error("non-positive-definite covariance");
    }
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

Eigen::VectorXd MlpCorrection::hidden(const Eigen::VectorXd& input) const {
    if (input.size() != in_dim()) throw std::invalid_argument("mlp input dimension mismatch");
    return ((w_in * input + b_in).array().tanh()).matrix();
}

Eigen::VectorXd MlpCorrection::eval(const Eigen::VectorXd& input) const {
    if (width() == 0) return Eigen::VectorXd::Zero(out_dim());
    return w_out * hidden(input) + b_out;
}

MlpCorrection MlpCorrection::zeros(int in_dim, int out_dim, int width) {
    MlpCorrection m;
    m.w_in = Eigen::MatrixXd::Zero(width, in_dim);
    m.b_in = Eigen::VectorXd::Zero(width);
    m.w_out = Eigen::MatrixXd::Zero(out_dim, width);
    m.b_out = Eigen::VectorXd::Zero(out_dim);
    return m;
}

MlpCorrection MlpCorrection::random_features(int in_dim, int out_dim, int width,
                                             std::uint64_t seed) {
    MlpCorrection m = zeros(in_dim, out_dim, width);
    Rng rng(seed);
    const double scale = in_dim > 0 ? 1.0 / std::sqrt(static_cast<double>(in_dim)) : 1.0;
    for (int i = 0; i < width; ++i) {
        for (int j = 0; j < in_dim; ++j) m.w_in(i, j) = scale * rng.normal();
    }
    for (int i = 0; i < width; ++i) m.b_in[i] = 0.5 * rng.normal();
    return m;
}

void StateSpaceParams::validate() const {
    const int k = latent_dim();
    if (k <= 0) throw std::invalid_argument("state space needs a positive latent dimension");
    if (A.cols() != k || B.rows() != k || q_diag.size() != k || observe_map.cols() != k) {
        throw std::invalid_argument("state space parameter shapes are inconsistent");
    }
    if (r_diag.size() != channels() || channels() <= 0) {
        throw std::invalid_argument("observation shapes are inconsistent");
    }
    if ((q_diag.array() <= 0.0).any() || (r_diag.array() <= 0.0).any()) {
        throw std::invalid_argument("Q and R diagonals must be strictly positive");
    }
    if (mlp.width() > 16) throw std::invalid_argument("mlp hidden width exceeds 16");
    if (mlp.width() > 0) {
        if (mlp.in_dim() != k + input_dim() + milestone_dim || mlp.out_dim() != k) {
            throw std::invalid_argument("mlp dimensions do not match the state space");
        }
    }
    if (!A.allFinite() || !B.allFinite() || !observe_map.allFinite()) {
        throw std::invalid_argument("state space parameters contain non-finite values");
    }
}

StateSpaceParams StateSpaceParams::defaults(int latent_dim, int input_dim, int channels,
                                            int mlp_width, std::uint64_t seed) {
    StateSpaceParams p;
    p.A = 0.7 * Eigen::MatrixXd::Identity(latent_dim, latent_dim);
    p.B = Eigen::MatrixXd::Zero(latent_dim, input_dim);
    p.q_diag = Eigen::VectorXd::Constant(latent_dim, 0.5);
    p.observe_map =
        Eigen::MatrixXd::Constant(channels, latent_dim, 1.0 / std::sqrt(double(latent_dim)));
    p.r_diag = Eigen::VectorXd::Constant(channels, 0.5);
    p.milestone_dim = 0;
    p.mlp = MlpCorrection::random_features(latent_dim + input_dim, latent_dim, mlp_width, seed);
    return p;
}

Eigen::VectorXd transition_mean(const StateSpaceParams& p, const Eigen::VectorXd& z_prev,
                                const Eigen::VectorXd& x_prev, const Eigen::VectorXd& c) {
    if (z_prev.size() != p.latent_dim() || x_prev.size() != p.input_dim() ||
        c.size() != p.milestone_dim) {
        throw std::invalid_argument("transition input dimension mismatch");
    }
    Eigen::VectorXd mean = p.A * z_prev + p.B * x_prev;
    if (p.mlp.width() > 0) {
        Eigen::VectorXd input(z_prev.size() + x_prev.size() + c.size());
        input << z_prev, x_prev, c;
        mean += p.mlp.eval(input);
    }
    return mean;
}

Eigen::VectorXd observation_mean(const StateSpaceParams& p, const Eigen::VectorXd& z) {
    if (z.size() != p.latent_dim()) throw std::invalid_argument("observation input mismatch");
    return p.observe_map * z;
}

Eigen::MatrixXd cap_spectral_radius(Eigen::MatrixXd a, double cap) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(a, /*computeEigenvectors=*/false);
    const double radius = es.eigenvalues().cwiseAbs().maxCoeff();
    if (radius > cap) a *= cap / radius;
    return a;
}

void FilterInputs::validate(const StateSpaceParams& p) const {
    const int m = months();
    if (m <= 0) throw std::invalid_argument("filter inputs need at least one month");
    if (x.rows() != m || x.cols() != p.input_dim()) {
        throw std::invalid_argument("input feature matrix shape mismatch");
    }
    if (c.rows() != m || c.cols() != p.milestone_dim) {
        throw std::invalid_argument("milestone covariate shape mismatch");
    }
    if (y.cols() != p.channels()) throw std::invalid_argument("response channel mismatch");
    if (!x.allFinite() || !c.allFinite() || !y.allFinite()) {
        throw std::invalid_argument("filter inputs contain non-finite values");
    }
}

Eigen::MatrixXd mlp_offsets(const StateSpaceParams& p, const Eigen::MatrixXd& x,
                            const Eigen::MatrixXd& c, const Eigen::MatrixXd& frozen_means) {
    const int m_count = static_cast<int>(x.rows());
    const int k = p.latent_dim();
    Eigen::MatrixXd offsets = Eigen::MatrixXd::Zero(m_count, k);
    if (p.mlp.width() == 0) return offsets;
    Eigen::MatrixXd frozen = frozen_means;
    if (frozen.size() == 0) frozen = Eigen::MatrixXd::Zero(m_count, k);
    if (frozen.rows() != m_count || frozen.cols() != k) {
        throw std::invalid_argument("frozen latent path shape mismatch");
    }
    Eigen::VectorXd input(k + p.input_dim() + p.milestone_dim);
    for (int m = 1; m < m_count; ++m) {
        input << frozen.row(m - 1).transpose(), x.row(m - 1).transpose(), c.row(m).transpose();
        offsets.row(m) = p.mlp.eval(input).transpose();
    }
    return offsets;
}

FilteredStates filter_smooth(const StateSpaceParams& p, const FilterInputs& in,
                             const Eigen::MatrixXd& offsets) {
    p.validate();
    in.validate(p);
    const int m_count = in.months();
    const int k = p.latent_dim();
    Eigen::MatrixXd u = offsets;
    if (u.size() == 0) u = Eigen::MatrixXd::Zero(m_count, k);
    if (u.rows() != m_count || u.cols() != k) {
        throw std::invalid_argument("transition offset shape mismatch");
    }

    const Eigen::MatrixXd q = p.q_diag.asDiagonal();
    const Eigen::MatrixXd r = p.r_diag.asDiagonal();
    const Eigen::MatrixXd& h = p.observe_map;
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(k, k);

    std::vector<Eigen::VectorXd> pred_mean(m_count), filt_mean(m_count);
    std::vector<Eigen::MatrixXd> pred_cov(m_count), filt_cov(m_count);

    FilteredStates out;
    out.marginal_loglik = 0.0;
    for (int m = 0; m < m_count; ++m) {
        if (m == 0) {
            pred_mean[m] = Eigen::VectorXd::Zero(k);
            pred_cov[m] = eye;
        } else {
            pred_mean[m] =
                p.A * filt_mean[m - 1] + p.B * in.x.row(m - 1).transpose() + u.row(m).transpose();
            pred_cov[m] = symmetrized(p.A * filt_cov[m - 1] * p.A.transpose() + q);
        }

        const Eigen::VectorXd innovation = in.y.row(m).transpose() - h * pred_mean[m];
        const Eigen::MatrixXd s = symmetrized(h * pred_cov[m] * h.transpose() + r);
        Eigen::LLT<Eigen::MatrixXd> llt(s);
        if (llt.info() != Eigen::Success) {
            throw std::runtime_error("non-positive-definite innovation covariance");
        }
        const double s_log_det =
            2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
        out.marginal_loglik -=
            0.5 * (p.channels() * kLog2Pi + s_log_det + innovation.dot(llt.solve(innovation)));

        const Eigen::MatrixXd gain = llt.solve(h * pred_cov[m]).transpose();
        filt_mean[m] = pred_mean[m] + gain * innovation;
        const Eigen::MatrixXd j = eye - gain * h;
        filt_cov[m] = symmetrized(j * pred_cov[m] * j.transpose() + gain * r * gain.transpose());
    }

    std::vector<Eigen::VectorXd> smooth_mean(m_count);
    std::vector<Eigen::MatrixXd> smooth_cov(m_count);
    smooth_mean[m_count - 1] = filt_mean[m_count - 1];
    smooth_cov[m_count - 1] = filt_cov[m_count - 1];
    for (int m = m_count - 2; m >= 0; --m) {
        Eigen::LLT<Eigen::MatrixXd> llt(pred_cov[m + 1]);
        if (llt.info() != Eigen::Success) {
            throw std::runtime_error("non-positive-definite predicted covariance");
        }
        const Eigen::MatrixXd gain =
            (llt.solve(p.A * filt_cov[m].transpose())).transpose();  // F A^T P^{-1}
        smooth_mean[m] = filt_mean[m] + gain * (smooth_mean[m + 1] - pred_mean[m + 1]);
        smooth_cov[m] = symmetrized(
            filt_cov[m] + gain * (smooth_cov[m + 1] - pred_cov[m + 1]) * gain.transpose());
    }

    out.smoothed_mean.resize(m_count, k);
    out.smoothed_var.resize(m_count, k);
    out.predicted_mean.resize(m_count, k);
    out.filtered_mean.resize(m_count, k);
    out.kl = 0.0;
    for (int m = 0; m < m_count; ++m) {
        out.smoothed_mean.row(m) = smooth_mean[m].transpose();
        out.smoothed_var.row(m) = smooth_cov[m].diagonal().transpose();
        out.predicted_mean.row(m) = pred_mean[m].transpose();
        out.filtered_mean.row(m) = filt_mean[m].transpose();

        Eigen::LLT<Eigen::MatrixXd> llt(pred_cov[m]);
        if (llt.info() != Eigen::Success) {
            throw std::runtime_error("non-positive-definite predicted covariance");
        }
        const Eigen::VectorXd diff = pred_mean[m] - smooth_mean[m];
        const double trace_term = llt.solve(smooth_cov[m]).trace();
        out.kl += 0.5 * (trace_term + diff.dot(llt.solve(diff)) - k + log_det_spd(pred_cov[m]) -
                         log_det_spd(smooth_cov[m]));
    }

    out.response_loglik = response_loglik_at(p, out.smoothed_mean, in.y);
    out.dynamics_loglik = dynamics_loglik_at(p, out.smoothed_mean, in.x, u);
    return out;
}

double response_loglik_at(const StateSpaceParams& p, const Eigen::MatrixXd& z_path,
                          const Eigen::MatrixXd& y) {
    if (z_path.rows() != y.rows()) throw std::invalid_argument("path and response length differ");
    double ll = 0.0;
    for (int m = 0; m < z_path.rows(); ++m) {
        ll += gaussian_diag_loglik(y.row(m).transpose(),
                                   p.observe_map * z_path.row(m).transpose(), p.r_diag);
    }
    return ll;
}

double dynamics_loglik_at(const StateSpaceParams& p, const Eigen::MatrixXd& z_path,
                          const Eigen::MatrixXd& x, const Eigen::MatrixXd& offsets) {
    const int m_count = static_cast<int>(z_path.rows());
    const int k = p.latent_dim();
    Eigen::MatrixXd u = offsets;
    if (u.size() == 0) u = Eigen::MatrixXd::Zero(m_count, k);

    double ll = gaussian_diag_loglik(z_path.row(0).transpose(), Eigen::VectorXd::Zero(k),
                                     Eigen::VectorXd::Ones(k));
    for (int m = 1; m < m_count; ++m) {
        const Eigen::VectorXd mean = p.A * z_path.row(m - 1).transpose() +
                                     p.B * x.row(m - 1).transpose() + u.row(m).transpose();
        ll += gaussian_diag_loglik(z_path.row(m).transpose(), mean, p.q_diag);
    }
    return ll;
}

SampledPath sample_path(const StateSpaceParams& p, const Eigen::MatrixXd& x,
                        const Eigen::MatrixXd& c, const Eigen::VectorXd& z0,
                        std::uint64_t seed) {
    const int m_count = static_cast<int>(x.rows());
    const int k = p.latent_dim();
    if (z0.size() != k) throw std::invalid_argument("z0 dimension mismatch");
    if (c.rows() != m_count || c.cols() != p.milestone_dim) {
        throw std::invalid_argument("milestone covariate shape mismatch");
    }
    if ((p.q_diag.array() < 0.0).any() || (p.r_diag.array() < 0.0).any()) {
        throw std::invalid_argument("sampling needs non-negative variances");
    }

    Rng rng(seed);
    SampledPath out;
    out.z.resize(m_count, k);
    out.z.row(0) = z0.transpose();
    for (int m = 1; m < m_count; ++m) {
        Eigen::VectorXd mean = transition_mean(p, out.z.row(m - 1).transpose(),
                                               x.row(m - 1).transpose(), c.row(m).transpose());
        for (int i = 0; i < k; ++i) mean[i] += std::sqrt(p.q_diag[i]) * rng.normal();
        out.z.row(m) = mean.transpose();
    }
    out.y.resize(m_count, p.channels());
    for (int m = 0; m < m_count; ++m) {
        Eigen::VectorXd mean = p.observe_map * out.z.row(m).transpose();
        for (int i = 0; i < p.channels(); ++i) mean[i] += std::sqrt(p.r_diag[i]) * rng.normal();
        out.y.row(m) = mean.transpose();
    }
    return out;
}

}  // namespace cnhp
