#include "core/forecast_head.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace cnhp {

namespace {

constexpr double kTwoPi = 6.2831853071795864769;
constexpr double kStdFloor = 1e-9;

void sign_fix_columns(Eigen::MatrixXd& loadings) {
    for (int c = 0; c < loadings.cols(); ++c) {
        int pivot = 0;
        loadings.col(c).cwiseAbs().maxCoeff(&pivot);
        if (loadings(pivot, c) < 0.0) loadings.col(c) = -loadings.col(c);
    }
}

}  // namespace

void HeadConfig::validate() const {
    if (ar_lags < 0 || ar_lags > 1) throw std::invalid_argument("ar_lags must be 0 or 1");
    if (context_components < 1) throw std::invalid_argument("need at least one context component");
    if (context_lags < 1) throw std::invalid_argument("need at least one context lag");
    if (ridge_lambda <= 0.0) throw std::invalid_argument("ridge_lambda must be positive");
    if (blend_alpha < 0.0 || blend_alpha > 1.0) {
        throw std::invalid_argument("blend_alpha must lie in [0,1]");
    }
}

int HeadParams::feature_dim(int state_dim) const {
    int dim = cfg.ar_lags >= 1 ? 1 : 0;
    if (cfg.use_context) dim += cfg.context_components;
    if (cfg.calendar) dim += 2;
    if (cfg.use_state) dim += state_dim;
    return dim;
}

Eigen::VectorXd head_lag_stack(const CountPanel& counts, int m, int lags) {
    if (m - lags < 0 || m > counts.months()) {
        throw std::invalid_argument("insufficient count history for the lag stack");
    }
    const int d = counts.dim();
    Eigen::VectorXd stack(lags * d);
    for (int l = 1; l <= lags; ++l) {
        stack.segment((l - 1) * d, d) = counts.counts.row(m - l).array().log1p().transpose();
    }
    return stack;
}

Eigen::VectorXd build_features(double y_m, const CountPanel& counts, int m, const HeadParams& p,
                               const Eigen::VectorXd& state_row) {
    p.cfg.validate();
    if (m < 0) throw std::invalid_argument("month index must be non-negative");
    Eigen::VectorXd features(p.feature_dim(static_cast<int>(state_row.size())));
    int pos = 0;
    if (p.cfg.ar_lags >= 1) features[pos++] = y_m;
    if (p.cfg.use_context) {
        const Eigen::VectorXd stack = head_lag_stack(counts, m, p.cfg.context_lags);
        if (stack.size() != p.stack_mean.size()) {
            throw std::invalid_argument("lag stack does not match fitted statistics");
        }
        const Eigen::VectorXd standardized =
            (stack - p.stack_mean).cwiseQuotient(p.stack_std);
        features.segment(pos, p.cfg.context_components) =
            p.context_pca.transpose() * standardized;
        pos += p.cfg.context_components;
    }
    if (p.cfg.calendar) {
        const int month_of_year = (counts.calendar.origin.month - 1 + m) % 12;
        const double phase = kTwoPi * static_cast<double>(month_of_year) / 12.0;
        features[pos++] = std::sin(phase);
        features[pos++] = std::cos(phase);
    }
    if (p.cfg.use_state) {
        if (state_row.size() == 0) throw std::invalid_argument("head expects a state row");
        features.segment(pos, state_row.size()) = state_row;
        pos += static_cast<int>(state_row.size());
    }
    return features;
}

HeadParams fit_head(const CountPanel& counts, const Eigen::VectorXd& response, int train_end,
                    const HeadConfig& cfg, const Eigen::MatrixXd& state) {
    cfg.validate();
    if (train_end + 1 > counts.months() || train_end + 1 > response.size()) {
        throw std::invalid_argument("training window exceeds the available data");
    }
    const int first = cfg.context_lags;
    if (cfg.use_state && (state.rows() <= train_end || state.cols() == 0)) {
        throw std::invalid_argument("head expects a latent state path over the training window");
    }

    HeadParams p;
    p.cfg = cfg;
    if (cfg.use_context) {
        const int stack_dim = cfg.context_lags * counts.dim();
        if (cfg.context_components > stack_dim) {
            throw std::invalid_argument("more context components than lag-stack coordinates");
        }
        const int n_stats = train_end - first + 1;
        if (n_stats < 2) throw std::invalid_argument("training window too short for context");
        Eigen::MatrixXd stacks(n_stats, stack_dim);
        for (int m = first; m <= train_end; ++m) {
            stacks.row(m - first) = head_lag_stack(counts, m, cfg.context_lags).transpose();
        }
        p.stack_mean = stacks.colwise().mean().transpose();
        Eigen::MatrixXd centered = stacks.rowwise() - p.stack_mean.transpose();
        p.stack_std = centered.array()
                          .square()
                          .colwise()
                          .mean()
                          .sqrt()
                          .matrix()
                          .transpose()
                          .cwiseMax(kStdFloor);
        const Eigen::MatrixXd standardized =
            centered.array().rowwise() / p.stack_std.transpose().array();
        const Eigen::MatrixXd cov =
            standardized.transpose() * standardized / static_cast<double>(n_stats);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
        if (solver.info() != Eigen::Success) {
            throw std::runtime_error("context PCA eigendecomposition failed");
        }
        p.context_pca.resize(stack_dim, cfg.context_components);
        for (int c = 0; c < cfg.context_components; ++c) {
            p.context_pca.col(c) = solver.eigenvectors().col(stack_dim - 1 - c);
        }
        sign_fix_columns(p.context_pca);
    }

    const int last = train_end - 1;
    const int n_rows = last - first + 1;
    const int n_feat = p.feature_dim(static_cast<int>(state.cols()));
    if (n_rows < n_feat + 1) {
        throw std::invalid_argument("not enough training pairs for the head");
    }
    Eigen::MatrixXd x(n_rows, n_feat + 1);
    Eigen::VectorXd t(n_rows);
    for (int m = first; m <= last; ++m) {
        const Eigen::VectorXd state_row =
            cfg.use_state ? Eigen::VectorXd(state.row(m).transpose()) : Eigen::VectorXd();
        x.row(m - first).head(n_feat) =
            build_features(response[m], counts, m, p, state_row).transpose();
        x(m - first, n_feat) = 1.0;
        t[m - first] = response[m + 1];
    }
    Eigen::MatrixXd gram = x.transpose() * x;
    for (int i = 0; i < n_feat; ++i) gram(i, i) += cfg.ridge_lambda;
    const Eigen::VectorXd solution = gram.ldlt().solve(x.transpose() * t);
    p.weights = solution.head(n_feat);
    p.intercept = solution[n_feat];
    return p;
}

double predict_next(const HeadParams& p, const Eigen::VectorXd& features) {
    if (features.size() != p.weights.size()) {
        throw std::invalid_argument("feature dimension does not match the fitted head");
    }
    return p.weights.dot(features) + p.intercept;
}

}  // namespace cnhp
