#pragma once

#include <Eigen/Dense>

#include "core/panel.hpp"

namespace cnhp {

struct HeadConfig {
    int ar_lags = 1;
    int context_components = 3;
    int context_lags = 2;
    bool calendar = true;
    bool use_context = true;
    bool use_state = false;
    double ridge_lambda = 1e-6;
    double blend_alpha = 0.65;

    void validate() const;
};

// Closed-form ridge predictor of the next month's response from the current
// response, a PCA summary of lagged counts, and smooth calendar features.
// Everything here is deterministic; the PCA loadings and standardization
// statistics are fit on the training window only.
struct HeadParams {
    HeadConfig cfg;
    Eigen::VectorXd stack_mean;
    Eigen::VectorXd stack_std;
    Eigen::MatrixXd context_pca;  // (dim*context_lags) x context_components
    Eigen::VectorXd weights;
    double intercept = 0.0;

    int feature_dim(int state_dim) const;
};

// Log1p lag stack [x_{m-1}; ...; x_{m-L}] for the head's count context.
Eigen::VectorXd head_lag_stack(const CountPanel& counts, int m, int lags);

// Features at month m: [y_m; PCA context; sin/cos of annual phase; state].
// The state block is only consulted when cfg.use_state is set.
Eigen::VectorXd build_features(double y_m, const CountPanel& counts, int m, const HeadParams& p,
                               const Eigen::VectorXd& state_row = Eigen::VectorXd());

// Ridge fit (intercept unpenalized) of y_{m+1} on features at m, over training
// months m in [context_lags, train_end-1].
HeadParams fit_head(const CountPanel& counts, const Eigen::VectorXd& response, int train_end,
                    const HeadConfig& cfg, const Eigen::MatrixXd& state = Eigen::MatrixXd());

double predict_next(const HeadParams& p, const Eigen::VectorXd& features);

}  // namespace cnhp
