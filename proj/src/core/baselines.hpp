#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "core/trainer.hpp"

namespace cnhp {

enum class BaselineKind {
    kSelfExcitingHawkes,
    kExoHawkes,
    kAr1,
    kFactorArx,
    kVarx,
    kLocalLevel,
    kCoupledV1,
};

const std::vector<BaselineKind>& baseline_registry();
std::string baseline_name(BaselineKind kind);
BaselineKind baseline_from_name(const std::string& name);

/// True when the kind produces count (respectively response) forecasts.
bool baseline_forecasts_counts(BaselineKind kind);
bool baseline_forecasts_response(BaselineKind kind);

struct Ar1Params {
    double intercept = 0.0;
    double slope = 0.0;
};

/// y_m = intercept + phi y_{m-1} + beta . x_{m-1}, with x the standardized
/// log1p count vector.
struct VarxParams {
    double intercept = 0.0;
    double phi = 0.0;
    Eigen::VectorXd beta;
    Eigen::VectorXd x_mean;
    Eigen::VectorXd x_std;
};

/// Random walk plus noise on the primary response channel.
struct LocalLevelParams {
    double q = 1.0;
    double r = 1.0;
    double loglik = 0.0;

    StateSpaceParams state() const;
};

struct BaselineModel {
    BaselineKind kind = BaselineKind::kAr1;
    int train_months = 0;

    HawkesParams hawkes;  // hawkes kinds; exo keeps its response loading in gamma
    Ar1Params ar1;
    HeadParams head;  // factor_arx
    VarxParams varx;
    LocalLevelParams level;
    CoupledModel coupled;  // coupled_v1
};

struct BaselineForecast {
    int begin = 0;
    Eigen::MatrixXd count_components;  // rows only for count-capable kinds
    Eigen::VectorXd count_total;
    Eigen::VectorXd response;  // NaN where history is insufficient
};

/// The lag-1 response path feeding the exo-Hawkes intensity: row m holds
/// y_{m-1}, and row 0 is zero.
Eigen::MatrixXd lagged_response_path(const ResponseSeries& response);

BaselineModel fit_baseline(BaselineKind kind, const PanelData& train, const FitConfig& cfg);

/// One-step-ahead forecasts for months [begin, end); entries whose kind does
/// not produce that signal are left empty.
BaselineForecast forecast_baseline(const BaselineModel& model, const PanelData& data, int begin,
                                   int end);

}  // namespace cnhp
