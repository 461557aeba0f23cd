#include "core/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "core/mathutil.hpp"
#include "core/spg.hpp"

namespace cnhp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct HawkesBox {
    int d = 0;
    int k = 0;
    bool with_gamma = false;

    int size() const { return d + 2 * d * d + (with_gamma ? d * k : 0); }

    Eigen::VectorXd pack(const HawkesParams& p) const {
        Eigen::VectorXd x(size());
        x.head(d) = p.mu;
        x.segment(d, d * d) = Eigen::Map<const Eigen::VectorXd>(p.alpha.data(), d * d);
        x.segment(d + d * d, d * d) = Eigen::Map<const Eigen::VectorXd>(p.omega.data(), d * d);
        if (with_gamma) {
            x.tail(d * k) = Eigen::Map<const Eigen::VectorXd>(p.gamma.data(), d * k);
        }
        return x;
    }

    void unpack(const Eigen::VectorXd& x, HawkesParams& p) const {
        p.mu = x.head(d);
        p.alpha = Eigen::Map<const Eigen::MatrixXd>(x.segment(d, d * d).data(), d, d);
        p.omega = Eigen::Map<const Eigen::MatrixXd>(x.segment(d + d * d, d * d).data(), d, d);
        if (with_gamma) {
            p.gamma = Eigen::Map<const Eigen::MatrixXd>(x.tail(d * k).data(), d, k);
        }
    }
};

HawkesParams initial_hawkes(const PanelData& train, int latent_dim) {
    const int d = train.counts.dim();
    HawkesParams p = HawkesParams::zeros(d, latent_dim);
    const Eigen::VectorXd totals = train.counts.counts.colwise().sum().transpose();
    for (int i = 0; i < d; ++i) {
        p.mu[i] = inverse_softplus(std::max(totals[i] / train.months(), 1e-3));
    }
    p.alpha.setConstant(0.02);
    p.alpha.diagonal().setConstant(0.1);
    p.omega.setConstant(1.0);
    return p;
}

HawkesParams fit_hawkes_mle(HawkesParams init, const EventStream& stream,
                            const Eigen::MatrixXd& z, bool with_gamma) {
    const int d = init.dim();
    const HawkesBox box{d, init.latent_dim(), with_gamma};
    HawkesParams work = init;
    const BoxObjective objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
        box.unpack(x, work);
        const HawkesLogLik ll = hawkes_loglik(work, stream, z, true);
        HawkesParams g = work;
        g.mu = ll.grad.mu;
        g.alpha = ll.grad.alpha;
        g.omega = ll.grad.omega;
        g.gamma = ll.grad.gamma;
        grad = box.pack(g);
        return ll.value;
    };

    Eigen::VectorXd lo(box.size()), hi(box.size());
    lo.head(d).setConstant(-30.0);
    hi.head(d).setConstant(30.0);
    lo.segment(d, d * d).setConstant(0.0);
    hi.segment(d, d * d).setConstant(5.0);
    lo.segment(d + d * d, d * d).setConstant(0.05);
    hi.segment(d + d * d, d * d).setConstant(20.0);
    if (with_gamma) {
        lo.tail(d * box.k).setConstant(-10.0);
        hi.tail(d * box.k).setConstant(10.0);
    }

    BoxMaximizeOptions options;
    options.max_iterations = 80;
    HawkesParams out = init;
    box.unpack(box_maximize(objective, box.pack(init), lo, hi, options).x, out);
    return out;
}

Ar1Params fit_ar1(const Eigen::VectorXd& y) {
    const int n = static_cast<int>(y.size()) - 1;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (int m = 1; m <= n; ++m) {
        sx += y[m - 1];
        sy += y[m];
        sxx += y[m - 1] * y[m - 1];
        sxy += y[m - 1] * y[m];
    }
    const double denom = n * sxx - sx * sx;
    Ar1Params p;
    if (std::abs(denom) < 1e-12) {
        p.slope = 0.0;
        p.intercept = sy / n;
    } else {
        p.slope = (n * sxy - sx * sy) / denom;
        p.intercept = (sy - p.slope * sx) / n;
    }
    return p;
}

VarxParams fit_varx(const PanelData& train, double ridge) {
    const int m_count = train.months();
    const int d = train.counts.dim();
    VarxParams p;
    const Eigen::MatrixXd logc = train.counts.counts.array().log1p();
    p.x_mean = logc.colwise().mean().transpose();
    const Eigen::MatrixXd centered = logc.rowwise() - p.x_mean.transpose();
    p.x_std = centered.array()
                  .square()
                  .colwise()
                  .mean()
                  .sqrt()
                  .matrix()
                  .transpose()
                  .cwiseMax(1e-9);
    const Eigen::MatrixXd x = transition_inputs(train.counts, p.x_mean, p.x_std);
    const Eigen::VectorXd y = train.response.primary();

    const int rows = m_count - 1;
    const int n_feat = 1 + d;
    Eigen::MatrixXd f(rows, n_feat + 1);
    Eigen::VectorXd target(rows);
    for (int m = 1; m < m_count; ++m) {
        f(m - 1, 0) = y[m - 1];
        f.row(m - 1).segment(1, d) = x.row(m - 1);
        f(m - 1, n_feat) = 1.0;
        target[m - 1] = y[m];
    }
    Eigen::MatrixXd gram = f.transpose() * f;
    for (int i = 0; i < n_feat; ++i) gram(i, i) += ridge;
    const Eigen::VectorXd sol = gram.ldlt().solve(f.transpose() * target);
    p.phi = sol[0];
    p.beta = sol.segment(1, d);
    p.intercept = sol[n_feat];
    return p;
}

double level_loglik(double q, double r, const Eigen::VectorXd& y) {
    LocalLevelParams p;
    p.q = q;
    p.r = r;
    FilterInputs in;
    const int m_count = static_cast<int>(y.size());
    in.x = Eigen::MatrixXd::Zero(m_count, 0);
    in.c = Eigen::MatrixXd::Zero(m_count, 0);
    in.y = y;
    return filter_smooth(p.state(), in, Eigen::MatrixXd::Zero(m_count, 1)).marginal_loglik;
}

LocalLevelParams fit_local_level(const Eigen::VectorXd& y) {
    LocalLevelParams best;
    best.loglik = -std::numeric_limits<double>::infinity();
    for (double eq = -6.0; eq <= 2.01; eq += 0.5) {
        for (double er = -6.0; er <= 2.01; er += 0.5) {
            const double q = std::pow(10.0, eq);
            const double r = std::pow(10.0, er);
            const double ll = level_loglik(q, r, y);
            if (ll > best.loglik) {
                best.q = q;
                best.r = r;
                best.loglik = ll;
            }
        }
    }
    double step = 2.0;
    while (step > 1.005) {
        bool improved = false;
        for (const double factor : {step, 1.0 / step}) {
            for (int coord = 0; coord < 2; ++coord) {
                const double q = std::clamp(coord == 0 ? best.q * factor : best.q, 1e-10, 1e6);
                const double r = std::clamp(coord == 1 ? best.r * factor : best.r, 1e-10, 1e6);
                const double ll = level_loglik(q, r, y);
                if (ll > best.loglik) {
                    best.q = q;
                    best.r = r;
                    best.loglik = ll;
                    improved = true;
                }
            }
        }
        if (!improved) step = std::sqrt(step);
    }
    return best;
}

Eigen::MatrixXd hawkes_count_forecasts(const HawkesParams& params, const PanelData& data,
                                       const Eigen::MatrixXd& z, int begin, int end) {
    Eigen::MatrixXd out(end - begin, params.dim());
    KernelState kernel(params.omega);
    std::size_t idx = 0;
    double t = 0.0;
    for (int m = 0; m < end; ++m) {
        if (m >= begin) {
            out.row(m - begin) =
                decayed_month_rates(params, kernel, z.row(m).transpose()).transpose();
        }
        const double boundary = m + 1.0;
        while (idx < data.stream.size() && data.stream.times[idx] < boundary) {
            kernel.advance(data.stream.times[idx] - t);
            t = data.stream.times[idx];
            kernel.add_event(data.stream.components[idx]);
            ++idx;
        }
        kernel.advance(boundary - t);
        t = boundary;
    }
    return out;
}

}  // namespace

const std::vector<BaselineKind>& baseline_registry() {
    static const std::vector<BaselineKind> kinds = {
        BaselineKind::kSelfExcitingHawkes, BaselineKind::kExoHawkes,  BaselineKind::kAr1,
        BaselineKind::kFactorArx,          BaselineKind::kVarx,       BaselineKind::kLocalLevel,
        BaselineKind::kCoupledV1,
    };
    return kinds;
}

std::string baseline_name(BaselineKind kind) {
    switch (kind) {
        case BaselineKind::kSelfExcitingHawkes: return "self_exciting_hawkes";
        case BaselineKind::kExoHawkes: return "exo_hawkes";
        case BaselineKind::kAr1: return "ar1";
        case BaselineKind::kFactorArx: return "factor_arx";
        case BaselineKind::kVarx: return "varx";
        case BaselineKind::kLocalLevel: return "local_level";
        case BaselineKind::kCoupledV1: return "coupled_v1";
    }
    throw std::invalid_argument("unknown baseline kind");
}

BaselineKind baseline_from_name(const std::string& name) {
    for (const BaselineKind kind : baseline_registry()) {
        if (baseline_name(kind) == name) return kind;
    }
    throw std::invalid_argument("unknown baseline: " + name);
}

bool baseline_forecasts_counts(BaselineKind kind) {
    return kind == BaselineKind::kSelfExcitingHawkes || kind == BaselineKind::kExoHawkes ||
           kind == BaselineKind::kCoupledV1;
}

bool baseline_forecasts_response(BaselineKind kind) {
    return !(kind == BaselineKind::kSelfExcitingHawkes || kind == BaselineKind::kExoHawkes);
}

StateSpaceParams LocalLevelParams::state() const {
    StateSpaceParams p;
    p.A = Eigen::MatrixXd::Ones(1, 1);
    p.B = Eigen::MatrixXd::Zero(1, 0);
    p.q_diag = Eigen::VectorXd::Constant(1, q);
    p.observe_map = Eigen::MatrixXd::Ones(1, 1);
    p.r_diag = Eigen::VectorXd::Constant(1, r);
    p.mlp = MlpCorrection::zeros(1, 1, 0);
    p.milestone_dim = 0;
    return p;
}

Eigen::MatrixXd lagged_response_path(const ResponseSeries& response) {
    const int m_count = response.months();
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(m_count, 1);
    for (int m = 1; m < m_count; ++m) z(m, 0) = response.values(m - 1, 0);
    return z;
}

BaselineModel fit_baseline(BaselineKind kind, const PanelData& train, const FitConfig& cfg) {
    cfg.validate();
    train.validate();
    if (train.months() < 24) {
        throw std::invalid_argument("baseline fits need at least 24 training months");
    }

    BaselineModel model;
    model.kind = kind;
    model.train_months = train.months();

    switch (kind) {
        case BaselineKind::kSelfExcitingHawkes: {
            const Eigen::MatrixXd z = Eigen::MatrixXd::Zero(train.months(), 1);
            model.hawkes = fit_hawkes_mle(initial_hawkes(train, 1), train.stream, z, false);
            model.hawkes.gamma.setZero();
            break;
        }
        case BaselineKind::kExoHawkes: {
            const Eigen::MatrixXd z = lagged_response_path(train.response);
            model.hawkes = fit_hawkes_mle(initial_hawkes(train, 1), train.stream, z, true);
            break;
        }
        case BaselineKind::kAr1:
            model.ar1 = fit_ar1(train.response.primary());
            break;
        case BaselineKind::kFactorArx: {
            HeadConfig head_cfg;
            model.head = fit_head(train.counts, train.response.primary(), train.months() - 1,
                                  head_cfg);
            break;
        }
        case BaselineKind::kVarx:
            model.varx = fit_varx(train, cfg.ridge);
            break;
        case BaselineKind::kLocalLevel:
            model.level = fit_local_level(train.response.primary());
            break;
        case BaselineKind::kCoupledV1: {
            FitConfig v1 = cfg;
            v1.em_iterations = 1;
            v1.enable_head = false;
            v1.enable_ir = true;
            v1.enable_ri = true;
            v1.xi_init = 8.0;
            model.coupled = fit_coupled(v1, train);
            break;
        }
    }
    return model;
}

BaselineForecast forecast_baseline(const BaselineModel& model, const PanelData& data, int begin,
                                   int end) {
    data.validate();
    if (begin < 1 || end <= begin || end > data.months()) {
        throw std::invalid_argument("forecast window must lie in [1, months]");
    }
    const int n = end - begin;
    BaselineForecast out;
    out.begin = begin;

    const Eigen::VectorXd y = data.response.primary();
    switch (model.kind) {
        case BaselineKind::kSelfExcitingHawkes: {
            const Eigen::MatrixXd z = Eigen::MatrixXd::Zero(data.months(), 1);
            out.count_components = hawkes_count_forecasts(model.hawkes, data, z, begin, end);
            out.count_total = out.count_components.rowwise().sum();
            break;
        }
        case BaselineKind::kExoHawkes: {
            const Eigen::MatrixXd z = lagged_response_path(data.response);
            out.count_components = hawkes_count_forecasts(model.hawkes, data, z, begin, end);
            out.count_total = out.count_components.rowwise().sum();
            break;
        }
        case BaselineKind::kAr1:
            out.response.resize(n);
            for (int m = begin; m < end; ++m) {
                out.response[m - begin] = model.ar1.intercept + model.ar1.slope * y[m - 1];
            }
            break;
        case BaselineKind::kFactorArx:
            out.response = Eigen::VectorXd::Constant(n, kNaN);
            for (int m = begin; m < end; ++m) {
                const int feature_month = m - 1;
                if (feature_month < model.head.cfg.context_lags) continue;
                out.response[m - begin] = predict_next(
                    model.head, build_features(y[feature_month], data.counts, feature_month,
                                               model.head));
            }
            break;
        case BaselineKind::kVarx: {
            const Eigen::MatrixXd x =
                transition_inputs(data.counts, model.varx.x_mean, model.varx.x_std);
            out.response.resize(n);
            for (int m = begin; m < end; ++m) {
                out.response[m - begin] = model.varx.intercept + model.varx.phi * y[m - 1] +
                                          model.varx.beta.dot(x.row(m - 1));
            }
            break;
        }
        case BaselineKind::kLocalLevel: {
            FilterInputs in;
            in.x = Eigen::MatrixXd::Zero(data.months(), 0);
            in.c = Eigen::MatrixXd::Zero(data.months(), 0);
            in.y = y;
            const FilteredStates fs = filter_smooth(model.level.state(), in,
                                                    Eigen::MatrixXd::Zero(data.months(), 1));
            out.response.resize(n);
            for (int m = begin; m < end; ++m) {
                out.response[m - begin] = fs.predicted_mean(m, 0);
            }
            break;
        }
        case BaselineKind::kCoupledV1: {
            const ForecastSeries fc = forecast_coupled(model.coupled, data, begin, end);
            out.count_total = fc.count_total;
            out.response = fc.response;
            break;
        }
    }
    return out;
}

}  // namespace cnhp
