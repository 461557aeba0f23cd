#include "core/trainer.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "core/mathutil.hpp"
#include "core/spg.hpp"

namespace cnhp {

namespace {

constexpr double kVarianceFloor = 1e-6;
constexpr double kXiLo = -8.0;
constexpr double kXiHi = 8.0;
constexpr double kMuLo = -30.0, kMuHi = 30.0;
constexpr double kAlphaLo = 0.0, kAlphaHi = 5.0;
constexpr double kOmegaLo = 0.05, kOmegaHi = 20.0;
constexpr double kGammaLo = -10.0, kGammaHi = 10.0;

std::vector<GateSet> enabled_gates(const CoupledModel& model) {
    std::vector<GateSet> gates;
    if (model.config.enable_ir) gates.push_back(model.gate_ir);
    if (model.config.enable_ri) gates.push_back(model.gate_ri);
    return gates;
}

StateSpaceParams gated_state(const CoupledModel& model) {
    StateSpaceParams s = model.state;
    s.B = model.effective_input_map();
    return s;
}

FilterInputs filter_inputs(const CoupledModel& model, const PanelData& data) {
    FilterInputs in;
    in.x = transition_inputs(data.counts, model.x_mean, model.x_std);
    in.c = Eigen::MatrixXd::Zero(data.months(), model.state.milestone_dim);
    in.y = data.response.values;
    return in;
}

struct HawkesPacking {
    int d = 0;
    int k = 0;
    bool with_gamma = false;

    int size() const { return d + 2 * d * d + (with_gamma ? d * k : 0); }

    Eigen::VectorXd pack(const HawkesParams& p) const {
        Eigen::VectorXd x(size());
        int pos = 0;
        x.segment(pos, d) = p.mu;
        pos += d;
        x.segment(pos, d * d) = Eigen::Map<const Eigen::VectorXd>(p.alpha.data(), d * d);
        pos += d * d;
        x.segment(pos, d * d) = Eigen::Map<const Eigen::VectorXd>(p.omega.data(), d * d);
        pos += d * d;
        if (with_gamma) {
            x.segment(pos, d * k) = Eigen::Map<const Eigen::VectorXd>(p.gamma.data(), d * k);
        }
        return x;
    }

    void unpack(const Eigen::VectorXd& x, HawkesParams& p) const {
        int pos = 0;
        p.mu = x.segment(pos, d);
        pos += d;
        p.alpha = Eigen::Map<const Eigen::MatrixXd>(x.segment(pos, d * d).data(), d, d);
        pos += d * d;
        p.omega = Eigen::Map<const Eigen::MatrixXd>(x.segment(pos, d * d).data(), d, d);
        pos += d * d;
        if (with_gamma) {
            p.gamma = Eigen::Map<const Eigen::MatrixXd>(x.segment(pos, d * k).data(), d, k);
        }
    }

    void bounds(Eigen::VectorXd& lo, Eigen::VectorXd& hi) const {
        lo.resize(size());
        hi.resize(size());
        int pos = 0;
        lo.segment(pos, d).setConstant(kMuLo);
        hi.segment(pos, d).setConstant(kMuHi);
        pos += d;
        lo.segment(pos, d * d).setConstant(kAlphaLo);
        hi.segment(pos, d * d).setConstant(kAlphaHi);
        pos += d * d;
        lo.segment(pos, d * d).setConstant(kOmegaLo);
        hi.segment(pos, d * d).setConstant(kOmegaHi);
        pos += d * d;
        if (with_gamma) {
            lo.segment(pos, d * k).setConstant(kGammaLo);
            hi.segment(pos, d * k).setConstant(kGammaHi);
        }
    }
};

bool accept_if_improves(CoupledModel& model, double& current, const CoupledModel& candidate,
                        const PanelData& data) {
    const double value = joint_objective(candidate, data);
    if (std::isfinite(value) && value >= current) {
        model = candidate;
        current = value;
        return true;
    }
    return false;
}

// Ridge updates of A, B, q, observe_map, r, and the mlp output layer at the
// smoothed means. Gates stay fixed; B is solved in raw coordinates with its
// expected gates folded into the features.
void update_state_block(CoupledModel& model, const PanelData& data, const Eigen::MatrixXd& x,
                        const FilteredStates& fs) {
    const int m_count = data.months();
    const int k = model.state.latent_dim();
    const int d = model.state.input_dim();
    const Eigen::MatrixXd& z = fs.smoothed_mean;
    const Eigen::MatrixXd gate_ir =
        model.config.enable_ir ? expected_gate(model.gate_ir) : Eigen::MatrixXd::Zero(k, d);
    const Eigen::MatrixXd c = Eigen::MatrixXd::Zero(m_count, model.state.milestone_dim);
    const Eigen::MatrixXd offsets = mlp_offsets(model.state, x, c, z);

    const int rows = m_count - 1;
    const int n_feat = model.config.enable_ir ? k + d : k;
    Eigen::MatrixXd f(rows, n_feat);
    for (int m = 1; m < m_count; ++m) {
        f.row(m - 1).head(k) = z.row(m - 1);
        if (model.config.enable_ir) f.row(m - 1).tail(d) = x.row(m - 1);
    }

    Eigen::MatrixXd a_new(k, k);
    Eigen::MatrixXd b_new = Eigen::MatrixXd::Zero(k, d);
    for (int row = 0; row < k; ++row) {
        Eigen::MatrixXd fr = f;
        if (model.config.enable_ir) {
            for (int j = 0; j < d; ++j) fr.col(k + j) *= gate_ir(row, j);
        }
        Eigen::VectorXd target(rows);
        for (int m = 1; m < m_count; ++m) target[m - 1] = z(m, row) - offsets(m, row);
        Eigen::MatrixXd gram = fr.transpose() * fr;
        gram.diagonal().array() += model.config.ridge;
        const Eigen::VectorXd sol = gram.ldlt().solve(fr.transpose() * target);
        a_new.row(row) = sol.head(k).transpose();
        if (model.config.enable_ir) b_new.row(row) = sol.tail(d).transpose();
    }
    model.state.A = cap_spectral_radius(a_new, 1.0 + 1e-6);
    model.state.B = b_new;
    model.gate_ir.raw_weights = model.state.B;

    const Eigen::MatrixXd b_eff = model.effective_input_map();
    if (model.state.mlp.width() > 0) {
        const int width = model.state.mlp.width();
        Eigen::MatrixXd h(rows, width + 1);
        Eigen::MatrixXd resid(rows, k);
        Eigen::VectorXd input(k + d + model.state.milestone_dim);
        for (int m = 1; m < m_count; ++m) {
            input << z.row(m - 1).transpose(), x.row(m - 1).transpose(), c.row(m).transpose();
            h.row(m - 1).head(width) = model.state.mlp.hidden(input).transpose();
            h(m - 1, width) = 1.0;
            resid.row(m - 1) = z.row(m) - z.row(m - 1) * model.state.A.transpose() -
                               x.row(m - 1) * b_eff.transpose();
        }
        Eigen::MatrixXd gram = h.transpose() * h;
        for (int i = 0; i < width; ++i) gram(i, i) += model.config.ridge;
        const Eigen::MatrixXd sol = gram.ldlt().solve(h.transpose() * resid);
        model.state.mlp.w_out = sol.topRows(width).transpose();
        model.state.mlp.b_out = sol.row(width).transpose();
    }

    const Eigen::MatrixXd new_offsets = mlp_offsets(model.state, x, c, z);
    for (int row = 0; row < k; ++row) {
        double sq = 0.0;
        double var = 0.0;
        for (int m = 1; m < m_count; ++m) {
            const double mean = z.row(m - 1).dot(model.state.A.row(row)) +
                                x.row(m - 1).dot(b_eff.row(row)) + new_offsets(m, row);
            const double e = z(m, row) - mean;
            sq += e * e;
            var += fs.smoothed_var(m, row);
        }
        model.state.q_diag[row] = std::max((sq + var) / rows, kVarianceFloor);
    }

    const int channels = model.state.channels();
    Eigen::MatrixXd zz = z.transpose() * z;
    zz.diagonal().array() += model.config.ridge;
    const Eigen::LDLT<Eigen::MatrixXd> zz_solver(zz);
    for (int ch = 0; ch < channels; ++ch) {
        model.state.observe_map.row(ch) =
            zz_solver.solve(z.transpose() * data.response.values.col(ch)).transpose();
    }
    for (int ch = 0; ch < channels; ++ch) {
        double sq = 0.0;
        double var = 0.0;
        for (int m = 0; m < m_count; ++m) {
            const double e =
                data.response.values(m, ch) - model.state.observe_map.row(ch).dot(z.row(m));
            sq += e * e;
            var += model.state.observe_map.row(ch)
                       .cwiseAbs2()
                       .dot(fs.smoothed_var.row(m));
        }
        model.state.r_diag[ch] = std::max((sq + var) / m_count, kVarianceFloor);
    }
}

void update_hawkes_block(CoupledModel& model, const PanelData& data, const Eigen::MatrixXd& z) {
    const int d = model.hawkes.dim();
    const int k = model.hawkes.latent_dim();
    HawkesPacking packing{d, k, model.config.enable_ri};
    const Eigen::MatrixXd gate_ri =
        model.config.enable_ri ? expected_gate(model.gate_ri) : Eigen::MatrixXd();

    HawkesParams work = model.hawkes;
    auto objective = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) -> double {
        packing.unpack(theta, work);
        HawkesParams eff = work;
        if (model.config.enable_ri) {
            eff.gamma = work.gamma.cwiseProduct(gate_ri);
        } else {
            eff.gamma.setZero();
        }
        const HawkesLogLik ll = hawkes_loglik(eff, data.stream, z, true);
        HawkesParams g = work;
        g.mu = ll.grad.mu;
        g.alpha = ll.grad.alpha;
        g.omega = ll.grad.omega;
        if (model.config.enable_ri) {
            g.gamma = ll.grad.gamma.cwiseProduct(gate_ri);
        } else {
            g.gamma.setZero();
        }
        grad = packing.pack(g);
        return ll.value;
    };

    Eigen::VectorXd lo, hi;
    packing.bounds(lo, hi);
    BoxMaximizeOptions options;
    options.max_iterations = 80;
    const BoxMaximizeResult result =
        box_maximize(objective, packing.pack(model.hawkes), lo, hi, options);
    packing.unpack(result.x, model.hawkes);
    if (!model.config.enable_ri) model.hawkes.gamma.setZero();
    model.gate_ri.raw_weights = model.hawkes.gamma;
}

void sweep_gates(CoupledModel& model, double& current, const PanelData& data) {
    static const double kSteps[] = {1.0, 0.25, -0.25, -1.0};
    if (model.config.enable_ir) {
        // Coordinate ascent at the frozen E-step posterior. With the smoothed
        // moments held fixed an I->R move touches only the dynamics quadratic
        // and the penalty, so candidates are scored without re-running the
        // filter; the swept set is then re-checked against the full objective
        // before adoption so the outer trace stays monotone.
        const FilteredStates fs = model_states(model, data);
        const FilterInputs in = filter_inputs(model, data);
        const Eigen::MatrixXd offsets =
            mlp_offsets(model.state, in.x, in.c, fs.smoothed_mean);
        const Eigen::MatrixXd& z = fs.smoothed_mean;
        const int m_count = data.months();
        const int k = model.state.latent_dim();

        auto score = [&](const GateSet& gate) {
            const Eigen::MatrixXd gated = expected_gate(gate);
            const Eigen::MatrixXd b_eff = model.state.B.cwiseProduct(gated);
            double value = -model.config.lambda_sp * gated.sum();
            for (int m = 1; m < m_count; ++m) {
                for (int row = 0; row < k; ++row) {
                    const double mean = z.row(m - 1).dot(model.state.A.row(row)) +
                                        in.x.row(m - 1).dot(b_eff.row(row)) +
                                        offsets(m, row);
                    const double e = z(m, row) - mean;
                    value -= 0.5 * e * e / model.state.q_diag[row];
                }
            }
            return value;
        };

        GateSet swept = model.gate_ir;
        double best = score(swept);
        for (int i = 0; i < swept.xi.rows(); ++i) {
            for (int j = 0; j < swept.xi.cols(); ++j) {
                const double base = swept.xi(i, j);
                for (const double step : kSteps) {
                    GateSet candidate = swept;
                    candidate.xi(i, j) = std::clamp(base + step, kXiLo, kXiHi);
                    if (candidate.xi(i, j) == base) continue;
                    const double value = score(candidate);
                    if (std::isfinite(value) && value > best) {
                        swept = candidate;
                        best = value;
                    }
                }
            }
        }
        CoupledModel candidate = model;
        candidate.gate_ir = swept;
        accept_if_improves(model, current, candidate, data);
    }
    if (model.config.enable_ri) {
        // R->I gates leave the filter untouched, so only the event term and
        // the penalty need recomputation.
        const FilteredStates fs = model_states(model, data);
        ObjectiveParts parts = joint_objective_parts(model, data);
        for (int i = 0; i < model.gate_ri.xi.rows(); ++i) {
            for (int j = 0; j < model.gate_ri.xi.cols(); ++j) {
                const double base = model.gate_ri.xi(i, j);
                CoupledModel best = model;
                ObjectiveParts best_parts = parts;
                for (const double step : kSteps) {
                    CoupledModel candidate = model;
                    candidate.gate_ri.xi(i, j) = std::clamp(base + step, kXiLo, kXiHi);
                    if (candidate.gate_ri.xi(i, j) == base) continue;
                    HawkesParams eff = candidate.hawkes;
                    eff.gamma = candidate.effective_gamma();
                    ObjectiveParts trial = parts;
                    trial.event_loglik =
                        hawkes_loglik(eff, data.stream, fs.smoothed_mean, false).value;
                    trial.sparsity =
                        sparsity_penalty(enabled_gates(candidate), candidate.config.lambda_sp);
                    if (std::isfinite(trial.total()) && trial.total() > best_parts.total()) {
                        best = candidate;
                        best_parts = trial;
                    }
                }
                model = best;
                parts = best_parts;
            }
        }
        current = std::max(current, parts.total());
    }
}

}  // namespace

void FitConfig::validate() const {
    if (em_iterations < 1) throw std::invalid_argument("em_iterations must be at least 1");
    if (ridge <= 0.0) throw std::invalid_argument("ridge must be positive");
    if (blend_alpha < 0.0 || blend_alpha > 1.0) {
        throw std::invalid_argument("blend_alpha must lie in [0,1]");
    }
    if (count_selfexciting_mix < 0.0 || count_selfexciting_mix > 1.0) {
        throw std::invalid_argument("count_selfexciting_mix must lie in [0,1]");
    }
    if (latent_dim < 1) throw std::invalid_argument("latent_dim must be positive");
    if (lambda_sp < 0.0) throw std::invalid_argument("lambda_sp must be non-negative");
    if (tau <= 0.0) throw std::invalid_argument("tau must be positive");
}

const std::vector<std::string>& variant_registry() {
    static const std::vector<std::string> names = {
        "no_i_to_r",      "add_r_to_i",       "reverse_only", "no_coupling",
        "no_response_head", "no_count_blend", "no_count_context", "no_calendar",
        "add_state",      "no_blend",
    };
    return names;
}

FitConfig make_variant(const FitConfig& base, const std::string& name) {
    FitConfig cfg = base;
    if (name == "no_i_to_r") {
        cfg.enable_ir = false;
    } else if (name == "add_r_to_i") {
        cfg.enable_ri = true;
    } else if (name == "reverse_only") {
        cfg.enable_ir = false;
        cfg.enable_ri = true;
    } else if (name == "no_coupling") {
        cfg.enable_ir = false;
        cfg.enable_ri = false;
    } else if (name == "no_response_head") {
        cfg.enable_head = false;
    } else if (name == "no_count_blend") {
        cfg.count_selfexciting_mix = 1.0;
    } else if (name == "no_count_context") {
        cfg.enable_context = false;
    } else if (name == "no_calendar") {
        cfg.enable_calendar = false;
    } else if (name == "add_state") {
        cfg.head_uses_state = true;
    } else if (name == "no_blend") {
        cfg.blend_alpha = 1.0;
    } else {
        throw std::invalid_argument("unknown variant: " + name);
    }
    return cfg;
}

void PanelData::validate() const {
    counts.validate();
    stream.validate();
    if (stream.dim != counts.dim()) {
        throw std::invalid_argument("event components do not match the count panel");
    }
    if (std::abs(stream.t_end - counts.months()) > 1e-9) {
        throw std::invalid_argument("event horizon does not match the panel months");
    }
    if (response.months() != counts.months()) {
        throw std::invalid_argument("response months do not match the count panel");
    }
}

PanelData PanelData::window(int begin, int end) const {
    if (begin < 0 || end <= begin || end > months()) {
        throw std::out_of_range("window is outside the panel");
    }
    PanelData out;
    out.stream = stream.window(begin, end);
    out.counts = counts.slice(begin, end - begin);
    out.response = response.slice(begin, end - begin);
    return out;
}

Eigen::MatrixXd CoupledModel::effective_input_map() const {
    if (!config.enable_ir) {
        return Eigen::MatrixXd::Zero(state.B.rows(), state.B.cols());
    }
    return state.B.cwiseProduct(expected_gate(gate_ir));
}

Eigen::MatrixXd CoupledModel::effective_gamma() const {
    if (!config.enable_ri) {
        return Eigen::MatrixXd::Zero(hawkes.gamma.rows(), hawkes.gamma.cols());
    }
    return hawkes.gamma.cwiseProduct(expected_gate(gate_ri));
}

Eigen::MatrixXd transition_inputs(const CountPanel& counts, const Eigen::VectorXd& x_mean,
                                  const Eigen::VectorXd& x_std) {
    if (x_mean.size() != counts.dim() || x_std.size() != counts.dim()) {
        throw std::invalid_argument("standardization constants do not match the panel");
    }
    Eigen::MatrixXd x = counts.counts.array().log1p();
    x.rowwise() -= x_mean.transpose();
    x.array().rowwise() /= x_std.transpose().array();
    return x;
}

FilteredStates model_states(const CoupledModel& model, const PanelData& data) {
    const FilterInputs in = filter_inputs(model, data);
    const StateSpaceParams gated = gated_state(model);
    const FilteredStates pass1 =
        filter_smooth(gated, in, mlp_offsets(model.state, in.x, in.c, Eigen::MatrixXd()));
    return filter_smooth(gated, in, mlp_offsets(model.state, in.x, in.c, pass1.smoothed_mean));
}

ObjectiveParts joint_objective_parts(const CoupledModel& model, const PanelData& data) {
    const FilteredStates fs = model_states(model, data);
    HawkesParams eff = model.hawkes;
    eff.gamma = model.effective_gamma();
    ObjectiveParts parts;
    parts.event_loglik = hawkes_loglik(eff, data.stream, fs.smoothed_mean, false).value;
    parts.response_loglik = fs.response_loglik;
    parts.dynamics_loglik = fs.dynamics_loglik;
    parts.kl = fs.kl;
    parts.sparsity = sparsity_penalty(enabled_gates(model), model.config.lambda_sp);
    return parts;
}

double joint_objective(const CoupledModel& model, const PanelData& data) {
    return joint_objective_parts(model, data).total();
}

CoupledModel fit_coupled(const FitConfig& cfg, const PanelData& train) {
    cfg.validate();
    train.validate();
    const int m_count = train.months();
    if (m_count < 6) {
        throw std::invalid_argument("training window must cover at least 6 months");
    }
    const int d = train.counts.dim();
    const int k = cfg.latent_dim;
    const int channels = train.response.channels();

    CoupledModel model;
    model.config = cfg;
    model.train_months = m_count;

    const Eigen::MatrixXd logc = train.counts.counts.array().log1p();
    model.x_mean = logc.colwise().mean().transpose();
    Eigen::MatrixXd centered = logc.rowwise() - model.x_mean.transpose();
    model.x_std = centered.array()
                      .square()
                      .colwise()
                      .mean()
                      .sqrt()
                      .matrix()
                      .transpose()
                      .cwiseMax(1e-9);
    const Eigen::MatrixXd x = transition_inputs(train.counts, model.x_mean, model.x_std);

    model.hawkes = HawkesParams::zeros(d, k);
    const Eigen::VectorXd totals = train.counts.counts.colwise().sum().transpose();
    for (int i = 0; i < d; ++i) {
        model.hawkes.mu[i] = inverse_softplus(std::max(totals[i] / m_count, 1e-3));
    }
    model.hawkes.alpha.setConstant(0.02);
    model.hawkes.alpha.diagonal().setConstant(0.1);
    model.hawkes.omega.setConstant(1.0);

    model.state = StateSpaceParams::defaults(k, d, channels, 8, cfg.seed);
    // Seed the noise scales from the response so the six outer iterations
    // start near the right variance split instead of burning them down from
    // an arbitrary scale.
    Eigen::VectorXd y_var(channels);
    for (int ch = 0; ch < channels; ++ch) {
        const auto col = train.response.values.col(ch);
        const double mean = col.mean();
        y_var[ch] = std::max((col.array() - mean).square().mean(), 1e-4);
    }
    model.state.r_diag = 0.5 * y_var;
    const double a0 = model.state.A(0, 0);
    model.state.q_diag.setConstant(std::max(0.5 * y_var.mean() * (1.0 - a0 * a0), 1e-6));
    model.gate_ir = GateSet::open(GateDirection::kInnovationToResponse, k, d, cfg.xi_init);
    model.gate_ir.tau = cfg.tau;
    model.gate_ri = GateSet::open(GateDirection::kResponseToInnovation, d, k, cfg.xi_init);
    model.gate_ri.tau = cfg.tau;

    double current = joint_objective(model, train);
    model.objective_trace.push_back(current);

    const bool trace_fit = std::getenv("CNHP_TRACE_FIT") != nullptr;
    auto dump_parts = [&](const char* tag) {
        if (!trace_fit) return;
        const ObjectiveParts p = joint_objective_parts(model, train);
        std::fprintf(stderr, "  %-6s ev=%.2f resp=%.2f dyn=%.2f kl=%.2f sp=%.4f q=%.4f r=%.4f\n",
                     tag, p.event_loglik, p.response_loglik, p.dynamics_loglik, p.kl, p.sparsity,
                     model.state.q_diag[0], model.state.r_diag[0]);
    };
    for (int iter = 0; iter < cfg.em_iterations; ++iter) {
        {
            const FilteredStates fs = model_states(model, train);
            CoupledModel candidate = model;
            update_state_block(candidate, train, x, fs);
            accept_if_improves(model, current, candidate, train);
        }
        dump_parts("state");
        {
            const FilteredStates fs = model_states(model, train);
            CoupledModel candidate = model;
            update_hawkes_block(candidate, train, fs.smoothed_mean);
            accept_if_improves(model, current, candidate, train);
        }
        dump_parts("hawkes");
        sweep_gates(model, current, train);
        dump_parts("gates");
        model.objective_trace.push_back(current);
    }

    if (cfg.enable_head) {
        HeadConfig head_cfg;
        head_cfg.calendar = cfg.enable_calendar;
        head_cfg.use_context = cfg.enable_context;
        head_cfg.use_state = cfg.head_uses_state;
        head_cfg.blend_alpha = cfg.blend_alpha;
        Eigen::MatrixXd state_path;
        if (cfg.head_uses_state) {
            state_path = model_states(model, train).smoothed_mean;
        }
        model.head = fit_head(train.counts, train.response.primary(), m_count - 1, head_cfg,
                              state_path);
    }

    canonicalize_scale(model);
    return model;
}

void canonicalize_scale(CoupledModel& model) {
    const double scale = model.state.observe_map.norm();
    if (!(scale > 1e-8) || !std::isfinite(scale)) return;
    model.state.observe_map /= scale;
    model.state.B *= scale;
    model.state.q_diag *= scale * scale;
    model.state.mlp.w_out *= scale;
    model.state.mlp.b_out *= scale;
    if (model.state.mlp.width() > 0) {
        // The mlp consumes z directly, so its input layer must absorb the
        // inverse scale on the latent block.
        model.state.mlp.w_in.leftCols(model.state.latent_dim()) /= scale;
    }
    model.hawkes.gamma /= scale;
    model.gate_ir.raw_weights = model.state.B;
    model.gate_ri.raw_weights = model.hawkes.gamma;
}

double decayed_month_integral(const HawkesParams& params, const KernelState& state,
                              const Eigen::VectorXd& z_m) {
    constexpr int kPanels = 64;
    KernelState probe = state;
    auto total_rate = [&]() {
        const Eigen::VectorXd pre = hawkes_preactivation(params, probe, z_m);
        double sum = 0.0;
        for (int i = 0; i < pre.size(); ++i) sum += softplus(pre[i]);
        return sum;
    };
    double acc = 0.0;
    double prev = total_rate();
    for (int step = 0; step < kPanels; ++step) {
        probe.advance(1.0 / kPanels);
        const double cur = total_rate();
        acc += 0.5 * (prev + cur) / kPanels;
        prev = cur;
    }
    return acc;
}

Eigen::VectorXd decayed_month_rates(const HawkesParams& params, const KernelState& state,
                                    const Eigen::VectorXd& z_m) {
    constexpr int kPanels = 64;
    KernelState probe = state;
    auto rates = [&]() -> Eigen::VectorXd {
        return hawkes_preactivation(params, probe, z_m).unaryExpr(
            [](double v) { return softplus(v); });
    };
    Eigen::VectorXd prev = rates();
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(params.dim());
    for (int step = 0; step < kPanels; ++step) {
        probe.advance(1.0 / kPanels);
        const Eigen::VectorXd cur = rates();
        acc += 0.5 * (prev + cur) / kPanels;
        prev = cur;
    }
    return acc;
}

ForecastSeries forecast_coupled(const CoupledModel& model, const PanelData& data, int begin,
                                int end) {
    data.validate();
    if (begin < 1 || end <= begin || end > data.months()) {
        throw std::invalid_argument("forecast window must lie in [1, months]");
    }

    const FilterInputs in = filter_inputs(model, data);
    const StateSpaceParams gated = gated_state(model);
    const FilteredStates pass1 =
        filter_smooth(gated, in, mlp_offsets(model.state, in.x, in.c, Eigen::MatrixXd()));
    const FilteredStates fs =
        filter_smooth(gated, in, mlp_offsets(model.state, in.x, in.c, pass1.filtered_mean));

    HawkesParams learned = model.hawkes;
    learned.gamma = model.effective_gamma();
    HawkesParams self_exciting = model.hawkes;
    self_exciting.gamma.setZero();
    const double mix = model.config.count_selfexciting_mix;

    ForecastSeries out;
    out.begin = begin;
    out.count_total = Eigen::VectorXd::Constant(end - begin,
                                                std::numeric_limits<double>::quiet_NaN());
    out.response = Eigen::VectorXd::Constant(end - begin,
                                             std::numeric_limits<double>::quiet_NaN());

    KernelState kernel(model.hawkes.omega);
    std::size_t idx = 0;
    double t = 0.0;
    for (int m = 0; m < end; ++m) {
        if (m >= begin) {
            const Eigen::VectorXd z_m = fs.predicted_mean.row(m).transpose();
            double value = 0.0;
            if (mix < 1.0) {
                value += (1.0 - mix) * decayed_month_integral(learned, kernel, z_m);
            }
            if (mix > 0.0) {
                value += mix * decayed_month_integral(self_exciting, kernel, z_m);
            }
            out.count_total[m - begin] = value;
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

    const Eigen::VectorXd y = data.response.primary();
    for (int m = begin; m < end; ++m) {
        const double state_forecast =
            model.state.observe_map.row(0).dot(fs.predicted_mean.row(m));
        double value = state_forecast;
        if (model.config.enable_head) {
            const int feature_month = m - 1;
            if (feature_month < model.head.cfg.context_lags) continue;
            Eigen::VectorXd state_row;
            if (model.head.cfg.use_state) {
                state_row = fs.filtered_mean.row(feature_month).transpose();
            }
            const double head_forecast = predict_next(
                model.head,
                build_features(y[feature_month], data.counts, feature_month, model.head,
                               state_row));
            value = model.config.blend_alpha * head_forecast +
                    (1.0 - model.config.blend_alpha) * state_forecast;
        }
        out.response[m - begin] = value;
    }
    return out;
}

}  // namespace cnhp
