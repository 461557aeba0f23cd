#include "core/hawkes.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "core/mathutil.hpp"
#include "core/rng.hpp"

namespace cnhp {

namespace {

constexpr double kBoundaryTol = 1e-9;

int whole_months(double t_end) {
    const double rounded = std::round(t_end);
    if (rounded < 1.0 || std::abs(t_end - rounded) > kBoundaryTol) {
        throw std::invalid_argument("horizon must be a positive whole number of months");
    }
    return static_cast<int>(rounded);
}

void check_latent_path(const Eigen::MatrixXd& z, int months, int latent_dim) {
    if (z.rows() != months || z.cols() != latent_dim) {
        throw std::invalid_argument("latent path shape does not match horizon");
    }
    if (!z.allFinite()) throw std::invalid_argument("latent path contains non-finite values");
}

struct GradAccumulator {
    const HawkesParams& params;
    HawkesGrad& grad;

    /// Adds coeff(d) * d(preactivation_d)/d(theta) for every destination d.
    void add(const KernelState& state, const Eigen::VectorXd& z, const Eigen::VectorXd& coeff) {
        grad.mu += coeff;
        const Eigen::MatrixXd s = state.omega().cwiseProduct(state.U());
        grad.alpha.noalias() += s * coeff.asDiagonal();
        const Eigen::MatrixXd ds_domega = state.U() - state.omega().cwiseProduct(state.V());
        grad.omega.noalias() += params.alpha.cwiseProduct(ds_domega) * coeff.asDiagonal();
        grad.gamma.noalias() += coeff * z.transpose();
    }
};

}  // namespace

void EventStream::validate() const {
    if (dim <= 0) throw std::invalid_argument("event stream needs a positive dimension");
    if (!(t_end > 0.0) || !std::isfinite(t_end)) {
        throw std::invalid_argument("event stream horizon must be positive and finite");
    }
    if (times.size() != components.size()) {
        throw std::invalid_argument("event stream times and components differ in length");
    }
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double t = times[i];
        if (!std::isfinite(t) || t < 0.0 || t > t_end) {
            throw std::invalid_argument("event time outside [0, t_end]");
        }
        if (i > 0 && t < times[i - 1]) throw std::invalid_argument("event times not sorted");
        if (components[i] < 0 || components[i] >= dim) {
            throw std::invalid_argument("event component out of range");
        }
    }
}

EventStream EventStream::window(double begin, double end) const {
    if (!(begin >= 0.0 && end <= t_end && begin < end)) {
        throw std::invalid_argument("event window outside stream horizon");
    }
    EventStream out;
    out.dim = dim;
    out.t_end = end - begin;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] >= begin && times[i] < end) {
            out.times.push_back(times[i] - begin);
            out.components.push_back(components[i]);
        }
    }
    return out;
}

void HawkesParams::validate() const {
    const int d = dim();
    if (d <= 0) throw std::invalid_argument("hawkes params need a positive dimension");
    if (alpha.rows() != d || alpha.cols() != d || omega.rows() != d || omega.cols() != d ||
        gamma.rows() != d) {
        throw std::invalid_argument("hawkes parameter shapes are inconsistent");
    }
    if (!mu.allFinite() || !alpha.allFinite() || !omega.allFinite() || !gamma.allFinite()) {
        throw std::invalid_argument("hawkes parameters contain non-finite values");
    }
    if ((alpha.array() < 0.0).any()) throw std::invalid_argument("alpha must be non-negative");
    if ((omega.array() <= 0.0).any()) throw std::invalid_argument("omega must be positive");
}

HawkesParams HawkesParams::zeros(int dim, int latent_dim) {
    HawkesParams p;
    p.mu = Eigen::VectorXd::Zero(dim);
    p.alpha = Eigen::MatrixXd::Zero(dim, dim);
    p.omega = Eigen::MatrixXd::Ones(dim, dim);
    p.gamma = Eigen::MatrixXd::Zero(dim, latent_dim);
    return p;
}

KernelState::KernelState(Eigen::MatrixXd omega) : omega_(std::move(omega)) {
    if ((omega_.array() <= 0.0).any()) throw std::invalid_argument("omega must be positive");
    u_ = Eigen::MatrixXd::Zero(omega_.rows(), omega_.cols());
    v_ = u_;
}

void KernelState::advance(double dt) {
    if (dt < 0.0) throw std::invalid_argument("kernel state cannot advance backwards");
    if (dt == 0.0) return;
    const Eigen::ArrayXXd decay = (-omega_.array() * dt).exp();
    v_ = ((v_.array() + dt * u_.array()) * decay).matrix();
    u_ = (u_.array() * decay).matrix();
}

void KernelState::add_event(int component) {
    if (component < 0 || component >= u_.rows()) {
        throw std::invalid_argument("event component out of range");
    }
    u_.row(component).array() += 1.0;
}

void KernelState::reset() {
    u_.setZero();
    v_.setZero();
}

HawkesGrad HawkesGrad::zeros(int dim, int latent_dim) {
    HawkesGrad g;
    g.mu = Eigen::VectorXd::Zero(dim);
    g.alpha = Eigen::MatrixXd::Zero(dim, dim);
    g.omega = Eigen::MatrixXd::Zero(dim, dim);
    g.gamma = Eigen::MatrixXd::Zero(dim, latent_dim);
    return g;
}

Eigen::VectorXd hawkes_preactivation(const HawkesParams& params, const KernelState& state,
                                     const Eigen::VectorXd& z) {
    const Eigen::MatrixXd s = state.omega().cwiseProduct(state.U());
    Eigen::VectorXd a = params.mu;
    a.noalias() += params.alpha.cwiseProduct(s).colwise().sum().transpose();
    a.noalias() += params.gamma * z;
    return a;
}

Eigen::VectorXd hawkes_intensity(const HawkesParams& params, const EventStream& stream,
                                 const Eigen::MatrixXd& z, double t) {
    params.validate();
    stream.validate();
    const int months = whole_months(stream.t_end);
    check_latent_path(z, months, params.latent_dim());
    if (t < 0.0 || t > stream.t_end) throw std::invalid_argument("query time outside horizon");

    KernelState state(params.omega);
    double t_cur = 0.0;
    for (std::size_t i = 0; i < stream.size() && stream.times[i] < t; ++i) {
        state.advance(stream.times[i] - t_cur);
        t_cur = stream.times[i];
        state.add_event(stream.components[i]);
    }
    state.advance(t - t_cur);
    const int m = std::min(static_cast<int>(std::floor(t)), months - 1);
    return hawkes_preactivation(params, state, z.row(m).transpose())
        .unaryExpr([](double a) { return softplus(a); });
}

HawkesLogLik hawkes_loglik(const HawkesParams& params, const EventStream& stream,
                           const Eigen::MatrixXd& z, bool want_grad) {
    params.validate();
    stream.validate();
    const int d_dim = params.dim();
    if (stream.dim != d_dim) throw std::invalid_argument("stream dimension mismatch");
    const int months = whole_months(stream.t_end);
    check_latent_path(z, months, params.latent_dim());

    HawkesLogLik out;
    out.grad = HawkesGrad::zeros(d_dim, params.latent_dim());
    GradAccumulator acc{params, out.grad};

    std::vector<double> nodes;
    nodes.reserve(stream.size() + static_cast<std::size_t>(months) + 1);
    for (int m = 0; m <= months; ++m) nodes.push_back(static_cast<double>(m));
    nodes.insert(nodes.end(), stream.times.begin(), stream.times.end());
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

    KernelState state(params.omega);
    std::size_t ev = 0;
    double t_prev = 0.0;
    for (const double node : nodes) {
        if (node > t_prev) {
            const int m_seg = static_cast<int>(std::floor(t_prev));
            const Eigen::VectorXd zm = z.row(m_seg).transpose();
            const double dt = node - t_prev;

            const Eigen::VectorXd a_start = hawkes_preactivation(params, state, zm);
            out.compensator +=
                0.5 * dt * a_start.unaryExpr([](double a) { return softplus(a); }).sum();
            if (want_grad) {
                acc.add(state, zm,
                        (-0.5 * dt) * a_start.unaryExpr([](double a) { return sigmoid(a); }));
            }

            state.advance(dt);
            const Eigen::VectorXd a_end = hawkes_preactivation(params, state, zm);
            out.compensator +=
                0.5 * dt * a_end.unaryExpr([](double a) { return softplus(a); }).sum();
            if (want_grad) {
                acc.add(state, zm,
                        (-0.5 * dt) * a_end.unaryExpr([](double a) { return sigmoid(a); }));
            }
            t_prev = node;
        }

        if (ev < stream.size() && stream.times[ev] == node) {
            const int m_ev = std::min(static_cast<int>(std::floor(node)), months - 1);
            const Eigen::VectorXd zm = z.row(m_ev).transpose();
            const Eigen::VectorXd a = hawkes_preactivation(params, state, zm);
            const std::size_t first = ev;
            while (ev < stream.size() && stream.times[ev] == node) {
                const int d = stream.components[ev];
                const double lam = softplus(a[d]);
                out.log_term += std::log(lam);
                if (want_grad) {
                    Eigen::VectorXd coeff = Eigen::VectorXd::Zero(d_dim);
                    coeff[d] = sigmoid(a[d]) / lam;
                    acc.add(state, zm, coeff);
                }
                ++ev;
            }
            for (std::size_t i = first; i < ev; ++i) state.add_event(stream.components[i]);
        }
    }
    out.value = out.log_term - out.compensator;
    return out;
}

double branching_radius(const Eigen::MatrixXd& alpha) {
    if (alpha.rows() != alpha.cols() || alpha.rows() == 0) {
        throw std::invalid_argument("branching matrix must be square");
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es(alpha, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigen solve failed");
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

ThinningSimulator::ThinningSimulator(const HawkesParams& params, std::uint64_t seed,
                                     std::size_t max_events)
    : params_(params), rng_(seed), state_(params.omega), max_events_(max_events) {
    params_.validate();
    if (branching_radius(params_.alpha) >= 1.0) {
        throw std::invalid_argument("excitation matrix is not subcritical");
    }
}

void ThinningSimulator::simulate_month(const Eigen::VectorXd& z_m) {
    if (z_m.size() != params_.latent_dim()) {
        throw std::invalid_argument("latent input dimension mismatch");
    }
    const int d_dim = params_.dim();
    auto intensity_now = [&]() -> Eigen::VectorXd {
        return hawkes_preactivation(params_, state_, z_m)
            .unaryExpr([](double a) { return softplus(a); });
    };

    const double boundary = static_cast<double>(months_ + 1);
    double bound = intensity_now().sum();
    while (true) {
        const double delta = rng_.exponential(bound);
        if (t_ + delta >= boundary) {
            state_.advance(boundary - t_);
            t_ = boundary;
            break;
        }
        state_.advance(delta);
        t_ += delta;
        const Eigen::VectorXd lam = intensity_now();
        const double u = rng_.uniform01() * bound;
        double cum = 0.0;
        int accepted = -1;
        for (int d = 0; d < d_dim; ++d) {
            cum += lam[d];
            if (u < cum) {
                accepted = d;
                break;
            }
        }
        if (accepted >= 0) {
            times_.push_back(t_);
            components_.push_back(accepted);
            if (times_.size() > max_events_) {
                throw std::runtime_error("simulation exceeded the event cap");
            }
            state_.add_event(accepted);
            bound = intensity_now().sum();
        }
    }
    ++months_;
}

EventStream ThinningSimulator::stream() const {
    EventStream out;
    out.dim = params_.dim();
    out.t_end = static_cast<double>(months_);
    out.times = times_;
    out.components = components_;
    return out;
}

EventStream simulate_hawkes(const HawkesParams& params, const Eigen::MatrixXd& z,
                            const ThinningConfig& config) {
    const int months = whole_months(config.t_end);
    check_latent_path(z, months, params.latent_dim());
    ThinningSimulator sim(params, config.seed, config.max_events);
    for (int m = 0; m < months; ++m) {
        sim.simulate_month(z.row(m).transpose());
    }
    EventStream out = sim.stream();
    out.t_end = config.t_end;
    return out;
}

Eigen::MatrixXd monthly_counts(const EventStream& stream) {
    stream.validate();
    const int months = whole_months(stream.t_end);
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(months, stream.dim);
    for (std::size_t i = 0; i < stream.size(); ++i) {
        const int m = std::min(static_cast<int>(std::floor(stream.times[i])), months - 1);
        counts(m, stream.components[i]) += 1.0;
    }
    return counts;
}

EventStream synthesize_events(const CountPanel& panel) {
    panel.validate();
    const int months = static_cast<int>(panel.calendar.months);
    const int d_dim = panel.dim();

    EventStream out;
    out.dim = d_dim;
    out.t_end = static_cast<double>(months);
    struct Placed {
        double t;
        int d;
    };
    std::vector<Placed> placed;
    for (int m = 0; m < months; ++m) {
        for (int d = 0; d < d_dim; ++d) {
            const long long c = std::llround(panel.counts(m, d));
            for (long long i = 0; i < c; ++i) {
                const double frac = static_cast<double>(i + 1) / static_cast<double>(c + 1);
                placed.push_back({static_cast<double>(m) + frac, d});
            }
        }
    }
    std::sort(placed.begin(), placed.end(), [](const Placed& a, const Placed& b) {
        if (a.t != b.t) return a.t < b.t;
        return a.d < b.d;
    });
    out.times.reserve(placed.size());
    out.components.reserve(placed.size());
    for (const Placed& p : placed) {
        out.times.push_back(p.t);
        out.components.push_back(p.d);
    }
    return out;
}

}  // namespace cnhp
