#include "core/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "core/rng.hpp"

namespace cnhp {

namespace {

using nlohmann::json;

json mlp_json(const MlpCorrection& mlp) {
    return json{{"w_in", matrix_json(mlp.w_in)},
                {"b_in", vector_json(mlp.b_in)},
                {"w_out", matrix_json(mlp.w_out)},
                {"b_out", vector_json(mlp.b_out)}};
}

MlpCorrection mlp_from_json(const json& j) {
    MlpCorrection mlp;
    mlp.w_in = matrix_from_json(j.at("w_in"));
    mlp.b_in = vector_from_json(j.at("b_in"));
    mlp.w_out = matrix_from_json(j.at("w_out"));
    mlp.b_out = vector_from_json(j.at("b_out"));
    return mlp;
}

json hawkes_json(const HawkesParams& p) {
    return json{{"mu", vector_json(p.mu)},
                {"alpha", matrix_json(p.alpha)},
                {"omega", matrix_json(p.omega)},
                {"gamma", matrix_json(p.gamma)}};
}

HawkesParams hawkes_from_json(const json& j) {
    HawkesParams p;
    p.mu = vector_from_json(j.at("mu"));
    p.alpha = matrix_from_json(j.at("alpha"));
    p.omega = matrix_from_json(j.at("omega"));
    p.gamma = matrix_from_json(j.at("gamma"));
    return p;
}

json state_json(const StateSpaceParams& p) {
    return json{{"A", matrix_json(p.A)},
                {"B", matrix_json(p.B)},
                {"q_diag", vector_json(p.q_diag)},
                {"observe_map", matrix_json(p.observe_map)},
                {"r_diag", vector_json(p.r_diag)},
                {"mlp", mlp_json(p.mlp)},
                {"milestone_dim", p.milestone_dim}};
}

StateSpaceParams state_from_json(const json& j) {
    StateSpaceParams p;
    p.A = matrix_from_json(j.at("A"));
    p.B = matrix_from_json(j.at("B"));
    p.q_diag = vector_from_json(j.at("q_diag"));
    p.observe_map = matrix_from_json(j.at("observe_map"));
    p.r_diag = vector_from_json(j.at("r_diag"));
    p.mlp = mlp_from_json(j.at("mlp"));
    p.milestone_dim = j.at("milestone_dim").get<int>();
    return p;
}

std::string direction_name(GateDirection direction) {
    return direction == GateDirection::kInnovationToResponse ? "i_to_r" : "r_to_i";
}

GateDirection direction_from_name(const std::string& name) {
    if (name == "i_to_r") return GateDirection::kInnovationToResponse;
    if (name == "r_to_i") return GateDirection::kResponseToInnovation;
    throw std::invalid_argument("unknown gate direction: " + name);
}

json gate_json(const GateSet& g) {
    return json{{"direction", direction_name(g.direction)},
                {"xi", matrix_json(g.xi)},
                {"raw_weights", matrix_json(g.raw_weights)},
                {"tau", g.tau},
                {"density_cap", g.density_cap}};
}

GateSet gate_from_json(const json& j) {
    GateSet g;
    g.direction = direction_from_name(j.at("direction").get<std::string>());
    g.xi = matrix_from_json(j.at("xi"));
    g.raw_weights = matrix_from_json(j.at("raw_weights"));
    g.tau = j.at("tau").get<double>();
    g.density_cap = j.at("density_cap").get<double>();
    return g;
}

json head_config_json(const HeadConfig& cfg) {
    return json{{"ar_lags", cfg.ar_lags},
                {"context_components", cfg.context_components},
                {"context_lags", cfg.context_lags},
                {"calendar", cfg.calendar},
                {"use_context", cfg.use_context},
                {"use_state", cfg.use_state},
                {"ridge_lambda", cfg.ridge_lambda},
                {"blend_alpha", cfg.blend_alpha}};
}

HeadConfig head_config_from_json(const json& j) {
    HeadConfig cfg;
    cfg.ar_lags = j.at("ar_lags").get<int>();
    cfg.context_components = j.at("context_components").get<int>();
    cfg.context_lags = j.at("context_lags").get<int>();
    cfg.calendar = j.at("calendar").get<bool>();
    cfg.use_context = j.at("use_context").get<bool>();
    cfg.use_state = j.at("use_state").get<bool>();
    cfg.ridge_lambda = j.at("ridge_lambda").get<double>();
    cfg.blend_alpha = j.at("blend_alpha").get<double>();
    return cfg;
}

json head_json(const HeadParams& head) {
    return json{{"cfg", head_config_json(head.cfg)},
                {"stack_mean", vector_json(head.stack_mean)},
                {"stack_std", vector_json(head.stack_std)},
                {"context_pca", matrix_json(head.context_pca)},
                {"weights", vector_json(head.weights)},
                {"intercept", head.intercept}};
}

HeadParams head_from_json(const json& j) {
    HeadParams head;
    head.cfg = head_config_from_json(j.at("cfg"));
    head.stack_mean = vector_from_json(j.at("stack_mean"));
    head.stack_std = vector_from_json(j.at("stack_std"));
    head.context_pca = matrix_from_json(j.at("context_pca"));
    head.weights = vector_from_json(j.at("weights"));
    head.intercept = j.at("intercept").get<double>();
    return head;
}

}  // namespace

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(i, c));
    }
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(data.size()) != rows * cols) {
        throw std::invalid_argument("matrix payload does not match its shape");
    }
    Eigen::MatrixXd m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = data[k++];
    }
    return m;
}

nlohmann::json vector_json(const Eigen::VectorXd& v) {
    return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
    const auto data = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(data.data(),
                                             static_cast<Eigen::Index>(data.size()));
}

nlohmann::json config_json(const FitConfig& cfg) {
    return json{{"em_iterations", cfg.em_iterations},
                {"ridge", cfg.ridge},
                {"blend_alpha", cfg.blend_alpha},
                {"count_selfexciting_mix", cfg.count_selfexciting_mix},
                {"enable_ir", cfg.enable_ir},
                {"enable_ri", cfg.enable_ri},
                {"enable_head", cfg.enable_head},
                {"enable_calendar", cfg.enable_calendar},
                {"enable_context", cfg.enable_context},
                {"head_uses_state", cfg.head_uses_state},
                {"seed", cfg.seed},
                {"latent_dim", cfg.latent_dim},
                {"lambda_sp", cfg.lambda_sp},
                {"tau", cfg.tau},
                {"xi_init", cfg.xi_init}};
}

FitConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
    FitConfig cfg;
    for (const auto& [key, value] : j.items()) {
        if (key == "em_iterations") cfg.em_iterations = value.get<int>();
        else if (key == "ridge") cfg.ridge = value.get<double>();
        else if (key == "blend_alpha") cfg.blend_alpha = value.get<double>();
        else if (key == "count_selfexciting_mix") cfg.count_selfexciting_mix = value.get<double>();
        else if (key == "enable_ir") cfg.enable_ir = value.get<bool>();
        else if (key == "enable_ri") cfg.enable_ri = value.get<bool>();
        else if (key == "enable_head") cfg.enable_head = value.get<bool>();
        else if (key == "enable_calendar") cfg.enable_calendar = value.get<bool>();
        else if (key == "enable_context") cfg.enable_context = value.get<bool>();
        else if (key == "head_uses_state") cfg.head_uses_state = value.get<bool>();
        else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
        else if (key == "latent_dim") cfg.latent_dim = value.get<int>();
        else if (key == "lambda_sp") cfg.lambda_sp = value.get<double>();
        else if (key == "tau") cfg.tau = value.get<double>();
        else if (key == "xi_init") cfg.xi_init = value.get<double>();
        else throw std::invalid_argument("unknown config key: " + key);
    }
    cfg.validate();
    return cfg;
}

nlohmann::json model_json(const CoupledModel& model) {
    return json{{"format", "cnhp-model"},
                {"version", library_version()},
                {"hawkes", hawkes_json(model.hawkes)},
                {"state", state_json(model.state)},
                {"gate_ir", gate_json(model.gate_ir)},
                {"gate_ri", gate_json(model.gate_ri)},
                {"head", head_json(model.head)},
                {"config", config_json(model.config)},
                {"x_mean", vector_json(model.x_mean)},
                {"x_std", vector_json(model.x_std)},
                {"train_months", model.train_months},
                {"objective_trace", model.objective_trace}};
}

CoupledModel model_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "cnhp-model") {
        throw std::invalid_argument("not a model document");
    }
    CoupledModel model;
    model.hawkes = hawkes_from_json(j.at("hawkes"));
    model.state = state_from_json(j.at("state"));
    model.gate_ir = gate_from_json(j.at("gate_ir"));
    model.gate_ri = gate_from_json(j.at("gate_ri"));
    model.head = head_from_json(j.at("head"));
    model.config = config_from_json(j.at("config"));
    model.x_mean = vector_from_json(j.at("x_mean"));
    model.x_std = vector_from_json(j.at("x_std"));
    model.train_months = j.at("train_months").get<int>();
    model.objective_trace = j.at("objective_trace").get<std::vector<double>>();
    return model;
}

nlohmann::json baseline_json(const BaselineModel& model) {
    json j{{"format", "cnhp-baseline"},
           {"version", library_version()},
           {"kind", baseline_name(model.kind)},
           {"train_months", model.train_months}};
    switch (model.kind) {
        case BaselineKind::kSelfExcitingHawkes:
        case BaselineKind::kExoHawkes:
            j["hawkes"] = hawkes_json(model.hawkes);
            break;
        case BaselineKind::kAr1:
            j["ar1"] = json{{"intercept", model.ar1.intercept}, {"slope", model.ar1.slope}};
            break;
        case BaselineKind::kFactorArx:
            j["head"] = head_json(model.head);
            break;
        case BaselineKind::kVarx:
            j["varx"] = json{{"intercept", model.varx.intercept},
                             {"phi", model.varx.phi},
                             {"beta", vector_json(model.varx.beta)},
                             {"x_mean", vector_json(model.varx.x_mean)},
                             {"x_std", vector_json(model.varx.x_std)}};
            break;
        case BaselineKind::kLocalLevel:
            j["level"] = json{{"q", model.level.q},
                              {"r", model.level.r},
                              {"loglik", model.level.loglik}};
            break;
        case BaselineKind::kCoupledV1:
            j["coupled"] = model_json(model.coupled);
            break;
    }
    return j;
}

BaselineModel baseline_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "cnhp-baseline") {
        throw std::invalid_argument("not a baseline document");
    }
    BaselineModel model;
    model.kind = baseline_from_name(j.at("kind").get<std::string>());
    model.train_months = j.at("train_months").get<int>();
    switch (model.kind) {
        case BaselineKind::kSelfExcitingHawkes:
        case BaselineKind::kExoHawkes:
            model.hawkes = hawkes_from_json(j.at("hawkes"));
            break;
        case BaselineKind::kAr1:
            model.ar1.intercept = j.at("ar1").at("intercept").get<double>();
            model.ar1.slope = j.at("ar1").at("slope").get<double>();
            break;
        case BaselineKind::kFactorArx:
            model.head = head_from_json(j.at("head"));
            break;
        case BaselineKind::kVarx: {
            const json& v = j.at("varx");
            model.varx.intercept = v.at("intercept").get<double>();
            model.varx.phi = v.at("phi").get<double>();
            model.varx.beta = vector_from_json(v.at("beta"));
            model.varx.x_mean = vector_from_json(v.at("x_mean"));
            model.varx.x_std = vector_from_json(v.at("x_std"));
            break;
        }
        case BaselineKind::kLocalLevel:
            model.level.q = j.at("level").at("q").get<double>();
            model.level.r = j.at("level").at("r").get<double>();
            model.level.loglik = j.at("level").at("loglik").get<double>();
            break;
        case BaselineKind::kCoupledV1:
            model.coupled = model_from_json(j.at("coupled"));
            break;
    }
    return model;
}

void save_json(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::runtime_error("invalid JSON in " + path + ": " + e.what());
    }
    return j;
}

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    const std::string bytes = buffer.str();
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    return std::string(hex);
}

std::string library_version() { return "1.0.0"; }

}  // namespace cnhp
