#include "core/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "core/baselines.hpp"
#include "core/evaluation.hpp"
#include "core/gates.hpp"
#include "core/regime.hpp"
#include "core/response_transform.hpp"
#include "core/rng.hpp"
#include "core/semisynthetic.hpp"
#include "core/serialize.hpp"
#include "core/trainer.hpp"

namespace cnhp {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kForecastWarmup = 3;  // response features need two context lags
constexpr int kEvalMonthsDefault = 12;
constexpr int kRollingTrainMonths = 84;
constexpr int kRollingStep = 6;
constexpr int kRollingWindows = 4;

// ---------------------------------------------------------------- formatting

std::string fmt(double v) {
    if (std::isnan(v)) return "";
    return json(v).dump();
}

std::string fmt_count(double v) {
    if (v == std::floor(v) && std::abs(v) < 9e15) {
        return std::to_string(static_cast<long long>(v));
    }
    return fmt(v);
}

std::string csv_join(const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i > 0) line += ',';
        line += cells[i];
    }
    line += '\n';
    return line;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path);
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    CsvTable table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream row(line);
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        if (line.back() == ',') cells.emplace_back();
        if (first) {
            table.header = cells;
            first = false;
        } else {
            cells.resize(table.header.size());
            table.rows.push_back(cells);
        }
    }
    if (first) throw std::runtime_error(path + ": empty CSV");
    return table;
}

// ------------------------------------------------------------------- options

class Opts {
  public:
    Opts(json options, std::set<std::string> allowed) : o_(std::move(options)) {
        if (o_.is_null()) o_ = json::object();
        if (!o_.is_object()) throw UsageError("options must be a JSON object");
        for (const auto& [key, value] : o_.items()) {
            (void)value;
            if (!allowed.count(key)) throw UsageError("unknown option: " + key);
        }
    }

    [[nodiscard]] bool has(const std::string& key) const { return o_.contains(key); }
    [[nodiscard]] const json& raw() const { return o_; }
    [[nodiscard]] json at(const std::string& key) const { return o_.at(key); }

    [[nodiscard]] std::string str(const std::string& key) const {
        if (!has(key)) throw UsageError("missing required option: " + key);
        return get<std::string>(key);
    }
    [[nodiscard]] std::string str_or(const std::string& key, const std::string& def) const {
        return has(key) ? get<std::string>(key) : def;
    }
    [[nodiscard]] int int_or(const std::string& key, int def) const {
        return has(key) ? get<int>(key) : def;
    }
    [[nodiscard]] std::uint64_t u64(const std::string& key) const {
        return get<std::uint64_t>(key);
    }
    [[nodiscard]] bool flag(const std::string& key) const {
        return has(key) && get<bool>(key);
    }

  private:
    template <typename T>
    [[nodiscard]] T get(const std::string& key) const {
        try {
            return o_.at(key).get<T>();
        } catch (const json::exception&) {
            throw UsageError("option '" + key + "' has the wrong type");
        }
    }

    json o_;
};

FitConfig load_config(const Opts& opts) {
    FitConfig cfg;
    if (opts.has("config")) {
        json j = opts.at("config");
        if (j.is_string()) j = load_json(j.get<std::string>());
        try {
            cfg = config_from_json(j);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }
    if (opts.has("seed")) cfg.seed = opts.u64("seed");
    return cfg;
}

std::string ensure_out_dir(const Opts& opts) {
    const std::string out = opts.str("out");
    fs::create_directories(out);
    return out;
}

// ------------------------------------------------------------------ manifest

std::string iso_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_manifest(const std::string& out_dir, const std::string& command, const json& options,
                    const FitConfig* cfg, std::uint64_t seed,
                    const std::map<std::string, std::string>& inputs,
                    const std::vector<std::string>& outputs) {
    json m{{"command", command},
           {"options", options},
           {"seed", seed},
           {"inputs", inputs},
           {"outputs", outputs},
           {"versions",
            {{"library", library_version()},
             {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                           std::to_string(EIGEN_MAJOR_VERSION) + "." +
                           std::to_string(EIGEN_MINOR_VERSION)},
             {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                   std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                   std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}},
           {"generated_at", iso_now()}};
    if (cfg != nullptr) m["config"] = config_json(*cfg);
    save_json(out_dir + "/manifest.json", m);
}

// ------------------------------------------------------------- input loading

struct LoadedInputs {
    PanelData data;
    bool has_transform = false;
    ResponseTransform transform;
    std::map<std::string, std::string> digests;
};

LoadedInputs load_inputs(const Opts& opts, int transform_months, bool trends_required) {
    LoadedInputs in;
    const std::string counts_path = opts.str("counts");
    in.data.counts = load_counts(counts_path);
    in.data.stream = synthesize_events(in.data.counts);
    in.digests[counts_path] = file_digest(counts_path);

    if (opts.has("trends")) {
        const std::string trends_path = opts.str("trends");
        const TrendsPanel trends = load_trends(trends_path);
        in.digests[trends_path] = file_digest(trends_path);
        if (trends.calendar.origin.year != in.data.counts.calendar.origin.year ||
            trends.calendar.origin.month != in.data.counts.calendar.origin.month) {
            throw UsageError("counts and trends start at different months");
        }
        if (trends.months() < in.data.counts.months()) {
            throw UsageError("trends panel is shorter than the counts panel");
        }
        const int tm = std::min(transform_months, in.data.counts.months());
        if (tm < 3) throw UsageError("transform window is too short");
        in.transform = fit_response_transform(trends, 0, tm - 1, 1);
        in.data.response =
            apply_response_transform(in.transform, trends, 0, in.data.counts.months() - 1);
        in.has_transform = true;
    } else if (trends_required) {
        throw UsageError("missing required option: trends");
    }
    in.data.validate();
    return in;
}

// -------------------------------------------------------------- score engine

void parallel_for(int n, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    const unsigned workers = static_cast<unsigned>(
        std::min<int>(n, static_cast<int>(std::max(1u, std::thread::hardware_concurrency()))));
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> cursor{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (int i = cursor.fetch_add(1); i < n; i = cursor.fetch_add(1)) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (std::thread& worker : pool) worker.join();
    for (const std::exception_ptr& err : errors) {
        if (err) std::rethrow_exception(err);
    }
}

Eigen::VectorXd realized_totals(const PanelData& data, int begin, int end) {
    return data.counts.counts.middleRows(begin, end - begin).rowwise().sum();
}

Eigen::VectorXd realized_response(const PanelData& data, int begin, int end) {
    return data.response.primary().segment(begin, end - begin);
}

struct StreamSet {
    std::string label;
    bool counts = false;
    bool response = false;
    ScoreStream count_pll;
    ScoreStream count_rmse;
    ScoreStream resp_rmse;
};

StreamSet score_forecasts(const std::string& label, const PanelData& full, int train_end,
                          int eval_end, const Eigen::VectorXd* count_fc,
                          const Eigen::VectorXd* resp_fc, double count_variance) {
    StreamSet set;
    set.label = label;
    if (count_fc != nullptr) {
        const Eigen::VectorXd realized = realized_totals(full, train_end, eval_end);
        set.count_pll =
            make_count_pll(label + "/count_pll", *count_fc, realized, train_end, count_variance);
        set.count_rmse = make_rmse(label + "/count_rmse", *count_fc, realized, train_end);
        set.counts = true;
    }
    if (resp_fc != nullptr) {
        const Eigen::VectorXd realized = realized_response(full, train_end, eval_end);
        set.resp_rmse = make_rmse(label + "/resp_rmse", *resp_fc, realized, train_end);
        set.response = true;
    }
    return set;
}

StreamSet eval_coupled_model(const std::string& label, const FitConfig& cfg,
                             const PanelData& full, int train_end, int eval_end,
                             CoupledModel* model_out) {
    const PanelData train = full.prefix(train_end);
    const CoupledModel model = fit_coupled(cfg, train);

    const ForecastSeries train_fc = forecast_coupled(model, train, kForecastWarmup, train_end);
    const double variance = forecast_residual_variance(
        train_fc.count_total, realized_totals(train, kForecastWarmup, train_end));
    const ForecastSeries eval_fc = forecast_coupled(model, full, train_end, eval_end);

    if (model_out != nullptr) *model_out = model;
    return score_forecasts(label, full, train_end, eval_end, &eval_fc.count_total,
                           &eval_fc.response, variance);
}

StreamSet eval_baseline_model(BaselineKind kind, const FitConfig& cfg, const PanelData& full,
                              int train_end, int eval_end) {
    const PanelData train = full.prefix(train_end);
    const BaselineModel model = fit_baseline(kind, train, cfg);
    const BaselineForecast eval_fc = forecast_baseline(model, full, train_end, eval_end);

    double variance = 0.0;
    const bool counts = baseline_forecasts_counts(kind);
    if (counts) {
        const BaselineForecast train_fc =
            forecast_baseline(model, train, kForecastWarmup, train_end);
        variance = forecast_residual_variance(
            train_fc.count_total, realized_totals(train, kForecastWarmup, train_end));
    }
    const bool response = baseline_forecasts_response(kind);
    return score_forecasts(baseline_name(kind), full, train_end, eval_end,
                           counts ? &eval_fc.count_total : nullptr,
                           response ? &eval_fc.response : nullptr, variance);
}

json structure_json(const CoupledModel& model) {
    const auto describe = [&](const GateSet& gate, bool enabled, bool component_cols) {
        json block{{"enabled", enabled}};
        if (!enabled || gate.entries() == 0) {
            block["density"] = 0.0;
            block["edges"] = json::array();
            return block;
        }
        const ActiveStructure active = active_structure(gate);
        block["density"] = active.density;
        block["cap"] = gate.density_cap;
        json edges = json::array();
        const auto& names = component_registry();
        for (int i = 0; i < active.mask.rows(); ++i) {
            for (int c = 0; c < active.mask.cols(); ++c) {
                if (active.mask(i, c) == 0) continue;
                const int comp = component_cols ? c : i;
                json edge{{"row", i}, {"col", c}};
                if (comp < static_cast<int>(names.size())) edge["component"] = names[comp];
                edges.push_back(edge);
            }
        }
        block["edges"] = edges;
        return block;
    };
    return json{{"i_to_r", describe(model.gate_ir, model.config.enable_ir, true)},
                {"r_to_i", describe(model.gate_ri, model.config.enable_ri, false)},
                {"train_months", model.train_months},
                {"objective_trace", model.objective_trace}};
}

void append_interval_cells(std::vector<std::string>& row, bool present,
                           const ConfidenceInterval& ci) {
    if (present) {
        row.push_back(fmt(ci.point));
        row.push_back(fmt(ci.lo));
        row.push_back(fmt(ci.hi));
    } else {
        row.insert(row.end(), 3, "");
    }
}

std::string streams_csv(const std::vector<StreamSet>& sets) {
    std::string text = csv_join({"label", "month", "value"});
    const auto emit = [&text](const ScoreStream& s) {
        for (std::size_t i = 0; i < s.months.size(); ++i) {
            text += csv_join({s.label, std::to_string(s.months[i]),
                              fmt(s.per_month[static_cast<Eigen::Index>(i)])});
        }
    };
    for (const StreamSet& set : sets) {
        if (set.counts) {
            emit(set.count_pll);
            emit(set.count_rmse);
        }
        if (set.response) emit(set.resp_rmse);
    }
    return text;
}

struct SplitSpec {
    int train_end = 0;
    int eval_end = 0;
};

SplitSpec resolve_split(const Opts& opts, int months) {
    SplitSpec split;
    const int eval_months = opts.int_or("eval_months", kEvalMonthsDefault);
    if (eval_months < 1) throw UsageError("eval_months must be positive");
    split.train_end = months - eval_months;
    split.eval_end = months;
    if (split.train_end < 24 + kForecastWarmup) {
        throw UsageError("panel too short: need 24 training months plus warmup before the "
                         "evaluation window");
    }
    return split;
}

// ------------------------------------------------------------------ commands

json run_ingest(const Opts& opts) {
    const std::string out = ensure_out_dir(opts);
    const LoadedInputs in = load_inputs(opts, opts.int_or("transform_months", 1 << 20), false);

    std::vector<std::string> outputs;
    {
        std::string text = csv_join({"month", "component", "count"});
        const CountPanel& counts = in.data.counts;
        for (int m = 0; m < counts.months(); ++m) {
            for (int j = 0; j < counts.dim(); ++j) {
                text += csv_join({counts.calendar.label(m), counts.components[j],
                                  fmt_count(counts.counts(m, j))});
            }
        }
        write_text(out + "/counts_normalized.csv", text);
        outputs.push_back("counts_normalized.csv");
    }
    json summary{{"months", in.data.months()},
                 {"components", in.data.counts.components},
                 {"events", in.data.stream.size()}};
    if (opts.has("trends")) {
        const TrendsPanel trends = load_trends(opts.str("trends"));
        std::vector<std::string> header{"month"};
        header.insert(header.end(), trends.terms.begin(), trends.terms.end());
        std::string text = csv_join(header);
        for (int m = 0; m < trends.months(); ++m) {
            std::vector<std::string> row{trends.calendar.label(m)};
            for (int t = 0; t < trends.term_count(); ++t) row.push_back(fmt(trends.values(m, t)));
            text += csv_join(row);
        }
        write_text(out + "/trends_normalized.csv", text);
        outputs.push_back("trends_normalized.csv");
        summary["terms"] = trends.terms.size();
    }
    write_manifest(out, "ingest", opts.raw(), nullptr, 0, in.digests, outputs);
    summary["out"] = out;
    return summary;
}

json run_fit(const Opts& opts) {
    const std::string out = ensure_out_dir(opts);
    const FitConfig cfg = load_config(opts);
    const LoadedInputs in = load_inputs(opts, opts.int_or("transform_months", 1 << 20), true);

    const CoupledModel model = fit_coupled(cfg, in.data);
    save_json(out + "/model.json", model_json(model));
    save_json(out + "/structure.json", structure_json(model));
    write_manifest(out, "fit", opts.raw(), &cfg, cfg.seed, in.digests,
                   {"model.json", "structure.json"});

    return json{{"out", out},
                {"train_months", model.train_months},
                {"objective_trace", model.objective_trace},
                {"structure", structure_json(model)}};
}

json run_evaluate(const Opts& opts) {
    const std::string out = ensure_out_dir(opts);
    const FitConfig cfg = load_config(opts);
    const int probe_months = load_counts(opts.str("counts")).months();
    const int eval_months = opts.int_or("eval_months", kEvalMonthsDefault);
    const int default_transform = probe_months - eval_months - kEvalMonthsDefault;
    const LoadedInputs in =
        load_inputs(opts, opts.int_or("transform_months", std::max(default_transform, 24)), true);
    const SplitSpec split = resolve_split(opts, in.data.months());

    struct ModelSpec {
        std::string label;
        bool coupled = false;
        BaselineKind kind = BaselineKind::kAr1;
    };
    std::vector<ModelSpec> specs{{"primary", true, BaselineKind::kAr1}};
    for (const BaselineKind kind : baseline_registry()) {
        specs.push_back({baseline_name(kind), false, kind});
    }

    std::vector<StreamSet> sets(specs.size());
    CoupledModel primary;
    parallel_for(static_cast<int>(specs.size()), [&](int i) {
        if (specs[i].coupled) {
            sets[i] = eval_coupled_model(specs[i].label, cfg, in.data, split.train_end,
                                         split.eval_end, &primary);
        } else {
            sets[i] = eval_baseline_model(specs[i].kind, cfg, in.data, split.train_end,
                                          split.eval_end);
        }
    });

    std::string metrics = csv_join({"model", "count_pll", "count_pll_lo", "count_pll_hi",
                                    "count_rmse", "count_rmse_lo", "count_rmse_hi", "resp_rmse",
                                    "resp_rmse_lo", "resp_rmse_hi"});
    json summary_rows = json::array();
    for (const StreamSet& set : sets) {
        std::vector<std::string> row{set.label};
        ConfidenceInterval pll, crmse, rrmse;
        if (set.counts) {
            pll = block_bootstrap_ci(set.count_pll, 3, 1000, cfg.seed);
            crmse = block_bootstrap_ci(set.count_rmse, 3, 1000, cfg.seed);
        }
        if (set.response) rrmse = block_bootstrap_ci(set.resp_rmse, 3, 1000, cfg.seed);
        append_interval_cells(row, set.counts, pll);
        append_interval_cells(row, set.counts, crmse);
        append_interval_cells(row, set.response, rrmse);
        metrics += csv_join(row);

        json jrow{{"model", set.label}};
        if (set.counts) {
            jrow["count_pll"] = json{{"point", pll.point}, {"lo", pll.lo}, {"hi", pll.hi}};
            jrow["count_rmse"] = json{{"point", crmse.point}, {"lo", crmse.lo}, {"hi", crmse.hi}};
        }
        if (set.response) {
            jrow["resp_rmse"] = json{{"point", rrmse.point}, {"lo", rrmse.lo}, {"hi", rrmse.hi}};
        }
        summary_rows.push_back(jrow);
    }

    write_text(out + "/metrics.csv", metrics);
    write_text(out + "/streams.csv", streams_csv(sets));
    save_json(out + "/structure.json", structure_json(primary));
    write_manifest(out, "evaluate", opts.raw(), &cfg, cfg.seed, in.digests,
                   {"metrics.csv", "streams.csv", "structure.json"});

    return json{{"out", out},
                {"train_end", split.train_end},
                {"eval_end", split.eval_end},
                {"rows", summary_rows},
                {"structure", structure_json(primary)}};
}

json run_ablate(const Opts& opts) {
    const std::string out = ensure_out_dir(opts);
    const FitConfig cfg = load_config(opts);
    const int probe_months = load_counts(opts.str("counts")).months();
    const int eval_months = opts.int_or("eval_months", kEvalMonthsDefault);
    const int default_transform = probe_months - eval_months - kEvalMonthsDefault;
    const LoadedInputs in =
        load_inputs(opts, opts.int_or("transform_months", std::max(default_transform, 24)), true);
    const SplitSpec split = resolve_split(opts, in.data.months());

    const std::vector<std::string>& variants = variant_registry();
    std::vector<StreamSet> sets(variants.size() + 1);
    parallel_for(static_cast<int>(variants.size()) + 1, [&](int i) {
        if (i == 0) {
            sets[0] = eval_coupled_model("primary", cfg, in.data, split.train_end, split.eval_end,
                                         nullptr);
        } else {
            const std::string& name = variants[static_cast<std::size_t>(i - 1)];
            sets[i] = eval_coupled_model(name, make_variant(cfg, name), in.data, split.train_end,
                                         split.eval_end, nullptr);
        }
    });

    std::string table = csv_join(
        {"comparison", "delta_count_ll", "delta_count_ll_lo", "delta_count_ll_hi",
         "delta_count_rmse", "delta_count_rmse_lo", "delta_count_rmse_hi", "delta_resp_rmse",
         "delta_resp_rmse_lo", "delta_resp_rmse_hi"});
    json summary_rows = json::array();
    for (std::size_t v = 0; v < variants.size(); ++v) {
        const StreamSet& variant = sets[v + 1];
        const ConfidenceInterval dll =
            paired_delta_ci(sets[0].count_pll, variant.count_pll, 3, 1000, cfg.seed);
        const ConfidenceInterval dcr =
            paired_delta_ci(variant.count_rmse, sets[0].count_rmse, 3, 1000, cfg.seed);
        const ConfidenceInterval drr =
            paired_delta_ci(variant.resp_rmse, sets[0].resp_rmse, 3, 1000, cfg.seed);
        std::vector<std::string> row{variants[v]};
        append_interval_cells(row, true, dll);
        append_interval_cells(row, true, dcr);
        append_interval_cells(row, true, drr);
        table += csv_join(row);
        summary_rows.push_back(json{{"comparison", variants[v]},
                                    {"delta_count_ll", dll.point},
                                    {"delta_count_rmse", dcr.point},
                                    {"delta_resp_rmse", drr.point}});
    }

    write_text(out + "/ablation.csv", table);
    write_text(out + "/streams.csv", streams_csv(sets));
    write_manifest(out, "ablate", opts.raw(), &cfg, cfg.seed, in.digests,
                   {"ablation.csv", "streams.csv"});
    return json{{"out", out}, {"rows", summary_rows}};
}

json run_bootstrap(const Opts& opts) {
    const std::string out = ensure_out_dir(opts);
    const std::string streams_path = opts.str("streams");
    const CsvTable raw = read_csv(streams_path);
    if (raw.header != std::vector<std::string>{"label", "month", "value"}) {
        throw UsageError("streams CSV must have header label,month,value");
    }
    const std::uint64_t seed = opts.has("seed") ? opts.u64("seed") : FitConfig{}.seed;

    std::vector<std::string> order;
    std::map<std::string, std::vector<std::pair<int, double>>> grouped;
    for (const auto& row : raw.rows) {
        if (!grouped.count(row[0])) order.push_back(row[0]);
        grouped[row[0]].emplace_back(std::stoi(row[1]), std::stod(row[2]));
    }

    std::string table = csv_join({"label", "metric", "point", "lo", "hi"});
    json summary_rows = json::array();
    for (const std::string& label : order) {
        const auto& entries = grouped[label];
        ScoreStream s;
        s.label = label;
        s.reduction = label.find("pll") != std::string::npos ? Reduction::kSum
                                                             : Reduction::kRootMean;
        s.per_month.resize(static_cast<Eigen::Index>(entries.size()));
        for (std::size_t i = 0; i < entries.size(); ++i) {
            s.months.push_back(entries[i].first);
            s.per_month[static_cast<Eigen::Index>(i)] = entries[i].second;
        }
        s.aggregate = reduce(s.reduction, s.per_month);
        const ConfidenceInterval ci =
            block_bootstrap_ci(s, opts.int_or("block", 3), opts.int_or("resamples", 1000), seed);
        const std::size_t slash = label.rfind('/');
        const std::string model = slash == std::string::npos ? label : label.substr(0, slash);
        const std::string metric = slash == std::string::npos ? "" : label.substr(slash + 1);
        table += csv_join({model, metric, fmt(ci.point), fmt(ci.lo), fmt(ci.hi)});
        summary_rows.push_back(json{
            {"label", label}, {"point", ci.point}, {"lo", ci.lo}, {"hi", ci.hi}});
    }
    write_text(out + "/bootstrap.csv", table);
    write_manifest(out, "bootstrap", opts.raw(), nullptr, seed,
                   {{streams_path, file_digest(streams_path)}}, {"bootstrap.csv"});
    return json{{"out", out}, {"rows", summary_rows}};
}

json run_semisynth(const Opts& opts) {
    const std::string out = ensure_out_dir(opts);
    ScenarioConfig scenario;
    scenario.scenario = scenario_from_name(opts.str_or("scenario", "one_way"));
    scenario.months = opts.int_or("months", scenario.months);
    int replications = opts.int_or("replications", 60);
    if (opts.flag("desk")) replications = opts.int_or("replications", 10);
    FitConfig cfg = load_config(opts);

    const std::vector<StudyRow> rows = run_semisynth_study(scenario, replications, cfg, cfg.seed);

    std::string table = csv_join({"replication", "model", "direction", "f1"});
    std::vector<std::pair<std::string, std::string>> pairs;
    for (const StudyRow& row : rows) {
        table += csv_join({std::to_string(row.replication), row.model, row.direction,
                           fmt(row.f1)});
        const auto pair = std::make_pair(row.model, row.direction);
        if (std::find(pairs.begin(), pairs.end(), pair) == pairs.end()) pairs.push_back(pair);
    }
    json means = json::object();
    for (const auto& [model, direction] : pairs) {
        means[model + "/" + direction] = study_mean_f1(rows, model, direction);
    }
    write_text(out + "/study.csv", table);
    save_json(out + "/summary.json",
              json{{"scenario", scenario_name(scenario.scenario)},
                   {"replications", replications}, {"mean_f1", means}});
    write_manifest(out, "semisynth", opts.raw(), &cfg, cfg.seed, {},
                   {"study.csv", "summary.json"});
    return json{{"out", out}, {"mean_f1", means}, {"replications", replications}};
}

json run_regime(const Opts& opts) {
    const std::string out = ensure_out_dir(opts);
    const FitConfig cfg = load_config(opts);
    const int probe_months = load_counts(opts.str("counts")).months();
    const LoadedInputs in =
        load_inputs(opts, opts.int_or("transform_months", std::max(probe_months - 24, 24)), true);

    const int year = opts.int_or("year", 2022);
    std::set<int> milestone_months{4, 8, 10, 11};
    if (opts.has("milestones")) {
        try {
            const auto list = opts.at("milestones").get<std::vector<int>>();
            milestone_months = std::set<int>(list.begin(), list.end());
        } catch (const json::exception&) {
            throw UsageError("option 'milestones' must be an array of month numbers");
        }
    }

    const Calendar& calendar = in.data.counts.calendar;
    std::vector<SplitCandidate> candidates;
    for (int mon = 1; mon <= 12; ++mon) {
        const YearMonth ym{year, mon};
        const int idx = months_between(calendar.origin, ym);
        if (idx < kSplitHalfMonths || idx + kSplitHalfMonths > in.data.months()) {
            throw UsageError("candidate " + format_year_month(ym) +
                             " does not fit a 24-month window");
        }
        candidates.push_back({idx,
                              milestone_months.count(mon) ? CandidateKind::kMilestone
                                                          : CandidateKind::kPlacebo,
                              format_year_month(ym)});
    }

    const RegimeTable result = placebo_rank(candidates, in.data, cfg);

    std::string table = csv_join({"rank", "month", "kind", "count_ll_gain", "resp_rmse_gain",
                                  "joint", "coupling_shift_norm"});
    json rows = json::array();
    for (const RegimeRow& row : result.rows) {
        table += csv_join({std::to_string(row.rank), calendar.label(row.month),
                           candidate_kind_name(row.kind), fmt(row.count_ll_gain),
                           fmt(row.resp_rmse_gain), fmt(row.joint),
                           fmt(row.coupling_shift_norm)});
        rows.push_back(json{{"rank", row.rank},
                            {"month", calendar.label(row.month)},
                            {"kind", candidate_kind_name(row.kind)},
                            {"joint", row.joint},
                            {"coupling_shift_norm", row.coupling_shift_norm}});
    }
    write_text(out + "/regime.csv", table);
    save_json(out + "/summary.json", json{{"milestone_mean", result.milestone_mean},
                                          {"placebo_mean", result.placebo_mean},
                                          {"rows", rows}});
    write_manifest(out, "regime", opts.raw(), &cfg, cfg.seed, in.digests,
                   {"regime.csv", "summary.json"});
    return json{{"out", out},
                {"milestone_mean", result.milestone_mean},
                {"placebo_mean", result.placebo_mean},
                {"top_month", result.rows.empty() ? "" : calendar.label(result.rows[0].month)}};
}

struct StabilityRow {
    std::string key;
    double count_pll = 0.0;
    double count_rmse = 0.0;
    double resp_rmse = 0.0;
    double ir_density = 0.0;
    double ri_density = 0.0;
};

StabilityRow stability_point(const std::string& key, const FitConfig& cfg, const PanelData& full,
                             int train_end, int eval_end) {
    CoupledModel model;
    const StreamSet set = eval_coupled_model("primary", cfg, full, train_end, eval_end, &model);
    StabilityRow row;
    row.key = key;
    row.count_pll = set.count_pll.aggregate;
    row.count_rmse = set.count_rmse.aggregate;
    row.resp_rmse = set.resp_rmse.aggregate;
    row.ir_density = model.config.enable_ir ? active_structure(model.gate_ir).density : 0.0;
    row.ri_density = model.config.enable_ri ? active_structure(model.gate_ri).density : 0.0;
    return row;
}

std::string stability_csv(const std::string& key_name, const std::vector<StabilityRow>& rows) {
    std::string text = csv_join(
        {key_name, "count_pll", "count_rmse", "resp_rmse", "ir_density", "ri_density"});
    for (const StabilityRow& row : rows) {
        text += csv_join({row.key, fmt(row.count_pll), fmt(row.count_rmse), fmt(row.resp_rmse),
                          fmt(row.ir_density), fmt(row.ri_density)});
    }
    return text;
}

json stability_rows_json(const std::vector<StabilityRow>& rows) {
    json out = json::array();
    for (const StabilityRow& row : rows) {
        out.push_back(json{{"key", row.key},
                           {"count_pll", row.count_pll},
                           {"count_rmse", row.count_rmse},
                           {"resp_rmse", row.resp_rmse},
                           {"ir_density", row.ir_density},
                           {"ri_density", row.ri_density}});
    }
    return out;
}

json run_stability(const Opts& opts) {
    const std::string out = ensure_out_dir(opts);
    const FitConfig cfg = load_config(opts);
    const int probe_months = load_counts(opts.str("counts")).months();
    const int eval_months = opts.int_or("eval_months", kEvalMonthsDefault);
    const int default_transform = probe_months - eval_months - kEvalMonthsDefault;
    const LoadedInputs balanced =
        load_inputs(opts, opts.int_or("transform_months", std::max(default_transform, 24)), true);
    const SplitSpec split = resolve_split(opts, balanced.data.months());

    const std::string low_path = opts.str("counts_low");
    PanelData low;
    low.counts = load_counts(low_path);
    low.stream = synthesize_events(low.counts);
    if (low.counts.months() != balanced.data.months()) {
        throw UsageError("counts_low covers a different month range than counts");
    }
    low.response = balanced.data.response;
    low.validate();
    std::map<std::string, std::string> digests = balanced.digests;
    digests[low_path] = file_digest(low_path);

    const int seed_count = 5;
    std::vector<StabilityRow> seed_rows(seed_count);
    std::vector<StabilityRow> threshold_rows(2);
    std::vector<StabilityRow> window_rows(kRollingWindows);

    const TrendsPanel trends = load_trends(opts.str("trends"));
    const int rolling_span = kRollingTrainMonths + kEvalMonthsDefault;
    if (balanced.data.months() < (kRollingWindows - 1) * kRollingStep + rolling_span) {
        throw UsageError("panel too short for the rolling-window sweep");
    }

    struct Task {
        std::function<void()> fn;
    };
    std::vector<Task> tasks;
    for (int i = 0; i < seed_count; ++i) {
        tasks.push_back({[&, i] {
            FitConfig seeded = cfg;
            seeded.seed = cfg.seed + static_cast<std::uint64_t>(i);
            seed_rows[i] = stability_point(std::to_string(seeded.seed), seeded, balanced.data,
                                           split.train_end, split.eval_end);
        }});
    }
    tasks.push_back({[&] {
        threshold_rows[0] = stability_point("balanced", cfg, balanced.data, split.train_end,
                                            split.eval_end);
    }});
    tasks.push_back({[&] {
        threshold_rows[1] =
            stability_point("low", cfg, low, split.train_end, split.eval_end);
    }});
    for (int w = 0; w < kRollingWindows; ++w) {
        tasks.push_back({[&, w] {
            const int start = w * kRollingStep;
            PanelData window = balanced.data.window(start, start + rolling_span);
            const ResponseTransform t =
                fit_response_transform(trends, start, start + kRollingTrainMonths - 1, 1);
            window.response =
                apply_response_transform(t, trends, start, start + rolling_span - 1);
            window.validate();
            const std::string label = balanced.data.counts.calendar.label(start) + "--" +
                                      balanced.data.counts.calendar.label(
                                          start + kRollingTrainMonths - 1);
            window_rows[w] = stability_point(label, cfg, window, kRollingTrainMonths,
                                             rolling_span);
        }});
    }
    parallel_for(static_cast<int>(tasks.size()), [&](int i) { tasks[i].fn(); });

    write_text(out + "/seeds.csv", stability_csv("seed", seed_rows));
    write_text(out + "/thresholds.csv", stability_csv("threshold", threshold_rows));
    write_text(out + "/windows.csv", stability_csv("window", window_rows));
    write_manifest(out, "stability", opts.raw(), &cfg, cfg.seed, digests,
                   {"seeds.csv", "thresholds.csv", "windows.csv"});

    return json{{"out", out},
                {"seeds", stability_rows_json(seed_rows)},
                {"thresholds", stability_rows_json(threshold_rows)},
                {"windows", stability_rows_json(window_rows)}};
}

json csv_as_json(const CsvTable& table) {
    json rows = json::array();
    for (const auto& row : table.rows) {
        json obj = json::object();
        for (std::size_t c = 0; c < table.header.size(); ++c) obj[table.header[c]] = row[c];
        rows.push_back(obj);
    }
    return rows;
}

json run_report(const Opts& opts) {
    const std::string out = ensure_out_dir(opts);
    const std::string in_dir = opts.str("in");
    const std::string metrics_path = in_dir + "/metrics.csv";
    const CsvTable metrics = read_csv(metrics_path);
    std::map<std::string, std::string> digests{{metrics_path, file_digest(metrics_path)}};

    const std::vector<std::string> metric_names{"count_pll", "count_rmse", "resp_rmse"};
    std::string regret_csv = csv_join({"model", "metric", "value", "regret"});
    json regret_rows = json::array();
    for (const std::string& metric : metric_names) {
        const auto it = std::find(metrics.header.begin(), metrics.header.end(), metric);
        if (it == metrics.header.end()) continue;
        const std::size_t col = static_cast<std::size_t>(it - metrics.header.begin());
        std::vector<std::pair<std::string, double>> values;
        for (const auto& row : metrics.rows) {
            if (row[col].empty()) continue;
            values.emplace_back(row[0], std::stod(row[col]));
        }
        if (values.empty()) continue;
        for (const RegretRow& r : regret_table(metric, values)) {
            regret_csv += csv_join({r.label, metric, fmt(r.value), fmt(r.regret)});
            regret_rows.push_back(json{{"model", r.label},
                                       {"metric", metric},
                                       {"value", r.value},
                                       {"regret", r.regret}});
        }
    }
    write_text(out + "/regret.csv", regret_csv);

    json report{{"metrics", csv_as_json(metrics)}, {"regret", regret_rows}};
    for (const std::string extra :
         {"ablation.csv", "regime.csv", "seeds.csv", "thresholds.csv", "windows.csv",
          "study.csv"}) {
        const std::string path = in_dir + "/" + extra;
        if (fs::exists(path)) {
            report[extra.substr(0, extra.size() - 4)] = csv_as_json(read_csv(path));
            digests[path] = file_digest(path);
        }
    }
    save_json(out + "/report.json", report);
    write_manifest(out, "report", opts.raw(), nullptr, 0, digests,
                   {"regret.csv", "report.json"});
    return json{{"out", out}, {"regret", regret_rows}};
}

const std::set<std::string>& allowed_options(const std::string& subcommand) {
    static const std::map<std::string, std::set<std::string>> allowed{
        {"ingest", {"counts", "trends", "out", "transform_months"}},
        {"fit", {"counts", "trends", "out", "config", "seed", "transform_months"}},
        {"evaluate",
         {"counts", "trends", "out", "config", "seed", "eval_months", "transform_months"}},
        {"ablate",
         {"counts", "trends", "out", "config", "seed", "eval_months", "transform_months"}},
        {"bootstrap", {"streams", "out", "seed", "block", "resamples"}},
        {"semisynth",
         {"out", "config", "seed", "scenario", "replications", "desk", "months"}},
        {"regime",
         {"counts", "trends", "out", "config", "seed", "year", "milestones",
          "transform_months"}},
        {"stability",
         {"counts", "counts_low", "trends", "out", "config", "seed", "eval_months",
          "transform_months"}},
        {"report", {"in", "out"}},
    };
    const auto it = allowed.find(subcommand);
    if (it == allowed.end()) throw UsageError("unknown subcommand: " + subcommand);
    return it->second;
}

}  // namespace

const std::vector<std::string>& subcommand_registry() {
    static const std::vector<std::string> commands{"ingest",    "fit",       "evaluate",
                                                   "ablate",    "bootstrap", "semisynth",
                                                   "regime",    "stability", "report"};
    return commands;
}

std::vector<std::string> label_registry() {
    std::vector<std::string> labels;
    const auto add = [&labels](const std::string& model, bool counts, bool response) {
        if (counts) {
            labels.push_back(model + "/count_pll");
            labels.push_back(model + "/count_rmse");
        }
        if (response) labels.push_back(model + "/resp_rmse");
    };
    add("primary", true, true);
    for (const BaselineKind kind : baseline_registry()) {
        add(baseline_name(kind), baseline_forecasts_counts(kind),
            baseline_forecasts_response(kind));
    }
    for (const std::string& variant : variant_registry()) {
        add(variant, true, true);
        labels.push_back("primary/count_pll|" + variant + "/count_pll");
        labels.push_back(variant + "/count_rmse|primary/count_rmse");
        labels.push_back(variant + "/resp_rmse|primary/resp_rmse");
    }
    return labels;
}

nlohmann::json run_command(const std::string& subcommand, const nlohmann::json& options) {
    const Opts opts(options, allowed_options(subcommand));
    if (subcommand == "ingest") return run_ingest(opts);
    if (subcommand == "fit") return run_fit(opts);
    if (subcommand == "evaluate") return run_evaluate(opts);
    if (subcommand == "ablate") return run_ablate(opts);
    if (subcommand == "bootstrap") return run_bootstrap(opts);
    if (subcommand == "semisynth") return run_semisynth(opts);
    if (subcommand == "regime") return run_regime(opts);
    if (subcommand == "stability") return run_stability(opts);
    if (subcommand == "report") return run_report(opts);
    throw UsageError("unknown subcommand: " + subcommand);
}

}  // namespace cnhp
