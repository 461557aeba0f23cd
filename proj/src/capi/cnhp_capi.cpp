#include "cnhp.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <string>

#include "core/panel.hpp"
#include "core/response_transform.hpp"
#include "core/runner.hpp"
#include "core/serialize.hpp"
#include "core/trainer.hpp"
#include "json.hpp"

namespace {

using nlohmann::json;

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out != nullptr) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

cnhp_status fail(cnhp_status code, const std::string& message) {
    g_last_error = message;
    return code;
}

cnhp_status emit(char** out, const json& value) {
    if (out != nullptr) {
        *out = dup_string(value.dump());
        if (*out == nullptr) return fail(CNHP_ERR_RUNTIME, "out of memory");
    }
    g_last_error.clear();
    return CNHP_OK;
}

template <typename Fn>
cnhp_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const cnhp::UsageError& e) {
        return fail(CNHP_ERR_USAGE, e.what());
    } catch (const std::exception& e) {
        return fail(CNHP_ERR_RUNTIME, e.what());
    } catch (...) {
        return fail(CNHP_ERR_RUNTIME, "unknown error");
    }
}

json require_json(const char* text, const char* what) {
    if (text == nullptr || *text == '\0') return json::object();
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw cnhp::UsageError(std::string(what) + " is not valid JSON: " + e.what());
    }
}

json number_or_null(double v) {
    if (std::isnan(v)) return nullptr;
    return v;
}

}  // namespace

struct cnhp_model {
    cnhp::CoupledModel model;
};

extern "C" {

const char* cnhp_version(void) {
    static const std::string version = cnhp::library_version();
    return version.c_str();
}

const char* cnhp_last_error(void) { return g_last_error.c_str(); }

void cnhp_string_free(char* s) { std::free(s); }

cnhp_status cnhp_run(const char* subcommand, const char* options_json,
                     char** summary_json_out) {
    if (summary_json_out != nullptr) *summary_json_out = nullptr;
    if (subcommand == nullptr) return fail(CNHP_ERR_USAGE, "subcommand is null");
    return guarded([&]() -> cnhp_status {
        const json options = require_json(options_json, "options");
        return emit(summary_json_out, cnhp::run_command(subcommand, options));
    });
}

cnhp_status cnhp_subcommands(char** list_out) {
    if (list_out == nullptr) return fail(CNHP_ERR_USAGE, "list_out is null");
    *list_out = nullptr;
    return guarded([&]() -> cnhp_status {
        std::string text;
        for (const std::string& name : cnhp::subcommand_registry()) {
            if (!text.empty()) text += '\n';
            text += name;
        }
        *list_out = dup_string(text);
        if (*list_out == nullptr) return fail(CNHP_ERR_RUNTIME, "out of memory");
        g_last_error.clear();
        return CNHP_OK;
    });
}

cnhp_status cnhp_model_load(const char* path, cnhp_model** model_out) {
    if (model_out == nullptr) return fail(CNHP_ERR_USAGE, "model_out is null");
    *model_out = nullptr;
    if (path == nullptr) return fail(CNHP_ERR_USAGE, "path is null");
    return guarded([&]() -> cnhp_status {
        auto handle = new cnhp_model{cnhp::model_from_json(cnhp::load_json(path))};
        *model_out = handle;
        g_last_error.clear();
        return CNHP_OK;
    });
}

cnhp_status cnhp_model_info(const cnhp_model* model, char** info_json_out) {
    if (info_json_out != nullptr) *info_json_out = nullptr;
    if (model == nullptr) return fail(CNHP_ERR_USAGE, "model is null");
    return guarded([&]() -> cnhp_status {
        const cnhp::CoupledModel& m = model->model;
        json info{{"version", cnhp::library_version()},
                  {"train_months", m.train_months},
                  {"config", cnhp::config_json(m.config)},
                  {"objective_trace", m.objective_trace},
                  {"components", static_cast<int>(m.hawkes.mu.size())},
                  {"latent_dim", m.config.latent_dim}};
        if (m.config.enable_ir) {
            info["ir_density"] = cnhp::active_structure(m.gate_ir).density;
        }
        if (m.config.enable_ri) {
            info["ri_density"] = cnhp::active_structure(m.gate_ri).density;
        }
        return emit(info_json_out, info);
    });
}

cnhp_status cnhp_model_forecast(const cnhp_model* model, const char* counts_csv,
                                const char* trends_csv, int transform_months, int begin,
                                int end, char** forecast_json_out) {
    if (forecast_json_out != nullptr) *forecast_json_out = nullptr;
    if (model == nullptr) return fail(CNHP_ERR_USAGE, "model is null");
    if (counts_csv == nullptr || trends_csv == nullptr) {
        return fail(CNHP_ERR_USAGE, "counts_csv and trends_csv are required");
    }
    return guarded([&]() -> cnhp_status {
        cnhp::PanelData data;
        data.counts = cnhp::load_counts(counts_csv);
        data.stream = cnhp::synthesize_events(data.counts);

        const cnhp::TrendsPanel trends = cnhp::load_trends(trends_csv);
        if (trends.calendar.origin.year != data.counts.calendar.origin.year ||
            trends.calendar.origin.month != data.counts.calendar.origin.month) {
            throw cnhp::UsageError("counts and trends start at different months");
        }
        if (trends.months() < data.counts.months()) {
            throw cnhp::UsageError("trends panel is shorter than the counts panel");
        }
        int tm = transform_months <= 0 ? data.counts.months() : transform_months;
        tm = std::min(tm, data.counts.months());
        if (tm < 3) throw cnhp::UsageError("transform window is too short");
        const cnhp::ResponseTransform transform = cnhp::fit_response_transform(trends, 0, tm - 1, 1);
        data.response = cnhp::apply_response_transform(transform, trends, 0,
                                                       data.counts.months() - 1);
        data.validate();

        if (begin < 1 || end <= begin || end > data.months()) {
            throw cnhp::UsageError("forecast window must satisfy 1 <= begin < end <= months");
        }
        const cnhp::ForecastSeries fc = cnhp::forecast_coupled(model->model, data, begin, end);
        json counts = json::array();
        json response = json::array();
        for (Eigen::Index i = 0; i < fc.count_total.size(); ++i) {
            counts.push_back(number_or_null(fc.count_total[i]));
            response.push_back(number_or_null(fc.response[i]));
        }
        return emit(forecast_json_out,
                    json{{"begin", begin}, {"count_total", counts}, {"response", response}});
    });
}

void cnhp_model_free(cnhp_model* model) { delete model; }

}  // extern "C"
