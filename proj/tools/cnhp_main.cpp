#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cnhp.h"
#include "json.hpp"

namespace {

using nlohmann::json;

struct Invocation {
    std::string subcommand;
    json options = json::object();
};

void add_string_opt(CLI::App* sub, json& options, const std::string& flag,
                    const std::string& key, const std::string& help, bool required = false) {
    auto* opt = sub->add_option_function<std::string>(
        flag, [&options, key](const std::string& v) { options[key] = v; }, help);
    if (required) opt->required();
}

void add_int_opt(CLI::App* sub, json& options, const std::string& flag, const std::string& key,
                 const std::string& help) {
    sub->add_option_function<std::int64_t>(
        flag, [&options, key](std::int64_t v) { options[key] = v; }, help);
}

void add_seed_opt(CLI::App* sub, json& options) {
    sub->add_option_function<std::uint64_t>(
        "--seed", [&options](std::uint64_t v) { options["seed"] = v; },
        "Override the configured random seed");
}

void add_config_opt(CLI::App* sub, json& options) {
    add_string_opt(sub, options, "--config", "config", "Path to a fit-config JSON document");
}

void add_panel_opts(CLI::App* sub, json& options) {
    add_string_opt(sub, options, "--counts", "counts", "Long-format monthly count CSV", true);
    add_string_opt(sub, options, "--trends", "trends", "Wide-format attention trends CSV", true);
    add_int_opt(sub, options, "--transform-months", "transform_months",
                "Months used to fit the response transform");
}

int run(const Invocation& invocation) {
    char* summary = nullptr;
    const cnhp_status status =
        cnhp_run(invocation.subcommand.c_str(), invocation.options.dump().c_str(), &summary);
    if (status == CNHP_OK) {
        if (summary != nullptr) std::printf("%s\n", summary);
        cnhp_string_free(summary);
        return 0;
    }
    const json error{{"error", cnhp_last_error()}, {"subcommand", invocation.subcommand}};
    std::fprintf(stderr, "%s\n", error.dump().c_str());
    cnhp_string_free(summary);
    return static_cast<int>(status);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coupled innovation-attention forecasting toolkit"};
    app.set_version_flag("--version", cnhp_version());
    app.require_subcommand(1);

    std::vector<Invocation> slots(9);

    {
        Invocation& inv = slots[0];
        inv.subcommand = "ingest";
        CLI::App* sub = app.add_subcommand("ingest", "Validate and normalize the input panels");
        add_string_opt(sub, inv.options, "--counts", "counts", "Long-format monthly count CSV",
                       true);
        add_string_opt(sub, inv.options, "--trends", "trends",
                       "Wide-format attention trends CSV");
        add_int_opt(sub, inv.options, "--transform-months", "transform_months",
                    "Months used to fit the response transform");
        add_string_opt(sub, inv.options, "--out", "out", "Output directory", true);
    }
    {
        Invocation& inv = slots[1];
        inv.subcommand = "fit";
        CLI::App* sub = app.add_subcommand("fit", "Fit the coupled model on the whole panel");
        add_panel_opts(sub, inv.options);
        add_string_opt(sub, inv.options, "--out", "out", "Output directory", true);
        add_config_opt(sub, inv.options);
        add_seed_opt(sub, inv.options);
    }
    {
        Invocation& inv = slots[2];
        inv.subcommand = "evaluate";
        CLI::App* sub =
            app.add_subcommand("evaluate", "Score the model and baselines on held-out months");
        add_panel_opts(sub, inv.options);
        add_string_opt(sub, inv.options, "--out", "out", "Output directory", true);
        add_config_opt(sub, inv.options);
        add_seed_opt(sub, inv.options);
        add_int_opt(sub, inv.options, "--eval-months", "eval_months",
                    "Length of the held-out window");
    }
    {
        Invocation& inv = slots[3];
        inv.subcommand = "ablate";
        CLI::App* sub = app.add_subcommand("ablate", "Compare the model against its variants");
        add_panel_opts(sub, inv.options);
        add_string_opt(sub, inv.options, "--out", "out", "Output directory", true);
        add_config_opt(sub, inv.options);
        add_seed_opt(sub, inv.options);
        add_int_opt(sub, inv.options, "--eval-months", "eval_months",
                    "Length of the held-out window");
    }
    {
        Invocation& inv = slots[4];
        inv.subcommand = "bootstrap";
        CLI::App* sub =
            app.add_subcommand("bootstrap", "Recompute intervals from a score-stream CSV");
        add_string_opt(sub, inv.options, "--streams", "streams", "Score-stream CSV", true);
        add_string_opt(sub, inv.options, "--out", "out", "Output directory", true);
        add_seed_opt(sub, inv.options);
        add_int_opt(sub, inv.options, "--block", "block", "Moving-block length");
        add_int_opt(sub, inv.options, "--resamples", "resamples", "Number of resamples");
    }
    {
        Invocation& inv = slots[5];
        inv.subcommand = "semisynth";
        CLI::App* sub =
            app.add_subcommand("semisynth", "Directional-recovery study on synthetic panels");
        add_string_opt(sub, inv.options, "--out", "out", "Output directory", true);
        add_config_opt(sub, inv.options);
        add_seed_opt(sub, inv.options);
        add_string_opt(sub, inv.options, "--scenario", "scenario",
                       "one_way, two_way, or null");
        add_int_opt(sub, inv.options, "--replications", "replications",
                    "Number of replications");
        add_int_opt(sub, inv.options, "--months", "months", "Months per synthetic panel");
        sub->add_flag_function(
            "--desk", [&inv](std::int64_t count) { inv.options["desk"] = count > 0; },
            "Small sweep for quick checks");
    }
    {
        Invocation& inv = slots[6];
        inv.subcommand = "regime";
        CLI::App* sub =
            app.add_subcommand("regime", "Rank candidate breaks against placebo months");
        add_panel_opts(sub, inv.options);
        add_string_opt(sub, inv.options, "--out", "out", "Output directory", true);
        add_config_opt(sub, inv.options);
        add_seed_opt(sub, inv.options);
        add_int_opt(sub, inv.options, "--year", "year", "Calendar year to scan");
        sub->add_option_function<std::vector<int>>(
               "--milestones",
               [&inv](const std::vector<int>& v) { inv.options["milestones"] = v; },
               "Milestone month numbers inside the scan year")
            ->delimiter(',');
    }
    {
        Invocation& inv = slots[7];
        inv.subcommand = "stability";
        CLI::App* sub = app.add_subcommand(
            "stability", "Sweep seeds, count thresholds, and rolling windows");
        add_panel_opts(sub, inv.options);
        add_string_opt(sub, inv.options, "--counts-low", "counts_low",
                       "Low-threshold count CSV", true);
        add_string_opt(sub, inv.options, "--out", "out", "Output directory", true);
        add_config_opt(sub, inv.options);
        add_seed_opt(sub, inv.options);
        add_int_opt(sub, inv.options, "--eval-months", "eval_months",
                    "Length of the held-out window");
    }
    {
        Invocation& inv = slots[8];
        inv.subcommand = "report";
        CLI::App* sub = app.add_subcommand("report", "Assemble regret tables from a run directory");
        add_string_opt(sub, inv.options, "--in", "in", "Directory holding metrics.csv", true);
        add_string_opt(sub, inv.options, "--out", "out", "Output directory", true);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    for (const Invocation& inv : slots) {
        if (app.get_subcommand(inv.subcommand)->parsed()) return run(inv);
    }
    std::fprintf(stderr, "%s\n", json{{"error", "no subcommand given"}}.dump().c_str());
    return 2;
}
