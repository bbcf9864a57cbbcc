// Command-line front end: run experiments, compare two runs, design a reward.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "llmrl/errors.hpp"
#include "llmrl/harness/config.hpp"
#include "llmrl/harness/runner.hpp"
#include "llmrl/harness/summary.hpp"

namespace fs = std::filesystem;
using namespace llmrl;
using namespace llmrl::harness;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitBackend = 3;

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size()) throw UsageError("'" + item + "' is not a seed");
        seeds.push_back(v);
    }
    if (seeds.empty()) throw UsageError("--seeds needs at least one value");
    return seeds;
}

ExperimentConfig load_with_overrides(const std::string& path, const std::string& seeds, const std::string& backend,
                                     const std::string& out, int workers) {
    auto config = load_config(path);
    if (!seeds.empty()) config.seeds = parse_seeds(seeds);
    if (!backend.empty()) config.backend.kind = backend;
    if (!out.empty()) config.output_dir = out;
    if (workers > 0) config.workers = workers;
    config.check();
    return config;
}

int cmd_run(const ExperimentConfig& config, bool force) {
    const auto records = run_experiment(config, force);
    std::printf("%s: %zu seed(s), %d episodes, metric %s over the last %d episodes\n", config.id.c_str(),
                records.size(), config.episodes, config.effective_metric().c_str(), config.effective_window());
    for (const auto& r : records) {
        std::printf("  seed %llu  final %.4f (std %.4f)  interventions %zu  rollbacks %zu  %.1fs\n",
                    static_cast<unsigned long long>(r.seed), r.summary.final_mean, r.summary.final_std,
                    r.summary.interventions, r.summary.rollbacks, r.summary.wall_clock_seconds);
    }
    std::printf("output: %s\n", (fs::path(config.output_dir) / config.id).string().c_str());
    return 0;
}

nlohmann::json run_config_json(const std::string& run_dir) {
    const auto path = fs::path(run_dir) / "config.json";
    if (!fs::exists(path)) return nullptr;
    std::ifstream in(path);
    return nlohmann::json::parse(in);
}

int cmd_compare(const std::string& dir_a, const std::string& dir_b, int window, std::string metric,
                const std::string& out) {
    const auto a = load_run(dir_a);
    const auto b = load_run(dir_b);
    const auto cfg = run_config_json(dir_a);
    std::optional<ExperimentConfig> config;
    if (!cfg.is_null()) config = ExperimentConfig::from_json(cfg);
    if (metric.empty()) metric = config ? config->effective_metric() : "return";
    if (window <= 0) {
        if (config) {
            window = config->effective_window();
        } else {
            const int episodes = static_cast<int>(a.front().rows.size());
            window = std::min(episodes, std::max(10, episodes / 10));
        }
    }
    const bool lower = metric == "energy";
    const auto c = summarize(a, b, window, metric, lower);
    std::printf("metric %s (%s is better), final window %d episodes\n", metric.c_str(), lower ? "lower" : "higher",
                window);
    std::printf("  A %-40s mean %.4f  std %.4f\n", dir_a.c_str(), c.a.mean, c.a.std);
    std::printf("  B %-40s mean %.4f  std %.4f\n", dir_b.c_str(), c.b.mean, c.b.std);
    std::printf("  relative improvement of A over B: %+.2f%%\n", 100.0 * c.relative_improvement);
    if (c.p_value) {
        std::printf("  paired sign test: %d wins, %d losses, p = %.4f\n", c.wins, c.losses, *c.p_value);
    } else {
        std::printf("  paired sign test: n/a (single seed)\n");
    }
    if (!out.empty()) {
        fs::create_directories(out);
        write_comparison_csv(c, (fs::path(out) / "comparison.csv").string());
        write_curve_csv(a, b, metric, (fs::path(out) / "curves.csv").string());
        std::ofstream(fs::path(out) / "comparison.json") << c.to_json().dump(2) << '\n';
        std::printf("wrote %s\n", out.c_str());
    }
    return 0;
}

int cmd_design(const ExperimentConfig& config, const std::string& ledger) {
    const std::string ledger_path =
        ledger.empty() ? (fs::path(config.output_dir) / (config.id + "_candidates.jsonl")).string() : ledger;
    if (auto parent = fs::path(ledger_path).parent_path(); !parent.empty()) fs::create_directories(parent);
    try {
        const auto result = design_for(config, ledger_path, "");
        for (const auto& c : result.candidates) {
            std::printf("candidate %d: %s\n", c.index, c.source.empty() ? "(no expression)" : c.source.c_str());
            if (c.lipschitz) std::printf("  lipschitz %.6g\n", c.lipschitz->value);
            for (const auto& v : c.violation_messages()) std::printf("  rejected: %s\n", v.c_str());
        }
        std::printf("selected candidate %d: %s\n", result.selected.index, result.selected.source.c_str());
    } catch (const DesignError& e) {
        for (const auto& v : e.violations()) std::fprintf(stderr, "  %s\n", v.c_str());
        std::fprintf(stderr, "ledger: %s\n", ledger_path.c_str());
        throw;
    }
    std::printf("ledger: %s\n", ledger_path.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"LLM-assisted reinforcement learning experiments"};
    app.require_subcommand(1);
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");

    std::string config_path, seeds, backend, out, ledger;
    int workers = 0;
    bool force = false;
    auto* run = app.add_subcommand("run", "train every seed of an experiment");
    run->add_option("--config", config_path, "experiment JSON")->required();
    run->add_option("--seeds", seeds, "comma-separated seed list overriding the config");
    run->add_option("--backend", backend, "mock or http")->check(CLI::IsMember({"mock", "http"}));
    run->add_option("--out", out, "output directory overriding the config");
    run->add_option("--workers", workers, "parallel seed workers");
    run->add_flag("--force", force, "replace an existing run with the same id");

    std::string dir_a, dir_b, metric;
    int window = 0;
    auto* compare = app.add_subcommand("compare", "compare the final-window metric of two runs");
    compare->add_option("--a", dir_a, "run directory of arm A")->required();
    compare->add_option("--b", dir_b, "run directory of arm B")->required();
    compare->add_option("--window", window, "final-window length (default from arm A's config)");
    compare->add_option("--metric", metric, "energy, return or delivered");
    compare->add_option("--out", out, "directory for CSV and JSON outputs");

    auto* design = app.add_subcommand("design-reward", "run the reward designer and write its candidate ledger");
    design->add_option("--config", config_path, "experiment JSON")->required();
    design->add_option("--backend", backend, "mock or http")->check(CLI::IsMember({"mock", "http"}));
    design->add_option("--ledger", ledger, "ledger path (default <output_dir>/<id>_candidates.jsonl)");

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(spdlog::level::from_str(log_level));

    try {
        if (*run) return cmd_run(load_with_overrides(config_path, seeds, backend, out, workers), force);
        if (*compare) return cmd_compare(dir_a, dir_b, window, metric, out);
        if (*design) return cmd_design(load_with_overrides(config_path, "", backend, "", 0), ledger);
    } catch (const BackendError& e) {
        std::fprintf(stderr, "backend error: %s\n", e.what());
        return kExitBackend;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitValidation;
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return kExitValidation;
    } catch (const DesignError& e) {
        std::fprintf(stderr, "design error: %s\n", e.what());
        return kExitValidation;
    } catch (const UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kExitValidation;
    } catch (const SchemaError& e) {
        std::fprintf(stderr, "schema error: %s\n", e.what());
        return kExitValidation;
    } catch (const ExtractionError& e) {
        std::fprintf(stderr, "model output error: %s\n", e.what());
        return kExitValidation;
    } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "malformed JSON: %s\n", e.what());
        return kExitValidation;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
