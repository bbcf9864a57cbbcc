#include "llmrl/harness/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "llmrl/agents/factory.hpp"
#include "llmrl/env/sagin.hpp"
#include "llmrl/env/uav.hpp"
#include "llmrl/errors.hpp"

namespace llmrl::harness {
namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

template <typename T>
void get(const nlohmann::json& j, const char* key, T& field) {
    if (j.contains(key)) j.at(key).get_to(field);
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
    }
}

BackendSpec backend_from_json(const nlohmann::json& j) {
    reject_unknown(j, {"kind", "designer", "guider", "probe", "perceiver", "http", "model"}, "backend");
    BackendSpec b;
    get(j, "kind", b.kind);
    get(j, "model", b.model);
    if (j.contains("designer")) b.designer_script = j.at("designer");
    if (j.contains("guider")) b.guider_script = j.at("guider");
    if (j.contains("probe")) b.probe_script = j.at("probe");
    if (j.contains("perceiver")) b.perceiver_script = j.at("perceiver");
    if (j.contains("http")) {
        reject_unknown(j.at("http"),
                       {"base_url", "token_env", "max_retries", "initial_backoff_seconds", "backoff_multiplier",
                        "max_backoff_seconds"},
                       "backend.http");
        b.http = llm::HttpBackendConfig::from_json(j.at("http"));
    }
    return b;
}

nlohmann::json backend_to_json(const BackendSpec& b) {
    nlohmann::json j{{"kind", b.kind},
                     {"model", b.model},
                     {"http",
                      {{"base_url", b.http.base_url},
                       {"token_env", b.http.token_env},
                       {"max_retries", b.http.max_retries},
                       {"initial_backoff_seconds", b.http.initial_backoff_seconds},
                       {"backoff_multiplier", b.http.backoff_multiplier},
                       {"max_backoff_seconds", b.http.max_backoff_seconds}}}};
    if (!b.designer_script.is_null()) j["designer"] = b.designer_script;
    if (!b.guider_script.is_null()) j["guider"] = b.guider_script;
    if (!b.probe_script.is_null()) j["probe"] = b.probe_script;
    if (!b.perceiver_script.is_null()) j["perceiver"] = b.perceiver_script;
    return j;
}

}  // namespace

agents::AgentConfig agent_config_from_json(const nlohmann::json& j) {
    reject_unknown(j,
                   {"actor_lr", "critic_lr", "learning_rate", "gamma", "tau", "batch_size", "buffer_capacity",
                    "reward_scale", "noise_scale", "policy_delay", "target_noise", "target_noise_clip", "n_critics",
                    "n_quantiles", "k_drop_per_critic", "entropy_alpha", "epsilon", "hidden"},
                   "agent");
    agents::AgentConfig c;
    if (j.contains("learning_rate")) {
        c.actor_lr = c.critic_lr = j.at("learning_rate").get<double>();
    }
    get(j, "actor_lr", c.actor_lr);
    get(j, "critic_lr", c.critic_lr);
    get(j, "gamma", c.gamma);
    get(j, "tau", c.tau);
    get(j, "batch_size", c.batch_size);
    get(j, "buffer_capacity", c.buffer_capacity);
    get(j, "reward_scale", c.reward_scale);
    get(j, "noise_scale", c.noise_scale);
    get(j, "policy_delay", c.policy_delay);
    get(j, "target_noise", c.target_noise);
    get(j, "target_noise_clip", c.target_noise_clip);
    get(j, "n_critics", c.n_critics);
    get(j, "n_quantiles", c.n_quantiles);
    get(j, "k_drop_per_critic", c.k_drop_per_critic);
    get(j, "entropy_alpha", c.entropy_alpha);
    get(j, "epsilon", c.epsilon);
    get(j, "hidden", c.hidden);
    c.check();
    return c;
}

nlohmann::json agent_config_to_json(const agents::AgentConfig& c) {
    return {{"actor_lr", c.actor_lr},
            {"critic_lr", c.critic_lr},
            {"gamma", c.gamma},
            {"tau", c.tau},
            {"batch_size", c.batch_size},
            {"buffer_capacity", c.buffer_capacity},
            {"reward_scale", c.reward_scale},
            {"noise_scale", c.noise_scale},
            {"policy_delay", c.policy_delay},
            {"target_noise", c.target_noise},
            {"target_noise_clip", c.target_noise_clip},
            {"n_critics", c.n_critics},
            {"n_quantiles", c.n_quantiles},
            {"k_drop_per_critic", c.k_drop_per_critic},
            {"entropy_alpha", c.entropy_alpha},
            {"epsilon", c.epsilon},
            {"hidden", c.hidden}};
}

void ExperimentConfig::check() const {
    if (id.empty()) throw ConfigError("experiment id must be non-empty");
    if (id.find('/') != std::string::npos || id == "." || id == "..") throw ConfigError("experiment id must be a plain name");
    if (environment != "uav" && environment != "sagin" && environment != "chain") {
        throw ConfigError("unknown environment '" + environment + "'");
    }
    if (!agents::is_known_agent(algorithm)) throw ConfigError("unknown algorithm '" + algorithm + "'");
    if (environment == "chain" && algorithm != "dqn") throw ConfigError("the chain environment needs the dqn agent");
    if (environment != "chain" && algorithm == "dqn") throw ConfigError("dqn needs a discrete environment");
    agent.check();
    if (reward_mode != "manual" && reward_mode != "scripted-enriched" && reward_mode != "llm-designed") {
        throw ConfigError("unknown reward mode '" + reward_mode + "'");
    }
    if (reward_mode == "scripted-enriched" && environment != "uav") {
        throw ConfigError("the scripted enriched reward is defined for the uav environment only");
    }
    if (guidance_mode != "off" && guidance_mode != "scripted" && guidance_mode != "llm") {
        throw ConfigError("unknown guidance mode '" + guidance_mode + "'");
    }
    guidance.check();
    if (backend.kind != "mock" && backend.kind != "http") throw ConfigError("backend kind must be mock or http");
    if (backend.kind == "mock") {
        if (guidance_mode == "llm" && backend.guider_script.is_null()) {
            throw ConfigError("llm guidance with the mock backend needs a guider script");
        }
        if (reward_mode == "llm-designed" && backend.designer_script.is_null()) {
            throw ConfigError("llm-designed rewards with the mock backend need a designer script");
        }
    }
    if (design.n_candidates < 1) throw ConfigError("design.n_candidates must be at least 1");
    if (design.probe_count < 2) throw ConfigError("design.probe_count must be at least 2");
    if (seeds.empty()) throw ConfigError("at least one seed is required");
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
        throw ConfigError("seeds must be distinct");
    }
    if (episodes <= 0) throw ConfigError("episodes must be positive");
    if (!(epsilon0 >= 0.0)) throw ConfigError("epsilon0 must be non-negative");
    if (!(exploration_decay > 0.0 && exploration_decay <= 1.0)) throw ConfigError("exploration_decay must lie in (0, 1]");
    if (train_every <= 0) throw ConfigError("train_every must be positive");
    if (final_window < 0 || final_window > episodes) throw ConfigError("final_window must lie in [0, episodes]");
    const auto m = effective_metric();
    if (m != "energy" && m != "return" && m != "delivered") throw ConfigError("unknown metric '" + m + "'");
    if (m == "energy" && environment != "uav") throw ConfigError("the energy metric needs the uav environment");
    if (m == "delivered" && environment != "sagin") throw ConfigError("the delivered metric needs the sagin environment");
    if (workers <= 0) throw ConfigError("workers must be positive");
    if (output_dir.empty()) throw ConfigError("output_dir must be non-empty");
}

std::string ExperimentConfig::effective_metric() const {
    if (!metric.empty()) return metric;
    return environment == "uav" ? "energy" : "return";
}

bool ExperimentConfig::metric_lower_is_better() const { return effective_metric() == "energy"; }

int ExperimentConfig::effective_window() const {
    if (final_window > 0) return final_window;
    return std::min(episodes, std::max(10, episodes / 10));
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j, const std::string& base_dir) {
    reject_unknown(j,
                   {"id", "environment", "scenario", "scenario_path", "algorithm", "agent", "reward_mode", "w", "w1",
                    "w2", "guidance_mode", "guidance", "scripted_guidance", "hyperparameter_ranges", "design",
                    "backend", "seeds", "episodes", "epsilon0", "exploration_decay", "train_every", "final_window",
                    "metric", "output_dir", "workers"},
                   "experiment config");
    ExperimentConfig c;
    try {
        get(j, "id", c.id);
        get(j, "environment", c.environment);
        if (j.contains("scenario") && j.contains("scenario_path")) {
            throw ConfigError("give either scenario or scenario_path, not both");
        }
        if (j.contains("scenario")) c.scenario = j.at("scenario");
        if (j.contains("scenario_path")) {
            std::filesystem::path p = j.at("scenario_path").get<std::string>();
            if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
            c.scenario = read_json_file(p.string());
        }
        get(j, "algorithm", c.algorithm);
        if (j.contains("agent")) c.agent = agent_config_from_json(j.at("agent"));
        get(j, "reward_mode", c.reward_mode);
        get(j, "w", c.w);
        get(j, "w1", c.w1);
        get(j, "w2", c.w2);
        get(j, "guidance_mode", c.guidance_mode);
        if (j.contains("guidance")) {
            const auto& g = j.at("guidance");
            reject_unknown(g, {"interval", "window", "tolerance"}, "guidance");
            get(g, "interval", c.guidance.interval);
            get(g, "window", c.guidance.window);
            get(g, "tolerance", c.guidance.tolerance);
        }
        if (j.contains("scripted_guidance")) {
            const auto& g = j.at("scripted_guidance");
            reject_unknown(g, {"start_progress", "factors"}, "scripted_guidance");
            get(g, "start_progress", c.scripted_guidance.start_progress);
            get(g, "factors", c.scripted_guidance.factors);
        }
        if (j.contains("hyperparameter_ranges")) {
            for (const auto& [name, r] : j.at("hyperparameter_ranges").items()) {
                reject_unknown(r, {"lo", "hi", "max_factor", "max_step"}, "hyperparameter_ranges." + name);
                RangeOverride o;
                if (r.contains("lo")) o.lo = r.at("lo").get<double>();
                if (r.contains("hi")) o.hi = r.at("hi").get<double>();
                if (r.contains("max_factor")) o.max_factor = r.at("max_factor").get<double>();
                if (r.contains("max_step")) o.max_step = r.at("max_step").get<double>();
                c.hyperparameter_ranges[name] = o;
            }
        }
        if (j.contains("design")) {
            const auto& d = j.at("design");
            reject_unknown(d, {"n_candidates", "probe_count", "task_description", "constraints", "probe_ranges", "constants"},
                           "design");
            get(d, "n_candidates", c.design.n_candidates);
            get(d, "probe_count", c.design.probe_count);
            get(d, "task_description", c.design.task_description);
            get(d, "constraints", c.design.constraints);
            get(d, "constants", c.design.constants);
            if (d.contains("probe_ranges")) {
                for (const auto& r : d.at("probe_ranges")) {
                    reject_unknown(r, {"name", "lo", "hi"}, "design.probe_ranges");
                    c.design.probe_ranges.push_back(
                        {r.at("name").get<std::string>(), r.at("lo").get<double>(), r.at("hi").get<double>()});
                }
            }
        }
        if (j.contains("backend")) c.backend = backend_from_json(j.at("backend"));
        get(j, "seeds", c.seeds);
        get(j, "episodes", c.episodes);
        get(j, "epsilon0", c.epsilon0);
        get(j, "exploration_decay", c.exploration_decay);
        get(j, "train_every", c.train_every);
        get(j, "final_window", c.final_window);
        get(j, "metric", c.metric);
        get(j, "output_dir", c.output_dir);
        get(j, "workers", c.workers);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed experiment config: ") + e.what());
    }
    c.check();
    // Validate the scenario eagerly so errors surface before any training starts.
    try {
        if (c.environment == "uav") env::UavScenario::from_json(c.scenario);
        if (c.environment == "sagin") env::SaginScenario::from_json(c.scenario);
        if (c.environment == "chain") {
            reject_unknown(c.scenario, {"gamma", "max_steps", "goal_reward", "loop_reward"}, "chain scenario");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed scenario: ") + e.what());
    }
    return c;
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json ranges = nlohmann::json::object();
    for (const auto& [name, o] : hyperparameter_ranges) {
        nlohmann::json r = nlohmann::json::object();
        if (o.lo) r["lo"] = *o.lo;
        if (o.hi) r["hi"] = *o.hi;
        if (o.max_factor) r["max_factor"] = *o.max_factor;
        if (o.max_step) r["max_step"] = *o.max_step;
        ranges[name] = r;
    }
    nlohmann::json probe = nlohmann::json::array();
    for (const auto& r : design.probe_ranges) probe.push_back({{"name", r.name}, {"lo", r.lo}, {"hi", r.hi}});
    return {{"id", id},
            {"environment", environment},
            {"scenario", scenario},
            {"algorithm", algorithm},
            {"agent", agent_config_to_json(agent)},
            {"reward_mode", reward_mode},
            {"w", w},
            {"w1", w1},
            {"w2", w2},
            {"guidance_mode", guidance_mode},
            {"guidance", {{"interval", guidance.interval}, {"window", guidance.window}, {"tolerance", guidance.tolerance}}},
            {"scripted_guidance",
             {{"start_progress", scripted_guidance.start_progress}, {"factors", scripted_guidance.factors}}},
            {"hyperparameter_ranges", ranges},
            {"design",
             {{"n_candidates", design.n_candidates},
              {"probe_count", design.probe_count},
              {"task_description", design.task_description},
              {"constraints", design.constraints},
              {"probe_ranges", probe},
              {"constants", design.constants}}},
            {"backend", backend_to_json(backend)},
            {"seeds", seeds},
            {"episodes", episodes},
            {"epsilon0", epsilon0},
            {"exploration_decay", exploration_decay},
            {"train_every", train_every},
            {"final_window", final_window},
            {"metric", metric},
            {"output_dir", output_dir},
            {"workers", workers}};
}

ExperimentConfig load_config(const std::string& path) {
    const auto j = read_json_file(path);
    return ExperimentConfig::from_json(j, std::filesystem::path(path).parent_path().string());
}

}  // namespace llmrl::harness
