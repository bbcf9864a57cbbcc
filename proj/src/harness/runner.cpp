#include "llmrl/harness/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <regex>
#include <thread>

#include <spdlog/spdlog.h>

#include "llmrl/agents/factory.hpp"
#include "llmrl/env/chain.hpp"
#include "llmrl/env/sagin.hpp"
#include "llmrl/env/uav.hpp"
#include "llmrl/errors.hpp"
#include "llmrl/roles/guider.hpp"
#include "llmrl/roles/jsonl.hpp"

namespace fs = std::filesystem;

namespace llmrl::harness {
namespace {

std::uint64_t episode_seed(std::uint64_t seed, int episode) {
    return seed * 1000003ULL + static_cast<std::uint64_t>(episode);
}

void write_json_file(const fs::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

nlohmann::json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read '" + path.string() + "'");
    return nlohmann::json::parse(in);
}

std::unique_ptr<llm::LlmBackend> backend_for(const BackendSpec& spec, const nlohmann::json& script) {
    if (spec.kind == "http") return std::make_unique<llm::HttpBackend>(spec.http);
    if (script.is_null()) return nullptr;
    return std::make_unique<llm::MockBackend>(llm::MockBackend::from_json(script));
}

double mean_or_nan(double sum, int n) { return n == 0 ? std::nan("") : sum / n; }

std::string uav_description() {
    return "A UAV flies over a square area to collect data from IoT terminals and must deliver a data quota "
           "while spending as little battery energy as possible. Each step the agent chooses a 2-D velocity; "
           "hovering near a terminal collects its data.";
}

}  // namespace

double EpisodeRow::metric(const std::string& name) const {
    if (name == "energy") return energy;
    if (name == "return") return ret;
    if (name == "delivered") return delivered;
    throw UsageError("unknown metric '" + name + "'");
}

nlohmann::json EpisodeRow::to_json() const {
    return {{"episode", episode},
            {"return", ret},
            {"steps", steps},
            {"energy", energy},
            {"collected", collected},
            {"delivered", delivered},
            {"handovers", handovers},
            {"epsilon", epsilon},
            {"alpha", alpha},
            {"theta_hash", theta_hash},
            {"critic_loss", critic_loss},
            {"actor_loss", actor_loss},
            {"intervention", intervention},
            {"rollback", rollback}};
}

EpisodeRow EpisodeRow::from_json(const nlohmann::json& j) {
    EpisodeRow r;
    r.episode = j.at("episode").get<int>();
    r.ret = j.at("return").get<double>();
    r.steps = j.at("steps").get<int>();
    r.energy = j.at("energy").get<double>();
    r.collected = j.at("collected").get<double>();
    r.delivered = j.at("delivered").get<double>();
    r.handovers = j.at("handovers").get<int>();
    r.epsilon = j.at("epsilon").get<double>();
    r.alpha = j.at("alpha").get<double>();
    r.theta_hash = j.at("theta_hash").get<std::string>();
    r.critic_loss = j.at("critic_loss").get<double>();
    r.actor_loss = j.at("actor_loss").get<double>();
    r.intervention = j.at("intervention").get<bool>();
    r.rollback = j.at("rollback").get<bool>();
    return r;
}

nlohmann::json SeedSummary::to_json() const {
    return {{"seed", seed},
            {"episodes", episodes},
            {"window", window},
            {"metric", metric},
            {"final_mean", final_mean},
            {"final_std", final_std},
            {"final_return_mean", final_return_mean},
            {"interventions", interventions},
            {"rollbacks", rollbacks},
            {"wall_clock_seconds", wall_clock_seconds}};
}

SeedSummary SeedSummary::from_json(const nlohmann::json& j) {
    SeedSummary s;
    s.seed = j.at("seed").get<std::uint64_t>();
    s.episodes = j.at("episodes").get<int>();
    s.window = j.at("window").get<int>();
    s.metric = j.at("metric").get<std::string>();
    s.final_mean = j.at("final_mean").get<double>();
    s.final_std = j.at("final_std").get<double>();
    s.final_return_mean = j.at("final_return_mean").get<double>();
    s.interventions = j.at("interventions").get<std::size_t>();
    s.rollbacks = j.at("rollbacks").get<std::size_t>();
    s.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
    return s;
}

std::string json_hash(const nlohmann::json& j) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : j.dump()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::unique_ptr<mdp::Environment> make_environment(const ExperimentConfig& config) {
    if (config.environment == "uav") return std::make_unique<env::UavEnv>(env::UavScenario::from_json(config.scenario));
    if (config.environment == "sagin") {
        return std::make_unique<env::SaginEnv>(env::SaginScenario::from_json(config.scenario));
    }
    if (config.environment == "chain") {
        const auto& s = config.scenario;
        return std::make_unique<env::ChainEnv>(s.value("gamma", 0.9), s.value("max_steps", 50),
                                               s.value("goal_reward", 10.0), s.value("loop_reward", 0.5));
    }
    throw ConfigError("unknown environment '" + config.environment + "'");
}

std::vector<roles::FeatureRange> probe_ranges(const ExperimentConfig& config, const mdp::EnvSpec& spec) {
    if (!config.design.probe_ranges.empty()) {
        for (const auto& r : config.design.probe_ranges) {
            if (!spec.feature_index(r.name)) throw ConfigError("probe range for unknown feature '" + r.name + "'");
        }
        return config.design.probe_ranges;
    }
    if (config.environment != "uav") throw ConfigError("design.probe_ranges is required for this environment");
    const double energy_hi = spec.feature_scales[static_cast<Eigen::Index>(*spec.feature_index("energy"))];
    return {{"energy", 0.0, energy_hi}, {"position_score", 0.0, 1.0}, {"penalty", 1.0, 2.0}, {"battery_frac", 0.0, 1.0}};
}

roles::RewardTask reward_task(const ExperimentConfig& config, const mdp::EnvSpec& spec) {
    roles::RewardTask task;
    task.description = config.design.task_description;
    if (task.description.empty()) {
        task.description = config.environment == "uav" ? uav_description() : "Maximize the environment objective.";
    }
    for (const auto& r : probe_ranges(config, spec)) task.features.push_back(r.name);
    task.constants = config.design.constants;
    if (task.constants.empty()) task.constants = {{"w1", config.w1}, {"w2", config.w2}};
    task.constraints = config.design.constraints;
    if (task.constraints.empty()) {
        task.constraints = {"Use only the listed features and constants.",
                            "The expression must stay finite for every feature value in its range."};
        if (spec.feature_index("energy")) task.constraints.push_back("Energy is a cost: more energy must never raise the reward.");
    }
    return task;
}

roles::DesignResult design_for(const ExperimentConfig& config, const std::string& ledger_path,
                               const std::string& audit_path) {
    const auto environment = make_environment(config);
    const auto& spec = environment->spec();
    const auto task = reward_task(config, spec);
    const auto ranges = probe_ranges(config, spec);

    std::unique_ptr<llm::AuditLog> audit;
    if (!audit_path.empty()) audit = std::make_unique<llm::AuditLog>(audit_path);
    auto probe_backend = backend_for(config.backend, config.backend.probe_script);
    const auto probes =
        roles::generate_probe_samples(probe_backend.get(), task.description, ranges, config.design.probe_count, audit.get());

    auto designer = backend_for(config.backend, config.backend.designer_script);
    if (!designer) throw ConfigError("no designer backend configured");
    std::unique_ptr<roles::JsonlWriter> ledger;
    if (!ledger_path.empty()) ledger = std::make_unique<roles::JsonlWriter>(ledger_path);
    return roles::design_reward(*designer, task, config.design.n_candidates, probes.samples, audit.get(), ledger.get());
}

roles::HyperparamSet initial_hyperparameters(const ExperimentConfig& config) {
    const auto& a = config.agent;
    const auto defaults = roles::default_hyperparameters(config.algorithm, a.critic_lr, a.tau,
                                                         static_cast<double>(a.batch_size), config.exploration_decay,
                                                         a.entropy_alpha, a.k_drop_per_critic);
    for (const auto& [name, _] : config.hyperparameter_ranges) {
        if (!defaults.contains(name)) throw ConfigError("range override for non-whitelisted '" + name + "'");
    }
    roles::HyperparamSet set;
    for (auto e : defaults.entries()) {
        if (auto it = config.hyperparameter_ranges.find(e.name); it != config.hyperparameter_ranges.end()) {
            const auto& o = it->second;
            if (o.lo) e.lo = *o.lo;
            if (o.hi) e.hi = *o.hi;
            if (o.max_factor) e.max_factor = *o.max_factor;
            if (o.max_step) e.max_step = *o.max_step;
        }
        set.add(e);
    }
    return set;
}

std::unique_ptr<llm::LlmBackend> scripted_guider(const ScriptedGuidance& script) {
    auto respond = [script](const llm::ChatRequest& request) {
        const std::string& text = request.messages.back().content;
        static const std::regex progress_re(R"(Training progress: ([-+0-9.eE]+))");
        static const std::regex entry_re(R"((\w+) = ([-+0-9.eE]+) \(range)");
        std::smatch m;
        double progress = 0.0;
        if (std::regex_search(text, m, progress_re)) progress = std::stod(m[1].str());
        nlohmann::json adjustments = nlohmann::json::array();
        if (progress >= script.start_progress) {
            for (auto it = std::sregex_iterator(text.begin(), text.end(), entry_re); it != std::sregex_iterator(); ++it) {
                const std::string name = (*it)[1].str();
                const auto f = script.factors.find(name);
                if (f == script.factors.end()) continue;
                const double value = std::stod((*it)[2].str());
                adjustments.push_back({{"name", name},
                                       {"new_value", value * f->second},
                                       {"rationale", "scheduled scaling by " + std::to_string(f->second)}});
            }
        }
        return nlohmann::json{{"adjustments", adjustments}}.dump();
    };
    return std::make_unique<llm::ResponderBackend>(respond, "scripted-guider");
}

RunRecord run_seed(const ExperimentConfig& config, std::uint64_t seed, const mdp::RewardOverride* reward,
                   const std::string& seed_dir) {
    const auto start = std::chrono::steady_clock::now();
    fs::create_directories(seed_dir);
    const fs::path dir(seed_dir);

    auto environment = make_environment(config);
    const auto& spec = environment->spec();
    if (reward) mdp::check_override(*reward, spec);
    auto agent_config = config.agent;
    agent_config.seed = seed;
    auto agent = agents::make_agent(config.algorithm, spec, agent_config);
    agents::Replay buffer(agent_config.buffer_capacity);

    env::ExplorationSchedule schedule{config.epsilon0, config.episodes, config.exploration_decay};
    schedule.check();

    llm::AuditLog audit((dir / "audit.jsonl").string());
    roles::JsonlWriter guidance_ledger((dir / "guidance.jsonl").string());
    roles::JsonlWriter episodes_out((dir / "episodes.jsonl").string());

    std::unique_ptr<llm::LlmBackend> guider_backend;
    if (config.guidance_mode == "scripted") guider_backend = scripted_guider(config.scripted_guidance);
    if (config.guidance_mode == "llm") guider_backend = backend_for(config.backend, config.backend.guider_script);

    std::optional<roles::GuidanceSupervisor> supervisor;
    auto apply_theta = [&](const roles::HyperparamSet& t) {
        for (const auto& e : t.entries()) {
            if (e.name == "exploration_decay") {
                schedule.e_decay = e.value;
            } else if (!agent->set_hyperparameter(e.name, e.value)) {
                throw ConfigError("agent " + agent->name() + " does not accept hyperparameter '" + e.name + "'");
            }
        }
    };
    if (guider_backend) {
        const auto theta = initial_hyperparameters(config);
        supervisor.emplace(*guider_backend, theta, config.guidance, &audit, &guidance_ledger);
        apply_theta(theta);
    }
    const std::string fixed_hash = json_hash(agent_config_to_json(agent->config()));

    const bool is_tqc = config.algorithm == "tqc";
    RunRecord record;
    record.seed = seed;
    record.directory = seed_dir;
    long total_steps = 0;
    for (int e = 0; e < config.episodes; ++e) {
        EpisodeRow row;
        row.episode = e;
        row.epsilon = schedule.epsilon(e);
        row.alpha = is_tqc ? agent->config().entropy_alpha : 0.0;
        row.theta_hash = supervisor ? json_hash(supervisor->theta().to_json()) : fixed_hash;
        agent->set_exploration(row.epsilon);

        double critic_sum = 0.0, actor_sum = 0.0;
        int critic_n = 0, actor_n = 0;
        auto obs = environment->reset(episode_seed(seed, e));
        bool done = false;
        while (!done) {
            const auto mask = environment->action_mask();
            mdp::Action action = agent->select_action(obs, true, mask);
            auto result = environment->step(action);
            double r = result.reward;
            if (reward) r = mdp::evaluate_override(*reward, spec, result.observation);
            if (!std::isfinite(r)) throw NumericError("non-finite reward in episode " + std::to_string(e));
            buffer.push({obs, std::move(action), r, result.observation, result.done, result.truncated, row.steps});
            if (++total_steps % config.train_every == 0) {
                const auto loss = agent->train_step(buffer);
                if (loss.status == agents::TrainStatus::trained) {
                    critic_sum += loss.critic_loss;
                    ++critic_n;
                    if (loss.actor_updated) {
                        actor_sum += loss.actor_loss;
                        ++actor_n;
                    }
                }
            }
            row.ret += r;
            ++row.steps;
            if (auto* sagin = dynamic_cast<env::SaginEnv*>(environment.get())) {
                row.delivered += sagin->last_info().delivered;
                row.handovers += sagin->last_info().handover ? 1 : 0;
            }
            obs = std::move(result.observation);
            done = result.done;
        }
        if (auto* uav = dynamic_cast<env::UavEnv*>(environment.get())) {
            row.energy = uav->episode_energy();
            row.collected = uav->world().collected;
        }
        row.critic_loss = critic_n ? critic_sum / critic_n : 0.0;
        row.actor_loss = actor_n ? actor_sum / actor_n : 0.0;

        if (supervisor) {
            const auto directive = supervisor->end_episode(
                e, config.episodes, row.ret, mean_or_nan(actor_sum, actor_n), mean_or_nan(critic_sum, critic_n),
                is_tqc ? "entropy_alpha" : "epsilon", is_tqc ? agent->config().entropy_alpha : row.epsilon);
            if (directive) {
                row.intervention = true;
                row.rollback = directive->rollback;
                apply_theta(supervisor->theta());
            }
        }
        episodes_out.write(row.to_json());
        record.rows.push_back(std::move(row));
    }

    const std::string metric = config.effective_metric();
    const int window = config.effective_window();
    std::vector<double> tail_metric, tail_return;
    for (auto it = record.rows.end() - window; it != record.rows.end(); ++it) {
        tail_metric.push_back(it->metric(metric));
        tail_return.push_back(it->ret);
    }
    auto mean = [](const std::vector<double>& xs) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s / static_cast<double>(xs.size());
    };
    SeedSummary& summary = record.summary;
    summary.seed = seed;
    summary.episodes = config.episodes;
    summary.window = window;
    summary.metric = metric;
    summary.final_mean = mean(tail_metric);
    double var = 0.0;
    for (double x : tail_metric) var += (x - summary.final_mean) * (x - summary.final_mean);
    summary.final_std = std::sqrt(var / static_cast<double>(tail_metric.size()));
    summary.final_return_mean = mean(tail_return);
    if (supervisor) {
        summary.interventions = supervisor->interventions();
        summary.rollbacks = static_cast<std::size_t>(
            std::count_if(record.rows.begin(), record.rows.end(), [](const EpisodeRow& r) { return r.rollback; }));
    }
    summary.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_json_file(dir / "summary.json", summary.to_json());
    return record;
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& config, bool overwrite) {
    config.check();
    const fs::path run_dir = fs::path(config.output_dir) / config.id;
    if (fs::exists(run_dir / "summary.json") && !overwrite) {
        throw ConfigError("run '" + config.id + "' already exists in " + config.output_dir);
    }
    if (overwrite && fs::exists(run_dir)) fs::remove_all(run_dir);
    fs::create_directories(run_dir);
    write_json_file(run_dir / "config.json", config.to_json());

    std::optional<mdp::RewardOverride> reward;
    if (config.reward_mode == "manual" && config.environment == "uav") reward = env::manual_reward(config.w);
    if (config.reward_mode == "scripted-enriched") reward = env::enriched_reward(config.w1, config.w2);
    if (config.reward_mode == "llm-designed") {
        const auto result =
            design_for(config, (run_dir / "candidates.jsonl").string(), (run_dir / "design_audit.jsonl").string());
        const auto environment = make_environment(config);
        reward = mdp::RewardOverride{*result.selected.expr, reward_task(config, environment->spec()).constants};
        write_json_file(run_dir / "reward.json", {{"reward_expression", result.selected.source},
                                                  {"explanation", result.selected.explanation},
                                                  {"lipschitz", result.selected.lipschitz->value}});
    }

    std::vector<RunRecord> records(config.seeds.size());
    std::vector<std::exception_ptr> errors(config.seeds.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < config.seeds.size(); i = next++) {
            try {
                const auto seed = config.seeds[i];
                spdlog::info("{}: seed {} started", config.id, seed);
                records[i] = run_seed(config, seed, reward ? &*reward : nullptr,
                                      (run_dir / ("seed_" + std::to_string(seed))).string());
                spdlog::info("{}: seed {} final {} {:.4f}", config.id, seed, records[i].summary.metric,
                             records[i].summary.final_mean);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(config.workers), config.seeds.size());
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < n_workers; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    nlohmann::json seeds = nlohmann::json::array();
    double total = 0.0;
    for (const auto& r : records) {
        seeds.push_back(r.summary.to_json());
        total += r.summary.final_mean;
    }
    write_json_file(run_dir / "summary.json", {{"id", config.id},
                                               {"metric", config.effective_metric()},
                                               {"window", config.effective_window()},
                                               {"mean_final", total / static_cast<double>(records.size())},
                                               {"seeds", seeds}});
    return records;
}

std::vector<RunRecord> load_run(const std::string& run_dir) {
    if (!fs::is_directory(run_dir)) throw ConfigError("'" + run_dir + "' is not a run directory");
    std::vector<RunRecord> out;
    for (const auto& entry : fs::directory_iterator(run_dir)) {
        const std::string name = entry.path().filename().string();
        if (!entry.is_directory() || name.rfind("seed_", 0) != 0) continue;
        RunRecord r;
        r.seed = std::stoull(name.substr(5));
        r.directory = entry.path().string();
        std::ifstream in(entry.path() / "episodes.jsonl");
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty()) r.rows.push_back(EpisodeRow::from_json(nlohmann::json::parse(line)));
        }
        for (std::size_t i = 0; i < r.rows.size(); ++i) {
            if (r.rows[i].episode != static_cast<int>(i)) throw ConfigError("episode rows in " + name + " are not contiguous");
        }
        if (fs::exists(entry.path() / "summary.json")) r.summary = SeedSummary::from_json(read_json_file(entry.path() / "summary.json"));
        out.push_back(std::move(r));
    }
    std::sort(out.begin(), out.end(), [](const RunRecord& x, const RunRecord& y) { return x.seed < y.seed; });
    if (out.empty()) throw ConfigError("no seed directories under '" + run_dir + "'");
    return out;
}

}  // namespace llmrl::harness
