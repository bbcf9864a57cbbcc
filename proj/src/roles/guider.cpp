#include "llmrl/roles/guider.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include <spdlog/spdlog.h>

#include "llmrl/errors.hpp"
#include "llmrl/llm/prompt.hpp"

namespace llmrl::roles {
namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

double finite_mean(std::span<const double> xs) {
    double sum = 0.0;
    std::size_t n = 0;
    for (double x : xs) {
        if (std::isfinite(x)) {
            sum += x;
            ++n;
        }
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double finite_last(std::span<const double> xs) {
    for (auto it = xs.rbegin(); it != xs.rend(); ++it) {
        if (std::isfinite(*it)) return *it;
    }
    return 0.0;
}

std::optional<std::string> check_guider_reply(const nlohmann::json& v) {
    if (!v.is_object() || !v.contains("adjustments") || !v.at("adjustments").is_array()) {
        return "expected an object with an 'adjustments' array";
    }
    for (const auto& a : v.at("adjustments")) {
        if (!a.is_object() || !a.contains("name") || !a.at("name").is_string()) {
            return "every adjustment needs a string 'name'";
        }
        if (!a.contains("new_value") || !a.at("new_value").is_number()) {
            return "every adjustment needs a numeric 'new_value'";
        }
    }
    return std::nullopt;
}

}  // namespace

void HyperparamSet::add(Hyperparameter e) {
    if (contains(e.name)) throw ConfigError("duplicate hyperparameter '" + e.name + "'");
    if (e.name.empty()) throw ConfigError("hyperparameter needs a name");
    if (!(e.lo <= e.hi)) throw ConfigError("empty certified range for '" + e.name + "'");
    if (!(e.value >= e.lo && e.value <= e.hi)) {
        throw ConfigError("initial value of '" + e.name + "' lies outside its certified range");
    }
    if (e.integer) {
        if (e.value != std::round(e.value)) throw ConfigError("'" + e.name + "' must be integral");
        if (!(e.max_step >= 1.0)) throw ConfigError("integer step for '" + e.name + "' must be at least 1");
    } else {
        if (!(e.lo > 0.0)) throw ConfigError("real hyperparameter '" + e.name + "' needs a positive range");
        if (!(e.max_factor > 1.0)) throw ConfigError("rate factor for '" + e.name + "' must exceed 1");
    }
    entries_.push_back(std::move(e));
}

bool HyperparamSet::contains(const std::string& name) const {
    return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.name == name; });
}

const Hyperparameter& HyperparamSet::at(const std::string& name) const {
    for (const auto& e : entries_) {
        if (e.name == name) return e;
    }
    throw ConfigError("unknown hyperparameter '" + name + "'");
}

double HyperparamSet::value(const std::string& name) const { return at(name).value; }

double HyperparamSet::admissible(const std::string& name, double proposed) const {
    const auto& e = at(name);
    if (!std::isfinite(proposed)) return e.value;
    const double clamped = std::clamp(proposed, e.lo, e.hi);
    if (e.integer) {
        return std::clamp(std::round(clamped), e.value - e.max_step, e.value + e.max_step);
    }
    return std::clamp(clamped, e.value / e.max_factor, e.value * e.max_factor);
}

void HyperparamSet::set(const std::string& name, double value) {
    for (auto& e : entries_) {
        if (e.name != name) continue;
        if (!(value >= e.lo && value <= e.hi)) throw ConfigError("value for '" + name + "' outside its certified range");
        if (e.integer && value != std::round(value)) throw ConfigError("'" + name + "' must be integral");
        e.value = value;
        return;
    }
    throw ConfigError("unknown hyperparameter '" + name + "'");
}

nlohmann::json HyperparamSet::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& e : entries_) j[e.name] = e.value;
    return j;
}

std::string HyperparamSet::describe() const {
    std::string out;
    for (const auto& e : entries_) {
        out += e.name + " = " + fmt(e.value) + " (range [" + fmt(e.lo) + ", " + fmt(e.hi) + "]" +
               (e.integer ? ", integer" : "") + ")\n";
    }
    if (!out.empty()) out.pop_back();
    return out;
}

HyperparamSet default_hyperparameters(const std::string& algorithm, double learning_rate, double tau,
                                      double batch_size, double exploration_decay, double entropy_alpha,
                                      double truncation_k) {
    HyperparamSet set;
    set.add({.name = "learning_rate", .value = learning_rate, .lo = 1e-5, .hi = 1e-2});
    set.add({.name = "tau", .value = tau, .lo = 1e-4, .hi = 0.1});
    set.add({.name = "batch_size", .value = batch_size, .lo = 16, .hi = 512, .integer = true, .max_step = 64});
    set.add({.name = "exploration_decay", .value = exploration_decay, .lo = 0.05, .hi = 1.0});
    if (algorithm == "tqc") {
        set.add({.name = "entropy_alpha", .value = entropy_alpha, .lo = 1e-3, .hi = 0.5});
        set.add({.name = "truncation_k", .value = truncation_k, .lo = 0, .hi = 5, .integer = true, .max_step = 1});
    }
    return set;
}

void GuidanceReport::check() const {
    if (recent_returns.empty()) throw UsageError("guidance report needs a non-empty return window");
    if (!(progress >= 0.0 && progress <= 1.0)) throw UsageError("progress must lie in [0, 1]");
}

nlohmann::json GuidanceDirective::to_json() const {
    nlohmann::json adj = nlohmann::json::array();
    for (const auto& a : adjustments) {
        adj.push_back({{"name", a.name}, {"proposed", a.proposed}, {"applied", a.applied}, {"rationale", a.rationale}});
    }
    return {{"adjustments", adj}, {"dropped", dropped}, {"rollback", rollback}, {"unguided", unguided}};
}

GuidanceDirective guide(llm::LlmBackend& backend, const GuidanceReport& report, llm::AuditLog* audit) {
    report.check();
    std::string trajectory;
    for (double r : report.recent_returns) trajectory += (trajectory.empty() ? "" : ", ") + fmt(r);
    const std::string losses = "actor mean " + fmt(report.actor_loss_mean) + ", last " + fmt(report.actor_loss_last) +
                               "; critic mean " + fmt(report.critic_loss_mean) + ", last " +
                               fmt(report.critic_loss_last);
    const llm::TemplateVars vars{{"progress", fmt(report.progress)},
                                 {"reward_trajectory", trajectory},
                                 {"loss_summary", losses},
                                 {"exploration", report.exploration_name + " = " + fmt(report.exploration)},
                                 {"hyperparameters", report.theta.describe()},
                                 {"rollback_notice", report.rollback_notice}};
    const auto request = llm::render_prompt("guider", vars, 0.0);

    GuidanceDirective directive;
    nlohmann::json reply;
    try {
        reply = llm::complete_json(backend, request, check_guider_reply, audit);
    } catch (const SchemaError& e) {
        spdlog::warn("guider reply unusable, continuing unguided: {}", e.what());
        directive.unguided = true;
        return directive;
    } catch (const ExtractionError& e) {
        spdlog::warn("guider reply unusable, continuing unguided: {}", e.what());
        directive.unguided = true;
        return directive;
    }

    std::set<std::string> seen;
    for (const auto& a : reply.at("adjustments")) {
        const auto name = a.at("name").get<std::string>();
        if (!report.theta.contains(name) || !seen.insert(name).second) {
            spdlog::info("guider proposal for '{}' dropped", name);
            directive.dropped.push_back(name);
            continue;
        }
        Adjustment adj;
        adj.name = name;
        adj.proposed = a.at("new_value").get<double>();
        adj.applied = report.theta.admissible(name, adj.proposed);
        if (a.contains("rationale") && a.at("rationale").is_string()) adj.rationale = a.at("rationale").get<std::string>();
        directive.adjustments.push_back(std::move(adj));
    }
    return directive;
}

RollbackDecision check_rollback(std::span<const double> window_means, double tolerance) {
    if (window_means.size() < 2) throw UsageError("rollback check needs at least two completed windows");
    if (!(tolerance >= 0.0)) throw UsageError("rollback tolerance must be non-negative");
    const auto prior = window_means.first(window_means.size() - 1);
    const auto best = std::max_element(prior.begin(), prior.end());
    RollbackDecision d;
    d.best_window = static_cast<std::size_t>(best - prior.begin());
    d.threshold = *best - tolerance * std::abs(*best);
    d.rollback = tolerance < 1.0 && window_means.back() < d.threshold;
    return d;
}

void GuidanceSettings::check() const {
    if (interval <= 0 || window <= 0) throw ConfigError("guidance interval and window must be positive");
    if (!(tolerance >= 0.0)) throw ConfigError("rollback tolerance must be non-negative");
}

GuidanceSupervisor::GuidanceSupervisor(llm::LlmBackend& backend, HyperparamSet initial, GuidanceSettings settings,
                                       llm::AuditLog* audit, JsonlWriter* ledger)
    : backend_(backend),
      theta_(std::move(initial)),
      settings_(settings),
      audit_(audit),
      ledger_(ledger),
      window_start_theta_(theta_) {
    settings_.check();
}

std::optional<GuidanceDirective> GuidanceSupervisor::end_episode(int episode, int total_episodes,
                                                                 double episode_return, double actor_loss,
                                                                 double critic_loss,
                                                                 const std::string& exploration_name,
                                                                 double exploration) {
    if (total_episodes <= 0 || episode < 0 || episode >= total_episodes) {
        throw UsageError("episode index outside the run");
    }
    returns_.push_back(episode_return);
    actor_losses_.push_back(actor_loss);
    critic_losses_.push_back(critic_loss);

    const auto w = static_cast<std::size_t>(settings_.window);
    const bool window_closed = (episode + 1) % settings_.window == 0;
    if (window_closed) {
        const auto tail = std::span<const double>(returns_).last(std::min(w, returns_.size()));
        window_means_.push_back(std::accumulate(tail.begin(), tail.end(), 0.0) / static_cast<double>(tail.size()));
        window_theta_.push_back(window_start_theta_);
    }

    std::optional<GuidanceDirective> result;
    if ((episode + 1) % settings_.interval == 0) {
        ++interventions_;
        GuidanceDirective directive;
        bool rolled_back = false;
        if (window_means_.size() >= 2) {
            const auto decision = check_rollback(window_means_, settings_.tolerance);
            if (decision.rollback) {
                theta_ = window_theta_[decision.best_window];
                directive.rollback = true;
                rolled_back = true;
                pending_notice_ = "Performance dropped below the rollback threshold (latest window mean " +
                                  fmt(window_means_.back()) + ", best earlier window " +
                                  fmt(window_means_[decision.best_window]) +
                                  "). The hyperparameters were restored to their values during that best window. "
                                  "Propose a corrective adjustment.";
            }
        }
        if (!rolled_back) {
            GuidanceReport report;
            const auto n = std::min(w, returns_.size());
            report.recent_returns.assign(returns_.end() - static_cast<std::ptrdiff_t>(n), returns_.end());
            const auto actor = std::span<const double>(actor_losses_).last(n);
            const auto critic = std::span<const double>(critic_losses_).last(n);
            report.actor_loss_mean = finite_mean(actor);
            report.actor_loss_last = finite_last(actor);
            report.critic_loss_mean = finite_mean(critic);
            report.critic_loss_last = finite_last(critic);
            report.exploration_name = exploration_name;
            report.exploration = exploration;
            report.progress = std::min(1.0, static_cast<double>(episode + 1) / static_cast<double>(total_episodes));
            report.theta = theta_;
            report.rollback_notice = std::exchange(pending_notice_, std::string());
            directive = guide(backend_, report, audit_);
            for (const auto& a : directive.adjustments) theta_.set(a.name, a.applied);
        }
        if (ledger_) {
            auto row = directive.to_json();
            row["episode"] = episode;
            row["window_mean"] = window_means_.empty() ? nlohmann::json(nullptr) : nlohmann::json(window_means_.back());
            row["theta"] = theta_.to_json();
            ledger_->write(row);
        }
        result = std::move(directive);
    }
    if (window_closed) window_start_theta_ = theta_;
    return result;
}

}  // namespace llmrl::roles
