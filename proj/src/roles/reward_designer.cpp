#include "llmrl/roles/reward_designer.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "llmrl/errors.hpp"
#include "llmrl/llm/prompt.hpp"

namespace llmrl::roles {
namespace {

std::string bullet_list(const std::vector<std::string>& items) {
    if (items.empty()) return "(none)";
    std::string out;
    for (const auto& item : items) out += "- " + item + "\n";
    out.pop_back();
    return out;
}

std::string format_number(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

std::vector<dsl::Bindings> with_constants(std::span<const dsl::Bindings> probes, const dsl::Bindings& constants) {
    std::vector<dsl::Bindings> out(probes.begin(), probes.end());
    for (auto& b : out) {
        for (const auto& [name, value] : constants) b[name] = value;
    }
    return out;
}

std::optional<std::string> check_designer_reply(const nlohmann::json& v) {
    if (!v.is_object()) return "the reply must be a JSON object";
    if (!v.contains("reward_expression") || !v.at("reward_expression").is_string()) {
        return "missing string field 'reward_expression'";
    }
    if (v.contains("explanation") && !v.at("explanation").is_string()) return "'explanation' must be a string";
    return std::nullopt;
}

double radical_inverse(std::size_t i, unsigned base) {
    double result = 0.0;
    double f = 1.0 / base;
    while (i > 0) {
        result += f * static_cast<double>(i % base);
        i /= base;
        f /= base;
    }
    return result;
}

unsigned nth_prime(std::size_t n) {
    std::vector<unsigned> primes;
    for (unsigned c = 2; primes.size() <= n; ++c) {
        if (std::none_of(primes.begin(), primes.end(), [c](unsigned p) { return c % p == 0; })) primes.push_back(c);
    }
    return primes[n];
}

void check_ranges(std::span<const FeatureRange> ranges) {
    if (ranges.empty()) throw UsageError("probe generation needs at least one feature range");
    std::set<std::string> seen;
    for (const auto& r : ranges) {
        if (r.name.empty() || !seen.insert(r.name).second) {
            throw UsageError("feature range names must be non-empty and unique");
        }
        if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo > r.hi) {
            throw UsageError("invalid range for feature '" + r.name + "'");
        }
    }
}

}  // namespace

std::vector<std::string> RewardTask::expression_schema() const {
    std::vector<std::string> schema = features;
    for (const auto& [name, value] : constants) {
        if (std::find(schema.begin(), schema.end(), name) == schema.end()) schema.push_back(name);
    }
    return schema;
}

void RewardTask::check() const {
    if (features.empty()) throw UsageError("reward task needs a non-empty feature schema");
    if (!feature_docs.empty() && feature_docs.size() != features.size()) {
        throw UsageError("feature_docs must be empty or match the feature list");
    }
}

std::vector<std::string> RewardCandidate::violation_messages() const {
    std::vector<std::string> out;
    const std::string prefix = "candidate " + std::to_string(index) + ": ";
    if (!error.empty()) out.push_back(prefix + error);
    for (const auto& v : validation.violations) out.push_back(prefix + std::string(dsl::to_string(v.kind)) + ": " + v.detail);
    return out;
}

nlohmann::json RewardCandidate::to_json() const {
    nlohmann::json j{{"index", index},
                     {"reward_expression", source},
                     {"explanation", explanation},
                     {"valid", validation.ok() && error.empty()},
                     {"selectable", selectable()}};
    if (expr) {
        j["canonical"] = expr->to_string();
        j["node_count"] = expr->node_count();
    }
    nlohmann::json violations = nlohmann::json::array();
    for (const auto& v : validation.violations) violations.push_back({{"kind", dsl::to_string(v.kind)}, {"detail", v.detail}});
    j["violations"] = violations;
    j["lipschitz"] = lipschitz ? nlohmann::json(lipschitz->value) : nlohmann::json(nullptr);
    if (!error.empty()) j["error"] = error;
    return j;
}

RewardCandidate assess_candidate(std::size_t index, const std::string& source, const std::string& explanation,
                                 const RewardTask& task, std::span<const dsl::Bindings> probes) {
    RewardCandidate c;
    c.index = index;
    c.source = source;
    c.explanation = explanation;
    const auto schema = task.expression_schema();
    try {
        c.expr = dsl::parse(source, schema);
    } catch (const ParseError& e) {
        c.validation.violations.push_back({dsl::ViolationKind::unresolved, e.what()});
        return c;
    } catch (const ValidationError& e) {
        c.validation.violations.push_back({dsl::ViolationKind::unresolved, e.what()});
        return c;
    }
    const auto bound = with_constants(probes, task.constants);
    c.validation = dsl::validate(*c.expr, schema, bound, task.alignment);
    if (!c.validation.ok()) return c;
    try {
        c.lipschitz = dsl::estimate_lipschitz(*c.expr, bound);
    } catch (const EstimationError& e) {
        c.error = std::string("no Lipschitz estimate: ") + e.what();
    }
    return c;
}

std::size_t select_candidate(std::span<const RewardCandidate> candidates) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& c = candidates[i];
        if (!c.selectable()) continue;
        if (!best) {
            best = i;
            continue;
        }
        const auto& b = candidates[*best];
        const double lc = c.lipschitz->value;
        const double lb = b.lipschitz->value;
        if (lc < lb || (lc == lb && c.expr->node_count() < b.expr->node_count())) best = i;
    }
    if (!best) {
        std::vector<std::string> all;
        for (const auto& c : candidates) {
            const auto msgs = c.violation_messages();
            all.insert(all.end(), msgs.begin(), msgs.end());
        }
        throw DesignError("no reward candidate passed validation", all);
    }
    return *best;
}

DesignResult design_reward(llm::LlmBackend& backend, const RewardTask& task, int n_candidates,
                           std::span<const dsl::Bindings> probes, llm::AuditLog* audit, JsonlWriter* ledger) {
    task.check();
    if (n_candidates < 1) throw UsageError("n_candidates must be at least 1");

    std::vector<std::string> feature_lines;
    for (std::size_t i = 0; i < task.features.size(); ++i) {
        std::string line = task.features[i];
        if (!task.feature_docs.empty() && !task.feature_docs[i].empty()) line += ": " + task.feature_docs[i];
        feature_lines.push_back(line);
    }
    std::vector<std::string> constant_lines;
    for (const auto& [name, value] : task.constants) constant_lines.push_back(name + " = " + format_number(value));

    const llm::TemplateVars vars{
        {"task_description", task.description},
        {"feature_schema", bullet_list(feature_lines)},
        {"constants", bullet_list(constant_lines)},
        {"constraints", bullet_list(task.constraints)},
        {"output_schema", R"({"explanation": "<short rationale>", "reward_expression": "<expression>"})"}};
    const auto request = llm::render_prompt("reward_designer", vars, task.temperature);

    DesignResult result;
    for (int i = 0; i < n_candidates; ++i) {
        const auto index = static_cast<std::size_t>(i);
        try {
            const auto reply = llm::complete_json(backend, request, check_designer_reply, audit);
            result.candidates.push_back(assess_candidate(index, reply.at("reward_expression").get<std::string>(),
                                                         reply.value("explanation", std::string()), task, probes));
        } catch (const SchemaError& e) {
            RewardCandidate c;
            c.index = index;
            c.error = std::string("unusable reply: ") + e.what();
            result.candidates.push_back(std::move(c));
        } catch (const ExtractionError& e) {
            RewardCandidate c;
            c.index = index;
            c.error = std::string("unusable reply: ") + e.what();
            result.candidates.push_back(std::move(c));
        }
    }

    std::optional<std::size_t> chosen;
    try {
        chosen = select_candidate(result.candidates);
    } catch (const DesignError&) {
        if (ledger) {
            for (const auto& c : result.candidates) ledger->write(c.to_json());
        }
        throw;
    }
    if (ledger) {
        for (const auto& c : result.candidates) {
            auto row = c.to_json();
            row["selected"] = c.index == *chosen;
            ledger->write(row);
        }
    }
    result.selected = result.candidates[*chosen];
    return result;
}

std::vector<dsl::Bindings> low_discrepancy_grid(std::span<const FeatureRange> ranges, std::size_t count) {
    check_ranges(ranges);
    std::vector<dsl::Bindings> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        dsl::Bindings b;
        for (std::size_t d = 0; d < ranges.size(); ++d) {
            double u = 0.5;
            if (count > 1) {
                u = d == 0 ? static_cast<double>(i) / static_cast<double>(count - 1) : radical_inverse(i, nth_prime(d - 1));
            }
            b[ranges[d].name] = ranges[d].lo + u * (ranges[d].hi - ranges[d].lo);
        }
        out.push_back(std::move(b));
    }
    return out;
}

ProbeSet generate_probe_samples(llm::LlmBackend* backend, const std::string& task_description,
                                std::span<const FeatureRange> ranges, std::size_t count, llm::AuditLog* audit) {
    if (count < 2) throw UsageError("probe generation needs count >= 2");
    check_ranges(ranges);
    ProbeSet set;
    if (backend != nullptr) {
        std::vector<std::string> lines;
        for (const auto& r : ranges) lines.push_back(r.name + ": [" + format_number(r.lo) + ", " + format_number(r.hi) + "]");
        const llm::TemplateVars vars{{"task_description", task_description},
                                     {"feature_ranges", bullet_list(lines)},
                                     {"count", std::to_string(count)}};
        const auto request = llm::render_prompt("probe_generator", vars);
        const llm::JsonValidator needs_samples = [](const nlohmann::json& v) -> std::optional<std::string> {
            if (!v.is_object() || !v.contains("samples") || !v.at("samples").is_array()) {
                return "expected an object with a 'samples' array";
            }
            return std::nullopt;
        };
        try {
            const auto reply = llm::complete_json(*backend, request, needs_samples, audit);
            for (const auto& sample : reply.at("samples")) {
                if (set.samples.size() == count) break;
                dsl::Bindings b;
                bool ok = sample.is_object();
                for (const auto& r : ranges) {
                    if (!ok) break;
                    const auto it = sample.find(r.name);
                    if (it == sample.end() || !it->is_number()) {
                        ok = false;
                        break;
                    }
                    const double v = it->get<double>();
                    ok = std::isfinite(v) && v >= r.lo && v <= r.hi;
                    b[r.name] = v;
                }
                if (ok) {
                    set.samples.push_back(std::move(b));
                } else {
                    ++set.dropped;
                }
            }
            set.from_model = set.samples.size();
        } catch (const Error& e) {
            spdlog::warn("probe generation fell back to the grid: {}", e.what());
        }
    }
    const std::size_t missing = count - set.samples.size();
    for (auto& b : low_discrepancy_grid(ranges, missing)) set.samples.push_back(std::move(b));
    set.from_grid = missing;
    return set;
}

}  // namespace llmrl::roles
