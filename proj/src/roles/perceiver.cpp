#include "llmrl/roles/perceiver.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>

#include <spdlog/spdlog.h>

#include "llmrl/errors.hpp"
#include "llmrl/llm/prompt.hpp"

namespace llmrl::roles {
namespace {

void collect_numbers(const nlohmann::ordered_json& j, std::vector<double>& out) {
    if (j.is_number()) {
        out.push_back(j.get<double>());
    } else if (j.is_structured()) {
        for (const auto& child : j) collect_numbers(child, out);
    }
}

bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'; }

}  // namespace

std::vector<double> telemetry_numbers(const std::string& telemetry) {
    std::vector<double> out;
    const auto first = telemetry.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && (telemetry[first] == '{' || telemetry[first] == '[')) {
        try {
            // Ordered parse keeps fields in the order they were written.
            collect_numbers(nlohmann::ordered_json::parse(telemetry), out);
            return out;
        } catch (const nlohmann::json::parse_error&) {
            out.clear();  // not JSON after all; scan it as text
        }
    }
    const char* begin = telemetry.c_str();
    std::size_t i = 0;
    while (i < telemetry.size()) {
        const bool boundary = i == 0 || !word_char(telemetry[i - 1]);
        const char c = telemetry[i];
        const bool starts = std::isdigit(static_cast<unsigned char>(c)) ||
                            ((c == '-' || c == '+' || c == '.') && i + 1 < telemetry.size() &&
                             (std::isdigit(static_cast<unsigned char>(telemetry[i + 1])) || telemetry[i + 1] == '.'));
        if (boundary && starts) {
            char* end = nullptr;
            const double v = std::strtod(begin + i, &end);
            const auto consumed = static_cast<std::size_t>(end - (begin + i));
            if (consumed > 0 && std::isfinite(v)) {
                out.push_back(v);
                i += consumed;
                continue;
            }
        }
        ++i;
    }
    return out;
}

Eigen::VectorXd summarize_telemetry(const std::string& telemetry, std::size_t output_dim) {
    if (output_dim == 0) throw UsageError("output_dim must be positive");
    const auto xs = telemetry_numbers(telemetry);
    std::vector<double> stats;
    if (!xs.empty()) {
        const double n = static_cast<double>(xs.size());
        double mean = 0.0;
        for (double x : xs) mean += x;
        mean /= n;
        double var = 0.0;
        for (double x : xs) var += (x - mean) * (x - mean);
        auto sorted = xs;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t m = sorted.size();
        const double median = m % 2 == 1 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
        stats = {mean, sorted.back(), sorted.front(), std::sqrt(var / n), median, n};
    }
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(output_dim));
    for (std::size_t i = 0; i < std::min(output_dim, stats.size()); ++i) out[static_cast<Eigen::Index>(i)] = stats[i];
    return out;
}

Eigen::VectorXd perceive(llm::LlmBackend* backend, const std::string& telemetry, std::size_t output_dim,
                         llm::AuditLog* audit) {
    if (output_dim == 0) throw UsageError("output_dim must be positive");
    if (backend == nullptr) return summarize_telemetry(telemetry, output_dim);

    const auto request = llm::render_prompt(
        "perceiver", {{"telemetry", telemetry}, {"output_dim", std::to_string(output_dim)}}, 0.0);
    const llm::JsonValidator check = [output_dim](const nlohmann::json& v) -> std::optional<std::string> {
        if (!v.is_object() || !v.contains("features") || !v.at("features").is_array()) {
            return "expected an object with a 'features' array";
        }
        const auto& f = v.at("features");
        if (f.size() != output_dim) {
            return "expected exactly " + std::to_string(output_dim) + " features, got " + std::to_string(f.size());
        }
        for (const auto& x : f) {
            if (!x.is_number() || !(x.get<double>() >= -1.0 && x.get<double>() <= 1.0)) {
                return "every feature must be a number in [-1, 1]";
            }
        }
        return std::nullopt;
    };
    try {
        const auto reply = llm::complete_json(*backend, request, check, audit);
        const auto values = reply.at("features").get<std::vector<double>>();
        return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    } catch (const SchemaError& e) {
        spdlog::warn("perceiver reply unusable, using telemetry statistics: {}", e.what());
    } catch (const ExtractionError& e) {
        spdlog::warn("perceiver reply unusable, using telemetry statistics: {}", e.what());
    }
    return summarize_telemetry(telemetry, output_dim);
}

}  // namespace llmrl::roles
