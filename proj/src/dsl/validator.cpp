#include "llmrl/dsl/validator.hpp"

#include <algorithm>
#include <sstream>

#include "llmrl/errors.hpp"

namespace llmrl::dsl {

std::string_view to_string(ViolationKind kind) {
    switch (kind) {
        case ViolationKind::unresolved:
            return "unresolved";
        case ViolationKind::non_finite:
            return "non_finite";
        case ViolationKind::misaligned:
            return "misaligned";
    }
    return "unknown";
}

bool ValidationReport::has(ViolationKind kind) const {
    return std::any_of(violations.begin(), violations.end(), [&](const Violation& v) { return v.kind == kind; });
}

ValidationReport validate(const RewardExpr& expr, const std::vector<std::string>& schema,
                          std::span<const Bindings> probes, const AlignmentRule& rule) {
    if (probes.empty()) throw ContractError("validation needs at least one probe state");
    ValidationReport report;

    for (const auto& name : expr.referenced_features()) {
        if (std::find(schema.begin(), schema.end(), name) == schema.end()) {
            report.violations.push_back({ViolationKind::unresolved, "unknown feature '" + name + "'"});
        }
    }
    if (!report.ok()) return report;

    std::vector<bool> probe_ok(probes.size(), true);
    for (std::size_t i = 0; i < probes.size(); ++i) {
        try {
            (void)evaluate(expr, probes[i]);
        } catch (const EvaluationError& e) {
            probe_ok[i] = false;
            std::ostringstream msg;
            msg << "probe " << i << ": " << e.what();
            report.violations.push_back({ViolationKind::non_finite, msg.str()});
        }
    }

    if (std::find(schema.begin(), schema.end(), rule.feature) == schema.end()) return report;

    std::size_t considered = 0;
    std::size_t aligned = 0;
    for (std::size_t i = 0; i < probes.size(); ++i) {
        if (!probe_ok[i]) continue;
        Bindings moved = probes[i];
        moved[rule.feature] += rule.delta;
        double base = 0.0;
        double shifted = 0.0;
        try {
            base = evaluate(expr, probes[i]);
            shifted = evaluate(expr, moved);
        } catch (const EvaluationError&) {
            continue;
        }
        ++considered;
        const double change = shifted - base;
        if ((rule.direction < 0 && change < 0.0) || (rule.direction > 0 && change > 0.0)) ++aligned;
    }
    const double fraction = considered == 0 ? 0.0 : static_cast<double>(aligned) / static_cast<double>(considered);
    if (considered == 0 || fraction < rule.min_fraction) {
        std::ostringstream msg;
        msg << "reward is strictly " << (rule.direction < 0 ? "decreasing" : "increasing") << " in '"
            << rule.feature << "' on " << aligned << "/" << considered << " probe pairs (need "
            << rule.min_fraction * 100.0 << "%)";
        report.violations.push_back({ViolationKind::misaligned, msg.str()});
    }
    return report;
}

ValidationReport validate_source(std::string_view source, const std::vector<std::string>& schema,
                                 std::span<const Bindings> probes, const AlignmentRule& rule) {
    try {
        return validate(parse(source, schema), schema, probes, rule);
    } catch (const UnknownFeatureError& e) {
        return ValidationReport{{{ViolationKind::unresolved, e.what()}}};
    } catch (const ParseError& e) {
        return ValidationReport{{{ViolationKind::unresolved, e.what()}}};
    }
}

}  // namespace llmrl::dsl
