#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace llmrl::dsl {

/// Feature name -> value. Ordered so iteration (and anything derived from it) is deterministic.
using Bindings = std::map<std::string, double>;

inline constexpr std::size_t kMaxDepth = 32;

enum class BinaryOp { add, sub, mul, div };
enum class Function { min, max, abs, clip, exp, log, sqrt, tanh };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    struct Constant {
        double value;
    };
    struct Feature {
        std::string name;
        std::size_t index;  // position in the schema the expression was parsed against
    };
    struct Negate {
        NodePtr operand;
    };
    struct Binary {
        BinaryOp op;
        NodePtr lhs;
        NodePtr rhs;
    };
    struct Call {
        Function fn;
        std::vector<NodePtr> args;
    };

    std::variant<Constant, Feature, Negate, Binary, Call> value;
};

/// Parsed reward function. Immutable; copies share the tree.
class RewardExpr {
public:
    RewardExpr(NodePtr root, std::string source, std::vector<std::string> schema);

    const Node& root() const noexcept { return *root_; }
    const std::string& source() const noexcept { return source_; }
    const std::vector<std::string>& schema() const noexcept { return schema_; }

    std::size_t node_count() const;
    std::size_t depth() const;
    /// Distinct feature names in first-reference order.
    std::vector<std::string> referenced_features() const;

    /// Canonical text with minimal parentheses; parses back to a structurally equal tree.
    std::string to_string() const;

    /// Tree equality, ignoring source text and schema.
    bool structurally_equal(const RewardExpr& other) const;

private:
    NodePtr root_;
    std::string source_;
    std::vector<std::string> schema_;
};

/// Grammar (precedence low to high, binary operators left-associative):
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := '-' unary | primary
///   primary := number | feature | function '(' expr (',' expr)* ')' | '(' expr ')'
/// Functions: min(a,b) max(a,b) abs(x) clip(x,lo,hi) exp(x) log(x) sqrt(x) tanh(x).
///
/// Throws ParseError (with byte offset) on malformed input or depth overflow and
/// UnknownFeatureError for identifiers outside `schema`.
RewardExpr parse(std::string_view source, const std::vector<std::string>& schema);

/// Evaluates by feature name. Throws EvaluationError on a missing binding, division by
/// zero, log of a non-positive value, sqrt of a negative value, or any non-finite result.
double evaluate(const RewardExpr& expr, const Bindings& bindings);

/// Evaluates with values given in schema order.
double evaluate(const RewardExpr& expr, std::span<const double> values);

std::string_view function_name(Function fn);

}  // namespace llmrl::dsl
