#include "llmrl/dsl/reward_expr.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cctype>
#include <cmath>
#include <optional>
#include <unordered_set>

#include "llmrl/errors.hpp"

namespace llmrl::dsl {
namespace {

struct FunctionInfo {
    std::string_view name;
    Function fn;
    std::size_t arity;
};

constexpr std::array<FunctionInfo, 8> kFunctions{{
    {"min", Function::min, 2},
    {"max", Function::max, 2},
    {"abs", Function::abs, 1},
    {"clip", Function::clip, 3},
    {"exp", Function::exp, 1},
    {"log", Function::log, 1},
    {"sqrt", Function::sqrt, 1},
    {"tanh", Function::tanh, 1},
}};

std::optional<FunctionInfo> lookup_function(std::string_view name) {
    for (const auto& info : kFunctions) {
        if (info.name == name) return info;
    }
    return std::nullopt;
}

// Recursion guard for the descent itself; the AST depth limit is checked separately.
constexpr std::size_t kMaxNesting = 4 * kMaxDepth;

class Parser {
public:
    Parser(std::string_view text, const std::vector<std::string>& schema) : text_(text), schema_(schema) {}

    NodePtr parse_all() {
        skip_space();
        NodePtr root = parse_expr(0);
        skip_space();
        if (pos_ < text_.size()) {
            throw ParseError(std::string("unexpected '") + text_[pos_] + "'", pos_);
        }
        return root;
    }

private:
    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool peek(char c) {
        skip_space();
        return pos_ < text_.size() && text_[pos_] == c;
    }

    void expect(char c) {
        skip_space();
        if (pos_ >= text_.size()) {
            throw ParseError(std::string("expected '") + c + "' but reached end of input", pos_);
        }
        if (text_[pos_] != c) {
            throw ParseError(std::string("expected '") + c + "' but found '" + text_[pos_] + "'", pos_);
        }
        ++pos_;
    }

    void enter(std::size_t nesting) const {
        if (nesting > kMaxNesting) throw ParseError("expression nesting too deep", pos_);
    }

    NodePtr parse_expr(std::size_t nesting) {
        enter(nesting);
        NodePtr lhs = parse_term(nesting + 1);
        for (;;) {
            skip_space();
            if (pos_ >= text_.size()) break;
            const char c = text_[pos_];
            if (c != '+' && c != '-') break;
            ++pos_;
            NodePtr rhs = parse_term(nesting + 1);
            lhs = make(Node::Binary{c == '+' ? BinaryOp::add : BinaryOp::sub, lhs, rhs});
        }
        return lhs;
    }

    NodePtr parse_term(std::size_t nesting) {
        enter(nesting);
        NodePtr lhs = parse_unary(nesting + 1);
        for (;;) {
            skip_space();
            if (pos_ >= text_.size()) break;
            const char c = text_[pos_];
            if (c != '*' && c != '/') break;
            ++pos_;
            NodePtr rhs = parse_unary(nesting + 1);
            lhs = make(Node::Binary{c == '*' ? BinaryOp::mul : BinaryOp::div, lhs, rhs});
        }
        return lhs;
    }

    NodePtr parse_unary(std::size_t nesting) {
        enter(nesting);
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == '-') {
            ++pos_;
            return make(Node::Negate{parse_unary(nesting + 1)});
        }
        return parse_primary(nesting + 1);
    }

    NodePtr parse_primary(std::size_t nesting) {
        enter(nesting);
        skip_space();
        if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr inner = parse_expr(nesting + 1);
            expect(')');
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier(nesting);
        throw ParseError(std::string("unexpected '") + c + "'", pos_);
    }

    NodePtr parse_number() {
        const std::size_t start = pos_;
        auto digits = [&] {
            std::size_t n = 0;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                ++pos_;
                ++n;
            }
            return n;
        };
        std::size_t mantissa = digits();
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            mantissa += digits();
        }
        if (mantissa == 0) throw ParseError("malformed number", start);
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (digits() == 0) throw ParseError("malformed exponent", pos_);
        }
        double value = 0.0;
        const char* first = text_.data() + start;
        const char* last = text_.data() + pos_;
        auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
            throw ParseError("number out of range", start);
        }
        return make(Node::Constant{value});
    }

    NodePtr parse_identifier(std::size_t nesting) {
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
            ++pos_;
        }
        const std::string name(text_.substr(start, pos_ - start));
        if (peek('(')) {
            auto info = lookup_function(name);
            if (!info) throw ParseError("unknown function '" + name + "'", start);
            expect('(');
            std::vector<NodePtr> args;
            args.push_back(parse_expr(nesting + 1));
            while (peek(',')) {
                expect(',');
                args.push_back(parse_expr(nesting + 1));
            }
            if (args.size() != info->arity) {
                throw ParseError(name + " expects " + std::to_string(info->arity) + " argument(s), got " +
                                     std::to_string(args.size()),
                                 start);
            }
            expect(')');
            return make(Node::Call{info->fn, std::move(args)});
        }
        auto it = std::find(schema_.begin(), schema_.end(), name);
        if (it == schema_.end()) throw UnknownFeatureError(name);
        return make(Node::Feature{name, static_cast<std::size_t>(it - schema_.begin())});
    }

    template <typename T>
    static NodePtr make(T value) {
        return std::make_shared<const Node>(Node{std::move(value)});
    }

    std::string_view text_;
    const std::vector<std::string>& schema_;
    std::size_t pos_ = 0;
};

std::size_t count_nodes(const Node& node) {
    return std::visit(
        [](const auto& n) -> std::size_t {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Node::Negate>) {
                return 1 + count_nodes(*n.operand);
            } else if constexpr (std::is_same_v<T, Node::Binary>) {
                return 1 + count_nodes(*n.lhs) + count_nodes(*n.rhs);
            } else if constexpr (std::is_same_v<T, Node::Call>) {
                std::size_t total = 1;
                for (const auto& a : n.args) total += count_nodes(*a);
                return total;
            } else {
                return 1;
            }
        },
        node.value);
}

std::size_t node_depth(const Node& node) {
    return std::visit(
        [](const auto& n) -> std::size_t {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Node::Negate>) {
                return 1 + node_depth(*n.operand);
            } else if constexpr (std::is_same_v<T, Node::Binary>) {
                return 1 + std::max(node_depth(*n.lhs), node_depth(*n.rhs));
            } else if constexpr (std::is_same_v<T, Node::Call>) {
                std::size_t deepest = 0;
                for (const auto& a : n.args) deepest = std::max(deepest, node_depth(*a));
                return 1 + deepest;
            } else {
                return 1;
            }
        },
        node.value);
}

void collect_features(const Node& node, std::vector<std::string>& out) {
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Node::Feature>) {
                if (std::find(out.begin(), out.end(), n.name) == out.end()) out.push_back(n.name);
            } else if constexpr (std::is_same_v<T, Node::Negate>) {
                collect_features(*n.operand, out);
            } else if constexpr (std::is_same_v<T, Node::Binary>) {
                collect_features(*n.lhs, out);
                collect_features(*n.rhs, out);
            } else if constexpr (std::is_same_v<T, Node::Call>) {
                for (const auto& a : n.args) collect_features(*a, out);
            }
        },
        node.value);
}

bool equal_nodes(const Node& a, const Node& b) {
    if (a.value.index() != b.value.index()) return false;
    return std::visit(
        [&](const auto& x) -> bool {
            using T = std::decay_t<decltype(x)>;
            const auto& y = std::get<T>(b.value);
            if constexpr (std::is_same_v<T, Node::Constant>) {
                return x.value == y.value;
            } else if constexpr (std::is_same_v<T, Node::Feature>) {
                return x.name == y.name;
            } else if constexpr (std::is_same_v<T, Node::Negate>) {
                return equal_nodes(*x.operand, *y.operand);
            } else if constexpr (std::is_same_v<T, Node::Binary>) {
                return x.op == y.op && equal_nodes(*x.lhs, *y.lhs) && equal_nodes(*x.rhs, *y.rhs);
            } else {
                if (x.fn != y.fn || x.args.size() != y.args.size()) return false;
                for (std::size_t i = 0; i < x.args.size(); ++i) {
                    if (!equal_nodes(*x.args[i], *y.args[i])) return false;
                }
                return true;
            }
        },
        a.value);
}

int precedence(const Node& node) {
    if (const auto* bin = std::get_if<Node::Binary>(&node.value)) {
        return (bin->op == BinaryOp::add || bin->op == BinaryOp::sub) ? 1 : 2;
    }
    if (std::holds_alternative<Node::Negate>(node.value)) return 3;
    return 4;
}

std::string format_number(double value) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    (void)ec;
    return std::string(buf.data(), ptr);
}

void print_node(const Node& node, std::string& out) {
    auto child = [&](const Node& c, bool parens) {
        if (parens) out += '(';
        print_node(c, out);
        if (parens) out += ')';
    };
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Node::Constant>) {
                out += format_number(n.value);
            } else if constexpr (std::is_same_v<T, Node::Feature>) {
                out += n.name;
            } else if constexpr (std::is_same_v<T, Node::Negate>) {
                out += '-';
                child(*n.operand, precedence(*n.operand) < 3);
            } else if constexpr (std::is_same_v<T, Node::Binary>) {
                const int p = precedence(node);
                child(*n.lhs, precedence(*n.lhs) < p);
                switch (n.op) {
                    case BinaryOp::add: out += " + "; break;
                    case BinaryOp::sub: out += " - "; break;
                    case BinaryOp::mul: out += " * "; break;
                    case BinaryOp::div: out += " / "; break;
                }
                child(*n.rhs, precedence(*n.rhs) <= p);
            } else {
                out += function_name(n.fn);
                out += '(';
                for (std::size_t i = 0; i < n.args.size(); ++i) {
                    if (i > 0) out += ", ";
                    print_node(*n.args[i], out);
                }
                out += ')';
            }
        },
        node.value);
}

double checked(double value, const char* what) {
    if (!std::isfinite(value)) throw EvaluationError(std::string("non-finite result from ") + what);
    return value;
}

template <typename Lookup>
double eval_node(const Node& node, const Lookup& lookup) {
    return std::visit(
        [&](const auto& n) -> double {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Node::Constant>) {
                return n.value;
            } else if constexpr (std::is_same_v<T, Node::Feature>) {
                return lookup(n);
            } else if constexpr (std::is_same_v<T, Node::Negate>) {
                return -eval_node(*n.operand, lookup);
            } else if constexpr (std::is_same_v<T, Node::Binary>) {
                const double a = eval_node(*n.lhs, lookup);
                const double b = eval_node(*n.rhs, lookup);
                switch (n.op) {
                    case BinaryOp::add: return checked(a + b, "addition");
                    case BinaryOp::sub: return checked(a - b, "subtraction");
                    case BinaryOp::mul: return checked(a * b, "multiplication");
                    case BinaryOp::div:
                        if (b == 0.0) throw EvaluationError("division by zero");
                        return checked(a / b, "division");
                }
                return 0.0;
            } else {
                double args[3] = {0.0, 0.0, 0.0};
                for (std::size_t i = 0; i < n.args.size(); ++i) args[i] = eval_node(*n.args[i], lookup);
                switch (n.fn) {
                    case Function::min: return std::min(args[0], args[1]);
                    case Function::max: return std::max(args[0], args[1]);
                    case Function::abs: return std::abs(args[0]);
                    case Function::clip:
                        if (args[1] > args[2]) throw EvaluationError("clip lower bound exceeds upper bound");
                        return std::clamp(args[0], args[1], args[2]);
                    case Function::exp: return checked(std::exp(args[0]), "exp");
                    case Function::log:
                        if (args[0] <= 0.0) throw EvaluationError("log of non-positive value");
                        return std::log(args[0]);
                    case Function::sqrt:
                        if (args[0] < 0.0) throw EvaluationError("sqrt of negative value");
                        return std::sqrt(args[0]);
                    case Function::tanh: return std::tanh(args[0]);
                }
                return 0.0;
            }
        },
        node.value);
}

}  // namespace

std::string_view function_name(Function fn) {
    for (const auto& info : kFunctions) {
        if (info.fn == fn) return info.name;
    }
    return "?";
}

RewardExpr::RewardExpr(NodePtr root, std::string source, std::vector<std::string> schema)
    : root_(std::move(root)), source_(std::move(source)), schema_(std::move(schema)) {}

std::size_t RewardExpr::node_count() const { return count_nodes(*root_); }

std::size_t RewardExpr::depth() const { return node_depth(*root_); }

std::vector<std::string> RewardExpr::referenced_features() const {
    std::vector<std::string> out;
    collect_features(*root_, out);
    return out;
}

std::string RewardExpr::to_string() const {
    std::string out;
    print_node(*root_, out);
    return out;
}

bool RewardExpr::structurally_equal(const RewardExpr& other) const { return equal_nodes(*root_, *other.root_); }

RewardExpr parse(std::string_view source, const std::vector<std::string>& schema) {
    Parser parser(source, schema);
    NodePtr root = parser.parse_all();
    const std::size_t depth = node_depth(*root);
    if (depth > kMaxDepth) {
        throw ParseError("expression depth " + std::to_string(depth) + " exceeds limit " +
                             std::to_string(kMaxDepth),
                         0);
    }
    return RewardExpr(std::move(root), std::string(source), schema);
}

double evaluate(const RewardExpr& expr, const Bindings& bindings) {
    auto lookup = [&](const Node::Feature& f) {
        auto it = bindings.find(f.name);
        if (it == bindings.end()) throw EvaluationError("missing binding for feature '" + f.name + "'");
        return it->second;
    };
    return checked(eval_node(expr.root(), lookup), "expression");
}

double evaluate(const RewardExpr& expr, std::span<const double> values) {
    if (values.size() != expr.schema().size()) {
        throw EvaluationError("expected " + std::to_string(expr.schema().size()) + " feature values, got " +
                              std::to_string(values.size()));
    }
    auto lookup = [&](const Node::Feature& f) { return values[f.index]; };
    return checked(eval_node(expr.root(), lookup), "expression");
}

}  // namespace llmrl::dsl
