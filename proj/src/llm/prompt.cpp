#include "llmrl/llm/prompt.hpp"

#include <algorithm>
#include <utility>

#include "llmrl/errors.hpp"

namespace llmrl::llm {
namespace detail {
// Defined in the build-generated prompt_assets.cpp.
const std::vector<std::pair<std::string, std::string>>& embedded_prompt_sources();
}  // namespace detail

namespace {

constexpr std::string_view kSystemMarker = "=== system ===";
constexpr std::string_view kUserMarker = "=== user ===";

std::string trim_newlines(std::string s) {
    while (!s.empty() && (s.front() == '\n' || s.front() == '\r')) s.erase(s.begin());
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    return s;
}

bool valid_identifier(const std::string& s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
    });
}

// Walks `text`, calling `on_literal` for plain text and `on_var` for each placeholder.
template <typename Literal, typename Var>
void scan_template(const std::string& text, Literal on_literal, Var on_var) {
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (c == '{' && i + 1 < text.size() && text[i + 1] == '{') {
            on_literal('{');
            i += 2;
        } else if (c == '}' && i + 1 < text.size() && text[i + 1] == '}') {
            on_literal('}');
            i += 2;
        } else if (c == '{') {
            const std::size_t close = text.find('}', i + 1);
            if (close == std::string::npos) {
                throw TemplateError("unterminated placeholder at offset " + std::to_string(i));
            }
            const std::string name = text.substr(i + 1, close - i - 1);
            if (!valid_identifier(name)) throw TemplateError("invalid placeholder '{" + name + "}'");
            on_var(name);
            i = close + 1;
        } else if (c == '}') {
            throw TemplateError("unmatched '}' at offset " + std::to_string(i));
        } else {
            on_literal(c);
            ++i;
        }
    }
}

std::vector<PromptTemplate> load_builtins() {
    std::vector<PromptTemplate> out;
    for (const auto& [name, text] : detail::embedded_prompt_sources()) out.push_back(PromptTemplate::parse(name, text));
    return out;
}

const std::vector<PromptTemplate>& builtins() {
    static const std::vector<PromptTemplate> templates = load_builtins();
    return templates;
}

}  // namespace

PromptTemplate PromptTemplate::parse(const std::string& name, const std::string& text) {
    PromptTemplate t;
    t.name = name;
    std::string body = text;
    if (body.rfind("@version", 0) == 0) {
        const std::size_t eol = body.find('\n');
        const std::string line = body.substr(8, eol == std::string::npos ? std::string::npos : eol - 8);
        try {
            t.version = std::stoi(line);
        } catch (const std::exception&) {
            throw TemplateError("template '" + name + "' has a malformed @version line");
        }
        body = eol == std::string::npos ? std::string() : body.substr(eol + 1);
    }
    const std::size_t sys = body.find(kSystemMarker);
    const std::size_t usr = body.find(kUserMarker);
    if (usr == std::string::npos) throw TemplateError("template '" + name + "' has no user section");
    if (sys != std::string::npos) {
        if (sys > usr) throw TemplateError("template '" + name + "': system section must precede the user section");
        t.system = trim_newlines(body.substr(sys + kSystemMarker.size(), usr - sys - kSystemMarker.size()));
    }
    t.user = trim_newlines(body.substr(usr + kUserMarker.size()));
    // Validate placeholder syntax eagerly.
    (void)t.variables();
    return t;
}

std::vector<std::string> PromptTemplate::variables() const {
    std::vector<std::string> names;
    auto add = [&names](const std::string& n) {
        if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
    };
    scan_template(system, [](char) {}, add);
    scan_template(user, [](char) {}, add);
    return names;
}

std::string substitute(const std::string& text, const TemplateVars& vars) {
    std::string out;
    out.reserve(text.size());
    scan_template(
        text, [&out](char c) { out.push_back(c); },
        [&](const std::string& name) {
            const auto it = vars.find(name);
            if (it == vars.end()) throw TemplateError("unbound template variable '" + name + "'");
            out += it->second;
        });
    return out;
}

std::vector<std::string> builtin_template_names() {
    std::vector<std::string> names;
    for (const auto& t : builtins()) names.push_back(t.name);
    return names;
}

const PromptTemplate& builtin_template(const std::string& name) {
    for (const auto& t : builtins()) {
        if (t.name == name) return t;
    }
    throw TemplateError("unknown prompt template '" + name + "'");
}

ChatRequest render_prompt(const std::string& template_name, const TemplateVars& vars, double temperature) {
    return render_prompt(builtin_template(template_name), vars, temperature);
}

ChatRequest render_prompt(const PromptTemplate& tmpl, const TemplateVars& vars, double temperature) {
    ChatRequest request;
    request.template_name = tmpl.name;
    request.temperature = temperature;
    if (!tmpl.system.empty()) request.messages.push_back({"system", substitute(tmpl.system, vars)});
    request.messages.push_back({"user", substitute(tmpl.user, vars)});
    return request;
}

}  // namespace llmrl::llm
