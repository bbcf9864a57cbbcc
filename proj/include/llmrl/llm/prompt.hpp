#pragma once

#include <map>
#include <string>
#include <vector>

#include "llmrl/llm/gateway.hpp"

namespace llmrl::llm {

using TemplateVars = std::map<std::string, std::string>;

/// A prompt template with "=== system ===" and "=== user ===" sections. Placeholders are
/// written {name}; "{{" and "}}" produce literal braces. An optional first line
/// "@version N" tags the template revision.
struct PromptTemplate {
    std::string name;
    int version = 1;
    std::string system;
    std::string user;

    /// Throws TemplateError for a malformed template.
    static PromptTemplate parse(const std::string& name, const std::string& text);
    /// Placeholder names in order of first appearance.
    std::vector<std::string> variables() const;
};

/// Substitutes placeholders; throws TemplateError naming the first unbound variable.
std::string substitute(const std::string& text, const TemplateVars& vars);

/// Names of the templates embedded in the library.
std::vector<std::string> builtin_template_names();
/// Throws TemplateError for an unknown name.
const PromptTemplate& builtin_template(const std::string& name);

/// Renders a built-in template into a chat request (system message first).
ChatRequest render_prompt(const std::string& template_name, const TemplateVars& vars, double temperature = 0.7);
ChatRequest render_prompt(const PromptTemplate& tmpl, const TemplateVars& vars, double temperature = 0.7);

}  // namespace llmrl::llm
