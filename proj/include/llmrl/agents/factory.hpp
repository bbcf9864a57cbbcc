#pragma once

#include <memory>
#include <string>

#include "llmrl/agents/agent.hpp"

namespace llmrl::agents {

/// Builds "dqn", "ddpg", "td3" or "tqc"; throws ConfigError for other names.
/// True for the names make_agent accepts.
bool is_known_agent(const std::string& name);

std::unique_ptr<Agent> make_agent(const std::string& name, const mdp::EnvSpec& spec, const AgentConfig& config);

}  // namespace llmrl::agents
