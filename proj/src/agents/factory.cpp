#include "llmrl/agents/factory.hpp"

#include "llmrl/agents/ddpg.hpp"
#include "llmrl/agents/dqn.hpp"
#include "llmrl/agents/tqc.hpp"
#include "llmrl/errors.hpp"

namespace llmrl::agents {

bool is_known_agent(const std::string& name) {
    return name == "dqn" || name == "ddpg" || name == "td3" || name == "tqc";
}

std::unique_ptr<Agent> make_agent(const std::string& name, const mdp::EnvSpec& spec, const AgentConfig& config) {
    if (name == "dqn") return std::make_unique<DqnAgent>(spec, config);
    if (name == "ddpg") return std::make_unique<DdpgAgent>(spec, config);
    if (name == "td3") return std::make_unique<Td3Agent>(spec, config);
    if (name == "tqc") return std::make_unique<TqcAgent>(spec, config);
    throw ConfigError("unknown agent '" + name + "'");
}

}  // namespace llmrl::agents
