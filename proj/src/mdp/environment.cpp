#include "llmrl/mdp/environment.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "llmrl/errors.hpp"

namespace llmrl::mdp {

ActionSpace ActionSpace::discrete(int count) {
    if (count <= 0) throw ConfigError("discrete action space needs a positive cardinality");
    ActionSpace space;
    space.count = count;
    return space;
}

ActionSpace ActionSpace::continuous(Eigen::VectorXd low, Eigen::VectorXd high) {
    if (low.size() == 0 || low.size() != high.size()) {
        throw ConfigError("continuous action bounds must be non-empty and of equal length");
    }
    for (Eigen::Index i = 0; i < low.size(); ++i) {
        if (!(low[i] < high[i])) throw ConfigError("continuous action bound low must be below high");
    }
    ActionSpace space;
    space.low = std::move(low);
    space.high = std::move(high);
    return space;
}

void EnvSpec::check() const {
    if (state_dim == 0) throw ConfigError("state_dim must be positive");
    if (feature_names.size() != state_dim) {
        throw ConfigError("feature_names has " + std::to_string(feature_names.size()) + " entries, state_dim is " +
                          std::to_string(state_dim));
    }
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
    if (max_steps_per_episode <= 0) throw ConfigError("max_steps_per_episode must be positive");
    if (action.dim() == 0) throw ConfigError("action space is empty");
    if (feature_scales.size() != 0) {
        if (static_cast<std::size_t>(feature_scales.size()) != state_dim) {
            throw ConfigError("feature_scales length must equal state_dim");
        }
        if (!(feature_scales.array() > 0.0).all()) throw ConfigError("feature_scales must be positive");
    }
}

std::optional<std::size_t> EnvSpec::feature_index(const std::string& name) const {
    auto it = std::find(feature_names.begin(), feature_names.end(), name);
    if (it == feature_names.end()) return std::nullopt;
    return static_cast<std::size_t>(it - feature_names.begin());
}

std::int64_t Action::index() const {
    if (!is_discrete()) throw UsageError("continuous action has no discrete index");
    return std::get<std::int64_t>(value_);
}

const Eigen::VectorXd& Action::values() const {
    if (is_discrete()) throw UsageError("discrete action has no continuous values");
    return std::get<Eigen::VectorXd>(value_);
}

bool operator==(const Action& a, const Action& b) {
    if (a.is_discrete() != b.is_discrete()) return false;
    if (a.is_discrete()) return a.index() == b.index();
    return a.values().size() == b.values().size() && a.values() == b.values();
}

void check_action(const ActionSpace& space, const Action& action) {
    if (space.is_discrete()) {
        if (!action.is_discrete()) throw ContractError("expected a discrete action");
        if (action.index() < 0 || action.index() >= space.count) {
            throw ContractError("discrete action " + std::to_string(action.index()) + " outside [0, " +
                                std::to_string(space.count) + ")");
        }
        return;
    }
    if (action.is_discrete()) throw ContractError("expected a continuous action");
    const auto& v = action.values();
    if (v.size() != space.low.size()) {
        throw ContractError("action has " + std::to_string(v.size()) + " dimensions, expected " +
                            std::to_string(space.low.size()));
    }
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i]) || v[i] < space.low[i] || v[i] > space.high[i]) {
            std::ostringstream msg;
            msg << "action dimension " << i << " = " << v[i] << " outside [" << space.low[i] << ", "
                << space.high[i] << "]";
            throw ContractError(msg.str());
        }
    }
}

Eigen::VectorXd Environment::reset(std::uint64_t seed) {
    steps_ = 0;
    done_ = false;
    started_ = true;
    return do_reset(seed);
}

StepResult Environment::step(const Action& action) {
    if (!started_) throw UsageError("step called before reset");
    if (done_) throw UsageError("step called after the episode finished");
    check_action(spec().action, action);
    StepResult result = do_step(action);
    ++steps_;
    if (!result.done && steps_ >= spec().max_steps_per_episode) {
        result.done = true;
        result.truncated = true;
    }
    done_ = result.done;
    return result;
}

}  // namespace llmrl::mdp
