#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "beergame/game_config.hpp"
#include "beergame/policies.hpp"

namespace beergame {

enum class PolicyKind { dqn, base_stock, sterman, random };

struct PolicySpec {
  PolicyKind kind = PolicyKind::base_stock;
  std::optional<Units> level;             // base stock; defaults to the scenario level
  std::optional<StermanParams> sterman;   // defaults from demand mean and lead times
  std::string weights;                    // dqn weight file
  int m = 0;                              // dqn window; 0 infers it from the network
};

// A named game configuration plus the stationary base-stock levels used for
// base-stock seats and for replacing a learner in comparisons.
struct Scenario {
  std::string name;
  std::string description;
  GameConfig config;
  std::vector<Units> base_stock_levels;
  std::vector<PolicySpec> policies;  // default seat plan
};

std::vector<std::string> preset_names();
// Throws ConfigError for an unknown name.
Scenario preset(const std::string& name);

// A preset name, or a path to a JSON scenario file.
Scenario load_scenario(const std::string& name_or_path);

Scenario scenario_from_json(const std::string& text);
std::string scenario_to_json(const Scenario& scenario, int indent = 2);

// "bs", "basestock", "strm", "sterman", "rand", "random", "dqn".
PolicyKind parse_policy_kind(const std::string& name);
std::string policy_kind_name(PolicyKind kind);

StermanParams default_sterman(const GameConfig& config, int agent);

// Builds the seat policy. DQN seats load their weights from spec.weights.
std::unique_ptr<Policy> make_policy(const PolicySpec& spec, const Scenario& scenario, int agent);

// Every seat playing `kind` with scenario defaults.
std::vector<std::unique_ptr<Policy>> uniform_policies(const Scenario& scenario, PolicyKind kind);

std::vector<const Policy*> raw(const std::vector<std::unique_ptr<Policy>>& policies);

}  // namespace beergame
