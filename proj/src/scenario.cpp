#include "beergame/scenario.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "beergame/dqn.hpp"
#include "beergame/errors.hpp"
#include "beergame/mlp.hpp"
#include "json.hpp"

namespace beergame {

using nlohmann::json;

namespace {

PolicySpec spec_of(PolicyKind kind) {
  PolicySpec s;
  s.kind = kind;
  return s;
}

Scenario basic() {
  Scenario s;
  s.name = "basic";
  s.description = "U[0,2] demand, lead times 2/2, c_h = 2, c_p = [2,0,0,0], d+x with x in [-2,2]";
  s.base_stock_levels = {8, 8, 0, 0};
  return s;
}

// Literature instances: manufacturer ships in one period, shipments are seen
// only after ordering, x in [-8,8].
Scenario literature(std::string name) {
  Scenario s;
  s.name = std::move(name);
  s.config.ship_lead = {2, 2, 2, 1};
  s.config.observe_shipment_before_action = false;
  s.config.action_bounds = {-8, 8};
  return s;
}

Scenario uniform() {
  Scenario s = literature("uniform");
  s.description = "U[0,8] demand, c_p = 1, c_h = 0.5 at every stage";
  s.config.demand = UniformDemand{0, 8};
  s.config.shortage_cost = {1, 1, 1, 1};
  s.config.holding_cost = {0.5, 0.5, 0.5, 0.5};
  s.base_stock_levels = {19, 20, 20, 14};
  return s;
}

Scenario normal() {
  Scenario s = literature("normal");
  s.description = "N(10,2^2) demand rounded, c_p = [10,0,0,0], c_h = [1,0.75,0.5,0.25]";
  s.config.demand = NormalDemand{10, 2};
  s.config.shortage_cost = {10, 0, 0, 0};
  s.config.holding_cost = {1, 0.75, 0.5, 0.25};
  s.base_stock_levels = {48, 43, 41, 30};
  return s;
}

Scenario classic() {
  Scenario s = literature("classic");
  s.description = "demand 4 for four periods then 8, c_p = 1, c_h = 0.5 at every stage";
  s.config.demand = ClassicDemand{4, 8, 4};
  s.config.shortage_cost = {1, 1, 1, 1};
  s.config.holding_cost = {0.5, 0.5, 0.5, 0.5};
  s.base_stock_levels = {32, 32, 32, 24};
  return s;
}

// Transfer targets keep the basic game's lead times and timing.
Scenario transfer_case(std::string name, std::string description, std::vector<double> holding,
                       std::vector<double> shortage, ActionBounds bounds,
                       std::vector<Units> levels) {
  Scenario s = basic();
  s.name = std::move(name);
  s.description = std::move(description);
  s.config.holding_cost = std::move(holding);
  s.config.shortage_cost = std::move(shortage);
  s.config.action_bounds = bounds;
  s.base_stock_levels = std::move(levels);
  return s;
}

const std::map<std::string, Scenario (*)()>& registry() {
  static const std::map<std::string, Scenario (*)()> presets{
      {"basic", &basic},
      {"uniform", &uniform},
      {"normal", &normal},
      {"classic", &classic},
      {"case2",
       [] {
         return transfer_case("case2", "basic game with c_h = 5, c_p = [1,0,0,0]", {5, 5, 5, 5},
                              {1, 0, 0, 0}, {-2, 2}, {11, 0, 0, 0});
       }},
      {"case3",
       [] {
         return transfer_case("case3", "basic game with x in [-5,5]", {2, 2, 2, 2}, {2, 0, 0, 0},
                              {-5, 5}, {8, 8, 0, 0});
       }},
      {"case4",
       [] {
         return transfer_case("case4", "basic game with c_h = 10, c_p = [1,0,0,0], x in [-5,5]",
                              {10, 10, 10, 10}, {1, 0, 0, 0}, {-5, 5}, {10, 0, 0, 0});
       }},
      {"case5",
       [] {
         Scenario s = transfer_case("case5",
                                    "N(10,2^2) demand, c_p = [10,0,0,0], "
                                    "c_h = [1,0.75,0.5,0.25], x in [-5,5]",
                                    {1, 0.75, 0.5, 0.25}, {10, 0, 0, 0}, {-5, 5},
                                    {48, 43, 41, 30});
         s.config.demand = NormalDemand{10, 2};
         return s;
       }},
      {"case6-strm",
       [] {
         Scenario s = preset("case5");
         s.name = "case6-strm";
         s.description += ", Sterman co-players";
         s.policies.assign(4, spec_of(PolicyKind::sterman));
         return s;
       }},
      {"case6-rand",
       [] {
         Scenario s = preset("case5");
         s.name = "case6-rand";
         s.description += ", random co-players";
         s.policies.assign(4, spec_of(PolicyKind::random));
         return s;
       }},
  };
  return presets;
}

template <class T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json policy_json(const PolicySpec& p) {
  json j{{"type", policy_kind_name(p.kind)}};
  if (p.level) j["level"] = *p.level;
  if (p.sterman) {
    j["alpha"] = p.sterman->alpha;
    j["beta"] = p.sterman->beta;
    j["inventory_target"] = p.sterman->inventory_target;
    j["on_order_target"] = p.sterman->on_order_target;
  }
  if (!p.weights.empty()) j["weights"] = p.weights;
  if (p.m > 0) j["m"] = p.m;
  return j;
}

PolicySpec policy_from_json(const json& j) {
  PolicySpec p;
  p.kind = parse_policy_kind(j.at("type").get<std::string>());
  if (j.contains("level")) p.level = j.at("level").get<Units>();
  if (j.contains("alpha") || j.contains("beta") || j.contains("inventory_target") ||
      j.contains("on_order_target")) {
    StermanParams s;
    read_opt(j, "alpha", s.alpha);
    read_opt(j, "beta", s.beta);
    read_opt(j, "inventory_target", s.inventory_target);
    read_opt(j, "on_order_target", s.on_order_target);
    p.sterman = s;
  }
  read_opt(j, "weights", p.weights);
  read_opt(j, "m", p.m);
  return p;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [name, make] : registry()) names.push_back(name);
  return names;
}

Scenario preset(const std::string& name) {
  const auto& presets = registry();
  const auto it = presets.find(name);
  if (it == presets.end()) throw ConfigError("unknown scenario preset '" + name + "'");
  Scenario s = it->second();
  if (s.policies.empty()) s.policies.assign(s.config.num_agents, PolicySpec{});
  return s;
}

Scenario load_scenario(const std::string& name_or_path) {
  if (registry().count(name_or_path)) return preset(name_or_path);
  if (!std::filesystem::exists(name_or_path)) {
    throw ConfigError("'" + name_or_path + "' is neither a preset nor a scenario file");
  }
  std::ifstream in(name_or_path);
  std::stringstream text;
  text << in.rdbuf();
  return scenario_from_json(text.str());
}

Scenario scenario_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
  }
  try {
    // A file may start from a preset and override fields.
    Scenario s = j.contains("preset") ? preset(j.at("preset").get<std::string>()) : Scenario{};
    GameConfig& c = s.config;
    read_opt(j, "name", s.name);
    read_opt(j, "description", s.description);
    read_opt(j, "num_agents", c.num_agents);
    if (j.contains("num_agents") && !j.contains("preset")) {
      const auto n = std::size_t(c.num_agents);
      c.info_lead.assign(n, 2);
      c.ship_lead.assign(n, 2);
      c.holding_cost.assign(n, 2);
      c.shortage_cost.assign(n, 0);
      if (n > 0) c.shortage_cost[0] = 2;
      c.initial_inventory.assign(n, 0);
      c.initial_orders.assign(n, {});
      c.initial_shipments.assign(n, {});
    }
    read_opt(j, "info_lead", c.info_lead);
    read_opt(j, "ship_lead", c.ship_lead);
    read_opt(j, "holding_cost", c.holding_cost);
    read_opt(j, "shortage_cost", c.shortage_cost);
    read_opt(j, "observe_shipment_before_action", c.observe_shipment_before_action);
    read_opt(j, "initial_inventory", c.initial_inventory);
    read_opt(j, "initial_orders", c.initial_orders);
    read_opt(j, "initial_shipments", c.initial_shipments);
    read_opt(j, "gamma", c.gamma);
    if (j.contains("action_bounds")) {
      const auto b = j.at("action_bounds").get<std::vector<int>>();
      if (b.size() != 2) throw ConfigError("action_bounds must be [lower, upper]");
      c.action_bounds = {b[0], b[1]};
    }
    if (j.contains("demand")) {
      const json& d = j.at("demand");
      const auto type = d.at("type").get<std::string>();
      if (type == "uniform") {
        c.demand = UniformDemand{d.at("lo").get<Units>(), d.at("hi").get<Units>()};
      } else if (type == "normal") {
        c.demand = NormalDemand{d.at("mu").get<double>(), d.at("sigma").get<double>()};
      } else if (type == "classic") {
        c.demand = ClassicDemand{d.at("early").get<Units>(), d.at("late").get<Units>(),
                                 d.at("switch").get<int>()};
      } else {
        throw ConfigError("unknown demand type '" + type + "'");
      }
    }
    if (j.contains("horizon")) {
      const json& h = j.at("horizon");
      const auto type = h.at("type").get<std::string>();
      if (type == "fixed") {
        c.horizon = FixedHorizon{h.at("periods").get<int>()};
      } else if (type == "uniform") {
        c.horizon = UniformHorizon{h.at("lo").get<int>(), h.at("hi").get<int>()};
      } else {
        throw ConfigError("unknown horizon type '" + type + "'");
      }
    }
    read_opt(j, "base_stock_levels", s.base_stock_levels);
    if (j.contains("policies")) {
      s.policies.clear();
      for (const auto& p : j.at("policies")) s.policies.push_back(policy_from_json(p));
    }
    if (s.policies.empty()) s.policies.assign(c.num_agents, PolicySpec{});
    if (s.base_stock_levels.empty()) s.base_stock_levels.assign(c.num_agents, 0);
    c.validate();
    if (static_cast<int>(s.base_stock_levels.size()) != c.num_agents) {
      throw ConfigError("base_stock_levels needs one entry per agent");
    }
    if (static_cast<int>(s.policies.size()) != c.num_agents) {
      throw ConfigError("policies needs one entry per agent");
    }
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed scenario: ") + e.what());
  }
}

std::string scenario_to_json(const Scenario& s, int indent) {
  const GameConfig& c = s.config;
  json j;
  j["name"] = s.name;
  j["description"] = s.description;
  j["num_agents"] = c.num_agents;
  j["info_lead"] = c.info_lead;
  j["ship_lead"] = c.ship_lead;
  j["holding_cost"] = c.holding_cost;
  j["shortage_cost"] = c.shortage_cost;
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, UniformDemand>) {
          j["demand"] = {{"type", "uniform"}, {"lo", d.lo}, {"hi", d.hi}};
        } else if constexpr (std::is_same_v<T, NormalDemand>) {
          j["demand"] = {{"type", "normal"}, {"mu", d.mu}, {"sigma", d.sigma}};
        } else {
          j["demand"] = {
              {"type", "classic"}, {"early", d.early}, {"late", d.late}, {"switch", d.switch_period}};
        }
      },
      c.demand);
  std::visit(
      [&](const auto& h) {
        using T = std::decay_t<decltype(h)>;
        if constexpr (std::is_same_v<T, FixedHorizon>) {
          j["horizon"] = {{"type", "fixed"}, {"periods", h.periods}};
        } else {
          j["horizon"] = {{"type", "uniform"}, {"lo", h.lo}, {"hi", h.hi}};
        }
      },
      c.horizon);
  j["action_bounds"] = {c.action_bounds.lower, c.action_bounds.upper};
  j["observe_shipment_before_action"] = c.observe_shipment_before_action;
  j["initial_inventory"] = c.initial_inventory;
  j["initial_orders"] = c.initial_orders;
  j["initial_shipments"] = c.initial_shipments;
  j["gamma"] = c.gamma;
  j["base_stock_levels"] = s.base_stock_levels;
  j["policies"] = json::array();
  for (const auto& p : s.policies) j["policies"].push_back(policy_json(p));
  return j.dump(indent);
}

PolicyKind parse_policy_kind(const std::string& name) {
  if (name == "bs" || name == "basestock" || name == "base_stock") return PolicyKind::base_stock;
  if (name == "strm" || name == "sterman") return PolicyKind::sterman;
  if (name == "rand" || name == "random") return PolicyKind::random;
  if (name == "dqn") return PolicyKind::dqn;
  throw ConfigError("unknown policy '" + name + "' (expected bs, strm, rand or dqn)");
}

std::string policy_kind_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::dqn: return "dqn";
    case PolicyKind::base_stock: return "basestock";
    case PolicyKind::sterman: return "sterman";
    case PolicyKind::random: return "random";
  }
  return "?";
}

StermanParams default_sterman(const GameConfig& config, int agent) {
  return StermanParams::defaults(demand_mean(config.demand), config.info_lead[agent],
                                 config.ship_lead[agent]);
}

std::unique_ptr<Policy> make_policy(const PolicySpec& spec, const Scenario& scenario, int agent) {
  if (agent < 0 || agent >= scenario.config.num_agents) {
    throw ConfigError("seat index out of range");
  }
  switch (spec.kind) {
    case PolicyKind::base_stock:
      return std::make_unique<BaseStockPolicy>(
          spec.level.value_or(scenario.base_stock_levels.at(agent)));
    case PolicyKind::sterman:
      return std::make_unique<StermanPolicy>(
          spec.sterman.value_or(default_sterman(scenario.config, agent)));
    case PolicyKind::random:
      return std::make_unique<RandomPolicy>(scenario.config.action_bounds);
    case PolicyKind::dqn: {
      if (spec.weights.empty()) throw ConfigError("dqn seat needs a weight file");
      auto net = std::make_shared<const Mlp>(Mlp::load_file(spec.weights));
      const int m = spec.m > 0 ? spec.m : net->input_size() / kFeaturesPerPeriod;
      return std::make_unique<DqnPolicy>(std::move(net), m, scenario.config.action_bounds);
    }
  }
  throw ConfigError("unsupported policy kind");
}

std::vector<std::unique_ptr<Policy>> uniform_policies(const Scenario& scenario, PolicyKind kind) {
  std::vector<std::unique_ptr<Policy>> out;
  for (int i = 0; i < scenario.config.num_agents; ++i) {
    out.push_back(make_policy(spec_of(kind), scenario, i));
  }
  return out;
}

std::vector<const Policy*> raw(const std::vector<std::unique_ptr<Policy>>& policies) {
  std::vector<const Policy*> out;
  for (const auto& p : policies) out.push_back(p.get());
  return out;
}

}  // namespace beergame
