#include "beergame/game_config.hpp"

#include <cmath>
#include <string>

#include "beergame/errors.hpp"

namespace beergame {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

template <class T>
void require_size(const std::vector<T>& v, int n, const char* name) {
  require(static_cast<int>(v.size()) == n,
          std::string(name) + " must have one entry per agent (" +
              std::to_string(n) + "), got " + std::to_string(v.size()));
}

}  // namespace

void GameConfig::validate() const {
  require(num_agents >= 2, "num_agents must be at least 2");
  require_size(info_lead, num_agents, "info_lead");
  require_size(ship_lead, num_agents, "ship_lead");
  require_size(holding_cost, num_agents, "holding_cost");
  require_size(shortage_cost, num_agents, "shortage_cost");
  require_size(initial_inventory, num_agents, "initial_inventory");
  require_size(initial_orders, num_agents, "initial_orders");
  require_size(initial_shipments, num_agents, "initial_shipments");
  for (int i = 0; i < num_agents; ++i) {
    require(info_lead[i] >= 0, "info_lead must be >= 0");
    require(ship_lead[i] >= 1, "ship_lead must be >= 1");
    require(holding_cost[i] >= 0 && std::isfinite(holding_cost[i]),
            "holding_cost must be finite and >= 0");
    require(shortage_cost[i] >= 0 && std::isfinite(shortage_cost[i]),
            "shortage_cost must be finite and >= 0");
    for (Units u : initial_orders[i]) require(u >= 0, "initial_orders must be >= 0");
    for (Units u : initial_shipments[i])
      require(u >= 0, "initial_shipments must be >= 0");
  }
  require(action_bounds.lower <= action_bounds.upper,
          "action_bounds: lower must not exceed upper");
  require(action_bounds.lower <= 0 && action_bounds.upper >= 0,
          "action_bounds must contain 0");
  require(gamma >= 0.0 && gamma <= 1.0, "gamma must lie in [0, 1]");
  std::visit(Overloaded{
                 [](const UniformDemand& d) {
                   require(d.lo >= 0 && d.lo <= d.hi, "uniform demand needs 0 <= lo <= hi");
                 },
                 [](const NormalDemand& d) {
                   require(std::isfinite(d.mu) && d.sigma >= 0 && std::isfinite(d.sigma),
                           "normal demand needs finite mu and sigma >= 0");
                 },
                 [](const ClassicDemand& d) {
                   require(d.early >= 0 && d.late >= 0 && d.switch_period >= 0,
                           "classic demand values must be >= 0");
                 },
             },
             demand);
  std::visit(Overloaded{
                 [](const FixedHorizon& h) { require(h.periods >= 1, "horizon must be >= 1"); },
                 [](const UniformHorizon& h) {
                   require(h.lo >= 1 && h.lo <= h.hi, "horizon range needs 1 <= lo <= hi");
                 },
             },
             horizon);
}

GameConfig GameConfig::with_fixed_horizon(int periods) const {
  GameConfig copy = *this;
  copy.horizon = FixedHorizon{periods};
  return copy;
}

Units sample_demand(const DemandLaw& law, int period, Rng& rng) {
  return std::visit(
      Overloaded{
          [&](const UniformDemand& d) -> Units {
            return std::uniform_int_distribution<Units>(d.lo, d.hi)(rng);
          },
          [&](const NormalDemand& d) -> Units {
            double x = std::normal_distribution<double>(d.mu, d.sigma)(rng);
            return std::max<Units>(0, static_cast<Units>(std::llround(x)));
          },
          [&](const ClassicDemand& d) -> Units {
            return period < d.switch_period ? d.early : d.late;
          },
      },
      law);
}

int sample_horizon(const HorizonLaw& law, Rng& rng) {
  return std::visit(Overloaded{
                        [](const FixedHorizon& h) { return h.periods; },
                        [&](const UniformHorizon& h) {
                          return std::uniform_int_distribution<int>(h.lo, h.hi)(rng);
                        },
                    },
                    law);
}

double demand_mean(const DemandLaw& law) {
  return std::visit(Overloaded{
                        [](const UniformDemand& d) { return 0.5 * double(d.lo + d.hi); },
                        [](const NormalDemand& d) { return d.mu; },
                        [](const ClassicDemand& d) { return double(d.late); },
                    },
                    law);
}

double horizon_mean(const HorizonLaw& law) {
  return std::visit(Overloaded{
                        [](const FixedHorizon& h) { return double(h.periods); },
                        [](const UniformHorizon& h) { return 0.5 * double(h.lo + h.hi); },
                    },
                    law);
}

}  // namespace beergame
