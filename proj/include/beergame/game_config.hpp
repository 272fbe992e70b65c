#pragma once

#include <cstdint>
#include <random>
#include <variant>
#include <vector>

namespace beergame {

// Orders, shipments and inventory are integral throughout the game.
using Units = std::int64_t;
using Rng = std::mt19937_64;

struct UniformDemand {
  Units lo = 0;
  Units hi = 2;
};

// Normal draw rounded to the nearest integer and clamped below at zero.
struct NormalDemand {
  double mu = 10.0;
  double sigma = 2.0;
};

// `early` for periods t < switch_period, `late` afterwards.
struct ClassicDemand {
  Units early = 4;
  Units late = 8;
  int switch_period = 4;
};

using DemandLaw = std::variant<UniformDemand, NormalDemand, ClassicDemand>;

struct FixedHorizon {
  int periods = 100;
};

struct UniformHorizon {
  int lo = 100;
  int hi = 110;
};

using HorizonLaw = std::variant<FixedHorizon, UniformHorizon>;

// Bounds of the adjustment x in the d+x ordering rule.
struct ActionBounds {
  int lower = -2;
  int upper = 2;

  int size() const { return upper - lower + 1; }
};

// Full parameterization of one serial beer-game scenario. Agent 0 is the
// retailer, agent num_agents-1 the manufacturer.
struct GameConfig {
  int num_agents = 4;
  std::vector<int> info_lead{2, 2, 2, 2};
  std::vector<int> ship_lead{2, 2, 2, 2};
  std::vector<double> holding_cost{2, 2, 2, 2};
  std::vector<double> shortage_cost{2, 0, 0, 0};
  DemandLaw demand = UniformDemand{0, 2};
  HorizonLaw horizon = UniformHorizon{100, 110};
  ActionBounds action_bounds{};
  bool observe_shipment_before_action = true;
  std::vector<Units> initial_inventory{0, 0, 0, 0};
  // initial_orders[i][k]: units of orders arriving to agent i in period k.
  std::vector<std::vector<Units>> initial_orders{{}, {}, {}, {}};
  // initial_shipments[i][k]: units of shipments arriving to agent i in period k.
  std::vector<std::vector<Units>> initial_shipments{{}, {}, {}, {}};
  double gamma = 1.0;

  // Throws ConfigError describing the first violated constraint.
  void validate() const;

  // Copy with a fixed horizon, used by evaluation runs.
  GameConfig with_fixed_horizon(int periods) const;
};

Units sample_demand(const DemandLaw& law, int period, Rng& rng);
int sample_horizon(const HorizonLaw& law, Rng& rng);

// Analytic mean of the law. Classic demand reports the late-phase value.
double demand_mean(const DemandLaw& law);

// Expected horizon length.
double horizon_mean(const HorizonLaw& law);

}  // namespace beergame
