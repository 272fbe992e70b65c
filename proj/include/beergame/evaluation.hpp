#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "beergame/game_config.hpp"
#include "beergame/policies.hpp"

namespace beergame {

// Mean with a normal-approximation 95% half-width, 1.96 * s / sqrt(n).
struct CostSummary {
  double mean = 0.0;
  double ci = 0.0;
};

CostSummary summarize(std::span<const double> values);

struct EvalResult {
  int games = 0;
  int periods = 0;  // horizon of each game (0 if it varied)
  std::vector<double> game_totals;               // total cost of each game, all agents
  std::vector<std::vector<double>> agent_games;  // [agent][game]
  CostSummary total;
  std::vector<CostSummary> agents;

  // Total cost per game divided by the horizon.
  double per_period() const;
};

// Deterministic seed list for a validation set.
std::vector<std::uint64_t> evaluation_seeds(std::uint64_t seed, int games);

// Plays one game per seed with one policy per seat. periods > 0 fixes the
// horizon, otherwise the config's horizon law is used.
EvalResult evaluate(const GameConfig& config, std::span<const Policy* const> policies,
                    std::span<const std::uint64_t> seeds, int periods);

}  // namespace beergame
