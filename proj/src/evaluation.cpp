#include "beergame/evaluation.hpp"

#include <cmath>
#include <random>

#include "beergame/beer_game.hpp"
#include "beergame/errors.hpp"

namespace beergame {

CostSummary summarize(std::span<const double> values) {
  CostSummary s;
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / double(values.size());
  if (values.size() < 2) return s;
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  const double sd = std::sqrt(sq / double(values.size() - 1));
  s.ci = 1.96 * sd / std::sqrt(double(values.size()));
  return s;
}

double EvalResult::per_period() const {
  if (periods > 0) return total.mean / periods;
  return 0.0;
}

std::vector<std::uint64_t> evaluation_seeds(std::uint64_t seed, int games) {
  std::seed_seq seq{seed, std::uint64_t{0x7e57}};
  Rng rng(seq);
  std::vector<std::uint64_t> seeds(games);
  for (auto& s : seeds) s = rng();
  return seeds;
}

EvalResult evaluate(const GameConfig& config, std::span<const Policy* const> policies,
                    std::span<const std::uint64_t> seeds, int periods) {
  if (static_cast<int>(policies.size()) != config.num_agents) {
    throw ConfigError("evaluation needs one policy per agent");
  }
  for (const Policy* p : policies) {
    if (!p) throw ConfigError("evaluation policy is missing");
  }
  const GameConfig game_config = periods > 0 ? config.with_fixed_horizon(periods) : config;
  const int n = config.num_agents;
  EvalResult r;
  r.games = static_cast<int>(seeds.size());
  r.periods = periods;
  r.agent_games.assign(n, {});
  for (std::uint64_t seed : seeds) {
    BeerGame game(game_config, seed);
    // Policy randomness is independent of the demand stream.
    Rng policy_rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<double> cost(n, 0.0);
    while (!game.terminal()) {
      const StepOutcome out = game.play_period(
          [&](const SeatView& seat) { return policies[seat.agent()]->act(seat, policy_rng); });
      for (int i = 0; i < n; ++i) cost[i] += out.costs[i];
    }
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      r.agent_games[i].push_back(cost[i]);
      total += cost[i];
    }
    r.game_totals.push_back(total);
  }
  r.total = summarize(r.game_totals);
  for (int i = 0; i < n; ++i) r.agents.push_back(summarize(r.agent_games[i]));
  return r;
}

}  // namespace beergame
