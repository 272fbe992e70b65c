#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "beergame/beer_game.hpp"
#include "beergame/errors.hpp"
#include "doctest.h"

using namespace beergame;

namespace {

// Basic-case lead times, three units of starting stock everywhere, demand
// 1,2,0,1,2 and a fixed order stream. Every value below was worked out by hand
// from the period procedure before the simulator was written.
GameConfig walkthrough_config() {
  GameConfig c;
  c.demand = ClassicDemand{0, 0, 0};  // replaced by the scripted stream below
  c.horizon = FixedHorizon{5};
  c.initial_inventory = {3, 3, 3, 3};
  return c;
}

struct Walkthrough {
  std::vector<Units> demand{1, 2, 0, 1, 2};
  // orders[t][agent]
  std::vector<std::vector<Units>> orders{
      {2, 1, 0, 1}, {1, 1, 2, 0}, {1, 2, 1, 1}, {2, 0, 1, 1}, {0, 1, 1, 2}};
  std::vector<std::vector<Units>> inventory{
      {3, 3, 3, 3}, {3, 3, 3, 3}, {2, 1, 2, 4}, {0, 0, 1, 2}, {2, 0, -1, 2}};
  std::vector<std::vector<Units>> on_order{
      {2, 1, 0, 1}, {3, 2, 2, 1}, {4, 4, 3, 1}, {6, 4, 4, 2}, {4, 4, 5, 3}};
  std::vector<std::vector<Units>> shipped{
      {0, 0, 0, 0}, {0, 0, 0, 0}, {1, 2, 1, 0}, {2, 1, 1, 2}, {0, 1, 1, 1}};
  std::vector<std::vector<double>> cost{
      {6, 6, 6, 6}, {6, 6, 6, 6}, {4, 2, 4, 8}, {0, 0, 2, 4}, {4, 0, 0, 4}};
};

// Feeds the scripted demand by placing it directly into the retailer's order
// pipeline, which is exactly what the demand stage does with l_in = 2.
GameConfig scripted(const Walkthrough& w) {
  GameConfig c = walkthrough_config();
  c.initial_orders[0] = {0, 0};
  for (Units d : w.demand) c.initial_orders[0].push_back(d);
  return c;
}

}  // namespace

TEST_CASE("hand-executed five period trajectory matches exactly") {
  Walkthrough w;
  BeerGame game(scripted(w), 7);
  REQUIRE(game.horizon() == 5);
  for (int t = 0; t < 5; ++t) {
    StepOutcome out = game.step(w.orders[t]);
    for (int i = 0; i < 4; ++i) {
      CAPTURE(t);
      CAPTURE(i);
      CHECK(out.inventory[i] == w.inventory[t][i]);
      CHECK(out.on_order[i] == w.on_order[t][i]);
      CHECK(out.outbound_shipment[i] == w.shipped[t][i]);
      CHECK(out.costs[i] == w.cost[t][i]);
      CHECK(out.reward(i) == -w.cost[t][i]);
    }
    CHECK(out.terminal == (t == 4));
  }
  CHECK(game.terminal());
  CHECK_THROWS_AS(game.step({0, 0, 0, 0}), StateError);
}

TEST_CASE("observation window after the walkthrough") {
  Walkthrough w;
  BeerGame game(scripted(w), 7);
  for (int t = 0; t < 5; ++t) game.step(w.orders[t]);

  const std::vector<double> retailer{3, 0, 2, 0, 0, 3, 0, 3, 1, 0, 2, 0, 4,
                                     2, 0, 0, 0, 6, 0, 2, 2, 0, 4, 1, 1};
  CHECK(game.local_observation(0, 5).values == retailer);
  const std::vector<double> distributor{3, 0, 0, 0, 0, 3, 0, 2, 1, 0, 2, 0, 3,
                                        1, 0, 1, 0, 4, 2, 0, 0, 1, 5, 0, 2};
  CHECK(game.local_observation(2, 5).values == distributor);

  // Shipment revealed only after acting: the current AS slot lags one period.
  GameConfig late = scripted(w);
  late.observe_shipment_before_action = false;
  BeerGame lagged(late, 7);
  for (int t = 0; t < 5; ++t) lagged.step(w.orders[t]);
  auto obs = lagged.local_observation(0, 5).values;
  CHECK(obs[24] == 2);
  obs[24] = 1;
  CHECK(obs == retailer);
}

TEST_CASE("observation at t=0 is zero padded") {
  GameConfig c;
  c.horizon = FixedHorizon{10};
  BeerGame game(c, 1);
  auto obs = game.local_observation(1, 10);
  CHECK(obs.values.size() == 50);
  CHECK(std::all_of(obs.values.begin(), obs.values.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("reset draws the horizon from its law") {
  GameConfig c;
  c.horizon = FixedHorizon{100};
  BeerGame game(c, 3);
  for (std::uint64_t s = 0; s < 20; ++s) {
    game.reset(s);
    CHECK(game.horizon() == 100);
  }
  c.horizon = UniformHorizon{100, 110};
  BeerGame varied(c, 3);
  for (std::uint64_t s = 0; s < 50; ++s) {
    varied.reset(s);
    CHECK(varied.horizon() >= 100);
    CHECK(varied.horizon() <= 110);
  }
}

TEST_CASE("invalid configurations are rejected") {
  GameConfig c;
  c.holding_cost[1] = -1;
  CHECK_THROWS_AS(BeerGame(c, 0), ConfigError);
  c = GameConfig{};
  c.action_bounds = {2, -2};
  CHECK_THROWS_AS(BeerGame(c, 0), ConfigError);
  c = GameConfig{};
  c.ship_lead[3] = 0;
  CHECK_THROWS_AS(BeerGame(c, 0), ConfigError);
  c = GameConfig{};
  c.info_lead.pop_back();
  CHECK_THROWS_AS(BeerGame(c, 0), ConfigError);
  BeerGame ok(GameConfig{}, 0);
  CHECK_THROWS_AS(ok.step({1, 1, -1, 1}), ConfigError);
  CHECK_THROWS_AS(ok.step({1, 1, 1}), ConfigError);
}

TEST_CASE("demand laws") {
  Rng rng(11);
  for (int t = 0; t < 100; ++t) CHECK(sample_demand(UniformDemand{0, 0}, t, rng) == 0);
  const ClassicDemand classic{4, 8, 4};
  CHECK(sample_demand(classic, 2, rng) == 4);
  CHECK(sample_demand(classic, 3, rng) == 4);
  CHECK(sample_demand(classic, 4, rng) == 8);
  CHECK(sample_demand(classic, 10, rng) == 8);

  Units lo = 100, hi = -100;
  for (int k = 0; k < 10000; ++k) {
    Units d = sample_demand(UniformDemand{0, 8}, 0, rng);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  CHECK(lo == 0);
  CHECK(hi == 8);

  // Monte-Carlo mean of the rounded normal; clamping is negligible at 5 sigma.
  double sum = 0;
  const int n = 1000000;
  for (int k = 0; k < n; ++k) {
    Units d = sample_demand(NormalDemand{10, 2}, k, rng);
    REQUIRE(d >= 0);
    sum += double(d);
  }
  CHECK(sum / n >= 9.95);
  CHECK(sum / n <= 10.05);
}

TEST_CASE("zero demand and zero orders is a cost-free fixed point") {
  GameConfig c;
  c.demand = UniformDemand{0, 0};
  c.horizon = FixedHorizon{50};
  BeerGame game(c, 5);
  while (!game.terminal()) {
    auto out = game.step({0, 0, 0, 0});
    for (double cost : out.costs) CHECK(cost == 0.0);
  }
}

namespace {

struct Audit {
  std::vector<Units> ordered, received, shipped_out, orders_in;
};

void random_game_audit(std::uint64_t seed, bool shipment_first) {
  GameConfig c;
  c.demand = UniformDemand{0, 8};
  c.ship_lead = {2, 2, 2, 1};
  c.horizon = FixedHorizon{60};
  c.initial_inventory = {4, -2, 6, 0};
  c.observe_shipment_before_action = shipment_first;
  BeerGame game(c, seed);
  Rng order_rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_int_distribution<Units> pick(0, 12);
  Audit a{std::vector<Units>(4, 0), std::vector<Units>(4, 0), std::vector<Units>(4, 0),
          std::vector<Units>(4, 0)};
  while (!game.terminal()) {
    std::vector<Units> before_oo(4), before_il(4);
    for (int i = 0; i < 4; ++i) {
      before_oo[i] = game.on_order(i);
      before_il[i] = game.inventory(i);
    }
    std::vector<Units> orders(4);
    for (auto& o : orders) o = pick(order_rng);
    auto out = game.step(orders);
    for (int i = 0; i < 4; ++i) {
      // OO_{t+1} = OO_t + a_t - AS_t
      CHECK(out.on_order[i] == before_oo[i] + orders[i] - out.received_shipment[i]);
      CHECK(out.on_order[i] >= 0);
      // Never ships stock it does not hold.
      CHECK(out.outbound_shipment[i] <=
            std::max<Units>(0, before_il[i]) + out.received_shipment[i]);
      const double expected = c.holding_cost[i] * double(std::max<Units>(out.inventory[i], 0)) +
                              c.shortage_cost[i] * double(std::max<Units>(-out.inventory[i], 0));
      CHECK(out.costs[i] == expected);
      a.shipped_out[i] += out.outbound_shipment[i];
      a.orders_in[i] += out.received_order[i];
      // Cumulative shipments never exceed orders received plus starting backlog.
      CHECK(a.shipped_out[i] <= a.orders_in[i] + std::max<Units>(0, -c.initial_inventory[i]));
    }
  }
}

}  // namespace

TEST_CASE("flow conservation and feasibility over random order streams") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) random_game_audit(seed, seed % 2 == 0);
}

TEST_CASE("same seed and actions give identical trajectories") {
  GameConfig c;
  c.demand = NormalDemand{10, 2};
  c.horizon = UniformHorizon{30, 40};
  auto run = [&](std::uint64_t seed) {
    BeerGame g(c, seed);
    std::vector<double> trace;
    int t = 0;
    while (!g.terminal()) {
      auto out = g.step({Units(t % 7), Units(t % 5), Units(t % 11), Units(10)});
      for (int i = 0; i < 4; ++i) {
        trace.push_back(double(out.inventory[i]));
        trace.push_back(out.costs[i]);
      }
      ++t;
    }
    return std::make_pair(g.demand_history(), trace);
  };
  CHECK(run(42) == run(42));
  CHECK(run(42).first != run(43).first);
}

TEST_CASE("inventory is constant once demand and orders stop") {
  GameConfig c;
  c.demand = ClassicDemand{3, 0, 10};
  c.horizon = FixedHorizon{60};
  BeerGame game(c, 0);
  for (int t = 0; t < 10; ++t) game.step({3, 3, 3, 3});
  // Let pipelines drain.
  for (int t = 0; t < 20; ++t) game.step({0, 0, 0, 0});
  std::vector<Units> settled(4);
  for (int i = 0; i < 4; ++i) settled[i] = game.inventory(i);
  while (!game.terminal()) {
    game.step({0, 0, 0, 0});
    for (int i = 0; i < 4; ++i) CHECK(game.inventory(i) == settled[i]);
  }
}

TEST_CASE("play_period lets upstream see same-period orders with zero info lead") {
  GameConfig c;
  c.info_lead = {0, 0, 0, 0};
  c.demand = ClassicDemand{5, 5, 0};
  c.horizon = FixedHorizon{3};
  BeerGame game(c, 0);
  std::vector<Units> seen;
  game.play_period([&](const SeatView& seat) {
    seen.push_back(seat.local().incoming_order);
    return Units(seat.agent() + 1);
  });
  CHECK(seen == std::vector<Units>{5, 1, 2, 3});
}

TEST_CASE("arrivals that clear a backlog are shipped downstream") {
  GameConfig c;
  c.demand = UniformDemand{0, 0};
  c.horizon = FixedHorizon{4};
  c.initial_inventory = {0, -3, 0, 0};
  c.initial_shipments[1] = {3};
  BeerGame game(c, 0);
  CHECK(game.on_order(0) == 3);  // the warehouse owes the retailer three units
  CHECK(game.on_order(1) == 3);
  auto out = game.step({0, 0, 0, 0});
  CHECK(out.inventory[1] == 0);
  CHECK(out.outbound_shipment[1] == 3);
  game.step({0, 0, 0, 0});
  out = game.step({0, 0, 0, 0});
  CHECK(out.received_shipment[0] == 3);
  CHECK(out.inventory[0] == 3);
  CHECK(out.on_order[0] == 0);
}
