#include <array>
#include <cmath>

#include "beergame/beer_game.hpp"
#include "beergame/policies.hpp"
#include "doctest.h"

using namespace beergame;

TEST_CASE("base stock orders up to the level") {
  CHECK(base_stock_act(5, 3, 8) == 0);
  CHECK(base_stock_act(-3, 5, 8) == 6);
  CHECK(base_stock_act(10, 4, 8) == 0);
  CHECK(base_stock_act(0, 0, 0) == 0);
  // Order restores the inventory position exactly when below target.
  for (Units il = -20; il <= 20; il += 3) {
    for (Units oo = 0; oo <= 20; oo += 4) {
      for (Units s = 0; s <= 30; s += 5) {
        const Units q = base_stock_act(il, oo, s);
        CHECK(q >= 0);
        if (s >= il + oo) CHECK(q + il + oo == s);
      }
    }
  }
}

TEST_CASE("sterman formula") {
  StermanParams p = StermanParams::defaults(1.0, 2, 2);
  CHECK(p.inventory_target == 1.0);
  CHECK(p.on_order_target == 4.0);
  CHECK(p.alpha == -0.5);
  CHECK(p.beta == -0.2);
  // Anchors met: pure pass-through.
  CHECK(sterman_act(3, 1, 4, p) == 3);
  // 1 + (-0.5)(0 - 1) + (-0.2)(4 - 4) = 1.5, rounded half-up.
  CHECK(sterman_act(1, 0, 4, p) == 2);
  CHECK(sterman_act(1, 1000, 4, p) == 0);

  // Shifting IL and the IL anchor together leaves the order unchanged.
  for (int delta = -7; delta <= 7; ++delta) {
    StermanParams shifted = p;
    shifted.inventory_target += delta;
    for (Units il = -5; il <= 5; ++il) {
      CHECK(sterman_act(2, il + delta, 3, shifted) == sterman_act(2, il, 3, p));
    }
  }
}

TEST_CASE("random d+x policy") {
  Rng rng(3);
  for (int k = 0; k < 100; ++k) CHECK(random_act(4, 0, 0, rng) == 4);

  // d = 0 on [-2, 2]: x in {-2,-1,0} all clamp to zero.
  const int n = 1000000;
  std::array<int, 3> counts{};
  for (int k = 0; k < n; ++k) {
    const Units q = random_act(0, -2, 2, rng);
    REQUIRE(q >= 0);
    REQUIRE(q <= 2);
    ++counts[q];
  }
  CHECK(double(counts[0]) / n == doctest::Approx(0.6).epsilon(0.01));

  // x itself is uniform: chi-square on 17 cells with d large enough to avoid
  // clamping. 99.9% critical value for 16 dof is 39.25.
  std::array<int, 17> cells{};
  for (int k = 0; k < n; ++k) ++cells[random_act(100, -8, 8, rng) - 92];
  double chi2 = 0;
  const double expected = double(n) / 17;
  for (int c : cells) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(chi2 < 39.25);
}

TEST_CASE("base stock steady state orders what was demanded") {
  GameConfig c;
  c.demand = UniformDemand{0, 2};
  c.horizon = FixedHorizon{100};
  BeerGame game(c, 9);
  Rng rng(0);
  const std::array<Units, 4> levels{8, 8, 0, 0};
  int checked = 0;
  while (!game.terminal()) {
    std::array<Units, 4> orders{};
    std::array<Units, 4> demand{};
    game.play_period([&](const SeatView& seat) {
      BaseStockPolicy policy(levels[seat.agent()]);
      const Units q = policy.act(seat, rng);
      orders[seat.agent()] = q;
      demand[seat.agent()] = seat.local().incoming_order;
      return q;
    });
    // Past the start-up transient every stage passes the order it just
    // received straight through to its supplier.
    if (game.period() > 20) {
      for (int i = 0; i < 4; ++i) CHECK(orders[i] == demand[i]);
      ++checked;
    }
  }
  CHECK(checked > 50);
}
