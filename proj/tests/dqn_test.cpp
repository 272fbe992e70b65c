#include <array>
#include <cmath>
#include <memory>
#include <sstream>

#include "beergame/beer_game.hpp"
#include "beergame/dqn.hpp"
#include "beergame/errors.hpp"
#include "doctest.h"

using namespace beergame;

namespace {

// 1 -> 5 net whose output is exactly the output-layer bias.
Mlp constant_net(std::vector<double> values) {
  Mlp net = Mlp::zeros({1, 2, int(values.size())});
  for (std::size_t a = 0; a < values.size(); ++a) net.layer(1).bias(a) = values[a];
  return net;
}

TrainSchedule tiny_schedule() {
  TrainSchedule s;
  s.total_episodes = 12;
  s.warmup_episodes = 2;
  s.target_sync = 50;
  s.batch_size = 16;
  s.m = 2;
  s.replay_capacity = 5000;
  s.eval_every = 4;
  s.eval_games = 5;
  s.eval_periods = 20;
  s.hidden = {16, 12};
  s.adam.base_lr = 1e-3;
  return s;
}

GameConfig short_game() {
  GameConfig c;
  c.horizon = FixedHorizon{20};
  return c;
}

}  // namespace

TEST_CASE("epsilon schedule") {
  CHECK(epsilon(0.0) == 0.9);
  CHECK(epsilon(0.8) == 0.1);
  CHECK(epsilon(0.95) == 0.1);
  CHECK(epsilon(1.0) == 0.1);
  CHECK(epsilon(0.4) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(epsilon(0.2) == doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("action mapping") {
  CHECK(action_to_order(2, -2, 1) == 1);
  CHECK(action_to_order(16, -8, 8) == 16);
  CHECK(action_to_order(0, -2, 1) == 0);
  CHECK(action_to_order(4, -2, 0) == 2);
}

TEST_CASE("greedy selection takes the smallest q, lowest index on ties") {
  Rng rng(1);
  const std::vector<double> x{0.0};
  Mlp strict = constant_net({5, 4, 3, 1, 2});
  for (int k = 0; k < 20; ++k) CHECK(select_action(strict, x, 0.0, rng) == 3);
  Mlp tie = constant_net({5, 0, 3, 1, 0});
  for (int k = 0; k < 20; ++k) CHECK(select_action(tie, x, 0.0, rng) == 1);
}

TEST_CASE("fully exploring selection is uniform") {
  Rng rng(2);
  Mlp net = constant_net({0, 1, 2, 3, 4});
  const std::vector<double> x{0.0};
  std::array<int, 5> counts{};
  const int n = 100000;
  for (int k = 0; k < n; ++k) ++counts[select_action(net, x, 1.0, rng)];
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - n / 5.0) * (c - n / 5.0) / (n / 5.0);
  // 99.9% critical value, 4 degrees of freedom.
  CHECK(chi2 < 18.47);
}

TEST_CASE("q target") {
  Mlp target = constant_net({4, 2, 9});
  const std::vector<double> x{1.0};
  CHECK(q_target(7, x, true, target, 1.0) == 7);
  CHECK(q_target(3, x, false, target, 0.0) == 3);
  CHECK(q_target(3, x, false, target, 1.0) == 5);
  CHECK(q_target(3, x, false, target, 0.5) == 4);
}

TEST_CASE("feedback shift examples") {
  SUBCASE("only the learner has cost") {
    std::vector<std::vector<double>> c{{3, 1, 2}, {0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    CHECK(feedback_shift(c, 10.0, 0) == 0.0);
  }
  SUBCASE("beta zero") {
    std::vector<std::vector<double>> c{{3, 1}, {2, 2}, {4, 0}, {1, 1}};
    CHECK(feedback_shift(c, 0.0, 0) == 0.0);
  }
  SUBCASE("per-period averages 2,1,1,0 with beta 3") {
    // Two periods each: tau = [2, 1, 1, 0], omega = 4.
    std::vector<std::vector<double>> c{{3, 1}, {0, 2}, {1, 1}, {0, 0}};
    CHECK(feedback_shift(c, 3.0, 0) == 2.0);
    CHECK(feedback_shift(c, 3.0, 1) == 3.0);
  }
}

TEST_CASE("apply feedback rewrites exactly the episode") {
  ReplayMemory mem(100, 1);
  const std::vector<double> s{0.0};
  mem.push(s, 0, 9.0, s, false);  // a previous episode
  const std::vector<double> retailer{3, 1, 4};
  EpisodeRange ep{mem.next_id(), 0};
  for (double c : retailer) mem.push(s, 0, c, s, false);
  ep.end = mem.next_id();
  mem.push(s, 0, 9.0, s, false);  // the next one
  std::vector<std::vector<double>> costs{retailer, {2, 2, 2}, {0, 3, 0}, {1, 1, 1}};
  // omega = (8 + 6 + 3 + 3) / 3 = 20/3, tau = 8/3, shift = (6/3)(12/3) = 8.
  CHECK(apply_feedback(mem, ep, costs, 6.0, 0));
  CHECK(mem.at(0).cost == 9.0);
  CHECK(mem.at(1).cost == doctest::Approx(11.0));
  CHECK(mem.at(2).cost == doctest::Approx(9.0));
  CHECK(mem.at(3).cost == doctest::Approx(12.0));
  CHECK(mem.at(4).cost == 9.0);
  // Uniform shift: the worst and best periods stay where they were.
  CHECK(mem.at(3).cost > mem.at(1).cost);
  CHECK(mem.at(2).cost < mem.at(1).cost);
}

TEST_CASE("feedback on an evicted episode is skipped") {
  ReplayMemory mem(3, 1);
  const std::vector<double> s{0.0};
  EpisodeRange ep{mem.next_id(), 0};
  for (int k = 0; k < 3; ++k) mem.push(s, 0, 1.0, s, false);
  ep.end = mem.next_id();
  mem.push(s, 0, 1.0, s, false);
  std::vector<std::vector<double>> costs{{1, 1, 1}, {5, 5, 5}};
  CHECK_FALSE(apply_feedback(mem, ep, costs, 1.0, 0));
  for (std::uint64_t id = mem.first_id(); id < mem.next_id(); ++id) CHECK(mem.at(id).cost == 1.0);
}

TEST_CASE("replay memory is a FIFO ring") {
  ReplayMemory mem(5, 2);
  for (int k = 0; k < 8; ++k) {
    const std::vector<double> s{double(k), -double(k)}, n{double(k + 1), 0.0};
    CHECK(mem.push(s, k % 3, k * 10.0, n, k == 7) == std::uint64_t(k));
  }
  CHECK(mem.size() == 5);
  CHECK(mem.first_id() == 3);
  CHECK_FALSE(mem.resident(2));
  CHECK_THROWS_AS(mem.at(2), StateError);
  for (std::uint64_t id = 3; id < 8; ++id) {
    const auto r = mem.at(id);
    CHECK(r.state[0] == float(id));
    CHECK(r.state[1] == -float(id));
    CHECK(r.next_state[0] == float(id + 1));
    CHECK(r.cost == id * 10.0);
    CHECK(r.action == int(id % 3));
    CHECK(r.terminal == (id == 7));
  }
  Rng rng(4);
  for (int k = 0; k < 200; ++k) {
    const auto id = mem.sample(rng);
    CHECK(mem.resident(id));
  }
  const std::vector<double> wrong{1.0};
  CHECK_THROWS_AS(mem.push(wrong, 0, 0, wrong, false), ShapeError);
}

TEST_CASE("dqn policy reads its own seat and maps through d+x") {
  GameConfig c = short_game();
  // Output 4 smallest: x = +2 above the received order.
  auto net = std::make_shared<const Mlp>([] {
    Mlp m = Mlp::zeros({10, 3, 5});
    m.layer(1).bias << 1, 1, 1, 1, 0;
    return m;
  }());
  DqnPolicy policy(net, 2, c.action_bounds);
  BeerGame game(c, 3);
  Rng rng(0);
  game.play_period([&](const SeatView& seat) {
    const Units q = policy.act(seat, rng);
    CHECK(q == seat.local().incoming_order + 2);
    return q;
  });
  CHECK_THROWS_AS(DqnPolicy(net, 3, c.action_bounds), ConfigError);
  CHECK_THROWS_AS(DqnPolicy(net, 2, ActionBounds{-1, 1}), ConfigError);
}

TEST_CASE("greedy policy is a deterministic function of the observation") {
  GameConfig c = short_game();
  auto net = std::make_shared<const Mlp>(Mlp({10, 8, 5}, 3));
  DqnPolicy policy(net, 2, c.action_bounds);
  BaseStockPolicy bs(8);
  const std::vector<const Policy*> seats{&policy, &bs, &bs, &bs};
  const auto seeds = evaluation_seeds(5, 4);
  const EvalResult a = evaluate(c, seats, seeds, 20);
  const EvalResult b = evaluate(c, seats, seeds, 20);
  CHECK(a.game_totals == b.game_totals);
}

TEST_CASE("target network changes only at sync points") {
  TrainSchedule s = tiny_schedule();
  s.target_sync = 7;
  s.batch_size = 4;
  DqnLearner learner(Mlp({4, 6, 3}, 1), s, 1.0);
  Rng rng(9);
  std::uniform_real_distribution<double> u(0, 3);
  for (int k = 0; k < 30; ++k) {
    const std::vector<double> x{u(rng), u(rng), u(rng), u(rng)};
    learner.memory().push(x, k % 3, u(rng), x, k % 5 == 0);
  }
  Mlp previous = learner.target();
  for (int step = 1; step <= 30; ++step) {
    learner.learn(rng);
    if (step % 7 == 0) {
      CHECK(learner.target().same_parameters(learner.online()));
    } else {
      CHECK(learner.target().same_parameters(previous));
      CHECK_FALSE(learner.target().same_parameters(learner.online()));
    }
    previous = learner.target();
  }
}

TEST_CASE("training with zero episodes returns the initial network") {
  GameConfig c = short_game();
  TrainSchedule s = tiny_schedule();
  s.total_episodes = 0;
  BaseStockPolicy bs(8), zero(0);
  const std::vector<const Policy*> co{nullptr, &bs, &zero, &zero};
  const TrainResult r = train(c, 0, co, s, 4);
  const Mlp init(s.layer_sizes(5), s.init_seed);
  CHECK(r.best.same_parameters(init));
  CHECK(r.final_net.same_parameters(init));
  CHECK(r.log.size() == 1);
  CHECK(r.train_steps == 0);
}

TEST_CASE("short training run is reproducible and logs checkpoints") {
  GameConfig c = short_game();
  TrainSchedule s = tiny_schedule();
  s.beta = 5.0;
  BaseStockPolicy bs(8), zero(0);
  const std::vector<const Policy*> co{nullptr, &bs, &zero, &zero};
  const TrainResult a = train(c, 0, co, s, 21);
  const TrainResult b = train(c, 0, co, s, 21);
  CHECK(a.final_net.same_parameters(b.final_net));
  REQUIRE(a.log.size() == 4);  // episodes 0, 4, 8, 12
  CHECK(a.log[3].episode == 12);
  CHECK(a.train_steps == 10 * 20);
  CHECK(a.log.back().steps == a.train_steps);
  CHECK(a.untrained_cost == a.log[0].cost);
  double best = a.log[0].cost;
  for (const auto& r : a.log) best = std::min(best, r.cost);
  CHECK(a.best_cost == best);
  std::ostringstream csv;
  write_training_log(csv, a.log);
  const std::string text = csv.str();
  CHECK(text.rfind("episode,cost,ci,role_cost,epsilon,lr,loss,steps,seconds\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 5);
}

TEST_CASE("frozen layers survive training") {
  GameConfig c = short_game();
  TrainSchedule s = tiny_schedule();
  const Mlp source(s.layer_sizes(5), 77);
  BaseStockPolicy bs(8), zero(0);
  const std::vector<const Policy*> co{nullptr, &bs, &zero, &zero};
  TrainOptions opt;
  opt.initial = &source;
  opt.frozen_layers = 2;
  const TrainResult r = train(c, 0, co, s, 3, opt);
  CHECK(r.train_steps > 0);
  for (int l = 0; l < 2; ++l) CHECK(r.final_net.layer(l).weight == source.layer(l).weight);
  CHECK(r.final_net.layer(2).weight != source.layer(2).weight);
}

TEST_CASE("schedule validation") {
  TrainSchedule s;
  s.epsilon_end = 0.95;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = TrainSchedule{};
  s.target_sync = 0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = TrainSchedule{};
  CHECK_NOTHROW(s.validate());
  CHECK(s.layer_sizes(5) == std::vector<int>{50, 180, 130, 61, 5});
}
