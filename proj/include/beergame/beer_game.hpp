#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "beergame/game_config.hpp"

namespace beergame {

class SeatView;

// Features recorded for one agent in one period, in observation order.
struct PeriodFeatures {
  Units inventory = 0;          // IL at the start of the period
  Units on_order = 0;           // OO at the start of the period
  Units incoming_order = 0;     // AO: order arriving this period
  Units incoming_shipment = 0;  // AS: shipment arriving this period
};

inline constexpr int kFeaturesPerPeriod = 5;

// Stacked window of the last m periods, oldest first, each period laid out as
// ((IL)+, (IL)-, OO, AO, AS). Periods before the game start are zero.
struct Observation {
  int periods = 0;
  std::vector<double> values;
};

// Everything one agent may see when choosing its order for the current period.
struct LocalView {
  int agent = 0;
  int period = 0;
  Units inventory = 0;
  Units on_order = 0;
  Units incoming_order = 0;
  // AS of this period when the scenario reveals it before acting, otherwise
  // the previous period's shipment.
  Units incoming_shipment = 0;
};

struct StepOutcome {
  std::vector<double> costs;  // c_h (IL)+ + c_p (IL)- on the post-step IL
  std::vector<Units> inventory;
  std::vector<Units> on_order;
  std::vector<Units> received_shipment;
  std::vector<Units> outbound_shipment;
  std::vector<Units> received_order;
  bool terminal = false;

  // Negative cost.
  double reward(int agent) const { return -costs[agent]; }
};

// Discrete-time simulator of the serial supply chain. Each call to step()
// plays one period: customer demand enters the retailer's order pipeline,
// orders propagate upstream, the manufacturer's production is scheduled, and
// shipments are received and sent downstream stage by stage.
//
// The game is always positioned at the start of a period awaiting orders.
class BeerGame {
 public:
  BeerGame(GameConfig config, std::uint64_t seed);

  // Fresh game with a new seed; redraws the horizon.
  void reset(std::uint64_t seed);

  StepOutcome step(const std::vector<Units>& orders);

  // Plays one period, asking `decide` for each agent's order from retailer to
  // manufacturer. Orders from downstream agents are visible upstream before
  // they decide (relevant only when an information lead time is zero).
  using Decider = std::function<Units(const SeatView&)>;
  StepOutcome play_period(const Decider& decide);

  LocalView local_view(int agent) const;
  Observation local_observation(int agent, int periods) const;
  void write_observation(int agent, int periods, double* out) const;

  const GameConfig& config() const { return config_; }
  int num_agents() const { return config_.num_agents; }
  int period() const { return period_; }
  int horizon() const { return horizon_; }
  bool terminal() const { return period_ >= horizon_; }

  Units inventory(int agent) const { return inventory_[agent]; }
  Units on_order(int agent) const { return on_order_[agent]; }
  Units arriving_orders(int agent, int period) const;
  Units arriving_shipments(int agent, int period) const;

  // Customer demand drawn for each period played so far.
  const std::vector<Units>& demand_history() const { return demand_; }

 private:
  void begin_period();
  void commit_order(int agent, Units order);
  StepOutcome finish_period();
  static void add_at(std::vector<Units>& pipe, int period, Units units);
  PeriodFeatures features(int agent, int period) const;

  GameConfig config_;
  Rng rng_;
  int horizon_ = 0;
  int period_ = 0;
  std::vector<Units> inventory_;
  std::vector<Units> on_order_;
  std::vector<std::vector<Units>> order_pipe_;     // AO_i[t]
  std::vector<std::vector<Units>> shipment_pipe_;  // AS_i[t]
  std::vector<Units> demand_;
  std::vector<Units> pending_orders_;
  std::vector<bool> committed_;
  // history_[agent][t]: start-of-period IL and OO for period t.
  std::vector<std::vector<std::array<Units, 2>>> history_;
};

// Read-only access to one seat's local information. This is all a policy gets
// to see; other seats' state is not reachable through it.
class SeatView {
 public:
  SeatView(const BeerGame& game, int agent) : game_(&game), agent_(agent) {}

  int agent() const { return agent_; }
  LocalView local() const { return game_->local_view(agent_); }
  Observation observation(int periods) const {
    return game_->local_observation(agent_, periods);
  }
  void write_observation(int periods, double* out) const {
    game_->write_observation(agent_, periods, out);
  }

 private:
  const BeerGame* game_;
  int agent_;
};

}  // namespace beergame
