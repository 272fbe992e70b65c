#include "beergame/beer_game.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "beergame/errors.hpp"

namespace beergame {

BeerGame::BeerGame(GameConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  reset(seed);
}

void BeerGame::reset(std::uint64_t seed) {
  const int n = config_.num_agents;
  rng_.seed(seed);
  horizon_ = sample_horizon(config_.horizon, rng_);
  period_ = 0;
  inventory_ = config_.initial_inventory;
  order_pipe_.assign(n, {});
  shipment_pipe_.assign(n, {});
  for (int i = 0; i < n; ++i) {
    order_pipe_[i] = config_.initial_orders[i];
    shipment_pipe_[i] = config_.initial_shipments[i];
  }
  // On-order counts everything already owed to the agent: shipments in
  // transit, its orders still travelling to the supplier, and the supplier's
  // backlog.
  on_order_.assign(n, 0);
  for (int i = 0; i < n; ++i) {
    const auto& in_transit = config_.initial_shipments[i];
    on_order_[i] = std::accumulate(in_transit.begin(), in_transit.end(), Units{0});
    if (i + 1 < n) {
      const auto& upstream = config_.initial_orders[i + 1];
      on_order_[i] += std::accumulate(upstream.begin(), upstream.end(), Units{0});
      on_order_[i] += std::max<Units>(0, -config_.initial_inventory[i + 1]);
    }
  }
  demand_.clear();
  history_.assign(n, {});
  begin_period();
}

Units BeerGame::arriving_orders(int agent, int period) const {
  const auto& pipe = order_pipe_[agent];
  return period >= 0 && period < static_cast<int>(pipe.size()) ? pipe[period] : 0;
}

Units BeerGame::arriving_shipments(int agent, int period) const {
  const auto& pipe = shipment_pipe_[agent];
  return period >= 0 && period < static_cast<int>(pipe.size()) ? pipe[period] : 0;
}

void BeerGame::add_at(std::vector<Units>& pipe, int period, Units units) {
  if (static_cast<int>(pipe.size()) <= period) pipe.resize(period + 1, 0);
  pipe[period] += units;
}

void BeerGame::begin_period() {
  const int n = config_.num_agents;
  for (int i = 0; i < n; ++i) history_[i].push_back({inventory_[i], on_order_[i]});
  pending_orders_.assign(n, 0);
  committed_.assign(n, false);
  if (terminal()) return;
  const Units d = sample_demand(config_.demand, period_, rng_);
  demand_.push_back(d);
  add_at(order_pipe_[0], period_ + config_.info_lead[0], d);
}

void BeerGame::commit_order(int agent, Units order) {
  if (order < 0) {
    throw ConfigError("order for agent " + std::to_string(agent) + " must be >= 0");
  }
  pending_orders_[agent] = order;
  committed_[agent] = true;
  on_order_[agent] += order;
  if (agent + 1 < config_.num_agents) {
    add_at(order_pipe_[agent + 1], period_ + config_.info_lead[agent], order);
  }
}

StepOutcome BeerGame::finish_period() {
  const int n = config_.num_agents;
  const int t = period_;
  // Unlimited raw material: the manufacturer's order becomes its own shipment.
  add_at(shipment_pipe_[n - 1], t + config_.ship_lead[n - 1], pending_orders_[n - 1]);

  StepOutcome out;
  out.costs.assign(n, 0.0);
  out.inventory.assign(n, 0);
  out.on_order.assign(n, 0);
  out.received_shipment.assign(n, 0);
  out.outbound_shipment.assign(n, 0);
  out.received_order.assign(n, 0);
  for (int i = n - 1; i >= 0; --i) {
    const Units before = inventory_[i];
    const Units received = arriving_shipments(i, t);
    const Units demand = arriving_orders(i, t);
    Units level = before + received;
    on_order_[i] -= received;
    // Physical stock available to ship: carried-over on-hand plus arrivals.
    const Units on_hand = std::max<Units>(0, before) + received;
    const Units backlog = std::max<Units>(0, -before);
    const Units shipped = std::min(on_hand, backlog + demand);
    if (i > 0) add_at(shipment_pipe_[i - 1], t + config_.ship_lead[i], shipped);
    level -= demand;
    inventory_[i] = level;
    out.costs[i] = config_.shortage_cost[i] * double(std::max<Units>(-level, 0)) +
                   config_.holding_cost[i] * double(std::max<Units>(level, 0));
    out.inventory[i] = level;
    out.on_order[i] = on_order_[i];
    out.received_shipment[i] = received;
    out.outbound_shipment[i] = shipped;
    out.received_order[i] = demand;
  }
  ++period_;
  out.terminal = terminal();
  begin_period();
  return out;
}

StepOutcome BeerGame::step(const std::vector<Units>& orders) {
  if (terminal()) throw StateError("step called on a finished game");
  if (static_cast<int>(orders.size()) != config_.num_agents) {
    throw ConfigError("step needs one order per agent");
  }
  for (Units o : orders) {
    if (o < 0) throw ConfigError("orders must be >= 0");
  }
  for (int i = 0; i < config_.num_agents; ++i) commit_order(i, orders[i]);
  return finish_period();
}

StepOutcome BeerGame::play_period(const Decider& decide) {
  if (terminal()) throw StateError("play_period called on a finished game");
  for (int i = 0; i < config_.num_agents; ++i) commit_order(i, decide(SeatView(*this, i)));
  return finish_period();
}

PeriodFeatures BeerGame::features(int agent, int period) const {
  PeriodFeatures f;
  if (period < 0) return f;
  const auto& h = history_[agent][period];
  f.inventory = h[0];
  f.on_order = h[1];
  f.incoming_order = arriving_orders(agent, period);
  f.incoming_shipment = arriving_shipments(agent, period);
  return f;
}

LocalView BeerGame::local_view(int agent) const {
  if (agent < 0 || agent >= config_.num_agents) throw ConfigError("agent index out of range");
  LocalView v;
  v.agent = agent;
  v.period = period_;
  v.inventory = inventory_[agent];
  v.on_order = on_order_[agent];
  v.incoming_order = arriving_orders(agent, period_);
  v.incoming_shipment = config_.observe_shipment_before_action
                            ? arriving_shipments(agent, period_)
                            : arriving_shipments(agent, period_ - 1);
  return v;
}

void BeerGame::write_observation(int agent, int periods, double* out) const {
  if (agent < 0 || agent >= config_.num_agents) throw ConfigError("agent index out of range");
  for (int k = 0; k < periods; ++k) {
    const int p = period_ - periods + 1 + k;
    PeriodFeatures f = features(agent, p);
    if (p == period_) {
      const LocalView v = local_view(agent);
      f.incoming_shipment = v.incoming_shipment;
    }
    double* row = out + k * kFeaturesPerPeriod;
    row[0] = double(std::max<Units>(f.inventory, 0));
    row[1] = double(std::max<Units>(-f.inventory, 0));
    row[2] = double(f.on_order);
    row[3] = double(f.incoming_order);
    row[4] = double(f.incoming_shipment);
  }
}

Observation BeerGame::local_observation(int agent, int periods) const {
  Observation obs;
  obs.periods = periods;
  obs.values.assign(static_cast<std::size_t>(periods) * kFeaturesPerPeriod, 0.0);
  write_observation(agent, periods, obs.values.data());
  return obs;
}

}  // namespace beergame
