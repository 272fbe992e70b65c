#pragma once

#include <memory>
#include <string>

#include "beergame/beer_game.hpp"
#include "beergame/game_config.hpp"

namespace beergame {

// Order-up-to rule: bring IL + OO back to the base-stock level.
Units base_stock_act(Units inventory, Units on_order, Units level);

// Anchoring-and-adjustment ordering rule for simulated human players:
// max{0, d + alpha (IL - a) + beta (OO - b)}, rounded half-up.
struct StermanParams {
  double alpha = -0.5;
  double beta = -0.2;
  double inventory_target = 0.0;  // a
  double on_order_target = 0.0;   // b

  // a = mean demand, b = mean demand * (information + transport lead time).
  static StermanParams defaults(double mean_demand, int info_lead, int ship_lead);
};

Units sterman_act(Units incoming_order, Units inventory, Units on_order, const StermanParams& p);

// d + x with x uniform on [lower, upper], floored at zero.
Units random_act(Units incoming_order, int lower, int upper, Rng& rng);

// An ordering rule for one seat. Policies see only the seat's LocalView (and,
// for learned policies, the stacked observation of the same seat).
class Policy {
 public:
  virtual ~Policy() = default;
  virtual Units act(const SeatView& seat, Rng& rng) const = 0;
  virtual std::string name() const = 0;
  virtual std::unique_ptr<Policy> clone() const = 0;
};

// Orders up to `level` on the inventory position net of the order received this
// period, so a stage with level 0 passes demand through without delay.
class BaseStockPolicy : public Policy {
 public:
  explicit BaseStockPolicy(Units level) : level_(level) {}
  Units act(const SeatView& seat, Rng& rng) const override;
  std::string name() const override { return "basestock(" + std::to_string(level_) + ")"; }
  std::unique_ptr<Policy> clone() const override {
    return std::make_unique<BaseStockPolicy>(*this);
  }
  Units level() const { return level_; }

 private:
  Units level_;
};

class StermanPolicy : public Policy {
 public:
  explicit StermanPolicy(StermanParams params) : params_(params) {}
  Units act(const SeatView& seat, Rng& rng) const override;
  std::string name() const override { return "sterman"; }
  std::unique_ptr<Policy> clone() const override {
    return std::make_unique<StermanPolicy>(*this);
  }
  const StermanParams& params() const { return params_; }

 private:
  StermanParams params_;
};

class RandomPolicy : public Policy {
 public:
  explicit RandomPolicy(ActionBounds bounds) : bounds_(bounds) {}
  Units act(const SeatView& seat, Rng& rng) const override;
  std::string name() const override { return "random"; }
  std::unique_ptr<Policy> clone() const override {
    return std::make_unique<RandomPolicy>(*this);
  }

 private:
  ActionBounds bounds_;
};

}  // namespace beergame
