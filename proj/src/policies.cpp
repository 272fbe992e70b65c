#include "beergame/policies.hpp"

#include <algorithm>
#include <cmath>

namespace beergame {

Units base_stock_act(Units inventory, Units on_order, Units level) {
  return std::max<Units>(0, level - (inventory + on_order));
}

StermanParams StermanParams::defaults(double mean_demand, int info_lead, int ship_lead) {
  StermanParams p;
  p.inventory_target = mean_demand;
  p.on_order_target = mean_demand * double(info_lead + ship_lead);
  return p;
}

Units sterman_act(Units incoming_order, Units inventory, Units on_order,
                  const StermanParams& p) {
  const double q = double(incoming_order) + p.alpha * (double(inventory) - p.inventory_target) +
                   p.beta * (double(on_order) - p.on_order_target);
  return static_cast<Units>(std::floor(std::max(0.0, q) + 0.5));
}

Units random_act(Units incoming_order, int lower, int upper, Rng& rng) {
  const int x = std::uniform_int_distribution<int>(lower, upper)(rng);
  return std::max<Units>(0, incoming_order + x);
}

Units BaseStockPolicy::act(const SeatView& seat, Rng&) const {
  const LocalView v = seat.local();
  return base_stock_act(v.inventory - v.incoming_order, v.on_order, level_);
}

Units StermanPolicy::act(const SeatView& seat, Rng&) const {
  const LocalView v = seat.local();
  return sterman_act(v.incoming_order, v.inventory, v.on_order, params_);
}

Units RandomPolicy::act(const SeatView& seat, Rng& rng) const {
  const LocalView v = seat.local();
  return random_act(v.incoming_order, bounds_.lower, bounds_.upper, rng);
}

}  // namespace beergame
