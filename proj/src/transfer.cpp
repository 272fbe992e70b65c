#include "beergame/transfer.hpp"

#include <chrono>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "beergame/errors.hpp"

namespace beergame {

TransferResult transfer_train(const Mlp& source, const std::string& source_name,
                              const GameConfig& config, int role,
                              std::span<const Policy* const> co_players, TrainSchedule schedule,
                              int k, std::uint64_t seed, double lr_scale,
                              std::function<void(const CheckpointRecord&)> on_checkpoint) {
  const auto expected = schedule.layer_sizes(config.action_bounds.size());
  if (source.layer_sizes() != expected) {
    auto shape = [](const std::vector<int>& v) { return fmt::format("[{}]", fmt::join(v, ",")); };
    throw ConfigError(fmt::format("source network {} does not match target shape {}",
                                  shape(source.layer_sizes()), shape(expected)));
  }
  if (k < 0 || k > source.num_layers()) {
    throw ConfigError(fmt::format("k must lie in [0, {}]", source.num_layers()));
  }
  if (!(lr_scale > 0.0)) throw ConfigError("transfer learning-rate scale must be positive");
  Mlp start = source;
  start.reset_optimizer();
  schedule.adam.base_lr *= lr_scale;
  TrainOptions options;
  options.initial = &start;
  options.frozen_layers = k;
  options.on_checkpoint = std::move(on_checkpoint);
  TransferResult r{train(config, role, co_players, schedule, seed, options), source_name, k,
                   schedule.adam.base_lr};
  return r;
}

SweepReport transfer_sweep(std::span<const TransferSource> sources, std::span<const int> ks,
                           const GameConfig& config, int role,
                           std::span<const Policy* const> co_players,
                           const TrainSchedule& schedule, std::uint64_t seed,
                           double baseline_cost, double lr_scale) {
  if (sources.empty() || ks.empty()) throw ConfigError("transfer sweep needs candidates");
  SweepReport report;
  for (const auto& src : sources) {
    for (int k : ks) {
      TransferResult run =
          transfer_train(src.net, src.name, config, role, co_players, schedule, k, seed, lr_scale);
      SweepRow row;
      row.source = src.name;
      row.k = k;
      row.cost = run.train.best_cost;
      row.gap = baseline_cost != 0.0 ? (row.cost - baseline_cost) / baseline_cost * 100.0 : 0.0;
      row.seconds = run.train.seconds;
      if (report.rows.empty() || row.cost < report.rows[report.best].cost) {
        report.best = report.rows.size();
      }
      report.rows.push_back(row);
      report.runs.push_back(std::move(run));
    }
  }
  return report;
}

void write_sweep_csv(std::ostream& out, const SweepReport& report) {
  out << "source,k,cost,gap_percent,seconds,best\n";
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& r = report.rows[i];
    out << fmt::format("{},{},{:.4f},{:.2f},{:.3f},{}\n", r.source, r.k, r.cost, r.gap, r.seconds,
                       i == report.best ? 1 : 0);
  }
}

}  // namespace beergame
