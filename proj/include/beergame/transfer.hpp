#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "beergame/dqn.hpp"

namespace beergame {

struct TransferResult {
  TrainResult train;
  std::string source;
  int frozen_layers = 0;
  double base_lr = 0.0;
};

// Warm-starts the learner in `role` from `source`, freezes its first k weight
// layers and trains the rest with base_lr scaled by lr_scale. Adam state starts
// fresh. Throws ConfigError if the source shape does not match the target.
TransferResult transfer_train(const Mlp& source, const std::string& source_name,
                              const GameConfig& config, int role,
                              std::span<const Policy* const> co_players, TrainSchedule schedule,
                              int k, std::uint64_t seed, double lr_scale = 0.1,
                              std::function<void(const CheckpointRecord&)> on_checkpoint = {});

struct TransferSource {
  std::string name;
  Mlp net;
};

struct SweepRow {
  std::string source;
  int k = 0;
  double cost = 0.0;
  double gap = 0.0;  // percent against the baseline cost
  double seconds = 0.0;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  std::size_t best = 0;
  std::vector<TransferResult> runs;
};

// Runs transfer_train for every (source, k) pair and picks the lowest
// validation cost.
SweepReport transfer_sweep(std::span<const TransferSource> sources, std::span<const int> ks,
                           const GameConfig& config, int role,
                           std::span<const Policy* const> co_players,
                           const TrainSchedule& schedule, std::uint64_t seed,
                           double baseline_cost, double lr_scale = 0.1);

void write_sweep_csv(std::ostream& out, const SweepReport& report);

}  // namespace beergame
