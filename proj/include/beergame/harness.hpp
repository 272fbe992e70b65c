#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "beergame/dqn.hpp"
#include "beergame/evaluation.hpp"
#include "beergame/scenario.hpp"

namespace beergame {

inline constexpr const char* kVersion = "0.1.0";

// (dqn - baseline) / baseline, in percent.
double gap_percent(double dqn, double baseline);

// Plays n games of `periods` periods with analytic policies only.
EvalResult run_baseline(const Scenario& scenario, std::span<const Policy* const> policies,
                        int games, int periods, std::uint64_t seed);

void write_baseline_report(std::ostream& out, const Scenario& scenario,
                           const std::vector<std::string>& policy_names, const EvalResult& r);

// One row per (period, agent). IL is the level the period's cost is charged
// on, OO the quantity still on order from earlier periods, a the order placed,
// r the reward (negative cost) and OUTL = IL + OO + a the position the order
// brings the agent up to.
struct TraceRow {
  int period = 0;
  int agent = 0;
  Units inventory = 0;
  Units on_order = 0;
  Units order = 0;
  double reward = 0.0;
  Units outl = 0;
  Units demand = 0;  // order received this period
  Units shipped = 0;
};

// Builds the trace row for each agent from one period's orders and outcome.
std::vector<TraceRow> trace_rows(int period, const std::vector<Units>& orders,
                                 const StepOutcome& outcome);

std::vector<TraceRow> dump_trace(const GameConfig& config, std::span<const Policy* const> policies,
                                 std::uint64_t seed, int periods);

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows);

// Coordinate search over stationary base-stock levels, each stage in [0, max_level],
// minimizing mean total cost on a fixed seed set.
std::vector<Units> search_base_stock(const GameConfig& config, std::vector<Units> start,
                                     int games, int periods, std::uint64_t seed,
                                     Units max_level = 80);

// Seat plan with `role` left for the learner and the others playing `coplayers`.
std::vector<std::unique_ptr<Policy>> coplayer_policies(const Scenario& scenario,
                                                       PolicyKind coplayers);

struct Campaign {
  Scenario scenario;
  int role = 0;
  PolicyKind coplayers = PolicyKind::base_stock;
  TrainSchedule schedule;
  // Empty lists mean "use the schedule's value".
  std::vector<double> betas;
  std::vector<int> ms;
  std::vector<int> c_syncs;
  std::vector<std::uint64_t> seeds{1};
  // Transfer: warm start from these weights with k frozen layers.
  std::optional<std::string> source_weights;
  int frozen_layers = 0;
  double transfer_lr_scale = 0.1;
  std::filesystem::path out;
  bool force = false;
  bool quiet = false;
};

struct SummaryRow {
  int role = 0;
  double beta = 0.0;
  int m = 0;
  int c_sync = 0;
  std::uint64_t seed = 0;
  double dqn = 0.0;
  double dqn_ci = 0.0;
  double baseline = 0.0;
  double baseline_ci = 0.0;
  double gap = 0.0;
  int best_episode = 0;
  double seconds = 0.0;
};

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

// Trains one learner per sweep cell and writes, under campaign.out:
//   manifest.json, summary.csv, and per cell <tag>/{log.csv, best.bin, final.bin}.
// Refuses to touch an existing directory unless force is set.
std::vector<SummaryRow> run_experiment(const Campaign& campaign);

}  // namespace beergame
