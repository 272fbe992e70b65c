#include "beergame/harness.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>

#include <fmt/format.h>

#include "beergame/beer_game.hpp"
#include "beergame/errors.hpp"
#include "beergame/transfer.hpp"
#include "json.hpp"

namespace beergame {

namespace fs = std::filesystem;
using nlohmann::json;

double gap_percent(double dqn, double baseline) {
  if (baseline == 0.0) throw ConfigError("gap is undefined for a zero baseline cost");
  return (dqn - baseline) / baseline * 100.0;
}

EvalResult run_baseline(const Scenario& scenario, std::span<const Policy* const> policies,
                        int games, int periods, std::uint64_t seed) {
  if (games < 1) throw ConfigError("need at least one game");
  for (const Policy* p : policies) {
    if (p && dynamic_cast<const DqnPolicy*>(p)) {
      throw ConfigError("baselines are for analytic policies; evaluate DQN seats with train");
    }
  }
  const auto seeds = evaluation_seeds(seed, games);
  return evaluate(scenario.config, policies, seeds, periods);
}

void write_baseline_report(std::ostream& out, const Scenario& scenario,
                           const std::vector<std::string>& policy_names, const EvalResult& r) {
  static const char* roles[] = {"retailer", "warehouse", "distributor", "manufacturer"};
  out << fmt::format("scenario {}: {} games x {} periods\n", scenario.name, r.games, r.periods);
  out << "agent,policy,cost_per_game,ci,cost_per_period\n";
  for (std::size_t i = 0; i < r.agents.size(); ++i) {
    const std::string role = i < 4 && r.agents.size() == 4 ? roles[i] : fmt::format("agent{}", i);
    out << fmt::format("{},{},{:.4f},{:.4f},{:.4f}\n", role, policy_names.at(i), r.agents[i].mean,
                       r.agents[i].ci, r.periods > 0 ? r.agents[i].mean / r.periods : 0.0);
  }
  out << fmt::format("total,,{:.4f},{:.4f},{:.4f}\n", r.total.mean, r.total.ci, r.per_period());
}

std::vector<TraceRow> trace_rows(int period, const std::vector<Units>& orders,
                                 const StepOutcome& outcome) {
  std::vector<TraceRow> rows;
  for (std::size_t i = 0; i < orders.size(); ++i) {
    TraceRow row;
    row.period = period;
    row.agent = static_cast<int>(i);
    row.inventory = outcome.inventory[i];
    row.order = orders[i];
    row.on_order = outcome.on_order[i] - orders[i];
    row.reward = 0.0 - outcome.costs[i];  // 0.0 - 0.0 is +0, so zero cost prints as 0
    row.outl = row.inventory + row.on_order + row.order;
    row.demand = outcome.received_order[i];
    row.shipped = outcome.outbound_shipment[i];
    rows.push_back(row);
  }
  return rows;
}

std::vector<TraceRow> dump_trace(const GameConfig& config, std::span<const Policy* const> policies,
                                 std::uint64_t seed, int periods) {
  if (static_cast<int>(policies.size()) != config.num_agents) {
    throw ConfigError("trace needs one policy per agent");
  }
  BeerGame game(periods > 0 ? config.with_fixed_horizon(periods) : config, seed);
  Rng policy_rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<TraceRow> rows;
  std::vector<Units> orders(config.num_agents);
  while (!game.terminal()) {
    const int t = game.period();
    const StepOutcome out = game.play_period([&](const SeatView& seat) {
      return orders[seat.agent()] = policies[seat.agent()]->act(seat, policy_rng);
    });
    auto period_rows = trace_rows(t, orders, out);
    rows.insert(rows.end(), period_rows.begin(), period_rows.end());
  }
  return rows;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows) {
  out << "period,agent,IL,OO,a,r,OUTL,demand,shipped\n";
  for (const auto& r : rows) {
    out << fmt::format("{},{},{},{},{},{},{},{},{}\n", r.period, r.agent, r.inventory, r.on_order,
                       r.order, r.reward, r.outl, r.demand, r.shipped);
  }
}

std::vector<Units> search_base_stock(const GameConfig& config, std::vector<Units> start,
                                     int games, int periods, std::uint64_t seed,
                                     Units max_level) {
  const int n = config.num_agents;
  if (static_cast<int>(start.size()) != n) throw ConfigError("need one start level per agent");
  const auto seeds = evaluation_seeds(seed, games);
  auto cost_of = [&](const std::vector<Units>& levels) {
    std::vector<BaseStockPolicy> policies;
    for (Units s : levels) policies.emplace_back(s);
    std::vector<const Policy*> seats;
    for (const auto& p : policies) seats.push_back(&p);
    return evaluate(config, seats, seeds, periods).total.mean;
  };
  double best = cost_of(start);
  for (bool improved = true; improved;) {
    improved = false;
    for (int i = 0; i < n; ++i) {
      std::vector<Units> trial = start;
      for (Units s = 0; s <= max_level; ++s) {
        trial[i] = s;
        const double c = cost_of(trial);
        if (c < best - 1e-9) {
          best = c;
          start[i] = s;
          improved = true;
        }
      }
    }
  }
  return start;
}

std::vector<std::unique_ptr<Policy>> coplayer_policies(const Scenario& scenario,
                                                       PolicyKind coplayers) {
  if (coplayers == PolicyKind::dqn) throw ConfigError("co-players cannot be DQN agents");
  return uniform_policies(scenario, coplayers);
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "role,beta,m,c_sync,seed,dqn,dqn_ci,baseline,baseline_ci,gap_percent,best_episode,"
         "seconds\n";
  for (const auto& r : rows) {
    out << fmt::format("{},{},{},{},{},{:.4f},{:.4f},{:.4f},{:.4f},{:.2f},{},{:.1f}\n", r.role,
                       r.beta, r.m, r.c_sync, r.seed, r.dqn, r.dqn_ci, r.baseline, r.baseline_ci,
                       r.gap, r.best_episode, r.seconds);
  }
}

namespace {

json schedule_json(const TrainSchedule& s) {
  return json{{"total_episodes", s.total_episodes},
              {"warmup_episodes", s.warmup_episodes},
              {"epsilon_start", s.epsilon_start},
              {"epsilon_end", s.epsilon_end},
              {"epsilon_anneal_fraction", s.epsilon_anneal_fraction},
              {"target_sync", s.target_sync},
              {"batch_size", s.batch_size},
              {"beta", s.beta},
              {"m", s.m},
              {"replay_capacity", s.replay_capacity},
              {"eval_every", s.eval_every},
              {"eval_games", s.eval_games},
              {"eval_periods", s.eval_periods},
              {"hidden", s.hidden},
              {"base_lr", s.adam.base_lr},
              {"decay_rate", s.adam.decay_rate},
              {"decay_stair", s.adam.decay_stair},
              {"init_seed", s.init_seed}};
}

template <class T>
std::vector<T> or_default(const std::vector<T>& values, T fallback) {
  return values.empty() ? std::vector<T>{fallback} : values;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

}  // namespace

std::vector<SummaryRow> run_experiment(const Campaign& c) {
  if (c.out.empty()) throw ConfigError("experiment needs an output directory");
  if (fs::exists(c.out) && !c.force) {
    throw ConfigError("output directory " + c.out.string() + " exists; use --force to overwrite");
  }
  const int n = c.scenario.config.num_agents;
  if (c.role < 0 || c.role >= n) throw ConfigError("learner role out of range");
  c.scenario.config.validate();
  c.schedule.validate();
  std::optional<Mlp> source;
  if (c.source_weights) source = Mlp::load_file(*c.source_weights);
  fs::create_directories(c.out);

  const auto co = coplayer_policies(c.scenario, c.coplayers);
  const auto co_raw = raw(co);
  // Baseline: the learner's seat plays base stock, co-players unchanged.
  BaseStockPolicy role_bs(c.scenario.base_stock_levels.at(c.role));
  std::vector<const Policy*> baseline_seats = co_raw;
  baseline_seats[c.role] = &role_bs;

  json manifest;
  manifest["version"] = kVersion;
  manifest["scenario"] = json::parse(scenario_to_json(c.scenario));
  manifest["role"] = c.role;
  manifest["coplayers"] = policy_kind_name(c.coplayers);
  manifest["schedule"] = schedule_json(c.schedule);
  manifest["betas"] = or_default(c.betas, c.schedule.beta);
  manifest["ms"] = or_default(c.ms, c.schedule.m);
  manifest["c_syncs"] = or_default(c.c_syncs, c.schedule.target_sync);
  manifest["seeds"] = c.seeds;
  if (c.source_weights) {
    manifest["source_weights"] = *c.source_weights;
    manifest["frozen_layers"] = c.frozen_layers;
    manifest["transfer_lr_scale"] = c.transfer_lr_scale;
  }
  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  manifest["started"] = stamp;
  manifest["cells"] = json::array();

  std::vector<SummaryRow> rows;
  for (double beta : or_default(c.betas, c.schedule.beta)) {
    for (int m : or_default(c.ms, c.schedule.m)) {
      for (int sync : or_default(c.c_syncs, c.schedule.target_sync)) {
        for (std::uint64_t seed : c.seeds) {
          TrainSchedule s = c.schedule;
          s.beta = beta;
          s.m = m;
          s.target_sync = sync;
          const std::string tag = fmt::format("role{}_beta{}_m{}_c{}_seed{}", c.role, beta, m,
                                              sync, seed);
          const fs::path dir = c.out / tag;
          fs::create_directories(dir);
          if (!c.quiet) std::cerr << "training " << tag << "\n";
          TrainOptions opt;
          if (!c.quiet) {
            opt.on_checkpoint = [](const CheckpointRecord& r) {
              std::cerr << fmt::format("  episode {:>6}  cost {:10.2f} +- {:7.2f}  eps {:.3f}  "
                                       "loss {:9.3f}  {:7.1f}s\n",
                                       r.episode, r.cost, r.ci, r.epsilon, r.loss, r.seconds);
            };
          }
          TrainResult result =
              source ? transfer_train(*source, *c.source_weights, c.scenario.config, c.role,
                                      co_raw, s, c.frozen_layers, seed, c.transfer_lr_scale,
                                      opt.on_checkpoint)
                           .train
                     : train(c.scenario.config, c.role, co_raw, s, seed, opt);
          {
            std::ofstream log(dir / "log.csv");
            write_training_log(log, result.log);
          }
          result.best.save_file((dir / "best.bin").string());
          result.final_net.save_file((dir / "final.bin").string());

          const auto seeds = evaluation_seeds(seed, s.eval_games);
          const EvalResult base = evaluate(c.scenario.config, baseline_seats, seeds, s.eval_periods);
          const EvalResult dqn =
              evaluate_network(c.scenario.config, c.role, std::make_shared<const Mlp>(result.best),
                               m, co_raw, seeds, s.eval_periods);
          SummaryRow row;
          row.role = c.role;
          row.beta = beta;
          row.m = m;
          row.c_sync = sync;
          row.seed = seed;
          row.dqn = dqn.total.mean;
          row.dqn_ci = dqn.total.ci;
          row.baseline = base.total.mean;
          row.baseline_ci = base.total.ci;
          row.gap = gap_percent(row.dqn, row.baseline);
          row.best_episode = result.best_episode;
          row.seconds = result.seconds;
          rows.push_back(row);
          manifest["cells"].push_back(
              {{"tag", tag}, {"train_steps", result.train_steps}, {"seconds", result.seconds}});
        }
      }
    }
  }
  std::ostringstream summary;
  write_summary_csv(summary, rows);
  write_text(c.out / "summary.csv", summary.str());
  write_text(c.out / "manifest.json", manifest.dump(2) + "\n");
  return rows;
}

}  // namespace beergame
