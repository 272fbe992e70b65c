#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "beergame/errors.hpp"
#include "beergame/harness.hpp"
#include "beergame/http_server.hpp"
#include "beergame/scenario.hpp"
#include "beergame/server.hpp"
#include "beergame/transfer.hpp"

using namespace beergame;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string scenario = "basic";
  std::uint64_t seed = 1;
  std::string out;
  int games = 50;
  int periods = 100;
};

struct Training {
  int role = 0;
  std::string coplayers = "bs";
  std::vector<double> betas;
  std::vector<int> ms;
  std::vector<int> c_syncs;
  std::vector<std::uint64_t> seeds;
  int episodes = 60000;
  int warmup = 500;
  int eval_every = 100;
  std::vector<std::string> source_weights;
  std::vector<int> ks;
  double lr_scale = 0.1;
  bool force = false;
  bool quiet = false;
};

void add_common(CLI::App* app, Common& c, bool with_out = true) {
  app->add_option("--scenario", c.scenario, "Preset name or scenario JSON file")
      ->capture_default_str();
  app->add_option("--seed", c.seed, "Base seed")->capture_default_str();
  if (with_out) app->add_option("--out", c.out, "Output file or directory");
  app->add_option("--games", c.games, "Evaluation games")->capture_default_str();
  app->add_option("--periods", c.periods, "Periods per evaluation game")->capture_default_str();
}

void add_training(CLI::App* app, Training& t, bool sweep_lists) {
  app->add_option("--role", t.role, "Learner seat (0 = retailer)")->capture_default_str();
  app->add_option("--coplayers", t.coplayers, "Co-player policy: bs, strm or rand")
      ->capture_default_str();
  auto* beta = app->add_option("--beta", t.betas, "Feedback weight beta");
  auto* m = app->add_option("--m", t.ms, "Observation window m");
  auto* c = app->add_option("--c-sync", t.c_syncs, "Target sync interval C");
  if (sweep_lists) {
    for (auto* o : {beta, m, c}) o->delimiter(',');
  } else {
    for (auto* o : {beta, m, c}) o->expected(1);
  }
  app->add_option("--episodes", t.episodes, "Training episodes")->capture_default_str();
  app->add_option("--warmup", t.warmup, "Random-play warmup episodes")->capture_default_str();
  app->add_option("--eval-every", t.eval_every, "Episodes between validations")
      ->capture_default_str();
  app->add_flag("--force", t.force, "Overwrite an existing output directory");
  app->add_flag("--quiet", t.quiet, "No progress output");
}

TrainSchedule schedule_from(const Common& c, const Training& t) {
  TrainSchedule s;
  s.total_episodes = t.episodes;
  s.warmup_episodes = t.warmup;
  s.eval_every = t.eval_every;
  s.eval_games = c.games;
  s.eval_periods = c.periods;
  return s;
}

Campaign campaign_from(const Common& c, const Training& t) {
  if (c.out.empty()) throw ConfigError("--out is required");
  Campaign camp;
  camp.scenario = load_scenario(c.scenario);
  camp.role = t.role;
  camp.coplayers = parse_policy_kind(t.coplayers);
  camp.schedule = schedule_from(c, t);
  camp.betas = t.betas;
  camp.ms = t.ms;
  camp.c_syncs = t.c_syncs;
  camp.seeds = t.seeds.empty() ? std::vector<std::uint64_t>{c.seed} : t.seeds;
  camp.out = c.out;
  camp.force = t.force;
  camp.quiet = t.quiet;
  camp.transfer_lr_scale = t.lr_scale;
  return camp;
}

// "bs", "bs:12", "strm", "rand", "dqn:weights.bin"
PolicySpec parse_seat(const std::string& token) {
  const auto colon = token.find(':');
  PolicySpec spec;
  spec.kind = parse_policy_kind(token.substr(0, colon));
  if (colon == std::string::npos) return spec;
  const std::string arg = token.substr(colon + 1);
  if (spec.kind == PolicyKind::dqn) {
    spec.weights = arg;
  } else if (spec.kind == PolicyKind::base_stock) {
    try {
      spec.level = std::stoi(arg);
    } catch (const std::exception&) {
      throw ConfigError("bad base-stock level '" + arg + "'");
    }
  } else {
    throw ConfigError("policy '" + token + "' takes no argument");
  }
  return spec;
}

std::vector<std::unique_ptr<Policy>> seat_policies(const Scenario& s,
                                                   const std::vector<std::string>& tokens) {
  std::vector<std::unique_ptr<Policy>> out;
  const int n = s.config.num_agents;
  if (tokens.empty()) {
    for (int i = 0; i < n; ++i) out.push_back(make_policy(s.policies[i], s, i));
  } else if (tokens.size() == 1) {
    const PolicySpec spec = parse_seat(tokens[0]);
    for (int i = 0; i < n; ++i) out.push_back(make_policy(spec, s, i));
  } else if (static_cast<int>(tokens.size()) == n) {
    for (int i = 0; i < n; ++i) out.push_back(make_policy(parse_seat(tokens[i]), s, i));
  } else {
    throw ConfigError(fmt::format("--policies needs 1 or {} entries", n));
  }
  return out;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

int cmd_baseline(const Common& c, const std::vector<std::string>& policies, bool search) {
  Scenario s = load_scenario(c.scenario);
  if (search) {
    s.base_stock_levels = search_base_stock(s.config, s.base_stock_levels, c.games, c.periods,
                                            c.seed);
    std::cerr << fmt::format("base-stock levels: [{}]\n", fmt::join(s.base_stock_levels, ","));
  }
  const auto seats = seat_policies(s, policies);
  std::vector<std::string> names;
  for (const auto& p : seats) names.push_back(p->name());
  const EvalResult r = run_baseline(s, raw(seats), c.games, c.periods, c.seed);
  if (c.out.empty()) {
    write_baseline_report(std::cout, s, names, r);
  } else {
    auto out = open_out(c.out);
    write_baseline_report(out, s, names, r);
  }
  std::cerr << fmt::format("{}: {:.2f} +- {:.2f} per game, {:.4f} per period\n", s.name,
                           r.total.mean, r.total.ci, r.per_period());
  return 0;
}

void print_summary(const std::vector<SummaryRow>& rows) {
  write_summary_csv(std::cout, rows);
}

int cmd_train(const Common& c, const Training& t) {
  print_summary(run_experiment(campaign_from(c, t)));
  return 0;
}

int cmd_transfer(const Common& c, const Training& t) {
  if (t.source_weights.size() != 1) throw ConfigError("transfer needs one --source-weights file");
  Campaign camp = campaign_from(c, t);
  camp.source_weights = t.source_weights[0];
  camp.frozen_layers = t.ks.empty() ? 0 : t.ks[0];
  print_summary(run_experiment(camp));
  return 0;
}

int cmd_sweep(const Common& c, const Training& t) {
  if (t.source_weights.empty()) return cmd_train(c, t);

  // Transfer sweep over (source, k).
  Campaign camp = campaign_from(c, t);
  if (fs::exists(camp.out) && !camp.force) {
    throw ConfigError("output directory " + camp.out.string() + " exists; use --force to overwrite");
  }
  TrainSchedule schedule = camp.schedule;
  if (!t.betas.empty()) schedule.beta = t.betas[0];
  if (!t.c_syncs.empty()) schedule.target_sync = t.c_syncs[0];
  std::vector<TransferSource> sources;
  for (const auto& path : t.source_weights) sources.push_back({path, Mlp::load_file(path)});
  schedule.m = sources[0].net.input_size() / 5;
  const std::vector<int> ks = t.ks.empty() ? std::vector<int>{1, 2, 3} : t.ks;

  const auto co = coplayer_policies(camp.scenario, camp.coplayers);
  BaseStockPolicy role_bs(camp.scenario.base_stock_levels.at(camp.role));
  std::vector<const Policy*> baseline_seats = raw(co);
  baseline_seats[camp.role] = &role_bs;
  const auto seeds = evaluation_seeds(c.seed, schedule.eval_games);
  const double baseline =
      evaluate(camp.scenario.config, baseline_seats, seeds, schedule.eval_periods).total.mean;

  const SweepReport report = transfer_sweep(sources, ks, camp.scenario.config, camp.role, raw(co),
                                            schedule, c.seed, baseline, t.lr_scale);
  fs::create_directories(camp.out);
  auto csv = open_out(camp.out / "sweep.csv");
  write_sweep_csv(csv, report);
  report.runs[report.best].train.best.save_file((camp.out / "best.bin").string());
  write_sweep_csv(std::cout, report);
  return 0;
}

int cmd_trace(const Common& c, const std::vector<std::string>& policies) {
  const Scenario s = load_scenario(c.scenario);
  const auto seats = seat_policies(s, policies);
  const auto rows = dump_trace(s.config, raw(seats), c.seed, c.periods);
  if (c.out.empty()) {
    write_trace_csv(std::cout, rows);
  } else {
    auto out = open_out(c.out);
    write_trace_csv(out, rows);
  }
  return 0;
}

HttpServer* running_server = nullptr;

int cmd_serve(const std::string& host, int port, const std::string& static_dir) {
  SessionManager sessions;
  HttpServer server(sessions, static_dir);
  running_server = &server;
  for (int sig : {SIGINT, SIGTERM}) {
    std::signal(sig, [](int) {
      if (running_server) running_server->stop();
    });
  }
  std::cerr << fmt::format("serving on http://{}:{}/api/v1\n", host, port);
  server.run(host, port);
  running_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Beer game simulator, DQN trainer and game server"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Common common;
  Training training;
  std::vector<std::string> policies;
  bool search = false;

  auto* baseline = app.add_subcommand("baseline", "Evaluate fixed policies");
  add_common(baseline, common);
  baseline->add_option("--policies", policies, "One policy for all seats or one per seat")
      ->delimiter(',');
  baseline->add_flag("--search", search, "Search base-stock levels first");

  auto* train_cmd = app.add_subcommand("train", "Train a DQN learner");
  add_common(train_cmd, common);
  add_training(train_cmd, training, false);

  auto* transfer = app.add_subcommand("transfer", "Warm-start a learner from trained weights");
  add_common(transfer, common);
  add_training(transfer, training, false);
  transfer->add_option("--source-weights", training.source_weights, "Source network")
      ->expected(1)
      ->required();
  transfer->add_option("--k", training.ks, "Frozen layers")->expected(1);
  transfer->add_option("--lr-scale", training.lr_scale, "Learning-rate scale")
      ->capture_default_str();

  auto* sweep = app.add_subcommand("sweep", "Grid over beta, m and C, or transfer sources and k");
  add_common(sweep, common);
  add_training(sweep, training, true);
  sweep->add_option("--seeds", training.seeds, "Seeds")->delimiter(',');
  sweep->add_option("--source-weights", training.source_weights, "Source networks")
      ->delimiter(',');
  sweep->add_option("--k", training.ks, "Frozen-layer counts")->delimiter(',');
  sweep->add_option("--lr-scale", training.lr_scale, "Learning-rate scale")->capture_default_str();

  auto* trace = app.add_subcommand("trace", "Dump one game's per-period table");
  add_common(trace, common);
  trace->add_option("--policies", policies, "One policy for all seats or one per seat")
      ->delimiter(',');

  std::string host = "127.0.0.1";
  int port = 8080;
  std::string static_dir;
  auto* serve = app.add_subcommand("serve", "Run the game server");
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port)->capture_default_str();
  serve->add_option("--static", static_dir, "Directory served at /");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*baseline) return cmd_baseline(common, policies, search);
    if (*train_cmd) return cmd_train(common, training);
    if (*transfer) return cmd_transfer(common, training);
    if (*sweep) return cmd_sweep(common, training);
    if (*trace) return cmd_trace(common, policies);
    if (*serve) return cmd_serve(host, port, static_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
