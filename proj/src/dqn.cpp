#include "beergame/dqn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <string>

#include <fmt/format.h>

#include "beergame/beer_game.hpp"
#include "beergame/errors.hpp"

namespace beergame {

ReplayMemory::ReplayMemory(std::size_t capacity, int observation_size)
    : capacity_(capacity), obs_size_(observation_size) {
  if (capacity == 0) throw ConfigError("replay capacity must be positive");
  if (observation_size <= 0) throw ConfigError("observation size must be positive");
}

std::uint64_t ReplayMemory::push(std::span<const double> state, int action, double cost,
                                 std::span<const double> next_state, bool terminal) {
  if (static_cast<int>(state.size()) != obs_size_ ||
      static_cast<int>(next_state.size()) != obs_size_) {
    throw ShapeError("experience observation has the wrong width");
  }
  const std::size_t s = slot(next_id_);
  // Storage grows with use up to capacity.
  if (size_ < capacity_ && s == size_) {
    states_.resize(states_.size() + obs_size_);
    next_states_.resize(next_states_.size() + obs_size_);
    actions_.push_back(0);
    costs_.push_back(0.0);
    terminal_.push_back(0);
  }
  std::copy(state.begin(), state.end(), states_.begin() + s * obs_size_);
  std::copy(next_state.begin(), next_state.end(), next_states_.begin() + s * obs_size_);
  actions_[s] = action;
  costs_[s] = cost;
  terminal_[s] = terminal ? 1 : 0;
  if (size_ < capacity_) ++size_;
  return next_id_++;
}

ReplayMemory::Record ReplayMemory::at(std::uint64_t id) const {
  if (!resident(id)) throw StateError("experience " + std::to_string(id) + " is not resident");
  const std::size_t s = slot(id);
  Record r;
  r.state = std::span<const float>(states_).subspan(s * obs_size_, obs_size_);
  r.next_state = std::span<const float>(next_states_).subspan(s * obs_size_, obs_size_);
  r.action = actions_[s];
  r.cost = costs_[s];
  r.terminal = terminal_[s] != 0;
  return r;
}

void ReplayMemory::set_cost(std::uint64_t id, double cost) {
  if (!resident(id)) throw StateError("experience " + std::to_string(id) + " is not resident");
  costs_[slot(id)] = cost;
}

std::uint64_t ReplayMemory::sample(Rng& rng) const {
  if (size_ == 0) throw StateError("cannot sample from an empty replay memory");
  std::uniform_int_distribution<std::uint64_t> pick(first_id(), next_id_ - 1);
  return pick(rng);
}

double epsilon(double progress, double start, double end, double anneal) {
  if (progress <= 0.0) return start;
  if (progress >= anneal) return end;
  return start + (end - start) * (progress / anneal);
}

int argmin_index(const Eigen::VectorXd& q) {
  int best = 0;
  for (int a = 1; a < q.size(); ++a) {
    if (q(a) < q(best)) best = a;
  }
  return best;
}

int select_action(const Mlp& net, std::span<const double> obs, double eps, Rng& rng) {
  if (eps > 0.0) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < eps) {
      std::uniform_int_distribution<int> pick(0, net.output_size() - 1);
      return pick(rng);
    }
  }
  return argmin_index(net.forward(obs));
}

Units action_to_order(int index, int lower, Units received_order) {
  return std::max<Units>(0, received_order + lower + index);
}

double q_target(double cost, std::span<const double> next_obs, bool terminal, const Mlp& target,
                double gamma) {
  if (terminal || gamma == 0.0) return cost;
  return cost + gamma * target.forward(next_obs).minCoeff();
}

double feedback_shift(const std::vector<std::vector<double>>& costs, double beta, int agent) {
  const int n = static_cast<int>(costs.size());
  if (n < 2) throw ConfigError("feedback needs at least two agents");
  if (agent < 0 || agent >= n) throw ConfigError("feedback agent out of range");
  const std::size_t periods = costs[agent].size();
  if (periods == 0) return 0.0;
  double omega = 0.0;
  for (const auto& stream : costs) {
    if (stream.size() != periods) throw ConfigError("feedback cost streams differ in length");
    for (double c : stream) omega += c;
  }
  double tau = 0.0;
  for (double c : costs[agent]) tau += c;
  omega /= double(periods);
  tau /= double(periods);
  return beta / double(n - 1) * (omega - tau);
}

bool apply_feedback(ReplayMemory& memory, EpisodeRange episode,
                    const std::vector<std::vector<double>>& costs, double beta, int agent) {
  if (episode.end <= episode.begin) return true;
  if (!memory.resident(episode.begin) || !memory.resident(episode.end - 1)) {
    std::cerr << "warning: feedback skipped, episode records " << episode.begin << ".."
              << episode.end << " are no longer in replay memory\n";
    return false;
  }
  const double shift = feedback_shift(costs, beta, agent);
  if (shift == 0.0) return true;
  for (std::uint64_t id = episode.begin; id < episode.end; ++id) {
    memory.set_cost(id, memory.at(id).cost + shift);
  }
  return true;
}

DqnPolicy::DqnPolicy(std::shared_ptr<const Mlp> net, int periods, ActionBounds bounds)
    : net_(std::move(net)), periods_(periods), bounds_(bounds) {
  if (!net_) throw ConfigError("dqn policy needs a network");
  if (periods_ < 1) throw ConfigError("dqn observation window must be at least one period");
  if (net_->input_size() != periods_ * kFeaturesPerPeriod) {
    throw ConfigError(fmt::format("network input {} does not match a {}-period window",
                                  net_->input_size(), periods_));
  }
  if (net_->output_size() != bounds_.size()) {
    throw ConfigError(fmt::format("network has {} outputs but the action space has {}",
                                  net_->output_size(), bounds_.size()));
  }
}

Units DqnPolicy::act(const SeatView& seat, Rng&) const {
  std::vector<double> obs(static_cast<std::size_t>(periods_) * kFeaturesPerPeriod);
  seat.write_observation(periods_, obs.data());
  const int index = argmin_index(net_->forward(obs));
  return action_to_order(index, bounds_.lower, seat.local().incoming_order);
}

void TrainSchedule::validate() const {
  if (total_episodes < 0) throw ConfigError("total_episodes must be >= 0");
  if (warmup_episodes < 0) throw ConfigError("warmup_episodes must be >= 0");
  if (!(0.0 <= epsilon_end && epsilon_end <= epsilon_start && epsilon_start <= 1.0)) {
    throw ConfigError("epsilon schedule needs 0 <= end <= start <= 1");
  }
  if (!(epsilon_anneal_fraction > 0.0 && epsilon_anneal_fraction <= 1.0)) {
    throw ConfigError("epsilon anneal fraction must lie in (0, 1]");
  }
  if (target_sync < 1) throw ConfigError("target sync period must be >= 1");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (!std::isfinite(beta) || beta < 0.0) throw ConfigError("feedback beta must be >= 0");
  if (m < 1) throw ConfigError("observation window m must be >= 1");
  if (replay_capacity < std::size_t(batch_size)) {
    throw ConfigError("replay capacity must hold at least one batch");
  }
  if (eval_every < 1 || eval_games < 1 || eval_periods < 1) {
    throw ConfigError("evaluation cadence, games and periods must be >= 1");
  }
  if (!(adam.base_lr > 0.0)) throw ConfigError("base learning rate must be positive");
}

std::vector<int> TrainSchedule::layer_sizes(int actions) const {
  std::vector<int> sizes{m * kFeaturesPerPeriod};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(actions);
  return sizes;
}

DqnLearner::DqnLearner(Mlp online, const TrainSchedule& schedule, double gamma)
    : schedule_(schedule),
      gamma_(gamma),
      online_(online),
      target_(std::move(online)),
      memory_(schedule.replay_capacity, online_.input_size()) {}

double DqnLearner::learn(Rng& rng) {
  const int b = schedule_.batch_size;
  const int width = online_.input_size();
  batch_.resize(width, b);
  next_batch_.resize(width, b);
  targets_.resize(b);
  actions_.resize(b);
  std::vector<unsigned char> terminal(b);
  for (int j = 0; j < b; ++j) {
    const ReplayMemory::Record r = memory_.at(memory_.sample(rng));
    for (int k = 0; k < width; ++k) {
      batch_(k, j) = r.state[k];
      next_batch_(k, j) = r.next_state[k];
    }
    actions_[j] = r.action;
    targets_[j] = r.cost;
    terminal[j] = r.terminal;
  }
  if (gamma_ != 0.0) {
    const Eigen::MatrixXd next_q = target_.forward_batch(next_batch_);
    for (int j = 0; j < b; ++j) {
      if (!terminal[j]) targets_[j] += gamma_ * next_q.col(j).minCoeff();
    }
  }
  const double loss = online_.train_step(batch_, targets_, actions_, schedule_.adam);
  ++steps_;
  if (steps_ % std::uint64_t(schedule_.target_sync) == 0) target_.copy_parameters_from(online_);
  return loss;
}

void write_training_log(std::ostream& out, const std::vector<CheckpointRecord>& log) {
  out << "episode,cost,ci,role_cost,epsilon,lr,loss,steps,seconds\n";
  for (const auto& r : log) {
    out << fmt::format("{},{:.6f},{:.6f},{:.6f},{:.6f},{:.8g},{:.6g},{},{:.3f}\n", r.episode,
                       r.cost, r.ci, r.role_cost, r.epsilon, r.lr, r.loss, r.steps, r.seconds);
  }
}

EvalResult evaluate_network(const GameConfig& config, int role, std::shared_ptr<const Mlp> net,
                            int m, std::span<const Policy* const> co_players,
                            std::span<const std::uint64_t> seeds, int periods) {
  if (static_cast<int>(co_players.size()) != config.num_agents) {
    throw ConfigError("need one co-player slot per agent");
  }
  if (role < 0 || role >= config.num_agents) throw ConfigError("learner role out of range");
  DqnPolicy learner(std::move(net), m, config.action_bounds);
  std::vector<const Policy*> seats(co_players.begin(), co_players.end());
  seats[role] = &learner;
  return evaluate(config, seats, seeds, periods);
}

TrainResult train(const GameConfig& config, int role, std::span<const Policy* const> co_players,
                  const TrainSchedule& schedule, std::uint64_t seed,
                  const TrainOptions& options) {
  using Clock = std::chrono::steady_clock;
  const auto started = Clock::now();
  config.validate();
  schedule.validate();
  const int n = config.num_agents;
  if (role < 0 || role >= n) throw ConfigError("learner role out of range");
  if (static_cast<int>(co_players.size()) != n) {
    throw ConfigError("need one co-player slot per agent");
  }
  for (int i = 0; i < n; ++i) {
    if (i != role && !co_players[i]) throw ConfigError("co-player policy missing");
  }

  const int actions = config.action_bounds.size();
  Mlp initial = options.initial ? *options.initial
                                : Mlp(schedule.layer_sizes(actions), schedule.init_seed);
  if (initial.layer_sizes() != schedule.layer_sizes(actions)) {
    throw ConfigError("initial network shape does not match the scenario and schedule");
  }
  initial.set_frozen_layers(options.frozen_layers);
  DqnLearner learner(std::move(initial), schedule, config.gamma);

  const std::vector<std::uint64_t> validation = evaluation_seeds(seed, schedule.eval_games);
  Rng episode_seeds(seed);
  Rng explore(seed ^ 0x5851f42d4c957f2dULL);
  Rng policy_rng(seed ^ 0x14057b7ef767814fULL);
  Rng sample_rng(seed ^ 0x2545f4914f6cdd1dULL);

  // Iteration budget for the epsilon schedule: one train step per period after warmup.
  const double planned_steps = std::max(
      1.0, double(schedule.total_episodes - schedule.warmup_episodes) * horizon_mean(config.horizon));
  auto current_epsilon = [&] {
    return epsilon(double(learner.steps()) / planned_steps, schedule.epsilon_start,
                   schedule.epsilon_end, schedule.epsilon_anneal_fraction);
  };

  TrainResult result{learner.online(), learner.online(), {}, 0, 0.0, 0.0, 0, 0.0};
  double loss_sum = 0.0;
  std::uint64_t loss_count = 0;

  auto checkpoint = [&](int episode) {
    auto snapshot = std::make_shared<const Mlp>(learner.online());
    const EvalResult eval = evaluate_network(config, role, snapshot, schedule.m, co_players,
                                             validation, schedule.eval_periods);
    CheckpointRecord rec;
    rec.episode = episode;
    rec.cost = eval.total.mean;
    rec.ci = eval.total.ci;
    rec.role_cost = eval.agents[role].mean;
    rec.epsilon = current_epsilon();
    rec.lr = schedule.adam.learning_rate(learner.online().step());
    rec.loss = loss_count ? loss_sum / double(loss_count) : 0.0;
    rec.steps = learner.steps();
    rec.seconds = std::chrono::duration<double>(Clock::now() - started).count();
    loss_sum = 0.0;
    loss_count = 0;
    if (result.log.empty()) result.untrained_cost = rec.cost;
    if (result.log.empty() || rec.cost < result.best_cost) {
      result.best_cost = rec.cost;
      result.best_episode = episode;
      result.best = *snapshot;
    }
    result.log.push_back(rec);
    if (options.on_checkpoint) options.on_checkpoint(rec);
  };

  checkpoint(0);
  const int width = schedule.m * kFeaturesPerPeriod;
  std::vector<double> obs(width), next_obs(width);
  std::vector<std::vector<double>> costs(n);
  for (int episode = 0; episode < schedule.total_episodes; ++episode) {
    BeerGame game(config, episode_seeds());
    for (auto& c : costs) c.clear();
    const EpisodeRange range{learner.memory().next_id(), 0};
    const bool learning = episode >= schedule.warmup_episodes;
    while (!game.terminal()) {
      int chosen = 0;
      const double eps = current_epsilon();
      const StepOutcome out = game.play_period([&](const SeatView& seat) {
        if (seat.agent() != role) return co_players[seat.agent()]->act(seat, policy_rng);
        seat.write_observation(schedule.m, obs.data());
        chosen = select_action(learner.online(), obs, eps, explore);
        return action_to_order(chosen, config.action_bounds.lower, seat.local().incoming_order);
      });
      game.write_observation(role, schedule.m, next_obs.data());
      learner.memory().push(obs, chosen, out.costs[role], next_obs, out.terminal);
      for (int i = 0; i < n; ++i) costs[i].push_back(out.costs[i]);
      if (learning && learner.can_learn()) {
        try {
          loss_sum += learner.learn(sample_rng);
          ++loss_count;
        } catch (const NumericError& e) {
          throw NumericError(fmt::format("training diverged in episode {} after {} steps: {}",
                                         episode, learner.steps(), e.what()));
        }
      }
    }
    if (schedule.beta != 0.0) {
      apply_feedback(learner.memory(), {range.begin, learner.memory().next_id()}, costs,
                     schedule.beta, role);
    }
    const int done = episode + 1;
    if (done % schedule.eval_every == 0 || done == schedule.total_episodes) checkpoint(done);
  }

  result.final_net = learner.online();
  result.train_steps = learner.steps();
  result.seconds = std::chrono::duration<double>(Clock::now() - started).count();
  return result;
}

}  // namespace beergame
