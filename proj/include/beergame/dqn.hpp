#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "beergame/evaluation.hpp"
#include "beergame/game_config.hpp"
#include "beergame/mlp.hpp"
#include "beergame/policies.hpp"

namespace beergame {

// Fixed-capacity FIFO of transitions. Every record gets a sequence id equal to
// the number of records pushed before it, so an episode is an id range.
// Rewards are stored as costs.
class ReplayMemory {
 public:
  struct Record {
    std::span<const float> state;
    std::span<const float> next_state;
    int action = 0;
    double cost = 0.0;
    bool terminal = false;
  };

  ReplayMemory(std::size_t capacity, int observation_size);

  std::uint64_t push(std::span<const double> state, int action, double cost,
                     std::span<const double> next_state, bool terminal);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  int observation_size() const { return obs_size_; }
  std::uint64_t first_id() const { return next_id_ - size_; }
  std::uint64_t next_id() const { return next_id_; }
  bool resident(std::uint64_t id) const { return id >= first_id() && id < next_id_; }

  Record at(std::uint64_t id) const;
  void set_cost(std::uint64_t id, double cost);

  // Uniformly chosen resident id.
  std::uint64_t sample(Rng& rng) const;

 private:
  std::size_t slot(std::uint64_t id) const { return static_cast<std::size_t>(id % capacity_); }

  std::size_t capacity_;
  int obs_size_;
  std::size_t size_ = 0;
  std::uint64_t next_id_ = 0;
  std::vector<float> states_, next_states_;
  std::vector<int> actions_;
  std::vector<double> costs_;
  std::vector<unsigned char> terminal_;
};

struct EpisodeRange {
  std::uint64_t begin = 0;
  std::uint64_t end = 0;  // one past the last record
};

// Linear from `start` at progress 0 to `end` at `anneal`, flat afterwards.
double epsilon(double progress, double start = 0.9, double end = 0.1, double anneal = 0.8);

// Lowest index among the minimal entries.
int argmin_index(const Eigen::VectorXd& q);

// With probability eps a uniform index, otherwise argmin Q(obs, .).
int select_action(const Mlp& net, std::span<const double> obs, double eps, Rng& rng);

// Order = max(0, d + lower + index).
Units action_to_order(int index, int lower, Units received_order);

// cost if terminal, else cost + gamma * min_a Q_target(next_obs, a).
double q_target(double cost, std::span<const double> next_obs, bool terminal,
                const Mlp& target, double gamma);

// (beta / (N - 1)) * (omega - tau_agent), where omega is the all-agent cost per
// period and tau the agent's own. costs is [agent][period].
double feedback_shift(const std::vector<std::vector<double>>& costs, double beta, int agent);

// Adds feedback_shift to every stored cost of the episode. Returns false (and
// warns on stderr) when part of the episode has already been evicted.
bool apply_feedback(ReplayMemory& memory, EpisodeRange episode,
                    const std::vector<std::vector<double>>& costs, double beta, int agent);

// Play-time DQN seat: reads only its own stacked observation.
class DqnPolicy : public Policy {
 public:
  DqnPolicy(std::shared_ptr<const Mlp> net, int periods, ActionBounds bounds);
  Units act(const SeatView& seat, Rng& rng) const override;
  std::string name() const override { return "dqn"; }
  std::unique_ptr<Policy> clone() const override { return std::make_unique<DqnPolicy>(*this); }

  int periods() const { return periods_; }
  const Mlp& net() const { return *net_; }

 private:
  std::shared_ptr<const Mlp> net_;
  int periods_;
  ActionBounds bounds_;
};

struct TrainSchedule {
  int total_episodes = 60000;
  int warmup_episodes = 500;
  double epsilon_start = 0.9;
  double epsilon_end = 0.1;
  double epsilon_anneal_fraction = 0.8;
  int target_sync = 10000;
  int batch_size = 64;
  double beta = 0.0;
  int m = 10;
  std::size_t replay_capacity = 1000000;
  int eval_every = 100;
  int eval_games = 50;
  int eval_periods = 100;
  std::vector<int> hidden{180, 130, 61};
  AdamConfig adam;
  std::uint64_t init_seed = 1;

  void validate() const;
  std::vector<int> layer_sizes(int actions) const;
};

// Online/target pair plus replay memory; one call to learn() is one training
// iteration.
class DqnLearner {
 public:
  DqnLearner(Mlp online, const TrainSchedule& schedule, double gamma);

  Mlp& online() { return online_; }
  const Mlp& online() const { return online_; }
  const Mlp& target() const { return target_; }
  ReplayMemory& memory() { return memory_; }
  std::uint64_t steps() const { return steps_; }
  bool can_learn() const { return memory_.size() >= std::size_t(schedule_.batch_size); }

  // Samples a minibatch, takes one Adam step, syncs the target every
  // target_sync steps. Returns the loss.
  double learn(Rng& rng);

 private:
  TrainSchedule schedule_;
  double gamma_;
  Mlp online_;
  Mlp target_;
  ReplayMemory memory_;
  std::uint64_t steps_ = 0;
  Eigen::MatrixXd batch_, next_batch_;
  std::vector<double> targets_;
  std::vector<int> actions_;
};

struct CheckpointRecord {
  int episode = 0;
  double cost = 0.0;  // mean total cost per validation game, all agents
  double ci = 0.0;
  double role_cost = 0.0;
  double epsilon = 0.0;
  double lr = 0.0;
  double loss = 0.0;  // mean training loss since the previous checkpoint
  std::uint64_t steps = 0;
  double seconds = 0.0;
};

void write_training_log(std::ostream& out, const std::vector<CheckpointRecord>& log);

struct TrainOptions {
  const Mlp* initial = nullptr;  // warm start; otherwise He-uniform from init_seed
  int frozen_layers = 0;
  std::function<void(const CheckpointRecord&)> on_checkpoint;
};

struct TrainResult {
  Mlp best;
  Mlp final_net;
  std::vector<CheckpointRecord> log;
  int best_episode = 0;
  double best_cost = 0.0;
  double untrained_cost = 0.0;
  std::uint64_t train_steps = 0;
  double seconds = 0.0;
};

// Evaluates `net` in seat `role` with the given co-players on a fixed seed set.
EvalResult evaluate_network(const GameConfig& config, int role, std::shared_ptr<const Mlp> net,
                            int m, std::span<const Policy* const> co_players,
                            std::span<const std::uint64_t> seeds, int periods);

// Trains the agent in seat `role` against fixed co-players (the role's entry
// in co_players is ignored). Throws NumericError if training diverges.
TrainResult train(const GameConfig& config, int role, std::span<const Policy* const> co_players,
                  const TrainSchedule& schedule, std::uint64_t seed,
                  const TrainOptions& options = {});

}  // namespace beergame
