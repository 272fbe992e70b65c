#include "beergame/server.hpp"

#include <algorithm>
#include <random>

#include <fmt/format.h>

#include "beergame/errors.hpp"

namespace beergame {

using nlohmann::json;

std::string status_name(SessionStatus s) {
  switch (s) {
    case SessionStatus::lobby: return "lobby";
    case SessionStatus::in_play: return "in_play";
    case SessionStatus::finished: return "finished";
  }
  return "?";
}

std::string role_name(int agent, int num_agents) {
  static const char* names[] = {"retailer", "warehouse", "distributor", "manufacturer"};
  if (num_agents == 4 && agent >= 0 && agent < 4) return names[agent];
  return fmt::format("agent{}", agent);
}

int parse_role(const std::string& role, int num_agents) {
  for (int i = 0; i < num_agents; ++i) {
    if (role == role_name(i, num_agents)) return i;
  }
  if (!role.empty() && std::all_of(role.begin(), role.end(), ::isdigit)) {
    const int i = std::stoi(role);
    if (i < num_agents) return i;
  }
  throw ConfigError("unknown role '" + role + "'");
}

SessionPlan SessionPlan::from_json(const json& j) {
  try {
    SessionPlan plan;
    if (j.contains("scenario")) {
      const json& s = j.at("scenario");
      if (s.is_string()) {
        plan.scenario = s.get<std::string>();
      } else {
        plan.inline_scenario = scenario_from_json(s.dump());
      }
    }
    if (j.contains("seed")) plan.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("periods")) plan.periods = j.at("periods").get<int>();
    if (j.contains("shot_clock_seconds")) {
      plan.shot_clock_seconds = j.at("shot_clock_seconds").get<double>();
    }
    const int n = plan.inline_scenario ? plan.inline_scenario->config.num_agents : 4;
    for (const json& seat : j.at("seats")) {
      SeatPlan sp;
      const json& role = seat.at("role");
      sp.agent = role.is_number_integer() ? role.get<int>()
                                          : parse_role(role.get<std::string>(), n);
      const auto type = seat.value("type", std::string("human"));
      if (type == "human") {
        sp.human = true;
      } else if (type == "bot") {
        sp.human = false;
        const json& p = seat.at("policy");
        sp.bot.kind = parse_policy_kind(p.at("type").get<std::string>());
        if (p.contains("level")) sp.bot.level = p.at("level").get<Units>();
        if (p.contains("weights")) sp.bot.weights = p.at("weights").get<std::string>();
        if (p.contains("m")) sp.bot.m = p.at("m").get<int>();
      } else {
        throw ConfigError("seat type must be human or bot");
      }
      plan.seats.push_back(sp);
    }
    return plan;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed seat plan: ") + e.what());
  }
}

struct SessionManager::Session {
  std::mutex mutex;
  std::condition_variable changed;

  std::string id;
  Scenario scenario;
  GameConfig config;
  std::uint64_t seed = 0;
  double shot_clock = 0;
  std::vector<SeatPlan> seats;
  std::vector<std::unique_ptr<Policy>> bots;
  std::vector<bool> joined;

  SessionStatus status = SessionStatus::lobby;
  std::unique_ptr<BeerGame> game;
  Rng policy_rng;
  std::vector<std::optional<Units>> pending;
  std::vector<std::vector<Units>> order_log;
  std::vector<TraceRow> trace;
  std::vector<double> cost;
  Clock::time_point deadline{};

  std::vector<SessionEvent> log;
  std::vector<json> private_data;  // parallel to log

  int n() const { return config.num_agents; }

  void emit(std::string type, json data, json hidden = json::object()) {
    SessionEvent e;
    e.seq = log.size();
    e.type = std::move(type);
    e.period = game ? game->period() : 0;
    e.data = std::move(data);
    log.push_back(std::move(e));
    private_data.push_back(std::move(hidden));
    changed.notify_all();
  }

  bool waiting_for_humans() const {
    for (int i = 0; i < n(); ++i) {
      if (seats[i].human && !pending[i]) return true;
    }
    return false;
  }

  void arm_clock(Clock::time_point now) {
    if (shot_clock > 0) {
      deadline = now + std::chrono::duration_cast<Clock::duration>(
                           std::chrono::duration<double>(shot_clock));
    }
  }

  // Plays periods while no human order is outstanding.
  void advance(Clock::time_point now) {
    while (status == SessionStatus::in_play && !waiting_for_humans()) {
      const int t = game->period();
      std::vector<Units> orders(n());
      const StepOutcome out = game->play_period([&](const SeatView& seat) {
        const int i = seat.agent();
        orders[i] = seats[i].human ? *pending[i] : bots[i]->act(seat, policy_rng);
        return orders[i];
      });
      order_log.push_back(orders);
      for (auto& row : trace_rows(t, orders, out)) trace.push_back(row);
      for (int i = 0; i < n(); ++i) cost[i] += out.costs[i];
      pending.assign(n(), std::nullopt);
      emit("advanced", {{"period", game->period()}}, {{"orders", orders}});
      if (out.terminal) {
        status = SessionStatus::finished;
        emit("finished", {{"period", game->period()}}, {{"costs", cost}});
      } else {
        arm_clock(now);
      }
    }
  }
};

SessionManager::SessionManager(std::function<Clock::time_point()> now)
    : now_(std::move(now)), token_rng_(std::random_device{}()) {}

SessionManager::~SessionManager() = default;

std::string SessionManager::fresh_token() {
  return fmt::format("{:016x}{:016x}", token_rng_(), token_rng_());
}

std::shared_ptr<SessionManager::Session> SessionManager::find_session(const std::string& id) {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("no session '" + id + "'");
  return it->second;
}

std::pair<std::shared_ptr<SessionManager::Session>, int> SessionManager::find_token(
    const std::string& token) {
  std::lock_guard lock(mutex_);
  const auto it = tokens_.find(token);
  if (it == tokens_.end()) throw NotFoundError("invalid seat token");
  return {sessions_.at(it->second.first), it->second.second};
}

CreatedSession SessionManager::create(const SessionPlan& plan) {
  auto s = std::make_shared<Session>();
  s->scenario = plan.inline_scenario ? *plan.inline_scenario : load_scenario(plan.scenario);
  s->config = plan.periods > 0 ? s->scenario.config.with_fixed_horizon(plan.periods)
                               : s->scenario.config;
  s->config.validate();
  if (plan.periods < 0) throw ConfigError("periods must be >= 0");
  if (plan.shot_clock_seconds < 0) throw ConfigError("shot clock must be >= 0");
  const int n = s->n();
  if (static_cast<int>(plan.seats.size()) != n) {
    throw ConfigError(fmt::format("seat plan needs exactly {} seats", n));
  }
  s->seats.resize(n);
  std::vector<bool> seen(n, false);
  for (const SeatPlan& seat : plan.seats) {
    if (seat.agent < 0 || seat.agent >= n) throw ConfigError("seat role out of range");
    if (seen[seat.agent]) {
      throw ConfigError("role " + role_name(seat.agent, n) + " appears twice in the seat plan");
    }
    seen[seat.agent] = true;
    s->seats[seat.agent] = seat;
  }
  s->bots.resize(n);
  for (int i = 0; i < n; ++i) {
    if (s->seats[i].human) continue;
    try {
      s->bots[i] = make_policy(s->seats[i].bot, s->scenario, i);
    } catch (const FormatError& e) {
      throw ConfigError(fmt::format("bot {} weights: {}", role_name(i, n), e.what()));
    }
  }
  s->seed = plan.seed;
  s->shot_clock = plan.shot_clock_seconds;
  s->joined.assign(n, false);
  s->cost.assign(n, 0.0);
  s->pending.assign(n, std::nullopt);

  CreatedSession created;
  std::lock_guard lock(mutex_);
  do {
    s->id = fmt::format("{:016x}", token_rng_());
  } while (sessions_.count(s->id));
  created.session = s->id;
  for (int i = 0; i < n; ++i) {
    if (!s->seats[i].human) continue;
    const std::string token = fresh_token();
    tokens_[token] = {s->id, i};
    created.tokens[role_name(i, n)] = token;
  }
  json seats = json::array();
  for (int i = 0; i < n; ++i) {
    seats.push_back({{"role", role_name(i, n)}, {"human", s->seats[i].human}});
  }
  s->emit("created", {{"scenario", s->scenario.name}, {"seats", seats}});
  sessions_[s->id] = s;
  return created;
}

json SessionManager::join(const std::string& token) {
  auto [s, agent] = find_token(token);
  {
    std::lock_guard lock(s->mutex);
    if (!s->joined[agent]) {
      s->joined[agent] = true;
      s->emit("joined", {{"role", role_name(agent, s->n())}});
    }
  }
  return get_state(token);
}

json SessionManager::start(const std::string& id) {
  auto s = find_session(id);
  std::lock_guard lock(s->mutex);
  if (s->status != SessionStatus::lobby) throw StateError("session already started");
  s->game = std::make_unique<BeerGame>(s->config, s->seed);
  s->policy_rng.seed(s->seed ^ 0x9e3779b97f4a7c15ULL);
  s->status = SessionStatus::in_play;
  s->emit("started", {{"period", 0}});
  s->arm_clock(now_());
  s->advance(now_());
  return {{"v", kProtocolVersion}, {"session", id}, {"status", status_name(s->status)}};
}

namespace {

json seats_json(const std::vector<SeatPlan>& seats, const std::vector<bool>& joined, int n) {
  json out = json::array();
  for (int i = 0; i < n; ++i) {
    out.push_back({{"role", role_name(i, n)}, {"human", seats[i].human}, {"joined", joined[i]}});
  }
  return out;
}

}  // namespace

json SessionManager::get_state(const std::string& token) {
  auto [s, agent] = find_token(token);
  std::lock_guard lock(s->mutex);
  const int n = s->n();
  json j{{"v", kProtocolVersion},
         {"session", s->id},
         {"status", status_name(s->status)},
         {"role", role_name(agent, n)},
         {"agent", agent},
         {"scenario", {{"name", s->scenario.name}, {"description", s->scenario.description}}},
         {"seats", seats_json(s->seats, s->joined, n)}};
  if (s->status == SessionStatus::lobby) return j;

  j["period"] = s->game->period();
  json history = json::array();
  for (const TraceRow& r : s->trace) {
    if (r.agent != agent) continue;
    history.push_back({{"period", r.period},
                       {"inventory", r.inventory},
                       {"on_order", r.on_order},
                       {"incoming_order", r.demand},
                       {"order", r.order},
                       {"shipped", r.shipped},
                       {"cost", -r.reward}});
  }
  j["history"] = std::move(history);
  j["cost"] = s->cost[agent];

  if (s->status == SessionStatus::in_play) {
    const LocalView v = s->game->local_view(agent);
    j["local"] = {{"inventory", v.inventory},
                  {"on_order", v.on_order},
                  {"incoming_order", v.incoming_order},
                  {"incoming_shipment", v.incoming_shipment}};
    j["submitted"] = s->pending[agent].has_value();
    int waiting = 0;
    for (int i = 0; i < n; ++i) waiting += s->seats[i].human && !s->pending[i];
    j["waiting_for"] = waiting;
    if (s->shot_clock > 0) {
      j["deadline_seconds"] =
          std::max(0.0, std::chrono::duration<double>(s->deadline - now_()).count());
    }
  } else {
    json costs = json::array();
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      costs.push_back({{"role", role_name(i, n)}, {"cost", s->cost[i]}});
      total += s->cost[i];
    }
    j["reveal"] = {{"costs", costs}, {"total", total}};
  }
  return j;
}

json SessionManager::submit_order(const std::string& token, Units order) {
  std::shared_ptr<Session> s;
  int agent = 0;
  std::tie(s, agent) = find_token(token);
  int period = 0;
  bool advanced = false;
  {
    std::lock_guard lock(s->mutex);
    if (s->status != SessionStatus::in_play) {
      throw StateError("session is " + status_name(s->status) + ", not in play");
    }
    if (order < 0) throw ConfigError("order must be a non-negative integer");
    if (s->pending[agent]) {
      throw StateError(fmt::format("already submitted for period {}", s->game->period()));
    }
    period = s->game->period();
    s->pending[agent] = order;
    s->emit("submitted", {{"role", role_name(agent, s->n())}});
    s->advance(now_());
    advanced = s->status == SessionStatus::finished || s->game->period() != period;
  }
  json j{{"v", kProtocolVersion}, {"accepted", true}, {"period", period}, {"advanced", advanced}};
  j["state"] = get_state(token);
  return j;
}

std::vector<SessionEvent> SessionManager::events(const std::string& id, std::uint64_t since) {
  auto s = find_session(id);
  std::lock_guard lock(s->mutex);
  std::vector<SessionEvent> out;
  const bool reveal = s->status == SessionStatus::finished;
  for (std::size_t k = since; k < s->log.size(); ++k) {
    SessionEvent e = s->log[k];
    if (reveal) e.data.update(s->private_data[k]);
    out.push_back(std::move(e));
  }
  return out;
}

bool SessionManager::wait_for_event(const std::string& id, std::uint64_t since,
                                    std::chrono::milliseconds timeout) {
  auto s = find_session(id);
  std::unique_lock lock(s->mutex);
  return s->changed.wait_for(lock, timeout, [&] { return s->log.size() > since; });
}

std::vector<TraceRow> SessionManager::trace(const std::string& id) {
  auto s = find_session(id);
  std::lock_guard lock(s->mutex);
  if (s->status != SessionStatus::finished) {
    throw StateError("trace is released when the game is finished");
  }
  return s->trace;
}

std::vector<TraceRow> SessionManager::replay(const std::string& id) {
  auto s = find_session(id);
  std::vector<std::vector<Units>> orders;
  GameConfig config;
  std::uint64_t seed = 0;
  {
    std::lock_guard lock(s->mutex);
    if (s->status != SessionStatus::finished) throw StateError("replay needs a finished game");
    config = s->config;
    seed = s->seed;
    // Rebuild purely from the event log.
    for (std::size_t k = 0; k < s->log.size(); ++k) {
      if (s->log[k].type == "advanced") {
        orders.push_back(s->private_data[k].at("orders").get<std::vector<Units>>());
      }
    }
  }
  BeerGame game(config, seed);
  std::vector<TraceRow> rows;
  for (const auto& o : orders) {
    const int t = game.period();
    for (auto& row : trace_rows(t, o, game.step(o))) rows.push_back(row);
  }
  return rows;
}

SessionStatus SessionManager::status(const std::string& id) {
  auto s = find_session(id);
  std::lock_guard lock(s->mutex);
  return s->status;
}

void SessionManager::tick() {
  std::vector<std::shared_ptr<Session>> all;
  {
    std::lock_guard lock(mutex_);
    for (auto& [id, s] : sessions_) all.push_back(s);
  }
  const auto now = now_();
  for (auto& s : all) {
    std::lock_guard lock(s->mutex);
    if (s->status != SessionStatus::in_play || s->shot_clock <= 0 || now < s->deadline) continue;
    for (int i = 0; i < s->n(); ++i) {
      if (!s->seats[i].human || s->pending[i]) continue;
      // Default action: pass the received order upstream unchanged.
      s->pending[i] = s->game->local_view(i).incoming_order;
      s->emit("timeout", {{"role", role_name(i, s->n())}});
    }
    s->advance(now);
  }
}

json SessionManager::presets_json() {
  json list = json::array();
  for (const auto& name : preset_names()) {
    const Scenario s = preset(name);
    list.push_back({{"name", name},
                    {"description", s.description},
                    {"actions", s.config.action_bounds.size()}});
  }
  return {{"v", kProtocolVersion}, {"presets", list}};
}

}  // namespace beergame
