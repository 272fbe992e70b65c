#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "beergame/beer_game.hpp"
#include "beergame/harness.hpp"
#include "beergame/scenario.hpp"
#include "json.hpp"

namespace beergame {

inline constexpr int kProtocolVersion = 1;

enum class SessionStatus { lobby, in_play, finished };
std::string status_name(SessionStatus s);

std::string role_name(int agent, int num_agents);
// Accepts a role name or a seat index.
int parse_role(const std::string& role, int num_agents);

struct SeatPlan {
  int agent = 0;
  bool human = true;
  PolicySpec bot;
};

struct SessionPlan {
  std::string scenario = "basic";
  std::optional<Scenario> inline_scenario;  // takes precedence over the name
  std::vector<SeatPlan> seats;
  std::uint64_t seed = 1;
  int periods = 0;                 // > 0 fixes the horizon
  double shot_clock_seconds = 0;   // 0 disables the per-period clock

  // {"scenario": name | {...}, "seed", "periods", "shot_clock_seconds",
  //  "seats": [{"role": "retailer", "type": "human" | "bot", "policy": {...}}]}
  static SessionPlan from_json(const nlohmann::json& j);
};

struct CreatedSession {
  std::string session;
  std::map<std::string, std::string> tokens;  // role -> token, human seats only
};

// Public events carry no seat's private state; the full log (with every
// order) is kept for replay and released once the game is finished.
struct SessionEvent {
  std::uint64_t seq = 0;
  std::string type;  // created, joined, started, submitted, advanced, timeout, finished
  int period = 0;
  nlohmann::json data;
};

class SessionManager {
 public:
  using Clock = std::chrono::steady_clock;

  explicit SessionManager(std::function<Clock::time_point()> now = Clock::now);
  ~SessionManager();
  SessionManager(const SessionManager&) = delete;
  SessionManager& operator=(const SessionManager&) = delete;

  CreatedSession create(const SessionPlan& plan);
  nlohmann::json join(const std::string& token);
  nlohmann::json start(const std::string& session);
  nlohmann::json get_state(const std::string& token);
  nlohmann::json submit_order(const std::string& token, Units order);

  // Events with seq >= since. Before the game finishes only public fields are
  // included.
  std::vector<SessionEvent> events(const std::string& session, std::uint64_t since);
  // Blocks until an event with seq >= since exists or the timeout passes.
  bool wait_for_event(const std::string& session, std::uint64_t since,
                      std::chrono::milliseconds timeout);

  // Full trace in harness format; only once finished.
  std::vector<TraceRow> trace(const std::string& session);
  // Rebuilds the trace from the recorded order log alone.
  std::vector<TraceRow> replay(const std::string& session);

  SessionStatus status(const std::string& session);
  // Applies the d+0 default to seats whose shot clock has expired.
  void tick();

  static nlohmann::json presets_json();

 private:
  struct Session;
  std::shared_ptr<Session> find_session(const std::string& id);
  std::pair<std::shared_ptr<Session>, int> find_token(const std::string& token);
  std::string fresh_token();

  std::function<Clock::time_point()> now_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::map<std::string, std::pair<std::string, int>> tokens_;  // token -> (session, agent)
  std::mt19937_64 token_rng_;
};

}  // namespace beergame
