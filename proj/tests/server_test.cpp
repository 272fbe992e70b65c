#include <set>
#include <sstream>

#include "beergame/errors.hpp"
#include "beergame/harness.hpp"
#include "beergame/http_server.hpp"
#include "beergame/server.hpp"
#include "doctest.h"
#include "httplib.h"
#include "json.hpp"

using namespace beergame;
using nlohmann::json;

namespace {

PolicySpec bot(PolicyKind kind) {
  PolicySpec s;
  s.kind = kind;
  return s;
}

SessionPlan plan_with(std::vector<bool> human, std::vector<PolicyKind> kinds, std::uint64_t seed,
                      int periods) {
  SessionPlan p;
  p.seed = seed;
  p.periods = periods;
  for (int i = 0; i < 4; ++i) p.seats.push_back({i, human[i], bot(kinds[i])});
  return p;
}

const std::set<std::string> kAllowedKeys = {
    "v", "session", "status", "role", "agent", "scenario", "name", "description", "seats", "human",
    "joined", "period", "history", "inventory", "on_order", "incoming_order", "order", "shipped",
    "cost", "local", "incoming_shipment", "submitted", "waiting_for", "deadline_seconds"};

void collect_keys(const json& j, std::set<std::string>& keys) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) {
      keys.insert(k);
      collect_keys(v, keys);
    }
  } else if (j.is_array()) {
    for (const auto& v : j) collect_keys(v, keys);
  }
}

// The reveal is allowed once the game is over.
void check_hidden(const json& state) {
  if (state.at("status") == "finished") return;
  std::set<std::string> keys;
  collect_keys(state, keys);
  for (const auto& k : keys) {
    CAPTURE(k);
    CHECK(kAllowedKeys.count(k) == 1);
  }
}

bool same_rows(const std::vector<TraceRow>& a, const std::vector<TraceRow>& b) {
  std::ostringstream x, y;
  write_trace_csv(x, a);
  write_trace_csv(y, b);
  return x.str() == y.str();
}

}  // namespace

TEST_CASE("all-bot session matches the harness trace") {
  const std::vector<PolicyKind> kinds{PolicyKind::base_stock, PolicyKind::sterman,
                                      PolicyKind::random, PolicyKind::base_stock};
  SessionManager mgr;
  const auto c = mgr.create(plan_with({false, false, false, false}, kinds, 42, 40));
  CHECK(c.tokens.empty());
  mgr.start(c.session);
  REQUIRE(mgr.status(c.session) == SessionStatus::finished);

  const Scenario s = preset("basic");
  std::vector<std::unique_ptr<Policy>> owned;
  for (int i = 0; i < 4; ++i) owned.push_back(make_policy(bot(kinds[i]), s, i));
  const auto expected = dump_trace(s.config, raw(owned), 42, 40);
  CHECK(same_rows(mgr.trace(c.session), expected));
  CHECK(same_rows(mgr.replay(c.session), expected));
}

TEST_CASE("a human playing base stock reproduces the base-stock game") {
  const Scenario s = preset("basic");
  const auto all_bs = std::vector<PolicyKind>(4, PolicyKind::base_stock);
  SessionManager mgr;
  const auto c = mgr.create(plan_with({false, true, false, true}, all_bs, 7, 30));
  REQUIRE(c.tokens.size() == 2);
  const std::string warehouse = c.tokens.at("warehouse");
  const std::string manufacturer = c.tokens.at("manufacturer");

  const json lobby = mgr.join(warehouse);
  CHECK(lobby.at("status") == "lobby");
  CHECK_FALSE(lobby.contains("local"));
  check_hidden(lobby);
  CHECK_THROWS_AS(mgr.submit_order(warehouse, 3), StateError);

  mgr.start(c.session);
  CHECK_THROWS_AS(mgr.start(c.session), StateError);
  while (mgr.status(c.session) == SessionStatus::in_play) {
    for (const auto& [agent, token] : {std::pair{1, warehouse}, std::pair{3, manufacturer}}) {
      const json st = mgr.get_state(token);
      check_hidden(st);
      CHECK_FALSE(st.contains("reveal"));
      const json& v = st.at("local");
      const Units order = base_stock_act(v.at("inventory").get<Units>() -
                                             v.at("incoming_order").get<Units>(),
                                         v.at("on_order").get<Units>(), s.base_stock_levels[agent]);
      const json reply = mgr.submit_order(token, order);
      check_hidden(reply.at("state"));
    }
    if (mgr.status(c.session) != SessionStatus::in_play) break;
    for (const auto& e : mgr.events(c.session, 0)) {
      CHECK_FALSE(e.data.contains("orders"));
      CHECK_FALSE(e.data.contains("costs"));
    }
  }

  const auto bs = uniform_policies(s, PolicyKind::base_stock);
  const auto expected = dump_trace(s.config, raw(bs), 7, 30);
  const auto rows = mgr.trace(c.session);
  CHECK(same_rows(rows, expected));
  CHECK(same_rows(mgr.replay(c.session), rows));

  const json done = mgr.get_state(warehouse);
  REQUIRE(done.contains("reveal"));
  double total = 0.0;
  std::vector<double> per_agent(4, 0.0);
  for (const auto& r : rows) per_agent[r.agent] -= r.reward;
  for (double v : per_agent) total += v;
  CHECK(done.at("reveal").at("total").get<double>() == doctest::Approx(total));
  for (int i = 0; i < 4; ++i) {
    CHECK(done.at("reveal").at("costs")[i].at("cost").get<double>() ==
          doctest::Approx(per_agent[i]));
  }
  CHECK(done.at("history").size() == 30);
  bool revealed_orders = false;
  for (const auto& e : mgr.events(c.session, 0)) revealed_orders |= e.data.contains("orders");
  CHECK(revealed_orders);
}

TEST_CASE("session errors") {
  const auto kinds = std::vector<PolicyKind>(4, PolicyKind::base_stock);
  SessionManager mgr;

  SessionPlan dup = plan_with({true, true, false, false}, kinds, 1, 10);
  dup.seats[1].agent = 0;
  CHECK_THROWS_AS(mgr.create(dup), ConfigError);
  SessionPlan short_plan = plan_with({true, true, false, false}, kinds, 1, 10);
  short_plan.seats.pop_back();
  CHECK_THROWS_AS(mgr.create(short_plan), ConfigError);
  SessionPlan no_weights = plan_with({true, false, false, false}, kinds, 1, 10);
  no_weights.seats[1].bot.kind = PolicyKind::dqn;
  CHECK_THROWS_AS(mgr.create(no_weights), ConfigError);

  const auto c = mgr.create(plan_with({true, false, false, false}, kinds, 1, 10));
  const std::string token = c.tokens.at("retailer");
  CHECK_THROWS_AS(mgr.get_state("bogus"), NotFoundError);
  CHECK_THROWS_AS(mgr.start("bogus"), NotFoundError);
  CHECK_THROWS_AS(mgr.trace(c.session), StateError);
  mgr.start(c.session);
  CHECK_THROWS_AS(mgr.submit_order(token, -1), ConfigError);
  CHECK_THROWS_AS(mgr.submit_order("bogus", 1), NotFoundError);
  // One human seat, so every submission advances the period.
  CHECK(mgr.submit_order(token, 4).at("advanced") == true);
  CHECK(mgr.get_state(token).at("period") == 1);

  const auto c2 = mgr.create(plan_with({true, true, false, false}, kinds, 1, 10));
  mgr.start(c2.session);
  mgr.submit_order(c2.tokens.at("retailer"), 4);
  CHECK(mgr.get_state(c2.tokens.at("retailer")).at("submitted") == true);
  CHECK_THROWS_AS(mgr.submit_order(c2.tokens.at("retailer"), 4), StateError);

  CHECK_THROWS_AS(SessionPlan::from_json(json::parse(R"({"seats": [{"role": "boss"}]})")),
                  ConfigError);
  CHECK_THROWS_AS(SessionPlan::from_json(json::parse(R"({"seats": 3})")), ConfigError);
}

TEST_CASE("shot clock passes the incoming order upstream") {
  auto now = SessionManager::Clock::time_point{};
  SessionManager mgr([&] { return now; });
  SessionPlan p = plan_with({true, false, false, false},
                            std::vector<PolicyKind>(4, PolicyKind::base_stock), 3, 5);
  p.shot_clock_seconds = 10;
  const auto c = mgr.create(p);
  const std::string token = c.tokens.at("retailer");
  mgr.start(c.session);
  CHECK(mgr.get_state(token).at("deadline_seconds").get<double>() == doctest::Approx(10));

  now += std::chrono::seconds(5);
  mgr.tick();
  CHECK(mgr.get_state(token).at("period") == 0);

  const Units incoming = mgr.get_state(token).at("local").at("incoming_order").get<Units>();
  now += std::chrono::seconds(6);
  mgr.tick();
  const json st = mgr.get_state(token);
  CHECK(st.at("period") == 1);
  CHECK(st.at("history")[0].at("order").get<Units>() == incoming);
  CHECK(st.at("deadline_seconds").get<double>() == doctest::Approx(10));
  bool timed_out = false;
  for (const auto& e : mgr.events(c.session, 0)) timed_out |= e.type == "timeout";
  CHECK(timed_out);
}

TEST_CASE("presets listing") {
  const json j = SessionManager::presets_json();
  CHECK(j.at("v") == kProtocolVersion);
  CHECK(j.at("presets").size() == preset_names().size());
}

TEST_CASE("http round trip") {
  SessionManager mgr;
  HttpServer server(mgr);
  const int port = server.start("127.0.0.1", 0);
  REQUIRE(port > 0);
  httplib::Client cli("127.0.0.1", port);

  auto presets = cli.Get("/api/v1/presets");
  REQUIRE(presets);
  CHECK(presets->status == 200);

  const std::string plan = R"({"scenario": "basic", "seed": 5, "periods": 3, "seats": [
      {"role": "retailer", "type": "human"},
      {"role": "warehouse", "type": "bot", "policy": {"type": "bs"}},
      {"role": "distributor", "type": "bot", "policy": {"type": "strm"}},
      {"role": "manufacturer", "type": "bot", "policy": {"type": "rand"}}]})";
  auto created = cli.Post("/api/v1/sessions", plan, "application/json");
  REQUIRE(created);
  REQUIRE(created->status == 201);
  const json cj = json::parse(created->body);
  const std::string id = cj.at("session");
  const std::string token = cj.at("tokens").at("retailer");

  const json join{{"token", token}};
  CHECK(cli.Post("/api/v1/join", join.dump(), "application/json")->status == 200);
  CHECK(cli.Get("/api/v1/sessions/" + id + "/trace")->status == 409);
  CHECK(cli.Post("/api/v1/sessions/" + id + "/start", "", "application/json")->status == 200);
  CHECK(cli.Get("/api/v1/state?token=nope")->status == 404);
  CHECK(cli.Post("/api/v1/sessions", "{", "application/json")->status == 400);

  const json bad{{"token", token}, {"order", -2}};
  CHECK(cli.Post("/api/v1/orders", bad.dump(), "application/json")->status == 400);
  for (int t = 0; t < 3; ++t) {
    auto st = cli.Get("/api/v1/state?token=" + token);
    REQUIRE(st);
    check_hidden(json::parse(st->body));
    const json order{{"token", token}, {"order", 4}};
    CHECK(cli.Post("/api/v1/orders", order.dump(), "application/json")->status == 200);
  }
  const json again{{"token", token}, {"order", 4}};
  CHECK(cli.Post("/api/v1/orders", again.dump(), "application/json")->status == 409);

  auto trace = cli.Get("/api/v1/sessions/" + id + "/trace");
  REQUIRE(trace);
  CHECK(trace->status == 200);
  CHECK(trace->body.rfind("period,agent,IL,OO,a,r,OUTL,demand,shipped\n", 0) == 0);

  auto events = cli.Get("/api/v1/sessions/" + id + "/events?since=0");
  REQUIRE(events);
  const json ej = json::parse(events->body);
  CHECK(ej.at("events").back().at("type") == "finished");

  std::string stream;
  auto sse = cli.Get("/api/v1/sessions/" + id + "/stream",
                     [&](const char* data, std::size_t n) {
                       stream.append(data, n);
                       return true;
                     });
  REQUIRE(sse);
  CHECK(stream.find("event: finished") != std::string::npos);
  CHECK(cli.Get("/api/v1/sessions/ffff/events")->status == 404);
  server.stop();
}
