#include <gtest/gtest.h>

#include <future>
#include <random>
#include <sstream>
#include <thread>

#include "splatsim/common/error.hpp"
#include "splatsim/common/image_io.hpp"
#include "splatsim/proto/base64.hpp"
#include "splatsim/proto/remote_policy.hpp"
#include "splatsim/proto/server.hpp"
#include "splatsim/proto/session.hpp"
#include "splatsim/sim/demo.hpp"
#include "support/proto_fuzz.hpp"

using namespace splatsim;
using namespace splatsim::proto;
using nlohmann::json;

namespace {

constexpr std::size_t kObsBytes = 6 * 72 * 128 * 3;

// Walled corridor without splats; `max_steps` keeps episodes short.
std::shared_ptr<const sim::Scene> corridor(int max_steps = 3000) {
  auto demo = sim::make_corridor(20, 6, 1);
  demo.config.episode.max_steps = max_steps;
  return sim::make_scene(demo.config, {}, demo.collision);
}

std::shared_ptr<const sim::Scene> splat_corridor() {
  auto demo = sim::make_corridor(12, 6, 2);
  return sim::make_scene(demo.config, demo.splats, demo.collision);
}

json call(Session& s, const json& req) { return json::parse(s.handle_line(req.dump())); }

// Runs the accept loop; stops and joins on scope exit, also after a failed assertion.
struct Running {
  explicit Running(TcpServer& s) : server(s), loop([&s] { s.run(); }) {}
  ~Running() {
    server.stop();
    loop.join();
  }
  TcpServer& server;
  std::thread loop;
};

}  // namespace

TEST(Base64, RoundTripsAllLengths) {
  std::mt19937_64 rng(3);
  for (std::size_t n = 0; n < 70; ++n) {
    std::vector<std::uint8_t> bytes(n);
    for (auto& b : bytes) b = static_cast<std::uint8_t>(rng());
    const auto text = base64_encode(bytes);
    EXPECT_EQ(text.size(), 4 * ((n + 2) / 3));
    EXPECT_EQ(base64_decode(text), bytes) << n;
  }
  EXPECT_EQ(base64_encode(std::vector<std::uint8_t>{'M', 'a', 'n'}), "TWFu");
  EXPECT_EQ(base64_encode(std::vector<std::uint8_t>{'M'}), "TQ==");
  EXPECT_THROW(base64_decode("abc"), ProtocolError);
  EXPECT_THROW(base64_decode("ab!="), ProtocolError);
}

TEST(ReadLine, SplitsStripsAndLimits) {
  std::istringstream in("a\r\n\nbcdefgh\nlast");
  std::string line;
  EXPECT_EQ(read_line(in, line, 4), ReadStatus::Line);
  EXPECT_EQ(line, "a");
  EXPECT_EQ(read_line(in, line, 4), ReadStatus::Line);
  EXPECT_EQ(line, "");
  EXPECT_EQ(read_line(in, line, 4), ReadStatus::TooLong);
  EXPECT_EQ(read_line(in, line, 4), ReadStatus::Line);
  EXPECT_EQ(line, "last");
  EXPECT_EQ(read_line(in, line, 4), ReadStatus::Eof);
}

TEST(Session, SpecDescribesSpaces) {
  Session s(corridor(), {{sim::Task::PointNav, false}, 0});
  const auto r = call(s, {{"id", 1}, {"cmd", "spec"}});
  ASSERT_TRUE(r["ok"].get<bool>());
  EXPECT_EQ(r["id"], 1);
  const auto& p = r["payload"];
  EXPECT_EQ(p["protocol_version"], kProtocolVersion);
  EXPECT_EQ(p["observation"]["rgb"]["shape"], json({6, 72, 128, 3}));
  EXPECT_EQ(p["action"]["shape"], json({2}));
  EXPECT_EQ(p["task"], "pointnav");
  const auto bad = call(s, {{"id", 2}, {"cmd", "spec"}, {"payload", {{"protocol_version", 2}}}});
  EXPECT_EQ(bad["error"]["code"], "version_mismatch");
}

TEST(Session, ObservationDecodesToExactFrameStack) {
  Session s(splat_corridor(), {{sim::Task::PointNav, true}, 0});
  const auto r = call(s, {{"id", "r"}, {"cmd", "reset"}, {"payload", {{"seed", 4}}}});
  ASSERT_TRUE(r["ok"].get<bool>()) << r.dump();
  const auto& o = r["payload"]["observation"];
  EXPECT_EQ(o["shape"], json({6, 72, 128, 3}));
  EXPECT_EQ(o["dtype"], "uint8");
  const auto bytes = base64_decode(o["rgb"].get<std::string>());
  ASSERT_EQ(bytes.size(), kObsBytes);
  // Last frame is the live render; compare against the environment's own frame.
  const auto obs = s.env().observation();
  const auto last = io::to_rgb8(*obs.frames.back());
  EXPECT_TRUE(std::equal(last.data.begin(), last.data.end(), bytes.end() - static_cast<long>(last.data.size())));
  EXPECT_GT(*std::max_element(bytes.end() - static_cast<long>(last.data.size()), bytes.end()), 0);
  EXPECT_NEAR(o["goal"][0].get<double>(), obs.goal.x(), 1e-12);

  const auto step = call(s, {{"id", "s"}, {"cmd", "step"}, {"payload", {{"action", {0.0, 0.5}}}}});
  ASSERT_TRUE(step["ok"].get<bool>());
  EXPECT_EQ(base64_decode(step["payload"]["observation"]["rgb"].get<std::string>()).size(), kObsBytes);

  const auto render = call(s, {{"id", "v"}, {"cmd", "render"}});
  ASSERT_TRUE(render["ok"].get<bool>());
  EXPECT_EQ(base64_decode(render["payload"]["rgb"].get<std::string>()).size(), 72u * 128 * 3);
  EXPECT_EQ(base64_decode(render["payload"]["depth"].get<std::string>()).size(), 72u * 128 * 4);
}

TEST(Session, ResetThenTenZeroStepsStaysPut) {
  Session s(corridor(), {{sim::Task::PointNav, false}, 0});
  const auto r = call(s, {{"id", 0}, {"cmd", "reset"}, {"payload", {{"seed", 11}}}});
  ASSERT_TRUE(r["ok"].get<bool>());
  const auto start = r["payload"]["info"]["start"];
  for (int i = 1; i <= 10; ++i) {
    const auto st = call(s, {{"id", i}, {"cmd", "step"}, {"payload", {{"action", {0, 0}}}}});
    ASSERT_TRUE(st["ok"].get<bool>()) << st.dump();
    EXPECT_EQ(st["id"], i);
    const auto& p = st["payload"];
    EXPECT_EQ(p["info"]["position"], start);
    EXPECT_DOUBLE_EQ(p["reward"].get<double>(), -0.1);
    EXPECT_DOUBLE_EQ(p["breakdown"]["time"].get<double>(), -0.1);
    EXPECT_FALSE(p["terminated"].get<bool>());
    EXPECT_FALSE(p["truncated"].get<bool>());
    EXPECT_EQ(p["info"]["steps"], i);
  }
}

TEST(Session, StepBeforeResetAndAfterTerminalAreProtocolErrors) {
  Session s(corridor(), {{sim::Task::PointNav, false}, 0});
  EXPECT_EQ(call(s, {{"id", 1}, {"cmd", "step"}, {"payload", {{"action", {0, 0}}}}})["error"]["code"], "protocol_error");
  EXPECT_EQ(call(s, {{"id", 2}, {"cmd", "render"}})["error"]["code"], "protocol_error");
  // Goal inside the success radius: the first step ends the episode.
  const auto r = call(s, {{"id", 3}, {"cmd", "reset"}, {"payload", {{"start", {0, 0}}, {"goal", {0.3, 0}}}}});
  ASSERT_TRUE(r["ok"].get<bool>()) << r.dump();
  const auto fin = call(s, {{"id", 4}, {"cmd", "step"}, {"payload", {{"action", {0, 0}}}}});
  ASSERT_TRUE(fin["ok"].get<bool>());
  EXPECT_TRUE(fin["payload"]["terminated"].get<bool>());
  EXPECT_EQ(fin["payload"]["info"]["episode"]["success"], true);
  EXPECT_EQ(fin["payload"]["info"]["reason"], "success");
  const auto after = call(s, {{"id", 5}, {"cmd", "step"}, {"payload", {{"action", {0, 0}}}}});
  EXPECT_FALSE(after["ok"].get<bool>());
  EXPECT_EQ(after["error"]["code"], "protocol_error");
  EXPECT_EQ(after["id"], 5);
  EXPECT_TRUE(call(s, {{"id", 6}, {"cmd", "reset"}})["ok"].get<bool>());
  EXPECT_TRUE(call(s, {{"id", 7}, {"cmd", "step"}, {"payload", {{"action", {0, 0}}}}})["ok"].get<bool>());
}

TEST(Session, TwoSessionsSameSeedGiveIdenticalRewards) {
  const auto scene = corridor();
  Session a(scene, {{sim::Task::SocialNav, true}, 5});
  Session b(scene, {{sim::Task::SocialNav, true}, 5});
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  const auto ra = call(a, {{"id", 0}, {"cmd", "reset"}}), rb = call(b, {{"id", 0}, {"cmd", "reset"}});
  EXPECT_EQ(ra["payload"]["info"]["seed"], 5);
  EXPECT_EQ(ra.dump(), rb.dump());
  int compared = 0;
  for (int i = 1; i <= 60; ++i) {
    const json req{{"id", i}, {"cmd", "step"}, {"payload", {{"action", {u(rng), u(rng)}}}}};
    const auto sa = a.handle_line(req.dump()), sb = b.handle_line(req.dump());
    ASSERT_EQ(sa, sb);  // byte-identical, rewards and frames included
    ++compared;
    if (!json::parse(sa)["ok"].get<bool>()) break;
    const auto p = json::parse(sa)["payload"];
    if (p["terminated"].get<bool>() || p["truncated"].get<bool>()) break;
  }
  EXPECT_GT(compared, 5);
}

TEST(Session, DefaultSeedsAdvancePerEpisode) {
  Session s(corridor(), {{sim::Task::PointNav, false}, 100});
  EXPECT_EQ(call(s, {{"id", 1}, {"cmd", "reset"}})["payload"]["info"]["seed"], 100);
  EXPECT_EQ(call(s, {{"id", 2}, {"cmd", "reset"}})["payload"]["info"]["seed"], 101);
  EXPECT_EQ(call(s, {{"id", 3}, {"cmd", "reset"}, {"payload", {{"seed", 7}}}})["payload"]["info"]["seed"], 7);
  EXPECT_EQ(call(s, {{"id", 4}, {"cmd", "reset"}})["payload"]["info"]["seed"], 103);
}

TEST(Session, CloseEndsTheSession) {
  Session s(corridor(), {{sim::Task::PointNav, false}, 0});
  EXPECT_TRUE(call(s, {{"id", 1}, {"cmd", "close"}})["ok"].get<bool>());
  EXPECT_TRUE(s.closed());
  EXPECT_EQ(call(s, {{"id", 2}, {"cmd", "spec"}})["error"]["code"], "protocol_error");
}

TEST(Session, ClampedActionsAreFlagged) {
  Session s(corridor(), {{sim::Task::PointNav, false}, 0});
  call(s, {{"id", 1}, {"cmd", "reset"}});
  const auto r = call(s, {{"id", 2}, {"cmd", "step"}, {"payload", {{"action", {{"steer", 0}, {"speed", 3}}}}}});
  ASSERT_TRUE(r["ok"].get<bool>());
  EXPECT_TRUE(r["payload"]["info"]["clamped"].get<bool>());
  EXPECT_LE(r["payload"]["info"]["speed"].get<double>(), 1.5 + 1e-12);
}

TEST(ProtocolFuzz, TenThousandMessages) {
  Session s(corridor(40), {{sim::Task::SocialNav, false}, 0});
  splatsim::testing::ProtocolModel model(2024, kObsBytes);
  int failures = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto msg = model.next();
    std::string response;
    ASSERT_NO_THROW(response = s.handle_line(msg.line)) << "message " << i;
    const auto err = model.check(msg, response);
    if (!err.empty() && ++failures <= 10) ADD_FAILURE() << "message " << i << ": " << err << "\n  request: " << msg.line.substr(0, 200);
  }
  EXPECT_EQ(failures, 0);
  EXPECT_GT(model.observations_checked(), 1000);
  EXPECT_GT(model.episodes_ended(), 10);
}

TEST(ProtocolFuzz, StreamAnswersEveryLineInOrder) {
  // A twin session fed line by line gives the reference responses; the model checks them
  // as they are produced, then the streamed output must match byte for byte.
  const auto scene = corridor(40);
  Session twin(scene, {{sim::Task::PointNav, false}, 0});
  Session s(scene, {{sim::Task::PointNav, false}, 0});
  splatsim::testing::ProtocolModel model(77, kObsBytes);
  std::vector<std::string> expected;
  std::ostringstream requests;
  for (int i = 0; i < 2000; ++i) {
    auto m = model.next();
    std::string line = m.line;
    while (!line.empty() && (line.back() == '\r' || std::isspace(static_cast<unsigned char>(line.back())))) line.pop_back();
    if (line.empty()) continue;
    m.line = line;
    expected.push_back(twin.handle_line(line));
    ASSERT_EQ(model.check(m, expected.back()), "") << i;
    requests << line << (i % 3 == 0 ? "\r\n" : "\n");
    if (i % 100 == 0) requests << "   \n";  // blank lines get no response
  }
  requests << std::string(300000, 'x') << '\n';  // over the limit below
  requests << json{{"id", "last"}, {"cmd", "close"}}.dump() << '\n';
  requests << json{{"id", "never"}, {"cmd", "spec"}}.dump() << '\n';
  std::istringstream in(requests.str());
  std::ostringstream out;
  const auto served = serve_stream(in, out, s, 1 << 18);
  EXPECT_EQ(served, expected.size() + 2);
  std::istringstream responses(out.str());
  std::string line;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    ASSERT_TRUE(std::getline(responses, line));
    ASSERT_EQ(line, expected[i]) << i;
  }
  ASSERT_TRUE(std::getline(responses, line));
  EXPECT_EQ(json::parse(line)["error"]["code"], "line_too_long");
  ASSERT_TRUE(std::getline(responses, line));
  EXPECT_EQ(json::parse(line)["id"], "last");
  EXPECT_FALSE(std::getline(responses, line));
}

TEST(ProtocolStream, OverlongLineGetsErrorAndStreamContinues) {
  Session s(corridor(), {{sim::Task::PointNav, false}, 0});
  std::istringstream in(std::string(5000, '{') + "\n" + json{{"id", 1}, {"cmd", "spec"}}.dump() + "\n");
  std::ostringstream out;
  EXPECT_EQ(serve_stream(in, out, s, 1000), 2u);
  std::istringstream responses(out.str());
  std::string line;
  std::getline(responses, line);
  EXPECT_EQ(json::parse(line)["error"]["code"], "line_too_long");
  std::getline(responses, line);
  EXPECT_TRUE(json::parse(line)["ok"].get<bool>());
}

TEST(Tcp, RoundTripOnEphemeralPortWithIsolatedSessions) {
  const auto scene = corridor();
  TcpServer server([scene] { return std::make_unique<Session>(scene, SessionOptions{{sim::Task::PointNav, false}, 9}); }, 0);
  ASSERT_GT(server.port(), 0);
  {
    Running running(server);
    TcpClient a("127.0.0.1", server.port()), b("127.0.0.1", server.port());
    EXPECT_EQ(a.request(json{{"id", 1}, {"cmd", "spec"}})["payload"]["protocol_version"], kProtocolVersion);
    const auto ra = a.request(json{{"id", 2}, {"cmd", "reset"}});
    ASSERT_TRUE(ra["ok"].get<bool>());
    // b has its own environment, still unstarted.
    EXPECT_EQ(b.request(json{{"id", 2}, {"cmd", "step"}, {"payload", {{"action", {0, 0}}}}})["error"]["code"], "protocol_error");
    const auto rb = b.request(json{{"id", 3}, {"cmd", "reset"}});
    EXPECT_EQ(ra["payload"]["info"], rb["payload"]["info"]);
    for (int i = 0; i < 5; ++i) {
      const json req{{"id", 10 + i}, {"cmd", "step"}, {"payload", {{"action", {0.2, 0.8}}}}};
      EXPECT_EQ(a.request(req.dump()), b.request(req.dump()));
    }
    EXPECT_EQ(json::parse(a.request(std::string("garbage")))["error"]["code"], "parse_error");
    EXPECT_TRUE(a.request(json{{"id", 99}, {"cmd", "close"}})["ok"].get<bool>());
    EXPECT_THROW(a.read_line(), IoError);  // server hung up after close
  }
  EXPECT_EQ(server.connections_served(), 2u);
  EXPECT_THROW(TcpClient("127.0.0.1", server.port()), IoError);
}

namespace {

// Agent side of the remote-policy link: constant action, counts episodes.
class ConstantAgent : public LineHandler {
 public:
  ConstantAgent(std::atomic<int>& begins, std::atomic<int>& acts) : begins_(begins), acts_(acts) {}
  std::string handle_line(std::string_view line) override {
    const auto req = json::parse(line);
    if (req["cmd"] == "begin") ++begins_;
    if (req["cmd"] == "act") ++acts_;
    json payload = json::object();
    if (req["cmd"] == "act") {
      EXPECT_EQ(base64_decode(req["payload"]["observation"]["rgb"].get<std::string>()).size(), kObsBytes);
      payload["action"] = {0.0, 0.4};
    }
    return json{{"id", req["id"]}, {"ok", true}, {"payload", payload}}.dump();
  }
  std::string too_long() override { return "{}"; }
  [[nodiscard]] bool closed() const override { return false; }

 private:
  std::atomic<int>& begins_;
  std::atomic<int>& acts_;
};

}  // namespace

TEST(Tcp, RemotePolicyDrivesEpisodes) {
  std::atomic<int> begins{0}, acts{0};
  TcpServer agent([&] { return std::make_unique<ConstantAgent>(begins, acts); }, 0);
  {
    Running running(agent);
    sim::NavEnv env(corridor(8), {sim::Task::PointNav, false});
    RemotePolicy policy("127.0.0.1", agent.port());
    const auto records = sim::run_episodes(env, policy, 3, 3);
    ASSERT_EQ(records.size(), 3u);
    int steps = 0;
    for (const auto& r : records) {
      EXPECT_NE(r.reason, sim::TerminalReason::None);
      EXPECT_LE(r.steps, 8);
      steps += r.steps;
    }
    EXPECT_EQ(records[0].reason, sim::TerminalReason::Timeout);  // seed 3 drives 8 clear steps
    EXPECT_EQ(acts.load(), steps);
  }
  EXPECT_EQ(begins.load(), 3);
}
