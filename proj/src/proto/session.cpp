#include "splatsim/proto/session.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include "splatsim/common/image_io.hpp"
#include "splatsim/proto/base64.hpp"

namespace splatsim::proto {
namespace {

using nlohmann::json;

class PayloadError : public Error {
 public:
  using Error::Error;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

double number_field(const json& payload, const char* key, double fallback) {
  if (!payload.contains(key)) return fallback;
  const auto& v = payload.at(key);
  if (!v.is_number()) throw PayloadError(std::string("'") + key + "' must be a number");
  return v.get<double>();
}

Vec2 vec2_field(const json& payload, const char* key) {
  const auto& v = payload.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw PayloadError(std::string("'") + key + "' must be an array of 2 numbers");
  return {v[0].get<double>(), v[1].get<double>()};
}

json vec2_json(const Vec2& v) { return json::array({v.x(), v.y()}); }

}  // namespace

std::vector<std::uint8_t> pack_frames(const sim::Observation& obs) {
  std::vector<std::uint8_t> bytes;
  for (const auto& frame : obs.frames) {
    const auto rgb = io::to_rgb8(*frame);
    bytes.insert(bytes.end(), rgb.data.begin(), rgb.data.end());
  }
  return bytes;
}

std::string FrameEncoder::encode(const sim::Observation& obs) {
  std::string out;
  for (const auto& frame : obs.frames) {
    auto it = std::find_if(cache_.begin(), cache_.end(), [&](const auto& e) { return e.first == frame; });
    if (it == cache_.end()) {
      const auto rgb = io::to_rgb8(*frame);
      if (rgb.data.size() % 3 != 0) throw std::logic_error("frame byte count must be a multiple of 3");
      cache_.emplace_back(frame, base64_encode(rgb.data));
      if (cache_.size() > 2 * sim::kFrameStack) cache_.pop_front();
      it = std::prev(cache_.end());
    }
    out += it->second;
  }
  return out;
}

json observation_json(const sim::Observation& obs, FrameEncoder* encoder) {
  const int h = obs.frames.empty() ? 0 : obs.frames.front()->height;
  const int w = obs.frames.empty() ? 0 : obs.frames.front()->width;
  return {{"shape", {obs.frames.size(), h, w, 3}},
          {"dtype", "uint8"},
          {"rgb", encoder ? encoder->encode(obs) : base64_encode(pack_frames(obs))},
          {"goal", vec2_json(obs.goal)}};
}

json breakdown_json(const sim::RewardBreakdown& b) {
  return {{"term", b.term}, {"dist", b.dist}, {"steer", b.steer},
          {"crash", b.crash}, {"time", b.time}, {"total", b.total}};
}

json record_json(const sim::EpisodeRecord& r) {
  return {{"seed", r.seed},
          {"success", r.success},
          {"reason", sim::to_string(r.reason)},
          {"steps", r.steps},
          {"collisions", r.collisions},
          {"social_violations", r.social_violations},
          {"path_length", r.path_length},
          {"shortest_path", r.shortest_path},
          {"spl", r.spl()},
          {"sns", r.sns()},
          {"episode_return", r.episode_return}};
}

json metrics_json(const sim::NavMetrics& m) {
  return {{"episodes", m.episodes}, {"sr", m.sr}, {"spl", m.spl}, {"sns", m.sns}, {"cost", m.cost}};
}

json space_spec(const sim::Scene& scene, const sim::EnvOptions& env) {
  const auto& cam = scene.config.camera;
  return {{"protocol_version", kProtocolVersion},
          {"task", sim::to_string(env.task)},
          {"observation",
           {{"rgb", {{"shape", {sim::kFrameStack, cam.height, cam.width, 3}},
                     {"dtype", "uint8"},
                     {"encoding", "base64"},
                     {"order", "oldest_first"}}},
            {"goal", {{"shape", {2}}, {"fields", {"distance_m", "bearing_rad"}}}}}},
          {"action", {{"shape", {2}}, {"fields", {"steer", "speed"}}, {"low", {-1.0, -1.0}}, {"high", {1.0, 1.0}}}},
          {"control_dt", scene.config.vehicle.dt * scene.config.vehicle.substeps},
          {"max_steps", scene.config.episode.max_steps},
          {"commands", {"spec", "reset", "step", "render", "close"}}};
}

json error_response(const json& id, const std::string& code, const std::string& message) {
  return {{"id", id}, {"ok", false}, {"error", {{"code", code}, {"message", message}}}};
}

Session::Session(std::shared_ptr<const sim::Scene> scene, SessionOptions options)
    : env_(std::move(scene), options.env), options_(options) {}

std::string Session::handle_line(std::string_view line) {
  json request = json::parse(line.begin(), line.end(), nullptr, false);
  if (request.is_discarded()) return error_response(nullptr, code::kParse, "request is not valid JSON").dump();
  return handle(request).dump();
}

std::string Session::too_long() {
  return error_response(nullptr, code::kLineTooLong, "request line exceeds the length limit").dump();
}

bool Session::remember(const std::string& key) {
  if (options_.duplicate_window == 0) return true;
  if (!seen_.insert(key).second) return false;
  seen_order_.push_back(key);
  if (seen_order_.size() > options_.duplicate_window) {
    seen_.erase(seen_order_.front());
    seen_order_.pop_front();
  }
  return true;
}

json Session::handle(const json& request) {
  if (!request.is_object()) return error_response(nullptr, code::kInvalidRequest, "request must be a JSON object");
  const auto id_it = request.find("id");
  if (id_it == request.end() || !(id_it->is_string() || id_it->is_number_integer()))
    return error_response(nullptr, code::kInvalidRequest, "'id' must be a string or an integer");
  const json& id = *id_it;
  if (!remember(id.dump())) return error_response(id, code::kDuplicateId, "id " + id.dump() + " was already used");
  const auto cmd_it = request.find("cmd");
  if (cmd_it == request.end() || !cmd_it->is_string())
    return error_response(id, code::kInvalidRequest, "'cmd' must be a string");
  json payload = json::object();
  if (const auto p = request.find("payload"); p != request.end() && !p->is_null()) {
    if (!p->is_object()) return error_response(id, code::kInvalidRequest, "'payload' must be an object");
    payload = *p;
  }
  const auto& cmd = cmd_it->get_ref<const std::string&>();
  if (cmd != "spec" && cmd != "reset" && cmd != "step" && cmd != "render" && cmd != "close")
    return error_response(id, code::kUnknownCommand, "unknown command '" + cmd + "'");
  if (closed_) return error_response(id, code::kProtocol, "session is closed");
  try {
    return {{"id", id}, {"ok", true}, {"payload", dispatch(cmd, payload)}};
  } catch (const VersionError& e) {
    return error_response(id, code::kVersion, e.what());
  } catch (const PayloadError& e) {
    return error_response(id, code::kInvalidPayload, e.what());
  } catch (const ProtocolError& e) {
    return error_response(id, code::kProtocol, e.what());
  } catch (const sim::SpawnFailure& e) {
    return error_response(id, code::kSpawn, e.what());
  } catch (const InvalidParameter& e) {
    return error_response(id, code::kInvalidPayload, e.what());
  } catch (const json::exception& e) {
    return error_response(id, code::kInvalidPayload, e.what());
  } catch (const std::exception& e) {
    return error_response(id, code::kInternal, e.what());
  }
}

json Session::dispatch(const std::string& cmd, const json& payload) {
  if (cmd == "spec") return do_spec(payload);
  if (cmd == "reset") return do_reset(payload);
  if (cmd == "step") return do_step(payload);
  if (cmd == "render") return do_render(payload);
  if (cmd == "close") {
    closed_ = true;
    return json::object();
  }
  throw std::logic_error("unhandled command " + cmd);
}

json Session::do_spec(const json& payload) {
  if (payload.contains("protocol_version")) {
    const auto& v = payload.at("protocol_version");
    if (!v.is_number_integer()) throw PayloadError("'protocol_version' must be an integer");
    if (v.get<long long>() != kProtocolVersion)
      throw VersionError("version " + v.dump() + " requested, server speaks " + std::to_string(kProtocolVersion));
  }
  return space_spec(env_.scene(), env_.options());
}

json Session::do_reset(const json& payload) {
  std::uint64_t seed = options_.base_seed + episodes_;
  if (payload.contains("seed")) {
    const auto& s = payload.at("seed");
    if (!s.is_number_unsigned()) throw PayloadError("'seed' must be a non-negative integer");
    seed = s.get<std::uint64_t>();
  }
  const bool has_start = payload.contains("start"), has_goal = payload.contains("goal");
  if (has_start != has_goal) throw PayloadError("'start' and 'goal' must be given together");
  sim::Observation obs;
  if (has_start) {
    const double heading = number_field(payload, "heading", 0.0);
    obs = env_.reset_at(seed, vec2_field(payload, "start"), heading, vec2_field(payload, "goal"));
  } else {
    if (payload.contains("heading")) throw PayloadError("'heading' needs 'start' and 'goal'");
    obs = env_.reset(seed);
  }
  ++episodes_;
  const auto& st = env_.state();
  return {{"observation", observation_json(obs, &encoder_)},
          {"info",
           {{"seed", seed},
            {"episode", episodes_},
            {"start", vec2_json(st.start)},
            {"goal", vec2_json(st.goal)},
            {"heading", st.agent.heading},
            {"shortest_path", st.shortest_path},
            {"obstacles", st.obstacles.size()},
            {"pedestrians", st.pedestrians.size()}}}};
}

json Session::do_step(const json& payload) {
  if (!payload.contains("action")) throw PayloadError("'action' is required");
  const auto& a = payload.at("action");
  sim::Action action;
  if (a.is_array()) {
    if (a.size() != 2 || !a[0].is_number() || !a[1].is_number())
      throw PayloadError("'action' must be [steer, speed] numbers");
    action = {a[0].get<double>(), a[1].get<double>()};
  } else if (a.is_object()) {
    if (!a.contains("steer") || !a.contains("speed")) throw PayloadError("'action' needs steer and speed");
    action = {number_field(a, "steer", 0), number_field(a, "speed", 0)};
  } else {
    throw PayloadError("'action' must be an array or an object");
  }
  const bool clamped = std::abs(action.steer) > 1 || std::abs(action.speed) > 1;
  const auto result = env_.step(action);
  const auto& st = env_.state();
  json info{{"steps", st.steps},
            {"collisions", st.collisions},
            {"social_violations", st.social_violations},
            {"contact", st.last_contact},
            {"clamped", clamped},
            {"reason", sim::to_string(st.reason)},
            {"position", vec2_json(st.agent.position)},
            {"heading", st.agent.heading},
            {"speed", st.agent.speed},
            {"distance_to_goal", (st.goal - st.agent.position).norm()},
            {"episode_return", st.episode_return}};
  if (st.done) info["episode"] = record_json(sim::record_of(st));
  return {{"observation", observation_json(result.observation, &encoder_)},
          {"reward", result.reward},
          {"breakdown", breakdown_json(result.breakdown)},
          {"terminated", result.terminated},
          {"truncated", result.truncated},
          {"info", std::move(info)}};
}

static_assert(std::endian::native == std::endian::little, "depth payload is written in host order");

json Session::do_render(const json& /*payload*/) {
  const auto frame = env_.render();
  const auto rgb = io::to_rgb8(frame.color);
  std::vector<std::uint8_t> depth(frame.depth.data.size() * sizeof(float));
  for (std::size_t i = 0; i < frame.depth.data.size(); ++i) {
    const float d = static_cast<float>(frame.depth.data[i]);
    std::memcpy(depth.data() + i * sizeof(float), &d, sizeof(float));
  }
  return {{"width", frame.color.width},
          {"height", frame.color.height},
          {"rgb", base64_encode(rgb.data)},
          {"depth", base64_encode(depth)},
          {"depth_dtype", "float32_le"},
          {"depth_units", "m"}};
}

}  // namespace splatsim::proto
