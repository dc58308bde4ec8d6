#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_set>

#include <json.hpp>

#include "splatsim/sim/env.hpp"
#include "splatsim/sim/metrics.hpp"

namespace splatsim::proto {

inline constexpr int kProtocolVersion = 1;
inline constexpr std::size_t kDefaultMaxLine = 1 << 20;

/// Error codes carried in `error.code` of a failed response.
namespace code {
inline constexpr const char* kParse = "parse_error";            // line is not JSON
inline constexpr const char* kInvalidRequest = "invalid_request";  // not an object, bad id/cmd/payload type
inline constexpr const char* kUnknownCommand = "unknown_command";
inline constexpr const char* kInvalidPayload = "invalid_payload";
inline constexpr const char* kProtocol = "protocol_error";      // command not valid in the session state
inline constexpr const char* kDuplicateId = "duplicate_id";
inline constexpr const char* kVersion = "version_mismatch";
inline constexpr const char* kSpawn = "spawn_failure";
inline constexpr const char* kLineTooLong = "line_too_long";
inline constexpr const char* kInternal = "internal_error";
}  // namespace code

/// One request-per-line, one-response-per-request connection handler.
class LineHandler {
 public:
  virtual ~LineHandler() = default;
  /// Response line without the trailing newline.
  virtual std::string handle_line(std::string_view line) = 0;
  /// Response to a line that exceeded the length limit.
  virtual std::string too_long() = 0;
  /// True once the peer asked to end the conversation.
  [[nodiscard]] virtual bool closed() const = 0;
};

struct SessionOptions {
  sim::EnvOptions env;
  std::uint64_t base_seed = 0;        // seed of the first reset without an explicit seed
  std::size_t duplicate_window = 1 << 16;  // most recent ids checked for reuse
};

/// Raw RGB8 bytes of a frame stack, frame-major then row, column, channel.
std::vector<std::uint8_t> pack_frames(const sim::Observation& obs);

/// Base64 of pack_frames, reusing the encoding of frames seen in recent stacks. Relies on
/// each frame's byte count being a multiple of 3, so per-frame encodings concatenate.
class FrameEncoder {
 public:
  std::string encode(const sim::Observation& obs);

 private:
  std::deque<std::pair<sim::FramePtr, std::string>> cache_;
};

nlohmann::json observation_json(const sim::Observation& obs, FrameEncoder* encoder = nullptr);
nlohmann::json breakdown_json(const sim::RewardBreakdown& b);
/// Per-episode outcome including the derived spl and sns.
nlohmann::json record_json(const sim::EpisodeRecord& r);
nlohmann::json metrics_json(const sim::NavMetrics& m);
/// Observation, action and protocol description returned by `spec`.
nlohmann::json space_spec(const sim::Scene& scene, const sim::EnvOptions& env);

/// The environment behind one connection. Requests are
///   {"id": <string|integer>, "cmd": "spec"|"reset"|"step"|"render"|"close", "payload": {...}}
/// and every request line yields exactly one response
///   {"id": <echo>, "ok": true, "payload": {...}} or {"id": <echo|null>, "ok": false, "error": {"code", "message"}}.
class Session : public LineHandler {
 public:
  Session(std::shared_ptr<const sim::Scene> scene, SessionOptions options = {});

  std::string handle_line(std::string_view line) override;
  std::string too_long() override;
  [[nodiscard]] bool closed() const override { return closed_; }

  /// Dispatch of an already parsed request.
  nlohmann::json handle(const nlohmann::json& request);

  [[nodiscard]] const sim::NavEnv& env() const { return env_; }
  [[nodiscard]] std::uint64_t episodes() const { return episodes_; }

 private:
  nlohmann::json dispatch(const std::string& cmd, const nlohmann::json& payload);
  nlohmann::json do_spec(const nlohmann::json& payload);
  nlohmann::json do_reset(const nlohmann::json& payload);
  nlohmann::json do_step(const nlohmann::json& payload);
  nlohmann::json do_render(const nlohmann::json& payload);
  bool remember(const std::string& key);

  sim::NavEnv env_;
  SessionOptions options_;
  FrameEncoder encoder_;
  std::uint64_t episodes_ = 0;
  bool closed_ = false;
  std::unordered_set<std::string> seen_;
  std::deque<std::string> seen_order_;
};

nlohmann::json error_response(const nlohmann::json& id, const std::string& code, const std::string& message);

}  // namespace splatsim::proto
