#pragma once

#include <memory>
#include <string>

#include "splatsim/proto/server.hpp"
#include "splatsim/sim/policy.hpp"

namespace splatsim::proto {

/// Policy answered by an external agent over TCP, with the same line framing as the
/// environment service but the roles reversed. The evaluator sends
///   {"id": n, "cmd": "begin", "payload": {"spec": ..., "info": {...}}} after every reset and
///   {"id": n, "cmd": "act", "payload": {"observation": ...}} every step,
/// and expects {"id": n, "ok": true, "payload": {"action": [steer, speed]}} for "act".
/// Throws ProtocolError on a mismatched id, an error response or a malformed action.
class RemotePolicy : public sim::Policy {
 public:
  RemotePolicy(const std::string& host, std::uint16_t port);
  void begin(const sim::NavEnv& env) override;
  sim::Action act(const sim::NavEnv& env, const sim::Observation& obs) override;

 private:
  nlohmann::json call(const std::string& cmd, nlohmann::json payload);

  TcpClient client_;
  FrameEncoder encoder_;
  long long next_id_ = 0;
};

}  // namespace splatsim::proto
