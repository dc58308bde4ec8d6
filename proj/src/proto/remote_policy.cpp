#include "splatsim/proto/remote_policy.hpp"

#include "splatsim/common/error.hpp"

namespace splatsim::proto {

using nlohmann::json;

RemotePolicy::RemotePolicy(const std::string& host, std::uint16_t port) : client_(host, port) {}

json RemotePolicy::call(const std::string& cmd, json payload) {
  const long long id = next_id_++;
  const json reply = json::parse(client_.request(json{{"id", id}, {"cmd", cmd}, {"payload", std::move(payload)}}.dump()),
                                 nullptr, false);
  if (reply.is_discarded() || !reply.is_object()) throw ProtocolError("agent reply is not a JSON object");
  if (reply.value("id", json()) != json(id)) throw ProtocolError("agent reply id does not match request " + std::to_string(id));
  if (!reply.value("ok", false)) throw ProtocolError("agent rejected '" + cmd + "': " + reply.value("error", json()).dump());
  return reply.value("payload", json::object());
}

void RemotePolicy::begin(const sim::NavEnv& env) {
  const auto& st = env.state();
  call("begin", {{"spec", space_spec(env.scene(), env.options())},
                 {"info", {{"seed", st.seed}, {"shortest_path", st.shortest_path}}}});
}

sim::Action RemotePolicy::act(const sim::NavEnv& /*env*/, const sim::Observation& obs) {
  const json payload = call("act", {{"observation", observation_json(obs, &encoder_)}});
  const auto it = payload.find("action");
  if (it == payload.end() || !it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number())
    throw ProtocolError("agent action must be [steer, speed]");
  return {(*it)[0].get<double>(), (*it)[1].get<double>()};
}

}  // namespace splatsim::proto
