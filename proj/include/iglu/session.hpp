#pragma once

// Transport-independent session protocol: one JSON message in, replies out.
//
// Client messages: hello{version}, config{config?, task?, generate?, seed?},
// action{verb, camera}, instruction_submit{text}, end_episode{}, export_log{}.
// Every message carries "seq" (strictly increasing per direction); replies
// carry the server's own "seq" and "ack" = the client seq they answer.

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iglu/behavior.hpp"
#include "iglu/codec.hpp"
#include "iglu/env.hpp"
#include "iglu/tasks.hpp"

namespace iglu {

inline constexpr int kProtocolVersion = 1;

enum class SessionMode : std::uint8_t { HumanCollect, AgentEval };

inline std::string_view mode_name(SessionMode m) { return m == SessionMode::HumanCollect ? "human_collect" : "agent_eval"; }

inline SessionMode parse_mode(std::string_view s) {
  if (s == "human_collect") return SessionMode::HumanCollect;
  if (s == "agent_eval") return SessionMode::AgentEval;
  throw std::invalid_argument("unknown mode '" + std::string(s) + "' (expected human_collect or agent_eval)");
}

// A rejected message; the session stays usable unless `fatal`.
class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(std::string code, const std::string& msg, bool fatal = false)
      : std::runtime_error(msg), code_(std::move(code)), fatal_(fatal) {}
  const std::string& code() const { return code_; }
  bool fatal() const { return fatal_; }

 private:
  std::string code_;
  bool fatal_;
};

inline nlohmann::json observation_to_json(const Observation& o, Profile profile) {
  nlohmann::json j;
  j["step"] = o.step;
  j["inventory"] = o.inventory.counts;
  j["selected"] = o.inventory.selected;
  j["compass"] = o.compass;
  j["chat"] = o.chat;
  if (o.pov) j["pov"] = base64_encode(encode_png(*o.pov));
  if (profile == Profile::Full) {
    j["grid"] = blocks_to_json(o.grid);
    j["pose"] = o.pose;
  }
  return j;
}

class Session {
 public:
  Session(std::string id, SessionMode mode, long long game_id) : id_(std::move(id)), mode_(mode), game_id_(game_id) {}

  const std::string& id() const { return id_; }
  SessionMode mode() const { return mode_; }
  bool closed() const { return closed_; }
  bool configured() const { return configured_; }
  const Environment& env() const { return env_; }
  const std::string& instruction() const { return instruction_; }

  // Never throws: malformed input becomes an error reply.
  std::vector<nlohmann::json> handle(const std::string& text) {
    nlohmann::json msg;
    try {
      msg = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      return {error(nullptr, "malformed", std::string("invalid JSON: ") + e.what())};
    }
    return handle(msg);
  }

  std::vector<nlohmann::json> handle(const nlohmann::json& msg) {
    nlohmann::json ack = nullptr;
    try {
      if (closed_) throw ProtocolError("closed", "session is closed", true);
      if (!msg.is_object()) throw ProtocolError("malformed", "message must be a JSON object");
      if (!msg.contains("seq") || !msg["seq"].is_number_integer())
        throw ProtocolError("malformed", "message needs an integer 'seq'");
      const auto seq = msg["seq"].get<long long>();
      ack = seq;
      if (seq <= last_in_seq_)
        throw ProtocolError("sequence", "seq " + std::to_string(seq) + " does not exceed " + std::to_string(last_in_seq_));
      if (!msg.contains("type") || !msg["type"].is_string()) throw ProtocolError("malformed", "message needs a string 'type'");
      last_in_seq_ = seq;
      return {dispatch(msg["type"].get<std::string>(), msg, seq)};
    } catch (const ProtocolError& e) {
      if (e.fatal()) closed_ = true;
      return {error(ack, e.code(), e.what())};
    } catch (const std::exception& e) {
      return {error(ack, "invalid", e.what())};
    }
  }

 private:
  nlohmann::json reply(const std::string& type, long long ack) {
    return {{"type", type}, {"seq", ++out_seq_}, {"ack", ack}};
  }

  nlohmann::json error(const nlohmann::json& ack, const std::string& code, const std::string& message) {
    return {{"type", "error"}, {"seq", ++out_seq_}, {"ack", ack}, {"code", code}, {"message", message}};
  }

  nlohmann::json dispatch(const std::string& type, const nlohmann::json& msg, long long seq) {
    if (type == "hello") return on_hello(msg, seq);
    if (!greeted_) throw ProtocolError("state", "expected hello first");
    if (type == "config") return on_config(msg, seq);
    if (type == "action") return on_action(msg, seq);
    if (type == "instruction_submit") return on_instruction(msg, seq);
    if (type == "end_episode") return on_end(seq);
    if (type == "export_log") return on_export(seq);
    throw ProtocolError("malformed", "unknown message type '" + type + "'");
  }

  nlohmann::json on_hello(const nlohmann::json& msg, long long seq) {
    if (greeted_) throw ProtocolError("state", "hello already received");
    if (!msg.contains("version") || !msg["version"].is_number_integer() || msg["version"].get<int>() != kProtocolVersion)
      throw ProtocolError("version", "protocol version " + std::to_string(kProtocolVersion) + " required", true);
    greeted_ = true;
    auto r = reply("hello", seq);
    r["version"] = kProtocolVersion;
    r["session_id"] = id_;
    r["mode"] = mode_name(mode_);
    return r;
  }

  nlohmann::json on_config(const nlohmann::json& msg, long long seq) {
    EpisodeConfig config = msg.contains("config") ? config_from_json(msg["config"]) : EpisodeConfig{};
    const std::uint64_t seed = msg.value("seed", std::uint64_t{0});
    TaskRecord task;
    if (msg.contains("task")) {
      try {
        task = task_from_json(msg["task"], "config.task");
      } catch (const TaskFileError& e) {
        throw ProtocolError("invalid", e.what());
      }
    } else {
      const auto g = msg.value("generate", nlohmann::json::object());
      GeneratorParams p;
      p.n_blocks = g.value("n_blocks", p.n_blocks);
      p.max_height = g.value("max_height", p.max_height);
      p.n_colors = g.value("n_colors", p.n_colors);
      task = generate_task(g.value("seed", seed), p);
    }
    Observation obs = env_.reset(task, config, seed);
    recorder_.begin(game_id_, env_.grid(), env_.pose());
    configured_ = true;
    finished_ = false;
    reward_sum_ = 0.0;
    instruction_.clear();
    auto r = reply("observation", seq);
    r.update(observation_to_json(obs, config.profile));
    r["reward"] = 0.0;
    r["done"] = false;
    r["task_id"] = task.task_id;
    return r;
  }

  void require_running() const {
    if (!configured_) throw ProtocolError("state", "send config before playing");
  }

  nlohmann::json on_action(const nlohmann::json& msg, long long seq) {
    require_running();
    if (finished_ || env_.done()) throw ProtocolError("state", "episode has ended");
    const Action a = action_from_json(msg);
    StepResult r = env_.step(a);
    recorder_.record(a, r, env_.pose());
    reward_sum_ += r.reward;
    auto out = reply("observation", seq);
    out.update(observation_to_json(r.observation, env_.config().profile));
    out["reward"] = r.reward;
    out["done"] = r.done;
    out["termination_reason"] = termination_name(r.info.termination_reason);
    if (env_.config().profile == Profile::Full) {
      out["intersection_size"] = r.info.intersection_size;
      if (r.info.change) out["change"] = change_to_json(*r.info.change);
    }
    return out;
  }

  nlohmann::json on_instruction(const nlohmann::json& msg, long long seq) {
    require_running();
    if (mode_ != SessionMode::HumanCollect)
      throw ProtocolError("state", "instruction_submit is only accepted in human_collect mode");
    if (!msg.contains("text") || !msg["text"].is_string() || msg["text"].get<std::string>().empty())
      throw ProtocolError("invalid", "instruction text must be a non-empty string");
    instruction_ = msg["text"].get<std::string>();
    auto r = reply("instruction_submit", seq);
    r["ok"] = true;
    return r;
  }

  nlohmann::json on_end(long long seq) {
    require_running();
    finished_ = true;
    auto r = reply("end_episode", seq);
    const F1Report f = env_.score();
    r["f1"] = f.f1;
    r["steps"] = env_.steps();
    r["reward_sum"] = reward_sum_;
    r["termination_reason"] = termination_name(env_.done() ? env_.termination() : Termination::EndEpisode);
    return r;
  }

  nlohmann::json on_export(long long seq) {
    require_running();
    auto r = reply("export_log", seq);
    r["record"] = serialize_record(recorder_.finish(env_.grid(), instruction_));
    return r;
  }

  std::string id_;
  SessionMode mode_;
  long long game_id_;
  Environment env_;
  TapeRecorder recorder_;
  std::string instruction_;
  double reward_sum_ = 0.0;
  long long last_in_seq_ = 0;
  long long out_seq_ = 0;
  bool greeted_ = false;
  bool configured_ = false;
  bool finished_ = false;
  bool closed_ = false;
};

// Bounded, thread-safe set of live sessions.
class SessionRegistry {
 public:
  explicit SessionRegistry(std::size_t capacity, SessionMode mode) : capacity_(capacity), mode_(mode) {
    if (capacity == 0) throw std::invalid_argument("session capacity must be positive");
  }

  // Null when the registry is full.
  std::shared_ptr<Session> create() {
    std::lock_guard lock(mu_);
    if (sessions_.size() >= capacity_) return nullptr;
    const long long n = ++created_;
    auto s = std::make_shared<Session>("session-" + std::to_string(n), mode_, n);
    sessions_.emplace(s->id(), s);
    return s;
  }

  void remove(const std::string& id) {
    std::lock_guard lock(mu_);
    sessions_.erase(id);
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return sessions_.size();
  }

  SessionMode mode() const { return mode_; }

 private:
  mutable std::mutex mu_;
  std::size_t capacity_;
  SessionMode mode_;
  long long created_ = 0;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

}  // namespace iglu
