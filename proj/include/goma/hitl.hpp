#pragma once

#include <array>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "goma/agents.hpp"

namespace goma {

enum class Phase : uint8_t { lobby, running, rating, done };
std::string_view to_string(Phase p);

struct RatingRecord {
  std::string session;
  // helpful, understands goal, useful communication, over-communication
  std::array<int, 4> values{};
};

struct ServerConfig {
  int port = 8765;
  std::string scenario_dir = "scenarios";
  std::string data_dir = "hitl_data";
  AgentConfig agent;
  uint64_t seed = 0;
  int t_max = 80;
};

// Conditions in the order participant `p` meets them: a Latin-square row,
// with the square's row order shuffled by `seed`.
std::vector<Variant> condition_order(int participant, uint64_t seed);

// Append-only ratings.csv with a header on first use.
class RatingStore {
 public:
  explicit RatingStore(std::string path);
  void append(const RatingRecord& r, const std::string& participant, Variant condition, const std::string& scenario);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::mutex mu_;
};

// One human trial. Not thread-safe; the server serializes calls per session.
class Session {
 public:
  Session(std::string id, std::map<std::string, json> scenarios, ServerConfig cfg, RatingStore* ratings);

  // Handles one client message and returns the server events, in order.
  std::vector<json> handle(const json& msg);

  Phase phase() const { return phase_; }
  const std::string& id() const { return id_; }
  const WorldState& world() const { return *state_; }
  const Assistant* assistant() const { return assistant_ ? &*assistant_ : nullptr; }
  Variant condition() const { return condition_; }
  const std::vector<json>& transcript() const { return transcript_; }
  const std::string& log_path() const { return log_path_; }

 private:
  std::string id_;
  std::map<std::string, json> scenarios_;
  ServerConfig cfg_;
  RatingStore* ratings_;
  Phase phase_ = Phase::lobby;
  std::string participant_;
  std::string scenario_;
  Variant condition_ = Variant::goma;
  std::optional<WorldState> state_;
  std::shared_ptr<const BeliefSchema> schema_;
  std::optional<Assistant> assistant_;
  std::vector<Utterance> pending_chat_;
  std::vector<Utterance> assistant_said_;
  std::vector<json> transcript_;
  std::string log_path_;

  std::vector<json> on_join(const json& msg);
  std::vector<json> on_act(const json& msg);
  std::vector<json> on_chat(const json& msg);
  std::vector<json> on_rate(const json& msg);
  json state_update() const;
  void log(const json& line);
};

json reject(std::string_view reason);

// Loads every *.json scenario in a directory, keyed by id.
std::map<std::string, json> load_scenario_dir(const std::string& dir);

// Runs one session over a connected stream socket until the trial is done
// or the peer hangs up, then closes `fd`.
void serve_session(int fd, std::string id, std::map<std::string, json> scenarios, ServerConfig cfg,
                   RatingStore* ratings);

// Blocking TCP server speaking newline-delimited JSON, one session per
// connection. Returns a process exit code.
int serve_forever(const ServerConfig& cfg);

}  // namespace goma
