#include "goma/hitl.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "goma/harness.hpp"

namespace goma {

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::lobby: return "lobby";
    case Phase::running: return "running";
    case Phase::rating: return "rating";
    case Phase::done: return "done";
  }
  return "lobby";
}

std::vector<Variant> condition_order(int participant, uint64_t seed) {
  std::vector<Variant> base = {Variant::goma, Variant::nocomm, Variant::heur, Variant::goalag, Variant::none};
  Rng rng(mix_seed(seed, 0x4c53));
  for (size_t i = base.size() - 1; i > 0; --i) std::swap(base[i], base[rng.below(i + 1)]);
  const int n = static_cast<int>(base.size());
  const int row = ((participant % n) + n) % n;
  std::vector<Variant> out;
  for (int i = 0; i < n; ++i) out.push_back(base[(row + i) % n]);
  return out;
}

RatingStore::RatingStore(std::string path) : path_(std::move(path)) {}

void RatingStore::append(const RatingRecord& r, const std::string& participant, Variant condition,
                         const std::string& scenario) {
  std::lock_guard lock(mu_);
  const bool fresh = !std::filesystem::exists(path_) || std::filesystem::file_size(path_) == 0;
  std::string line;
  if (fresh) line += "session,participant,condition,scenario,helpful,understands_goal,useful_communication,over_communication\n";
  line += r.session + "," + participant + "," + std::string(to_string(condition)) + "," + scenario;
  for (int v : r.values) line += "," + std::to_string(v);
  line += "\n";
  std::ofstream out(path_, std::ios::app);
  if (!out) throw std::runtime_error("cannot append to " + path_);
  out << line;
  out.flush();
}

json reject(std::string_view reason) { return {{"kind", "reject"}, {"reason", std::string(reason)}}; }

Session::Session(std::string id, std::map<std::string, json> scenarios, ServerConfig cfg, RatingStore* ratings)
    : id_(std::move(id)), scenarios_(std::move(scenarios)), cfg_(std::move(cfg)), ratings_(ratings) {}

std::vector<json> Session::handle(const json& msg) {
  if (!msg.is_object() || !msg.contains("kind") || !msg["kind"].is_string()) return {reject("message has no kind")};
  const std::string kind = msg["kind"].get<std::string>();
  try {
    if (kind == "join") return phase_ == Phase::lobby ? on_join(msg) : std::vector<json>{reject("join is only valid in the lobby")};
    if (kind == "act") return phase_ == Phase::running ? on_act(msg) : std::vector<json>{reject("act is only valid while running")};
    if (kind == "chat") return phase_ == Phase::running ? on_chat(msg) : std::vector<json>{reject("chat is only valid while running")};
    if (kind == "rate") return phase_ == Phase::rating ? on_rate(msg) : std::vector<json>{reject("rate is only valid after the trial")};
  } catch (const std::exception& e) {
    return {reject(e.what())};
  }
  return {reject("unknown message kind '" + kind + "'")};
}

void Session::log(const json& line) {
  if (log_path_.empty()) return;
  std::ofstream out(log_path_, std::ios::app);
  out << line.dump() << '\n';
}

std::vector<json> Session::on_join(const json& msg) {
  if (scenarios_.empty()) return {reject("no scenarios loaded")};
  std::string scenario = msg.value("scenario", std::string());
  if (scenario.empty()) {
    for (const auto& [name, cfg] : scenarios_)
      if (cfg.value("family", "") == "household") {
        scenario = name;
        break;
      }
    if (scenario.empty()) scenario = scenarios_.begin()->first;
  }
  auto it = scenarios_.find(scenario);
  if (it == scenarios_.end()) return {reject("unknown scenario '" + scenario + "'")};
  const int participant = msg.value("participant", 0);
  const int trial = msg.value("trial", 0);
  condition_ = msg.contains("condition") ? parse_variant(msg["condition"].get<std::string>())
                                         : condition_order(participant, cfg_.seed)[trial % 5];
  participant_ = std::to_string(participant);
  scenario_ = scenario;

  const json instance = instantiate_scenario(it->second, cfg_.seed + static_cast<uint64_t>(trial));
  const json config = condition_ == Variant::none ? without_assistant(instance) : instance;
  state_.emplace(load_scenario(config));
  schema_ = make_schema(state_->layout_ptr());
  const Layout& l = state_->layout();
  if (l.assistant() >= 0)
    assistant_.emplace(condition_, *state_, l.assistant(), cfg_.agent, mix_seed(cfg_.seed, static_cast<uint64_t>(participant) * 131 + static_cast<uint64_t>(trial)));
  phase_ = Phase::running;

  if (!cfg_.data_dir.empty()) {
    std::filesystem::create_directories(cfg_.data_dir);
    log_path_ = (std::filesystem::path(cfg_.data_dir) / ("session_" + id_ + ".jsonl")).string();
    std::ofstream(log_path_, std::ios::trunc);
  }
  log({{"kind", "header"},
       {"session", id_},
       {"participant", participant_},
       {"scenario", scenario_},
       {"condition", std::string(to_string(condition_))},
       {"config", instance}});

  json info = {{"kind", "session_info"},
               {"session", id_},
               {"scenario", scenario_},
               {"condition", std::string(to_string(condition_))},
               {"agent", l.agents[l.human()].id},
               {"goal", l.goal_space[l.true_goal].name},
               {"phase", std::string(to_string(phase_))}};
  return {info, state_update()};
}

json Session::state_update() const {
  const Layout& l = state_->layout();
  const int h = l.human();
  json legal = json::array();
  if (phase_ == Phase::running)
    for (const auto& a : legal_actions(*state_, h)) legal.push_back(action_to_json(l, a));
  json said = json::array();
  for (const auto& u : assistant_said_) said.push_back(u.text.empty() ? render_utterance(*schema_, u) : u.text);
  return {{"kind", "state_update"},
          {"clock", state_->clock},
          {"phase", std::string(to_string(phase_))},
          {"observation", observation_to_json(l, observe(*state_, h))},
          {"legal_actions", legal},
          {"assistant_utterances", said},
          {"goal_reached", goal_satisfied(*state_, l.goal_space[l.true_goal])}};
}

std::vector<json> Session::on_act(const json& msg) {
  const Layout& l = state_->layout();
  const int h = l.human();
  if (!msg.contains("action")) return {reject("act needs an action")};
  Action a;
  try {
    a = msg["action"].is_string() ? parse_action(l, msg["action"].get<std::string>())
                                  : action_from_json(l, msg["action"]);
  } catch (const std::exception& e) {
    json r = reject(std::string("unreadable action: ") + e.what());
    r["legal_actions"] = json::array();
    for (const auto& x : legal_actions(*state_, h)) r["legal_actions"].push_back(action_to_json(l, x));
    return {r};
  }
  if (!is_legal(*state_, h, a)) {
    json r = reject("illegal action " + encode(l, a));
    r["legal_actions"] = json::array();
    for (const auto& x : legal_actions(*state_, h)) r["legal_actions"].push_back(action_to_json(l, x));
    return {r};
  }
  std::vector<Action> actions(l.agents.size());
  actions[h] = a;
  std::vector<Utterance> said;
  if (assistant_) {
    const int r = l.assistant();
    AgentOutput out = assistant_->step(observe(*state_, r), pending_chat_, legal_actions(*state_, r));
    actions[r] = out.action;
    said = out.utterances;
  }
  json rec = {{"kind", "step"}, {"t", state_->clock}};
  json acts = json::object();
  for (size_t i = 0; i < l.agents.size(); ++i) acts[l.agents[i].id] = encode(l, actions[i]);
  rec["actions"] = acts;
  json hu = json::array(), au = json::array();
  for (const auto& u : pending_chat_) hu.push_back(utterance_to_json(*schema_, u));
  for (const auto& u : said) au.push_back(utterance_to_json(*schema_, u));
  rec["human_utterances"] = hu;
  rec["assistant_utterances"] = au;
  pending_chat_.clear();
  *state_ = step(*state_, actions).state;
  assistant_said_ = said;

  std::vector<json> events;
  for (const auto& u : said) {
    const std::string text = u.text.empty() ? render_utterance(*schema_, u) : u.text;
    transcript_.push_back({{"t", state_->clock - 1}, {"speaker", "assistant"}, {"text", text}});
    log({{"kind", "chat"}, {"t", state_->clock - 1}, {"speaker", "assistant"}, {"text", text}});
    events.push_back({{"kind", "assistant_chat"}, {"text", text}, {"clock", state_->clock - 1}});
  }
  log(rec);
  if (goal_satisfied(*state_, l.goal_space[l.true_goal]) || state_->clock >= cfg_.t_max) {
    phase_ = Phase::rating;
    log({{"kind", "end"},
         {"steps", state_->clock},
         {"success", goal_satisfied(*state_, l.goal_space[l.true_goal])},
         {"final_state", state_to_json(*state_)}});
  }
  events.insert(events.begin(), state_update());
  return events;
}

std::vector<json> Session::on_chat(const json& msg) {
  if (!msg.contains("text") || !msg["text"].is_string()) return {reject("chat needs text")};
  const std::string text = msg["text"].get<std::string>();
  auto parsed = parse_chat(*schema_, text, state_->layout().human());
  transcript_.push_back({{"t", state_->clock}, {"speaker", "human"}, {"text", text}});
  log({{"kind", "chat"}, {"t", state_->clock}, {"speaker", "human"}, {"text", text}, {"parsed", parsed.size()}});
  for (auto& u : parsed) pending_chat_.push_back(std::move(u));
  return {};
}

std::vector<json> Session::on_rate(const json& msg) {
  RatingRecord r;
  r.session = id_;
  const json& v = msg.contains("ratings") ? msg["ratings"] : msg;
  static const char* names[4] = {"helpful", "understands_goal", "useful_communication", "over_communication"};
  for (int i = 0; i < 4; ++i) {
    json x = v.is_array() ? (i < static_cast<int>(v.size()) ? v[i] : json()) : v.value(names[i], json());
    if (!x.is_number_integer()) return {reject(std::string("rating '") + names[i] + "' must be an integer 1-7")};
    const int val = x.get<int>();
    if (val < 1 || val > 7) return {reject(std::string("rating '") + names[i] + "' must be within 1-7")};
    r.values[i] = val;
  }
  if (ratings_) ratings_->append(r, participant_, condition_, scenario_);
  log({{"kind", "rating"}, {"values", r.values}});
  phase_ = Phase::done;
  return {{{"kind", "trial_done"}, {"session", id_}, {"phase", std::string(to_string(phase_))}}};
}

std::map<std::string, json> load_scenario_dir(const std::string& dir) {
  std::map<std::string, json> out;
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    json j = read_json_file(f.string());
    build_layout(j);
    out[j.value("id", f.stem().string())] = j;
  }
  return out;
}

namespace {

bool send_line(int fd, const std::string& line) {
  std::string buf = line + "\n";
  size_t sent = 0;
  while (sent < buf.size()) {
    ssize_t n = ::send(fd, buf.data() + sent, buf.size() - sent, MSG_NOSIGNAL);
    if (n <= 0) return false;
    sent += static_cast<size_t>(n);
  }
  return true;
}

}  // namespace

void serve_session(int fd, std::string id, std::map<std::string, json> scenarios, ServerConfig cfg,
                      RatingStore* ratings) {
  Session session(std::move(id), std::move(scenarios), std::move(cfg), ratings);
  std::string pending;
  char buf[4096];
  bool open = true;
  while (open && session.phase() != Phase::done) {
    ssize_t n = ::recv(fd, buf, sizeof buf, 0);
    if (n <= 0) break;
    pending.append(buf, static_cast<size_t>(n));
    size_t pos;
    while (open && (pos = pending.find('\n')) != std::string::npos) {
      std::string line = pending.substr(0, pos);
      pending.erase(0, pos + 1);
      if (line.empty()) continue;
      std::vector<json> events;
      try {
        events = session.handle(json::parse(line));
      } catch (const json::parse_error& e) {
        events = {reject(std::string("malformed JSON: ") + e.what())};
      }
      for (const auto& ev : events)
        if (!send_line(fd, ev.dump())) open = false;
    }
  }
  ::close(fd);
}

int serve_forever(const ServerConfig& cfg) {
  auto scenarios = load_scenario_dir(cfg.scenario_dir);
  std::filesystem::create_directories(cfg.data_dir);
  static RatingStore ratings((std::filesystem::path(cfg.data_dir) / "ratings.csv").string());

  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) {
    std::cerr << "socket: " << std::strerror(errno) << "\n";
    return 1;
  }
  int yes = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_ANY);
  addr.sin_port = htons(static_cast<uint16_t>(cfg.port));
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(fd, 16) < 0) {
    std::cerr << "cannot listen on port " << cfg.port << ": " << std::strerror(errno) << "\n";
    ::close(fd);
    return 1;
  }
  std::cerr << "listening on port " << cfg.port << " with " << scenarios.size() << " scenarios\n";
  std::atomic<uint64_t> next{1};
  while (true) {
    int client = ::accept(fd, nullptr, nullptr);
    if (client < 0) {
      if (errno == EINTR) continue;
      std::cerr << "accept: " << std::strerror(errno) << "\n";
      break;
    }
    std::thread(serve_session, client, std::to_string(next++), scenarios, cfg, &ratings).detach();
  }
  ::close(fd);
  return 1;
}

}  // namespace goma
