#include "goma/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace goma {

double speedup(int l_single, int l_team) {
  if (l_team <= 0) throw std::invalid_argument("speedup: team plan length must be positive");
  if (l_single <= 0) throw std::invalid_argument("speedup: single-agent plan length must be positive");
  return static_cast<double>(l_single) / static_cast<double>(l_team) - 1.0;
}

double coldness(int l, const std::vector<int>& hot) {
  double sum = 0.0;
  for (int li : hot) sum += std::max(0, l - li);
  return sum;
}

double total_cost(int l, int u, const std::vector<int>& hot) { return l + u + coldness(l, hot); }

double EpisodeResult::coldness() const { return goma::coldness(steps, hot); }
double EpisodeResult::total_cost() const { return goma::total_cost(steps, utterances, hot); }

namespace {

std::string digest(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json utterances_json(const BeliefSchema& schema, const std::vector<Utterance>& us) {
  json a = json::array();
  for (const auto& u : us) a.push_back(utterance_to_json(schema, u));
  return a;
}

json header(const json& scenario, Variant v, const EpisodeConfig& cfg) {
  return {{"kind", "header"},
          {"scenario", scenario.value("id", std::string("scenario"))},
          {"condition", std::string(to_string(v))},
          {"seed", cfg.seed},
          {"t_max", cfg.t_max},
          {"comm_cost", cfg.agent.goma.comm_cost},
          {"config", scenario}};
}

}  // namespace

json instantiate_scenario(const json& scenario, uint64_t seed) {
  json out = scenario;
  Rng rng(mix_seed(scenario.value("seed", 0ULL), mix_seed(seed, 0x706c)));
  for (auto& o : out.at("objects")) {
    if (!o.contains("placements")) continue;
    const auto& options = o["placements"];
    if (!options.is_array() || options.empty())
      throw ScenarioError("object " + o.value("id", std::string("?")) + " has empty placements");
    o["location"] = options[rng.below(options.size())];
    o.erase("placements");
  }
  return out;
}

EpisodeResult run_episode(const json& raw, Variant variant, const EpisodeConfig& cfg) {
  const json scenario = instantiate_scenario(raw, cfg.seed);
  const json config = variant == Variant::none ? without_assistant(scenario) : scenario;
  WorldState state = load_scenario(config);
  const Layout& l = state.layout();
  auto schema = make_schema(state.layout_ptr());
  const int h = l.human();
  const int r = l.assistant();

  EpisodeResult res;
  res.scenario = l.id;
  res.family = l.family;
  res.variant = variant;
  res.seed = cfg.seed;
  if (cfg.keep_log) res.log.push_back(header(scenario, variant, cfg));

  const uint64_t seed = mix_seed(l.seed, cfg.seed);
  HumanProxy human(state, h, l.true_goal, cfg.agent.goma.planner, seed, r >= 0 && !l.goal_known,
                   cfg.agent.goma.mind.h_max);
  std::optional<Assistant> assistant;
  if (r >= 0) assistant.emplace(variant, state, r, cfg.agent, seed);

  std::vector<Utterance> to_human, to_robot;
  const Goal& goal = l.goal_space[l.true_goal];
  while (state.clock < cfg.t_max && !goal_satisfied(state, goal)) {
    std::vector<Action> actions(l.agents.size());
    AgentOutput out_h = human.step(observe(state, h), to_human, legal_actions(state, h));
    actions[h] = out_h.action;
    AgentOutput out_r;
    if (assistant) {
      out_r = assistant->step(observe(state, r), to_robot, legal_actions(state, r));
      actions[r] = out_r.action;
    }
    res.utterances += static_cast<int>(out_h.utterances.size() + out_r.utterances.size());
    if (cfg.keep_log) {
      json rec = {{"kind", "step"}, {"t", state.clock}};
      json acts = json::object();
      for (size_t a = 0; a < l.agents.size(); ++a) acts[l.agents[a].id] = encode(l, actions[a]);
      rec["actions"] = acts;
      rec["human_utterances"] = utterances_json(*schema, out_h.utterances);
      rec["assistant_utterances"] = utterances_json(*schema, out_r.utterances);
      if (assistant) {
        rec["decision"] = decision_to_json(*schema, assistant->last_decision());
        const json mj = mind_to_json(assistant->mind());
        rec["goal_posterior"] = mj["goal_posterior"];
        rec["mind_digest"] = digest(mj.dump());
      }
      res.log.push_back(std::move(rec));
    }
    to_human = out_r.utterances;
    to_robot = out_h.utterances;
    state = step(state, actions).state;
  }
  res.success = goal_satisfied(state, goal);
  res.steps = res.success ? state.clock : cfg.t_max;
  res.hot = hot_completions(state);
  res.final_state = state_to_json(state);
  if (cfg.keep_log)
    res.log.push_back({{"kind", "end"},
                       {"steps", res.steps},
                       {"success", res.success},
                       {"utterances", res.utterances},
                       {"coldness", res.coldness()},
                       {"total_cost", res.total_cost()},
                       {"final_state", res.final_state}});
  return res;
}

std::string replay_log(const std::vector<json>& log) {
  if (log.empty() || log.front().value("kind", "") != "header") return "log has no header";
  // hitl session logs carry a rating record after the end
  auto end_it = std::find_if(log.rbegin(), log.rend(), [](const json& r) { return r.value("kind", "") == "end"; });
  if (end_it == log.rend()) return "log has no end record";
  const json& head = log.front();
  const Variant v = parse_variant(head.at("condition").get<std::string>());
  const json config = v == Variant::none ? without_assistant(head.at("config")) : head.at("config");
  WorldState state = load_scenario(config);
  const Layout& l = state.layout();
  size_t records = 0;
  for (const auto& rec : log) {
    if (rec.value("kind", "") != "step") continue;
    if (rec.at("t").get<int>() != state.clock)
      return "step record " + std::to_string(records) + " is out of order";
    std::vector<Action> actions(l.agents.size());
    for (size_t a = 0; a < l.agents.size(); ++a)
      actions[a] = parse_action(l, rec.at("actions").at(l.agents[a].id).get<std::string>());
    try {
      state = step(state, actions).state;
    } catch (const IllegalAction& e) {
      return std::string("replay rejected an action: ") + e.what();
    }
    ++records;
  }
  const json& end = *end_it;
  const bool success = end.at("success").get<bool>();
  const int steps = end.at("steps").get<int>();
  if (success && static_cast<int>(records) != steps) return "record count differs from the logged length";
  if (state_to_json(state) != end.at("final_state")) return "terminal state differs from the log";
  return {};
}

std::vector<json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<json> out;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(json::parse(line));
  return out;
}

void write_jsonl(const std::string& path, const std::vector<json>& lines) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& j : lines) out << j.dump() << '\n';
}

Suite load_suite(const std::string& path) {
  const json j = read_json_file(path);
  const auto base = std::filesystem::path(path).parent_path();
  Suite s;
  s.t_max = j.value("t_max", 80);
  for (const auto& seed : j.at("seeds")) s.seeds.push_back(seed.get<uint64_t>());
  for (const auto& e : j.at("scenarios")) {
    SuiteEntry entry;
    entry.path = (base / e.at("path").get<std::string>()).lexically_normal().string();
    entry.config = read_json_file(entry.path);
    for (const auto& c : e.at("conditions")) entry.conditions.push_back(parse_variant(c.get<std::string>()));
    s.scenarios.push_back(std::move(entry));
  }
  return s;
}

SignTest sign_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("sign_test: samples are not paired");
  SignTest t;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] < b[i])
      ++t.better;
    else if (a[i] > b[i])
      ++t.worse;
    else
      ++t.ties;
  }
  const int n = t.better + t.worse;
  if (n == 0) return t;
  const int k = std::min(t.better, t.worse);
  double tail = 0.0;
  for (int i = 0; i <= k; ++i)
    tail += std::exp(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) - n * std::log(2.0));
  t.p = std::min(1.0, 2.0 * tail);
  return t;
}

namespace {

struct Job {
  size_t scenario;
  Variant condition;
  uint64_t seed;
};

}  // namespace

std::vector<MetricsRow> run_suite(const Suite& suite, const RunOptions& opts) {
  std::vector<Job> jobs;
  for (size_t i = 0; i < suite.scenarios.size(); ++i)
    for (Variant v : suite.scenarios[i].conditions)
      for (uint64_t seed : suite.seeds) jobs.push_back({i, v, seed});

  std::vector<EpisodeResult> results(jobs.size());
  std::atomic<size_t> next{0};
  std::mutex io;
  if (!opts.log_dir.empty()) std::filesystem::create_directories(opts.log_dir);

  auto worker = [&]() {
    for (size_t k = next++; k < jobs.size(); k = next++) {
      const Job& job = jobs[k];
      const SuiteEntry& entry = suite.scenarios[job.scenario];
      EpisodeConfig cfg;
      cfg.agent = opts.agent;
      cfg.t_max = suite.t_max;
      cfg.seed = job.seed;
      cfg.keep_log = !opts.log_dir.empty();
      EpisodeResult res;
      try {
        res = run_episode(entry.config, job.condition, cfg);
      } catch (const std::exception& e) {
        res.scenario = entry.config.value("id", std::string("scenario"));
        res.family = entry.config.value("family", "") == "kitchen" ? Family::kitchen : Family::household;
        res.variant = job.condition;
        res.seed = job.seed;
        res.steps = suite.t_max;
        res.error = e.what();
      }
      if (!opts.log_dir.empty() && !res.log.empty()) {
        const std::string name = res.scenario + "_" + std::string(to_string(job.condition)) + "_" +
                                 std::to_string(job.seed) + ".jsonl";
        write_jsonl((std::filesystem::path(opts.log_dir) / name).string(), res.log);
      }
      res.log.clear();
      if (opts.progress) {
        std::lock_guard lock(io);
        std::cerr << res.scenario << " " << to_string(job.condition) << " seed " << job.seed << ": L=" << res.steps
                  << " U=" << res.utterances << (res.error.empty() ? "" : " error: " + res.error) << "\n";
      }
      results[k] = std::move(res);
    }
  };
  const int n = std::max(1, opts.jobs);
  std::vector<std::thread> pool;
  for (int i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::map<std::pair<std::string, uint64_t>, int> single;
  for (const auto& r : results)
    if (r.variant == Variant::none && r.error.empty()) single[{r.scenario, r.seed}] = r.steps;

  std::vector<MetricsRow> rows;
  for (const auto& r : results) {
    MetricsRow row;
    row.scenario = r.scenario;
    row.family = r.family;
    row.condition = r.variant;
    row.seed = r.seed;
    row.steps = r.steps;
    row.utterances = r.utterances;
    row.coldness = r.coldness();
    row.total_cost = r.total_cost();
    row.success = r.success;
    row.error = r.error;
    if (auto it = single.find({r.scenario, r.seed}); it != single.end()) row.speedup = speedup(it->second, r.steps);
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(), [](const MetricsRow& a, const MetricsRow& b) {
    return std::tie(a.scenario, a.condition, a.seed) < std::tie(b.scenario, b.condition, b.seed);
  });
  return rows;
}

namespace {

std::string fmt(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

}  // namespace

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::ostringstream out;
  out << "scenario,family,condition,seed,steps,utterances,coldness,speedup,total_cost,success,error\n";
  for (const auto& r : rows) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out << r.scenario << ',' << to_string(r.family) << ',' << to_string(r.condition) << ',' << r.seed << ','
        << r.steps << ',' << r.utterances << ',' << fmt(r.coldness) << ',' << fmt(r.speedup) << ','
        << fmt(r.total_cost) << ',' << (r.success ? 1 : 0) << ',' << err << '\n';
  }
  return out.str();
}

std::vector<MetricsRow> parse_metrics_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() == 10) f.push_back("");
    if (f.size() != 11) throw std::runtime_error("malformed metrics row: " + line);
    MetricsRow r;
    r.scenario = f[0];
    r.family = f[1] == "kitchen" ? Family::kitchen : Family::household;
    r.condition = parse_variant(f[2]);
    r.seed = std::stoull(f[3]);
    r.steps = std::stoi(f[4]);
    r.utterances = std::stoi(f[5]);
    r.coldness = std::stod(f[6]);
    r.speedup = std::stod(f[7]);
    r.total_cost = std::stod(f[8]);
    r.success = f[9] == "1";
    r.error = f[10];
    rows.push_back(std::move(r));
  }
  return rows;
}

double condition_mean(const std::vector<MetricsRow>& rows, Variant v, const std::optional<Family>& family,
                      double MetricsRow::*field) {
  double sum = 0.0;
  int n = 0;
  for (const auto& r : rows)
    if (r.condition == v && (!family || r.family == *family)) {
      sum += r.*field;
      ++n;
    }
  return n ? sum / n : std::nan("");
}

SignTest compare_conditions(const std::vector<MetricsRow>& rows, Variant a, Variant b,
                            const std::optional<Family>& family) {
  std::map<std::pair<std::string, uint64_t>, double> ca, cb;
  for (const auto& r : rows) {
    if (family && r.family != *family) continue;
    if (r.condition == a) ca[{r.scenario, r.seed}] = r.total_cost;
    if (r.condition == b) cb[{r.scenario, r.seed}] = r.total_cost;
  }
  std::vector<double> xa, xb;
  for (const auto& [key, x] : ca)
    if (auto it = cb.find(key); it != cb.end()) {
      xa.push_back(x);
      xb.push_back(it->second);
    }
  return sign_test(xa, xb);
}

std::string report_md(const std::vector<MetricsRow>& rows) {
  std::ostringstream out;
  out << "# Suite report\n\n";
  const Variant order[] = {Variant::none, Variant::nocomm, Variant::heur, Variant::goalag, Variant::goma};
  auto section = [&](const std::string& title, std::optional<Family> fam) {
    std::vector<MetricsRow> sel;
    for (const auto& r : rows)
      if (!fam || r.family == *fam) sel.push_back(r);
    if (sel.empty()) return;
    out << "## " << title << "\n\n";
    out << "| condition | episodes | success | L | U | coldness | speedup | total cost |\n";
    out << "|---|---|---|---|---|---|---|---|\n";
    for (Variant v : order) {
      int n = 0, ok = 0;
      for (const auto& r : sel)
        if (r.condition == v) {
          ++n;
          ok += r.success ? 1 : 0;
        }
      if (!n) continue;
      double steps = 0.0, utt = 0.0;
      for (const auto& r : sel)
        if (r.condition == v) {
          steps += r.steps;
          utt += r.utterances;
        }
      out << "| " << to_string(v) << " | " << n << " | " << ok << " | " << fmt(steps / n, 2) << " | "
          << fmt(utt / n, 2) << " | " << fmt(condition_mean(sel, v, {}, &MetricsRow::coldness), 2) << " | "
          << fmt(condition_mean(sel, v, {}, &MetricsRow::speedup), 4) << " | "
          << fmt(condition_mean(sel, v, {}, &MetricsRow::total_cost), 2) << " |\n";
    }
    out << "\n";
    bool any = false;
    for (Variant v : order) {
      if (v == Variant::goma) continue;
      const SignTest t = compare_conditions(sel, Variant::goma, v, {});
      if (t.better + t.worse + t.ties == 0) continue;
      if (!any) {
        out << "| goma vs | lower | higher | ties | sign-test p |\n|---|---|---|---|---|\n";
        any = true;
      }
      char p[32];
      std::snprintf(p, sizeof p, "%.3g", t.p);
      out << "| " << to_string(v) << " | " << t.better << " | " << t.worse << " | " << t.ties << " | " << p << " |\n";
    }
    if (any) out << "\n";
  };
  section("All scenarios", std::nullopt);
  section("Kitchen", Family::kitchen);
  section("Household", Family::household);
  int errors = 0;
  for (const auto& r : rows) errors += r.error.empty() ? 0 : 1;
  if (errors) out << "Episodes with errors: " << errors << "\n";
  return out.str();
}

std::vector<int> utterance_counts_by_cost(const json& scenario, const EpisodeConfig& cfg,
                                          const std::vector<double>& costs, int prefix) {
  EpisodeConfig run = cfg;
  run.keep_log = true;
  run.t_max = std::min(cfg.t_max, prefix);
  const EpisodeResult logged = run_episode(scenario, Variant::goma, run);

  std::vector<int> counts;
  const json config = logged.log.front().at("config");
  for (double c : costs) {
    WorldState state = load_scenario(config);
    const Layout& l = state.layout();
    auto schema = make_schema(state.layout_ptr());
    const int r = l.assistant();
    const uint64_t seed = mix_seed(l.seed, cfg.seed);
    Assistant assistant(Variant::goma, state, r, cfg.agent, seed);
    std::vector<Utterance> to_robot;
    int count = 0;
    for (const auto& rec : logged.log) {
      if (rec.value("kind", "") != "step") continue;
      assistant.prepare(observe(state, r), to_robot);
      AgentOutput would = assistant.decide_with(legal_actions(state, r), c);
      if (!would.utterances.empty()) ++count;
      AgentOutput forced;
      forced.action = parse_action(l, rec.at("actions").at(l.agents[r].id).get<std::string>());
      for (const auto& u : rec.at("assistant_utterances")) forced.utterances.push_back(utterance_from_json(*schema, u));
      assistant.commit(forced);
      to_robot.clear();
      for (const auto& u : rec.at("human_utterances")) to_robot.push_back(utterance_from_json(*schema, u));
      std::vector<Action> actions(l.agents.size());
      for (size_t a = 0; a < l.agents.size(); ++a)
        actions[a] = parse_action(l, rec.at("actions").at(l.agents[a].id).get<std::string>());
      state = step(state, actions).state;
    }
    counts.push_back(count);
  }
  return counts;
}

}  // namespace goma
