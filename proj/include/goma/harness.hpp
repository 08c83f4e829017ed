#pragma once

#include <optional>
#include <string>
#include <vector>

#include "goma/agents.hpp"

namespace goma {

double speedup(int l_single, int l_team);
double coldness(int l, const std::vector<int>& hot_completions);
double total_cost(int l, int u, const std::vector<int>& hot_completions);

struct EpisodeConfig {
  AgentConfig agent;
  int t_max = 80;
  uint64_t seed = 0;
  bool keep_log = true;
};

struct EpisodeResult {
  std::string scenario;
  Family family = Family::household;
  Variant variant = Variant::none;
  uint64_t seed = 0;
  int steps = 0;  // L; T_max when the goal was not reached
  int utterances = 0;
  std::vector<int> hot;
  bool success = false;
  std::string error;
  std::vector<json> log;  // header, steps, end
  json final_state;

  double coldness() const;
  double total_cost() const;
};

// Draws the start location of every object that lists "placements" from
// that list, seeded; other objects keep their "location".
json instantiate_scenario(const json& scenario, uint64_t seed);

EpisodeResult run_episode(const json& scenario, Variant variant, const EpisodeConfig& cfg);

// Re-simulates a log's actions through the world and checks the terminal
// state. Returns an empty string on success, otherwise what went wrong.
std::string replay_log(const std::vector<json>& log);
std::vector<json> read_jsonl(const std::string& path);
void write_jsonl(const std::string& path, const std::vector<json>& lines);

struct SuiteEntry {
  std::string path;
  json config;
  std::vector<Variant> conditions;
};

struct Suite {
  std::vector<SuiteEntry> scenarios;
  std::vector<uint64_t> seeds;
  int t_max = 80;
};

// Scenario paths resolve relative to the suite file.
Suite load_suite(const std::string& path);

struct MetricsRow {
  std::string scenario;
  Family family = Family::household;
  Variant condition = Variant::none;
  uint64_t seed = 0;
  int steps = 0;
  int utterances = 0;
  double coldness = 0.0;
  double speedup = 0.0;
  double total_cost = 0.0;
  bool success = false;
  std::string error;
};

struct SignTest {
  int better = 0;  // first sample lower
  int worse = 0;
  int ties = 0;
  double p = 1.0;  // two-sided, ties dropped
};

SignTest sign_test(const std::vector<double>& a, const std::vector<double>& b);

struct RunOptions {
  AgentConfig agent;
  int jobs = 1;
  std::string log_dir;  // empty: no logs written
  bool progress = false;
};

std::vector<MetricsRow> run_suite(const Suite& suite, const RunOptions& opts);

std::string metrics_csv(const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> parse_metrics_csv(const std::string& text);
std::string report_md(const std::vector<MetricsRow>& rows);

// Mean of a metric for one condition, optionally restricted to a family.
double condition_mean(const std::vector<MetricsRow>& rows, Variant v, const std::optional<Family>& family,
                      double MetricsRow::*field);

// Paired total costs (scenario, seed) of two conditions, GOMA first.
SignTest compare_conditions(const std::vector<MetricsRow>& rows, Variant a, Variant b,
                            const std::optional<Family>& family);

// Replays a GOMA episode prefix with the logged actions and utterances forced
// and counts the steps at which the assistant would have spoken at each cost.
std::vector<int> utterance_counts_by_cost(const json& scenario, const EpisodeConfig& cfg,
                                          const std::vector<double>& costs, int prefix);

}  // namespace goma
