#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "goma/harness.hpp"
#include "goma/hitl.hpp"

using namespace goma;

namespace {

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Goal-oriented communication planner and experiment harness"};
  app.require_subcommand(1);

  AgentConfig agent;
  auto add_agent_flags = [&](CLI::App* sub) {
    sub->add_option("--budget", agent.goma.planner.budget, "Search node expansions per plan")->capture_default_str();
    sub->add_option("--tau", agent.goma.planner.tau, "Softmax temperature over Q-values")->capture_default_str();
    sub->add_option("--particles-k", agent.goma.planner.samples, "Determinizations per plan")->capture_default_str();
    sub->add_option("--particles", agent.goma.mind.particles, "Human belief particles")->capture_default_str();
    sub->add_option("--horizon", agent.goma.planner.horizon, "Search depth limit")->capture_default_str();
    sub->add_option("--comm-cost", agent.goma.comm_cost, "Cost C of one utterance")->capture_default_str();
    sub->add_option("--hmax", agent.goma.mind.h_max, "Entropy threshold for knowledge (nats)")->capture_default_str();
    sub->add_option("--heur-period", agent.heur_period, "HeurComm request period")->capture_default_str();
  };

  auto* run = app.add_subcommand("run", "Run a suite or a single episode");
  std::string suite_path, scenario_path, out_dir = "out", assistant = "goma";
  uint64_t seed = 0;
  int t_max = 80;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  bool quiet = false;
  auto* src = run->add_option_group("source");
  src->add_option("--suite", suite_path, "Suite JSON")->check(CLI::ExistingFile);
  src->add_option("--scenario", scenario_path, "Single scenario JSON")->check(CLI::ExistingFile);
  src->require_option(1);
  run->add_option("--out", out_dir, "Output directory")->capture_default_str();
  run->add_option("--assistant", assistant, "goma, nocomm, heur, goalag or none")->capture_default_str();
  run->add_option("--seed", seed, "Episode seed (single scenario)")->capture_default_str();
  run->add_option("--t-max", t_max, "Step limit (single scenario)")->capture_default_str();
  run->add_option("--jobs", jobs, "Parallel episodes")->capture_default_str();
  run->add_flag("--quiet", quiet, "No per-episode progress");
  add_agent_flags(run);

  auto* replay = app.add_subcommand("replay", "Re-simulate a logged episode and check its terminal state");
  std::string log_path;
  replay->add_option("log", log_path, "Episode JSONL log")->required()->check(CLI::ExistingFile);

  auto* compare = app.add_subcommand("compare", "Rebuild the report from a run directory");
  std::string compare_dir;
  compare->add_option("dir", compare_dir, "Directory holding metrics.csv")->required()->check(CLI::ExistingDirectory);

  auto* serve = app.add_subcommand("serve", "Serve human-in-the-loop sessions over TCP");
  int port = 8765;
  std::string scenarios_dir = "scenarios", data_dir = "hitl_data";
  serve->add_option("--port", port, "TCP port")->capture_default_str();
  serve->add_option("--scenarios", scenarios_dir, "Scenario directory")->check(CLI::ExistingDirectory)->capture_default_str();
  serve->add_option("--data", data_dir, "Where ratings.csv and session logs go")->capture_default_str();
  add_agent_flags(serve);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const Variant variant = parse_variant(assistant);
      std::filesystem::create_directories(out_dir);
      if (!scenario_path.empty()) {
        EpisodeConfig cfg;
        cfg.agent = agent;
        cfg.seed = seed;
        cfg.t_max = t_max;
        const auto start = std::chrono::steady_clock::now();
        EpisodeResult r = run_episode(read_json_file(scenario_path), variant, cfg);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const auto log = std::filesystem::path(out_dir) /
                         (r.scenario + "_" + std::string(to_string(variant)) + "_" + std::to_string(seed) + ".jsonl");
        write_jsonl(log.string(), r.log);
        std::cout << r.scenario << " " << to_string(variant) << " seed " << seed << ": L=" << r.steps
                  << " U=" << r.utterances << " coldness=" << r.coldness() << " total=" << r.total_cost()
                  << (r.success ? "" : " (not reached)") << " in " << secs << "s\n"
                  << "log: " << log.string() << "\n";
        return 0;
      }
      RunOptions opts;
      opts.agent = agent;
      opts.jobs = jobs;
      opts.log_dir = (std::filesystem::path(out_dir) / "logs").string();
      opts.progress = !quiet;
      const auto start = std::chrono::steady_clock::now();
      auto rows = run_suite(load_suite(suite_path), opts);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      write_file(std::filesystem::path(out_dir) / "metrics.csv", metrics_csv(rows));
      const std::string report = report_md(rows);
      write_file(std::filesystem::path(out_dir) / "report.md", report);
      std::cout << report << "\n" << rows.size() << " episodes in " << secs << "s\n";
      return 0;
    }
    if (*replay) {
      const std::string err = replay_log(read_jsonl(log_path));
      if (!err.empty()) {
        std::cerr << "replay mismatch: " << err << "\n";
        return 1;
      }
      std::cout << "replay ok\n";
      return 0;
    }
    if (*compare) {
      auto rows = parse_metrics_csv(slurp(std::filesystem::path(compare_dir) / "metrics.csv"));
      const std::string report = report_md(rows);
      write_file(std::filesystem::path(compare_dir) / "report.md", report);
      std::cout << report;
      return 0;
    }
    if (*serve) {
      ServerConfig cfg;
      cfg.port = port;
      cfg.scenario_dir = scenarios_dir;
      cfg.data_dir = data_dir;
      cfg.agent = agent;
      return serve_forever(cfg);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
