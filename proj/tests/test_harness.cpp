#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>

#include "fixtures.hpp"

using namespace goma;

namespace {

// Exact two-sided binomial tail by integer counting.
double sign_p(int better, int worse) {
  const int n = better + worse, k = std::min(better, worse);
  std::vector<double> row{1.0};
  for (int i = 0; i < n; ++i) {
    std::vector<double> next(row.size() + 1, 0.0);
    for (size_t j = 0; j < row.size(); ++j) {
      next[j] += row[j] / 2;
      next[j + 1] += row[j] / 2;
    }
    row = next;
  }
  double tail = 0.0;
  for (int i = 0; i <= k; ++i) tail += row[i];
  return std::min(1.0, 2 * tail);
}

Suite small_suite() {
  Suite s;
  s.scenarios.push_back({fixtures::source("scenarios/household_set_table.json"),
                         fixtures::scenario("household_set_table"),
                         {Variant::none, Variant::nocomm}});
  s.seeds = {0, 1, 2};
  return s;
}

}  // namespace

TEST_CASE("speedup of the example lengths") {
  CHECK(speedup(30, 20) == doctest::Approx(0.5));
  CHECK(speedup(20, 20) == 0.0);
  CHECK_THROWS_AS(speedup(20, 0), std::invalid_argument);
}

TEST_CASE("total cost of the example episode") {
  CHECK(total_cost(12, 0, {}) == 12.0);
  CHECK(total_cost(12, 2, {8, 10}) == 20.0);
  CHECK(coldness(12, {8, 10}) == 6.0);
}

TEST_CASE("total cost is at least the length") {
  Rng rng(61);
  for (int i = 0; i < 1000; ++i) {
    const int l = 1 + static_cast<int>(rng.below(80));
    const int u = rng.bernoulli(0.3) ? 0 : static_cast<int>(rng.below(10));
    std::vector<int> hot(rng.below(4));
    for (int& h : hot) h = static_cast<int>(rng.below(l + 1));
    const double c = total_cost(l, u, hot);
    CHECK(c >= l);
    bool all_at_end = std::all_of(hot.begin(), hot.end(), [&](int h) { return h == l; });
    CHECK((c == l) == (u == 0 && all_at_end));
  }
}

TEST_CASE("sign test against exact binomial counts") {
  for (auto [b, w] : std::vector<std::pair<int, int>>{{0, 20}, {37, 1}, {33, 4}, {5, 5}, {1, 0}, {12, 3}}) {
    std::vector<double> x, y;
    for (int i = 0; i < b; ++i) x.push_back(1), y.push_back(2);
    for (int i = 0; i < w; ++i) x.push_back(2), y.push_back(1);
    for (int i = 0; i < 7; ++i) x.push_back(3), y.push_back(3);
    auto t = sign_test(x, y);
    CHECK(t.better == b);
    CHECK(t.worse == w);
    CHECK(t.ties == 7);
    CHECK(t.p == doctest::Approx(sign_p(b, w)).epsilon(1e-9));
  }
}

TEST_CASE("a small suite yields one row per episode") {
  auto rows = run_suite(small_suite(), {});
  REQUIRE(rows.size() == 6);
  for (const auto& r : rows) {
    CHECK(r.success);
    CHECK(r.error.empty());
  }
  const std::string csv = metrics_csv(rows);
  auto back = parse_metrics_csv(csv);
  REQUIRE(back.size() == rows.size());
  CHECK(metrics_csv(back) == csv);
}

TEST_CASE("reruns give byte-identical reports") {
  auto a = run_suite(small_suite(), {});
  auto b = run_suite(small_suite(), {});
  CHECK(metrics_csv(a) == metrics_csv(b));
  CHECK(report_md(a) == report_md(b));
}

TEST_CASE("episode logs replay to the same final state") {
  const std::string dir = (std::filesystem::temp_directory_path() / "goma_replay_test").string();
  std::filesystem::create_directories(dir);
  for (const std::string name : {"kitchen_burger", "household_prepare_food"}) {
    for (Variant v : {Variant::none, Variant::goma, Variant::heur}) {
      EpisodeConfig cfg;
      cfg.seed = 3;
      auto r = run_episode(fixtures::scenario(name), v, cfg);
      CHECK(replay_log(r.log) == "");
      const std::string path = dir + "/" + name + ".jsonl";
      write_jsonl(path, r.log);
      auto back = read_jsonl(path);
      CHECK(replay_log(back) == "");
      // A tampered final state must be caught.
      back.back()["final_state"]["clock"] = -1;
      CHECK(replay_log(back) != "");
    }
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("the suite file loads with relative paths") {
  Suite s = load_suite(fixtures::source("suites/default.json"));
  CHECK(s.scenarios.size() == 8);
  CHECK(s.seeds.size() == 10);
  CHECK(s.t_max == 80);
  for (const auto& e : s.scenarios) CHECK(std::filesystem::exists(e.path));
}

TEST_CASE("higher costs never add utterances") {
  EpisodeConfig cfg;
  cfg.seed = 1;
  auto counts = utterance_counts_by_cost(fixtures::scenario("tiny/oracle_request"), cfg, {0.0, 0.5, 1.0, 2.0, 4.0}, 10);
  REQUIRE(counts.size() == 5);
  for (size_t i = 1; i < counts.size(); ++i) CHECK(counts[i] <= counts[i - 1]);
}
