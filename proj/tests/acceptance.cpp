// Acceptance run: one PASS/FAIL line per criterion. Exits non-zero only when
// a criterion outside the known-failure list fails.

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "goma_oracle.hpp"

using namespace goma;

namespace {

// Directional results the reimplementation does not reach; see README.
const std::set<std::string> kKnownFailures = {"goma_beats_nocomm", "kitchen_coldness"};

struct Line {
  std::string name;
  bool pass;
  std::string detail;
};

std::vector<Line> lines;

void report(const std::string& name, bool pass, const std::string& detail) {
  lines.push_back({name, pass, detail});
  std::printf("%s %s  %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

std::string sign_detail(const SignTest& t) {
  return fmt("better=%d worse=%d ties=%d p=%.3g", t.better, t.worse, t.ties, t.p);
}

std::vector<double> random_dist(Rng& rng, size_t k, double zero_rate) {
  std::vector<double> p(k);
  double z = 0.0;
  for (auto& x : p) z += (x = rng.bernoulli(zero_rate) ? 0.0 : rng.uniform());
  if (z <= 0.0) {
    p.assign(k, 0.0);
    p[rng.below(k)] = 1.0;
    return p;
  }
  for (auto& x : p) x /= z;
  return p;
}

Belief0 random_belief(const std::shared_ptr<const BeliefSchema>& schema, Rng& rng) {
  Belief0 b = init_uniform(schema, 0);
  for (int n = 0; n < schema->size(); ++n) {
    const size_t k = (*schema)[n].values.size();
    if (rng.bernoulli(0.5)) b.set_dist(n, random_dist(rng, k, rng.bernoulli(0.5) ? 0.9 : 0.2), 0);
  }
  return b;
}

void check_kl() {
  Rng rng(101);
  int bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const size_t k = 2 + rng.below(12);
    auto p = random_dist(rng, k, 0.2);
    auto q = random_dist(rng, k, 0.0);
    for (auto& x : q) x = (1.0 - k * 1e-6) * x + 1e-6;
    const double d = kl_divergence(p, q);
    if (!(d >= 0.0) || std::abs(d - oracle::kl(p, q)) > 1e-9 * std::max(1.0, d)) ++bad;
    if (kl_divergence(p, p) != 0.0) ++bad;
  }
  report("kl_nonnegative", bad == 0, fmt("1000 pairs, %d violations", bad));
}

void check_knowledge_monotone() {
  auto schema = make_schema(fixtures::kitchen_state("household_set_table").layout_ptr());
  Rng rng(102);
  int bad = 0;
  for (int i = 0; i < 500; ++i) {
    Belief0 b = random_belief(schema, rng);
    const double h1 = rng.uniform() * 2.0, h2 = h1 + rng.uniform() * 2.0;
    std::set<int> big;
    for (const auto& it : knowledge(b, h2)) big.insert(it.substate);
    for (const auto& it : knowledge(b, h1))
      if (!big.count(it.substate)) ++bad;
  }
  report("knowledge_monotone", bad == 0, fmt("500 beliefs, %d violations", bad));
}

void check_merge() {
  auto schema = make_schema(fixtures::kitchen_state("kitchen_burger").layout_ptr());
  Rng rng(103);
  int bad = 0;
  for (int i = 0; i < 500; ++i) {
    Belief0 b = random_belief(schema, rng);
    const int n = static_cast<int>(rng.below(schema->size()));
    auto p = random_dist(rng, (*schema)[n].values.size(), 0.3);
    Belief0 once = merge(b, n, p);
    if (!(merge(once, n, p) == once)) ++bad;
    for (int m = 0; m < schema->size(); ++m) {
      auto x = once.dist(m), y = m == n ? std::span<const double>(p) : b.dist(m);
      if (!std::equal(x.begin(), x.end(), y.begin(), y.end())) ++bad;
    }
  }
  report("merge_idempotent_local", bad == 0, fmt("500 cases, %d violations", bad));
}

void check_normalization() {
  WorldState s = fixtures::kitchen_state("household_put_groceries", 2);
  auto schema = make_schema(s.layout_ptr());
  Rng rng(104);
  std::vector<Belief0> bs{init_uniform(schema, 0), init_uniform(schema, 1)};
  double worst = 0.0;
  for (int op = 0; op < 10000; ++op) {
    const int kind = static_cast<int>(rng.below(3));
    if (kind == 0) {
      std::vector<Action> acts;
      for (int a = 0; a < 2; ++a) {
        auto legal = legal_actions(s, a);
        acts.push_back(legal[rng.below(legal.size())]);
      }
      auto res = step(s, acts);
      s = res.state;
      for (int a = 0; a < 2; ++a) observe_into(bs[a], res.observations[a]);
    } else {
      auto& b = bs[rng.below(2)];
      const int n = static_cast<int>(rng.below(schema->size()));
      auto p = random_dist(rng, (*schema)[n].values.size(), 0.4);
      b = kind == 1 ? merge(b, n, p) : update_from_message(b, n, p);
    }
    for (const auto& b : bs) worst = std::max(worst, normalization_error(b));
  }
  report("normalization_fuzz", worst < 1e-9, fmt("10000 operations, worst |sum-1|=%.2e", worst));
}

void check_hand_bayes() {
  std::vector<double> post(4, 0.25);
  for (int i = 0; i < 3; ++i) post = bayes_update(post, {0.8, 0.1, 0.1, 0.1});
  const double want = std::pow(0.8, 3) / (std::pow(0.8, 3) + 3 * std::pow(0.1, 3));
  report("hand_bayes", std::abs(post[0] - want) < 1e-9, fmt("got %.12f want %.12f", post[0], want));
}

void check_metrics() {
  const bool ok = std::abs(speedup(30, 20) - 0.5) < 1e-12 && total_cost(12, 2, {8, 10}) == 20.0;
  report("metric_examples", ok, fmt("speedup(30,20)=%.3f total_cost(12,2,[8,10])=%.1f", speedup(30, 20),
                                    total_cost(12, 2, {8, 10})));
}

void check_none_dominance() {
  const std::vector<std::string> names{"household_set_table",  "household_put_groceries", "household_prepare_food",
                                       "household_load_dishwasher", "kitchen_burger", "kitchen_pasta",
                                       "kitchen_ramen", "kitchen_steak_fries", "tiny/oracle_request",
                                       "tiny/oracle_share"};
  int bad = 0, decisions = 0, spoke = 0;
  for (int i = 0; i < 50; ++i) {
    const json raw = fixtures::scenario(names[i % names.size()]);
    WorldState s = load_scenario(instantiate_scenario(raw, static_cast<uint64_t>(i / names.size())));
    const Layout& l = s.layout();
    const int h = l.human(), r = l.assistant();
    AgentConfig cfg;
    HumanProxy human(s, h, l.true_goal, cfg.goma.planner, i, !l.goal_known);
    Assistant robot(Variant::goma, s, r, cfg, i);
    std::vector<Utterance> to_h, to_r;
    for (int t = 0; t < 8 && !goal_satisfied(s, l.goal_space[l.true_goal]); ++t) {
      auto oh = human.step(observe(s, h), to_h, legal_actions(s, h));
      auto orr = robot.step(observe(s, r), to_r, legal_actions(s, r));
      const Decision& d = robot.last_decision();
      ++decisions;
      bool any_positive = false;
      for (const auto& c : d.candidates) any_positive = any_positive || c.reward > 0.0;
      if (!any_positive && !d.utterance.is_none()) ++bad;
      if (!d.utterance.is_none()) {
        ++spoke;
        for (const auto& c : d.candidates)
          if (c.utterance == d.utterance && c.reward <= 0.0) ++bad;
      }
      to_h = orr.utterances;
      to_r = oh.utterances;
      std::vector<Action> acts(2);
      acts[h] = oh.action;
      acts[r] = orr.action;
      s = step(s, acts).state;
    }
  }
  report("none_dominance", bad == 0, fmt("50 scenario instances, %d decisions, %d spoke, %d violations", decisions, spoke, bad));
}

void check_cost_monotone() {
  const std::vector<double> costs{0.5, 1.0, 2.0, 4.0};
  std::vector<int> total(costs.size(), 0);
  int bad = 0;
  for (const std::string name : {"tiny/oracle_request", "household_set_table", "household_put_groceries", "kitchen_ramen"}) {
    for (uint64_t seed = 0; seed < 3; ++seed) {
      EpisodeConfig cfg;
      cfg.seed = seed;
      auto counts = utterance_counts_by_cost(fixtures::scenario(name), cfg, costs, 20);
      for (size_t i = 0; i < costs.size(); ++i) {
        total[i] += counts[i];
        if (i && counts[i] > counts[i - 1]) ++bad;
      }
    }
  }
  report("cost_monotone", bad == 0,
         fmt("non-None counts at C=0.5,1,2,4: %d %d %d %d", total[0], total[1], total[2], total[3]));
}

void check_oracle() {
  int episodes = 0, mismatches = 0, ties = 0, spoken = 0, failed = 0;
  std::string first;
  for (const std::string name : {"tiny/oracle_share", "tiny/oracle_request"}) {
    const json raw = fixtures::scenario(name);
    for (uint64_t seed = 0; seed < 20; ++seed) {
      auto r = oracle::check_episode(raw, seed);
      ++episodes;
      mismatches += r.mismatches;
      ties += r.ties;
      spoken += r.utterances;
      failed += r.success ? 0 : 1;
      if (first.empty() && !r.first_mismatch.empty()) first = name + " seed " + std::to_string(seed) + " " + r.first_mismatch;
    }
  }
  report("oracle_equivalence", mismatches == 0,
         fmt("%d episodes, %d utterances, %d mismatches, %d exact ties, %d unfinished%s", episodes, spoken, mismatches,
             ties, failed, first.empty() ? "" : (" first: " + first).c_str()));
}

}  // namespace

int main(int argc, char** argv) {
  std::string report_path = argc > 1 ? argv[1] : "";

  const Suite suite = load_suite(fixtures::source("suites/default.json"));
  const auto t0 = std::chrono::steady_clock::now();
  auto rows = run_suite(suite, {});
  const double minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;

  int failures = 0;
  for (const auto& r : rows) failures += r.success && r.error.empty() ? 0 : 1;
  std::printf("suite: %zu episodes, %d unfinished, %.2f min\n", rows.size(), failures, minutes);

  auto directional = [&](const std::string& name, Variant other, std::optional<Family> fam) {
    auto t = compare_conditions(rows, Variant::goma, other, fam);
    report(name, t.better > t.worse && t.p < 0.05, sign_detail(t));
  };
  directional("goma_beats_nocomm", Variant::nocomm, std::nullopt);
  directional("goma_beats_heur_kitchen", Variant::heur, Family::kitchen);
  directional("goma_beats_goalag_household", Variant::goalag, Family::household);

  {
    bool ok = true;
    std::string detail;
    for (Variant v : {Variant::nocomm, Variant::heur, Variant::goalag, Variant::goma}) {
      const double s = condition_mean(rows, v, std::nullopt, &MetricsRow::speedup);
      ok = ok && s > 0.0;
      detail += std::string(to_string(v)) + fmt("=%.3f ", s);
    }
    report("speedup_positive", ok, detail);
  }
  report("runtime_under_10min", minutes < 10.0, fmt("%.2f min", minutes));
  {
    const double g = condition_mean(rows, Variant::goma, Family::kitchen, &MetricsRow::coldness);
    const double h = condition_mean(rows, Variant::heur, Family::kitchen, &MetricsRow::coldness);
    const double n = condition_mean(rows, Variant::nocomm, Family::kitchen, &MetricsRow::coldness);
    report("kitchen_coldness", g <= h && g <= n, fmt("goma=%.2f heur=%.2f nocomm=%.2f", g, h, n));
  }

  {
    // Rerun part of the suite and compare rows byte for byte.
    Suite part = suite;
    part.scenarios = {suite.scenarios[0], suite.scenarios.back()};
    auto again = run_suite(part, {});
    std::vector<MetricsRow> expected;
    for (const auto& r : rows)
      for (const auto& e : part.scenarios)
        if (r.scenario == e.config.at("id").get<std::string>()) expected.push_back(r);
    EpisodeConfig cfg;
    cfg.seed = 4;
    const json raw = fixtures::scenario("household_prepare_food");
    auto a = run_episode(raw, Variant::goma, cfg), b = run_episode(raw, Variant::goma, cfg);
    std::string la, lb;
    for (const auto& j : a.log) la += j.dump() + "\n";
    for (const auto& j : b.log) lb += j.dump() + "\n";
    report("seed_determinism", metrics_csv(again) == metrics_csv(expected) && la == lb,
           fmt("%zu rerun rows, log bytes %zu", again.size(), la.size()));
  }

  check_oracle();
  check_kl();
  check_knowledge_monotone();
  check_merge();
  check_none_dominance();
  check_normalization();
  check_hand_bayes();
  check_metrics();
  check_cost_monotone();

  int unexpected = 0;
  for (const auto& l : lines)
    if (!l.pass && !kKnownFailures.count(l.name)) ++unexpected;
  int failed = 0;
  for (const auto& l : lines) failed += l.pass ? 0 : 1;
  std::printf("%d criteria, %d failed, %d unexpected failures\n", static_cast<int>(lines.size()), failed, unexpected);

  if (!report_path.empty()) {
    std::ofstream out(report_path);
    for (const auto& l : lines) out << (l.pass ? "PASS " : "FAIL ") << l.name << "  " << l.detail << "\n";
    out << "\n" << report_md(rows);
  }
  return unexpected == 0 ? 0 : 1;
}
