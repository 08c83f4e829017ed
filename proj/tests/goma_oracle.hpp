#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "goma/agents.hpp"
#include "goma/harness.hpp"

namespace oracle {

inline double kl(const std::vector<double>& p, const std::vector<double>& q) {
  double d = 0.0;
  for (size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) d += p[i] * std::log(p[i] / q[i]);
  return d;
}

inline std::vector<double> mean(const std::vector<goma::Policy>& ps) {
  std::vector<double> m(ps[0].probs.size(), 0.0);
  for (const auto& p : ps)
    for (size_t i = 0; i < m.size(); ++i) m[i] += p.probs[i] / static_cast<double>(ps.size());
  double z = 0.0;
  for (double x : m) z += x;
  for (double& x : m) x /= z;
  return m;
}

struct Choice {
  goma::UtteranceKind kind = goma::UtteranceKind::none;
  int substate = -1;
  double reward = 0.0;
  double runner_up = -1e300;
};

// Brute-force utterance choice: every candidate replanned for every particle.
inline Choice choose(const goma::Mind& m, const std::vector<goma::Action>& robot_actions,
                     const goma::PlannerConfig& cfg, double cost) {
  using namespace goma;
  Planner planner(cfg);
  const auto& schema = m.robot.schema();
  const Pose rpose = pose_from_belief(m.robot);
  const size_t L = m.particles.size();
  std::vector<Policy> robot_pre, human_pre;
  for (size_t i = 0; i < L; ++i) {
    robot_pre.push_back(planner.plan(m.robot, m.particle_goals[i], m.self, robot_actions, rpose));
    human_pre.push_back(planner.plan(m.particles[i], m.particle_goals[i], m.human, m.human_actions, m.human_pose));
  }
  const auto h0 = mean(human_pre), r0 = mean(robot_pre);

  struct Cand {
    UtteranceKind kind;
    int n;
    double reward;
  };
  std::vector<Cand> cands{{UtteranceKind::none, -1, 0.0}};
  for (int n = 0; n < m.robot.size(); ++n) {
    if (!(m.robot.entropy(n) < m.cfg.h_max)) continue;
    auto d = m.robot.dist(n);
    std::vector<Policy> post;
    for (size_t i = 0; i < L; ++i)
      post.push_back(planner.plan(merge(m.particles[i], n, d), m.particle_goals[i], m.human, m.human_actions,
                                  m.human_pose));
    cands.push_back({UtteranceKind::share, n, kl(mean(post), h0) - cost});
  }
  for (int n = 0; n < m.robot.size(); ++n) {
    bool known = false;
    for (const auto& p : m.particles) known = known || p.entropy(n) < m.cfg.h_max;
    if (!known || m.pending_requests.count(n)) continue;
    std::vector<Policy> post;
    for (size_t i = 0; i < L; ++i)
      post.push_back(planner.plan(merge(m.robot, n, m.particles[i].dist(n)), m.particle_goals[i], m.self,
                                  robot_actions, rpose));
    cands.push_back({UtteranceKind::request, n, kl(mean(post), r0) - cost});
  }
  auto rank = [](UtteranceKind k) { return k == UtteranceKind::none ? 0 : k == UtteranceKind::share ? 1 : 2; };
  std::stable_sort(cands.begin(), cands.end(), [&](const Cand& a, const Cand& b) {
    if (a.reward != b.reward) return a.reward > b.reward;
    if (rank(a.kind) != rank(b.kind)) return rank(a.kind) < rank(b.kind);
    if (a.n < 0 || b.n < 0) return false;
    return schema[a.n].id < schema[b.n].id;
  });
  Choice c{cands[0].kind, cands[0].n, cands[0].reward};
  if (cands.size() > 1) c.runner_up = cands[1].reward;
  return c;
}

struct EpisodeCheck {
  int steps = 0;
  int utterances = 0;
  int mismatches = 0;
  int ties = 0;
  bool success = false;
  std::string first_mismatch;
};

// Runs the episode loop by hand and compares every assistant utterance
// with the brute-force choice.
inline EpisodeCheck check_episode(const goma::json& raw, uint64_t seed, int t_max = 80) {
  using namespace goma;
  const json scenario = instantiate_scenario(raw, seed);
  WorldState state = load_scenario(scenario);
  const Layout& l = state.layout();
  const int h = l.human(), r = l.assistant();
  AgentConfig acfg;
  const uint64_t s = mix_seed(l.seed, seed);
  HumanProxy human(state, h, l.true_goal, acfg.goma.planner, s, !l.goal_known, acfg.goma.mind.h_max);
  Assistant robot(Variant::goma, state, r, acfg, s);
  std::vector<Utterance> to_human, to_robot;
  EpisodeCheck out;
  const Goal& goal = l.goal_space[l.true_goal];
  while (state.clock < t_max && !goal_satisfied(state, goal)) {
    AgentOutput out_h = human.step(observe(state, h), to_human, legal_actions(state, h));
    const auto legal = legal_actions(state, r);
    robot.prepare(observe(state, r), to_robot);
    const Choice want = choose(robot.mind(), legal, acfg.goma.planner, acfg.goma.comm_cost);
    AgentOutput out_r = robot.decide_with(legal, acfg.goma.comm_cost);
    robot.commit(out_r);
    const Utterance got = out_r.utterances.empty() ? Utterance{} : out_r.utterances[0];
    const bool same = got.kind == want.kind && (got.is_none() || got.substate == want.substate);
    if (!same) {
      if (std::abs(want.reward - want.runner_up) < 1e-9) {
        ++out.ties;
      } else {
        ++out.mismatches;
        if (out.first_mismatch.empty())
          out.first_mismatch = "t=" + std::to_string(state.clock) + " got " + std::string(to_string(got.kind)) +
                               " want " + std::string(to_string(want.kind));
      }
    }
    out.utterances += static_cast<int>(out_r.utterances.size());
    to_human = out_r.utterances;
    to_robot = out_h.utterances;
    std::vector<Action> acts(2);
    acts[h] = out_h.action;
    acts[r] = out_r.action;
    state = step(state, acts).state;
    ++out.steps;
  }
  out.success = goal_satisfied(state, goal);
  return out;
}

}  // namespace oracle
