#include "goma/goma.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace goma {

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size())
    throw std::invalid_argument("kl_divergence: supports differ (" + std::to_string(p.size()) + " vs " +
                                std::to_string(q.size()) + ")");
  double kl = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) throw std::invalid_argument("kl_divergence: q has no mass where p does");
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(kl, 0.0);
}

std::vector<double> mean_policy(const std::vector<Policy>& policies) {
  if (policies.empty()) return {};
  std::vector<double> mean(policies.front().probs.size(), 0.0);
  for (const auto& p : policies) {
    if (p.probs.size() != mean.size()) throw std::invalid_argument("mean_policy: supports differ");
    for (size_t i = 0; i < mean.size(); ++i) mean[i] += p.probs[i];
  }
  double total = 0.0;
  for (double x : mean) total += x;
  if (total > 0.0)
    for (double& x : mean) x /= total;
  return mean;
}

PlanBattery build_battery(const Mind& m, Planner& planner, const std::vector<Action>& robot_actions) {
  PlanBattery battery;
  battery.robot_actions = robot_actions;
  battery.robot_pose = pose_from_belief(m.robot);
  for (size_t l = 0; l < m.particles.size(); ++l) {
    const int g = m.particle_goals[l];
    battery.robot_pre.push_back(planner.plan(m.robot, g, m.self, robot_actions, battery.robot_pose));
    battery.human_pre.push_back(planner.plan(m.particles[l], g, m.human, m.human_actions, m.human_pose));
  }
  return battery;
}

namespace {

bool affects_goal(const Layout& l, const SubState& ss, int goal) {
  if (ss.kind == SubStateKind::container) return true;
  return l.goal_space[goal].mentions_category(l.objects[ss.index].category);
}

double kl_of_means(const std::vector<Policy>& post, const std::vector<Policy>& pre) {
  auto p = mean_policy(post);
  auto q = mean_policy(pre);
  return kl_divergence(p, q);
}

}  // namespace

ProxyReward reward_share(int n, const Mind& m, const PlanBattery& battery, Planner& planner, double cost) {
  const Layout& l = m.robot.layout();
  const SubState& ss = m.robot.schema()[n];
  auto content = m.robot.dist(n);
  std::vector<Policy> post;
  post.reserve(m.particles.size());
  for (size_t i = 0; i < m.particles.size(); ++i) {
    const int g = m.particle_goals[i];
    if (!affects_goal(l, ss, g)) {
      post.push_back(battery.human_pre[i]);
      continue;
    }
    Belief0 merged = merge(m.particles[i], n, content);
    post.push_back(planner.plan(merged, g, m.human, m.human_actions, m.human_pose));
  }
  ProxyReward r;
  r.utterance = make_share(m.robot, n);
  r.kl = kl_of_means(post, battery.human_pre);
  r.reward = r.kl - cost;
  return r;
}

ProxyReward reward_request(int n, const Mind& m, const PlanBattery& battery, Planner& planner, double cost) {
  const Layout& l = m.robot.layout();
  const SubState& ss = m.robot.schema()[n];
  std::vector<Policy> post;
  post.reserve(m.particles.size());
  for (size_t i = 0; i < m.particles.size(); ++i) {
    const int g = m.particle_goals[i];
    if (!affects_goal(l, ss, g)) {
      post.push_back(battery.robot_pre[i]);
      continue;
    }
    Belief0 merged = merge(m.robot, n, m.particles[i].dist(n));
    post.push_back(planner.plan(merged, g, m.self, battery.robot_actions, battery.robot_pose));
  }
  ProxyReward r;
  r.utterance = make_request(m.self, n);
  r.utterance.text = render_utterance(m.robot.schema(), r.utterance);
  r.kl = kl_of_means(post, battery.robot_pre);
  r.reward = r.kl - cost;
  return r;
}

ProxyReward reward_none() { return ProxyReward{}; }

ProxyReward select_utterance(const BeliefSchema& schema, const std::vector<ProxyReward>& candidates) {
  auto rank = [](UtteranceKind k) {
    switch (k) {
      case UtteranceKind::none: return 0;
      case UtteranceKind::share: return 1;
      case UtteranceKind::request: return 2;
      default: return 3;
    }
  };
  auto before = [&](const ProxyReward& a, const ProxyReward& b) {
    if (a.reward != b.reward) return a.reward > b.reward;
    if (rank(a.utterance.kind) != rank(b.utterance.kind)) return rank(a.utterance.kind) < rank(b.utterance.kind);
    if (a.utterance.is_none()) return false;
    return schema[a.utterance.substate].id < schema[b.utterance.substate].id;
  };
  ProxyReward best = reward_none();
  for (const auto& c : candidates)
    if (before(c, best)) best = c;
  return best;
}

Action select_action(const std::vector<Policy>& robot_policies) {
  if (robot_policies.empty() || robot_policies.front().actions.empty()) return Action::wait();
  auto mean = mean_policy(robot_policies);
  size_t best = 0;
  for (size_t i = 1; i < mean.size(); ++i)
    if (mean[i] > mean[best]) best = i;
  return robot_policies.front().actions[best];
}

std::vector<ProxyReward> score_utterances(const Mind& m, const PlanBattery& battery, Planner& planner, double cost) {
  std::vector<ProxyReward> out;
  std::vector<int> shares;
  for (const auto& item : knowledge(m.robot, m.cfg.h_max)) shares.push_back(item.substate);
  std::vector<int> requests = inferred_human_knowledge(m, m.cfg.h_max);
  const auto& schema = m.robot.schema();
  auto by_id = [&](int a, int b) { return schema[a].id < schema[b].id; };
  std::sort(shares.begin(), shares.end(), by_id);
  std::sort(requests.begin(), requests.end(), by_id);
  for (int n : shares) out.push_back(reward_share(n, m, battery, planner, cost));
  for (int n : requests)
    if (!m.pending_requests.count(n)) out.push_back(reward_request(n, m, battery, planner, cost));
  return out;
}

void prepare_mind(Mind& m, const GomaStepInput& in, Planner& planner, Rng& rng) {
  if (!in.o_R) throw std::invalid_argument("prepare_mind: missing observation");
  assimilate(m, *in.o_R, in.u_H, in.u_R_prev, rng);
  m.pending_requests.clear();
  for (const auto& u : in.u_R_prev)
    if (u.kind == UtteranceKind::request) m.pending_requests.insert(u.substate);
  std::optional<Action> a_H;
  const int clock = in.o_R->clock;
  for (const auto& sa : in.o_R->agents) {
    if (sa.agent != m.human) continue;
    // The action only counts as evidence when the state it was taken in was seen too.
    if (clock > 0 && m.human_seen_at == clock - 1) a_H = sa.last_action;
    m.human_seen_at = clock;
  }
  update_goal_posterior(m, a_H, in.u_H, planner);
  sample_particle_goals(m, rng);
}

Decision decide(Mind& m, const std::vector<Action>& robot_actions, Planner& planner, double cost, bool communicate) {
  Decision d;
  PlanBattery battery = build_battery(m, planner, robot_actions);
  if (communicate) {
    d.candidates = score_utterances(m, battery, planner, cost);
    d.utterance = select_utterance(m.robot.schema(), d.candidates).utterance;
  }
  d.mean_policy = mean_policy(battery.robot_pre);
  d.action = select_action(battery.robot_pre);
  d.exploratory = std::any_of(battery.robot_pre.begin(), battery.robot_pre.end(),
                              [](const Policy& p) { return p.exploratory; });
  save_snapshot(m);
  return d;
}

Decision goma_step(Mind& m, const GomaStepInput& in, Planner& planner, Rng& rng, double cost) {
  prepare_mind(m, in, planner, rng);
  return decide(m, in.robot_actions, planner, cost, true);
}

json decision_to_json(const BeliefSchema& schema, const Decision& d) {
  const Layout& l = schema.layout();
  json j;
  j["action"] = encode(l, d.action);
  j["utterance"] = d.utterance.is_none() ? json(nullptr) : utterance_to_json(schema, d.utterance);
  json cands = json::array();
  for (const auto& c : d.candidates) {
    cands.push_back({{"kind", std::string(to_string(c.utterance.kind))},
                     {"substate", schema[c.utterance.substate].id},
                     {"kl", c.kl},
                     {"reward", c.reward}});
  }
  j["candidates"] = cands;
  j["exploratory"] = d.exploratory;
  return j;
}

}  // namespace goma
