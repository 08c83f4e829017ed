#include "goma/mind.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace goma {

std::set<int> seen_substates(const BeliefSchema& schema, const Observation& o) {
  std::set<int> out;
  for (const auto& so : o.objects) out.insert(schema.object_substate(so.object));
  for (const auto& so : o.delivered) out.insert(schema.object_substate(so.object));
  for (const auto& [c, open] : o.containers) out.insert(schema.container_substate(c));
  return out;
}

Mind make_mind(const WorldState& initial, int self, MindConfig cfg) {
  const Layout& l = initial.layout();
  if (cfg.particles < 1) throw std::invalid_argument("a mind needs at least one particle");
  Mind m;
  m.self = self;
  m.human = l.human();
  m.cfg = cfg;
  auto schema = make_schema(initial.layout_ptr());
  m.robot = init_uniform(schema, self);
  for (int i = 0; i < cfg.particles; ++i) m.particles.push_back(init_uniform(schema, m.human));
  const double n = static_cast<double>(l.goal_space.size());
  m.goal_posterior.assign(l.goal_space.size(), 1.0 / n);
  if (l.goal_known) {
    m.fixed_goal = l.true_goal;
    std::fill(m.goal_posterior.begin(), m.goal_posterior.end(), 0.0);
    m.goal_posterior[l.true_goal] = 1.0;
  }
  m.b_gR_human = m.fixed_goal;
  m.particle_goals.assign(cfg.particles, m.fixed_goal >= 0 ? m.fixed_goal : 0);
  m.human_pose = pose_from_belief(m.robot);
  m.human_pose.held = -1;
  return m;
}

WorldState sample_world(const Belief0& b, Rng& rng) {
  const Layout& l = b.layout();
  const BeliefSchema& schema = b.schema();
  WorldState s(schema.layout_ptr());
  for (size_t a = 0; a < l.agents.size(); ++a) s.agents[a].room = b.room(static_cast<int>(a));
  for (size_t c = 0; c < l.containers.size(); ++c)
    s.open[c] = rng.bernoulli(b.dist(schema.container_substate(static_cast<int>(c)))[1]) ? 1 : 0;
  const int own_hand = l.hand_location(b.owner());
  if (b.held() >= 0) {
    s.objects[b.held()].location = own_hand;
    s.agents[b.owner()].held = b.held();
  }
  for (size_t o = 0; o < l.objects.size(); ++o) {
    const int n = schema.object_substate(static_cast<int>(o));
    const auto& vals = schema[n].values;
    auto d = b.dist(n);
    std::vector<double> w(vals.size(), 0.0);
    if (static_cast<int>(o) == b.held()) {
      // Status is still uncertain in principle; location is not.
      for (size_t i = 0; i < vals.size(); ++i)
        if (vals[i].location == own_hand) w[i] = d[i];
    } else {
      w.assign(d.begin(), d.end());
      for (size_t i = 0; i < vals.size(); ++i)
        if (l.location_kind(vals[i].location) == LocationKind::hand &&
            s.agents[l.location_index(vals[i].location)].held >= 0)
          w[i] = 0.0;
    }
    int pick = rng.categorical(w);
    if (pick < 0) {
      if (static_cast<int>(o) == b.held()) {
        s.objects[o].status = Status::raw;
        continue;
      }
      for (size_t i = 0; i < vals.size() && pick < 0; ++i)
        if (l.location_kind(vals[i].location) != LocationKind::hand) pick = static_cast<int>(i);
      if (pick < 0) pick = 0;
    }
    const Value& v = vals[pick];
    s.objects[o].location = v.location;
    s.objects[o].status = v.status;
    if (v.status == Status::cooked) s.objects[o].cooked_at = 0;
    if (l.location_kind(v.location) == LocationKind::hand) s.agents[l.location_index(v.location)].held = static_cast<int>(o);
  }
  s.clock = b.clock();
  return s;
}

void refresh_human_model(Mind& m) {
  const Layout& l = m.robot.layout();
  if (m.human_pose.held >= 0 &&
      m.robot.prob(m.robot.schema().object_substate(m.human_pose.held), {l.hand_location(m.human), Status::raw}) +
              m.robot.prob(m.robot.schema().object_substate(m.human_pose.held), {l.hand_location(m.human), Status::chopped}) +
              m.robot.prob(m.robot.schema().object_substate(m.human_pose.held), {l.hand_location(m.human), Status::cooked}) <=
          0.0)
    m.human_pose.held = -1;
  m.human_pose.rooms.clear();
  for (size_t a = 0; a < m.robot.layout().agents.size(); ++a)
    m.human_pose.rooms.push_back(m.robot.room(static_cast<int>(a)));
  m.human_actions = action_set(m.robot, m.human, m.human_pose);
}

void assimilate(Mind& m, const Observation& o_R, const std::vector<Utterance>& u_H,
                const std::vector<Utterance>& u_R_sent, Rng& rng) {
  observe_into(m.robot, o_R);
  const auto seen_now = seen_substates(m.robot.schema(), o_R);
  for (const auto& u : u_H)
    if (u.kind == UtteranceKind::share && !seen_now.count(u.substate))
      m.robot.set_dist(u.substate, u.content, o_R.clock);

  for (const auto& sa : o_R.agents)
    if (sa.agent == m.human) m.human_pose.held = sa.held;
  refresh_human_model(m);

  for (auto& particle : m.particles) {
    WorldState w = sample_world(m.robot, rng);
    w.clock = o_R.clock;
    if (m.human_pose.held >= 0 && w.agents[m.human].held != m.human_pose.held) {
      // Keep the human's hand as last seen.
      const Layout& l = w.layout();
      if (int other = w.agents[m.human].held; other >= 0) w.objects[other].location = l.floor_location(w.agents[m.human].room);
      if (int holder = l.location_kind(w.objects[m.human_pose.held].location) == LocationKind::hand
                           ? l.location_index(w.objects[m.human_pose.held].location)
                           : -1;
          holder >= 0)
        w.agents[holder].held = -1;
      w.objects[m.human_pose.held].location = l.hand_location(m.human);
      w.agents[m.human].held = m.human_pose.held;
    }
    const Observation o_H = observe(w, m.human);
    observe_into(particle, o_H);
    const auto seen = seen_substates(particle.schema(), o_H);
    for (const auto& u : u_R_sent)
      if (u.kind == UtteranceKind::share && !seen.count(u.substate)) particle.set_dist(u.substate, u.content, o_R.clock);
    for (const auto& u : u_H)
      if (u.kind == UtteranceKind::share && !seen.count(u.substate)) particle.set_dist(u.substate, u.content, o_R.clock);
    for (const auto& u : u_H) {
      if (u.kind != UtteranceKind::unknown || seen.count(u.substate) || particle.entropy(u.substate) >= m.cfg.h_max)
        continue;
      // The human says it does not know: fall back to the robot's view, or to no information.
      const int n = u.substate;
      if (m.robot.entropy(n) >= m.cfg.h_max) {
        auto d = m.robot.dist(n);
        particle.set_dist(n, std::vector<double>(d.begin(), d.end()), o_R.clock);
      } else {
        particle.set_dist(n, std::vector<double>(m.robot.schema()[n].values.size(), 1.0 / m.robot.schema()[n].values.size()),
                          o_R.clock);
      }
    }
  }
}

std::vector<double> bayes_update(const std::vector<double>& prior, const std::vector<double>& likelihood) {
  std::vector<double> post(prior.size());
  double total = 0.0;
  for (size_t i = 0; i < prior.size(); ++i) {
    post[i] = prior[i] * likelihood[i];
    total += post[i];
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    std::fill(post.begin(), post.end(), 1.0 / static_cast<double>(post.size()));
    return post;
  }
  for (double& x : post) x /= total;
  return post;
}

double need_likelihood(const Layout&, const Goal& g, const Utterance& need, double eps_goal) {
  for (int c : need.categories)
    if (!g.mentions_category(c)) return eps_goal;
  return 1.0;
}

namespace {

// Where the human was and what it carried just before `a`, given what we see now.
std::optional<Pose> pose_before(const Mind& m, const Action& a) {
  Pose pose = m.previous.pose;
  const Layout& l = m.robot.layout();
  const int now_room = m.robot.room(m.human);
  if (a.type == ActionType::move) {
    const auto& adj = l.rooms[pose.rooms[m.human]].adjacent;
    if (std::find(adj.begin(), adj.end(), a.target) == adj.end()) return std::nullopt;
  } else {
    pose.rooms[m.human] = now_room;
  }
  switch (a.type) {
    case ActionType::grab: pose.held = -1; break;
    case ActionType::put:
    case ActionType::chop:
    case ActionType::cook: pose.held = a.target; break;
    case ActionType::serve: return std::nullopt;
    default: pose.held = m.human_pose.held; break;
  }
  pose.rooms[m.self] = m.previous.pose.rooms[m.self];
  return pose;
}

}  // namespace

void update_goal_posterior(Mind& m, const std::optional<Action>& a_H, const std::vector<Utterance>& u_H,
                           Planner& planner) {
  const Layout& l = m.robot.layout();
  if (m.fixed_goal >= 0) return;
  std::vector<double> lik(l.goal_space.size(), 1.0);
  bool evidence = false;
  if (a_H && m.previous.valid) {
    if (auto pose = pose_before(m, *a_H)) {
      std::vector<Action> actions = action_set(m.previous.robot, m.human, *pose);
      if (std::find(actions.begin(), actions.end(), *a_H) == actions.end()) {
        actions.push_back(*a_H);
        std::sort(actions.begin(), actions.end(),
                  [&](const Action& x, const Action& y) { return encode(l, x) < encode(l, y); });
      }
      for (size_t g = 0; g < l.goal_space.size(); ++g) {
        double sum = 0.0;
        for (const auto& particle : m.previous.particles)
          sum += planner.plan(particle, static_cast<int>(g), m.human, actions, *pose).prob(*a_H);
        lik[g] = sum / static_cast<double>(m.previous.particles.size());
      }
      evidence = true;
    }
  }
  for (const auto& u : u_H) {
    if (u.kind != UtteranceKind::need) continue;
    for (size_t g = 0; g < l.goal_space.size(); ++g) lik[g] *= need_likelihood(l, l.goal_space[g], u, m.cfg.eps_goal);
    evidence = true;
  }
  if (!evidence) return;
  double total = 0.0;
  for (size_t g = 0; g < lik.size(); ++g) total += m.goal_posterior[g] * lik[g];
  if (!(total > 0.0)) ++m.warnings;
  m.goal_posterior = bayes_update(m.goal_posterior, lik);
}

int sample_goal(const Mind& m, Rng& rng) {
  if (m.fixed_goal >= 0) return m.fixed_goal;
  int g = rng.categorical(m.goal_posterior);
  return g < 0 ? 0 : g;
}

void sample_particle_goals(Mind& m, Rng& rng) {
  m.particle_goals.resize(m.particles.size());
  for (auto& g : m.particle_goals) g = sample_goal(m, rng);
}

void save_snapshot(Mind& m) {
  m.previous.valid = true;
  m.previous.robot = m.robot;
  m.previous.particles = m.particles;
  m.previous.pose = m.human_pose;
}

std::vector<int> inferred_human_knowledge(const Mind& m, double h_max) {
  std::set<int> ids;
  for (const auto& p : m.particles)
    for (int n = 0; n < p.size(); ++n)
      if (p.entropy(n) < h_max) ids.insert(n);
  return {ids.begin(), ids.end()};
}

json mind_to_json(const Mind& m) {
  const Layout& l = m.robot.layout();
  json j;
  json post = json::object();
  for (size_t g = 0; g < l.goal_space.size(); ++g) post[l.goal_space[g].name] = m.goal_posterior[g];
  j["goal_posterior"] = post;
  json goals = json::array();
  for (int g : m.particle_goals) goals.push_back(l.goal_space[g].name);
  j["particle_goals"] = goals;
  j["robot_knowledge"] = knowledge(m.robot, m.cfg.h_max).size();
  json kh = json::array();
  for (int n : inferred_human_knowledge(m, m.cfg.h_max)) kh.push_back(m.robot.schema()[n].id);
  j["human_knowledge"] = kh;
  j["contradictions"] = m.robot.contradictions();
  return j;
}

}  // namespace goma
