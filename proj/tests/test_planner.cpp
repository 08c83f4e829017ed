#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <unordered_map>

#include "fixtures.hpp"
#include "goma/planner.hpp"

using namespace goma;

namespace {

std::string key_of(const WorldState& s) {
  std::string k;
  for (const auto& o : s.objects) k += std::to_string(o.location) + ":" + std::to_string(int(o.status)) + ",";
  for (auto f : s.open) k += f ? '1' : '0';
  for (const auto& a : s.agents) k += "|" + std::to_string(a.room) + ":" + std::to_string(a.held);
  return k;
}

// Household goal test where anything in the partner's hand already counts.
bool done_with_partner(const WorldState& s, const Goal& g, int partner) {
  const Layout& l = s.layout();
  for (const auto& p : g.predicates) {
    int n = 0;
    for (size_t o = 0; o < s.objects.size(); ++o) {
      if (std::find(p.categories.begin(), p.categories.end(), l.objects[o].category) == p.categories.end()) continue;
      if (s.objects[o].location == p.target || s.objects[o].location == l.hand_location(partner)) ++n;
    }
    if (n < p.count) return false;
  }
  return true;
}

// Breadth-first search over the real dynamics with the partner standing still.
double bfs_value(const WorldState& start, int goal, int agent, int horizon) {
  const Layout& l = start.layout();
  const Goal& g = l.goal_space[goal];
  const int partner = agent == 0 ? 1 : 0;
  if (done_with_partner(start, g, partner)) return 0.0;
  std::unordered_map<std::string, int> depth{{key_of(start), 0}};
  std::deque<WorldState> frontier{start};
  while (!frontier.empty()) {
    WorldState s = frontier.front();
    frontier.pop_front();
    const int d = depth[key_of(s)];
    if (d >= horizon) continue;
    for (const auto& a : legal_actions(s, agent)) {
      WorldState n = s;
      apply_action(n, agent, a);
      if (!depth.emplace(key_of(n), d + 1).second) continue;
      if (done_with_partner(n, g, partner)) return d + 1;
      frontier.push_back(n);
    }
  }
  return 10.0 * horizon;
}

std::vector<double> oracle_softmax(const std::vector<double>& q, double tau, double eps) {
  std::vector<double> p(q.size());
  double z = 0.0;
  for (size_t i = 0; i < q.size(); ++i) z += std::exp(q[i] / tau);
  for (size_t i = 0; i < q.size(); ++i) p[i] = (1.0 - q.size() * eps) * std::exp(q[i] / tau) / z + eps;
  return p;
}

// Independent household policy: the optimistic softmax over unsolved samples.
std::optional<std::vector<double>> oracle_policy(const Planner& planner, const Belief0& b, int goal, int agent,
                                                 const std::vector<Action>& actions, const Pose& pose) {
  const auto& cfg = planner.config();
  const auto samples = planner.determinize(b, goal, agent, pose);
  std::vector<double> best(actions.size(), -1e300);
  bool any_open = false, all_stuck = true;
  for (const auto& smp : samples) {
    const double v0 = bfs_value(smp.state, goal, agent, cfg.horizon);
    if (v0 < 10.0 * cfg.horizon) all_stuck = false;
    if (v0 == 0.0) continue;
    any_open = true;
    for (size_t i = 0; i < actions.size(); ++i) {
      WorldState n = smp.state;
      if (is_legal(n, agent, actions[i])) apply_action(n, agent, actions[i]);
      advance_clock(n);
      best[i] = std::max(best[i], -(1.0 + bfs_value(n, goal, agent, cfg.horizon)));
    }
  }
  if (all_stuck || !any_open) return std::nullopt;
  return oracle_softmax(best, cfg.tau, cfg.epsilon);
}

}  // namespace

TEST_CASE("a single legal action keeps almost all the mass") {
  auto p = softmax_policy({-3.0}, 1.0, 1e-6);
  CHECK(p[0] >= 1.0 - 1e-6);
  WorldState s = load_scenario(fixtures::two_room_house());
  Belief0 b = init_uniform(s, s.layout().human());
  Planner planner;
  Pose pose = pose_from_belief(b);
  Policy pol = planner.plan(b, s.layout().find_goal("set_table"), s.layout().human(), {Action::wait()}, pose);
  CHECK(pol.probs[0] >= 1.0 - 1e-6);
}

TEST_CASE("a much worse action gets about epsilon at low temperature") {
  auto p = softmax_policy({0.0, -50.0}, 0.1, 1e-6);
  CHECK(p[1] == doctest::Approx(1e-6).epsilon(1e-3));
  CHECK(p[0] + p[1] == doctest::Approx(1.0));
}

TEST_CASE("a satisfied goal makes waiting best at zero cost") {
  json cfg = fixtures::two_room_house();
  cfg["objects"][1]["location"] = "kitchentable.1";
  cfg["objects"][2]["location"] = "kitchentable.1";
  WorldState s = load_scenario(cfg);
  const int h = s.layout().human();
  Belief0 b = update_from_observation(init_uniform(s, h), observe(s, h));
  Planner planner;
  Policy pol = planner.plan(b, s.layout().find_goal("set_table"), h);
  const int w = pol.index_of(Action::wait());
  REQUIRE(w >= 0);
  CHECK(pol.probs[w] == *std::max_element(pol.probs.begin(), pol.probs.end()));
  CHECK(pol.expected_cost == 0.0);
}

TEST_CASE("mirror-image rooms get the same probability") {
  json cfg = json::parse(R"({
    "id": "fork_in_the_road", "family": "household",
    "rooms": [{"id": "hall", "adjacent": ["east", "west"]}, {"id": "east"}, {"id": "west"}],
    "containers": [],
    "surfaces": [{"id": "table.1", "room": "hall"}, {"id": "shelf.2", "room": "east"}, {"id": "shelf.3", "room": "west"}],
    "agents": [{"id": "human", "role": "human", "room": "hall"}, {"id": "robot", "role": "assistant", "room": "east"}],
    "goal_space": [{"name": "fetch", "predicates": [{"categories": ["apple"], "target": "table.1", "count": 1}]}],
    "true_goal": "fetch",
    "objects": [{"id": "apple.1", "category": "apple", "location": "shelf.2", "candidates": ["shelf.2", "shelf.3"]}]
  })");
  WorldState s = load_scenario(cfg);
  const Layout& l = s.layout();
  Belief0 b = init_uniform(s, l.human());
  const int apple = b.schema().find("apple.1");
  std::vector<double> p(b.dist(apple).size(), 0.0);
  p[b.schema().value_index(apple, {l.find_location("shelf.2"), Status::raw})] = 0.5;
  p[b.schema().value_index(apple, {l.find_location("shelf.3"), Status::raw})] = 0.5;
  b = merge(b, apple, p);
  Planner planner;
  Policy pol = planner.plan(b, 0, l.human());
  const double east = pol.prob(Action::move(l.find_room("east")));
  const double west = pol.prob(Action::move(l.find_room("west")));
  CHECK(east == doctest::Approx(west).epsilon(1e-12));
  CHECK(east > pol.prob(Action::wait()));
}

TEST_CASE("softmax keeps the order of the values") {
  Rng rng(21);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> q(2 + rng.below(8));
    for (auto& x : q) x = -rng.uniform() * 20.0;
    const double tau = 0.05 + rng.uniform() * 3.0;
    auto p = softmax_policy(q, tau, 1e-6);
    double total = 0.0;
    for (size_t a = 0; a < q.size(); ++a) {
      total += p[a];
      for (size_t c = 0; c < q.size(); ++c)
        if (q[a] > q[c]) CHECK(p[a] >= p[c]);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    auto ref = oracle_softmax(q, tau, 1e-6);
    for (size_t a = 0; a < q.size(); ++a) CHECK(p[a] == doctest::Approx(ref[a]).epsilon(1e-9));
  }
}

TEST_CASE("a cold softmax puts almost everything on a clear winner") {
  Rng rng(22);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> q(2 + rng.below(10));
    for (auto& x : q) x = -5.0 - rng.uniform() * 20.0;
    const size_t top = rng.below(q.size());
    q[top] = -rng.uniform() * 4.0;
    for (size_t a = 0; a < q.size(); ++a)
      if (a != top) q[a] = std::min(q[a], q[top] - 1.0);
    CHECK(softmax_policy(q, 0.01, 1e-6)[top] >= 0.99);
  }
}

TEST_CASE("planning is deterministic") {
  for (const std::string name : {"household_set_table", "kitchen_burger"}) {
    WorldState s = fixtures::kitchen_state(name, 2);
    const int h = s.layout().human();
    Belief0 b = update_from_observation(init_uniform(s, h), observe(s, h));
    Planner a, c;
    Policy pa = a.plan(b, s.layout().true_goal, h);
    Policy pc = c.plan(b, s.layout().true_goal, h);
    CHECK(pa.probs == pc.probs);
    CHECK(pa.q == pc.q);
    CHECK(a.plan(b, s.layout().true_goal, h).probs == pa.probs);
  }
}

TEST_CASE("exact determinizations carry the product of the marginals") {
  WorldState s = fixtures::kitchen_state("tiny/oracle_request", 0);
  const Layout& l = s.layout();
  const int h = l.human();
  Belief0 b = init_uniform(s, h);
  Planner planner;
  const int goal = l.find_goal("set_table");
  auto samples = planner.determinize(b, goal, h, pose_from_belief(b));
  double total = 0.0;
  for (const auto& smp : samples) total += smp.weight;
  CHECK(total == doctest::Approx(1.0));
  // fork and plate each spread over three places plus the robot's hand.
  CHECK(samples.size() == 4 * 4 - 1);
  for (const auto& smp : samples) CHECK(smp.weight == doctest::Approx(1.0 / 15.0));
}

TEST_CASE("policy likelihoods match an independent search") {
  int checked = 0;
  for (const std::string name : {"tiny/oracle_request", "tiny/oracle_share"}) {
    for (uint64_t seed = 0; seed < 4; ++seed) {
      WorldState s = fixtures::kitchen_state(name, seed);
      const Layout& l = s.layout();
      const int h = l.human();
      Belief0 b = init_uniform(s, h);
      observe_into(b, observe(s, h));
      Rng rng(seed);
      for (int t = 0; t < 12; ++t) {
        for (size_t goal = 0; goal < l.goal_space.size(); ++goal) {
          Planner planner;
          const Pose pose = pose_from_belief(b);
          const auto actions = legal_actions(s, h);
          Policy pol = planner.plan(b, static_cast<int>(goal), h, actions, pose);
          auto ref = oracle_policy(planner, b, static_cast<int>(goal), h, actions, pose);
          if (!ref) continue;
          ++checked;
          for (size_t i = 0; i < actions.size(); ++i)
            CHECK(pol.probs[i] == doctest::Approx((*ref)[i]).epsilon(1e-9));
        }
        std::vector<Action> legal;
        for (const auto& a : legal_actions(s, h)) {
          const auto& c = a.type == ActionType::put ? l.objects[a.target].candidates : std::vector<int>{};
          if (a.type != ActionType::put || std::count(c.begin(), c.end(), a.destination)) legal.push_back(a);
        }
        auto res = step(s, {legal[rng.below(legal.size())], Action::wait()});
        s = res.state;
        observe_into(b, res.observations[h]);
      }
    }
  }
  CHECK(checked > 50);
}
