#include "goma/planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <queue>
#include <stdexcept>

namespace goma {

void PlannerConfig::validate() const {
  if (budget <= 0) throw std::invalid_argument("planner budget must be positive");
  if (horizon < 1) throw std::invalid_argument("planner horizon must be at least 1");
  if (!(tau > 0.0)) throw std::invalid_argument("planner tau must be positive");
  if (samples < 1) throw std::invalid_argument("planner needs at least one sample");
  if (epsilon < 0.0) throw std::invalid_argument("epsilon must be non-negative");
}

double Policy::prob(const Action& a) const {
  int i = index_of(a);
  return i < 0 ? 0.0 : probs[i];
}

int Policy::index_of(const Action& a) const {
  for (size_t i = 0; i < actions.size(); ++i)
    if (actions[i] == a) return static_cast<int>(i);
  return -1;
}

std::vector<int> relevant_objects(const Layout& l, const Goal& goal) {
  std::vector<int> out;
  for (size_t o = 0; o < l.objects.size(); ++o)
    if (goal.mentions_category(l.objects[o].category)) out.push_back(static_cast<int>(o));
  return out;
}

std::vector<double> softmax_policy(const std::vector<double>& q, double tau, double epsilon) {
  std::vector<double> p(q.size(), 0.0);
  if (q.empty()) return p;
  const double top = *std::max_element(q.begin(), q.end());
  double total = 0.0;
  for (size_t i = 0; i < q.size(); ++i) {
    p[i] = std::exp((q[i] - top) / tau);
    total += p[i];
  }
  const double n = static_cast<double>(q.size());
  for (double& x : p) x = (1.0 - n * epsilon) * (x / total) + epsilon;
  return p;
}

Pose pose_from_belief(const Belief0& b) {
  Pose pose;
  for (size_t a = 0; a < b.layout().agents.size(); ++a) pose.rooms.push_back(b.room(static_cast<int>(a)));
  pose.held = b.held();
  return pose;
}

namespace {

bool is_hand(const Layout& l, int loc) { return l.location_kind(loc) == LocationKind::hand; }

// Puts every non-relevant object on the planning agent's floor so actions on
// them stay legal without depending on where the belief thinks they are.
WorldState base_state(const Belief0& b, const Pose& pose, int agent, const std::vector<uint8_t>& relevant) {
  const Layout& l = b.layout();
  const BeliefSchema& schema = b.schema();
  WorldState s(schema.layout_ptr());
  for (size_t c = 0; c < l.containers.size(); ++c)
    s.open[c] = b.dist(schema.container_substate(static_cast<int>(c)))[1] > 0.5 ? 1 : 0;
  for (size_t a = 0; a < l.agents.size(); ++a) s.agents[a].room = pose.rooms[a];
  for (size_t o = 0; o < l.objects.size(); ++o) {
    if (relevant[o]) continue;
    s.objects[o].location = l.floor_location(pose.rooms[agent]);
    s.objects[o].status = Status::raw;
  }
  if (pose.held >= 0) {
    s.objects[pose.held].location = l.hand_location(agent);
    s.agents[agent].held = pose.held;
    const int n = schema.object_substate(pose.held);
    const auto& vals = schema[n].values;
    auto d = b.dist(n);
    int best = -1;
    for (size_t i = 0; i < vals.size(); ++i)
      if (vals[i].location == l.hand_location(agent) && (best < 0 || d[i] > d[best])) best = static_cast<int>(i);
    if (best < 0) best = b.mode(n);
    s.objects[pose.held].status = vals[best].status;
    if (vals[best].status == Status::cooked) s.objects[pose.held].cooked_at = 0;
  }
  return s;
}

void place(WorldState& s, int o, Value v) {
  const Layout& l = s.layout();
  s.objects[o].location = v.location;
  s.objects[o].status = v.status;
  if (v.status == Status::cooked) {
    s.objects[o].cooked_at = 0;
    s.objects[o].temperature = 0;
  }
  if (is_hand(l, v.location)) s.agents[l.location_index(v.location)].held = o;
}

}  // namespace

WorldState mode_state(const Belief0& b, const Pose& pose, int agent) {
  const Layout& l = b.layout();
  const BeliefSchema& schema = b.schema();
  std::vector<uint8_t> none(l.objects.size(), 1);
  WorldState s = base_state(b, pose, agent, none);
  for (size_t o = 0; o < l.objects.size(); ++o) {
    if (static_cast<int>(o) == pose.held) continue;
    const int n = schema.object_substate(static_cast<int>(o));
    const auto& vals = schema[n].values;
    auto d = b.dist(n);
    int best = -1;
    for (size_t i = 0; i < vals.size(); ++i) {
      if (is_hand(l, vals[i].location)) {
        int who = l.location_index(vals[i].location);
        if (who == agent || s.agents[who].held >= 0) continue;
      }
      if (best < 0 || d[i] > d[best]) best = static_cast<int>(i);
    }
    if (best < 0) best = 0;
    place(s, static_cast<int>(o), vals[best]);
  }
  return s;
}

std::vector<Action> action_set(const Belief0& b, int agent, const Pose& pose) {
  return legal_actions(mode_state(b, pose, agent), agent);
}

// ---------------------------------------------------------------------------
// Solo search over an abstract state: the planning agent's room and hand plus
// the goal-relevant objects and container flags.

namespace {

constexpr int kJunk = -2;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Problem {
  const Layout* l = nullptr;
  const Goal* goal = nullptr;
  int agent = -1;
  bool kitchen = false;
  int blocked_room = -1;
  std::vector<int> objs;
  std::vector<int> role;       // predicate (household) or ingredient (kitchen) per object
  std::vector<int> inflight;   // household: partner-carried objects per predicate
  std::vector<int> ingredients;  // kitchen: ingredient indices owned by the agent
};

struct Node {
  int room = -1;
  int held = -1;  // -1 empty, kJunk, else index into Problem::objs
  std::vector<int16_t> loc;
  std::vector<uint8_t> st;
  uint64_t open = 0;
  int cooked = 0;
};

std::string problem_key(const Problem& p) {
  std::string k;
  auto put = [&](int v) { k.append(reinterpret_cast<const char*>(&v), sizeof v); };
  put(p.agent);
  put(static_cast<int>(p.goal - p.l->goal_space.data()));
  put(p.blocked_room);
  put(static_cast<int>(p.objs.size()));
  for (int o : p.objs) put(o);
  for (int c : p.inflight) put(c);
  put(-7);
  for (int i : p.ingredients) put(i);
  return k;
}

std::string node_key(const Node& n) {
  std::string k;
  k.reserve(16 + n.loc.size() * 3);
  k.push_back(static_cast<char>(n.room));
  k.push_back(static_cast<char>(n.held));
  for (size_t i = 0; i < n.loc.size(); ++i) {
    k.append(reinterpret_cast<const char*>(&n.loc[i]), 2);
    k.push_back(static_cast<char>(n.st[i]));
  }
  k.append(reinterpret_cast<const char*>(&n.open), sizeof n.open);
  k.push_back(static_cast<char>(n.cooked));
  return k;
}

class Search {
 public:
  Search(const Problem& p, int budget, int horizon) : p_(p), l_(*p.l), budget_(budget), horizon_(horizon) {}

  SoloResult run(const Node& start, uint64_t& expansions) {
    struct Entry {
      double f, g;
      int len, id;
    };
    auto worse = [](const Entry& a, const Entry& b) {
      if (a.f != b.f) return a.f > b.f;
      if (a.g != b.g) return a.g < b.g;
      return a.id > b.id;
    };
    std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> open(worse);
    std::unordered_map<std::string, double> best;
    std::vector<Node> nodes;
    nodes.push_back(start);
    const double h0 = heuristic(start);
    if (h0 == kInf) return {};
    open.push({h0, 0.0, 0, 0});
    best[node_key(start)] = 0.0;
    int used = 0;
    while (!open.empty()) {
      Entry e = open.top();
      open.pop();
      const Node cur = nodes[e.id];
      if (e.g > best[node_key(cur)]) continue;
      if (satisfied(cur)) return {true, true, e.len, e.g};
      if (e.len >= horizon_) continue;
      if (++used > budget_) {
        SoloResult r;
        r.reachable = true;
        r.exact = false;
        r.cost = e.f;
        r.length = e.len + static_cast<int>(std::ceil(e.f - e.g));
        return r;
      }
      ++expansions;
      const double step = 1.0 + cur.cooked;
      expand(cur, [&](Node&& next) {
        const double g = e.g + step;
        std::string key = node_key(next);
        auto it = best.find(key);
        if (it != best.end() && it->second <= g) return;
        const double h = heuristic(next);
        if (h == kInf) return;
        best[std::move(key)] = g;
        nodes.push_back(std::move(next));
        open.push({g + h, g, e.len + 1, static_cast<int>(nodes.size()) - 1});
      });
    }
    return {};
  }

  bool satisfied(const Node& n) const {
    if (p_.kitchen) {
      for (int k : p_.ingredients)
        if (!ingredient_done(n, k)) return false;
      return true;
    }
    for (size_t pi = 0; pi < p_.goal->predicates.size(); ++pi)
      if (deficit(n, static_cast<int>(pi)) > 0) return false;
    return true;
  }

 private:
  const Problem& p_;
  const Layout& l_;
  int budget_;
  int horizon_;

  int target_of(int i) const { return p_.goal->predicates[p_.role[i]].target; }

  bool ingredient_done(const Node& n, int k) const {
    const Ingredient& ing = p_.goal->ingredients[k];
    for (size_t i = 0; i < p_.objs.size(); ++i)
      if (p_.role[i] == k && n.loc[i] == l_.served_location() && n.st[i] == static_cast<uint8_t>(ing.status))
        return true;
    return false;
  }

  int deficit(const Node& n, int pi) const {
    const Predicate& pred = p_.goal->predicates[pi];
    int have = p_.inflight[pi];
    for (size_t i = 0; i < p_.objs.size(); ++i)
      if (p_.role[i] == pi && n.loc[i] == pred.target) ++have;
    return std::max(0, pred.count - have);
  }

  // Room of an object's location from the agent's point of view.
  int room_of(const Node& n, int loc) const {
    if (is_hand(l_, loc)) return n.room;
    return l_.location_room(loc);
  }

  bool accessible(const Node& n, int loc) const {
    switch (l_.location_kind(loc)) {
      case LocationKind::container: return (n.open >> loc) & 1ULL;
      case LocationKind::surface:
      case LocationKind::floor: return true;
      default: return false;
    }
  }

  bool useful(const Node& n, int i) const {
    if (p_.kitchen) {
      if (n.loc[i] == l_.served_location()) return false;
      if (ingredient_done(n, p_.role[i])) return false;
      return true;
    }
    return n.loc[i] != target_of(i) && deficit(n, p_.role[i]) > 0;
  }

  double heuristic(const Node& n) const {
    double actions = 0.0;
    int travel = 0;
    const int hand = l_.hand_location(p_.agent);
    if (p_.kitchen) {
      for (int k : p_.ingredients) {
        if (ingredient_done(n, k)) continue;
        const Ingredient& ing = p_.goal->ingredients[k];
        double best_a = kInf;
        int best_t = 1 << 20;
        for (size_t i = 0; i < p_.objs.size(); ++i) {
          if (p_.role[i] != k || n.loc[i] == l_.served_location()) continue;
          const bool held = n.loc[i] == hand;
          double a = (held ? 0 : 1) + 1;
          if (n.st[i] == static_cast<uint8_t>(Status::raw)) a += 1;
          else if (n.st[i] != static_cast<uint8_t>(ing.status)) continue;
          best_a = std::min(best_a, a);
          best_t = std::min(best_t, held ? 0 : l_.room_distance(n.room, l_.location_room(n.loc[i])));
        }
        if (best_a == kInf) return kInf;
        actions += best_a;
        travel = std::max(travel, best_t);
      }
      return actions + travel;
    }
    for (size_t pi = 0; pi < p_.goal->predicates.size(); ++pi) {
      int d = deficit(n, static_cast<int>(pi));
      if (d == 0) continue;
      const int target = p_.goal->predicates[pi].target;
      const int troom = l_.location_room(target);
      std::vector<int> costs;
      int best_t = 1 << 20;
      for (size_t i = 0; i < p_.objs.size(); ++i) {
        if (p_.role[i] != static_cast<int>(pi) || n.loc[i] == target) continue;
        if (n.loc[i] == hand) {
          costs.push_back(1);
          best_t = std::min(best_t, l_.room_distance(n.room, troom));
        } else {
          costs.push_back(2);
          int oroom = l_.location_room(n.loc[i]);
          best_t = std::min(best_t, l_.room_distance(n.room, oroom) + l_.room_distance(oroom, troom));
        }
      }
      if (static_cast<int>(costs.size()) < d) return kInf;
      std::sort(costs.begin(), costs.end());
      for (int j = 0; j < d; ++j) actions += costs[j];
      travel = std::max(travel, best_t);
    }
    return actions + travel;
  }

  template <typename Emit>
  void expand(const Node& n, Emit&& emit) const {
    const int hand = l_.hand_location(p_.agent);
    for (int r : l_.rooms[n.room].adjacent) {
      if (r == p_.blocked_room) continue;
      Node m = n;
      m.room = r;
      emit(std::move(m));
    }

    // Somewhere to drop an unwanted object.
    int drop = -1;
    const bool must_drop = n.held == kJunk || (n.held >= 0 && !useful(n, n.held));
    if (must_drop) {
      for (size_t s = 0; s < l_.surfaces.size() && drop < 0; ++s)
        if (l_.surfaces[s].room == n.room) drop = l_.surface_location(static_cast<int>(s));
      for (size_t c = 0; c < l_.containers.size() && drop < 0; ++c)
        if (l_.containers[c].room == n.room && ((n.open >> c) & 1ULL)) drop = static_cast<int>(c);
    }

    for (size_t c = 0; c < l_.containers.size(); ++c) {
      if (l_.containers[c].room != n.room || ((n.open >> c) & 1ULL)) continue;
      bool wanted = must_drop && drop < 0;
      for (size_t i = 0; i < p_.objs.size() && !wanted; ++i)
        wanted = n.loc[i] == static_cast<int>(c) && useful(n, static_cast<int>(i));
      if (!p_.kitchen)
        for (size_t pi = 0; pi < p_.goal->predicates.size() && !wanted; ++pi)
          wanted = p_.goal->predicates[pi].target == static_cast<int>(c) && deficit(n, static_cast<int>(pi)) > 0;
      if (!wanted) continue;
      Node m = n;
      m.open |= 1ULL << c;
      emit(std::move(m));
    }

    if (n.held == -1) {
      for (size_t i = 0; i < p_.objs.size(); ++i) {
        const int loc = n.loc[i];
        const auto kind = l_.location_kind(loc);
        if (kind == LocationKind::hand || kind == LocationKind::served) continue;
        if (l_.location_room(loc) != n.room || !accessible(n, loc)) continue;
        if (!useful(n, static_cast<int>(i))) continue;
        Node m = n;
        m.held = static_cast<int>(i);
        m.loc[i] = static_cast<int16_t>(hand);
        emit(std::move(m));
      }
      return;
    }

    if (must_drop) {
      if (drop < 0) return;
      Node m = n;
      if (n.held >= 0) m.loc[n.held] = static_cast<int16_t>(drop);
      m.held = -1;
      emit(std::move(m));
      return;
    }

    const int i = n.held;
    if (p_.kitchen) {
      const Ingredient& ing = p_.goal->ingredients[p_.role[i]];
      if (n.st[i] == static_cast<uint8_t>(Status::raw)) {
        const Process need = ing.status == Status::chopped ? Process::chop : Process::cook;
        if (l_.objects[p_.objs[i]].process != need) return;
        Node m = n;
        m.st[i] = static_cast<uint8_t>(ing.status);
        if (ing.status == Status::cooked) ++m.cooked;
        emit(std::move(m));
      } else if (n.st[i] == static_cast<uint8_t>(ing.status)) {
        Node m = n;
        m.loc[i] = static_cast<int16_t>(l_.served_location());
        m.held = -1;
        emit(std::move(m));
      }
      return;
    }
    const int target = target_of(i);
    if (room_of(n, target) == n.room && accessible(n, target)) {
      Node m = n;
      m.loc[i] = static_cast<int16_t>(target);
      m.held = -1;
      emit(std::move(m));
    }
  }
};

int partner_of(const Layout& l, int agent) {
  if (l.agents.size() < 2) return -1;
  return agent == 0 ? 1 : 0;
}

bool ingredient_served(const WorldState& s, const Ingredient& ing) {
  const Layout& l = s.layout();
  for (size_t o = 0; o < s.objects.size(); ++o)
    if (l.objects[o].category == ing.category && s.objects[o].status == ing.status &&
        s.objects[o].location == l.served_location())
      return true;
  return false;
}

// Can `agent` reach object o (in its hand, or in a room it can walk to)?
bool reachable_for(const WorldState& s, int agent, int o, int blocked_room) {
  const Layout& l = s.layout();
  int loc = s.objects[o].location;
  if (loc == l.hand_location(agent)) return true;
  auto kind = l.location_kind(loc);
  if (kind == LocationKind::hand || kind == LocationKind::served) return false;
  int target = l.location_room(loc);
  if (target == blocked_room) return false;
  std::vector<uint8_t> seen(l.rooms.size(), 0);
  std::vector<int> stack{s.agents[agent].room};
  seen[stack[0]] = 1;
  while (!stack.empty()) {
    int r = stack.back();
    stack.pop_back();
    if (r == target) return true;
    for (int nb : l.rooms[r].adjacent)
      if (!seen[nb] && nb != blocked_room) {
        seen[nb] = 1;
        stack.push_back(nb);
      }
  }
  return false;
}

bool usable_for(const WorldState& s, int o, const Ingredient& ing) {
  const Layout& l = s.layout();
  if (l.objects[o].category != ing.category) return false;
  if (s.objects[o].location == l.served_location()) return false;
  return s.objects[o].status == Status::raw || s.objects[o].status == ing.status;
}

Node make_node(const WorldState& s, const Problem& p) {
  Node n;
  n.room = s.agents[p.agent].room;
  const int held = s.agents[p.agent].held;
  n.held = held < 0 ? -1 : kJunk;
  for (size_t i = 0; i < p.objs.size(); ++i) {
    n.loc.push_back(static_cast<int16_t>(s.objects[p.objs[i]].location));
    n.st.push_back(static_cast<uint8_t>(s.objects[p.objs[i]].status));
    if (p.objs[i] == held) n.held = static_cast<int>(i);
  }
  for (size_t c = 0; c < s.open.size(); ++c)
    if (s.open[c]) n.open |= 1ULL << c;
  return n;
}

}  // namespace

// ---------------------------------------------------------------------------

Planner::Planner(PlannerConfig cfg) : cfg_(cfg) { cfg_.validate(); }

void Planner::clear() {
  plan_cache_.clear();
  solo_cache_.clear();
}

namespace {

struct Split {
  bool feasible = true;
  std::vector<int> mine, theirs;  // ingredient indices
};

Split split_ingredients(const WorldState& s, const Goal& goal, int agent, int partner) {
  Split out;
  const int my_block = partner >= 0 ? s.agents[partner].room : -1;
  const int their_block = s.agents[agent].room;
  for (size_t k = 0; k < goal.ingredients.size(); ++k) {
    const Ingredient& ing = goal.ingredients[k];
    if (ingredient_served(s, ing)) continue;
    bool me = false, them = false;
    for (size_t o = 0; o < s.objects.size(); ++o) {
      if (!usable_for(s, static_cast<int>(o), ing)) continue;
      me = me || reachable_for(s, agent, static_cast<int>(o), my_block);
      if (partner >= 0) them = them || reachable_for(s, partner, static_cast<int>(o), their_block);
    }
    if (me)
      out.mine.push_back(static_cast<int>(k));
    else if (them)
      out.theirs.push_back(static_cast<int>(k));
    else
      out.feasible = false;
  }
  return out;
}

Problem kitchen_problem(const WorldState& s, const Goal& goal, int agent, int blocked,
                        const std::vector<int>& ingredients) {
  const Layout& l = s.layout();
  Problem p;
  p.l = &l;
  p.goal = &goal;
  p.agent = agent;
  p.kitchen = true;
  p.blocked_room = blocked;
  p.ingredients = ingredients;
  for (size_t o = 0; o < l.objects.size(); ++o)
    for (int k : ingredients)
      if (usable_for(s, static_cast<int>(o), goal.ingredients[k]) &&
          reachable_for(s, agent, static_cast<int>(o), blocked)) {
        p.objs.push_back(static_cast<int>(o));
        p.role.push_back(k);
        break;
      }
  return p;
}

Problem household_problem(const WorldState& s, const Goal& goal, int agent, int partner) {
  const Layout& l = s.layout();
  Problem p;
  p.l = &l;
  p.goal = &goal;
  p.agent = agent;
  p.inflight.assign(goal.predicates.size(), 0);
  for (size_t o = 0; o < l.objects.size(); ++o) {
    int role = -1;
    for (size_t pi = 0; pi < goal.predicates.size() && role < 0; ++pi) {
      const auto& cats = goal.predicates[pi].categories;
      if (std::find(cats.begin(), cats.end(), l.objects[o].category) != cats.end()) role = static_cast<int>(pi);
    }
    if (role < 0) continue;
    if (partner >= 0 && s.objects[o].location == l.hand_location(partner)) {
      ++p.inflight[role];
      continue;
    }
    p.objs.push_back(static_cast<int>(o));
    p.role.push_back(role);
  }
  return p;
}

}  // namespace

SoloResult Planner::solo(const WorldState& s, int goal_index, int agent, bool with_partner) {
  const Layout& l = s.layout();
  const Goal& goal = l.goal_space.at(goal_index);
  const int partner = with_partner ? partner_of(l, agent) : -1;
  Problem p;
  if (l.family == Family::household) {
    p = household_problem(s, goal, agent, partner);
  } else {
    Split split = split_ingredients(s, goal, agent, partner);
    if (!split.feasible || !split.theirs.empty()) return {};
    p = kitchen_problem(s, goal, agent, partner >= 0 ? s.agents[partner].room : -1, split.mine);
  }
  Node start = make_node(s, p);
  std::string key = problem_key(p) + node_key(start);
  ++stats_.searches;
  if (auto it = solo_cache_.find(key); it != solo_cache_.end()) {
    ++stats_.search_hits;
    return it->second;
  }
  Search search(p, cfg_.budget, cfg_.horizon);
  SoloResult r = search.run(start, stats_.expansions);
  solo_cache_.emplace(std::move(key), r);
  return r;
}

double Planner::state_value(const WorldState& s, int goal_index, int agent, int elapsed, bool* reachable) {
  const Layout& l = s.layout();
  const Goal& goal = l.goal_space.at(goal_index);
  const int partner = partner_of(l, agent);
  auto fail = [&]() {
    if (reachable) *reachable = false;
    return unreachable_cost();
  };
  if (reachable) *reachable = true;

  auto solve = [&](const Problem& p) {
    Node start = make_node(s, p);
    std::string key = problem_key(p) + node_key(start);
    ++stats_.searches;
    if (auto it = solo_cache_.find(key); it != solo_cache_.end()) {
      ++stats_.search_hits;
      return it->second;
    }
    Search search(p, cfg_.budget, cfg_.horizon);
    SoloResult r = search.run(start, stats_.expansions);
    solo_cache_.emplace(std::move(key), r);
    return r;
  };

  if (l.family == Family::household) {
    SoloResult r = solve(household_problem(s, goal, agent, partner));
    if (!r.reachable) return fail();
    return r.cost;
  }

  int cooked_now = 0;
  for (const auto& o : s.objects)
    if (o.status == Status::cooked) ++cooked_now;
  Split split = split_ingredients(s, goal, agent, partner);
  if (!split.feasible) return fail();
  const int my_block = partner >= 0 ? s.agents[partner].room : -1;
  SoloResult mine = solve(kitchen_problem(s, goal, agent, my_block, split.mine));
  if (!mine.reachable) return fail();
  SoloResult theirs{true, true, 0, 0.0};
  if (partner >= 0 && !split.theirs.empty()) {
    theirs = solve(kitchen_problem(s, goal, partner, s.agents[agent].room, split.theirs));
    if (!theirs.reachable) return fail();
  }
  const int partner_left = std::max(0, theirs.length - std::max(0, elapsed));
  const int makespan = std::max(mine.length, partner_left);
  return makespan * (1.0 + cooked_now) + (mine.cost - mine.length) + (theirs.cost - theirs.length);
}

std::vector<Planner::Sample> Planner::determinize(const Belief0& b, int goal_index, int agent,
                                                  const Pose& pose) const {
  const Layout& l = b.layout();
  const BeliefSchema& schema = b.schema();
  const Goal& goal = l.goal_space.at(goal_index);
  std::vector<uint8_t> relevant(l.objects.size(), 0);
  for (int o : relevant_objects(l, goal)) relevant[o] = 1;
  const WorldState base = base_state(b, pose, agent, relevant);
  const int own_hand = l.hand_location(agent);

  std::vector<int> free_objs;
  std::vector<std::vector<int>> support;  // value indices with mass
  for (size_t o = 0; o < l.objects.size(); ++o) {
    if (!relevant[o] || static_cast<int>(o) == pose.held) continue;
    const int n = schema.object_substate(static_cast<int>(o));
    auto d = b.dist(n);
    std::vector<int> vals;
    for (size_t i = 0; i < d.size(); ++i)
      if (d[i] > 0.0 && schema[n].values[i].location != own_hand) vals.push_back(static_cast<int>(i));
    if (vals.empty()) {
      // Only mass on our own (empty) hand: fall back to the first other value.
      for (size_t i = 0; i < d.size() && vals.empty(); ++i)
        if (schema[n].values[i].location != own_hand) vals.push_back(static_cast<int>(i));
    }
    free_objs.push_back(static_cast<int>(o));
    support.push_back(std::move(vals));
  }

  auto weight_of = [&](size_t j, int vi) {
    const int n = schema.object_substate(free_objs[j]);
    double w = b.dist(n)[vi];
    return w > 0.0 ? w : 1e-300;
  };

  std::vector<Sample> out;
  double joint = 1.0;
  for (const auto& s : support) joint *= static_cast<double>(s.size());

  if (joint <= cfg_.exact_support_max) {
    std::vector<size_t> idx(free_objs.size(), 0);
    while (true) {
      WorldState s = base;
      double w = 1.0;
      bool ok = true;
      for (size_t j = 0; j < free_objs.size() && ok; ++j) {
        const int n = schema.object_substate(free_objs[j]);
        const Value v = schema[n].values[support[j][idx[j]]];
        if (is_hand(l, v.location) && s.agents[l.location_index(v.location)].held >= 0) ok = false;
        else {
          place(s, free_objs[j], v);
          w *= b.dist(n)[support[j][idx[j]]];
        }
      }
      if (ok && w > 0.0) out.push_back({std::move(s), w});
      size_t j = 0;
      for (; j < idx.size(); ++j) {
        if (++idx[j] < support[j].size()) break;
        idx[j] = 0;
      }
      if (j == idx.size()) break;
    }
  } else {
    Rng rng(mix_seed(cfg_.seed, 0x6d0a));
    std::map<std::vector<int>, size_t> seen;
    for (int k = 0; k < cfg_.samples; ++k) {
      WorldState s = base;
      std::vector<int> picks;
      for (size_t j = 0; j < free_objs.size(); ++j) {
        std::vector<double> w(support[j].size());
        const int n = schema.object_substate(free_objs[j]);
        for (size_t i = 0; i < w.size(); ++i) {
          const Value v = schema[n].values[support[j][i]];
          bool taken = is_hand(l, v.location) && s.agents[l.location_index(v.location)].held >= 0;
          w[i] = taken ? 0.0 : weight_of(j, support[j][i]);
        }
        int pick = rng.categorical(w);
        if (pick < 0) {
          // Every value is a hand that is already full; drop the object on the floor.
          pick = 0;
          picks.push_back(-1);
          s.objects[free_objs[j]].location = l.floor_location(pose.rooms[agent]);
          continue;
        }
        picks.push_back(pick);
        place(s, free_objs[j], schema[n].values[support[j][pick]]);
      }
      auto [it, fresh] = seen.emplace(picks, out.size());
      if (fresh)
        out.push_back({std::move(s), 1.0});
      else
        out[it->second].weight += 1.0;
    }
  }
  double total = 0.0;
  for (const auto& s : out) total += s.weight;
  for (auto& s : out) s.weight /= total;
  return out;
}

namespace {

int kitchen_elapsed(const Belief0& b, int agent, const Pose& pose, const Goal& goal) {
  const Layout& l = b.layout();
  if (l.family != Family::kitchen || l.agents.size() < 2) return 0;
  const int partner = agent == 0 ? 1 : 0;
  const int proom = pose.rooms[partner];
  int latest = 0;
  for (int o : relevant_objects(l, goal)) {
    const int loc = l.objects[o].initial_location;
    if (l.location_room(loc) != proom) continue;
    latest = std::max(latest, b.stamp(b.schema().object_substate(o)));
  }
  return std::max(0, b.clock() - latest);
}

std::string plan_key(const Belief0& b, int goal, int agent, const std::vector<Action>& actions,
                     const Pose& pose, int elapsed) {
  const Layout& l = b.layout();
  const BeliefSchema& schema = b.schema();
  std::string k;
  auto put = [&](int v) { k.append(reinterpret_cast<const char*>(&v), sizeof v); };
  put(goal);
  put(agent);
  put(elapsed);
  put(pose.held);
  for (int r : pose.rooms) put(r);
  put(static_cast<int>(actions.size()));
  for (const auto& a : actions) {
    put(static_cast<int>(a.type));
    put(a.target);
    put(a.destination);
  }
  for (size_t c = 0; c < l.containers.size(); ++c)
    k.push_back(b.dist(schema.container_substate(static_cast<int>(c)))[1] > 0.5 ? '1' : '0');
  for (int o : relevant_objects(l, l.goal_space[goal])) {
    auto d = b.dist(schema.object_substate(o));
    k.append(reinterpret_cast<const char*>(d.data()), d.size() * sizeof(double));
  }
  return k;
}

}  // namespace

Policy Planner::plan(const Belief0& b, int goal_index, int agent, const std::vector<Action>& actions,
                     const Pose& pose) {
  const Layout& l = b.layout();
  if (goal_index < 0 || goal_index >= static_cast<int>(l.goal_space.size()))
    throw std::invalid_argument("goal index outside the goal space");
  if (actions.empty()) throw std::invalid_argument("planner needs a non-empty action set");
  const Goal& goal = l.goal_space[goal_index];
  const int elapsed = kitchen_elapsed(b, agent, pose, goal);
  std::string key = plan_key(b, goal_index, agent, actions, pose, elapsed);
  ++stats_.plans;
  if (auto it = plan_cache_.find(key); it != plan_cache_.end()) {
    ++stats_.plan_hits;
    return it->second;
  }

  Policy pol;
  pol.actions = actions;
  pol.tau = cfg_.tau;
  const auto samples = determinize(b, goal_index, agent, pose);

  bool all_done = true, all_stuck = true;
  std::vector<uint8_t> done(samples.size(), 0);
  for (size_t k = 0; k < samples.size(); ++k) {
    bool ok = true;
    double v = state_value(samples[k].state, goal_index, agent, elapsed, &ok);
    if (ok) all_stuck = false;
    if (!ok || v > 0.0) all_done = false;
    else done[k] = 1;
  }

  if (all_done) {
    int w = pol.index_of(Action::wait());
    std::vector<double> q(actions.size(), -1.0);
    if (w < 0) w = 0;
    pol.q = q;
    pol.q[w] = 0.0;
    std::vector<double> p(actions.size(), 0.0);
    p[w] = 1.0;
    const double n = static_cast<double>(actions.size());
    for (double& x : p) x = (1.0 - n * cfg_.epsilon) * x + cfg_.epsilon;
    pol.probs = p;
    pol.expected_cost = 0.0;
  } else if (all_stuck) {
    pol = fallback(b, goal_index, agent, actions, pose);
  } else {
    pol.q.assign(actions.size(), 0.0);
    // Best value over the samples not already solved, for household search.
    std::vector<double> qs(actions.size());
    std::vector<double> best_q(actions.size(), -std::numeric_limits<double>::infinity());
    bool any_open = false;
    for (size_t k = 0; k < samples.size(); ++k) {
      const auto& s = samples[k];
      int cooked_now = 0;
      if (l.family == Family::kitchen)
        for (const auto& o : s.state.objects)
          if (o.status == Status::cooked) ++cooked_now;
      const double step_cost = 1.0 + cooked_now;
      for (size_t i = 0; i < actions.size(); ++i) {
        WorldState next = s.state;
        if (is_legal(next, agent, actions[i])) apply_action(next, agent, actions[i]);
        advance_clock(next);
        const double v = state_value(next, goal_index, agent, elapsed + 1);
        qs[i] = -(step_cost + cfg_.discount * v);
        pol.q[i] += s.weight * qs[i];
      }
      if (done[k]) continue;
      any_open = true;
      for (size_t i = 0; i < actions.size(); ++i) best_q[i] = std::max(best_q[i], qs[i]);
    }
    pol.probs = softmax_policy(pol.q, cfg_.tau, cfg_.epsilon);
    pol.expected_cost = 0.0;
    for (size_t i = 0; i < actions.size(); ++i) pol.expected_cost -= pol.probs[i] * pol.q[i];
    // Averaged determinizations never pay to look inside a container, so a
    // household searcher wanders between rooms. Acting for the closest
    // unsolved hypothesis cannot cycle: its cost-to-go drops every step.
    if (l.family == Family::household && any_open) {
      pol.probs = softmax_policy(best_q, cfg_.tau, cfg_.epsilon);
      pol.exploratory = true;
    }
  }
  plan_cache_.emplace(std::move(key), pol);
  return pol;
}

Policy Planner::plan(const Belief0& b, int goal, int agent) {
  Pose pose = pose_from_belief(b);
  return plan(b, goal, agent, action_set(b, agent, pose), pose);
}

double Planner::action_likelihood(const Action& a, const Belief0& b, int goal, int agent,
                                  const std::vector<Action>& actions, const Pose& pose) {
  return plan(b, goal, agent, actions, pose).prob(a);
}

Policy Planner::fallback(const Belief0& b, int goal_index, int agent, const std::vector<Action>& actions,
                         const Pose& pose) const {
  const Layout& l = b.layout();
  const BeliefSchema& schema = b.schema();
  Policy pol;
  pol.actions = actions;
  pol.tau = cfg_.tau;
  pol.exploratory = true;
  pol.expected_cost = unreachable_cost();

  Action choice = Action::wait();
  if (l.family == Family::household) {
    const int here = pose.rooms[agent];
    const auto relevant = relevant_objects(l, l.goal_space[goal_index]);
    auto mass_at = [&](int loc) {
      double m = 0.0;
      for (int o : relevant) m += b.prob(schema.object_substate(o), {loc, Status::raw});
      return m;
    };
    // Nearest closed container or unseen surface that may hold a relevant object.
    int best = -1, best_dist = 1 << 20;
    for (size_t c = 0; c < l.containers.size(); ++c) {
      if (b.dist(schema.container_substate(static_cast<int>(c)))[1] > 0.5) continue;
      if (mass_at(l.container_location(static_cast<int>(c))) <= 0.0) continue;
      const int d = l.room_distance(here, l.containers[c].room);
      if (d < best_dist) {
        best_dist = d;
        best = l.container_location(static_cast<int>(c));
      }
    }
    for (size_t sf = 0; sf < l.surfaces.size(); ++sf) {
      const int loc = l.surface_location(static_cast<int>(sf));
      const int d = l.room_distance(here, l.location_room(loc));
      if (d == 0 || mass_at(loc) <= 0.0) continue;
      if (d < best_dist) {
        best_dist = d;
        best = loc;
      }
    }
    if (best >= 0) {
      const int troom = l.location_room(best);
      if (troom == here) {
        choice = Action::open(best);
      } else {
        for (int r : l.rooms[here].adjacent)
          if (l.room_distance(r, troom) == best_dist - 1) {
            choice = Action::move(r);
            break;
          }
      }
    }
  }
  int idx = pol.index_of(choice);
  if (idx < 0) idx = pol.index_of(Action::wait());
  if (idx < 0) idx = 0;
  pol.q.assign(actions.size(), -unreachable_cost());
  pol.q[idx] = -unreachable_cost() + 1.0;
  std::vector<double> p(actions.size(), 0.0);
  p[idx] = 1.0;
  const double n = static_cast<double>(actions.size());
  for (double& x : p) x = (1.0 - n * cfg_.epsilon) * x + cfg_.epsilon;
  pol.probs = p;
  return pol;
}

Policy plan(const Belief0& b, int goal, int agent, const PlannerConfig& cfg) {
  Planner planner(cfg);
  return planner.plan(b, goal, agent);
}

}  // namespace goma
