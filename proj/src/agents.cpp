#include "goma/agents.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace goma {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::goma: return "goma";
    case Variant::nocomm: return "nocomm";
    case Variant::heur: return "heur";
    case Variant::goalag: return "goalag";
    case Variant::none: return "none";
  }
  return "none";
}

Variant parse_variant(std::string_view name) {
  if (name == "goma") return Variant::goma;
  if (name == "nocomm") return Variant::nocomm;
  if (name == "heur" || name == "heurcomm") return Variant::heur;
  if (name == "goalag" || name == "goalagnostic") return Variant::goalag;
  if (name == "none" || name == "single") return Variant::none;
  throw std::invalid_argument("unknown assistant variant '" + std::string(name) + "'");
}

namespace {

Action greedy(const Policy& p) {
  size_t best = 0;
  for (size_t i = 1; i < p.probs.size(); ++i)
    if (p.probs[i] > p.probs[best]) best = i;
  return p.actions[best];
}

PlannerConfig seeded(PlannerConfig cfg, uint64_t seed) {
  cfg.seed = mix_seed(cfg.seed, seed);
  return cfg;
}

}  // namespace

std::vector<int> sample_need(const Goal& goal, Rng& rng) {
  std::vector<int> cats;
  if (!goal.predicates.empty()) {
    std::vector<int> idx(goal.predicates.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    const int k = 1 + static_cast<int>(rng.below(idx.size()));
    for (int i = 0; i < k; ++i) {
      const size_t j = i + rng.below(idx.size() - i);
      std::swap(idx[i], idx[j]);
      for (int c : goal.predicates[idx[i]].categories) cats.push_back(c);
    }
  } else {
    for (const auto& ing : goal.ingredients) cats.push_back(ing.category);
  }
  std::sort(cats.begin(), cats.end());
  cats.erase(std::unique(cats.begin(), cats.end()), cats.end());
  return cats;
}

HumanProxy::HumanProxy(const WorldState& initial, int self, int goal, PlannerConfig planner, uint64_t seed,
                       bool announce_need, double h_max)
    : self_(self),
      goal_(goal),
      h_max_(h_max),
      announce_need_(announce_need),
      belief_(init_uniform(initial, self)),
      planner_(seeded(planner, mix_seed(seed, 0x4855))),
      rng_(mix_seed(seed, 0x6875)) {}

Utterance HumanProxy::answer(int substate) const {
  if (knows(belief_, substate, h_max_)) return make_share(belief_, substate);
  return make_unknown(self_, substate);
}

AgentOutput HumanProxy::step(const Observation& o, const std::vector<Utterance>& incoming,
                             const std::vector<Action>& legal) {
  AgentOutput out;
  observe_into(belief_, o);
  const auto seen = seen_substates(belief_.schema(), o);
  for (const auto& u : incoming)
    if (u.kind == UtteranceKind::share && !seen.count(u.substate)) belief_.set_dist(u.substate, u.content, o.clock);
  if (o.clock == 0 && announce_need_) {
    Utterance need = make_need(self_, sample_need(belief_.layout().goal_space[goal_], rng_));
    need.text = render_utterance(belief_.schema(), need);
    out.utterances.push_back(std::move(need));
  }
  for (const auto& u : incoming)
    if (u.kind == UtteranceKind::request) {
      Utterance reply = answer(u.substate);
      reply.text = render_utterance(belief_.schema(), reply);
      out.utterances.push_back(std::move(reply));
    }
  Pose pose = pose_from_belief(belief_);
  out.action = greedy(planner_.plan(belief_, goal_, self_, legal, pose));
  return out;
}

int completed_subgoal(const Layout& l, const Goal& goal, const Action& a, int held_before) {
  auto required = [&](int o, Status st) {
    for (const auto& ing : goal.ingredients)
      if (ing.category == l.objects[o].category && ing.status == st) return true;
    return false;
  };
  switch (a.type) {
    case ActionType::chop:
      return required(a.target, Status::chopped) ? a.target : -1;
    case ActionType::cook:
      return required(a.target, Status::cooked) ? a.target : -1;
    case ActionType::serve:
      if (held_before < 0) return -1;
      for (const auto& ing : goal.ingredients)
        if (ing.category == l.objects[held_before].category) return held_before;
      return -1;
    case ActionType::put:
      for (const auto& p : goal.predicates)
        if (p.target == a.destination &&
            std::find(p.categories.begin(), p.categories.end(), l.objects[a.target].category) != p.categories.end())
          return a.target;
      return -1;
    default:
      return -1;
  }
}

Assistant::Assistant(Variant variant, const WorldState& initial, int self, AgentConfig cfg, uint64_t seed)
    : variant_(variant),
      self_(self),
      cfg_(cfg),
      mind_(make_mind(initial, self, cfg.goma.mind)),
      planner_(seeded(cfg.goma.planner, mix_seed(seed, 0x4153))),
      rng_(mix_seed(seed, 0x6173)) {
  if (variant == Variant::none) throw std::invalid_argument("the none variant has no assistant");
}

void Assistant::prepare(const Observation& o, const std::vector<Utterance>& incoming) {
  obs_ = o;
  GomaStepInput in;
  in.o_R = &obs_;
  in.u_H = incoming;
  in.u_R_prev = last_sent_;
  prepare_mind(mind_, in, planner_, rng_);
}

namespace {

int map_goal(const Mind& m) {
  if (m.fixed_goal >= 0) return m.fixed_goal;
  return static_cast<int>(std::max_element(m.goal_posterior.begin(), m.goal_posterior.end()) -
                          m.goal_posterior.begin());
}

}  // namespace

std::vector<Utterance> Assistant::heuristic_utterances() {
  std::vector<Utterance> out;
  const Layout& l = mind_.robot.layout();
  const auto& schema = mind_.robot.schema();
  const int g = map_goal(mind_);
  if (obs_.clock > 0) {
    const int o = completed_subgoal(l, l.goal_space[g], last_action_, last_held_);
    if (o >= 0) out.push_back(make_share(mind_.robot, schema.object_substate(o)));
  }
  if ((obs_.clock + 1) % cfg_.heur_period == 0) {
    // Ask about the goal-relevant sub-state we are least sure of.
    int best = -1;
    double best_h = -1.0;
    for (int o : relevant_objects(l, l.goal_space[g])) {
      const int n = schema.object_substate(o);
      const double h = mind_.robot.entropy(n);
      if (h > best_h || (h == best_h && schema[n].id < schema[best].id)) {
        best = n;
        best_h = h;
      }
    }
    if (best < 0) best = 0;
    Utterance r = make_request(self_, best);
    r.text = render_utterance(schema, r);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<Utterance> Assistant::goal_agnostic_utterances() {
  if (!rng_.bernoulli(cfg_.goalag_rate)) return {};
  const auto& schema = mind_.robot.schema();
  const auto kh = inferred_human_knowledge(mind_, mind_.cfg.h_max);
  const std::set<int> known(kh.begin(), kh.end());
  std::vector<int> pool;
  for (const auto& item : knowledge(mind_.robot, mind_.cfg.h_max))
    if (schema[item.substate].kind == SubStateKind::object && !known.count(item.substate))
      pool.push_back(item.substate);
  if (pool.empty()) return {};
  std::sort(pool.begin(), pool.end());
  return {make_share(mind_.robot, pool[rng_.below(pool.size())])};
}

AgentOutput Assistant::decide_with(const std::vector<Action>& legal, double comm_cost) {
  decision_ = decide(mind_, legal, planner_, comm_cost, variant_ == Variant::goma);
  AgentOutput out;
  out.action = decision_.action;
  switch (variant_) {
    case Variant::goma:
      if (!decision_.utterance.is_none()) out.utterances.push_back(decision_.utterance);
      break;
    case Variant::heur: out.utterances = heuristic_utterances(); break;
    case Variant::goalag: out.utterances = goal_agnostic_utterances(); break;
    default: break;
  }
  return out;
}

void Assistant::commit(const AgentOutput& out) {
  last_sent_ = out.utterances;
  last_action_ = out.action;
  last_held_ = mind_.robot.held();
}

AgentOutput Assistant::step(const Observation& o, const std::vector<Utterance>& incoming,
                            const std::vector<Action>& legal) {
  prepare(o, incoming);
  AgentOutput out = decide_with(legal, cfg_.goma.comm_cost);
  commit(out);
  return out;
}

}  // namespace goma
