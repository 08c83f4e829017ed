#pragma once

#include <string>
#include <vector>

#include "goma/goma.hpp"

namespace goma {

enum class Variant : uint8_t { goma, nocomm, heur, goalag, none };

std::string_view to_string(Variant v);
// Throws std::invalid_argument for unknown names.
Variant parse_variant(std::string_view name);

struct AgentConfig {
  GomaConfig goma;
  int heur_period = 8;
  double goalag_rate = 0.5;
};

struct AgentOutput {
  Action action;
  std::vector<Utterance> utterances;
};

// Simulated human: greedy on its own plan, announces what it needs at the
// start when the goal is private, and answers requests truthfully.
class HumanProxy {
 public:
  HumanProxy(const WorldState& initial, int self, int goal, PlannerConfig planner, uint64_t seed,
             bool announce_need, double h_max = 0.5);

  AgentOutput step(const Observation& o, const std::vector<Utterance>& incoming, const std::vector<Action>& legal);

  const Belief0& belief() const { return belief_; }
  int goal() const { return goal_; }

  // Reply to a request given the current belief.
  Utterance answer(int substate) const;

 private:
  int self_;
  int goal_;
  double h_max_;
  bool announce_need_;
  Belief0 belief_;
  Planner planner_;
  Rng rng_;
};

// Categories named by a help request over a uniformly sized random subset of
// the goal's predicates.
std::vector<int> sample_need(const Goal& goal, Rng& rng);

class Assistant {
 public:
  Assistant(Variant variant, const WorldState& initial, int self, AgentConfig cfg, uint64_t seed);

  AgentOutput step(const Observation& o, const std::vector<Utterance>& incoming, const std::vector<Action>& legal);

  // The two halves of step. A replay can override the utterances between
  // them to force a logged conversation.
  void prepare(const Observation& o, const std::vector<Utterance>& incoming);
  AgentOutput decide_with(const std::vector<Action>& legal, double comm_cost);
  void commit(const AgentOutput& out);

  const Decision& last_decision() const { return decision_; }

  Variant variant() const { return variant_; }
  const Mind& mind() const { return mind_; }
  Mind& mind() { return mind_; }
  Planner& planner() { return planner_; }

 private:
  Variant variant_;
  int self_;
  AgentConfig cfg_;
  Mind mind_;
  Planner planner_;
  Rng rng_;
  std::vector<Utterance> last_sent_;
  Action last_action_;
  int last_held_ = -1;
  Observation obs_;
  Decision decision_;

  std::vector<Utterance> heuristic_utterances();
  std::vector<Utterance> goal_agnostic_utterances();
};

// Object whose goal requirement `a` would complete: a required status
// reached, a required ingredient served, or an object put at a predicate
// target. -1 if none.
int completed_subgoal(const Layout& l, const Goal& goal, const Action& a, int held_before);

}  // namespace goma
