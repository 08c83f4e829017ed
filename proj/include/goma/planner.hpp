#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "goma/belief.hpp"
#include "goma/rng.hpp"

namespace goma {

struct PlannerConfig {
  int budget = 5000;  // node expansions per search
  int horizon = 40;
  double tau = 1.0;
  double discount = 1.0;
  int samples = 10;  // determinizations when the support is too large to enumerate
  uint64_t seed = 0;
  double epsilon = 1e-6;
  int exact_support_max = 64;

  void validate() const;
};

// Where the planning agent stands and what it carries. Rooms are indexed by
// agent; only the planning agent's held object is needed.
struct Pose {
  std::vector<int> rooms;
  int held = -1;

  friend bool operator==(const Pose&, const Pose&) = default;
};

struct Policy {
  std::vector<Action> actions;
  std::vector<double> probs;
  std::vector<double> q;
  double tau = 1.0;
  double expected_cost = 0.0;
  bool exploratory = false;

  // Probability of `a`, 0 if it is outside the support.
  double prob(const Action& a) const;
  int index_of(const Action& a) const;
};

// Cost-to-go of one fully determined state.
struct SoloResult {
  bool reachable = false;
  bool exact = true;
  int length = 0;
  double cost = 0.0;
};

// Pose read off a belief: the owner's room and hand are exact, other agents
// sit where they were last seen.
Pose pose_from_belief(const Belief0& b);

// Most likely world under b, with hands kept consistent with `pose`.
WorldState mode_state(const Belief0& b, const Pose& pose, int agent);
std::vector<Action> action_set(const Belief0& b, int agent, const Pose& pose);

// Objects whose category the goal mentions.
std::vector<int> relevant_objects(const Layout& layout, const Goal& goal);

// Softmax over Q-values followed by the epsilon mixture.
std::vector<double> softmax_policy(const std::vector<double>& q, double tau, double epsilon);

class Planner {
 public:
  explicit Planner(PlannerConfig cfg = {});

  const PlannerConfig& config() const { return cfg_; }

  Policy plan(const Belief0& b, int goal, int agent, const std::vector<Action>& actions,
              const Pose& pose);
  // Convenience overload: own pose and the actions legal in the mode state.
  Policy plan(const Belief0& b, int goal, int agent);

  double action_likelihood(const Action& a, const Belief0& b, int goal, int agent,
                           const std::vector<Action>& actions, const Pose& pose);

  // Cost-to-go of a determinized state. `elapsed` is how stale the planner's
  // view of the partner's side is (kitchen only).
  double state_value(const WorldState& s, int goal, int agent, int elapsed, bool* reachable = nullptr);
  SoloResult solo(const WorldState& s, int goal, int agent, bool with_partner);

  struct Stats {
    uint64_t plans = 0;
    uint64_t plan_hits = 0;
    uint64_t searches = 0;
    uint64_t search_hits = 0;
    uint64_t expansions = 0;
  };
  const Stats& stats() const { return stats_; }
  void clear();

  double unreachable_cost() const { return 10.0 * cfg_.horizon; }

  struct Sample {
    WorldState state;
    double weight = 0.0;
  };
  // Weighted determinizations of the goal-relevant part of b.
  std::vector<Sample> determinize(const Belief0& b, int goal, int agent, const Pose& pose) const;

 private:
  PlannerConfig cfg_;
  Stats stats_;
  std::unordered_map<std::string, Policy> plan_cache_;
  std::unordered_map<std::string, SoloResult> solo_cache_;

  Policy fallback(const Belief0& b, int goal, int agent, const std::vector<Action>& actions,
                  const Pose& pose) const;
};

// Stateless convenience wrapper; builds a fresh planner per call.
Policy plan(const Belief0& b, int goal, int agent, const PlannerConfig& cfg);

}  // namespace goma
