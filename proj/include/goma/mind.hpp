#pragma once

#include <optional>
#include <set>
#include <vector>

#include "goma/planner.hpp"
#include "goma/utterance.hpp"

namespace goma {

struct MindConfig {
  int particles = 10;
  double h_max = 0.5;
  double eps_goal = 0.01;
};

// The assistant's level-1 mind: its own belief, particles for the human's
// belief and a posterior over the human's goal.
struct Mind {
  int self = -1;
  int human = -1;
  MindConfig cfg;

  Belief0 robot;
  std::vector<Belief0> particles;
  std::vector<double> goal_posterior;
  int fixed_goal = -1;  // shared known goal, -1 when it must be inferred
  // What the human assumes the robot pursues; never updated.
  int b_gR_human = -1;

  std::vector<int> particle_goals;

  // Human model inputs for the current step.
  Pose human_pose;
  std::vector<Action> human_actions;

  // The same inputs one step earlier, for the likelihood of the human's last action.
  struct Snapshot {
    bool valid = false;
    Belief0 robot;
    std::vector<Belief0> particles;
    Pose pose;
  } previous;

  // Clock at which the human was last in view, -1 before that.
  int human_seen_at = -1;
  // Sub-states asked about last step whose answer has not arrived yet.
  std::set<int> pending_requests;

  int warnings = 0;
};

// Sub-states an observation pins down directly.
std::set<int> seen_substates(const BeliefSchema& schema, const Observation& o);

Mind make_mind(const WorldState& initial, int self, MindConfig cfg);

// Hand-consistent full state drawn from a belief.
WorldState sample_world(const Belief0& b, Rng& rng);

// Robot belief from its observation and the human's messages, then every
// particle from a hypothetical human observation and the messages it heard.
void assimilate(Mind& m, const Observation& o_R, const std::vector<Utterance>& u_H,
                const std::vector<Utterance>& u_R_sent, Rng& rng);

// Bayes update with the human's last action (if seen) and any need statement.
void update_goal_posterior(Mind& m, const std::optional<Action>& a_H, const std::vector<Utterance>& u_H,
                           Planner& planner);

// Pure form used by tests: posterior update with explicit likelihoods.
std::vector<double> bayes_update(const std::vector<double>& prior, const std::vector<double>& likelihood);

double need_likelihood(const Layout& l, const Goal& g, const Utterance& need, double eps_goal);

int sample_goal(const Mind& m, Rng& rng);
void sample_particle_goals(Mind& m, Rng& rng);

// Refreshes the human pose estimate and its action support from the robot belief.
void refresh_human_model(Mind& m);
void save_snapshot(Mind& m);

// Union over particles of the sub-states they know.
std::vector<int> inferred_human_knowledge(const Mind& m, double h_max);

json mind_to_json(const Mind& m);

}  // namespace goma
