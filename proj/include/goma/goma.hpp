#pragma once

#include <span>
#include <vector>

#include "goma/mind.hpp"

namespace goma {

struct GomaConfig {
  MindConfig mind;
  PlannerConfig planner;
  double comm_cost = 1.0;
};

struct ProxyReward {
  Utterance utterance;
  double kl = 0.0;
  double reward = 0.0;
};

// Throws std::invalid_argument when the supports differ in size.
double kl_divergence(std::span<const double> p, std::span<const double> q);

// Element-wise mean of policies over the same support, renormalized.
std::vector<double> mean_policy(const std::vector<Policy>& policies);

// Plans shared by every candidate reward within one step.
struct PlanBattery {
  std::vector<Action> robot_actions;
  Pose robot_pose;
  std::vector<Policy> robot_pre;  // per particle
  std::vector<Policy> human_pre;  // per particle
};

PlanBattery build_battery(const Mind& m, Planner& planner, const std::vector<Action>& robot_actions);

ProxyReward reward_share(int substate, const Mind& m, const PlanBattery& battery, Planner& planner, double cost);
ProxyReward reward_request(int substate, const Mind& m, const PlanBattery& battery, Planner& planner, double cost);
ProxyReward reward_none();

// Highest net reward; ties go None, then Share, then Request, then sub-state id.
ProxyReward select_utterance(const BeliefSchema& schema, const std::vector<ProxyReward>& candidates);

// Argmax of the mean robot policy; the action list is in encoding order so
// the first maximum is also the lexicographic tie-break.
Action select_action(const std::vector<Policy>& robot_policies);

struct Decision {
  Action action;
  Utterance utterance;  // None when silent
  std::vector<ProxyReward> candidates;
  std::vector<double> mean_policy;
  bool exploratory = false;
};

// Every candidate reward for the current mind (shares over K_R, requests over K_H).
std::vector<ProxyReward> score_utterances(const Mind& m, const PlanBattery& battery, Planner& planner, double cost);

// The per-step loop body once messages are in: assimilate, goal inference,
// particle goals, plan battery, utterance and action selection.
struct GomaStepInput {
  const Observation* o_R = nullptr;
  std::vector<Utterance> u_H;
  std::vector<Utterance> u_R_prev;
  std::vector<Action> robot_actions;  // legal actions of the robot
};

void prepare_mind(Mind& m, const GomaStepInput& in, Planner& planner, Rng& rng);
Decision decide(Mind& m, const std::vector<Action>& robot_actions, Planner& planner, double cost, bool communicate);
Decision goma_step(Mind& m, const GomaStepInput& in, Planner& planner, Rng& rng, double cost);

json decision_to_json(const BeliefSchema& schema, const Decision& d);

}  // namespace goma
