#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace goma {

using json = nlohmann::json;

enum class Family : uint8_t { kitchen, household };
enum class Status : uint8_t { raw, chopped, cooked };
enum class Process : uint8_t { none, chop, cook };
enum class LocationKind : uint8_t { container, surface, floor, hand, served };

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IllegalAction : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string_view to_string(Family f);
std::string_view to_string(Status s);
Status parse_status(std::string_view s);

struct Room {
  std::string id;
  std::vector<int> adjacent;
};

struct ContainerInfo {
  std::string id;
  int room = -1;
  bool initially_open = false;
};

struct SurfaceInfo {
  std::string id;
  int room = -1;
};

struct ObjectInfo {
  std::string id;
  int category = -1;
  Process process = Process::none;
  int initial_location = -1;
  Status initial_status = Status::raw;
  // Locations this object may occupy; the belief domain is built from it.
  std::vector<int> candidates;
};

struct AgentInfo {
  std::string id;
  std::string role;  // "human" or "assistant"
  int initial_room = -1;
};

// Household goal predicate: at least `count` objects whose category is one of
// `categories` located at `target`.
struct Predicate {
  std::vector<int> categories;
  int target = -1;
  int count = 1;
};

// Kitchen recipe requirement: one object of `category` served with `status`.
struct Ingredient {
  int category = -1;
  Status status = Status::cooked;
};

struct Goal {
  std::string name;
  std::string kind;
  std::vector<Predicate> predicates;
  std::vector<Ingredient> ingredients;

  bool mentions_category(int category) const;
};

// Static description of a scenario. Shared between all states of an episode.
//
// Locations are flat integers: containers first, then surfaces, room floors,
// agent hands and finally the single "served" pseudo-location.
struct Layout {
  std::string id;
  Family family = Family::household;
  std::vector<Room> rooms;
  std::vector<ContainerInfo> containers;
  std::vector<SurfaceInfo> surfaces;
  std::vector<ObjectInfo> objects;
  std::vector<AgentInfo> agents;
  std::vector<std::string> categories;
  std::vector<Goal> goal_space;
  int true_goal = 0;
  bool goal_known = false;
  int initial_temperature = 5;
  uint64_t seed = 0;
  json config;

  int num_locations() const;
  int container_location(int c) const { return c; }
  int surface_location(int s) const;
  int floor_location(int room) const;
  int hand_location(int agent) const;
  int served_location() const;

  LocationKind location_kind(int loc) const;
  int location_index(int loc) const;
  // Room of a fixed location; -1 for hands and the served location.
  int location_room(int loc) const;
  std::string location_name(int loc) const;

  int find_location(std::string_view name) const;
  int find_object(std::string_view name) const;
  int find_room(std::string_view name) const;
  int find_agent(std::string_view name) const;
  int find_container(std::string_view name) const;
  int find_category(std::string_view name) const;
  int find_goal(std::string_view name) const;
  int human() const;
  int assistant() const;  // -1 when the scenario runs without an assistant

  int room_distance(int from, int to) const;
  // Agent indices in lexicographic id order; the order actions resolve in.
  const std::vector<int>& resolution_order() const { return order_; }

  void finalize();

 private:
  std::vector<int> order_;
  std::vector<std::vector<int>> dist_;
};

enum class ActionType : uint8_t { move, open, close, grab, put, chop, cook, serve, wait };

struct Action {
  ActionType type = ActionType::wait;
  int target = -1;       // room, container or object
  int destination = -1;  // put only: location index

  friend bool operator==(const Action&, const Action&) = default;

  static Action wait() { return {}; }
  static Action move(int room) { return {ActionType::move, room, -1}; }
  static Action open(int c) { return {ActionType::open, c, -1}; }
  static Action close(int c) { return {ActionType::close, c, -1}; }
  static Action grab(int o) { return {ActionType::grab, o, -1}; }
  static Action put(int o, int loc) { return {ActionType::put, o, loc}; }
  static Action chop(int o) { return {ActionType::chop, o, -1}; }
  static Action cook(int o) { return {ActionType::cook, o, -1}; }
  static Action serve() { return {ActionType::serve, -1, -1}; }
};

std::string encode(const Layout& layout, const Action& a);
Action parse_action(const Layout& layout, std::string_view text);
json action_to_json(const Layout& layout, const Action& a);
Action action_from_json(const Layout& layout, const json& j);

struct ObjectState {
  int location = -1;
  Status status = Status::raw;
  int temperature = 0;
  int cooked_at = -1;
  int served_by = -1;

  friend bool operator==(const ObjectState&, const ObjectState&) = default;
};

struct AgentState {
  int room = -1;
  int held = -1;
  Action last_action;

  friend bool operator==(const AgentState&, const AgentState&) = default;
};

class WorldState {
 public:
  WorldState() = default;
  explicit WorldState(std::shared_ptr<const Layout> layout);

  const Layout& layout() const { return *layout_; }
  const std::shared_ptr<const Layout>& layout_ptr() const { return layout_; }

  std::vector<uint8_t> open;
  std::vector<ObjectState> objects;
  std::vector<AgentState> agents;
  int clock = 0;

  // Room the object is currently in (through its holder for hands); -1 if served.
  int object_room(int o) const;
  // True when the object sits somewhere an agent in its room can see and reach.
  bool object_exposed(int o) const;
  bool location_accessible(int loc) const;
  int agent_in_room(int room, int except = -1) const;

  bool same_as(const WorldState& other) const;

 private:
  std::shared_ptr<const Layout> layout_;
};

struct SeenObject {
  int object = -1;
  ObjectState state;
};

struct SeenAgent {
  int agent = -1;
  int room = -1;
  int held = -1;
  Action last_action;
};

struct Observation {
  int agent = -1;
  int room = -1;
  int held = -1;
  int clock = 0;
  std::vector<SeenObject> objects;
  std::vector<std::pair<int, bool>> containers;  // container index, open
  std::vector<SeenAgent> agents;                 // other agents in the room
  std::vector<int> inspected;                    // locations fully visible
  std::vector<SeenObject> delivered;             // objects this agent served
};

struct StepResult {
  WorldState state;
  std::vector<Observation> observations;
  std::vector<Action> applied;  // after conflict resolution
};

std::shared_ptr<const Layout> build_layout(const json& config);
WorldState load_scenario(const json& config);
json read_json_file(const std::string& path);
// Same scenario with the assistant removed (the solo-human baseline).
json without_assistant(const json& config);

std::vector<Action> legal_actions(const WorldState& state, int agent);
bool is_legal(const WorldState& state, int agent, const Action& a);
// Applies one agent's action in place, without validation or clock change.
void apply_action(WorldState& state, int agent, const Action& a);
// Clock advance and cooling; run once after all actions of a step.
void advance_clock(WorldState& state);
StepResult step(const WorldState& state, const std::vector<Action>& actions);
Observation observe(const WorldState& state, int agent);
bool goal_satisfied(const WorldState& state, const Goal& goal);
std::vector<int> hot_completions(const WorldState& state);

json state_to_json(const WorldState& state);
json observation_to_json(const Layout& layout, const Observation& obs);

}  // namespace goma
