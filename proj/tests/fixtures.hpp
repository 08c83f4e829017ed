#pragma once

#include <string>

#include "goma/harness.hpp"

namespace fixtures {

inline std::string source(const std::string& rel) { return std::string(GOMA_SOURCE_DIR) + "/" + rel; }

inline goma::json scenario(const std::string& name) {
  return goma::read_json_file(source("scenarios/" + name + ".json"));
}

// Kitchen with fridge.10 and cabinet.132, livingroom with coffeetable.11.
inline goma::json two_room_house() {
  return goma::json::parse(R"({
    "id": "two_room_house",
    "family": "household",
    "rooms": [{"id": "kitchen", "adjacent": ["livingroom"]}, {"id": "livingroom"}],
    "containers": [{"id": "fridge.10", "room": "kitchen"}, {"id": "cabinet.132", "room": "kitchen"}],
    "surfaces": [{"id": "kitchentable.1", "room": "kitchen"}, {"id": "coffeetable.11", "room": "livingroom"}],
    "agents": [{"id": "human", "role": "human", "room": "kitchen"},
               {"id": "robot", "role": "assistant", "room": "livingroom"}],
    "goal_space": [
      {"name": "set_table", "predicates": [{"categories": ["plate"], "target": "kitchentable.1", "count": 2}]},
      {"name": "serve_apple", "predicates": [{"categories": ["apple"], "target": "kitchentable.1", "count": 1}]}],
    "true_goal": "set_table",
    "objects": [
      {"id": "apple.3", "category": "apple", "location": "fridge.10"},
      {"id": "plate.7", "category": "plate", "location": "coffeetable.11"},
      {"id": "plate.8", "category": "plate", "location": "coffeetable.11"},
      {"id": "fork.9", "category": "fork", "location": "cabinet.132"}]
  })");
}

inline goma::WorldState kitchen_state(const std::string& name, uint64_t seed = 0) {
  return goma::load_scenario(goma::instantiate_scenario(scenario(name), seed));
}

}  // namespace fixtures
