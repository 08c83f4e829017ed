#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <map>

#include "fixtures.hpp"
#include "goma/rng.hpp"

using namespace goma;

namespace {

bool contains(const std::vector<Action>& v, const Action& a) { return std::find(v.begin(), v.end(), a) != v.end(); }

bool sees(const Observation& o, int object) {
  return std::any_of(o.objects.begin(), o.objects.end(), [&](const SeenObject& s) { return s.object == object; });
}

// Visibility computed from the location alone.
bool expected_visible(const WorldState& s, int agent, int o) {
  const Layout& l = s.layout();
  const int loc = s.objects[o].location;
  const int room = s.agents[agent].room;
  switch (l.location_kind(loc)) {
    case LocationKind::container: return l.containers[loc].room == room && s.open[loc];
    case LocationKind::surface:
    case LocationKind::floor: return l.location_room(loc) == room;
    case LocationKind::hand: return s.agents[l.location_index(loc)].room == room;
    case LocationKind::served: return false;
  }
  return false;
}

std::vector<Action> random_joint(const WorldState& s, Rng& rng) {
  std::vector<Action> acts;
  for (size_t a = 0; a < s.agents.size(); ++a) {
    auto legal = legal_actions(s, static_cast<int>(a));
    acts.push_back(legal[rng.below(legal.size())]);
  }
  return acts;
}

}  // namespace

TEST_CASE("household config places apple.3 in the closed fridge") {
  WorldState s = load_scenario(fixtures::two_room_house());
  const Layout& l = s.layout();
  const int apple = l.find_object("apple.3");
  CHECK(s.objects[apple].location == l.find_location("fridge.10"));
  CHECK_FALSE(s.open[l.find_container("fridge.10")]);
}

TEST_CASE("kitchen agents start in different rooms") {
  WorldState s = fixtures::kitchen_state("kitchen_burger");
  const Layout& l = s.layout();
  CHECK(s.agents[l.human()].room != s.agents[l.assistant()].room);
}

TEST_CASE("config naming a missing container is rejected with its name") {
  json cfg = fixtures::two_room_house();
  cfg["objects"][1]["location"] = "cabinet.999";
  try {
    load_scenario(cfg);
    FAIL("expected a ScenarioError");
  } catch (const ScenarioError& e) {
    CHECK(std::string(e.what()).find("cabinet.999") != std::string::npos);
  }
}

TEST_CASE("closed containers hide their contents from the action set") {
  WorldState s = load_scenario(fixtures::two_room_house());
  const Layout& l = s.layout();
  const int h = l.human();
  auto legal = legal_actions(s, h);
  CHECK(contains(legal, Action::open(l.find_container("fridge.10"))));
  CHECK_FALSE(contains(legal, Action::grab(l.find_object("apple.3"))));
}

TEST_CASE("holding an object rules out grabs and allows same-room puts") {
  WorldState s = load_scenario(fixtures::two_room_house());
  const Layout& l = s.layout();
  const int r = l.assistant();
  const int plate = l.find_object("plate.7");
  s = step(s, {Action::wait(), Action::grab(plate)}).state;
  REQUIRE(s.agents[r].held == plate);
  auto legal = legal_actions(s, r);
  for (const auto& a : legal) CHECK(a.type != ActionType::grab);
  CHECK(contains(legal, Action::put(plate, l.find_location("coffeetable.11"))));
  CHECK_FALSE(contains(legal, Action::put(plate, l.find_location("kitchentable.1"))));
}

TEST_CASE("kitchen agents cannot enter each other's room") {
  WorldState s = fixtures::kitchen_state("kitchen_burger");
  const Layout& l = s.layout();
  for (int a : {l.human(), l.assistant()}) {
    const int other = s.agents[a == l.human() ? l.assistant() : l.human()].room;
    CHECK_FALSE(contains(legal_actions(s, a), Action::move(other)));
  }
}

TEST_CASE("waiting only advances the clock") {
  WorldState s = load_scenario(fixtures::two_room_house());
  WorldState next = step(s, {Action::wait(), Action::wait()}).state;
  CHECK(next.clock == s.clock + 1);
  CHECK(next.objects == s.objects);
  CHECK(next.open == s.open);
}

TEST_CASE("an item cooked at clock 8 has temperature 2 at clock 11") {
  WorldState s = fixtures::kitchen_state("kitchen_burger");
  const Layout& l = s.layout();
  REQUIRE(l.initial_temperature == 5);
  const int patty = l.find_object("patty.1");
  s.clock = 8;
  s.objects[patty].status = Status::cooked;
  s.objects[patty].cooked_at = 8;
  s.objects[patty].temperature = l.initial_temperature;
  for (int i = 0; i < 3; ++i) advance_clock(s);
  CHECK(s.clock == 11);
  CHECK(s.objects[patty].temperature == 2);
}

TEST_CASE("opening the fridge reveals apple.3") {
  WorldState s = load_scenario(fixtures::two_room_house());
  const Layout& l = s.layout();
  const int h = l.human();
  const int apple = l.find_object("apple.3");
  CHECK_FALSE(sees(observe(s, h), apple));
  auto res = step(s, {Action::open(l.find_container("fridge.10")), Action::wait()});
  CHECK(sees(res.observations[h], apple));
}

TEST_CASE("household goal counts objects at the target") {
  WorldState s = load_scenario(fixtures::two_room_house());
  const Layout& l = s.layout();
  const Goal& g = l.goal_space[l.find_goal("set_table")];
  const int table = l.find_location("kitchentable.1");
  s.objects[l.find_object("plate.7")].location = table;
  CHECK_FALSE(goal_satisfied(s, g));
  s.objects[l.find_object("plate.8")].location = table;
  CHECK(goal_satisfied(s, g));
}

TEST_CASE("burger with raw lettuce is not done") {
  WorldState s = fixtures::kitchen_state("kitchen_burger");
  const Layout& l = s.layout();
  for (size_t o = 0; o < s.objects.size(); ++o) {
    s.objects[o].location = l.served_location();
    s.objects[o].status = l.objects[o].category == l.find_category("lettuce") ? Status::raw
                          : l.objects[o].process == Process::chop             ? Status::chopped
                                                                              : Status::cooked;
  }
  const Goal& g = l.goal_space[l.true_goal];
  CHECK_FALSE(goal_satisfied(s, g));
  s.objects[l.find_object("lettuce.1")].status = Status::chopped;
  CHECK(goal_satisfied(s, g));
}

TEST_CASE("random play conserves objects and hides what it should") {
  for (const std::string name : {"household_set_table", "kitchen_ramen"}) {
    for (uint64_t seed = 0; seed < 20; ++seed) {
      WorldState s = load_scenario(instantiate_scenario(fixtures::scenario(name), seed));
      const Layout& l = s.layout();
      Rng rng(seed);
      for (int t = 0; t < 60; ++t) {
        s = step(s, random_joint(s, rng)).state;
        std::map<int, int> in_hand;
        for (size_t o = 0; o < s.objects.size(); ++o) {
          const int loc = s.objects[o].location;
          REQUIRE(loc >= 0);
          REQUIRE(loc < l.num_locations());
          if (l.location_kind(loc) == LocationKind::hand) ++in_hand[l.location_index(loc)];
        }
        for (size_t a = 0; a < s.agents.size(); ++a) {
          const int held = s.agents[a].held;
          CHECK(in_hand[static_cast<int>(a)] == (held >= 0 ? 1 : 0));
          if (held >= 0) CHECK(s.objects[held].location == l.hand_location(static_cast<int>(a)));
          const Observation o = observe(s, static_cast<int>(a));
          for (size_t obj = 0; obj < s.objects.size(); ++obj)
            CHECK(sees(o, static_cast<int>(obj)) == expected_visible(s, static_cast<int>(a), static_cast<int>(obj)));
        }
      }
    }
  }
}

TEST_CASE("same actions give the same trajectory") {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const json cfg = instantiate_scenario(fixtures::scenario("kitchen_pasta"), seed);
    WorldState a = load_scenario(cfg), b = load_scenario(cfg);
    Rng rng(seed);
    for (int t = 0; t < 40; ++t) {
      auto acts = random_joint(a, rng);
      a = step(a, acts).state;
      b = step(b, acts).state;
      REQUIRE(state_to_json(a) == state_to_json(b));
    }
  }
}

TEST_CASE("cooked items cool monotonically to zero") {
  for (uint64_t seed = 0; seed < 30; ++seed) {
    WorldState s = fixtures::kitchen_state("kitchen_steak_fries", seed);
    const Layout& l = s.layout();
    Rng rng(seed + 100);
    std::vector<int> last(s.objects.size(), 0);
    for (int t = 0; t < 80; ++t) {
      s = step(s, random_joint(s, rng)).state;
      for (size_t o = 0; o < s.objects.size(); ++o) {
        const auto& st = s.objects[o];
        if (st.cooked_at < 0) {
          CHECK(st.temperature == 0);
          continue;
        }
        if (st.cooked_at < s.clock - 1) CHECK(st.temperature <= last[o]);
        if (s.clock - st.cooked_at >= l.initial_temperature) CHECK(st.temperature == 0);
        last[o] = st.temperature;
      }
    }
  }
}
