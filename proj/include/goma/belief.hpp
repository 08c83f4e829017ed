#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "goma/world.hpp"

namespace goma {

enum class SubStateKind : uint8_t { object, container };

// One value of a sub-state domain. For container flags `location` is 0 for
// closed and 1 for open and `status` is unused.
struct Value {
  int location = -1;
  Status status = Status::raw;

  friend bool operator==(const Value&, const Value&) = default;
};

struct SubState {
  std::string id;  // "plate.7" or "fridge.10/open"
  SubStateKind kind = SubStateKind::object;
  int index = -1;  // object or container index in the layout
  std::vector<Value> values;
  int offset = 0;  // into the flat probability vector
};

class BeliefSchema {
 public:
  explicit BeliefSchema(std::shared_ptr<const Layout> layout);

  const Layout& layout() const { return *layout_; }
  const std::shared_ptr<const Layout>& layout_ptr() const { return layout_; }
  const std::vector<SubState>& substates() const { return substates_; }
  const SubState& operator[](int n) const { return substates_[n]; }
  int size() const { return static_cast<int>(substates_.size()); }
  int total_values() const { return total_; }

  int object_substate(int object) const { return object; }
  int container_substate(int container) const {
    return static_cast<int>(layout_->objects.size()) + container;
  }
  // -1 for unknown ids.
  int find(std::string_view id) const;
  // Index into the sub-state's value list, -1 if outside the domain.
  int value_index(int n, Value v) const;

 private:
  std::shared_ptr<const Layout> layout_;
  std::vector<SubState> substates_;
  int total_ = 0;
};

std::shared_ptr<const BeliefSchema> make_schema(std::shared_ptr<const Layout> layout);

// Level-0 belief: one categorical distribution per sub-state plus the owner's
// own pose. Value semantics; copies are cheap enough to pass around.
class Belief0 {
 public:
  Belief0() = default;
  Belief0(std::shared_ptr<const BeliefSchema> schema, int owner);

  const BeliefSchema& schema() const { return *schema_; }
  const std::shared_ptr<const BeliefSchema>& schema_ptr() const { return schema_; }
  const Layout& layout() const { return schema_->layout(); }
  int owner() const { return owner_; }
  int size() const { return schema_->size(); }

  std::span<const double> dist(int n) const;
  void set_dist(int n, std::span<const double> p, int stamp);
  double prob(int n, Value v) const;
  double entropy(int n) const;
  int mode(int n) const;  // index of the most likely value, lowest index on ties

  // Clock of the most recent evidence or message about the sub-state.
  int stamp(int n) const { return stamp_[n]; }
  int clock() const { return clock_; }
  void set_clock(int clock) { clock_ = clock; }

  // Last known room of every agent; exact for the owner.
  int room(int agent) const { return rooms_[agent]; }
  void set_room(int agent, int room) { rooms_[agent] = room; }
  int held() const { return held_; }
  void set_held(int object) { held_ = object; }

  int contradictions() const { return contradictions_; }
  void note_contradiction() { ++contradictions_; }

  const std::vector<double>& raw() const { return p_; }
  friend bool operator==(const Belief0& a, const Belief0& b) {
    return a.owner_ == b.owner_ && a.p_ == b.p_;
  }

 private:
  std::shared_ptr<const BeliefSchema> schema_;
  int owner_ = -1;
  std::vector<double> p_;
  std::vector<int> stamp_;
  std::vector<int> rooms_;
  int held_ = -1;
  int clock_ = 0;
  int contradictions_ = 0;
};

struct KnowledgeItem {
  int substate = -1;
  std::vector<double> dist;
};
using KnowledgeSet = std::vector<KnowledgeItem>;

double entropy(std::span<const double> p);

Belief0 init_uniform(std::shared_ptr<const BeliefSchema> schema, int agent);
Belief0 init_uniform(const WorldState& state, int agent);

Belief0 update_from_observation(const Belief0& b, const Observation& obs);
void observe_into(Belief0& b, const Observation& obs);

// Throws std::out_of_range for an unknown sub-state id and
// std::invalid_argument for a distribution of the wrong size.
Belief0 update_from_message(const Belief0& b, std::string_view substate, std::span<const double> p);
Belief0 update_from_message(const Belief0& b, int substate, std::span<const double> p);

KnowledgeSet knowledge(const Belief0& b, double h_max);
bool knows(const Belief0& b, int substate, double h_max);

// Copy of b with one sub-state replaced; b itself is untouched.
Belief0 merge(const Belief0& b, int substate, std::span<const double> p);
Belief0 merge(const Belief0& b, std::string_view substate, std::span<const double> p);

// Largest |sum - 1| over all sub-states.
double normalization_error(const Belief0& b);

json belief_to_json(const Belief0& b);

}  // namespace goma
