#include "goma/belief.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace goma {

BeliefSchema::BeliefSchema(std::shared_ptr<const Layout> layout) : layout_(std::move(layout)) {
  const Layout& l = *layout_;
  for (size_t o = 0; o < l.objects.size(); ++o) {
    const ObjectInfo& info = l.objects[o];
    SubState s;
    s.id = info.id;
    s.kind = SubStateKind::object;
    s.index = static_cast<int>(o);
    std::vector<Status> statuses{Status::raw};
    if (l.family == Family::kitchen) {
      if (info.process == Process::chop) statuses.push_back(Status::chopped);
      if (info.process == Process::cook) statuses.push_back(Status::cooked);
    }
    if (std::find(statuses.begin(), statuses.end(), info.initial_status) == statuses.end())
      statuses.push_back(info.initial_status);
    for (int loc : info.candidates)
      for (Status st : statuses) {
        if (l.location_kind(loc) == LocationKind::served && st == Status::raw) continue;
        s.values.push_back({loc, st});
      }
    substates_.push_back(std::move(s));
  }
  for (size_t c = 0; c < l.containers.size(); ++c) {
    SubState s;
    s.id = l.containers[c].id + "/open";
    s.kind = SubStateKind::container;
    s.index = static_cast<int>(c);
    s.values = {{0, Status::raw}, {1, Status::raw}};
    substates_.push_back(std::move(s));
  }
  for (auto& s : substates_) {
    s.offset = total_;
    total_ += static_cast<int>(s.values.size());
  }
}

int BeliefSchema::find(std::string_view id) const {
  for (size_t i = 0; i < substates_.size(); ++i)
    if (substates_[i].id == id) return static_cast<int>(i);
  return -1;
}

int BeliefSchema::value_index(int n, Value v) const {
  const auto& vals = substates_[n].values;
  if (substates_[n].kind == SubStateKind::container) v.status = Status::raw;
  for (size_t i = 0; i < vals.size(); ++i)
    if (vals[i] == v) return static_cast<int>(i);
  return -1;
}

std::shared_ptr<const BeliefSchema> make_schema(std::shared_ptr<const Layout> layout) {
  return std::make_shared<const BeliefSchema>(std::move(layout));
}

// ---------------------------------------------------------------------------

Belief0::Belief0(std::shared_ptr<const BeliefSchema> schema, int owner)
    : schema_(std::move(schema)), owner_(owner) {
  p_.assign(schema_->total_values(), 0.0);
  stamp_.assign(schema_->size(), 0);
  const Layout& l = schema_->layout();
  rooms_.resize(l.agents.size());
  for (size_t a = 0; a < l.agents.size(); ++a) rooms_[a] = l.agents[a].initial_room;
}

std::span<const double> Belief0::dist(int n) const {
  const SubState& s = (*schema_)[n];
  return {p_.data() + s.offset, s.values.size()};
}

void Belief0::set_dist(int n, std::span<const double> p, int stamp) {
  const SubState& s = (*schema_)[n];
  if (p.size() != s.values.size())
    throw std::invalid_argument("distribution for " + s.id + " has " + std::to_string(p.size()) +
                                " entries, expected " + std::to_string(s.values.size()));
  std::copy(p.begin(), p.end(), p_.begin() + s.offset);
  stamp_[n] = stamp;
}

double Belief0::prob(int n, Value v) const {
  int i = schema_->value_index(n, v);
  return i < 0 ? 0.0 : dist(n)[i];
}

double Belief0::entropy(int n) const { return goma::entropy(dist(n)); }

int Belief0::mode(int n) const {
  auto d = dist(n);
  return static_cast<int>(std::max_element(d.begin(), d.end()) - d.begin());
}

double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double x : p)
    if (x > 0.0) h -= x * std::log(x);
  return h;
}

// ---------------------------------------------------------------------------

Belief0 init_uniform(std::shared_ptr<const BeliefSchema> schema, int agent) {
  Belief0 b(schema, agent);
  for (int n = 0; n < schema->size(); ++n) {
    std::vector<double> u((*schema)[n].values.size(), 1.0 / static_cast<double>((*schema)[n].values.size()));
    b.set_dist(n, u, 0);
  }
  return b;
}

Belief0 init_uniform(const WorldState& state, int agent) {
  return init_uniform(make_schema(state.layout_ptr()), agent);
}

namespace {

void point_mass(Belief0& b, int n, int value, int clock) {
  auto d = b.dist(n);
  if (d[value] <= 0.0) b.note_contradiction();
  std::vector<double> p(d.size(), 0.0);
  p[value] = 1.0;
  b.set_dist(n, p, clock);
}

}  // namespace

void observe_into(Belief0& b, const Observation& obs) {
  const BeliefSchema& schema = b.schema();
  const Layout& l = b.layout();
  if (obs.agent != b.owner()) throw std::invalid_argument("observation belongs to another agent");
  b.set_clock(obs.clock);
  b.set_room(obs.agent, obs.room);
  b.set_held(obs.held);
  for (const auto& sa : obs.agents) b.set_room(sa.agent, sa.room);

  std::vector<uint8_t> seen(l.objects.size(), 0);
  auto see = [&](const SeenObject& so) {
    int n = schema.object_substate(so.object);
    int v = schema.value_index(n, {so.state.location, so.state.status});
    if (v < 0)
      throw std::logic_error("object " + l.objects[so.object].id + " seen outside its domain at " +
                             l.location_name(so.state.location));
    seen[so.object] = 1;
    point_mass(b, n, v, obs.clock);
  };
  for (const auto& so : obs.objects) see(so);
  for (const auto& so : obs.delivered) see(so);

  for (const auto& [c, is_open] : obs.containers)
    point_mass(b, schema.container_substate(c), is_open ? 1 : 0, obs.clock);

  if (obs.inspected.empty()) return;
  for (size_t o = 0; o < l.objects.size(); ++o) {
    if (seen[o]) continue;
    const int n = schema.object_substate(static_cast<int>(o));
    const auto& vals = schema[n].values;
    auto d = b.dist(n);
    std::vector<double> p(d.begin(), d.end());
    bool touched = false;
    for (size_t i = 0; i < vals.size(); ++i)
      if (p[i] > 0.0 && std::binary_search(obs.inspected.begin(), obs.inspected.end(), vals[i].location)) {
        p[i] = 0.0;
        touched = true;
      }
    if (!touched) continue;
    double total = 0.0;
    for (double x : p) total += x;
    if (total <= 0.0) {
      // Everything we believed was ruled out: fall back to the unexplored values.
      b.note_contradiction();
      int open_values = 0;
      for (size_t i = 0; i < vals.size(); ++i)
        if (!std::binary_search(obs.inspected.begin(), obs.inspected.end(), vals[i].location)) {
          p[i] = 1.0;
          ++open_values;
        }
      if (open_values == 0) std::fill(p.begin(), p.end(), 1.0);
      total = 0.0;
      for (double x : p) total += x;
    }
    for (double& x : p) x /= total;
    b.set_dist(n, p, obs.clock);
  }
}

Belief0 update_from_observation(const Belief0& b, const Observation& obs) {
  Belief0 out = b;
  observe_into(out, obs);
  return out;
}

Belief0 update_from_message(const Belief0& b, int substate, std::span<const double> p) {
  if (substate < 0 || substate >= b.size())
    throw std::out_of_range("unknown sub-state index " + std::to_string(substate));
  Belief0 out = b;
  out.set_dist(substate, p, b.clock());
  return out;
}

Belief0 update_from_message(const Belief0& b, std::string_view substate, std::span<const double> p) {
  int n = b.schema().find(substate);
  if (n < 0) throw std::out_of_range("unknown sub-state '" + std::string(substate) + "'");
  return update_from_message(b, n, p);
}

KnowledgeSet knowledge(const Belief0& b, double h_max) {
  KnowledgeSet out;
  for (int n = 0; n < b.size(); ++n) {
    if (!(b.entropy(n) < h_max)) continue;
    auto d = b.dist(n);
    out.push_back({n, std::vector<double>(d.begin(), d.end())});
  }
  return out;
}

bool knows(const Belief0& b, int substate, double h_max) { return b.entropy(substate) < h_max; }

Belief0 merge(const Belief0& b, int substate, std::span<const double> p) {
  return update_from_message(b, substate, p);
}

Belief0 merge(const Belief0& b, std::string_view substate, std::span<const double> p) {
  return update_from_message(b, substate, p);
}

double normalization_error(const Belief0& b) {
  double worst = 0.0;
  for (int n = 0; n < b.size(); ++n) {
    double total = 0.0;
    for (double x : b.dist(n)) total += x;
    worst = std::max(worst, std::abs(total - 1.0));
  }
  return worst;
}

json belief_to_json(const Belief0& b) {
  const Layout& l = b.layout();
  json j = json::object();
  for (int n = 0; n < b.size(); ++n) {
    const SubState& s = b.schema()[n];
    json entry = json::object();
    auto d = b.dist(n);
    for (size_t i = 0; i < d.size(); ++i) {
      if (d[i] <= 0.0) continue;
      std::string key;
      if (s.kind == SubStateKind::container)
        key = s.values[i].location ? "open" : "closed";
      else {
        key = l.location_name(s.values[i].location);
        if (l.family == Family::kitchen) key += "|" + std::string(to_string(s.values[i].status));
      }
      entry[key] = d[i];
    }
    j[s.id] = entry;
  }
  return j;
}

}  // namespace goma
