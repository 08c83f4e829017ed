#include "goma/world.hpp"

#include <algorithm>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

namespace goma {

std::string_view to_string(Family f) {
  return f == Family::kitchen ? "kitchen" : "household";
}

std::string_view to_string(Status s) {
  switch (s) {
    case Status::raw: return "raw";
    case Status::chopped: return "chopped";
    case Status::cooked: return "cooked";
  }
  return "raw";
}

Status parse_status(std::string_view s) {
  if (s == "raw") return Status::raw;
  if (s == "chopped") return Status::chopped;
  if (s == "cooked") return Status::cooked;
  throw ScenarioError("unknown status '" + std::string(s) + "'");
}

bool Goal::mentions_category(int category) const {
  for (const auto& p : predicates)
    if (std::find(p.categories.begin(), p.categories.end(), category) != p.categories.end())
      return true;
  for (const auto& i : ingredients)
    if (i.category == category) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Layout

int Layout::num_locations() const {
  return static_cast<int>(containers.size() + surfaces.size() + rooms.size() + agents.size()) + 1;
}
int Layout::surface_location(int s) const { return static_cast<int>(containers.size()) + s; }
int Layout::floor_location(int room) const {
  return static_cast<int>(containers.size() + surfaces.size()) + room;
}
int Layout::hand_location(int agent) const {
  return static_cast<int>(containers.size() + surfaces.size() + rooms.size()) + agent;
}
int Layout::served_location() const { return num_locations() - 1; }

LocationKind Layout::location_kind(int loc) const {
  int c = static_cast<int>(containers.size());
  int s = c + static_cast<int>(surfaces.size());
  int r = s + static_cast<int>(rooms.size());
  int a = r + static_cast<int>(agents.size());
  if (loc < c) return LocationKind::container;
  if (loc < s) return LocationKind::surface;
  if (loc < r) return LocationKind::floor;
  if (loc < a) return LocationKind::hand;
  return LocationKind::served;
}

int Layout::location_index(int loc) const {
  switch (location_kind(loc)) {
    case LocationKind::container: return loc;
    case LocationKind::surface: return loc - static_cast<int>(containers.size());
    case LocationKind::floor: return loc - static_cast<int>(containers.size() + surfaces.size());
    case LocationKind::hand:
      return loc - static_cast<int>(containers.size() + surfaces.size() + rooms.size());
    case LocationKind::served: return 0;
  }
  return -1;
}

int Layout::location_room(int loc) const {
  switch (location_kind(loc)) {
    case LocationKind::container: return containers[loc].room;
    case LocationKind::surface: return surfaces[location_index(loc)].room;
    case LocationKind::floor: return location_index(loc);
    default: return -1;
  }
}

std::string Layout::location_name(int loc) const {
  switch (location_kind(loc)) {
    case LocationKind::container: return containers[loc].id;
    case LocationKind::surface: return surfaces[location_index(loc)].id;
    case LocationKind::floor: return "floor:" + rooms[location_index(loc)].id;
    case LocationKind::hand: return "hand:" + agents[location_index(loc)].id;
    case LocationKind::served: return "served";
  }
  return "?";
}

namespace {

template <typename T>
int find_by_id(const std::vector<T>& items, std::string_view name) {
  for (size_t i = 0; i < items.size(); ++i)
    if (items[i].id == name) return static_cast<int>(i);
  return -1;
}

}  // namespace

int Layout::find_location(std::string_view name) const {
  if (int c = find_by_id(containers, name); c >= 0) return container_location(c);
  if (int s = find_by_id(surfaces, name); s >= 0) return surface_location(s);
  if (name == "served") return served_location();
  if (name.starts_with("floor:")) {
    int r = find_room(name.substr(6));
    return r < 0 ? -1 : floor_location(r);
  }
  if (name.starts_with("hand:")) {
    int a = find_agent(name.substr(5));
    return a < 0 ? -1 : hand_location(a);
  }
  if (int r = find_room(name); r >= 0) return floor_location(r);
  return -1;
}

int Layout::find_object(std::string_view name) const { return find_by_id(objects, name); }
int Layout::find_room(std::string_view name) const { return find_by_id(rooms, name); }
int Layout::find_agent(std::string_view name) const { return find_by_id(agents, name); }
int Layout::find_container(std::string_view name) const { return find_by_id(containers, name); }

int Layout::find_category(std::string_view name) const {
  for (size_t i = 0; i < categories.size(); ++i)
    if (categories[i] == name) return static_cast<int>(i);
  return -1;
}

int Layout::find_goal(std::string_view name) const {
  for (size_t i = 0; i < goal_space.size(); ++i)
    if (goal_space[i].name == name) return static_cast<int>(i);
  return -1;
}

int Layout::human() const {
  for (size_t i = 0; i < agents.size(); ++i)
    if (agents[i].role == "human") return static_cast<int>(i);
  return -1;
}

int Layout::assistant() const {
  for (size_t i = 0; i < agents.size(); ++i)
    if (agents[i].role == "assistant") return static_cast<int>(i);
  return -1;
}

int Layout::room_distance(int from, int to) const { return dist_[from][to]; }

void Layout::finalize() {
  order_.resize(agents.size());
  for (size_t i = 0; i < agents.size(); ++i) order_[i] = static_cast<int>(i);
  std::sort(order_.begin(), order_.end(),
            [&](int a, int b) { return agents[a].id < agents[b].id; });

  const int n = static_cast<int>(rooms.size());
  const int inf = 1 << 20;
  dist_.assign(n, std::vector<int>(n, inf));
  for (int s = 0; s < n; ++s) {
    std::queue<int> q;
    dist_[s][s] = 0;
    q.push(s);
    while (!q.empty()) {
      int r = q.front();
      q.pop();
      for (int nb : rooms[r].adjacent) {
        if (dist_[s][nb] != inf) continue;
        dist_[s][nb] = dist_[s][r] + 1;
        q.push(nb);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Scenario loading

namespace {

int require_room(const Layout& l, const std::string& name, const std::string& context) {
  int r = l.find_room(name);
  if (r < 0) throw ScenarioError("unknown room '" + name + "' referenced by " + context);
  return r;
}

int intern_category(Layout& l, const std::string& name) {
  int c = l.find_category(name);
  if (c >= 0) return c;
  l.categories.push_back(name);
  return static_cast<int>(l.categories.size()) - 1;
}

}  // namespace

std::shared_ptr<const Layout> build_layout(const json& config) {
  auto layout = std::make_shared<Layout>();
  Layout& l = *layout;
  l.config = config;
  l.id = config.value("id", std::string("scenario"));

  const std::string family = config.at("family").get<std::string>();
  if (family == "kitchen")
    l.family = Family::kitchen;
  else if (family == "household")
    l.family = Family::household;
  else
    throw ScenarioError("unknown scenario family '" + family + "'");

  std::set<std::string> names;
  auto claim = [&](const std::string& id, const char* what) {
    if (!names.insert(id).second)
      throw ScenarioError(std::string("duplicate ") + what + " id '" + id + "'");
  };

  for (const auto& r : config.at("rooms")) {
    Room room;
    room.id = r.at("id").get<std::string>();
    claim(room.id, "room");
    l.rooms.push_back(room);
  }
  if (l.rooms.empty()) throw ScenarioError("scenario has no rooms");
  {
    size_t i = 0;
    for (const auto& r : config.at("rooms")) {
      for (const auto& adj : r.value("adjacent", json::array())) {
        int other = require_room(l, adj.get<std::string>(), "room " + l.rooms[i].id);
        auto& a = l.rooms[i].adjacent;
        if (std::find(a.begin(), a.end(), other) == a.end()) a.push_back(other);
        auto& b = l.rooms[other].adjacent;
        if (std::find(b.begin(), b.end(), static_cast<int>(i)) == b.end())
          b.push_back(static_cast<int>(i));
      }
      ++i;
    }
    for (auto& room : l.rooms) std::sort(room.adjacent.begin(), room.adjacent.end());
  }

  for (const auto& c : config.value("containers", json::array())) {
    ContainerInfo info;
    info.id = c.at("id").get<std::string>();
    claim(info.id, "container");
    info.room = require_room(l, c.at("room").get<std::string>(), "container " + info.id);
    info.initially_open = c.value("open", false);
    l.containers.push_back(info);
  }
  for (const auto& s : config.value("surfaces", json::array())) {
    SurfaceInfo info;
    info.id = s.at("id").get<std::string>();
    claim(info.id, "surface");
    info.room = require_room(l, s.at("room").get<std::string>(), "surface " + info.id);
    l.surfaces.push_back(info);
  }

  for (const auto& a : config.at("agents")) {
    AgentInfo info;
    info.id = a.at("id").get<std::string>();
    claim(info.id, "agent");
    info.role = a.value("role", std::string("human"));
    if (info.role != "human" && info.role != "assistant")
      throw ScenarioError("agent " + info.id + " has unknown role '" + info.role + "'");
    info.initial_room = require_room(l, a.at("room").get<std::string>(), "agent " + info.id);
    l.agents.push_back(info);
  }
  if (l.agents.empty() || l.agents.size() > 2)
    throw ScenarioError("scenario needs one or two agents");
  if (l.human() < 0) throw ScenarioError("scenario has no human agent");
  if (l.agents.size() == 2 && l.agents[0].role == l.agents[1].role)
    throw ScenarioError("scenario needs one human and one assistant");
  if (l.family == Family::kitchen && l.agents.size() == 2 &&
      l.agents[0].initial_room == l.agents[1].initial_room)
    throw ScenarioError("kitchen agents must start in different rooms");

  // Goals first, so object processing can be derived from recipes.
  for (const auto& g : config.at("goal_space")) {
    Goal goal;
    goal.name = g.at("name").get<std::string>();
    goal.kind = g.value("kind", goal.name);
    for (const auto& p : g.value("predicates", json::array())) {
      Predicate pred;
      for (const auto& c : p.at("categories")) pred.categories.push_back(intern_category(l, c.get<std::string>()));
      const std::string target = p.at("target").get<std::string>();
      pred.target = l.find_location(target);
      if (pred.target < 0 || (l.location_kind(pred.target) != LocationKind::container &&
                              l.location_kind(pred.target) != LocationKind::surface))
        throw ScenarioError("goal " + goal.name + " targets unknown location '" + target + "'");
      pred.count = p.value("count", 1);
      if (pred.count < 1) throw ScenarioError("goal " + goal.name + " has a non-positive count");
      goal.predicates.push_back(std::move(pred));
    }
    for (const auto& i : g.value("ingredients", json::array())) {
      Ingredient ing;
      ing.category = intern_category(l, i.at("category").get<std::string>());
      ing.status = parse_status(i.at("status").get<std::string>());
      if (ing.status == Status::raw) throw ScenarioError("goal " + goal.name + " requires a raw ingredient");
      goal.ingredients.push_back(ing);
    }
    if (goal.predicates.empty() && goal.ingredients.empty())
      throw ScenarioError("goal " + goal.name + " is empty");
    if (l.find_goal(goal.name) >= 0) throw ScenarioError("duplicate goal '" + goal.name + "'");
    l.goal_space.push_back(std::move(goal));
  }
  if (l.goal_space.empty()) throw ScenarioError("empty goal space");
  l.true_goal = l.find_goal(config.at("true_goal").get<std::string>());
  if (l.true_goal < 0) throw ScenarioError("true_goal is not in the goal space");
  l.goal_known = config.value("goal_known", l.family == Family::kitchen);
  l.initial_temperature = config.value("initial_temperature", 5);
  if (l.initial_temperature < 0) throw ScenarioError("initial_temperature must be >= 0");
  l.seed = config.value("seed", 0ULL);

  for (const auto& o : config.at("objects")) {
    ObjectInfo info;
    info.id = o.at("id").get<std::string>();
    claim(info.id, "object");
    info.category = intern_category(l, o.at("category").get<std::string>());
    const std::string where = o.contains("location") || !o.contains("placements")
                                  ? o.at("location").get<std::string>()
                                  : o["placements"].at(0).get<std::string>();
    info.initial_location = l.find_location(where);
    if (info.initial_location < 0 || l.location_kind(info.initial_location) == LocationKind::hand ||
        l.location_kind(info.initial_location) == LocationKind::served)
      throw ScenarioError("object " + info.id + " placed in nonexistent location '" + where + "'");
    info.initial_status = parse_status(o.value("status", std::string("raw")));
    l.objects.push_back(std::move(info));
  }

  for (auto& info : l.objects) {
    info.process = Process::none;
    for (const auto& g : l.goal_space)
      for (const auto& ing : g.ingredients)
        if (ing.category == info.category)
          info.process = ing.status == Status::chopped ? Process::chop : Process::cook;
  }
  {
    size_t i = 0;
    for (const auto& o : config.at("objects")) {
      auto& info = l.objects[i++];
      if (o.contains("process")) {
        std::string p = o["process"].get<std::string>();
        info.process = p == "chop" ? Process::chop : p == "cook" ? Process::cook : Process::none;
      }
      const int home_room = l.location_room(info.initial_location);
      std::vector<int> cands;
      if (o.contains("candidates")) {
        for (const auto& c : o["candidates"]) {
          int loc = l.find_location(c.get<std::string>());
          if (loc < 0)
            throw ScenarioError("object " + info.id + " lists nonexistent candidate '" +
                                c.get<std::string>() + "'");
          cands.push_back(loc);
        }
      } else {
        for (size_t c = 0; c < l.containers.size(); ++c)
          if (l.family == Family::household || l.containers[c].room == home_room)
            cands.push_back(l.container_location(static_cast<int>(c)));
        for (size_t s = 0; s < l.surfaces.size(); ++s)
          if (l.family == Family::household || l.surfaces[s].room == home_room)
            cands.push_back(l.surface_location(static_cast<int>(s)));
      }
      cands.push_back(info.initial_location);
      for (size_t a = 0; a < l.agents.size(); ++a)
        if (l.family == Family::household || l.agents.size() == 1 ||
            l.agents[a].initial_room == home_room)
          cands.push_back(l.hand_location(static_cast<int>(a)));
      if (l.family == Family::kitchen) cands.push_back(l.served_location());
      std::sort(cands.begin(), cands.end());
      cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
      info.candidates = std::move(cands);
    }
  }

  l.finalize();
  return layout;
}

WorldState load_scenario(const json& config) {
  auto layout = build_layout(config);
  WorldState s(layout);
  for (size_t c = 0; c < layout->containers.size(); ++c)
    s.open[c] = layout->containers[c].initially_open ? 1 : 0;
  for (size_t o = 0; o < layout->objects.size(); ++o) {
    const auto& info = layout->objects[o];
    s.objects[o].location = info.initial_location;
    s.objects[o].status = info.initial_status;
    if (info.initial_status == Status::cooked) {
      s.objects[o].temperature = layout->initial_temperature;
      s.objects[o].cooked_at = 0;
    }
  }
  for (size_t a = 0; a < layout->agents.size(); ++a) s.agents[a].room = layout->agents[a].initial_room;
  return s;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ScenarioError("malformed JSON in '" + path + "': " + e.what());
  }
}

json without_assistant(const json& config) {
  json out = config;
  json agents = json::array();
  for (const auto& a : config.at("agents"))
    if (a.value("role", std::string("human")) != "assistant") agents.push_back(a);
  out["agents"] = agents;
  return out;
}

// ---------------------------------------------------------------------------
// State

WorldState::WorldState(std::shared_ptr<const Layout> layout) : layout_(std::move(layout)) {
  open.assign(layout_->containers.size(), 0);
  objects.resize(layout_->objects.size());
  agents.resize(layout_->agents.size());
}

int WorldState::object_room(int o) const {
  int loc = objects[o].location;
  switch (layout_->location_kind(loc)) {
    case LocationKind::hand: return agents[layout_->location_index(loc)].room;
    case LocationKind::served: return -1;
    default: return layout_->location_room(loc);
  }
}

bool WorldState::location_accessible(int loc) const {
  switch (layout_->location_kind(loc)) {
    case LocationKind::container: return open[loc] != 0;
    case LocationKind::served: return false;
    default: return true;
  }
}

bool WorldState::object_exposed(int o) const { return location_accessible(objects[o].location); }

int WorldState::agent_in_room(int room, int except) const {
  for (size_t a = 0; a < agents.size(); ++a)
    if (static_cast<int>(a) != except && agents[a].room == room) return static_cast<int>(a);
  return -1;
}

bool WorldState::same_as(const WorldState& other) const {
  return clock == other.clock && open == other.open && objects == other.objects &&
         agents == other.agents;
}

// ---------------------------------------------------------------------------
// Actions

std::string encode(const Layout& l, const Action& a) {
  switch (a.type) {
    case ActionType::move: return "move(" + l.rooms[a.target].id + ")";
    case ActionType::open: return "open(" + l.containers[a.target].id + ")";
    case ActionType::close: return "close(" + l.containers[a.target].id + ")";
    case ActionType::grab: return "grab(" + l.objects[a.target].id + ")";
    case ActionType::put:
      return "put(" + l.objects[a.target].id + "," + l.location_name(a.destination) + ")";
    case ActionType::chop: return "chop(" + l.objects[a.target].id + ")";
    case ActionType::cook: return "cook(" + l.objects[a.target].id + ")";
    case ActionType::serve: return "serve";
    case ActionType::wait: return "wait";
  }
  return "wait";
}

Action parse_action(const Layout& l, std::string_view text) {
  auto fail = [&]() -> IllegalAction {
    return IllegalAction("cannot parse action '" + std::string(text) + "'");
  };
  if (text == "wait") return Action::wait();
  if (text == "serve") return Action::serve();
  auto open_paren = text.find('(');
  if (open_paren == std::string_view::npos || text.back() != ')') throw fail();
  std::string_view verb = text.substr(0, open_paren);
  std::string_view args = text.substr(open_paren + 1, text.size() - open_paren - 2);
  if (verb == "move") {
    int r = l.find_room(args);
    if (r < 0) throw fail();
    return Action::move(r);
  }
  if (verb == "open" || verb == "close") {
    int c = l.find_container(args);
    if (c < 0) throw fail();
    return verb == "open" ? Action::open(c) : Action::close(c);
  }
  if (verb == "put") {
    auto comma = args.find(',');
    if (comma == std::string_view::npos) throw fail();
    int o = l.find_object(args.substr(0, comma));
    int loc = l.find_location(args.substr(comma + 1));
    if (o < 0 || loc < 0) throw fail();
    return Action::put(o, loc);
  }
  int o = l.find_object(args);
  if (o < 0) throw fail();
  if (verb == "grab") return Action::grab(o);
  if (verb == "chop") return Action::chop(o);
  if (verb == "cook") return Action::cook(o);
  throw fail();
}

json action_to_json(const Layout& l, const Action& a) {
  json j;
  switch (a.type) {
    case ActionType::move: j = {{"type", "move"}, {"target", l.rooms[a.target].id}}; break;
    case ActionType::open: j = {{"type", "open"}, {"target", l.containers[a.target].id}}; break;
    case ActionType::close: j = {{"type", "close"}, {"target", l.containers[a.target].id}}; break;
    case ActionType::grab: j = {{"type", "grab"}, {"target", l.objects[a.target].id}}; break;
    case ActionType::put:
      j = {{"type", "put"},
           {"target", l.objects[a.target].id},
           {"destination", l.location_name(a.destination)}};
      break;
    case ActionType::chop: j = {{"type", "chop"}, {"target", l.objects[a.target].id}}; break;
    case ActionType::cook: j = {{"type", "cook"}, {"target", l.objects[a.target].id}}; break;
    case ActionType::serve: j = {{"type", "serve"}}; break;
    case ActionType::wait: j = {{"type", "wait"}}; break;
  }
  return j;
}

Action action_from_json(const Layout& l, const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "wait" || type == "serve") return parse_action(l, type);
  std::string text = type + "(" + j.at("target").get<std::string>();
  if (type == "put") text += "," + j.at("destination").get<std::string>();
  text += ")";
  return parse_action(l, text);
}

// ---------------------------------------------------------------------------
// Dynamics

bool is_legal(const WorldState& s, int agent, const Action& a) {
  const Layout& l = s.layout();
  if (agent < 0 || agent >= static_cast<int>(s.agents.size())) return false;
  const AgentState& me = s.agents[agent];
  const int nobj = static_cast<int>(s.objects.size());
  switch (a.type) {
    case ActionType::wait: return true;
    case ActionType::move: {
      if (a.target < 0 || a.target >= static_cast<int>(l.rooms.size())) return false;
      const auto& adj = l.rooms[me.room].adjacent;
      if (std::find(adj.begin(), adj.end(), a.target) == adj.end()) return false;
      if (l.family == Family::kitchen && s.agent_in_room(a.target, agent) >= 0) return false;
      return true;
    }
    case ActionType::open:
    case ActionType::close: {
      if (a.target < 0 || a.target >= static_cast<int>(l.containers.size())) return false;
      if (l.containers[a.target].room != me.room) return false;
      return (s.open[a.target] != 0) == (a.type == ActionType::close);
    }
    case ActionType::grab: {
      if (a.target < 0 || a.target >= nobj || me.held >= 0) return false;
      const auto kind = l.location_kind(s.objects[a.target].location);
      if (kind == LocationKind::hand || kind == LocationKind::served) return false;
      return s.object_room(a.target) == me.room && s.object_exposed(a.target);
    }
    case ActionType::put: {
      if (me.held < 0 || a.target != me.held) return false;
      if (a.destination < 0 || a.destination >= l.num_locations()) return false;
      const auto kind = l.location_kind(a.destination);
      if (kind != LocationKind::surface && kind != LocationKind::container) return false;
      return l.location_room(a.destination) == me.room && s.location_accessible(a.destination);
    }
    case ActionType::chop:
    case ActionType::cook: {
      if (me.held < 0 || a.target != me.held) return false;
      const Process need = a.type == ActionType::chop ? Process::chop : Process::cook;
      return l.objects[a.target].process == need && s.objects[a.target].status == Status::raw;
    }
    case ActionType::serve:
      return l.family == Family::kitchen && me.held >= 0 &&
             s.objects[me.held].status != Status::raw;
  }
  return false;
}

std::vector<Action> legal_actions(const WorldState& s, int agent) {
  const Layout& l = s.layout();
  if (agent < 0 || agent >= static_cast<int>(s.agents.size()))
    throw std::invalid_argument("unknown agent index " + std::to_string(agent));
  std::vector<Action> out;
  const AgentState& me = s.agents[agent];
  auto consider = [&](const Action& a) {
    if (is_legal(s, agent, a)) out.push_back(a);
  };
  for (int r : l.rooms[me.room].adjacent) consider(Action::move(r));
  for (size_t c = 0; c < l.containers.size(); ++c) {
    consider(Action::open(static_cast<int>(c)));
    consider(Action::close(static_cast<int>(c)));
  }
  if (me.held < 0) {
    for (size_t o = 0; o < s.objects.size(); ++o) consider(Action::grab(static_cast<int>(o)));
  } else {
    for (size_t c = 0; c < l.containers.size(); ++c)
      consider(Action::put(me.held, l.container_location(static_cast<int>(c))));
    for (size_t sf = 0; sf < l.surfaces.size(); ++sf)
      consider(Action::put(me.held, l.surface_location(static_cast<int>(sf))));
    consider(Action::chop(me.held));
    consider(Action::cook(me.held));
    consider(Action::serve());
  }
  out.push_back(Action::wait());
  std::vector<std::pair<std::string, Action>> keyed;
  keyed.reserve(out.size());
  for (const auto& a : out) keyed.emplace_back(encode(l, a), a);
  std::sort(keyed.begin(), keyed.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  for (size_t i = 0; i < keyed.size(); ++i) out[i] = keyed[i].second;
  return out;
}

void apply_action(WorldState& s, int agent, const Action& a) {
  const Layout& l = s.layout();
  AgentState& me = s.agents[agent];
  switch (a.type) {
    case ActionType::move: me.room = a.target; break;
    case ActionType::open: s.open[a.target] = 1; break;
    case ActionType::close: s.open[a.target] = 0; break;
    case ActionType::grab:
      s.objects[a.target].location = l.hand_location(agent);
      me.held = a.target;
      break;
    case ActionType::put:
      s.objects[a.target].location = a.destination;
      me.held = -1;
      break;
    case ActionType::chop: s.objects[a.target].status = Status::chopped; break;
    case ActionType::cook: {
      auto& o = s.objects[a.target];
      o.status = Status::cooked;
      o.temperature = l.initial_temperature;
      o.cooked_at = s.clock + 1;
      break;
    }
    case ActionType::serve: {
      auto& o = s.objects[me.held];
      o.location = l.served_location();
      o.served_by = agent;
      me.held = -1;
      break;
    }
    case ActionType::wait: break;
  }
  me.last_action = a;
}

void advance_clock(WorldState& s) {
  ++s.clock;
  if (s.layout().family != Family::kitchen) return;
  for (auto& o : s.objects)
    if (o.cooked_at >= 0 && o.cooked_at < s.clock && o.temperature > 0) --o.temperature;
}

StepResult step(const WorldState& state, const std::vector<Action>& actions) {
  const Layout& l = state.layout();
  if (actions.size() != state.agents.size())
    throw IllegalAction("expected one action per agent");
  for (size_t a = 0; a < actions.size(); ++a)
    if (!is_legal(state, static_cast<int>(a), actions[a]))
      throw IllegalAction("agent " + l.agents[a].id + " cannot " + encode(l, actions[a]));

  StepResult out{state, {}, actions};
  for (int agent : l.resolution_order()) {
    Action a = actions[agent];
    if (!is_legal(out.state, agent, a)) a = Action::wait();  // lost a same-step conflict
    out.applied[agent] = a;
    apply_action(out.state, agent, a);
  }
  advance_clock(out.state);
  for (size_t a = 0; a < state.agents.size(); ++a)
    out.observations.push_back(observe(out.state, static_cast<int>(a)));
  return out;
}

Observation observe(const WorldState& s, int agent) {
  const Layout& l = s.layout();
  Observation obs;
  obs.agent = agent;
  obs.room = s.agents[agent].room;
  obs.held = s.agents[agent].held;
  obs.clock = s.clock;
  for (size_t c = 0; c < l.containers.size(); ++c) {
    if (l.containers[c].room != obs.room) continue;
    obs.containers.emplace_back(static_cast<int>(c), s.open[c] != 0);
    if (s.open[c]) obs.inspected.push_back(l.container_location(static_cast<int>(c)));
  }
  for (size_t sf = 0; sf < l.surfaces.size(); ++sf)
    if (l.surfaces[sf].room == obs.room) obs.inspected.push_back(l.surface_location(static_cast<int>(sf)));
  obs.inspected.push_back(l.floor_location(obs.room));
  for (size_t a = 0; a < s.agents.size(); ++a) {
    if (s.agents[a].room != obs.room) continue;
    obs.inspected.push_back(l.hand_location(static_cast<int>(a)));
    if (static_cast<int>(a) != agent)
      obs.agents.push_back({static_cast<int>(a), s.agents[a].room, s.agents[a].held, s.agents[a].last_action});
  }
  std::sort(obs.inspected.begin(), obs.inspected.end());
  for (size_t o = 0; o < s.objects.size(); ++o) {
    if (s.object_room(static_cast<int>(o)) == obs.room && s.object_exposed(static_cast<int>(o)))
      obs.objects.push_back({static_cast<int>(o), s.objects[o]});
    if (s.objects[o].served_by == agent && l.location_kind(s.objects[o].location) == LocationKind::served)
      obs.delivered.push_back({static_cast<int>(o), s.objects[o]});
  }
  return obs;
}

bool goal_satisfied(const WorldState& s, const Goal& goal) {
  const Layout& l = s.layout();
  for (const auto& p : goal.predicates) {
    int count = 0;
    for (size_t o = 0; o < s.objects.size(); ++o) {
      if (s.objects[o].location != p.target) continue;
      if (std::find(p.categories.begin(), p.categories.end(), l.objects[o].category) != p.categories.end())
        ++count;
    }
    if (count < p.count) return false;
  }
  for (const auto& ing : goal.ingredients) {
    bool done = false;
    for (size_t o = 0; o < s.objects.size() && !done; ++o)
      done = l.objects[o].category == ing.category && s.objects[o].status == ing.status &&
             s.objects[o].location == l.served_location();
    if (!done) return false;
  }
  return true;
}

std::vector<int> hot_completions(const WorldState& s) {
  std::vector<int> out;
  for (const auto& o : s.objects)
    if (o.cooked_at >= 0) out.push_back(o.cooked_at);
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

json state_to_json(const WorldState& s) {
  const Layout& l = s.layout();
  json j;
  j["clock"] = s.clock;
  json containers = json::object();
  for (size_t c = 0; c < l.containers.size(); ++c) containers[l.containers[c].id] = s.open[c] != 0;
  j["containers"] = containers;
  json objects = json::object();
  for (size_t o = 0; o < s.objects.size(); ++o) {
    const auto& st = s.objects[o];
    json e = {{"location", l.location_name(st.location)}, {"status", to_string(st.status)}};
    if (l.family == Family::kitchen) {
      e["temperature"] = st.temperature;
      e["cooked_at"] = st.cooked_at;
    }
    objects[l.objects[o].id] = e;
  }
  j["objects"] = objects;
  json agents = json::object();
  for (size_t a = 0; a < s.agents.size(); ++a)
    agents[l.agents[a].id] = {
        {"room", l.rooms[s.agents[a].room].id},
        {"held", s.agents[a].held < 0 ? json(nullptr) : json(l.objects[s.agents[a].held].id)}};
  j["agents"] = agents;
  return j;
}

json observation_to_json(const Layout& l, const Observation& obs) {
  json j;
  j["agent"] = l.agents[obs.agent].id;
  j["room"] = l.rooms[obs.room].id;
  j["clock"] = obs.clock;
  j["held"] = obs.held < 0 ? json(nullptr) : json(l.objects[obs.held].id);
  json objects = json::array();
  for (const auto& so : obs.objects)
    objects.push_back({{"id", l.objects[so.object].id},
                       {"category", l.categories[l.objects[so.object].category]},
                       {"location", l.location_name(so.state.location)},
                       {"status", to_string(so.state.status)}});
  j["objects"] = objects;
  json containers = json::array();
  for (const auto& [c, is_open] : obs.containers)
    containers.push_back({{"id", l.containers[c].id}, {"open", is_open}});
  j["containers"] = containers;
  json surfaces = json::array();
  for (size_t s = 0; s < l.surfaces.size(); ++s)
    if (l.surfaces[s].room == obs.room) surfaces.push_back(l.surfaces[s].id);
  j["surfaces"] = surfaces;
  json agents = json::array();
  for (const auto& sa : obs.agents)
    agents.push_back({{"id", l.agents[sa.agent].id},
                      {"held", sa.held < 0 ? json(nullptr) : json(l.objects[sa.held].id)},
                      {"last_action", encode(l, sa.last_action)}});
  j["agents"] = agents;
  json delivered = json::array();
  for (const auto& so : obs.delivered) delivered.push_back(l.objects[so.object].id);
  j["delivered"] = delivered;
  json rooms = json::array();
  for (int r : l.rooms[obs.room].adjacent) rooms.push_back(l.rooms[r].id);
  j["adjacent_rooms"] = rooms;
  return j;
}

}  // namespace goma
