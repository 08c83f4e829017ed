#include "goma/utterance.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <stdexcept>

namespace goma {

std::string_view to_string(UtteranceKind k) {
  switch (k) {
    case UtteranceKind::none: return "none";
    case UtteranceKind::share: return "share";
    case UtteranceKind::request: return "request";
    case UtteranceKind::need: return "need";
    case UtteranceKind::unknown: return "unknown";
  }
  return "none";
}

Utterance make_share(const Belief0& b, int substate) {
  Utterance u;
  u.kind = UtteranceKind::share;
  u.speaker = b.owner();
  u.substate = substate;
  auto d = b.dist(substate);
  u.content.assign(d.begin(), d.end());
  u.text = render_utterance(b.schema(), u);
  return u;
}

Utterance make_request(int speaker, int substate) {
  Utterance u;
  u.kind = UtteranceKind::request;
  u.speaker = speaker;
  u.substate = substate;
  return u;
}

Utterance make_need(int speaker, std::vector<int> categories) {
  Utterance u;
  u.kind = UtteranceKind::need;
  u.speaker = speaker;
  u.categories = std::move(categories);
  return u;
}

Utterance make_unknown(int speaker, int substate) {
  Utterance u;
  u.kind = UtteranceKind::unknown;
  u.speaker = speaker;
  u.substate = substate;
  return u;
}

std::string plural(std::string_view c) {
  std::string s(c);
  auto ends = [&](std::string_view tail) { return s.size() >= tail.size() && s.ends_with(tail); };
  if (ends("s") || ends("x") || ends("ch") || ends("sh")) return s + "es";
  if (s.size() >= 2 && s.back() == 'y' && std::string_view("aeiou").find(s[s.size() - 2]) == std::string_view::npos)
    return s.substr(0, s.size() - 1) + "ies";
  return s + "s";
}

namespace {

std::string place_phrase(const Layout& l, int loc) {
  switch (l.location_kind(loc)) {
    case LocationKind::container: return "in " + l.location_name(loc);
    case LocationKind::surface: return "on " + l.location_name(loc);
    case LocationKind::floor: return "on the floor of " + l.rooms[l.location_index(loc)].id;
    case LocationKind::hand: return "with " + l.agents[l.location_index(loc)].id;
    case LocationKind::served: return "and served";
  }
  return "";
}

std::string join_alternatives(const std::vector<std::string>& alts) {
  std::string out;
  for (size_t i = 0; i < alts.size(); ++i) {
    if (i) out += " or ";
    out += alts[i];
  }
  return out;
}

std::vector<int> support_of(const std::vector<double>& p) {
  std::vector<int> out;
  for (size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) out.push_back(static_cast<int>(i));
  return out;
}

std::string required_status(const Layout& l, int object) {
  switch (l.objects[object].process) {
    case Process::chop: return "chopped";
    case Process::cook: return "cooked";
    default: return "";
  }
}

}  // namespace

std::string render_utterance(const BeliefSchema& schema, const Utterance& u) {
  const Layout& l = schema.layout();
  switch (u.kind) {
    case UtteranceKind::none: throw std::invalid_argument("None has no text");
    case UtteranceKind::need: {
      std::string list;
      for (size_t i = 0; i < u.categories.size(); ++i) {
        if (i) list += i + 1 == u.categories.size() ? " and " : ", ";
        list += plural(l.categories[u.categories[i]]);
      }
      return "Help me find " + list + ".";
    }
    case UtteranceKind::unknown: return "I don't know about " + schema[u.substate].id + ".";
    case UtteranceKind::request: {
      const SubState& s = schema[u.substate];
      if (s.kind == SubStateKind::container) return "Is the " + l.containers[s.index].id + " open?";
      std::string st = l.family == Family::kitchen ? required_status(l, s.index) : "";
      if (!st.empty()) return "Is the " + s.id + " " + st + "?";
      return "Do you know where " + s.id + " is?";
    }
    case UtteranceKind::share: break;
  }
  const SubState& s = schema[u.substate];
  const auto support = support_of(u.content);
  if (support.empty()) throw std::invalid_argument("share with empty content");
  if (s.kind == SubStateKind::container) {
    std::vector<std::string> alts;
    for (int i : support) alts.push_back(s.values[i].location ? "open" : "closed");
    return "The " + l.containers[s.index].id + " is " + join_alternatives(alts) + ".";
  }
  if (l.family == Family::household) {
    if (support.size() == 1) return "I found " + s.id + " " + place_phrase(l, s.values[support[0]].location) + ".";
    std::vector<std::string> alts;
    for (int i : support) alts.push_back(place_phrase(l, s.values[i].location));
    return s.id + " is " + join_alternatives(alts) + ".";
  }
  std::vector<std::string> alts;
  for (int i : support) {
    const Value& v = s.values[i];
    std::string alt(to_string(v.status));
    const bool implicit = support.size() == 1 && v.location == l.hand_location(u.speaker);
    if (!implicit) alt += " " + place_phrase(l, v.location);
    alts.push_back(alt);
  }
  return "The " + s.id + " is " + join_alternatives(alts) + ".";
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

std::string normalize(std::string_view text) {
  std::string s;
  bool space = false;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      space = !s.empty();
      continue;
    }
    if (space) s.push_back(' ');
    space = false;
    s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  }
  while (!s.empty() && (s.back() == '.' || s.back() == '?' || s.back() == '!')) s.pop_back();
  return s;
}

bool strip_prefix(std::string& s, std::string_view prefix) {
  if (!s.starts_with(prefix)) return false;
  s.erase(0, prefix.size());
  return true;
}

bool strip_suffix(std::string& s, std::string_view suffix) {
  if (!s.ends_with(suffix)) return false;
  s.erase(s.size() - suffix.size());
  return true;
}

std::vector<std::string> split(const std::string& s, std::string_view sep) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + sep.size();
  }
}

std::string drop_article(std::string s) {
  for (std::string_view a : {"the ", "a ", "an ", "some ", "all "})
    if (strip_prefix(s, a)) break;
  return s;
}

int category_of(const Layout& l, std::string_view word) {
  for (size_t c = 0; c < l.categories.size(); ++c)
    if (l.categories[c] == word || plural(l.categories[c]) == word) return static_cast<int>(c);
  return -1;
}

// Sub-states named by a word: an object id, a category (every object of
// it) or a container id.
std::vector<int> subjects(const BeliefSchema& schema, const std::string& word) {
  const Layout& l = schema.layout();
  if (int n = schema.find(word); n >= 0) return {n};
  if (int c = l.find_container(word); c >= 0) return {schema.container_substate(c)};
  std::vector<int> out;
  if (int cat = category_of(l, word); cat >= 0)
    for (size_t o = 0; o < l.objects.size(); ++o)
      if (l.objects[o].category == cat) out.push_back(schema.object_substate(static_cast<int>(o)));
  return out;
}

struct Alternative {
  std::optional<Status> status;
  std::optional<int> location;
  std::optional<bool> open;
};

std::optional<int> parse_place(const Layout& l, std::string p) {
  if (p == "and served" || p == "served") return l.served_location();
  if (strip_prefix(p, "on the floor of ")) {
    int r = l.find_room(p);
    if (r < 0) return std::nullopt;
    return l.floor_location(r);
  }
  if (strip_prefix(p, "with ")) {
    int a = l.find_agent(p);
    if (a < 0) return std::nullopt;
    return l.hand_location(a);
  }
  if (strip_prefix(p, "in the ") || strip_prefix(p, "on the ") || strip_prefix(p, "in ") || strip_prefix(p, "on ")) {
    int loc = l.find_location(p);
    if (loc < 0) return std::nullopt;
    return loc;
  }
  return std::nullopt;
}

std::optional<Alternative> parse_alternative(const Layout& l, std::string alt) {
  Alternative a;
  if (alt == "open") {
    a.open = true;
    return a;
  }
  if (alt == "closed") {
    a.open = false;
    return a;
  }
  for (std::string_view st : {"raw", "chopped", "cooked"}) {
    if (alt == st || alt.starts_with(std::string(st) + " ")) {
      a.status = parse_status(st);
      alt.erase(0, std::min(alt.size(), st.size() + 1));
      break;
    }
  }
  if (!alt.empty()) {
    auto loc = parse_place(l, alt);
    if (!loc) return std::nullopt;
    a.location = *loc;
  }
  if (!a.status && !a.location) return std::nullopt;
  return a;
}

// Content over sub-state n matching any alternative, uniform over matches.
std::optional<std::vector<double>> content_for(const BeliefSchema& schema, int n, const std::vector<Alternative>& alts,
                                               int speaker) {
  const Layout& l = schema.layout();
  const SubState& s = schema[n];
  std::vector<double> p(s.values.size(), 0.0);
  for (const auto& a : alts) {
    for (size_t i = 0; i < s.values.size(); ++i) {
      const Value& v = s.values[i];
      if (s.kind == SubStateKind::container) {
        if (a.open && (v.location == 1) == *a.open) p[i] = 1.0;
        continue;
      }
      if (a.open) continue;
      int want = -1;
      if (a.location)
        want = *a.location;
      else if (a.status && l.family == Family::kitchen && speaker >= 0)
        want = l.hand_location(speaker);
      if (want >= 0 && v.location != want) continue;
      if (a.status && v.status != *a.status) continue;
      p[i] = 1.0;
    }
  }
  double total = 0.0;
  for (double x : p) total += x;
  if (total <= 0.0) return std::nullopt;
  for (double& x : p) x /= total;
  return p;
}

std::vector<Utterance> shares(const BeliefSchema& schema, const std::vector<int>& targets,
                              const std::vector<Alternative>& alts, int speaker) {
  std::vector<Utterance> out;
  for (int n : targets) {
    auto p = content_for(schema, n, alts, speaker);
    if (!p) continue;
    Utterance u;
    u.kind = UtteranceKind::share;
    u.speaker = speaker;
    u.substate = n;
    u.content = *p;
    out.push_back(std::move(u));
  }
  return out;
}

std::vector<Utterance> parse_body(const BeliefSchema& schema, const std::string& s, int speaker) {
  const Layout& l = schema.layout();
  std::string t = s;

  for (std::string_view p : {"help me find ", "help me get ", "i need "}) {
    if (!strip_prefix(t, p)) continue;
    std::vector<int> cats;
    std::string list = t;
    for (auto& part : split(list, ", ")) {
      for (auto& word : split(part, " and ")) {
        word = drop_article(word);
        if (word.empty()) continue;
        int c = category_of(l, word);
        if (c < 0) return {};
        if (std::find(cats.begin(), cats.end(), c) == cats.end()) cats.push_back(c);
      }
    }
    if (cats.empty()) return {};
    return {make_need(speaker, cats)};
  }

  for (std::string_view p : {"i don't know about ", "i do not know about ", "i don't know where ", "i do not know where "}) {
    if (!strip_prefix(t, p)) continue;
    strip_suffix(t, " is");
    std::vector<Utterance> out;
    for (int n : subjects(schema, drop_article(t))) out.push_back(make_unknown(speaker, n));
    return out;
  }

  auto requests = [&](const std::string& word) {
    std::vector<Utterance> out;
    for (int n : subjects(schema, drop_article(word))) out.push_back(make_request(speaker, n));
    return out;
  };
  if (strip_prefix(t, "do you know where ")) {
    if (!strip_suffix(t, " is")) strip_suffix(t, " are");
    return requests(t);
  }
  if (strip_prefix(t, "where is ") || strip_prefix(t, "where are ")) return requests(t);
  if (strip_prefix(t, "is ")) {
    for (std::string_view st : {" open", " cooked", " chopped", " ready"})
      if (strip_suffix(t, st)) return requests(t);
    return {};
  }

  if (strip_prefix(t, "i found ") || strip_prefix(t, "i see ")) {
    size_t cut = std::string::npos;
    for (std::string_view sep : {" in ", " on ", " with "}) {
      size_t pos = t.find(sep);
      if (pos != std::string::npos && pos < cut) cut = pos;
    }
    if (cut == std::string::npos) return {};
    auto alt = parse_alternative(l, t.substr(cut + 1));
    if (!alt) return {};
    return shares(schema, subjects(schema, drop_article(t.substr(0, cut))), {*alt}, speaker);
  }

  for (std::string_view verb : {" is ", " are "}) {
    size_t pos = t.find(verb);
    if (pos == std::string::npos) continue;
    std::string subject = drop_article(t.substr(0, pos));
    std::string rest = t.substr(pos + verb.size());
    std::vector<Alternative> alts;
    for (const auto& part : split(rest, " or ")) {
      auto alt = parse_alternative(l, part);
      if (!alt) return {};
      alts.push_back(*alt);
    }
    return shares(schema, subjects(schema, subject), alts, speaker);
  }
  return {};
}

}  // namespace

std::vector<Utterance> parse_chat(const BeliefSchema& schema, std::string_view text, int speaker) {
  std::string s = normalize(text);
  if (s.empty()) return {};
  auto out = parse_body(schema, s, speaker);
  for (auto& u : out) u.text = std::string(text);
  return out;
}

json utterance_to_json(const BeliefSchema& schema, const Utterance& u) {
  const Layout& l = schema.layout();
  json j;
  j["kind"] = to_string(u.kind);
  if (u.speaker >= 0) j["speaker"] = l.agents[u.speaker].id;
  if (u.substate >= 0) j["substate"] = schema[u.substate].id;
  if (!u.content.empty()) j["content"] = u.content;
  if (!u.categories.empty()) {
    json cats = json::array();
    for (int c : u.categories) cats.push_back(l.categories[c]);
    j["categories"] = cats;
  }
  if (!u.is_none()) j["text"] = u.text.empty() ? render_utterance(schema, u) : u.text;
  return j;
}

Utterance utterance_from_json(const BeliefSchema& schema, const json& j) {
  const Layout& l = schema.layout();
  Utterance u;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "none") u.kind = UtteranceKind::none;
  else if (kind == "share") u.kind = UtteranceKind::share;
  else if (kind == "request") u.kind = UtteranceKind::request;
  else if (kind == "need") u.kind = UtteranceKind::need;
  else if (kind == "unknown") u.kind = UtteranceKind::unknown;
  else throw std::invalid_argument("unknown utterance kind '" + kind + "'");
  if (j.contains("speaker")) {
    u.speaker = l.find_agent(j["speaker"].get<std::string>());
    if (u.speaker < 0) throw std::invalid_argument("unknown speaker in utterance");
  }
  if (j.contains("substate")) {
    u.substate = schema.find(j["substate"].get<std::string>());
    if (u.substate < 0) throw std::out_of_range("unknown sub-state '" + j["substate"].get<std::string>() + "'");
  }
  if (j.contains("content")) u.content = j["content"].get<std::vector<double>>();
  if (u.kind == UtteranceKind::share && u.content.size() != schema[u.substate].values.size())
    throw std::invalid_argument("share content does not match the sub-state domain");
  for (const auto& c : j.value("categories", json::array())) {
    int cat = l.find_category(c.get<std::string>());
    if (cat < 0) throw std::invalid_argument("unknown category in utterance");
    u.categories.push_back(cat);
  }
  u.text = j.value("text", std::string());
  return u;
}

}  // namespace goma
