#pragma once

#include <string>
#include <vector>

#include "goma/belief.hpp"

namespace goma {

// None, Share and Request are the assistant's utterance space. The human
// additionally states which categories it needs and admits ignorance.
enum class UtteranceKind : uint8_t { none, share, request, need, unknown };

std::string_view to_string(UtteranceKind k);

struct Utterance {
  UtteranceKind kind = UtteranceKind::none;
  int speaker = -1;
  int substate = -1;
  std::vector<double> content;  // share: the speaker's distribution
  std::vector<int> categories;  // need
  std::string text;

  bool is_none() const { return kind == UtteranceKind::none; }
  friend bool operator==(const Utterance& a, const Utterance& b) {
    return a.kind == b.kind && a.speaker == b.speaker && a.substate == b.substate &&
           a.content == b.content && a.categories == b.categories;
  }
};

Utterance make_share(const Belief0& speaker_belief, int substate);
Utterance make_request(int speaker, int substate);
Utterance make_need(int speaker, std::vector<int> categories);
Utterance make_unknown(int speaker, int substate);

std::string plural(std::string_view category);

// Deterministic template text. Throws std::invalid_argument for None.
std::string render_utterance(const BeliefSchema& schema, const Utterance& u);

// Parses chat text with the template grammar. A category statement ("the
// plates are on coffeetable.11") yields one share per object; unparseable
// text yields an empty vector.
std::vector<Utterance> parse_chat(const BeliefSchema& schema, std::string_view text, int speaker);

json utterance_to_json(const BeliefSchema& schema, const Utterance& u);
Utterance utterance_from_json(const BeliefSchema& schema, const json& j);

}  // namespace goma
