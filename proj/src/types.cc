#include "fader/types.h"

namespace fader {

std::string_view CoarseTypeName(CoarseType type) {
  switch (type) {
    case CoarseType::kPerson: return "PERSON";
    case CoarseType::kCreativeWork: return "CREATIVE_WORK";
    case CoarseType::kLocation: return "LOCATION";
    case CoarseType::kGroup: return "GROUP";
    case CoarseType::kEvent: return "EVENT";
    case CoarseType::kServiceProduct: return "SERVICE_PRODUCT";
    case CoarseType::kUnmapped: return "UNMAPPED";
  }
  return "UNMAPPED";
}

std::optional<CoarseType> ParseCoarseType(std::string_view name) {
  for (CoarseType t : kAllCoarseTypes) {
    if (CoarseTypeName(t) == name) return t;
  }
  return std::nullopt;
}

std::string Tag::ToString() const {
  static constexpr char kPrefix[] = {'O', 'B', 'I', 'L', 'U'};
  if (prefix == Prefix::kO) return "O";
  std::string out(1, kPrefix[static_cast<int>(prefix)]);
  out += '-';
  out += CoarseTypeName(type);
  return out;
}

std::optional<Tag> Tag::Parse(std::string_view text) {
  if (text == "O") return Tag::Outside();
  if (text.size() < 3 || text[1] != '-') return std::nullopt;
  Prefix p;
  switch (text[0]) {
    case 'B': p = Prefix::kB; break;
    case 'I': p = Prefix::kI; break;
    case 'L': p = Prefix::kL; break;
    case 'U': p = Prefix::kU; break;
    default: return std::nullopt;
  }
  auto type = ParseCoarseType(text.substr(2));
  if (!type) return std::nullopt;
  return Tag::Make(p, *type);
}

bool LegalTransition(const std::optional<Tag>& prev, const Tag& next) {
  using P = Tag::Prefix;
  const bool continues = next.prefix == P::kI || next.prefix == P::kL;
  if (!prev) return !continues;
  switch (prev->prefix) {
    case P::kO:
    case P::kL:
    case P::kU:
      return !continues;
    case P::kB:
    case P::kI:
      return continues && next.type == prev->type;
  }
  return false;
}

bool LegalEnd(const Tag& last) {
  return last.prefix != Tag::Prefix::kB && last.prefix != Tag::Prefix::kI;
}

std::optional<std::size_t> FirstBilouViolation(const TagSequence& tags) {
  std::optional<Tag> prev;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (!LegalTransition(prev, tags[i])) return i;
    prev = tags[i];
  }
  if (prev && !LegalEnd(*prev)) return tags.size();
  return std::nullopt;
}

std::vector<Span> ExtractSpans(const TagSequence& tags) {
  using P = Tag::Prefix;
  std::vector<Span> spans;
  bool open = false;
  std::size_t open_start = 0;
  CoarseType open_type = CoarseType::kUnmapped;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const Tag& t = tags[i];
    switch (t.prefix) {
      case P::kO:
        open = false;
        break;
      case P::kU:
        open = false;
        spans.push_back({i, i + 1, t.type});
        break;
      case P::kB:
        open = true;
        open_start = i;
        open_type = t.type;
        break;
      case P::kI:
        if (open && open_type != t.type) open = false;
        break;
      case P::kL:
        if (open && open_type == t.type) spans.push_back({open_start, i + 1, t.type});
        open = false;
        break;
    }
  }
  return spans;
}

}  // namespace fader
