#ifndef FADER_TYPES_H_
#define FADER_TYPES_H_

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fader {

enum class CoarseType {
  kPerson,
  kCreativeWork,
  kLocation,
  kGroup,
  kEvent,
  kServiceProduct,
  kUnmapped,
};

inline constexpr std::array<CoarseType, 7> kAllCoarseTypes = {
    CoarseType::kPerson,   CoarseType::kCreativeWork,   CoarseType::kLocation,
    CoarseType::kGroup,    CoarseType::kEvent,          CoarseType::kServiceProduct,
    CoarseType::kUnmapped,
};

// "PERSON", "CREATIVE_WORK", ... as used in files and tags.
std::string_view CoarseTypeName(CoarseType type);
std::optional<CoarseType> ParseCoarseType(std::string_view name);

// One BILOU tag. Outside tags carry no type.
struct Tag {
  enum class Prefix { kO, kB, kI, kL, kU };

  Prefix prefix = Prefix::kO;
  CoarseType type = CoarseType::kUnmapped;

  static Tag Outside() { return {}; }
  static Tag Make(Prefix p, CoarseType t) { return {p, t}; }

  bool IsOutside() const { return prefix == Prefix::kO; }
  std::string ToString() const;
  static std::optional<Tag> Parse(std::string_view text);

  bool operator==(const Tag& other) const {
    return prefix == other.prefix &&
           (prefix == Prefix::kO || type == other.type);
  }
};

using TagSequence = std::vector<Tag>;

// Whether `next` may follow `prev` in a BILOU sequence. A missing `prev`
// means sentence start.
bool LegalTransition(const std::optional<Tag>& prev, const Tag& next);
// Whether a sentence may end after `last`.
bool LegalEnd(const Tag& last);

// Index of the first tag that breaks BILOU validity, or nullopt if valid.
// An unclosed B/I at the end reports the sequence length.
std::optional<std::size_t> FirstBilouViolation(const TagSequence& tags);

// A labeled span [start, end) of one coarse type.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;
  CoarseType type = CoarseType::kUnmapped;

  auto operator<=>(const Span&) const = default;
};

// Maximal B..L runs and U tags. Ill-formed fragments (an I or L without an
// open B of the same type, or a B never closed) produce no span.
std::vector<Span> ExtractSpans(const TagSequence& tags);

}  // namespace fader

#endif  // FADER_TYPES_H_
