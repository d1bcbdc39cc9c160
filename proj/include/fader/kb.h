#ifndef FADER_KB_H_
#define FADER_KB_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "fader/corpus.h"
#include "fader/types.h"

namespace fader::kb {

// An ended entity taken from the knowledge base.
struct EntityRecord {
  std::string canonical_name;
  std::vector<std::string> aliases;  // includes canonical_name, normalized
  int disappearance_year = 0;
  std::vector<std::string> categories;
  CoarseType coarse_type = CoarseType::kUnmapped;
  bool ambiguous = false;

  // Aliases tokenized the same way posts are.
  std::vector<corpus::Phrase> AliasPhrases() const;

  bool operator==(const EntityRecord&) const = default;
};

// Category patterns are literal prefixes unless they contain '*' or '?', in
// which case they are globs anchored at both ends.
struct TypeRule {
  std::string pattern;
  CoarseType type;
};

struct TypeMapping {
  std::vector<TypeRule> rules;  // first match wins

  // Mapping covering the category families of the English KB lists.
  static TypeMapping Default();
};

bool CategoryPatternMatches(const std::string& pattern, const std::string& category);

// Lines "pattern<TAB>TYPE"; '#' starts a comment line.
TypeMapping ReadTypeMapping(std::istream& in, const std::string& source);
TypeMapping LoadTypeMapping(const std::string& path);

// Type of the first category (in listed order) matched by any rule.
CoarseType MapCategoryToType(const std::vector<std::string>& categories,
                             const TypeMapping& mapping);

struct EntityListResult {
  std::vector<EntityRecord> records;
  std::vector<std::string> warnings;  // one per skipped row, with row number
};

// Rows "canonical_name<TAB>alias1|alias2<TAB>year<TAB>cat1|cat2<TAB>0|1";
// an optional header row starts with the literal cell "canonical_name".
EntityListResult ReadEntityList(std::istream& in, const TypeMapping& mapping,
                                const std::string& source);
EntityListResult LoadEntityList(const std::string& path, const TypeMapping& mapping);
void WriteEntityList(std::ostream& out, const std::vector<EntityRecord>& records);

using TypeCaps = std::map<CoarseType, std::size_t>;

// Drops ambiguous entities and entities first seen in their disappearance
// year, then undersamples capped types uniformly (seeded). Surviving records
// keep their input order and are not modified.
std::vector<EntityRecord> FilterEntities(const std::vector<EntityRecord>& records,
                                         const corpus::CorpusIndex& index,
                                         const TypeCaps& caps, std::uint64_t seed);

}  // namespace fader::kb

#endif  // FADER_KB_H_
