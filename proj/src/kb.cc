#include "fader/kb.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include "fader/error.h"
#include "fader/rng.h"
#include "fader/text.h"

namespace fader::kb {

namespace {

bool GlobMatch(std::string_view pattern, std::string_view s) {
  std::size_t p = 0, i = 0;
  std::size_t star = std::string_view::npos, mark = 0;
  while (i < s.size()) {
    if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == s[i])) {
      ++p;
      ++i;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = i;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      i = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

std::vector<std::string> SplitList(const std::string& cell) {
  std::vector<std::string> out;
  if (cell.empty()) return out;
  for (auto& part : text::Split(cell, '|')) {
    std::string norm = text::NormalizeSpace(part);
    if (!norm.empty()) out.push_back(std::move(norm));
  }
  return out;
}

}  // namespace

std::vector<corpus::Phrase> EntityRecord::AliasPhrases() const {
  std::vector<corpus::Phrase> phrases;
  for (const auto& alias : aliases) {
    auto tokens = corpus::Tokenize(alias);
    if (!tokens.empty()) phrases.push_back(std::move(tokens));
  }
  return phrases;
}

TypeMapping TypeMapping::Default() {
  using T = CoarseType;
  return {{
      {"Deaths", T::kPerson},
      {"*_deaths", T::kPerson},
      {"*_television_series", T::kCreativeWork},
      {"Web_series", T::kCreativeWork},
      {"*_films", T::kCreativeWork},
      {"*_comics", T::kCreativeWork},
      {"Buildings_and_structures", T::kLocation},
      {"Educational_institutions", T::kLocation},
      {"Restaurants", T::kLocation},
      {"Shopping_malls", T::kLocation},
      {"Museums", T::kLocation},
      {"Musical_groups", T::kGroup},
      {"Retail_companies", T::kGroup},
      {"Airlines", T::kGroup},
      {"Companies", T::kGroup},
      {"Organizations", T::kGroup},
      {"Sporting_events", T::kEvent},
      {"Sports_leagues", T::kEvent},
      {"Events", T::kEvent},
      {"Festivals", T::kEvent},
      {"Magazines", T::kServiceProduct},
      {"Internet_properties", T::kServiceProduct},
      {"Products_and_services", T::kServiceProduct},
      {"Radio_stations", T::kServiceProduct},
  }};
}

bool CategoryPatternMatches(const std::string& pattern, const std::string& category) {
  if (pattern.find_first_of("*?") != std::string::npos) return GlobMatch(pattern, category);
  return category.compare(0, pattern.size(), pattern) == 0;
}

TypeMapping ReadTypeMapping(std::istream& in, const std::string& source) {
  TypeMapping mapping;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto cells = text::Split(line, '\t');
    if (cells.size() != 2 || cells[0].empty()) {
      throw FormatError(source, lineno, "expected pattern<TAB>TYPE");
    }
    auto type = ParseCoarseType(cells[1]);
    if (!type) throw FormatError(source, lineno, "unknown coarse type '" + cells[1] + "'");
    mapping.rules.push_back({cells[0], *type});
  }
  return mapping;
}

TypeMapping LoadTypeMapping(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open type mapping " + path);
  return ReadTypeMapping(in, path);
}

CoarseType MapCategoryToType(const std::vector<std::string>& categories,
                             const TypeMapping& mapping) {
  for (const auto& category : categories) {
    for (const auto& rule : mapping.rules) {
      if (CategoryPatternMatches(rule.pattern, category)) return rule.type;
    }
  }
  return CoarseType::kUnmapped;
}

EntityListResult ReadEntityList(std::istream& in, const TypeMapping& mapping,
                                const std::string& source) {
  EntityListResult result;
  std::string line;
  std::size_t row = 0;
  auto warn = [&](const std::string& what) {
    result.warnings.push_back(source + ": row " + std::to_string(row) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = text::Split(line, '\t');
    if (row == 1 && cells[0] == "canonical_name") continue;
    if (cells.size() != 5) {
      warn("expected 5 tab-separated columns, found " + std::to_string(cells.size()));
      continue;
    }
    EntityRecord rec;
    rec.canonical_name = text::NormalizeSpace(cells[0]);
    if (rec.canonical_name.empty()) {
      warn("empty canonical name");
      continue;
    }
    const std::string& year = cells[2];
    int parsed = 0;
    auto [ptr, ec] = std::from_chars(year.data(), year.data() + year.size(), parsed);
    if (ec != std::errc() || ptr != year.data() + year.size() || parsed < 1 || parsed > 9999) {
      warn("invalid disappearance year '" + year + "'");
      continue;
    }
    rec.disappearance_year = parsed;
    if (cells[4] != "0" && cells[4] != "1") {
      warn("ambiguous flag must be 0 or 1");
      continue;
    }
    rec.ambiguous = cells[4] == "1";
    rec.aliases.push_back(rec.canonical_name);
    for (auto& alias : SplitList(cells[1])) {
      if (std::find(rec.aliases.begin(), rec.aliases.end(), alias) == rec.aliases.end()) {
        rec.aliases.push_back(std::move(alias));
      }
    }
    rec.categories = SplitList(cells[3]);
    rec.coarse_type = MapCategoryToType(rec.categories, mapping);
    result.records.push_back(std::move(rec));
  }
  return result;
}

EntityListResult LoadEntityList(const std::string& path, const TypeMapping& mapping) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open entity list " + path);
  return ReadEntityList(in, mapping, path);
}

void WriteEntityList(std::ostream& out, const std::vector<EntityRecord>& records) {
  out << "canonical_name\taliases\tdisappearance_year\tcategories\tambiguous\n";
  for (const auto& rec : records) {
    out << rec.canonical_name << '\t' << text::Join(rec.aliases, "|") << '\t'
        << rec.disappearance_year << '\t' << text::Join(rec.categories, "|") << '\t'
        << (rec.ambiguous ? 1 : 0) << '\n';
  }
}

std::vector<EntityRecord> FilterEntities(const std::vector<EntityRecord>& records,
                                         const corpus::CorpusIndex& index,
                                         const TypeCaps& caps, std::uint64_t seed) {
  std::vector<const EntityRecord*> kept;
  for (const auto& rec : records) {
    if (rec.ambiguous) continue;
    auto phrase = corpus::Tokenize(rec.canonical_name);
    if (!phrase.empty()) {
      auto first = corpus::FirstAppearanceYear(index, phrase);
      if (first && *first == rec.disappearance_year) continue;
    }
    kept.push_back(&rec);
  }

  std::vector<bool> keep(kept.size(), true);
  for (const auto& [type, cap] : caps) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < kept.size(); ++i) {
      if (kept[i]->coarse_type == type) members.push_back(i);
    }
    if (members.size() <= cap) continue;
    Rng rng(DeriveSeed(seed, "type-cap:" + std::string(CoarseTypeName(type))));
    std::vector<bool> chosen(members.size(), false);
    for (std::size_t m : rng.SampleIndices(members.size(), cap)) chosen[m] = true;
    for (std::size_t m = 0; m < members.size(); ++m) {
      if (!chosen[m]) keep[members[m]] = false;
    }
  }

  std::vector<EntityRecord> out;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (keep[i]) out.push_back(*kept[i]);
  }
  return out;
}

}  // namespace fader::kb
