#include <fstream>
#include <istream>
#include <ostream>

#include "fader/error.h"
#include "fader/supervision.h"
#include "fader/text.h"

namespace fader::supervision {

namespace {

constexpr std::string_view kIdKey = "# id=";
constexpr std::string_view kDateKey = " date=";
constexpr std::string_view kEntityKey = " entity=";
constexpr std::string_view kPolarityKey = " polarity=";

LabeledSentence ParseHeader(const std::string& line, const std::string& source,
                            std::size_t lineno) {
  auto fail = [&](const std::string& what) { return FormatError(source, lineno, what); };
  if (line.rfind(kIdKey, 0) != 0) throw fail("expected sentence header");
  const auto date_at = line.find(kDateKey, kIdKey.size());
  const auto polarity_at = line.rfind(kPolarityKey);
  const auto entity_at =
      date_at == std::string::npos ? std::string::npos : line.find(kEntityKey, date_at);
  if (date_at == std::string::npos || entity_at == std::string::npos ||
      polarity_at == std::string::npos || polarity_at < entity_at) {
    throw fail("malformed sentence header");
  }
  LabeledSentence s;
  s.post_id = line.substr(kIdKey.size(), date_at - kIdKey.size());
  const auto date_text =
      line.substr(date_at + kDateKey.size(), entity_at - date_at - kDateKey.size());
  auto date = Day::Parse(date_text);
  if (!date) throw fail("invalid date '" + date_text + "'");
  s.date = *date;
  s.entity_id =
      line.substr(entity_at + kEntityKey.size(), polarity_at - entity_at - kEntityKey.size());
  const auto polarity = line.substr(polarity_at + kPolarityKey.size());
  if (polarity == "POS") {
    s.polarity = Polarity::kPositive;
  } else if (polarity == "NEG") {
    s.polarity = Polarity::kNegative;
  } else {
    throw fail("polarity must be POS or NEG");
  }
  if (s.post_id.empty()) throw fail("empty post id");
  return s;
}

}  // namespace

void WriteConll(std::ostream& out, const std::vector<LabeledSentence>& sentences) {
  for (const auto& s : sentences) {
    if (s.tokens.size() != s.tags.size()) {
      throw ArgumentError("sentence " + s.post_id + " has mismatched tokens and tags");
    }
    out << kIdKey << s.post_id << kDateKey << s.date.ToString() << kEntityKey << s.entity_id
        << kPolarityKey << (s.polarity == Polarity::kPositive ? "POS" : "NEG") << '\n';
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      out << s.tokens[i] << '\t' << s.tags[i].ToString() << '\n';
    }
    out << '\n';
  }
}

std::vector<LabeledSentence> ReadConll(std::istream& in, const std::string& source) {
  std::vector<LabeledSentence> out;
  std::optional<LabeledSentence> open;
  std::vector<std::size_t> tag_lines;
  std::size_t lineno = 0;

  auto close = [&]() {
    if (!open) return;
    if (auto bad = FirstBilouViolation(open->tags)) {
      const std::size_t at = *bad < tag_lines.size() ? tag_lines[*bad] : lineno;
      throw FormatError(source, at, "invalid BILOU sequence");
    }
    if (open->polarity == Polarity::kNegative) {
      for (std::size_t i = 0; i < open->tags.size(); ++i) {
        if (!open->tags[i].IsOutside()) {
          throw FormatError(source, tag_lines[i], "negative sentence carries a span tag");
        }
      }
    }
    out.push_back(std::move(*open));
    open.reset();
    tag_lines.clear();
  };

  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      close();
      continue;
    }
    if (line[0] == '#') {
      close();
      open = ParseHeader(line, source, lineno);
      continue;
    }
    if (!open) throw FormatError(source, lineno, "token line outside a sentence");
    auto cells = text::Split(line, '\t');
    if (cells.size() != 2 || cells[0].empty()) {
      throw FormatError(source, lineno, "expected token<TAB>tag");
    }
    auto tag = Tag::Parse(cells[1]);
    if (!tag) throw FormatError(source, lineno, "unknown tag '" + cells[1] + "'");
    open->tokens.push_back(cells[0]);
    open->tags.push_back(*tag);
    tag_lines.push_back(lineno);
  }
  close();
  return out;
}

void WriteConllFile(const std::string& path, const std::vector<LabeledSentence>& sentences) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  WriteConll(out, sentences);
  if (!out) throw IoError("write failed for " + path);
}

std::vector<LabeledSentence> ReadConllFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return ReadConll(in, path);
}

}  // namespace fader::supervision
