#ifndef FADER_CORPUS_H_
#define FADER_CORPUS_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fader/day.h"

namespace fader::corpus {

// Rule-based microblog tokenizer:
//   1. delete substrings matching https?://\S+ or t.co/\S+ (dot literal);
//   2. split on Unicode whitespace;
//   3. drop tokens beginning with '@' or '#';
//   4. strip leading/trailing punctuation, except that + & ' . survive when
//      the neighbouring character on the inner side is alphanumeric;
//   5. drop empty tokens.
// Case is preserved.
std::vector<std::string> Tokenize(std::string_view text);

struct Post {
  std::string id;
  std::int64_t timestamp = 0;  // seconds since the epoch, UTC
  std::string text;
  std::vector<std::string> tokens;
  bool is_retweet = false;
  std::string lang = "en";

  Day day() const { return Day::FromUnixSeconds(timestamp); }
  bool operator==(const Post&) const = default;
};

// Parses one JSONL record: {"id","ts","text"[,"rt"][,"lang"]}. Unknown keys
// are ignored. Returns nullopt for a malformed record. Tokens are filled in.
std::optional<Post> ParsePostRecord(std::string_view line);
std::string FormatPostRecord(const Post& post);

using Phrase = std::vector<std::string>;

struct CorpusOptions {
  // Phrase matching folds ASCII case. Off for languages without case.
  bool fold_case = true;
  // Retweets are stored and sampled but do not count toward daily counts.
  bool exclude_retweets = false;
  // Longest n-gram held in the count table; longer phrases are scanned.
  std::size_t max_ngram = 6;
  // Shards used to build the count table. The result does not depend on it.
  unsigned threads = 1;
};

// (day, count) pairs with strictly increasing days and positive counts.
struct DailySeries {
  std::vector<std::pair<Day, std::uint32_t>> entries;

  bool empty() const { return entries.empty(); }
  std::uint64_t Total() const;
  bool operator==(const DailySeries&) const = default;
};

// Open-addressing interning table for token-id n-grams.
class NgramTable {
 public:
  NgramTable();

  std::optional<std::uint32_t> Find(std::span<const std::uint32_t> ngram) const;
  std::uint32_t Intern(std::span<const std::uint32_t> ngram);
  std::span<const std::uint32_t> Get(std::uint32_t id) const;
  std::size_t size() const { return offsets_.size(); }

 private:
  static std::uint64_t Hash(std::span<const std::uint32_t> ngram);
  void Grow();

  std::vector<std::uint32_t> arena_;
  std::vector<std::uint32_t> offsets_;
  std::vector<std::uint8_t> lengths_;
  std::vector<std::uint32_t> slots_;
};

// Immutable time-indexed post store. Posts are kept sorted by
// (timestamp, id); every post contributes at most one count per n-gram to
// its UTC day.
class CorpusIndex {
 public:
  CorpusIndex() = default;

  // Posts must have unique ids. They are sorted here.
  static CorpusIndex Build(std::vector<Post> posts, const CorpusOptions& options);

  const CorpusOptions& options() const { return options_; }
  const std::vector<Post>& posts() const { return posts_; }
  std::size_t total_posts() const { return posts_.size(); }

  // Indices into posts() for one day, in (timestamp, id) order.
  std::span<const std::uint32_t> PostsOnDay(Day day) const;
  std::vector<Day> Days() const;

  // Token as used for matching (case-folded when configured).
  std::string MatchForm(std::string_view token) const;

  // Posts per day whose token sequence contains `phrase` contiguously,
  // restricted to `range`. Throws ArgumentError on an empty phrase.
  DailySeries Counts(const Phrase& phrase, DayRange range) const;

  // Posts per day containing at least one of `phrases`.
  DailySeries CountsAny(const std::vector<Phrase>& phrases, DayRange range) const;

  // Phrases resolved to token ids for repeated matching.
  struct CompiledPhrases {
    std::vector<std::vector<std::uint32_t>> ids;
  };
  CompiledPhrases Compile(const std::vector<Phrase>& phrases) const;
  bool PostMatches(std::uint32_t post, const CompiledPhrases& phrases) const;

  bool PostContains(std::uint32_t post, const Phrase& phrase) const;
  bool PostContainsAny(std::uint32_t post, const std::vector<Phrase>& phrases) const;

  // Content equality (ids, sort order and the count table).
  bool operator==(const CorpusIndex& other) const;

 private:
  std::optional<std::vector<std::uint32_t>> PhraseIds(const Phrase& phrase) const;
  bool ContainsIds(std::uint32_t post, std::span<const std::uint32_t> ids) const;
  DailySeries ScanCounts(std::span<const std::uint32_t> ids, DayRange range) const;

  CorpusOptions options_;
  std::vector<Post> posts_;
  std::map<Day, std::pair<std::uint32_t, std::uint32_t>> day_ranges_;
  std::vector<std::uint32_t> post_order_;  // identity; backs PostsOnDay spans
  std::unordered_map<std::string, std::uint32_t> token_ids_;
  std::vector<std::vector<std::uint32_t>> post_token_ids_;
  NgramTable ngrams_;
  // CSR layout: series of n-gram g is [series_offset_[g], series_offset_[g+1]).
  std::vector<std::uint32_t> series_offset_;
  std::vector<Day> series_days_;
  std::vector<std::uint32_t> series_counts_;
};

struct IngestReport {
  std::size_t accepted = 0;
  std::size_t malformed = 0;
  std::size_t duplicates = 0;
  bool operator==(const IngestReport&) const = default;
};

struct IngestResult {
  CorpusIndex index;
  IngestReport report;
};

// Reads post JSONL. Malformed lines are counted and skipped; duplicate ids
// keep their first occurrence. Blank lines are ignored.
IngestResult IngestPosts(std::istream& in, const CorpusOptions& options);
// Throws IoError when the file cannot be read.
IngestResult IngestPostsFile(const std::string& path, const CorpusOptions& options);

// Day of the series within `year` with the highest count; the earliest such
// day on ties. nullopt when the series has no entry in the year.
std::optional<Day> PeakDay(const DailySeries& series, int year);

// Year of the earliest day the phrase is observed.
std::optional<int> FirstAppearanceYear(const CorpusIndex& index, const Phrase& phrase);

// Uniform sample without replacement of up to k posts that contain the
// phrase (any of the phrases) and fall on one of the given days. Candidates
// are enumerated in (day, timestamp, id) order; output is in draw order and
// fully determined by the arguments.
std::vector<std::uint32_t> SamplePosts(const CorpusIndex& index, const Phrase& phrase,
                                       const std::vector<Day>& days, std::size_t k,
                                       std::uint64_t seed);
std::vector<std::uint32_t> SamplePostsAny(const CorpusIndex& index,
                                          const std::vector<Phrase>& phrases,
                                          const std::vector<Day>& days, std::size_t k,
                                          std::uint64_t seed);
// Matching posts on every day in `range`, in (day, timestamp, id) order.
std::vector<std::uint32_t> MatchingPosts(const CorpusIndex& index,
                                         const std::vector<Phrase>& phrases,
                                         DayRange range);

}  // namespace fader::corpus

#endif  // FADER_CORPUS_H_
