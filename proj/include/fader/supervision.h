#ifndef FADER_SUPERVISION_H_
#define FADER_SUPERVISION_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fader/corpus.h"
#include "fader/day.h"
#include "fader/kb.h"
#include "fader/types.h"

namespace fader::supervision {

enum class Polarity { kPositive, kNegative };

struct LabeledSentence {
  std::string post_id;
  std::vector<std::string> tokens;
  TagSequence tags;
  Day date;
  std::string entity_id;
  Polarity polarity = Polarity::kNegative;

  bool operator==(const LabeledSentence&) const = default;
};

// Orders by (entity, date, post id, polarity); used for every written file.
bool CanonicalLess(const LabeledSentence& a, const LabeledSentence& b);
void SortCanonical(std::vector<LabeledSentence>& sentences);

struct SupervisionConfig {
  std::size_t k = 100;
  int train_first_year = 2012;
  int train_last_year = 2018;
  int test_year = 2019;
  double dev_fraction = 0.10;
  std::uint64_t seed = 1;

  // Throws ConfigError when an invariant does not hold.
  void Validate() const;
};

struct Dataset {
  std::vector<LabeledSentence> train;
  std::vector<LabeledSentence> dev;
  std::vector<LabeledSentence> test;
};

// Greedy longest-match, left to right, non-overlapping. Single-token matches
// become U-type, longer ones B, I.., L. Matching uses the corpus case policy.
TagSequence LabelMentions(const std::vector<std::string>& tokens,
                          const std::vector<corpus::Phrase>& aliases, CoarseType type,
                          bool fold_case);

// Up to cfg.k posts of the peak day of the entity's disappearance year.
// `peak` receives the chosen day (nullopt when the entity is not observed in
// that year, in which case the result is empty).
std::vector<LabeledSentence> CollectPositiveContexts(const kb::EntityRecord& entity,
                                                     const corpus::CorpusIndex& index,
                                                     const SupervisionConfig& cfg,
                                                     std::optional<Day>* peak = nullptr);

// min(cfg.k, positive_count) all-O sentences from posts dated before January
// 1 of the disappearance year.
std::vector<LabeledSentence> CollectNegativeContexts(const kb::EntityRecord& entity,
                                                     const corpus::CorpusIndex& index,
                                                     const SupervisionConfig& cfg,
                                                     std::size_t positive_count);

struct BaselineContexts {
  std::vector<LabeledSentence> positives;
  std::vector<LabeledSentence> negatives;
  std::optional<Day> positive_day;
};

// Last-burst variant: the latest day up to the end of `cutoff_year` on which
// the entity appears in more than 10 posts supplies up to `k` positives
// (retweets first, topped up with other posts); the same number of negatives
// come from days more than 365 days earlier.
BaselineContexts CollectBaselineContexts(const kb::EntityRecord& entity,
                                         const corpus::CorpusIndex& index, int cutoff_year,
                                         std::size_t k, std::uint64_t seed);

struct TdsResult {
  std::vector<LabeledSentence> sentences;  // canonical order
  std::vector<std::string> uncovered;      // entities without positives
};

// Positive and balanced negative collection for every entity.
TdsResult RunTds(const std::vector<kb::EntityRecord>& entities,
                 const corpus::CorpusIndex& index, const SupervisionConfig& cfg);

// Train/test by year; dev is a seeded dev_fraction of train, allocated across
// entities proportionally. Sentences sharing a post id stay on one side.
Dataset SplitDataset(const std::vector<LabeledSentence>& sentences,
                     const SupervisionConfig& cfg);

// CoNLL: "# id=<post> date=<YYYY-MM-DD> entity=<name> polarity=<POS|NEG>",
// then one "token<TAB>tag" line per token, then a blank line.
void WriteConll(std::ostream& out, const std::vector<LabeledSentence>& sentences);
std::vector<LabeledSentence> ReadConll(std::istream& in, const std::string& source);
void WriteConllFile(const std::string& path, const std::vector<LabeledSentence>& sentences);
std::vector<LabeledSentence> ReadConllFile(const std::string& path);

}  // namespace fader::supervision

#endif  // FADER_SUPERVISION_H_
