#include "fader/supervision.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "fader/error.h"
#include "fader/rng.h"
#include "fader/text.h"

namespace fader::supervision {

namespace {

LabeledSentence MakeSentence(const corpus::Post& post, const kb::EntityRecord& entity,
                             const std::vector<corpus::Phrase>& aliases, Polarity polarity,
                             bool fold_case) {
  LabeledSentence s;
  s.post_id = post.id;
  s.tokens = post.tokens;
  s.date = post.day();
  s.entity_id = entity.canonical_name;
  s.polarity = polarity;
  if (polarity == Polarity::kPositive) {
    s.tags = LabelMentions(post.tokens, aliases, entity.coarse_type, fold_case);
  } else {
    s.tags.assign(post.tokens.size(), Tag::Outside());
  }
  return s;
}

std::vector<std::uint32_t> Draw(const std::vector<std::uint32_t>& candidates, std::size_t k,
                                Rng& rng) {
  std::vector<std::uint32_t> out;
  if (k == 0) return out;
  for (std::size_t i : rng.SampleIndices(candidates.size(), k)) out.push_back(candidates[i]);
  return out;
}

}  // namespace

bool CanonicalLess(const LabeledSentence& a, const LabeledSentence& b) {
  if (a.entity_id != b.entity_id) return a.entity_id < b.entity_id;
  if (a.date != b.date) return a.date < b.date;
  if (a.post_id != b.post_id) return a.post_id < b.post_id;
  return a.polarity < b.polarity;
}

void SortCanonical(std::vector<LabeledSentence>& sentences) {
  std::stable_sort(sentences.begin(), sentences.end(), CanonicalLess);
}

void SupervisionConfig::Validate() const {
  if (k < 1) throw ConfigError("supervision.k must be at least 1");
  if (!(dev_fraction > 0.0 && dev_fraction < 1.0)) {
    throw ConfigError("supervision.dev_fraction must lie in (0, 1)");
  }
  if (train_first_year > train_last_year) {
    throw ConfigError("supervision.train_years is an empty interval");
  }
  if (test_year >= train_first_year && test_year <= train_last_year) {
    throw ConfigError("supervision.test_year lies inside train_years");
  }
}

TagSequence LabelMentions(const std::vector<std::string>& tokens,
                          const std::vector<corpus::Phrase>& aliases, CoarseType type,
                          bool fold_case) {
  auto form = [&](const std::string& t) { return fold_case ? text::FoldCase(t) : t; };
  std::vector<std::string> folded;
  folded.reserve(tokens.size());
  for (const auto& t : tokens) folded.push_back(form(t));
  std::vector<std::vector<std::string>> patterns;
  for (const auto& alias : aliases) {
    if (alias.empty()) continue;
    std::vector<std::string> p;
    for (const auto& t : alias) p.push_back(form(t));
    patterns.push_back(std::move(p));
  }

  TagSequence tags(tokens.size(), Tag::Outside());
  std::size_t i = 0;
  while (i < tokens.size()) {
    std::size_t best = 0;
    for (const auto& p : patterns) {
      if (p.size() <= best || i + p.size() > tokens.size()) continue;
      if (std::equal(p.begin(), p.end(), folded.begin() + i)) best = p.size();
    }
    if (best == 0) {
      ++i;
      continue;
    }
    if (best == 1) {
      tags[i] = Tag::Make(Tag::Prefix::kU, type);
    } else {
      tags[i] = Tag::Make(Tag::Prefix::kB, type);
      for (std::size_t j = i + 1; j + 1 < i + best; ++j) tags[j] = Tag::Make(Tag::Prefix::kI, type);
      tags[i + best - 1] = Tag::Make(Tag::Prefix::kL, type);
    }
    i += best;
  }
  return tags;
}

std::vector<LabeledSentence> CollectPositiveContexts(const kb::EntityRecord& entity,
                                                     const corpus::CorpusIndex& index,
                                                     const SupervisionConfig& cfg,
                                                     std::optional<Day>* peak) {
  if (peak) peak->reset();
  const auto aliases = entity.AliasPhrases();
  if (aliases.empty()) return {};
  const int year = entity.disappearance_year;
  auto series = index.CountsAny(aliases, DayRange::Year(year));
  auto day = corpus::PeakDay(series, year);
  if (!day) return {};
  if (peak) *peak = day;

  auto chosen = corpus::SamplePostsAny(index, aliases, {*day}, cfg.k,
                                       DeriveSeed(cfg.seed, "positive:" + entity.canonical_name));
  std::vector<LabeledSentence> out;
  for (std::uint32_t p : chosen) {
    out.push_back(MakeSentence(index.posts()[p], entity, aliases, Polarity::kPositive,
                               index.options().fold_case));
  }
  SortCanonical(out);
  return out;
}

std::vector<LabeledSentence> CollectNegativeContexts(const kb::EntityRecord& entity,
                                                     const corpus::CorpusIndex& index,
                                                     const SupervisionConfig& cfg,
                                                     std::size_t positive_count) {
  const auto aliases = entity.AliasPhrases();
  const std::size_t want = std::min(cfg.k, positive_count);
  if (aliases.empty() || want == 0) return {};
  const DayRange before{DayRange::All().first, FirstDayOfYear(entity.disappearance_year) - 1};
  auto candidates = corpus::MatchingPosts(index, aliases, before);
  Rng rng(DeriveSeed(cfg.seed, "negative:" + entity.canonical_name));
  std::vector<LabeledSentence> out;
  for (std::uint32_t p : Draw(candidates, want, rng)) {
    out.push_back(MakeSentence(index.posts()[p], entity, aliases, Polarity::kNegative,
                               index.options().fold_case));
  }
  SortCanonical(out);
  return out;
}

BaselineContexts CollectBaselineContexts(const kb::EntityRecord& entity,
                                         const corpus::CorpusIndex& index, int cutoff_year,
                                         std::size_t k, std::uint64_t seed) {
  BaselineContexts result;
  const auto aliases = entity.AliasPhrases();
  if (aliases.empty()) return result;
  auto series = index.CountsAny(aliases, {DayRange::All().first, LastDayOfYear(cutoff_year)});
  for (auto it = series.entries.rbegin(); it != series.entries.rend(); ++it) {
    if (it->second > 10) {
      result.positive_day = it->first;
      break;
    }
  }
  if (!result.positive_day) return result;
  const Day day = *result.positive_day;
  const bool fold = index.options().fold_case;

  std::vector<std::uint32_t> retweets, others;
  for (std::uint32_t p : corpus::MatchingPosts(index, aliases, {day, day})) {
    (index.posts()[p].is_retweet ? retweets : others).push_back(p);
  }
  Rng rng(DeriveSeed(seed, "baseline:" + entity.canonical_name));
  std::vector<std::uint32_t> chosen = Draw(retweets, k, rng);
  if (chosen.size() < k) {
    auto fill = Draw(others, k - chosen.size(), rng);
    chosen.insert(chosen.end(), fill.begin(), fill.end());
  }
  for (std::uint32_t p : chosen) {
    result.positives.push_back(
        MakeSentence(index.posts()[p], entity, aliases, Polarity::kPositive, fold));
  }

  const DayRange early{DayRange::All().first, day - 366};
  auto pool = corpus::MatchingPosts(index, aliases, early);
  for (std::uint32_t p : Draw(pool, result.positives.size(), rng)) {
    result.negatives.push_back(
        MakeSentence(index.posts()[p], entity, aliases, Polarity::kNegative, fold));
  }
  SortCanonical(result.positives);
  SortCanonical(result.negatives);
  return result;
}

TdsResult RunTds(const std::vector<kb::EntityRecord>& entities,
                 const corpus::CorpusIndex& index, const SupervisionConfig& cfg) {
  cfg.Validate();
  TdsResult result;
  for (const auto& entity : entities) {
    auto positives = CollectPositiveContexts(entity, index, cfg);
    if (positives.empty()) {
      result.uncovered.push_back(entity.canonical_name);
      continue;
    }
    auto negatives = CollectNegativeContexts(entity, index, cfg, positives.size());
    result.sentences.insert(result.sentences.end(), positives.begin(), positives.end());
    result.sentences.insert(result.sentences.end(), negatives.begin(), negatives.end());
  }
  SortCanonical(result.sentences);
  return result;
}

Dataset SplitDataset(const std::vector<LabeledSentence>& sentences,
                     const SupervisionConfig& cfg) {
  cfg.Validate();
  Dataset data;
  std::vector<LabeledSentence> train;
  for (const auto& s : sentences) {
    const int y = s.date.year();
    if (y == cfg.test_year) {
      data.test.push_back(s);
    } else if (y >= cfg.train_first_year && y <= cfg.train_last_year) {
      train.push_back(s);
    }
  }
  SortCanonical(train);

  std::map<std::string, std::vector<std::size_t>> by_entity;
  for (std::size_t i = 0; i < train.size(); ++i) by_entity[train[i].entity_id].push_back(i);
  const auto total_dev = static_cast<std::size_t>(std::llround(cfg.dev_fraction * train.size()));

  // Largest-remainder allocation of the dev budget across entities.
  struct Quota {
    std::string entity;
    std::size_t count;
    double remainder;
  };
  std::vector<Quota> quotas;
  std::size_t allocated = 0;
  for (const auto& [entity, members] : by_entity) {
    const double exact = cfg.dev_fraction * members.size();
    const auto base = static_cast<std::size_t>(std::floor(exact));
    quotas.push_back({entity, base, exact - base});
    allocated += base;
  }
  Rng order_rng(DeriveSeed(cfg.seed, "dev-allocation"));
  order_rng.Shuffle(quotas);
  std::stable_sort(quotas.begin(), quotas.end(),
                   [](const Quota& a, const Quota& b) { return a.remainder > b.remainder; });
  for (std::size_t q = 0; allocated < total_dev && q < quotas.size(); ++q) {
    if (quotas[q].count < by_entity[quotas[q].entity].size()) {
      ++quotas[q].count;
      ++allocated;
    }
  }

  std::vector<bool> in_dev(train.size(), false);
  std::set<std::string> dev_posts;
  for (const auto& q : quotas) {
    const auto& members = by_entity[q.entity];
    Rng rng(DeriveSeed(cfg.seed, "dev:" + q.entity));
    for (std::size_t m : rng.SampleIndices(members.size(), q.count)) {
      in_dev[members[m]] = true;
      dev_posts.insert(train[members[m]].post_id);
    }
  }
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (in_dev[i] || dev_posts.count(train[i].post_id)) {
      data.dev.push_back(std::move(train[i]));
    } else {
      data.train.push_back(std::move(train[i]));
    }
  }
  SortCanonical(data.test);
  return data;
}

}  // namespace fader::supervision
