#include "fader/corpus.h"

#include <algorithm>
#include <fstream>
#include <istream>
#include "json.hpp"
#include <thread>

#include "fader/error.h"
#include "fader/rng.h"
#include "fader/text.h"

namespace fader::corpus {

namespace {

constexpr std::uint32_t kEmptySlot = 0xFFFFFFFFu;

bool MatchesAt(const std::vector<char32_t>& cps, std::size_t i,
               std::u32string_view prefix) {
  if (i + prefix.size() > cps.size()) return false;
  for (std::size_t k = 0; k < prefix.size(); ++k) {
    if (cps[i + k] != prefix[k]) return false;
  }
  return true;
}

bool KeepsAtEdge(char32_t cp) {
  return cp == U'+' || cp == U'&' || cp == U'\'' || cp == U'.';
}

// Length of a URL starting at i (prefix plus at least one non-space), or 0.
std::size_t UrlLength(const std::vector<char32_t>& cps, std::size_t i) {
  for (std::u32string_view prefix : {U"http://", U"https://", U"t.co/"}) {
    if (!MatchesAt(cps, i, prefix)) continue;
    std::size_t end = i + prefix.size();
    if (end >= cps.size() || text::IsSpace(cps[end])) continue;
    while (end < cps.size() && !text::IsSpace(cps[end])) ++end;
    return end - i;
  }
  return 0;
}

// Shard-local n-gram occurrences, merged in shard order.
struct Shard {
  NgramTable table;
  std::vector<std::uint32_t> ids;
  std::vector<Day> days;
};

}  // namespace

std::vector<std::string> Tokenize(std::string_view raw) {
  const std::vector<char32_t> cps = text::DecodeUtf8(raw);

  std::vector<char32_t> cleaned;
  cleaned.reserve(cps.size());
  for (std::size_t i = 0; i < cps.size();) {
    if (std::size_t n = UrlLength(cps, i)) {
      i += n;
      continue;
    }
    cleaned.push_back(cps[i++]);
  }

  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < cleaned.size()) {
    while (i < cleaned.size() && text::IsSpace(cleaned[i])) ++i;
    std::size_t b = i;
    while (i < cleaned.size() && !text::IsSpace(cleaned[i])) ++i;
    std::size_t e = i;
    if (b == e) continue;
    if (cleaned[b] == U'@' || cleaned[b] == U'#') continue;
    while (b < e && text::IsPunct(cleaned[b])) {
      if (KeepsAtEdge(cleaned[b]) && b + 1 < e && text::IsAlnum(cleaned[b + 1])) break;
      ++b;
    }
    while (e > b && text::IsPunct(cleaned[e - 1])) {
      if (KeepsAtEdge(cleaned[e - 1]) && e >= b + 2 && text::IsAlnum(cleaned[e - 2])) break;
      --e;
    }
    if (b == e) continue;
    std::string token;
    for (std::size_t k = b; k < e; ++k) text::AppendUtf8(cleaned[k], &token);
    tokens.push_back(std::move(token));
  }
  return tokens;
}

std::optional<Post> ParsePostRecord(std::string_view line) {
  auto j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  auto id = j.find("id");
  auto ts = j.find("ts");
  auto body = j.find("text");
  if (id == j.end() || !id->is_string() || id->get_ref<const std::string&>().empty()) {
    return std::nullopt;
  }
  if (ts == j.end() || !ts->is_string()) return std::nullopt;
  if (body == j.end() || !body->is_string()) return std::nullopt;
  auto seconds = ParseTimestamp(ts->get_ref<const std::string&>());
  if (!seconds) return std::nullopt;

  Post post;
  post.id = id->get<std::string>();
  post.timestamp = *seconds;
  post.text = body->get<std::string>();
  if (auto rt = j.find("rt"); rt != j.end()) {
    if (!rt->is_boolean()) return std::nullopt;
    post.is_retweet = rt->get<bool>();
  }
  if (auto lang = j.find("lang"); lang != j.end()) {
    if (!lang->is_string()) return std::nullopt;
    post.lang = lang->get<std::string>();
  }
  post.tokens = Tokenize(post.text);
  return post;
}

std::string FormatPostRecord(const Post& post) {
  nlohmann::ordered_json j;
  j["id"] = post.id;
  j["ts"] = FormatTimestamp(post.timestamp);
  j["text"] = post.text;
  j["rt"] = post.is_retweet;
  j["lang"] = post.lang;
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

std::uint64_t DailySeries::Total() const {
  std::uint64_t total = 0;
  for (const auto& [day, count] : entries) total += count;
  return total;
}

// ---------------------------------------------------------------------------
// NgramTable

NgramTable::NgramTable() : slots_(1024, kEmptySlot) {}

std::uint64_t NgramTable::Hash(std::span<const std::uint32_t> ngram) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ ngram.size();
  for (std::uint32_t id : ngram) {
    h ^= id;
    h *= 0x100000001b3ULL;
    h ^= h >> 29;
  }
  return h;
}

std::span<const std::uint32_t> NgramTable::Get(std::uint32_t id) const {
  return {arena_.data() + offsets_[id], lengths_[id]};
}

std::optional<std::uint32_t> NgramTable::Find(std::span<const std::uint32_t> ngram) const {
  const std::size_t mask = slots_.size() - 1;
  for (std::size_t h = Hash(ngram) & mask;; h = (h + 1) & mask) {
    const std::uint32_t slot = slots_[h];
    if (slot == kEmptySlot) return std::nullopt;
    auto stored = Get(slot);
    if (std::equal(stored.begin(), stored.end(), ngram.begin(), ngram.end())) return slot;
  }
}

std::uint32_t NgramTable::Intern(std::span<const std::uint32_t> ngram) {
  if ((offsets_.size() + 1) * 2 > slots_.size()) Grow();
  const std::size_t mask = slots_.size() - 1;
  std::size_t h = Hash(ngram) & mask;
  for (;; h = (h + 1) & mask) {
    const std::uint32_t slot = slots_[h];
    if (slot == kEmptySlot) break;
    auto stored = Get(slot);
    if (std::equal(stored.begin(), stored.end(), ngram.begin(), ngram.end())) return slot;
  }
  const auto id = static_cast<std::uint32_t>(offsets_.size());
  offsets_.push_back(static_cast<std::uint32_t>(arena_.size()));
  lengths_.push_back(static_cast<std::uint8_t>(ngram.size()));
  arena_.insert(arena_.end(), ngram.begin(), ngram.end());
  slots_[h] = id;
  return id;
}

void NgramTable::Grow() {
  std::vector<std::uint32_t> fresh(slots_.size() * 2, kEmptySlot);
  const std::size_t mask = fresh.size() - 1;
  for (std::uint32_t id = 0; id < offsets_.size(); ++id) {
    std::size_t h = Hash(Get(id)) & mask;
    while (fresh[h] != kEmptySlot) h = (h + 1) & mask;
    fresh[h] = id;
  }
  slots_.swap(fresh);
}

// ---------------------------------------------------------------------------
// CorpusIndex

CorpusIndex CorpusIndex::Build(std::vector<Post> posts, const CorpusOptions& options) {
  if (options.max_ngram == 0 || options.max_ngram > 255) {
    throw ArgumentError("max_ngram must be in [1, 255]");
  }
  CorpusIndex index;
  index.options_ = options;
  std::sort(posts.begin(), posts.end(), [](const Post& a, const Post& b) {
    return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.id < b.id;
  });
  index.posts_ = std::move(posts);
  const auto n = static_cast<std::uint32_t>(index.posts_.size());

  index.post_order_.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    index.post_order_[i] = i;
    const Day day = index.posts_[i].day();
    auto [it, inserted] = index.day_ranges_.try_emplace(day, i, i + 1);
    if (!inserted) it->second.second = i + 1;
  }

  index.post_token_ids_.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    auto& ids = index.post_token_ids_[i];
    for (const auto& token : index.posts_[i].tokens) {
      auto [it, inserted] = index.token_ids_.try_emplace(
          index.MatchForm(token), static_cast<std::uint32_t>(index.token_ids_.size()));
      ids.push_back(it->second);
    }
  }

  // Shard boundaries fall on day boundaries, in day order.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> bounds;
  {
    const unsigned shards = std::max(1u, options.threads);
    const std::uint32_t target = (n + shards - 1) / shards;
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    for (const auto& [day, range] : index.day_ranges_) {
      end = range.second;
      if (end - begin >= target) {
        bounds.emplace_back(begin, end);
        begin = end;
      }
    }
    if (begin < n) bounds.emplace_back(begin, n);
  }

  std::vector<Shard> shards(bounds.size());
  auto build_shard = [&](std::size_t s) {
    Shard& shard = shards[s];
    std::vector<std::uint32_t> seen;
    for (std::uint32_t p = bounds[s].first; p < bounds[s].second; ++p) {
      if (options.exclude_retweets && index.posts_[p].is_retweet) continue;
      const auto& ids = index.post_token_ids_[p];
      seen.clear();
      for (std::size_t start = 0; start < ids.size(); ++start) {
        const std::size_t longest = std::min(options.max_ngram, ids.size() - start);
        for (std::size_t len = 1; len <= longest; ++len) {
          seen.push_back(shard.table.Intern({ids.data() + start, len}));
        }
      }
      std::sort(seen.begin(), seen.end());
      seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
      const Day day = index.posts_[p].day();
      for (std::uint32_t g : seen) {
        shard.ids.push_back(g);
        shard.days.push_back(day);
      }
    }
  };
  if (shards.size() <= 1 || options.threads <= 1) {
    for (std::size_t s = 0; s < shards.size(); ++s) build_shard(s);
  } else {
    std::vector<std::thread> workers;
    for (std::size_t s = 0; s < shards.size(); ++s) workers.emplace_back(build_shard, s);
    for (auto& w : workers) w.join();
  }

  // Interning shard tables in shard order reproduces first-occurrence ids.
  std::vector<std::uint32_t> occ_ids;
  std::vector<Day> occ_days;
  for (Shard& shard : shards) {
    std::vector<std::uint32_t> remap(shard.table.size());
    for (std::uint32_t g = 0; g < shard.table.size(); ++g) {
      remap[g] = index.ngrams_.Intern(shard.table.Get(g));
    }
    for (std::size_t k = 0; k < shard.ids.size(); ++k) {
      occ_ids.push_back(remap[shard.ids[k]]);
      occ_days.push_back(shard.days[k]);
    }
    shard = Shard{};
  }

  const std::size_t groups = index.ngrams_.size();
  std::vector<std::uint32_t> start(groups + 1, 0);
  for (std::uint32_t g : occ_ids) ++start[g + 1];
  for (std::size_t g = 0; g < groups; ++g) start[g + 1] += start[g];
  std::vector<Day> bucketed(occ_ids.size());
  {
    std::vector<std::uint32_t> cursor(start.begin(), start.end() - 1);
    for (std::size_t k = 0; k < occ_ids.size(); ++k) bucketed[cursor[occ_ids[k]]++] = occ_days[k];
  }
  index.series_offset_.reserve(groups + 1);
  index.series_offset_.push_back(0);
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t first = index.series_days_.size();
    for (std::uint32_t k = start[g]; k < start[g + 1]; ++k) {
      if (index.series_days_.size() > first && index.series_days_.back() == bucketed[k]) {
        ++index.series_counts_.back();
      } else {
        index.series_days_.push_back(bucketed[k]);
        index.series_counts_.push_back(1);
      }
    }
    index.series_offset_.push_back(static_cast<std::uint32_t>(index.series_days_.size()));
  }
  return index;
}

std::span<const std::uint32_t> CorpusIndex::PostsOnDay(Day day) const {
  auto it = day_ranges_.find(day);
  if (it == day_ranges_.end()) return {};
  return {post_order_.data() + it->second.first, it->second.second - it->second.first};
}

std::vector<Day> CorpusIndex::Days() const {
  std::vector<Day> days;
  days.reserve(day_ranges_.size());
  for (const auto& [day, range] : day_ranges_) days.push_back(day);
  return days;
}

std::string CorpusIndex::MatchForm(std::string_view token) const {
  return options_.fold_case ? text::FoldCase(token) : std::string(token);
}

std::optional<std::vector<std::uint32_t>> CorpusIndex::PhraseIds(const Phrase& phrase) const {
  std::vector<std::uint32_t> ids;
  ids.reserve(phrase.size());
  for (const auto& token : phrase) {
    auto it = token_ids_.find(MatchForm(token));
    if (it == token_ids_.end()) return std::nullopt;
    ids.push_back(it->second);
  }
  return ids;
}

bool CorpusIndex::ContainsIds(std::uint32_t post, std::span<const std::uint32_t> ids) const {
  const auto& tokens = post_token_ids_[post];
  return std::search(tokens.begin(), tokens.end(), ids.begin(), ids.end()) != tokens.end();
}

DailySeries CorpusIndex::ScanCounts(std::span<const std::uint32_t> ids, DayRange range) const {
  DailySeries series;
  for (auto it = day_ranges_.lower_bound(range.first);
       it != day_ranges_.end() && it->first <= range.last; ++it) {
    std::uint32_t count = 0;
    for (std::uint32_t p = it->second.first; p < it->second.second; ++p) {
      if (options_.exclude_retweets && posts_[p].is_retweet) continue;
      if (ContainsIds(p, ids)) ++count;
    }
    if (count) series.entries.emplace_back(it->first, count);
  }
  return series;
}

DailySeries CorpusIndex::Counts(const Phrase& phrase, DayRange range) const {
  if (phrase.empty()) throw ArgumentError("daily counts: empty phrase");
  auto ids = PhraseIds(phrase);
  if (!ids) return {};
  if (ids->size() > options_.max_ngram) return ScanCounts(*ids, range);
  auto g = ngrams_.Find(*ids);
  if (!g) return {};
  auto first = series_days_.begin() + series_offset_[*g];
  auto last = series_days_.begin() + series_offset_[*g + 1];
  auto lo = std::lower_bound(first, last, range.first);
  auto hi = std::upper_bound(lo, last, range.last);
  DailySeries series;
  for (auto it = lo; it != hi; ++it) {
    series.entries.emplace_back(*it, series_counts_[it - series_days_.begin()]);
  }
  return series;
}

DailySeries CorpusIndex::CountsAny(const std::vector<Phrase>& phrases, DayRange range) const {
  if (phrases.empty()) throw ArgumentError("daily counts: no phrases");
  if (phrases.size() == 1) return Counts(phrases.front(), range);
  std::vector<Day> days;
  for (const auto& phrase : phrases) {
    for (const auto& [day, count] : Counts(phrase, range).entries) days.push_back(day);
  }
  std::sort(days.begin(), days.end());
  days.erase(std::unique(days.begin(), days.end()), days.end());
  DailySeries series;
  const CompiledPhrases compiled = Compile(phrases);
  for (Day day : days) {
    std::uint32_t count = 0;
    for (std::uint32_t p : PostsOnDay(day)) {
      if (options_.exclude_retweets && posts_[p].is_retweet) continue;
      if (PostMatches(p, compiled)) ++count;
    }
    if (count) series.entries.emplace_back(day, count);
  }
  return series;
}

CorpusIndex::CompiledPhrases CorpusIndex::Compile(const std::vector<Phrase>& phrases) const {
  CompiledPhrases compiled;
  for (const auto& phrase : phrases) {
    if (phrase.empty()) continue;
    if (auto ids = PhraseIds(phrase)) compiled.ids.push_back(std::move(*ids));
  }
  return compiled;
}

bool CorpusIndex::PostMatches(std::uint32_t post, const CompiledPhrases& phrases) const {
  return std::any_of(phrases.ids.begin(), phrases.ids.end(),
                     [&](const auto& ids) { return ContainsIds(post, ids); });
}

bool CorpusIndex::PostContains(std::uint32_t post, const Phrase& phrase) const {
  if (phrase.empty()) return false;
  auto ids = PhraseIds(phrase);
  return ids && ContainsIds(post, *ids);
}

bool CorpusIndex::PostContainsAny(std::uint32_t post, const std::vector<Phrase>& phrases) const {
  return std::any_of(phrases.begin(), phrases.end(),
                     [&](const Phrase& p) { return PostContains(post, p); });
}

bool CorpusIndex::operator==(const CorpusIndex& other) const {
  if (posts_ != other.posts_ || token_ids_ != other.token_ids_) return false;
  if (series_offset_ != other.series_offset_ || series_days_ != other.series_days_ ||
      series_counts_ != other.series_counts_ || ngrams_.size() != other.ngrams_.size()) {
    return false;
  }
  for (std::uint32_t g = 0; g < ngrams_.size(); ++g) {
    auto a = ngrams_.Get(g);
    auto b = other.ngrams_.Get(g);
    if (!std::equal(a.begin(), a.end(), b.begin(), b.end())) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

IngestResult IngestPosts(std::istream& in, const CorpusOptions& options) {
  IngestReport report;
  std::vector<Post> posts;
  std::unordered_map<std::string, bool> seen;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto post = ParsePostRecord(line);
    if (!post) {
      ++report.malformed;
      continue;
    }
    if (!seen.emplace(post->id, true).second) {
      ++report.duplicates;
      continue;
    }
    ++report.accepted;
    posts.push_back(std::move(*post));
  }
  if (in.bad()) throw IoError("error while reading post stream");
  return {CorpusIndex::Build(std::move(posts), options), report};
}

IngestResult IngestPostsFile(const std::string& path, const CorpusOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus " + path);
  return IngestPosts(in, options);
}

std::optional<Day> PeakDay(const DailySeries& series, int year) {
  std::optional<Day> best;
  std::uint32_t best_count = 0;
  for (const auto& [day, count] : series.entries) {
    if (day.year() != year) continue;
    if (!best || count > best_count) {
      best = day;
      best_count = count;
    }
  }
  return best;
}

std::optional<int> FirstAppearanceYear(const CorpusIndex& index, const Phrase& phrase) {
  if (phrase.empty()) throw ArgumentError("first appearance: empty phrase");
  DailySeries series = index.Counts(phrase, DayRange::All());
  if (series.empty()) return std::nullopt;
  return series.entries.front().first.year();
}

std::vector<std::uint32_t> SamplePostsAny(const CorpusIndex& index,
                                          const std::vector<Phrase>& phrases,
                                          const std::vector<Day>& days, std::size_t k,
                                          std::uint64_t seed) {
  if (k == 0) throw ArgumentError("sample size must be at least 1");
  std::vector<Day> sorted = days;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  const auto compiled = index.Compile(phrases);
  std::vector<std::uint32_t> candidates;
  for (Day day : sorted) {
    for (std::uint32_t p : index.PostsOnDay(day)) {
      if (index.PostMatches(p, compiled)) candidates.push_back(p);
    }
  }
  Rng rng(seed);
  std::vector<std::uint32_t> out;
  for (std::size_t i : rng.SampleIndices(candidates.size(), k)) out.push_back(candidates[i]);
  return out;
}

std::vector<std::uint32_t> SamplePosts(const CorpusIndex& index, const Phrase& phrase,
                                       const std::vector<Day>& days, std::size_t k,
                                       std::uint64_t seed) {
  if (phrase.empty()) throw ArgumentError("sample: empty phrase");
  return SamplePostsAny(index, {phrase}, days, k, seed);
}

std::vector<std::uint32_t> MatchingPosts(const CorpusIndex& index,
                                         const std::vector<Phrase>& phrases,
                                         DayRange range) {
  const auto compiled = index.Compile(phrases);
  std::vector<std::uint32_t> out;
  for (Day day : index.Days()) {
    if (!range.Contains(day)) continue;
    for (std::uint32_t p : index.PostsOnDay(day)) {
      if (index.PostMatches(p, compiled)) out.push_back(p);
    }
  }
  return out;
}

}  // namespace fader::corpus
