#ifndef FADER_SYNTH_H_
#define FADER_SYNTH_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fader/corpus.h"
#include "fader/day.h"
#include "fader/evaluation.h"
#include "fader/kb.h"
#include "fader/supervision.h"
#include "fader/types.h"
#include "json.hpp"

// Synthetic worlds with known entity lifespans, used as an end-to-end oracle.
namespace fader::synth {

struct EntitySpec {
  std::string name;
  std::vector<std::string> aliases;  // extra surface forms besides the name
  CoarseType type = CoarseType::kGroup;
  Day birth;
  std::optional<Day> death;
  double base_rate = 1.0;  // mentions per day
  double burst_multiplier = 10.0;
  double cue_probability = 1.0;  // per mention inside the burst window
  int kb_lag_days = 30;
  std::vector<Day> emergence;  // centres of cue-free bursts
};

// "{e}" in a template is the entity surface, "{w}" a vocabulary word.
struct WorldSpec {
  Day start;
  Day end;  // inclusive
  std::vector<EntitySpec> entities;
  std::map<CoarseType, std::vector<std::string>> cue_templates;
  std::vector<std::string> mention_templates;     // entity without cues
  std::vector<std::string> background_templates;  // no entity; may hold cue words
  std::vector<std::string> vocabulary;
  double background_rate = 5.0;  // posts per day
  int burst_radius = 3;          // burst window is death +- radius
  double emergence_multiplier = 20.0;
  double retweet_probability = 0.1;
  int max_filler = 2;  // vocabulary words added before and after a template
  // Burst mentions carry no cue; cue words appear instead in same-day sibling
  // posts that use the possessive form, which alias matching does not hit.
  bool sibling_cues = false;
  std::uint64_t seed = 1;

  // Throws ConfigError listing every violated invariant.
  void Validate() const;
};

// Templates and vocabulary of the default English-like world.
void AddDefaultText(WorldSpec* spec);

struct ReferenceOptions {
  int entities = 50;
  int first_year = 2017;  // posts start here; deaths fall in the last two years
  int last_year = 2019;
  double base_rate = 0.6;
  double burst_multiplier = 40.0;
  double cue_probability = 1.0;
  int kb_lag_days = 30;
  bool emergence = false;  // one cue-free burst 40-80 days after each death
  bool sibling_cues = false;
  double background_rate = 5.0;
  std::uint64_t seed = 1;
};

// Desk-scale world: 50 entities over three years, about 40k posts.
WorldSpec ReferenceSpec(const ReferenceOptions& options);

nlohmann::ordered_json ToJson(const WorldSpec& spec);
nlohmann::ordered_json ToJson(const ReferenceOptions& options);
// Throws ConfigError on missing or mistyped keys.
WorldSpec WorldSpecFromJson(const nlohmann::json& j);
ReferenceOptions ReferenceOptionsFromJson(const nlohmann::json& j);

struct GoldPost {
  corpus::Post post;
  TagSequence tags;    // entity span tagged iff the post is a disappearing context
  std::string entity;  // empty for background posts
  bool cue = false;
  bool sibling = false;
};

struct EntityTruth {
  std::string name;
  std::vector<std::string> aliases;  // name first
  CoarseType type = CoarseType::kGroup;
  Day birth;
  std::optional<Day> death;
  std::optional<DayRange> burst;
  std::optional<Day> kb_update;
  std::vector<Day> emergence;
  std::size_t cue_posts = 0;

  bool InBurst(Day d) const { return burst && burst->Contains(d); }
};

struct GoldWorld {
  std::vector<GoldPost> posts;        // (timestamp, id) order
  std::vector<EntityTruth> entities;  // spec order

  const EntityTruth* Find(const std::string& name) const;
  const GoldPost* FindPost(const std::string& id) const;
  std::vector<corpus::Post> Posts() const;

 private:
  friend GoldWorld Generate(const WorldSpec& spec);
  std::map<std::string, std::size_t> post_index_;
};

// Deterministic for a given spec.
GoldWorld Generate(const WorldSpec& spec);

// Every post as a CoNLL sentence (entity "-" for background posts).
std::vector<supervision::LabeledSentence> GoldSentences(const GoldWorld& world);
// Ended entities as KB rows whose categories the default mapping resolves.
std::vector<kb::EntityRecord> KbEntities(const GoldWorld& world);
std::map<std::string, Day> UpdateDates(const GoldWorld& world);

// Writes posts.jsonl, gold.conll, entities.tsv and update_dates.tsv.
void WriteWorld(const GoldWorld& world, const std::string& dir);

struct Artifacts {
  std::vector<supervision::LabeledSentence> supervision;  // weak labels
  std::vector<supervision::LabeledSentence> predictions;  // tagger output per post
  std::vector<evaluation::DetectedSpan> detections;
};

struct OracleReport {
  std::size_t positives = 0;
  std::size_t true_positives = 0;  // positives whose post is a gold disappearing context
  std::optional<double> ds_precision;
  std::size_t positive_entities = 0;  // entities with at least one positive
  std::size_t window_hits = 0;        // ... whose positives fall in the burst window
  std::optional<double> window_accuracy;
  std::optional<evaluation::EvalReport> prediction_score;
  std::size_t cue_entities = 0;  // entities with at least one cue post
  std::size_t detected_entities = 0;
  std::optional<evaluation::LeadStats> lead_vs_kb;     // kb update - first detection
  std::optional<evaluation::LeadStats> lead_vs_death;  // death - first detection
};

// Throws ArgumentError when an artifact names an entity or post the world
// does not contain.
OracleReport ScoreAgainstGold(const GoldWorld& world, const Artifacts& artifacts);

}  // namespace fader::synth

#endif  // FADER_SYNTH_H_
