#include "fader/synth.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "fader/error.h"
#include "fader/rng.h"
#include "fader/text.h"

namespace fader::synth {

namespace {

constexpr CoarseType kReferenceTypes[] = {CoarseType::kPerson,         CoarseType::kGroup,
                                          CoarseType::kServiceProduct, CoarseType::kLocation,
                                          CoarseType::kCreativeWork,   CoarseType::kEvent};

std::size_t Count(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto at = s.find(needle); at != std::string::npos; at = s.find(needle, at + 1)) ++n;
  return n;
}

std::string ReplaceAll(std::string s, const std::string& from, const std::string& to) {
  for (auto at = s.find(from); at != std::string::npos; at = s.find(from, at + to.size())) {
    s.replace(at, from.size(), to);
  }
  return s;
}

struct Built {
  std::string text;
  std::vector<std::string> tokens;
  std::size_t span_start = 0;
  std::size_t span_end = 0;
};

// Fills a template chunk by chunk so the entity's token range is known
// without searching the tokenized text.
Built Fill(const std::string& tmpl, const std::string& surface, const WorldSpec& spec, Rng& rng) {
  std::vector<std::pair<std::string, bool>> chunks;  // (chunk, is entity)
  auto word = [&] { return spec.vocabulary[rng.Below(spec.vocabulary.size())]; };
  const auto before = spec.max_filler > 0 ? rng.Below(spec.max_filler + 1) : 0;
  for (std::size_t i = 0; i < before; ++i) chunks.emplace_back(word(), false);
  for (const auto& part : text::Split(tmpl, ' ')) {
    if (part.empty()) continue;
    std::string chunk = part;
    while (chunk.find("{w}") != std::string::npos) chunk.replace(chunk.find("{w}"), 3, word());
    if (chunk.find("{e}") == std::string::npos) {
      chunks.emplace_back(chunk, false);
      continue;
    }
    for (const auto& piece : text::Split(ReplaceAll(chunk, "{e}", surface), ' ')) {
      if (!piece.empty()) chunks.emplace_back(piece, true);
    }
  }
  const auto after = spec.max_filler > 0 ? rng.Below(spec.max_filler + 1) : 0;
  for (std::size_t i = 0; i < after; ++i) chunks.emplace_back(word(), false);

  Built out;
  bool seen = false;
  std::vector<std::string> texts;
  for (const auto& [chunk, is_entity] : chunks) {
    texts.push_back(chunk);
    for (auto& tok : corpus::Tokenize(chunk)) {
      if (is_entity) {
        if (!seen) out.span_start = out.tokens.size();
        seen = true;
        out.span_end = out.tokens.size() + 1;
      }
      out.tokens.push_back(std::move(tok));
    }
  }
  out.text = text::Join(texts, " ");
  return out;
}

TagSequence SpanTags(std::size_t n, std::size_t start, std::size_t end, CoarseType type) {
  TagSequence tags(n, Tag::Outside());
  if (end == start + 1) {
    tags[start] = Tag::Make(Tag::Prefix::kU, type);
    return tags;
  }
  tags[start] = Tag::Make(Tag::Prefix::kB, type);
  for (std::size_t i = start + 1; i + 1 < end; ++i) tags[i] = Tag::Make(Tag::Prefix::kI, type);
  tags[end - 1] = Tag::Make(Tag::Prefix::kL, type);
  return tags;
}

bool HasSpan(const TagSequence& tags) {
  return std::any_of(tags.begin(), tags.end(), [](const Tag& t) { return !t.IsOutside(); });
}

std::string CategoryFor(CoarseType type, int year) {
  const std::string y = std::to_string(year);
  switch (type) {
    case CoarseType::kPerson: return y + "_deaths";
    case CoarseType::kCreativeWork: return "Ended_television_series";
    case CoarseType::kLocation: return "Buildings_and_structures_demolished_in_" + y;
    case CoarseType::kGroup: return "Musical_groups_disestablished_in_" + y;
    case CoarseType::kEvent: return "Events_discontinued_in_" + y;
    case CoarseType::kServiceProduct: return "Internet_properties_disestablished_in_" + y;
    default: return "Synthetic_entities";
  }
}

std::string Capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

std::string MakeWord(Rng& rng) {
  static const char* kSyllables[] = {"ka", "lo", "mi",  "ren", "to", "vi",  "sa",  "dor", "el",  "fin",
                                     "gar", "hu", "ja", "kor", "lu", "mar", "nel", "os",  "pra", "quin",
                                     "ris", "sol", "tan", "ur", "val", "wen", "xo", "zen", "bri", "dax"};
  const auto n = 2 + rng.Below(2);
  std::string w;
  for (std::uint64_t i = 0; i < n; ++i) w += kSyllables[rng.Below(std::size(kSyllables))];
  return Capitalize(w);
}

std::string MakeName(CoarseType type, Rng& rng) {
  auto pick = [&](std::initializer_list<const char*> words) {
    return std::string(*(words.begin() + rng.Below(words.size())));
  };
  switch (type) {
    case CoarseType::kPerson: return MakeWord(rng) + " " + MakeWord(rng);
    case CoarseType::kLocation: return MakeWord(rng) + " " + pick({"Mall", "Tower", "Stadium", "Museum"});
    case CoarseType::kEvent: return MakeWord(rng) + " " + pick({"Fest", "Cup", "Expo"});
    case CoarseType::kCreativeWork: return MakeWord(rng) + " " + pick({"Chronicles", "Saga"});
    default: return MakeWord(rng);
  }
}

Day ParseDayOrThrow(const nlohmann::json& j, const char* key) {
  auto d = Day::Parse(j.at(key).get<std::string>());
  if (!d) throw ConfigError(std::string("bad date for '") + key + "'");
  return *d;
}

CoarseType ParseTypeOrThrow(const std::string& name) {
  auto t = ParseCoarseType(name);
  if (!t) throw ConfigError("unknown coarse type " + name);
  return *t;
}

}  // namespace

void WorldSpec::Validate() const {
  std::vector<std::string> problems;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) problems.push_back(what);
  };
  check(start <= end, "start must not be after end");
  check(background_rate >= 0.0, "background_rate must be >= 0");
  check(burst_radius >= 0, "burst_radius must be >= 0");
  check(emergence_multiplier > 0.0, "emergence_multiplier must be > 0");
  check(retweet_probability >= 0.0 && retweet_probability <= 1.0, "retweet_probability must be in [0,1]");
  check(max_filler >= 0, "max_filler must be >= 0");
  const bool needs_words = max_filler > 0 ||
                           std::any_of(mention_templates.begin(), mention_templates.end(),
                                       [](const std::string& t) { return Count(t, "{w}") > 0; }) ||
                           std::any_of(background_templates.begin(), background_templates.end(),
                                       [](const std::string& t) { return Count(t, "{w}") > 0; });
  check(!needs_words || !vocabulary.empty(), "vocabulary must not be empty");
  for (const auto& t : mention_templates) check(Count(t, "{e}") == 1, "mention template needs one {e}: " + t);
  for (const auto& t : background_templates) check(Count(t, "{e}") == 0, "background template holds {e}: " + t);
  check(background_rate == 0.0 || !background_templates.empty(), "background_templates must not be empty");
  check(entities.empty() || !mention_templates.empty(), "mention_templates must not be empty");
  std::set<std::string> names;
  for (const auto& e : entities) {
    const std::string who = "entity '" + e.name + "': ";
    check(!corpus::Tokenize(e.name).empty(), who + "name has no tokens");
    check(names.insert(e.name).second, who + "duplicate name");
    check(!e.death || e.birth < *e.death, who + "birth must precede death");
    check(e.base_rate > 0.0, who + "base_rate must be > 0");
    check(e.burst_multiplier > 0.0, who + "burst_multiplier must be > 0");
    check(e.cue_probability >= 0.0 && e.cue_probability <= 1.0, who + "cue_probability must be in [0,1]");
    check(e.kb_lag_days >= 0, who + "kb_lag_days must be >= 0");
    if (e.death) {
      auto it = cue_templates.find(e.type);
      check(it != cue_templates.end() && !it->second.empty(),
            who + "no cue templates for type " + std::string(CoarseTypeName(e.type)));
    }
  }
  for (const auto& [type, list] : cue_templates) {
    for (const auto& t : list) check(Count(t, "{e}") == 1, "cue template needs one {e}: " + t);
  }
  if (!problems.empty()) throw ConfigError("invalid world spec: " + text::Join(problems, "; "));
}

void AddDefaultText(WorldSpec* spec) {
  using T = CoarseType;
  spec->cue_templates = {
      {T::kPerson, {"{e} has died", "RIP {e} passed away today", "sad news {e} died at home"}},
      {T::kGroup, {"{e} will disband", "{e} announced they will disband", "{e} breaking up after the final concert"}},
      {T::kServiceProduct, {"{e} will shut down", "{e} service shuts down next week", "{e} will not continue"}},
      {T::kLocation, {"{e} will close its doors", "demolition of {e} begins", "{e} closing for good"}},
      {T::kCreativeWork, {"{e} will not continue", "{e} cancelled after the final season", "last episode of {e} tonight"}},
      {T::kEvent, {"{e} will not continue", "{e} cancelled for good", "this is the final {e}"}},
      {T::kUnmapped, {"{e} is gone for good"}},
  };
  spec->mention_templates = {
      "{e} is trending",      "just saw {e} today",         "anyone else love {e}",
      "talking about {e} with {w}", "{e} was great {w}",    "thinking about {e}",
      "{w} {e} {w}",          "who remembers {e}",          "{e} again lol",
      "my {w} likes {e}",
  };
  spec->background_templates = {
      "{w} {w} {w}",
      "cannot believe the {w} today",
      "so much {w} this morning",
      "my phone died again",
      "the {w} shop will shut down early tonight",
      "they will disband the {w} club",
      "demolition noise all day near the {w}",
      "we will not continue this {w} debate",
      "the old {w} passed away last year",
      "the {w} is closing early",
      "final {w} of the week",
      "cancelled my {w} plans",
  };
  spec->vocabulary = {
      "coffee", "weather", "rain",    "sunny",  "lunch",  "dinner", "work",   "school", "music",  "game",
      "movie",  "news",    "friends", "family", "train",  "bus",    "city",   "park",   "beach",  "book",
      "happy",  "tired",   "busy",    "great",  "funny",  "weird",  "cool",   "late",   "early",  "morning",
      "night",  "weekend", "monday",  "friday", "pizza",  "tea",    "cat",    "dog",    "garden", "office",
      "phone",  "laptop",  "show",    "song",   "radio",  "team",   "match",  "store",  "market", "street",
      "sister", "brother", "mom",     "dad",    "really", "maybe",  "still",  "just",   "very",   "totally",
  };
}

WorldSpec ReferenceSpec(const ReferenceOptions& o) {
  if (o.entities < 1) throw ConfigError("reference world needs at least one entity");
  if (o.last_year <= o.first_year) throw ConfigError("reference world needs at least two years");
  WorldSpec spec;
  AddDefaultText(&spec);
  spec.start = FirstDayOfYear(o.first_year);
  spec.end = LastDayOfYear(o.last_year);
  spec.background_rate = o.background_rate;
  spec.sibling_cues = o.sibling_cues;
  spec.seed = o.seed;

  Rng rng(DeriveSeed(o.seed, "reference"));
  std::set<std::string> used;
  for (const auto& w : spec.vocabulary) used.insert(w);
  const int death_years = o.last_year - o.first_year;
  for (int i = 0; i < o.entities; ++i) {
    EntitySpec e;
    // Consecutive entities share a type and differ in death year, so every
    // type appears in every death year.
    e.type = kReferenceTypes[(i / death_years) % std::size(kReferenceTypes)];
    do {
      e.name = MakeName(e.type, rng);
    } while (!used.insert(text::FoldCase(e.name)).second);
    const int year = o.first_year + 1 + i % death_years;
    e.death = Day::FromYmd(year, 2, 1) + static_cast<std::int32_t>(rng.Below(242));
    e.birth = spec.start - static_cast<std::int32_t>(30 + rng.Below(365));
    e.base_rate = o.base_rate;
    e.burst_multiplier = o.burst_multiplier;
    e.cue_probability = o.cue_probability;
    e.kb_lag_days = o.kb_lag_days;
    if (o.emergence) e.emergence.push_back(*e.death + static_cast<std::int32_t>(40 + rng.Below(41)));
    spec.entities.push_back(std::move(e));
  }
  spec.Validate();
  return spec;
}

nlohmann::ordered_json ToJson(const WorldSpec& spec) {
  nlohmann::ordered_json j;
  j["start"] = spec.start.ToString();
  j["end"] = spec.end.ToString();
  j["seed"] = spec.seed;
  j["background_rate"] = spec.background_rate;
  j["burst_radius"] = spec.burst_radius;
  j["emergence_multiplier"] = spec.emergence_multiplier;
  j["retweet_probability"] = spec.retweet_probability;
  j["max_filler"] = spec.max_filler;
  j["sibling_cues"] = spec.sibling_cues;
  auto entities = nlohmann::ordered_json::array();
  for (const auto& e : spec.entities) {
    nlohmann::ordered_json je;
    je["name"] = e.name;
    je["aliases"] = e.aliases;
    je["type"] = std::string(CoarseTypeName(e.type));
    je["birth"] = e.birth.ToString();
    if (e.death) je["death"] = e.death->ToString();
    je["base_rate"] = e.base_rate;
    je["burst_multiplier"] = e.burst_multiplier;
    je["cue_probability"] = e.cue_probability;
    je["kb_lag_days"] = e.kb_lag_days;
    auto em = nlohmann::ordered_json::array();
    for (Day d : e.emergence) em.push_back(d.ToString());
    je["emergence"] = em;
    entities.push_back(je);
  }
  j["entities"] = entities;
  nlohmann::ordered_json cues;
  for (const auto& [type, list] : spec.cue_templates) cues[std::string(CoarseTypeName(type))] = list;
  j["cue_templates"] = cues;
  j["mention_templates"] = spec.mention_templates;
  j["background_templates"] = spec.background_templates;
  j["vocabulary"] = spec.vocabulary;
  return j;
}

nlohmann::ordered_json ToJson(const ReferenceOptions& o) {
  return {{"entities", o.entities},
          {"first_year", o.first_year},
          {"last_year", o.last_year},
          {"base_rate", o.base_rate},
          {"burst_multiplier", o.burst_multiplier},
          {"cue_probability", o.cue_probability},
          {"kb_lag_days", o.kb_lag_days},
          {"emergence", o.emergence},
          {"sibling_cues", o.sibling_cues},
          {"background_rate", o.background_rate},
          {"seed", o.seed}};
}

WorldSpec WorldSpecFromJson(const nlohmann::json& j) {
  try {
    WorldSpec spec;
    spec.start = ParseDayOrThrow(j, "start");
    spec.end = ParseDayOrThrow(j, "end");
    spec.seed = j.value("seed", spec.seed);
    spec.background_rate = j.value("background_rate", spec.background_rate);
    spec.burst_radius = j.value("burst_radius", spec.burst_radius);
    spec.emergence_multiplier = j.value("emergence_multiplier", spec.emergence_multiplier);
    spec.retweet_probability = j.value("retweet_probability", spec.retweet_probability);
    spec.max_filler = j.value("max_filler", spec.max_filler);
    spec.sibling_cues = j.value("sibling_cues", spec.sibling_cues);
    for (const auto& je : j.at("entities")) {
      EntitySpec e;
      e.name = je.at("name").get<std::string>();
      e.aliases = je.value("aliases", std::vector<std::string>{});
      e.type = ParseTypeOrThrow(je.at("type").get<std::string>());
      e.birth = ParseDayOrThrow(je, "birth");
      if (je.contains("death")) e.death = ParseDayOrThrow(je, "death");
      e.base_rate = je.value("base_rate", e.base_rate);
      e.burst_multiplier = je.value("burst_multiplier", e.burst_multiplier);
      e.cue_probability = je.value("cue_probability", e.cue_probability);
      e.kb_lag_days = je.value("kb_lag_days", e.kb_lag_days);
      for (const auto& d : je.value("emergence", std::vector<std::string>{})) {
        auto day = Day::Parse(d);
        if (!day) throw ConfigError("bad emergence date " + d);
        e.emergence.push_back(*day);
      }
      spec.entities.push_back(std::move(e));
    }
    WorldSpec defaults;
    AddDefaultText(&defaults);
    if (j.contains("cue_templates")) {
      for (const auto& [type, list] : j.at("cue_templates").items()) {
        spec.cue_templates[ParseTypeOrThrow(type)] = list.get<std::vector<std::string>>();
      }
    } else {
      spec.cue_templates = defaults.cue_templates;
    }
    spec.mention_templates = j.value("mention_templates", defaults.mention_templates);
    spec.background_templates = j.value("background_templates", defaults.background_templates);
    spec.vocabulary = j.value("vocabulary", defaults.vocabulary);
    spec.Validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("world spec: ") + e.what());
  }
}

ReferenceOptions ReferenceOptionsFromJson(const nlohmann::json& j) {
  try {
    ReferenceOptions o;
    o.entities = j.value("entities", o.entities);
    o.first_year = j.value("first_year", o.first_year);
    o.last_year = j.value("last_year", o.last_year);
    o.base_rate = j.value("base_rate", o.base_rate);
    o.burst_multiplier = j.value("burst_multiplier", o.burst_multiplier);
    o.cue_probability = j.value("cue_probability", o.cue_probability);
    o.kb_lag_days = j.value("kb_lag_days", o.kb_lag_days);
    o.emergence = j.value("emergence", o.emergence);
    o.sibling_cues = j.value("sibling_cues", o.sibling_cues);
    o.background_rate = j.value("background_rate", o.background_rate);
    o.seed = j.value("seed", o.seed);
    return o;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("reference options: ") + e.what());
  }
}

const EntityTruth* GoldWorld::Find(const std::string& name) const {
  for (const auto& e : entities) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

const GoldPost* GoldWorld::FindPost(const std::string& id) const {
  auto it = post_index_.find(id);
  return it == post_index_.end() ? nullptr : &posts[it->second];
}

std::vector<corpus::Post> GoldWorld::Posts() const {
  std::vector<corpus::Post> out;
  out.reserve(posts.size());
  for (const auto& p : posts) out.push_back(p.post);
  return out;
}

GoldWorld Generate(const WorldSpec& spec) {
  spec.Validate();
  struct Draft {
    std::int64_t ts;
    std::size_t stream;
    std::size_t seq;
    GoldPost post;
  };
  std::vector<Draft> drafts;
  auto emit = [&](std::size_t stream, Rng& rng, Day day, Built built, std::string entity, TagSequence tags,
                  bool cue, bool sibling) {
    Draft d;
    d.ts = static_cast<std::int64_t>(day.serial()) * 86400 + static_cast<std::int64_t>(rng.Below(86400));
    d.stream = stream;
    d.seq = drafts.size();
    d.post.post.timestamp = d.ts;
    d.post.post.text = std::move(built.text);
    d.post.post.tokens = std::move(built.tokens);
    d.post.post.is_retweet = rng.Bernoulli(spec.retweet_probability);
    d.post.tags = tags.empty() ? TagSequence(d.post.post.tokens.size(), Tag::Outside()) : std::move(tags);
    d.post.entity = std::move(entity);
    d.post.cue = cue;
    d.post.sibling = sibling;
    drafts.push_back(std::move(d));
  };

  GoldWorld world;
  {
    Rng rng(DeriveSeed(spec.seed, "background"));
    for (Day day = spec.start; day <= spec.end; day = day + 1) {
      const auto n = spec.background_rate > 0 ? rng.Poisson(spec.background_rate) : 0;
      for (std::uint32_t i = 0; i < n; ++i) {
        const auto& tmpl = spec.background_templates[rng.Below(spec.background_templates.size())];
        emit(0, rng, day, Fill(tmpl, "", spec, rng), "", {}, false, false);
      }
    }
  }

  for (std::size_t ei = 0; ei < spec.entities.size(); ++ei) {
    const auto& e = spec.entities[ei];
    EntityTruth truth;
    truth.name = e.name;
    truth.aliases.push_back(e.name);
    for (const auto& a : e.aliases) {
      if (std::find(truth.aliases.begin(), truth.aliases.end(), a) == truth.aliases.end()) truth.aliases.push_back(a);
    }
    truth.type = e.type;
    truth.birth = e.birth;
    truth.death = e.death;
    truth.emergence = e.emergence;
    if (e.death) {
      truth.burst = DayRange{*e.death - spec.burst_radius, *e.death + spec.burst_radius};
      truth.kb_update = *e.death + e.kb_lag_days;
    }

    Rng rng(DeriveSeed(spec.seed, "entity:" + e.name));
    const auto& cues = e.death ? spec.cue_templates.at(e.type) : std::vector<std::string>{};
    for (Day day = std::max(spec.start, e.birth); day <= spec.end; day = day + 1) {
      const bool in_burst = truth.InBurst(day);
      const bool in_emergence = std::any_of(e.emergence.begin(), e.emergence.end(), [&](Day c) {
        return std::abs(day - c) <= spec.burst_radius;
      });
      double rate = e.base_rate;
      if (in_burst) {
        rate *= e.burst_multiplier;
      } else if (in_emergence) {
        rate *= spec.emergence_multiplier;
      }
      const auto n = rng.Poisson(rate);
      for (std::uint32_t i = 0; i < n; ++i) {
        const bool cue = in_burst && rng.Bernoulli(e.cue_probability);
        if (cue && !spec.sibling_cues) {
          Built b = Fill(cues[rng.Below(cues.size())], e.name, spec, rng);
          auto tags = SpanTags(b.tokens.size(), b.span_start, b.span_end, e.type);
          emit(ei + 1, rng, day, std::move(b), e.name, std::move(tags), true, false);
          ++truth.cue_posts;
          continue;
        }
        const auto& tmpl = spec.mention_templates[rng.Below(spec.mention_templates.size())];
        Built b = Fill(tmpl, e.name, spec, rng);
        TagSequence tags;
        if (in_burst && spec.sibling_cues) tags = SpanTags(b.tokens.size(), b.span_start, b.span_end, e.type);
        emit(ei + 1, rng, day, std::move(b), e.name, std::move(tags), false, false);
        if (cue) {
          Built s = Fill(cues[rng.Below(cues.size())], e.name + "'s", spec, rng);
          auto stags = SpanTags(s.tokens.size(), s.span_start, s.span_end, e.type);
          emit(ei + 1, rng, day, std::move(s), e.name, std::move(stags), true, true);
          ++truth.cue_posts;
        }
      }
    }
    world.entities.push_back(std::move(truth));
  }

  std::sort(drafts.begin(), drafts.end(), [](const Draft& a, const Draft& b) {
    return std::tie(a.ts, a.stream, a.seq) < std::tie(b.ts, b.stream, b.seq);
  });
  world.posts.reserve(drafts.size());
  char id[32];
  for (std::size_t i = 0; i < drafts.size(); ++i) {
    std::snprintf(id, sizeof id, "p%07zu", i + 1);
    drafts[i].post.post.id = id;
    world.post_index_[id] = i;
    world.posts.push_back(std::move(drafts[i].post));
  }
  return world;
}

std::vector<supervision::LabeledSentence> GoldSentences(const GoldWorld& world) {
  std::vector<supervision::LabeledSentence> out;
  out.reserve(world.posts.size());
  for (const auto& p : world.posts) {
    supervision::LabeledSentence s;
    s.post_id = p.post.id;
    s.tokens = p.post.tokens;
    s.tags = p.tags;
    s.date = p.post.day();
    s.entity_id = p.entity.empty() ? "-" : p.entity;
    s.polarity = HasSpan(p.tags) ? supervision::Polarity::kPositive : supervision::Polarity::kNegative;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<kb::EntityRecord> KbEntities(const GoldWorld& world) {
  std::vector<kb::EntityRecord> out;
  for (const auto& e : world.entities) {
    if (!e.death) continue;
    kb::EntityRecord r;
    r.canonical_name = e.name;
    r.aliases = e.aliases;
    r.disappearance_year = e.death->year();
    r.categories = {CategoryFor(e.type, r.disappearance_year)};
    r.coarse_type = e.type;
    out.push_back(std::move(r));
  }
  return out;
}

std::map<std::string, Day> UpdateDates(const GoldWorld& world) {
  std::map<std::string, Day> out;
  for (const auto& e : world.entities) {
    if (e.kb_update) out[e.name] = *e.kb_update;
  }
  return out;
}

void WriteWorld(const GoldWorld& world, const std::string& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream out(dir + "/" + name, std::ios::binary);
    if (!out) throw IoError("cannot write " + dir + "/" + name);
    return out;
  };
  {
    auto out = open("posts.jsonl");
    for (const auto& p : world.posts) out << corpus::FormatPostRecord(p.post) << '\n';
    if (!out) throw IoError("write failed for posts.jsonl");
  }
  supervision::WriteConllFile(dir + "/gold.conll", GoldSentences(world));
  {
    auto out = open("entities.tsv");
    kb::WriteEntityList(out, KbEntities(world));
  }
  {
    auto out = open("update_dates.tsv");
    evaluation::WriteUpdateDates(out, UpdateDates(world));
  }
}

OracleReport ScoreAgainstGold(const GoldWorld& world, const Artifacts& artifacts) {
  OracleReport r;
  std::map<std::string, std::set<Day>> positive_days;
  for (const auto& s : artifacts.supervision) {
    if (!world.Find(s.entity_id)) throw ArgumentError("entity id mismatch: " + s.entity_id);
    const GoldPost* p = world.FindPost(s.post_id);
    if (!p) throw ArgumentError("unknown post id " + s.post_id);
    if (s.polarity != supervision::Polarity::kPositive) continue;
    ++r.positives;
    if (p->entity == s.entity_id && HasSpan(p->tags)) ++r.true_positives;
    positive_days[s.entity_id].insert(s.date);
  }
  if (r.positives) r.ds_precision = static_cast<double>(r.true_positives) / r.positives;
  for (const auto& [name, days] : positive_days) {
    const EntityTruth* e = world.Find(name);
    ++r.positive_entities;
    if (std::all_of(days.begin(), days.end(), [&](Day d) { return e->InBurst(d); })) ++r.window_hits;
  }
  if (r.positive_entities) r.window_accuracy = static_cast<double>(r.window_hits) / r.positive_entities;

  if (!artifacts.predictions.empty()) {
    std::vector<TagSequence> gold, pred;
    for (const auto& s : artifacts.predictions) {
      const GoldPost* p = world.FindPost(s.post_id);
      if (!p) throw ArgumentError("unknown post id " + s.post_id);
      if (p->tags.size() != s.tags.size()) throw ArgumentError("token count differs for post " + s.post_id);
      gold.push_back(p->tags);
      pred.push_back(s.tags);
    }
    r.prediction_score = evaluation::ConllScore(gold, pred);
  }

  std::map<std::string, std::string> alias_owner;  // folded alias -> entity
  for (const auto& e : world.entities) {
    for (const auto& a : e.aliases) alias_owner.emplace(text::FoldCase(text::NormalizeSpace(a)), e.name);
  }
  std::map<std::string, Day> first;
  for (const auto& d : artifacts.detections) {
    auto it = alias_owner.find(text::FoldCase(text::NormalizeSpace(d.surface)));
    if (it == alias_owner.end()) continue;
    auto [slot, inserted] = first.emplace(it->second, d.date);
    if (!inserted && d.date < slot->second) slot->second = d.date;
  }
  std::vector<int> kb_leads, death_leads;
  for (const auto& e : world.entities) {
    if (e.cue_posts == 0) continue;
    ++r.cue_entities;
    auto it = first.find(e.name);
    if (it == first.end()) continue;
    ++r.detected_entities;
    if (e.kb_update) kb_leads.push_back(*e.kb_update - it->second);
    if (e.death) death_leads.push_back(*e.death - it->second);
  }
  r.lead_vs_kb = evaluation::AggregateLeads(kb_leads);
  r.lead_vs_death = evaluation::AggregateLeads(death_leads);
  return r;
}

}  // namespace fader::synth
