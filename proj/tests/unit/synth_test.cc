#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "fader/corpus.h"
#include "fader/error.h"
#include "fader/supervision.h"
#include "fader/synth.h"
#include "fader/text.h"

using namespace fader;
using namespace fader::synth;

namespace {

WorldSpec SingleEntity(std::uint64_t seed, double base, double multiplier, double cue_p) {
  WorldSpec spec;
  AddDefaultText(&spec);
  spec.start = Day::FromYmd(2018, 1, 1);
  spec.end = Day::FromYmd(2019, 12, 31);
  spec.background_rate = 1.0;
  spec.seed = seed;
  EntitySpec e;
  e.name = "Zorvik";
  e.type = CoarseType::kServiceProduct;
  e.birth = Day::FromYmd(2017, 6, 1);
  e.death = Day::FromYmd(2019, 5, 10);
  e.base_rate = base;
  e.burst_multiplier = multiplier;
  e.cue_probability = cue_p;
  spec.entities.push_back(e);
  return spec;
}

ReferenceOptions Small(std::uint64_t seed) {
  ReferenceOptions o;
  o.entities = 8;
  o.background_rate = 1.0;
  o.seed = seed;
  return o;
}

std::string PostsJsonl(const GoldWorld& w) {
  std::ostringstream out;
  for (const auto& p : w.posts) out << corpus::FormatPostRecord(p.post) << '\n';
  return out.str();
}

bool ContainsCuePhrase(const std::string& post_text, const std::string& name, const WorldSpec& spec,
                       CoarseType type) {
  const std::string folded = text::FoldCase(post_text);
  for (const auto& t : spec.cue_templates.at(type)) {
    std::string filled = t;
    filled.replace(filled.find("{e}"), 3, name);
    if (folded.find(text::FoldCase(filled)) != std::string::npos) return true;
  }
  return false;
}

supervision::SupervisionConfig SplitYears() {
  supervision::SupervisionConfig cfg;
  cfg.train_first_year = 2018;
  cfg.train_last_year = 2018;
  cfg.test_year = 2019;
  return cfg;
}

}  // namespace

TEST_CASE("spec validation lists every violation") {
  WorldSpec spec = SingleEntity(1, 1.0, 10.0, 1.5);
  spec.entities[0].base_rate = 0.0;
  spec.entities[0].birth = *spec.entities[0].death + 1;
  try {
    spec.Validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("base_rate") != std::string::npos);
    CHECK(msg.find("birth must precede death") != std::string::npos);
    CHECK(msg.find("cue_probability") != std::string::npos);
  }
  CHECK_NOTHROW(SingleEntity(1, 1.0, 10.0, 1.0).Validate());
  ReferenceOptions bad;
  bad.last_year = bad.first_year;
  CHECK_THROWS_AS(ReferenceSpec(bad), ConfigError);
}

TEST_CASE("full cue probability puts a cue in every burst post") {
  const auto spec = ReferenceSpec(Small(3));
  const auto world = Generate(spec);
  std::size_t burst_posts = 0;
  for (const auto& p : world.posts) {
    if (p.entity.empty()) continue;
    const auto* e = world.Find(p.entity);
    REQUIRE(e != nullptr);
    if (p.cue) REQUIRE(e->InBurst(p.post.day()));
    if (!e->InBurst(p.post.day())) {
      REQUIRE_FALSE(p.cue);
      REQUIRE(std::all_of(p.tags.begin(), p.tags.end(), [](const Tag& t) { return t.IsOutside(); }));
      continue;
    }
    ++burst_posts;
    REQUIRE(p.cue);
    REQUIRE(ContainsCuePhrase(p.post.text, e->name, spec, e->type));
  }
  CHECK(burst_posts > 100);
}

TEST_CASE("generation is deterministic per seed") {
  const auto a = PostsJsonl(Generate(ReferenceSpec(Small(5))));
  CHECK(a == PostsJsonl(Generate(ReferenceSpec(Small(5)))));
  CHECK(a != PostsJsonl(Generate(ReferenceSpec(Small(6)))));
}

TEST_CASE("generated corpora ingest cleanly and gold tags round trip") {
  const auto world = Generate(ReferenceSpec(Small(7)));
  std::istringstream in(PostsJsonl(world));
  auto ingest = corpus::IngestPosts(in, {});
  CHECK(ingest.report.malformed == 0);
  CHECK(ingest.report.duplicates == 0);
  CHECK(ingest.report.accepted == world.posts.size());
  for (std::size_t i = 0; i < world.posts.size(); ++i) {
    REQUIRE(ingest.index.posts()[i].tokens == world.posts[i].post.tokens);
  }

  const auto gold = GoldSentences(world);
  for (const auto& s : gold) REQUIRE_FALSE(FirstBilouViolation(s.tags).has_value());
  std::stringstream buf;
  supervision::WriteConll(buf, gold);
  const auto back = supervision::ReadConll(buf, "gold");
  REQUIRE(back.size() == gold.size());
  for (std::size_t i = 0; i < gold.size(); ++i) {
    REQUIRE(back[i].tokens == gold[i].tokens);
    REQUIRE(back[i].tags == gold[i].tags);
    REQUIRE(back[i].entity_id == gold[i].entity_id);
    REQUIRE(back[i].post_id == gold[i].post_id);
  }
}

TEST_CASE("world files are consumable by the KB and evaluation readers") {
  const auto world = Generate(ReferenceSpec(Small(9)));
  const auto dir = std::filesystem::temp_directory_path() / "fader_synth_test";
  std::filesystem::remove_all(dir);
  WriteWorld(world, dir.string());
  auto kb = kb::LoadEntityList((dir / "entities.tsv").string(), kb::TypeMapping::Default());
  CHECK(kb.warnings.empty());
  REQUIRE(kb.records.size() == 8);
  for (const auto& r : kb.records) {
    const auto* e = world.Find(r.canonical_name);
    REQUIRE(e != nullptr);
    CHECK(r.coarse_type == e->type);
    CHECK(r.disappearance_year == e->death->year());
  }
  auto updates = evaluation::LoadUpdateDates((dir / "update_dates.tsv").string());
  CHECK(updates == UpdateDates(world));
  CHECK(supervision::ReadConllFile((dir / "gold.conll").string()).size() == world.posts.size());
  std::filesystem::remove_all(dir);
}

TEST_CASE("burst day is the peak day in nearly every world") {
  int hits = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto world = Generate(SingleEntity(seed, 1.0, 20.0, 1.0));
    const auto index = corpus::CorpusIndex::Build(world.Posts(), {});
    const auto series = index.Counts({"zorvik"}, DayRange::All());
    const auto peak = corpus::PeakDay(series, 2019);
    REQUIRE(peak.has_value());
    hits += world.entities[0].InBurst(*peak);
  }
  CHECK(hits >= 99);
}

TEST_CASE("supervision precision on generated worlds") {
  const auto world = Generate(ReferenceSpec(Small(11)));
  const auto index = corpus::CorpusIndex::Build(world.Posts(), {});
  const auto tds = supervision::RunTds(KbEntities(world), index, SplitYears());
  Artifacts a;
  a.supervision = tds.sentences;
  const auto r = ScoreAgainstGold(world, a);
  REQUIRE(r.ds_precision.has_value());
  CHECK(*r.ds_precision == 1.0);
  CHECK(r.window_accuracy == 1.0);
  CHECK(r.positive_entities == 8);

  a.supervision[0].entity_id = "Nobody";
  CHECK_THROWS_AS(ScoreAgainstGold(world, a), ArgumentError);
}

TEST_CASE("lower cue probability lowers label precision") {
  const double probs[] = {1.0, 0.7, 0.5, 0.3};
  std::vector<double> mean;
  for (double p : probs) {
    double sum = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      ReferenceOptions o = Small(seed);
      o.entities = 6;
      o.cue_probability = p;
      const auto world = Generate(ReferenceSpec(o));
      const auto index = corpus::CorpusIndex::Build(world.Posts(), {});
      Artifacts a;
      a.supervision = supervision::RunTds(KbEntities(world), index, SplitYears()).sentences;
      sum += *ScoreAgainstGold(world, a).ds_precision;
    }
    mean.push_back(sum / 20);
  }
  CHECK(mean[0] == 1.0);
  for (std::size_t i = 1; i < mean.size(); ++i) CHECK(mean[i] < mean[i - 1]);
}

TEST_CASE("lead days follow the first detection") {
  const auto world = Generate(SingleEntity(2, 1.0, 20.0, 1.0));
  const auto& e = world.entities[0];
  Day first_cue = e.burst->last;
  for (const auto& p : world.posts) {
    if (p.cue && p.post.day() < first_cue) first_cue = p.post.day();
  }
  evaluation::DetectedSpan d;
  d.post_id = "x";
  d.surface = "zorvik";
  d.type = CoarseType::kServiceProduct;
  d.date = first_cue;
  evaluation::DetectedSpan later = d;
  later.date = first_cue + 5;
  evaluation::DetectedSpan other = d;
  other.surface = "somebody else";
  other.date = first_cue - 50;
  Artifacts a;
  a.detections = {later, d, other};
  const auto r = ScoreAgainstGold(world, a);
  const int offset = first_cue - *e.death;
  REQUIRE(r.lead_vs_kb.has_value());
  CHECK(r.lead_vs_kb->mean == 30 - offset);
  CHECK(r.lead_vs_death->mean == -offset);
  CHECK(r.cue_entities == 1);
  CHECK(r.detected_entities == 1);
}

TEST_CASE("sibling cue worlds keep cues out of labeled posts") {
  ReferenceOptions o = Small(13);
  o.sibling_cues = true;
  const auto world = Generate(ReferenceSpec(o));
  const auto index = corpus::CorpusIndex::Build(world.Posts(), {});
  std::size_t siblings = 0;
  for (const auto& p : world.posts) {
    if (p.sibling) {
      ++siblings;
      REQUIRE(p.cue);
    } else if (!p.entity.empty()) {
      REQUIRE_FALSE(p.cue);
    }
  }
  CHECK(siblings > 50);
  const auto tds = supervision::RunTds(KbEntities(world), index, SplitYears());
  for (const auto& s : tds.sentences) REQUIRE_FALSE(world.FindPost(s.post_id)->cue);
  Artifacts a;
  a.supervision = tds.sentences;
  CHECK(ScoreAgainstGold(world, a).ds_precision == 1.0);
}

TEST_CASE("specs survive JSON") {
  const auto spec = ReferenceSpec(Small(4));
  const auto again = WorldSpecFromJson(nlohmann::json::parse(ToJson(spec).dump()));
  CHECK(ToJson(again) == ToJson(spec));
  CHECK(PostsJsonl(Generate(again)) == PostsJsonl(Generate(spec)));
  ReferenceOptions o = Small(4);
  o.emergence = true;
  const auto o2 = ReferenceOptionsFromJson(nlohmann::json::parse(ToJson(o).dump()));
  CHECK(ToJson(o2) == ToJson(o));
  CHECK_THROWS_AS(WorldSpecFromJson(nlohmann::json::parse(R"({"start":"2019-01-01"})")), ConfigError);
}
