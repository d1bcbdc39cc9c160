#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "fader/error.h"
#include "fader/evaluation.h"
#include "fader/rng.h"

using namespace fader;
using namespace fader::evaluation;

namespace {

Tag T(Tag::Prefix p, CoarseType t = CoarseType::kPerson) { return Tag::Make(p, t); }
const Tag O = Tag::Outside();

// Random tag sequence, deliberately allowed to be ill-formed.
TagSequence RandomTags(Rng& rng, std::size_t n) {
  const CoarseType types[] = {CoarseType::kPerson, CoarseType::kGroup, CoarseType::kEvent};
  TagSequence tags;
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.Below(2) == 0) {
      tags.push_back(O);
    } else {
      tags.push_back(Tag::Make(static_cast<Tag::Prefix>(1 + rng.Below(4)), types[rng.Below(3)]));
    }
  }
  return tags;
}

// Quadratic oracle: enumerate every (start, end) pair and test the span
// definition directly on the tags.
std::vector<Span> BruteSpans(const TagSequence& tags) {
  std::vector<Span> out;
  for (std::size_t s = 0; s < tags.size(); ++s) {
    for (std::size_t e = s + 1; e <= tags.size(); ++e) {
      const auto type = tags[s].type;
      bool ok;
      if (e == s + 1) {
        ok = tags[s].prefix == Tag::Prefix::kU;
      } else {
        ok = tags[s].prefix == Tag::Prefix::kB && tags[e - 1].prefix == Tag::Prefix::kL &&
             tags[e - 1].type == type;
        for (std::size_t k = s + 1; ok && k + 1 < e; ++k) {
          ok = tags[k].prefix == Tag::Prefix::kI && tags[k].type == type;
        }
      }
      if (ok) out.push_back({s, e, type});
    }
  }
  return out;
}

}  // namespace

TEST_CASE("scorer examples") {
  auto one = ConllScore(std::vector<TagSequence>{{T(Tag::Prefix::kU), O}},
                        std::vector<TagSequence>{{T(Tag::Prefix::kU), O}});
  CHECK(one.micro.f1 == 1.0);
  auto shifted = ConllScore(std::vector<TagSequence>{{T(Tag::Prefix::kU), O}},
                            std::vector<TagSequence>{{O, T(Tag::Prefix::kU)}});
  CHECK(shifted.micro.precision == 0.0);
  CHECK(shifted.micro.recall == 0.0);
  CHECK(shifted.micro.f1 == 0.0);
  auto half = ConllScore(std::vector<TagSequence>{{T(Tag::Prefix::kU), O, T(Tag::Prefix::kU)}},
                         std::vector<TagSequence>{{T(Tag::Prefix::kU), T(Tag::Prefix::kU), O}});
  CHECK(half.micro.tp == 1);
  CHECK(half.micro.fp == 1);
  CHECK(half.micro.fn == 1);
  CHECK(half.micro.f1 == doctest::Approx(0.5));
  CHECK_THROWS_AS(ConllScore(std::vector<TagSequence>{{O}}, std::vector<TagSequence>{{O, O}}), ArgumentError);
  CHECK_THROWS_AS(ConllScore(std::vector<TagSequence>{{O}}, std::vector<TagSequence>{}), ArgumentError);
}

TEST_CASE("scorer matches a quadratic brute-force matcher") {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<TagSequence> gold, pred;
    for (std::size_t s = 0, n = 1 + rng.Below(4); s < n; ++s) {
      const std::size_t len = rng.Below(8);
      gold.push_back(RandomTags(rng, len));
      pred.push_back(RandomTags(rng, len));
    }
    std::size_t tp = 0, npred = 0, ngold = 0;
    std::map<CoarseType, std::array<std::size_t, 3>> per;
    for (std::size_t s = 0; s < gold.size(); ++s) {
      auto g = BruteSpans(gold[s]);
      auto p = BruteSpans(pred[s]);
      ngold += g.size();
      npred += p.size();
      for (const auto& x : p) {
        bool hit = false;
        for (const auto& y : g) hit = hit || (x.start == y.start && x.end == y.end && x.type == y.type);
        tp += hit;
        per[x.type][hit ? 0 : 1]++;
      }
      for (const auto& y : g) {
        bool hit = false;
        for (const auto& x : p) hit = hit || (x.start == y.start && x.end == y.end && x.type == y.type);
        if (!hit) per[y.type][2]++;
      }
    }
    auto report = ConllScore(gold, pred);
    REQUIRE(report.micro.tp == tp);
    REQUIRE(report.micro.fp == npred - tp);
    REQUIRE(report.micro.fn == ngold - tp);
    REQUIRE(report.micro == Prf::FromCounts(tp, npred - tp, ngold - tp));
    REQUIRE(report.per_type.size() == per.size());
    for (const auto& [type, c] : per) {
      REQUIRE(report.per_type.at(type) == Prf::FromCounts(c[0], c[1], c[2]));
    }

    // Sentence order does not matter.
    std::vector<std::size_t> order(gold.size());
    std::iota(order.begin(), order.end(), 0);
    rng.Shuffle(order);
    std::vector<TagSequence> g2, p2;
    for (auto i : order) {
      g2.push_back(gold[i]);
      p2.push_back(pred[i]);
    }
    REQUIRE(ConllScore(g2, p2) == report);
  }
}

TEST_CASE("lead days and aggregation") {
  DetectionEvent e{"X", Day::FromYmd(2019, 3, 1), Day::FromYmd(2019, 4, 15)};
  CHECK(LeadDays(e) == 45);
  std::swap(e.first_detection, e.kb_update);
  CHECK(LeadDays(e) == -45);
  auto stats = AggregateLeads({10, 20, -3});
  REQUIRE(stats);
  CHECK(stats->mean == doctest::Approx(9.0));
  CHECK(stats->median == 10.0);
  CHECK(AggregateLeads({1, 2, 3, 10})->median == 2.5);
  CHECK_FALSE(AggregateLeads({}));
}

TEST_CASE("relative recall groups by KB type") {
  auto rec = [](std::string name, CoarseType type, std::vector<std::string> aliases = {}) {
    kb::EntityRecord r;
    r.canonical_name = name;
    r.aliases = {name};
    for (auto& a : aliases) r.aliases.push_back(a);
    r.disappearance_year = 2019;
    r.coarse_type = type;
    return r;
  };
  std::vector<kb::EntityRecord> targets = {
      rec("Vine", CoarseType::kServiceProduct), rec("Pristin", CoarseType::kGroup),
      rec("Dave Laing", CoarseType::kPerson), rec("Red Bull Air Race", CoarseType::kEvent, {"Air Race"})};
  auto det = [](std::string surface, CoarseType type, Day day) {
    DetectedSpan d;
    d.surface = surface;
    d.type = type;
    d.date = day;
    return d;
  };
  const Day d1 = Day::FromYmd(2019, 3, 1);
  std::vector<DetectedSpan> detections = {
      det("vine", CoarseType::kPerson, d1 + 5), det("Vine", CoarseType::kServiceProduct, d1),
      det("Pristin", CoarseType::kGroup, d1 + 10), det("air race", CoarseType::kEvent, d1 + 1),
      det("Dave Laing", CoarseType::kPerson, Day::FromYmd(2018, 5, 1))};
  std::map<std::string, Day> updates = {{"Vine", d1 + 30}, {"Pristin", d1 + 10}};
  auto result = RelativeRecall(detections, targets, updates, 2019);
  CHECK(result.found == std::vector<std::string>{"Vine", "Pristin", "Red Bull Air Race"});
  const auto& total = result.report.rows[result.report.rows.size() - 2];
  CHECK(total.label == "TOTAL");
  CHECK(total.targets == 4);
  CHECK(total.found == 3);
  CHECK(total.ratio == 0.75);
  REQUIRE(total.lead);
  CHECK(total.lead->mean == 15.0);
  const auto& without = result.report.rows.back();
  CHECK(without.targets == 3);
  CHECK(without.ratio == 1.0);

  RecallOptions strict;
  strict.match_type = true;
  detections[1].type = CoarseType::kGroup;
  auto typed = RelativeRecall(detections, targets, updates, 2019, strict);
  CHECK(typed.found == std::vector<std::string>{"Pristin", "Red Bull Air Race"});

  // Adding detections never lowers any ratio.
  Rng rng(4);
  std::vector<DetectedSpan> grow;
  auto before = RelativeRecall(grow, targets, updates, 2019);
  const std::vector<std::string> surfaces = {"Vine", "Pristin", "dave laing", "Air Race", "Nope"};
  for (int i = 0; i < 40; ++i) {
    grow.push_back(det(surfaces[rng.Below(surfaces.size())], CoarseType::kGroup, d1 + rng.Below(300)));
    auto after = RelativeRecall(grow, targets, updates, 2019);
    for (std::size_t r = 0; r < after.report.rows.size(); ++r) {
      CHECK(after.report.rows[r].ratio >= before.report.rows[r].ratio);
    }
    before = after;
  }
}

TEST_CASE("fleiss kappa") {
  CHECK(std::abs(FleissKappa({{3, 0}, {0, 3}, {2, 1}, {1, 2}}, 3) - 1.0 / 3.0) < 1e-9);
  CHECK(FleissKappa({{3, 0}, {0, 3}}, 3) == 1.0);
  CHECK(FleissKappa({{4, 0}, {4, 0}}, 4) == 1.0);
  CHECK_THROWS_AS(FleissKappa({{3, 0}, {1, 1}}, 3), ArgumentError);
  CHECK_THROWS_AS(FleissKappa({{1, 0}}, 1), ArgumentError);

  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const int raters = 2 + static_cast<int>(rng.Below(5));
    const std::size_t k = 2 + rng.Below(3);
    std::vector<std::vector<int>> m;
    for (std::size_t i = 0, n = 2 + rng.Below(8); i < n; ++i) {
      std::vector<int> row(k, 0);
      for (int r = 0; r < raters; ++r) ++row[rng.Below(k)];
      m.push_back(row);
    }
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    rng.Shuffle(perm);
    auto permuted = m;
    for (std::size_t i = 0; i < m.size(); ++i) {
      for (std::size_t j = 0; j < k; ++j) permuted[i][perm[j]] = m[i][j];
    }
    CHECK(FleissKappa(permuted, raters) == doctest::Approx(FleissKappa(m, raters)).epsilon(1e-12));
  }
}

TEST_CASE("report rendering round trips") {
  EvalReport eval = ConllScore(
      std::vector<TagSequence>{{T(Tag::Prefix::kU), O, T(Tag::Prefix::kU, CoarseType::kGroup)}},
      std::vector<TagSequence>{{T(Tag::Prefix::kU), T(Tag::Prefix::kU), O}});
  CHECK(EvalReportFromJson(RenderReport(eval, ReportFormat::kJson)) == eval);
  const auto text = RenderReport(eval, ReportFormat::kText);
  CHECK(text.rfind("type", 0) == 0);
  CHECK(text.find("MICRO") != std::string::npos);

  ImmediacyReport imm;
  imm.rows.push_back({"GROUP", 3, 2, 2.0 / 3.0, LeadStats{12.5, 12.5}});
  imm.rows.push_back({"TOTAL", 3, 2, 2.0 / 3.0, LeadStats{1.0 / 3.0, -2}});
  imm.rows.push_back({"TOTAL-without-PERSON", 0, 0, 0.0, std::nullopt});
  CHECK(ImmediacyReportFromJson(RenderReport(imm, ReportFormat::kJson)) == imm);
  auto tsv = ImmediacyReportFromTsv(RenderReport(imm, ReportFormat::kTsv));
  REQUIRE(tsv.rows.size() == 3);
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(tsv.rows[r].label == imm.rows[r].label);
    CHECK(tsv.rows[r].found == imm.rows[r].found);
    CHECK(tsv.rows[r].ratio == doctest::Approx(imm.rows[r].ratio).epsilon(1e-6));
    CHECK(tsv.rows[r].lead.has_value() == imm.rows[r].lead.has_value());
  }
  CHECK(tsv.rows[1].lead->mean == doctest::Approx(1.0 / 3.0).epsilon(1e-6));

  const auto table = RenderReport(imm, ReportFormat::kText);
  std::istringstream lines(table);
  std::string header;
  std::getline(lines, header);
  CHECK(header.find("#entities") < header.find("#found(%)"));
  CHECK(header.find("#found(%)") < header.find("mean lead"));
  CHECK(table.find("2 (66.67%)") != std::string::npos);
}
