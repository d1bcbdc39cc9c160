#include <set>
#include <sstream>

#include "doctest.h"
#include "fader/error.h"
#include "fader/rng.h"
#include "fader/supervision.h"

using namespace fader;
using namespace fader::supervision;

namespace {

corpus::Post MakePost(const std::string& id, const std::string& ts, const std::string& text,
                      bool rt = false) {
  corpus::Post p;
  p.id = id;
  p.timestamp = *ParseTimestamp(ts);
  p.text = text;
  p.tokens = corpus::Tokenize(text);
  p.is_retweet = rt;
  return p;
}

kb::EntityRecord Entity(const std::string& name, std::vector<std::string> aliases, int year,
                        CoarseType type) {
  kb::EntityRecord r;
  r.canonical_name = name;
  r.aliases = std::move(aliases);
  r.disappearance_year = year;
  r.coarse_type = type;
  return r;
}

std::string Stamp(Day d, int second) {
  return d.ToString() + "T00:00:" + (second < 10 ? "0" : "") + std::to_string(second % 60) + "Z";
}

std::vector<std::string> Tags(const TagSequence& tags) {
  std::vector<std::string> out;
  for (const auto& t : tags) out.push_back(t.ToString());
  return out;
}

}  // namespace

TEST_CASE("mention labeling prefers the longest alias") {
  const std::vector<corpus::Phrase> aliases = {{"Vine"}, {"Vine", "app"}, {"the", "Vine", "app", "store"}};
  auto tags = LabelMentions({"RIP", "vine", "app", "and", "Vine"}, aliases,
                            CoarseType::kServiceProduct, true);
  CHECK(Tags(tags) == std::vector<std::string>{"O", "B-SERVICE_PRODUCT", "L-SERVICE_PRODUCT",
                                               "O", "U-SERVICE_PRODUCT"});
  auto three = LabelMentions({"the", "Vine", "app", "store"}, aliases, CoarseType::kGroup, false);
  CHECK(Tags(three) == std::vector<std::string>{"B-GROUP", "I-GROUP", "I-GROUP", "L-GROUP"});
  auto strict = LabelMentions({"vine"}, aliases, CoarseType::kGroup, false);
  CHECK(Tags(strict) == std::vector<std::string>{"O"});
}

TEST_CASE("labeling property: valid BILOU and agreement with a brute-force matcher") {
  Rng rng(7);
  const std::vector<std::string> vocab = {"a", "b", "c", "d"};
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<corpus::Phrase> aliases;
    for (std::size_t a = 0, n = 1 + rng.Below(3); a < n; ++a) {
      corpus::Phrase p;
      for (std::size_t j = 0, len = 1 + rng.Below(3); j < len; ++j) p.push_back(vocab[rng.Below(4)]);
      aliases.push_back(p);
    }
    std::vector<std::string> tokens;
    for (std::size_t j = 0, len = rng.Below(12); j < len; ++j) tokens.push_back(vocab[rng.Below(4)]);
    auto tags = LabelMentions(tokens, aliases, CoarseType::kEvent, true);
    REQUIRE(tags.size() == tokens.size());
    CHECK_FALSE(FirstBilouViolation(tags).has_value());

    // Oracle: scan left to right, try lengths from longest down.
    std::vector<Span> expected;
    for (std::size_t i = 0; i < tokens.size();) {
      std::size_t best = 0;
      for (std::size_t len = tokens.size() - i; len >= 1 && best == 0; --len) {
        for (const auto& p : aliases) {
          if (p.size() == len &&
              std::vector<std::string>(tokens.begin() + i, tokens.begin() + i + len) == p) {
            best = len;
          }
        }
      }
      if (best) {
        expected.push_back({i, i + best, CoarseType::kEvent});
        i += best;
      } else {
        ++i;
      }
    }
    CHECK(ExtractSpans(tags) == expected);
  }
}

TEST_CASE("positive contexts come from the peak day and negatives precede the year") {
  std::vector<corpus::Post> posts;
  const Day peak = Day::FromYmd(2019, 3, 10);
  const Day other = Day::FromYmd(2019, 6, 1);
  for (int i = 0; i < 150; ++i) posts.push_back(MakePost("p" + std::to_string(i), Stamp(peak, i), "goodbye Vine forever"));
  for (int i = 0; i < 20; ++i) posts.push_back(MakePost("o" + std::to_string(i), Stamp(other, i), "Vine again"));
  for (int i = 0; i < 40; ++i) {
    posts.push_back(MakePost("n" + std::to_string(i), Stamp(Day::FromYmd(2017, 1, 1) + i, 0), "love Vine videos"));
  }
  posts.push_back(MakePost("late", Stamp(Day::FromYmd(2019, 1, 1), 0), "Vine new year"));
  auto index = corpus::CorpusIndex::Build(posts, {});
  auto vine = Entity("Vine", {"Vine"}, 2019, CoarseType::kServiceProduct);

  SupervisionConfig cfg;
  std::optional<Day> chosen;
  auto pos = CollectPositiveContexts(vine, index, cfg, &chosen);
  REQUIRE(chosen);
  CHECK(*chosen == peak);
  REQUIRE(pos.size() == 100);
  std::set<std::string> ids;
  for (const auto& s : pos) {
    CHECK(s.date == peak);
    CHECK(s.polarity == Polarity::kPositive);
    CHECK(Tags(s.tags) == std::vector<std::string>{"O", "U-SERVICE_PRODUCT", "O"});
    ids.insert(s.post_id);
  }
  CHECK(ids.size() == 100);
  CHECK(CollectPositiveContexts(vine, index, cfg) == pos);
  cfg.seed = 2;
  CHECK(CollectPositiveContexts(vine, index, cfg) != pos);
  cfg.seed = 1;

  auto neg = CollectNegativeContexts(vine, index, cfg, pos.size());
  CHECK(neg.size() == 40);
  for (const auto& s : neg) {
    CHECK(s.date < FirstDayOfYear(2019));
    CHECK(s.polarity == Polarity::kNegative);
    for (const auto& t : s.tags) CHECK(t.IsOutside());
  }
  CHECK(CollectNegativeContexts(vine, index, cfg, 5).size() == 5);

  auto absent = Entity("Absent", {"Absent"}, 2019, CoarseType::kEvent);
  auto tds = RunTds({vine, absent}, index, cfg);
  CHECK(tds.uncovered == std::vector<std::string>{"Absent"});
  CHECK(tds.sentences.size() == 140);
  CHECK(std::is_sorted(tds.sentences.begin(), tds.sentences.end(), CanonicalLess));
}

TEST_CASE("baseline uses the last busy day, retweets first") {
  std::vector<corpus::Post> posts;
  const Day busy = Day::FromYmd(2018, 5, 5);
  const Day quiet = Day::FromYmd(2018, 9, 9);
  for (int i = 0; i < 30; ++i) {
    posts.push_back(MakePost("b" + std::to_string(i), Stamp(busy, i), "RT Pristin live", i < 4));
  }
  for (int i = 0; i < 10; ++i) posts.push_back(MakePost("q" + std::to_string(i), Stamp(quiet, i), "Pristin"));
  for (int i = 0; i < 5; ++i) {
    posts.push_back(MakePost("recent" + std::to_string(i), Stamp(busy - 300, i), "Pristin teaser"));
    posts.push_back(MakePost("old" + std::to_string(i), Stamp(busy - 400, i), "Pristin debut"));
  }
  auto index = corpus::CorpusIndex::Build(posts, {});
  auto pristin = Entity("Pristin", {"Pristin"}, 2019, CoarseType::kGroup);

  auto base = CollectBaselineContexts(pristin, index, 2018, 10, 3);
  REQUIRE(base.positive_day);
  CHECK(*base.positive_day == busy);
  REQUIRE(base.positives.size() == 10);
  std::size_t retweets = 0;
  for (const auto& s : base.positives) retweets += std::stoi(s.post_id.substr(1)) < 4;
  CHECK(retweets == 4);
  REQUIRE(base.negatives.size() == 5);
  for (const auto& s : base.negatives) CHECK(s.post_id.rfind("old", 0) == 0);

  CHECK_FALSE(CollectBaselineContexts(pristin, index, 2017, 10, 3).positive_day);
}

TEST_CASE("split by year with proportional dev and post co-location") {
  std::vector<LabeledSentence> sentences;
  auto add = [&](const std::string& entity, const std::string& post, int year) {
    LabeledSentence s;
    s.entity_id = entity;
    s.post_id = post;
    s.date = Day::FromYmd(year, 1, 1);
    s.tokens = {"x"};
    s.tags = {Tag::Outside()};
    sentences.push_back(s);
  };
  for (int i = 0; i < 70; ++i) add("A", "a" + std::to_string(i), 2015);
  for (int i = 0; i < 30; ++i) add("B", "b" + std::to_string(i), 2016);
  for (int i = 0; i < 12; ++i) add("C", "c" + std::to_string(i), 2019);
  add("Z", "z", 2010);

  SupervisionConfig cfg;
  auto data = SplitDataset(sentences, cfg);
  CHECK(data.dev.size() == 10);
  CHECK(data.train.size() == 90);
  CHECK(data.test.size() == 12);
  std::size_t dev_a = 0;
  for (const auto& s : data.dev) dev_a += s.entity_id == "A";
  CHECK(dev_a == 7);
  auto again = SplitDataset(sentences, cfg);
  CHECK(again.dev == data.dev);

  // A post shared by two entities never straddles train and dev.
  std::vector<LabeledSentence> shared;
  for (int i = 0; i < 40; ++i) {
    add("D", "s" + std::to_string(i), 2017);
    add("E", "s" + std::to_string(i), 2017);
  }
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    cfg.seed = seed;
    auto split = SplitDataset(sentences, cfg);
    std::set<std::string> dev_posts, train_posts;
    for (const auto& s : split.dev) dev_posts.insert(s.post_id);
    for (const auto& s : split.train) train_posts.insert(s.post_id);
    for (const auto& p : dev_posts) CHECK(train_posts.count(p) == 0);
    CHECK(split.dev.size() + split.train.size() == 180);
  }

  cfg.test_year = 2015;
  CHECK_THROWS_AS(cfg.Validate(), ConfigError);
}

TEST_CASE("conll round trip and format errors") {
  LabeledSentence a;
  a.post_id = "42";
  a.date = Day::FromYmd(2019, 3, 10);
  a.entity_id = "Google Plus";
  a.polarity = Polarity::kPositive;
  a.tokens = {"bye", "Google", "Plus"};
  a.tags = {Tag::Outside(), Tag::Make(Tag::Prefix::kB, CoarseType::kServiceProduct),
            Tag::Make(Tag::Prefix::kL, CoarseType::kServiceProduct)};
  LabeledSentence b = a;
  b.post_id = "43";
  b.polarity = Polarity::kNegative;
  b.tags.assign(3, Tag::Outside());

  std::ostringstream out;
  WriteConll(out, {a, b});
  CHECK(out.str().rfind("# id=42 date=2019-03-10 entity=Google Plus polarity=POS\nbye\tO\n", 0) == 0);
  std::istringstream in(out.str());
  CHECK(ReadConll(in, "x") == std::vector<LabeledSentence>{a, b});

  auto error_line = [](const std::string& body) -> std::size_t {
    std::istringstream bad(body);
    try {
      ReadConll(bad, "bad.conll");
    } catch (const FormatError& e) {
      return e.line();
    }
    return 0;
  };
  const std::string header = "# id=1 date=2019-01-01 entity=E polarity=POS\n";
  CHECK(error_line(header + "a\tO\nb\tI-EVENT\n\n") == 3);
  CHECK(error_line(header + "a\tB-EVENT\n\n") == 3);
  CHECK(error_line(header + "a\tX-EVENT\n") == 2);
  CHECK(error_line(header + "a O\n") == 2);
  CHECK(error_line("# id=1 date=2019-01-01 entity=E polarity=NEG\na\tU-EVENT\n") == 2);
  CHECK(error_line("a\tO\n") == 1);
  CHECK(error_line("# id=1 date=2019-13-01 entity=E polarity=POS\n") == 1);
  CHECK_THROWS_AS(ReadConllFile("/nonexistent/file.conll"), IoError);
}
