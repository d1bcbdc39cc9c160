#include <sstream>

#include "doctest.h"
#include "fader/kb.h"

using namespace fader;
using namespace fader::kb;

namespace {

corpus::Post MakePost(const std::string& id, const std::string& ts, const std::string& text) {
  corpus::Post p;
  p.id = id;
  p.timestamp = *ParseTimestamp(ts);
  p.text = text;
  p.tokens = corpus::Tokenize(text);
  return p;
}

EntityRecord Rec(const std::string& name, int year, CoarseType type, bool ambiguous = false) {
  EntityRecord r;
  r.canonical_name = name;
  r.aliases = {name};
  r.disappearance_year = year;
  r.coarse_type = type;
  r.ambiguous = ambiguous;
  return r;
}

}  // namespace

TEST_CASE("entity rows map categories to coarse types") {
  std::istringstream in(
      "canonical_name\taliases\tdisappearance_year\tcategories\tambiguous\n"
      "Daft Punk\tDaft Punk\t2021\tMusical_groups\t0\n"
      "Dave Laing\t\t2019\tDeaths\t0\n"
      "Ceres Probe\t\t2018\tAsteroids\t0\n"
      "Bad Row\t2019\n"
      "Bad Year\t\t20x9\tDeaths\t0\n"
      "Google+\tGoogle Plus|  Google+  |Google  Plus\t2019\tInternet_properties\t1\n");
  auto result = ReadEntityList(in, TypeMapping::Default(), "list.tsv");
  REQUIRE(result.records.size() == 4);
  CHECK(result.records[0].coarse_type == CoarseType::kGroup);
  CHECK(result.records[0].aliases == std::vector<std::string>{"Daft Punk"});
  CHECK(result.records[1].coarse_type == CoarseType::kPerson);
  CHECK(result.records[1].aliases == std::vector<std::string>{"Dave Laing"});
  CHECK(result.records[2].coarse_type == CoarseType::kUnmapped);
  CHECK(result.records[3].aliases == std::vector<std::string>{"Google+", "Google Plus"});
  CHECK(result.records[3].ambiguous);
  REQUIRE(result.warnings.size() == 2);
  CHECK(result.warnings[0].find("row 5") != std::string::npos);
  CHECK(result.warnings[1].find("row 6") != std::string::npos);

  std::ostringstream out;
  WriteEntityList(out, result.records);
  std::istringstream back(out.str());
  CHECK(ReadEntityList(back, TypeMapping::Default(), "x").records == result.records);
}

TEST_CASE("category mapping is first-match over listed categories") {
  const auto mapping = TypeMapping::Default();
  CHECK(MapCategoryToType({"American_television_series"}, mapping) == CoarseType::kCreativeWork);
  CHECK(MapCategoryToType({"Restaurants"}, mapping) == CoarseType::kLocation);
  CHECK(MapCategoryToType({}, mapping) == CoarseType::kUnmapped);
  CHECK(MapCategoryToType({"Asteroids", "Airlines", "Deaths"}, mapping) == CoarseType::kGroup);

  std::istringstream file("# comment\nSports*\tEVENT\nSpo\tGROUP\n");
  auto custom = ReadTypeMapping(file, "map.tsv");
  CHECK(MapCategoryToType({"Sports_leagues"}, custom) == CoarseType::kEvent);
  CHECK(MapCategoryToType({"Spoons"}, custom) == CoarseType::kGroup);
  CHECK_FALSE(CategoryPatternMatches("Sports*x", "Sports_leagues"));
  CHECK(CategoryPatternMatches("?ports_*", "Sports_leagues"));
  std::istringstream bad("Deaths\tHUMAN\n");
  CHECK_THROWS(ReadTypeMapping(bad, "bad.tsv"));
}

TEST_CASE("filter drops ambiguous and same-year entities and caps types") {
  auto index = corpus::CorpusIndex::Build(
      {MakePost("1", "2019-02-01T00:00:00Z", "Pristin debut"),
       MakePost("2", "2017-02-01T00:00:00Z", "Vine is fun"),
       MakePost("3", "2019-02-01T00:00:00Z", "Vine shuts down")},
      {});
  std::vector<EntityRecord> records = {
      Rec("Pristin", 2019, CoarseType::kGroup),
      Rec("Vine", 2019, CoarseType::kServiceProduct),
      Rec("Go", 2019, CoarseType::kServiceProduct, true),
      Rec("Unseen", 2019, CoarseType::kEvent),
  };
  auto kept = FilterEntities(records, index, {}, 1);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].canonical_name == "Vine");
  CHECK(kept[1].canonical_name == "Unseen");

  std::vector<EntityRecord> people;
  for (int i = 0; i < 1500; ++i) {
    people.push_back(Rec("Person " + std::to_string(i), 2018, CoarseType::kPerson));
  }
  people.push_back(Rec("Lone Event", 2018, CoarseType::kEvent));
  TypeCaps caps{{CoarseType::kPerson, 1000}, {CoarseType::kCreativeWork, 1000}};
  auto a = FilterEntities(people, index, caps, 99);
  auto b = FilterEntities(people, index, caps, 99);
  CHECK(a.size() == 1001);
  CHECK(a == b);
  CHECK(FilterEntities(people, index, caps, 100) != a);
  // Idempotent, and output is a subset in input order.
  CHECK(FilterEntities(a, index, caps, 99) == a);
  std::size_t cursor = 0;
  for (const auto& rec : a) {
    while (cursor < people.size() && !(people[cursor] == rec)) ++cursor;
    REQUIRE(cursor < people.size());
  }
}
