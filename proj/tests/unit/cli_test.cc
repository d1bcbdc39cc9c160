#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "fader/error.h"
#include "fader/hash.h"
#include "fader/pipeline.h"

using namespace fader;
using namespace fader::pipeline;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run Cli(std::vector<std::string> args) {
  args.insert(args.begin(), "fader");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = RunCli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path Scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("fader_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Small world and models so the whole pipeline runs in a few seconds.
std::string WriteSmallConfig(const fs::path& dir) {
  nlohmann::json j = {
      {"seed", 3},
      {"paths", {{"out", (dir / "out").string()}}},
      {"synth", {{"reference", {{"entities", 6}, {"background_rate", 1.0}}}}},
      {"embeddings", {{"dim", 8}, {"buckets", 1024}, {"epochs_base", 2}}},
      {"tagger",
       {{"word_hidden", 6}, {"char_emb", 4}, {"char_hidden", 4}, {"max_epochs", 2}, {"batch", 16}}}};
  const auto path = (dir / "config.json").string();
  std::ofstream(path) << j.dump(2);
  return path;
}

std::map<std::string, std::string> HashTree(const fs::path& root) {
  std::map<std::string, std::string> hashes;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) hashes[fs::relative(e.path(), root).string()] = Sha256File(e.path().string());
  }
  return hashes;
}

const std::vector<std::vector<std::string>> kStages = {
    {"synth"},
    {"ingest"},
    {"entities"},
    {"supervise"},
    {"supervise-baseline"},
    {"train-embeddings"},
    {"refine-embeddings", "--all-dataset-days"},
    {"train-tagger"},
    {"evaluate", "--mode", "conll"},
};

}  // namespace

TEST_CASE("config keys are checked and round trip") {
  CHECK_THROWS_AS(ConfigFromJson(nlohmann::json::parse(R"({"tagger": {"hiden": 3}})")), ConfigError);
  CHECK_THROWS_AS(ConfigFromJson(nlohmann::json::parse(R"({"tagger": {"word_hidden": "big"}})")), ConfigError);
  CHECK_THROWS_AS(ConfigFromJson(nlohmann::json::parse(R"({"entities": {"caps": {"ROBOT": 3}}})")), ConfigError);

  auto c = ConfigFromJson(nlohmann::json::parse(
      R"({"seed": 9, "tagger": {"seed": 4, "stack_b": "zeroed"}, "entities": {"caps": {"PERSON": 10}}})"));
  CHECK(c.seed == 9);
  CHECK(c.embeddings.seed == 9);
  CHECK(c.tagger.seed == 4);
  CHECK(c.tagger.stack_b == tagger::StackBMode::kZeroed);
  CHECK(c.type_caps.at(CoarseType::kPerson) == 10);
  const auto again = ConfigFromJson(nlohmann::json::parse(ToJson(c).dump()));
  CHECK(ToJson(again) == ToJson(c));
  c.SetSeed(11);
  CHECK(c.tagger.seed == 11);
  CHECK(c.reference->seed == 11);
}

TEST_CASE("invariant violations are reported before any work") {
  auto c = PipelineConfig::Defaults();
  c.supervision.test_year = c.supervision.train_last_year;
  c.tagger.batch = 0;
  c.paths.out = (Scratch("invalid") / "never").string();
  std::ostringstream log;
  try {
    Pipeline p(c, log);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("test_year") != std::string::npos);
    CHECK(msg.find("batch") != std::string::npos);
  }
  CHECK_FALSE(fs::exists(c.paths.out));
}

TEST_CASE("exit codes follow the error class") {
  const auto dir = Scratch("codes");
  const auto out = (dir / "out").string();
  CHECK(Cli({"--help"}).code == kExitOk);
  CHECK(Cli({}).code == kExitUsage);
  CHECK(Cli({"frobnicate"}).code == kExitUsage);
  CHECK(Cli({"evaluate"}).code == kExitUsage);

  auto r = Cli({"--out", out, "supervise"});
  CHECK(r.code == kExitMissingArtifact);
  CHECK(r.err.find("fader entities") != std::string::npos);
  r = Cli({"--out", out, "ingest"});
  CHECK(r.code == kExitMissingArtifact);
  CHECK(r.err.find("fader synth") != std::string::npos);
  r = Cli({"--out", out, "--corpus", (dir / "nope.jsonl").string(), "ingest"});
  CHECK(r.code == kExitConfig);

  const auto bad = (dir / "bad.json").string();
  std::ofstream(bad) << R"({"tagger": {"lr": -1}})";
  CHECK(Cli({"--config", bad, "--out", out, "synth"}).code == kExitConfig);
  std::ofstream(bad) << "{not json";
  CHECK(Cli({"--config", bad, "synth"}).code == kExitConfig);

  const auto conll = (dir / "broken.conll").string();
  std::ofstream(conll) << "# id=p1 date=2019-01-01 entity=X polarity=POS\nword\tB-PERSON\n\n";
  CHECK(Cli({"--out", out, "evaluate", "--mode", "conll", "--gold", conll, "--pred", conll}).code == kExitFormat);
}

TEST_CASE("detections round trip") {
  evaluation::DetectedSpan d;
  d.post_id = "p0000001";
  d.start = 2;
  d.end = 4;
  d.surface = "new york";
  d.type = CoarseType::kLocation;
  d.date = Day::FromYmd(2019, 3, 1);
  d.score = -1.0 / 3.0;
  std::stringstream buf;
  WriteDetections(buf, {d, d});
  const auto back = ReadDetections(buf, "mem");
  REQUIRE(back.size() == 2);
  CHECK(back[0] == d);
  std::istringstream bad("p1\t3\t3\tx\tPERSON\t2019-01-01\t0\n");
  CHECK_THROWS_AS(ReadDetections(bad, "mem"), FormatError);
}

TEST_CASE("pipeline runs end to end and reruns byte-identically") {
  const auto dir = Scratch("e2e");
  const auto config = WriteSmallConfig(dir);
  for (const auto& stage : kStages) {
    std::vector<std::string> args{"--config", config};
    args.insert(args.end(), stage.begin(), stage.end());
    const auto r = Cli(args);
    INFO(stage[0] << ": " << r.err);
    REQUIRE(r.code == kExitOk);
  }
  const auto out = dir / "out";
  REQUIRE(fs::exists(out / "tagger" / "model.fader"));
  REQUIRE(Cli({"--config", config, "tag", "--input", (out / "synth" / "posts.jsonl").string(), "--year", "2019"})
              .code == kExitOk);
  const auto imm = Cli({"--config", config, "evaluate", "--mode", "immediacy"});
  REQUIRE(imm.code == kExitOk);
  CHECK(imm.out.find("TOTAL") != std::string::npos);
  CHECK(Cli({"--config", config, "report", "--format", "json"}).out.find("\"rows\"") != std::string::npos);

  const auto manifest = nlohmann::json::parse(std::ifstream(out / "supervision" / "manifest.json"));
  CHECK(manifest["stage"] == "supervision");
  CHECK(manifest["seed"] == 3);
  CHECK(manifest["inputs"].size() == 2);
  CHECK(manifest["outputs"][0]["sha256"] == Sha256File((out / "supervision" / "train.conll").string()));

  const auto before = HashTree(out);
  for (const auto& stage : kStages) {
    std::vector<std::string> args{"--config", config};
    args.insert(args.end(), stage.begin(), stage.end());
    REQUIRE(Cli(args).code == kExitOk);
  }
  REQUIRE(Cli({"--config", config, "tag", "--input", (out / "synth" / "posts.jsonl").string(), "--year", "2019"})
              .code == kExitOk);
  REQUIRE(Cli({"--config", config, "evaluate", "--mode", "immediacy"}).code == kExitOk);
  CHECK(HashTree(out) == before);

  // Gold scored against itself.
  const auto test = (out / "supervision" / "test.conll").string();
  const auto gold = Cli({"--config", config, "evaluate", "--mode", "conll", "--gold", test, "--pred", test});
  REQUIRE(gold.code == kExitOk);
  const auto report = evaluation::EvalReportFromJson(
      std::string(std::istreambuf_iterator<char>(std::ifstream(out / "evaluate" / "conll.json").rdbuf()), {}));
  CHECK(report.micro.f1 == 1.0);
  CHECK(report.micro.fp == 0);
  CHECK(report.micro.fn == 0);
  fs::remove_all(dir);
}

TEST_CASE("a different seed changes the artifacts") {
  const auto dir = Scratch("seed");
  const auto config = WriteSmallConfig(dir);
  REQUIRE(Cli({"--config", config, "synth"}).code == kExitOk);
  const auto a = Sha256File((dir / "out" / "synth" / "posts.jsonl").string());
  REQUIRE(Cli({"--config", config, "--seed", "4", "synth"}).code == kExitOk);
  CHECK(Sha256File((dir / "out" / "synth" / "posts.jsonl").string()) != a);
  fs::remove_all(dir);
}

TEST_CASE("shipped configs load") {
  const fs::path dir = fs::path(FADER_SOURCE_DIR) / "configs";
  CHECK(ToJson(LoadConfig((dir / "reference.json").string())) == ToJson(PipelineConfig::Defaults()));
  const auto sibling = LoadConfig((dir / "sibling.json").string());
  REQUIRE(sibling.reference.has_value());
  CHECK(sibling.reference->sibling_cues);
}
