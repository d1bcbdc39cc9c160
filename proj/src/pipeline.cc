#include "fader/pipeline.h"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "fader/error.h"
#include "fader/hash.h"
#include "fader/rng.h"
#include "fader/text.h"

namespace fader::pipeline {

namespace fs = std::filesystem;

namespace {

// Reads one JSON object, remembering which keys were consumed.
class Section {
 public:
  Section(const nlohmann::json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError(name_ + " must be an object");
  }

  template <typename T>
  bool Get(const char* key, T* value) {
    seen_.insert(key);
    if (!j_.contains(key)) return false;
    try {
      *value = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(name_ + "." + key + " has the wrong type");
    }
    return true;
  }

  const nlohmann::json* Sub(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void Finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw ConfigError("unknown config key " + name_ + "." + item.key());
    }
  }

 private:
  const nlohmann::json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

std::string StackBName(tagger::StackBMode m) {
  return m == tagger::StackBMode::kRefined ? "refined" : "zeroed";
}

tagger::StackBMode ParseStackB(const std::string& name) {
  if (name == "refined") return tagger::StackBMode::kRefined;
  if (name == "zeroed") return tagger::StackBMode::kZeroed;
  throw ConfigError("tagger.stack_b must be refined or zeroed, got " + name);
}

void WriteFile(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << bytes;
  if (!out) throw IoError("write failed for " + path);
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string Fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void WriteReports(const std::string& stem, const std::string& text, const std::string& json,
                  const std::string& tsv) {
  WriteFile(stem + ".txt", text);
  WriteFile(stem + ".json", json);
  WriteFile(stem + ".tsv", tsv);
}

}  // namespace

PipelineConfig PipelineConfig::Defaults() {
  PipelineConfig c;
  c.supervision.train_first_year = 2017;
  c.supervision.train_last_year = 2018;
  c.supervision.test_year = 2019;
  c.base_first_year = 2017;
  c.base_last_year = 2017;
  c.embeddings.dim = 32;
  c.embeddings.min_count = 2;
  c.embeddings.buckets = 1u << 15;
  c.tagger.word_hidden = 32;
  c.tagger.char_emb = 16;
  c.tagger.char_hidden = 16;
  c.tagger.dropout = 0.2;
  c.tagger.lr = 0.05;
  c.tagger.batch = 8;
  c.tagger.max_epochs = 12;
  c.tagger.lr_patience = 2;
  c.reference = synth::ReferenceOptions{};
  return c;
}

void PipelineConfig::Validate() const {
  std::vector<std::string> problems;
  auto check = [&](const auto& f) {
    try {
      f();
    } catch (const ConfigError& e) {
      problems.push_back(e.what());
    }
  };
  check([&] { supervision.Validate(); });
  check([&] { embeddings.Validate(); });
  check([&] { tagger.Validate(); });
  check([&] {
    if (world) world->Validate();
  });
  if (paths.out.empty()) problems.push_back("paths.out must not be empty");
  if (base_first_year && base_last_year && *base_first_year > *base_last_year) {
    problems.push_back("embeddings.base_first_year must not exceed base_last_year");
  }
  if (reference && world) problems.push_back("synth takes either reference or world, not both");
  if (reference && reference->last_year <= reference->first_year) {
    problems.push_back("synth.reference.last_year must exceed first_year");
  }
  if (!problems.empty()) {
    std::string msg = "invalid config:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
}

void PipelineConfig::SetSeed(std::uint64_t s) {
  seed = s;
  supervision.seed = s;
  embeddings.seed = s;
  tagger.seed = s;
  if (reference) reference->seed = s;
  if (world) world->seed = s;
}

std::string PipelineConfig::CorpusPath() const {
  return paths.corpus.empty() ? (fs::path(paths.out) / "synth" / "posts.jsonl").string() : paths.corpus;
}

std::string PipelineConfig::EntitiesPath() const {
  return paths.entities.empty() ? (fs::path(paths.out) / "synth" / "entities.tsv").string() : paths.entities;
}

std::string PipelineConfig::UpdateDatesPath() const {
  return paths.update_dates.empty() ? (fs::path(paths.out) / "synth" / "update_dates.tsv").string()
                                    : paths.update_dates;
}

PipelineConfig ConfigFromJson(const nlohmann::json& j) {
  PipelineConfig c = PipelineConfig::Defaults();
  Section top(j, "config");
  std::uint64_t seed = c.seed;
  if (top.Get("seed", &seed)) c.SetSeed(seed);

  if (const auto* p = top.Sub("paths")) {
    Section s(*p, "paths");
    s.Get("corpus", &c.paths.corpus);
    s.Get("entities", &c.paths.entities);
    s.Get("mapping", &c.paths.mapping);
    s.Get("update_dates", &c.paths.update_dates);
    s.Get("out", &c.paths.out);
    s.Finish();
  }
  if (const auto* p = top.Sub("corpus")) {
    Section s(*p, "corpus");
    s.Get("fold_case", &c.corpus.fold_case);
    s.Get("exclude_rt", &c.corpus.exclude_retweets);
    s.Finish();
  }
  if (const auto* p = top.Sub("entities")) {
    Section s(*p, "entities");
    std::map<std::string, std::size_t> caps;
    s.Get("caps", &caps);
    for (const auto& [name, cap] : caps) {
      auto t = ParseCoarseType(name);
      if (!t) throw ConfigError("entities.caps: unknown type " + name);
      c.type_caps[*t] = cap;
    }
    s.Finish();
  }
  if (const auto* p = top.Sub("supervision")) {
    Section s(*p, "supervision");
    auto& v = c.supervision;
    s.Get("k", &v.k);
    s.Get("train_first_year", &v.train_first_year);
    s.Get("train_last_year", &v.train_last_year);
    s.Get("test_year", &v.test_year);
    s.Get("dev_fraction", &v.dev_fraction);
    s.Get("seed", &v.seed);
    s.Finish();
  }
  if (const auto* p = top.Sub("embeddings")) {
    Section s(*p, "embeddings");
    auto& v = c.embeddings;
    s.Get("dim", &v.dim);
    s.Get("window", &v.window);
    s.Get("negatives", &v.negatives);
    s.Get("min_count", &v.min_count);
    s.Get("ngram_min", &v.ngram_min);
    s.Get("ngram_max", &v.ngram_max);
    s.Get("buckets", &v.buckets);
    s.Get("epochs_base", &v.epochs_base);
    s.Get("epochs_refine", &v.epochs_refine);
    s.Get("lr_base", &v.lr_base);
    s.Get("lr_refine", &v.lr_refine);
    s.Get("seed", &v.seed);
    int year = 0;
    if (s.Get("base_first_year", &year)) c.base_first_year = year;
    if (s.Get("base_last_year", &year)) c.base_last_year = year;
    s.Finish();
  }
  if (const auto* p = top.Sub("tagger")) {
    Section s(*p, "tagger");
    auto& v = c.tagger;
    s.Get("word_hidden", &v.word_hidden);
    s.Get("char_emb", &v.char_emb);
    s.Get("char_hidden", &v.char_hidden);
    s.Get("dropout", &v.dropout);
    s.Get("lr", &v.lr);
    s.Get("lr_floor", &v.lr_floor);
    s.Get("lr_patience", &v.lr_patience);
    s.Get("batch", &v.batch);
    s.Get("max_epochs", &v.max_epochs);
    s.Get("clip_norm", &v.clip_norm);
    std::string mode;
    if (s.Get("stack_b", &mode)) v.stack_b = ParseStackB(mode);
    s.Get("seed", &v.seed);
    s.Finish();
  }
  if (const auto* p = top.Sub("synth")) {
    Section s(*p, "synth");
    if (const auto* r = s.Sub("reference")) {
      c.reference = synth::ReferenceOptionsFromJson(*r);
      if (!r->contains("seed")) c.reference->seed = c.seed;
    }
    if (const auto* w = s.Sub("world")) {
      c.world = synth::WorldSpecFromJson(*w);
      if (!w->contains("seed")) c.world->seed = c.seed;
      if (!p->contains("reference")) c.reference.reset();
    }
    s.Finish();
  }
  top.Finish();
  c.tagger.fold_case = c.corpus.fold_case;
  return c;
}

PipelineConfig LoadConfig(const std::string& path) {
  const std::string text = ReadFile(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return ConfigFromJson(j);
}

nlohmann::ordered_json ToJson(const PipelineConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["paths"] = {{"corpus", c.paths.corpus},
                {"entities", c.paths.entities},
                {"mapping", c.paths.mapping},
                {"update_dates", c.paths.update_dates},
                {"out", c.paths.out}};
  j["corpus"] = {{"fold_case", c.corpus.fold_case}, {"exclude_rt", c.corpus.exclude_retweets}};
  nlohmann::ordered_json caps = nlohmann::ordered_json::object();
  for (const auto& [t, cap] : c.type_caps) caps[std::string(CoarseTypeName(t))] = cap;
  j["entities"] = {{"caps", caps}};
  const auto& s = c.supervision;
  j["supervision"] = {{"k", s.k},
                      {"train_first_year", s.train_first_year},
                      {"train_last_year", s.train_last_year},
                      {"test_year", s.test_year},
                      {"dev_fraction", s.dev_fraction},
                      {"seed", s.seed}};
  const auto& e = c.embeddings;
  j["embeddings"] = {{"dim", e.dim},
                     {"window", e.window},
                     {"negatives", e.negatives},
                     {"min_count", e.min_count},
                     {"ngram_min", e.ngram_min},
                     {"ngram_max", e.ngram_max},
                     {"buckets", e.buckets},
                     {"epochs_base", e.epochs_base},
                     {"epochs_refine", e.epochs_refine},
                     {"lr_base", e.lr_base},
                     {"lr_refine", e.lr_refine},
                     {"seed", e.seed}};
  if (c.base_first_year) j["embeddings"]["base_first_year"] = *c.base_first_year;
  if (c.base_last_year) j["embeddings"]["base_last_year"] = *c.base_last_year;
  const auto& t = c.tagger;
  j["tagger"] = {{"word_hidden", t.word_hidden},
                 {"char_emb", t.char_emb},
                 {"char_hidden", t.char_hidden},
                 {"dropout", t.dropout},
                 {"lr", t.lr},
                 {"lr_floor", t.lr_floor},
                 {"lr_patience", t.lr_patience},
                 {"batch", t.batch},
                 {"max_epochs", t.max_epochs},
                 {"clip_norm", t.clip_norm},
                 {"stack_b", StackBName(t.stack_b)},
                 {"seed", t.seed}};
  nlohmann::ordered_json syn = nlohmann::ordered_json::object();
  if (c.reference) syn["reference"] = synth::ToJson(*c.reference);
  if (c.world) syn["world"] = synth::ToJson(*c.world);
  j["synth"] = syn;
  return j;
}

void WriteDetections(std::ostream& out, const std::vector<evaluation::DetectedSpan>& spans) {
  out << "post_id\tstart\tend\tsurface\ttype\tdate\tscore\n";
  for (const auto& d : spans) {
    out << d.post_id << '\t' << d.start << '\t' << d.end << '\t' << d.surface << '\t'
        << CoarseTypeName(d.type) << '\t' << d.date.ToString() << '\t' << FormatDouble(d.score) << '\n';
  }
}

std::vector<evaluation::DetectedSpan> ReadDetections(std::istream& in, const std::string& source) {
  std::vector<evaluation::DetectedSpan> spans;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || (n == 1 && line.rfind("post_id\t", 0) == 0)) continue;
    const auto cells = text::Split(line, '\t');
    if (cells.size() != 7) throw FormatError(source, n, "expected 7 tab-separated cells");
    evaluation::DetectedSpan d;
    d.post_id = cells[0];
    char* end = nullptr;
    d.start = std::strtoull(cells[1].c_str(), &end, 10);
    if (*end) throw FormatError(source, n, "bad start " + cells[1]);
    d.end = std::strtoull(cells[2].c_str(), &end, 10);
    if (*end || d.end <= d.start) throw FormatError(source, n, "bad end " + cells[2]);
    d.surface = cells[3];
    auto type = ParseCoarseType(cells[4]);
    if (!type) throw FormatError(source, n, "unknown type " + cells[4]);
    d.type = *type;
    auto day = Day::Parse(cells[5]);
    if (!day) throw FormatError(source, n, "bad date " + cells[5]);
    d.date = *day;
    d.score = std::strtod(cells[6].c_str(), &end);
    if (*end) throw FormatError(source, n, "bad score " + cells[6]);
    spans.push_back(std::move(d));
  }
  return spans;
}

Pipeline::Pipeline(PipelineConfig config, std::ostream& log) : config_(std::move(config)), log_(log) {
  config_.tagger.fold_case = config_.corpus.fold_case;
  config_.Validate();
}

std::string Pipeline::Dir(const std::string& stage) const {
  return (fs::path(config_.paths.out) / stage).string();
}

std::string Pipeline::Key(const std::string& token) const {
  return config_.corpus.fold_case ? text::FoldCase(token) : token;
}

std::string Pipeline::Require(const std::string& path, const std::string& stage) const {
  if (!fs::exists(path)) {
    throw MissingArtifactError("missing " + path + "; run `fader " + stage + "` first");
  }
  return path;
}

kb::TypeMapping Pipeline::Mapping() const {
  if (config_.paths.mapping.empty()) return kb::TypeMapping::Default();
  if (!fs::exists(config_.paths.mapping)) throw ConfigError("paths.mapping: no such file " + config_.paths.mapping);
  return kb::LoadTypeMapping(config_.paths.mapping);
}

namespace {

// User-supplied inputs are config errors when absent; defaults point at the
// synth stage's output.
std::string RequireInput(const std::string& configured, const std::string& effective, const char* key) {
  if (fs::exists(effective)) return effective;
  if (configured.empty()) throw MissingArtifactError("missing " + effective + "; run `fader synth` first or set paths." + key);
  throw ConfigError(std::string("paths.") + key + ": no such file " + effective);
}

}  // namespace

const corpus::CorpusIndex& Pipeline::Corpus() {
  if (!corpus_) {
    const auto path = RequireInput(config_.paths.corpus, config_.CorpusPath(), "corpus");
    log_ << "ingesting " << path << '\n';
    corpus_ = corpus::IngestPostsFile(path, config_.corpus);
    log_ << "  " << corpus_->report.accepted << " posts, " << corpus_->report.malformed << " malformed, "
         << corpus_->report.duplicates << " duplicates\n";
  }
  return corpus_->index;
}

const embeddings::EmbeddingModel& Pipeline::Base() {
  if (!base_) {
    base_ = embeddings::LoadBinary(Require(Dir("embeddings") + "/base.bin", "train-embeddings"));
  }
  return *base_;
}

std::vector<kb::EntityRecord> Pipeline::FilteredEntities() {
  auto result = kb::LoadEntityList(Require(Dir("entities") + "/entities.tsv", "entities"), Mapping());
  return std::move(result.records);
}

std::vector<embeddings::Sentence> Pipeline::DayStream(Day day) {
  const auto& index = Corpus();
  std::vector<embeddings::Sentence> out;
  for (auto id : index.PostsOnDay(day)) {
    embeddings::Sentence s;
    for (const auto& t : index.posts()[id].tokens) s.push_back(Key(t));
    out.push_back(std::move(s));
  }
  return out;
}

tagger::RefinedProvider Pipeline::TableProvider() {
  const std::string path = Dir("refined") + "/days.bin";
  if (!table_) {
    if (config_.tagger.stack_b == tagger::StackBMode::kZeroed && !fs::exists(path)) {
      return [](Day, const std::string&) { return std::optional<embeddings::Vector>(); };
    }
    table_ = embeddings::LoadDayTable(Require(path, "refine-embeddings --all-dataset-days"));
  }
  const auto* table = &*table_;
  return [table](Day day, const std::string& key) { return table->Find(day, key); };
}

void Pipeline::WriteManifest(const std::string& name, const nlohmann::ordered_json& args,
                             const std::vector<std::string>& inputs, const std::vector<std::string>& outputs) {
  nlohmann::ordered_json m;
  const auto slash = name.find('/');
  m["stage"] = name.substr(0, slash);
  m["format"] = 1;
  m["seed"] = config_.seed;
  m["config_sha256"] = Sha256Hex(ToJson(config_).dump());
  m["args"] = args;
  auto in = nlohmann::ordered_json::array();
  std::set<std::string> seen;
  for (const auto& p : inputs) {
    if (seen.insert(p).second) in.push_back({{"path", p}, {"sha256", Sha256File(p)}});
  }
  m["inputs"] = in;
  auto out = nlohmann::ordered_json::array();
  for (const auto& p : outputs) out.push_back({{"path", p}, {"sha256", Sha256File(p)}});
  m["outputs"] = out;
  WriteFile((fs::path(config_.paths.out) / name).string(), m.dump(2) + "\n");
}

void Pipeline::Synth() {
  synth::WorldSpec spec = config_.world ? *config_.world
                                        : synth::ReferenceSpec(config_.reference.value_or(synth::ReferenceOptions{}));
  const auto dir = Dir("synth");
  fs::create_directories(dir);
  log_ << "generating " << spec.entities.size() << " entities from " << spec.start.ToString() << " to "
       << spec.end.ToString() << '\n';
  const auto world = synth::Generate(spec);
  synth::WriteWorld(world, dir);
  WriteFile(dir + "/spec.json", synth::ToJson(spec).dump(2) + "\n");
  log_ << "  " << world.posts.size() << " posts written to " << dir << '\n';
  std::vector<std::string> outs;
  for (const char* f : {"posts.jsonl", "gold.conll", "entities.tsv", "update_dates.tsv", "spec.json"}) {
    outs.push_back(dir + "/" + f);
  }
  WriteManifest("synth/manifest.json", nlohmann::ordered_json::object(), {}, outs);
}

corpus::IngestReport Pipeline::Ingest() {
  const auto& index = Corpus();
  const auto& r = corpus_->report;
  const auto days = index.Days();
  nlohmann::ordered_json j{{"accepted", r.accepted},
                           {"malformed", r.malformed},
                           {"duplicates", r.duplicates},
                           {"days", days.size()}};
  if (!days.empty()) {
    j["first_day"] = days.front().ToString();
    j["last_day"] = days.back().ToString();
  }
  const auto dir = Dir("ingest");
  fs::create_directories(dir);
  WriteFile(dir + "/report.json", j.dump(2) + "\n");
  WriteManifest("ingest/manifest.json", nlohmann::ordered_json::object(), {config_.CorpusPath()},
                {dir + "/report.json"});
  return r;
}

std::vector<kb::EntityRecord> Pipeline::Entities() {
  const auto path = RequireInput(config_.paths.entities, config_.EntitiesPath(), "entities");
  const auto mapping = Mapping();
  const auto& index = Corpus();
  auto loaded = kb::LoadEntityList(path, mapping);
  for (const auto& w : loaded.warnings) log_ << "  " << w << '\n';
  auto kept = kb::FilterEntities(loaded.records, index, config_.type_caps, DeriveSeed(config_.seed, "entities"));
  log_ << "entities: " << kept.size() << " of " << loaded.records.size() << " kept\n";

  const auto dir = Dir("entities");
  fs::create_directories(dir);
  std::ostringstream tsv;
  kb::WriteEntityList(tsv, kept);
  WriteFile(dir + "/entities.tsv", tsv.str());
  nlohmann::ordered_json per_type = nlohmann::ordered_json::object();
  for (const auto& e : kept) {
    auto& slot = per_type[std::string(CoarseTypeName(e.coarse_type))];
    slot = slot.is_null() ? 1 : slot.get<int>() + 1;
  }
  nlohmann::ordered_json report{{"read", loaded.records.size()},
                                {"kept", kept.size()},
                                {"per_type", per_type},
                                {"warnings", loaded.warnings}};
  WriteFile(dir + "/report.json", report.dump(2) + "\n");
  std::vector<std::string> inputs{path, config_.CorpusPath()};
  if (!config_.paths.mapping.empty()) inputs.push_back(config_.paths.mapping);
  WriteManifest("entities/manifest.json", nlohmann::ordered_json::object(), inputs,
                {dir + "/entities.tsv", dir + "/report.json"});
  return kept;
}

namespace {

std::vector<std::string> WriteSplit(const std::string& dir, const supervision::Dataset& d) {
  fs::create_directories(dir);
  supervision::WriteConllFile(dir + "/train.conll", d.train);
  supervision::WriteConllFile(dir + "/dev.conll", d.dev);
  supervision::WriteConllFile(dir + "/test.conll", d.test);
  return {dir + "/train.conll", dir + "/dev.conll", dir + "/test.conll"};
}

}  // namespace

supervision::Dataset Pipeline::Supervise() {
  const auto entities_path = Require(Dir("entities") + "/entities.tsv", "entities");
  const auto entities = FilteredEntities();
  const auto tds = supervision::RunTds(entities, Corpus(), config_.supervision);
  auto data = supervision::SplitDataset(tds.sentences, config_.supervision);
  log_ << "supervision: " << tds.sentences.size() << " sentences (train " << data.train.size() << ", dev "
       << data.dev.size() << ", test " << data.test.size() << "), " << tds.uncovered.size()
       << " entities uncovered\n";
  const auto dir = Dir("supervision");
  auto outs = WriteSplit(dir, data);
  std::string uncovered;
  for (const auto& u : tds.uncovered) uncovered += u + "\n";
  WriteFile(dir + "/uncovered.txt", uncovered);
  outs.push_back(dir + "/uncovered.txt");
  WriteManifest("supervision/manifest.json", nlohmann::ordered_json::object(),
                {entities_path, config_.CorpusPath()}, outs);
  return data;
}

supervision::Dataset Pipeline::SuperviseBaseline() {
  const auto entities_path = Require(Dir("entities") + "/entities.tsv", "entities");
  const auto entities = FilteredEntities();
  const auto& index = Corpus();
  std::vector<supervision::LabeledSentence> all;
  std::string days = "entity\tpositive_day\n";
  for (const auto& e : entities) {
    auto b = supervision::CollectBaselineContexts(e, index, e.disappearance_year, config_.supervision.k,
                                                  config_.supervision.seed);
    days += e.canonical_name + "\t" + (b.positive_day ? b.positive_day->ToString() : "-") + "\n";
    for (auto& s : b.positives) all.push_back(std::move(s));
    for (auto& s : b.negatives) all.push_back(std::move(s));
  }
  supervision::SortCanonical(all);
  auto data = supervision::SplitDataset(all, config_.supervision);
  log_ << "baseline supervision: " << all.size() << " sentences (train " << data.train.size() << ", dev "
       << data.dev.size() << ", test " << data.test.size() << ")\n";
  const auto dir = Dir("baseline");
  auto outs = WriteSplit(dir, data);
  WriteFile(dir + "/positive_days.tsv", days);
  outs.push_back(dir + "/positive_days.tsv");
  WriteManifest("baseline/manifest.json", nlohmann::ordered_json::object(),
                {entities_path, config_.CorpusPath()}, outs);
  return data;
}

void Pipeline::TrainEmbeddings() {
  const auto& index = Corpus();
  const int first = config_.base_first_year.value_or(std::numeric_limits<int>::min());
  const int last = config_.base_last_year.value_or(config_.supervision.train_first_year - 1);
  std::vector<embeddings::Sentence> sentences;
  for (const auto& p : index.posts()) {
    const int y = p.day().year();
    if (y < first || y > last) continue;
    embeddings::Sentence s;
    for (const auto& t : p.tokens) s.push_back(Key(t));
    sentences.push_back(std::move(s));
  }
  if (sentences.empty()) throw ArgumentError("no posts in the base period (years up to " + std::to_string(last) + ")");
  log_ << "training base embeddings on " << sentences.size() << " posts\n";
  base_ = embeddings::TrainBase(sentences, config_.embeddings);
  log_ << "  vocabulary " << base_->vocab_size() << '\n';
  const auto dir = Dir("embeddings");
  fs::create_directories(dir);
  embeddings::SaveBinary(dir + "/base.bin", *base_);
  embeddings::SaveText(dir + "/base.vec", *base_);
  WriteManifest("embeddings/manifest.json", nlohmann::ordered_json::object(), {config_.CorpusPath()},
                {dir + "/base.bin", dir + "/base.vec"});
}

void Pipeline::RefineDay(Day day) {
  const auto base_path = Require(Dir("embeddings") + "/base.bin", "train-embeddings");
  const auto stream = DayStream(day);
  if (stream.empty()) throw ArgumentError("the corpus has no posts on " + day.ToString());
  const auto model = embeddings::RefineForDay(Base(), stream, day, config_.embeddings);
  const auto dir = Dir("refined");
  fs::create_directories(dir);
  const auto path = dir + "/" + day.ToString() + ".bin";
  embeddings::SaveBinary(path, model);
  log_ << "refined " << day.ToString() << " on " << stream.size() << " posts\n";
  WriteManifest("refined/" + day.ToString() + ".manifest.json", {{"day", day.ToString()}},
                {base_path, config_.CorpusPath()}, {path});
}

void Pipeline::RefineAllDatasetDays() {
  const auto base_path = Require(Dir("embeddings") + "/base.bin", "train-embeddings");
  std::vector<std::string> inputs{base_path, config_.CorpusPath()};
  std::map<Day, std::set<std::string>> keys;
  for (const char* stage : {"supervision", "baseline"}) {
    for (const char* split : {"train", "dev", "test"}) {
      const auto path = Dir(stage) + "/" + split + ".conll";
      if (!fs::exists(path)) continue;
      inputs.push_back(path);
      for (const auto& s : supervision::ReadConllFile(path)) {
        for (const auto& t : s.tokens) keys[s.date].insert(Key(t));
      }
    }
  }
  if (inputs.size() == 2) throw MissingArtifactError("no dataset found; run `fader supervise` first");
  embeddings::DayVectorTable table(Base().config.dim);
  std::size_t done = 0;
  for (const auto& [day, words] : keys) {
    const auto stream = DayStream(day);
    if (!stream.empty()) {
      const auto model = embeddings::RefineForDay(Base(), stream, day, config_.embeddings);
      table.Add(model, std::vector<std::string>(words.begin(), words.end()));
    }
    if (++done % 100 == 0) log_ << "  refined " << done << " of " << keys.size() << " days\n";
  }
  log_ << "refined vectors for " << table.Days().size() << " days, " << table.size() << " vectors\n";
  const auto dir = Dir("refined");
  fs::create_directories(dir);
  embeddings::SaveDayTable(dir + "/days.bin", table);
  table_ = std::move(table);
  WriteManifest("refined/manifest.json", {{"all_dataset_days", true}}, inputs, {dir + "/days.bin"});
}

std::string Pipeline::DefaultModelPath(DataSource source) const {
  return Dir(source == DataSource::kTds ? "tagger" : "tagger-baseline") + "/model.fader";
}

tagger::TrainResult Pipeline::TrainTagger(DataSource source) {
  const std::string data = source == DataSource::kTds ? "supervision" : "baseline";
  const std::string producer = source == DataSource::kTds ? "supervise" : "supervise-baseline";
  const auto train_path = Require(Dir(data) + "/train.conll", producer);
  const auto dev_path = Require(Dir(data) + "/dev.conll", producer);
  const auto train = supervision::ReadConllFile(train_path);
  const auto dev = supervision::ReadConllFile(dev_path);
  const auto& base = Base();
  const auto provider = TableProvider();
  std::vector<std::string> inputs{train_path, dev_path, Dir("embeddings") + "/base.bin"};
  if (table_) inputs.push_back(Dir("refined") + "/days.bin");
  log_ << "training tagger on " << train.size() << " sentences (dev " << dev.size() << ")\n";
  tagger::TrainOptions options;
  options.on_epoch = [this](const tagger::EpochLog& e) {
    log_ << "  epoch " << e.epoch << " loss " << Fixed(e.train_loss) << " dev F1 " << Fixed(e.dev_f1) << " lr "
         << e.lr << '\n';
  };
  auto result = tagger::Train(train, dev, base, provider, config_.tagger, options);
  const auto path = DefaultModelPath(source);
  const auto dir = fs::path(path).parent_path().string();
  fs::create_directories(dir);
  tagger::SaveCheckpoint(path, result.model);
  std::string log = "epoch\ttrain_loss\tdev_f1\tlr\n";
  for (const auto& e : result.log) {
    log += std::to_string(e.epoch) + "\t" + Fixed(e.train_loss) + "\t" + Fixed(e.dev_f1) + "\t" +
           FormatDouble(e.lr) + "\n";
  }
  WriteFile(dir + "/log.tsv", log);
  log_ << "  best epoch " << result.best_epoch << '\n';
  WriteManifest(fs::path(dir).filename().string() + "/manifest.json", {{"data", data}}, inputs,
                {path, dir + "/log.tsv"});
  return result;
}

std::vector<evaluation::DetectedSpan> Pipeline::Tag(const std::string& input, std::optional<int> year,
                                                    const std::string& model_path) {
  if (!fs::exists(input)) throw ConfigError("tag --input: no such file " + input);
  const auto model = tagger::LoadCheckpoint(Require(model_path, "train-tagger"));
  const auto& base = Base();
  Corpus();
  auto posts = corpus::IngestPostsFile(input, config_.corpus);
  embeddings::DayRefiner refiner(base, [this](Day d) { return DayStream(d); }, config_.embeddings);
  const auto provider = tagger::ModelProvider([&refiner](Day d) { return refiner.ForDay(d); });
  std::vector<evaluation::DetectedSpan> found;
  std::size_t tagged = 0;
  std::optional<Day> last_day;
  std::size_t days = 0;
  for (const auto& p : posts.index.posts()) {
    if (year && p.day().year() != *year) continue;
    if (p.day() != last_day) {
      last_day = p.day();
      if (++days % 50 == 0) log_ << "  tagging " << p.day().ToString() << '\n';
    }
    auto spans = tagger::TagPost(model, p, base, provider);
    found.insert(found.end(), spans.begin(), spans.end());
    ++tagged;
  }
  log_ << "tagged " << tagged << " posts, " << found.size() << " spans\n";
  const auto dir = Dir("tag");
  fs::create_directories(dir);
  std::ostringstream out;
  WriteDetections(out, found);
  WriteFile(dir + "/detections.tsv", out.str());
  nlohmann::ordered_json args{{"input", input}, {"model", model_path}};
  if (year) args["year"] = *year;
  WriteManifest("tag/manifest.json", args,
                {input, model_path, Dir("embeddings") + "/base.bin", config_.CorpusPath()},
                {dir + "/detections.tsv"});
  return found;
}

evaluation::EvalReport Pipeline::EvaluateConll(const std::string& gold_path, const std::string& pred_path,
                                               const std::string& model_path) {
  const auto gold = supervision::ReadConllFile(Require(gold_path, "supervise"));
  std::vector<std::string> inputs{gold_path};
  std::vector<TagSequence> pred;
  const auto dir = Dir("evaluate");
  fs::create_directories(dir);
  std::vector<std::string> outputs;
  if (!pred_path.empty()) {
    if (!fs::exists(pred_path)) throw ConfigError("evaluate --pred: no such file " + pred_path);
    inputs.push_back(pred_path);
    const auto p = supervision::ReadConllFile(pred_path);
    if (p.size() != gold.size()) throw ArgumentError("prediction file has a different number of sentences");
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i].post_id != gold[i].post_id || p[i].tokens != gold[i].tokens) {
        throw ArgumentError("prediction sentence " + std::to_string(i + 1) + " does not match the gold sentence");
      }
      pred.push_back(p[i].tags);
    }
  } else {
    const auto model = tagger::LoadCheckpoint(Require(model_path, "train-tagger"));
    const auto& base = Base();
    const auto provider = TableProvider();
    inputs.push_back(model_path);
    inputs.push_back(Dir("embeddings") + "/base.bin");
    if (table_) inputs.push_back(Dir("refined") + "/days.bin");
    auto predicted = gold;
    for (auto& s : predicted) {
      const auto f = tagger::BuildFeatures(s.tokens, s.date, model.chars, model.config.fold_case, base, provider);
      s.tags = tagger::Predict(model, f).tags;
      s.polarity = ExtractSpans(s.tags).empty() ? supervision::Polarity::kNegative : supervision::Polarity::kPositive;
      pred.push_back(s.tags);
    }
    supervision::WriteConllFile(dir + "/conll_predictions.conll", predicted);
    outputs.push_back(dir + "/conll_predictions.conll");
  }
  const auto report = evaluation::ConllScore(gold, pred);
  using evaluation::ReportFormat;
  WriteReports(dir + "/conll", evaluation::RenderReport(report, ReportFormat::kText),
               evaluation::RenderReport(report, ReportFormat::kJson),
               evaluation::RenderReport(report, ReportFormat::kTsv));
  for (const char* ext : {".txt", ".json", ".tsv"}) outputs.push_back(dir + "/conll" + ext);
  WriteManifest("evaluate/conll.manifest.json", {{"gold", gold_path}, {"pred", pred_path}, {"model", model_path}},
                inputs, outputs);
  return report;
}

evaluation::ImmediacyReport Pipeline::EvaluateImmediacy(const std::string& detections_path) {
  std::ifstream in(Require(detections_path, "tag"));
  const auto detections = ReadDetections(in, detections_path);
  const auto targets = FilteredEntities();
  std::vector<std::string> inputs{detections_path, Dir("entities") + "/entities.tsv"};
  std::map<std::string, Day> updates;
  const auto updates_path = config_.UpdateDatesPath();
  if (fs::exists(updates_path)) {
    updates = evaluation::LoadUpdateDates(updates_path);
    inputs.push_back(updates_path);
  } else if (!config_.paths.update_dates.empty()) {
    throw ConfigError("paths.update_dates: no such file " + updates_path);
  } else {
    log_ << "no update dates found; lead days are not reported\n";
  }
  evaluation::RecallOptions options;
  options.fold_case = config_.corpus.fold_case;
  const auto result =
      evaluation::RelativeRecall(detections, targets, updates, config_.supervision.test_year, options);
  const auto dir = Dir("evaluate");
  fs::create_directories(dir);
  using evaluation::ReportFormat;
  WriteReports(dir + "/immediacy", evaluation::RenderReport(result.report, ReportFormat::kText),
               evaluation::RenderReport(result.report, ReportFormat::kJson),
               evaluation::RenderReport(result.report, ReportFormat::kTsv));
  std::string events = "entity\tfirst_detection\tkb_update\tlead_days\n";
  for (const auto& e : result.events) {
    events += e.entity + "\t" + e.first_detection.ToString() + "\t" + e.kb_update.ToString() + "\t" +
              std::to_string(evaluation::LeadDays(e)) + "\n";
  }
  WriteFile(dir + "/immediacy_events.tsv", events);
  std::vector<std::string> outputs;
  for (const char* ext : {".txt", ".json", ".tsv"}) outputs.push_back(dir + "/immediacy" + ext);
  outputs.push_back(dir + "/immediacy_events.tsv");
  WriteManifest("evaluate/immediacy.manifest.json", {{"detections", detections_path}}, inputs, outputs);
  return result.report;
}

}  // namespace fader::pipeline
