#ifndef FADER_PIPELINE_H_
#define FADER_PIPELINE_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fader/corpus.h"
#include "fader/embeddings.h"
#include "fader/evaluation.h"
#include "fader/kb.h"
#include "fader/supervision.h"
#include "fader/synth.h"
#include "fader/tagger.h"
#include "json.hpp"

// Stage orchestration behind the `fader` command.
namespace fader::pipeline {

struct Paths {
  // Empty inputs default to the files the `synth` stage writes under out.
  std::string corpus;
  std::string entities;
  std::string mapping;  // empty: built-in category mapping
  std::string update_dates;
  std::string out = "fader-out";
};

struct PipelineConfig {
  Paths paths;
  std::uint64_t seed = 1;
  corpus::CorpusOptions corpus;
  kb::TypeCaps type_caps;
  supervision::SupervisionConfig supervision;
  embeddings::EmbeddingConfig embeddings;
  // Base-period years; unset means every year before the first train year.
  std::optional<int> base_first_year;
  std::optional<int> base_last_year;
  tagger::TaggerConfig tagger;
  // Either a reference world or a full world spec; see Synth().
  std::optional<synth::ReferenceOptions> reference;
  std::optional<synth::WorldSpec> world;

  // Desk-scale settings for the reference synthetic world.
  static PipelineConfig Defaults();

  // Sub-config invariants; throws ConfigError listing each problem.
  void Validate() const;
  // Overrides the global seed and every per-stage seed.
  void SetSeed(std::uint64_t seed);

  std::string CorpusPath() const;
  std::string EntitiesPath() const;
  std::string UpdateDatesPath() const;
};

// Unknown keys are rejected so typos do not silently fall back to defaults.
PipelineConfig ConfigFromJson(const nlohmann::json& j);
PipelineConfig LoadConfig(const std::string& path);
nlohmann::ordered_json ToJson(const PipelineConfig& config);

enum class DataSource { kTds, kBaseline };

void WriteDetections(std::ostream& out, const std::vector<evaluation::DetectedSpan>& spans);
std::vector<evaluation::DetectedSpan> ReadDetections(std::istream& in, const std::string& source);

// Each stage writes into <out>/<stage>/ and finishes with manifest.json
// listing input hashes, the config hash, the seed and output hashes.
class Pipeline {
 public:
  Pipeline(PipelineConfig config, std::ostream& log);

  const PipelineConfig& config() const { return config_; }
  std::string Dir(const std::string& stage) const;

  void Synth();
  corpus::IngestReport Ingest();
  std::vector<kb::EntityRecord> Entities();
  supervision::Dataset Supervise();
  supervision::Dataset SuperviseBaseline();
  void TrainEmbeddings();
  void RefineDay(Day day);
  void RefineAllDatasetDays();
  tagger::TrainResult TrainTagger(DataSource source);
  // Tags the posts of `input` (optionally one year of them) and writes
  // tag/detections.tsv. Refined vectors come from the corpus day streams.
  std::vector<evaluation::DetectedSpan> Tag(const std::string& input, std::optional<int> year,
                                            const std::string& model_path);
  // Scores `pred_path` against `gold_path`, or the model's predictions on the
  // gold sentences when `pred_path` is empty.
  evaluation::EvalReport EvaluateConll(const std::string& gold_path, const std::string& pred_path,
                                       const std::string& model_path);
  evaluation::ImmediacyReport EvaluateImmediacy(const std::string& detections_path);

  std::string DefaultModelPath(DataSource source) const;

 private:
  const corpus::CorpusIndex& Corpus();
  const embeddings::EmbeddingModel& Base();
  std::vector<kb::EntityRecord> FilteredEntities();
  tagger::RefinedProvider TableProvider();
  kb::TypeMapping Mapping() const;
  std::vector<embeddings::Sentence> DayStream(Day day);
  std::string Require(const std::string& path, const std::string& stage) const;
  void WriteManifest(const std::string& stage, const nlohmann::ordered_json& args,
                     const std::vector<std::string>& inputs, const std::vector<std::string>& outputs);
  std::string Key(const std::string& token) const;

  PipelineConfig config_;
  std::ostream& log_;
  std::optional<corpus::IngestResult> corpus_;
  std::optional<embeddings::EmbeddingModel> base_;
  std::optional<embeddings::DayVectorTable> table_;
};

// Exit codes of the command-line tool, one per error class.
enum ExitCode : int {
  kExitOk = 0,
  kExitUnexpected = 1,
  kExitUsage = 2,
  kExitConfig = 3,
  kExitIo = 4,
  kExitFormat = 5,
  kExitMissingArtifact = 6,
  kExitArgument = 7,
  kExitDivergence = 8,
};

// Parses arguments and runs one subcommand. Data goes to `out`, progress and
// errors to `err`.
int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fader::pipeline

#endif  // FADER_PIPELINE_H_
