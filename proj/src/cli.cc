#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "fader/error.h"
#include "fader/pipeline.h"

namespace fader::pipeline {

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string corpus;
  std::string entities;
  std::string mapping;
  std::string update_dates;
};

PipelineConfig Effective(const Globals& g) {
  PipelineConfig c = g.config.empty() ? PipelineConfig::Defaults() : LoadConfig(g.config);
  if (g.seed) c.SetSeed(*g.seed);
  if (!g.out.empty()) c.paths.out = g.out;
  if (!g.corpus.empty()) c.paths.corpus = g.corpus;
  if (!g.entities.empty()) c.paths.entities = g.entities;
  if (!g.mapping.empty()) c.paths.mapping = g.mapping;
  if (!g.update_dates.empty()) c.paths.update_dates = g.update_dates;
  return c;
}

std::string ReadAll(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Detects disappearing entities in timestamped post streams.", "fader"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "JSON pipeline config");
  app.add_option("--seed", g.seed, "Seed for every stage, overriding the config");
  app.add_option("--out", g.out, "Output directory (default fader-out)");
  app.add_option("--corpus", g.corpus, "Posts JSONL");
  app.add_option("--entities", g.entities, "KB entity list TSV");
  app.add_option("--mapping", g.mapping, "Category to coarse type mapping TSV");
  app.add_option("--update-dates", g.update_dates, "KB update dates TSV");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic world with gold labels");
  bool emergence = false, sibling = false;
  synth->add_flag("--emergence", emergence, "Add cue-free bursts after each death (reference world)");
  synth->add_flag("--sibling-cues", sibling, "Move cue words into sibling posts (reference world)");
  app.add_subcommand("ingest", "Parse and index the corpus");
  app.add_subcommand("entities", "Load and filter the KB entity list");
  app.add_subcommand("supervise", "Build the time-sensitive training data");
  app.add_subcommand("supervise-baseline", "Build the last-burst baseline data");
  app.add_subcommand("train-embeddings", "Train base word embeddings");
  auto* refine = app.add_subcommand("refine-embeddings", "Refine embeddings on day streams");
  std::string day;
  auto* day_opt = refine->add_option("--day", day, "Write the full refined model of one day (YYYY-MM-DD)");
  auto* all_opt = refine->add_flag("--all-dataset-days", "Store refined vectors for every dataset day");
  day_opt->excludes(all_opt);
  auto* train = app.add_subcommand("train-tagger", "Train the sequence tagger");
  std::string data = "tds";
  train->add_option("--data", data, "tds or baseline")->check(CLI::IsMember({"tds", "baseline"}));
  std::string stack_b;
  train->add_option("--stack-b", stack_b, "refined or zeroed")->check(CLI::IsMember({"refined", "zeroed"}));
  auto* tag = app.add_subcommand("tag", "Tag posts and write detections");
  std::string input, model;
  std::optional<int> year;
  tag->add_option("--input", input, "Posts JSONL to tag")->required();
  tag->add_option("--year", year, "Only tag posts of this year");
  tag->add_option("--model", model, "Tagger checkpoint (default tagger/model.fader)");
  auto* evaluate = app.add_subcommand("evaluate", "Score spans or relative recall");
  std::string mode, gold, pred, detections;
  evaluate->add_option("--mode", mode, "conll or immediacy")->required()->check(CLI::IsMember({"conll", "immediacy"}));
  evaluate->add_option("--gold", gold, "Gold CoNLL (default supervision/test.conll)");
  evaluate->add_option("--pred", pred, "Predicted CoNLL; omitted: run the tagger on the gold sentences");
  evaluate->add_option("--model", model, "Tagger checkpoint (default tagger/model.fader)");
  evaluate->add_option("--detections", detections, "Detections TSV (default tag/detections.tsv)");
  auto* report = app.add_subcommand("report", "Render a stored evaluation");
  std::string report_mode = "immediacy", format = "text";
  report->add_option("--mode", report_mode, "conll or immediacy")->check(CLI::IsMember({"conll", "immediacy"}));
  report->add_option("--format", format, "text, json or tsv")->check(CLI::IsMember({"text", "json", "tsv"}));
  app.add_subcommand("show-config", "Print the effective config as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    PipelineConfig config = Effective(g);
    if (synth->parsed() && (emergence || sibling)) {
      if (!config.reference) throw ConfigError("--emergence and --sibling-cues apply to the reference world");
      config.reference->emergence = config.reference->emergence || emergence;
      config.reference->sibling_cues = config.reference->sibling_cues || sibling;
    }
    if (train->parsed() && !stack_b.empty()) {
      config.tagger.stack_b = stack_b == "refined" ? tagger::StackBMode::kRefined : tagger::StackBMode::kZeroed;
    }
    Pipeline p(config, err);
    const auto& cmd = app.get_subcommands().front()->get_name();
    const DataSource source = data == "baseline" ? DataSource::kBaseline : DataSource::kTds;
    if (cmd == "show-config") {
      out << ToJson(p.config()).dump(2) << '\n';
    } else if (cmd == "synth") {
      p.Synth();
    } else if (cmd == "ingest") {
      p.Ingest();
    } else if (cmd == "entities") {
      p.Entities();
    } else if (cmd == "supervise") {
      p.Supervise();
    } else if (cmd == "supervise-baseline") {
      p.SuperviseBaseline();
    } else if (cmd == "train-embeddings") {
      p.TrainEmbeddings();
    } else if (cmd == "refine-embeddings") {
      if (*all_opt) {
        p.RefineAllDatasetDays();
      } else if (!day.empty()) {
        auto d = Day::Parse(day);
        if (!d) throw ArgumentError("--day expects YYYY-MM-DD, got " + day);
        p.RefineDay(*d);
      } else {
        throw ArgumentError("refine-embeddings needs --day or --all-dataset-days");
      }
    } else if (cmd == "train-tagger") {
      p.TrainTagger(source);
    } else if (cmd == "tag") {
      p.Tag(input, year, model.empty() ? p.DefaultModelPath(DataSource::kTds) : model);
    } else if (cmd == "evaluate") {
      using evaluation::ReportFormat;
      if (mode == "conll") {
        const auto r = p.EvaluateConll(gold.empty() ? p.Dir("supervision") + "/test.conll" : gold, pred,
                                       model.empty() ? p.DefaultModelPath(DataSource::kTds) : model);
        out << evaluation::RenderReport(r, ReportFormat::kText);
      } else {
        const auto r = p.EvaluateImmediacy(detections.empty() ? p.Dir("tag") + "/detections.tsv" : detections);
        out << evaluation::RenderReport(r, ReportFormat::kText);
      }
    } else if (cmd == "report") {
      const auto path = p.Dir("evaluate") + "/" + report_mode + ".json";
      if (!std::filesystem::exists(path)) {
        throw MissingArtifactError("missing " + path + "; run `fader evaluate --mode " + report_mode + "` first");
      }
      const auto fmt = *evaluation::ParseReportFormat(format);
      const auto json = ReadAll(path);
      out << (report_mode == "conll" ? evaluation::RenderReport(evaluation::EvalReportFromJson(json), fmt)
                                     : evaluation::RenderReport(evaluation::ImmediacyReportFromJson(json), fmt));
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const MissingArtifactError& e) {
    err << "error: " << e.what() << '\n';
    return kExitMissingArtifact;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << '\n';
    return kExitFormat;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << '\n';
    return kExitArgument;
  } catch (const DivergenceError& e) {
    err << "training diverged: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const std::exception& e) {
    err << "unexpected error: " << e.what() << '\n';
    return kExitUnexpected;
  }
}

}  // namespace fader::pipeline
