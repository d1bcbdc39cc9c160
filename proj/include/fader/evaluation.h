#ifndef FADER_EVALUATION_H_
#define FADER_EVALUATION_H_

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fader/day.h"
#include "fader/kb.h"
#include "fader/supervision.h"
#include "fader/types.h"

namespace fader::evaluation {

struct Prf {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  static Prf FromCounts(std::size_t tp, std::size_t fp, std::size_t fn);
  bool operator==(const Prf&) const = default;
};

struct EvalReport {
  Prf micro;
  std::map<CoarseType, Prf> per_type;  // types present in gold or prediction

  bool operator==(const EvalReport&) const = default;
};

// Exact (start, end, type) span matching, micro-averaged. Predicted
// fragments that are not well-formed spans are ignored. Throws ArgumentError
// when sentence counts or lengths differ.
EvalReport ConllScore(const std::vector<TagSequence>& gold, const std::vector<TagSequence>& pred);
EvalReport ConllScore(const std::vector<supervision::LabeledSentence>& gold,
                      const std::vector<TagSequence>& pred);

// One entity span found by the tagger in a post.
struct DetectedSpan {
  std::string post_id;
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive
  std::string surface;  // tokens joined by one space
  CoarseType type = CoarseType::kUnmapped;
  Day date;
  double score = 0.0;  // Viterbi log-score of the decoded sentence

  bool operator==(const DetectedSpan&) const = default;
};

struct DetectionEvent {
  std::string entity;
  Day first_detection;
  Day kb_update;

  bool operator==(const DetectionEvent&) const = default;
};

// KB update day minus first detection day; positive means earlier than the KB.
int LeadDays(const DetectionEvent& event);

struct LeadStats {
  double mean = 0.0;
  double median = 0.0;
  bool operator==(const LeadStats&) const = default;
};
std::optional<LeadStats> AggregateLeads(std::vector<int> leads);

struct ImmediacyRow {
  std::string label;  // coarse type name, TOTAL or TOTAL-without-PERSON
  std::size_t targets = 0;
  std::size_t found = 0;
  double ratio = 0.0;
  std::optional<LeadStats> lead;  // over found targets with an update day

  bool operator==(const ImmediacyRow&) const = default;
};

struct ImmediacyReport {
  std::vector<ImmediacyRow> rows;
  bool operator==(const ImmediacyReport&) const = default;
};

struct RecallOptions {
  bool fold_case = true;
  bool match_type = false;  // also require the predicted type to equal the KB type
};

struct RecallResult {
  ImmediacyReport report;
  std::vector<DetectionEvent> events;  // found targets with an update day
  std::vector<std::string> found;      // canonical names, target order
};

// Targets are the entities whose disappearance year is `year`; only
// detections dated in that year count. Rows are grouped by KB type.
RecallResult RelativeRecall(const std::vector<DetectedSpan>& detections,
                            const std::vector<kb::EntityRecord>& targets,
                            const std::map<std::string, Day>& update_days, int year,
                            const RecallOptions& options = {});

// Lines "canonical_name<TAB>YYYY-MM-DD"; an optional header is skipped.
std::map<std::string, Day> ReadUpdateDates(std::istream& in, const std::string& source);
std::map<std::string, Day> LoadUpdateDates(const std::string& path);
void WriteUpdateDates(std::ostream& out, const std::map<std::string, Day>& dates);

// Fleiss' kappa over an item x category count matrix with `raters` ratings
// per item. Throws ArgumentError when a row does not sum to `raters`.
double FleissKappa(const std::vector<std::vector<int>>& ratings, int raters);

enum class ReportFormat { kText, kJson, kTsv };
std::optional<ReportFormat> ParseReportFormat(const std::string& name);

std::string RenderReport(const EvalReport& report, ReportFormat format);
std::string RenderReport(const ImmediacyReport& report, ReportFormat format);
EvalReport EvalReportFromJson(const std::string& json);
ImmediacyReport ImmediacyReportFromJson(const std::string& json);
ImmediacyReport ImmediacyReportFromTsv(const std::string& tsv);

}  // namespace fader::evaluation

#endif  // FADER_EVALUATION_H_
