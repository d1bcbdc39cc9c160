#include "fader/evaluation.h"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "fader/error.h"
#include "fader/text.h"

namespace fader::evaluation {

Prf Prf::FromCounts(std::size_t tp, std::size_t fp, std::size_t fn) {
  Prf p;
  p.tp = tp;
  p.fp = fp;
  p.fn = fn;
  p.precision = tp + fp ? static_cast<double>(tp) / (tp + fp) : 0.0;
  p.recall = tp + fn ? static_cast<double>(tp) / (tp + fn) : 0.0;
  p.f1 = p.precision + p.recall > 0 ? 2 * p.precision * p.recall / (p.precision + p.recall) : 0.0;
  return p;
}

EvalReport ConllScore(const std::vector<TagSequence>& gold, const std::vector<TagSequence>& pred) {
  if (gold.size() != pred.size()) {
    throw ArgumentError("gold has " + std::to_string(gold.size()) + " sentences, prediction " +
                        std::to_string(pred.size()));
  }
  struct Counts {
    std::size_t tp = 0, fp = 0, fn = 0;
  };
  std::map<CoarseType, Counts> by_type;
  Counts total;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    if (gold[s].size() != pred[s].size()) {
      throw ArgumentError("sentence " + std::to_string(s) + ": gold length " +
                          std::to_string(gold[s].size()) + ", prediction length " +
                          std::to_string(pred[s].size()));
    }
    const auto g = ExtractSpans(gold[s]);
    const auto p = ExtractSpans(pred[s]);
    const std::set<Span> gold_set(g.begin(), g.end());
    const std::set<Span> pred_set(p.begin(), p.end());
    for (const auto& span : pred_set) {
      auto& c = by_type[span.type];
      if (gold_set.count(span)) {
        ++c.tp;
        ++total.tp;
      } else {
        ++c.fp;
        ++total.fp;
      }
    }
    for (const auto& span : gold_set) {
      if (!pred_set.count(span)) {
        ++by_type[span.type].fn;
        ++total.fn;
      }
    }
  }
  EvalReport report;
  report.micro = Prf::FromCounts(total.tp, total.fp, total.fn);
  for (const auto& [type, c] : by_type) report.per_type[type] = Prf::FromCounts(c.tp, c.fp, c.fn);
  return report;
}

EvalReport ConllScore(const std::vector<supervision::LabeledSentence>& gold,
                      const std::vector<TagSequence>& pred) {
  std::vector<TagSequence> tags;
  tags.reserve(gold.size());
  for (const auto& s : gold) tags.push_back(s.tags);
  return ConllScore(tags, pred);
}

int LeadDays(const DetectionEvent& event) { return event.kb_update - event.first_detection; }

std::optional<LeadStats> AggregateLeads(std::vector<int> leads) {
  if (leads.empty()) return std::nullopt;
  std::sort(leads.begin(), leads.end());
  LeadStats stats;
  double sum = 0.0;
  for (int l : leads) sum += l;
  stats.mean = sum / leads.size();
  const std::size_t mid = leads.size() / 2;
  stats.median = leads.size() % 2 ? leads[mid] : (leads[mid - 1] + leads[mid]) / 2.0;
  return stats;
}

RecallResult RelativeRecall(const std::vector<DetectedSpan>& detections,
                            const std::vector<kb::EntityRecord>& targets,
                            const std::map<std::string, Day>& update_days, int year,
                            const RecallOptions& options) {
  auto form = [&](const std::string& s) {
    const std::string norm = text::NormalizeSpace(s);
    return options.fold_case ? text::FoldCase(norm) : norm;
  };
  // Earliest detection day per (surface form, predicted type).
  std::map<std::pair<std::string, CoarseType>, Day> first_seen;
  for (const auto& d : detections) {
    if (d.date.year() != year) continue;
    auto key = std::make_pair(form(d.surface), d.type);
    auto it = first_seen.find(key);
    if (it == first_seen.end() || d.date < it->second) first_seen[key] = d.date;
  }

  struct Group {
    std::size_t targets = 0, found = 0;
    std::vector<int> leads;
  };
  std::map<CoarseType, Group> groups;
  Group total, without_person;
  RecallResult result;
  for (const auto& target : targets) {
    if (target.disappearance_year != year) continue;
    std::optional<Day> first;
    for (const auto& alias : target.aliases) {
      const std::string key = form(alias);
      for (auto it = first_seen.lower_bound({key, CoarseType::kPerson});
           it != first_seen.end() && it->first.first == key; ++it) {
        if (options.match_type && it->first.second != target.coarse_type) continue;
        if (!first || it->second < *first) first = it->second;
      }
    }
    const bool person = target.coarse_type == CoarseType::kPerson;
    for (Group* g : {&groups[target.coarse_type], &total}) ++g->targets;
    if (!person) ++without_person.targets;
    if (!first) continue;
    result.found.push_back(target.canonical_name);
    for (Group* g : {&groups[target.coarse_type], &total}) ++g->found;
    if (!person) ++without_person.found;
    auto update = update_days.find(target.canonical_name);
    if (update == update_days.end()) continue;
    DetectionEvent event{target.canonical_name, *first, update->second};
    const int lead = LeadDays(event);
    result.events.push_back(std::move(event));
    for (Group* g : {&groups[target.coarse_type], &total}) g->leads.push_back(lead);
    if (!person) without_person.leads.push_back(lead);
  }

  auto row = [](std::string label, const Group& g) {
    ImmediacyRow r;
    r.label = std::move(label);
    r.targets = g.targets;
    r.found = g.found;
    r.ratio = g.targets ? static_cast<double>(g.found) / g.targets : 0.0;
    r.lead = AggregateLeads(g.leads);
    return r;
  };
  for (CoarseType type : kAllCoarseTypes) {
    auto it = groups.find(type);
    if (it != groups.end()) result.report.rows.push_back(row(std::string(CoarseTypeName(type)), it->second));
  }
  result.report.rows.push_back(row("TOTAL", total));
  result.report.rows.push_back(row("TOTAL-without-PERSON", without_person));
  return result;
}

std::map<std::string, Day> ReadUpdateDates(std::istream& in, const std::string& source) {
  std::map<std::string, Day> dates;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = text::Split(line, '\t');
    if (lineno == 1 && cells[0] == "canonical_name") continue;
    if (cells.size() != 2) throw FormatError(source, lineno, "expected name<TAB>YYYY-MM-DD");
    auto day = Day::Parse(cells[1]);
    if (!day) throw FormatError(source, lineno, "invalid date '" + cells[1] + "'");
    dates[text::NormalizeSpace(cells[0])] = *day;
  }
  return dates;
}

std::map<std::string, Day> LoadUpdateDates(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open update dates " + path);
  return ReadUpdateDates(in, path);
}

void WriteUpdateDates(std::ostream& out, const std::map<std::string, Day>& dates) {
  out << "canonical_name\tupdate_day\n";
  for (const auto& [name, day] : dates) out << name << '\t' << day.ToString() << '\n';
}

double FleissKappa(const std::vector<std::vector<int>>& ratings, int raters) {
  if (raters < 2) throw ArgumentError("Fleiss' kappa needs at least two raters per item");
  if (ratings.empty()) throw ArgumentError("Fleiss' kappa needs at least one item");
  const std::size_t categories = ratings[0].size();
  std::vector<double> column(categories, 0.0);
  double p_bar = 0.0;
  for (std::size_t i = 0; i < ratings.size(); ++i) {
    const auto& row = ratings[i];
    if (row.size() != categories) throw ArgumentError("ragged rating matrix");
    long sum = 0, squares = 0;
    for (std::size_t j = 0; j < categories; ++j) {
      if (row[j] < 0) throw ArgumentError("negative rating count");
      sum += row[j];
      squares += static_cast<long>(row[j]) * row[j];
      column[j] += row[j];
    }
    if (sum != raters) {
      throw ArgumentError("item " + std::to_string(i) + " has " + std::to_string(sum) +
                          " ratings, expected " + std::to_string(raters));
    }
    p_bar += static_cast<double>(squares - raters) / (static_cast<double>(raters) * (raters - 1));
  }
  p_bar /= ratings.size();
  const double total = static_cast<double>(ratings.size()) * raters;
  double p_e = 0.0;
  for (double c : column) p_e += (c / total) * (c / total);
  if (p_e >= 1.0) return 1.0;
  return (p_bar - p_e) / (1.0 - p_e);
}

}  // namespace fader::evaluation
