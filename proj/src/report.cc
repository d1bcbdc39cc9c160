#include <cstdio>
#include <sstream>

#include "fader/error.h"
#include "fader/evaluation.h"
#include "fader/text.h"
#include "json.hpp"

namespace fader::evaluation {

namespace {

using json = nlohmann::ordered_json;

std::string G6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string Fixed(double v, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

json PrfToJson(const Prf& p) {
  return json{{"tp", p.tp},           {"fp", p.fp},         {"fn", p.fn},
              {"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}};
}

Prf PrfFromJson(const json& j) {
  Prf p;
  p.tp = j.at("tp").get<std::size_t>();
  p.fp = j.at("fp").get<std::size_t>();
  p.fn = j.at("fn").get<std::size_t>();
  p.precision = j.at("precision").get<double>();
  p.recall = j.at("recall").get<double>();
  p.f1 = j.at("f1").get<double>();
  return p;
}

// Pads every column to its widest cell; the first column is left-aligned.
std::string Table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& r : rows) {
    width.resize(std::max(width.size(), r.size()));
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  std::string out;
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      const std::string pad(width[c] - r[c].size(), ' ');
      if (c) out += "  ";
      out += c == 0 ? r[c] + pad : pad + r[c];
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += '\n';
  }
  return out;
}

std::vector<std::string> Cells(const std::string& line) { return text::Split(line, '\t'); }

}  // namespace

std::optional<ReportFormat> ParseReportFormat(const std::string& name) {
  if (name == "text") return ReportFormat::kText;
  if (name == "json") return ReportFormat::kJson;
  if (name == "tsv") return ReportFormat::kTsv;
  return std::nullopt;
}

std::string RenderReport(const EvalReport& report, ReportFormat format) {
  std::vector<std::pair<std::string, Prf>> rows;
  for (const auto& [type, prf] : report.per_type) rows.emplace_back(CoarseTypeName(type), prf);
  rows.emplace_back("MICRO", report.micro);

  switch (format) {
    case ReportFormat::kJson: {
      json per_type = json::object();
      for (const auto& [type, prf] : report.per_type) per_type[std::string(CoarseTypeName(type))] = PrfToJson(prf);
      return json{{"micro", PrfToJson(report.micro)}, {"per_type", per_type}}.dump(2) + "\n";
    }
    case ReportFormat::kTsv: {
      std::string out = "type\tprecision\trecall\tf1\ttp\tfp\tfn\n";
      for (const auto& [label, p] : rows) {
        out += label + '\t' + G6(p.precision) + '\t' + G6(p.recall) + '\t' + G6(p.f1) + '\t' +
               std::to_string(p.tp) + '\t' + std::to_string(p.fp) + '\t' + std::to_string(p.fn) + '\n';
      }
      return out;
    }
    case ReportFormat::kText:
    default: {
      std::vector<std::vector<std::string>> table = {{"type", "P", "R", "F1", "TP", "FP", "FN"}};
      for (const auto& [label, p] : rows) {
        table.push_back({label, Fixed(p.precision, 3), Fixed(p.recall, 3), Fixed(p.f1, 3),
                         std::to_string(p.tp), std::to_string(p.fp), std::to_string(p.fn)});
      }
      return Table(table);
    }
  }
}

std::string RenderReport(const ImmediacyReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::kJson: {
      json rows = json::array();
      for (const auto& r : report.rows) {
        rows.push_back({{"label", r.label},
                        {"targets", r.targets},
                        {"found", r.found},
                        {"ratio", r.ratio},
                        {"mean_lead", r.lead ? json(r.lead->mean) : json(nullptr)},
                        {"median_lead", r.lead ? json(r.lead->median) : json(nullptr)}});
      }
      return json{{"rows", rows}}.dump(2) + "\n";
    }
    case ReportFormat::kTsv: {
      std::string out = "type\ttargets\tfound\tratio\tmean_lead\tmedian_lead\n";
      for (const auto& r : report.rows) {
        out += r.label + '\t' + std::to_string(r.targets) + '\t' + std::to_string(r.found) + '\t' +
               G6(r.ratio) + '\t' + (r.lead ? G6(r.lead->mean) : "-") + '\t' +
               (r.lead ? G6(r.lead->median) : "-") + '\n';
      }
      return out;
    }
    case ReportFormat::kText:
    default: {
      std::vector<std::vector<std::string>> table = {
          {"type", "#entities", "#found(%)", "mean lead", "median lead"}};
      for (const auto& r : report.rows) {
        table.push_back({r.label, std::to_string(r.targets),
                         std::to_string(r.found) + " (" + Fixed(100.0 * r.ratio, 2) + "%)",
                         r.lead ? Fixed(r.lead->mean, 1) : "-", r.lead ? Fixed(r.lead->median, 1) : "-"});
      }
      return Table(table);
    }
  }
}

EvalReport EvalReportFromJson(const std::string& text) {
  try {
    const auto j = json::parse(text);
    EvalReport report;
    report.micro = PrfFromJson(j.at("micro"));
    for (const auto& [name, value] : j.at("per_type").items()) {
      auto type = ParseCoarseType(name);
      if (!type) throw FormatError("report", 0, "unknown type " + name);
      report.per_type[*type] = PrfFromJson(value);
    }
    return report;
  } catch (const json::exception& e) {
    throw FormatError("report", 0, e.what());
  }
}

ImmediacyReport ImmediacyReportFromJson(const std::string& text) {
  try {
    const auto j = json::parse(text);
    ImmediacyReport report;
    for (const auto& r : j.at("rows")) {
      ImmediacyRow row;
      row.label = r.at("label").get<std::string>();
      row.targets = r.at("targets").get<std::size_t>();
      row.found = r.at("found").get<std::size_t>();
      row.ratio = r.at("ratio").get<double>();
      if (!r.at("mean_lead").is_null()) {
        row.lead = LeadStats{r.at("mean_lead").get<double>(), r.at("median_lead").get<double>()};
      }
      report.rows.push_back(std::move(row));
    }
    return report;
  } catch (const json::exception& e) {
    throw FormatError("report", 0, e.what());
  }
}

ImmediacyReport ImmediacyReportFromTsv(const std::string& tsv) {
  std::istringstream in(tsv);
  std::string line;
  std::size_t lineno = 0;
  ImmediacyReport report;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 || line.empty()) continue;
    auto cells = Cells(line);
    if (cells.size() != 6) throw FormatError("report.tsv", lineno, "expected 6 columns");
    try {
      ImmediacyRow row;
      row.label = cells[0];
      row.targets = std::stoul(cells[1]);
      row.found = std::stoul(cells[2]);
      row.ratio = std::stod(cells[3]);
      if (cells[4] != "-") row.lead = LeadStats{std::stod(cells[4]), std::stod(cells[5])};
      report.rows.push_back(std::move(row));
    } catch (const std::logic_error&) {
      throw FormatError("report.tsv", lineno, "invalid number");
    }
  }
  return report;
}

}  // namespace fader::evaluation
