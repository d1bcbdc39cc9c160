#include "fader/embeddings.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "fader/binio.h"
#include "fader/error.h"
#include "fader/rng.h"
#include "fader/subword.h"

namespace fader::embeddings {

namespace {

constexpr double kFinalLr = 1e-4;
constexpr char kBinaryMagic[] = "FADEMB01";
constexpr char kDayTableMagic[] = "FADEDAY1";

using Token = std::vector<std::uint32_t>;  // composing input rows

// Shared update machinery for base training and refinement.
class Trainer {
 public:
  Trainer(EmbeddingModel& model, int window, int negatives, std::uint64_t seed)
      : m_(model), window_(window), negatives_(negatives), rng_(seed) {
    double total = 0.0;
    for (auto c : m_.counts) {
      total += std::pow(static_cast<double>(c), 0.75);
      cumulative_.push_back(total);
    }
    const int dim = m_.config.dim;
    u_.resize(1 + negatives_, dim);
    h_.resize(dim);
  }

  // One pass of skip-gram steps centred on every position. `contexts[i]` is
  // the vocabulary id usable as a context word (or -1).
  void Sentence(const std::vector<const Token*>& rows, const std::vector<std::int64_t>& contexts,
                float lr) {
    const auto n = static_cast<std::int64_t>(rows.size());
    for (std::int64_t t = 0; t < n; ++t) {
      if (rows[t]->empty()) continue;
      const auto radius = static_cast<std::int64_t>(1 + rng_.Below(window_));
      for (std::int64_t c = t - radius; c <= t + radius; ++c) {
        if (c == t || c < 0 || c >= n || contexts[c] < 0) continue;
        Step(*rows[t], static_cast<std::uint32_t>(contexts[c]), lr);
      }
    }
  }

 private:
  std::uint32_t SampleNegative(std::uint32_t avoid) {
    for (;;) {
      const double r = rng_.Uniform() * cumulative_.back();
      auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), r);
      auto id = static_cast<std::uint32_t>(std::min<std::size_t>(it - cumulative_.begin(),
                                                                  cumulative_.size() - 1));
      if (id != avoid) return id;
    }
  }

  void Step(const Token& rows, std::uint32_t context, float lr) {
    h_.setZero();
    for (auto r : rows) h_ += m_.input.row(r).transpose();
    h_ /= static_cast<float>(rows.size());

    ids_.assign(1, context);
    if (m_.words.size() > 1) {
      for (int j = 0; j < negatives_; ++j) ids_.push_back(SampleNegative(context));
    }
    u_.conservativeResize(static_cast<Eigen::Index>(ids_.size()), Eigen::NoChange);
    for (std::size_t j = 0; j < ids_.size(); ++j) u_.row(j) = m_.output.row(ids_[j]);
    SkipGramPairLoss<float>(h_, u_, &grad_h_, &grad_u_);

    for (std::size_t j = 0; j < ids_.size(); ++j) m_.output.row(ids_[j]) -= lr * grad_u_.row(j);
    // Each composing row moves by the gradient with respect to h rather than
    // its 1/(1+n) share, as in the reference subword trainer.
    for (auto r : rows) m_.input.row(r) -= lr * grad_h_.transpose();
  }

  EmbeddingModel& m_;
  int window_;
  int negatives_;
  Rng rng_;
  std::vector<double> cumulative_;
  std::vector<std::uint32_t> ids_;
  Matrix u_, grad_u_;
  Vector h_, grad_h_;
};

void BuildWordIds(EmbeddingModel& m) {
  m.word_ids.clear();
  for (std::uint32_t i = 0; i < m.words.size(); ++i) m.word_ids.emplace(m.words[i], i);
}

void WriteRow(std::ostream& out, const float* row, int dim) {
  char buf[32];
  for (int d = 0; d < dim; ++d) {
    std::snprintf(buf, sizeof buf, " %.9g", static_cast<double>(row[d]));
    out << buf;
  }
  out << '\n';
}

}  // namespace

void EmbeddingConfig::Validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("embeddings: ") + what);
  };
  require(dim > 0, "dim must be positive");
  require(window >= 1, "window must be at least 1");
  require(negatives >= 0, "negatives must be non-negative");
  require(min_count >= 1, "min_count must be at least 1");
  require(ngram_min >= 1 && ngram_min <= ngram_max, "need 1 <= ngram_min <= ngram_max");
  require(buckets > 0 && (buckets & (buckets - 1)) == 0, "buckets must be a power of two");
  require(epochs_base >= 0 && epochs_refine >= 0, "epochs must be non-negative");
  require(lr_base > 0 && lr_refine > 0, "learning rates must be positive");
}

std::optional<std::uint32_t> EmbeddingModel::WordId(const std::string& word) const {
  auto it = word_ids.find(word);
  if (it == word_ids.end()) return std::nullopt;
  return it->second;
}

std::vector<std::uint32_t> EmbeddingModel::InputRows(const std::string& word) const {
  std::vector<std::uint32_t> rows;
  if (auto id = WordId(word)) rows.push_back(*id);
  const auto base = static_cast<std::uint32_t>(words.size());
  for (auto b : subword::Buckets(word, config.ngram_min, config.ngram_max, config.buckets)) {
    rows.push_back(base + b);
  }
  return rows;
}

EmbeddingModel TrainBase(const std::vector<Sentence>& corpus, const EmbeddingConfig& cfg) {
  cfg.Validate();
  std::unordered_map<std::string, std::uint64_t> freq;
  for (const auto& sentence : corpus) {
    for (const auto& w : sentence) ++freq[w];
  }
  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (auto& [w, c] : freq) {
    if (c >= static_cast<std::uint64_t>(cfg.min_count)) kept.emplace_back(w, c);
  }
  if (kept.empty()) throw ArgumentError("embedding corpus has no word reaching min_count");
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });

  EmbeddingModel m;
  m.config = cfg;
  for (auto& [w, c] : kept) {
    m.words.push_back(w);
    m.counts.push_back(c);
  }
  BuildWordIds(m);
  const auto vocab = static_cast<Eigen::Index>(m.words.size());
  m.input = Matrix::Zero(vocab + cfg.buckets, cfg.dim);
  m.output = Matrix::Zero(vocab, cfg.dim);
  Rng init(DeriveSeed(cfg.seed, "embedding-init"));
  const double bound = 1.0 / cfg.dim;
  for (Eigen::Index r = 0; r < vocab; ++r) {
    for (int d = 0; d < cfg.dim; ++d) m.input(r, d) = static_cast<float>(init.Uniform(-bound, bound));
  }

  std::vector<Token> rows(m.words.size());
  for (std::uint32_t i = 0; i < m.words.size(); ++i) rows[i] = m.InputRows(m.words[i]);
  std::vector<std::vector<std::uint32_t>> encoded;
  std::uint64_t tokens = 0;
  for (const auto& sentence : corpus) {
    std::vector<std::uint32_t> ids;
    for (const auto& w : sentence) {
      if (auto id = m.WordId(w)) ids.push_back(*id);
    }
    tokens += ids.size();
    encoded.push_back(std::move(ids));
  }

  Trainer trainer(m, cfg.window, cfg.negatives, DeriveSeed(cfg.seed, "embedding-base"));
  const double total = static_cast<double>(tokens) * cfg.epochs_base;
  std::uint64_t seen = 0;
  std::vector<const Token*> sentence_rows;
  std::vector<std::int64_t> contexts;
  for (int epoch = 0; epoch < cfg.epochs_base; ++epoch) {
    for (const auto& ids : encoded) {
      const double progress = total > 0 ? std::min(1.0, seen / total) : 0.0;
      const auto lr = static_cast<float>(cfg.lr_base + (kFinalLr - cfg.lr_base) * progress);
      sentence_rows.clear();
      contexts.clear();
      for (auto id : ids) {
        sentence_rows.push_back(&rows[id]);
        contexts.push_back(id);
      }
      trainer.Sentence(sentence_rows, contexts, lr);
      seen += ids.size();
    }
  }
  return m;
}

EmbeddingModel RefineForDay(const EmbeddingModel& base, const std::vector<Sentence>& day_stream,
                            Day day, const EmbeddingConfig& cfg) {
  cfg.Validate();
  if (base.refined_day) throw ArgumentError("refinement must start from a base model");
  if (!base.trainable()) {
    throw ArgumentError("base model lacks training state; load it from the binary format");
  }
  EmbeddingModel m = base;
  m.refined_day = day;

  std::map<std::string, Token> cache;
  std::vector<std::vector<const Token*>> rows;
  std::vector<std::vector<std::int64_t>> contexts;
  for (const auto& sentence : day_stream) {
    std::vector<const Token*> r;
    std::vector<std::int64_t> c;
    for (const auto& w : sentence) {
      auto it = cache.find(w);
      if (it == cache.end()) it = cache.emplace(w, m.InputRows(w)).first;
      r.push_back(&it->second);
      auto id = m.WordId(w);
      c.push_back(id ? static_cast<std::int64_t>(*id) : -1);
    }
    rows.push_back(std::move(r));
    contexts.push_back(std::move(c));
  }

  Trainer trainer(m, cfg.window, cfg.negatives,
                  DeriveSeed(cfg.seed, "embedding-refine:" + day.ToString()));
  for (int epoch = 0; epoch < cfg.epochs_refine; ++epoch) {
    for (std::size_t s = 0; s < rows.size(); ++s) {
      trainer.Sentence(rows[s], contexts[s], static_cast<float>(cfg.lr_refine));
    }
  }
  return m;
}

LookupResult Lookup(const EmbeddingModel& model, const std::string& word) {
  LookupResult result;
  result.vector = Vector::Zero(model.config.dim);
  const auto rows = model.InputRows(word);
  result.in_vocab = model.WordId(word).has_value();
  if (rows.empty()) {
    result.empty = true;
    return result;
  }
  for (auto r : rows) result.vector += model.input.row(r).transpose();
  result.vector /= static_cast<float>(rows.size());
  return result;
}

double Similarity(const EmbeddingModel& model, const std::string& a, const std::string& b) {
  const Eigen::VectorXd x = Lookup(model, a).vector.cast<double>();
  const Eigen::VectorXd y = Lookup(model, b).vector.cast<double>();
  const double nx = x.norm(), ny = y.norm();
  if (nx == 0.0 || ny == 0.0) return 0.0;
  return std::clamp(x.dot(y) / (nx * ny), -1.0, 1.0);
}

void WriteText(std::ostream& out, const EmbeddingModel& model) {
  const auto& c = model.config;
  out << model.words.size() << ' ' << c.dim << ' ' << c.buckets << ' ' << c.ngram_min << ' '
      << c.ngram_max << '\n';
  for (std::size_t i = 0; i < model.words.size(); ++i) {
    out << model.words[i];
    WriteRow(out, model.input.row(i).data(), c.dim);
  }
  const auto vocab = static_cast<Eigen::Index>(model.words.size());
  for (std::uint32_t b = 0; b < c.buckets; ++b) {
    const auto row = model.input.row(vocab + b);
    if (row.isZero(0.0)) continue;
    out << '#' << b;
    WriteRow(out, row.data(), c.dim);
  }
}

EmbeddingModel ReadText(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t lineno = 0;
  auto next = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  auto fail = [&](const std::string& what) { return FormatError(source, lineno, what); };

  if (!next()) throw fail("missing header");
  EmbeddingModel m;
  std::size_t vocab = 0;
  {
    std::istringstream header(line);
    auto& c = m.config;
    if (!(header >> vocab >> c.dim >> c.buckets >> c.ngram_min >> c.ngram_max)) {
      throw fail("header must be '<vocab> <dim> <buckets> <ngram_min> <ngram_max>'");
    }
    try {
      c.Validate();
    } catch (const ConfigError& e) {
      throw fail(e.what());
    }
  }
  const int dim = m.config.dim;
  m.input = Matrix::Zero(static_cast<Eigen::Index>(vocab) + m.config.buckets, dim);

  auto parse_row = [&](std::istringstream& cells, Eigen::Index row) {
    for (int d = 0; d < dim; ++d) {
      float v;
      if (!(cells >> v) || !std::isfinite(v)) throw fail("expected " + std::to_string(dim) + " finite values");
      m.input(row, d) = v;
    }
    std::string extra;
    if (cells >> extra) throw fail("too many values");
  };

  for (std::size_t i = 0; i < vocab; ++i) {
    if (!next()) throw fail("expected " + std::to_string(vocab) + " word rows");
    std::istringstream cells(line);
    std::string word;
    cells >> word;
    if (word.empty()) throw fail("empty word");
    m.words.push_back(word);
    parse_row(cells, static_cast<Eigen::Index>(i));
  }
  while (next()) {
    if (line.empty()) continue;
    std::istringstream cells(line);
    std::string key;
    cells >> key;
    std::uint64_t b = 0;
    if (key.size() < 2 || key[0] != '#' ||
        key.find_first_not_of("0123456789", 1) != std::string::npos ||
        (b = std::stoull(key.substr(1))) >= m.config.buckets) {
      throw fail("expected '#<bucket id>' row");
    }
    parse_row(cells, static_cast<Eigen::Index>(vocab + b));
  }
  BuildWordIds(m);
  if (m.word_ids.size() != m.words.size()) throw FormatError(source, 0, "duplicate words");
  return m;
}

void WriteBinary(std::ostream& out, const EmbeddingModel& model) {
  binio::Writer w(out);
  w.PutRaw(std::string(kBinaryMagic, 8));
  const auto& c = model.config;
  for (int v : {c.dim, c.window, c.negatives, c.min_count, c.ngram_min, c.ngram_max,
                c.epochs_base, c.epochs_refine}) {
    w.Put<std::int32_t>(v);
  }
  w.Put<std::uint32_t>(c.buckets);
  w.Put<double>(c.lr_base);
  w.Put<double>(c.lr_refine);
  w.Put<std::uint64_t>(c.seed);
  w.Put<std::uint8_t>(model.refined_day ? 1 : 0);
  w.Put<std::int32_t>(model.refined_day ? model.refined_day->serial() : 0);
  w.Put<std::uint64_t>(model.words.size());
  for (std::size_t i = 0; i < model.words.size(); ++i) {
    w.PutString(model.words[i]);
    w.Put<std::uint64_t>(i < model.counts.size() ? model.counts[i] : 0);
  }
  w.Put<std::uint8_t>(model.trainable() ? 1 : 0);
  w.PutFloats(model.input.data(), model.input.size());
  if (model.trainable()) w.PutFloats(model.output.data(), model.output.size());
}

EmbeddingModel ReadBinary(std::istream& in, const std::string& source) {
  binio::Reader r(in, source);
  r.Expect(std::string(kBinaryMagic, 8));
  EmbeddingModel m;
  auto& c = m.config;
  for (int* v : {&c.dim, &c.window, &c.negatives, &c.min_count, &c.ngram_min, &c.ngram_max,
                 &c.epochs_base, &c.epochs_refine}) {
    *v = r.Get<std::int32_t>();
  }
  c.buckets = r.Get<std::uint32_t>();
  c.lr_base = r.Get<double>();
  c.lr_refine = r.Get<double>();
  c.seed = r.Get<std::uint64_t>();
  try {
    c.Validate();
  } catch (const ConfigError& e) {
    r.Fail(e.what());
  }
  const bool refined = r.Get<std::uint8_t>() != 0;
  const auto serial = r.Get<std::int32_t>();
  if (refined) m.refined_day = Day(serial);
  const auto vocab = r.Get<std::uint64_t>();
  if (vocab > (1u << 28)) r.Fail("vocabulary size out of range");
  for (std::uint64_t i = 0; i < vocab; ++i) {
    m.words.push_back(r.GetString());
    m.counts.push_back(r.Get<std::uint64_t>());
  }
  const bool trainable = r.Get<std::uint8_t>() != 0;
  m.input.resize(static_cast<Eigen::Index>(vocab) + c.buckets, c.dim);
  r.GetFloats(m.input.data(), m.input.size());
  if (trainable) {
    m.output.resize(static_cast<Eigen::Index>(vocab), c.dim);
    r.GetFloats(m.output.data(), m.output.size());
  } else {
    m.counts.clear();
  }
  if (!m.input.allFinite() || !m.output.allFinite()) r.Fail("non-finite vector component");
  BuildWordIds(m);
  if (m.word_ids.size() != m.words.size()) r.Fail("duplicate words");
  return m;
}

void SaveText(const std::string& path, const EmbeddingModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  WriteText(out, model);
  if (!out) throw IoError("write failed for " + path);
}

EmbeddingModel LoadText(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return ReadText(in, path);
}

void SaveBinary(const std::string& path, const EmbeddingModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  WriteBinary(out, model);
  if (!out) throw IoError("write failed for " + path);
}

EmbeddingModel LoadBinary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return ReadBinary(in, path);
}

void DayVectorTable::Add(const EmbeddingModel& refined, const std::vector<std::string>& keys) {
  if (!refined.refined_day) throw ArgumentError("day table needs a refined model");
  if (refined.config.dim != dim_) throw ArgumentError("refined model dimension differs from the table");
  auto& day = days_[*refined.refined_day];
  for (const auto& key : keys) {
    if (!day.count(key)) day.emplace(key, Lookup(refined, key).vector);
  }
}

void DayVectorTable::Put(Day day, std::string key, Vector vector) {
  if (vector.size() != dim_) throw ArgumentError("vector dimension differs from the table");
  days_[day][std::move(key)] = std::move(vector);
}

std::vector<std::string> DayVectorTable::Keys(Day day) const {
  std::vector<std::string> out;
  auto d = days_.find(day);
  if (d == days_.end()) return out;
  for (const auto& [key, _] : d->second) out.push_back(key);
  return out;
}

std::optional<Vector> DayVectorTable::Find(Day day, const std::string& key) const {
  auto d = days_.find(day);
  if (d == days_.end()) return std::nullopt;
  auto v = d->second.find(key);
  if (v == d->second.end()) return std::nullopt;
  return v->second;
}

std::vector<Day> DayVectorTable::Days() const {
  std::vector<Day> out;
  for (const auto& [day, _] : days_) out.push_back(day);
  return out;
}

std::size_t DayVectorTable::size() const {
  std::size_t n = 0;
  for (const auto& [_, keys] : days_) n += keys.size();
  return n;
}

bool DayVectorTable::operator==(const DayVectorTable& other) const {
  if (dim_ != other.dim_ || days_.size() != other.days_.size()) return false;
  for (auto a = days_.begin(), b = other.days_.begin(); a != days_.end(); ++a, ++b) {
    if (a->first != b->first || a->second.size() != b->second.size()) return false;
    for (auto x = a->second.begin(), y = b->second.begin(); x != a->second.end(); ++x, ++y) {
      if (x->first != y->first || x->second != y->second) return false;
    }
  }
  return true;
}

void WriteDayTable(std::ostream& out, const DayVectorTable& table) {
  binio::Writer w(out);
  w.PutRaw(std::string(kDayTableMagic, 8));
  w.Put<std::int32_t>(table.dim());
  const auto days = table.Days();
  w.Put<std::uint64_t>(days.size());
  for (Day day : days) {
    w.Put<std::int32_t>(day.serial());
    const auto keys = table.Keys(day);
    w.Put<std::uint64_t>(keys.size());
    for (const auto& key : keys) {
      w.PutString(key);
      const Vector v = *table.Find(day, key);
      w.PutFloats(v.data(), v.size());
    }
  }
}

DayVectorTable ReadDayTable(std::istream& in, const std::string& source) {
  binio::Reader r(in, source);
  r.Expect(std::string(kDayTableMagic, 8));
  const auto dim = r.Get<std::int32_t>();
  if (dim < 1 || dim > (1 << 16)) r.Fail("dimension out of range");
  DayVectorTable table(dim);
  const auto days = r.Get<std::uint64_t>();
  std::optional<Day> previous;
  for (std::uint64_t d = 0; d < days; ++d) {
    const Day day(r.Get<std::int32_t>());
    if (previous && !(*previous < day)) r.Fail("days out of order");
    previous = day;
    const auto keys = r.Get<std::uint64_t>();
    for (std::uint64_t k = 0; k < keys; ++k) {
      auto key = r.GetString();
      Vector v(dim);
      r.GetFloats(v.data(), v.size());
      if (!v.allFinite()) r.Fail("non-finite vector for " + key);
      table.Put(day, std::move(key), std::move(v));
    }
  }
  if (!r.AtEnd()) r.Fail("trailing bytes");
  return table;
}

void SaveDayTable(const std::string& path, const DayVectorTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  WriteDayTable(out, table);
  if (!out) throw IoError("write failed for " + path);
}

DayVectorTable LoadDayTable(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return ReadDayTable(in, path);
}

DayRefiner::DayRefiner(const EmbeddingModel& base, StreamFn streams, EmbeddingConfig cfg)
    : base_(base), streams_(std::move(streams)), cfg_(std::move(cfg)) {}

const EmbeddingModel* DayRefiner::ForDay(Day day) {
  if (day_ && *day_ == day) return model_ ? &*model_ : nullptr;
  day_ = day;
  model_.reset();
  auto stream = streams_(day);
  if (!stream.empty()) model_ = RefineForDay(base_, stream, day, cfg_);
  return model_ ? &*model_ : nullptr;
}

}  // namespace fader::embeddings
