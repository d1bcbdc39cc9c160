#ifndef FADER_EMBEDDINGS_H_
#define FADER_EMBEDDINGS_H_

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "fader/day.h"

namespace fader::embeddings {

struct EmbeddingConfig {
  int dim = 300;
  int window = 5;
  int negatives = 5;
  int min_count = 5;
  int ngram_min = 3;
  int ngram_max = 6;
  std::uint32_t buckets = 1u << 21;
  int epochs_base = 5;
  int epochs_refine = 1;
  double lr_base = 0.05;
  double lr_refine = 0.01;
  std::uint64_t seed = 1;

  // Throws ConfigError when an invariant does not hold.
  void Validate() const;
};

using Matrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXf;

// A sentence is a token list; callers apply their own case policy.
using Sentence = std::vector<std::string>;

struct EmbeddingModel {
  EmbeddingConfig config;
  std::vector<std::string> words;           // row order
  std::vector<std::uint64_t> counts;        // base-corpus frequencies
  std::unordered_map<std::string, std::uint32_t> word_ids;
  Matrix input;   // (|words| + buckets) x dim; word rows first
  Matrix output;  // |words| x dim; empty for models read from text
  std::optional<Day> refined_day;  // nullopt for a base model

  std::size_t vocab_size() const { return words.size(); }
  std::optional<std::uint32_t> WordId(const std::string& word) const;
  // Input rows composing a word: its own row (if in vocabulary) followed by
  // its n-gram bucket rows.
  std::vector<std::uint32_t> InputRows(const std::string& word) const;
  bool trainable() const { return output.rows() == static_cast<Eigen::Index>(words.size()); }
};

// Skip-gram negative-sampling loss of one (target, context) pair:
// -log s(u_0.h) - sum_{j>0} log s(-u_j.h), where row 0 of `u` is the context
// and the remaining rows are negatives. Writes exact gradients when asked.
template <typename T>
T SkipGramPairLoss(const Eigen::Matrix<T, Eigen::Dynamic, 1>& h,
                   const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& u,
                   Eigen::Matrix<T, Eigen::Dynamic, 1>* grad_h,
                   Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>* grad_u) {
  T loss = 0;
  if (grad_h) grad_h->setZero(h.size());
  if (grad_u) grad_u->setZero(u.rows(), u.cols());
  for (Eigen::Index j = 0; j < u.rows(); ++j) {
    const T label = j == 0 ? T(1) : T(0);
    const T x = u.row(j).dot(h);
    const T z = j == 0 ? x : -x;
    // -log s(z), computed without overflow.
    loss += z >= 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
    const T sig = x >= 0 ? T(1) / (T(1) + std::exp(-x)) : std::exp(x) / (T(1) + std::exp(x));
    const T g = sig - label;  // d loss / d x
    if (grad_h) *grad_h += g * u.row(j).transpose();
    if (grad_u) grad_u->row(j) = g * h.transpose();
  }
  return loss;
}

// Skip-gram with negative sampling over subword-composed inputs.
// Single-threaded and deterministic for a given seed. Throws ArgumentError
// when no word reaches min_count.
EmbeddingModel TrainBase(const std::vector<Sentence>& corpus, const EmbeddingConfig& cfg);

// Copy of `base` further trained on one day's sentences with the refinement
// schedule from `cfg`. Vocabulary stays frozen; out-of-vocabulary targets
// update only their n-gram rows.
EmbeddingModel RefineForDay(const EmbeddingModel& base, const std::vector<Sentence>& day_stream,
                            Day day, const EmbeddingConfig& cfg);

struct LookupResult {
  Vector vector;
  bool in_vocab = false;
  bool empty = false;  // no word row and no n-grams: zero vector
};

LookupResult Lookup(const EmbeddingModel& model, const std::string& word);
// Cosine of the two lookups, 0 when either vector is zero.
double Similarity(const EmbeddingModel& model, const std::string& a, const std::string& b);

// Text interchange format: header "<vocab> <dim> <buckets> <nmin> <nmax>",
// one line per word, then "#<bucket> v.." for every nonzero bucket row.
void WriteText(std::ostream& out, const EmbeddingModel& model);
EmbeddingModel ReadText(std::istream& in, const std::string& source);
// Binary format with full training state (output rows, counts, config).
void WriteBinary(std::ostream& out, const EmbeddingModel& model);
EmbeddingModel ReadBinary(std::istream& in, const std::string& source);

void SaveText(const std::string& path, const EmbeddingModel& model);
EmbeddingModel LoadText(const std::string& path);
void SaveBinary(const std::string& path, const EmbeddingModel& model);
EmbeddingModel LoadBinary(const std::string& path);

// Refined vectors of selected keys on selected days. The compact artifact of
// refining every day a dataset touches.
class DayVectorTable {
 public:
  explicit DayVectorTable(int dim = 0) : dim_(dim) {}

  int dim() const { return dim_; }
  // Stores Lookup(refined, key) for every key under the model's refined day.
  void Add(const EmbeddingModel& refined, const std::vector<std::string>& keys);
  bool Covers(Day day) const { return days_.count(day) != 0; }
  std::optional<Vector> Find(Day day, const std::string& key) const;
  void Put(Day day, std::string key, Vector vector);
  std::vector<Day> Days() const;
  std::vector<std::string> Keys(Day day) const;  // sorted
  std::size_t size() const;  // stored vectors

  bool operator==(const DayVectorTable& other) const;

 private:
  int dim_;
  std::map<Day, std::map<std::string, Vector>> days_;
};

// Binary "FADEDAY1": dim, then per day its serial and (key, vector) pairs.
void WriteDayTable(std::ostream& out, const DayVectorTable& table);
DayVectorTable ReadDayTable(std::istream& in, const std::string& source);
void SaveDayTable(const std::string& path, const DayVectorTable& table);
DayVectorTable LoadDayTable(const std::string& path);

// Refines on demand and keeps the most recent day, so callers walking days in
// order refine each day once.
class DayRefiner {
 public:
  using StreamFn = std::function<std::vector<Sentence>(Day)>;

  DayRefiner(const EmbeddingModel& base, StreamFn streams, EmbeddingConfig cfg);

  // nullptr when the day has no posts.
  const EmbeddingModel* ForDay(Day day);

 private:
  const EmbeddingModel& base_;
  StreamFn streams_;
  EmbeddingConfig cfg_;
  std::optional<Day> day_;
  std::optional<EmbeddingModel> model_;
};

}  // namespace fader::embeddings

#endif  // FADER_EMBEDDINGS_H_
