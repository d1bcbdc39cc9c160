#ifndef FADER_TAGGER_H_
#define FADER_TAGGER_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "fader/corpus.h"
#include "fader/crf.h"
#include "fader/embeddings.h"
#include "fader/evaluation.h"
#include "fader/gru.h"
#include "fader/supervision.h"
#include "fader/tagset.h"
#include "fader/tensor.h"

namespace fader::tagger {

// What stack B sees: refined day vectors, or nothing (hidden states zeroed).
enum class StackBMode { kRefined, kZeroed };

struct TaggerConfig {
  int word_hidden = 256;
  int char_emb = 30;
  int char_hidden = 64;
  double dropout = 0.5;
  double lr = 0.01;
  double lr_floor = 1e-4;
  int lr_patience = 3;  // epochs without dev improvement before halving
  int batch = 32;
  int max_epochs = 50;
  double clip_norm = 5.0;  // global gradient norm per batch; 0 disables
  bool fold_case = true;   // case policy of embedding lookups
  StackBMode stack_b = StackBMode::kRefined;
  std::uint64_t seed = 1;

  // Throws ConfigError when an invariant does not hold.
  void Validate() const;
  bool operator==(const TaggerConfig&) const = default;
};

// Character inventory; id 0 is reserved for unseen characters.
class CharVocab {
 public:
  CharVocab() = default;
  explicit CharVocab(std::vector<char32_t> chars);
  static CharVocab FromTokens(const std::vector<std::vector<std::string>>& sentences);

  int size() const { return static_cast<int>(chars_.size()) + 1; }
  int Id(char32_t c) const;
  const std::vector<char32_t>& chars() const { return chars_; }
  bool operator==(const CharVocab& other) const { return chars_ == other.chars_; }

 private:
  std::vector<char32_t> chars_;  // sorted
  std::unordered_map<char32_t, int> ids_;
};

struct Dims {
  int chars = 1;
  int char_emb = 1;
  int char_hidden = 1;
  int word_dim = 1;
  int word_hidden = 1;
  int tags = 1;
};

template <typename S>
struct Parameters {
  Mat<S> char_emb;  // chars x char_emb
  gru::Weights<S> char_fwd, char_bwd;
  gru::Weights<S> a_fwd, a_bwd;  // input: 2*char_hidden + word_dim
  gru::Weights<S> b_fwd, b_bwd;  // input: word_dim
  Mat<S> emit_w;  // tags x 4*word_hidden, columns [A fwd, A bwd, B fwd, B bwd]
  Mat<S> emit_b;  // 1 x tags
  crf::Weights<S> crf;

  static Parameters Zero(const Dims& d);

  // Visits every tensor in a fixed order with a stable name.
  template <typename F>
  void ForEach(F&& f) {
    f("char_emb", char_emb);
    auto gru_tensors = [&](const char* prefix, gru::Weights<S>& g) {
      f(std::string(prefix) + ".w", g.w);
      f(std::string(prefix) + ".u", g.u);
      f(std::string(prefix) + ".b", g.b);
    };
    gru_tensors("char_fwd", char_fwd);
    gru_tensors("char_bwd", char_bwd);
    gru_tensors("a_fwd", a_fwd);
    gru_tensors("a_bwd", a_bwd);
    gru_tensors("b_fwd", b_fwd);
    gru_tensors("b_bwd", b_bwd);
    f("emit_w", emit_w);
    f("emit_b", emit_b);
    f("crf.transitions", crf.transitions);
    f("crf.start", crf.start);
    f("crf.end", crf.end);
  }
  template <typename F>
  void ForEach(F&& f) const {
    const_cast<Parameters*>(this)->ForEach([&](const std::string& name, Mat<S>& m) {
      f(name, static_cast<const Mat<S>&>(m));
    });
  }

  template <typename T>
  Parameters<T> Cast() const;
  Dims dims() const;
  double Norm() const;
  bool operator==(const Parameters& other) const;
};

// Token-level inputs that do not depend on trainable parameters.
struct SentenceFeatures {
  std::vector<std::vector<int>> chars;  // character ids per token
  Mat<double> word_a;                   // n x dim, base vectors
  Mat<double> word_b;                   // n x dim, refined vectors for the date
  bool fallback = false;                // no refined model for the date
  std::size_t size() const { return chars.size(); }
};

// Refined vector of a lookup key (already case-folded per policy) on a day,
// or nullopt when no refined model covers that day.
using RefinedProvider = std::function<std::optional<embeddings::Vector>(Day, const std::string&)>;

// Provider over in-memory models; `models` returns nullptr for uncovered days.
RefinedProvider ModelProvider(std::function<const embeddings::EmbeddingModel*(Day)> models);

// Stack A gets base vectors; stack B gets the refined vectors of `date`, or
// base vectors (and the fallback flag) when the provider misses any token.
SentenceFeatures BuildFeatures(const std::vector<std::string>& tokens, Day date,
                               const CharVocab& chars, bool fold_case,
                               const embeddings::EmbeddingModel& base,
                               const RefinedProvider& refined);

// Emission scores (n x tags) without dropout.
template <typename S>
Mat<S> Emissions(const Parameters<S>& params, StackBMode mode, const SentenceFeatures& features);

// CRF negative log-likelihood of the gold path; adds gradients into *grads
// when given. Throws ArgumentError for an illegal gold path.
template <typename S>
S SentenceLoss(const TagSet& tagset, const Parameters<S>& params, StackBMode mode,
               const SentenceFeatures& features, const std::vector<int>& gold,
               Parameters<S>* grads);

struct TaggerModel {
  TagSet tagset;
  TaggerConfig config;
  CharVocab chars;
  Parameters<double> params;  // float32-representable values

  bool operator==(const TaggerModel&) const = default;
};

// Randomly initialised model (values rounded to float32).
TaggerModel InitModel(const TagSet& tagset, const CharVocab& chars, int word_dim,
                      const TaggerConfig& cfg);

struct Prediction {
  TagSequence tags;
  double score = 0.0;
  bool fallback = false;
};

Prediction Predict(const TaggerModel& model, const SentenceFeatures& features);

// Optional character encoder trained elsewhere; replaces the random
// initialisation of the character layers.
struct CharEncoder {
  CharVocab vocab;
  Mat<double> embeddings;
  gru::Weights<double> forward, backward;
};

struct EpochLog {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double dev_f1 = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  TaggerModel model;
  std::vector<EpochLog> log;
  int best_epoch = 0;
};

struct TrainOptions {
  const CharEncoder* char_encoder = nullptr;
  std::function<void(const EpochLog&)> on_epoch;
};

// 1-based index of the first epoch with the highest dev F1.
int SelectBestEpoch(const std::vector<double>& dev_f1);

// Mini-batch SGD over the CRF loss; returns the snapshot of the best dev
// epoch. Throws ArgumentError on empty splits and DivergenceError when the
// loss stops being finite.
TrainResult Train(const std::vector<supervision::LabeledSentence>& train,
                  const std::vector<supervision::LabeledSentence>& dev,
                  const embeddings::EmbeddingModel& base, const RefinedProvider& refined,
                  const TaggerConfig& cfg, const TrainOptions& options = {});

std::vector<evaluation::DetectedSpan> TagTokens(const TaggerModel& model, const std::string& post_id,
                                                const std::vector<std::string>& tokens, Day date,
                                                const embeddings::EmbeddingModel& base,
                                                const RefinedProvider& refined);
std::vector<evaluation::DetectedSpan> TagPost(const TaggerModel& model, const corpus::Post& post,
                                              const embeddings::EmbeddingModel& base,
                                              const RefinedProvider& refined);

// Checkpoint: "FADER01" then length-prefixed sections (tagset, config,
// chars, tensors as row-major little-endian float32).
void WriteCheckpoint(std::ostream& out, const TaggerModel& model);
TaggerModel ReadCheckpoint(std::istream& in, const std::string& source);
void SaveCheckpoint(const std::string& path, const TaggerModel& model);
TaggerModel LoadCheckpoint(const std::string& path);

}  // namespace fader::tagger

#endif  // FADER_TAGGER_H_
