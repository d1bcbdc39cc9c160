#include "fader/tagger.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "fader/error.h"
#include "fader/rng.h"
#include "fader/text.h"

namespace fader::tagger {

namespace {

template <typename S>
struct Cache {
  std::vector<gru::Tape<S>> char_f, char_b;
  std::vector<int> char_len;
  gru::Tape<S> af, ab, bf, bb;
  Mat<S> hcat;  // after dropout
  Mat<S> mask;  // empty when no dropout
};

template <typename S>
Mat<S> Forward(const Parameters<S>& p, StackBMode mode, const SentenceFeatures& f,
               double dropout, Rng* rng, Cache<S>* cache) {
  const int n = static_cast<int>(f.size());
  const int ch = p.char_fwd.hidden(), hidden = p.a_fwd.hidden();
  const int word_dim = static_cast<int>(f.word_a.cols());
  Cache<S> local;
  Cache<S>& c = cache ? *cache : local;
  c.char_f.resize(n);
  c.char_b.resize(n);
  c.char_len.resize(n);

  Mat<S> xa(n, 2 * ch + word_dim);
  Mat<S> hs;
  for (int t = 0; t < n; ++t) {
    const auto& ids = f.chars[t];
    const int len = static_cast<int>(ids.size());
    c.char_len[t] = len;
    if (len == 0) {
      xa.row(t).head(2 * ch).setZero();
      continue;
    }
    Mat<S> x(len, p.char_emb.cols());
    for (int k = 0; k < len; ++k) x.row(k) = p.char_emb.row(ids[k]);
    gru::Forward(p.char_fwd, x, false, &hs, &c.char_f[t]);
    xa.row(t).head(ch) = hs.row(len - 1);
    gru::Forward(p.char_bwd, x, true, &hs, &c.char_b[t]);
    xa.row(t).segment(ch, ch) = hs.row(0);
  }
  xa.rightCols(word_dim) = f.word_a.cast<S>();

  c.hcat = Mat<S>::Zero(n, 4 * hidden);
  gru::Forward(p.a_fwd, xa, false, &hs, &c.af);
  c.hcat.leftCols(hidden) = hs;
  gru::Forward(p.a_bwd, xa, true, &hs, &c.ab);
  c.hcat.middleCols(hidden, hidden) = hs;
  if (mode == StackBMode::kRefined) {
    const Mat<S> xb = f.word_b.cast<S>();
    gru::Forward(p.b_fwd, xb, false, &hs, &c.bf);
    c.hcat.middleCols(2 * hidden, hidden) = hs;
    gru::Forward(p.b_bwd, xb, true, &hs, &c.bb);
    c.hcat.rightCols(hidden) = hs;
  }

  c.mask.resize(0, 0);
  if (rng && dropout > 0.0) {
    c.mask.resize(n, 4 * hidden);
    const S keep_scale = S(1.0 / (1.0 - dropout));
    for (Eigen::Index i = 0; i < c.mask.size(); ++i) {
      c.mask.data()[i] = rng->Uniform() < dropout ? S(0) : keep_scale;
    }
    c.hcat = c.hcat.cwiseProduct(c.mask);
  }
  Mat<S> emissions = c.hcat * p.emit_w.transpose();
  emissions.rowwise() += p.emit_b.row(0);
  return emissions;
}

template <typename S>
void Backward(const Parameters<S>& p, StackBMode mode, const SentenceFeatures& f,
              const Cache<S>& c, const Mat<S>& d_emissions, Parameters<S>* g) {
  const int n = static_cast<int>(f.size());
  const int ch = p.char_fwd.hidden(), hidden = p.a_fwd.hidden();
  g->emit_w.noalias() += d_emissions.transpose() * c.hcat;
  g->emit_b.row(0) += d_emissions.colwise().sum();
  Mat<S> d_hcat = d_emissions * p.emit_w;
  if (c.mask.size()) d_hcat = d_hcat.cwiseProduct(c.mask);

  Mat<S> d_xa, d_tmp;
  gru::Backward(p.a_fwd, c.af, Mat<S>(d_hcat.leftCols(hidden)), false, &g->a_fwd, &d_xa);
  gru::Backward(p.a_bwd, c.ab, Mat<S>(d_hcat.middleCols(hidden, hidden)), true, &g->a_bwd, &d_tmp);
  d_xa += d_tmp;
  if (mode == StackBMode::kRefined) {
    gru::Backward(p.b_fwd, c.bf, Mat<S>(d_hcat.middleCols(2 * hidden, hidden)), false, &g->b_fwd, &d_tmp);
    gru::Backward(p.b_bwd, c.bb, Mat<S>(d_hcat.rightCols(hidden)), true, &g->b_bwd, &d_tmp);
  }

  for (int t = 0; t < n; ++t) {
    const int len = c.char_len[t];
    if (len == 0) continue;
    Mat<S> d_hs = Mat<S>::Zero(len, ch);
    Mat<S> d_x;
    d_hs.row(len - 1) = d_xa.row(t).head(ch);
    gru::Backward(p.char_fwd, c.char_f[t], d_hs, false, &g->char_fwd, &d_x);
    for (int k = 0; k < len; ++k) g->char_emb.row(f.chars[t][k]) += d_x.row(k);
    d_hs.setZero();
    d_hs.row(0) = d_xa.row(t).segment(ch, ch);
    gru::Backward(p.char_bwd, c.char_b[t], d_hs, true, &g->char_bwd, &d_x);
    for (int k = 0; k < len; ++k) g->char_emb.row(f.chars[t][k]) += d_x.row(k);
  }
}

void FillUniform(Mat<double>& m, double bound, Rng& rng) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = static_cast<float>(rng.Uniform(-bound, bound));
  }
}

void InitGru(gru::Weights<double>& g, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(g.hidden()));
  FillUniform(g.w, bound, rng);
  FillUniform(g.u, bound, rng);
  FillUniform(g.b, bound, rng);
}

void Quantize(Parameters<double>& p) {
  p.ForEach([](const std::string&, Mat<double>& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(m.data()[i]);
  });
}

std::vector<CoarseType> TypesIn(const std::vector<supervision::LabeledSentence>& sentences) {
  std::set<CoarseType> seen;
  for (const auto& s : sentences) {
    for (const auto& t : s.tags) {
      if (!t.IsOutside()) seen.insert(t.type);
    }
  }
  std::vector<CoarseType> out;
  for (CoarseType t : kAllCoarseTypes) {
    if (seen.count(t)) out.push_back(t);
  }
  return out;
}

}  // namespace

void TaggerConfig::Validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("tagger: ") + what);
  };
  require(word_hidden > 0 && char_emb > 0 && char_hidden > 0, "widths must be positive");
  require(dropout >= 0.0 && dropout < 1.0, "dropout must lie in [0, 1)");
  require(lr > 0.0 && lr_floor > 0.0 && lr_floor <= lr, "need 0 < lr_floor <= lr");
  require(lr_patience > 0, "lr_patience must be positive");
  require(batch > 0, "batch must be positive");
  require(max_epochs > 0, "max_epochs must be positive");
  require(clip_norm >= 0.0, "clip_norm must be non-negative");
}

CharVocab::CharVocab(std::vector<char32_t> chars) : chars_(std::move(chars)) {
  std::sort(chars_.begin(), chars_.end());
  chars_.erase(std::unique(chars_.begin(), chars_.end()), chars_.end());
  for (std::size_t i = 0; i < chars_.size(); ++i) ids_[chars_[i]] = static_cast<int>(i) + 1;
}

CharVocab CharVocab::FromTokens(const std::vector<std::vector<std::string>>& sentences) {
  std::set<char32_t> seen;
  for (const auto& s : sentences) {
    for (const auto& token : s) {
      for (char32_t c : text::DecodeUtf8(token)) seen.insert(c);
    }
  }
  return CharVocab(std::vector<char32_t>(seen.begin(), seen.end()));
}

int CharVocab::Id(char32_t c) const {
  auto it = ids_.find(c);
  return it == ids_.end() ? 0 : it->second;
}

template <typename S>
Parameters<S> Parameters<S>::Zero(const Dims& d) {
  Parameters p;
  p.char_emb = Mat<S>::Zero(d.chars, d.char_emb);
  p.char_fwd = gru::Weights<S>::Zero(d.char_emb, d.char_hidden);
  p.char_bwd = gru::Weights<S>::Zero(d.char_emb, d.char_hidden);
  p.a_fwd = gru::Weights<S>::Zero(2 * d.char_hidden + d.word_dim, d.word_hidden);
  p.a_bwd = gru::Weights<S>::Zero(2 * d.char_hidden + d.word_dim, d.word_hidden);
  p.b_fwd = gru::Weights<S>::Zero(d.word_dim, d.word_hidden);
  p.b_bwd = gru::Weights<S>::Zero(d.word_dim, d.word_hidden);
  p.emit_w = Mat<S>::Zero(d.tags, 4 * d.word_hidden);
  p.emit_b = Mat<S>::Zero(1, d.tags);
  p.crf = crf::Weights<S>::Zero(d.tags);
  return p;
}

template <typename S>
template <typename T>
Parameters<T> Parameters<S>::Cast() const {
  Parameters<T> out = Parameters<T>::Zero(dims());
  std::vector<const Mat<S>*> mine;
  ForEach([&](const std::string&, const Mat<S>& m) { mine.push_back(&m); });
  std::size_t i = 0;
  out.ForEach([&](const std::string&, Mat<T>& m) { m = mine[i++]->template cast<T>(); });
  return out;
}

template <typename S>
Dims Parameters<S>::dims() const {
  Dims d;
  d.chars = static_cast<int>(char_emb.rows());
  d.char_emb = static_cast<int>(char_emb.cols());
  d.char_hidden = char_fwd.hidden();
  d.word_hidden = a_fwd.hidden();
  d.word_dim = static_cast<int>(b_fwd.w.cols());
  d.tags = static_cast<int>(emit_w.rows());
  return d;
}

template <typename S>
double Parameters<S>::Norm() const {
  double sum = 0.0;
  ForEach([&](const std::string&, const Mat<S>& m) { sum += m.template cast<double>().squaredNorm(); });
  return std::sqrt(sum);
}

template <typename S>
bool Parameters<S>::operator==(const Parameters& other) const {
  std::vector<const Mat<S>*> theirs;
  other.ForEach([&](const std::string&, const Mat<S>& m) { theirs.push_back(&m); });
  std::size_t i = 0;
  bool equal = true;
  ForEach([&](const std::string&, const Mat<S>& m) {
    const Mat<S>& o = *theirs[i++];
    equal = equal && m.rows() == o.rows() && m.cols() == o.cols() && m == o;
  });
  return equal;
}

template struct Parameters<double>;
template struct Parameters<float>;
template Parameters<float> Parameters<double>::Cast<float>() const;
template Parameters<double> Parameters<double>::Cast<double>() const;

RefinedProvider ModelProvider(std::function<const embeddings::EmbeddingModel*(Day)> models) {
  return [models = std::move(models)](Day day, const std::string& key) -> std::optional<embeddings::Vector> {
    const auto* model = models ? models(day) : nullptr;
    if (!model) return std::nullopt;
    return embeddings::Lookup(*model, key).vector;
  };
}

SentenceFeatures BuildFeatures(const std::vector<std::string>& tokens, Day date,
                               const CharVocab& chars, bool fold_case,
                               const embeddings::EmbeddingModel& base,
                               const RefinedProvider& refined) {
  SentenceFeatures f;
  const int n = static_cast<int>(tokens.size());
  const int dim = base.config.dim;
  f.word_a.resize(n, dim);
  f.word_b.resize(n, dim);
  f.fallback = !refined;
  for (int t = 0; t < n; ++t) {
    std::vector<int> ids;
    for (char32_t c : text::DecodeUtf8(tokens[t])) ids.push_back(chars.Id(c));
    f.chars.push_back(std::move(ids));
    const std::string key = fold_case ? text::FoldCase(tokens[t]) : tokens[t];
    f.word_a.row(t) = embeddings::Lookup(base, key).vector.cast<double>().transpose();
    if (f.fallback) continue;
    auto v = refined(date, key);
    if (!v) {
      f.fallback = true;
      continue;
    }
    if (v->size() != dim) throw ArgumentError("refined vector dimension differs from the base model");
    f.word_b.row(t) = v->cast<double>().transpose();
  }
  if (f.fallback) f.word_b = f.word_a;
  return f;
}

template <typename S>
Mat<S> Emissions(const Parameters<S>& params, StackBMode mode, const SentenceFeatures& features) {
  return Forward(params, mode, features, 0.0, nullptr, static_cast<Cache<S>*>(nullptr));
}

template <typename S>
S SentenceLoss(const TagSet& tagset, const Parameters<S>& params, StackBMode mode,
               const SentenceFeatures& features, const std::vector<int>& gold,
               Parameters<S>* grads) {
  Cache<S> cache;
  const Mat<S> emissions = Forward(params, mode, features, 0.0, nullptr, &cache);
  if (!grads) return crf::NegLogLikelihood<S>(tagset, params.crf, emissions, gold, nullptr, nullptr);
  Mat<S> d_emissions;
  const S loss = crf::NegLogLikelihood<S>(tagset, params.crf, emissions, gold, &d_emissions, &grads->crf);
  Backward(params, mode, features, cache, d_emissions, grads);
  return loss;
}

template Mat<double> Emissions(const Parameters<double>&, StackBMode, const SentenceFeatures&);
template Mat<float> Emissions(const Parameters<float>&, StackBMode, const SentenceFeatures&);
template double SentenceLoss(const TagSet&, const Parameters<double>&, StackBMode,
                             const SentenceFeatures&, const std::vector<int>&, Parameters<double>*);
template float SentenceLoss(const TagSet&, const Parameters<float>&, StackBMode,
                            const SentenceFeatures&, const std::vector<int>&, Parameters<float>*);

TaggerModel InitModel(const TagSet& tagset, const CharVocab& chars, int word_dim,
                      const TaggerConfig& cfg) {
  cfg.Validate();
  TaggerModel m;
  m.tagset = tagset;
  m.config = cfg;
  m.chars = chars;
  Dims d;
  d.chars = chars.size();
  d.char_emb = cfg.char_emb;
  d.char_hidden = cfg.char_hidden;
  d.word_dim = word_dim;
  d.word_hidden = cfg.word_hidden;
  d.tags = tagset.size();
  m.params = Parameters<double>::Zero(d);
  Rng rng(DeriveSeed(cfg.seed, "tagger-init"));
  FillUniform(m.params.char_emb, 0.1, rng);
  for (auto* g : {&m.params.char_fwd, &m.params.char_bwd, &m.params.a_fwd, &m.params.a_bwd,
                  &m.params.b_fwd, &m.params.b_bwd}) {
    InitGru(*g, rng);
  }
  FillUniform(m.params.emit_w, 1.0 / std::sqrt(4.0 * cfg.word_hidden), rng);
  return m;
}

Prediction Predict(const TaggerModel& model, const SentenceFeatures& features) {
  Prediction out;
  out.fallback = features.fallback;
  if (features.size() == 0) return out;
  const Mat<double> emissions = Emissions(model.params, model.config.stack_b, features);
  auto decoded = crf::Viterbi(model.tagset, model.params.crf, emissions);
  out.tags = model.tagset.Decode(decoded.path);
  out.score = decoded.score;
  return out;
}

int SelectBestEpoch(const std::vector<double>& dev_f1) {
  if (dev_f1.empty()) throw ArgumentError("no epochs to select from");
  return static_cast<int>(std::max_element(dev_f1.begin(), dev_f1.end()) - dev_f1.begin()) + 1;
}

TrainResult Train(const std::vector<supervision::LabeledSentence>& train,
                  const std::vector<supervision::LabeledSentence>& dev,
                  const embeddings::EmbeddingModel& base, const RefinedProvider& refined,
                  const TaggerConfig& cfg, const TrainOptions& options) {
  cfg.Validate();
  if (train.empty()) throw ArgumentError("training split is empty");
  if (dev.empty()) throw ArgumentError("dev split is empty");

  TagSet tagset(TypesIn(train));
  CharVocab chars;
  if (options.char_encoder) {
    chars = options.char_encoder->vocab;
  } else {
    std::vector<std::vector<std::string>> tokens;
    for (const auto& s : train) tokens.push_back(s.tokens);
    chars = CharVocab::FromTokens(tokens);
  }
  TaggerConfig effective = cfg;
  if (options.char_encoder) {
    effective.char_emb = static_cast<int>(options.char_encoder->embeddings.cols());
    effective.char_hidden = options.char_encoder->forward.hidden();
  }
  TaggerModel model = InitModel(tagset, chars, base.config.dim, effective);
  if (const auto* enc = options.char_encoder) {
    model.params.char_emb = enc->embeddings;
    model.params.char_fwd = enc->forward;
    model.params.char_bwd = enc->backward;
    Quantize(model.params);
  }

  auto features_of = [&](const supervision::LabeledSentence& s) {
    return BuildFeatures(s.tokens, s.date, chars, cfg.fold_case, base, refined);
  };
  std::vector<SentenceFeatures> train_features;
  std::vector<std::vector<int>> train_gold;
  for (const auto& s : train) {
    if (s.tokens.empty()) continue;
    auto gold = tagset.Encode(s.tags);
    if (!gold || !tagset.Legal(*gold)) {
      throw ArgumentError("training sentence " + s.post_id + " has an invalid tag sequence");
    }
    train_features.push_back(features_of(s));
    train_gold.push_back(std::move(*gold));
  }
  if (train_features.empty()) throw ArgumentError("training split has no tokens");
  std::vector<SentenceFeatures> dev_features;
  std::vector<TagSequence> dev_gold;
  for (const auto& s : dev) {
    dev_features.push_back(features_of(s));
    dev_gold.push_back(s.tags);
  }

  TrainResult result;
  Rng rng(DeriveSeed(cfg.seed, "tagger-train"));
  double lr = cfg.lr;
  double best_f1 = -1.0;
  int stale = 0;
  Parameters<double> best = model.params;
  std::vector<std::size_t> order(train_features.size());
  std::iota(order.begin(), order.end(), 0);
  Parameters<double> grads = Parameters<double>::Zero(model.params.dims());
  const auto mode = cfg.stack_b;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.Shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0, batch_no = 1; start < order.size(); start += cfg.batch, ++batch_no) {
      grads.ForEach([](const std::string&, Mat<double>& m) { m.setZero(); });
      double batch_loss = 0.0;
      const std::size_t stop = std::min(order.size(), start + cfg.batch);
      for (std::size_t k = start; k < stop; ++k) {
        const auto& f = train_features[order[k]];
        Cache<double> cache;
        const Mat<double> emissions = Forward(model.params, mode, f, cfg.dropout, &rng, &cache);
        Mat<double> d_emissions;
        batch_loss += crf::NegLogLikelihood(tagset, model.params.crf, emissions, train_gold[order[k]],
                                            &d_emissions, &grads.crf);
        Backward(model.params, mode, f, cache, d_emissions, &grads);
      }
      const double grad_norm = grads.Norm();
      if (!std::isfinite(batch_loss) || !std::isfinite(grad_norm)) {
        std::ostringstream msg;
        msg << "tagger loss became non-finite at epoch " << epoch << ", batch " << batch_no
            << " (parameter norm " << model.params.Norm() << ")";
        throw DivergenceError(msg.str());
      }
      const double scale =
          cfg.clip_norm > 0.0 && grad_norm > cfg.clip_norm ? cfg.clip_norm / grad_norm : 1.0;
      std::vector<Mat<double>*> g;
      grads.ForEach([&](const std::string&, Mat<double>& m) { g.push_back(&m); });
      std::size_t i = 0;
      model.params.ForEach([&](const std::string&, Mat<double>& m) { m -= (lr * scale) * *g[i++]; });
      epoch_loss += batch_loss;
    }

    std::vector<TagSequence> predicted;
    for (std::size_t d = 0; d < dev_features.size(); ++d) {
      predicted.push_back(Predict(model, dev_features[d]).tags);
      if (predicted.back().empty()) predicted.back().assign(dev_gold[d].size(), Tag::Outside());
    }
    EpochLog entry{epoch, epoch_loss, evaluation::ConllScore(dev_gold, predicted).micro.f1, lr};
    result.log.push_back(entry);
    if (options.on_epoch) options.on_epoch(entry);
    if (entry.dev_f1 > best_f1) {
      best_f1 = entry.dev_f1;
      best = model.params;
      result.best_epoch = epoch;
      stale = 0;
    } else if (++stale >= cfg.lr_patience) {
      lr = std::max(lr / 2.0, cfg.lr_floor);
      stale = 0;
    }
  }
  model.params = best;
  Quantize(model.params);
  result.model = std::move(model);
  return result;
}

std::vector<evaluation::DetectedSpan> TagTokens(const TaggerModel& model, const std::string& post_id,
                                                const std::vector<std::string>& tokens, Day date,
                                                const embeddings::EmbeddingModel& base,
                                                const RefinedProvider& refined) {
  std::vector<evaluation::DetectedSpan> out;
  if (tokens.empty()) return out;
  const auto features =
      BuildFeatures(tokens, date, model.chars, model.config.fold_case, base, refined);
  const auto prediction = Predict(model, features);
  for (const auto& span : ExtractSpans(prediction.tags)) {
    evaluation::DetectedSpan d;
    d.post_id = post_id;
    d.start = span.start;
    d.end = span.end;
    d.surface = text::Join(std::vector<std::string>(tokens.begin() + span.start, tokens.begin() + span.end), " ");
    d.type = span.type;
    d.date = date;
    d.score = prediction.score;
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<evaluation::DetectedSpan> TagPost(const TaggerModel& model, const corpus::Post& post,
                                              const embeddings::EmbeddingModel& base,
                                              const RefinedProvider& refined) {
  return TagTokens(model, post.id, post.tokens, post.day(), base, refined);
}

}  // namespace fader::tagger
