#include <cmath>
#include <sstream>

#include "doctest.h"
#include "fader/error.h"
#include "fader/rng.h"
#include "fader/supervision.h"
#include "fader/tagger.h"

using namespace fader;
using namespace fader::tagger;
using embeddings::EmbeddingConfig;
using embeddings::EmbeddingModel;
using supervision::LabeledSentence;

namespace {

const Day kDay = Day::FromYmd(2018, 3, 1);

std::vector<embeddings::Sentence> TinyCorpus() {
  return {{"pristin", "will", "disband", "soon"},
          {"vine", "shuts", "down", "today"},
          {"the", "band", "will", "disband"},
          {"fans", "mourn", "vine", "today"},
          {"new", "york", "fans", "cheer"}};
}

EmbeddingModel TinyBase(int dim = 4) {
  EmbeddingConfig cfg;
  cfg.dim = dim;
  cfg.min_count = 1;
  cfg.buckets = 64;
  cfg.epochs_base = 2;
  return embeddings::TrainBase(TinyCorpus(), cfg);
}

const EmbeddingModel& Base() {
  static const EmbeddingModel model = TinyBase();
  return model;
}

const EmbeddingModel& Refined() {
  static const EmbeddingModel model =
      embeddings::RefineForDay(Base(), {{"pristin", "will", "disband"}}, kDay, Base().config);
  return model;
}

RefinedProvider Provider() {
  return ModelProvider([](Day d) -> const EmbeddingModel* { return d == kDay ? &Refined() : nullptr; });
}

TaggerConfig Small() {
  TaggerConfig c;
  c.word_hidden = 4;
  c.char_emb = 3;
  c.char_hidden = 3;
  return c;
}

template <typename S>
void Perturb(Parameters<S>& p, Rng& rng, double scale) {
  p.ForEach([&](const std::string&, Mat<S>& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] += static_cast<S>(scale * rng.Normal());
  });
}

template <typename S>
std::vector<S> Flatten(const Parameters<S>& p) {
  std::vector<S> out;
  p.ForEach([&](const std::string&, const Mat<S>& m) { out.insert(out.end(), m.data(), m.data() + m.size()); });
  return out;
}

// Norm-relative error between the analytic gradient and central differences
// over every parameter entry.
template <typename S>
double GradientError(const TagSet& ts, const Parameters<S>& params, StackBMode mode,
                     const SentenceFeatures& f, const std::vector<int>& gold, S eps) {
  Parameters<S> grads = Parameters<S>::Zero(params.dims());
  SentenceLoss(ts, params, mode, f, gold, &grads);
  const std::vector<S> analytic = Flatten(grads);
  std::vector<S> numeric;
  std::vector<Mat<S>*> slots;
  Parameters<S> probe = params;
  probe.ForEach([&](const std::string&, Mat<S>& m) { slots.push_back(&m); });
  for (Mat<S>* m : slots) {
    for (Eigen::Index i = 0; i < m->size(); ++i) {
      const S keep = m->data()[i];
      m->data()[i] = keep + eps;
      const S up = SentenceLoss<S>(ts, probe, mode, f, gold, nullptr);
      m->data()[i] = keep - eps;
      const S down = SentenceLoss<S>(ts, probe, mode, f, gold, nullptr);
      m->data()[i] = keep;
      numeric.push_back((up - down) / (2 * eps));
    }
  }
  REQUIRE(numeric.size() == analytic.size());
  double diff = 0, na = 0, nn = 0;
  for (std::size_t i = 0; i < numeric.size(); ++i) {
    diff += std::pow(double(analytic[i]) - double(numeric[i]), 2);
    na += std::pow(double(analytic[i]), 2);
    nn += std::pow(double(numeric[i]), 2);
  }
  return std::sqrt(diff) / std::max(std::sqrt(std::max(na, nn)), 1e-12);
}

LabeledSentence Labeled(const std::string& id, std::vector<std::string> tokens, CoarseType type,
                        std::vector<corpus::Phrase> aliases) {
  LabeledSentence s;
  s.post_id = id;
  s.tags = supervision::LabelMentions(tokens, aliases, type, true);
  s.tokens = std::move(tokens);
  s.date = kDay;
  s.entity_id = "e";
  return s;
}

std::vector<LabeledSentence> OverfitSet() {
  const CoarseType g = CoarseType::kGroup, l = CoarseType::kLocation;
  return {
      Labeled("1", {"pristin", "will", "disband", "soon"}, g, {{"pristin"}}),
      Labeled("2", {"the", "band", "pristin", "will", "disband"}, g, {{"pristin"}}),
      Labeled("3", {"vine", "shuts", "down", "today"}, g, {{"vine"}}),
      Labeled("4", {"fans", "mourn", "vine", "today"}, g, {{"vine"}}),
      Labeled("5", {"new", "york", "fans", "cheer"}, l, {{"new", "york"}}),
      Labeled("6", {"fans", "in", "new", "york", "mourn"}, l, {{"new", "york"}}),
      Labeled("7", {"the", "band", "will", "disband", "soon"}, g, {}),
      Labeled("8", {"today", "fans", "cheer"}, g, {}),
      Labeled("9", {"pristin", "fans", "in", "new", "york"}, l, {{"new", "york"}}),
      Labeled("10", {"vine", "will", "shut", "down"}, g, {{"vine"}}),
  };
}

TaggerConfig OverfitConfig() {
  TaggerConfig c;
  c.word_hidden = 16;
  c.char_emb = 8;
  c.char_hidden = 8;
  // Capacity check: no regularisation and no lr schedule.
  c.dropout = 0.0;
  c.lr = 0.1;
  c.lr_patience = 50;
  c.batch = 1;
  c.max_epochs = 50;
  c.seed = 7;
  return c;
}

std::string CheckpointBytes(const TaggerModel& m) {
  std::ostringstream out;
  WriteCheckpoint(out, m);
  return out.str();
}

}  // namespace

TEST_CASE("full model gradient matches finite differences") {
  TagSet ts({CoarseType::kPerson, CoarseType::kGroup});
  const std::vector<std::string> tokens{"Pristin", "will", "disband"};
  const CharVocab chars = CharVocab::FromTokens({tokens, {"xyz"}});
  const auto f = BuildFeatures(tokens, kDay, chars, true, Base(), Provider());
  REQUIRE_FALSE(f.fallback);
  const auto gold = *ts.Encode({Tag::Make(Tag::Prefix::kB, CoarseType::kGroup),
                                Tag::Make(Tag::Prefix::kL, CoarseType::kGroup), Tag::Outside()});
  Rng rng(3);
  for (int trial = 0; trial < 4; ++trial) {
    TaggerConfig cfg = Small();
    cfg.seed = 100 + trial;
    auto model = InitModel(ts, chars, Base().config.dim, cfg);
    Perturb(model.params, rng, 0.3);
    for (StackBMode mode : {StackBMode::kRefined, StackBMode::kZeroed}) {
      const double err64 = GradientError<double>(ts, model.params, mode, f, gold, 1e-5);
      CHECK(err64 < 1e-5);
      const double err32 = GradientError<float>(ts, model.params.Cast<float>(), mode, f, gold, 1e-2f);
      CHECK(err32 < 1e-3);
    }
  }
}

TEST_CASE("zeroed stack B ignores refined vectors") {
  TagSet ts({CoarseType::kGroup});
  const std::vector<std::string> tokens{"pristin", "will", "disband"};
  const CharVocab chars = CharVocab::FromTokens({tokens});
  auto model = InitModel(ts, chars, Base().config.dim, Small());
  auto with = BuildFeatures(tokens, kDay, chars, true, Base(), Provider());
  auto without = BuildFeatures(tokens, kDay, chars, true, Base(), nullptr);
  CHECK(with.word_b != without.word_b);
  CHECK(Emissions(model.params, StackBMode::kZeroed, with) ==
        Emissions(model.params, StackBMode::kZeroed, without));
  CHECK(Emissions(model.params, StackBMode::kRefined, with) !=
        Emissions(model.params, StackBMode::kRefined, without));
}

TEST_CASE("missing refined model falls back to base vectors") {
  const std::vector<std::string> tokens{"vine", "shuts"};
  const CharVocab chars = CharVocab::FromTokens({tokens});
  auto f = BuildFeatures(tokens, kDay + 1, chars, true, Base(), Provider());
  CHECK(f.fallback);
  CHECK(f.word_a == f.word_b);
  auto g = BuildFeatures(tokens, kDay, chars, true, Base(), Provider());
  CHECK_FALSE(g.fallback);
  CHECK(g.word_a == f.word_a);
}

TEST_CASE("decoded sequences are always BILOU-valid") {
  TagSet ts({CoarseType::kPerson, CoarseType::kGroup, CoarseType::kLocation});
  const char* vocab[] = {"pristin", "will", "disband", "vine", "new", "york", "Zq", "the"};
  Rng rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<std::string> tokens(1 + rng.Below(7));
    for (auto& t : tokens) t = vocab[rng.Below(8)];
    const CharVocab chars = CharVocab::FromTokens({{"pristin", "vine"}});
    TaggerConfig cfg = Small();
    cfg.seed = trial;
    auto model = InitModel(ts, chars, Base().config.dim, cfg);
    Perturb(model.params, rng, 2.0);
    const auto f = BuildFeatures(tokens, kDay, chars, true, Base(), Provider());
    const auto p = Predict(model, f);
    REQUIRE(p.tags.size() == tokens.size());
    REQUIRE_FALSE(FirstBilouViolation(p.tags).has_value());
  }
}

TEST_CASE("span extraction inverts mention labeling") {
  const char* vocab[] = {"a", "b", "c", "d"};
  Rng rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::string> tokens(rng.Below(10));
    for (auto& t : tokens) t = vocab[rng.Below(4)];
    std::vector<corpus::Phrase> aliases(1 + rng.Below(3));
    for (auto& a : aliases) {
      a.resize(1 + rng.Below(3));
      for (auto& t : a) t = vocab[rng.Below(4)];
    }
    const auto tags = supervision::LabelMentions(tokens, aliases, CoarseType::kEvent, true);
    std::vector<corpus::Phrase> found;
    for (const Span& s : ExtractSpans(tags)) {
      REQUIRE(s.type == CoarseType::kEvent);
      found.emplace_back(tokens.begin() + s.start, tokens.begin() + s.end);
    }
    REQUIRE(supervision::LabelMentions(tokens, found, CoarseType::kEvent, true) == tags);
  }
}

TEST_CASE("tagging a post reports decoded spans") {
  TagSet ts({CoarseType::kGroup});
  const CharVocab chars = CharVocab::FromTokens({{"pristin"}});
  TaggerModel model = InitModel(ts, chars, Base().config.dim, Small());
  model.params.emit_w.setZero();
  model.params.emit_b.setZero();
  const int u = *ts.Index(Tag::Make(Tag::Prefix::kU, CoarseType::kGroup));
  model.params.crf = crf::Weights<double>::Zero(ts.size());
  model.params.crf.start(0, u) = 10;
  model.params.crf.transitions(u, 0) = 5;
  model.params.crf.transitions(0, 0) = 5;
  corpus::Post post;
  post.id = "p1";
  post.timestamp = 1519862400;  // 2018-03-01
  post.tokens = {"Pristin", "to", "disband"};
  const auto spans = TagPost(model, post, Base(), Provider());
  REQUIRE(spans.size() == 1);
  CHECK(spans[0].post_id == "p1");
  CHECK(spans[0].start == 0);
  CHECK(spans[0].end == 1);
  CHECK(spans[0].surface == "Pristin");
  CHECK(spans[0].type == CoarseType::kGroup);
  CHECK(spans[0].date == kDay);
  CHECK(spans[0].score == doctest::Approx(20.0));
  CHECK(TagTokens(model, "p2", {}, kDay, Base(), Provider()).empty());
}

TEST_CASE("best epoch selection") {
  CHECK(SelectBestEpoch({0.2, 0.6, 0.5}) == 2);
  CHECK(SelectBestEpoch({0.5, 0.5, 0.4}) == 1);
  CHECK_THROWS_AS(SelectBestEpoch({}), ArgumentError);
}

TEST_CASE("configuration and input validation") {
  TaggerConfig bad = Small();
  bad.dropout = 1.0;
  CHECK_THROWS_AS(bad.Validate(), ConfigError);
  bad = Small();
  bad.batch = 0;
  CHECK_THROWS_AS(bad.Validate(), ConfigError);
  const auto data = OverfitSet();
  CHECK_THROWS_AS(Train(data, {}, Base(), Provider(), Small()), ArgumentError);
  auto broken = data;
  broken[0].tags[0] = Tag::Make(Tag::Prefix::kI, CoarseType::kGroup);
  CHECK_THROWS_AS(Train(broken, data, Base(), Provider(), Small()), ArgumentError);
}

TEST_CASE("tagger fits a small training set") {
  const auto data = OverfitSet();
  auto result = Train(data, data, Base(), Provider(), OverfitConfig());
  double best = 0;
  for (const auto& e : result.log) best = std::max(best, e.dev_f1);
  CHECK(best == 1.0);
  REQUIRE(result.best_epoch >= 1);
  CHECK(result.log[result.best_epoch - 1].dev_f1 == best);

  std::vector<TagSequence> gold, predicted;
  for (const auto& s : data) {
    gold.push_back(s.tags);
    predicted.push_back(Predict(result.model, BuildFeatures(s.tokens, s.date, result.model.chars, true,
                                                            Base(), Provider()))
                            .tags);
  }
  CHECK(evaluation::ConllScore(gold, predicted).micro.f1 == 1.0);
}

TEST_CASE("training is deterministic and checkpoints round-trip") {
  const auto data = OverfitSet();
  TaggerConfig cfg = OverfitConfig();
  cfg.max_epochs = 3;
  const auto a = Train(data, data, Base(), Provider(), cfg);
  const auto b = Train(data, data, Base(), Provider(), cfg);
  const std::string bytes = CheckpointBytes(a.model);
  CHECK(bytes == CheckpointBytes(b.model));

  std::istringstream in(bytes);
  const TaggerModel loaded = ReadCheckpoint(in, "mem");
  CHECK(loaded == a.model);
  CHECK(CheckpointBytes(loaded) == bytes);

  cfg.seed = 8;
  CHECK(CheckpointBytes(Train(data, data, Base(), Provider(), cfg).model) != bytes);

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  std::istringstream bm(bad_magic);
  CHECK_THROWS_AS(ReadCheckpoint(bm, "mem"), FormatError);
  std::istringstream cut(bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(ReadCheckpoint(cut, "mem"), FormatError);
}
