#include <cmath>
#include <limits>

#include "doctest.h"
#include "fader/crf.h"
#include "fader/error.h"
#include "fader/rng.h"

using namespace fader;

namespace {

using W = crf::Weights<double>;

struct Brute {
  double log_z;
  std::vector<int> best_path;
  double best_score;
};

// Enumerates every tag path in lexicographic order.
Brute Enumerate(const TagSet& ts, const W& w, const Mat<double>& e) {
  const int n = static_cast<int>(e.rows()), t = ts.size();
  std::vector<int> path(n, 0);
  std::vector<double> scores;
  Brute out{0.0, {}, -std::numeric_limits<double>::infinity()};
  for (;;) {
    if (ts.Legal(path)) {
      double s = w.start(0, path[0]) + e(0, path[0]);
      for (int i = 1; i < n; ++i) s += w.transitions(path[i - 1], path[i]) + e(i, path[i]);
      s += w.end(0, path[n - 1]);
      scores.push_back(s);
      if (s > out.best_score) {
        out.best_score = s;
        out.best_path = path;
      }
    }
    int k = n - 1;
    while (k >= 0 && path[k] == t - 1) path[k--] = 0;
    if (k < 0) break;
    ++path[k];
  }
  double m = out.best_score, sum = 0.0;
  for (double s : scores) sum += std::exp(s - m);
  out.log_z = m + std::log(sum);
  return out;
}

W RandomWeights(int t, Rng& rng, double scale) {
  W w = W::Zero(t);
  for (Eigen::Index i = 0; i < w.transitions.size(); ++i) w.transitions.data()[i] = scale * rng.Normal();
  for (int j = 0; j < t; ++j) {
    w.start(0, j) = scale * rng.Normal();
    w.end(0, j) = scale * rng.Normal();
  }
  return w;
}

Mat<double> RandomEmissions(int n, int t, Rng& rng, double scale) {
  Mat<double> e(n, t);
  for (Eigen::Index i = 0; i < e.size(); ++i) e.data()[i] = scale * rng.Normal();
  return e;
}

}  // namespace

TEST_CASE("tag set mask") {
  TagSet ts({CoarseType::kPerson, CoarseType::kGroup});
  REQUIRE(ts.size() == 9);
  auto idx = [&](Tag::Prefix p, CoarseType c) { return *ts.Index(Tag::Make(p, c)); };
  const int o = 0;
  const int bp = idx(Tag::Prefix::kB, CoarseType::kPerson), ip = idx(Tag::Prefix::kI, CoarseType::kPerson);
  const int lp = idx(Tag::Prefix::kL, CoarseType::kPerson), up = idx(Tag::Prefix::kU, CoarseType::kPerson);
  const int ig = idx(Tag::Prefix::kI, CoarseType::kGroup), lg = idx(Tag::Prefix::kL, CoarseType::kGroup);
  CHECK_FALSE(ts.Allowed(o, ip));
  CHECK_FALSE(ts.Allowed(up, lp));
  CHECK_FALSE(ts.Allowed(lp, ip));
  CHECK_FALSE(ts.Allowed(bp, o));
  CHECK_FALSE(ts.Allowed(bp, up));
  CHECK_FALSE(ts.Allowed(bp, bp));
  CHECK_FALSE(ts.Allowed(bp, lg));
  CHECK_FALSE(ts.Allowed(ip, ig));
  CHECK_FALSE(ts.EndAllowed(bp));
  CHECK_FALSE(ts.EndAllowed(ip));
  CHECK_FALSE(ts.StartAllowed(ip));
  CHECK_FALSE(ts.StartAllowed(lp));
  CHECK(ts.Allowed(bp, ip));
  CHECK(ts.Allowed(ip, lp));
  CHECK(ts.Allowed(lp, up));
  CHECK(ts.Allowed(o, bp));
  CHECK(ts.EndAllowed(lp));
  // Every other transition from O, L or U is legal.
  int legal = 0;
  for (int a = 0; a < 9; ++a) {
    for (int b = 0; b < 9; ++b) legal += ts.Allowed(a, b);
  }
  // 5 closed tags x 5 openers, plus B/I of each type -> I/L of that type.
  CHECK(legal == 5 * 5 + 2 * 2 * 2);
}

TEST_CASE("single-token partition and loss") {
  TagSet ts({CoarseType::kPerson});
  W w = W::Zero(ts.size());
  Mat<double> e = Mat<double>::Zero(1, ts.size());
  CHECK(crf::LogPartition(ts, w, e) == doctest::Approx(std::log(2.0)));
  const int up = *ts.Index(Tag::Make(Tag::Prefix::kU, CoarseType::kPerson));
  CHECK(crf::NegLogLikelihood<double>(ts, w, e, {0}, nullptr, nullptr) == doctest::Approx(std::log(2.0)));
  CHECK(crf::NegLogLikelihood<double>(ts, w, e, {up}, nullptr, nullptr) == doctest::Approx(std::log(2.0)));
  e(0, up) = 1.0;
  auto best = crf::Viterbi(ts, w, e);
  CHECK(best.path == std::vector<int>{up});

  e(0, up) = 60.0;
  CHECK(crf::NegLogLikelihood<double>(ts, w, e, {up}, nullptr, nullptr) < 1e-20);
  CHECK(crf::NegLogLikelihood<double>(ts, w, e, {up}, nullptr, nullptr) >= 0.0);
  const int bp = *ts.Index(Tag::Make(Tag::Prefix::kB, CoarseType::kPerson));
  CHECK_THROWS_AS(crf::NegLogLikelihood<double>(ts, w, e, {bp}, nullptr, nullptr), ArgumentError);
}

TEST_CASE("masked transition forces the best legal path") {
  TagSet ts({CoarseType::kPerson});
  W w = W::Zero(ts.size());
  const int bp = *ts.Index(Tag::Make(Tag::Prefix::kB, CoarseType::kPerson));
  Mat<double> e = Mat<double>::Zero(2, ts.size());
  e(0, bp) = 5.0;
  e(1, 0) = 5.0;
  auto best = crf::Viterbi(ts, w, e);
  auto brute = Enumerate(ts, w, e);
  CHECK(best.path == brute.best_path);
  CHECK(ts.Legal(best.path));
  CHECK(best.path != std::vector<int>{bp, 0});
}

TEST_CASE("ties resolve to the lexicographically smallest path") {
  TagSet ts({CoarseType::kPerson, CoarseType::kGroup});
  W w = W::Zero(ts.size());
  Mat<double> e = Mat<double>::Zero(3, ts.size());
  CHECK(crf::Viterbi(ts, w, e).path == std::vector<int>{0, 0, 0});
  const int ug = *ts.Index(Tag::Make(Tag::Prefix::kU, CoarseType::kGroup));
  const int up = *ts.Index(Tag::Make(Tag::Prefix::kU, CoarseType::kPerson));
  e(1, ug) = 2.0;
  e(1, up) = 2.0;
  CHECK(crf::Viterbi(ts, w, e).path == std::vector<int>{0, up, 0});
}

TEST_CASE("forward and Viterbi agree with exhaustive enumeration") {
  Rng rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    const int types = 1 + static_cast<int>(rng.Below(2));
    TagSet ts = types == 1 ? TagSet({CoarseType::kEvent}) : TagSet({CoarseType::kPerson, CoarseType::kLocation});
    const int n = 1 + static_cast<int>(rng.Below(5));
    const double scale = trial % 3 == 0 ? 3.0 : 1.0;
    W w = RandomWeights(ts.size(), rng, scale);
    Mat<double> e = RandomEmissions(n, ts.size(), rng, scale);
    auto brute = Enumerate(ts, w, e);
    const double log_z = crf::LogPartition(ts, w, e);
    REQUIRE(std::abs(log_z - brute.log_z) < 1e-8);
    auto best = crf::Viterbi(ts, w, e);
    REQUIRE(best.path == brute.best_path);
    REQUIRE(std::abs(best.score - brute.best_score) < 1e-8);
    REQUIRE(log_z >= best.score);
    REQUIRE(crf::PathScore(ts, w, e, best.path) == doctest::Approx(best.score));
  }
}

TEST_CASE("CRF gradient matches finite differences") {
  Rng rng(17);
  TagSet ts({CoarseType::kPerson, CoarseType::kGroup});
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng.Below(5));
    W w = RandomWeights(ts.size(), rng, 1.0);
    Mat<double> e = RandomEmissions(n, ts.size(), rng, 1.0);
    auto gold = crf::Viterbi(ts, RandomWeights(ts.size(), rng, 1.0), RandomEmissions(n, ts.size(), rng, 1.0)).path;
    Mat<double> de;
    W dw = W::Zero(ts.size());
    crf::NegLogLikelihood(ts, w, e, gold, &de, &dw);
    const double eps = 1e-5;
    auto loss = [&](const W& ww, const Mat<double>& ee) {
      return crf::NegLogLikelihood<double>(ts, ww, ee, gold, nullptr, nullptr);
    };
    std::vector<double> a, num;
    for (Eigen::Index i = 0; i < e.size(); ++i) {
      Mat<double> p = e, m = e;
      p.data()[i] += eps;
      m.data()[i] -= eps;
      num.push_back((loss(w, p) - loss(w, m)) / (2 * eps));
      a.push_back(de.data()[i]);
    }
    for (Mat<double> W::*field : {&W::transitions, &W::start, &W::end}) {
      for (Eigen::Index i = 0; i < (w.*field).size(); ++i) {
        W p = w, m = w;
        (p.*field).data()[i] += eps;
        (m.*field).data()[i] -= eps;
        num.push_back((loss(p, e) - loss(m, e)) / (2 * eps));
        a.push_back((dw.*field).data()[i]);
      }
    }
    Eigen::Map<Vec<double>> av(a.data(), a.size()), nv(num.data(), num.size());
    CHECK((av - nv).norm() / std::max(av.norm(), nv.norm()) < 1e-6);
  }
}
