#include "fader/crf.h"

#include <cmath>
#include <limits>

#include "fader/error.h"

namespace fader::crf {

namespace {

template <typename S>
constexpr S kNegInf = -std::numeric_limits<S>::infinity();

template <typename S>
S LogSumExp(const S* v, int n) {
  S m = kNegInf<S>;
  for (int i = 0; i < n; ++i) m = std::max(m, v[i]);
  if (m == kNegInf<S>) return m;
  S sum = 0;
  for (int i = 0; i < n; ++i) sum += std::exp(v[i] - m);
  return m + std::log(sum);
}

template <typename S>
S Trans(const TagSet& ts, const Weights<S>& w, int from, int to) {
  return ts.Allowed(from, to) ? w.transitions(from, to) : kNegInf<S>;
}

template <typename S>
S Start(const TagSet& ts, const Weights<S>& w, int to) {
  return ts.StartAllowed(to) ? w.start(0, to) : kNegInf<S>;
}

template <typename S>
S End(const TagSet& ts, const Weights<S>& w, int from) {
  return ts.EndAllowed(from) ? w.end(0, from) : kNegInf<S>;
}

template <typename S>
Mat<S> Alpha(const TagSet& ts, const Weights<S>& w, const Mat<S>& e) {
  const int n = static_cast<int>(e.rows()), t_count = ts.size();
  Mat<S> alpha(n, t_count);
  std::vector<S> buf(t_count);
  for (int j = 0; j < t_count; ++j) alpha(0, j) = Start(ts, w, j) + e(0, j);
  for (int t = 1; t < n; ++t) {
    for (int j = 0; j < t_count; ++j) {
      for (int i = 0; i < t_count; ++i) buf[i] = alpha(t - 1, i) + Trans(ts, w, i, j);
      alpha(t, j) = LogSumExp(buf.data(), t_count) + e(t, j);
    }
  }
  return alpha;
}

template <typename S>
Mat<S> Beta(const TagSet& ts, const Weights<S>& w, const Mat<S>& e) {
  const int n = static_cast<int>(e.rows()), t_count = ts.size();
  Mat<S> beta(n, t_count);
  std::vector<S> buf(t_count);
  for (int i = 0; i < t_count; ++i) beta(n - 1, i) = End(ts, w, i);
  for (int t = n - 2; t >= 0; --t) {
    for (int i = 0; i < t_count; ++i) {
      for (int j = 0; j < t_count; ++j) buf[j] = Trans(ts, w, i, j) + e(t + 1, j) + beta(t + 1, j);
      beta(t, i) = LogSumExp(buf.data(), t_count);
    }
  }
  return beta;
}

template <typename S>
S Finish(const TagSet& ts, const Weights<S>& w, const Mat<S>& alpha) {
  const int n = static_cast<int>(alpha.rows()), t_count = ts.size();
  std::vector<S> buf(t_count);
  for (int j = 0; j < t_count; ++j) buf[j] = alpha(n - 1, j) + End(ts, w, j);
  return LogSumExp(buf.data(), t_count);
}

}  // namespace

template <typename S>
S PathScore(const TagSet& tagset, const Weights<S>& w, const Mat<S>& emissions,
            const std::vector<int>& path) {
  if (path.empty() || path.size() != static_cast<std::size_t>(emissions.rows())) {
    throw ArgumentError("path length does not match emissions");
  }
  S score = Start(tagset, w, path[0]) + emissions(0, path[0]);
  for (std::size_t t = 1; t < path.size(); ++t) {
    score += Trans(tagset, w, path[t - 1], path[t]) + emissions(t, path[t]);
  }
  return score + End(tagset, w, path.back());
}

template <typename S>
S LogPartition(const TagSet& tagset, const Weights<S>& w, const Mat<S>& emissions) {
  if (emissions.rows() < 1) throw ArgumentError("CRF needs at least one token");
  return Finish(tagset, w, Alpha(tagset, w, emissions));
}

template <typename S>
S NegLogLikelihood(const TagSet& tagset, const Weights<S>& w, const Mat<S>& emissions,
                   const std::vector<int>& gold, Mat<S>* d_emissions, Weights<S>* d_w) {
  if (emissions.rows() < 1) throw ArgumentError("CRF needs at least one token");
  if (gold.size() != static_cast<std::size_t>(emissions.rows()) || !tagset.Legal(gold)) {
    throw ArgumentError("gold tag path violates the BILOU mask");
  }
  const Mat<S> alpha = Alpha(tagset, w, emissions);
  const S log_z = Finish(tagset, w, alpha);
  const S loss = log_z - PathScore(tagset, w, emissions, gold);
  if (!d_emissions && !d_w) return loss;

  const int n = static_cast<int>(emissions.rows()), t_count = tagset.size();
  const Mat<S> beta = Beta(tagset, w, emissions);
  Mat<S> marginal(n, t_count);
  for (int t = 0; t < n; ++t) {
    for (int j = 0; j < t_count; ++j) marginal(t, j) = std::exp(alpha(t, j) + beta(t, j) - log_z);
  }
  if (d_emissions) {
    *d_emissions = marginal;
    for (int t = 0; t < n; ++t) (*d_emissions)(t, gold[t]) -= 1;
  }
  if (d_w) {
    for (int j = 0; j < t_count; ++j) {
      if (tagset.StartAllowed(j)) d_w->start(0, j) += marginal(0, j);
      if (tagset.EndAllowed(j)) d_w->end(0, j) += marginal(n - 1, j);
    }
    d_w->start(0, gold.front()) -= 1;
    d_w->end(0, gold.back()) -= 1;
    for (int t = 1; t < n; ++t) {
      for (int i = 0; i < t_count; ++i) {
        if (alpha(t - 1, i) == kNegInf<S>) continue;
        for (int j = 0; j < t_count; ++j) {
          if (!tagset.Allowed(i, j)) continue;
          d_w->transitions(i, j) += std::exp(alpha(t - 1, i) + w.transitions(i, j) +
                                             emissions(t, j) + beta(t, j) - log_z);
        }
      }
      d_w->transitions(gold[t - 1], gold[t]) -= 1;
    }
  }
  return loss;
}

template <typename S>
Decoded<S> Viterbi(const TagSet& tagset, const Weights<S>& w, const Mat<S>& emissions) {
  const int n = static_cast<int>(emissions.rows()), t_count = tagset.size();
  if (n < 1) throw ArgumentError("CRF needs at least one token");
  // Best suffix score from each (position, tag); choosing forward greedily
  // with the smallest maximising index yields the lexicographic tie-break.
  Mat<S> best(n, t_count);
  for (int i = 0; i < t_count; ++i) best(n - 1, i) = emissions(n - 1, i) + End(tagset, w, i);
  for (int t = n - 2; t >= 0; --t) {
    for (int i = 0; i < t_count; ++i) {
      S m = kNegInf<S>;
      for (int j = 0; j < t_count; ++j) m = std::max(m, Trans(tagset, w, i, j) + best(t + 1, j));
      best(t, i) = emissions(t, i) + m;
    }
  }
  Decoded<S> out;
  S top = kNegInf<S>;
  int choice = 0;
  for (int i = 0; i < t_count; ++i) {
    const S s = Start(tagset, w, i) + best(0, i);
    if (s > top) {
      top = s;
      choice = i;
    }
  }
  out.score = top;
  out.path.push_back(choice);
  for (int t = 1; t < n; ++t) {
    const int prev = out.path.back();
    S m = kNegInf<S>;
    choice = 0;
    for (int j = 0; j < t_count; ++j) {
      const S s = Trans(tagset, w, prev, j) + best(t, j);
      if (s > m) {
        m = s;
        choice = j;
      }
    }
    out.path.push_back(choice);
  }
  return out;
}

template double PathScore(const TagSet&, const Weights<double>&, const Mat<double>&, const std::vector<int>&);
template float PathScore(const TagSet&, const Weights<float>&, const Mat<float>&, const std::vector<int>&);
template double LogPartition(const TagSet&, const Weights<double>&, const Mat<double>&);
template float LogPartition(const TagSet&, const Weights<float>&, const Mat<float>&);
template double NegLogLikelihood(const TagSet&, const Weights<double>&, const Mat<double>&,
                                 const std::vector<int>&, Mat<double>*, Weights<double>*);
template float NegLogLikelihood(const TagSet&, const Weights<float>&, const Mat<float>&,
                                const std::vector<int>&, Mat<float>*, Weights<float>*);
template Decoded<double> Viterbi(const TagSet&, const Weights<double>&, const Mat<double>&);
template Decoded<float> Viterbi(const TagSet&, const Weights<float>&, const Mat<float>&);

}  // namespace fader::crf
