#ifndef FADER_CRF_H_
#define FADER_CRF_H_

#include <vector>

#include "fader/tagset.h"
#include "fader/tensor.h"

namespace fader::crf {

// Linear-chain CRF weights. Masked transitions, starts and ends are treated
// as -infinity whatever the stored value.
template <typename S>
struct Weights {
  Mat<S> transitions;  // T x T, [from, to]
  Mat<S> start;        // 1 x T
  Mat<S> end;          // 1 x T

  static Weights Zero(int tags) {
    return {Mat<S>::Zero(tags, tags), Mat<S>::Zero(1, tags), Mat<S>::Zero(1, tags)};
  }
};

// Score of a tag path under emissions (n x T); -infinity if masked.
template <typename S>
S PathScore(const TagSet& tagset, const Weights<S>& w, const Mat<S>& emissions,
            const std::vector<int>& path);

// log of the sum of exp(path score) over all mask-legal paths. n >= 1.
template <typename S>
S LogPartition(const TagSet& tagset, const Weights<S>& w, const Mat<S>& emissions);

// Negative log-likelihood of `gold`. Sets *d_emissions and adds into *d_w
// when given. Throws ArgumentError when the gold path is not mask-legal.
template <typename S>
S NegLogLikelihood(const TagSet& tagset, const Weights<S>& w, const Mat<S>& emissions,
                   const std::vector<int>& gold, Mat<S>* d_emissions, Weights<S>* d_w);

template <typename S>
struct Decoded {
  std::vector<int> path;
  S score;
};

// Highest-scoring legal path; among equal scores the lexicographically
// smallest index sequence.
template <typename S>
Decoded<S> Viterbi(const TagSet& tagset, const Weights<S>& w, const Mat<S>& emissions);

extern template double PathScore(const TagSet&, const Weights<double>&, const Mat<double>&, const std::vector<int>&);
extern template float PathScore(const TagSet&, const Weights<float>&, const Mat<float>&, const std::vector<int>&);
extern template double LogPartition(const TagSet&, const Weights<double>&, const Mat<double>&);
extern template float LogPartition(const TagSet&, const Weights<float>&, const Mat<float>&);
extern template double NegLogLikelihood(const TagSet&, const Weights<double>&, const Mat<double>&,
                                        const std::vector<int>&, Mat<double>*, Weights<double>*);
extern template float NegLogLikelihood(const TagSet&, const Weights<float>&, const Mat<float>&,
                                       const std::vector<int>&, Mat<float>*, Weights<float>*);
extern template Decoded<double> Viterbi(const TagSet&, const Weights<double>&, const Mat<double>&);
extern template Decoded<float> Viterbi(const TagSet&, const Weights<float>&, const Mat<float>&);

}  // namespace fader::crf

#endif  // FADER_CRF_H_
