#ifndef FADER_GRU_H_
#define FADER_GRU_H_

#include "fader/tensor.h"

namespace fader::gru {

// Gated recurrent unit, gate rows ordered reset, update, candidate:
//   r = s(Wr x + Ur h + br), z = s(Wz x + Uz h + bz)
//   n = tanh(Wn x + bn + r * (Un h)), h' = (1 - z) * n + z * h
template <typename S>
struct Weights {
  Mat<S> w;  // 3H x in
  Mat<S> u;  // 3H x H
  Mat<S> b;  // 1 x 3H

  int hidden() const { return static_cast<int>(u.cols()); }
  static Weights Zero(int in, int hidden) {
    return {Mat<S>::Zero(3 * hidden, in), Mat<S>::Zero(3 * hidden, hidden), Mat<S>::Zero(1, 3 * hidden)};
  }
};

// Activations kept for the backward pass, in processing order.
template <typename S>
struct Tape {
  Mat<S> x;     // len x in, processing order
  Mat<S> h;     // (len + 1) x H; row 0 is the zero initial state
  Mat<S> r, z, n, un;
};

// Runs over the rows of `xs` (backwards when `reverse`) from a zero state.
// `hs` receives one hidden row per input row, aligned with `xs`.
template <typename S>
void Forward(const Weights<S>& w, const Mat<S>& xs, bool reverse, Mat<S>* hs, Tape<S>* tape);

// Given d loss / d hs (aligned with xs), adds weight gradients into *grads
// and sets *d_xs.
template <typename S>
void Backward(const Weights<S>& w, const Tape<S>& tape, const Mat<S>& d_hs, bool reverse,
              Weights<S>* grads, Mat<S>* d_xs);

extern template void Forward(const Weights<double>&, const Mat<double>&, bool, Mat<double>*, Tape<double>*);
extern template void Forward(const Weights<float>&, const Mat<float>&, bool, Mat<float>*, Tape<float>*);
extern template void Backward(const Weights<double>&, const Tape<double>&, const Mat<double>&, bool,
                              Weights<double>*, Mat<double>*);
extern template void Backward(const Weights<float>&, const Tape<float>&, const Mat<float>&, bool,
                              Weights<float>*, Mat<float>*);

}  // namespace fader::gru

#endif  // FADER_GRU_H_
