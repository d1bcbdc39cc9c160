#include "fader/gru.h"

#include <cmath>

namespace fader::gru {

namespace {

template <typename S>
S Sigmoid(S x) {
  return x >= 0 ? S(1) / (S(1) + std::exp(-x)) : std::exp(x) / (S(1) + std::exp(x));
}

}  // namespace

template <typename S>
void Forward(const Weights<S>& w, const Mat<S>& xs, bool reverse, Mat<S>* hs, Tape<S>* tape) {
  const int len = static_cast<int>(xs.rows()), hidden = w.hidden();
  Tape<S> local;
  Tape<S>& tp = tape ? *tape : local;
  tp.x.resize(len, xs.cols());
  for (int s = 0; s < len; ++s) tp.x.row(s) = xs.row(reverse ? len - 1 - s : s);
  Mat<S> gx = tp.x * w.w.transpose();
  gx.rowwise() += w.b.row(0);
  tp.h = Mat<S>::Zero(len + 1, hidden);
  tp.r.resize(len, hidden);
  tp.z.resize(len, hidden);
  tp.n.resize(len, hidden);
  tp.un.resize(len, hidden);
  hs->resize(len, hidden);

  for (int s = 0; s < len; ++s) {
    const auto h_prev = tp.h.row(s).transpose();
    const Vec<S> gh = w.u * h_prev;
    for (int k = 0; k < hidden; ++k) {
      const S r = Sigmoid(gx(s, k) + gh(k));
      const S z = Sigmoid(gx(s, hidden + k) + gh(hidden + k));
      const S un = gh(2 * hidden + k);
      const S n = std::tanh(gx(s, 2 * hidden + k) + r * un);
      tp.r(s, k) = r;
      tp.z(s, k) = z;
      tp.un(s, k) = un;
      tp.n(s, k) = n;
      tp.h(s + 1, k) = (S(1) - z) * n + z * h_prev(k);
    }
    hs->row(reverse ? len - 1 - s : s) = tp.h.row(s + 1);
  }
}

template <typename S>
void Backward(const Weights<S>& w, const Tape<S>& tp, const Mat<S>& d_hs, bool reverse,
              Weights<S>* grads, Mat<S>* d_xs) {
  const int len = static_cast<int>(tp.x.rows()), hidden = w.hidden();
  Mat<S> d_gx(len, 3 * hidden);
  Vec<S> dh_next = Vec<S>::Zero(hidden);
  Vec<S> d_gh(3 * hidden);
  for (int s = len - 1; s >= 0; --s) {
    const Vec<S> dh = d_hs.row(reverse ? len - 1 - s : s).transpose() + dh_next;
    Vec<S> dh_prev(hidden);
    for (int k = 0; k < hidden; ++k) {
      const S r = tp.r(s, k), z = tp.z(s, k), n = tp.n(s, k), hp = tp.h(s, k);
      const S dn_pre = dh(k) * (S(1) - z) * (S(1) - n * n);
      const S dz_pre = dh(k) * (hp - n) * z * (S(1) - z);
      const S dr_pre = dn_pre * tp.un(s, k) * r * (S(1) - r);
      d_gx(s, k) = dr_pre;
      d_gx(s, hidden + k) = dz_pre;
      d_gx(s, 2 * hidden + k) = dn_pre;
      d_gh(k) = dr_pre;
      d_gh(hidden + k) = dz_pre;
      d_gh(2 * hidden + k) = dn_pre * r;
      dh_prev(k) = dh(k) * z;
    }
    grads->u.noalias() += d_gh * tp.h.row(s);
    dh_prev.noalias() += w.u.transpose() * d_gh;
    dh_next = dh_prev;
  }
  grads->w.noalias() += d_gx.transpose() * tp.x;
  grads->b.row(0) += d_gx.colwise().sum();
  Mat<S> dx = d_gx * w.w;
  d_xs->resize(len, tp.x.cols());
  for (int s = 0; s < len; ++s) d_xs->row(reverse ? len - 1 - s : s) = dx.row(s);
}

template void Forward(const Weights<double>&, const Mat<double>&, bool, Mat<double>*, Tape<double>*);
template void Forward(const Weights<float>&, const Mat<float>&, bool, Mat<float>*, Tape<float>*);
template void Backward(const Weights<double>&, const Tape<double>&, const Mat<double>&, bool,
                       Weights<double>*, Mat<double>*);
template void Backward(const Weights<float>&, const Tape<float>&, const Mat<float>&, bool,
                       Weights<float>*, Mat<float>*);

}  // namespace fader::gru
