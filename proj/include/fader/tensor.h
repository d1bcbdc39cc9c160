#ifndef FADER_TENSOR_H_
#define FADER_TENSOR_H_

#include <Eigen/Core>

namespace fader {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

}  // namespace fader

#endif  // FADER_TENSOR_H_
