#pragma once

#include <Eigen/Dense>

#include "acnnl/tensor.hpp"

namespace acnnl::detail {

using RowMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

inline MatMap view(Mat& m) {
  return {m.data().data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())};
}

inline ConstMatMap view(const Mat& m) {
  return {m.data().data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())};
}

inline ConstMatMap view(std::span<const Real> data, std::size_t rows, std::size_t cols) {
  return {data.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

inline MatMap view(std::span<Real> data, std::size_t rows, std::size_t cols) {
  return {data.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

}  // namespace acnnl::detail
