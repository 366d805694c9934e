#include "acnnl/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "acnnl/diagnostics.hpp"
#include "acnnl/errors.hpp"
#include "eigen_view.hpp"

namespace acnnl {
namespace {

std::string dims(const Mat& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

void require_same_shape(const Mat& a, const Mat& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + dims(a) + " vs " + dims(b));
  }
}

}  // namespace

Mat::Mat(std::size_t rows, std::size_t cols, Real fill) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<Real> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("Mat: data length " + std::to_string(data_.size()) + " does not match " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Mat Mat::from_rows(std::initializer_list<std::initializer_list<Real>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<Real> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("Mat::from_rows: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Mat(r, c, std::move(data));
}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
  return m;
}

void Mat::resize(std::size_t rows, std::size_t cols) {
  rows_ = rows;
  cols_ = cols;
  data_.resize(rows * cols);
}

void Mat::fill(Real value) { std::fill(data_.begin(), data_.end(), value); }

Mat Mat::transposed() const {
  Mat t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Mat& Mat::operator+=(const Mat& other) {
  require_same_shape(*this, other, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Mat& Mat::operator-=(const Mat& other) {
  require_same_shape(*this, other, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Mat& Mat::operator*=(Real s) {
  for (auto& v : data_) v *= s;
  return *this;
}

Mat operator+(Mat a, const Mat& b) { return a += b; }
Mat operator-(Mat a, const Mat& b) { return a -= b; }
Mat operator*(Real s, Mat a) { return a *= s; }

Tensor3::Tensor3(std::size_t channels, std::size_t width, std::size_t height, Real fill)
    : Tensor3(channels, width, height, std::vector<Real>(channels * width * height, fill)) {}

Tensor3::Tensor3(std::size_t channels, std::size_t width, std::size_t height, std::vector<Real> data)
    : channels_(channels), width_(width), height_(height), data_(std::move(data)) {
  if (channels == 0 || width == 0 || height == 0) {
    throw ShapeError("Tensor3: every dimension must be at least 1");
  }
  if (data_.size() != channels * width * height) {
    throw ShapeError("Tensor3: data length " + std::to_string(data_.size()) + " does not match " +
                     std::to_string(channels) + "x" + std::to_string(width) + "x" + std::to_string(height));
  }
}

Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: " + dims(a) + " * " + dims(b));
  Mat out(a.rows(), b.cols());
  if (a.cols() == 0) return out;
  detail::view(out).noalias() = detail::view(a) * detail::view(b);
  return out;
}

Mat matmul_tn(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows()) throw ShapeError("matmul_tn: " + dims(a) + "^T * " + dims(b));
  Mat out(a.cols(), b.cols());
  if (a.rows() == 0) return out;
  detail::view(out).noalias() = detail::view(a).transpose() * detail::view(b);
  return out;
}

Mat sym_solve(const Mat& a, const Mat& b) {
  if (a.rows() != a.cols()) throw ShapeError("sym_solve: matrix is not square: " + dims(a));
  if (a.rows() != b.rows()) throw ShapeError("sym_solve: " + dims(a) + " vs rhs " + dims(b));

  const auto av = detail::view(a);
  const Real scale = a.empty() ? Real{0} : av.cwiseAbs().maxCoeff();
  const Real asym = a.empty() ? Real{0} : (av - av.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-9 * std::max(scale, Real{1})) {
    throw ShapeError("sym_solve: matrix is not symmetric (max asymmetry " + std::to_string(asym) + ")");
  }

  Eigen::LLT<detail::RowMatrix> llt(av);
  if (llt.info() != Eigen::Success) {
    throw SingularityError("sym_solve: matrix is not positive definite");
  }
  Mat x(b.rows(), b.cols());
  detail::view(x) = llt.solve(detail::view(b));
  if (!detail::view(x).allFinite()) throw SingularityError("sym_solve: non-finite solution");
  return x;
}

Mat pinv_solve(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows()) throw ShapeError("pinv_solve: " + dims(a) + " vs rhs " + dims(b));
  Mat x(a.cols(), b.cols());
  if (a.empty()) return x;

  Eigen::CompleteOrthogonalDecomposition<detail::RowMatrix> cod(detail::view(a));
  const auto full = static_cast<Eigen::Index>(std::min(a.rows(), a.cols()));
  if (cod.rank() < full) {
    emit_warning("pinv_solve: effective rank " + std::to_string(cod.rank()) + " < " + std::to_string(full));
  }
  if (cod.rank() == 0) return x;
  detail::view(x) = cod.solve(detail::view(b));
  return x;
}

Mat pinv(const Mat& a) {
  Mat out(a.cols(), a.rows());
  if (a.empty()) return out;
  Eigen::CompleteOrthogonalDecomposition<detail::RowMatrix> cod(detail::view(a));
  if (cod.rank() == 0) return out;
  detail::view(out) = cod.pseudoInverse();
  return out;
}

Real frobenius_norm(const Mat& a) {
  Real sum = 0;
  for (Real v : a.data()) sum += v * v;
  return std::sqrt(sum);
}

Real max_abs_diff(const Mat& a, const Mat& b) {
  require_same_shape(a, b, "max_abs_diff");
  Real worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  return worst;
}

Real max_abs_diff(const Tensor3& a, const Tensor3& b) {
  if (!a.same_shape(b)) throw ShapeError("max_abs_diff: tensor shape mismatch");
  Real worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  return worst;
}

}  // namespace acnnl
