#pragma once

// Dense row-major matrices and C x W x H feature maps, plus the handful of
// products and solves the trainer needs.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace acnnl {

using Real = double;

class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, Real fill = Real{0});
  Mat(std::size_t rows, std::size_t cols, std::vector<Real> data);

  // Mat::from_rows({{1, 2}, {3, 4}})
  static Mat from_rows(std::initializer_list<std::initializer_list<Real>> rows);
  static Mat identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  Real& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  Real operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<Real> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const Real> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  std::span<Real> data() noexcept { return data_; }
  std::span<const Real> data() const noexcept { return data_; }

  // Reshapes in place; contents are unspecified afterwards unless the
  // element count is unchanged. Keeps capacity when shrinking.
  void resize(std::size_t rows, std::size_t cols);
  void fill(Real value);

  Mat transposed() const;

  Mat& operator+=(const Mat& other);
  Mat& operator-=(const Mat& other);
  Mat& operator*=(Real s);

  friend bool operator==(const Mat&, const Mat&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Real> data_;
};

Mat operator+(Mat a, const Mat& b);
Mat operator-(Mat a, const Mat& b);
Mat operator*(Real s, Mat a);

// Feature map with element (c, w, h) at c*W*H + w*H + h.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(std::size_t channels, std::size_t width, std::size_t height, Real fill = Real{0});
  Tensor3(std::size_t channels, std::size_t width, std::size_t height, std::vector<Real> data);

  std::size_t channels() const noexcept { return channels_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }

  Real& operator()(std::size_t c, std::size_t w, std::size_t h) noexcept {
    return data_[(c * width_ + w) * height_ + h];
  }
  Real operator()(std::size_t c, std::size_t w, std::size_t h) const noexcept {
    return data_[(c * width_ + w) * height_ + h];
  }

  std::span<Real> data() noexcept { return data_; }
  std::span<const Real> data() const noexcept { return data_; }
  std::vector<Real> release() && { return std::move(data_); }

  bool same_shape(const Tensor3& other) const noexcept {
    return channels_ == other.channels_ && width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const Tensor3&, const Tensor3&) = default;

 private:
  std::size_t channels_ = 0;
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<Real> data_;
};

Mat matmul(const Mat& a, const Mat& b);

// a^T * b without materializing the transpose.
Mat matmul_tn(const Mat& a, const Mat& b);

// Solves a*X = b for symmetric positive-definite a via Cholesky.
// Throws ShapeError on non-square/asymmetric/non-conforming input and
// SingularityError when the factorization breaks down.
Mat sym_solve(const Mat& a, const Mat& b);

// Returns pinv(a) * b using a complete orthogonal decomposition. Emits a
// diagnostic when a is rank deficient.
Mat pinv_solve(const Mat& a, const Mat& b);

// Moore-Penrose pseudoinverse of a.
Mat pinv(const Mat& a);

Real frobenius_norm(const Mat& a);
Real max_abs_diff(const Mat& a, const Mat& b);
Real max_abs_diff(const Tensor3& a, const Tensor3& b);

}  // namespace acnnl
