#pragma once

// Regularized least squares over a stream of (design, target) blocks.
//
// For blocks (X_n, Z_n) the minimizer of
//     sum_n ||Z_n - X_n W||_F^2 + gamma ||W||_F^2
// is W = (sum_n X_n^T X_n + gamma I)^{-1} sum_n X_n^T Z_n. Only the two sums
// are kept, so the data is visited once and gamma can be chosen afterwards.

#include <cstddef>
#include <cstdint>

#include "acnnl/tensor.hpp"

namespace acnnl {

class GramAccumulator {
 public:
  GramAccumulator() = default;
  GramAccumulator(std::size_t dim_in, std::size_t dim_out);

  // gram += x^T x, cross += x^T z. `samples` is how many input samples the
  // rows of x came from (a conv sample contributes `positions` rows).
  void accumulate(const Mat& x, const Mat& z, std::size_t samples = 1);

  // Adds another accumulator's sums and counters into this one.
  void merge_from(const GramAccumulator& other);

  std::size_t dim_in() const noexcept { return gram_.rows(); }
  std::size_t dim_out() const noexcept { return cross_.cols(); }
  const Mat& gram() const noexcept { return gram_; }
  const Mat& cross() const noexcept { return cross_; }
  std::uint64_t samples_seen() const noexcept { return samples_seen_; }
  std::uint64_t rows_seen() const noexcept { return rows_seen_; }

 private:
  Mat gram_;
  Mat cross_;
  std::uint64_t samples_seen_ = 0;
  std::uint64_t rows_seen_ = 0;
};

GramAccumulator merge(const GramAccumulator& a, const GramAccumulator& b);

struct LayerSolution {
  Mat weights;
  bool used_pseudoinverse = false;
  // max/min diagonal of the Cholesky factor, squared; 0 when the
  // pseudoinverse path ran.
  double condition_estimate = 0;
};

// gamma > 0: Cholesky on gram + gamma*I, falling back to the pseudoinverse
// (with a diagnostic) if the factorization fails. gamma == 0: pinv(gram)*cross.
LayerSolution solve_layer_detailed(const GramAccumulator& acc, double gamma);

Mat solve_layer(const GramAccumulator& acc, double gamma);

// One-shot (x^T x + gamma I)^{-1} x^T z.
Mat ridge_solve(const Mat& x, const Mat& z, double gamma);

}  // namespace acnnl
