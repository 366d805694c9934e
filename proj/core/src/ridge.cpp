#include "acnnl/ridge.hpp"

#include <cmath>
#include <string>

#include "acnnl/diagnostics.hpp"
#include "acnnl/errors.hpp"
#include "eigen_view.hpp"

namespace acnnl {

GramAccumulator::GramAccumulator(std::size_t dim_in, std::size_t dim_out)
    : gram_(dim_in, dim_in), cross_(dim_in, dim_out) {
  if (dim_in == 0 || dim_out == 0) throw ShapeError("GramAccumulator: zero dimension");
}

void GramAccumulator::accumulate(const Mat& x, const Mat& z, std::size_t samples) {
  if (x.cols() != dim_in() || z.cols() != dim_out() || x.rows() != z.rows()) {
    throw ShapeError("GramAccumulator::accumulate: expected x ?x" + std::to_string(dim_in()) + " and z ?x" +
                     std::to_string(dim_out()) + " with equal rows, got " + std::to_string(x.rows()) + "x" +
                     std::to_string(x.cols()) + " and " + std::to_string(z.rows()) + "x" + std::to_string(z.cols()));
  }
  if (x.rows() > 0) {
    auto g = detail::view(gram_);
    const auto xv = detail::view(x);
    // Symmetric rank-k update on the lower triangle, mirrored so the stored
    // matrix is exactly symmetric.
    g.selfadjointView<Eigen::Lower>().rankUpdate(xv.transpose());
    const std::size_t d = dim_in();
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = r + 1; c < d; ++c) gram_(r, c) = gram_(c, r);
    detail::view(cross_).noalias() += xv.transpose() * detail::view(z);
  }
  samples_seen_ += samples;
  rows_seen_ += x.rows();
}

void GramAccumulator::merge_from(const GramAccumulator& other) {
  if (other.dim_in() != dim_in() || other.dim_out() != dim_out()) {
    throw ShapeError("GramAccumulator::merge: dimension mismatch");
  }
  gram_ += other.gram_;
  cross_ += other.cross_;
  samples_seen_ += other.samples_seen_;
  rows_seen_ += other.rows_seen_;
}

GramAccumulator merge(const GramAccumulator& a, const GramAccumulator& b) {
  GramAccumulator out = a;
  out.merge_from(b);
  return out;
}

LayerSolution solve_layer_detailed(const GramAccumulator& acc, double gamma) {
  if (!(gamma >= 0) || !std::isfinite(gamma)) throw ValidationError("solve_layer: gamma must be finite and >= 0");
  if (acc.samples_seen() == 0 && acc.rows_seen() == 0) {
    throw ValidationError("solve_layer: nothing accumulated");
  }

  LayerSolution out;
  if (gamma > 0) {
    Mat a = acc.gram();
    for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) += gamma;
    Eigen::LLT<detail::RowMatrix> llt(detail::view(a));
    if (llt.info() == Eigen::Success) {
      out.weights = Mat(acc.dim_in(), acc.dim_out());
      detail::view(out.weights) = llt.solve(detail::view(acc.cross()));
      if (detail::view(out.weights).allFinite()) {
        const auto diag = llt.matrixLLT().diagonal();
        const double ratio = diag.maxCoeff() / diag.minCoeff();
        out.condition_estimate = ratio * ratio;
        return out;
      }
    }
    emit_warning("solve_layer: Cholesky factorization failed for gamma=" + std::to_string(gamma) +
                 ", falling back to pseudoinverse");
    out.weights = pinv_solve(a, acc.cross());
    out.used_pseudoinverse = true;
    return out;
  }

  out.weights = pinv_solve(acc.gram(), acc.cross());
  out.used_pseudoinverse = true;
  return out;
}

Mat solve_layer(const GramAccumulator& acc, double gamma) { return solve_layer_detailed(acc, gamma).weights; }

Mat ridge_solve(const Mat& x, const Mat& z, double gamma) {
  if (x.rows() != z.rows()) throw ShapeError("ridge_solve: x and z row counts differ");
  GramAccumulator acc(x.cols(), z.cols());
  acc.accumulate(x, z);
  return solve_layer(acc, gamma);
}

}  // namespace acnnl
