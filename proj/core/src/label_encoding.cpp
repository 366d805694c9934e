#include "acnnl/label_encoding.hpp"

#include <string>

#include "acnnl/errors.hpp"
#include "acnnl/rng.hpp"

namespace acnnl {

LabelEncoder make_encoder(std::size_t classes, std::size_t channels, std::size_t positions, std::uint64_t seed,
                          double scale) {
  if (classes == 0 || channels == 0 || positions == 0) throw ShapeError("make_encoder: zero dimension");
  LabelEncoder enc{classes, channels, positions, seed, scale, Mat(classes, channels * positions)};
  Rng rng(seed);
  for (Real& v : enc.q.data()) v = scale * rng.normal();
  return enc;
}

std::size_t hot_index(std::span<const Real> row) {
  std::size_t hot = row.size();
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (row[i] == Real{1}) {
      if (hot != row.size()) throw ValidationError("label row has more than one hot entry");
      hot = i;
    } else if (row[i] != Real{0}) {
      throw ValidationError("label row entry is neither 0 nor 1");
    }
  }
  if (hot == row.size()) throw ValidationError("label row has no hot entry");
  return hot;
}

Mat encode(const Mat& y, const LabelEncoder& enc) {
  if (y.cols() != enc.classes) {
    throw ShapeError("encode: label matrix has " + std::to_string(y.cols()) + " columns, encoder expects " +
                     std::to_string(enc.classes));
  }
  Mat out(y.rows(), enc.target_dim());
  for (std::size_t n = 0; n < y.rows(); ++n) {
    const auto src = enc.q.row(hot_index(y.row(n)));
    std::copy(src.begin(), src.end(), out.row(n).begin());
  }
  return out;
}

Mat reshape_target(std::span<const Real> row, std::size_t channels, std::size_t positions) {
  if (channels == 0 || positions == 0 || row.size() != channels * positions) {
    throw ShapeError("reshape_target: length " + std::to_string(row.size()) + " is not " +
                     std::to_string(channels) + "*" + std::to_string(positions));
  }
  Mat out(positions, channels);
  for (std::size_t j = 0; j < channels; ++j)
    for (std::size_t p = 0; p < positions; ++p) out(p, j) = row[j * positions + p];
  return out;
}

std::vector<Real> flatten_target(const Mat& target) {
  std::vector<Real> row(target.size());
  for (std::size_t j = 0; j < target.cols(); ++j)
    for (std::size_t p = 0; p < target.rows(); ++p) row[j * target.rows() + p] = target(p, j);
  return row;
}

}  // namespace acnnl
