#include "acnnl/im2col.hpp"

#include <algorithm>
#include <string>

#include "acnnl/errors.hpp"

namespace acnnl {

ConvGeometry ConvGeometry::make(std::size_t channels, std::size_t width, std::size_t height, std::size_t kernel) {
  if (channels == 0 || width == 0 || height == 0 || kernel == 0) {
    throw ShapeError("ConvGeometry: zero dimension");
  }
  if (kernel > std::min(width, height)) {
    throw ShapeError("ConvGeometry: kernel " + std::to_string(kernel) + " exceeds input " + std::to_string(width) +
                     "x" + std::to_string(height));
  }
  return ConvGeometry{channels, width, height, kernel};
}

Mat flatten_weights(std::span<const Tensor3> filters) {
  if (filters.empty()) throw ShapeError("flatten_weights: no filters");
  const Tensor3& first = filters.front();
  if (first.width() != first.height()) throw ShapeError("flatten_weights: filters must be square");
  const std::size_t d = first.size();
  Mat w(d, filters.size());
  for (std::size_t j = 0; j < filters.size(); ++j) {
    if (!filters[j].same_shape(first)) throw ShapeError("flatten_weights: heterogeneous filter shapes");
    const auto src = filters[j].data();
    for (std::size_t i = 0; i < d; ++i) w(i, j) = src[i];
  }
  return w;
}

std::vector<Tensor3> unflatten_weights(const Mat& w, std::size_t channels, std::size_t kernel) {
  const std::size_t d = channels * kernel * kernel;
  if (d == 0 || w.rows() != d) {
    throw ShapeError("unflatten_weights: " + std::to_string(w.rows()) + " rows is not " + std::to_string(channels) +
                     "*" + std::to_string(kernel) + "^2");
  }
  std::vector<Tensor3> filters;
  filters.reserve(w.cols());
  for (std::size_t j = 0; j < w.cols(); ++j) {
    std::vector<Real> data(d);
    for (std::size_t i = 0; i < d; ++i) data[i] = w(i, j);
    filters.emplace_back(channels, kernel, kernel, std::move(data));
  }
  return filters;
}

void im2col_into(const Tensor3& x, const ConvGeometry& geom, std::span<Real> out, std::size_t row_stride) {
  if (x.channels() != geom.in_channels || x.width() != geom.in_width || x.height() != geom.in_height) {
    throw ShapeError("im2col: input does not match geometry");
  }
  const std::size_t k = geom.kernel;
  const std::size_t ow = geom.out_width();
  const std::size_t oh = geom.out_height();
  if (row_stride < geom.patch_size() || out.size() < (geom.positions() - 1) * row_stride + geom.patch_size()) {
    throw ShapeError("im2col: output buffer too small");
  }

  const Real* src = x.data().data();
  const std::size_t plane = x.width() * x.height();
  for (std::size_t h = 0; h < oh; ++h) {
    for (std::size_t w = 0; w < ow; ++w) {
      Real* dst = out.data() + (w + h * ow) * row_stride;
      for (std::size_t c = 0; c < geom.in_channels; ++c) {
        const Real* base = src + c * plane + w * x.height() + h;
        for (std::size_t a = 0; a < k; ++a) {
          std::copy_n(base + a * x.height(), k, dst);
          dst += k;
        }
      }
    }
  }
}

Mat im2col(const Tensor3& x, std::size_t kernel) {
  const auto geom = ConvGeometry::of(x, kernel);
  Mat m(geom.positions(), geom.patch_size());
  im2col_into(x, geom, m.data(), m.cols());
  return m;
}

Tensor3 col2im(const Mat& m, const ConvGeometry& geom) {
  if (m.rows() != geom.positions() || m.cols() == 0) {
    throw ShapeError("col2im: expected " + std::to_string(geom.positions()) + " rows, got " +
                     std::to_string(m.rows()));
  }
  const std::size_t ow = geom.out_width();
  const std::size_t oh = geom.out_height();
  Tensor3 out(m.cols(), ow, oh);
  for (std::size_t h = 0; h < oh; ++h)
    for (std::size_t w = 0; w < ow; ++w) {
      const auto r = m.row(w + h * ow);
      for (std::size_t j = 0; j < m.cols(); ++j) out(j, w, h) = r[j];
    }
  return out;
}

Tensor3 loop_conv(const Tensor3& x, std::span<const Tensor3> filters) {
  if (filters.empty()) throw ShapeError("loop_conv: no filters");
  const std::size_t k = filters.front().width();
  for (const auto& f : filters) {
    if (f.channels() != x.channels() || f.width() != k || f.height() != k) {
      throw ShapeError("loop_conv: filter shape incompatible with input");
    }
  }
  const auto geom = ConvGeometry::of(x, k);
  Tensor3 out(filters.size(), geom.out_width(), geom.out_height());
  for (std::size_t j = 0; j < filters.size(); ++j)
    for (std::size_t w = 0; w < geom.out_width(); ++w)
      for (std::size_t h = 0; h < geom.out_height(); ++h) {
        Real acc = 0;
        for (std::size_t c = 0; c < x.channels(); ++c)
          for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < k; ++b) acc += x(c, w + a, h + b) * filters[j](c, a, b);
        out(j, w, h) = acc;
      }
  return out;
}

}  // namespace acnnl
