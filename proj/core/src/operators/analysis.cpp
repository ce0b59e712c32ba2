#include <cmath>

#include "nestanet/operators.hpp"

namespace nestanet {

void gradient_forward(int side, const Vec& in, Vec& out) {
  const auto count = checked_pixel_count(side);
  expect_size(in, count, "gradient_forward");
  out.resize(2 * count);
  const int n = side;
  for (int i = 0; i < n; ++i) {
    const int down = (i + 1) & (n - 1);
    for (int j = 0; j < n; ++j) {
      const int right = (j + 1) & (n - 1);
      const auto k = static_cast<Eigen::Index>(i) * n + j;
      out[k] = in[static_cast<Eigen::Index>(i) * n + right] - in[k];
      out[count + k] = in[static_cast<Eigen::Index>(down) * n + j] - in[k];
    }
  }
}

void gradient_adjoint(int side, const Vec& in, Vec& out) {
  const auto count = checked_pixel_count(side);
  expect_size(in, 2 * count, "gradient_adjoint");
  out.resize(count);
  const int n = side;
  for (int i = 0; i < n; ++i) {
    const int up = (i + n - 1) & (n - 1);
    for (int j = 0; j < n; ++j) {
      const int left = (j + n - 1) & (n - 1);
      const auto k = static_cast<Eigen::Index>(i) * n + j;
      out[k] = (in[static_cast<Eigen::Index>(i) * n + left] - in[k]) +
               (in[count + static_cast<Eigen::Index>(up) * n + j] - in[count + k]);
    }
  }
}

Vec gradient_forward(const ImageGrid& x) {
  Vec out;
  gradient_forward(x.side(), x.data(), out);
  return out;
}

ImageGrid gradient_adjoint(int side, const Vec& diffs) {
  Vec out;
  gradient_adjoint(side, diffs, out);
  return ImageGrid(side, std::move(out));
}

AnalysisOperator::AnalysisOperator(int side, double weight)
    : side_(side), weight_(weight), sqrt_weight_(std::sqrt(weight)), levels_(0), pixels_(checked_pixel_count(side)) {
  if (!(weight >= 0.0) || !std::isfinite(weight)) throw InvalidArgument("analysis weight lambda must be finite and >= 0");
  for (int s = side; s > 1; s /= 2) ++levels_;
}

Vec AnalysisOperator::apply(const Vec& x) const {
  expect_size(x, pixels_, "AnalysisOperator::apply");
  Vec out(3 * pixels_);
  Vec part;
  haar_forward(side_, x, part);
  out.head(pixels_) = part;
  gradient_forward(side_, x, part);
  out.tail(2 * pixels_) = sqrt_weight_ * part;
  return out;
}

Vec AnalysisOperator::adjoint(const Vec& z) const {
  expect_size(z, 3 * pixels_, "AnalysisOperator::adjoint");
  Vec wavelet;
  haar_inverse(side_, z.head(pixels_), wavelet);
  Vec grad;
  gradient_adjoint(side_, z.tail(2 * pixels_), grad);
  return wavelet + sqrt_weight_ * grad;
}

Vec analysis_apply(const AnalysisOperator& w, const ImageGrid& x) {
  if (x.side() != w.side()) throw DimensionMismatch("analysis_apply: image side does not match operator");
  return w.apply(x.data());
}

ImageGrid synthesis_apply(const AnalysisOperator& w, const Vec& z) { return ImageGrid(w.side(), w.adjoint(z)); }

}  // namespace nestanet
