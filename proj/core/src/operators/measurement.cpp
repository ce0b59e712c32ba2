#include <algorithm>
#include <cmath>
#include <numeric>

#include "nestanet/operators.hpp"

namespace nestanet {

SamplingMask::SamplingMask(int side, std::vector<std::int64_t> indices) : side_(side), indices_(std::move(indices)) {
  const auto n = static_cast<std::int64_t>(checked_pixel_count(side));
  if (indices_.empty()) throw InvalidArgument("sampling mask must select at least one frequency");
  if (static_cast<std::int64_t>(indices_.size()) > n) throw InvalidArgument("sampling mask larger than N");
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    if (indices_[i] < 0 || indices_[i] >= n) throw InvalidArgument("sampling mask index out of range");
    if (i > 0 && indices_[i] <= indices_[i - 1]) {
      throw InvalidArgument("sampling mask indices must be strictly increasing");
    }
  }
}

SamplingMask SamplingMask::full(int side) {
  std::vector<std::int64_t> all(static_cast<std::size_t>(checked_pixel_count(side)));
  std::iota(all.begin(), all.end(), std::int64_t{0});
  return SamplingMask(side, std::move(all));
}

MeasurementOperator::MeasurementOperator(SamplingMask mask)
    : mask_(std::move(mask)),
      scale_(1.0 / std::sqrt(static_cast<double>(mask_.m()))),
      nu_(static_cast<double>(mask_.pixel_count()) / static_cast<double>(mask_.m())) {}

Vec MeasurementOperator::apply(const Vec& x) const {
  expect_size(x, cols(), "MeasurementOperator::apply");
  Vec spectrum;
  dft2_forward(side(), x, spectrum);
  const auto& idx = mask_.indices();
  Vec y(rows());
  for (Eigen::Index j = 0; j < y.size(); ++j) y[j] = scale_ * spectrum[idx[static_cast<std::size_t>(j)]];
  return y;
}

Vec MeasurementOperator::adjoint(const Vec& y) const {
  expect_size(y, rows(), "MeasurementOperator::adjoint");
  Vec spectrum = Vec::Zero(cols());
  const auto& idx = mask_.indices();
  for (Eigen::Index j = 0; j < y.size(); ++j) spectrum[idx[static_cast<std::size_t>(j)]] = scale_ * y[j];
  Vec out;
  dft2_adjoint(side(), spectrum, out);
  return out;
}

Vec measure(const MeasurementOperator& A, const ImageGrid& x) {
  if (x.side() != A.side()) throw DimensionMismatch("measure: image side does not match mask side");
  return A.apply(x.data());
}

ImageGrid measure_adjoint(const MeasurementOperator& A, const Vec& y) { return ImageGrid(A.side(), A.adjoint(y)); }

ImageGrid pseudoinverse(const MeasurementOperator& A, const Vec& y) {
  return ImageGrid(A.side(), A.adjoint(y) / A.nu());
}

double best_s_term_error(const Vec& z, std::int64_t s) {
  if (s < 0 || s > z.size()) throw InvalidArgument("best_s_term_error: s out of range");
  std::vector<double> mags(static_cast<std::size_t>(z.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i) mags[static_cast<std::size_t>(i)] = std::abs(z[i]);
  const auto tail = static_cast<std::ptrdiff_t>(z.size() - s);
  std::nth_element(mags.begin(), mags.begin() + tail, mags.end());
  std::sort(mags.begin(), mags.begin() + tail);
  return std::accumulate(mags.begin(), mags.begin() + tail, 0.0);
}

}  // namespace nestanet
