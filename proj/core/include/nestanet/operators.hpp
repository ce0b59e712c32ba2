#pragma once

// Linear operators for subsampled Fourier imaging with a Haar-plus-gradient
// analysis transform. Images are n x n, n a power of two, flattened row-major.

#include <cstdint>
#include <vector>

#include "nestanet/common.hpp"

namespace nestanet {

// ---------------------------------------------------------------------------
// Fourier transform
// ---------------------------------------------------------------------------

/// Unnormalized 2D DFT, (Fx)_k = sum_j x_j exp(-2 pi i <k, j> / n). F F^* = N I.
/// Output is in natural (unshifted) order: flat index k1 * n + k2.
Vec dft2_forward(const ImageGrid& x);

/// F^* applied to a length-N spectrum (unnormalized inverse DFT).
ImageGrid dft2_adjoint(int side, const Vec& spectrum);

/// Raw-vector forms used by the solvers.
void dft2_forward(int side, const Vec& in, Vec& out);
void dft2_adjoint(int side, const Vec& in, Vec& out);

/// Centered frequency coordinate of a DFT bin, fftshift convention:
/// bins k < n/2 map to k, bins k >= n/2 map to k - n, so omega in [-n/2, n/2).
[[nodiscard]] constexpr int centered_frequency(int bin, int side) noexcept {
  return bin < side / 2 ? bin : bin - side;
}

// ---------------------------------------------------------------------------
// Sampling mask and measurement operator
// ---------------------------------------------------------------------------

/// Strictly increasing flat indices into the unshifted DFT grid.
class SamplingMask {
 public:
  SamplingMask(int side, std::vector<std::int64_t> indices);

  /// Every frequency selected.
  [[nodiscard]] static SamplingMask full(int side);

  [[nodiscard]] int side() const noexcept { return side_; }
  [[nodiscard]] std::int64_t m() const noexcept { return static_cast<std::int64_t>(indices_.size()); }
  [[nodiscard]] std::int64_t pixel_count() const noexcept { return static_cast<std::int64_t>(side_) * side_; }
  [[nodiscard]] const std::vector<std::int64_t>& indices() const noexcept { return indices_; }

  friend bool operator==(const SamplingMask&, const SamplingMask&) = default;

 private:
  int side_;
  std::vector<std::int64_t> indices_;
};

/// A = (1/sqrt(m)) P_Omega F, with A A^* = nu I and nu = N/m.
class MeasurementOperator {
 public:
  explicit MeasurementOperator(SamplingMask mask);

  [[nodiscard]] const SamplingMask& mask() const noexcept { return mask_; }
  [[nodiscard]] int side() const noexcept { return mask_.side(); }
  [[nodiscard]] Eigen::Index rows() const noexcept { return mask_.m(); }
  [[nodiscard]] Eigen::Index cols() const noexcept { return mask_.pixel_count(); }
  [[nodiscard]] double scale() const noexcept { return scale_; }
  [[nodiscard]] double nu() const noexcept { return nu_; }

  /// y = A x, entries in mask order.
  [[nodiscard]] Vec apply(const Vec& x) const;
  /// A^* y.
  [[nodiscard]] Vec adjoint(const Vec& y) const;

 private:
  SamplingMask mask_;
  double scale_;
  double nu_;
};

ImageGrid measure_adjoint(const MeasurementOperator& A, const Vec& y);
Vec measure(const MeasurementOperator& A, const ImageGrid& x);

/// A^dagger y = nu^-1 A^* y.
ImageGrid pseudoinverse(const MeasurementOperator& A, const Vec& y);

// ---------------------------------------------------------------------------
// Haar wavelets and the periodic gradient
// ---------------------------------------------------------------------------

/// Full-depth orthonormal 2D Haar analysis Phi^* x.
///
/// Coefficient layout: the single approximation coefficient first, then the
/// detail bands from coarsest (1x1) to finest ((n/2)x(n/2)). Each scale holds
/// three bands in the order LH (horizontal high-pass), HL (vertical
/// high-pass), HH (both), each band row-major.
Vec haar_forward(const ImageGrid& x);
ImageGrid haar_inverse(int side, const Vec& coeffs);

void haar_forward(int side, const Vec& in, Vec& out);
void haar_inverse(int side, const Vec& in, Vec& out);

/// Periodic forward differences: the first N entries are horizontal
/// x[i, j+1] - x[i, j], the next N vertical x[i+1, j] - x[i, j], indices mod n.
Vec gradient_forward(const ImageGrid& x);
ImageGrid gradient_adjoint(int side, const Vec& diffs);

void gradient_forward(int side, const Vec& in, Vec& out);
void gradient_adjoint(int side, const Vec& in, Vec& out);

// ---------------------------------------------------------------------------
// Analysis operator W^* = [Phi^*; sqrt(lambda) grad]
// ---------------------------------------------------------------------------

class AnalysisOperator {
 public:
  AnalysisOperator(int side, double weight);

  [[nodiscard]] int side() const noexcept { return side_; }
  [[nodiscard]] double weight() const noexcept { return weight_; }
  [[nodiscard]] int levels() const noexcept { return levels_; }
  [[nodiscard]] Eigen::Index pixel_count() const noexcept { return pixels_; }
  /// M = 3N.
  [[nodiscard]] Eigen::Index output_size() const noexcept { return 3 * pixels_; }
  /// Upper frame bound 1 + 8 lambda. The lower bound is 1.
  [[nodiscard]] double frame_bound() const noexcept { return 1.0 + 8.0 * weight_; }

  /// W^* x, length 3N.
  [[nodiscard]] Vec apply(const Vec& x) const;
  /// W z, length N.
  [[nodiscard]] Vec adjoint(const Vec& z) const;

 private:
  int side_;
  double weight_;
  double sqrt_weight_;
  int levels_;
  Eigen::Index pixels_;
};

Vec analysis_apply(const AnalysisOperator& w, const ImageGrid& x);
ImageGrid synthesis_apply(const AnalysisOperator& w, const Vec& z);

// ---------------------------------------------------------------------------
// Sparsity
// ---------------------------------------------------------------------------

/// sigma_s(z)_1: l1 norm of z minus its s largest-magnitude entries.
double best_s_term_error(const Vec& z, std::int64_t s);

}  // namespace nestanet
