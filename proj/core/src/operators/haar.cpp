#include <algorithm>
#include <cmath>
#include <vector>

#include "nestanet/operators.hpp"

namespace nestanet {
namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

// One analysis step on the leading s x s block of an n x n row-major buffer:
// Haar along rows, then along columns.
void analysis_step(Complex* buf, int n, int s, std::vector<Complex>& tmp) {
  const int h = s / 2;
  for (int r = 0; r < s; ++r) {
    Complex* row = buf + static_cast<std::ptrdiff_t>(r) * n;
    for (int j = 0; j < h; ++j) {
      tmp[j] = (row[2 * j] + row[2 * j + 1]) * kInvSqrt2;
      tmp[h + j] = (row[2 * j] - row[2 * j + 1]) * kInvSqrt2;
    }
    std::copy(tmp.begin(), tmp.begin() + s, row);
  }
  for (int c = 0; c < s; ++c) {
    for (int i = 0; i < h; ++i) {
      const Complex a = buf[static_cast<std::ptrdiff_t>(2 * i) * n + c];
      const Complex b = buf[static_cast<std::ptrdiff_t>(2 * i + 1) * n + c];
      tmp[i] = (a + b) * kInvSqrt2;
      tmp[h + i] = (a - b) * kInvSqrt2;
    }
    for (int i = 0; i < s; ++i) buf[static_cast<std::ptrdiff_t>(i) * n + c] = tmp[i];
  }
}

void synthesis_step(Complex* buf, int n, int s, std::vector<Complex>& tmp) {
  const int h = s / 2;
  for (int c = 0; c < s; ++c) {
    for (int i = 0; i < h; ++i) {
      const Complex a = buf[static_cast<std::ptrdiff_t>(i) * n + c];
      const Complex d = buf[static_cast<std::ptrdiff_t>(h + i) * n + c];
      tmp[2 * i] = (a + d) * kInvSqrt2;
      tmp[2 * i + 1] = (a - d) * kInvSqrt2;
    }
    for (int i = 0; i < s; ++i) buf[static_cast<std::ptrdiff_t>(i) * n + c] = tmp[i];
  }
  for (int r = 0; r < s; ++r) {
    Complex* row = buf + static_cast<std::ptrdiff_t>(r) * n;
    for (int j = 0; j < h; ++j) {
      tmp[2 * j] = (row[j] + row[h + j]) * kInvSqrt2;
      tmp[2 * j + 1] = (row[j] - row[h + j]) * kInvSqrt2;
    }
    std::copy(tmp.begin(), tmp.begin() + s, row);
  }
}

// Visits the pyramid positions in packed order, calling f(packed, pyramid).
template <class F>
void for_each_band_entry(int n, F&& f) {
  Eigen::Index packed = 0;
  f(packed++, Eigen::Index{0});
  for (int h = 1; h < n; h *= 2) {
    const int offsets[3][2] = {{0, h}, {h, 0}, {h, h}};  // LH, HL, HH as (row, col) block origin
    for (const auto& o : offsets) {
      for (int r = 0; r < h; ++r) {
        for (int c = 0; c < h; ++c) {
          f(packed++, static_cast<Eigen::Index>(o[0] + r) * n + (o[1] + c));
        }
      }
    }
  }
}

}  // namespace

void haar_forward(int side, const Vec& in, Vec& out) {
  const auto count = checked_pixel_count(side);
  expect_size(in, count, "haar_forward");
  Vec buf = in;
  std::vector<Complex> tmp(static_cast<std::size_t>(side));
  for (int s = side; s >= 2; s /= 2) analysis_step(buf.data(), side, s, tmp);
  out.resize(count);
  for_each_band_entry(side, [&](Eigen::Index packed, Eigen::Index pyr) { out[packed] = buf[pyr]; });
}

void haar_inverse(int side, const Vec& in, Vec& out) {
  const auto count = checked_pixel_count(side);
  expect_size(in, count, "haar_inverse");
  Vec buf(count);
  for_each_band_entry(side, [&](Eigen::Index packed, Eigen::Index pyr) { buf[pyr] = in[packed]; });
  std::vector<Complex> tmp(static_cast<std::size_t>(side));
  for (int s = 2; s <= side; s *= 2) synthesis_step(buf.data(), side, s, tmp);
  out = std::move(buf);
}

Vec haar_forward(const ImageGrid& x) {
  Vec out;
  haar_forward(x.side(), x.data(), out);
  return out;
}

ImageGrid haar_inverse(int side, const Vec& coeffs) {
  Vec out;
  haar_inverse(side, coeffs, out);
  return ImageGrid(side, std::move(out));
}

}  // namespace nestanet
