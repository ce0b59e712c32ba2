#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace nestanet {

using Complex = std::complex<double>;
using Vec = Eigen::VectorXcd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class MemoryBudgetExceeded : public Error {
 public:
  using Error::Error;
};

[[nodiscard]] constexpr bool is_power_of_two(std::int64_t v) noexcept {
  return v > 0 && (v & (v - 1)) == 0;
}

/// Throws DimensionMismatch with a message naming `what` unless sizes agree.
void expect_size(const Vec& v, Eigen::Index expected, const char* what);

/// A square complex image of side n stored row-major as a length n*n vector.
/// The side must be a power of two.
class ImageGrid {
 public:
  ImageGrid(int side, Vec data);

  [[nodiscard]] static ImageGrid zeros(int side);

  [[nodiscard]] int side() const noexcept { return side_; }
  [[nodiscard]] Eigen::Index size() const noexcept { return data_.size(); }
  [[nodiscard]] const Vec& data() const noexcept { return data_; }
  [[nodiscard]] Vec& data() noexcept { return data_; }

  [[nodiscard]] Complex& at(int row, int col) { return data_[static_cast<Eigen::Index>(row) * side_ + col]; }
  [[nodiscard]] Complex at(int row, int col) const { return data_[static_cast<Eigen::Index>(row) * side_ + col]; }

 private:
  int side_;
  Vec data_;
};

/// Validates an image side and returns N = side^2.
Eigen::Index checked_pixel_count(int side);

}  // namespace nestanet
