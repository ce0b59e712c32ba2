#include "nestanet/common.hpp"

#include <utility>

namespace nestanet {

void expect_size(const Vec& v, Eigen::Index expected, const char* what) {
  if (v.size() != expected) {
    throw DimensionMismatch(std::string(what) + ": expected length " + std::to_string(expected) + ", got " +
                            std::to_string(v.size()));
  }
}

Eigen::Index checked_pixel_count(int side) {
  if (!is_power_of_two(side)) {
    throw InvalidArgument("image side must be a positive power of two, got " + std::to_string(side));
  }
  return static_cast<Eigen::Index>(side) * side;
}

ImageGrid::ImageGrid(int side, Vec data) : side_(side), data_(std::move(data)) {
  expect_size(data_, checked_pixel_count(side), "ImageGrid");
}

ImageGrid ImageGrid::zeros(int side) { return ImageGrid(side, Vec::Zero(checked_pixel_count(side))); }

}  // namespace nestanet
