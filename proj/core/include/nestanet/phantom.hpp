#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "nestanet/common.hpp"

namespace nestanet {

/// An ellipse in the [-1, 1]^2 plane (x to the right, y up) adding
/// `intensity` to every pixel whose center it contains.
struct EllipseSpec {
  double cx = 0.0;
  double cy = 0.0;
  double a = 1.0;          ///< semi-axis along the rotated x direction
  double b = 1.0;          ///< semi-axis along the rotated y direction
  double angle = 0.0;      ///< counter-clockwise rotation, radians
  double intensity = 1.0;
};

/// Pixel (row i, col j) has center x = 2 (j + 0.5)/n - 1, y = 1 - 2 (i + 0.5)/n.
ImageGrid render_phantom(int side, const std::vector<EllipseSpec>& ellipses);

/// The 10-ellipse modified Shepp-Logan head; pixel values lie in [0, 1].
std::vector<EllipseSpec> shepp_logan_preset();

/// A centered disk of radius 1/2 and intensity 1.
std::vector<EllipseSpec> disk_preset();

/// Looks up a preset by name ("shepp-logan" or "disk").
std::vector<EllipseSpec> phantom_preset(const std::string& name);
std::vector<std::string> phantom_preset_names();

/// Reads an 8- or 16-bit grayscale PNG or PGM (P2/P5) with square
/// power-of-two dimensions; values are scaled to [0, 1].
ImageGrid load_grayscale(const std::filesystem::path& path);

/// Writes a 16-bit grayscale PNG with pixel = round(65535 * clamp(v / scale, 0, 1)).
void write_png16(const std::filesystem::path& path, int side, const Eigen::VectorXd& values, double scale);

/// Max-normalized variant; returns the scale used (1 when the image is all zero).
double write_png16_normalized(const std::filesystem::path& path, int side, const Eigen::VectorXd& values);

}  // namespace nestanet
