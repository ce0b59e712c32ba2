#include "nestanet/phantom.hpp"

#include <cmath>
#include <numbers>

namespace nestanet {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

bool contains(const EllipseSpec& e, double x, double y) {
  const double dx = x - e.cx;
  const double dy = y - e.cy;
  const double c = std::cos(e.angle);
  const double s = std::sin(e.angle);
  const double u = (dx * c + dy * s) / e.a;
  const double v = (-dx * s + dy * c) / e.b;
  return u * u + v * v <= 1.0;
}

}  // namespace

ImageGrid render_phantom(int side, const std::vector<EllipseSpec>& ellipses) {
  auto img = ImageGrid::zeros(side);
  if (ellipses.empty()) throw InvalidArgument("render_phantom: ellipse list is empty");
  for (const auto& e : ellipses) {
    if (!(e.a > 0.0 && e.b > 0.0)) throw InvalidArgument("render_phantom: semi-axes must be positive");
  }
  for (int i = 0; i < side; ++i) {
    const double y = 1.0 - 2.0 * (i + 0.5) / side;
    for (int j = 0; j < side; ++j) {
      const double x = 2.0 * (j + 0.5) / side - 1.0;
      double value = 0.0;
      for (const auto& e : ellipses) {
        if (contains(e, x, y)) value += e.intensity;
      }
      // Cancelling intensities (1 - 0.8 - 0.2) leave rounding residue.
      if (std::abs(value) < 1e-12) value = 0.0;
      img.at(i, j) = Complex(value, 0.0);
    }
  }
  return img;
}

std::vector<EllipseSpec> shepp_logan_preset() {
  // (cx, cy, a, b, angle, intensity)
  return {
      {0.0, 0.0, 0.69, 0.92, 0.0, 1.0},
      {0.0, -0.0184, 0.6624, 0.874, 0.0, -0.8},
      {0.22, 0.0, 0.11, 0.31, -18.0 * kDeg, -0.2},
      {-0.22, 0.0, 0.16, 0.41, 18.0 * kDeg, -0.2},
      {0.0, 0.35, 0.21, 0.25, 0.0, 0.1},
      {0.0, 0.1, 0.046, 0.046, 0.0, 0.1},
      {0.0, -0.1, 0.046, 0.046, 0.0, 0.1},
      {-0.08, -0.605, 0.046, 0.023, 0.0, 0.1},
      {0.0, -0.606, 0.023, 0.023, 0.0, 0.1},
      {0.06, -0.605, 0.023, 0.046, 0.0, 0.1},
  };
}

std::vector<EllipseSpec> disk_preset() { return {{0.0, 0.0, 0.5, 0.5, 0.0, 1.0}}; }

std::vector<EllipseSpec> phantom_preset(const std::string& name) {
  if (name == "shepp-logan") return shepp_logan_preset();
  if (name == "disk") return disk_preset();
  throw InvalidArgument("unknown phantom preset: " + name);
}

std::vector<std::string> phantom_preset_names() { return {"shepp-logan", "disk"}; }

}  // namespace nestanet
