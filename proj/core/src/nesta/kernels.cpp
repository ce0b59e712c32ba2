#include "nestanet/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace nestanet::kernels {

Vec huber_gradient(const Vec& w, double mu) {
  Vec out(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double mag = std::abs(w[i]);
    out[i] = mag <= mu ? w[i] / mu : w[i] / mag;
  }
  return out;
}

Vec descend(const Vec& base, const Vec& g, double coef) { return base - coef * g; }

Vec residual(const MeasurementOperator& A, const Vec& y, const Vec& q) { return y - A.apply(q); }

Eigen::VectorXd squared_moduli(const Vec& r) {
  Eigen::VectorXd out(r.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) out[i] = std::norm(r[i]);
  return out;
}

double sum_entries(const Eigen::VectorXd& v) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) total += v[i];
  return total;
}

double multiplier(double squared_norm, double eta) { return std::max(0.0, std::sqrt(squared_norm) / eta - 1.0); }

Vec backproject(const MeasurementOperator& A, const Vec& r) { return A.adjoint(r) / A.nu(); }

Vec gated_add(const Vec& q, const Vec& b, double g) { return q + g * b; }

Vec convex_step(const Vec& v, const Vec& x, double tau) { return tau * v + (1.0 - tau) * x; }

}  // namespace nestanet::kernels
