#pragma once

// Primitive stage kernels of one NESTA iteration. The plain solver, the
// staged network evaluation and the adjoint tape all call these functions in
// the same order, so the three paths produce bit-identical values.

#include "nestanet/common.hpp"
#include "nestanet/operators.hpp"

namespace nestanet::kernels {

/// T_mu applied entrywise: w/mu where |w| <= mu, else w/|w|.
Vec huber_gradient(const Vec& w, double mu);

/// (mu / beta) * weight, the step applied to W T_mu(W^* z).
[[nodiscard]] inline double descent_coefficient(double mu, double beta, double weight) noexcept {
  return (mu / beta) * weight;
}

/// base - coef * g.
Vec descend(const Vec& base, const Vec& g, double coef);

/// y - A q.
Vec residual(const MeasurementOperator& A, const Vec& y, const Vec& q);

/// Entrywise squared modulus |r_i|^2 (real values).
Eigen::VectorXd squared_moduli(const Vec& r);

/// Left-to-right sum of real entries.
double sum_entries(const Eigen::VectorXd& v);

/// max{0, sqrt(s) / eta - 1}.
double multiplier(double squared_norm, double eta);

/// nu^-1 A^* r.
Vec backproject(const MeasurementOperator& A, const Vec& r);

/// lambda / (lambda + 1).
[[nodiscard]] inline double gate(double lambda) noexcept { return lambda / (lambda + 1.0); }

/// q + g * b.
Vec gated_add(const Vec& q, const Vec& b, double g);

/// tau * v + (1 - tau) * x.
Vec convex_step(const Vec& v, const Vec& x, double tau);

}  // namespace nestanet::kernels
