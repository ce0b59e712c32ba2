#include "nestanet/nesta.hpp"

#include <cmath>

#include "nestanet/kernels.hpp"

namespace nestanet {

void NestaConfig::validate() const {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw InvalidArgument("NESTA smoothing parameter mu must be > 0");
  if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidArgument("NESTA noise level eta must be > 0");
  if (n_max < 0) throw InvalidArgument("NESTA n_max must be >= 0");
}

double huber_value(Complex a, double mu) {
  const double mag = std::abs(a);
  return mag <= mu ? mag * mag / (2.0 * mu) : mag - mu / 2.0;
}

double smoothed_l1(const Vec& z, double mu) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) total += huber_value(z[i], mu);
  return total;
}

Vec t_mu(const Vec& z, double mu) {
  if (!(mu > 0.0)) throw InvalidArgument("t_mu: mu must be > 0");
  return kernels::huber_gradient(z, mu);
}

Projection project_feasible(const Vec& q, const MeasurementOperator& A, const Vec& y, double eta) {
  if (!(eta > 0.0)) throw InvalidArgument("project_feasible: eta must be > 0");
  expect_size(q, A.cols(), "project_feasible (q)");
  expect_size(y, A.rows(), "project_feasible (y)");
  const Vec r = kernels::residual(A, y, q);
  const double lambda = kernels::multiplier(kernels::sum_entries(kernels::squared_moduli(r)), eta);
  return Projection{kernels::gated_add(q, kernels::backproject(A, r), kernels::gate(lambda)), lambda};
}

NestaState NestaState::initial(const Vec& z0) { return NestaState{0, z0, z0, z0}; }

NestaState nesta_step(const NestaState& state, const MeasurementOperator& A, const AnalysisOperator& W, const Vec& y,
                      const NestaConfig& cfg) {
  expect_size(state.z, W.pixel_count(), "nesta_step (z)");
  expect_size(state.qv, W.pixel_count(), "nesta_step (qv)");
  if (A.cols() != W.pixel_count()) throw DimensionMismatch("nesta_step: A and W disagree on N");
  expect_size(y, A.rows(), "nesta_step (y)");

  const int n = state.iter;
  const double beta = W.frame_bound();
  const Vec g = W.adjoint(kernels::huber_gradient(W.apply(state.z), cfg.mu));

  NestaState next;
  next.iter = n + 1;
  next.qv = kernels::descend(state.qv, g, kernels::descent_coefficient(cfg.mu, beta, nesta_alpha(n)));
  const Vec qx = kernels::descend(state.z, g, kernels::descent_coefficient(cfg.mu, beta, 1.0));

  const Projection x = project_feasible(qx, A, y, cfg.eta);
  const Projection v = project_feasible(next.qv, A, y, cfg.eta);
  next.z = kernels::convex_step(v.point, x.point, nesta_tau(n));
  next.x = x.point;
  return next;
}

Vec nesta_run(const Vec& z0, const MeasurementOperator& A, const AnalysisOperator& W, const Vec& y,
              const NestaConfig& cfg, const IterateObserver& observer) {
  cfg.validate();
  NestaState state = NestaState::initial(z0);
  for (int n = 0; n <= cfg.n_max; ++n) {
    state = nesta_step(state, A, W, y, cfg);
    if (observer) observer(n, state.x);
  }
  return state.x;
}

ImageGrid nesta_run(const ImageGrid& z0, const MeasurementOperator& A, const AnalysisOperator& W, const Vec& y,
                    const NestaConfig& cfg) {
  return ImageGrid(z0.side(), nesta_run(z0.data(), A, W, y, cfg));
}

}  // namespace nestanet
