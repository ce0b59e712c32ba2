#include "nestanet/restart.hpp"

#include <cmath>
#include <limits>

#include "nestanet/kernels.hpp"

namespace nestanet {

std::int64_t RestartSchedule::total_iterations() const noexcept {
  std::int64_t total = 0;
  for (int n : inner) total += n + 1;
  return total;
}

int inner_iterations(double r, double delta, double beta, std::int64_t M) {
  const double ratio = 2.0 * std::sqrt(beta) / (r * delta * std::sqrt(static_cast<double>(M)));
  const double count = std::ceil(ratio) - 1.0;
  if (!std::isfinite(count) || count > std::numeric_limits<int>::max()) {
    throw InvalidArgument("inner iteration count overflows; delta too small");
  }
  return static_cast<int>(std::max(0.0, count));
}

double delta_for_inner_iterations(int inner, double r, double beta, std::int64_t M) {
  if (inner < 0) throw InvalidArgument("inner iteration count must be >= 0");
  if (!(r > 0.0 && r < 1.0)) throw InvalidArgument("r must lie in (0, 1)");
  return 2.0 * std::sqrt(beta) / (r * std::sqrt(static_cast<double>(M)) * (inner + 0.5));
}

double eps_closed_form(double r, double zeta, double eps0, int k) {
  const double rk = std::pow(r, k);
  return rk * eps0 + (1.0 - rk) / (1.0 - r) * zeta;
}

RestartSchedule build_schedule(const ScheduleParams& p) {
  if (!(p.r > 0.0 && p.r < 1.0)) throw InvalidArgument("r must lie in (0, 1)");
  if (!(p.delta > 0.0) || !std::isfinite(p.delta)) throw InvalidArgument("delta must be > 0");
  if (!(p.zeta >= 0.0)) throw InvalidArgument("zeta must be >= 0");
  if (!(p.eps0 > 0.0) || !std::isfinite(p.eps0)) throw InvalidArgument("eps0 must be > 0");
  if (p.restarts < 0) throw InvalidArgument("number of restarts must be >= 0");
  if (!(p.beta >= 1.0)) throw InvalidArgument("beta must be >= 1");
  if (p.M < 1) throw InvalidArgument("M must be >= 1");
  if (!(p.mu_floor > 0.0)) throw InvalidArgument("mu_floor must be > 0");

  RestartSchedule s;
  s.params = p;
  const int n = inner_iterations(p.r, p.delta, p.beta, p.M);
  s.eps.push_back(p.eps0);
  for (int k = 1; k <= p.restarts + 1; ++k) {
    double mu = p.r * p.delta * s.eps.back();
    if (mu <= p.mu_floor) {
      mu = p.mu_floor;
      s.mu_clamped = true;
    }
    s.mu.push_back(mu);
    s.inner.push_back(n);
    s.eps.push_back(p.r * s.eps.back() + p.zeta);
  }
  return s;
}

RestartSchedule constant_mu_schedule(double mu, int inner, int restarts) {
  if (!(mu > 0.0)) throw InvalidArgument("mu must be > 0");
  if (inner < 0 || restarts < 0) throw InvalidArgument("iteration counts must be >= 0");
  RestartSchedule s;
  s.params.restarts = restarts;
  s.params.mu_floor = mu;
  s.mu.assign(static_cast<std::size_t>(restarts) + 1, mu);
  s.inner.assign(static_cast<std::size_t>(restarts) + 1, inner);
  s.eps.assign(static_cast<std::size_t>(restarts) + 2, std::numeric_limits<double>::quiet_NaN());
  return s;
}

double TheoryConstants::c1() const { return (1.0 + rho) * (1.0 + rho) / (1.0 - rho); }
double TheoryConstants::c2() const { return (3.0 + rho) * gamma / (1.0 - rho); }

void TheoryConstants::validate() const {
  if (!(rho > 0.0 && rho < 1.0)) throw InvalidArgument("rho must lie in (0, 1)");
  if (!(gamma > 0.0)) throw InvalidArgument("gamma must be > 0");
  if (s < 1) throw InvalidArgument("s must be >= 1");
}

double zeta_bound(const TheoryConstants& tc, double sigma_s, double eta) {
  tc.validate();
  return 2.0 * tc.c1() * sigma_s / std::sqrt(static_cast<double>(tc.s)) + 2.0 * tc.c2() * eta;
}

RestartSchedule theoretical_schedule(const TheoryConstants& tc, double beta, std::int64_t M, double r, double zeta,
                                     double eps0, int restarts, double mu_floor) {
  tc.validate();
  if (tc.s > M) throw InvalidArgument("s must not exceed M");
  ScheduleParams p;
  p.r = r;
  p.delta = std::sqrt(static_cast<double>(tc.s)) / (tc.c1() * static_cast<double>(M));
  p.zeta = zeta;
  p.eps0 = eps0;
  p.restarts = restarts;
  p.beta = beta;
  p.M = M;
  p.mu_floor = mu_floor;
  return build_schedule(p);
}

Vec initial_point(InitialPoint kind, const MeasurementOperator& A, const Vec& y) {
  if (kind == InitialPoint::Pseudoinverse) return kernels::backproject(A, y);
  return Vec::Zero(A.cols());
}

double default_eps0(const MeasurementOperator& A, const Vec& y) { return kernels::backproject(A, y).norm(); }

RestartResult restarted_run(const Vec& x_init, const MeasurementOperator& A, const AnalysisOperator& W, const Vec& y,
                            double eta, const RestartSchedule& schedule, const InnerObserver& observer) {
  if (schedule.mu.size() != schedule.inner.size() || schedule.mu.empty()) {
    throw InvalidArgument("restart schedule is empty or inconsistent");
  }
  RestartResult result;
  result.x = x_init;
  for (std::size_t k = 0; k < schedule.mu.size(); ++k) {
    NestaConfig cfg{schedule.mu[k], eta, schedule.inner[k]};
    IterateObserver inner_obs;
    if (observer) {
      inner_obs = [&observer, k](int n, const Vec& x) { observer(static_cast<int>(k) + 1, n, x); };
    }
    result.x = nesta_run(result.x, A, W, y, cfg, inner_obs);
    result.iterates.push_back(result.x);
  }
  return result;
}

double cs_error(const AnalysisOperator& W, const Vec& x, std::int64_t s, double eta) {
  if (s < 1 || s > W.output_size()) throw InvalidArgument("cs_error: s out of range");
  return best_s_term_error(W.apply(x), s) / std::sqrt(static_cast<double>(s)) + eta;
}

}  // namespace nestanet
