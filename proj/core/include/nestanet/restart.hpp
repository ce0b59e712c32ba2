#pragma once

// Restarted NESTA. Each restart k = 1..K+1 runs NESTA from the previous
// restart's output with smoothing mu_k = r * delta * eps_{k-1} and a fixed
// inner-iteration count, where eps_k = r * eps_{k-1} + zeta.

#include <cstdint>
#include <functional>
#include <vector>

#include "nestanet/common.hpp"
#include "nestanet/nesta.hpp"
#include "nestanet/operators.hpp"

namespace nestanet {

struct ScheduleParams {
  double r = 0.25;
  double delta = 1.25e-3;
  double zeta = 1e-9;
  double eps0 = 1.0;
  int restarts = 0;         ///< K
  double beta = 1.0;        ///< upper frame bound of W
  std::int64_t M = 1;       ///< number of analysis coefficients
  double mu_floor = 1e-13;  ///< smallest admissible mu_k
};

struct RestartSchedule {
  ScheduleParams params;
  std::vector<double> eps;  ///< eps_0 .. eps_{K+1}
  std::vector<double> mu;   ///< mu_1 .. mu_{K+1}
  std::vector<int> inner;   ///< n_1 .. n_{K+1}
  bool mu_clamped = false;  ///< some mu_k was raised to mu_floor

  [[nodiscard]] int restarts() const noexcept { return params.restarts; }
  /// Total NESTA iterations across all restarts, sum (n_k + 1).
  [[nodiscard]] std::int64_t total_iterations() const noexcept;
};

/// ceil(2 sqrt(beta) / (r delta sqrt(M))) - 1.
int inner_iterations(double r, double delta, double beta, std::int64_t M);

/// A delta whose inner-iteration count is exactly `inner`: the midpoint of
/// the admissible interval, 2 sqrt(beta) / (r sqrt(M) (inner + 1/2)).
double delta_for_inner_iterations(int inner, double r, double beta, std::int64_t M);

/// eps_k = r^k eps_0 + (1 - r^k) / (1 - r) zeta.
double eps_closed_form(double r, double zeta, double eps0, int k);

RestartSchedule build_schedule(const ScheduleParams& params);

/// Replaces every mu_k with `mu` (ablation and fixed-smoothing comparisons).
RestartSchedule constant_mu_schedule(double mu, int inner, int restarts);

/// Robust-null-space-property constants (assumed, never verified).
struct TheoryConstants {
  double rho = 0.5;
  double gamma = 1.0;
  std::int64_t s = 1;

  /// (1 + rho)^2 / (1 - rho).
  [[nodiscard]] double c1() const;
  /// (3 + rho) gamma / (1 - rho).
  [[nodiscard]] double c2() const;
  void validate() const;
};

/// 2 c1 sigma_s / sqrt(s) + 2 c2 eta.
double zeta_bound(const TheoryConstants& tc, double sigma_s, double eta);

/// Schedule with delta = sqrt(s) / (c1 M).
RestartSchedule theoretical_schedule(const TheoryConstants& tc, double beta, std::int64_t M, double r, double zeta,
                                     double eps0, int restarts, double mu_floor);

/// Starting point x*_0 of the restart loop.
enum class InitialPoint { Zero, Pseudoinverse };

/// Resolves x*_0 for measurements y.
Vec initial_point(InitialPoint kind, const MeasurementOperator& A, const Vec& y);

/// ||nu^-1 A^* y||, the default eps_0.
double default_eps0(const MeasurementOperator& A, const Vec& y);

/// Default mu_floor: 1e-13 max(1, eps0).
[[nodiscard]] inline double default_mu_floor(double eps0) noexcept { return 1e-13 * (eps0 > 1.0 ? eps0 : 1.0); }

struct RestartResult {
  Vec x;                   ///< x*_{K+1}
  std::vector<Vec> iterates;  ///< x*_1 .. x*_{K+1}
};

/// Called after every inner iteration with (restart k >= 1, inner n, x_n).
using InnerObserver = std::function<void(int, int, const Vec&)>;

RestartResult restarted_run(const Vec& x_init, const MeasurementOperator& A, const AnalysisOperator& W, const Vec& y,
                            double eta, const RestartSchedule& schedule, const InnerObserver& observer = {});

/// CS_s(W^* x, eta) = sigma_s(W^* x)_1 / sqrt(s) + eta.
double cs_error(const AnalysisOperator& W, const Vec& x, std::int64_t s, double eta);

}  // namespace nestanet
