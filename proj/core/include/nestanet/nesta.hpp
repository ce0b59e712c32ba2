#pragma once

// NESTA for analysis QCBP: min ||W^* x||_1 subject to ||y - A x||_2 <= eta,
// with A A^* = nu I. Nesterov's method on the Huber-smoothed objective.

#include <functional>

#include "nestanet/common.hpp"
#include "nestanet/operators.hpp"

namespace nestanet {

struct NestaConfig {
  double mu = 1e-2;  ///< smoothing parameter
  double eta = 1e-3; ///< constraint radius
  int n_max = 0;     ///< last iteration index; n_max + 1 iterations run

  void validate() const;
};

/// alpha_n = (n + 1) / 2.
[[nodiscard]] constexpr double nesta_alpha(int n) noexcept { return (n + 1) / 2.0; }
/// tau_n = 2 / (n + 3).
[[nodiscard]] constexpr double nesta_tau(int n) noexcept { return 2.0 / (n + 3); }

/// Complex Huber function H_mu.
double huber_value(Complex a, double mu);

/// ||z||_{1,mu} = sum_i H_mu(z_i).
double smoothed_l1(const Vec& z, double mu);

/// Entrywise T_mu; every output entry has modulus at most one.
Vec t_mu(const Vec& z, double mu);

struct Projection {
  Vec point;
  double lambda = 0.0;
};

/// Euclidean projection of q onto {u : ||y - A u|| <= eta}, computed as
/// q + lambda / ((lambda + 1) nu) A^*(y - A q) with
/// lambda = max{0, ||y - A q|| / eta - 1}.
Projection project_feasible(const Vec& q, const MeasurementOperator& A, const Vec& y, double eta);

/// Solver state entering iteration `iter`: z = z_n, qv = q_v^{(n-1)}, and
/// x = x_{n-1} (the initial point before the first step).
struct NestaState {
  int iter = 0;
  Vec z;
  Vec qv;
  Vec x;

  /// q_v^{(-1)} = z_0.
  [[nodiscard]] static NestaState initial(const Vec& z0);
};

/// One iteration n -> n + 1 of NESTA.
NestaState nesta_step(const NestaState& state, const MeasurementOperator& A, const AnalysisOperator& W, const Vec& y,
                      const NestaConfig& cfg);

/// Called after every iteration with (n, x_n).
using IterateObserver = std::function<void(int, const Vec&)>;

/// Runs iterations n = 0..n_max and returns x_{n_max}.
Vec nesta_run(const Vec& z0, const MeasurementOperator& A, const AnalysisOperator& W, const Vec& y,
              const NestaConfig& cfg, const IterateObserver& observer = {});

ImageGrid nesta_run(const ImageGrid& z0, const MeasurementOperator& A, const AnalysisOperator& W, const Vec& y,
                    const NestaConfig& cfg);

}  // namespace nestanet
