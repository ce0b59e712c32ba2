#pragma once

// Worst-case measurement perturbations of the restarted-NESTA reconstruction
// map N: projected gradient ascent on ||N(y) - N(y + e)||^2 over ||e|| <= eta~,
// with gradients from the adjoint tape.

#include <cstdint>
#include <string>
#include <vector>

#include "nestanet/common.hpp"
#include "nestanet/operators.hpp"
#include "nestanet/restart.hpp"
#include "nestanet/tape.hpp"

namespace nestanet {

inline constexpr std::size_t kDefaultTapeBudget = std::size_t{4} << 30;

/// Everything that defines the reconstruction map y -> N(y).
struct SolverSpec {
  const MeasurementOperator& A;
  const AnalysisOperator& W;
  const RestartSchedule& schedule;
  double eta;
  InitialPoint init = InitialPoint::Zero;
};

/// N(y), via restarted_run.
Vec reconstruct(const SolverSpec& spec, const Vec& y);

struct TapedSolve {
  AdjointTape tape;
  NodeId input = 0;   ///< the measurement node
  NodeId output = 0;  ///< x*_{K+1}
};

/// Records a full restarted solve on a tape; its output is bitwise equal to reconstruct().
TapedSolve record_solve(const SolverSpec& spec, const Vec& y);

/// Upper estimate of the bytes a recorded solve holds.
std::size_t estimate_tape_bytes(const SolverSpec& spec);

/// Gradient of Re<cotangent, N(y + e)> with respect to e (C^m read as R^{2m}).
Vec vjp_solver(const Vec& y, const Vec& e, const Vec& cotangent, const SolverSpec& spec,
               std::size_t memory_budget = kDefaultTapeBudget);

struct PerturbConfig {
  double eta_tilde = 1e-2;
  int trials = 400;
  int steps = 150;
  double step_size = 3.0;
  std::uint64_t seed = 0;
  int threads = 1;
  std::size_t memory_budget = kDefaultTapeBudget;

  void validate() const;
};

struct TrialTrace {
  std::vector<double> objective;     ///< one entry per evaluated iterate (steps + 1 unless aborted)
  std::vector<double> best_so_far;
  double best_objective = 0.0;
  int best_step = -1;
  bool aborted = false;
  std::string diagnostic;
};

struct PerturbationResult {
  Vec e_best;
  double best_objective = 0.0;
  int best_trial = -1;
  Vec reference;  ///< N(y)
  std::vector<TrialTrace> trials;
};

/// Uniform sample from the ball of radius `radius` in C^m.
Vec random_ball_point(std::uint64_t seed, int trial, Eigen::Index m, double radius);

/// Ball projection: e / max(1, ||e|| / radius).
Vec project_ball(const Vec& e, double radius);

PerturbationResult worst_case_perturbation(const Vec& y, const SolverSpec& spec, const PerturbConfig& cfg);

/// nu^-1 A^* e.
ImageGrid perturbation_to_image(const Vec& e, const MeasurementOperator& A);

}  // namespace nestanet
