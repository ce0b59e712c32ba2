#include "nestanet/stability.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <cmath>
#include <limits>
#include <mutex>
#include <random>
#include <thread>

#include "nestanet/kernels.hpp"
#include "nestanet/nesta.hpp"

namespace nestanet {
namespace {

void check_spec(const SolverSpec& spec) {
  if (spec.A.cols() != spec.W.pixel_count()) throw DimensionMismatch("solver: A and W disagree on N");
  if (!(spec.eta > 0.0)) throw InvalidArgument("solver: eta must be > 0");
  if (spec.schedule.mu.empty() || spec.schedule.mu.size() != spec.schedule.inner.size()) {
    throw InvalidArgument("solver: restart schedule is empty or inconsistent");
  }
}

bool all_finite(const Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i].real()) || !std::isfinite(v[i].imag())) return false;
  }
  return true;
}

struct TrialOutcome {
  TrialTrace trace;
  Vec e_best;
};

TrialOutcome run_trial(const Vec& y, const Vec& reference, const SolverSpec& spec, const PerturbConfig& cfg, int t) {
  TrialOutcome out;
  const auto m = spec.A.rows();
  Vec e = random_ball_point(cfg.seed, t, m, cfg.eta_tilde / std::sqrt(static_cast<double>(m)));
  double best = -std::numeric_limits<double>::infinity();
  for (int step = 0; step <= cfg.steps; ++step) {
    TapedSolve rec = record_solve(spec, y + e);
    const Vec diff = rec.tape.vec(rec.output) - reference;
    const double obj = diff.squaredNorm();
    if (!std::isfinite(obj)) {
      out.trace.aborted = true;
      out.trace.diagnostic = "nonfinite objective at ascent step " + std::to_string(step);
      break;
    }
    out.trace.objective.push_back(obj);
    if (obj > best) {
      best = obj;
      out.trace.best_step = step;
      out.e_best = e;
    }
    out.trace.best_so_far.push_back(best);
    if (step == cfg.steps) break;
    const Vec grad = rec.tape.gradient(rec.output, 2.0 * diff, rec.input);
    if (!all_finite(grad)) {
      out.trace.aborted = true;
      out.trace.diagnostic = "nonfinite gradient at ascent step " + std::to_string(step);
      break;
    }
    e = project_ball(e + cfg.step_size * grad, cfg.eta_tilde);
  }
  out.trace.best_objective = out.trace.best_step >= 0 ? best : 0.0;
  return out;
}

}  // namespace

Vec reconstruct(const SolverSpec& spec, const Vec& y) {
  check_spec(spec);
  return restarted_run(initial_point(spec.init, spec.A, y), spec.A, spec.W, y, spec.eta, spec.schedule).x;
}

TapedSolve record_solve(const SolverSpec& spec, const Vec& y) {
  check_spec(spec);
  expect_size(y, spec.A.rows(), "record_solve (y)");
  TapedSolve ts{AdjointTape(spec.A, spec.W)};
  AdjointTape& tape = ts.tape;
  ts.input = tape.input(y);
  NodeId x = spec.init == InitialPoint::Pseudoinverse ? tape.backproject(ts.input)
                                                      : tape.input(Vec::Zero(spec.A.cols()));
  const double beta = spec.W.frame_bound();
  for (std::size_t k = 0; k < spec.schedule.mu.size(); ++k) {
    const NestaConfig cfg{spec.schedule.mu[k], spec.eta, spec.schedule.inner[k]};
    cfg.validate();
    NodeId z = x;
    NodeId qv = x;
    for (int n = 0; n <= cfg.n_max; ++n) {
      const NodeId g = tape.synthesis(tape.huber_gradient(tape.analysis(z), cfg.mu));
      qv = tape.descend(qv, g, kernels::descent_coefficient(cfg.mu, beta, nesta_alpha(n)));
      const NodeId qx = tape.descend(z, g, kernels::descent_coefficient(cfg.mu, beta, 1.0));
      auto project = [&](NodeId q) {
        const NodeId r = tape.residual(ts.input, q);
        const NodeId lambda = tape.multiplier(tape.squared_norm(r), cfg.eta);
        return tape.gated_add(q, tape.backproject(r), tape.gate(lambda));
      };
      x = project(qx);
      const NodeId v = project(qv);
      z = tape.convex(v, x, nesta_tau(n));
    }
  }
  ts.output = x;
  return ts;
}

std::size_t estimate_tape_bytes(const SolverSpec& spec) {
  const auto N = static_cast<std::size_t>(spec.W.pixel_count());
  const auto M = static_cast<std::size_t>(spec.W.output_size());
  const auto m = static_cast<std::size_t>(spec.A.rows());
  // Recorded per iteration: 2 M-vectors, 7 N-vectors, 2 m-vectors, 6 scalars.
  const std::size_t per_iter = (2 * M + 7 * N + 2 * m) * sizeof(Complex) + 6 * sizeof(double) + 18 * 96;
  const std::size_t iters = static_cast<std::size_t>(spec.schedule.total_iterations());
  // Cotangent working set during the reverse sweep stays within a few iterations' worth.
  return iters * per_iter + 4 * per_iter + (m + N) * sizeof(Complex);
}

Vec vjp_solver(const Vec& y, const Vec& e, const Vec& cotangent, const SolverSpec& spec, std::size_t memory_budget) {
  check_spec(spec);
  expect_size(y, spec.A.rows(), "vjp_solver (y)");
  expect_size(e, spec.A.rows(), "vjp_solver (e)");
  expect_size(cotangent, spec.A.cols(), "vjp_solver (cotangent)");
  const std::size_t need = estimate_tape_bytes(spec);
  if (need > memory_budget) {
    throw MemoryBudgetExceeded("adjoint tape needs about " + std::to_string(need) + " bytes, budget is " +
                               std::to_string(memory_budget));
  }
  const TapedSolve rec = record_solve(spec, y + e);
  return rec.tape.gradient(rec.output, cotangent, rec.input);
}

void PerturbConfig::validate() const {
  if (!(eta_tilde > 0.0) || !std::isfinite(eta_tilde)) throw InvalidArgument("eta_tilde must be > 0");
  if (trials < 1) throw InvalidArgument("trials must be >= 1");
  if (steps < 1) throw InvalidArgument("steps must be >= 1");
  if (!(step_size > 0.0) || !std::isfinite(step_size)) throw InvalidArgument("step size must be > 0");
  if (threads < 1) throw InvalidArgument("threads must be >= 1");
}

Vec random_ball_point(std::uint64_t seed, int trial, Eigen::Index m, double radius) {
  if (m < 1) throw InvalidArgument("random_ball_point: dimension must be >= 1");
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial), 0x62616c6cU};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif;
  Vec dir(m);
  double norm = 0.0;
  while (norm == 0.0) {
    for (Eigen::Index i = 0; i < m; ++i) dir[i] = Complex(gauss(rng), gauss(rng));
    norm = dir.norm();
  }
  // Uniform in the 2m-dimensional real ball.
  const double rho = radius * std::pow(unif(rng), 1.0 / (2.0 * static_cast<double>(m)));
  return dir * (rho / norm);
}

Vec project_ball(const Vec& e, double radius) {
  const double norm = e.norm();
  Vec out = e / std::max(1.0, norm / radius);
  // Rounding can leave the rescaled norm a few ulps outside.
  while (out.norm() > radius) out *= 1.0 - std::numeric_limits<double>::epsilon();
  return out;
}

PerturbationResult worst_case_perturbation(const Vec& y, const SolverSpec& spec, const PerturbConfig& cfg) {
  cfg.validate();
  check_spec(spec);
  expect_size(y, spec.A.rows(), "worst_case_perturbation (y)");
  const std::size_t need = estimate_tape_bytes(spec);
  if (need > cfg.memory_budget) {
    throw MemoryBudgetExceeded("adjoint tape needs about " + std::to_string(need) + " bytes, budget is " +
                               std::to_string(cfg.memory_budget));
  }

  PerturbationResult result;
  result.reference = reconstruct(spec, y);

  std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(cfg.trials));
  const auto by_memory = static_cast<int>(std::max<std::size_t>(1, cfg.memory_budget / need));
  const int workers = std::min({cfg.threads, cfg.trials, by_memory});
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (int t = next++; t < cfg.trials; t = next++) {
      try {
        outcomes[static_cast<std::size_t>(t)] = run_trial(y, result.reference, spec, cfg, t);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = cfg.trials;
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  result.e_best = Vec::Zero(spec.A.rows());
  for (int t = 0; t < cfg.trials; ++t) {
    auto& o = outcomes[static_cast<std::size_t>(t)];
    if (o.trace.best_step >= 0 && (result.best_trial < 0 || o.trace.best_objective > result.best_objective)) {
      result.best_objective = o.trace.best_objective;
      result.best_trial = t;
      result.e_best = o.e_best;
    }
    result.trials.push_back(std::move(o.trace));
  }
  return result;
}

ImageGrid perturbation_to_image(const Vec& e, const MeasurementOperator& A) {
  expect_size(e, A.rows(), "perturbation_to_image");
  return ImageGrid(A.side(), kernels::backproject(A, e));
}

}  // namespace nestanet
