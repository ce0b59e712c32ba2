#include <cmath>
#include <cstring>

#include <gtest/gtest.h>

#include "checks.hpp"
#include "fixtures.hpp"
#include "nestanet/phantom.hpp"
#include "nestanet/stability.hpp"

namespace nestanet {
namespace {

using testing::rel_diff;

bool same_bits(const Vec& a, const Vec& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), static_cast<std::size_t>(a.size()) * sizeof(Complex)) == 0;
}

struct Fixture {
  MeasurementOperator A;
  AnalysisOperator W;
  Vec y;
  RestartSchedule schedule;
  double eta;

  SolverSpec spec(InitialPoint init = InitialPoint::Zero) const { return {A, W, schedule, eta, init}; }
};

Fixture small_fixture(int side, int K, int n, std::uint64_t seed) {
  MeasurementOperator A(testing::random_mask(side, 0.3, seed));
  AnalysisOperator W(side, 2.5);
  const Vec y = A.apply(render_phantom(side, shepp_logan_preset()).data());
  RestartSchedule s = testing::schedule_for(W, K, n, default_eps0(A, y));
  const double eta = 1e-2 * y.norm();
  return {std::move(A), std::move(W), y, std::move(s), eta};
}

TEST(Vjp, ZeroCotangentGivesZero) {
  const Fixture f = small_fixture(8, 1, 2, 1);
  const Vec g = vjp_solver(f.y, Vec::Zero(f.A.rows()), Vec::Zero(64), f.spec());
  EXPECT_EQ(g.norm(), 0.0);
}

TEST(Vjp, AffineRegimeMatchesExplicitAdjoint) {
  const int side = 4;
  const MeasurementOperator A(testing::random_mask(side, 0.5, 3));
  const AnalysisOperator W(side, 2.5);
  const RestartSchedule s = constant_mu_schedule(1e6, 0, 0);
  const double eta = 1e6;
  const SolverSpec spec{A, W, s, eta, InitialPoint::Pseudoinverse};
  // One step from A^dagger y with every coefficient in the quadratic branch and
  // the constraint inactive: N(y) = (I - W W^* / beta) nu^-1 A^* y.
  const oracle::Dense Wd = oracle::materialize([&](const Vec& v) { return W.apply(v); }, 16);
  const oracle::Dense Ad = oracle::materialize([&](const Vec& v) { return A.apply(v); }, 16);
  const oracle::Dense L =
      (oracle::Dense::Identity(16, 16) - Wd.adjoint() * Wd / W.frame_bound()) * Ad.adjoint() / A.nu();
  for (std::uint64_t t = 0; t < 5; ++t) {
    const Vec y = oracle::random_vec(A.rows(), 10 + t);
    const Vec e = 0.1 * oracle::random_vec(A.rows(), 20 + t);
    const Vec c = oracle::random_vec(16, 30 + t);
    EXPECT_LT(rel_diff(reconstruct(spec, y + e), L * (y + e)), 1e-12);
    EXPECT_LT(rel_diff(vjp_solver(y, e, c, spec), L.adjoint() * c), 1e-12);
  }
}

TEST(Vjp, ZeroStartWithInactivePiecesIsConstant) {
  const int side = 4;
  const MeasurementOperator A(testing::random_mask(side, 0.5, 3));
  const AnalysisOperator W(side, 2.5);
  const RestartSchedule s = constant_mu_schedule(1e6, 0, 0);
  const SolverSpec spec{A, W, s, 1e6, InitialPoint::Zero};
  const Vec y = oracle::random_vec(A.rows(), 1);
  EXPECT_EQ(vjp_solver(y, Vec::Zero(A.rows()), oracle::random_vec(16, 2), spec).norm(), 0.0);
}

TEST(Vjp, MatchesCentralDifferences) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const checks::FdStats st = checks::adjoint_fd(16, 2, 5, 20, seed);
    EXPECT_EQ(st.checked + st.skipped, 20);
    EXPECT_LE(st.skipped, 5) << "seed " << seed;
    EXPECT_LT(st.max_rel, 1e-5) << "seed " << seed;
  }
}

TEST(Vjp, MemoryGuard) {
  const Fixture f = small_fixture(8, 1, 2, 2);
  EXPECT_THROW(vjp_solver(f.y, Vec::Zero(f.A.rows()), Vec::Zero(64), f.spec(), 1000), MemoryBudgetExceeded);
  PerturbConfig cfg;
  cfg.trials = 1;
  cfg.steps = 1;
  cfg.memory_budget = 1000;
  EXPECT_THROW(worst_case_perturbation(f.y, f.spec(), cfg), MemoryBudgetExceeded);
}

TEST(Vjp, DimensionErrors) {
  const Fixture f = small_fixture(8, 0, 1, 2);
  EXPECT_THROW(vjp_solver(f.y, Vec::Zero(f.A.rows() + 1), Vec::Zero(64), f.spec()), DimensionMismatch);
  EXPECT_THROW(vjp_solver(f.y, Vec::Zero(f.A.rows()), Vec::Zero(63), f.spec()), DimensionMismatch);
}

TEST(Tape, OutputBitwiseEqualsSolver) {
  const Fixture f = small_fixture(16, 2, 3, 3);
  for (InitialPoint init : {InitialPoint::Zero, InitialPoint::Pseudoinverse}) {
    const TapedSolve t = record_solve(f.spec(init), f.y);
    EXPECT_TRUE(same_bits(t.tape.vec(t.output), reconstruct(f.spec(init), f.y)));
  }
}

TEST(Tape, ReplayDeterminism) {
  const Fixture f = small_fixture(16, 1, 4, 4);
  const TapedSolve a = record_solve(f.spec(), f.y);
  const TapedSolve b = record_solve(f.spec(), f.y);
  EXPECT_TRUE(a.tape.replay_matches());
  ASSERT_EQ(a.tape.size(), b.tape.size());
  for (NodeId id = 0; id < a.tape.size(); ++id) EXPECT_EQ(a.tape.ops()[id].index(), b.tape.ops()[id].index());
  EXPECT_TRUE(same_bits(a.tape.vec(a.output), b.tape.vec(b.output)));
  EXPECT_EQ(a.tape.branch_signature(), b.tape.branch_signature());
}

TEST(Tape, SizeEstimateIsUpperBound) {
  const Fixture f = small_fixture(16, 2, 5, 5);
  const TapedSolve t = record_solve(f.spec(), f.y);
  EXPECT_LE(t.tape.bytes(), estimate_tape_bytes(f.spec()));
  EXPECT_GT(t.tape.bytes(), estimate_tape_bytes(f.spec()) / 4);
}

TEST(Tape, PrimitiveAdjoints) {
  // Gradient of Re<c, f(u)> for a short chain covering both Huber branches,
  // an active multiplier and the gated add, against central differences.
  const MeasurementOperator A(testing::random_mask(8, 0.4, 6));
  const AnalysisOperator W(8, 1.0);
  const Vec u0 = oracle::random_vec(A.rows(), 7);
  const Vec c = oracle::random_vec(64, 8);
  const double mu = 0.8, eta = 0.3;
  auto build = [&](const Vec& u, AdjointTape& tape, NodeId& in) {
    in = tape.input(u);
    const NodeId q = tape.backproject(in);
    const NodeId g = tape.synthesis(tape.huber_gradient(tape.analysis(q), mu));
    const NodeId d = tape.descend(q, g, 0.1);
    const NodeId r = tape.residual(in, d);
    const NodeId lambda = tape.multiplier(tape.squared_norm(r), eta);
    const NodeId x = tape.gated_add(d, tape.backproject(r), tape.gate(lambda));
    return tape.convex(x, d, 0.4);
  };
  AdjointTape tape(A, W);
  NodeId in = 0;
  const NodeId out = build(u0, tape, in);
  const auto sig = tape.branch_signature();
  std::size_t quadratic = 0;
  for (std::size_t i = 0; i + 1 < sig.size(); ++i) quadratic += sig[i] ? 1 : 0;
  ASSERT_GT(quadratic, 0u);
  ASSERT_LT(quadratic, sig.size() - 1);
  ASSERT_TRUE(sig.back());  // constraint active
  const Vec g = tape.gradient(out, c, in);
  const double h = 1e-7;
  int checked = 0;
  for (Eigen::Index j = 0; j < u0.size(); ++j) {
    for (Complex dir : {Complex(1.0, 0.0), Complex(0.0, 1.0)}) {
      Vec du = Vec::Zero(u0.size());
      du[j] = h * dir;
      AdjointTape tp(A, W), tm(A, W);
      NodeId ip = 0, im = 0;
      const NodeId op = build(u0 + du, tp, ip);
      const NodeId om = build(u0 - du, tm, im);
      if (tp.branch_signature() != sig || tm.branch_signature() != sig) continue;
      const double fd = (c.dot(tp.vec(op)).real() - c.dot(tm.vec(om)).real()) / (2 * h);
      const double an = dir.real() != 0.0 ? g[j].real() : g[j].imag();
      EXPECT_NEAR(fd, an, 1e-6 * std::max(1.0, std::abs(an))) << "coord " << j;
      ++checked;
    }
  }
  EXPECT_GE(checked, static_cast<int>(3 * u0.size() / 2));
}

TEST(Ball, ProjectionFeasibility) {
  for (std::uint64_t s = 0; s < 500; ++s) {
    const double radius = std::pow(10.0, -6.0 + 0.02 * static_cast<double>(s));
    const Vec e = oracle::random_vec(37, s) * (0.1 + 0.01 * static_cast<double>(s % 300)) * radius;
    const Vec p = project_ball(e, radius);
    ASSERT_LE(p.norm(), radius);
    if (e.norm() <= radius) {
      EXPECT_EQ(p, e);
    } else {
      EXPECT_NEAR(p.norm(), radius, 1e-12 * radius);
      EXPECT_LT(rel_diff(p / p.norm(), e / e.norm()), 1e-14);
    }
  }
}

TEST(Ball, RandomPointsAreUniform) {
  // For a uniform point in the real 2m-ball, (||e||/R)^(2m) is uniform on [0, 1].
  const int m = 3;
  double sum = 0.0;
  const int samples = 4000;
  for (int t = 0; t < samples; ++t) {
    const Vec e = random_ball_point(9, t, m, 2.0);
    ASSERT_LE(e.norm(), 2.0);
    sum += std::pow(e.norm() / 2.0, 2 * m);
  }
  EXPECT_NEAR(sum / samples, 0.5, 0.02);
  EXPECT_EQ(random_ball_point(4, 7, 10, 1.0), random_ball_point(4, 7, 10, 1.0));
  EXPECT_NE(random_ball_point(4, 7, 10, 1.0), random_ball_point(4, 8, 10, 1.0));
}

TEST(Search, TracesFeasibilityAndThreadIndependence) {
  const Fixture f = small_fixture(8, 1, 2, 10);
  PerturbConfig cfg;
  cfg.eta_tilde = 0.05 * f.y.norm();
  cfg.trials = 5;
  cfg.steps = 6;
  cfg.step_size = 3.0;
  cfg.seed = 11;
  const PerturbationResult one = worst_case_perturbation(f.y, f.spec(), cfg);
  cfg.threads = 3;
  const PerturbationResult three = worst_case_perturbation(f.y, f.spec(), cfg);

  EXPECT_LE(one.e_best.norm(), cfg.eta_tilde);
  EXPECT_TRUE(same_bits(one.e_best, three.e_best));
  EXPECT_EQ(one.best_trial, three.best_trial);
  EXPECT_EQ(one.best_objective, three.best_objective);
  ASSERT_EQ(one.trials.size(), 5u);
  double best = 0.0;
  int best_trial = -1;
  for (std::size_t t = 0; t < one.trials.size(); ++t) {
    const TrialTrace& tr = one.trials[t];
    EXPECT_FALSE(tr.aborted);
    ASSERT_EQ(tr.objective.size(), 7u);
    EXPECT_EQ(tr.objective, three.trials[t].objective);
    for (std::size_t k = 1; k < tr.best_so_far.size(); ++k) EXPECT_GE(tr.best_so_far[k], tr.best_so_far[k - 1]);
    EXPECT_EQ(tr.best_objective, tr.best_so_far.back());
    EXPECT_EQ(tr.best_objective, tr.objective[static_cast<std::size_t>(tr.best_step)]);
    if (best_trial < 0 || tr.best_objective > best) {
      best = tr.best_objective;
      best_trial = static_cast<int>(t);
    }
  }
  EXPECT_EQ(one.best_trial, best_trial);
  EXPECT_EQ(one.best_objective, best);
  // The returned perturbation reproduces the reported objective.
  const Vec diff = reconstruct(f.spec(), f.y + one.e_best) - one.reference;
  EXPECT_EQ(diff.squaredNorm(), one.best_objective);
}

TEST(Search, VanishingRadius) {
  const Fixture f = small_fixture(8, 1, 2, 12);
  PerturbConfig cfg;
  cfg.trials = 2;
  cfg.steps = 3;
  cfg.eta_tilde = 1e-10;
  const PerturbationResult r = worst_case_perturbation(f.y, f.spec(), cfg);
  EXPECT_LE(r.e_best.norm(), cfg.eta_tilde);
  EXPECT_LT(std::sqrt(r.best_objective), 1e3 * cfg.eta_tilde);
}

TEST(Search, ConfigValidation) {
  PerturbConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.eta_tilde = 0.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.trials = 0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.steps = 0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.step_size = -1.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.threads = 0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(PerturbationImage, PseudoinverseProperties) {
  const MeasurementOperator A(testing::random_mask(16, 0.25, 13));
  EXPECT_EQ(perturbation_to_image(Vec::Zero(A.rows()), A).data().norm(), 0.0);
  const Vec e = oracle::random_vec(A.rows(), 14);
  const ImageGrid img = perturbation_to_image(e, A);
  EXPECT_EQ(img.side(), 16);
  EXPECT_LT(rel_diff(A.apply(img.data()), e), 1e-13);
  EXPECT_NEAR(img.data().norm(), e.norm() / std::sqrt(A.nu()), 1e-13 * e.norm());
  EXPECT_THROW(perturbation_to_image(Vec::Zero(A.rows() + 1), A), DimensionMismatch);
}

}  // namespace
}  // namespace nestanet
