#include "nestanet/unrolled.hpp"

#include <algorithm>

#include "nestanet/kernels.hpp"
#include "nestanet/nesta.hpp"

namespace nestanet {
namespace {

Vec stack(std::initializer_list<const Vec*> parts) {
  Eigen::Index total = 0;
  for (const Vec* p : parts) total += p->size();
  Vec out(total);
  Eigen::Index offset = 0;
  for (const Vec* p : parts) {
    out.segment(offset, p->size()) = *p;
    offset += p->size();
  }
  return out;
}

Vec scalar(double v) { return Vec::Constant(1, Complex(v, 0.0)); }
Vec real_block(const Eigen::VectorXd& v) { return v.cast<Complex>(); }

class TraceWriter {
 public:
  explicit TraceWriter(TraceMode mode) : mode_(mode) {}

  void record(int restart, int iteration, int layer, Activation act, Eigen::Index width,
              std::initializer_list<const Vec*> parts) {
    LayerRecord rec{restart, iteration, layer, act, width, {}};
    if (mode_ == TraceMode::Full) {
      rec.value = stack(parts);
      rec.width = rec.value.size();
    }
    trace_.layers.push_back(std::move(rec));
  }

  [[nodiscard]] bool full() const noexcept { return mode_ == TraceMode::Full; }
  LayerTrace take() { return std::move(trace_); }

 private:
  TraceMode mode_;
  LayerTrace trace_;
};

}  // namespace

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::HuberGradient: return "huber-gradient";
    case Activation::Squaring: return "squaring";
    case Activation::Threshold: return "threshold";
    case Activation::Gate: return "gate";
  }
  return "unknown";
}

std::set<Activation> LayerTrace::activation_census() const {
  std::set<Activation> kinds;
  for (const auto& l : layers) kinds.insert(l.activation);
  return kinds;
}

NetworkDims network_dims(int restarts, int inner, std::int64_t N, std::int64_t M, std::int64_t m) {
  if (restarts < 0 || inner < 0) throw InvalidArgument("network_dims: K and n must be >= 0");
  if (N < 1 || M < N || m < 1 || m > N) throw InvalidArgument("network_dims: need N >= 1, M >= N, 1 <= m <= N");
  const std::int64_t blocks = static_cast<std::int64_t>(restarts + 1) * (inner + 1);
  NetworkDims d;
  d.depth = 5 * blocks + 1;
  d.layer_widths.reserve(static_cast<std::size_t>(d.depth + 1));
  d.layer_widths.push_back(m);
  const std::int64_t block[5] = {2 * N + M, 2 * (N + m), 2 * (N + 1), 3 * N + 2, 3 * N + 1};
  for (std::int64_t b = 0; b < blocks; ++b) d.layer_widths.insert(d.layer_widths.end(), std::begin(block), std::end(block));
  d.layer_widths.push_back(N);
  d.max_width = *std::max_element(d.layer_widths.begin(), d.layer_widths.end());
  d.activation_kinds = 4;
  return d;
}

NetworkOutput forward_as_network(const Vec& y, const MeasurementOperator& A, const AnalysisOperator& W,
                                 const RestartSchedule& schedule, double eta, InitialPoint init, TraceMode mode) {
  if (schedule.mu.size() != schedule.inner.size() || schedule.mu.empty()) {
    throw InvalidArgument("restart schedule is empty or inconsistent");
  }
  if (!(eta > 0.0)) throw InvalidArgument("forward_as_network: eta must be > 0");
  expect_size(y, A.rows(), "forward_as_network (y)");
  if (A.cols() != W.pixel_count()) throw DimensionMismatch("forward_as_network: A and W disagree on N");

  const Eigen::Index N = W.pixel_count();
  const Eigen::Index M = W.output_size();
  const Eigen::Index m = A.rows();
  const double beta = W.frame_bound();
  TraceWriter trace(mode);

  // phi: y -> (z_0, z_0)
  const Vec z0 = initial_point(init, A, y);
  Vec qv_prev = z0;
  Vec z = z0;
  Vec x;

  for (std::size_t k = 0; k < schedule.mu.size(); ++k) {
    const double mu = schedule.mu[k];
    const int restart = static_cast<int>(k) + 1;
    for (int n = 0; n <= schedule.inner[k]; ++n) {
      // Layer 1: (q_v, z) -> (q_v, z, W^* z), then T_mu on the last M entries.
      const Vec t = kernels::huber_gradient(W.apply(z), mu);
      trace.record(restart, n, 1, Activation::HuberGradient, 2 * N + M, {&qv_prev, &z, &t});

      // Layer 2: q updates and the y-affine residuals, then squaring.
      const Vec g = W.adjoint(t);
      const Vec qv = kernels::descend(qv_prev, g, kernels::descent_coefficient(mu, beta, nesta_alpha(n)));
      const Vec qx = kernels::descend(z, g, kernels::descent_coefficient(mu, beta, 1.0));
      const Eigen::VectorXd sv = kernels::squared_moduli(kernels::residual(A, y, qv));
      const Eigen::VectorXd sx = kernels::squared_moduli(kernels::residual(A, y, qx));
      if (trace.full()) {
        const Vec svc = real_block(sv);
        const Vec sxc = real_block(sx);
        trace.record(restart, n, 2, Activation::Squaring, 2 * (N + m), {&qv, &qx, &svc, &sxc});
      } else {
        trace.record(restart, n, 2, Activation::Squaring, 2 * (N + m), {});
      }

      // Layer 3: sum the squares, then the threshold map.
      const double lambda_v = kernels::multiplier(kernels::sum_entries(sv), eta);
      const double lambda_x = kernels::multiplier(kernels::sum_entries(sx), eta);
      {
        const Vec lv = scalar(lambda_v);
        const Vec lx = scalar(lambda_x);
        trace.record(restart, n, 3, Activation::Threshold, 2 * (N + 1), {&qv, &qx, &lv, &lx});
      }

      // Layer 4: (lambda_x, nu^-1 A^*(y - A q_x), q_x, lambda_v, q_v), gated by lambda_x.
      const Vec bx = kernels::backproject(A, kernels::residual(A, y, qx));
      const double gx = kernels::gate(lambda_x);
      if (trace.full()) {
        const Vec zero = scalar(0.0);
        const Vec gated = gx * bx;
        const Vec lv = scalar(lambda_v);
        trace.record(restart, n, 4, Activation::Gate, 3 * N + 2, {&zero, &gated, &qx, &lv, &qv});
      } else {
        trace.record(restart, n, 4, Activation::Gate, 3 * N + 2, {});
      }

      // Layer 5: x_n = q_x + gated term; (lambda_v, nu^-1 A^*(y - A q_v), x_n, q_v), gated by lambda_v.
      x = kernels::gated_add(qx, bx, gx);
      const Vec bv = kernels::backproject(A, kernels::residual(A, y, qv));
      const double gv = kernels::gate(lambda_v);
      if (trace.full()) {
        const Vec zero = scalar(0.0);
        const Vec gated = gv * bv;
        trace.record(restart, n, 5, Activation::Gate, 3 * N + 1, {&zero, &gated, &x, &qv});
      } else {
        trace.record(restart, n, 5, Activation::Gate, 3 * N + 1, {});
      }

      // Output affine map: v_n = q_v + gated term, z_{n+1} = tau v_n + (1 - tau) x_n.
      const Vec v = kernels::gated_add(qv, bv, gv);
      z = kernels::convex_step(v, x, nesta_tau(n));
      qv_prev = qv;
    }
    // Between restarts the block emits (x_n, x_n) as the next (q_v^{(-1)}, z_0).
    qv_prev = x;
    z = x;
  }
  return NetworkOutput{x, trace.take()};
}

}  // namespace nestanet
