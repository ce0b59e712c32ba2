#include "nestanet/tape.hpp"

#include <cmath>
#include <cstring>

#include "nestanet/kernels.hpp"

namespace nestanet {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::size_t value_bytes(const NodeValue& v) {
  if (const auto* vec = std::get_if<Vec>(&v)) return static_cast<std::size_t>(vec->size()) * sizeof(Complex);
  return sizeof(double);
}

bool bitwise_equal(const NodeValue& a, const NodeValue& b) {
  if (a.index() != b.index()) return false;
  if (const auto* va = std::get_if<Vec>(&a)) {
    const auto& vb = std::get<Vec>(b);
    return va->size() == vb.size() &&
           std::memcmp(va->data(), vb.data(), static_cast<std::size_t>(va->size()) * sizeof(Complex)) == 0;
  }
  const double da = std::get<double>(a);
  const double db = std::get<double>(b);
  return std::memcmp(&da, &db, sizeof(double)) == 0;
}

// Lazily allocated cotangent accumulators.
class Cotangents {
 public:
  explicit Cotangents(std::size_t n) : vecs_(n), reals_(n, 0.0) {}

  Vec& vec(NodeId id, Eigen::Index size) {
    Vec& v = vecs_[id];
    if (v.size() == 0) v = Vec::Zero(size);
    return v;
  }
  [[nodiscard]] bool has_vec(NodeId id) const { return vecs_[id].size() != 0; }
  [[nodiscard]] const Vec& peek(NodeId id) const { return vecs_[id]; }
  double& real(NodeId id) { return reals_[id]; }
  void release(NodeId id) { vecs_[id] = Vec(); }

 private:
  std::vector<Vec> vecs_;
  std::vector<double> reals_;
};

double real_inner(const Vec& a, const Vec& b) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) total += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
  return total;
}

}  // namespace

NodeValue AdjointTape::evaluate(const TapeOp& op, const std::vector<NodeValue>& values) const {
  auto vec = [&](NodeId id) -> const Vec& { return std::get<Vec>(values[id]); };
  auto real = [&](NodeId id) { return std::get<double>(values[id]); };
  return std::visit(
      Overloaded{
          [&](const tape_ops::Input&) -> NodeValue { throw Error("tape: inputs cannot be re-evaluated"); },
          [&](const tape_ops::Analysis& o) -> NodeValue { return W_->apply(vec(o.z)); },
          [&](const tape_ops::Synthesis& o) -> NodeValue { return W_->adjoint(vec(o.t)); },
          [&](const tape_ops::HuberGradient& o) -> NodeValue { return kernels::huber_gradient(vec(o.w), o.mu); },
          [&](const tape_ops::Descend& o) -> NodeValue { return kernels::descend(vec(o.base), vec(o.g), o.coef); },
          [&](const tape_ops::Residual& o) -> NodeValue { return kernels::residual(*A_, vec(o.y), vec(o.q)); },
          [&](const tape_ops::SquaredNorm& o) -> NodeValue {
            return kernels::sum_entries(kernels::squared_moduli(vec(o.r)));
          },
          [&](const tape_ops::Multiplier& o) -> NodeValue { return kernels::multiplier(real(o.s), o.eta); },
          [&](const tape_ops::Backproject& o) -> NodeValue { return kernels::backproject(*A_, vec(o.r)); },
          [&](const tape_ops::Gate& o) -> NodeValue { return kernels::gate(real(o.lambda)); },
          [&](const tape_ops::GatedAdd& o) -> NodeValue { return kernels::gated_add(vec(o.q), vec(o.b), real(o.g)); },
          [&](const tape_ops::Convex& o) -> NodeValue { return kernels::convex_step(vec(o.v), vec(o.x), o.tau); },
      },
      op);
}

NodeId AdjointTape::push(TapeOp op, NodeValue value) {
  bytes_ += value_bytes(value);
  ops_.push_back(std::move(op));
  values_.push_back(std::move(value));
  return ops_.size() - 1;
}

NodeId AdjointTape::input(Vec value) { return push(tape_ops::Input{}, std::move(value)); }

#define NESTANET_TAPE_OP(expr)          \
  do {                                  \
    TapeOp op{expr};                    \
    auto value = evaluate(op, values_); \
    return push(std::move(op), std::move(value)); \
  } while (false)

NodeId AdjointTape::analysis(NodeId z) { NESTANET_TAPE_OP((tape_ops::Analysis{z})); }
NodeId AdjointTape::synthesis(NodeId t) { NESTANET_TAPE_OP((tape_ops::Synthesis{t})); }
NodeId AdjointTape::huber_gradient(NodeId w, double mu) { NESTANET_TAPE_OP((tape_ops::HuberGradient{w, mu})); }
NodeId AdjointTape::descend(NodeId base, NodeId g, double coef) { NESTANET_TAPE_OP((tape_ops::Descend{base, g, coef})); }
NodeId AdjointTape::residual(NodeId y, NodeId q) { NESTANET_TAPE_OP((tape_ops::Residual{y, q})); }
NodeId AdjointTape::squared_norm(NodeId r) { NESTANET_TAPE_OP((tape_ops::SquaredNorm{r})); }
NodeId AdjointTape::multiplier(NodeId s, double eta) { NESTANET_TAPE_OP((tape_ops::Multiplier{s, eta})); }
NodeId AdjointTape::backproject(NodeId r) { NESTANET_TAPE_OP((tape_ops::Backproject{r})); }
NodeId AdjointTape::gate(NodeId lambda) { NESTANET_TAPE_OP((tape_ops::Gate{lambda})); }
NodeId AdjointTape::gated_add(NodeId q, NodeId b, NodeId g) { NESTANET_TAPE_OP((tape_ops::GatedAdd{q, b, g})); }
NodeId AdjointTape::convex(NodeId v, NodeId x, double tau) { NESTANET_TAPE_OP((tape_ops::Convex{v, x, tau})); }

#undef NESTANET_TAPE_OP

Vec AdjointTape::gradient(NodeId output, const Vec& seed, NodeId wrt) const {
  if (output >= ops_.size() || wrt >= ops_.size()) throw InvalidArgument("tape: node id out of range");
  expect_size(seed, vec(output).size(), "tape gradient seed");
  Cotangents bar(ops_.size());
  bar.vec(output, seed.size()) = seed;

  for (NodeId id = output + 1; id-- > 0;) {
    const TapeOp& op = ops_[id];
    if (std::holds_alternative<tape_ops::Input>(op)) continue;
    const bool is_vec = std::holds_alternative<Vec>(values_[id]);
    if (is_vec && !bar.has_vec(id)) continue;
    if (!is_vec && bar.real(id) == 0.0) continue;

    std::visit(
        Overloaded{
            [&](const tape_ops::Input&) {},
            [&](const tape_ops::Analysis& o) { bar.vec(o.z, W_->pixel_count()) += W_->adjoint(bar.peek(id)); },
            [&](const tape_ops::Synthesis& o) { bar.vec(o.t, W_->output_size()) += W_->apply(bar.peek(id)); },
            [&](const tape_ops::HuberGradient& o) {
              const Vec& w = vec(o.w);
              const Vec& g = bar.peek(id);
              Vec& wb = bar.vec(o.w, w.size());
              for (Eigen::Index i = 0; i < w.size(); ++i) {
                const double mag = std::abs(w[i]);
                if (mag <= o.mu) {
                  wb[i] += g[i] / o.mu;
                } else {
                  // d(w/|w|) = (I - u u^T) / |w| in R^2.
                  const Complex u = w[i] / mag;
                  const double along = u.real() * g[i].real() + u.imag() * g[i].imag();
                  wb[i] += (g[i] - along * u) / mag;
                }
              }
            },
            [&](const tape_ops::Descend& o) {
              const Vec& g = bar.peek(id);
              bar.vec(o.base, g.size()) += g;
              bar.vec(o.g, g.size()) -= o.coef * g;
            },
            [&](const tape_ops::Residual& o) {
              const Vec& g = bar.peek(id);
              bar.vec(o.y, g.size()) += g;
              bar.vec(o.q, A_->cols()) -= A_->adjoint(g);
            },
            [&](const tape_ops::SquaredNorm& o) {
              const Vec& r = vec(o.r);
              bar.vec(o.r, r.size()) += (2.0 * bar.real(id)) * r;
            },
            [&](const tape_ops::Multiplier& o) {
              const double s = real(o.s);
              if (real(id) > 0.0 && s > 0.0) bar.real(o.s) += bar.real(id) / (2.0 * o.eta * std::sqrt(s));
            },
            [&](const tape_ops::Backproject& o) {
              bar.vec(o.r, A_->rows()) += A_->apply(bar.peek(id)) / A_->nu();
            },
            [&](const tape_ops::Gate& o) {
              const double lp1 = real(o.lambda) + 1.0;
              bar.real(o.lambda) += bar.real(id) / (lp1 * lp1);
            },
            [&](const tape_ops::GatedAdd& o) {
              const Vec& g = bar.peek(id);
              bar.vec(o.q, g.size()) += g;
              bar.vec(o.b, g.size()) += real(o.g) * g;
              bar.real(o.g) += real_inner(vec(o.b), g);
            },
            [&](const tape_ops::Convex& o) {
              const Vec& g = bar.peek(id);
              bar.vec(o.v, g.size()) += o.tau * g;
              bar.vec(o.x, g.size()) += (1.0 - o.tau) * g;
            },
        },
        op);
    if (id != wrt && is_vec) bar.release(id);
  }
  if (!bar.has_vec(wrt)) return Vec::Zero(vec(wrt).size());
  return bar.peek(wrt);
}

bool AdjointTape::replay_matches() const {
  std::vector<NodeValue> replayed;
  replayed.reserve(values_.size());
  for (std::size_t id = 0; id < ops_.size(); ++id) {
    if (std::holds_alternative<tape_ops::Input>(ops_[id])) {
      replayed.push_back(values_[id]);
    } else {
      replayed.push_back(evaluate(ops_[id], replayed));
    }
    if (!bitwise_equal(replayed.back(), values_[id])) return false;
  }
  return true;
}

std::vector<bool> AdjointTape::branch_signature() const {
  std::vector<bool> sig;
  for (std::size_t id = 0; id < ops_.size(); ++id) {
    if (const auto* h = std::get_if<tape_ops::HuberGradient>(&ops_[id])) {
      const Vec& w = vec(h->w);
      for (Eigen::Index i = 0; i < w.size(); ++i) sig.push_back(std::abs(w[i]) <= h->mu);
    } else if (std::holds_alternative<tape_ops::Multiplier>(ops_[id])) {
      sig.push_back(real(id) > 0.0);
    }
  }
  return sig;
}

}  // namespace nestanet
