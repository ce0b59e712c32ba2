#pragma once

// Reverse-mode tape over the primitive kernels of restarted NESTA.
//
// Nodes hold either a complex vector or a real scalar. Complex vectors are
// differentiated as real vectors of twice the length (real and imaginary
// parts), so the adjoint of a complex-linear map is its conjugate transpose
// and all cotangents live in the same space as the primal values.

#include <cstdint>
#include <variant>
#include <vector>

#include "nestanet/common.hpp"
#include "nestanet/operators.hpp"

namespace nestanet {

using NodeId = std::size_t;
using NodeValue = std::variant<Vec, double>;

namespace tape_ops {

struct Input {};
struct Analysis { NodeId z; };                          ///< W^* z
struct Synthesis { NodeId t; };                         ///< W t
struct HuberGradient { NodeId w; double mu; };          ///< T_mu(w)
struct Descend { NodeId base; NodeId g; double coef; }; ///< base - coef g
struct Residual { NodeId y; NodeId q; };                ///< y - A q
struct SquaredNorm { NodeId r; };                       ///< sum |r_i|^2
struct Multiplier { NodeId s; double eta; };            ///< max{0, sqrt(s)/eta - 1}
struct Backproject { NodeId r; };                       ///< nu^-1 A^* r
struct Gate { NodeId lambda; };                         ///< lambda / (lambda + 1)
struct GatedAdd { NodeId q; NodeId b; NodeId g; };      ///< q + g b
struct Convex { NodeId v; NodeId x; double tau; };      ///< tau v + (1 - tau) x

}  // namespace tape_ops

using TapeOp = std::variant<tape_ops::Input, tape_ops::Analysis, tape_ops::Synthesis, tape_ops::HuberGradient,
                            tape_ops::Descend, tape_ops::Residual, tape_ops::SquaredNorm, tape_ops::Multiplier,
                            tape_ops::Backproject, tape_ops::Gate, tape_ops::GatedAdd, tape_ops::Convex>;

class AdjointTape {
 public:
  AdjointTape(const MeasurementOperator& A, const AnalysisOperator& W) : A_(&A), W_(&W) {}

  NodeId input(Vec value);
  NodeId analysis(NodeId z);
  NodeId synthesis(NodeId t);
  NodeId huber_gradient(NodeId w, double mu);
  NodeId descend(NodeId base, NodeId g, double coef);
  NodeId residual(NodeId y, NodeId q);
  NodeId squared_norm(NodeId r);
  NodeId multiplier(NodeId s, double eta);
  NodeId backproject(NodeId r);
  NodeId gate(NodeId lambda);
  NodeId gated_add(NodeId q, NodeId b, NodeId g);
  NodeId convex(NodeId v, NodeId x, double tau);

  [[nodiscard]] std::size_t size() const noexcept { return ops_.size(); }
  [[nodiscard]] const Vec& vec(NodeId id) const { return std::get<Vec>(values_.at(id)); }
  [[nodiscard]] double real(NodeId id) const { return std::get<double>(values_.at(id)); }
  [[nodiscard]] const std::vector<TapeOp>& ops() const noexcept { return ops_; }

  /// Bytes held by recorded values.
  [[nodiscard]] std::size_t bytes() const noexcept { return bytes_; }

  /// Propagates `seed` (a cotangent for `output`) back to every node and
  /// returns the cotangent of `wrt`.
  [[nodiscard]] Vec gradient(NodeId output, const Vec& seed, NodeId wrt) const;

  /// Recomputes every non-input node from the recorded inputs and reports
  /// whether all values match the recorded ones bit for bit.
  [[nodiscard]] bool replay_matches() const;

  /// Branch decisions at the kinks: one flag per T_mu entry (quadratic
  /// branch) and per multiplier (constraint active).
  [[nodiscard]] std::vector<bool> branch_signature() const;

 private:
  NodeId push(TapeOp op, NodeValue value);
  [[nodiscard]] NodeValue evaluate(const TapeOp& op, const std::vector<NodeValue>& values) const;

  const MeasurementOperator* A_;
  const AnalysisOperator* W_;
  std::vector<TapeOp> ops_;
  std::vector<NodeValue> values_;
  std::size_t bytes_ = 0;
};

}  // namespace nestanet
