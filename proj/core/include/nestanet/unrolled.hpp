#pragma once

// Restarted NESTA viewed as a feedforward network (NESTANet). Each NESTA
// iteration maps (q_v^{(n-1)}, z_n) to (q_v^{(n)}, z_{n+1}) through five
// hidden layers; restarts compose these blocks. Layers are evaluated with
// fast operators, never as dense matrices.

#include <cstdint>
#include <set>
#include <vector>

#include "nestanet/common.hpp"
#include "nestanet/operators.hpp"
#include "nestanet/restart.hpp"

namespace nestanet {

struct NetworkDims {
  std::int64_t depth = 0;                 ///< L = 5 (K+1)(n+1) + 1
  std::vector<std::int64_t> layer_widths; ///< (m, [2N+M, 2(N+m), 2(N+1), 3N+2, 3N+1] x (K+1)(n+1), N)
  std::int64_t max_width = 0;
  int activation_kinds = 0;
};

NetworkDims network_dims(int restarts, int inner, std::int64_t N, std::int64_t M, std::int64_t m);

/// The four nonlinearities used by the network.
enum class Activation {
  HuberGradient,  ///< T_mu on the analysis coefficients (componentwise)
  Squaring,       ///< |r_i|^2 on residual entries (componentwise)
  Threshold,      ///< s -> max{0, sqrt(s)/eta - 1} (componentwise)
  Gate,           ///< (u, v, w) -> (0, u/(u+1) v, w) (scalar-gated)
};

const char* activation_name(Activation a);

enum class TraceMode { Full, WidthsOnly };

struct LayerRecord {
  int restart = 0;  ///< 1-based restart index
  int iteration = 0;
  int layer = 0;    ///< 1..5 within the iteration block
  Activation activation = Activation::HuberGradient;
  Eigen::Index width = 0;
  Vec value;        ///< hidden-layer output (empty in WidthsOnly mode)
};

struct LayerTrace {
  std::vector<LayerRecord> layers;

  [[nodiscard]] std::size_t blocks() const noexcept { return layers.size() / 5; }
  [[nodiscard]] std::set<Activation> activation_census() const;
};

struct NetworkOutput {
  Vec x;
  LayerTrace trace;
};

/// Stages every hidden layer (affine map, then activation) of the unrolled
/// restarted solver. The output equals restarted_run's output bit for bit
/// given the same x*_0.
NetworkOutput forward_as_network(const Vec& y, const MeasurementOperator& A, const AnalysisOperator& W,
                                 const RestartSchedule& schedule, double eta,
                                 InitialPoint init = InitialPoint::Zero, TraceMode mode = TraceMode::Full);

}  // namespace nestanet
