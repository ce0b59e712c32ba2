#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "nestanet/operators.hpp"

namespace nestanet {

/// Two-part Bernoulli variable-density design. A share `split` of the budget
/// goes to an inverse-square-law component Omega1; the remainder is drawn
/// uniformly from the frequencies Omega1 left out.
struct MaskDensityConfig {
  int side = 64;
  std::int64_t target_m = 614;
  double split = 0.5;
  std::uint64_t seed = 0;
};

/// Constant C such that sum over centered frequencies of
/// min(1, C / (w1^2 + w2^2 + 1)) equals `expected` (bisection).
double calibrate_inverse_square(int side, double expected);

/// Inclusion probability of flat DFT bin `index` under the calibrated density.
double inverse_square_probability(int side, std::int64_t index, double constant);

/// Draws Omega = Omega1 u Omega2. Omega1 has expected size split * target_m.
/// Given Omega1, each remaining bin enters Omega2 with probability
/// (target_m - |Omega1|) / (N - |Omega1|), clamped to [0, 1]. The realized m
/// is random. An empty draw is retried on a fresh stream, at most 16 times.
SamplingMask generate_mask(const MaskDensityConfig& cfg);

/// `# nestanet-mask side=<n> m=<m> seed=<seed>` then one index per line.
void write_mask(std::ostream& os, const SamplingMask& mask, std::uint64_t seed);
void write_mask(const std::filesystem::path& path, const SamplingMask& mask, std::uint64_t seed);

struct LoadedMask {
  SamplingMask mask;
  std::uint64_t seed;
};
LoadedMask read_mask(std::istream& is);
LoadedMask read_mask(const std::filesystem::path& path);

}  // namespace nestanet
