#include "nestanet/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

namespace nestanet {
namespace {

constexpr int kMaxMaskRetries = 16;

double radial_weight(int side, std::int64_t index) {
  const int k1 = static_cast<int>(index / side);
  const int k2 = static_cast<int>(index % side);
  const double w1 = centered_frequency(k1, side);
  const double w2 = centered_frequency(k2, side);
  return 1.0 / (w1 * w1 + w2 * w2 + 1.0);
}

double expected_count(int side, double constant) {
  const auto n = static_cast<std::int64_t>(side) * side;
  double total = 0.0;
  for (std::int64_t k = 0; k < n; ++k) total += std::min(1.0, constant * radial_weight(side, k));
  return total;
}

std::mt19937_64 stream_for(std::uint64_t seed, int attempt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(attempt), 0x6d61736bU};
  return std::mt19937_64(seq);
}

}  // namespace

double calibrate_inverse_square(int side, double expected) {
  const auto n = checked_pixel_count(side);
  if (!(expected > 0.0) || expected > static_cast<double>(n)) {
    throw InvalidArgument("inverse-square budget must lie in (0, N]");
  }
  // Smallest weight is 1 / (2 (n/2)^2 + 1); at that constant every bin clamps to 1.
  const double half = side / 2.0;
  double lo = 0.0;
  double hi = 2.0 * half * half + 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (expected_count(side, mid) < expected) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

double inverse_square_probability(int side, std::int64_t index, double constant) {
  return std::min(1.0, constant * radial_weight(side, index));
}

SamplingMask generate_mask(const MaskDensityConfig& cfg) {
  const auto n = static_cast<std::int64_t>(checked_pixel_count(cfg.side));
  if (cfg.target_m <= 0 || cfg.target_m > n) throw InvalidArgument("target_m must lie in [1, N]");
  if (!(cfg.split > 0.0 && cfg.split < 1.0)) throw InvalidArgument("split must lie in (0, 1)");

  const double constant = calibrate_inverse_square(cfg.side, cfg.split * static_cast<double>(cfg.target_m));
  for (int attempt = 0; attempt <= kMaxMaskRetries; ++attempt) {
    auto rng = stream_for(cfg.seed, attempt);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<char> chosen(static_cast<std::size_t>(n), 0);
    std::int64_t first = 0;
    for (std::int64_t k = 0; k < n; ++k) {
      if (unit(rng) < inverse_square_probability(cfg.side, k, constant)) {
        chosen[static_cast<std::size_t>(k)] = 1;
        ++first;
      }
    }
    const std::int64_t rest = n - first;
    const double p2 = rest > 0 ? std::clamp(static_cast<double>(cfg.target_m - first) / static_cast<double>(rest), 0.0, 1.0)
                               : 0.0;
    for (std::int64_t k = 0; k < n; ++k) {
      if (chosen[static_cast<std::size_t>(k)]) continue;
      if (unit(rng) < p2) chosen[static_cast<std::size_t>(k)] = 1;
    }

    std::vector<std::int64_t> indices;
    for (std::int64_t k = 0; k < n; ++k) {
      if (chosen[static_cast<std::size_t>(k)]) indices.push_back(k);
    }
    if (!indices.empty()) return SamplingMask(cfg.side, std::move(indices));
  }
  throw Error("generate_mask: every attempt produced an empty mask");
}

void write_mask(std::ostream& os, const SamplingMask& mask, std::uint64_t seed) {
  os << "# nestanet-mask side=" << mask.side() << " m=" << mask.m() << " seed=" << seed << '\n';
  for (auto k : mask.indices()) os << k << '\n';
}

void write_mask(const std::filesystem::path& path, const SamplingMask& mask, std::uint64_t seed) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open mask file for writing: " + path.string());
  write_mask(os, mask, seed);
  if (!os) throw IoError("failed writing mask file: " + path.string());
}

LoadedMask read_mask(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw IoError("mask file is empty");
  int side = 0;
  long long m = 0;
  unsigned long long seed = 0;
  if (std::sscanf(header.c_str(), "# nestanet-mask side=%d m=%lld seed=%llu", &side, &m, &seed) != 3) {
    throw IoError("malformed mask header: " + header);
  }
  std::vector<std::int64_t> indices;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(line, &used);
    } catch (const std::exception&) {
      throw IoError("malformed mask index line: " + line);
    }
    if (used != line.size()) throw IoError("malformed mask index line: " + line);
    indices.push_back(v);
  }
  if (static_cast<long long>(indices.size()) != m) throw IoError("mask header m does not match index count");
  return LoadedMask{SamplingMask(side, std::move(indices)), static_cast<std::uint64_t>(seed)};
}

LoadedMask read_mask(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open mask file: " + path.string());
  return read_mask(is);
}

}  // namespace nestanet
