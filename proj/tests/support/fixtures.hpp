#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "nestanet/operators.hpp"
#include "nestanet/restart.hpp"
#include "nestanet/sampling.hpp"
#include "oracles.hpp"

namespace nestanet::testing {

inline SamplingMask random_mask(int side, double rate, std::uint64_t seed) {
  const auto N = static_cast<std::int64_t>(side) * side;
  const auto target = std::max<std::int64_t>(1, std::llround(rate * static_cast<double>(N)));
  return generate_mask({side, target, 0.5, seed});
}

inline double rel_diff(const Vec& a, const Vec& b) { return (a - b).norm() / std::max(1e-300, b.norm()); }

inline double rel_diff(Complex a, Complex b) { return std::abs(a - b) / std::max(1e-300, std::abs(b)); }

/// Schedule whose inner count is exactly `inner`, derived the same way as the harness.
inline RestartSchedule schedule_for(const AnalysisOperator& W, int restarts, int inner, double eps0,
                                    double zeta = 1e-9, double r = 0.25) {
  ScheduleParams p;
  p.r = r;
  p.beta = W.frame_bound();
  p.M = W.output_size();
  p.delta = delta_for_inner_iterations(inner, r, p.beta, p.M);
  p.zeta = zeta;
  p.eps0 = eps0;
  p.restarts = restarts;
  p.mu_floor = default_mu_floor(eps0);
  return build_schedule(p);
}

/// Fresh scratch directory, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("nestanet_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  [[nodiscard]] const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace nestanet::testing
