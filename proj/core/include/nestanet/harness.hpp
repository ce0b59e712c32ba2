#pragma once

// Experiment harness: parameter sets, the experiment drivers behind the CLI,
// CSV/PNG outputs and JSON run manifests.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nestanet/common.hpp"
#include "nestanet/operators.hpp"
#include "nestanet/restart.hpp"

namespace nestanet {

inline constexpr int kManifestSchemaVersion = 1;

const char* software_version() noexcept;

struct ExperimentParams {
  std::string experiment;        ///< exp-decay, compare, contour, stability, recover, mask, dims
  int side = 64;
  double sampling = 0.15;        ///< target m / N
  double lambda = 2.5;
  double r = 0.25;
  std::optional<double> delta;   ///< overrides inner_iters when set
  int inner_iters = 33;
  double zeta = 1e-9;
  std::vector<double> eta{1e-3};
  int restarts = 14;
  std::uint64_t seed = 1;
  int threads = 1;
  bool paper_scale = false;
  std::string image = "shepp-logan";  ///< phantom preset name or grayscale image path
  std::string mask_file;              ///< empty: draw a mask from `seed`
  double mask_split = 0.5;
  std::optional<double> eps0;         ///< default ||nu^-1 A^* y||
  InitialPoint init = InitialPoint::Zero;
  // compare
  std::vector<double> fixed_mu{1e-2, 1e-3, 1e-4, 1e-5};
  // contour: eta, zeta = 10^-i for i in [contour_lo, contour_hi]
  int contour_lo = -1;
  int contour_hi = 4;
  // stability: eta~ = 10^d eta for d in decades
  std::vector<int> decades{0, 1, 2, 3};
  int trials = 8;
  int steps = 40;
  double step_size = 3.0;
  std::uint64_t memory_budget = std::uint64_t{4} << 30;

  void validate() const;
};

/// Desk-scale defaults for an experiment; `paper_scale` switches to 512 x 512
/// and the full trial/grid sizes.
ExperimentParams default_params(const std::string& experiment, bool paper_scale = false);

nlohmann::json params_to_json(const ExperimentParams& p);
ExperimentParams params_from_json(const nlohmann::json& j);

/// Resolved test problem shared by all experiments.
struct Problem {
  ImageGrid x;
  std::string image_source;
  SamplingMask mask;
  std::string mask_sha256;
  std::string mask_source;
  MeasurementOperator A;
  AnalysisOperator W;
};

Problem make_problem(const ExperimentParams& p, double sampling);

/// y = A x + e with complex Gaussian e rescaled to ||e|| = eta; stream `index`.
Vec noisy_measurements(const MeasurementOperator& A, const Vec& x, double eta, std::uint64_t seed,
                       std::uint64_t index);

/// delta from the params (explicit, or inverted from inner_iters).
double resolve_delta(const ExperimentParams& p, const AnalysisOperator& W);

RestartSchedule make_schedule(const ExperimentParams& p, const AnalysisOperator& W, double eps0, double zeta);

/// Hex SHA-256 of a byte string / file.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Shortest round-trip decimal form.
std::string format_double(double v);

struct RunReport {
  nlohmann::json manifest;
  std::vector<std::filesystem::path> files;  ///< data files written (relative to the run directory)
  std::string summary;                       ///< human-readable text for stdout
};

/// Runs one experiment into `out_dir` (created if needed) and writes manifest.json there.
RunReport run_experiment(const ExperimentParams& p, const std::filesystem::path& out_dir);

/// Re-runs the experiment recorded in a manifest.
RunReport replay_manifest(const std::filesystem::path& manifest, const std::filesystem::path& out_dir,
                          std::optional<int> threads = std::nullopt);

}  // namespace nestanet
