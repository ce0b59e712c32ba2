#include <cmath>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nestanet/harness.hpp"

namespace {

struct Overrides {
  std::optional<int> side;
  std::optional<double> sampling;
  std::optional<double> lambda;
  std::optional<double> r;
  std::optional<double> delta;
  std::optional<int> inner_iters;
  std::optional<double> zeta;
  std::vector<double> eta;
  std::optional<int> restarts;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool paper_scale = false;
  std::string out = "run";
  std::optional<std::string> image;
  std::optional<std::string> mask;
  std::optional<double> split;
  std::optional<double> eps0;
  std::optional<std::string> init;
  std::vector<double> mu;
  std::vector<int> contour_range;
  std::vector<int> decades;
  std::optional<int> trials;
  std::optional<int> steps;
  std::optional<double> step_size;
  std::optional<double> memory_gib;
};

template <class T>
void apply(const std::optional<T>& v, T& target) {
  if (v) target = *v;
}

nestanet::ExperimentParams resolve(const std::string& experiment, const Overrides& o) {
  auto p = nestanet::default_params(experiment, o.paper_scale);
  apply(o.side, p.side);
  apply(o.sampling, p.sampling);
  apply(o.lambda, p.lambda);
  apply(o.r, p.r);
  if (o.delta) p.delta = o.delta;
  apply(o.inner_iters, p.inner_iters);
  apply(o.zeta, p.zeta);
  if (!o.eta.empty()) p.eta = o.eta;
  apply(o.restarts, p.restarts);
  apply(o.seed, p.seed);
  apply(o.threads, p.threads);
  apply(o.image, p.image);
  apply(o.mask, p.mask_file);
  apply(o.split, p.mask_split);
  if (o.eps0) p.eps0 = o.eps0;
  if (o.init) p.init = *o.init == "pseudoinverse" ? nestanet::InitialPoint::Pseudoinverse : nestanet::InitialPoint::Zero;
  if (!o.mu.empty()) p.fixed_mu = o.mu;
  if (!o.contour_range.empty()) {
    p.contour_lo = o.contour_range[0];
    p.contour_hi = o.contour_range[1];
  }
  if (!o.decades.empty()) p.decades = o.decades;
  apply(o.trials, p.trials);
  apply(o.steps, p.steps);
  apply(o.step_size, p.step_size);
  if (o.memory_gib) p.memory_budget = static_cast<std::uint64_t>(std::llround(*o.memory_gib * (1ULL << 30)));
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NESTA and restarted-NESTA experiments for subsampled Fourier imaging"};
  app.require_subcommand(1);
  app.fallthrough();
  Overrides o;

  app.add_option("--side", o.side, "Image side n (power of two)");
  app.add_option("--sampling", o.sampling, "Target sampling rate m/N")->check(CLI::Range(0.0, 1.0));
  app.add_option("--lambda", o.lambda, "Gradient weight in the analysis operator")->check(CLI::NonNegativeNumber);
  app.add_option("--r", o.r, "Restart decay factor in (0, 1)");
  auto* delta = app.add_option("--delta", o.delta, "Schedule delta (sets the inner-iteration count)");
  auto* inner = app.add_option("--inner-iters", o.inner_iters, "Inner iterations per restart (delta is derived)");
  delta->excludes(inner);
  app.add_option("--zeta", o.zeta, "Target error level zeta");
  app.add_option("--eta", o.eta, "Noise level(s) eta");
  app.add_option("--restarts", o.restarts, "Number of restarts K");
  app.add_option("--seed", o.seed, "Seed for masks, noise and perturbation trials");
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--paper-scale", o.paper_scale, "Use 512 x 512 images and full trial/grid sizes (slow)");
  app.add_option("--image", o.image, "Phantom preset (shepp-logan, disk) or PNG/PGM path");
  app.add_option("--mask", o.mask, "Sampling mask file (default: draw from --seed)");
  app.add_option("--split", o.split, "Share of the mask budget for the inverse-square component");
  app.add_option("--eps0", o.eps0, "Initial error bound eps_0 (default ||A^+ y||)");
  app.add_option("--init", o.init, "Initial point")->check(CLI::IsMember({"zero", "pseudoinverse"}));

  auto* decay = app.add_subcommand("exp-decay", "Relative error per restart for several noise levels");
  auto* compare = app.add_subcommand("compare", "Restarted NESTA against fixed-mu NESTA at equal iteration budget");
  compare->add_option("--mu", o.mu, "Fixed smoothing values");
  auto* contour = app.add_subcommand("contour", "Final error over an (eta, zeta) grid, noiseless measurements");
  contour->add_option("--range", o.contour_range, "Exponent range i_lo i_hi for eta, zeta = 10^-i")->expected(2);
  auto* stability = app.add_subcommand("stability", "Worst-case measurement perturbations");
  stability->add_option("--decades", o.decades, "eta~ = 10^d eta for each d");
  stability->add_option("--trials", o.trials, "Random restarts of the ascent")->check(CLI::PositiveNumber);
  stability->add_option("--steps", o.steps, "Ascent iterations per trial")->check(CLI::PositiveNumber);
  stability->add_option("--step-size", o.step_size, "Ascent step size")->check(CLI::PositiveNumber);
  stability->add_option("--memory-gib", o.memory_gib, "Tape memory budget in GiB")->check(CLI::PositiveNumber);
  auto* recover = app.add_subcommand("recover", "Single reconstruction");
  auto* mask = app.add_subcommand("mask", "Draw and save a sampling mask");
  auto* dims = app.add_subcommand("dims", "Depth and widths of the unrolled network");
  auto* replay = app.add_subcommand("replay", "Re-run an experiment from its manifest.json");
  std::string manifest;
  replay->add_option("manifest", manifest, "Path to manifest.json")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    nestanet::RunReport report;
    if (replay->parsed()) {
      report = nestanet::replay_manifest(manifest, o.out, o.threads);
    } else {
      std::string name;
      for (auto* sub : {decay, compare, contour, stability, recover, mask, dims}) {
        if (sub->parsed()) name = sub->get_name();
      }
      const auto params = resolve(name, o);
      if (params.paper_scale) {
        std::cerr << "warning: --paper-scale runs at " << params.side << " x " << params.side
                  << " and can take hours\n";
      }
      report = nestanet::run_experiment(params, o.out);
    }
    std::cout << report.summary;
    std::cout << "wrote " << (std::filesystem::path(o.out) / "manifest.json").string() << '\n';
  } catch (const nestanet::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
