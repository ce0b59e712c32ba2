#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "nestanet/harness.hpp"
#include "nestanet/nesta.hpp"
#include "nestanet/phantom.hpp"
#include "nestanet/sampling.hpp"
#include "nestanet/stability.hpp"
#include "nestanet/unrolled.hpp"

namespace nestanet {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Runs fn(i) for i in [0, count); results land in caller-owned slots, so the
// output order never depends on scheduling.
template <class Fn>
void parallel_for(int count, int threads, Fn&& fn) {
  const int workers = std::max(1, std::min(threads, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex mutex;
  auto work = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::string& header) : os_(path) {
    if (!os_) throw IoError("cannot write " + path.string());
    os_ << header << '\n';
  }
  template <class... Ts>
  void row(const Ts&... fields) {
    std::string line;
    ((line += cell(fields), line += ','), ...);
    line.pop_back();
    os_ << line << '\n';
  }
  void close() {
    os_.close();
    if (!os_) throw IoError("failed writing CSV");
  }

 private:
  static std::string cell(double v) { return format_double(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(std::int64_t v) { return std::to_string(v); }
  static std::string cell(const std::string& v) { return v; }
  std::ofstream os_;
};

Eigen::VectorXd modulus(const Vec& v) { return v.cwiseAbs(); }

double relative_error(const Vec& estimate, const Vec& truth) { return (estimate - truth).norm() / truth.norm(); }

json schedule_json(const RestartSchedule& s) {
  return json{{"eps0", s.params.eps0},  {"delta", s.params.delta}, {"inner_iterations", s.inner.front()},
              {"mu", s.mu},             {"mu_floor", s.params.mu_floor}, {"mu_clamped", s.mu_clamped},
              {"total_iterations", s.total_iterations()}};
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Context {
  const ExperimentParams& p;
  fs::path dir;
  json manifest;
  std::vector<fs::path> files;
  std::string summary;

  void image(const std::string& name, int side, const Vec& values) {
    const double scale = write_png16_normalized(dir / name, side, modulus(values));
    manifest["images"][name] = json{{"normalization", scale}};
    files.emplace_back(name);
  }
};

json problem_json(const Problem& P) {
  return json{{"side", P.A.side()},
              {"N", P.A.cols()},
              {"M", P.W.output_size()},
              {"m", P.A.rows()},
              {"nu", P.A.nu()},
              {"beta", P.W.frame_bound()},
              {"image_source", P.image_source},
              {"image_norm", P.x.data().norm()},
              {"mask_source", P.mask_source},
              {"mask_sha256", P.mask_sha256}};
}

void run_exp_decay(Context& ctx) {
  const auto& p = ctx.p;
  const Problem P = make_problem(p, p.sampling);
  ctx.manifest["problem"] = problem_json(P);
  const Vec& x = P.x.data();
  const int count = static_cast<int>(p.eta.size());
  std::vector<std::vector<double>> errors(static_cast<std::size_t>(count));
  std::vector<json> runs(static_cast<std::size_t>(count));
  parallel_for(count, p.threads, [&](int i) {
    const double eta = p.eta[static_cast<std::size_t>(i)];
    const Vec y = noisy_measurements(P.A, x, eta, p.seed, static_cast<std::uint64_t>(i));
    const double eps0 = p.eps0.value_or(default_eps0(P.A, y));
    const RestartSchedule s = make_schedule(p, P.W, eps0, p.zeta);
    const RestartResult res = restarted_run(initial_point(p.init, P.A, y), P.A, P.W, y, eta, s);
    for (const Vec& it : res.iterates) errors[static_cast<std::size_t>(i)].push_back(relative_error(it, x));
    runs[static_cast<std::size_t>(i)] = json{{"eta", eta}, {"noise_stream", i}, {"schedule", schedule_json(s)}};
  });
  CsvWriter csv(ctx.dir / "exp_decay.csv", "eta,k,rel_err");
  for (int i = 0; i < count; ++i) {
    const auto& errs = errors[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < errs.size(); ++k) csv.row(p.eta[static_cast<std::size_t>(i)], static_cast<int>(k) + 1, errs[k]);
    ctx.summary += fmt::format("eta={} final rel_err={} (eta/||x|| = {})\n", p.eta[static_cast<std::size_t>(i)],
                               errs.back(), p.eta[static_cast<std::size_t>(i)] / x.norm());
  }
  csv.close();
  ctx.files.emplace_back("exp_decay.csv");
  ctx.manifest["runs"] = runs;
}

void run_compare(Context& ctx) {
  const auto& p = ctx.p;
  const Problem P = make_problem(p, p.sampling);
  ctx.manifest["problem"] = problem_json(P);
  const Vec& x = P.x.data();
  const double eta = p.eta.front();
  const Vec y = noisy_measurements(P.A, x, eta, p.seed, 0);
  const double eps0 = p.eps0.value_or(default_eps0(P.A, y));
  const RestartSchedule s = make_schedule(p, P.W, eps0, p.zeta);
  const std::int64_t budget = s.total_iterations();
  const Vec x0 = initial_point(p.init, P.A, y);

  const int count = 1 + static_cast<int>(p.fixed_mu.size());
  std::vector<std::string> names(static_cast<std::size_t>(count));
  std::vector<std::vector<double>> traces(static_cast<std::size_t>(count));
  parallel_for(count, p.threads, [&](int v) {
    auto& trace = traces[static_cast<std::size_t>(v)];
    if (v == 0) {
      names[0] = "restarted";
      restarted_run(x0, P.A, P.W, y, eta, s, [&](int, int, const Vec& it) { trace.push_back(relative_error(it, x)); });
    } else {
      const double mu = p.fixed_mu[static_cast<std::size_t>(v - 1)];
      names[static_cast<std::size_t>(v)] = "fixed_mu=" + format_double(mu);
      const NestaConfig cfg{mu, eta, static_cast<int>(budget - 1)};
      nesta_run(x0, P.A, P.W, y, cfg, [&](int, const Vec& it) { trace.push_back(relative_error(it, x)); });
    }
  });
  CsvWriter csv(ctx.dir / "compare.csv", "variant,total_iter,rel_err");
  for (int v = 0; v < count; ++v) {
    const auto& trace = traces[static_cast<std::size_t>(v)];
    for (std::size_t t = 0; t < trace.size(); ++t) {
      csv.row(names[static_cast<std::size_t>(v)], static_cast<std::int64_t>(t) + 1, trace[t]);
    }
    ctx.summary += fmt::format("{}: final rel_err={} after {} iterations\n", names[static_cast<std::size_t>(v)],
                               trace.back(), trace.size());
  }
  csv.close();
  ctx.files.emplace_back("compare.csv");
  ctx.manifest["runs"] = json::array({json{{"eta", eta}, {"noise_stream", 0}, {"schedule", schedule_json(s)},
                                           {"budget", budget}, {"fixed_mu", p.fixed_mu}}});
}

void run_contour(Context& ctx) {
  const auto& p = ctx.p;
  const Problem P = make_problem(p, p.sampling);
  ctx.manifest["problem"] = problem_json(P);
  const Vec& x = P.x.data();
  const Vec y = P.A.apply(x);
  const double eps0 = p.eps0.value_or(default_eps0(P.A, y));
  std::vector<double> levels;
  for (int i = p.contour_lo; i <= p.contour_hi; ++i) levels.push_back(std::pow(10.0, -i));
  const int L = static_cast<int>(levels.size());
  std::vector<double> err(static_cast<std::size_t>(L * L));
  std::vector<json> runs(static_cast<std::size_t>(L * L));
  parallel_for(L * L, p.threads, [&](int cell) {
    const double eta = levels[static_cast<std::size_t>(cell / L)];
    const double zeta = levels[static_cast<std::size_t>(cell % L)];
    const RestartSchedule s = make_schedule(p, P.W, eps0, zeta);
    const RestartResult res = restarted_run(initial_point(p.init, P.A, y), P.A, P.W, y, eta, s);
    err[static_cast<std::size_t>(cell)] = (res.x - x).norm();
    runs[static_cast<std::size_t>(cell)] = json{{"eta", eta}, {"zeta", zeta}, {"mu_clamped", s.mu_clamped}};
  });
  CsvWriter csv(ctx.dir / "contour.csv", "eta,zeta,err");
  for (int cell = 0; cell < L * L; ++cell) {
    csv.row(levels[static_cast<std::size_t>(cell / L)], levels[static_cast<std::size_t>(cell % L)],
            err[static_cast<std::size_t>(cell)]);
  }
  csv.close();
  ctx.files.emplace_back("contour.csv");
  ctx.manifest["runs"] = runs;
  ctx.manifest["measurements"] = "noiseless";
  ctx.manifest["eps0"] = eps0;
  ctx.summary += fmt::format("{} x {} grid, max err {}\n", L, L, *std::max_element(err.begin(), err.end()));
}

void run_stability(Context& ctx) {
  const auto& p = ctx.p;
  const Problem P = make_problem(p, p.sampling);
  ctx.manifest["problem"] = problem_json(P);
  const Vec& x = P.x.data();
  const double eta = p.eta.front();
  const Vec y = P.A.apply(x);
  const double eps0 = p.eps0.value_or(default_eps0(P.A, y));
  const RestartSchedule s = make_schedule(p, P.W, eps0, p.zeta);
  const SolverSpec spec{P.A, P.W, s, eta, p.init};
  const int side = P.A.side();

  CsvWriter csv(ctx.dir / "stability.csv", "eta_tilde,trial,best_objective");
  CsvWriter traces(ctx.dir / "stability_traces.csv", "eta_tilde,trial,step,objective,best_so_far");
  json searches = json::array();
  for (int d : p.decades) {
    PerturbConfig cfg;
    cfg.eta_tilde = std::pow(10.0, d) * eta;
    cfg.trials = p.trials;
    cfg.steps = p.steps;
    cfg.step_size = p.step_size;
    cfg.seed = p.seed;
    cfg.threads = p.threads;
    cfg.memory_budget = static_cast<std::size_t>(p.memory_budget);
    const PerturbationResult res = worst_case_perturbation(y, spec, cfg);
    json aborted = json::array();
    for (int t = 0; t < cfg.trials; ++t) {
      const TrialTrace& tr = res.trials[static_cast<std::size_t>(t)];
      csv.row(cfg.eta_tilde, t, tr.best_objective);
      for (std::size_t k = 0; k < tr.objective.size(); ++k) {
        traces.row(cfg.eta_tilde, t, static_cast<int>(k), tr.objective[k], tr.best_so_far[k]);
      }
      if (tr.aborted) aborted.push_back(json{{"trial", t}, {"diagnostic", tr.diagnostic}});
    }
    const Vec perturbed = reconstruct(spec, y + res.e_best);
    const std::string tag = fmt::format("d{}", d);
    ctx.image("perturbation_" + tag + ".png", side, perturbation_to_image(res.e_best, P.A).data());
    ctx.image("difference_" + tag + ".png", side, perturbed - res.reference);
    ctx.image("reconstruction_" + tag + ".png", side, res.reference);
    ctx.image("reconstruction_perturbed_" + tag + ".png", side, perturbed);
    const double amplification = (perturbed - res.reference).norm() / cfg.eta_tilde;
    searches.push_back(json{{"eta_tilde", cfg.eta_tilde},
                            {"best_trial", res.best_trial},
                            {"best_objective", res.best_objective},
                            {"e_best_norm", res.e_best.norm()},
                            {"amplification", amplification},
                            {"aborted_trials", aborted}});
    ctx.summary += fmt::format("eta~={} best objective={} amplification={}\n", cfg.eta_tilde, res.best_objective,
                               amplification);
  }
  csv.close();
  traces.close();
  ctx.files.insert(ctx.files.begin(), {"stability.csv", "stability_traces.csv"});
  ctx.manifest["runs"] = json::array({json{{"eta", eta}, {"schedule", schedule_json(s)}, {"searches", searches}}});
  ctx.manifest["measurements"] = "noiseless";
}

void run_recover(Context& ctx) {
  const auto& p = ctx.p;
  const Problem P = make_problem(p, p.sampling);
  ctx.manifest["problem"] = problem_json(P);
  const Vec& x = P.x.data();
  const double eta = p.eta.front();
  const Vec y = noisy_measurements(P.A, x, eta, p.seed, 0);
  const double eps0 = p.eps0.value_or(default_eps0(P.A, y));
  const RestartSchedule s = make_schedule(p, P.W, eps0, p.zeta);
  const RestartResult res = restarted_run(initial_point(p.init, P.A, y), P.A, P.W, y, eta, s);
  CsvWriter csv(ctx.dir / "recover.csv", "k,rel_err");
  for (std::size_t k = 0; k < res.iterates.size(); ++k) {
    csv.row(static_cast<int>(k) + 1, relative_error(res.iterates[k], x));
  }
  csv.close();
  ctx.files.emplace_back("recover.csv");
  ctx.image("reconstruction.png", P.A.side(), res.x);
  ctx.manifest["runs"] = json::array({json{{"eta", eta}, {"noise_stream", 0}, {"schedule", schedule_json(s)}}});
  ctx.summary += fmt::format("m={} final rel_err={} ||x*||={}\n", P.A.rows(), relative_error(res.x, x), res.x.norm());
}

void run_mask(Context& ctx) {
  const auto& p = ctx.p;
  MaskDensityConfig cfg;
  cfg.side = p.side;
  cfg.target_m = std::max<std::int64_t>(1, std::llround(p.sampling * static_cast<double>(p.side) * p.side));
  cfg.split = p.mask_split;
  cfg.seed = p.seed;
  const SamplingMask mask = generate_mask(cfg);
  write_mask(ctx.dir / "mask.txt", mask, p.seed);
  ctx.files.emplace_back("mask.txt");
  ctx.manifest["problem"] = json{{"side", p.side},
                                 {"target_m", cfg.target_m},
                                 {"m", mask.m()},
                                 {"mask_sha256", sha256_file(ctx.dir / "mask.txt")}};
  ctx.summary += fmt::format("side={} target_m={} realized m={}\n", p.side, cfg.target_m, mask.m());
}

void run_dims(Context& ctx) {
  const auto& p = ctx.p;
  const std::int64_t N = checked_pixel_count(p.side);
  const AnalysisOperator W(p.side, p.lambda);
  const double delta = resolve_delta(p, W);
  const int n = inner_iterations(p.r, delta, W.frame_bound(), W.output_size());
  const auto m = std::max<std::int64_t>(1, std::llround(p.sampling * static_cast<double>(N)));
  const NetworkDims dims = network_dims(p.restarts, n, N, W.output_size(), m);
  std::ostringstream os;
  os << "K=" << p.restarts << " n=" << n << " N=" << N << " M=" << W.output_size() << " m=" << m << '\n';
  os << "L=" << dims.depth << '\n';
  os << "max_width=" << dims.max_width << " (bound 3N+M=" << 3 * N + W.output_size() << ")\n";
  os << "activation_kinds=" << dims.activation_kinds << '\n';
  os << "widths: " << dims.layer_widths.front() << " | [" << 2 * N + W.output_size() << ", " << 2 * (N + m) << ", "
     << 2 * (N + 1) << ", " << 3 * N + 2 << ", " << 3 * N + 1 << "] x " << (p.restarts + 1) * (n + 1) << " | "
     << dims.layer_widths.back() << '\n';
  std::ofstream(ctx.dir / "dims.txt") << os.str();
  ctx.files.emplace_back("dims.txt");
  ctx.manifest["dims"] = json{{"depth", dims.depth}, {"max_width", dims.max_width}, {"inner_iterations", n},
                              {"m", m}, {"activation_kinds", dims.activation_kinds}};
  ctx.summary += os.str();
}

}  // namespace

Problem make_problem(const ExperimentParams& p, double sampling) {
  ImageGrid x = ImageGrid::zeros(p.side);
  std::string image_source;
  const auto presets = phantom_preset_names();
  if (std::find(presets.begin(), presets.end(), p.image) != presets.end()) {
    x = render_phantom(p.side, phantom_preset(p.image));
    image_source = "preset:" + p.image;
  } else {
    x = load_grayscale(p.image);
    if (x.side() != p.side) {
      throw InvalidArgument(fmt::format("image side {} does not match --side {}", x.side(), p.side));
    }
    image_source = "file:" + p.image + " sha256=" + sha256_file(p.image);
  }

  std::string mask_source;
  std::string mask_hash;
  SamplingMask mask = SamplingMask::full(2);
  if (p.mask_file.empty()) {
    MaskDensityConfig cfg;
    cfg.side = p.side;
    cfg.target_m = std::max<std::int64_t>(1, std::llround(sampling * static_cast<double>(p.side) * p.side));
    cfg.split = p.mask_split;
    cfg.seed = p.seed;
    mask = generate_mask(cfg);
    std::ostringstream os;
    write_mask(os, mask, p.seed);
    mask_hash = sha256_hex(os.str());
    mask_source = fmt::format("generated target_m={} split={} seed={}", cfg.target_m, cfg.split, cfg.seed);
  } else {
    LoadedMask loaded = read_mask(p.mask_file);
    if (loaded.mask.side() != p.side) {
      throw InvalidArgument(fmt::format("mask side {} does not match --side {}", loaded.mask.side(), p.side));
    }
    mask = std::move(loaded.mask);
    mask_hash = sha256_file(p.mask_file);
    mask_source = "file:" + p.mask_file;
  }
  MeasurementOperator A(mask);
  AnalysisOperator W(p.side, p.lambda);
  return Problem{std::move(x), image_source, std::move(mask), mask_hash, mask_source, std::move(A), std::move(W)};
}

Vec noisy_measurements(const MeasurementOperator& A, const Vec& x, double eta, std::uint64_t seed,
                       std::uint64_t index) {
  Vec y = A.apply(x);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0x6e6f6973U};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> gauss;
  Vec e(y.size());
  for (Eigen::Index i = 0; i < e.size(); ++i) e[i] = Complex(gauss(rng), gauss(rng));
  return y + e * (eta / e.norm());
}

double resolve_delta(const ExperimentParams& p, const AnalysisOperator& W) {
  if (p.delta) return *p.delta;
  return delta_for_inner_iterations(p.inner_iters, p.r, W.frame_bound(), W.output_size());
}

RestartSchedule make_schedule(const ExperimentParams& p, const AnalysisOperator& W, double eps0, double zeta) {
  ScheduleParams sp;
  sp.r = p.r;
  sp.delta = resolve_delta(p, W);
  sp.zeta = zeta;
  sp.eps0 = eps0;
  sp.restarts = p.restarts;
  sp.beta = W.frame_bound();
  sp.M = W.output_size();
  sp.mu_floor = default_mu_floor(eps0);
  return build_schedule(sp);
}

RunReport run_experiment(const ExperimentParams& p, const fs::path& out_dir) {
  p.validate();
  fs::create_directories(out_dir);
  const auto start = std::chrono::steady_clock::now();
  Context ctx{p, out_dir, json::object(), {}, {}};
  ctx.manifest["schema_version"] = kManifestSchemaVersion;
  ctx.manifest["software"] = json{{"name", "nestanet"}, {"version", software_version()}};
  ctx.manifest["experiment"] = p.experiment;
  ctx.manifest["started_utc"] = utc_now();
  ctx.manifest["params"] = params_to_json(p);
  ctx.manifest["images"] = json::object();
  if (p.experiment != "mask") {
    const AnalysisOperator W(p.side, p.lambda);
    const double delta = resolve_delta(p, W);
    ctx.manifest["resolved"] = json{{"delta", delta},
                                    {"inner_iterations", inner_iterations(p.r, delta, W.frame_bound(), W.output_size())},
                                    {"beta", W.frame_bound()},
                                    {"M", W.output_size()}};
  }

  if (p.experiment == "exp-decay") run_exp_decay(ctx);
  else if (p.experiment == "compare") run_compare(ctx);
  else if (p.experiment == "contour") run_contour(ctx);
  else if (p.experiment == "stability") run_stability(ctx);
  else if (p.experiment == "recover") run_recover(ctx);
  else if (p.experiment == "mask") run_mask(ctx);
  else run_dims(ctx);

  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  ctx.manifest["duration_seconds"] = elapsed.count();
  json outputs = json::array();
  for (const auto& f : ctx.files) outputs.push_back(f.string());
  ctx.manifest["outputs"] = outputs;
  std::ofstream os(out_dir / "manifest.json");
  if (!os) throw IoError("cannot write " + (out_dir / "manifest.json").string());
  os << ctx.manifest.dump(2) << '\n';
  return RunReport{ctx.manifest, ctx.files, ctx.summary};
}

RunReport replay_manifest(const fs::path& manifest, const fs::path& out_dir, std::optional<int> threads) {
  std::ifstream is(manifest);
  if (!is) throw IoError("cannot open manifest " + manifest.string());
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed manifest: ") + e.what());
  }
  const int version = j.value("schema_version", -1);
  if (version != kManifestSchemaVersion) {
    throw InvalidArgument(fmt::format("unsupported manifest schema version {}", version));
  }
  ExperimentParams p = params_from_json(j.at("params"));
  if (threads) p.threads = *threads;
  RunReport report = run_experiment(p, out_dir);
  const auto recorded = j.value("/problem/mask_sha256"_json_pointer, std::string());
  const auto replayed = report.manifest.value("/problem/mask_sha256"_json_pointer, std::string());
  if (recorded != replayed) {
    throw Error("replay drew a different sampling mask (sha256 " + replayed + ", manifest has " + recorded + ")");
  }
  return report;
}

}  // namespace nestanet
