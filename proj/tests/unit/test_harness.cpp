#include <cmath>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "nestanet/harness.hpp"
#include "nestanet/phantom.hpp"
#include "nestanet/sampling.hpp"

namespace nestanet {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::istringstream is(slurp(p));
  std::vector<std::string> out;
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string cell; std::getline(ss, cell, ',');) out.push_back(cell);
  return out;
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

// Small but complete configurations so the suite stays fast.
ExperimentParams small(const std::string& experiment) {
  ExperimentParams p = default_params(experiment);
  p.side = 16;
  p.inner_iters = 4;
  p.restarts = std::min(p.restarts, 3);
  p.sampling = 0.3;
  if (experiment == "stability") {
    p.side = 8;
    p.restarts = 1;
    p.inner_iters = 2;
    p.trials = 2;
    p.steps = 3;
  }
  return p;
}

class Harness : public ::testing::Test {
 protected:
  testing::ScratchDir dir{"harness"};
};

TEST(Params, JsonRoundTrip) {
  ExperimentParams p = default_params("stability", false);
  p.delta = 1.5e-3;
  p.eps0 = 2.25;
  p.init = InitialPoint::Pseudoinverse;
  p.mask_file = "m.txt";
  p.eta = {0.1, 0.01};
  const nlohmann::json j = params_to_json(p);
  EXPECT_EQ(params_to_json(params_from_json(j)), j);
  EXPECT_EQ(params_from_json(j).delta, 1.5e-3);
  EXPECT_EQ(params_from_json(j).init, InitialPoint::Pseudoinverse);
}

TEST(Params, MalformedJson) {
  nlohmann::json j = params_to_json(default_params("recover"));
  j.erase("side");
  EXPECT_THROW(params_from_json(j), InvalidArgument);
  j = params_to_json(default_params("recover"));
  j["init"] = "random";
  EXPECT_THROW(params_from_json(j), InvalidArgument);
  j = params_to_json(default_params("recover"));
  j["eta"] = "big";
  EXPECT_THROW(params_from_json(j), InvalidArgument);
}

TEST(Params, Defaults) {
  const ExperimentParams d = default_params("exp-decay");
  EXPECT_EQ(d.side, 64);
  EXPECT_EQ(d.sampling, 0.15);
  EXPECT_EQ(d.restarts, 14);
  EXPECT_EQ(d.inner_iters, 33);
  EXPECT_EQ(d.eta.size(), 5u);
  EXPECT_EQ(d.lambda, 2.5);
  EXPECT_EQ(d.r, 0.25);
  EXPECT_EQ(d.zeta, 1e-9);
  const ExperimentParams c = default_params("compare");
  EXPECT_EQ(c.restarts, 11);
  EXPECT_EQ(c.eta, std::vector<double>{1e-3});
  EXPECT_EQ(c.fixed_mu, (std::vector<double>{1e-2, 1e-3, 1e-4, 1e-5}));
  const ExperimentParams g = default_params("contour");
  EXPECT_EQ(g.sampling, 0.25);
  EXPECT_EQ(g.contour_hi - g.contour_lo + 1, 6);
  EXPECT_EQ(default_params("contour", true).contour_hi, 7);
  const ExperimentParams s = default_params("stability");
  EXPECT_EQ(s.restarts, 9);
  EXPECT_EQ(s.inner_iters, 17);
  EXPECT_EQ(s.eta, std::vector<double>{1e-2});
  const ExperimentParams sp = default_params("stability", true);
  EXPECT_EQ(sp.side, 512);
  EXPECT_EQ(sp.trials, 400);
  EXPECT_EQ(sp.steps, 150);
  EXPECT_EQ(sp.step_size, 3.0);
}

TEST(Params, Validation) {
  auto bad = [](auto mutate) {
    ExperimentParams p = default_params("recover");
    mutate(p);
    return p;
  };
  EXPECT_NO_THROW(default_params("recover").validate());
  EXPECT_THROW(bad([](auto& p) { p.experiment = "fig5"; }).validate(), InvalidArgument);
  EXPECT_THROW(bad([](auto& p) { p.side = 48; }).validate(), InvalidArgument);
  EXPECT_THROW(bad([](auto& p) { p.sampling = 0.0; }).validate(), InvalidArgument);
  EXPECT_THROW(bad([](auto& p) { p.r = 1.0; }).validate(), InvalidArgument);
  EXPECT_THROW(bad([](auto& p) { p.delta = -1.0; }).validate(), InvalidArgument);
  EXPECT_THROW(bad([](auto& p) { p.eta = {}; }).validate(), InvalidArgument);
  EXPECT_THROW(bad([](auto& p) { p.eta = {0.0}; }).validate(), InvalidArgument);
  EXPECT_THROW(bad([](auto& p) { p.threads = 0; }).validate(), InvalidArgument);
  EXPECT_THROW(bad([](auto& p) { p.contour_lo = 5; }).validate(), InvalidArgument);
  EXPECT_THROW(bad([](auto& p) { p.trials = 0; }).validate(), InvalidArgument);
  EXPECT_THROW(bad([](auto& p) { p.mask_split = 1.0; }).validate(), InvalidArgument);
}

TEST(Utilities, Sha256AndFormatting) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1e-9), "1e-09");
  for (std::uint64_t s = 0; s < 200; ++s) {
    const double v = oracle::random_vec(1, s)[0].real() * std::pow(10.0, static_cast<double>(s % 40) - 20.0);
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

TEST(Utilities, NoisyMeasurements) {
  const MeasurementOperator A(testing::random_mask(16, 0.3, 1));
  const Vec x = oracle::random_vec(256, 2);
  const Vec y = noisy_measurements(A, x, 0.37, 5, 2);
  EXPECT_NEAR((y - A.apply(x)).norm(), 0.37, 1e-14);
  EXPECT_EQ(y, noisy_measurements(A, x, 0.37, 5, 2));
  EXPECT_NE(y, noisy_measurements(A, x, 0.37, 5, 3));
  EXPECT_NE(y, noisy_measurements(A, x, 0.37, 6, 2));
}

TEST(Utilities, ScheduleFromParams) {
  ExperimentParams p = default_params("exp-decay");
  const AnalysisOperator W(64, p.lambda);
  EXPECT_EQ(make_schedule(p, W, 10.0, p.zeta).inner.front(), 33);
  p.inner_iters = 17;
  EXPECT_EQ(make_schedule(p, W, 10.0, p.zeta).inner.front(), 17);
  p.delta = 1e-3;
  EXPECT_EQ(resolve_delta(p, W), 1e-3);
  EXPECT_EQ(make_schedule(p, W, 10.0, p.zeta).inner.front(), inner_iterations(p.r, 1e-3, 21.0, 3 * 4096));
}

TEST_F(Harness, ExpDecayRowsAndManifest) {
  ExperimentParams p = small("exp-decay");
  p.restarts = 14;
  p.inner_iters = 2;
  const RunReport r = run_experiment(p, dir.path());
  const auto rows = lines(dir.path() / "exp_decay.csv");
  ASSERT_EQ(rows.size(), 1u + 5u * 15u);
  EXPECT_EQ(rows.front(), "eta,k,rel_err");
  EXPECT_EQ(split(rows[1]), (std::vector<std::string>{"1", "1", split(rows[1])[2]}));
  EXPECT_EQ(split(rows.back())[1], "15");

  const auto m = read_json(dir.path() / "manifest.json");
  EXPECT_EQ(m, r.manifest);
  EXPECT_EQ(m["schema_version"], kManifestSchemaVersion);
  EXPECT_EQ(m["software"]["version"], software_version());
  EXPECT_EQ(m["experiment"], "exp-decay");
  EXPECT_EQ(m["resolved"]["inner_iterations"], 2);
  EXPECT_EQ(m["problem"]["N"], 256);
  EXPECT_GT(m["problem"]["m"].get<int>(), 0);
  EXPECT_EQ(m["problem"]["nu"].get<double>(), 256.0 / m["problem"]["m"].get<double>());
  EXPECT_EQ(m["runs"].size(), 5u);
  EXPECT_TRUE(m.contains("duration_seconds"));
  EXPECT_EQ(m["outputs"], nlohmann::json::array({"exp_decay.csv"}));
  EXPECT_EQ(params_to_json(params_from_json(m["params"])), m["params"]);
}

TEST_F(Harness, CompareUsesEqualBudgets) {
  const ExperimentParams p = small("compare");
  run_experiment(p, dir.path());
  const auto rows = lines(dir.path() / "compare.csv");
  EXPECT_EQ(rows.front(), "variant,total_iter,rel_err");
  std::map<std::string, long> last;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto cells = split(rows[i]);
    const long t = std::stol(cells[1]);
    if (last.count(cells[0])) EXPECT_EQ(t, last[cells[0]] + 1);
    last[cells[0]] = t;
  }
  ASSERT_EQ(last.size(), 5u);
  EXPECT_TRUE(last.count("restarted"));
  EXPECT_TRUE(last.count("fixed_mu=0.01"));
  EXPECT_TRUE(last.count("fixed_mu=1e-05"));
  for (const auto& [name, t] : last) EXPECT_EQ(t, (p.restarts + 1) * (p.inner_iters + 1)) << name;
}

TEST_F(Harness, ContourGridComplete) {
  const ExperimentParams p = small("contour");
  run_experiment(p, dir.path());
  const auto rows = lines(dir.path() / "contour.csv");
  ASSERT_EQ(rows.size(), 37u);
  EXPECT_EQ(rows.front(), "eta,zeta,err");
  EXPECT_EQ(split(rows[1])[0], "10");
  EXPECT_EQ(split(rows[1])[1], "10");
  EXPECT_EQ(split(rows[2])[1], "1");
  EXPECT_EQ(split(rows[36])[0], "0.0001");
  EXPECT_EQ(split(rows[36])[1], "0.0001");
}

TEST_F(Harness, StabilityOutputs) {
  const ExperimentParams p = small("stability");
  const RunReport r = run_experiment(p, dir.path());
  const auto rows = lines(dir.path() / "stability.csv");
  EXPECT_EQ(rows.front(), "eta_tilde,trial,best_objective");
  EXPECT_EQ(rows.size(), 1u + p.decades.size() * static_cast<std::size_t>(p.trials));
  EXPECT_EQ(lines(dir.path() / "stability_traces.csv").size(),
            1u + p.decades.size() * static_cast<std::size_t>(p.trials * (p.steps + 1)));
  const auto& images = r.manifest["images"];
  EXPECT_EQ(images.size(), 4 * p.decades.size());
  for (int d : p.decades) {
    for (const char* stem : {"perturbation_d", "difference_d", "reconstruction_d", "reconstruction_perturbed_d"}) {
      const std::string name = std::string(stem) + std::to_string(d) + ".png";
      EXPECT_TRUE(fs::exists(dir.path() / name)) << name;
      EXPECT_GT(images[name]["normalization"].get<double>(), 0.0) << name;
    }
  }
  double prev = -1.0;
  for (const auto& s : r.manifest["runs"][0]["searches"]) {
    EXPECT_LE(s["e_best_norm"].get<double>(), s["eta_tilde"].get<double>());
    EXPECT_GE(s["best_objective"].get<double>(), prev);
    prev = s["best_objective"].get<double>();
  }
}

TEST_F(Harness, RecoverWithLooseConstraintReturnsZero) {
  ExperimentParams p = small("recover");
  p.eta = {1e6};
  run_experiment(p, dir.path());
  const auto rows = lines(dir.path() / "recover.csv");
  EXPECT_EQ(rows.front(), "k,rel_err");
  ASSERT_EQ(rows.size(), static_cast<std::size_t>(p.restarts) + 2);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(split(rows[i])[1], "1");
  const ImageGrid png = load_grayscale(dir.path() / "reconstruction.png");
  EXPECT_EQ(png.data().norm(), 0.0);
}

TEST_F(Harness, MaskThenRecoverReusesMask) {
  ExperimentParams mp = small("mask");
  mp.seed = 77;
  const RunReport mr = run_experiment(mp, dir.path() / "mask");
  const fs::path mask_file = dir.path() / "mask" / "mask.txt";
  const SamplingMask mask = read_mask(mask_file).mask;

  ExperimentParams rp = small("recover");
  rp.mask_file = mask_file.string();
  rp.seed = 3;
  const RunReport rr = run_experiment(rp, dir.path() / "recover");
  EXPECT_EQ(rr.manifest["problem"]["mask_sha256"], mr.manifest["problem"]["mask_sha256"]);
  EXPECT_EQ(rr.manifest["problem"]["m"], mask.m());
  EXPECT_EQ(make_problem(rp, rp.sampling).mask, mask);

  // A generated mask with the same seed hashes identically to its file form.
  ExperimentParams gp = small("recover");
  gp.seed = 77;
  EXPECT_EQ(make_problem(gp, gp.sampling).mask_sha256, mr.manifest["problem"]["mask_sha256"]);

  ExperimentParams wrong = rp;
  wrong.side = 32;
  EXPECT_THROW(make_problem(wrong, wrong.sampling), InvalidArgument);
}

TEST_F(Harness, ImageFromFile) {
  const ImageGrid x = render_phantom(16, disk_preset());
  write_png16(dir.path() / "disk.png", 16, x.data().real(), 1.0);
  ExperimentParams p = small("recover");
  p.image = (dir.path() / "disk.png").string();
  const Problem P = make_problem(p, p.sampling);
  EXPECT_EQ(P.x.data(), x.data());
  EXPECT_EQ(P.image_source.rfind("file:", 0), 0u);
  p.side = 32;
  EXPECT_THROW(make_problem(p, p.sampling), InvalidArgument);
  p.image = "no-such-preset";
  EXPECT_THROW(make_problem(p, p.sampling), IoError);
}

TEST_F(Harness, DimsReportsDepth) {
  ExperimentParams p = default_params("dims");
  const RunReport r = run_experiment(p, dir.path());
  EXPECT_NE(r.summary.find("L=901"), std::string::npos);
  EXPECT_NE(slurp(dir.path() / "dims.txt").find("L=901"), std::string::npos);
  EXPECT_EQ(r.manifest["dims"]["depth"], 901);
  EXPECT_EQ(r.manifest["dims"]["activation_kinds"], 4);
}

TEST_F(Harness, ReplayReproducesCsvBitwise) {
  for (const std::string exp : {"exp-decay", "compare", "contour", "stability", "recover", "mask", "dims"}) {
    ExperimentParams p = small(exp);
    if (exp == "contour") p.restarts = 1;
    const RunReport first = run_experiment(p, dir.path() / exp / "a");
    const RunReport again = replay_manifest(dir.path() / exp / "a" / "manifest.json", dir.path() / exp / "b");
    const RunReport threaded =
        replay_manifest(dir.path() / exp / "a" / "manifest.json", dir.path() / exp / "c", 3);
    ASSERT_EQ(first.files, again.files) << exp;
    for (const auto& f : first.files) {
      if (f.extension() != ".csv" && f.extension() != ".txt") continue;
      EXPECT_EQ(slurp(dir.path() / exp / "a" / f), slurp(dir.path() / exp / "b" / f)) << exp << " " << f;
      EXPECT_EQ(slurp(dir.path() / exp / "a" / f), slurp(dir.path() / exp / "c" / f)) << exp << " " << f;
    }
  }
}

TEST_F(Harness, ReplayRejectsBadManifests) {
  EXPECT_THROW(replay_manifest(dir.path() / "missing.json", dir.path() / "out"), IoError);
  std::ofstream(dir.path() / "junk.json") << "{not json";
  EXPECT_THROW(replay_manifest(dir.path() / "junk.json", dir.path() / "out"), IoError);
  nlohmann::json m{{"schema_version", 99}, {"params", params_to_json(small("dims"))}};
  std::ofstream(dir.path() / "v99.json") << m.dump();
  EXPECT_THROW(replay_manifest(dir.path() / "v99.json", dir.path() / "out"), InvalidArgument);
  m["schema_version"] = kManifestSchemaVersion;
  m["problem"] = {{"mask_sha256", "deadbeef"}};
  m["params"] = params_to_json(small("recover"));
  std::ofstream(dir.path() / "hash.json") << m.dump();
  EXPECT_THROW(replay_manifest(dir.path() / "hash.json", dir.path() / "out"), Error);
}

}  // namespace
}  // namespace nestanet
