#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "nestanet/harness.hpp"

namespace nestanet {

const char* software_version() noexcept { return NESTANET_VERSION; }

void ExperimentParams::validate() const {
  static const std::vector<std::string> known{"exp-decay", "compare", "contour", "stability", "recover", "mask", "dims"};
  if (std::find(known.begin(), known.end(), experiment) == known.end()) {
    throw InvalidArgument("unknown experiment: " + experiment);
  }
  if (!is_power_of_two(side) || side < 2) throw InvalidArgument("side must be a power of two >= 2");
  if (!(sampling > 0.0 && sampling <= 1.0)) throw InvalidArgument("sampling rate must lie in (0, 1]");
  if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be >= 0");
  if (!(r > 0.0 && r < 1.0)) throw InvalidArgument("r must lie in (0, 1)");
  if (delta && !(*delta > 0.0)) throw InvalidArgument("delta must be > 0");
  if (inner_iters < 0) throw InvalidArgument("inner iteration count must be >= 0");
  if (!(zeta >= 0.0)) throw InvalidArgument("zeta must be >= 0");
  if (eta.empty()) throw InvalidArgument("at least one eta is required");
  for (double e : eta) {
    if (!(e > 0.0) || !std::isfinite(e)) throw InvalidArgument("eta values must be > 0");
  }
  if (restarts < 0) throw InvalidArgument("restarts must be >= 0");
  if (threads < 1) throw InvalidArgument("threads must be >= 1");
  if (!(mask_split > 0.0 && mask_split < 1.0)) throw InvalidArgument("mask split must lie in (0, 1)");
  if (eps0 && !(*eps0 > 0.0)) throw InvalidArgument("eps0 must be > 0");
  for (double mu : fixed_mu) {
    if (!(mu > 0.0)) throw InvalidArgument("fixed mu values must be > 0");
  }
  if (contour_lo > contour_hi) throw InvalidArgument("contour exponent range is empty");
  if (decades.empty()) throw InvalidArgument("at least one eta~ decade is required");
  if (trials < 1 || steps < 1) throw InvalidArgument("trials and steps must be >= 1");
  if (!(step_size > 0.0)) throw InvalidArgument("step size must be > 0");
}

ExperimentParams default_params(const std::string& experiment, bool paper_scale) {
  ExperimentParams p;
  p.experiment = experiment;
  p.paper_scale = paper_scale;
  p.side = paper_scale ? 512 : 64;
  if (experiment == "exp-decay") {
    p.sampling = 0.15;
    p.restarts = 14;
    p.inner_iters = 33;
    p.eta = {1e0, 1e-1, 1e-2, 1e-3, 1e-4};
  } else if (experiment == "compare") {
    p.sampling = 0.15;
    p.restarts = 11;
    p.inner_iters = 33;
    p.eta = {1e-3};
  } else if (experiment == "contour") {
    p.sampling = 0.25;
    p.restarts = 14;
    p.inner_iters = 33;
    p.contour_lo = -1;
    p.contour_hi = paper_scale ? 7 : 4;
  } else if (experiment == "stability") {
    p.sampling = 0.25;
    p.restarts = 9;
    p.inner_iters = 17;
    p.eta = {1e-2};
    p.trials = paper_scale ? 400 : 8;
    p.steps = paper_scale ? 150 : 40;
  } else if (experiment == "dims") {
    p.restarts = 9;
    p.inner_iters = 17;
  }
  return p;
}

nlohmann::json params_to_json(const ExperimentParams& p) {
  nlohmann::json j;
  j["experiment"] = p.experiment;
  j["side"] = p.side;
  j["sampling"] = p.sampling;
  j["lambda"] = p.lambda;
  j["r"] = p.r;
  j["delta"] = p.delta ? nlohmann::json(*p.delta) : nlohmann::json(nullptr);
  j["inner_iters"] = p.inner_iters;
  j["zeta"] = p.zeta;
  j["eta"] = p.eta;
  j["restarts"] = p.restarts;
  j["seed"] = p.seed;
  j["threads"] = p.threads;
  j["paper_scale"] = p.paper_scale;
  j["image"] = p.image;
  j["mask_file"] = p.mask_file;
  j["mask_split"] = p.mask_split;
  j["eps0"] = p.eps0 ? nlohmann::json(*p.eps0) : nlohmann::json(nullptr);
  j["init"] = p.init == InitialPoint::Zero ? "zero" : "pseudoinverse";
  j["fixed_mu"] = p.fixed_mu;
  j["contour_lo"] = p.contour_lo;
  j["contour_hi"] = p.contour_hi;
  j["decades"] = p.decades;
  j["trials"] = p.trials;
  j["steps"] = p.steps;
  j["step_size"] = p.step_size;
  j["memory_budget"] = p.memory_budget;
  return j;
}

ExperimentParams params_from_json(const nlohmann::json& j) {
  try {
    ExperimentParams p;
    p.experiment = j.at("experiment").get<std::string>();
    p.side = j.at("side").get<int>();
    p.sampling = j.at("sampling").get<double>();
    p.lambda = j.at("lambda").get<double>();
    p.r = j.at("r").get<double>();
    if (!j.at("delta").is_null()) p.delta = j.at("delta").get<double>();
    p.inner_iters = j.at("inner_iters").get<int>();
    p.zeta = j.at("zeta").get<double>();
    p.eta = j.at("eta").get<std::vector<double>>();
    p.restarts = j.at("restarts").get<int>();
    p.seed = j.at("seed").get<std::uint64_t>();
    p.threads = j.at("threads").get<int>();
    p.paper_scale = j.at("paper_scale").get<bool>();
    p.image = j.at("image").get<std::string>();
    p.mask_file = j.at("mask_file").get<std::string>();
    p.mask_split = j.at("mask_split").get<double>();
    if (!j.at("eps0").is_null()) p.eps0 = j.at("eps0").get<double>();
    const auto init = j.at("init").get<std::string>();
    if (init != "zero" && init != "pseudoinverse") throw InvalidArgument("unknown initial point: " + init);
    p.init = init == "zero" ? InitialPoint::Zero : InitialPoint::Pseudoinverse;
    p.fixed_mu = j.at("fixed_mu").get<std::vector<double>>();
    p.contour_lo = j.at("contour_lo").get<int>();
    p.contour_hi = j.at("contour_hi").get<int>();
    p.decades = j.at("decades").get<std::vector<int>>();
    p.trials = j.at("trials").get<int>();
    p.steps = j.at("steps").get<int>();
    p.step_size = j.at("step_size").get<double>();
    p.memory_budget = j.at("memory_budget").get<std::uint64_t>();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed parameter block: ") + e.what());
  }
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return sha256_hex(ss.str());
}

std::string format_double(double v) { return fmt::format("{}", v); }

}  // namespace nestanet
