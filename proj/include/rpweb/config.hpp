#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "rpweb/params.hpp"

namespace rpw {

// Resolved run configuration. Scale parameters feed sample-web and
// export-plotdata directly; the verification suites pin the scales their
// criteria prescribe and read only the knobs below that apply to them.
struct RunConfig {
  double theta = 0.78539816339744830961;  // pi/4
  double n = 1e4;
  double alpha = 0.5;
  double a_exp = 0.3;
  double b_exp = 0.45;
  std::uint64_t seed = 1;
  long trials = 10000;
  int jobs = 1;
  std::string out_dir = "out";
  std::string suite = "all";
  // horizon overrides (0 = suite default)
  double coal_horizon = 0.0;
  double sample_half_width = 0.0;  // angular half width for sample-web (0 = n^{-b})

  ModelParams params() const { return ModelParams(theta, n, alpha, a_exp, b_exp); }

  static RunConfig from_json(const nlohmann::json& j) {
    nlohmann::json src = j.contains("config") && j["config"].is_object() ? j["config"] : j;
    static const std::set<std::string> known = {
        "theta", "n",     "alpha",    "a_exp",        "b_exp",
        "seed",  "trials", "jobs",    "out_dir",      "suite",
        "coal_horizon",   "sample_half_width"};
    for (auto it = src.begin(); it != src.end(); ++it)
      if (!known.count(it.key()))
        throw std::invalid_argument("unknown config key: " + it.key());
    RunConfig c;
    if (src.contains("theta")) c.theta = src["theta"].get<double>();
    if (src.contains("n")) c.n = src["n"].get<double>();
    if (src.contains("alpha")) c.alpha = src["alpha"].get<double>();
    if (src.contains("a_exp")) c.a_exp = src["a_exp"].get<double>();
    if (src.contains("b_exp")) c.b_exp = src["b_exp"].get<double>();
    if (src.contains("seed")) c.seed = src["seed"].get<std::uint64_t>();
    if (src.contains("trials")) c.trials = src["trials"].get<long>();
    if (src.contains("jobs")) c.jobs = src["jobs"].get<int>();
    if (src.contains("out_dir")) c.out_dir = src["out_dir"].get<std::string>();
    if (src.contains("suite")) c.suite = src["suite"].get<std::string>();
    if (src.contains("coal_horizon")) c.coal_horizon = src["coal_horizon"].get<double>();
    if (src.contains("sample_half_width"))
      c.sample_half_width = src["sample_half_width"].get<double>();
    c.params();  // validate
    return c;
  }

  static RunConfig from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    nlohmann::json j;
    in >> j;
    return from_json(j);
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["theta"] = theta;
    j["n"] = n;
    j["alpha"] = alpha;
    j["a_exp"] = a_exp;
    j["b_exp"] = b_exp;
    j["seed"] = seed;
    j["trials"] = trials;
    j["jobs"] = jobs;
    j["out_dir"] = out_dir;
    j["suite"] = suite;
    j["coal_horizon"] = coal_horizon;
    j["sample_half_width"] = sample_half_width;
    return j;
  }

  // Manifest: the resolved config plus every derived constant; loading a
  // manifest as a config reproduces the run.
  nlohmann::json manifest() const {
    ModelParams p = params();
    nlohmann::json j;
    j["config"] = to_json();
    nlohmann::json d;
    d["c"] = p.c;
    d["tau"] = p.tau;
    d["c_hat"] = p.c_hat();
    d["sigma2"] = p.sigma2();
    d["omega_paper_sq"] = p.omega_paper_sq();
    d["a_n"] = p.a_n();
    d["c_n_at_0"] = p.c_n(0.0);
    d["d_prime_n_at_0"] = p.d_prime_n(0.0);
    d["L_n_at_0"] = p.big_l(0.0);
    d["log_n"] = p.log_n();
    j["derived"] = d;
    return j;
  }
};

}  // namespace rpw
