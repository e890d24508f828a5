#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rpweb/path.hpp"

namespace rpw {

// ---------------------------------------------------------------------------
// special functions

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// regularized lower incomplete gamma P(a, x), series + continued fraction
inline double gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_p: bad arguments");
  if (x == 0.0) return 0.0;
  double gln = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - gln);
  }
  // Lentz continued fraction for Q(a,x)
  double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
  for (int i = 1; i < 500; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::fabs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  double q = std::exp(-x + a * std::log(x) - gln) * h;
  return 1.0 - q;
}

inline double chi_square_sf(double stat, int dof) {
  return 1.0 - gamma_p(0.5 * dof, 0.5 * stat);
}

// Kolmogorov asymptotic survival Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2)
inline double kolmogorov_q(double lambda) {
  if (lambda < 1e-8) return 1.0;
  double sum = 0.0, sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    if (term < 1e-16) break;
    sign = -sign;
  }
  return std::min(1.0, std::max(0.0, 2.0 * sum));
}

// ---------------------------------------------------------------------------
// reports

struct StatsReport {
  std::string name;
  double estimate = std::nan("");
  double stderr_ = std::nan("");
  double stat = std::nan("");
  double p = std::nan("");
  double threshold = std::nan("");
  bool pass = false;
  nlohmann::json meta = nlohmann::json::object();

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["name"] = name;
    j["estimate"] = estimate;
    j["stderr"] = stderr_;
    j["stat"] = stat;
    j["p"] = p;
    j["threshold"] = threshold;
    j["pass"] = pass;
    j["meta"] = meta;
    return j;
  }
};

// ---------------------------------------------------------------------------
// hypothesis tests

inline StatsReport two_sample_ks(std::vector<double> xs, std::vector<double> ys,
                                 double p_threshold = 0.01) {
  if (xs.size() < 30 || ys.size() < 30)
    throw std::invalid_argument("two_sample_ks: need at least 30 samples per side");
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < xs.size() && j < ys.size()) {
    double x = xs[i], y = ys[j];
    if (x <= y) ++i;
    if (y <= x) ++j;
    double fx = static_cast<double>(i) / xs.size();
    double fy = static_cast<double>(j) / ys.size();
    d = std::max(d, std::fabs(fx - fy));
  }
  double ne = static_cast<double>(xs.size()) * ys.size() / (xs.size() + ys.size());
  double sq = std::sqrt(ne);
  double p = kolmogorov_q((sq + 0.12 + 0.11 / sq) * d);
  StatsReport r;
  r.name = "two_sample_ks";
  r.stat = d;
  r.p = p;
  r.threshold = p_threshold;
  r.pass = p > p_threshold;
  r.meta["n_x"] = xs.size();
  r.meta["n_y"] = ys.size();
  return r;
}

inline StatsReport one_sample_ks(std::vector<double> xs, const std::function<double(double)>& cdf,
                                 double p_threshold = 0.01) {
  if (xs.size() < 30) throw std::invalid_argument("one_sample_ks: need at least 30 samples");
  std::sort(xs.begin(), xs.end());
  double d = 0.0;
  double n = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double f = cdf(xs[i]);
    d = std::max(d, std::max((i + 1) / n - f, f - i / n));
  }
  double sq = std::sqrt(n);
  double p = kolmogorov_q((sq + 0.12 + 0.11 / sq) * d);
  StatsReport r;
  r.name = "one_sample_ks";
  r.stat = d;
  r.p = p;
  r.threshold = p_threshold;
  r.pass = p > p_threshold;
  r.meta["n"] = xs.size();
  return r;
}

inline StatsReport chi_square(const std::vector<double>& counts, const std::vector<double>& expected,
                              double p_threshold = 0.01) {
  if (counts.size() != expected.size() || counts.size() < 2)
    throw std::invalid_argument("chi_square: bins mismatch");
  double stat = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (expected[i] < 5.0) throw std::invalid_argument("chi_square: expected count below 5 in a bin");
    double d = counts[i] - expected[i];
    stat += d * d / expected[i];
  }
  int dof = static_cast<int>(counts.size()) - 1;
  StatsReport r;
  r.name = "chi_square";
  r.stat = stat;
  r.p = chi_square_sf(stat, dof);
  r.threshold = p_threshold;
  r.pass = r.p > p_threshold;
  r.meta["dof"] = dof;
  return r;
}

// ---------------------------------------------------------------------------
// moments

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / v.size();
}

inline double variance_of(const std::vector<double>& v) {
  double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / (v.size() - 1);
}

inline double quantile_of(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  double pos = q * (v.size() - 1);
  std::size_t lo = static_cast<std::size_t>(pos);
  std::size_t hi = std::min(lo + 1, v.size() - 1);
  double f = pos - lo;
  return v[lo] * (1.0 - f) + v[hi] * f;
}

// least-squares slope of y on x
inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = mean_of(x), my = mean_of(y), sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  return sxy / sxx;
}

// ---------------------------------------------------------------------------
// path-ensemble counting statistics (criteria B1' and E)

constexpr double kCoincidenceTol = 1e-9;

inline int distinct_count(std::vector<double> vals) {
  if (vals.empty()) return 0;
  std::sort(vals.begin(), vals.end());
  int k = 1;
  for (std::size_t i = 1; i < vals.size(); ++i)
    if (vals[i] - vals[i - 1] > kCoincidenceTol) ++k;
  return k;
}

// Number of distinct points on R x {t0+t} touched by paths that touch some
// point of [a,b] x {t0} and start at or before t0.
inline int eta_count(const WebEnsemble& ens, double t0, double t, double a, double b) {
  std::vector<double> vals;
  for (const auto& p : ens.paths) {
    if (p.t_start > t0 || p.t_end < t0 + t) continue;
    double v0 = p.value_at(t0);
    if (v0 < a || v0 > b) continue;
    vals.push_back(p.value_at(t0 + t));
  }
  return distinct_count(std::move(vals));
}

// Number of distinct points in (a,b) x {t0+t} touched by paths that also
// touch R x {t0}.
inline int eta_hat_count(const WebEnsemble& ens, double t0, double t, double a, double b) {
  std::vector<double> vals;
  for (const auto& p : ens.paths) {
    if (p.t_start > t0 || p.t_end < t0 + t) continue;
    double v = p.value_at(t0 + t);
    if (v > a && v < b) vals.push_back(v);
  }
  return distinct_count(std::move(vals));
}

}  // namespace rpw
