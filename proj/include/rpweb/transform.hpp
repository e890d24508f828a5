#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "rpweb/path.hpp"
#include "rpweb/point_field.hpp"

namespace rpw {

// ---------------------------------------------------------------------------
// coordinate maps

// Xi(r e^{i(-pi/2+sigma)}) = (n sigma, n^2/r - n): radial annulus to strip.
inline PlanarPoint xi(const PolarPoint& q, double n) {
  if (!(q.r > 0.0)) throw std::invalid_argument("xi: radius must be positive");
  double sigma = q.phi + kPi / 2.0;
  return {n * sigma, n * n / q.r - n};
}

inline PlanarPoint xi_point(const PlanarPoint& p, double n) { return xi(to_polar(p), n); }

inline PolarPoint xi_inverse(const PlanarPoint& ys, double n) {
  double r = n / (1.0 + ys.x2 / n);
  if (!(r > 0.0)) throw std::invalid_argument("xi_inverse: image point outside range");
  return {r, ys.x1 / n - kPi / 2.0};
}

inline PathPolyline xi_path(const PathPolyline& radial, double n) {
  PathPolyline out;
  out.vertices.reserve(radial.vertices.size());
  for (const auto& v : radial.vertices) out.vertices.push_back(xi_point(v, n));
  out.sync_times();
  return out;
}

// D(x1, x2) = (x1/sqrt(n), x2/n)
inline PlanarPoint diffusive_rescale(const PlanarPoint& p, double n) {
  return {p.x1 / std::sqrt(n), p.x2 / n};
}

inline PathPolyline diffusive_rescale(const PathPolyline& p, double n) {
  PathPolyline out;
  out.vertices.reserve(p.vertices.size());
  for (const auto& v : p.vertices) out.vertices.push_back(diffusive_rescale(v, n));
  out.sync_times();
  return out;
}

inline WebEnsemble diffusive_rescale(const WebEnsemble& ens, double n) {
  WebEnsemble out = ens;
  for (auto& p : out.paths) p = diffusive_rescale(p, n);
  return out;
}

// psi(y, s) = (y/(1+s), -1/(1+s)) on s in [0, tau]
inline PlanarPoint psi_point(const PlanarPoint& q, double tau) {
  if (q.x2 < -1e-9 || q.x2 > tau * (1.0 + 1e-9) + 1e-9)
    throw std::domain_error("psi_point: time outside [0, tau]");
  double f = 1.0 / (1.0 + q.x2);
  return {q.x1 * f, -f};
}

inline PathPolyline psi_path(const PathPolyline& p, double tau) {
  PathPolyline out;
  out.vertices.reserve(p.vertices.size());
  for (const auto& v : p.vertices) out.vertices.push_back(psi_point(v, tau));
  out.sync_times();
  return out;
}

inline WebEnsemble psi_ensemble(const WebEnsemble& ens, double tau) {
  WebEnsemble out = ens;
  for (auto& p : out.paths) p = psi_path(p, tau);
  return out;
}

// ---------------------------------------------------------------------------
// image triangles

// Exact image T' of the radial search triangle under Xi. For an apex mapped
// to (y, s) and radial depth l' in [0, l], the slice sits at time
// s + (1+s/n)^2 l' / (1 - (l'/n)(1+s/n)) with half width n eta(l'), where
// eta comes from the corner quadratic of the quadrangle side.
struct TrianglePrimeParams {
  PlanarPoint apex;  // (y, s)
  double depth = 0.0;
  double n = 0.0;
  double c = 0.0;
  double r = 0.0;  // n / (1 + s/n)

  double time_stretch(double lp) const {
    double u = 1.0 + apex.x2 / n;
    double denom = 1.0 - lp / n * u;
    if (denom <= 0.0) throw std::domain_error("time_stretch: depth outside valid regime");
    return u * u * lp / denom;
  }

  double half_width(double lp) const {
    if (lp == 0.0) return 0.0;
    double a = triangle_corner_overshoot(r, lp, c);
    if (a < 0.0) throw std::domain_error("half_width: corner quadratic has no positive root");
    double s = c * (lp + a) / (r - lp);
    if (s > 1.0) throw std::domain_error("half_width: degenerate corner");
    return n * std::asin(s);
  }
};

inline TrianglePrimeParams triangle_prime_image(const PlanarPoint& apex_radial, double l,
                                                const ModelParams& params) {
  double n = params.n;
  if (l < 0.0 || l > params.log_n() + 1e-12)
    throw std::invalid_argument("triangle_prime_image: depth outside [0, log n]");
  TrianglePrimeParams t;
  t.apex = xi_point(apex_radial, n);
  t.depth = l;
  t.n = n;
  t.c = params.c;
  t.r = norm(apex_radial);
  return t;
}

// T'': the linear-slope surrogate used by the increment law.
inline PlanarTriangleRegion triangle_double_prime(const PlanarPoint& apex, double v,
                                                  const ModelParams& params) {
  return {apex, params.triangle_slope(apex.x2), v};
}

// Area of the symmetric difference between T'_{apex, l} and
// T''_{apex, d'_n(s) l}, by quadrature over the common time support.
inline double triangle_symmetric_difference_area(const TrianglePrimeParams& tp,
                                                 const ModelParams& params, int samples = 20000) {
  double s = tp.apex.x2;
  double t_max = tp.time_stretch(tp.depth);
  double slope = params.triangle_slope(s);
  double area = 0.0;
  double dt = t_max / samples;
  double u = 1.0 + s / tp.n;
  for (int i = 0; i < samples; ++i) {
    double t = (i + 0.5) * dt;
    // invert the time stretch for the exact half width at this slice
    double lp = t / (u * u + t * u / tp.n);
    double w_exact = tp.half_width(lp);
    double w_lin = slope * t;
    area += 2.0 * std::fabs(w_exact - w_lin) * dt;
  }
  return area;
}

// ---------------------------------------------------------------------------
// path metric and Hausdorff distance

struct MetricWindow {
  double beta;      // lower end of the time window
  double beta_p;    // latest allowed start time
  double beta_pp;   // upper end of the time window
};

namespace detail {

// piecewise-linear evaluation with a monotone cursor
struct PathCursor {
  const PathPolyline* p;
  std::size_t i = 0;

  double eval(double t) {
    const auto& v = p->vertices;
    if (t <= v.front().x2) return v.front().x1;
    if (t >= v.back().x2) return v.back().x1;
    while (i + 1 < v.size() && v[i + 1].x2 < t) ++i;
    while (i > 0 && v[i].x2 > t) --i;
    double f = (t - v[i].x2) / (v[i + 1].x2 - v[i].x2);
    return v[i].x1 + f * (v[i + 1].x1 - v[i].x1);
  }
};

}  // namespace detail

constexpr int kMetricGrid = 2048;

// d((f,t0,t1),(g,s0,s1)) = |t0-s0| v |t1-s1| v sup |tanh f* - tanh g*|, the
// sup taken over a uniform grid of 2048 window points plus all vertex times.
inline double path_distance(const PathPolyline& f, const PathPolyline& g, const MetricWindow& w) {
  double d = std::max(std::fabs(f.t_start - g.t_start), std::fabs(f.t_end - g.t_end));
  detail::PathCursor cf{&f}, cg{&g};
  double lo = w.beta, hi = w.beta_pp;
  double step = (hi - lo) / kMetricGrid;
  std::size_t fi = 0, gi = 0;
  int grid = 0;
  double t_prev = -1e308;
  auto consider = [&](double t) {
    if (t < lo || t > hi || t == t_prev) return;
    t_prev = t;
    double v = std::fabs(std::tanh(cf.eval(t)) - std::tanh(cg.eval(t)));
    if (v > d) d = v;
  };
  // three-way merge of grid times and both vertex-time lists
  while (true) {
    double tg = grid <= kMetricGrid ? lo + grid * step : 1e308;
    double tf = fi < f.vertices.size() ? f.vertices[fi].x2 : 1e308;
    double th = gi < g.vertices.size() ? g.vertices[gi].x2 : 1e308;
    double t = std::min(tg, std::min(tf, th));
    if (t == 1e308) break;
    consider(t);
    if (tg == t) ++grid;
    if (tf == t) ++fi;
    if (th == t) ++gi;
  }
  return d;
}

// Hausdorff distance between two finite path sets under d. Candidate partners
// are scanned in order of start-time gap, which lower-bounds d and prunes.
inline double hausdorff_distance(const WebEnsemble& a, const WebEnsemble& b,
                                 const MetricWindow& w) {
  if (a.paths.empty() || b.paths.empty())
    throw std::invalid_argument("hausdorff_distance: empty ensemble");
  auto directed = [&w](const WebEnsemble& from, const WebEnsemble& to) {
    std::vector<std::size_t> order(to.paths.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
      return to.paths[i].t_start < to.paths[j].t_start;
    });
    std::vector<double> starts(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) starts[i] = to.paths[order[i]].t_start;
    double worst = 0.0;
    for (const auto& pa : from.paths) {
      auto mid = std::lower_bound(starts.begin(), starts.end(), pa.t_start) - starts.begin();
      double best = 1e308;
      long left = static_cast<long>(mid) - 1, right = static_cast<long>(mid);
      while (left >= 0 || right < static_cast<long>(order.size())) {
        double gl = left >= 0 ? pa.t_start - starts[left] : 1e308;
        double gr = right < static_cast<long>(order.size()) ? starts[right] - pa.t_start : 1e308;
        if (std::min(gl, gr) >= best) break;
        std::size_t idx;
        if (gl <= gr) idx = order[left--];
        else idx = order[right++];
        best = std::min(best, path_distance(pa, to.paths[idx], w));
      }
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

// ---------------------------------------------------------------------------
// restriction maps R (paths) and their ensemble lift

// Clip every path at the horizon and drop paths starting after it; paths
// ending earlier are continued at their terminal value so that every output
// path ends exactly at the horizon. Idempotent.
inline PathPolyline restrict_path(const PathPolyline& p, double t_horizon) {
  PathPolyline out;
  for (const auto& v : p.vertices) {
    if (v.x2 < t_horizon) out.vertices.push_back(v);
  }
  if (out.vertices.empty()) out.vertices.push_back(p.vertices.front());
  if (out.vertices.back().x2 < t_horizon) {
    double tail = p.t_end <= t_horizon ? p.vertices.back().x1 : p.value_at(t_horizon);
    out.vertices.push_back({tail, t_horizon});
  }
  out.sync_times();
  return out;
}

inline WebEnsemble restrict_paths(const WebEnsemble& ens, double t_horizon) {
  WebEnsemble out;
  out.provenance = ens.provenance;
  out.seed = ens.seed;
  for (const auto& p : ens.paths) {
    if (p.t_start > t_horizon) continue;
    out.paths.push_back(restrict_path(p, t_horizon));
  }
  return out;
}

}  // namespace rpw
