#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "rpweb/point_field.hpp"

namespace rpw {

constexpr long kStepGuard = 10'000'000;

struct NonterminationFault : std::runtime_error {
  NonterminationFault() : std::runtime_error("path construction exceeded the step guard") {}
};

inline std::uint64_t point_bits(const PlanarPoint& p) {
  return mix_key(std::bit_cast<std::uint64_t>(p.x1), std::bit_cast<std::uint64_t>(p.x2));
}

// Successor of x: the field point of Q_x farthest from the origin, or O when
// Q_x holds no field point (the origin belongs to the augmented field).
inline PlanarPoint successor(const PlanarPoint& x, LazyPointField& field,
                             const ModelParams& params) {
  auto best = field.farthest_from_origin_in(RegionQuery::quadrangle(x), params, x);
  return best ? *best : PlanarPoint{0.0, 0.0};
}

// Successor restricted to T_{x, log n}; empty triangles report no value.
inline std::optional<PlanarPoint> hat_successor(const PlanarPoint& x, LazyPointField& field,
                                                const ModelParams& params) {
  double depth = std::min(params.log_n(), norm(x));
  return field.farthest_from_origin_in(RegionQuery::triangle_radial(x, depth), params, x);
}

// Exact quadrangle successor, searched through nested triangles of doubling
// depth. Equals successor() but touches only the cells it needs.
inline PlanarPoint successor_deep(const PlanarPoint& x, LazyPointField& field,
                                  const ModelParams& params) {
  double rx = norm(x);
  for (double l = params.log_n(); l < 2.0 * rx; l *= 2.0) {
    auto best =
        field.farthest_from_origin_in(RegionQuery::triangle_radial(x, std::min(l, rx)), params, x);
    if (best) return *best;
    if (l >= rx) break;
  }
  return {0.0, 0.0};
}

// gamma_x: iterated successors from x down to the origin.
inline PathPolyline build_gamma(const PlanarPoint& x, LazyPointField& field,
                                const ModelParams& params) {
  PathPolyline path;
  path.vertices.push_back(x);
  PlanarPoint v = x;
  for (long i = 0; i < kStepGuard; ++i) {
    if (v.x1 == 0.0 && v.x2 == 0.0) {
      path.sync_times();
      return path;
    }
    v = successor_deep(v, field, params);
    path.vertices.push_back(v);
  }
  throw NonterminationFault();
}

// Parameter of the first crossing of |p + t d| = rho, for |p| > rho.
inline double segment_circle_crossing(const PlanarPoint& p, const PlanarPoint& d, double rho) {
  double a = d.x1 * d.x1 + d.x2 * d.x2;
  double b = p.x1 * d.x1 + p.x2 * d.x2;
  double c0 = norm2(p) - rho * rho;
  double disc = b * b - a * c0;
  if (disc < 0.0) throw std::invalid_argument("segment_circle_crossing: segment misses the circle");
  return c0 / (-b + std::sqrt(disc));
}

// gamma'_x: gamma clipped where it first reaches radius alpha n.
inline PathPolyline clip_gamma_prime(const PathPolyline& path, const ModelParams& params) {
  double rho = params.alpha * params.n;
  if (path.vertices.empty() || norm(path.vertices.front()) < rho)
    throw std::invalid_argument("clip_gamma_prime: path starts inside radius alpha n");
  PathPolyline out;
  for (std::size_t i = 0; i < path.vertices.size(); ++i) {
    const PlanarPoint& v = path.vertices[i];
    double rv = norm(v);
    if (rv > rho) {
      out.vertices.push_back(v);
      continue;
    }
    if (rv == rho) {
      out.vertices.push_back(v);
      out.sync_times();
      return out;
    }
    const PlanarPoint& prev = path.vertices[i - 1];
    PlanarPoint d{v.x1 - prev.x1, v.x2 - prev.x2};
    double t = segment_circle_crossing(prev, d, rho);
    out.vertices.push_back({prev.x1 + t * d.x1, prev.x2 + t * d.x2});
    out.sync_times();
    return out;
  }
  throw std::invalid_argument("clip_gamma_prime: path never reaches radius alpha n");
}

// gamma''_x: gamma' cut at the first vertex whose argument leaves the window
// |arg + pi/2| <= n^{-a}, with a radial terminal edge to radius alpha n on the
// ray of the last kept vertex. Paths that stay inside the window are returned
// unchanged.
inline PathPolyline modify_gamma_double_prime(const PathPolyline& clipped,
                                              const ModelParams& params) {
  double window = std::pow(params.n, -params.a_exp);
  std::size_t cut = clipped.vertices.size();
  for (std::size_t i = 0; i < clipped.vertices.size(); ++i) {
    if (std::fabs(sigma_of(clipped.vertices[i])) > window) {
      cut = i;
      break;
    }
  }
  if (cut == clipped.vertices.size()) return clipped;
  PathPolyline out;
  std::size_t kept = std::max<std::size_t>(cut, 1);
  out.vertices.assign(clipped.vertices.begin(), clipped.vertices.begin() + kept);
  const PlanarPoint& last = out.vertices.back();
  double rl = norm(last);
  double rho = params.alpha * params.n;
  out.vertices.push_back({last.x1 * rho / rl, last.x2 * rho / rl});
  out.sync_times();
  return out;
}

// membership of Lambda_bar_n = {r in [alpha n, n], |sigma| <= n^{-a}}
inline bool in_lambda_bar(const PlanarPoint& p, const ModelParams& params) {
  double r = norm(p);
  if (r < params.alpha * params.n || r > params.n) return false;
  return std::fabs(sigma_of(p)) <= std::pow(params.n, -params.a_exp);
}

struct HatPathResult {
  PathPolyline path;
  bool any_fallback = false;
  long fallback_steps = 0;
};

// hat gamma_x: the variant construction. Each step takes the farthest field
// point of T_{., log n}, falling back to the deterministic w(., log n) when
// the triangle is empty; the path is stopped at the boundary of Lambda_bar_n
// (clipped on the inner circle, sent radially to radius alpha n on a side
// exit). Arbitrary start points are accepted; the path follows the field
// succession from the first field point it reaches.
inline HatPathResult build_hat_gamma(const PlanarPoint& x, LazyPointField& field,
                                     const ModelParams& params) {
  double rho = params.alpha * params.n;
  double window = std::pow(params.n, -params.a_exp);
  HatPathResult res;
  res.path.vertices.push_back(x);
  PlanarPoint v = x;
  for (long i = 0; i < kStepGuard; ++i) {
    PlanarPoint next;
    auto hit = hat_successor(v, field, params);
    if (hit) {
      next = *hit;
    } else {
      next = w_point(v, std::min(params.log_n(), norm(v)));
      res.any_fallback = true;
      ++res.fallback_steps;
    }
    if (in_lambda_bar(next, params)) {
      res.path.vertices.push_back(next);
      v = next;
      continue;
    }
    // terminal edge: find where (v, next) leaves Lambda_bar_n
    PlanarPoint d{next.x1 - v.x1, next.x2 - v.x2};
    double t_top = norm(next) < rho ? segment_circle_crossing(v, d, rho) : 2.0;
    double t_side = 2.0;
    if (std::fabs(sigma_of(next)) > window) {
      // bisect the crossing of |sigma| = window along the edge
      double lo = 0.0, hi = 1.0;
      for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (lo + hi);
        PlanarPoint q{v.x1 + mid * d.x1, v.x2 + mid * d.x2};
        (std::fabs(sigma_of(q)) > window ? hi : lo) = mid;
      }
      t_side = hi;
    }
    if (t_top <= t_side) {
      res.path.vertices.push_back({v.x1 + t_top * d.x1, v.x2 + t_top * d.x2});
    } else {
      double rl = norm(v);
      res.path.vertices.push_back({v.x1 * rho / rl, v.x2 * rho / rl});
    }
    res.path.sync_times();
    return res;
  }
  throw NonterminationFault();
}

// starting points of the full ensemble: P intersected with the sector
// Lambda_n(alpha, b_exp), optionally with a narrower angular half width
inline std::vector<PlanarPoint> lambda_n_starts(LazyPointField& field, const ModelParams& params,
                                                double half_width = -1.0) {
  double w = half_width > 0.0 ? half_width : std::pow(params.n, -params.b_exp);
  double n = params.n, rho = params.alpha * n;
  Rectangle bb{-n * std::sin(w), n * std::sin(w), -n, -rho * std::cos(w)};
  auto pts = field.points_in(RegionQuery::rectangle(bb.x_lo, bb.x_hi, bb.s_lo, bb.s_hi));
  std::vector<PlanarPoint> out;
  for (const auto& p : pts) {
    double r = norm(p);
    if (r < rho || r > n) continue;
    if (std::fabs(sigma_of(p)) > w) continue;
    out.push_back(p);
  }
  return out;
}

}  // namespace rpw
