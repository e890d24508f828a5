#pragma once

#include <cmath>
#include <stdexcept>

#include "rpweb/params.hpp"

namespace rpw {

constexpr double kPi = 3.14159265358979323846;

// Absolute tolerance on cosines for the angle predicates; keeps points on the
// bisector or the quadrangle boundary inside the closed set.
constexpr double kEpsGeom = 1e-12;

struct PlanarPoint {
  double x1 = 0.0;
  double x2 = 0.0;

  friend bool operator==(const PlanarPoint& a, const PlanarPoint& b) {
    return a.x1 == b.x1 && a.x2 == b.x2;
  }
};

struct PolarPoint {
  double r = 0.0;
  double phi = 0.0;  // in (-pi, pi]
};

inline double norm(const PlanarPoint& p) { return std::hypot(p.x1, p.x2); }
inline double norm2(const PlanarPoint& p) { return p.x1 * p.x1 + p.x2 * p.x2; }

inline PolarPoint to_polar(const PlanarPoint& p) {
  PolarPoint q;
  q.r = norm(p);
  q.phi = (q.r == 0.0) ? 0.0 : std::atan2(p.x2, p.x1);
  if (q.phi <= -kPi) q.phi = kPi;  // normalize -pi to pi
  return q;
}

inline PlanarPoint from_polar(const PolarPoint& q) {
  return {q.r * std::cos(q.phi), q.r * std::sin(q.phi)};
}

// Angular offset from the downward ray: sigma = phi + pi/2 for points written
// as r e^{i(-pi/2 + sigma)}.
inline double sigma_of(const PlanarPoint& p) { return to_polar(p).phi + kPi / 2.0; }

// Membership in the closed quadrangle Q_x: intersection of the cone at x of
// half-angle theta about the direction x -> O with the cone at O of half-angle
// pi/2 - theta about the direction O -> x. Every member has norm <= |x|.
inline bool quadrangle_contains(const PlanarPoint& x, const ModelParams& params,
                                const PlanarPoint& p) {
  double rx = norm(x);
  if (rx == 0.0) throw std::invalid_argument("quadrangle_contains: apex at origin");

  // cone at x: angle(p - x, O - x) <= theta
  double vx1 = p.x1 - x.x1, vx2 = p.x2 - x.x2;
  double lv = std::hypot(vx1, vx2);
  if (lv > 0.0) {
    double cosx = (-(vx1 * x.x1 + vx2 * x.x2)) / (lv * rx);
    if (cosx < std::cos(params.theta) - kEpsGeom) return false;
  }

  // cone at O: angle(p - O, x - O) <= pi/2 - theta
  double lp = norm(p);
  if (lp > 0.0) {
    double coso = (p.x1 * x.x1 + p.x2 * x.x2) / (lp * rx);
    if (coso < std::sin(params.theta) - kEpsGeom) return false;
  }
  return true;
}

// w(x, l): the point of segment Ox at distance l from x.
inline PlanarPoint w_point(const PlanarPoint& x, double l) {
  double rx = norm(x);
  if (l < 0.0 || l > rx) throw std::invalid_argument("w_point: depth outside [0, |x|]");
  double f = (rx - l) / rx;
  return {x.x1 * f, x.x2 * f};
}

// T_{x,l}: the part of Q_x outside the circle through w(x,l), i.e. with
// norm >= |x| - l. Monotone in l, and T_{x,0} = {x}.
inline bool triangle_contains(const PlanarPoint& x, double l, const ModelParams& params,
                              const PlanarPoint& p) {
  double rx = norm(x);
  if (l < 0.0 || l > rx) throw std::invalid_argument("triangle_contains: depth outside [0, |x|]");
  if (norm(p) < rx - l - kEpsGeom * rx) return false;
  return quadrangle_contains(x, params, p);
}

// Side vertices of Q_x (right internal angles): y on the +theta side, z on
// the -theta side, both at distance |x| cos(theta) from x.
inline void quadrangle_side_vertices(const PlanarPoint& x, const ModelParams& params,
                                     PlanarPoint& y, PlanarPoint& z) {
  double rx = norm(x);
  double ax = -x.x1 / rx, ay = -x.x2 / rx;  // unit vector x -> O
  double ct = std::cos(params.theta), st = std::sin(params.theta);
  double d = rx * ct;
  y = {x.x1 + d * (ct * ax - st * ay), x.x2 + d * (st * ax + ct * ay)};
  z = {x.x1 + d * (ct * ax + st * ay), x.x2 + d * (-st * ax + ct * ay)};
}

// Positive root a(l) of c^2 (l+a)^2 + (r-l-a)^2 = (r-l)^2: the extra axial
// depth past l at which the quadrangle side meets the circle of radius r-l.
// Returns a negative value when the side never reaches that circle.
inline double triangle_corner_overshoot(double r, double l, double c) {
  double A = 1.0 + c * c;
  double B = 2.0 * (c * c * l - (r - l));
  double C = c * c * l * l;
  double disc = B * B - 4.0 * A * C;
  if (disc < 0.0) return -1.0;
  // smaller positive root, in the numerically stable form
  double q = -0.5 * (B - std::sqrt(disc));  // B < 0 in the valid regime
  return C / q;
}

}  // namespace rpw
