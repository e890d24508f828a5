#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "rpweb/geometry.hpp"
#include "rpweb/rng.hpp"
#include "rpweb/stats.hpp"

namespace rpw {

// ---------------------------------------------------------------------------
// intensity laws

enum class LawKind { Unit, Transformed, Extended };

// unit:        1 on the whole plane (the radial model's field)
// transformed: (1+s/n)^-3 on R x [0, tau n]  (the strip image of the field)
// extended:    the transformed law continued by (1+tau)^-3 above tau n
struct IntensityLaw {
  LawKind kind = LawKind::Unit;
  double n = 0.0;
  double tau = 0.0;

  static IntensityLaw unit() { return {LawKind::Unit, 0.0, 0.0}; }
  static IntensityLaw transformed(double n, double tau) { return {LawKind::Transformed, n, tau}; }
  static IntensityLaw extended(double n, double tau) { return {LawKind::Extended, n, tau}; }

  double value(double s) const {
    switch (kind) {
      case LawKind::Unit: return 1.0;
      case LawKind::Transformed: {
        double u = 1.0 + s / n;
        return 1.0 / (u * u * u);
      }
      case LawKind::Extended: {
        double u = 1.0 + std::min(s, tau * n) / n;
        return 1.0 / (u * u * u);
      }
    }
    return 0.0;
  }

  // closed domain in the time coordinate; the spatial coordinate is free
  double domain_lo() const { return kind == LawKind::Unit ? -1e308 : 0.0; }
  double domain_hi() const {
    if (kind == LawKind::Unit) return 1e308;
    if (kind == LawKind::Transformed) return tau * n;
    return 1e308;
  }

  // integral of the intensity in s over [s0, s1] (per unit spatial width)
  double strip_mass(double s0, double s1) const {
    if (s1 <= s0) return 0.0;
    switch (kind) {
      case LawKind::Unit: return s1 - s0;
      case LawKind::Transformed: return mass_poly(s0, s1);
      case LawKind::Extended: {
        double top = tau * n;
        double m = 0.0;
        if (s0 < top) m += mass_poly(s0, std::min(s1, top));
        if (s1 > top) {
          double u = 1.0 + tau;
          m += (s1 - std::max(s0, top)) / (u * u * u);
        }
        return m;
      }
    }
    return 0.0;
  }

  // inverse of m -> strip_mass(s0, s): exact inverse-CDF position sampling
  double strip_inverse(double s0, double m) const {
    switch (kind) {
      case LawKind::Unit: return s0 + m;
      case LawKind::Transformed: return inverse_poly(s0, m);
      case LawKind::Extended: {
        double top = tau * n;
        if (s0 >= top) {
          double u = 1.0 + tau;
          return s0 + m * u * u * u;
        }
        double m_strip = mass_poly(s0, top);
        if (m <= m_strip) return inverse_poly(s0, m);
        double u = 1.0 + tau;
        return top + (m - m_strip) * u * u * u;
      }
    }
    return s0;
  }

 private:
  double mass_poly(double s0, double s1) const {
    double u0 = 1.0 + s0 / n, u1 = 1.0 + s1 / n;
    return 0.5 * n * (1.0 / (u0 * u0) - 1.0 / (u1 * u1));
  }
  double inverse_poly(double s0, double m) const {
    double u0 = 1.0 + s0 / n;
    double w = 1.0 / (u0 * u0) - 2.0 * m / n;
    return n * (1.0 / std::sqrt(w) - 1.0);
  }
};

// ---------------------------------------------------------------------------
// region queries

struct Rectangle {
  double x_lo, x_hi, s_lo, s_hi;
};

struct QuadrangleRegion {
  PlanarPoint apex;  // x, with O the opposite vertex
};

struct RadialTriangleRegion {
  PlanarPoint apex;
  double depth;  // l
};

// growing triangle in the strip: apex (y,s), half width slope*(t-s), depth v
struct PlanarTriangleRegion {
  PlanarPoint apex;
  double slope;
  double depth;
};

struct RegionQuery {
  enum class Shape { Rect, Quad, TriRadial, TriPlanar } shape;
  Rectangle rect{};
  QuadrangleRegion quad{};
  RadialTriangleRegion tri_radial{};
  PlanarTriangleRegion tri_planar{};

  static RegionQuery rectangle(double x_lo, double x_hi, double s_lo, double s_hi) {
    RegionQuery q;
    q.shape = Shape::Rect;
    q.rect = {x_lo, x_hi, s_lo, s_hi};
    return q;
  }
  static RegionQuery quadrangle(PlanarPoint apex) {
    RegionQuery q;
    q.shape = Shape::Quad;
    q.quad = {apex};
    return q;
  }
  static RegionQuery triangle_radial(PlanarPoint apex, double depth) {
    RegionQuery q;
    q.shape = Shape::TriRadial;
    q.tri_radial = {apex, depth};
    return q;
  }
  static RegionQuery triangle_planar(PlanarPoint apex, double slope, double depth) {
    RegionQuery q;
    q.shape = Shape::TriPlanar;
    q.tri_planar = {apex, slope, depth};
    return q;
  }
};

// ---------------------------------------------------------------------------
// the lazy field

// Deterministic lazily materialized Poisson field on a unit grid. The points
// of cell (i,j) are a pure function of (seed, law, i, j); the cell map is a
// cache and may be dropped at any time without changing any result.
class LazyPointField {
 public:
  LazyPointField(std::uint64_t seed, IntensityLaw law, double cell_size = 1.0,
                 std::size_t cache_limit = (1u << 21))
      : seed_(seed), law_(law), h_(cell_size), cache_limit_(cache_limit) {}

  std::uint64_t seed() const { return seed_; }
  const IntensityLaw& law() const { return law_; }
  double cell_size() const { return h_; }

  const std::vector<PlanarPoint>& cell(long i, long j) {
    std::uint64_t key = cell_key(i, j);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    if (cache_.size() >= cache_limit_) cache_.clear();
    return cache_.emplace(key, materialize(i, j)).first->second;
  }

  // all field points in the query region, sorted by (x2, x1)
  std::vector<PlanarPoint> points_in(const RegionQuery& q, const ModelParams* params = nullptr) {
    Rectangle bb = bounding_box(q, params);
    check_domain(bb);
    std::vector<PlanarPoint> out;
    long i0 = cell_floor(bb.x_lo), i1 = cell_floor(bb.x_hi);
    long j0 = cell_floor(bb.s_lo), j1 = cell_floor(bb.s_hi);
    for (long j = j0; j <= j1; ++j)
      for (long i = i0; i <= i1; ++i)
        for (const auto& p : cell(i, j))
          if (contains(q, p, params)) out.push_back(p);
    std::sort(out.begin(), out.end(), [](const PlanarPoint& a, const PlanarPoint& b) {
      return a.x2 != b.x2 ? a.x2 < b.x2 : a.x1 < b.x1;
    });
    return out;
  }

  // Minimal-time field point strictly above the apex in the growing triangle
  // {|y - apex.x1| <= slope (s - apex.x2), apex.x2 < s <= apex.x2 + v_max}.
  // Returns the point and its depth u = s - apex.x2.
  std::optional<std::pair<PlanarPoint, double>> first_hit_in_growing_triangle(
      const PlanarPoint& apex, double slope, double v_max) {
    if (!(slope > 0.0) || !(v_max > 0.0))
      throw std::invalid_argument("first_hit_in_growing_triangle: need positive slope and depth");
    double s_top = apex.x2 + v_max;
    long j0 = cell_floor(apex.x2), j1 = cell_floor(s_top);
    PlanarPoint best{};
    bool found = false;
    for (long j = j0; j <= j1; ++j) {
      if (found && best.x2 <= j * h_) break;  // strictly earlier rows already decided
      double row_hi = std::min((j + 1) * h_, s_top);
      double half = slope * (row_hi - apex.x2);
      if (half < 0.0) continue;
      long i0 = cell_floor(apex.x1 - half), i1 = cell_floor(apex.x1 + half);
      for (long i = i0; i <= i1; ++i) {
        for (const auto& p : cell(i, j)) {
          if (!(p.x2 > apex.x2) || p.x2 > s_top) continue;
          if (std::fabs(p.x1 - apex.x1) > slope * (p.x2 - apex.x2)) continue;
          if (!found || p.x2 < best.x2 ||
              (p.x2 == best.x2 && std::fabs(p.x1 - apex.x1) < std::fabs(best.x1 - apex.x1))) {
            best = p;
            found = true;
          }
        }
      }
    }
    if (!found) return std::nullopt;
    return std::make_pair(best, best.x2 - apex.x2);
  }

  // Farthest-from-origin field point of Q_apex (or T_{apex,l}), excluding the
  // apex itself. Scans unit-depth radial bands from the apex radius inward;
  // the first band containing a point holds the maximum.
  std::optional<PlanarPoint> farthest_from_origin_in(const RegionQuery& q,
                                                     const ModelParams& params,
                                                     const PlanarPoint& exclude) {
    if (q.shape != RegionQuery::Shape::Quad && q.shape != RegionQuery::Shape::TriRadial)
      throw std::invalid_argument("farthest_from_origin_in: quadrangle or radial triangle only");
    const PlanarPoint apex = q.shape == RegionQuery::Shape::Quad ? q.quad.apex : q.tri_radial.apex;
    double rx = norm(apex);
    double depth_max = q.shape == RegionQuery::Shape::Quad ? rx : std::min(q.tri_radial.depth, rx);

    Rectangle full = quad_bbox(apex, params);
    PlanarPoint best{};
    bool found = false;
    double best_r2 = -1.0;
    long bands = static_cast<long>(std::ceil(depth_max / h_));
    for (long k = 0; k <= bands; ++k) {
      double d_lo = k * h_;
      if (d_lo >= depth_max && k > 0) break;
      double d_hi = std::min((k + 1) * h_, depth_max);
      Rectangle bb = cone_band_bbox(apex, rx, params, d_hi);
      bb.x_lo = std::max(bb.x_lo, full.x_lo);
      bb.x_hi = std::min(bb.x_hi, full.x_hi);
      bb.s_lo = std::max(bb.s_lo, full.s_lo);
      bb.s_hi = std::min(bb.s_hi, full.s_hi);
      double r_hi = rx - d_lo, r_lo = rx - d_hi;
      long i0 = cell_floor(bb.x_lo), i1 = cell_floor(bb.x_hi);
      long j0 = cell_floor(bb.s_lo), j1 = cell_floor(bb.s_hi);
      for (long j = j0; j <= j1; ++j) {
        for (long i = i0; i <= i1; ++i) {
          for (const auto& p : cell(i, j)) {
            double r2 = norm2(p);
            if (r2 > r_hi * r_hi + kEpsGeom || r2 < r_lo * r_lo - kEpsGeom) continue;
            if (p == exclude || p == apex) continue;
            if (!contains(q, p, &params)) continue;
            if (!found || r2 > best_r2 ||
                (r2 == best_r2 && (p.x1 > best.x1 || (p.x1 == best.x1 && p.x2 > best.x2)))) {
              best = p;
              found = true;
              best_r2 = r2;
            }
          }
        }
      }
      if (found) break;
    }
    if (!found) return std::nullopt;
    return best;
  }

  // CSV export with header x1,x2 in full double precision
  static std::string points_to_csv(const std::vector<PlanarPoint>& pts) {
    std::string out = "x1,x2\n";
    for (const auto& p : pts) {
      out += format_double17(p.x1);
      out += ",";
      out += format_double17(p.x2);
      out += "\n";
    }
    return out;
  }

  bool contains(const RegionQuery& q, const PlanarPoint& p, const ModelParams* params) const {
    switch (q.shape) {
      case RegionQuery::Shape::Rect:
        return p.x1 >= q.rect.x_lo && p.x1 <= q.rect.x_hi && p.x2 >= q.rect.s_lo &&
               p.x2 <= q.rect.s_hi;
      case RegionQuery::Shape::Quad:
        return quadrangle_contains(q.quad.apex, *params, p);
      case RegionQuery::Shape::TriRadial:
        return triangle_contains(q.tri_radial.apex, q.tri_radial.depth, *params, p);
      case RegionQuery::Shape::TriPlanar: {
        const auto& t = q.tri_planar;
        double u = p.x2 - t.apex.x2;
        return u > 0.0 && u <= t.depth && std::fabs(p.x1 - t.apex.x1) <= t.slope * u;
      }
    }
    return false;
  }

 private:
  std::uint64_t seed_;
  IntensityLaw law_;
  double h_;
  std::size_t cache_limit_;
  std::unordered_map<std::uint64_t, std::vector<PlanarPoint>> cache_;

  long cell_floor(double v) const { return static_cast<long>(std::floor(v / h_)); }

  static std::uint64_t cell_key(long i, long j) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)) << 32) |
           static_cast<std::uint64_t>(static_cast<std::uint32_t>(j));
  }

  std::vector<PlanarPoint> materialize(long i, long j) const {
    double s_lo = std::max(j * h_, law_.domain_lo());
    double s_hi = std::min((j + 1) * h_, law_.domain_hi());
    std::vector<PlanarPoint> pts;
    if (s_hi <= s_lo) return pts;
    StreamRng rng(seed_, kTagCell, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j));
    double mass = h_ * law_.strip_mass(s_lo, s_hi);
    int count = rng.poisson(mass);
    pts.reserve(count);
    for (int k = 0; k < count; ++k) {
      double x1 = (i + rng.next_double()) * h_;
      double x2 = law_.strip_inverse(s_lo, rng.next_double() * (mass / h_));
      pts.push_back({x1, x2});
    }
    std::sort(pts.begin(), pts.end(), [](const PlanarPoint& a, const PlanarPoint& b) {
      return a.x2 != b.x2 ? a.x2 < b.x2 : a.x1 < b.x1;
    });
    return pts;
  }

  void check_domain(const Rectangle& bb) const {
    if (bb.s_lo < law_.domain_lo() - 1e-9 || bb.s_hi > law_.domain_hi() + 1e-9)
      throw std::domain_error("points_in: region outside the law's domain");
  }

  Rectangle quad_bbox(const PlanarPoint& apex, const ModelParams& params) const {
    PlanarPoint y, z;
    quadrangle_side_vertices(apex, params, y, z);
    Rectangle r;
    r.x_lo = std::min(std::min(0.0, apex.x1), std::min(y.x1, z.x1));
    r.x_hi = std::max(std::max(0.0, apex.x1), std::max(y.x1, z.x1));
    r.s_lo = std::min(std::min(0.0, apex.x2), std::min(y.x2, z.x2));
    r.s_hi = std::max(std::max(0.0, apex.x2), std::max(y.x2, z.x2));
    double pad = 1e-9 * (1.0 + norm(apex));
    r.x_lo -= pad; r.x_hi += pad; r.s_lo -= pad; r.s_hi += pad;
    return r;
  }

  // bbox of the cone at the apex truncated at axial depth d + corner overshoot
  Rectangle cone_band_bbox(const PlanarPoint& apex, double rx, const ModelParams& params,
                           double d) const {
    double a = triangle_corner_overshoot(rx, std::min(d, rx), params.c);
    double t = (a >= 0.0) ? std::min(d + a, rx) : rx;
    double ux = -apex.x1 / rx, uy = -apex.x2 / rx;
    double cx1 = apex.x1 + t * (ux - params.c * (-uy));
    double cy1 = apex.x2 + t * (uy - params.c * ux);
    double cx2 = apex.x1 + t * (ux + params.c * (-uy));
    double cy2 = apex.x2 + t * (uy + params.c * ux);
    Rectangle r;
    r.x_lo = std::min(apex.x1, std::min(cx1, cx2));
    r.x_hi = std::max(apex.x1, std::max(cx1, cx2));
    r.s_lo = std::min(apex.x2, std::min(cy1, cy2));
    r.s_hi = std::max(apex.x2, std::max(cy1, cy2));
    double pad = 1e-9 * (1.0 + rx);
    r.x_lo -= pad; r.x_hi += pad; r.s_lo -= pad; r.s_hi += pad;
    return r;
  }

  Rectangle bounding_box(const RegionQuery& q, const ModelParams* params) const {
    switch (q.shape) {
      case RegionQuery::Shape::Rect: return q.rect;
      case RegionQuery::Shape::Quad: return quad_bbox(q.quad.apex, *params);
      case RegionQuery::Shape::TriRadial: {
        double rx = norm(q.tri_radial.apex);
        Rectangle r = cone_band_bbox(q.tri_radial.apex, rx, *params,
                                     std::min(q.tri_radial.depth, rx));
        Rectangle f = quad_bbox(q.tri_radial.apex, *params);
        r.x_lo = std::max(r.x_lo, f.x_lo); r.x_hi = std::min(r.x_hi, f.x_hi);
        r.s_lo = std::max(r.s_lo, f.s_lo); r.s_hi = std::min(r.s_hi, f.s_hi);
        return r;
      }
      case RegionQuery::Shape::TriPlanar: {
        const auto& t = q.tri_planar;
        double half = t.slope * t.depth;
        return {t.apex.x1 - half, t.apex.x1 + half, t.apex.x2, t.apex.x2 + t.depth};
      }
    }
    return {0, 0, 0, 0};
  }
};

// ---------------------------------------------------------------------------
// empirical validation of the transformed intensity (Lemma-style chi-square)

inline StatsReport chi_square_intensity_test(LazyPointField& field, const Rectangle& strip,
                                             int bins, double p_threshold = 0.01) {
  const IntensityLaw& law = field.law();
  std::vector<double> counts(bins, 0.0), expected(bins, 0.0);
  double width = strip.x_hi - strip.x_lo;
  double ds = (strip.s_hi - strip.s_lo) / bins;
  for (int b = 0; b < bins; ++b) {
    double lo = strip.s_lo + b * ds, hi = lo + ds;
    expected[b] = width * law.strip_mass(lo, hi);
    if (expected[b] < 20.0)
      throw std::invalid_argument("chi_square_intensity_test: insufficient expected count per bin");
  }
  auto pts = field.points_in(RegionQuery::rectangle(strip.x_lo, strip.x_hi, strip.s_lo, strip.s_hi));
  for (const auto& p : pts) {
    int b = std::min(bins - 1, static_cast<int>((p.x2 - strip.s_lo) / ds));
    counts[b] += 1.0;
  }
  StatsReport r = chi_square(counts, expected, p_threshold);
  r.name = "intensity_chi_square";
  r.estimate = static_cast<double>(pts.size());
  r.meta["bins"] = bins;
  r.meta["points"] = pts.size();
  return r;
}

}  // namespace rpw
