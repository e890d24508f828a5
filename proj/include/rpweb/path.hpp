#pragma once

#include <algorithm>
#include <cstdio>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rpweb/geometry.hpp"

namespace rpw {

// Universal path representation. For radial paths the vertices run from the
// start point toward the origin; after the strip transforms the second
// coordinate is time and strictly increases along the vertex list.
struct PathPolyline {
  std::vector<PlanarPoint> vertices;
  double t_start = 0.0;
  double t_end = 0.0;

  PathPolyline() = default;
  explicit PathPolyline(std::vector<PlanarPoint> v) : vertices(std::move(v)) {
    sync_times();
  }

  void sync_times() {
    if (!vertices.empty()) {
      t_start = vertices.front().x2;
      t_end = vertices.back().x2;
    }
  }

  bool time_monotone() const {
    for (std::size_t i = 1; i < vertices.size(); ++i)
      if (!(vertices[i].x2 > vertices[i - 1].x2)) return false;
    return true;
  }

  // Linear interpolation at time t; requires a time-monotone path.
  double value_at(double t) const {
    if (vertices.empty()) throw std::logic_error("value_at: empty path");
    if (t <= vertices.front().x2) return vertices.front().x1;
    if (t >= vertices.back().x2) return vertices.back().x1;
    auto it = std::lower_bound(vertices.begin(), vertices.end(), t,
                               [](const PlanarPoint& p, double tt) { return p.x2 < tt; });
    const PlanarPoint& hi = *it;
    const PlanarPoint& lo = *(it - 1);
    double f = (t - lo.x2) / (hi.x2 - lo.x2);
    return lo.x1 + f * (hi.x1 - lo.x1);
  }

  // Constant continuation outside [t_start, t_end] (the starred extension).
  double value_star(double t) const { return value_at(t); }
};

enum class Provenance { gamma, gamma_prime, gamma_double_prime, hat_gamma, chain, reference };

inline const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::gamma: return "gamma";
    case Provenance::gamma_prime: return "gamma_prime";
    case Provenance::gamma_double_prime: return "gamma_double_prime";
    case Provenance::hat_gamma: return "hat_gamma";
    case Provenance::chain: return "chain";
    case Provenance::reference: return "reference";
  }
  return "unknown";
}

struct WebEnsemble {
  std::vector<PathPolyline> paths;
  Provenance provenance = Provenance::gamma;
  std::uint64_t seed = 0;
  // diagnostics accumulated during construction
  long excursion_events = 0;  // queries outside the materialization margin
  long fallback_events = 0;   // empty-triangle fallback steps
};

inline std::string format_double17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// One path per line: {"start":[..],"vertices":[[..],..],"provenance":".."}
inline std::string path_to_jsonl(const PathPolyline& p, Provenance prov) {
  std::string out = "{\"start\":[";
  out += format_double17(p.vertices.front().x1);
  out += ",";
  out += format_double17(p.vertices.front().x2);
  out += "],\"vertices\":[";
  for (std::size_t i = 0; i < p.vertices.size(); ++i) {
    if (i) out += ",";
    out += "[";
    out += format_double17(p.vertices[i].x1);
    out += ",";
    out += format_double17(p.vertices[i].x2);
    out += "]";
  }
  out += "],\"provenance\":\"";
  out += provenance_name(prov);
  out += "\"}";
  return out;
}

}  // namespace rpw
