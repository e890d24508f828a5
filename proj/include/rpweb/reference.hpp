#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "rpweb/path.hpp"
#include "rpweb/rng.hpp"
#include "rpweb/stats.hpp"
#include "rpweb/transform.hpp"

namespace rpw {

struct ReferenceEnsemble {
  std::vector<PathPolyline> paths;
  double sigma2 = 0.0;
  double dt = 0.0;
  double horizon = 0.0;
  std::uint64_t seed = 0;

  WebEnsemble as_web() const {
    WebEnsemble w;
    w.paths = paths;
    w.provenance = Provenance::reference;
    w.seed = seed;
    return w;
  }
};

// Coalescing Brownian motions on a common grid: exact Gaussian increments per
// step, coalescence at the first grid time the order of two paths inverts or
// coincides, with the crossing time interpolated linearly; from there the
// pair is identical (absorbed into the left path).
inline ReferenceEnsemble sample_coalescing_bm(std::vector<PlanarPoint> starts, double sigma2,
                                              double dt, double horizon, StreamRng& rng) {
  if (!(dt > 0.0)) throw std::invalid_argument("sample_coalescing_bm: dt must be positive");
  std::sort(starts.begin(), starts.end(), [](const PlanarPoint& a, const PlanarPoint& b) {
    return a.x2 != b.x2 ? a.x2 < b.x2 : a.x1 < b.x1;
  });
  ReferenceEnsemble ens;
  ens.sigma2 = sigma2;
  ens.dt = dt;
  ens.horizon = horizon;

  std::size_t n = starts.size();
  std::vector<PathPolyline> paths(n);
  std::vector<double> pos(n), born(n);
  std::vector<long> owner(n);  // index of the path this one has coalesced into
  for (std::size_t i = 0; i < n; ++i) {
    if (starts[i].x2 < 0.0 || starts[i].x2 > horizon)
      throw std::invalid_argument("sample_coalescing_bm: start time outside [0, horizon]");
    paths[i].vertices.push_back(starts[i]);
    pos[i] = starts[i].x1;
    born[i] = starts[i].x2;
    owner[i] = static_cast<long>(i);
  }
  auto root = [&](long i) {
    while (owner[i] != i) i = owner[i];
    return i;
  };
  // coincident starts are one path from the outset
  for (std::size_t i = 1; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (starts[i].x1 == starts[j].x1 && starts[i].x2 == starts[j].x2 &&
          owner[i] == static_cast<long>(i))
        owner[i] = root(static_cast<long>(j));

  double sd = std::sqrt(sigma2 * dt);
  long steps = static_cast<long>(std::ceil(horizon / dt));
  for (long k = 1; k <= steps; ++k) {
    double t = std::min(k * dt, horizon);
    double t_prev = (k - 1) * dt;
    double h = t - t_prev;
    double sdh = (h == dt) ? sd : std::sqrt(sigma2 * h);
    // advance the live representatives
    for (std::size_t i = 0; i < n; ++i) {
      if (root(static_cast<long>(i)) != static_cast<long>(i)) continue;
      if (born[i] > t_prev + 1e-15) continue;  // not yet started
      pos[i] += sdh * rng.normal();
    }
    // wake paths whose start falls in this step
    for (std::size_t i = 0; i < n; ++i)
      if (born[i] > t_prev + 1e-15 && born[i] <= t + 1e-15) pos[i] = starts[i].x1;
    // coalesce on order inversion, scanning in spatial order at t_prev
    std::vector<long> live;
    for (std::size_t i = 0; i < n; ++i)
      if (root(static_cast<long>(i)) == static_cast<long>(i) && born[i] <= t + 1e-15)
        live.push_back(static_cast<long>(i));
    std::sort(live.begin(), live.end(), [&](long i, long j) {
      double vi = paths[i].vertices.back().x1, vj = paths[j].vertices.back().x1;
      return vi != vj ? vi < vj : i < j;
    });
    for (std::size_t q = 1; q < live.size(); ++q) {
      long i = live[q - 1], j = live[q];
      if (root(i) != i) continue;
      if (pos[j] <= pos[i]) {
        // interpolated crossing time, then identical to the left path
        double pi0 = paths[i].vertices.back().x1, pj0 = paths[j].vertices.back().x1;
        double gap0 = pj0 - pi0, gap1 = pos[j] - pos[i];
        double f = gap0 - gap1 != 0.0 ? gap0 / (gap0 - gap1) : 0.0;
        double tc = t_prev + f * h;
        double vc = pi0 + f * (pos[i] - pi0);
        if (paths[j].vertices.back().x2 < tc && tc < t) paths[j].vertices.push_back({vc, tc});
        owner[j] = i;
        pos[j] = pos[i];
      }
    }
    // record vertices
    for (std::size_t i = 0; i < n; ++i) {
      long r = root(static_cast<long>(i));
      if (born[i] <= t + 1e-15) paths[i].vertices.push_back({pos[r], t});
    }
  }
  for (auto& p : paths) p.sync_times();
  ens.paths = std::move(paths);
  return ens;
}

// Image of a reference ensemble under psi': coalescing Brownian bridges that
// end at the origin, living in the time window [-1, -alpha].
inline ReferenceEnsemble bridge_web(const ReferenceEnsemble& ens, double tau) {
  ReferenceEnsemble out = ens;
  for (auto& p : out.paths) p = psi_path(p, tau);
  return out;
}

// ---------------------------------------------------------------------------
// analytic oracles

// P(two coalescing BMs started eps apart have not met by time t); the
// difference process is a BM with variance rate 2 sigma^2.
inline double oracle_non_coalescence(double eps, double sigma2, double t) {
  if (eps <= 0.0) return 0.0;
  return 2.0 * normal_cdf(eps / std::sqrt(2.0 * sigma2 * t)) - 1.0;
}

// density of distinct coalescing-BM points per unit length a time t after a
// slice, for variance rate sigma^2
inline double oracle_point_density(double t, double sigma2) {
  return 1.0 / std::sqrt(kPi * sigma2 * t);
}

// law of large numbers limit curve c_hat r / (1 - c_hat r)
inline double oracle_lln_curve(double r, const ModelParams& params) {
  return params.lln_curve(r);
}

}  // namespace rpw
