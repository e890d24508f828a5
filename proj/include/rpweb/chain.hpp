#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "rpweb/point_field.hpp"
#include "rpweb/radial_web.hpp"

namespace rpw {

struct ChainState {
  double y = 0.0;
  double s = 0.0;
  long step_index = 0;
};

struct IncrementSample {
  double t = 0.0;
  double x = 0.0;
  bool truncated = false;
};

// Waiting time in the strip regime. The tail is
//   P(T > v) = exp{ -c_n v^2 / [(1+s/n)^2 (1+(s+v)/n)^2] },  v < L_n(s),
// with an atom at L_n(s). Setting the exponent equal to a standard
// exponential draw E is linear in v after taking square roots:
//   sqrt(c_n) v / [(1+s/n)(1+(s+v)/n)] = sqrt(E)
//   v = k (1+s/n) / (1 - k/n),  k = sqrt(E/c_n) (1+s/n).
inline IncrementSample sample_T(double s, const ModelParams& params, StreamRng& rng) {
  if (s < 0.0) throw std::domain_error("sample_T: negative time");
  double cn = params.c_n(s);
  double u = 1.0 + s / params.n;
  double big_l = params.big_l(s);
  double e = rng.exponential();
  double k = std::sqrt(e / cn) * u;
  double denom = 1.0 - k / params.n;
  IncrementSample out;
  if (denom <= 0.0) {
    out.t = big_l;
    out.truncated = true;
    return out;
  }
  double v = k * u / denom;
  if (v >= big_l) {
    out.t = big_l;
    out.truncated = true;
    return out;
  }
  out.t = v;
  return out;
}

// Waiting time beyond the strip top: tail exp{-a_n t^2} truncated at
// d'_n(tau n) log n.
inline IncrementSample sample_T_extended(double s, const ModelParams& params, StreamRng& rng) {
  if (s < params.tau * params.n)
    throw std::domain_error("sample_T_extended: below the strip top");
  double cap = params.big_l(params.tau * params.n);
  double e = rng.exponential();
  double v = std::sqrt(e / params.a_n());
  IncrementSample out;
  if (v >= cap) {
    out.t = cap;
    out.truncated = true;
    return out;
  }
  out.t = v;
  return out;
}

// One chain step: S' = S + T, Y' = Y + X with X = slope(S) T U on untruncated
// steps and X = 0 on truncated ones (U uniform on [-1,1], drawn after T).
inline ChainState step(const ChainState& state, const ModelParams& params, StreamRng& rng,
                       IncrementSample* sample_out = nullptr) {
  bool strip = state.s < params.tau * params.n;
  IncrementSample inc = strip ? sample_T(state.s, params, rng)
                              : sample_T_extended(state.s, params, rng);
  if (!inc.truncated) {
    double slope = params.triangle_slope(state.s);
    inc.x = slope * inc.t * rng.uniform(-1.0, 1.0);
  }
  if (sample_out) *sample_out = inc;
  return {state.y + inc.x, state.s + inc.t, state.step_index + 1};
}

// Chain path from (y, s) until the strip time first exceeds the horizon; the
// final vertex is the crossing point of the last edge with the horizon line.
inline PathPolyline run_chain(PlanarPoint start, double horizon, const ModelParams& params,
                              StreamRng& rng) {
  PathPolyline path;
  path.vertices.push_back(start);
  ChainState st{start.x1, start.x2, 0};
  if (start.x2 >= horizon) {
    path.sync_times();
    return path;
  }
  for (long i = 0; i < kStepGuard; ++i) {
    ChainState nx = step(st, params, rng);
    if (nx.s > horizon) {
      double f = (horizon - st.s) / (nx.s - st.s);
      path.vertices.push_back({st.y + f * (nx.y - st.y), horizon});
      path.sync_times();
      return path;
    }
    path.vertices.push_back({nx.y, nx.s});
    st = nx;
  }
  throw NonterminationFault();
}

// ---------------------------------------------------------------------------
// geometric succession over a field (the object the chain is equal to in law)

struct StripTransition {
  PlanarPoint point;
  bool is_field_point = false;  // truncation steps move vertically, off-field
};

// Next transition of the strip path at the given apex: the minimal-time field
// point of the growing triangle, or the vertical truncation step when empty.
inline StripTransition strip_next_transition(const PlanarPoint& apex, LazyPointField& field,
                                             const ModelParams& params) {
  double slope = params.triangle_slope(apex.x2);
  double depth = params.triangle_depth(apex.x2);
  auto hit = field.first_hit_in_growing_triangle(apex, slope, depth);
  if (hit) return {hit->first, true};
  return {{apex.x1, apex.x2 + depth}, false};
}

// (T, X) of the first move from the apex in the geometric construction.
inline IncrementSample geometric_first_increment(const PlanarPoint& apex, LazyPointField& field,
                                                 const ModelParams& params) {
  StripTransition tr = strip_next_transition(apex, field, params);
  IncrementSample out;
  out.t = tr.point.x2 - apex.x2;
  out.x = tr.is_field_point ? tr.point.x1 - apex.x1 : 0.0;
  out.truncated = !tr.is_field_point;
  return out;
}

// ---------------------------------------------------------------------------
// two paths in one realization

struct PairResult {
  PathPolyline path0;
  PathPolyline path1;
  double nu = std::numeric_limits<double>::infinity();  // coalescence time
  bool coalesced = false;
  bool order_fault = false;
};

// Both paths read the same extended field, so they see one realization and
// coalesce exactly when they accept the same field point. The path whose next
// transition is earlier moves first, which orders the merged transition
// stream in time. Spatial order must persist until coalescence; inversions
// are recorded as faults.
inline PairResult run_two_paths_shared_field(double m, double t0, double horizon,
                                             const ModelParams& params, LazyPointField& field) {
  PairResult res;
  res.path0.vertices.push_back({0.0, t0});
  res.path1.vertices.push_back({m, t0});
  if (m == 0.0) {
    res.nu = 0.0;
    res.coalesced = true;
    res.path0.sync_times();
    res.path1.sync_times();
    return res;
  }
  if (m < 0.0) throw std::invalid_argument("run_two_paths_shared_field: m must be nonnegative");

  struct Side {
    PlanarPoint apex;
    StripTransition next;
    bool next_ready = false;
    std::unordered_set<std::uint64_t> visited;
    PathPolyline* path;
  };
  Side a{{0.0, t0}, {}, false, {}, &res.path0};
  Side b{{m, t0}, {}, false, {}, &res.path1};

  auto prepare = [&](Side& s) {
    if (!s.next_ready) {
      s.next = strip_next_transition(s.apex, field, params);
      s.next_ready = true;
    }
  };

  for (long guard = 0; guard < kStepGuard; ++guard) {
    prepare(a);
    prepare(b);
    if (a.next.point.x2 > horizon && b.next.point.x2 > horizon) break;
    Side& mover = a.next.point.x2 <= b.next.point.x2 ? a : b;
    Side& other = (&mover == &a) ? b : a;
    mover.apex = mover.next.point;
    mover.path->vertices.push_back(mover.apex);
    mover.next_ready = false;
    if (mover.next.is_field_point) {
      std::uint64_t bits = point_bits(mover.apex);
      if (other.visited.count(bits)) {
        res.nu = mover.apex.x2 - t0;
        res.coalesced = true;
        break;
      }
      mover.visited.insert(bits);
    }
    // order check at the mover's new apex time
    double pos_other = other.apex.x1;
    double pos_mover = mover.apex.x1;
    double diff = (&mover == &a) ? pos_other - pos_mover : pos_mover - pos_other;
    if (diff < 0.0) {
      res.order_fault = true;
      break;
    }
  }
  res.path0.sync_times();
  res.path1.sync_times();
  return res;
}

}  // namespace rpw
