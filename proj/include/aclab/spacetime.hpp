#pragma once

// Geometry kernel for the 1+1D two-sheeted model: events, conformally flat
// metrics, causal order, proper time along polylines, and the causal-lattice
// longest-path machinery used by the weighted proper-time optimizer.
//
// Natural units everywhere: hbar = c = 1.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace aclab {

struct Event {
  double t = 0.0;
  double x = 0.0;
};

inline bool is_finite(const Event& e) {
  return std::isfinite(e.t) && std::isfinite(e.x);
}

inline bool operator==(const Event& a, const Event& b) {
  return a.t == b.t && a.x == b.x;
}

// Scalar field on the (t, x) chart.
using ScalarFn = std::function<double(double, double)>;

// A 1+1D metric, flat or conformally flat g = Omega^2 * diag(+1, -1).
// Every globally hyperbolic 1+1D metric is locally of this form, so this
// family carries the whole curved story of the model.
class MetricModel {
 public:
  enum class Kind { Minkowski1p1, ConformallyFlat1p1 };

  static MetricModel minkowski() { return MetricModel(Kind::Minkowski1p1, {}); }

  static MetricModel conformally_flat(ScalarFn omega) {
    if (!omega) throw std::invalid_argument("MetricModel: conformal factor callable required");
    return MetricModel(Kind::ConformallyFlat1p1, std::move(omega));
  }

  Kind kind() const { return kind_; }
  bool is_flat() const { return kind_ == Kind::Minkowski1p1; }

  // Omega(t, x); identically 1 for Minkowski. Nonpositive or non-finite
  // factors are rejected at evaluation time.
  double conformal_factor(double t, double x) const {
    if (kind_ == Kind::Minkowski1p1) return 1.0;
    const double w = omega_(t, x);
    if (!(w > 0.0) || !std::isfinite(w))
      throw std::domain_error("MetricModel: conformal factor must be positive and finite");
    return w;
  }

 private:
  MetricModel(Kind k, ScalarFn omega) : kind_(k), omega_(std::move(omega)) {}

  Kind kind_;
  ScalarFn omega_;
};

// Causal order of events. Light cones of conformally flat 1+1D metrics
// coincide with the flat ones, so the test is metric independent.
inline bool is_future_causal(const Event& p, const Event& q,
                             const MetricModel& = MetricModel::minkowski()) {
  if (!is_finite(p) || !is_finite(q)) return false;
  return q.t - p.t >= std::abs(q.x - p.x);
}

// Time-ordered polyline whose segments stay inside the closed light cone.
struct CausalCurve {
  std::vector<Event> vertices;

  bool valid() const {
    for (const auto& v : vertices)
      if (!is_finite(v)) return false;
    for (std::size_t i = 1; i < vertices.size(); ++i) {
      if (!(vertices[i].t > vertices[i - 1].t)) return false;
      if (!is_future_causal(vertices[i - 1], vertices[i])) return false;
    }
    return true;
  }

  void validate() const {
    if (!valid())
      throw std::invalid_argument(
          "CausalCurve: vertices must be strictly time-ordered and pairwise causal");
  }
};

namespace detail {

// Lorentzian length of one segment with Omega (and an optional extra weight)
// evaluated at the midpoint: second-order quadrature on polylines.
inline double segment_value(const Event& a, const Event& b, const MetricModel& m,
                            const ScalarFn* weight) {
  const double dt = b.t - a.t;
  const double dx = b.x - a.x;
  const double s2 = dt * dt - dx * dx;
  if (s2 <= 0.0) return 0.0;
  const double tm = 0.5 * (a.t + b.t);
  const double xm = 0.5 * (a.x + b.x);
  double v = std::sqrt(s2) * m.conformal_factor(tm, xm);
  if (weight) v *= (*weight)(tm, xm);
  return v;
}

}  // namespace detail

// Integral of weight * Omega * sqrt(dt^2 - dx^2) along the polyline.
inline double weighted_functional(const CausalCurve& c, const MetricModel& m,
                                  const ScalarFn& weight) {
  if (!weight) throw std::invalid_argument("weighted_functional: weight callable required");
  c.validate();
  double s = 0.0;
  for (std::size_t i = 1; i < c.vertices.size(); ++i)
    s += detail::segment_value(c.vertices[i - 1], c.vertices[i], m, &weight);
  return s;
}

// Proper time along a causal curve; additive under concatenation.
inline double proper_time(const CausalCurve& c, const MetricModel& m) {
  c.validate();
  double s = 0.0;
  for (std::size_t i = 1; i < c.vertices.size(); ++i)
    s += detail::segment_value(c.vertices[i - 1], c.vertices[i], m, nullptr);
  return s;
}

struct Resolution {
  int nt = 2;
  int nx = 2;
};

struct Region {
  double t0 = 0.0;
  double t1 = 1.0;
  double x0 = 0.0;
  double x1 = 1.0;
};

// Regular grid over a rectangular region with directed edges into the next
// time layer, limited to the discrete light cone. Requires dt <= dx so the
// single-layer stencil exhausts the discrete cone; lateral (null) edges
// exist only at dt = dx.
class CausalLattice {
 public:
  struct Edge {
    int from = 0;
    int to = 0;
  };

  CausalLattice(const Region& region, const Resolution& res)
      : t0_(region.t0), x0_(region.x0), nt_(res.nt), nx_(res.nx) {
    if (nt_ < 2 || nx_ < 2) throw std::invalid_argument("CausalLattice: need nt, nx >= 2");
    if (!(region.t1 > region.t0) || !(region.x1 > region.x0) ||
        !std::isfinite(region.t0) || !std::isfinite(region.t1) ||
        !std::isfinite(region.x0) || !std::isfinite(region.x1))
      throw std::invalid_argument("CausalLattice: degenerate region");
    dt_ = (region.t1 - region.t0) / (nt_ - 1);
    dx_ = (region.x1 - region.x0) / (nx_ - 1);
    if (dt_ > dx_ * (1.0 + 1e-12))
      throw std::invalid_argument("CausalLattice: requires dt <= dx");
    reach_ = (dx_ <= dt_ * (1.0 + 1e-12)) ? 1 : 0;
  }

  int nt() const { return nt_; }
  int nx() const { return nx_; }
  int node_count() const { return nt_ * nx_; }
  double dt() const { return dt_; }
  double dx() const { return dx_; }

  // Lateral stencil width in x-steps (0 or 1).
  int reach() const { return reach_; }

  int index(int layer, int ix) const { return layer * nx_ + ix; }
  int layer_of(int index) const { return index / nx_; }
  int ix_of(int index) const { return index % nx_; }

  Event node(int layer, int ix) const {
    return Event{t0_ + layer * dt_, x0_ + ix * dx_};
  }

  int out_degree(int layer, int ix) const {
    if (layer + 1 >= nt_) return 0;
    const int lo = std::max(0, ix - reach_);
    const int hi = std::min(nx_ - 1, ix + reach_);
    return hi - lo + 1;
  }

  // Materialized stencil, layer by layer. Acyclic by construction: every
  // edge increases the time layer.
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(static_cast<std::size_t>(nt_ - 1) * nx_ * (2 * reach_ + 1));
    for (int k = 0; k + 1 < nt_; ++k)
      for (int ix = 0; ix < nx_; ++ix) {
        const int lo = std::max(0, ix - reach_);
        const int hi = std::min(nx_ - 1, ix + reach_);
        for (int jx = lo; jx <= hi; ++jx) out.push_back({index(k, ix), index(k + 1, jx)});
      }
    return out;
  }

 private:
  double t0_, x0_, dt_ = 0.0, dx_ = 0.0;
  int nt_, nx_;
  int reach_ = 0;
};

inline CausalLattice causal_lattice(const Region& region, const Resolution& res) {
  return CausalLattice(region, res);
}

namespace detail {

struct SearchOptions {
  int max_sweeps = 64;
  double rel_tol = 1e-12;
  int scan_points = 9;
  int narrow_iters = 22;
};

struct SearchResult {
  double value = 0.0;     // functional of `curve`, evaluated from scratch
  double dp_value = 0.0;  // exact longest-path value on the lattice
  CausalCurve curve;
  double last_gain = 0.0;  // improvement of the final refinement sweep
  int sweeps = 0;
  bool snapped = false;  // endpoint was off-lattice and got adjusted
};

// Shared lattice frame for the DP optimizer and its brute-force oracle: a
// square lattice dt = dx anchored at p spanning the causal diamond, with the
// endpoint snapped to the nearest node of the top layer. Degenerate pairs
// (equal, acausal or nearly null) are settled without a lattice.
struct DiamondFrame {
  bool trivial = false;
  double trivial_value = 0.0;
  CausalCurve trivial_curve;
  int nt = 0, span = 0, jp = 0, jq = 0;
  double step = 0.0;
  bool snapped = false;
  std::vector<double> layer_t;                 // exact endpoint times at both ends
  std::unique_ptr<CausalLattice> lat;          // null when trivial
};

inline DiamondFrame make_diamond_frame(const Event& p, const Event& q, const MetricModel& m,
                                       const ScalarFn& weight, int nt_req) {
  if (!weight) throw std::invalid_argument("weighted path search: weight callable required");
  DiamondFrame f;
  if (!is_future_causal(p, q)) {
    f.trivial = true;
    return f;
  }
  f.nt = std::max(nt_req, 2);
  const double T = q.t - p.t;
  const double X = q.x - p.x;
  if (T == 0.0) {  // p == q
    f.trivial = true;
    f.trivial_curve.vertices = {p};
    return f;
  }
  f.span = f.nt - 1;
  f.step = T / f.span;
  if (std::abs(X) >= f.span * f.step * (1.0 - 1e-8)) {
    // Nearly null: every causal curve hugs the light ray, the straight chord
    // is optimal and its single-segment quadrature is the value.
    f.trivial = true;
    f.trivial_curve.vertices = {p, q};
    f.trivial_value = weighted_functional(f.trivial_curve, m, weight);
    return f;
  }
  const Region box{p.t, q.t, p.x - f.span * f.step, p.x + f.span * f.step};
  f.lat = std::make_unique<CausalLattice>(box, Resolution{f.nt, 2 * f.span + 1});
  f.jp = f.span;
  const int jq_raw =
      static_cast<int>(std::llround((q.x - (p.x - f.span * f.step)) / f.lat->dx()));
  f.jq = std::clamp(jq_raw, 0, f.lat->nx() - 1);
  f.snapped = std::abs(f.lat->node(f.span, f.jq).x - q.x) > 1e-13 * (std::abs(q.x) + 1.0);
  f.layer_t.resize(static_cast<std::size_t>(f.nt));
  for (int k = 0; k < f.nt; ++k) f.layer_t[k] = f.lat->node(k, 0).t;
  f.layer_t[0] = p.t;
  f.layer_t[f.span] = q.t;
  return f;
}

// Supremum of the weighted proper time over causal curves p -> q.
//
// Stage 1: longest-path DP over a causal lattice with dt = dx anchored at p
// and spanning the causal diamond; only vertical edges carry weight, the
// lateral edges are null. Stage 2: deterministic polyline refinement (chord
// shortcuts over dyadic spans, then per-vertex coordinate ascent within the
// causal constraints); every accepted move strictly increases the value.
inline SearchResult supremum_search(const Event& p, const Event& q, const MetricModel& m,
                                    const ScalarFn& weight, int nt_req,
                                    const SearchOptions& opt = {}) {
  SearchResult out;
  DiamondFrame f = make_diamond_frame(p, q, m, weight, nt_req);
  if (f.trivial) {
    out.curve = f.trivial_curve;
    out.value = out.dp_value = f.trivial_value;
    return out;
  }
  const CausalLattice& lat = *f.lat;
  const int nt = f.nt, span = f.span, jp = f.jp, jq = f.jq;
  const double step = f.step;
  out.snapped = f.snapped;

  // DP over the lattice; prune nodes that cannot reach the target column.
  const double kNeg = -std::numeric_limits<double>::infinity();
  std::vector<double> best(static_cast<std::size_t>(lat.node_count()), kNeg);
  std::vector<std::int8_t> parent(static_cast<std::size_t>(lat.node_count()), 0);
  best[lat.index(0, jp)] = 0.0;
  for (int k = 0; k + 1 < nt; ++k) {
    const int remaining = span - (k + 1);
    for (int ix = std::max(0, jp - k); ix <= std::min(lat.nx() - 1, jp + k); ++ix) {
      const double b = best[lat.index(k, ix)];
      if (b == kNeg) continue;
      const double wv = segment_value(lat.node(k, ix), lat.node(k + 1, ix), m, &weight);
      for (int dj = -1; dj <= 1; ++dj) {
        const int jx = ix + dj;
        if (jx < 0 || jx >= lat.nx()) continue;
        if (std::abs(jx - jq) > remaining) continue;
        const double cand = b + (dj == 0 ? wv : 0.0);
        const std::size_t ti = static_cast<std::size_t>(lat.index(k + 1, jx));
        if (cand > best[ti]) {
          best[ti] = cand;
          parent[ti] = static_cast<std::int8_t>(dj);
        }
      }
    }
  }
  out.dp_value = best[lat.index(span, jq)];

  std::vector<double> ts = f.layer_t, xs(static_cast<std::size_t>(nt));
  if (!std::isfinite(out.dp_value)) {
    // Target column unreachable (can only happen through rounding at the
    // diamond boundary); fall back to the straight chord.
    out.dp_value = 0.0;
    for (int k = 0; k < nt; ++k)
      xs[k] = p.x + (q.x - p.x) * (static_cast<double>(k) / span);
  } else {
    int ix = jq;
    for (int k = span; k >= 0; --k) {
      xs[k] = lat.node(k, ix).x;
      if (k > 0) ix -= parent[lat.index(k, ix)];
    }
  }

  // Pin the endpoints exactly and restore per-step feasibility with a
  // backward projection onto the cone windows anchored at p. The margin on
  // the step keeps the curve strictly inside the validator's exact test.
  const double de = step * (1.0 - 1e-9);
  xs[0] = p.x;
  xs[span] = q.x;
  for (int k = span - 1; k >= 1; --k) {
    const double lo = std::max(xs[k + 1] - de, p.x - k * de);
    const double hi = std::min(xs[k + 1] + de, p.x + k * de);
    xs[k] = std::clamp(xs[k], lo, hi);
  }

  auto seg = [&](int i, double xa, double xb) {
    return segment_value(Event{ts[i], xa}, Event{ts[i + 1], xb}, m, &weight);
  };
  std::vector<double> segval(static_cast<std::size_t>(span));
  double total = 0.0;
  for (int i = 0; i < span; ++i) {
    segval[i] = seg(i, xs[i], xs[i + 1]);
    total += segval[i];
  }

  // Replace xs on (i, j) by the straight chord when that increases the value.
  std::vector<double> cand(static_cast<std::size_t>(nt)), cval(static_cast<std::size_t>(span));
  auto chord_pass = [&]() {
    double gain = 0.0;
    for (int len = span; len >= 2; len /= 2) {
      const int stride = std::max(1, len / 2);
      for (int i = 0; i + len <= span; i += stride) {
        const int j = i + len;
        double slope = (xs[j] - xs[i]) / len;
        slope = std::clamp(slope, -de, de);
        double oldv = 0.0, newv = 0.0;
        cand[i] = xs[i];
        cand[j] = xs[j];
        for (int k = i + 1; k < j; ++k) cand[k] = xs[i] + slope * (k - i);
        for (int k = i; k < j; ++k) {
          oldv += segval[k];
          cval[k] = seg(k, cand[k], cand[k + 1]);
          newv += cval[k];
        }
        if (newv > oldv) {
          gain += newv - oldv;
          for (int k = i + 1; k < j; ++k) xs[k] = cand[k];
          for (int k = i; k < j; ++k) segval[k] = cval[k];
        }
      }
    }
    return gain;
  };

  // Coordinate ascent on one interior vertex: dense scan of the feasible
  // window, then golden-section narrowing around the best sample. Accepts
  // only strict improvements, so the objective may be multimodal.
  auto vertex_pass = [&]() {
    double gain = 0.0;
    for (int k = 1; k < span; ++k) {
      const double lo = std::max(xs[k - 1] - de, xs[k + 1] - de);
      const double hi = std::min(xs[k - 1] + de, xs[k + 1] + de);
      if (!(hi >= lo)) continue;
      const double cur = segval[k - 1] + segval[k];
      auto local = [&](double x) { return seg(k - 1, xs[k - 1], x) + seg(k, x, xs[k + 1]); };
      double bx = xs[k], bv = cur;
      for (int s = 0; s < opt.scan_points; ++s) {
        const double x = lo + (hi - lo) * (s + 0.5) / opt.scan_points;
        const double v = local(x);
        if (v > bv) {
          bv = v;
          bx = x;
        }
      }
      double a = std::max(lo, bx - (hi - lo) / opt.scan_points);
      double b = std::min(hi, bx + (hi - lo) / opt.scan_points);
      for (int it = 0; it < opt.narrow_iters; ++it) {
        const double x1 = a + (b - a) * 0.381966011250105;
        const double x2 = b - (b - a) * 0.381966011250105;
        if (local(x1) >= local(x2))
          b = x2;
        else
          a = x1;
      }
      const double xm = 0.5 * (a + b);
      const double vm = local(xm);
      if (vm > bv) {
        bv = vm;
        bx = xm;
      }
      if (bv > cur) {
        gain += bv - cur;
        xs[k] = bx;
        segval[k - 1] = seg(k - 1, xs[k - 1], xs[k]);
        segval[k] = seg(k, xs[k], xs[k + 1]);
      }
    }
    return gain;
  };

  for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
    const double g = chord_pass() + vertex_pass();
    total += g;
    out.last_gain = g;
    out.sweeps = sweep + 1;
    if (g <= opt.rel_tol * (1.0 + std::abs(total))) break;
  }

  out.curve.vertices.resize(static_cast<std::size_t>(nt));
  for (int k = 0; k < nt; ++k) out.curve.vertices[k] = Event{ts[k], xs[k]};
  out.value = weighted_functional(out.curve, m, weight);
  return out;
}

inline const ScalarFn& unit_weight() {
  static const ScalarFn one = [](double, double) { return 1.0; };
  return one;
}

}  // namespace detail

// Supremum of proper time over causal curves p -> q. Flat metrics use the
// closed-form interval; conformally flat ones run the lattice optimizer with
// unit weight at the given resolution.
inline double lorentzian_distance(const Event& p, const Event& q, const MetricModel& m,
                                  const Resolution& res = Resolution{65, 65}) {
  if (!is_future_causal(p, q)) return 0.0;
  if (m.is_flat()) {
    const double dt = q.t - p.t;
    const double dx = q.x - p.x;
    return std::sqrt(std::max(0.0, dt * dt - dx * dx));
  }
  if (res.nt < 3)
    throw std::invalid_argument(
        "lorentzian_distance: degenerate resolution, need at least 2 lattice steps");
  return detail::supremum_search(p, q, m, detail::unit_weight(), res.nt).value;
}

}  // namespace aclab
