#pragma once

// Causal-cone algebra of the two-sheeted model: commutator test matrices,
// pointwise positivity tests for cone membership, state pairings against
// algebra elements, and causality-refutation certificates.
//
// An algebra element is a pair of real fields a = (f1, f2), one per sheet,
// acting as diag(f1, f2) on the internal space. Sheet 1 is the chirality
// "-" summand, sheet 2 the chirality "+" one; this identification is fixed
// here once and used consistently everywhere downstream.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "aclab/spacetime.hpp"

namespace aclab {

using cplx = std::complex<double>;

enum class Sheet { minus, plus };

inline const char* to_string(Sheet s) { return s == Sheet::minus ? "-" : "+"; }

// Flat gamma matrices in the chirality-diagonal representation:
// gamma0 = sigma1, gamma1 = -i sigma2, gammaM = gamma0 gamma1 = sigma3.
struct GammaRep {
  Eigen::Matrix2cd gamma0, gamma1, gammaM;

  static const GammaRep& standard() {
    static const GammaRep rep = [] {
      GammaRep r;
      r.gamma0 << cplx(0, 0), cplx(1, 0), cplx(1, 0), cplx(0, 0);
      r.gamma1 << cplx(0, 0), cplx(-1, 0), cplx(1, 0), cplx(0, 0);
      r.gammaM << cplx(1, 0), cplx(0, 0), cplx(0, 0), cplx(-1, 0);
      return r;
    }();
    return rep;
  }
};

// External vector potential (A_t, A_x) on the chart.
struct VectorPotential {
  ScalarFn at;
  ScalarFn ax;
};

using GradientFn = std::function<std::array<double, 2>(double, double)>;  // {d/dt, d/dx}

// One sheet's scalar field together with its gradient. Analytic elements
// supply exact gradients; otherwise central differences are used.
struct SheetField {
  ScalarFn value;
  GradientFn gradient;

  static SheetField analytic(ScalarFn v, GradientFn g) {
    if (!v || !g) throw std::invalid_argument("SheetField: value and gradient required");
    return SheetField{std::move(v), std::move(g)};
  }

  static SheetField finite_difference(ScalarFn v, double h = 1e-6) {
    if (!v) throw std::invalid_argument("SheetField: value required");
    ScalarFn vc = v;
    GradientFn g = [vc, h](double t, double x) -> std::array<double, 2> {
      const double st = h * (1.0 + std::abs(t));
      const double sx = h * (1.0 + std::abs(x));
      return {(vc(t + st, x) - vc(t - st, x)) / (2.0 * st),
              (vc(t, x + sx) - vc(t, x - sx)) / (2.0 * sx)};
    };
    return SheetField{std::move(v), std::move(g)};
  }
};

struct ConeElement {
  SheetField f1;  // sheet 1, chirality -
  SheetField f2;  // sheet 2, chirality +
  std::string id;
};

struct ConeTestMatrix {
  Eigen::Matrix4cd value;
  Event at;
};

// C_a(e) = i (gamma0 x 1) [D, a](e), the pointwise cone test matrix.
//
// Basis ordering of the 4x4: (spinor s, internal j) with rows
// (+,1), (+,2), (-,1), (-,2); the spinor factor is chirality-diagonal.
// The derivative part of [D, a] lands on the internal-diagonal blocks
// gamma0 gamma^mu d_mu f_j (with curved gamma^mu = flat / Omega); the finite
// part couples the sheets through mu and the difference g = f2 - f1. The
// vector potential acts diagonally in the algebra representation, so its
// contribution to the commutator vanishes identically and the A argument is
// accepted only to make that exactness testable.
inline ConeTestMatrix commutator_matrix(const ConeElement& a, const Event& e,
                                        const MetricModel& m, cplx mu,
                                        const std::optional<VectorPotential>& /*A*/ = {}) {
  if (mu == cplx(0.0, 0.0)) throw std::invalid_argument("commutator_matrix: mu must be nonzero");
  if (!is_finite(e)) throw std::invalid_argument("commutator_matrix: event must be finite");
  const double inv = 1.0 / m.conformal_factor(e.t, e.x);
  const auto g1 = a.f1.gradient(e.t, e.x);
  const auto g2 = a.f2.gradient(e.t, e.x);
  const double g = a.f2.value(e.t, e.x) - a.f1.value(e.t, e.x);

  Eigen::Matrix4cd c = Eigen::Matrix4cd::Zero();
  c(0, 0) = inv * (g1[0] + g1[1]);
  c(1, 1) = inv * (g2[0] + g2[1]);
  c(2, 2) = inv * (g1[0] - g1[1]);
  c(3, 3) = inv * (g2[0] - g2[1]);
  c(0, 3) = g * mu;
  c(3, 0) = g * std::conj(mu);
  c(1, 2) = -g * std::conj(mu);
  c(2, 1) = -g * mu;
  return ConeTestMatrix{c, e};
}

inline double min_eigenvalue(const ConeTestMatrix& c) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> solver;
  solver.compute(c.value, Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(0);
}

struct ConeMembership {
  bool member = false;
  Event worst_event;
  double min_eigenvalue = 0.0;
};

// Membership of a in the causal cone, certified on the sampled grid: member
// iff the smallest eigenvalue of C_a stays >= -tol at every sampled event;
// otherwise the worst event and eigenvalue form the violation witness.
inline ConeMembership is_causal_element(const ConeElement& a, const Region& region,
                                        const Resolution& res, const MetricModel& m, cplx mu,
                                        double tol = 1e-10) {
  if (res.nt < 1 || res.nx < 1 || !(region.t1 >= region.t0) || !(region.x1 >= region.x0) ||
      !std::isfinite(region.t0) || !std::isfinite(region.t1) || !std::isfinite(region.x0) ||
      !std::isfinite(region.x1))
    throw std::invalid_argument("is_causal_element: empty region");
  ConeMembership out;
  out.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (int i = 0; i < res.nt; ++i) {
    const double t =
        res.nt == 1 ? region.t0 : region.t0 + (region.t1 - region.t0) * i / (res.nt - 1);
    for (int j = 0; j < res.nx; ++j) {
      const double x =
          res.nx == 1 ? region.x0 : region.x0 + (region.x1 - region.x0) * j / (res.nx - 1);
      const Event e{t, x};
      const double lam = min_eigenvalue(commutator_matrix(a, e, m, mu));
      if (lam < out.min_eigenvalue) {
        out.min_eigenvalue = lam;
        out.worst_event = e;
      }
    }
  }
  out.member = out.min_eigenvalue >= -tol;
  return out;
}

// A state on C(M) (+) C(M): a pair of nonnegative densities on a uniform
// constant-t slice, total mass 1.
struct AcState {
  double time = 0.0;
  double x0 = 0.0;
  double dx = 1.0;
  std::vector<double> rho_minus;  // sheet 1
  std::vector<double> rho_plus;   // sheet 2

  std::size_t size() const { return rho_minus.size(); }
  double x_at(std::size_t i) const { return x0 + static_cast<double>(i) * dx; }

  double total_mass() const {
    double s = 0.0;
    for (std::size_t i = 0; i < rho_minus.size(); ++i) s += rho_minus[i] + rho_plus[i];
    return s * dx;
  }

  // Expectation of the chirality grading: integral of (rho_plus - rho_minus).
  double chirality() const {
    double s = 0.0;
    for (std::size_t i = 0; i < rho_minus.size(); ++i) s += rho_plus[i] - rho_minus[i];
    return s * dx;
  }

  void validate(double tol = 1e-9) const {
    if (rho_minus.size() != rho_plus.size() || rho_minus.empty() || !(dx > 0.0))
      throw std::invalid_argument("AcState: malformed densities");
    for (std::size_t i = 0; i < rho_minus.size(); ++i)
      if (rho_minus[i] < -tol || rho_plus[i] < -tol)
        throw std::invalid_argument("AcState: densities must be nonnegative");
    if (std::abs(total_mass() - 1.0) > tol)
      throw std::invalid_argument("AcState: total mass must be 1");
  }

  static AcState point_mass(double t, double x, Sheet sheet, double x0, double dx, int n) {
    if (n < 1 || !(dx > 0.0)) throw std::invalid_argument("AcState: bad slice grid");
    AcState s;
    s.time = t;
    s.x0 = x0;
    s.dx = dx;
    s.rho_minus.assign(static_cast<std::size_t>(n), 0.0);
    s.rho_plus.assign(static_cast<std::size_t>(n), 0.0);
    const long idx = std::clamp<long>(std::lround((x - x0) / dx), 0, n - 1);
    (sheet == Sheet::minus ? s.rho_minus : s.rho_plus)[static_cast<std::size_t>(idx)] = 1.0 / dx;
    return s;
  }
};

// omega(a) = integral of rho_minus * f1 + rho_plus * f2 over the slice.
inline double state_pairing(const AcState& s, const ConeElement& a) {
  s.validate();
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double x = s.x_at(i);
    if (s.rho_minus[i] != 0.0) acc += s.rho_minus[i] * a.f1.value(s.time, x);
    if (s.rho_plus[i] != 0.0) acc += s.rho_plus[i] * a.f2.value(s.time, x);
  }
  return acc * s.dx;
}

struct RefutationCertificate {
  std::size_t element_index = 0;
  std::string element_id;
  double pairing_omega = 0.0;
  double pairing_eta = 0.0;
  double margin = 0.0;  // pairing_omega - pairing_eta > tol
};

// Tries to disprove omega <= eta in the state order: returns the first
// family member a with omega(a) > eta(a) + tol. An empty result means the
// pair is consistent with causality for this family, which is evidence, not
// a proof; the family is never exhaustive. Every member must pass the cone
// test on the working region or the whole input is rejected.
inline std::optional<RefutationCertificate> refute_causality(
    const AcState& omega, const AcState& eta, const std::vector<ConeElement>& family,
    const Region& region, const Resolution& res, const MetricModel& m, cplx mu,
    double tol = 1e-9) {
  for (std::size_t i = 0; i < family.size(); ++i) {
    const auto membership = is_causal_element(family[i], region, res, m, mu);
    if (!membership.member) {
      std::ostringstream msg;
      msg << "refute_causality: family element " << i;
      if (!family[i].id.empty()) msg << " (" << family[i].id << ")";
      msg << " fails cone membership, min eigenvalue " << membership.min_eigenvalue << " at (t="
          << membership.worst_event.t << ", x=" << membership.worst_event.x << ")";
      throw std::invalid_argument(msg.str());
    }
  }
  for (std::size_t i = 0; i < family.size(); ++i) {
    const double po = state_pairing(omega, family[i]);
    const double pe = state_pairing(eta, family[i]);
    if (po > pe + tol)
      return RefutationCertificate{i, family[i].id, po, pe, po - pe};
  }
  return std::nullopt;
}

// --- grid-backed elements and CSV interchange -------------------------------

namespace detail {

struct GridField {
  double t0 = 0.0, dt = 1.0;
  double x0 = 0.0, dx = 1.0;
  int nt = 0, nx = 0;
  std::vector<double> f;  // row-major, t outer

  double at(int i, int j) const { return f[static_cast<std::size_t>(i) * nx + j]; }

  void locate(double t, double x, int& i, int& j, double& ft, double& fx) const {
    const double ti = (t - t0) / dt;
    const double xi = (x - x0) / dx;
    if (ti < -1e-9 || ti > nt - 1 + 1e-9 || xi < -1e-9 || xi > nx - 1 + 1e-9)
      throw std::domain_error("cone element: point outside the imported grid");
    i = std::clamp(static_cast<int>(std::floor(ti)), 0, nt - 2);
    j = std::clamp(static_cast<int>(std::floor(xi)), 0, nx - 2);
    ft = std::clamp(ti - i, 0.0, 1.0);
    fx = std::clamp(xi - j, 0.0, 1.0);
  }

  double value(double t, double x) const {
    if (nt == 1 || nx == 1) throw std::domain_error("cone element: degenerate imported grid");
    int i, j;
    double ft, fx;
    locate(t, x, i, j, ft, fx);
    return (1 - ft) * ((1 - fx) * at(i, j) + fx * at(i, j + 1)) +
           ft * ((1 - fx) * at(i + 1, j) + fx * at(i + 1, j + 1));
  }

  // Grid-level central differences (one-sided at the borders), interpolated
  // bilinearly like the values.
  double deriv(double t, double x, bool in_t) const {
    int i, j;
    double ft, fx;
    locate(t, x, i, j, ft, fx);
    auto d = [&](int ii, int jj) {
      if (in_t) {
        const int lo = std::max(ii - 1, 0), hi = std::min(ii + 1, nt - 1);
        return (at(hi, jj) - at(lo, jj)) / ((hi - lo) * dt);
      }
      const int lo = std::max(jj - 1, 0), hi = std::min(jj + 1, nx - 1);
      return (at(ii, hi) - at(ii, lo)) / ((hi - lo) * dx);
    };
    return (1 - ft) * ((1 - fx) * d(i, j) + fx * d(i, j + 1)) +
           ft * ((1 - fx) * d(i + 1, j) + fx * d(i + 1, j + 1));
  }
};

inline SheetField sheet_from_grid(std::shared_ptr<const GridField> g) {
  SheetField s;
  s.value = [g](double t, double x) { return g->value(t, x); };
  s.gradient = [g](double t, double x) -> std::array<double, 2> {
    return {g->deriv(t, x, true), g->deriv(t, x, false)};
  };
  return s;
}

}  // namespace detail

// Writes the element sampled on a regular grid as CSV rows "t,x,f1,f2".
inline void export_cone_element_csv(const ConeElement& a, const Region& region,
                                    const Resolution& res, std::ostream& os) {
  if (res.nt < 2 || res.nx < 2) throw std::invalid_argument("export_cone_element_csv: need nt, nx >= 2");
  os << "t,x,f1,f2\n";
  char buf[128];
  for (int i = 0; i < res.nt; ++i) {
    const double t = region.t0 + (region.t1 - region.t0) * i / (res.nt - 1);
    for (int j = 0; j < res.nx; ++j) {
      const double x = region.x0 + (region.x1 - region.x0) * j / (res.nx - 1);
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", t, x, a.f1.value(t, x),
                    a.f2.value(t, x));
      os << buf;
    }
  }
}

inline void export_cone_element_csv(const ConeElement& a, const Region& region,
                                    const Resolution& res, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("export_cone_element_csv: cannot open " + path);
  export_cone_element_csv(a, region, res, os);
}

// Reads back a "t,x,f1,f2" grid; the rows must tile a complete regular grid.
inline ConeElement import_cone_element_csv(std::istream& is, std::string id = {}) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("import_cone_element_csv: empty input");
  std::map<double, std::map<double, std::pair<double, double>>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    double t, x, v1, v2;
    if (std::sscanf(line.c_str(), "%lg,%lg,%lg,%lg", &t, &x, &v1, &v2) != 4)
      throw std::runtime_error("import_cone_element_csv: malformed row: " + line);
    rows[t][x] = {v1, v2};
  }
  const int nt = static_cast<int>(rows.size());
  if (nt < 2) throw std::runtime_error("import_cone_element_csv: need at least 2 time rows");
  const int nx = static_cast<int>(rows.begin()->second.size());
  if (nx < 2) throw std::runtime_error("import_cone_element_csv: need at least 2 x columns");

  auto g1 = std::make_shared<detail::GridField>();
  auto g2 = std::make_shared<detail::GridField>();
  g1->nt = g2->nt = nt;
  g1->nx = g2->nx = nx;
  g1->t0 = g2->t0 = rows.begin()->first;
  g1->x0 = g2->x0 = rows.begin()->second.begin()->first;
  g1->dt = g2->dt = (rows.rbegin()->first - g1->t0) / (nt - 1);
  g1->dx = g2->dx = (rows.begin()->second.rbegin()->first - g1->x0) / (nx - 1);
  g1->f.reserve(static_cast<std::size_t>(nt) * nx);
  g2->f.reserve(static_cast<std::size_t>(nt) * nx);
  for (const auto& [t, cols] : rows) {
    if (static_cast<int>(cols.size()) != nx)
      throw std::runtime_error("import_cone_element_csv: ragged grid");
    for (const auto& [x, v] : cols) {
      g1->f.push_back(v.first);
      g2->f.push_back(v.second);
    }
  }
  ConeElement a{detail::sheet_from_grid(g1), detail::sheet_from_grid(g2), std::move(id)};
  return a;
}

inline ConeElement import_cone_element_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("import_cone_element_csv: cannot open " + path);
  return import_cone_element_csv(is, path);
}

}  // namespace aclab
