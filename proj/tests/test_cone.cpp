#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <random>
#include <sstream>

#include "aclab/cone.hpp"

using namespace aclab;
using Catch::Matchers::WithinAbs;

namespace {

ConeElement same_sheet_element(ScalarFn v, GradientFn g, std::string id = {}) {
  return ConeElement{SheetField::analytic(v, g), SheetField::analytic(v, g), std::move(id)};
}

ConeElement time_element() {
  return same_sheet_element([](double t, double) { return t; },
                            [](double, double) -> std::array<double, 2> { return {1.0, 0.0}; },
                            "time");
}

ConeElement space_element() {
  return same_sheet_element([](double, double x) { return x; },
                            [](double, double) -> std::array<double, 2> { return {0.0, 1.0}; },
                            "space");
}

ConeElement tilted_element(double eps) {
  return same_sheet_element([eps](double t, double x) { return t + eps * x; },
                            [eps](double, double) -> std::array<double, 2> { return {1.0, eps}; });
}

// (p t + q x + r, same - delta): a member whenever p^2 - q^2 >= |mu|^2 delta^2.
ConeElement linear_asymmetric(double p, double q, double r, double delta) {
  auto grad = [p, q](double, double) -> std::array<double, 2> { return {p, q}; };
  return ConeElement{
      SheetField::analytic([p, q, r](double t, double x) { return p * t + q * x + r; }, grad),
      SheetField::analytic(
          [p, q, r, delta](double t, double x) { return p * t + q * x + r - delta; }, grad),
      "linear_asymmetric"};
}

const Region kBox{-2.0, 2.0, -2.0, 2.0};
const Resolution kGrid{21, 21};

}  // namespace

TEST_CASE("standard gamma representation satisfies the Clifford relations", "[cone]") {
  const auto& g = GammaRep::standard();
  const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();
  CHECK((g.gamma0 * g.gamma0 - id).norm() == 0.0);
  CHECK((g.gamma1 * g.gamma1 + id).norm() == 0.0);
  CHECK((g.gamma0 * g.gamma1 + g.gamma1 * g.gamma0).norm() == 0.0);
  CHECK((g.gamma0 * g.gamma1 - g.gammaM).norm() == 0.0);
  CHECK((g.gamma0 - g.gamma0.adjoint()).norm() == 0.0);
  CHECK((g.gamma1 + g.gamma1.adjoint()).norm() == 0.0);
}

TEST_CASE("commutator matrix of the global time function is the identity", "[cone]") {
  const auto c =
      commutator_matrix(time_element(), {0.3, -0.7}, MetricModel::minkowski(), cplx(0.0, 1.0));
  CHECK((c.value - Eigen::Matrix4cd::Identity()).norm() < 1e-14);
}

TEST_CASE("commutator matrix of a spatial coordinate", "[cone]") {
  const auto c =
      commutator_matrix(space_element(), {0.0, 0.0}, MetricModel::minkowski(), cplx(0.0, 2.0));
  Eigen::Matrix4cd expect = Eigen::Matrix4cd::Zero();
  expect.diagonal() << 1.0, 1.0, -1.0, -1.0;  // gamma0 gamma1 (x) 1
  CHECK((c.value - expect).norm() < 1e-14);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(c.value);
  CHECK_THAT(es.eigenvalues()(0), WithinAbs(-1.0, 1e-14));
  CHECK_THAT(es.eigenvalues()(3), WithinAbs(1.0, 1e-14));
}

TEST_CASE("commutator matrix ignores the vector field bit-for-bit", "[cone]") {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double p = 1.0 + std::abs(u(rng)), q = 0.5 * u(rng), d = u(rng);
    const auto a = linear_asymmetric(p, q, u(rng), d);
    const Event e{u(rng), u(rng)};
    const cplx mu(u(rng), 1.0 + std::abs(u(rng)));
    const double a1 = u(rng), a2 = u(rng), a3 = u(rng);
    const VectorPotential A{[a1, a2](double t, double x) { return a1 * std::sin(t) + a2 * x; },
                            [a3](double t, double x) { return a3 * std::cos(x - t); }};
    const auto with = commutator_matrix(a, e, MetricModel::minkowski(), mu, A);
    const auto without = commutator_matrix(a, e, MetricModel::minkowski(), mu);
    CHECK(std::memcmp(with.value.data(), without.value.data(), sizeof(cplx) * 16) == 0);
  }
}

TEST_CASE("commutator matrix is Hermitian", "[cone]") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const auto m =
      MetricModel::conformally_flat([](double t, double x) { return 1.2 + 0.3 * std::sin(t + x); });
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = linear_asymmetric(2.0 + u(rng), u(rng) * 0.3, u(rng), u(rng));
    const auto c = commutator_matrix(a, {u(rng), u(rng)}, m, cplx(u(rng), u(rng) + 3.0));
    CHECK((c.value - c.value.adjoint()).norm() < 1e-12);
  }
}

TEST_CASE("cone membership of canonical elements", "[cone]") {
  const auto mink = MetricModel::minkowski();
  const cplx mu(0.0, 1.0);
  CHECK(is_causal_element(time_element(), kBox, kGrid, mink, mu).member);

  const auto bad = is_causal_element(space_element(), kBox, kGrid, mink, mu);
  CHECK_FALSE(bad.member);
  CHECK_THAT(bad.min_eigenvalue, WithinAbs(-1.0, 1e-12));

  CHECK(is_causal_element(tilted_element(0.5), kBox, kGrid, mink, mu).member);
  CHECK(is_causal_element(tilted_element(-0.75), kBox, kGrid, mink, mu).member);
  const auto steep = is_causal_element(tilted_element(2.0), kBox, kGrid, mink, mu);
  CHECK_FALSE(steep.member);
  CHECK_THAT(steep.min_eigenvalue, WithinAbs(-1.0, 1e-12));
}

TEST_CASE("membership matches the classical causal-function criterion", "[cone]") {
  std::mt19937_64 rng(211);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto mink = MetricModel::minkowski();
  for (int trial = 0; trial < 30; ++trial) {
    const double c0 = 1.5 * u(rng), c1 = u(rng), c2 = u(rng), w1 = 1.0 + u(rng), w2 = 1.0 + u(rng);
    ScalarFn f = [=](double t, double x) {
      return c0 * t + c1 * std::sin(w1 * t) + c2 * std::cos(w2 * x);
    };
    GradientFn g = [=](double t, double x) -> std::array<double, 2> {
      return {c0 + c1 * w1 * std::cos(w1 * t), -c2 * w2 * std::sin(w2 * x)};
    };
    const auto a = same_sheet_element(f, g);
    bool classical = true;
    for (int i = 0; i < kGrid.nt && classical; ++i)
      for (int j = 0; j < kGrid.nx && classical; ++j) {
        const double t = kBox.t0 + (kBox.t1 - kBox.t0) * i / (kGrid.nt - 1);
        const double x = kBox.x0 + (kBox.x1 - kBox.x0) * j / (kGrid.nx - 1);
        const auto grad = g(t, x);
        if (grad[0] < std::abs(grad[1]) - 1e-10) classical = false;
      }
    CHECK(is_causal_element(a, kBox, kGrid, mink, cplx(0, 1)).member == classical);
  }
}

TEST_CASE("the member set is a cone", "[cone]") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto mink = MetricModel::minkowski();
  const cplx mu(0.0, 1.3);
  for (int trial = 0; trial < 20; ++trial) {
    const double q1 = 0.4 * u(rng), d1 = u(rng);
    const double q2 = 0.4 * u(rng), d2 = u(rng);
    const auto a =
        linear_asymmetric(std::abs(q1) + std::abs(mu) * std::abs(d1) + 0.1, q1, u(rng), d1);
    const auto b =
        linear_asymmetric(std::abs(q2) + std::abs(mu) * std::abs(d2) + 0.1, q2, u(rng), d2);
    REQUIRE(is_causal_element(a, kBox, kGrid, mink, mu).member);
    REQUIRE(is_causal_element(b, kBox, kGrid, mink, mu).member);

    const double lam = 2.5 * std::abs(u(rng));
    ConeElement scaled{SheetField::analytic(
                           [=](double t, double x) { return lam * a.f1.value(t, x); },
                           [=](double t, double x) {
                             auto g = a.f1.gradient(t, x);
                             return std::array<double, 2>{lam * g[0], lam * g[1]};
                           }),
                       SheetField::analytic(
                           [=](double t, double x) { return lam * a.f2.value(t, x); },
                           [=](double t, double x) {
                             auto g = a.f2.gradient(t, x);
                             return std::array<double, 2>{lam * g[0], lam * g[1]};
                           }),
                       "scaled"};
    CHECK(is_causal_element(scaled, kBox, kGrid, mink, mu).member);

    ConeElement sum{SheetField::analytic(
                        [=](double t, double x) { return a.f1.value(t, x) + b.f1.value(t, x); },
                        [=](double t, double x) {
                          auto ga = a.f1.gradient(t, x);
                          auto gb = b.f1.gradient(t, x);
                          return std::array<double, 2>{ga[0] + gb[0], ga[1] + gb[1]};
                        }),
                    SheetField::analytic(
                        [=](double t, double x) { return a.f2.value(t, x) + b.f2.value(t, x); },
                        [=](double t, double x) {
                          auto ga = a.f2.gradient(t, x);
                          auto gb = b.f2.gradient(t, x);
                          return std::array<double, 2>{ga[0] + gb[0], ga[1] + gb[1]};
                        }),
                    "sum"};
    CHECK(is_causal_element(sum, kBox, kGrid, mink, mu).member);
  }
}

TEST_CASE("conformal factor shifts the sheet-asymmetry budget", "[cone]") {
  // (2t, 2t - delta) with |mu| = 1: member iff 4 >= delta^2 on flat, but only
  // iff 1 >= delta^2 when Omega = 2 scales the derivative blocks down.
  const auto a = linear_asymmetric(2.0, 0.0, 0.0, 1.5);
  const cplx mu(0.0, 1.0);
  CHECK(is_causal_element(a, kBox, kGrid, MetricModel::minkowski(), mu).member);
  const auto doubled = MetricModel::conformally_flat([](double, double) { return 2.0; });
  const auto res = is_causal_element(a, kBox, kGrid, doubled, mu);
  CHECK_FALSE(res.member);
  CHECK_THAT(res.min_eigenvalue, WithinAbs(1.0 - 1.5, 1e-12));
}

TEST_CASE("is_causal_element rejects an empty region", "[cone]") {
  CHECK_THROWS_AS(is_causal_element(time_element(), {1.0, 0.0, 0.0, 1.0}, kGrid,
                                    MetricModel::minkowski(), cplx(0, 1)),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      is_causal_element(time_element(), kBox, {0, 5}, MetricModel::minkowski(), cplx(0, 1)),
      std::invalid_argument);
}

TEST_CASE("state pairing evaluates point masses and mixtures", "[cone]") {
  const auto a = linear_asymmetric(1.0, 0.2, 0.3, 0.8);  // f1 = t + 0.2x + 0.3
  const auto p = AcState::point_mass(0.5, -1.0, Sheet::minus, -2.0, 0.125, 33);
  CHECK_THAT(state_pairing(p, a), WithinAbs(0.5 + 0.2 * (-1.0) + 0.3, 1e-12));

  // Uniform 50/50 mixture against f1 = -f2: pairing vanishes by antisymmetry.
  AcState mix;
  mix.time = 0.0;
  mix.x0 = -1.0;
  mix.dx = 0.25;
  mix.rho_minus.assign(9, 0.5 / (9 * 0.25));
  mix.rho_plus.assign(9, 0.5 / (9 * 0.25));
  ConeElement anti{
      SheetField::analytic([](double, double x) { return x; },
                           [](double, double) -> std::array<double, 2> { return {0.0, 1.0}; }),
      SheetField::analytic([](double, double x) { return -x; },
                           [](double, double) -> std::array<double, 2> { return {0.0, -1.0}; }),
      "anti"};
  CHECK_THAT(state_pairing(mix, anti), WithinAbs(0.0, 1e-12));

  // Any normalized state against (1, 1) integrates to 1.
  ConeElement unit{
      SheetField::analytic([](double, double) { return 1.0; },
                           [](double, double) -> std::array<double, 2> { return {0.0, 0.0}; }),
      SheetField::analytic([](double, double) { return 1.0; },
                           [](double, double) -> std::array<double, 2> { return {0.0, 0.0}; }),
      "unit"};
  CHECK_THAT(state_pairing(mix, unit), WithinAbs(1.0, 1e-12));

  AcState bad = mix;
  bad.rho_plus.assign(9, 0.0);
  CHECK_THROWS_AS(state_pairing(bad, unit), std::invalid_argument);
}

TEST_CASE("state pairing is linear in states and elements", "[cone]") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = 17;
  const double dx = 0.25;
  auto random_state = [&](double t) {
    AcState s;
    s.time = t;
    s.x0 = -2.0;
    s.dx = dx;
    s.rho_minus.resize(n);
    s.rho_plus.resize(n);
    double mass = 0.0;
    for (int i = 0; i < n; ++i) {
      s.rho_minus[i] = u(rng);
      s.rho_plus[i] = u(rng);
      mass += s.rho_minus[i] + s.rho_plus[i];
    }
    for (int i = 0; i < n; ++i) {
      s.rho_minus[i] /= mass * dx;
      s.rho_plus[i] /= mass * dx;
    }
    return s;
  };
  const auto s1 = random_state(0.4);
  const auto s2 = random_state(0.4);
  const auto a = linear_asymmetric(1.0, 0.3, -0.2, 0.6);
  const auto b = linear_asymmetric(2.0, -0.4, 0.1, -0.9);

  const double alpha = 0.3;
  AcState blend = s1;
  for (int i = 0; i < n; ++i) {
    blend.rho_minus[i] = alpha * s1.rho_minus[i] + (1 - alpha) * s2.rho_minus[i];
    blend.rho_plus[i] = alpha * s1.rho_plus[i] + (1 - alpha) * s2.rho_plus[i];
  }
  CHECK_THAT(state_pairing(blend, a),
             WithinAbs(alpha * state_pairing(s1, a) + (1 - alpha) * state_pairing(s2, a), 1e-12));

  ConeElement absum{SheetField::analytic(
                        [&](double t, double x) { return a.f1.value(t, x) + b.f1.value(t, x); },
                        [&](double t, double x) {
                          auto ga = a.f1.gradient(t, x);
                          auto gb = b.f1.gradient(t, x);
                          return std::array<double, 2>{ga[0] + gb[0], ga[1] + gb[1]};
                        }),
                    SheetField::analytic(
                        [&](double t, double x) { return a.f2.value(t, x) + b.f2.value(t, x); },
                        [&](double t, double x) {
                          auto ga = a.f2.gradient(t, x);
                          auto gb = b.f2.gradient(t, x);
                          return std::array<double, 2>{ga[0] + gb[0], ga[1] + gb[1]};
                        }),
                    "absum"};
  CHECK_THAT(state_pairing(s1, absum),
             WithinAbs(state_pairing(s1, a) + state_pairing(s1, b), 1e-12));
}

TEST_CASE("refutation certificates", "[cone]") {
  const auto mink = MetricModel::minkowski();
  const cplx mu(0.0, 1.0);
  const double dx = 0.05;
  const int n = 161;  // slice [-4, 4]
  std::vector<ConeElement> family;
  family.push_back(time_element());
  family.push_back(linear_asymmetric(1.0, 0.0, 0.0, 1.0));
  const Region box{-4.0, 4.0, -4.1, 4.1};

  SECTION("a state is consistent with itself") {
    const auto w = AcState::point_mass(0.0, 0.0, Sheet::minus, -4.0, dx, n);
    CHECK_FALSE(refute_causality(w, w, family, box, kGrid, mink, mu).has_value());
  }

  SECTION("time reversal is refuted by the time function") {
    const auto w = AcState::point_mass(0.0, 0.0, Sheet::minus, -4.0, dx, n);
    const auto e = AcState::point_mass(-1.0, 0.0, Sheet::minus, -4.0, dx, n);
    const auto cert = refute_causality(w, e, family, box, kGrid, mink, mu);
    REQUIRE(cert.has_value());
    CHECK(cert->element_index == 0);
    CHECK_THAT(cert->margin, WithinAbs(1.0, 1e-9));
  }

  SECTION("a fast chirality flip is refuted by a sheet-asymmetric member") {
    // (0,0,-) -> (0.3,0,+) with m = 1: far below the pi/2 threshold.
    const auto w = AcState::point_mass(0.0, 0.0, Sheet::minus, -4.0, dx, n);
    const auto e = AcState::point_mass(0.3, 0.0, Sheet::plus, -4.0, dx, n);
    const auto cert = refute_causality(w, e, family, box, kGrid, mink, mu);
    REQUIRE(cert.has_value());
    CHECK(cert->element_index == 1);
    CHECK_THAT(cert->margin, WithinAbs(0.7, 1e-9));
  }

  SECTION("family members failing the cone test are rejected") {
    auto bad_family = family;
    bad_family.push_back(space_element());
    const auto w = AcState::point_mass(0.0, 0.0, Sheet::minus, -4.0, dx, n);
    CHECK_THROWS_AS(refute_causality(w, w, bad_family, box, kGrid, mink, mu),
                    std::invalid_argument);
  }
}

TEST_CASE("causal point-mass flows are never refuted", "[cone]") {
  const auto mink = MetricModel::minkowski();
  const cplx mu(0.0, 1.0);
  std::mt19937_64 rng(311);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<ConeElement> family;
  family.push_back(time_element());
  family.push_back(tilted_element(0.5));
  family.push_back(linear_asymmetric(1.3, 0.2, 0.0, 1.0));
  const Region box{-4.0, 4.0, -4.1, 4.1};
  const double dx = 0.0125;
  const int n = 641;

  for (int trial = 0; trial < 10; ++trial) {
    // March a point mass along a causal curve on a fixed sheet; grid-snap the
    // positions so the pairings see exactly the sampled nodes.
    const Sheet sheet = trial % 2 ? Sheet::minus : Sheet::plus;
    double t = -1.0;
    double x = u(rng);
    auto snap = [&](double v) { return -4.0 + std::round((v + 4.0) / dx) * dx; };
    AcState prev = AcState::point_mass(t, snap(x), sheet, -4.0, dx, n);
    for (int step = 0; step < 8; ++step) {
      const double h = 0.3 + 0.2 * std::abs(u(rng));
      const double xprev = snap(x);
      t += h;
      x = xprev + 0.9 * u(rng) * h;
      AcState next = AcState::point_mass(t, snap(x), sheet, -4.0, dx, n);
      // Keep the hop causal after snapping.
      if (std::abs(snap(x) - xprev) <= h)
        CHECK_FALSE(refute_causality(prev, next, family, box, kGrid, mink, mu).has_value());
      prev = next;
    }
  }
}

TEST_CASE("cone element CSV round trip", "[cone]") {
  const auto a = linear_asymmetric(1.5, 0.3, -0.4, 0.7);
  const Region box{0.0, 2.0, -1.0, 1.0};
  std::stringstream ss;
  export_cone_element_csv(a, box, {41, 41}, ss);
  const auto back = import_cone_element_csv(ss, "roundtrip");

  // Values and gradients are linear, so bilinear interpolation and grid
  // differences reproduce them almost exactly away from the border.
  CHECK_THAT(back.f1.value(0.7, 0.3), WithinAbs(a.f1.value(0.7, 0.3), 1e-10));
  CHECK_THAT(back.f2.value(1.2, -0.6), WithinAbs(a.f2.value(1.2, -0.6), 1e-10));
  const auto g = back.f1.gradient(1.0, 0.0);
  CHECK_THAT(g[0], WithinAbs(1.5, 1e-9));
  CHECK_THAT(g[1], WithinAbs(0.3, 1e-9));
  CHECK(is_causal_element(back, {0.1, 1.9, -0.9, 0.9}, {11, 11}, MetricModel::minkowski(),
                          cplx(0, 1))
            .member);
  CHECK_THROWS_AS(back.f1.value(5.0, 0.0), std::domain_error);
}

TEST_CASE("finite-difference gradients back analytic-free elements", "[cone]") {
  ConeElement a{SheetField::finite_difference([](double t, double x) { return t + 0.25 * x * x; }),
                SheetField::finite_difference([](double t, double x) { return t + 0.25 * x * x; }),
                "fd"};
  const auto g = a.f1.gradient(0.0, 1.0);
  CHECK_THAT(g[0], WithinAbs(1.0, 1e-6));
  CHECK_THAT(g[1], WithinAbs(0.5, 1e-6));
  CHECK(
      is_causal_element(a, {-1, 1, -1.5, 1.5}, kGrid, MetricModel::minkowski(), cplx(0, 1)).member);
}
