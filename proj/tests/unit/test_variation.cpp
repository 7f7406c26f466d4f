#include <cmath>
#include <numbers>

#include "brachi/transform.hpp"
#include "brachi/variation.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace brachi;
using testing_support::ConstrainedFamily;
using testing_support::model;
using testing_support::Sampler;
using testing_support::vec;

namespace {

const double kPi = std::numbers::pi;
const double kSqrt2 = std::numbers::sqrt2;

// int |z|_R^2 + |nabla z|_R^2
double h1_norm2(const SpacetimeModel& mdl, const Curve& c, const FieldAlongCurve& z) {
  const FieldAlongCurve dz = covariant_derivative_along(mdl, c, z, DiffOrder::Fourth);
  std::vector<double> f(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Mat gR = mdl.riemannian_metric(c.q[i]);
    f[i] = z.values[i].dot(gR * z.values[i]) + dz.values[i].dot(gR * dz.values[i]);
  }
  return integrate(c.t, f);
}

FieldAlongCurve along(const Curve& c, const std::function<Vec(double)>& f, const std::function<Vec(double)>& df) {
  FieldAlongCurve out;
  std::vector<Tangent> rates;
  for (double t : c.t) {
    out.values.push_back(f(t));
    rates.push_back(df(t));
  }
  out.rates = std::move(rates);
  return out;
}

struct CriticalCase {
  std::string name;
  double k, T;
  Vec p, seed;
};

std::vector<CriticalCase> critical_cases() {
  return {{"minkowski3", 1.5, 0.8, vec({0.1, -0.2, 0.0}), vec({1, 0.3, 0})},
          {"static_well", 1.6, 0.8, vec({0.1, 0.1, 0.0}), vec({1, 0.4, 0})},
          {"rotating_frame", 1.5, 0.8, vec({0.2, -0.1, 0.0}), vec({0.3, 1, 0})}};
}

// Equator of the cylinder's sphere traversed with g_R-length L.
Curve equator(int N, double L) {
  return testing_support::sampled_curve(N, [L](double t) { return std::pair{vec({kPi / 2, L * t, 0}), vec({0, L, 0})}; });
}

}  // namespace

TEST_CASE("tangent-space constraints") {
  const auto mk = model("minkowski3");
  const double k = 1.5, T = 0.8;
  const auto sol = integrate_brachistochrone(mk, k, vec({0, 0, 0}), vec({1, 0, 0}), T);
  const auto zero = along(sol.sigma, [](double) { return vec({0, 0, 0}); }, [](double) { return vec({0, 0, 0}); });
  auto rep = constraint_residual(mk, sol, zero);
  CHECK(rep.C_zeta == 0.0);
  CHECK(rep.residual_Y == 0.0);
  CHECK(rep.residual_speed == 0.0);
  CHECK(rep.boundary_ok);
  CHECK(travel_time_differential(mk, sol, zero) == 0.0);

  // a Y, a(t) = 0.3 t: <nabla z, Y> = a' <Y,Y> = -0.3 everywhere
  const auto along_y = along(sol.sigma, [](double t) { return vec({0, 0, 0.3 * t}); }, [](double) { return vec({0, 0, 0.3}); });
  rep = constraint_residual(mk, sol, along_y);
  CHECK(rep.C_zeta == doctest::Approx(-0.3).epsilon(1e-12));
  CHECK(rep.residual_Y < 1e-6);
  CHECK(rep.boundary_ok);

  const auto wild = along(sol.sigma, [](double t) { return vec({std::sin(kPi * t), 0, 0}); },
                          [](double t) { return vec({kPi * std::cos(kPi * t), 0, 0}); });
  rep = constraint_residual(mk, sol, wild);
  CHECK(rep.residual_speed >= 1e-3);
  try {
    travel_time_differential(mk, sol, wild);
    FAIL("expected ConstraintViolated");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ConstraintViolated);
  }
  FieldAlongCurve short_field = zero;
  short_field.values.pop_back();
  short_field.rates.reset();
  CHECK_THROWS_AS(constraint_residual(mk, sol, short_field), Error);
}

TEST_CASE("travel time differential against finite differences") {
  Sampler s(3);
  for (const std::string name : {"minkowski3", "static_well", "rotating_frame"}) {
    const auto mdl = model(name);
    const double k = 1.6;
    brachi::CurveMap wiggly = [](double t) {
      return std::pair<Event, Tangent>{vec({0.1 + 0.5 * t, 0.2 * std::sin(3 * t), 0.05 * t}),
                                       vec({0.5, 0.6 * std::cos(3 * t), 0.05})};
    };
    for (int n = 0; n < 3; ++n) {
      ConstrainedFamily fam{&mdl, k, wiggly, testing_support::random_bump(s, 3, 0.2)};
      const auto base = fam.member(0.0);
      const FieldAlongCurve z = fam.field();
      const double h = 1e-4;
      const double fd = (fam.member(h).T - fam.member(-h).T) / (2 * h);
      const double dT = travel_time_differential(mdl, base, z);
      INFO(name << " " << n);
      CHECK(std::abs(fd - dT) < 1e-4 * std::abs(fd));
    }
  }
  // at a brachistochrone every admissible direction is stationary
  for (const CriticalCase& c : critical_cases()) {
    const auto mdl = model(c.name);
    const auto sol = integrate_brachistochrone(mdl, c.k, c.p, horizontal_unit(mdl, c.p, c.seed), c.T);
    ConstrainedFamily fam{&mdl, c.k, testing_support::interpolant(sol.sigma), testing_support::random_bump(s, 3, 0.2)};
    CHECK(std::abs(travel_time_differential(mdl, fam.member(0.0), fam.field())) < 1e-7);
  }
}

TEST_CASE("Hessian of the action in flat space") {
  const auto mk = model("minkowski3");
  const double k = 1.5, T = 0.8;
  const auto sol = integrate_brachistochrone(mk, k, vec({0, 0, 0}), vec({1, 0, 0}), T);
  const auto z = along(sol.sigma, [](double t) { return vec({0, std::sin(kPi * t), 0}); },
                       [](double t) { return vec({0, kPi * std::cos(kPi * t), 0}); });
  const double expected = -(kPi * kPi / 2) / (k * k - 1);
  CHECK(hessian_F_eval(mk, sol, z, z) == doctest::Approx(expected).epsilon(1e-8));
  const auto zero = along(sol.sigma, [](double) { return vec({0, 0, 0}); }, [](double) { return vec({0, 0, 0}); });
  CHECK(hessian_F_eval(mk, sol, zero, zero) == 0.0);

  // not a brachistochrone
  auto c = [](double t) {
    return std::pair<Event, Tangent>{vec({t, 0.2 * std::sin(3 * t), 0.0}), vec({1, 0.6 * std::cos(3 * t), 0.0})};
  };
  const auto bent = constrained_curve(mk, k, c, 400);
  try {
    hessian_F_eval(mk, bent, zero, zero);
    FAIL("expected NotCritical");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotCritical);
  }
}

TEST_CASE("second variation: finite differences, symmetry, and the deformed Hessian") {
  Sampler s(11);
  for (const CriticalCase& c : critical_cases()) {
    const auto mdl = model(c.name);
    const auto sol0 = integrate_brachistochrone(mdl, c.k, c.p, horizontal_unit(mdl, c.p, c.seed), c.T);
    ConstrainedFamily f1{&mdl, c.k, testing_support::interpolant(sol0.sigma), testing_support::random_bump(s, 3, 0.3)};
    ConstrainedFamily f2{&mdl, c.k, testing_support::interpolant(sol0.sigma), testing_support::random_bump(s, 3, 0.3)};
    const auto sol = f1.member(0.0);
    const FieldAlongCurve z1 = f1.field(), z2 = f2.field();
    INFO(c.name);

    // d^2/ds^2 of F = -T^2/2 along the family
    const double h = 1e-3;
    auto F = [&](double x) { const double t = f1.member(x).T; return -0.5 * t * t; };
    const double fd2 = (F(h) - 2 * F(0.0) + F(-h)) / (h * h);
    const double HF = hessian_F_eval(mdl, sol, z1, z1);
    CHECK(std::abs(HF - fd2) < 1e-3 * std::abs(fd2));
    // H^F = -T H^T with H^T the second derivative of T
    const double fdT = (f1.member(h).T - 2 * sol.T + f1.member(-h).T) / (h * h);
    const double scale = 1.0 + h1_norm2(mdl, sol.sigma, z1);
    CHECK(std::abs(HF + sol.T * fdT) < 1e-6 * scale);

    const double h12 = hessian_F_eval(mdl, sol, z1, z2), h21 = hessian_F_eval(mdl, sol, z2, z1);
    CHECK(std::abs(h12 - h21) < 1e-10 * (1.0 + std::abs(h12)));

    // H^F = -H^E(dD z, dD z)
    const Curve w = deform_D(mdl, sol);
    const FieldAlongCurve v1 = dD_differential(mdl, sol, z1), v2 = dD_differential(mdl, sol, z2);
    const double scale12 = 1.0 + std::sqrt(h1_norm2(mdl, sol.sigma, z1) * h1_norm2(mdl, sol.sigma, z2));
    CHECK(std::abs(HF + hessian_E_lorentzian(mdl, c.k, w, v1, v1)) < 1e-5 * scale);
    CHECK(std::abs(h12 + hessian_E_lorentzian(mdl, c.k, w, v1, v2)) < 1e-5 * scale12);

    // conformal Riemannian form, run from the observer line back to p
    const ConformalGeometry cg(mdl, c.k);
    const Curve back = reverse_curve(w);
    const double riem = hessian_E_eval(cg, back, reverse_field(v1), reverse_field(v2));
    CHECK(std::abs(riem - hessian_E_lorentzian(mdl, c.k, w, v1, v2)) < 1e-6 * scale12);
    const double e12 = hessian_E_eval(cg, back, reverse_field(v1), reverse_field(v2));
    const double e21 = hessian_E_eval(cg, back, reverse_field(v2), reverse_field(v1));
    CHECK(std::abs(e12 - e21) < 1e-10 * (1.0 + std::abs(e12)));
  }
}

TEST_CASE("index form on the cylinder") {
  const auto cyl = model("einstein_cylinder");
  const ConformalGeometry cg(cyl, kSqrt2);  // conformal factor 1
  const Vec n = vec({1, 0, 0});  // unit normal to the equator
  for (double L : {kPi / 2, 3 * kPi / 2}) {
    const Curve w = equator(400, L);
    const auto V = along(w, [&](double t) { return Vec(std::sin(kPi * t) * n); },
                         [&](double t) { return Vec(kPi * std::cos(kPi * t) * n); });
    const double value = hessian_E_eval(cg, w, V, V);
    CHECK(value == doctest::Approx((kPi * kPi - L * L) / 2).epsilon(1e-6));
    CHECK(index_form(cg, w, V, V) == doctest::Approx(value).epsilon(1e-12));
  }
  // Jacobi field vanishing at both ends of a half great circle
  const Curve w = equator(400, kPi);
  const auto J = along(w, [&](double t) { return Vec(std::sin(kPi * t) * n); },
                       [&](double t) { return Vec(kPi * std::cos(kPi * t) * n); });
  const auto V = along(w, [&](double t) { return vec({std::sin(2 * kPi * t), t * (1 - t), 0.3 * std::sin(kPi * t)}); },
                       [&](double t) { return vec({2 * kPi * std::cos(2 * kPi * t), 1 - 2 * t, 0.3 * kPi * std::cos(kPi * t)}); });
  CHECK(std::abs(index_form(cg, w, J, V)) < 1e-5);
  CHECK(std::abs(index_form(cg, w, J, V) - index_form(cg, w, V, J)) < 1e-10);

  // flat: phi int <V1', V2'>
  const auto mk = model("minkowski3");
  const ConformalGeometry flat(mk, 1.5);
  const Curve line = testing_support::sampled_curve(200, [](double t) { return std::pair{vec({t, 0, 0}), vec({1, 0, 0})}; });
  const auto a = along(line, [](double t) { return vec({0, t * t, 0}); }, [](double t) { return vec({0, 2 * t, 0}); });
  const auto b = along(line, [](double t) { return vec({0, t, t}); }, [](double) { return vec({0, 1, 1}); });
  CHECK(index_form(flat, line, a, b) == doctest::Approx(flat.phi(line.q[0]) * 1.0).epsilon(1e-10));

  Curve bent = testing_support::sampled_curve(200, [](double t) { return std::pair{vec({t, t * t, 0}), vec({1, 2 * t, 0})}; });
  try {
    index_form(flat, bent, a, a);
    FAIL("expected NotGeodesic");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotGeodesic);
  }
}

TEST_CASE("second fundamental form of the observer line") {
  const auto mk = model("minkowski3");
  CHECK(second_fundamental_form_gamma(mk, vec({0, 0, 0}), vec({1, 0, 0}), vec({0, 0, 2}), vec({0, 0, 1})) == 0.0);
  const auto cyl = model("einstein_cylinder");
  CHECK(std::abs(second_fundamental_form_gamma(cyl, vec({1, 1, 0}), vec({1, 0, 0}), vec({0, 0, 1}), vec({0, 0, 1}))) < 1e-12);

  const double a = 0.5;
  const auto well = model("static_well", {{"a", a}});
  const Vec q = vec({1.0, 0.2, 0.0});
  const Vec n = vec({0.6, -0.8, 0.0});
  // <nabla_Y Y, n> = -1/2 d<Y,Y>(n) for a Killing field
  const double step = 1e-4;
  auto yy = [&](const Vec& x) { return well.killing_norm(x); };
  const double expected = -0.5 * (yy(q + step * n) - yy(q - step * n)) / (2 * step) * 2.0 * 3.0;
  const double value = second_fundamental_form_gamma(well, q, n, vec({0, 0, 2}), vec({0, 0, 3}));
  CHECK(std::abs(value - expected) < 1e-6);
  CHECK(second_fundamental_form_gamma(well, q, n, vec({0, 0, 4}), vec({0, 0, 3})) == doctest::Approx(2 * value));
  try {
    second_fundamental_form_gamma(well, q, vec({0, 0, 1}), vec({0, 0, 1}), vec({0, 0, 1}));
    FAIL("expected NotNormal");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotNormal);
  }
  try {
    second_fundamental_form_gamma(well, q, n, vec({1, 0, 1}), vec({0, 0, 1}));
    FAIL("expected NotTangentToGamma");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotTangentToGamma);
  }
}

TEST_CASE("discrete Morse index") {
  const auto mk = model("minkowski3");
  const ConformalGeometry flat(mk, 1.5);
  const Curve line = integrate_conformal_geodesic(flat, vec({0, 0, 0}), vec({1, 0.5, 0}));
  const auto H = assemble_hessian(flat, line, BoundaryConditions::Full, 40);
  CHECK(H.n_negative == 0);
  CHECK((H.entries - H.entries.transpose()).norm() <= 1e-10 * H.entries.norm());
  const auto flat_r = restricted_index_report(flat, line, 40);
  CHECK(flat_r.full == 0);
  CHECK(flat_r.equal());

  const auto cyl = model("einstein_cylinder");
  const ConformalGeometry cg(cyl, 1.8);
  for (auto [L, index] : {std::pair{1.5 * kPi, 1}, std::pair{2.5 * kPi, 2}, std::pair{0.6 * kPi, 0}}) {
    const Curve w = integrate_conformal_geodesic(cg, vec({kPi / 2, 0, 0}), vec({0, L, 0}));
    INFO("L/pi = " << L / kPi);
    for (int nb : {50, 100}) {
      const auto r = restricted_index_report(cg, w, nb);
      CHECK(r.full == index);
      CHECK(r.horizontal == index);
      CHECK(r.perpendicular == index);
    }
    auto M = assemble_hessian(cg, w, BoundaryConditions::Full, 50);
    const int base = M.n_negative;
    classify_eigenvalues(M, 1e-5);
    CHECK(M.n_negative == base);
    classify_eigenvalues(M, 1e-7);
    CHECK(M.n_negative == base);
  }
  // tilted circle, same counts
  const Vec p = vec({1.2, 0.4, 0.0});
  const Curve tilted = integrate_conformal_geodesic(cg, p, 1.5 * kPi * horizontal_unit(cyl, p, vec({0.6, 1.0, 0.0})));
  CHECK(restricted_index_report(cg, tilted, 60).full == 1);

  // degenerate endpoint: exactly one conjugate half-turn
  const Curve half = integrate_conformal_geodesic(cg, vec({kPi / 2, 0, 0}), vec({0, kPi, 0}));
  try {
    restricted_index_report(cg, half, 50);
    FAIL("expected FocalEndpoint");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::FocalEndpoint);
  }
}
