#include <cmath>
#include <numbers>

#include "doctest.h"
#include "support.hpp"

using namespace brachi;
using testing_support::model;
using testing_support::Sampler;
using testing_support::vec;

TEST_CASE("metric_eval reads components") {
  const auto mk = model("minkowski3");
  CHECK(metric_eval(mk, vec({0, 0, 0}), vec({0, 0, 1}), vec({0, 0, 1})) == doctest::Approx(-1.0));
  CHECK(metric_eval(mk, vec({0, 0, 0}), vec({0, 0, 0}), vec({1, 2, 3})) == 0.0);
  const auto well = model("static_well");
  CHECK(metric_eval(well, vec({1, 0, 0}), vec({0, 0, 1}), vec({0, 0, 1})) == doctest::Approx(-2.0));
}

TEST_CASE("out of chart events are rejected") {
  const auto cyl = model("einstein_cylinder");
  CHECK_THROWS_AS(metric_eval(cyl, vec({0.01, 0, 0}), vec({1, 0, 0}), vec({1, 0, 0})), Error);
  try {
    killing_eval(cyl, vec({3.1, 0, 0}));
    FAIL("expected OutOfChart");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::OutOfChart);
  }
}

TEST_CASE("killing fields") {
  CHECK(killing_eval(model("minkowski3"), vec({1, 2, 3})).isApprox(vec({0, 0, 1})));
  CHECK(killing_eval(model("einstein_cylinder"), vec({1, 2, 3})).isApprox(vec({0, 0, 1})));
  CHECK(killing_eval(model("rotating_frame"), vec({0.5, 0.2, 0})).isApprox(vec({0, 0, 1})));
}

TEST_CASE("christoffel symbols") {
  const auto mk = model("minkowski3");
  const Christoffel g0 = connection_coeffs(mk, vec({0.3, -0.2, 1.0}));
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c) CHECK(g0(a, b, c) == 0.0);

  // Gamma^t_tx = d_x g_tt / (2 g_tt) = 2x / (2 (1 + x^2)) at a = 1
  const auto well = model("static_well");
  CHECK(connection_coeffs(well, vec({1, 0, 0}))(2, 2, 0) == doctest::Approx(0.5).epsilon(1e-14));

  Sampler s(7);
  for (const std::string name : {"einstein_cylinder", "static_well", "rotating_frame"}) {
    const auto mdl = model(name);
    for (int n = 0; n < 20; ++n) {
      const Vec q = testing_support::sample_point(name, s);
      const Christoffel an = mdl.christoffel(q), fd = mdl.christoffel_by_differences(q);
      double worst = 0.0;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          for (int c = 0; c < 3; ++c) {
            worst = std::max(worst, std::abs(an(a, b, c) - fd(a, b, c)));
            CHECK(an(a, b, c) == doctest::Approx(an(a, c, b)).epsilon(1e-13));
          }
      CHECK(worst < 1e-6);
    }
  }
}

TEST_CASE("stencil near the chart edge") {
  const auto cyl = model("einstein_cylinder", {{"fd_step", 1e-3}});
  try {
    curvature_tensor(cyl, vec({0.1 + 1e-4, 0, 0}));
    FAIL("expected StencilOutOfChart");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::StencilOutOfChart);
  }
}

TEST_CASE("curvature") {
  const Riemann flat = curvature_tensor(model("minkowski4"), vec({0.1, 0.2, 0.3, 0.4}));
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        for (int d = 0; d < 4; ++d) CHECK(flat(a, b, c, d) == 0.0);

  const auto cyl = model("einstein_cylinder");
  Sampler s(11);
  for (int n = 0; n < 20; ++n) {
    const Vec q = testing_support::sample_point("einstein_cylinder", s);
    const Riemann R = cyl.curvature(q);
    const Mat g = cyl.metric(q);
    // spatial sectional curvature of the unit sphere
    Vec u = s.box(3, -1, 1), v = s.box(3, -1, 1);
    u[2] = v[2] = 0.0;
    const double num = R.apply(u, v, v).dot(g * u);
    const double den = u.dot(g * u) * v.dot(g * v) - std::pow(u.dot(g * v), 2);
    CHECK(num / den == doctest::Approx(1.0).epsilon(1e-7));
    // anything involving d_t vanishes
    CHECK(R.apply(u, vec({0, 0, 1}), v).norm() < 1e-8);
  }
}

TEST_CASE("curvature symmetries on every model") {
  Sampler s(3);
  for (const std::string& name : model_names()) {
    const auto mdl = model(name);
    const int m = mdl.dim();
    for (int n = 0; n < 10; ++n) {
      const Vec q = testing_support::sample_point(name, s);
      const Riemann R = mdl.curvature(q);
      const Mat g = mdl.metric(q);
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
          for (int c = 0; c < m; ++c)
            for (int d = 0; d < m; ++d) CHECK(std::abs(R(a, b, c, d) + R(a, b, d, c)) < 1e-8);
      const Vec x = s.box(m, -1, 1), y = s.box(m, -1, 1), z = s.box(m, -1, 1), w = s.box(m, -1, 1);
      CHECK(std::abs(R.apply(x, y, z).dot(g * w) - R.apply(z, w, x).dot(g * y)) < 1e-8);
      CHECK(std::abs(R.apply(x, y, y).dot(g * x) - R.apply(y, x, x).dot(g * y)) < 1e-8);
      CHECK((R.apply(x, y, z) + R.apply(y, z, x) + R.apply(z, x, y)).norm() < 1e-6);
    }
  }
}

TEST_CASE("killing equation and flow invariance") {
  Sampler s(5);
  for (const std::string& name : model_names()) {
    const auto mdl = model(name);
    const int m = mdl.dim();
    for (int n = 0; n < 100; ++n) {
      const Vec q = testing_support::sample_point(name, s);
      const Vec v = s.box(m, -1, 1), w = s.box(m, -1, 1);
      const Mat g = mdl.metric(q), N = mdl.covariant_killing(q);
      CHECK(std::abs((N * v).dot(g * w) + (N * w).dot(g * v)) <= 1e-6 * v.norm() * w.norm());
    }
    const Vec q = testing_support::sample_point(name, s);
    CHECK(std::abs(mdl.killing_norm(mdl.flow(q, 0.3)) - mdl.killing_norm(q)) < 1e-8);
  }
}

TEST_CASE("flow of the rotating frame is a time shift") {
  const auto rot = model("rotating_frame");
  const Vec q = vec({0.4, -0.7, 0.25});
  CHECK((rot.flow(q, 0.8) - vec({0.4, -0.7, 1.05})).norm() < 1e-10);
  CHECK((rot.flow(q, -0.8) - vec({0.4, -0.7, -0.55})).norm() < 1e-10);
  const Mat dpsi = rot.flow_differential(q, 0.8);
  CHECK((dpsi - Mat::Identity(3, 3)).norm() < 1e-8);
}

TEST_CASE("auxiliary riemannian metric") {
  const auto mk = model("minkowski3");
  const Vec q = vec({0, 0, 0}), Y = vec({0, 0, 1}), h = vec({0.3, -2, 0});
  CHECK(riemannian_metric_eval(mk, q, Y, Y) == doctest::Approx(1.0));
  CHECK(riemannian_metric_eval(mk, q, h, h) == doctest::Approx(metric_eval(mk, q, h, h)));
  CHECK(riemannian_metric_eval(mk, q, Y, h) == doctest::Approx(0.0));

  Sampler s(9);
  for (const std::string& name : model_names()) {
    const auto mdl = model(name);
    const Vec p = testing_support::sample_point(name, s);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mdl.riemannian_metric(p));
    CHECK(es.eigenvalues().minCoeff() > 0.0);
    const Vec Yp = mdl.killing(p);
    CHECK(riemannian_metric_eval(mdl, p, Yp, Yp) == doctest::Approx(-mdl.killing_norm(p)));
  }
}

TEST_CASE("conformal factor and U_k") {
  const auto mk = model("minkowski3");
  const Vec q = vec({0, 0, 0});
  CHECK(conformal_factor(mk, q, 2.0) == doctest::Approx(1.0 / 3.0));
  CHECK(conformal_factor(mk, q, std::sqrt(2.0)) == doctest::Approx(1.0));
  CHECK_FALSE(uk_membership(mk, q, 0.5));
  CHECK(uk_membership(mk, q, 2.0));
  try {
    conformal_factor(mk, q, 1.0);
    FAIL("expected OutsideUk");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::OutsideUk);
  }
  const auto well = model("static_well");
  CHECK_FALSE(uk_membership(well, vec({2, 0, 0}), 2.0));
  CHECK(conformal_factor(well, vec({1, 0, 0}), 2.0) == doctest::Approx(1.0));
}

TEST_CASE("conformal geometry") {
  const auto mk = model("minkowski3");
  const ConformalGeometry flat = conformal_geometry(mk, std::sqrt(2.0));
  const Mat G = flat.metric(vec({0.2, 0.1, -0.4}));
  CHECK(G.block(0, 0, 2, 2).isApprox(Mat::Identity(2, 2)));
  const Christoffel C = flat.christoffel(vec({0.2, 0.1, -0.4}));
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c) CHECK(std::abs(C(a, b, c)) < 1e-12);

  // constant phi on the cylinder: spatial block is the round sphere
  const ConformalGeometry cyl = conformal_geometry(model("einstein_cylinder"), 2.0);
  const Vec q = vec({1.1, 0.4, 0.0});
  CHECK(cyl.phi(q) == doctest::Approx(1.0 / 3.0));
  CHECK(cyl.christoffel(q)(0, 1, 1) == doctest::Approx(-std::sin(1.1) * std::cos(1.1)).epsilon(1e-10));

  Sampler s(13);
  for (const std::string name : {"static_well", "rotating_frame", "einstein_cylinder"}) {
    const ConformalGeometry cg = conformal_geometry(model(name), 1.8);
    for (int n = 0; n < 10; ++n) {
      const Vec p = name == std::string("static_well") ? vec({s.uniform(-0.8, 0.8), s.uniform(-1, 1), 0.0})
                                                      : testing_support::sample_point(name, s);
      const Christoffel an = cg.christoffel(p), fd = cg.christoffel_by_differences(p);
      double worst = 0.0;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(an(a, b, c) - fd(a, b, c)));
      CHECK(worst < 1e-6);
    }
  }
}

TEST_CASE("orthonormal complement") {
  const auto well = model("static_well");
  const Vec q = vec({0.5, 0.1, 0});
  const Mat gr = well.riemannian_metric(q);
  const Mat E = orthonormal_complement(gr, well.killing(q));
  REQUIRE(E.cols() == 2);
  CHECK((E.transpose() * gr * E - Mat::Identity(2, 2)).norm() < 1e-12);
  CHECK((E.transpose() * gr * well.killing(q)).norm() < 1e-12);
}
