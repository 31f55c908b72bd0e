#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "dch/jacobi.hpp"

using namespace dch;
using Catch::Approx;

TEST_CASE("apply_jacobi: zero field and shape checks") {
  auto c = solve_generating_curve(0.5, 1e-12);
  auto g = spanning_grid(c, 3, 64);
  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(g.Ns + 1, g.Ntheta);
  CHECK(interior_max_abs(apply_jacobi(c, zero, g)) == 0.0);

  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(g.Ns, g.Ntheta);
  CHECK_THROWS_AS(apply_jacobi(c, bad, g), domain_error);

  auto coarse = spanning_grid(c, 3, 16);
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(coarse.Ns + 1, coarse.Ntheta);
  CHECK_THROWS_AS(apply_jacobi(c, f, coarse), domain_error);
}

TEST_CASE("apply_jacobi: cylinder closed-form solution at second order") {
  auto cyl = cylinder_curve();
  auto residual = [&](int per) {
    auto g = spanning_grid(cyl, 3, per);
    Eigen::MatrixXd f(g.Ns + 1, g.Ntheta);
    for (int i = 0; i <= g.Ns; ++i)
      for (int j = 0; j < g.Ntheta; ++j) f(i, j) = std::sin(g.s_at(i));
    return interior_max_abs(apply_jacobi(cyl, f, g));
  };
  double r1 = residual(64), r2 = residual(128);
  CHECK(r1 < 1e-2);
  double order = std::log2(r1 / r2);
  CHECK(order > 1.8);
  CHECK(order < 2.2);
}

TEST_CASE("geometric fields: cylinder limit values") {
  auto cyl = cylinder_curve();
  auto g = spanning_grid(cyl, 3, 64);
  auto fields = geometric_fields(cyl, g);
  const auto& t1 = fields[0];
  for (int i : {0, g.Ns / 2, g.Ns})
    for (int j = 0; j < g.Ntheta; ++j)
      CHECK(t1.values(i, j) == Approx(-std::cos(g.theta_at(j))).margin(1e-9));
}

TEST_CASE("geometric fields: vertical translation vanishes at the neck") {
  auto c = solve_generating_curve(0.6, 1e-12);
  auto g = spanning_grid(c, 3, 128);
  auto fields = geometric_fields(c, g);
  const auto& t3 = fields[2];
  REQUIRE(t3.kind == FieldKind::T3);
  CHECK(t3.values(0, 0) == Approx(0.0).margin(1e-10));
  CHECK(std::abs(t3.values(g.Ns / 4, 0)) > 0.01);
}

TEST_CASE("geometric fields: bounded sup equals the axial normal extreme") {
  auto c = solve_generating_curve(0.35, 1e-12);
  auto g = spanning_grid(c, 3, 256);
  auto fields = geometric_fields(c, g);
  double sup = fields[0].values.cwiseAbs().maxCoeff();
  // |N_radial| = tau cosh(sigma) reaches 1 where sigma' = 0 (neck and bulge).
  CHECK(sup == Approx(1.0).margin(1e-3));
}

TEST_CASE("all six fields annihilated by the operator at second order") {
  auto c = solve_generating_curve(0.6, 1e-12);
  // Refine both grid directions together: the rotation fields grow linearly in s,
  // so a fixed theta resolution would leave an h_theta^2 floor at the window ends.
  auto res_at = [&](int per) {
    auto g = spanning_grid(c, 3, per, per / 2);
    auto fields = geometric_fields(c, g);
    std::array<double, 6> r{};
    for (int k = 0; k < 6; ++k)
      r[k] = interior_max_abs(apply_jacobi(c, fields[k].values, g));
    return r;
  };
  auto r1 = res_at(128), r2 = res_at(256);
  for (int k = 0; k < 6; ++k) {
    INFO("field " << to_string(FieldKind(k)));
    CHECK(r1[k] < 1.0);
    double order = std::log2(r1[k] / r2[k]);
    CHECK(order > 1.7);
    CHECK(order < 2.4);
  }
}

TEST_CASE("family-parameter field converges as the tau step shrinks") {
  auto c = solve_generating_curve(0.55, 1e-12);
  auto g = spanning_grid(c, 2, 64);
  auto phiD = [&](double dtau) {
    return geometric_fields(c, g, dtau)[5].values;
  };
  Eigen::MatrixXd ref = phiD(5e-4);
  double e1 = (phiD(0.04) - ref).cwiseAbs().maxCoeff();
  double e2 = (phiD(0.02) - ref).cwiseAbs().maxCoeff();
  double e3 = (phiD(0.01) - ref).cwiseAbs().maxCoeff();
  CHECK(e2 < e1);
  CHECK(e3 < e2);
  CHECK(std::log2(e1 / e3) / 2.0 > 1.7);  // at least second order in the step
}

TEST_CASE("angular structure: theta dependence is pure per field") {
  auto c = solve_generating_curve(0.6, 1e-12);
  auto g = spanning_grid(c, 3, 96);
  auto fields = geometric_fields(c, g);
  for (int k : {2, 5}) {  // T3, D: functions of s only
    double vary = 0;
    for (int i = 0; i <= g.Ns; ++i) {
      double row0 = fields[k].values(i, 0);
      for (int j = 0; j < g.Ntheta; ++j)
        vary = std::max(vary, std::abs(fields[k].values(i, j) - row0));
    }
    CHECK(vary <= 1e-12);
  }
  for (int k : {0, 3}) {  // T1, R1: amplitude times cos(theta)
    double defect = 0;
    for (int i = 0; i <= g.Ns; ++i) {
      double amp = fields[k].values(i, 0);
      for (int j = 0; j < g.Ntheta; ++j)
        defect = std::max(defect,
                          std::abs(fields[k].values(i, j) - amp * std::cos(g.theta_at(j))));
    }
    CHECK(defect <= 1e-10);
  }
}

TEST_CASE("mode energies concentrate in the declared angular mode") {
  auto c = solve_generating_curve(0.6, 1e-12);
  auto g = spanning_grid(c, 3, 96);
  auto fields = geometric_fields(c, g);
  for (const auto& f : fields) {
    auto e = mode_energies(f);
    double total = 0;
    for (double v : e) total += v;
    REQUIRE(total > 0);
    CHECK(e[f.angular_mode] / total >= 0.999);
  }

  // Linearity: a T1 + T3 mixture splits its energy exactly between modes 1 and 0.
  JacobiField mix = fields[0];
  mix.values += fields[2].values;
  auto em = mode_energies(mix);
  auto e0 = mode_energies(fields[2]);
  auto e1 = mode_energies(fields[0]);
  CHECK(em[0] == Approx(e0[0]).epsilon(1e-10));
  CHECK(em[1] == Approx(e1[1]).epsilon(1e-10));
}

TEST_CASE("window growth separates bounded from linear fields") {
  auto c = solve_generating_curve(0.6, 1e-12);
  auto g = spanning_grid(c, 6, 128);
  auto fields = geometric_fields(c, g);
  for (const auto& f : fields) {
    auto [slope, intercept] = window_growth(f, g, c);
    INFO("field " << to_string(f.kind));
    if (f.growth_class == GrowthClass::bounded) {
      CHECK(std::abs(slope) * c.s_period <= 1e-6 * intercept);
    } else {
      CHECK(slope * c.s_period >= 0.05 * intercept);
    }
  }
}

TEST_CASE("six fields are numerically independent on a three-period window") {
  auto c = solve_generating_curve(0.6, 1e-12);
  auto g = spanning_grid(c, 3, 128);
  auto fields = geometric_fields(c, g);
  Eigen::MatrixXd gram(6, 6);
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b)
      gram(a, b) = (fields[a].values.array() * fields[b].values.array()).sum() *
                   g.hs() * g.htheta();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  double cond = es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff();
  CHECK(es.eigenvalues().minCoeff() > 0);
  CHECK(cond < 1e6);
}

TEST_CASE("temperate kernel count is six across the family") {
  for (double tau : {0.3, 0.6}) {
    auto c = solve_generating_curve(tau, 1e-12);
    auto tc = temperate_kernel_count(c, 8);
    CHECK(tc.count == 6);
    REQUIRE(tc.per_mode.size() == 9);
    CHECK(std::abs(tc.per_mode[0].discriminant - 2.0) <= 1e-8);
    CHECK(std::abs(tc.per_mode[1].discriminant - 2.0) <= 1e-8);
    for (int n = 2; n <= 8; ++n)
      CHECK(tc.per_mode[n].classification == HillClass::hyperbolic);
  }
  auto c = solve_generating_curve(0.5, 1e-12);
  CHECK_THROWS_AS(temperate_kernel_count(c, 1), domain_error);
}

TEST_CASE("tau step leaving the family is rejected") {
  auto c = solve_generating_curve(0.05, 1e-12);
  auto g = spanning_grid(c, 2, 64);
  CHECK_THROWS_AS(geometric_fields(c, g, 0.06), domain_error);
}
