#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <complex>

#include "dch/delaunay.hpp"
#include "dch/floquet.hpp"
#include "dch/transform.hpp"

using namespace dch;
using Catch::Approx;

static dvec const_potential(double c, int N) { return dvec(N + 1, c); }

TEST_CASE("monodromy: free particle over 2*pi") {
  auto M = monodromy(const_potential(0.0, 256), 2 * pi);
  CHECK(M.a == Approx(1.0).margin(1e-12));
  CHECK(M.b == Approx(2 * pi).margin(1e-10));
  CHECK(M.c == Approx(0.0).margin(1e-12));
  CHECK(M.d == Approx(1.0).margin(1e-12));
}

TEST_CASE("monodromy: constant coefficient closed forms") {
  double c = 2.3, P = 1.7;
  auto M = monodromy(const_potential(c, 200), P);
  CHECK(M.trace() == Approx(2 * std::cos(std::sqrt(c) * P)).margin(1e-10));
  CHECK(M.det() == Approx(1.0).margin(1e-10));

  auto Mh = monodromy(const_potential(-3.0, 1024), 2 * pi);
  double expect = 2 * std::cosh(2 * pi * std::sqrt(3.0));
  CHECK(Mh.trace() == Approx(expect).epsilon(1e-8));
}

TEST_CASE("monodromy input validation") {
  CHECK_THROWS_AS(monodromy(const_potential(1.0, 32), 1.0), domain_error);
}

TEST_CASE("monodromy convergence order is four") {
  double P = 2.0;
  auto make = [&](int N) {
    dvec q(N + 1);
    for (int i = 0; i <= N; ++i) q[i] = 1.0 + 0.3 * std::cos(2 * pi * i / double(N));
    return monodromy(q, P).trace();
  };
  double d1 = make(128), d2 = make(256), d3 = make(512);
  double order = std::log2(std::abs(d1 - d2) / std::abs(d2 - d3));
  CHECK(order > 3.5);
  CHECK(order < 4.6);
}

TEST_CASE("hill analysis on the cylinder limit") {
  auto cyl = cylinder_curve();
  auto h0 = hill_analyze(cyl, 0);
  CHECK(h0.discriminant == Approx(2.0).margin(1e-9));
  CHECK(h0.classification == HillClass::parabolic);
  CHECK_FALSE(h0.jordan);  // rotation by 2*pi is the identity: full kernel

  auto h1 = hill_analyze(cyl, 1);
  CHECK(h1.discriminant == Approx(2.0).margin(1e-9));
  CHECK(h1.classification == HillClass::parabolic);
  CHECK(h1.jordan);

  auto h2 = hill_analyze(cyl, 2);
  CHECK(h2.classification == HillClass::hyperbolic);
  CHECK(h2.discriminant == Approx(2 * std::cosh(2 * pi * std::sqrt(3.0))).epsilon(1e-8));
}

TEST_CASE("hill analysis across the family: structural modes and gaps") {
  for (double tau : {0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}) {
    auto c = solve_generating_curve(tau, 1e-12);
    for (int n = 0; n <= 8; ++n) {
      auto h = hill_analyze(c, n);
      CHECK(h.det_defect <= 1e-10);
      if (n <= 1) {
        CHECK(std::abs(h.discriminant - 2.0) <= 1e-8);
        CHECK(h.classification == HillClass::parabolic);
        CHECK(h.jordan);
      } else {
        CHECK(h.discriminant - 2.0 >= 0.01);
        CHECK(h.classification == HillClass::hyperbolic);
      }
      auto m1 = std::exp(h.floquet_exponents[0] * c.s_period);
      auto m2 = std::exp(h.floquet_exponents[1] * c.s_period);
      CHECK(std::abs(m1 * m2 - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("exact periodic solution of the n = 0 stability equation") {
  // sigma' solves v'' + q0 v = 0; check by direct substitution on the samples.
  auto c = solve_generating_curve(0.37, 1e-12);
  int N = int(c.sigma.size()) - 1;
  double h = c.s_period / N;
  double worst = 0;
  for (int i = 1; i < N; ++i) {
    double q0 = sqr(c.tau) * std::cosh(2 * c.sigma[i]);
    double vpp = (c.dsigma[i + 1] - 2 * c.dsigma[i] + c.dsigma[i - 1]) / (h * h);
    worst = std::max(worst, std::abs(vpp + q0 * c.dsigma[i]));
  }
  CHECK(worst < 50 * h * h);
}

TEST_CASE("transform: delta sequence has unit modulus transform") {
  cvec h = {1.0};
  auto pair = forward_transform(h, 0, 0.0, 0.0, 32);
  for (auto& v : pair.values) CHECK(std::abs(v) == Approx(1.0).margin(1e-13));
  CHECK(std::abs(inverse_transform(pair, 0) - 1.0) < 1e-13);
}

TEST_CASE("transform: Plancherel balance on a two-sided decaying sequence") {
  int K = 30;
  cvec h;
  for (int k = -K; k <= K; ++k) h.push_back(std::exp(-std::abs(double(k))));
  auto pair = forward_transform(h, -K, 0.0, 0.0, int(h.size()));
  auto [lhs, rhs] = plancherel_sides(pair);
  CHECK(lhs == Approx(rhs).epsilon(1e-8));
}

TEST_CASE("transform: round trip with offset lattice and nonzero path height") {
  uint64_t seed = 7;
  int K = 10;
  cvec h;
  for (int k = -K; k < K; ++k)
    h.push_back({splitmix_unit(seed), splitmix_unit(seed)});
  auto pair = forward_transform(h, -K, 0.37, 0.2, 64);
  for (int k = -K; k < K; ++k) {
    auto back = inverse_transform(pair, k);
    CHECK(std::abs(back - h[size_t(k + K)]) < 1e-10);
  }
}

TEST_CASE("transform: path-shift independence without pole crossing") {
  cvec h;
  int k0 = -1;
  for (int k = k0; k <= 40; ++k) h.push_back(std::exp(-2.0 * (k - k0)));
  auto p0 = forward_transform(h, k0, 0.0, 0.0, 64);
  auto p1 = forward_transform(h, k0, 0.0, 0.1, 64);
  for (int k : {-1, 0, 3, 11}) {
    auto a = inverse_transform(p0, k);
    auto b = inverse_transform(p1, k);
    CHECK(std::abs(a - b) < 1e-8);
  }
}

TEST_CASE("transform: period-T reduction matches the direct series") {
  double T = 5.105;
  double nu = 0.07;
  uint64_t seed = 99;
  int K = 8;
  cvec h;
  for (int k = -K; k < K; ++k) h.push_back({splitmix_unit(seed), splitmix_unit(seed)});
  double x0 = 0.31;  // lattice offset in the rescaled variable; s-offset is T*x0
  auto pair = forward_transform_T(h, -K, x0, T, nu, 48);
  for (int q = 0; q < pair.Q(); ++q) {
    double mu = 2 * pi * q / pair.Q();
    std::complex<double> direct = 0;
    for (int k = -K; k < K; ++k) {
      double s = T * (x0 + k);
      std::complex<double> zeta(mu, nu * T);
      direct += h[size_t(k + K)] * std::exp(std::complex<double>(0, -1.0) * zeta * (s / T));
    }
    CHECK(std::abs(direct - pair.values[size_t(q)]) < 1e-10);
  }
  // weight accounting: the pulled-back pair inverts to the original samples
  for (int k = -K; k < K; ++k)
    CHECK(std::abs(inverse_transform(pair, k) - h[size_t(k + K)]) < 1e-10);
}

TEST_CASE("transform: truncation warning and grid validation") {
  cvec flat(21, 1.0);
  auto p = forward_transform(flat, -10, 0.0, 0.0, 32);
  CHECK(p.truncation_warning);
  cvec decaying;
  for (int k = -10; k <= 10; ++k) decaying.push_back(std::exp(-3.0 * std::abs(double(k))));
  auto q = forward_transform(decaying, -10, 0.0, 0.0, 32);
  CHECK_FALSE(q.truncation_warning);
  CHECK_THROWS_AS(forward_transform(flat, -10, 0.0, 0.0, 8), domain_error);
}
