#include <catch2/catch_amalgamated.hpp>
#include <map>
#include <tuple>

#include "dch/chsolver.hpp"

using namespace dch;
using Catch::Approx;

namespace {

const GeneratingCurve& curve(double tau) {
  static std::map<double, GeneratingCurve> cache;
  auto it = cache.find(tau);
  if (it == cache.end()) it = cache.emplace(tau, solve_generating_curve(tau)).first;
  return it->second;
}

const Profile1D& profile(double eps) {
  static std::map<double, Profile1D> cache;
  auto it = cache.find(eps);
  if (it == cache.end()) it = cache.emplace(eps, solve_profile(eps, 1.0, 20.0, 0.005)).first;
  return it->second;
}

const CHSolution& solved(double tau, double eps, int n) {
  static std::map<std::tuple<double, double, int>, CHSolution> cache;
  auto key = std::make_tuple(tau, eps, n);
  auto it = cache.find(key);
  if (it == cache.end()) {
    const GeneratingCurve& c = curve(tau);
    it = cache.emplace(key, newton_solve(c, profile(eps), make_grid(c, n, n))).first;
  }
  return it->second;
}

}  // namespace

TEST_CASE("grid spec and quadrature weights") {
  const GeneratingCurve& c = curve(0.6);
  GridSpec g = make_grid(c, 96, 96);
  CHECK(g.Rmax == Approx(c.rho_bulge() + 1.0).margin(1e-14));
  CHECK(g.hz() == Approx(0.5 * c.T_period / 96).margin(1e-14));

  dvec rw = radial_weights(g), zw = axial_weights(g);
  double rsum = 0, zsum = 0;
  for (double w : rw) rsum += w;
  for (double w : zw) zsum += w;
  CHECK(rsum == Approx(0.5 * g.Rmax * g.Rmax).margin(1e-12));
  CHECK(zsum == Approx(0.5 * c.T_period).margin(1e-12));

  Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(g.Nz + 1, g.Nr + 1);
  CHECK(mean_of(ones, g) == Approx(1.0).margin(1e-13));
}

TEST_CASE("constant far-field state has zero residual") {
  const GeneratingCurve& c = curve(0.6);
  GridSpec g = make_grid(c, 96, 96);
  double ell = -0.4;
  auto [sp, sm] = far_field_roots(0.1, ell);
  (void)sp;
  Eigen::MatrixXd u = Eigen::MatrixXd::Constant(g.Nz + 1, g.Nr + 1, -1.0 + sm);
  Eigen::MatrixXd F = residual_field(u, ell, g, 0.1);
  CHECK(F.cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("initial guess hits the far-field plateaus") {
  const GeneratingCurve& c = curve(0.6);
  const Profile1D& p = profile(0.1);
  GridSpec g = make_grid(c, 96, 96);
  Eigen::MatrixXd ts, sf;
  fermi_grid(c, g, ts, sf);
  Eigen::MatrixXd u0 = initial_guess(c, p, g, ts);

  // axis node under the bulge is ~18 widths from the interface
  auto [sp, sm] = far_field_roots(p.epsilon, p.ell);
  CHECK(ts(g.Nz, 0) == Approx(c.rho_bulge()).margin(1e-6));
  CHECK(u0(g.Nz, 0) == Approx(1.0 + sp).margin(1e-10));
  for (int j = 0; j <= g.Nz; ++j) CHECK(u0(j, g.Nr) == Approx(-1.0 + sm).margin(1e-15));

  double sbar = 2.0 * std::max(std::abs(sp), std::abs(sm));
  CHECK(u0.cwiseAbs().maxCoeff() <= 1.0 + sbar + 1e-12);
}

TEST_CASE("newton oracle at tau 0.6 eps 0.1") {
  const CHSolution& s = solved(0.6, 0.1, 96);
  CHECK(s.newton_iters == 5);
  CHECK(s.residual_norm <= 1e-9);
  CHECK(s.ell == Approx(-0.46829815).margin(2e-7));
  CHECK(std::abs(s.ell - s.ell_1d) <= sqr(s.epsilon));

  auto [sp, sm] = far_field_roots(s.epsilon, s.ell);
  double sbar = 2.0 * std::max(std::abs(sp), std::abs(sm));
  CHECK(s.u.cwiseAbs().maxCoeff() <= 1.0 + sbar + 1e-12);

  // mass row is enforced essentially exactly
  const GeneratingCurve& c = curve(0.6);
  Eigen::MatrixXd u0 = initial_guess(c, profile(0.1), s.grid, s.t_signed);
  CAPTURE(mass_of(s.u, s.grid) - mass_of(u0, s.grid));
  CHECK(std::abs(mass_of(s.u, s.grid) - mass_of(u0, s.grid)) <= 1e-11);
  CHECK(s.mass == Approx(mean_of(s.u, s.grid)).margin(1e-14));

  // quadratic convergence over the last steps
  const dvec& h = s.residual_history;
  REQUIRE(h.size() >= 4);
  for (size_t k = h.size() - 2; k < h.size(); ++k)
    CHECK(h[k] <= 5.0 * std::pow(h[k - 1], 1.8));

  // converged pointwise residual matches the reported norm
  Eigen::MatrixXd F = residual_field(s.u, s.ell, s.grid, s.epsilon);
  CHECK(F.cwiseAbs().maxCoeff() <= 1.5 * std::max(s.residual_norm, 1e-12));
}

TEST_CASE("half cell mirrors into a periodic full cell") {
  const CHSolution& s = solved(0.6, 0.1, 96);
  Eigen::MatrixXd full = reconstruct_full_cell(s);
  REQUIRE(full.rows() == 2 * s.grid.Nz);
  REQUIRE(full.cols() == s.grid.Nr + 1);
  for (int j = 1; j < s.grid.Nz; ++j)
    CHECK((full.row(j) - full.row(2 * s.grid.Nz - j)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(full_cell_residual(s) <= 2e-9);
}

TEST_CASE("newton oracle at tau 0.4 eps 0.1") {
  const CHSolution& s = solved(0.4, 0.1, 96);
  CHECK(s.newton_iters == 9);
  CHECK(s.residual_norm <= 1e-9);
  CHECK(s.ell == Approx(-0.47911862).margin(2e-7));
  CHECK(std::abs(s.ell - s.ell_1d) <= sqr(s.epsilon));
}

TEST_CASE("newton oracles at eps 0.05 on 192 cells") {
  const CHSolution& s6 = solved(0.6, 0.05, 192);
  CHECK(s6.newton_iters == 5);
  CHECK(s6.residual_norm <= 1e-9);
  CHECK(s6.ell == Approx(-0.47044356).margin(2e-7));
  CHECK(std::abs(s6.ell - s6.ell_1d) <= sqr(s6.epsilon));

  const CHSolution& s4 = solved(0.4, 0.05, 192);
  CHECK(s4.newton_iters == 5);
  CHECK(s4.residual_norm <= 1e-9);
  CHECK(s4.ell == Approx(-0.47006289).margin(2e-7));
  CHECK(std::abs(s4.ell - s4.ell_1d) <= sqr(s4.epsilon));
}

TEST_CASE("ansatz tube report at tau 0.6 eps 0.1") {
  const GeneratingCurve& c = curve(0.6);
  const CHSolution& s = solved(0.6, 0.1, 96);
  AnsatzReport rep = validate_ansatz(s, profile(0.1), c);

  // cap 0.8/kmax with kmax = 5 at the neck
  CHECK(rep.delta == Approx(0.16).margin(1e-6));
  CHECK(rep.sup_error == Approx(0.2123411).margin(1e-3));
  REQUIRE(rep.sensitivity.size() == 2);
  CHECK(rep.sensitivity[0].first == Approx(0.10).margin(1e-6));
  CHECK(rep.sensitivity[0].second == Approx(0.13203).margin(1e-3));
  CHECK(rep.sensitivity[1].first == Approx(0.12).margin(1e-6));
  CHECK(rep.sensitivity[1].second == Approx(0.17254).margin(1e-3));
  CHECK(rep.sensitivity[0].second < rep.sensitivity[1].second);
  CHECK(rep.sensitivity[1].second < rep.sup_error);

  // refinement decreases the tube error
  AnsatzReport fine = validate_ansatz(solved(0.6, 0.1, 144), profile(0.1), c);
  CHECK(fine.sup_error == Approx(0.2114325).margin(1e-3));
  CHECK(fine.sup_error < rep.sup_error);
}

TEST_CASE("ansatz error exponent across eps") {
  AnsatzReport a61 = validate_ansatz(solved(0.6, 0.1, 96), profile(0.1), curve(0.6));
  AnsatzReport a65 = validate_ansatz(solved(0.6, 0.05, 192), profile(0.05), curve(0.6));
  CHECK(a65.sup_error == Approx(0.034434).margin(5e-4));
  double p6 = std::log(a61.sup_error / a65.sup_error) / std::log(2.0);
  CHECK(p6 == Approx(2.624).margin(0.03));
  CHECK(p6 >= 1.7);

  AnsatzReport a41 = validate_ansatz(solved(0.4, 0.1, 96), profile(0.1), curve(0.4));
  AnsatzReport a45 = validate_ansatz(solved(0.4, 0.05, 192), profile(0.05), curve(0.4));
  CHECK(a41.sup_error == Approx(1.3626).margin(3e-3));
  CHECK(a45.sup_error == Approx(0.37951).margin(1e-3));
  double p4 = std::log(a41.sup_error / a45.sup_error) / std::log(2.0);
  CHECK(p4 == Approx(1.844).margin(0.02));
  CHECK(p4 >= 1.7);
}

TEST_CASE("far-field decay rates") {
  DecayFit d61 = decay_check(solved(0.6, 0.1, 96));
  CHECK(d61.c_fit == Approx(1.3813).margin(0.01));
  CHECK(std::abs(d61.npts - 3041) <= 5);
  CHECK(d61.scatter == Approx(0.154).margin(0.02));

  DecayFit d65 = decay_check(solved(0.6, 0.05, 192));
  CHECK(d65.c_fit == Approx(1.4028).margin(0.01));
  DecayFit d41 = decay_check(solved(0.4, 0.1, 96));
  CHECK(d41.c_fit == Approx(1.3634).margin(0.01));
  DecayFit d45 = decay_check(solved(0.4, 0.05, 192));
  CHECK(d45.c_fit == Approx(1.4048).margin(0.01));
  for (double cv : {d61.c_fit, d65.c_fit, d41.c_fit, d45.c_fit}) {
    CHECK(cv >= 1.2);
    CHECK(cv <= 1.45);
  }

  DecayFit din = decay_check(solved(0.6, 0.1, 96), false);
  CHECK(din.c_fit == Approx(1.3144).margin(0.01));
  CHECK(std::abs(din.npts - 2649) <= 5);

  // rate insensitive to pushing the outer wall out
  const GeneratingCurve& c = curve(0.6);
  GridSpec wide = make_grid(c, 132, 96, true, 2.0);
  CHSolution sw = newton_solve(c, profile(0.1), wide);
  DecayFit dw = decay_check(sw);
  CHECK(std::abs(dw.c_fit - d61.c_fit) / d61.c_fit < 0.02);
}

TEST_CASE("decay fit flags missing dynamic range") {
  CHSolution flat = solved(0.6, 0.1, 96);
  auto [sp, sm] = far_field_roots(flat.epsilon, flat.ell);
  (void)sp;
  flat.u.setConstant(-1.0 + sm);
  DecayFit d = decay_check(flat);
  CHECK(d.insufficient);
  CHECK(d.npts < 5);
}

TEST_CASE("z-derivative matches the translation tube model") {
  const GeneratingCurve& c = curve(0.6);
  Correspondence c1 = t3_correspondence(solved(0.6, 0.1, 96), profile(0.1), c);
  CHECK(c1.relative == Approx(0.0698).margin(0.004));
  CHECK(c1.sup_model == Approx(5.64).epsilon(0.01));

  Correspondence c2 = t3_correspondence(solved(0.6, 0.05, 192), profile(0.05), c);
  CHECK(c2.relative == Approx(0.0185).margin(0.002));
  CHECK(c2.relative <= 0.15);
  CHECK(c2.sup_model == Approx(11.30).epsilon(0.01));

  double ratio = c2.sup_diff / c1.sup_diff;
  CHECK(ratio == Approx(0.531).margin(0.015));
  CHECK(ratio >= 0.35);
  CHECK(ratio <= 0.7);
}

TEST_CASE("tau-derivative matches the family tube model") {
  const GeneratingCurve& c = curve(0.6);
  const CHSolution& base = solved(0.6, 0.1, 96);
  const CHSolution& pert = solved(0.61, 0.1, 96);
  CHECK(pert.ell == Approx(-0.46833667).margin(2e-7));

  Correspondence d = d_correspondence(base, &pert, 0.01, profile(0.1), c);
  CHECK(d.relative == Approx(0.3149).margin(0.02));
  CHECK(d.relative <= 0.45);
  CHECK(d.sup_model == Approx(8.1256).margin(0.1));

  CHECK_THROWS_AS(d_correspondence(base, nullptr, 0.01, profile(0.1), c), domain_error);
  CHECK_THROWS_AS(d_correspondence(base, &pert, 0.0, profile(0.1), c), domain_error);
}

TEST_CASE("bordered jacobian stays nonsingular under refinement") {
  double s96 = bordered_jacobian_sigma_min(solved(0.6, 0.1, 96));
  double s144 = bordered_jacobian_sigma_min(solved(0.6, 0.1, 144));
  CAPTURE(s96, s144);
  CHECK(s96 > 0.0);
  CHECK(s144 > 0.5 * s96);
}

TEST_CASE("solver rejects bad grids and parameters") {
  const GeneratingCurve& c = curve(0.6);
  CHECK_THROWS_AS(newton_solve(c, profile(0.02), make_grid(c, 96, 96)), domain_error);
  CHECK_THROWS_AS(newton_solve(c, profile(0.1), make_grid(c, 24, 96)), domain_error);
  CHECK_THROWS_AS(newton_solve(c, profile(0.1), make_grid(c, 96, 96, true, 0.3)), domain_error);
  CHECK_THROWS_AS(newton_solve(c, profile(0.2), make_grid(c, 96, 96)), domain_error);
  CHECK_THROWS_AS(newton_solve(c, profile(0.1), make_grid(c, 96, 96), 1e-9, 2), numerical_error);
}
