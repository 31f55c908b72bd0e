#pragma once

// The second-variation operator on the surface, the six geometric kernel
// fields (translations, rotations, family-parameter variation) and the
// temperate-growth count derived from the Hill discriminants.

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <string>
#include <vector>

#include "common.hpp"
#include "delaunay.hpp"
#include "floquet.hpp"

namespace dch {

struct SThetaGrid {
  double s0 = 0, s1 = 0;
  int Ns = 0;      // s panels; nodes are Ns + 1
  int Ntheta = 0;  // theta nodes over [0, 2pi)
  double hs() const { return (s1 - s0) / Ns; }
  double htheta() const { return 2.0 * pi / Ntheta; }
  double s_at(int i) const { return s0 + i * hs(); }
  double theta_at(int j) const { return j * htheta(); }
};

inline SThetaGrid spanning_grid(const GeneratingCurve& c, int periods = 3,
                                int per_period = 256, int ntheta = 64) {
  SThetaGrid g;
  g.s0 = 0;
  g.s1 = periods * c.s_period;
  g.Ns = periods * per_period;
  g.Ntheta = ntheta;
  return g;
}

enum class FieldKind { T1, T2, T3, R1, R2, D };
enum class GrowthClass { bounded, linear };

inline const char* to_string(FieldKind k) {
  switch (k) {
    case FieldKind::T1: return "T1";
    case FieldKind::T2: return "T2";
    case FieldKind::T3: return "T3";
    case FieldKind::R1: return "R1";
    case FieldKind::R2: return "R2";
    default: return "D";
  }
}

struct JacobiField {
  FieldKind kind = FieldKind::T1;
  int angular_mode = 0;
  GrowthClass growth_class = GrowthClass::bounded;
  Eigen::MatrixXd values;  // (Ns + 1) x Ntheta
};

// (f_ss + f_thth + tau^2 cosh(2 sigma) f) / rho^2 with centered differences;
// the two boundary s-rows are returned as zero and excluded from norms.
inline Eigen::MatrixXd apply_jacobi(const GeneratingCurve& c, const Eigen::MatrixXd& f,
                                    const SThetaGrid& g) {
  if (f.rows() != g.Ns + 1 || f.cols() != g.Ntheta)
    throw domain_error("apply_jacobi: field shape does not match grid");
  if (c.s_period / g.hs() < 32)
    throw domain_error("apply_jacobi: fewer than 32 points per period");
  double hs2 = sqr(g.hs()), ht2 = sqr(g.htheta());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(f.rows(), f.cols());
  for (int i = 1; i < g.Ns; ++i) {
    double sg = c.sigma_at(g.s_at(i));
    double rho2 = sqr(c.tau * std::exp(sg));
    double q = sqr(c.tau) * std::cosh(2.0 * sg);
    for (int j = 0; j < g.Ntheta; ++j) {
      int jm = (j + g.Ntheta - 1) % g.Ntheta, jp = (j + 1) % g.Ntheta;
      double fss = (f(i + 1, j) - 2.0 * f(i, j) + f(i - 1, j)) / hs2;
      double ftt = (f(i, jp) - 2.0 * f(i, j) + f(i, jm)) / ht2;
      out(i, j) = (fss + ftt + q * f(i, j)) / rho2;
    }
  }
  return out;
}

inline double interior_max_abs(const Eigen::MatrixXd& m) {
  if (m.rows() < 3) return 0;
  return m.block(1, 0, m.rows() - 2, m.cols()).cwiseAbs().maxCoeff();
}

// The six fields. Translations project the unit vectors on the normal;
// rotations use the Killing fields (x.e) e3 - (x.e3) e; the family-parameter
// field is a Richardson-extrapolated central difference across re-solved
// curves at tau +- dtau, projected on the base normal.
inline std::array<JacobiField, 6> geometric_fields(const GeneratingCurve& c,
                                                   const SThetaGrid& g, double dtau = 1e-3) {
  bool centered = c.tau + dtau < 1.0;
  if (c.tau - (centered ? 1.0 : 2.0) * dtau <= 0)
    throw domain_error("geometric_fields: tau stepping leaves (0, 1)");
  std::array<JacobiField, 6> out;
  auto& [t1, t2, t3, r1, r2, dd] = out;
  t1 = {FieldKind::T1, 1, GrowthClass::bounded, {}};
  t2 = {FieldKind::T2, 1, GrowthClass::bounded, {}};
  t3 = {FieldKind::T3, 0, GrowthClass::bounded, {}};
  r1 = {FieldKind::R1, 1, GrowthClass::linear, {}};
  r2 = {FieldKind::R2, 1, GrowthClass::linear, {}};
  dd = {FieldKind::D, 0, GrowthClass::linear, {}};
  for (auto& f : out) f.values.resize(g.Ns + 1, g.Ntheta);

  double tol = c.ode_tolerance > 0 ? c.ode_tolerance : 1e-12;
  // At the cylinder end of the family fall back to one-sided differences.
  GeneratingCurve cp = solve_generating_curve(centered ? c.tau + dtau : c.tau - dtau, tol);
  GeneratingCurve cm = solve_generating_curve(centered ? c.tau - dtau : c.tau - 2 * dtau, tol);
  GeneratingCurve cp2 = solve_generating_curve(c.tau + (centered ? 0.5 : -0.5) * dtau, tol);
  GeneratingCurve cm2 = solve_generating_curve(c.tau - (centered ? 0.5 : 1.0) * dtau, tol);

  for (int i = 0; i <= g.Ns; ++i) {
    double s = g.s_at(i);
    double sg = c.sigma_at(s), dsg = c.dsigma_at(s), ka = c.kappa_at(s);
    double rho = c.tau * std::exp(sg);
    double nrad = -c.tau * std::cosh(sg);  // radial normal component
    double rot = rho * dsg + ka * c.tau * std::cosh(sg);

    // d/dtau of the position at fixed (s, theta): radial and axial parts.
    auto rho_of = [&](const GeneratingCurve& a) { return a.tau * std::exp(a.sigma_at(s)); };
    auto diff = [&](double f0, const GeneratingCurve& a, const GeneratingCurve& b,
                    auto&& get, double step) {
      return centered ? (get(a) - get(b)) / (2 * step)
                      : (3 * f0 - 4 * get(a) + get(b)) / (2 * step);
    };
    auto kap_of = [&](const GeneratingCurve& a) { return a.kappa_at(s); };
    double drho_c = diff(rho, cp, cm, rho_of, dtau);
    double dkap_c = diff(ka, cp, cm, kap_of, dtau);
    double drho_f = diff(rho, cp2, cm2, rho_of, 0.5 * dtau);
    double dkap_f = diff(ka, cp2, cm2, kap_of, 0.5 * dtau);
    double drho = (4 * drho_f - drho_c) / 3;
    double dkap = (4 * dkap_f - dkap_c) / 3;
    double phiD = -(drho * nrad + dkap * dsg);

    for (int j = 0; j < g.Ntheta; ++j) {
      double th = g.theta_at(j);
      double ct = std::cos(th), st = std::sin(th);
      t1.values(i, j) = nrad * ct;
      t2.values(i, j) = nrad * st;
      t3.values(i, j) = dsg;
      r1.values(i, j) = rot * ct;
      r2.values(i, j) = rot * st;
      dd.values(i, j) = phiD;
    }
  }
  return out;
}

// Energy per angular Fourier mode, summed over s-rows; index = mode number.
inline dvec mode_energies(const JacobiField& f) {
  int Nt = int(f.values.cols());
  int modes = Nt / 2 + 1;
  dvec energy(modes, 0.0);
  for (int i = 0; i < f.values.rows(); ++i) {
    for (int m = 0; m < modes; ++m) {
      std::complex<double> acc = 0;
      for (int j = 0; j < Nt; ++j)
        acc += f.values(i, j) * std::exp(std::complex<double>(0, -2.0 * pi * m * j / Nt));
      double e = std::norm(acc);
      if (m != 0 && 2 * m != Nt) e *= 2;  // conjugate pair
      energy[m] += e;
    }
  }
  return energy;
}

// Sup over unit-period windows centered at successive periods; an affine fit
// through the window sups separates bounded from linearly growing fields.
inline std::pair<double, double> window_growth(const JacobiField& f, const SThetaGrid& g,
                                               const GeneratingCurve& c) {
  int per = int(std::lround(c.s_period / g.hs()));
  int windows = g.Ns / per;
  if (windows < 2) throw domain_error("window_growth: need at least 2 periods");
  dvec centers, sups;
  for (int w = 0; w < windows; ++w) {
    double sup = 0;
    for (int i = w * per; i <= std::min((w + 1) * per, g.Ns); ++i)
      sup = std::max(sup, f.values.row(i).cwiseAbs().maxCoeff());
    centers.push_back((w + 0.5) * c.s_period);
    sups.push_back(sup);
  }
  return fit_line(centers, sups);  // {slope, intercept}
}

struct TemperateCount {
  int count = 0;
  std::vector<HillResult> per_mode;
};

inline TemperateCount temperate_kernel_count(const GeneratingCurve& c, int n_max,
                                             double parabolic_tol = 1e-6) {
  if (n_max < 2) throw domain_error("temperate_kernel_count: n_max must be >= 2");
  TemperateCount out;
  for (int n = 0; n <= n_max; ++n) {
    HillResult h = hill_analyze(c, n, parabolic_tol);
    if (h.classification == HillClass::elliptic)
      throw numerical_error("unexpected stability band at mode " + std::to_string(n));
    if (h.classification == HillClass::parabolic) out.count += (n == 0) ? 2 : 4;
    out.per_mode.push_back(std::move(h));
  }
  return out;
}

}  // namespace dch
