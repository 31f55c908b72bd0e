#pragma once

// The 1D interface problem in the stretched normal variable: drifted
// heteroclinic with multiplier, far-field shifts, linearized spectrum and the
// cutoff-constrained coercivity bound.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "common.hpp"

namespace dch {

inline double cubic_f(double u) { return u - u * u * u; }
inline double cubic_fp(double u) { return 1.0 - 3.0 * u * u; }
inline double cubic_F(double u) { return 0.5 * u * u - 0.25 * u * u * u * u; }  // antiderivative of f

inline double heteroclinic_theta(double t) { return std::tanh(t / std::sqrt(2.0)); }
inline double heteroclinic_theta_prime(double t) {
  double c = std::cosh(t / std::sqrt(2.0));
  return 1.0 / (std::sqrt(2.0) * c * c);
}

// -(H/2) * integral of Theta'^2 = -H * sqrt(2)/3.
inline double multiplier_leading(double H) { return -H * std::sqrt(2.0) / 3.0; }

// Roots of f(u) = eps*ell near +1 and -1; returns the shifts (sigma_plus, sigma_minus).
inline std::pair<double, double> far_field_roots(double epsilon, double ell) {
  double rhs = epsilon * ell;
  if (std::abs(rhs) >= 2.0 / (3.0 * std::sqrt(3.0)))
    throw domain_error("far_field_roots: |eps*ell| beyond the fold, no near-(+-1) root");
  auto newton = [&](double u) {
    for (int it = 0; it < 60; ++it) {
      double r = cubic_f(u) - rhs;
      u -= r / cubic_fp(u);
      if (std::abs(r) < 1e-16) break;
    }
    return u;
  };
  return {newton(1.0) - 1.0, newton(-1.0) + 1.0};
}

struct Profile1D {
  double epsilon = 0, H = 1;
  double ell = 0;
  double L = 20, h = 0.01;
  dvec t, U, dU;
  double sigma_plus = 0, sigma_minus = 0;
  double residual_norm = 0;
  int newton_iters = 0;
  bool plateau_warning = false;

  double U_at(double tq) const {
    // linear interpolation suffices for initial guesses; clamps to the plateaus
    if (tq <= t.front()) return U.front();
    if (tq >= t.back()) return U.back();
    double x = (tq - t.front()) / h;
    int i = int(std::floor(x));
    double w = x - i;
    return (1 - w) * U[i] + w * U[size_t(i) + 1];
  }
  double dU_at(double tq) const {
    if (tq <= t.front() || tq >= t.back()) return 0.0;
    double x = (tq - t.front()) / h;
    int i = int(std::floor(x));
    double w = x - i;
    return (1 - w) * dU[i] + w * dU[size_t(i) + 1];
  }
};

namespace detail {

// Thomas algorithm; diag/lower/upper of length n, n-1, n-1.
inline dvec tridiag_solve(const dvec& lower, const dvec& diag, const dvec& upper, dvec rhs) {
  size_t n = diag.size();
  dvec c(n - 1), d = std::move(rhs);
  dvec dd = diag;
  for (size_t i = 1; i < n; ++i) {
    double m = lower[i - 1] / dd[i - 1];
    dd[i] -= m * upper[i - 1];
    d[i] -= m * d[i - 1];
  }
  dvec x(n);
  x[n - 1] = d[n - 1] / dd[n - 1];
  for (size_t i = n - 1; i-- > 0;) x[i] = (d[i] - upper[i] * x[i + 1]) / dd[i];
  (void)c;
  return x;
}

}  // namespace detail

// Bordered Newton for U'' - eps*H*U' + f(U) = eps*ell with Dirichlet plateaus
// at +-L tied to ell through the far-field roots, the translation pinned by
// U(0) = (U(L) + U(-L))/2, and ell as the bordering unknown.
// The attainable residual is floored by state quantization: the closest
// double-representable U carries a second-difference residual near
// (4/h^2) * eps_mach, about 4e-12 at h = 0.01. The default stays above that.
inline Profile1D solve_profile(double epsilon, double H, double L = 20.0, double h = 0.01,
                               double tol = 1e-11, int max_iter = 50) {
  if (epsilon < 0 || epsilon > 0.3) throw domain_error("solve_profile: need 0 <= eps <= 0.3");
  if (L < 15) throw domain_error("solve_profile: L below the far-field plateau scale");
  int N = int(std::lround(2.0 * L / h));
  if (N % 2) ++N;
  h = 2.0 * L / N;
  // See the note above: requested tolerances under the representable floor are
  // clamped, so refining the grid does not turn convergence into a stall.
  tol = std::max(tol, 4.0 * std::numeric_limits<double>::epsilon() / (h * h));

  Profile1D out;
  out.epsilon = epsilon;
  out.H = H;
  out.L = L;
  out.h = h;
  out.t.resize(N + 1);
  for (int i = 0; i <= N; ++i) out.t[i] = -L + i * h;

  if (epsilon == 0.0) {
    out.ell = multiplier_leading(H);
    out.U.resize(N + 1);
    out.dU.resize(N + 1);
    for (int i = 0; i <= N; ++i) {
      out.U[i] = heteroclinic_theta(out.t[i]);
      out.dU[i] = heteroclinic_theta_prime(out.t[i]);
    }
    out.residual_norm = 0;
    return out;
  }

  int n = N - 1;  // interior unknowns
  dvec U(N + 1), F(n), col(n);
  double ell = multiplier_leading(H);
  for (int i = 0; i <= N; ++i) U[i] = heteroclinic_theta(out.t[i]);

  auto apply_bc = [&](double l, double& u0, double& uN, double& du0, double& duN) {
    auto [sp, sm] = far_field_roots(epsilon, l);
    u0 = -1.0 + sm;
    uN = 1.0 + sp;
    du0 = epsilon / cubic_fp(u0);
    duN = epsilon / cubic_fp(uN);
  };

  auto residual = [&](const dvec& u, double l, dvec& r, double& pin) {
    double u0, uN, du0, duN;
    apply_bc(l, u0, uN, du0, duN);
    dvec uu = u;
    uu[0] = u0;
    uu[N] = uN;
    // Long-double stencil: in double the 1/h^2 cancellation floors the
    // residual near h^-2 * eps_mach, above tight tolerances on fine grids.
    long double hh = (long double)h * h, h2 = 2.0L * h;
    for (int i = 1; i < N; ++i) {
      long double dd = ((long double)uu[i + 1] - 2.0L * uu[i] + uu[i - 1]) / hh;
      long double adv = ((long double)uu[i + 1] - uu[i - 1]) / h2;
      r[i - 1] = double(dd - (long double)(epsilon * H) * adv +
                        (long double)cubic_f(uu[i]) - (long double)epsilon * l);
    }
    pin = uu[N / 2] - 0.5 * (u0 + uN);
  };

  auto norm_of = [&](const dvec& r, double pin) {
    double m = std::abs(pin);
    for (double v : r) m = std::max(m, std::abs(v));
    return m;
  };

  double pin = 0;
  residual(U, ell, F, pin);
  double rnorm = norm_of(F, pin);
  int iter = 0;
  for (; iter < max_iter && rnorm > tol; ++iter) {
    double u0, uN, du0, duN;
    apply_bc(ell, u0, uN, du0, duN);
    U[0] = u0;
    U[N] = uN;
    dvec lower(n - 1), diag(n), upper(n - 1);
    double lo = 1.0 / (h * h) + epsilon * H / (2 * h);
    double up = 1.0 / (h * h) - epsilon * H / (2 * h);
    for (int i = 0; i < n; ++i) diag[i] = -2.0 / (h * h) + cubic_fp(U[i + 1]);
    std::fill(lower.begin(), lower.end(), lo);
    std::fill(upper.begin(), upper.end(), up);
    // d(row)/d(ell): the -eps*ell term plus the boundary elimination.
    std::fill(col.begin(), col.end(), -epsilon);
    col[0] += lo * du0;
    col[n - 1] += up * duN;

    dvec rhs1(n);
    for (int i = 0; i < n; ++i) rhs1[i] = -F[i];
    dvec x1 = detail::tridiag_solve(lower, diag, upper, rhs1);
    dvec x2 = detail::tridiag_solve(lower, diag, upper, col);
    // Pinning row: U_mid - (sigma_+ + sigma_-)/2; mid is interior index N/2 - 1.
    int mid = N / 2 - 1;
    double dpin_dl = -0.5 * (du0 + duN);
    double denom = dpin_dl - x2[mid];
    double dl = (-pin - x1[mid]) / denom;
    dvec du(n);
    for (int i = 0; i < n; ++i) du[i] = x1[i] - x2[i] * dl;

    double lambda = 1.0;
    dvec Utry = U, Ftry(n);
    double pintry = 0;
    for (int ls = 0; ls < 8; ++ls) {
      for (int i = 0; i < n; ++i) Utry[i + 1] = U[i + 1] + lambda * du[i];
      double elltry = ell + lambda * dl;
      residual(Utry, elltry, Ftry, pintry);
      double ntry = norm_of(Ftry, pintry);
      if (ntry < rnorm || ls == 7) {
        U = Utry;
        ell = elltry;
        F = Ftry;
        pin = pintry;
        rnorm = ntry;
        break;
      }
      lambda *= 0.5;
    }
  }
  if (rnorm > tol)
    throw numerical_error("solve_profile: Newton stalled at residual " + format_double(rnorm));

  double u0, uN, du0, duN;
  apply_bc(ell, u0, uN, du0, duN);
  U[0] = u0;
  U[N] = uN;
  out.ell = ell;
  out.U = U;
  auto [sp, sm] = far_field_roots(epsilon, ell);
  out.sigma_plus = sp;
  out.sigma_minus = sm;
  out.residual_norm = rnorm;
  out.newton_iters = iter;
  out.dU.resize(N + 1);
  for (int i = 1; i < N; ++i) out.dU[i] = (U[i + 1] - U[i - 1]) / (2 * h);
  out.dU[0] = (U[1] - U[0]) / h;
  out.dU[N] = (U[N] - U[N - 1]) / h;
  // the plateau is flat iff the zeroth-order balance already holds at the edge
  out.plateau_warning = std::max(std::abs(cubic_f(U[1]) - epsilon * ell),
                                 std::abs(cubic_f(U[N - 1]) - epsilon * ell)) > tol;
  return out;
}

// Defect of the integrated form eps*ell*(U(L)-U(-L)) =
// [U'^2/2] + [F(U)] - eps*H*int U'^2 evaluated on the discrete solution.
inline double solvability_identity_gap(const Profile1D& p) {
  size_t N = p.U.size() - 1;
  double h = p.h;
  long double intU2 = 0;
  for (size_t i = 0; i + 1 <= N; ++i) {
    long double d = (p.U[i + 1] - p.U[i]) / h;
    intU2 += d * d * h;
  }
  double dplus = (3 * p.U[N] - 4 * p.U[N - 1] + p.U[N - 2]) / (2 * h);
  double dminus = (-3 * p.U[0] + 4 * p.U[1] - p.U[2]) / (2 * h);
  double lhs = p.epsilon * p.ell * (p.U[N] - p.U[0]);
  double rhs = 0.5 * (dplus * dplus - dminus * dminus) +
               (cubic_F(p.U[N]) - cubic_F(p.U[0])) -
               p.epsilon * p.H * double(intU2);
  return std::abs(lhs - rhs);
}

// Lowest k eigenvalues of -d_tt - f'(U) with Dirichlet ends.
inline dvec linearized_spectrum_1d(const Profile1D& p, int k) {
  int n = int(p.U.size()) - 2;
  Eigen::VectorXd diag(n), sub(n - 1);
  for (int i = 0; i < n; ++i) diag[i] = 2.0 / (p.h * p.h) - cubic_fp(p.U[i + 1]);
  sub.setConstant(-1.0 / (p.h * p.h));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  dvec out;
  for (int i = 0; i < k && i < n; ++i) out.push_back(es.eigenvalues()[i]);
  return out;
}

namespace detail {

// Smallest eigenvalue of T + beta * w w^T via inverse power iteration with a
// spectral shift, using Sherman-Morrison on the shifted tridiagonal solves.
inline double penalized_min_eig(const dvec& lower, const dvec& diag, const dvec& upper,
                                const dvec& w, double beta, double shift, int iters = 200) {
  size_t n = diag.size();
  dvec dsh = diag;
  for (auto& d : dsh) d -= shift;
  auto solveT = [&](const dvec& b) { return tridiag_solve(lower, dsh, upper, b); };
  dvec Tw = solveT(w);
  double wTw = 0;
  for (size_t i = 0; i < n; ++i) wTw += w[i] * Tw[i];
  auto solveB = [&](const dvec& b) {
    dvec x = solveT(b);
    double wx = 0;
    for (size_t i = 0; i < n; ++i) wx += w[i] * x[i];
    double f = beta * wx / (1.0 + beta * wTw);
    for (size_t i = 0; i < n; ++i) x[i] -= f * Tw[i];
    return x;
  };
  dvec v(n);
  uint64_t st = 0x5eed5eed5eedull;
  for (auto& x : v) x = splitmix_unit(st);
  double lam = 0;
  for (int it = 0; it < iters; ++it) {
    dvec y = solveB(v);
    double nrm = 0;
    for (double x : y) nrm += x * x;
    nrm = std::sqrt(nrm);
    for (auto& x : y) x /= nrm;
    // Rayleigh quotient of the penalized operator
    double num = 0;
    for (size_t i = 0; i < n; ++i) {
      double Ty = (diag[i]) * y[i];
      if (i > 0) Ty += lower[i - 1] * y[i - 1];
      if (i + 1 < n) Ty += upper[i] * y[i + 1];
      num += y[i] * Ty;
    }
    double wy = 0;
    for (size_t i = 0; i < n; ++i) wy += w[i] * y[i];
    double lam_new = num + beta * wy * wy;
    v = y;
    if (it > 4 && std::abs(lam_new - lam) < 1e-12 * std::max(1.0, std::abs(lam_new))) {
      lam = lam_new;
      break;
    }
    lam = lam_new;
  }
  return lam;
}

}  // namespace detail

// Rayleigh minimum of int |v'|^2 - f'(Theta) v^2 over (-R, R), Dirichlet ends,
// subject to <v, Theta' chi_R> = 0 with the cosine-taper cutoff chi_R.
inline double coercivity_constrained(const Profile1D& p, double R) {
  if (R > p.L / 2 + 1e-12) throw domain_error("coercivity_constrained: R must be <= L/2");
  double h = p.h;
  int n = int(std::lround(2.0 * R / h)) - 1;
  dvec diag(n), lower(n - 1), upper(n - 1), w(n);
  double wnorm = 0;
  for (int i = 0; i < n; ++i) {
    double t = -R + (i + 1) * h;
    diag[i] = 2.0 / (h * h) - cubic_fp(heteroclinic_theta(t));
    double a = std::abs(t);
    double chi = a < R / 2 ? 1.0 : (a < R ? 0.5 * (1.0 + std::cos(pi * (a - R / 2) / (R / 2))) : 0.0);
    w[i] = heteroclinic_theta_prime(t) * chi;
    wnorm += w[i] * w[i];
  }
  wnorm = std::sqrt(wnorm);
  for (auto& x : w) x /= wnorm;
  std::fill(lower.begin(), lower.end(), -1.0 / (h * h));
  std::fill(upper.begin(), upper.end(), -1.0 / (h * h));
  return detail::penalized_min_eig(lower, diag, upper, w, 1e6, 1.0);
}

}  // namespace dch
