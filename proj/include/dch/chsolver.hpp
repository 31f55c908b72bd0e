#pragma once

// Axisymmetric stationary Cahn-Hilliard solver on one half period cell:
// eps*Lap u + f(u)/eps = ell with a mass constraint pairing the multiplier,
// plus the post-solve diagnostics (ansatz error, far-field decay, derivative
// field correspondence) used by the acceptance gate.

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "common.hpp"
#include "delaunay.hpp"
#include "profile.hpp"

namespace dch {

struct GridSpec {
  int Nr = 0, Nz = 0;
  double Rmax = 0, T_period = 0;
  bool half_cell = true;
  double hr() const { return Rmax / Nr; }
  double hz() const { return (half_cell ? 0.5 : 1.0) * T_period / Nz; }
  double r_at(int i) const { return i * hr(); }
  double z_at(int j) const { return j * hz(); }
};

inline GridSpec make_grid(const GeneratingCurve& c, int Nr, int Nz, bool half_cell = true,
                          double margin = 1.0) {
  GridSpec g;
  g.Nr = Nr;
  g.Nz = Nz;
  g.Rmax = c.rho_bulge() + margin;
  g.T_period = c.T_period;
  g.half_cell = half_cell;
  return g;
}

struct CHSolution {
  double tau = 0, epsilon = 0;
  GridSpec grid;
  Eigen::MatrixXd u;         // (Nz+1) x (Nr+1), row = z index
  Eigen::MatrixXd t_signed;  // Fermi signed distance per node
  Eigen::MatrixXd s_foot;    // footpoint parameter per node
  double ell = 0, ell_1d = 0;
  double mass = 0;
  double residual_norm = 0;
  int newton_iters = 0;
  dvec residual_history;
};

// Signed distance and footpoint for every grid node.
inline void fermi_grid(const GeneratingCurve& c, const GridSpec& g, Eigen::MatrixXd& t_signed,
                       Eigen::MatrixXd& s_foot) {
  t_signed.resize(g.Nz + 1, g.Nr + 1);
  s_foot.resize(g.Nz + 1, g.Nr + 1);
  for (int j = 0; j <= g.Nz; ++j) {
    double z = g.z_at(j);
    for (int i = 0; i <= g.Nr; ++i) {
      auto q = signed_distance(c, g.r_at(i), z);
      t_signed(j, i) = q.t_signed;
      s_foot(j, i) = q.foot_s;
    }
  }
}

// Finite-volume cell measures: half cells at the z ends, an r^2/8 disc at the
// axis, and the boundary ring truncated at the Dirichlet node.
inline dvec radial_weights(const GridSpec& g) {
  double hr = g.hr();
  dvec rw(g.Nr + 1);
  rw[0] = hr * hr / 8.0;
  for (int i = 1; i < g.Nr; ++i) rw[i] = g.r_at(i) * hr;
  rw[g.Nr] = g.r_at(g.Nr) * hr / 2.0 - hr * hr / 8.0;
  return rw;
}

inline dvec axial_weights(const GridSpec& g) {
  dvec zw(g.Nz + 1, g.hz());
  zw[0] *= 0.5;
  zw[g.Nz] *= 0.5;
  return zw;
}

inline double mass_of(const Eigen::MatrixXd& u, const GridSpec& g) {
  dvec rw = radial_weights(g), zw = axial_weights(g);
  double m = 0;
  for (int j = 0; j <= g.Nz; ++j)
    for (int i = 0; i <= g.Nr; ++i) m += zw[j] * rw[i] * u(j, i);
  return m;
}

inline double cell_volume(const GridSpec& g) {
  return 0.5 * g.Rmax * g.Rmax * (g.half_cell ? 0.5 : 1.0) * g.T_period;
}

// Area-weighted mean, the reported mass of a solution.
inline double mean_of(const Eigen::MatrixXd& u, const GridSpec& g) {
  return mass_of(u, g) / cell_volume(g);
}

inline Eigen::MatrixXd initial_guess(const GeneratingCurve& c, const Profile1D& p,
                                     const GridSpec& g, const Eigen::MatrixXd& t_signed) {
  Eigen::MatrixXd u0(g.Nz + 1, g.Nr + 1);
  for (int j = 0; j <= g.Nz; ++j)
    for (int i = 0; i <= g.Nr; ++i) u0(j, i) = p.U_at(t_signed(j, i) / p.epsilon);
  auto [sp, sm] = far_field_roots(p.epsilon, p.ell);
  (void)sp;
  for (int j = 0; j <= g.Nz; ++j) u0(j, g.Nr) = -1.0 + sm;
  return u0;
}

// Pointwise interior residual eps*(u_rr + u_r/r + u_zz) + f(u)/eps - ell on the
// unknown columns i < Nr; the Dirichlet ring value is recomputed from ell.
inline Eigen::MatrixXd residual_field(const Eigen::MatrixXd& u, double ell, const GridSpec& g,
                                      double epsilon) {
  int Nr = g.Nr, Nz = g.Nz;
  double hr = g.hr(), hz = g.hz();
  auto [sp, sm] = far_field_roots(epsilon, ell);
  (void)sp;
  double gb = -1.0 + sm;
  Eigen::MatrixXd out(Nz + 1, Nr);
  for (int j = 0; j <= Nz; ++j) {
    for (int i = 0; i < Nr; ++i) {
      double uc = u(j, i);
      double lap_r;
      if (i == 0) {
        lap_r = 4.0 * (u(j, 1) - u(j, 0)) / (hr * hr);
      } else {
        double up = (i + 1 < Nr) ? u(j, i + 1) : gb;
        double um = u(j, i - 1);
        double rp = g.r_at(i) + hr / 2, rm = g.r_at(i) - hr / 2;
        lap_r = (rp * (up - uc) - rm * (uc - um)) / (g.r_at(i) * hr * hr);
      }
      double uzp = (j == 0) ? u(1, i) : (j == Nz ? u(Nz - 1, i) : u(j + 1, i));
      double uzm = (j == 0) ? u(1, i) : (j == Nz ? u(Nz - 1, i) : u(j - 1, i));
      double lap_z = (uzp - 2.0 * uc + uzm) / (hz * hz);
      out(j, i) = epsilon * (lap_r + lap_z) + cubic_f(uc) / epsilon - ell;
    }
  }
  return out;
}

namespace detail {

struct CHSystem {
  const GridSpec& g;
  double epsilon;
  double mass0 = 0;
  dvec rw, zw;

  explicit CHSystem(const GridSpec& gg, double eps)
      : g(gg), epsilon(eps), rw(radial_weights(gg)), zw(axial_weights(gg)) {}

  int n_unknowns() const { return g.Nr * (g.Nz + 1) + 1; }
  int idx(int i, int j) const { return j * g.Nr + i; }

  // Residual vector and Jacobian triplets for the bordered system.
  void assemble(const Eigen::MatrixXd& u, double ell, Eigen::VectorXd& F,
                std::vector<Eigen::Triplet<double>>* trip) const {
    int Nr = g.Nr, Nz = g.Nz, n = Nr * (Nz + 1);
    double hr = g.hr(), hz = g.hz(), eps = epsilon;
    auto [sp, sm] = far_field_roots(eps, ell);
    (void)sp;
    double gb = -1.0 + sm;
    double dg = eps / cubic_fp(gb);  // d(ring value)/d(ell)
    F.resize(n + 1);
    if (trip) trip->clear();
    auto put = [&](int r, int c, double v) {
      if (trip) trip->emplace_back(r, c, v);
    };
    for (int j = 0; j <= Nz; ++j) {
      for (int i = 0; i < Nr; ++i) {
        int k = idx(i, j);
        double uc = u(j, i);
        double lap_r, cr_c, cr_p, cr_m = 0;
        if (i == 0) {
          lap_r = 4.0 * (u(j, 1) - u(j, 0)) / (hr * hr);
          cr_c = -4.0 / (hr * hr);
          cr_p = 4.0 / (hr * hr);
        } else {
          double up = (i + 1 < Nr) ? u(j, i + 1) : gb;
          double um = u(j, i - 1);
          double rp = g.r_at(i) + hr / 2, rm = g.r_at(i) - hr / 2;
          lap_r = (rp * (up - uc) - rm * (uc - um)) / (g.r_at(i) * hr * hr);
          cr_p = rp / (g.r_at(i) * hr * hr);
          cr_m = rm / (g.r_at(i) * hr * hr);
          cr_c = -(rp + rm) / (g.r_at(i) * hr * hr);
        }
        double uzp = (j == 0) ? u(1, i) : (j == Nz ? u(Nz - 1, i) : u(j + 1, i));
        double uzm = (j == 0) ? u(1, i) : (j == Nz ? u(Nz - 1, i) : u(j - 1, i));
        double lap_z = (uzp - 2.0 * uc + uzm) / (hz * hz);
        F[k] = eps * (lap_r + lap_z) + cubic_f(uc) / eps - ell;

        put(k, k, eps * (cr_c - 2.0 / (hz * hz)) + cubic_fp(uc) / eps);
        if (i == 0) {
          put(k, idx(1, j), eps * cr_p);
        } else {
          if (i + 1 < Nr)
            put(k, idx(i + 1, j), eps * cr_p);
          else
            put(k, n, eps * cr_p * dg);
          put(k, idx(i - 1, j), eps * cr_m);
        }
        if (j == 0)
          put(k, idx(i, 1), 2.0 * eps / (hz * hz));
        else if (j == Nz)
          put(k, idx(i, Nz - 1), 2.0 * eps / (hz * hz));
        else {
          put(k, idx(i, j + 1), eps / (hz * hz));
          put(k, idx(i, j - 1), eps / (hz * hz));
        }
        put(k, n, -1.0);
      }
    }
    // mass constraint row; the ring column moves with ell through the BC
    double mass = 0, ringw = 0;
    for (int j = 0; j <= Nz; ++j) {
      for (int i = 0; i < Nr; ++i) {
        double w = zw[j] * rw[i];
        mass += w * u(j, i);
        put(n, idx(i, j), w);
      }
      ringw += zw[j] * rw[Nr];
    }
    mass += ringw * gb;
    F[n] = mass - mass0;
    put(n, n, ringw * dg);
  }
};

}  // namespace detail

inline CHSolution newton_solve(const GeneratingCurve& c, const Profile1D& p, const GridSpec& g,
                               double tol = 1e-9, int max_iter = 30) {
  if (p.epsilon <= 0) throw domain_error("newton_solve: profile must have epsilon > 0");
  if (p.epsilon > 0.15 * std::min(1.0, 0.25 * c.T_period))
    throw domain_error("newton_solve: epsilon too large for a separated interface layer");
  if (g.Nr < 32 || g.Nz < 32) throw domain_error("newton_solve: grid under 32 cells per axis");
  if (g.Rmax < c.rho_bulge() + 0.5)
    throw domain_error("newton_solve: Rmax leaves no far-field margin");
  if (g.hr() > p.epsilon || g.hz() > p.epsilon)
    throw domain_error(
        "newton_solve: interface under-resolved, need at least 6 cells across it "
        "(hr <= eps and hz <= eps)");

  CHSolution sol;
  sol.tau = c.tau;
  sol.epsilon = p.epsilon;
  sol.grid = g;
  sol.ell_1d = p.ell;
  fermi_grid(c, g, sol.t_signed, sol.s_foot);
  Eigen::MatrixXd u = initial_guess(c, p, g, sol.t_signed);
  double ell = p.ell;

  detail::CHSystem sys(g, p.epsilon);
  sys.mass0 = mass_of(u, g);

  int Nr = g.Nr, Nz = g.Nz, n = Nr * (Nz + 1);
  Eigen::VectorXd F;
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::SparseMatrix<double> J(n + 1, n + 1);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  double res = 0;
  int it = 0;
  for (; it < max_iter; ++it) {
    sys.assemble(u, ell, F, &trip);
    res = F.cwiseAbs().maxCoeff();
    sol.residual_history.push_back(res);
    if (res < tol) break;
    J.setFromTriplets(trip.begin(), trip.end());
    lu.compute(J);
    if (lu.info() != Eigen::Success)
      throw numerical_error("newton_solve: sparse factorization failed");
    Eigen::VectorXd d = lu.solve(-F);

    double lambda = 1.0;
    Eigen::MatrixXd utry = u;
    Eigen::VectorXd Ftry;
    for (int ls = 0; ls < 8; ++ls) {
      for (int j = 0; j <= Nz; ++j)
        for (int i = 0; i < Nr; ++i) utry(j, i) = u(j, i) + lambda * d[sys.idx(i, j)];
      double elltry = ell + lambda * d[n];
      sys.assemble(utry, elltry, Ftry, nullptr);
      double ntry = Ftry.cwiseAbs().maxCoeff();
      if (ntry < (1.0 - 1e-4 * lambda) * res || res < 1e-6 || ls == 7) {
        u = utry;
        ell = elltry;
        break;
      }
      lambda *= 0.5;
    }
    auto [sp, sm] = far_field_roots(p.epsilon, ell);
    (void)sp;
    for (int j = 0; j <= Nz; ++j) u(j, Nr) = -1.0 + sm;
  }
  if (res >= tol) {
    std::string hist;
    for (double r : sol.residual_history) hist += " " + format_double(r);
    throw numerical_error("newton_solve: no convergence, residual history:" + hist);
  }
  sol.u = u;
  sol.ell = ell;
  sol.mass = mean_of(u, g);
  sol.residual_norm = res;
  sol.newton_iters = it;
  return sol;
}

// Smallest singular value of the bordered Jacobian at a converged solution,
// via inverse iteration on J^T J. The mass row and the half-cell symmetry
// remove the multiplier-shift and translation near-kernels, so this should
// stay bounded away from zero under grid refinement at fixed epsilon.
inline double bordered_jacobian_sigma_min(const CHSolution& s) {
  detail::CHSystem sys(s.grid, s.epsilon);
  Eigen::VectorXd F;
  std::vector<Eigen::Triplet<double>> trip;
  sys.assemble(s.u, s.ell, F, &trip);
  int n = sys.n_unknowns();
  Eigen::SparseMatrix<double> J(n, n), Jt(n, n);
  J.setFromTriplets(trip.begin(), trip.end());
  Jt = J.transpose();
  // iterate on (J^T J)^{-1} = J^{-1} J^{-T} through the two factorizations;
  // forming J^T J explicitly would densify the bordered row and column
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(J), luT(Jt);
  if (lu.info() != Eigen::Success || luT.info() != Eigen::Success)
    throw numerical_error("bordered_jacobian_sigma_min: factorization failed");
  Eigen::VectorXd x = Eigen::VectorXd::Ones(n).normalized();
  for (int k = 0; k < 60; ++k) x = lu.solve(luT.solve(x)).normalized();
  return (J * x).norm();
}

// Mirror the half cell into one full period, z nodes 0..2Nz-1 (periodic).
inline Eigen::MatrixXd reconstruct_full_cell(const CHSolution& s) {
  if (!s.grid.half_cell) throw domain_error("reconstruct_full_cell: already a full cell");
  int Nz = s.grid.Nz;
  Eigen::MatrixXd full(2 * Nz, s.grid.Nr + 1);
  for (int j = 0; j < 2 * Nz; ++j) full.row(j) = s.u.row(j <= Nz ? j : 2 * Nz - j);
  return full;
}

// Sup of the periodic-closure residual of the mirrored field; validates the
// half-cell symmetry reduction.
inline double full_cell_residual(const CHSolution& s) {
  Eigen::MatrixXd uf = reconstruct_full_cell(s);
  int Nr = s.grid.Nr, M = int(uf.rows());
  double hr = s.grid.hr(), hz = s.grid.hz(), eps = s.epsilon;
  auto [sp, sm] = far_field_roots(eps, s.ell);
  (void)sp;
  double gb = -1.0 + sm;
  double worst = 0;
  for (int j = 0; j < M; ++j) {
    int jp = (j + 1) % M, jm = (j + M - 1) % M;
    for (int i = 0; i < Nr; ++i) {
      double uc = uf(j, i);
      double lap_r;
      if (i == 0) {
        lap_r = 4.0 * (uf(j, 1) - uf(j, 0)) / (hr * hr);
      } else {
        double up = (i + 1 < Nr) ? uf(j, i + 1) : gb;
        double um = uf(j, i - 1);
        double rp = i * hr + hr / 2, rm = i * hr - hr / 2;
        lap_r = (rp * (up - uc) - rm * (uc - um)) / (i * hr * hr * hr);
      }
      double lap_z = (uf(jp, i) - 2.0 * uc + uf(jm, i)) / (hz * hz);
      worst = std::max(worst, std::abs(eps * (lap_r + lap_z) + cubic_f(uc) / eps - s.ell));
    }
  }
  return worst;
}

struct AnsatzReport {
  double delta = 0;          // primary tube half-width
  double sup_error = 0;      // sup |u - U(t/eps)| over |t| <= delta
  double z_at_max = 0, r_at_max = 0;
  std::vector<std::pair<double, double>> sensitivity;  // (delta, sup) at other caps
};

inline double tube_halfwidth(const GeneratingCurve& c, double epsilon, double frac = 0.8) {
  double kmax = 0;
  for (double s : c.sigma) {
    double k2 = std::exp(-s) * std::cosh(s);
    kmax = std::max({kmax, std::abs(k2), std::abs(1.0 - k2)});
  }
  return std::min({std::pow(epsilon, 2.0 / 3.0), 0.3, frac / kmax});
}

inline AnsatzReport validate_ansatz(const CHSolution& s, const Profile1D& p,
                                    const GeneratingCurve& c) {
  AnsatzReport rep;
  auto sup_at = [&](double delta) {
    double sup = 0, zb = 0, rb = 0;
    for (int j = 0; j <= s.grid.Nz; ++j)
      for (int i = 0; i <= s.grid.Nr; ++i) {
        double t = s.t_signed(j, i);
        if (std::abs(t) > delta) continue;
        double e = std::abs(s.u(j, i) - p.U_at(t / p.epsilon));
        if (e > sup) {
          sup = e;
          zb = s.grid.z_at(j);
          rb = s.grid.r_at(i);
        }
      }
    return std::tuple<double, double, double>{sup, zb, rb};
  };
  rep.delta = tube_halfwidth(c, s.epsilon);
  auto [sup, zb, rb] = sup_at(rep.delta);
  rep.sup_error = sup;
  rep.z_at_max = zb;
  rep.r_at_max = rb;
  for (double frac : {0.5, 0.6}) {
    double d = tube_halfwidth(c, s.epsilon, frac);
    rep.sensitivity.emplace_back(d, std::get<0>(sup_at(d)));
  }
  return rep;
}

struct DecayFit {
  double c_fit = 0;      // exponential rate in |t|/eps
  double intercept = 0;
  int npts = 0;
  double scatter = 0;
  bool insufficient = false;
};

// Least-squares decay rate of log|u - plateau| against |t|/eps on one side of
// the interface, skipping a 3*eps collar and a 0.2 margin at the outer wall.
inline DecayFit decay_check(const CHSolution& s, bool outer_side = true) {
  auto [sp, sm] = far_field_roots(s.epsilon, s.ell);
  double plateau = outer_side ? -1.0 + sm : 1.0 + sp;
  dvec xs, ys;
  for (int j = 0; j <= s.grid.Nz; ++j)
    for (int i = 0; i <= s.grid.Nr; ++i) {
      double t = s.t_signed(j, i);
      if (outer_side ? (t >= -3.0 * s.epsilon) : (t <= 3.0 * s.epsilon)) continue;
      if (s.grid.r_at(i) > s.grid.Rmax - 0.2) continue;
      double val = std::abs(s.u(j, i) - plateau);
      if (val <= 1e-10 || val >= 1e-2) continue;
      xs.push_back(std::abs(t) / s.epsilon);
      ys.push_back(std::log(val));
    }
  DecayFit fit;
  fit.npts = int(xs.size());
  if (fit.npts < 5) {
    fit.insufficient = true;
    return fit;
  }
  auto [slope, icpt] = fit_line(xs, ys);
  fit.c_fit = -slope;
  fit.intercept = icpt;
  double ss = 0;
  for (size_t k = 0; k < xs.size(); ++k) ss += sqr(ys[k] - (slope * xs[k] + icpt));
  fit.scatter = std::sqrt(ss / xs.size());
  return fit;
}

struct Correspondence {
  double relative = 0;  // sup|discrete - model| / sup|model| in the tube
  double sup_diff = 0;
  double sup_model = 0;
};

// Discrete z-derivative of u against the tube model Phi(sfoot) * U'(t/eps)/eps;
// for the vertical translation field Phi = sigma'(s). The comparison tube is
// capped harder than the ansatz tube (0.6/kmax): near the focal radius the
// coordinate change itself degrades and the halving law washes out.
inline Correspondence t3_correspondence(const CHSolution& s, const Profile1D& p,
                                        const GeneratingCurve& c) {
  int Nr = s.grid.Nr, Nz = s.grid.Nz;
  double hz = s.grid.hz(), delta = tube_halfwidth(c, s.epsilon, 0.6);
  Correspondence out;
  for (int j = 0; j <= Nz; ++j) {
    for (int i = 0; i <= Nr; ++i) {
      double t = s.t_signed(j, i);
      if (std::abs(t) > delta) continue;
      double dzu;
      if (j == 0 || j == Nz)
        dzu = 0.0;  // even symmetry at the cell ends
      else
        dzu = (s.u(j + 1, i) - s.u(j - 1, i)) / (2.0 * hz);
      double model = c.dsigma_at(s.s_foot(j, i)) * p.dU_at(t / s.epsilon) / s.epsilon;
      out.sup_diff = std::max(out.sup_diff, std::abs(dzu - model));
      out.sup_model = std::max(out.sup_model, std::abs(model));
    }
  }
  if (out.sup_model > 0) out.relative = out.sup_diff / out.sup_model;
  return out;
}

namespace detail {

// 4-point Lagrange interpolation per axis on a solution grid, stencil clamped
// at the edges.
inline double interp_solution(const Eigen::MatrixXd& u, const GridSpec& g, double r, double z) {
  auto weights = [](double x, double h, int n, int& i0, double w[4]) {
    double xx = x / h;
    i0 = int(std::floor(xx)) - 1;
    i0 = std::max(0, std::min(n - 3, i0));
    double t = xx - i0;
    for (int j = 0; j < 4; ++j) {
      double p = 1.0;
      for (int k = 0; k < 4; ++k)
        if (k != j) p *= (t - k) / double(j - k);
      w[j] = p;
    }
  };
  int i0, j0;
  double wr[4], wz[4];
  weights(r, g.hr(), g.Nr, i0, wr);
  weights(z, g.hz(), g.Nz, j0, wz);
  double acc = 0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) acc += wz[a] * wr[b] * u(j0 + a, i0 + b);
  return acc;
}

}  // namespace detail

// Same comparison for the family-parameter field: the perturbed solve lives on
// its own cell, so its values are interpolated at the base grid nodes before
// taking the tau difference quotient. Model is PhiD(sfoot) * U'(t/eps)/eps with
// PhiD from centered curve differences at a fixed small step.
inline Correspondence d_correspondence(const CHSolution& s, const CHSolution* s_perturbed,
                                       double dtau, const Profile1D& p,
                                       const GeneratingCurve& c) {
  if (!s_perturbed) throw domain_error("d_correspondence: perturbed solution required");
  if (dtau <= 0) throw domain_error("d_correspondence: dtau must be positive");
  double dt = 5e-3;
  GeneratingCurve cp = solve_generating_curve(c.tau + dt, c.ode_tolerance);
  GeneratingCurve cm = solve_generating_curve(c.tau - dt, c.ode_tolerance);
  double delta = std::pow(s.epsilon, 2.0 / 3.0);
  const GridSpec& gp = s_perturbed->grid;
  Correspondence out;
  for (int j = 0; j <= s.grid.Nz; ++j)
    for (int i = 0; i <= s.grid.Nr; ++i) {
      double t = s.t_signed(j, i);
      if (std::abs(t) > delta) continue;
      double r = s.grid.r_at(i), z = s.grid.z_at(j);
      if (r > gp.Rmax || z > (gp.half_cell ? 0.5 : 1.0) * gp.T_period) continue;
      double dtu = (detail::interp_solution(s_perturbed->u, gp, r, z) - s.u(j, i)) / dtau;
      double sf = s.s_foot(j, i);
      double dsg = c.dsigma_at(sf);
      double nrad = -c.tau * std::cosh(c.sigma_at(sf));
      double drho = (cp.rho_at(sf) - cm.rho_at(sf)) / (2.0 * dt);
      double dkap = (cp.kappa_at(sf) - cm.kappa_at(sf)) / (2.0 * dt);
      double phiD = -(drho * nrad + dkap * dsg);
      double model = phiD * p.dU_at(t / s.epsilon) / s.epsilon;
      out.sup_diff = std::max(out.sup_diff, std::abs(dtu - model));
      out.sup_model = std::max(out.sup_model, std::abs(model));
    }
  if (out.sup_model > 0) out.relative = out.sup_diff / out.sup_model;
  return out;
}

}  // namespace dch
