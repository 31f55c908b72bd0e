#pragma once

// Generating curves of the unduloid family, their isothermal parametrization,
// curvatures, radial profile and signed-distance (Fermi) queries. Everything
// downstream consumes the sampled curve produced here.
//
// Scale convention: positions are X = (tau e^sigma cos theta, tau e^sigma sin theta, kappa)
// with mean curvature k1 + k2 = 1, neck radius 1 - sqrt(1 - tau^2) and axial
// period T = kappa(s_period).

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>

#include "common.hpp"

namespace dch {

struct GeneratingCurve {
  double tau = 0;
  double s_period = 0;  // minimal period of sigma in the arc parameter s
  double T_period = 0;  // axial period, = kappa(s_period)
  double ode_tolerance = 1e-12;
  double energy_drift = 0;  // measured max |(sigma')^2 + tau^2 cosh^2 sigma - 1|
  bool cylinder = false;    // tau = 1 degenerate orbit
  // Uniform samples over [0, s_period]; sigma/dsigma extend periodically,
  // kappa extends by kappa(s + P) = kappa(s) + T.
  dvec s, sigma, dsigma, kappa;

  double grid_step() const { return s_period / double(s.size() - 1); }
  double rho_neck() const { return 1.0 - std::sqrt(1.0 - tau * tau); }
  double rho_bulge() const { return 1.0 + std::sqrt(1.0 - tau * tau); }

  // 6-point Lagrange interpolation on the uniform sample grid.
  double sigma_at(double sq) const { return interp(sigma, sq, 0.0); }
  double dsigma_at(double sq) const { return interp(dsigma, sq, 0.0); }
  double kappa_at(double sq) const { return interp(kappa, sq, T_period); }
  double rho_at(double sq) const { return tau * std::exp(sigma_at(sq)); }

 private:
  double interp(const dvec& f, double sq, double shift_per_period) const {
    if (cylinder) {
      if (shift_per_period != 0.0) return sq;  // kappa(s) = s on the cylinder
      return f[0];
    }
    double P = s_period;
    double k = std::floor(sq / P);
    double sl = sq - k * P;
    int n = int(f.size()) - 1;
    double h = P / n;
    double x = sl / h;
    int i0 = int(std::floor(x)) - 2;
    double acc = 0;
    for (int j = 0; j < 6; ++j) {
      int idx = i0 + j;
      double node = double(idx);
      int widx = ((idx % n) + n) % n;
      double shift = std::floor(double(idx) / n) * shift_per_period;
      double fi = f[widx] + shift;
      double w = 1;
      for (int l = 0; l < 6; ++l) {
        if (l == j) continue;
        double nl = double(i0 + l);
        w *= (x - nl) / (node - nl);
      }
      acc += w * fi;
    }
    return acc + k * shift_per_period;
  }
};

namespace detail {

struct CurveState {
  double sg, dsg, kp;
};

inline CurveState curve_rhs(double tau, const CurveState& y) {
  double c = std::cosh(y.sg), s = std::sinh(y.sg);
  return {y.dsg, -tau * tau * c * s, tau * tau * std::exp(y.sg) * c};
}

inline CurveState rk4_step(double tau, const CurveState& y, double h) {
  auto add = [](const CurveState& a, const CurveState& b, double f) {
    return CurveState{a.sg + f * b.sg, a.dsg + f * b.dsg, a.kp + f * b.kp};
  };
  CurveState k1 = curve_rhs(tau, y);
  CurveState k2 = curve_rhs(tau, add(y, k1, h / 2));
  CurveState k3 = curve_rhs(tau, add(y, k2, h / 2));
  CurveState k4 = curve_rhs(tau, add(y, k3, h));
  return {y.sg + h / 6 * (k1.sg + 2 * k2.sg + 2 * k3.sg + k4.sg),
          y.dsg + h / 6 * (k1.dsg + 2 * k2.dsg + 2 * k3.dsg + k4.dsg),
          y.kp + h / 6 * (k1.kp + 2 * k2.kp + 2 * k3.kp + k4.kp)};
}

}  // namespace detail

inline GeneratingCurve cylinder_curve() {
  GeneratingCurve c;
  c.tau = 1.0;
  c.cylinder = true;
  c.s_period = 2 * pi;  // neutral wavelength; sigma is constant zero
  c.T_period = 2 * pi;
  c.s = {0.0};
  c.sigma = {0.0};
  c.dsigma = {0.0};
  c.kappa = {0.0};
  return c;
}

// Integrates sigma'' = -tau^2 cosh(sigma) sinh(sigma), kappa' = tau^2 e^sigma cosh(sigma)
// from sigma(0) = -arccosh(1/tau), sigma'(0) = 0, kappa(0) = 0. Period located by
// bisection on the event sigma' = 0 with sigma > 0 (half period, doubled).
inline GeneratingCurve solve_generating_curve(double tau, double ode_tolerance = 1e-12,
                                              int samples = 4096) {
  if (!(tau > 0.0) || tau > 1.0) throw domain_error("tau outside (0, 1]");
  if (tau == 1.0) return cylinder_curve();
  if (tau < 0.02) throw domain_error("tau below 0.02: period and focal radius degenerate");
  if (ode_tolerance < 1e-14 || ode_tolerance > 1e-6)
    throw domain_error("ode_tolerance outside [1e-14, 1e-6]");

  double sigma0 = -std::acosh(1.0 / tau);
  using detail::CurveState;
  using detail::rk4_step;

  // Fixed step from the tolerance via the measured drift constant of the
  // order-4 scheme (drift ~ 62 h^4); refined below until the audit passes.
  double h = std::min(4e-4, std::pow(ode_tolerance / 62.5, 0.25));
  GeneratingCurve out;
  for (int attempt = 0; attempt < 4; ++attempt) {
    CurveState y{sigma0, 0.0, 0.0};
    double s = 0;
    double s_half = -1;
    const double s_budget = 64.0;
    long max_steps = long(s_budget / h);
    for (long step = 0; step < max_steps; ++step) {
      CurveState yn = rk4_step(tau, y, h);
      if (y.sg > 0 && y.dsg > 0 && yn.dsg <= 0) {
        double a = 0, b = h;
        for (int it = 0; it < 80; ++it) {
          double mid = 0.5 * (a + b);
          CurveState ym = rk4_step(tau, y, mid);
          (ym.dsg > 0 ? a : b) = mid;
        }
        s_half = s + 0.5 * (a + b);
        break;
      }
      y = yn;
      s += h;
    }
    if (s_half < 0) throw numerical_error("period not found within budget");

    double P = 2 * s_half;
    int N = samples;
    out = GeneratingCurve{};
    out.tau = tau;
    out.s_period = P;
    out.ode_tolerance = ode_tolerance;
    out.s.resize(N + 1);
    out.sigma.resize(N + 1);
    out.dsigma.resize(N + 1);
    out.kappa.resize(N + 1);

    double hs = P / N;
    int sub = std::max(1, int(std::ceil(hs / h)));
    double hsub = hs / sub;
    CurveState yy{sigma0, 0.0, 0.0};
    double drift = 0;
    for (int i = 0; i <= N; ++i) {
      out.s[i] = i * hs;
      out.sigma[i] = yy.sg;
      out.dsigma[i] = yy.dsg;
      out.kappa[i] = yy.kp;
      double e = sqr(yy.dsg) + sqr(tau * std::cosh(yy.sg)) - 1.0;
      drift = std::max(drift, std::abs(e));
      if (i < N)
        for (int k = 0; k < sub; ++k) yy = rk4_step(tau, yy, hsub);
    }
    out.T_period = out.kappa.back();
    out.energy_drift = drift;
    if (drift <= 10 * ode_tolerance) return out;
    h *= 0.5;
  }
  return out;  // last attempt; energy_drift field records the shortfall
}

inline std::pair<double, double> period(const GeneratingCurve& c) {
  if (c.cylinder) throw domain_error("period undefined at tau=1");
  return {c.s_period, c.T_period};
}

struct SurfaceSample {
  double s = 0, theta = 0;
  std::array<double, 3> position{};
  std::array<double, 3> normal{};
  double k1 = 0, k2 = 0;  // s-direction and theta-direction principal curvatures
  double A_sq = 0;
  double H = 0;
};

// The normal is oriented so that the axis lies on its positive side.
inline SurfaceSample immerse(const GeneratingCurve& c, double s, double theta) {
  SurfaceSample out;
  out.s = s;
  out.theta = theta;
  double ct = std::cos(theta), st = std::sin(theta);
  if (c.cylinder) {
    out.position = {ct, st, s};
    out.normal = {-ct, -st, 0.0};
    out.k1 = 0.0;
    out.k2 = 1.0;
    out.H = 1.0;
    out.A_sq = 1.0;
    return out;
  }
  double sg = c.sigma_at(s), dsg = c.dsigma_at(s), kp = c.kappa_at(s);
  double tau = c.tau;
  double rho = tau * std::exp(sg);
  double ch = std::cosh(sg);
  out.position = {rho * ct, rho * st, kp};
  // X_s x X_theta normalized; the energy constraint makes it unit directly.
  out.normal = {-tau * ch * ct, -tau * ch * st, dsg};
  // Principal curvatures from the fundamental forms (coordinates are principal
  // lines by rotational symmetry); both metric factors equal rho^2.
  double em = std::exp(-sg);
  out.k2 = em * ch;
  out.k1 = 1.0 - out.k2;
  out.H = out.k1 + out.k2;
  out.A_sq = sqr(out.k1) + sqr(out.k2);
  return out;
}

// Monotone inversion of kappa(s) = z (z reduced modulo the axial period).
inline double curve_param_of_z(const GeneratingCurve& c, double z) {
  if (c.cylinder) return z;
  double T = c.T_period, P = c.s_period;
  double k = std::floor(z / T);
  double zl = z - k * T;
  double a = 0, b = P;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (a + b);
    (c.kappa_at(mid) < zl ? a : b) = mid;
    if (b - a < 1e-15 * P) break;
  }
  return 0.5 * (a + b) + k * P;
}

inline std::pair<double, double> profile_radius(const GeneratingCurve& c, double z) {
  if (c.cylinder) return {1.0, 0.0};
  double s = curve_param_of_z(c, z);
  double sg = c.sigma_at(s), dsg = c.dsigma_at(s);
  double rho = c.tau * std::exp(sg);
  double kp = c.tau * c.tau * std::exp(sg) * std::cosh(sg);
  return {rho, rho * dsg / kp};
}

// Largest offset for which the Fermi map stays comfortably inside the focal set.
inline double default_tube_halfwidth(const GeneratingCurve& c) {
  if (c.cylinder) return 0.3;
  double kmax = 0;
  for (size_t i = 0; i < c.sigma.size(); ++i) {
    double em = std::exp(-c.sigma[i]);
    double k2 = em * std::cosh(c.sigma[i]);
    double k1 = 1.0 - k2;
    kmax = std::max({kmax, std::abs(k1), std::abs(k2)});
  }
  return std::min(0.3, 0.8 / kmax);
}

struct FermiQuery {
  double r = 0, z = 0;
  double t_signed = 0;
  double foot_s = 0;
  bool within_tube = false;
  bool ambiguous = false;
};

// Footpoint of (r, z) on the generating curve (rho(s), kappa(s)): coarse scan
// over one period plus neighbors, then damped Newton on the normal equation.
// Sign of t follows sign(rho(z) - r).
inline FermiQuery signed_distance(const GeneratingCurve& c, double r, double z,
                                  std::optional<double> tube_delta = std::nullopt) {
  if (r < 0) throw domain_error("signed_distance: r must be nonnegative");
  FermiQuery out;
  out.r = r;
  out.z = z;
  double delta = tube_delta.value_or(default_tube_halfwidth(c));
  if (c.cylinder) {
    out.t_signed = 1.0 - r;
    out.foot_s = z;
    out.within_tube = std::abs(out.t_signed) < delta;
    return out;
  }
  double P = c.s_period, T = c.T_period;
  double kz = std::floor(z / T);
  double zl = z - kz * T;

  const int M = 4096;
  double best = 1e300, second = 1e300;
  double sbest = 0, ssecond = 0;
  for (int i = 0; i < M; ++i) {
    double s = -0.5 * P + 2.0 * P * i / M;  // covers [-P/2, 3P/2)
    double d2 = sqr(c.rho_at(s) - r) + sqr(c.kappa_at(s) - zl);
    if (d2 < best) {
      if (std::abs(s - sbest) > 0.05 * P) {
        second = best;
        ssecond = sbest;
      }
      best = d2;
      sbest = s;
    } else if (d2 < second && std::abs(s - sbest) > 0.05 * P) {
      second = d2;
      ssecond = s;
    }
  }

  auto polish = [&](double s) {
    double ds = 2.0 * P / M;
    for (int it = 0; it < 60; ++it) {
      double sg = c.sigma_at(s), dsg = c.dsigma_at(s);
      double rho = c.tau * std::exp(sg);
      double rp = rho * dsg;
      double kp = c.tau * c.tau * std::exp(sg) * std::cosh(sg);
      double ka = c.kappa_at(s);
      // d/ds of half squared distance and its derivative; second derivatives
      // of the curve from the ODE right-hand side.
      double ddsg = -sqr(c.tau) * std::cosh(sg) * std::sinh(sg);
      double rpp = rho * (dsg * dsg + ddsg);
      double kpp = kp * dsg + c.tau * c.tau * std::exp(sg) * std::sinh(sg) * dsg;
      double g = (rho - r) * rp + (ka - zl) * kp;
      double gp = rp * rp + (rho - r) * rpp + kp * kp + (ka - zl) * kpp;
      double step = (gp > 0) ? -g / gp : -g;
      step = std::clamp(step, -ds, ds);
      s += step;
      if (std::abs(step) < 1e-15 * P) break;
    }
    return s;
  };

  double s1 = polish(sbest);
  double d1 = std::hypot(c.rho_at(s1) - r, c.kappa_at(s1) - zl);
  out.foot_s = s1;
  double dist = d1;
  if (second < 1e300) {
    double s2 = polish(ssecond);
    double d2 = std::hypot(c.rho_at(s2) - r, c.kappa_at(s2) - zl);
    if (std::abs(d2 - d1) < 1e-9) {
      out.ambiguous = true;
      if (s2 < s1) out.foot_s = s2;  // smaller-s minimizer wins
      dist = std::min(d1, d2);
    } else if (d2 < d1) {
      out.foot_s = s2;
      dist = d2;
    }
  }
  double rho_z = profile_radius(c, zl).first;
  double sign = (rho_z - r) >= 0 ? 1.0 : -1.0;
  out.t_signed = sign * dist;
  out.foot_s += kz * P;  // report the foot in the query's period
  out.within_tube = std::abs(out.t_signed) < delta;
  return out;
}

inline double offset_mean_curvature(const GeneratingCurve& c, double s, double t) {
  SurfaceSample q = immerse(c, s, 0.0);
  if (std::abs(t * q.k1) >= 1.0)
    throw domain_error("offset beyond focal distance of k1 = " + format_double(q.k1));
  if (std::abs(t * q.k2) >= 1.0)
    throw domain_error("offset beyond focal distance of k2 = " + format_double(q.k2));
  return q.k1 / (1.0 - t * q.k1) + q.k2 / (1.0 - t * q.k2);
}

}  // namespace dch
