#pragma once

// Hill-equation monodromy for the mode-reduced stability potentials
// q_n(s) = tau^2 cosh(2 sigma(s)) - n^2, discriminant classification and the
// temperate-growth bookkeeping consumed by the kernel-count machinery.

#include <array>
#include <complex>
#include <string>

#include "common.hpp"
#include "delaunay.hpp"

namespace dch {

using cplx = std::complex<double>;

struct Mat2 {
  double a = 1, b = 0, c = 0, d = 1;  // [[a, b], [c, d]]
  double trace() const { return a + d; }
  double det() const { return a * d - b * c; }
};

enum class HillClass { elliptic, parabolic, hyperbolic };

inline const char* to_string(HillClass c) {
  switch (c) {
    case HillClass::elliptic: return "elliptic";
    case HillClass::parabolic: return "parabolic";
    default: return "hyperbolic";
  }
}

struct HillResult {
  int mode_n = 0;
  dvec potential;            // samples of q_n over one period (closed grid)
  Mat2 monodromy{};
  double discriminant = 0;   // tr M
  HillClass classification = HillClass::parabolic;
  bool jordan = false;       // at |Delta| = 2: rank(M - sign(Delta) I) == 1
  std::array<cplx, 2> floquet_exponents{};
  double det_defect = 0;     // |det M - 1| / max(1, entry scale)^2; det is quadratic in entries
};

// Fundamental matrix of v'' + q(s) v = 0 over one period. q is sampled on the
// closed uniform grid q[0..N] with q[N] = q[0]; RK4 with midpoint values from
// 4-point interpolation, so the overall order stays 4.
inline Mat2 monodromy(const dvec& q, double s_period) {
  size_t N = q.size() - 1;
  if (N < 64) throw domain_error("monodromy: need at least 64 potential samples");
  double h = s_period / double(N);
  auto qmid = [&](size_t i) {
    // midpoint between samples i and i+1
    double qm1 = q[i == 0 ? N - 1 : i - 1];
    double qp2 = q[i + 2 <= N ? i + 2 : i + 2 - N];
    return (-qm1 + 9.0 * q[i] + 9.0 * q[i + 1] - qp2) / 16.0;
  };
  double v1 = 1, w1 = 0;  // solution with (v, v') = (1, 0)
  double v2 = 0, w2 = 1;  // solution with (v, v') = (0, 1)
  for (size_t i = 0; i < N; ++i) {
    double q0 = q[i], qm = qmid(i), q1 = q[i + 1];
    auto step = [&](double& v, double& w) {
      double k1v = w, k1w = -q0 * v;
      double k2v = w + 0.5 * h * k1w, k2w = -qm * (v + 0.5 * h * k1v);
      double k3v = w + 0.5 * h * k2w, k3w = -qm * (v + 0.5 * h * k2v);
      double k4v = w + h * k3w, k4w = -q1 * (v + h * k3v);
      v += h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
      w += h / 6 * (k1w + 2 * k2w + 2 * k3w + k4w);
    };
    step(v1, w1);
    step(v2, w2);
  }
  return Mat2{v1, v2, w1, w2};
}

inline HillResult hill_analyze(const GeneratingCurve& curve, int mode_n,
                               double parabolic_tol = 1e-6) {
  if (mode_n < 0) throw domain_error("hill_analyze: mode_n must be >= 0");
  HillResult out;
  out.mode_n = mode_n;
  double P;
  if (curve.cylinder) {
    P = curve.s_period;
    out.potential.assign(4097, 1.0 - double(mode_n) * double(mode_n));
  } else {
    P = curve.s_period;
    out.potential.resize(curve.sigma.size());
    for (size_t i = 0; i < curve.sigma.size(); ++i)
      out.potential[i] =
          sqr(curve.tau) * std::cosh(2.0 * curve.sigma[i]) - double(mode_n) * double(mode_n);
  }
  Mat2 M = monodromy(out.potential, P);
  out.monodromy = M;
  out.discriminant = M.trace();
  double scale = std::max({1.0, std::abs(M.a), std::abs(M.b), std::abs(M.c), std::abs(M.d)});
  out.det_defect = std::abs(M.det() - 1.0) / (scale * scale);

  double D = out.discriminant;
  if (std::abs(D - 2.0) <= parabolic_tol || std::abs(D + 2.0) <= parabolic_tol) {
    out.classification = HillClass::parabolic;
    double sign = D > 0 ? 1.0 : -1.0;
    // Jordan test: rank of M - sign*I via its smallest singular value.
    double a = M.a - sign, b = M.b, c = M.c, d = M.d - sign;
    double fro = std::sqrt(a * a + b * b + c * c + d * d);
    double det = std::abs(a * d - b * c);
    double smin = fro > 0 ? det / fro : 0.0;
    out.jordan = fro > 1e-3 && smin < 1e-3;
  } else if (std::abs(D) < 2.0) {
    out.classification = HillClass::elliptic;
  } else {
    out.classification = HillClass::hyperbolic;
  }

  // Multipliers: eigenvalues of M, product 1; exponents mu with e^{mu P} = multiplier.
  // Take the larger root without cancellation, then lam2 = 1/lam1 exactly (det M = 1).
  double half = 0.5 * D;
  cplx lam1;
  if (std::abs(half) >= 1.0) {
    double big = std::abs(half) + std::sqrt(half * half - 1.0);
    lam1 = cplx(std::copysign(big, half), 0.0);
  } else {
    lam1 = cplx(half, std::sqrt(1.0 - half * half));
  }
  cplx lam2 = 1.0 / lam1;
  out.floquet_exponents = {std::log(lam1) / P, std::log(lam2) / P};
  return out;
}

}  // namespace dch
