#pragma once

// Discrete Fourier-Laplace transform on unit-offset lattices sigma0 + Z: the
// forward series, the inverse path integral at fixed Im(zeta) = nu, the
// Plancherel balance and the period-T reduction used by the Bloch layer.

#include <complex>
#include <vector>

#include "common.hpp"

namespace dch {

using cvec = std::vector<std::complex<double>>;

struct TransformPair {
  cvec sequence;   // h(sigma0 + k), k = k_min .. k_min + sequence.size() - 1
  int k_min = 0;
  double sigma0 = 0;  // lattice offset in [0, 1)
  double nu = 0;      // imaginary part of zeta along the integration path
  cvec values;        // hat h at mu_q = 2*pi*q/Q, q = 0..Q-1
  bool truncation_warning = false;

  int Q() const { return int(values.size()); }
};

// hat h(sigma0, mu + i nu) = sum_k h(sigma0 + k) e^{-i (mu + i nu)(sigma0 + k)}
// evaluated on the uniform mu-grid of size Q. Q must be at least the window
// length so the lattice sum is alias-free and the inversion below is exact.
inline TransformPair forward_transform(const cvec& samples, int k_min, double sigma0,
                                       double nu, int mu_grid_size) {
  if (mu_grid_size < int(samples.size()))
    throw domain_error("forward_transform: mu grid smaller than the sample window");
  TransformPair out;
  out.sequence = samples;
  out.k_min = k_min;
  out.sigma0 = sigma0;
  out.nu = nu;
  out.values.resize(mu_grid_size);

  double gmax = 0, gedge = 0;
  cvec g(samples.size());
  for (size_t j = 0; j < samples.size(); ++j) {
    double x = sigma0 + double(k_min + int(j));
    g[j] = samples[j] * std::exp(nu * x);
    gmax = std::max(gmax, std::abs(g[j]));
  }
  if (!samples.empty())
    gedge = std::max(std::abs(g.front()), std::abs(g.back()));
  out.truncation_warning = gmax > 0 && gedge > 1e-10 * gmax;

  for (int q = 0; q < mu_grid_size; ++q) {
    double mu = 2.0 * pi * q / mu_grid_size;
    std::complex<double> acc = 0;
    for (size_t j = 0; j < samples.size(); ++j) {
      double x = sigma0 + double(k_min + int(j));
      acc += g[j] * std::exp(std::complex<double>(0.0, -mu * x));
    }
    out.values[q] = acc;
  }
  return out;
}

// h(sigma0 + k) = (1/2pi) int_0^{2pi} hat h(sigma0, mu + i nu) e^{i (mu + i nu)(sigma0 + k)} dmu,
// quadrature as the plain rectangle sum (exact for the alias-free grid).
inline std::complex<double> inverse_transform(const TransformPair& pair, int k) {
  double x = pair.sigma0 + double(k);
  std::complex<double> acc = 0;
  int Q = pair.Q();
  for (int q = 0; q < Q; ++q) {
    double mu = 2.0 * pi * q / Q;
    acc += pair.values[q] * std::exp(std::complex<double>(0.0, mu * x));
  }
  return acc / double(Q) * std::exp(-pair.nu * x);
}

// Two sides of the Plancherel balance restricted to this lattice fiber:
// (1/2pi) int |hat h|^2 dmu  vs  sum_k |e^{nu(sigma0+k)} h(sigma0+k)|^2.
inline std::pair<double, double> plancherel_sides(const TransformPair& pair) {
  double lhs = 0;
  for (auto& v : pair.values) lhs += std::norm(v);
  lhs /= double(pair.Q());
  double rhs = 0;
  for (size_t j = 0; j < pair.sequence.size(); ++j) {
    double x = pair.sigma0 + double(pair.k_min + int(j));
    rhs += std::norm(pair.sequence[j] * std::exp(pair.nu * x));
  }
  return {lhs, rhs};
}

// Period-T variant: samples live on the lattice T*(sigma0 + Z) and the kernel
// uses zeta/T, so the whole transform reduces to the unit-period one through
// the pullback h_T(x) = h(T x). Implemented by exactly that substitution.
inline TransformPair forward_transform_T(const cvec& samples, int k_min, double sigma0,
                                         double T, double nu, int mu_grid_size) {
  if (T <= 0) throw domain_error("forward_transform_T: period must be positive");
  return forward_transform(samples, k_min, sigma0, nu * T, mu_grid_size);
}

}  // namespace dch
