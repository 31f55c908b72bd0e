#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace dch {

using dvec = std::vector<double>;

inline constexpr double pi = 3.14159265358979323846;

struct domain_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double sqr(double x) { return x * x; }

// Least-squares slope of y against x (both already transformed by the caller,
// e.g. log-log for rate fits). Returns {slope, intercept}.
inline std::pair<double, double> fit_line(const dvec& x, const dvec& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw domain_error("fit_line: need at least two points");
  double n = double(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  double det = n * sxx - sx * sx;
  if (det == 0) throw numerical_error("fit_line: degenerate abscissae");
  double slope = (n * sxy - sx * sy) / det;
  double intercept = (sy - slope * sx) / n;
  return {slope, intercept};
}

// Deterministic 64-bit mix; used for seeded starting blocks and content hashes.
inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Uniform double in [-1, 1) from the mixed state.
inline double splitmix_unit(uint64_t& state) {
  return 2.0 * (double(splitmix64(state) >> 11) * 0x1.0p-53) - 1.0;
}

inline uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ull) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline uint64_t fnv1a64(const std::string& s, uint64_t h = 0xcbf29ce484222325ull) {
  return fnv1a64(s.data(), s.size(), h);
}

inline std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

// Shortest round-trip decimal for doubles; keeps CSV/JSON output reproducible.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  double back = std::strtod(buf, nullptr);
  if (back == v) {
    for (int prec = 1; prec < 17; ++prec) {
      char probe[32];
      std::snprintf(probe, sizeof probe, "%.*g", prec, v);
      if (std::strtod(probe, nullptr) == v) return std::string(probe);
    }
  }
  return std::string(buf);
}

}  // namespace dch
