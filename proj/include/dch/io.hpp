#pragma once

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dch/bloch.hpp"
#include "dch/chsolver.hpp"
#include "dch/common.hpp"
#include "dch/delaunay.hpp"
#include "dch/floquet.hpp"
#include "dch/jacobi.hpp"
#include "dch/profile.hpp"

namespace dch {

using json = nlohmann::ordered_json;

constexpr int kSolutionFormatVersion = 1;

// All writers go through a temp file plus rename so readers never observe a
// half-written artifact and interrupted runs leave the old file intact.
inline void atomic_write(const std::filesystem::path& file, const std::string& data) {
  namespace fs = std::filesystem;
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  fs::path tmp = file;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out.write(data.data(), std::streamsize(data.size()));
    out.flush();
    if (!out) throw std::runtime_error("short write: " + tmp.string());
  }
  fs::rename(tmp, file);
}

inline std::string read_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + file.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return data;
}

// json.hpp prints doubles with shortest round-trip already; route ours through
// format_double anyway so CSV and JSON agree byte for byte on the same value.
// JSON has no non-finite literals, so those degrade to strings.
inline json jnum(double v) {
  if (!std::isfinite(v)) return json(format_double(v));
  return json::parse(format_double(v));
}

namespace detail {

inline void append_le_doubles(std::string& out, const double* p, size_t n) {
  size_t base = out.size();
  out.resize(base + 8 * n);
  std::memcpy(&out[base], p, 8 * n);
  if constexpr (std::endian::native == std::endian::big) {
    for (size_t k = 0; k < n; ++k) {
      char* b = &out[base + 8 * k];
      for (int i = 0; i < 4; ++i) std::swap(b[i], b[7 - i]);
    }
  }
}

inline void read_le_doubles(const char* p, double* out, size_t n) {
  std::memcpy(out, p, 8 * n);
  if constexpr (std::endian::native == std::endian::big) {
    for (size_t k = 0; k < n; ++k) {
      char* b = reinterpret_cast<char*>(out + k);
      for (int i = 0; i < 4; ++i) std::swap(b[i], b[7 - i]);
    }
  }
}

}  // namespace detail

// Solution container: one JSON header line, a newline, then the grid values
// as raw little-endian float64 in z-major order (row j = 0..Nz, then i).
inline void save_solution(const std::filesystem::path& file, const CHSolution& s) {
  json hdr;
  hdr["format_version"] = kSolutionFormatVersion;
  hdr["tau"] = jnum(s.tau);
  hdr["epsilon"] = jnum(s.epsilon);
  hdr["grid"] = {{"Nr", s.grid.Nr},
                 {"Nz", s.grid.Nz},
                 {"Rmax", jnum(s.grid.Rmax)},
                 {"T_period", jnum(s.grid.T_period)},
                 {"half_cell", s.grid.half_cell}};
  hdr["ell"] = jnum(s.ell);
  hdr["mass"] = jnum(s.mass);
  hdr["residual_norm"] = jnum(s.residual_norm);
  std::string blob = hdr.dump();
  blob += '\n';
  for (int j = 0; j < s.u.rows(); ++j) {
    Eigen::VectorXd row = s.u.row(j);
    detail::append_le_doubles(blob, row.data(), size_t(row.size()));
  }
  atomic_write(file, blob);
}

// Reads a container back. Fermi fields are grid geometry, not payload, so the
// caller passes the curve when downstream diagnostics need them.
inline CHSolution load_solution(const std::filesystem::path& file,
                                const GeneratingCurve* curve = nullptr) {
  std::string blob = read_file(file);
  size_t nl = blob.find('\n');
  if (nl == std::string::npos) throw std::runtime_error("solution header missing: " + file.string());
  json hdr = json::parse(blob.substr(0, nl));
  if (hdr.at("format_version").get<int>() != kSolutionFormatVersion)
    throw std::runtime_error("unsupported solution format in " + file.string());
  CHSolution s;
  s.tau = hdr.at("tau").get<double>();
  s.epsilon = hdr.at("epsilon").get<double>();
  const json& g = hdr.at("grid");
  s.grid.Nr = g.at("Nr").get<int>();
  s.grid.Nz = g.at("Nz").get<int>();
  s.grid.Rmax = g.at("Rmax").get<double>();
  s.grid.T_period = g.at("T_period").get<double>();
  s.grid.half_cell = g.at("half_cell").get<bool>();
  s.ell = hdr.at("ell").get<double>();
  s.mass = hdr.at("mass").get<double>();
  s.residual_norm = hdr.at("residual_norm").get<double>();
  size_t rows = size_t(s.grid.Nz) + 1, cols = size_t(s.grid.Nr) + 1;
  size_t need = nl + 1 + 8 * rows * cols;
  if (blob.size() != need)
    throw std::runtime_error("solution payload size mismatch: " + file.string());
  s.u.resize(Eigen::Index(rows), Eigen::Index(cols));
  std::vector<double> row(cols);
  for (size_t j = 0; j < rows; ++j) {
    detail::read_le_doubles(blob.data() + nl + 1 + 8 * j * cols, row.data(), cols);
    for (size_t i = 0; i < cols; ++i) s.u(Eigen::Index(j), Eigen::Index(i)) = row[i];
  }
  if (curve) fermi_grid(*curve, s.grid, s.t_signed, s.s_foot);
  return s;
}

inline void write_curve_csv(const std::filesystem::path& file, const GeneratingCurve& c) {
  std::string out = "s,sigma,dsigma,kappa\n";
  for (size_t k = 0; k < c.s.size(); ++k) {
    out += format_double(c.s[k]);
    out += ',';
    out += format_double(c.sigma[k]);
    out += ',';
    out += format_double(c.dsigma[k]);
    out += ',';
    out += format_double(c.kappa[k]);
    out += '\n';
  }
  atomic_write(file, out);
}

inline json curve_summary(const GeneratingCurve& c) {
  json j;
  j["tau"] = jnum(c.tau);
  j["s_period"] = jnum(c.s_period);
  j["T_period"] = jnum(c.T_period);
  j["rho_neck"] = jnum(c.rho_neck());
  j["rho_bulge"] = jnum(c.rho_bulge());
  return j;
}

inline void write_hill_csv(const std::filesystem::path& file,
                           const std::vector<HillResult>& modes) {
  std::string out = "n,discriminant,classification\n";
  for (const HillResult& h : modes) {
    out += std::to_string(h.mode_n);
    out += ',';
    out += format_double(h.discriminant);
    out += ',';
    out += to_string(h.classification);
    out += '\n';
  }
  atomic_write(file, out);
}

inline json hill_summary(double tau, const std::vector<HillResult>& modes) {
  json j;
  j["tau"] = jnum(tau);
  json arr = json::array();
  for (const HillResult& h : modes) {
    json m;
    m["n"] = h.mode_n;
    m["discriminant"] = jnum(h.discriminant);
    m["classification"] = to_string(h.classification);
    m["jordan"] = h.jordan;
    m["det_defect"] = jnum(h.det_defect);
    arr.push_back(m);
  }
  j["modes"] = arr;
  return j;
}

inline json jacobi_summary(double tau, const TemperateCount& tc) {
  json j;
  j["tau"] = jnum(tau);
  j["temperate_count"] = tc.count;
  json arr = json::array();
  for (const HillResult& h : tc.per_mode) {
    json m;
    m["n"] = h.mode_n;
    m["discriminant"] = jnum(h.discriminant);
    m["classification"] = to_string(h.classification);
    arr.push_back(m);
  }
  j["per_mode"] = arr;
  return j;
}

inline void write_profile_csv(const std::filesystem::path& file, const Profile1D& p) {
  std::string out = "t,U,dU\n";
  for (size_t k = 0; k < p.t.size(); ++k) {
    out += format_double(p.t[k]);
    out += ',';
    out += format_double(p.U[k]);
    out += ',';
    out += format_double(p.dU[k]);
    out += '\n';
  }
  atomic_write(file, out);
}

inline json profile_summary(const Profile1D& p) {
  json j;
  j["epsilon"] = jnum(p.epsilon);
  j["H"] = jnum(p.H);
  j["ell"] = jnum(p.ell);
  j["sigma_plus"] = jnum(p.sigma_plus);
  j["sigma_minus"] = jnum(p.sigma_minus);
  j["residual_norm"] = jnum(p.residual_norm);
  return j;
}

// Three plotting slices: the radial lines through the neck and the far cell
// end, and the symmetry axis along z.
inline void write_solution_slices(const std::filesystem::path& file, const CHSolution& s) {
  std::string out = "slice,coord,u\n";
  auto radial = [&](const char* name, int j) {
    for (int i = 0; i <= s.grid.Nr; ++i) {
      out += name;
      out += ',';
      out += format_double(s.grid.r_at(i));
      out += ',';
      out += format_double(s.u(j, i));
      out += '\n';
    }
  };
  radial("neck", 0);
  radial("end", s.grid.Nz);
  for (int j = 0; j <= s.grid.Nz; ++j) {
    out += "axis,";
    out += format_double(s.grid.z_at(j));
    out += ',';
    out += format_double(s.u(j, 0));
    out += '\n';
  }
  atomic_write(file, out);
}

inline json solve_summary(const CHSolution& s) {
  json j;
  j["tau"] = jnum(s.tau);
  j["epsilon"] = jnum(s.epsilon);
  j["grid"] = {{"Nr", s.grid.Nr}, {"Nz", s.grid.Nz}};
  j["ell"] = jnum(s.ell);
  j["ell_1d"] = jnum(s.ell_1d);
  j["mass"] = jnum(s.mass);
  j["residual_norm"] = jnum(s.residual_norm);
  j["newton_iters"] = s.newton_iters;
  return j;
}

inline void write_band_csv(const std::filesystem::path& file,
                           const std::vector<BandPoint>& entries) {
  size_t k = 0;
  for (const BandPoint& e : entries) k = std::max(k, e.lambda.size());
  std::string out = "m,zeta";
  for (size_t c = 1; c <= k; ++c) out += ",lambda" + std::to_string(c);
  out += '\n';
  for (const BandPoint& e : entries) {
    out += std::to_string(e.m);
    out += ',';
    out += format_double(e.zeta);
    for (size_t c = 0; c < k; ++c) {
      out += ',';
      if (c < e.lambda.size()) out += format_double(e.lambda[c]);
    }
    out += '\n';
  }
  atomic_write(file, out);
}

inline json bloch_verdict_summary(const BlochSpectrum& sp) {
  json j;
  json zm = json::array();
  for (auto [m, zeta] : sp.verdict.zero_modes) {
    zm.push_back({{"m", m}, {"zeta", jnum(zeta)}});
  }
  j["zero_modes"] = zm;
  json bf = json::array();
  for (const BandFit& f : sp.band_fits) {
    bf.push_back({{"m", f.m},
                  {"mu0", jnum(f.mu0)},
                  {"a", jnum(f.a)},
                  {"rel_resid", jnum(f.rel_resid)}});
  }
  j["band_fits"] = bf;
  j["temperate_count"] = sp.verdict.temperate_count;
  j["min_gap_off_zero"] = jnum(sp.verdict.min_gap_off_zero);
  j["tol_zero"] = jnum(sp.verdict.tol_zero);
  return j;
}

inline void write_json(const std::filesystem::path& file, const json& j) {
  atomic_write(file, j.dump(2) + "\n");
}

}  // namespace dch
