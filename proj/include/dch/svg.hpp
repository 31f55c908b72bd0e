#pragma once

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

#include "dch/bloch.hpp"
#include "dch/chsolver.hpp"
#include "dch/delaunay.hpp"
#include "dch/floquet.hpp"
#include "dch/profile.hpp"

namespace dch {

namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return std::string(buf);
}

// Minimal scatter/line canvas with linear axes; enough for the diagnostic
// plots and fully deterministic output.
struct SvgCanvas {
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  double width = 640, height = 400;
  double ml = 60, mr = 20, mt = 30, mb = 45;
  std::string body;

  double px(double x) const { return ml + (x - x0) / (x1 - x0) * (width - ml - mr); }
  double py(double y) const { return height - mb - (y - y0) / (y1 - y0) * (height - mt - mb); }

  void polyline(const dvec& xs, const dvec& ys, const char* color, double w = 1.5) {
    std::string pts;
    for (size_t i = 0; i < xs.size(); ++i) {
      if (i) pts += ' ';
      pts += svg_num(px(xs[i])) + "," + svg_num(py(ys[i]));
    }
    body += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"" +
            svg_num(w) + "\" points=\"" + pts + "\"/>\n";
  }

  void hline(double y, const char* color, const char* dash = nullptr) {
    body += "<line x1=\"" + svg_num(px(x0)) + "\" y1=\"" + svg_num(py(y)) + "\" x2=\"" +
            svg_num(px(x1)) + "\" y2=\"" + svg_num(py(y)) + "\" stroke=\"" + color + "\"";
    if (dash) body += " stroke-dasharray=\"" + std::string(dash) + "\"";
    body += " stroke-width=\"1\"/>\n";
  }

  void rect(double xa, double ya, double xb, double yb, const std::string& fill) {
    double rx = px(xa), ry = py(yb);
    body += "<rect x=\"" + svg_num(rx) + "\" y=\"" + svg_num(ry) + "\" width=\"" +
            svg_num(px(xb) - rx) + "\" height=\"" + svg_num(py(ya) - ry) + "\" fill=\"" + fill +
            "\"/>\n";
  }

  void text(double xpix, double ypix, const std::string& s, const char* anchor = "start") {
    body += "<text x=\"" + svg_num(xpix) + "\" y=\"" + svg_num(ypix) +
            "\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"" + anchor + "\">" + s +
            "</text>\n";
  }

  void frame(const std::string& title, const std::string& xlabel, const std::string& ylabel) {
    body += "<rect x=\"" + svg_num(ml) + "\" y=\"" + svg_num(mt) + "\" width=\"" +
            svg_num(width - ml - mr) + "\" height=\"" + svg_num(height - mt - mb) +
            "\" fill=\"none\" stroke=\"black\"/>\n";
    text(0.5 * width, mt - 10, title, "middle");
    text(0.5 * width, height - 8, xlabel, "middle");
    text(12, mt - 10, ylabel);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", x0);
    text(ml, height - mb + 16, buf, "middle");
    std::snprintf(buf, sizeof buf, "%.3g", x1);
    text(width - mr, height - mb + 16, buf, "middle");
    std::snprintf(buf, sizeof buf, "%.3g", y0);
    text(ml - 6, height - mb, buf, "end");
    std::snprintf(buf, sizeof buf, "%.3g", y1);
    text(ml - 6, mt + 10, buf, "end");
  }

  std::string finish() const {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + svg_num(width) +
           "\" height=\"" + svg_num(height) + "\" viewBox=\"0 0 " + svg_num(width) + " " +
           svg_num(height) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" +
           body + "</svg>\n";
  }
};

inline const char* band_color(int m) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                 "#8c564b"};
  return colors[m % 6];
}

}  // namespace detail

// Meridian profile rho(z) of the generating curve over one axial period.
inline std::string svg_curves(const GeneratingCurve& c) {
  detail::SvgCanvas cv;
  int N = 400;
  dvec zs(N + 1), rs(N + 1);
  for (int i = 0; i <= N; ++i) {
    zs[i] = c.T_period * i / N;
    rs[i] = profile_radius(c, zs[i]).first;
  }
  cv.x0 = 0;
  cv.x1 = c.T_period;
  cv.y0 = 0;
  cv.y1 = c.rho_bulge() * 1.1;
  cv.frame("generating curve, tau = " + format_double(c.tau), "z", "rho");
  cv.hline(c.rho_neck(), "#999999", "4 3");
  cv.hline(c.rho_bulge(), "#999999", "4 3");
  cv.polyline(zs, rs, "#1f77b4", 2.0);
  return cv.finish();
}

// Discriminant bars per angular mode with the trace = 2 reference line.
inline std::string svg_discriminants(double tau, const std::vector<HillResult>& modes) {
  detail::SvgCanvas cv;
  double dmax = 2.0;
  for (const HillResult& h : modes) dmax = std::max(dmax, h.discriminant);
  cv.x0 = -0.5;
  cv.x1 = double(modes.size()) - 0.5;
  cv.y0 = 0;
  cv.y1 = dmax * 1.08;
  cv.frame("Hill discriminants, tau = " + format_double(tau), "mode n", "Delta");
  for (size_t n = 0; n < modes.size(); ++n) {
    const char* fill = modes[n].classification == HillClass::parabolic ? "#d62728" : "#1f77b4";
    cv.rect(double(n) - 0.35, 0.0, double(n) + 0.35, modes[n].discriminant, fill);
  }
  cv.hline(2.0, "#333333", "6 3");
  return cv.finish();
}

// Solved interface profile against its heteroclinic reference.
inline std::string svg_profile(const Profile1D& p) {
  detail::SvgCanvas cv;
  dvec theta(p.t.size());
  for (size_t i = 0; i < p.t.size(); ++i) theta[i] = heteroclinic_theta(p.t[i]);
  double lo = -1.2, hi = 1.2;
  for (double u : p.U) {
    lo = std::min(lo, u - 0.05);
    hi = std::max(hi, u + 0.05);
  }
  cv.x0 = p.t.front();
  cv.x1 = p.t.back();
  cv.y0 = lo;
  cv.y1 = hi;
  cv.frame("profile, epsilon = " + format_double(p.epsilon), "xi", "U");
  cv.hline(0.0, "#cccccc");
  cv.polyline(p.t, theta, "#999999", 1.0);
  cv.polyline(p.t, p.U, "#1f77b4", 2.0);
  return cv.finish();
}

// Grayscale heat map of the solution over the computational cell; the white
// band marks the interface region between the two plateaus.
inline std::string svg_interface(const CHSolution& s) {
  detail::SvgCanvas cv;
  cv.width = 720;
  cv.height = 480;
  int Nr = s.grid.Nr, Nz = s.grid.Nz;
  int sr = std::max(1, Nr / 128), sz = std::max(1, Nz / 128);
  cv.x0 = 0;
  cv.x1 = s.grid.Rmax;
  cv.y0 = 0;
  cv.y1 = s.grid.z_at(Nz);
  cv.frame("interface, tau = " + format_double(s.tau) + ", epsilon = " +
               format_double(s.epsilon),
           "r", "z");
  for (int j = 0; j < Nz; j += sz)
    for (int i = 0; i < Nr; i += sr) {
      double u = s.u(j, i);
      int g = int(std::clamp(255.0 * (u + 1.0) / 2.0, 0.0, 255.0));
      char fill[8];
      std::snprintf(fill, sizeof fill, "#%02x%02x%02x", g, g, g);
      cv.rect(s.grid.r_at(i), s.grid.z_at(j), s.grid.r_at(std::min(Nr, i + sr)),
              s.grid.z_at(std::min(Nz, j + sz)), fill);
    }
  return cv.finish();
}

// Smallest-magnitude pencil eigenvalue against zeta, one trace per angular
// mode, with the near-zero tolerance band shaded.
inline std::string svg_bands(const BlochSpectrum& sp, double tau, double eps) {
  detail::SvgCanvas cv;
  int m_max = 0;
  double lo = 0, hi = 0, zmax = 0;
  for (const BandPoint& e : sp.entries) {
    m_max = std::max(m_max, e.m);
    lo = std::min(lo, e.lambda[0]);
    hi = std::max(hi, e.lambda[0]);
    zmax = std::max(zmax, e.zeta);
  }
  cv.x0 = 0;
  cv.x1 = zmax;
  cv.y0 = lo - 0.05 * (hi - lo);
  cv.y1 = hi + 0.05 * (hi - lo);
  cv.frame("bands, tau = " + format_double(tau) + ", epsilon = " + format_double(eps), "zeta",
           "lambda_min");
  cv.rect(cv.x0, -sp.verdict.tol_zero, cv.x1, sp.verdict.tol_zero, "#f0e0e0");
  cv.hline(0.0, "#333333", "6 3");
  for (int m = 0; m <= m_max; ++m) {
    std::vector<std::pair<double, double>> pts;
    for (const BandPoint& e : sp.entries)
      if (e.m == m) pts.emplace_back(e.zeta, e.lambda[0]);
    std::sort(pts.begin(), pts.end());
    dvec xs, ys;
    for (auto [z, l] : pts) {
      xs.push_back(z);
      ys.push_back(l);
    }
    cv.polyline(xs, ys, detail::band_color(m), 1.8);
    cv.text(cv.px(xs.back()) + 4, cv.py(ys.back()) + 4, "m=" + std::to_string(m));
  }
  return cv.finish();
}

inline const std::vector<std::string>& plot_kinds() {
  static const std::vector<std::string> kinds = {"bands", "curves", "discriminants",
                                                 "interface", "profile"};
  return kinds;
}

}  // namespace dch
