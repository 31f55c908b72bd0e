#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "dch/cache.hpp"
#include "dch/config.hpp"
#include "dch/io.hpp"
#include "dch/pipeline.hpp"
#include "dch/svg.hpp"

namespace fs = std::filesystem;
using dch::json;

namespace {

// Exit codes: 0 all checks in scope pass, 1 a check failed, 2 config or
// usage error, 3 the computation itself broke down.
constexpr int kExitCheckFail = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Session {
  std::string config_file;
  std::string out_dir;
  bool no_cache = false;
  int jobs = 0;

  dch::RunConfig cfg;
  dch::CacheStore cache;

  void finalize() {
    cfg = config_file.empty() ? dch::RunConfig{} : dch::load_config(config_file);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (no_cache) cfg.cache = false;
    if (jobs > 0) cfg.jobs = jobs;
    cache.root = dch::cache_root_for(cfg.out_dir);
    cache.enabled = cfg.cache;
  }

  fs::path out(const std::string& name) const { return fs::path(cfg.out_dir) / name; }
};

int report_checks(const json& frag, const std::string& stage) {
  bool ok = true;
  for (const json& row : frag.at("checks")) {
    std::string st = row.at("status").get<std::string>();
    const json& m = row.at("measured");
    std::printf("[%s] %s.%s measured %s bound %s\n", st.c_str(), stage.c_str(),
                row.at("name").get<std::string>().c_str(),
                (m.is_string() ? m.get<std::string>() : m.dump()).c_str(),
                row.at("bound").get<std::string>().c_str());
    if (st == "fail") ok = false;
  }
  return ok ? 0 : kExitCheckFail;
}

std::string tag(double v) { return dch::format_double(v); }

dch::CHSolution obtain_solution(Session& s, double tau, double eps,
                                const dch::GeneratingCurve& curve, const dch::Profile1D& prof) {
  std::string key = dch::solve_key(s.cfg, tau, eps);
  fs::path stored = s.cache.entry("solve", key, ".sol");
  if (s.cache.enabled && fs::exists(stored)) return dch::load_solution(stored, &curve);
  dch::GridSpec g = dch::make_grid(curve, s.cfg.nr, s.cfg.nz, true, s.cfg.grid_margin);
  dch::CHSolution sol = dch::newton_solve(curve, prof, g, s.cfg.newton_tol);
  if (s.cache.enabled) dch::save_solution(stored, sol);
  return sol;
}

int cmd_geometry(Session& s, double tau) {
  dch::GeneratingCurve c = dch::solve_generating_curve(tau, s.cfg.ode_tol);
  dch::write_curve_csv(s.out("curve_tau" + tag(tau) + ".csv"), c);
  json frag = dch::geometry_fragment(c);
  dch::write_json(s.out("geometry_tau" + tag(tau) + ".json"), frag.at("summary"));
  return report_checks(frag, "geometry");
}

int cmd_hill(Session& s, double tau) {
  dch::GeneratingCurve c = dch::solve_generating_curve(tau, s.cfg.ode_tol);
  dch::TemperateCount tc = dch::temperate_kernel_count(c, s.cfg.hill_n_max, s.cfg.parabolic_tol);
  dch::write_hill_csv(s.out("hill_tau" + tag(tau) + ".csv"), tc.per_mode);
  json frag = dch::hill_fragment(tau, tc);
  dch::write_json(s.out("hill_tau" + tag(tau) + ".json"), frag.at("summary"));
  return report_checks(frag, "hill");
}

int cmd_jacobi(Session& s, double tau) {
  dch::GeneratingCurve c = dch::solve_generating_curve(tau, s.cfg.ode_tol);
  dch::TemperateCount tc = dch::temperate_kernel_count(c, s.cfg.hill_n_max, s.cfg.parabolic_tol);
  dch::write_hill_csv(s.out("jacobi_tau" + tag(tau) + ".csv"), tc.per_mode);
  json frag = dch::jacobi_fragment(tau, tc);
  dch::write_json(s.out("jacobi_tau" + tag(tau) + ".json"), frag.at("summary"));
  return report_checks(frag, "jacobi");
}

int cmd_profile(Session& s, double eps) {
  dch::Profile1D p =
      dch::solve_profile(eps, 1.0, s.cfg.profile_L, s.cfg.profile_h, s.cfg.profile_tol);
  dch::write_profile_csv(s.out("profile_eps" + tag(eps) + ".csv"), p);
  json frag = dch::profile_fragment(p, s.cfg);
  dch::write_json(s.out("profile_eps" + tag(eps) + ".json"), frag.at("summary"));
  return report_checks(frag, "profile");
}

int cmd_solve(Session& s, double tau, double eps) {
  dch::GeneratingCurve c = dch::solve_generating_curve(tau, s.cfg.ode_tol);
  dch::Profile1D p =
      dch::solve_profile(eps, 1.0, s.cfg.profile_L, s.cfg.profile_h, s.cfg.profile_tol);
  dch::CHSolution sol = obtain_solution(s, tau, eps, c, p);
  std::string base = "solution_tau" + tag(tau) + "_eps" + tag(eps);
  dch::save_solution(s.out(base + ".sol"), sol);
  dch::write_solution_slices(s.out(base + "_slices.csv"), sol);
  json frag = dch::solve_fragment(sol, c, p, s.cfg);
  json summary = frag;
  summary.erase("checks");
  dch::write_json(s.out(base + ".json"), summary);
  return report_checks(frag, "solve");
}

int cmd_bloch(Session& s, double tau, double eps) {
  dch::GeneratingCurve c = dch::solve_generating_curve(tau, s.cfg.ode_tol);
  dch::Profile1D p =
      dch::solve_profile(eps, 1.0, s.cfg.profile_L, s.cfg.profile_h, s.cfg.profile_tol);
  dch::CHSolution sol = obtain_solution(s, tau, eps, c, p);
  dch::BlochContext ctx = dch::make_bloch_context(sol);
  dch::BlochSpectrum sp = dch::band_sweep(ctx, s.cfg.m_max, s.cfg.zeta_grid, s.cfg.eig_k,
                                          s.cfg.tol_zero_factor);
  double kappa =
      dch::fiberwise_orthogonal_coercivity(ctx, p, 4, s.cfg.coercivity_iters);
  std::string base = "bands_tau" + tag(tau) + "_eps" + tag(eps);
  dch::write_band_csv(s.out(base + ".csv"), sp.entries);
  json frag = dch::bloch_fragment(sp, kappa, eps, s.cfg);
  dch::write_json(s.out(base + ".json"), frag.at("verdict"));
  dch::atomic_write(s.out(base + ".svg"), dch::svg_bands(sp, tau, eps));
  return report_checks(frag, "bloch");
}

int cmd_verify_all(Session& s) {
  dch::PipelineOutcome out = dch::run_pipeline(s.cfg, s.cache);
  dch::write_json(s.out("report.json"), out.report);
  dch::atomic_write(s.out("report.txt"), out.summary);
  std::fputs(out.summary.c_str(), stdout);
  std::printf("cache: %d hits, %d misses\n", out.cache_hits, out.cache_misses);
  return out.pass ? 0 : kExitCheckFail;
}

int cmd_plot(Session& s, const std::string& kind, double tau, double eps) {
  std::string svg, name;
  if (kind == "curves") {
    svg = dch::svg_curves(dch::solve_generating_curve(tau, s.cfg.ode_tol));
    name = "curves_tau" + tag(tau);
  } else if (kind == "discriminants") {
    dch::GeneratingCurve c = dch::solve_generating_curve(tau, s.cfg.ode_tol);
    dch::TemperateCount tc =
        dch::temperate_kernel_count(c, s.cfg.hill_n_max, s.cfg.parabolic_tol);
    svg = dch::svg_discriminants(tau, tc.per_mode);
    name = "discriminants_tau" + tag(tau);
  } else if (kind == "profile") {
    svg = dch::svg_profile(
        dch::solve_profile(eps, 1.0, s.cfg.profile_L, s.cfg.profile_h, s.cfg.profile_tol));
    name = "profile_eps" + tag(eps);
  } else if (kind == "interface") {
    dch::GeneratingCurve c = dch::solve_generating_curve(tau, s.cfg.ode_tol);
    dch::Profile1D p =
        dch::solve_profile(eps, 1.0, s.cfg.profile_L, s.cfg.profile_h, s.cfg.profile_tol);
    svg = dch::svg_interface(obtain_solution(s, tau, eps, c, p));
    name = "interface_tau" + tag(tau) + "_eps" + tag(eps);
  } else if (kind == "bands") {
    dch::GeneratingCurve c = dch::solve_generating_curve(tau, s.cfg.ode_tol);
    dch::Profile1D p =
        dch::solve_profile(eps, 1.0, s.cfg.profile_L, s.cfg.profile_h, s.cfg.profile_tol);
    dch::CHSolution sol = obtain_solution(s, tau, eps, c, p);
    dch::BlochContext ctx = dch::make_bloch_context(sol);
    svg = dch::svg_bands(dch::band_sweep(ctx, s.cfg.m_max, s.cfg.zeta_grid, s.cfg.eig_k,
                                         s.cfg.tol_zero_factor),
                         tau, eps);
    name = "bands_tau" + tag(tau) + "_eps" + tag(eps);
  } else {
    std::string valid;
    for (const std::string& k : dch::plot_kinds()) valid += (valid.empty() ? "" : ", ") + k;
    std::fprintf(stderr, "unknown plot kind '%s'; valid kinds: %s\n", kind.c_str(),
                 valid.c_str());
    return kExitConfig;
  }
  fs::path file = s.out(name + ".svg");
  dch::atomic_write(file, svg);
  std::printf("wrote %s\n", file.string().c_str());
  return 0;
}

int cmd_report(Session& s) {
  fs::path file = s.out("report.json");
  if (!fs::exists(file)) {
    std::fprintf(stderr, "no report at %s; run verify-all first\n", file.string().c_str());
    return kExitConfig;
  }
  json report = json::parse(dch::read_file(file));
  std::fputs(dch::render_summary(report).c_str(), stdout);
  return report.at("pass").get<bool>() ? 0 : kExitCheckFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delaunay constrained interface toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  Session s;
  app.add_option("--config", s.config_file, "config file (key = value sections)");
  app.add_option("--out", s.out_dir, "output directory");
  app.add_flag("--no-cache", s.no_cache, "disable the stage cache");
  app.add_option("--jobs", s.jobs, "parallel blocks for verify-all");

  double tau = 0.6, eps = 0.1;
  std::string kind;

  CLI::App* geometry = app.add_subcommand("geometry", "generating curve table and summary");
  geometry->add_option("--tau", tau, "neck parameter in (0, 1)");
  CLI::App* hill = app.add_subcommand("hill", "Hill discriminants per angular mode");
  hill->add_option("--tau", tau, "neck parameter in (0, 1)");
  CLI::App* jacobi = app.add_subcommand("jacobi", "temperate kernel census");
  jacobi->add_option("--tau", tau, "neck parameter in (0, 1)");
  CLI::App* profile = app.add_subcommand("profile", "1d interface profile");
  profile->add_option("--epsilon", eps, "interface width");
  CLI::App* solve = app.add_subcommand("solve", "axisymmetric constrained solve");
  solve->add_option("--tau", tau, "neck parameter in (0, 1)");
  solve->add_option("--epsilon", eps, "interface width");
  CLI::App* bloch = app.add_subcommand("bloch", "band sweep and stability verdict");
  bloch->add_option("--tau", tau, "neck parameter in (0, 1)");
  bloch->add_option("--epsilon", eps, "interface width");
  CLI::App* verify = app.add_subcommand("verify-all", "full pipeline over the config lists");
  CLI::App* plot = app.add_subcommand("plot", "emit an SVG diagnostic");
  plot->add_option("--kind", kind, "bands, curves, discriminants, interface, profile")
      ->required();
  plot->add_option("--tau", tau, "neck parameter in (0, 1)");
  plot->add_option("--epsilon", eps, "interface width");
  CLI::App* report = app.add_subcommand("report", "re-render the last verify-all report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    s.finalize();
    if (geometry->parsed()) return cmd_geometry(s, tau);
    if (hill->parsed()) return cmd_hill(s, tau);
    if (jacobi->parsed()) return cmd_jacobi(s, tau);
    if (profile->parsed()) return cmd_profile(s, eps);
    if (solve->parsed()) return cmd_solve(s, tau, eps);
    if (bloch->parsed()) return cmd_bloch(s, tau, eps);
    if (verify->parsed()) return cmd_verify_all(s);
    if (plot->parsed()) return cmd_plot(s, kind, tau, eps);
    if (report->parsed()) return cmd_report(s);
  } catch (const dch::config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const dch::domain_error& e) {
    std::fprintf(stderr, "domain error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  }
  return kExitConfig;
}
