#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <thread>

#include "dch/cache.hpp"
#include "dch/config.hpp"
#include "dch/io.hpp"

namespace dch {

namespace detail {

inline json check_row(const std::string& name, const json& measured, const std::string& bound,
                      bool pass) {
  return json{{"name", name},
              {"measured", measured},
              {"bound", bound},
              {"status", pass ? "pass" : "fail"}};
}

inline json check_skip(const std::string& name, const json& measured, const std::string& bound,
                       const std::string& why) {
  return json{
      {"name", name}, {"measured", measured}, {"bound", bound}, {"status", "skipped"},
      {"note", why}};
}

inline bool fragment_passes(const json& frag) {
  if (!frag.contains("checks")) return true;
  for (const json& row : frag.at("checks"))
    if (row.at("status").get<std::string>() == "fail") return false;
  return true;
}

}  // namespace detail

inline json geometry_fragment(const GeneratingCurve& c) {
  double h_dev = 0;
  for (int i = 0; i < 100; ++i)
    for (int j = 0; j < 16; ++j) {
      double s = c.s_period * (i + 0.5) / 100.0;
      double theta = 2.0 * pi * j / 16.0;
      h_dev = std::max(h_dev, std::abs(immerse(c, s, theta).H - 1.0));
    }
  double neck_dev = std::abs(profile_radius(c, 0.0).first - c.rho_neck());
  double bulge_dev = std::abs(profile_radius(c, 0.5 * c.T_period).first - c.rho_bulge());
  json frag;
  frag["summary"] = curve_summary(c);
  frag["energy_drift"] = jnum(c.energy_drift);
  frag["checks"] = json::array(
      {detail::check_row("mean_curvature_dev", jnum(h_dev), "<= 1e-8", h_dev <= 1e-8),
       detail::check_row("energy_drift", jnum(c.energy_drift), "<= 1e-10",
                         c.energy_drift <= 1e-10),
       detail::check_row("rho_neck_dev", jnum(neck_dev), "<= 1e-8", neck_dev <= 1e-8),
       detail::check_row("rho_bulge_dev", jnum(bulge_dev), "<= 1e-8", bulge_dev <= 1e-8)});
  return frag;
}

inline json hill_fragment(double tau, const TemperateCount& tc) {
  double d0 = std::abs(tc.per_mode.at(0).discriminant - 2.0);
  double d1 = std::abs(tc.per_mode.at(1).discriminant - 2.0);
  double margin = std::numeric_limits<double>::infinity();
  for (size_t n = 2; n < tc.per_mode.size(); ++n)
    margin = std::min(margin, tc.per_mode[n].discriminant - 2.0);
  json frag;
  frag["summary"] = hill_summary(tau, tc.per_mode);
  frag["checks"] = json::array(
      {detail::check_row("discriminant_n0_dev", jnum(d0), "<= 1e-8", d0 <= 1e-8),
       detail::check_row("discriminant_n1_dev", jnum(d1), "<= 1e-8", d1 <= 1e-8),
       detail::check_row("hyperbolic_margin", jnum(margin), ">= 0.01", margin >= 0.01)});
  return frag;
}

inline json jacobi_fragment(double tau, const TemperateCount& tc) {
  json frag;
  frag["summary"] = jacobi_summary(tau, tc);
  frag["checks"] = json::array({detail::check_row("temperate_count", tc.count, "== 6",
                                                  tc.count == 6)});
  return frag;
}

inline json profile_fragment(const Profile1D& p, const RunConfig& cfg) {
  double ell_limit = -std::sqrt(2.0) / 3.0;
  double ell_dev = std::abs(p.ell - ell_limit);
  json frag;
  frag["summary"] = profile_summary(p);
  frag["newton_iters"] = p.newton_iters;
  frag["checks"] = json::array(
      {detail::check_row("profile_residual", jnum(p.residual_norm),
                         "<= " + format_double(cfg.profile_tol),
                         p.residual_norm <= cfg.profile_tol),
       detail::check_row("plateau_clean", p.plateau_warning ? 1 : 0, "== 0",
                         !p.plateau_warning),
       detail::check_row("ell_near_limit", jnum(ell_dev), "<= 0.02", ell_dev <= 0.02)});
  return frag;
}

inline json solve_fragment(const CHSolution& s, const GeneratingCurve& c, const Profile1D& p,
                           const RunConfig& cfg) {
  AnsatzReport ansatz = validate_ansatz(s, p, c);
  DecayFit outer = decay_check(s, true);
  DecayFit inner = decay_check(s, false);
  Correspondence t3 = t3_correspondence(s, p, c);
  json frag;
  frag["summary"] = solve_summary(s);
  frag["ansatz"] = {{"delta", jnum(ansatz.delta)}, {"sup_error", jnum(ansatz.sup_error)}};
  frag["decay"] = {{"outer_rate", jnum(outer.c_fit)},
                   {"outer_points", outer.npts},
                   {"inner_rate", jnum(inner.c_fit)},
                   {"inner_points", inner.npts}};
  frag["correspondence"] = {{"relative", jnum(t3.relative)},
                            {"sup_model", jnum(t3.sup_model)}};
  double ell_gap = std::abs(s.ell - s.ell_1d);
  double ell_bound = s.epsilon * s.epsilon;
  json checks = json::array(
      {detail::check_row("newton_residual", jnum(s.residual_norm),
                         "<= " + format_double(cfg.newton_tol),
                         s.residual_norm <= cfg.newton_tol),
       detail::check_row("ell_consistency", jnum(ell_gap), "<= " + format_double(ell_bound),
                         ell_gap <= ell_bound)});
  // The decay rate needs a few mesh points per interface width to mean
  // anything, so it only gates when the grid resolves epsilon.
  if (std::min(s.grid.hr(), s.grid.hz()) <= 0.5 * s.epsilon) {
    bool ok = !outer.insufficient && outer.c_fit >= 1.2 && outer.c_fit <= 1.45;
    checks.push_back(detail::check_row("decay_rate_outer", jnum(outer.c_fit),
                                       "in [1.2, 1.45]", ok));
  } else {
    checks.push_back(detail::check_skip("decay_rate_outer", jnum(outer.c_fit),
                                        "in [1.2, 1.45]", "grid coarser than epsilon/2"));
  }
  frag["checks"] = checks;
  return frag;
}

inline json bloch_fragment(const BlochSpectrum& sp, double kappa, double eps,
                           const RunConfig& cfg) {
  const BlochVerdict& v = sp.verdict;
  std::set<int> at_center;
  int spurious = 0;
  for (auto [m, zeta] : v.zero_modes) {
    if (zeta == 0.0) at_center.insert(m);
    if (m >= 2) ++spurious;
  }
  bool center_ok = at_center == std::set<int>{0, 1};
  std::string center_str;
  for (int m : at_center) center_str += (center_str.empty() ? "m=" : ",m=") + std::to_string(m);
  if (center_str.empty()) center_str = "none";

  json frag;
  frag["verdict"] = bloch_verdict_summary(sp);
  frag["gap2_off_zero"] = jnum(v.gap2_off_zero);
  frag["translation_floors"] = {{"m0", jnum(v.translation_m0)}, {"m1", jnum(v.translation_m1)}};
  double eps_kappa = eps * kappa;
  frag["coercivity"] = {{"kappa", jnum(kappa)},
                        {"eps_kappa", jnum(eps_kappa)},
                        {"iterations", cfg.coercivity_iters}};
  json checks = json::array(
      {detail::check_row("zero_modes_at_center", center_str, "exactly m=0,m=1", center_ok),
       detail::check_row("zero_modes_high_m", spurious, "== 0", spurious == 0),
       detail::check_row("temperate_count", v.temperate_count, "== 6",
                         v.temperate_count == 6),
       detail::check_row("gap2_separation", jnum(v.gap2_off_zero),
                         "> tol_zero = " + format_double(v.tol_zero),
                         v.gap2_off_zero > v.tol_zero),
       detail::check_row("coercivity_floor", jnum(eps_kappa), ">= 0.5", eps_kappa >= 0.5)});
  for (const BandFit& f : sp.band_fits) {
    bool ok = f.a > 0 && f.rel_resid < 0.05;
    checks.push_back(detail::check_row("band_fit_m" + std::to_string(f.m), jnum(f.a),
                                       "a > 0, resid < 5%", ok));
  }
  frag["checks"] = checks;
  return frag;
}

struct PipelineOutcome {
  json report;
  std::string summary;
  bool pass = false;
  int cache_hits = 0, cache_misses = 0;
};

// Stage keys chain upstream keys with the config section each stage reads,
// so the CLI one-shot commands and the pipeline share cache entries.
inline std::string geometry_key(const RunConfig& cfg, double tau) {
  return cache_key({"geometry", format_double(tau), cfg.section_geometry()});
}
inline std::string profile_key(const RunConfig& cfg, double eps) {
  return cache_key({"profile", format_double(eps), cfg.section_profile()});
}
inline std::string solve_key(const RunConfig& cfg, double tau, double eps) {
  return cache_key({"solve", geometry_key(cfg, tau), profile_key(cfg, eps),
                    cfg.section_solver()});
}
inline std::string bloch_key(const RunConfig& cfg, double tau, double eps) {
  return cache_key({"bloch", solve_key(cfg, tau, eps), cfg.section_bloch()});
}

// Rebuilds the human-readable summary from a report; pure function of the
// JSON so a re-render is byte-identical to the original.
inline std::string render_summary(const json& report) {
  std::string text = "verification report\n";
  for (const json& node : report.at("blocks")) {
    text += "block tau=" + node.at("tau").dump() + " epsilon=" + node.at("epsilon").dump() +
            ": ";
    if (node.contains("error")) {
      text += "ERROR at stage " + node.at("error").at("stage").get<std::string>() + ": " +
              node.at("error").at("what").get<std::string>() + "\n";
      continue;
    }
    text += node.at("pass").get<bool>() ? "PASS\n" : "FAIL\n";
    for (const char* stage : {"geometry", "hill", "jacobi", "profile", "solve", "bloch"}) {
      if (!node.contains(stage) || !node.at(stage).contains("checks")) continue;
      for (const json& row : node.at(stage).at("checks")) {
        std::string st = row.at("status").get<std::string>();
        const json& m = row.at("measured");
        std::string mstr = m.is_string() ? m.get<std::string>() : m.dump();
        text += "  [" + st + "] " + stage + "." + row.at("name").get<std::string>() +
                " measured " + mstr + " bound " + row.at("bound").get<std::string>() + "\n";
      }
    }
  }
  text += std::string("overall: ") + (report.at("pass").get<bool>() ? "PASS" : "FAIL") + "\n";
  return text;
}

namespace detail {

// Lazy per-tau / per-eps shared objects; threads take the lock only to fill
// the memo, never while solving.
struct SharedPool {
  std::mutex mu;
  std::map<std::string, std::shared_ptr<const GeneratingCurve>> curves;
  std::map<std::string, std::shared_ptr<const Profile1D>> profiles;

  std::shared_ptr<const GeneratingCurve> curve(double tau, const RunConfig& cfg) {
    std::string key = format_double(tau);
    {
      std::lock_guard<std::mutex> lk(mu);
      auto it = curves.find(key);
      if (it != curves.end()) return it->second;
    }
    auto c = std::make_shared<GeneratingCurve>(solve_generating_curve(tau, cfg.ode_tol));
    std::lock_guard<std::mutex> lk(mu);
    return curves.emplace(key, std::move(c)).first->second;
  }

  std::shared_ptr<const Profile1D> profile(double eps, const RunConfig& cfg) {
    std::string key = format_double(eps);
    {
      std::lock_guard<std::mutex> lk(mu);
      auto it = profiles.find(key);
      if (it != profiles.end()) return it->second;
    }
    auto p = std::make_shared<Profile1D>(
        solve_profile(eps, 1.0, cfg.profile_L, cfg.profile_h, cfg.profile_tol));
    std::lock_guard<std::mutex> lk(mu);
    return profiles.emplace(key, std::move(p)).first->second;
  }
};

struct StageFailure {
  std::string stage, what;
};

// Fetch-or-compute wrapper: fragments are self-contained JSON nodes, so a
// cache hit never needs the stage recomputed just to rebuild the report.
template <typename Fn>
inline json cached_fragment(const CacheStore& cache, const std::string& stage,
                            const std::string& key, Fn&& compute) {
  if (auto hit = cache.fetch(stage, key)) return json::parse(*hit);
  json frag = compute();
  cache.put(stage, key, frag.dump());
  return frag;
}

}  // namespace detail

// Runs delaunay -> hill/jacobi -> profile -> solve -> bloch for every
// (tau, epsilon) pair. A stage failure marks that block and later blocks
// still run; the report is byte-stable for a fixed config and code version.
inline PipelineOutcome run_pipeline(const RunConfig& cfg, const CacheStore& cache) {
  detail::SharedPool pool;

  struct TauPack {
    std::string geo_key;
    json geo, hill, jac;
    bool failed = false;
    detail::StageFailure failure;
  };
  std::map<std::string, TauPack> tau_packs;
  for (double tau : cfg.tau_list) {
    std::string tkey = format_double(tau);
    if (tau_packs.count(tkey)) continue;
    TauPack pack;
    pack.geo_key = geometry_key(cfg, tau);
    try {
      pack.geo = detail::cached_fragment(cache, "geometry", pack.geo_key, [&] {
        return geometry_fragment(*pool.curve(tau, cfg));
      });
      std::string hill_key = cache_key({"hill", pack.geo_key, cfg.section_hill()});
      std::string jac_key = cache_key({"jacobi", pack.geo_key, cfg.section_hill()});
      bool have_hill = cache.has("hill", hill_key, ".json");
      bool have_jac = cache.has("jacobi", jac_key, ".json");
      if (have_hill && have_jac) {
        pack.hill = json::parse(*cache.fetch("hill", hill_key));
        pack.jac = json::parse(*cache.fetch("jacobi", jac_key));
      } else {
        TemperateCount tc =
            temperate_kernel_count(*pool.curve(tau, cfg), cfg.hill_n_max, cfg.parabolic_tol);
        pack.hill = detail::cached_fragment(cache, "hill", hill_key,
                                            [&] { return hill_fragment(tau, tc); });
        pack.jac = detail::cached_fragment(cache, "jacobi", jac_key,
                                           [&] { return jacobi_fragment(tau, tc); });
      }
    } catch (const std::exception& e) {
      pack.failed = true;
      pack.failure = {pack.geo.is_null() ? "geometry" : "hill", e.what()};
    }
    tau_packs.emplace(tkey, std::move(pack));
  }

  struct EpsPack {
    std::string key;
    json frag;
    bool failed = false;
    detail::StageFailure failure;
  };
  std::map<std::string, EpsPack> eps_packs;
  for (double eps : cfg.epsilon_list) {
    std::string ekey = format_double(eps);
    if (eps_packs.count(ekey)) continue;
    EpsPack pack;
    pack.key = profile_key(cfg, eps);
    try {
      pack.frag = detail::cached_fragment(cache, "profile", pack.key, [&] {
        return profile_fragment(*pool.profile(eps, cfg), cfg);
      });
    } catch (const std::exception& e) {
      pack.failed = true;
      pack.failure = {"profile", e.what()};
    }
    eps_packs.emplace(ekey, std::move(pack));
  }

  struct BlockJob {
    double tau = 0, eps = 0;
    json node;
    bool pass = false;
  };
  std::vector<BlockJob> blocks;
  for (double tau : cfg.tau_list)
    for (double eps : cfg.epsilon_list) blocks.push_back({tau, eps, json{}, false});

  auto run_block = [&](BlockJob& b) {
    const TauPack& tp = tau_packs.at(format_double(b.tau));
    const EpsPack& ep = eps_packs.at(format_double(b.eps));
    json node;
    node["tau"] = jnum(b.tau);
    node["epsilon"] = jnum(b.eps);
    node["geometry"] = tp.geo;
    node["hill"] = tp.hill;
    node["jacobi"] = tp.jac;
    node["profile"] = ep.frag;
    auto abort_block = [&](const std::string& stage, const std::string& what) {
      node["error"] = {{"stage", stage}, {"what", what}};
      node["pass"] = false;
      b.node = std::move(node);
      b.pass = false;
    };
    if (tp.failed) return abort_block(tp.failure.stage, tp.failure.what);
    if (ep.failed) return abort_block(ep.failure.stage, ep.failure.what);

    std::string skey = solve_key(cfg, b.tau, b.eps);
    std::string bkey = bloch_key(cfg, b.tau, b.eps);
    try {
      json solve_frag;
      std::shared_ptr<CHSolution> sol;
      auto compute_solution = [&] {
        auto curve = pool.curve(b.tau, cfg);
        auto prof = pool.profile(b.eps, cfg);
        GridSpec g = make_grid(*curve, cfg.nr, cfg.nz, true, cfg.grid_margin);
        sol = std::make_shared<CHSolution>(
            newton_solve(*curve, *prof, g, cfg.newton_tol));
        if (cache.enabled) save_solution(cache.entry("solve", skey, ".sol"), *sol);
      };
      if (auto hit = cache.fetch("solve", skey)) {
        solve_frag = json::parse(*hit);
      } else {
        compute_solution();
        solve_frag = solve_fragment(*sol, *pool.curve(b.tau, cfg),
                                    *pool.profile(b.eps, cfg), cfg);
        cache.put("solve", skey, solve_frag.dump());
      }
      node["solve"] = solve_frag;

      json bloch_frag;
      if (auto hit = cache.fetch("bloch", bkey)) {
        bloch_frag = json::parse(*hit);
      } else {
        if (!sol) {
          auto curve = pool.curve(b.tau, cfg);
          std::filesystem::path stored = cache.entry("solve", skey, ".sol");
          if (cache.enabled && std::filesystem::exists(stored))
            sol = std::make_shared<CHSolution>(load_solution(stored, curve.get()));
          else
            compute_solution();
        }
        BlochContext ctx = make_bloch_context(*sol);
        BlochSpectrum sp =
            band_sweep(ctx, cfg.m_max, cfg.zeta_grid, cfg.eig_k, cfg.tol_zero_factor);
        double kappa = fiberwise_orthogonal_coercivity(ctx, *pool.profile(b.eps, cfg),
                                                       4, cfg.coercivity_iters);
        bloch_frag = bloch_fragment(sp, kappa, b.eps, cfg);
        cache.put("bloch", bkey, bloch_frag.dump());
      }
      node["bloch"] = bloch_frag;
    } catch (const std::exception& e) {
      return abort_block(node.contains("solve") ? "bloch" : "solve", e.what());
    }

    bool pass = true;
    for (const char* stage : {"geometry", "hill", "jacobi", "profile", "solve", "bloch"})
      pass = pass && detail::fragment_passes(node.at(stage));
    node["pass"] = pass;
    b.node = std::move(node);
    b.pass = pass;
  };

  int jobs = std::max(1, cfg.jobs);
  if (jobs == 1 || blocks.size() <= 1) {
    for (BlockJob& b : blocks) run_block(b);
  } else {
    std::atomic<size_t> next{0};
    auto worker = [&] {
      for (size_t i = next.fetch_add(1); i < blocks.size(); i = next.fetch_add(1))
        run_block(blocks[i]);
    };
    std::vector<std::thread> threads;
    for (int t = 0; t < std::min<int>(jobs, int(blocks.size())); ++t)
      threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();
  }

  PipelineOutcome out;
  json report;
  report["format_version"] = 1;
  report["config"] = {
      {"schema_version", cfg.schema_version},
      {"tau", json::array()},
      {"epsilon", json::array()},
      {"geometry", {{"ode_tol", jnum(cfg.ode_tol)}}},
      {"hill", {{"n_max", cfg.hill_n_max}, {"parabolic_tol", jnum(cfg.parabolic_tol)}}},
      {"profile",
       {{"L", jnum(cfg.profile_L)}, {"h", jnum(cfg.profile_h)}, {"tol", jnum(cfg.profile_tol)}}},
      {"solver",
       {{"nr", cfg.nr},
        {"nz", cfg.nz},
        {"tol", jnum(cfg.newton_tol)},
        {"margin", jnum(cfg.grid_margin)}}},
      {"bloch",
       {{"m_max", cfg.m_max},
        {"k", cfg.eig_k},
        {"tol_zero_factor", jnum(cfg.tol_zero_factor)},
        {"coercivity_iters", cfg.coercivity_iters}}}};
  for (double tau : cfg.tau_list) report["config"]["tau"].push_back(jnum(tau));
  for (double eps : cfg.epsilon_list) report["config"]["epsilon"].push_back(jnum(eps));

  // Ledger: every check name that appears anywhere, with its bound, so each
  // numeric claim in the blocks reads against a pinned tolerance.
  std::map<std::string, std::string> ledger;
  int total = 0, failed = 0, skipped = 0;
  json jblocks = json::array();
  bool all_pass = true;
  for (BlockJob& b : blocks) {
    for (const char* stage : {"geometry", "hill", "jacobi", "profile", "solve", "bloch"}) {
      if (!b.node.contains(stage) || !b.node.at(stage).contains("checks")) continue;
      for (const json& row : b.node.at(stage).at("checks")) {
        ledger[row.at("name").get<std::string>()] = row.at("bound").get<std::string>();
        std::string st = row.at("status").get<std::string>();
        ++total;
        if (st == "fail") ++failed;
        if (st == "skipped") ++skipped;
      }
    }
    all_pass = all_pass && b.pass;
    jblocks.push_back(b.node);
  }
  json jledger = json::array();
  for (const auto& [name, bound] : ledger)
    jledger.push_back({{"name", name}, {"bound", bound}});
  report["tolerance_ledger"] = jledger;
  report["blocks"] = jblocks;
  report["checks"] = {{"total", total}, {"failed", failed}, {"skipped", skipped}};
  report["pass"] = all_pass;
  out.report = std::move(report);
  out.pass = all_pass;
  out.cache_hits = cache.hits;
  out.cache_misses = cache.misses;

  out.summary = render_summary(out.report);
  return out;
}

}  // namespace dch
