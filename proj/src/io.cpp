#include "noids/io.hpp"

#include "noids/reference.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>

namespace noids {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(x))
    throw ConfigError("not a number for " + key + ": '" + v + "'");
  return x;
}

int to_int(const std::string& key, const std::string& v) {
  int x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError("not an integer for " + key + ": '" + v + "'");
  return x;
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
  return out;
}

std::string family_name(Family f) { return f == Family::Knoid ? "knoid" : "noid2k"; }

std::string label(double x) {
  std::ostringstream os;
  os << std::setprecision(6) << x;
  return os.str();
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  return os;
}

Check check(const std::string& name, double value, double tol, bool pass) { return {name, value, tol, pass}; }
Check at_most(const std::string& name, double value, double tol) { return {name, value, tol, value <= tol}; }

struct Writer {
  fs::path dir;
  RunResult& result;

  fs::path csv(const std::string& name, const CsvTable& t) {
    const fs::path p = dir / name;
    write_csv(p, t);
    result.files.push_back(p);
    return p;
  }
  fs::path mesh(const std::string& name, const TriMesh& m) {
    const fs::path p = dir / name;
    export_mesh(p, m);
    result.files.push_back(p);
    return p;
  }
  fs::path text(const std::string& name, const std::function<void(std::ostream&)>& fill) {
    const fs::path p = dir / name;
    auto os = open_out(p);
    fill(os);
    if (!os) throw IoError("write failed: " + p.string());
    result.files.push_back(p);
    return p;
  }
};

void sister_outputs(Writer& w, const SisterAudit& audit, const std::string& tag, RunResult& res,
                    double H) {
  CsvTable loops{{"corner", "loop", "t0", "t1", "length", "area", "residual", "forced_twist"}, {}};
  for (std::size_t i = 0; i < audit.twists.size(); ++i) {
    const auto& tp = audit.twists[i];
    const std::string c = std::to_string(tp.corner);
    CsvTable twist{{"s", "alpha", "rate", "torsion"}, {}};
    for (std::size_t j = 0; j < tp.s.size(); ++j) twist.add({tp.s[j], tp.alpha[j], tp.rate[j], tp.torsion[j]});
    w.csv("twist_" + tag + "_" + c + ".csv", twist);
    const auto& m = audit.mirrors[i];
    CsvTable mirror{{"s", "x", "y", "k_tilde"}, {}};
    for (std::size_t j = 0; j < m.size(); ++j) mirror.add({m.params[j], m.points[j].x(), m.points[j].y(), m.curvature[j]});
    w.csv("mirror_" + tag + "_" + c + ".csv", mirror);
    for (std::size_t l = 0; l < audit.loops[i].loops.size(); ++l) {
      const auto& la = audit.loops[i].loops[l];
      loops.add({static_cast<double>(tp.corner), static_cast<double>(l), la.at.t0, la.at.t1, la.length, la.area,
                 la.residual, la.forced_twist});
    }
  }
  w.csv("loops_" + tag + ".csv", loops);
  bool monotone = true;
  std::size_t nloops = 0;
  for (const auto& tp : audit.twists) monotone = monotone && tp.monotone;
  for (const auto& l : audit.loops) nloops += l.loops.size();
  res.checks.push_back(check("twist_monotone_" + tag, monotone ? 1.0 : 0.0, 0.0, monotone));
  res.checks.push_back(check("twist_rate_min_" + tag, audit.min_rate, 0.0, audit.min_rate > 0.0));
  res.checks.push_back(check("k_tilde_max_" + tag, audit.max_k_tilde, 2.0 * H, audit.max_k_tilde < 2.0 * H));
  res.checks.push_back(check("mirror_loops_" + tag, static_cast<double>(nloops), 0.0, nloops == 0));
}

double contour_gap_error(const NoidSpec& spec, const Contour& c) {
  if (spec.family == Family::Knoid) {
    const BasePolygon tri = knoid_triangle(spec);
    return std::abs(knoid_gap(c) - (spec.truncation * spec.truncation - 2.0 * spec.space.tau() * std::abs(tri.oriented_area)));
  }
  const BasePolygon q = noid2k_quad(spec);
  return std::abs(noid2k_gap(c) - (2.0 * spec.space.h_mean * std::abs(q.oriented_area) + 2.0 * spec.truncation));
}

void run_noid(const RunConfig& cfg, Family family, Writer& w, RunResult& res) {
  CsvTable solves{{"truncation", "converged", "iterations", "area", "gradient_norm", "max_principle_excess",
                   "mce_max", "mce_rms", "tangency_ok", "max_slope"},
                  {}};
  CsvTable audits{{"truncation", "gap_error", "closure", "max_vertical_drift", "max_horizontality", "angle_error"}, {}};
  for (std::size_t i = 0; i < cfg.truncations.size(); ++i) {
    NoidSpec spec = cfg.spec(cfg.truncations[i]);
    spec.family = family;
    const std::string tag = label(spec.truncation);
    const Contour c = family == Family::Knoid ? knoid_contour(spec) : noid2k_contour(spec);
    w.text("contour_" + tag + ".txt", [&](std::ostream& os) { write_contour(os, c); });

    const AngleAudit au = audit_contour(c);
    double angle_error = 0.0;
    if (family == Family::Noid2k) {
      angle_error = std::abs(au.angles[0] - spec.phi());
      for (std::size_t j = 1; j < au.angles.size(); ++j) angle_error = std::max(angle_error, std::abs(au.angles[j] - M_PI / 2));
    }
    const double gap_error = contour_gap_error(spec, c);
    audits.add({spec.truncation, gap_error, c.closure_error(), au.max_vertical_drift, au.max_horizontality, angle_error});
    res.checks.push_back(at_most("gap_error_" + tag, gap_error, 1e-6));
    res.checks.push_back(at_most("closure_" + tag, c.closure_error(), 1e-6));
    if (family == Family::Noid2k) res.checks.push_back(at_most("angle_error_" + tag, angle_error, 1e-8));

    const Solution sol = solve_contour(c, cfg.solver);
    const TangencyReport tan = vertical_tangency_check(sol.graph);
    const auto& r = sol.report;
    solves.add({spec.truncation, r.converged ? 1.0 : 0.0, static_cast<double>(r.iterations), r.area, r.gradient_norm,
                r.max_principle_excess, r.mce_max, r.mce_rms, tan.ok ? 1.0 : 0.0, tan.max_slope});
    w.mesh("solution_" + tag + ".obj", graph_mesh(sol.graph));
    res.checks.push_back(check("converged_" + tag, r.gradient_norm, cfg.solver.tolerance, r.converged));
    res.checks.push_back(at_most("max_principle_" + tag, r.max_principle_excess, 0.0));
    res.checks.push_back(check("tangency_" + tag, tan.max_slope, 0.0, tan.ok));

    sister_outputs(w, sister_audit(sol, c, cfg.twist), tag, res, spec.space.h_mean);
  }
  w.csv("solve_report.csv", solves);
  w.csv("contour_audit.csv", audits);

  if (family == Family::Noid2k) {
    const double delta = cfg.spec(cfg.truncations.front()).phi() / 2.0 - cfg.resolved_alpha();
    res.checks.push_back(check("delta", delta, 0.0, delta >= 0.0));
    res.facts.push_back({"delta", format_number(delta)});
    res.facts.push_back({"symmetric", std::abs(delta) <= 1e-12 ? "1" : "0"});
  }

  if (cfg.truncations.size() >= 2) {
    NoidSpec spec = cfg.spec(cfg.truncations.front());
    spec.family = family;
    const LadderReport lr = convergence_ladder(spec, cfg.truncations, cfg.solver);
    CsvTable ladder{{"truncation", "area", "sup_difference", "dominated", "barrier_min_gap", "max_principle_excess"}, {}};
    bool dominated = true;
    for (std::size_t j = 0; j < lr.truncations.size(); ++j) {
      const double sd = j + 1 < lr.truncations.size() ? lr.sup_differences[j] : std::nan("");
      const bool dom = j < lr.barriers.size() ? lr.barriers[j].dominated : true;
      dominated = dominated && dom;
      ladder.add({lr.truncations[j], lr.areas[j], sd, dom ? 1.0 : 0.0,
                  j < lr.barriers.size() ? lr.barriers[j].min_gap : std::nan(""), lr.solves[j].max_principle_excess});
    }
    w.csv("ladder.csv", ladder);
    CsvTable heights{{"node"}, {}};
    for (double t : lr.truncations) heights.header.push_back("u_" + label(t));
    heights.header.push_back("limit");
    for (std::size_t n = 0; n < lr.k_nodes.size(); ++n) {
      std::vector<double> row{static_cast<double>(lr.k_nodes[n])};
      for (const auto& h : lr.heights) row.push_back(h[n]);
      row.push_back(n < lr.limit.size() ? lr.limit[n] : std::nan(""));
      heights.add(row);
    }
    w.csv("ladder_heights.csv", heights);
    res.checks.push_back(check("ladder_nodewise_monotone", lr.worst_nodewise, 1e-8, lr.nodewise_monotone));
    res.checks.push_back(check("ladder_direction", lr.direction, 0.0, lr.direction != 0));
    res.checks.push_back(check("ladder_differences_decreasing", lr.sup_differences.empty() ? 0.0 : lr.sup_differences.back(),
                               0.0, lr.differences_decreasing));
    res.checks.push_back(check("ladder_dominated", dominated ? 1.0 : 0.0, 0.0, dominated));
  }
}

void run_scherk(const RunConfig& cfg, Writer& w, RunResult& res) {
  const ScherkParams prm{cfg.space, cfg.scherk_sign};
  CsvTable t{{"s", "u", "residual"}, {}};
  double worst = 0.0;
  for (int i = 0; i < cfg.scherk_points; ++i) {
    const double s = i * (M_PI / (2.0 * cfg.scherk_points));
    const double r = scherk_conservation_residual(prm, s);
    worst = std::max(worst, std::abs(r));
    t.add({s, scherk_height(prm, s), r});
  }
  w.csv("scherk.csv", t);
  res.checks.push_back(at_most("conservation_residual", worst, 1e-10));
  const double smax = cfg.scherk_s_max;
  SurfacePatch patch{[&](double rho, double s) { return Vec3(rho * std::cos(s), rho * std::sin(s), scherk_height(prm, s)); },
                     1.0, 2.0, 0.0, smax};
  w.mesh("scherk.obj", patch_mesh(patch, cfg.patch_u, cfg.patch_v));
}

void run_sister(const RunConfig& cfg, Writer& w, RunResult& res) {
  for (double tr : cfg.truncations) {
    const NoidSpec spec = cfg.spec(tr);
    const Contour c = spec.family == Family::Knoid ? knoid_contour(spec) : noid2k_contour(spec);
    const Solution sol = solve_contour(c, cfg.solver);
    sister_outputs(w, sister_audit(sol, c, cfg.twist), label(tr), res, spec.space.h_mean);
  }
}

void run_verify(const RunConfig& cfg, Writer& w, RunResult& res) {
  const Space sp(cfg.space);
  const Base& base = sp.base();
  std::mt19937 rng(cfg.verify_seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  CsvTable loops{{"loop", "vertices", "area", "rise", "error"}, {}};
  for (int t = 0; t < cfg.verify_loops; ++t) {
    std::vector<Vec2> v;
    const int n = 3 + t % 4;
    for (int i = 0; i < n; ++i)
      v.push_back(base.shoot(base.origin(), 2.0 * M_PI * (i + 0.3 * u(rng)) / n, 0.2 + 1.5 * u(rng)));
    const double area = oriented_area_numeric(base, v);
    const double rise = lift_rise(sp, geodesic_path(base, v, true));
    const double err = std::abs(rise - 2.0 * sp.tau() * area) / (1.0 + std::abs(area));
    worst = std::max(worst, err);
    loops.add({static_cast<double>(t), static_cast<double>(n), area, rise, err});
  }
  w.csv("verify.csv", loops);
  res.checks.push_back(at_most("holonomy", worst, 1e-6));

  if (cfg.space.kappa_e() < 0.0) {
    const ScherkParams prm{cfg.space, 1};
    double r = 0.0;
    for (int i = 0; i < cfg.scherk_points; ++i)
      r = std::max(r, std::abs(scherk_conservation_residual(prm, i * (M_PI / (2.0 * cfg.scherk_points)))));
    res.checks.push_back(at_most("scherk_conservation", r, 1e-10));
  }

  for (double tr : cfg.truncations) {
    const NoidSpec spec = cfg.spec(tr);
    const Contour c = spec.family == Family::Knoid ? knoid_contour(spec) : noid2k_contour(spec);
    res.checks.push_back(at_most("gap_error_" + label(tr), contour_gap_error(spec, c), 1e-6));
    res.checks.push_back(at_most("closure_" + label(tr), c.closure_error(), 1e-6));
  }

  // Gauss-Bonnet on a closed circle of the CMC base
  const double kappa = cfg.space.kappa, H = cfg.space.h_mean;
  const double k = kappa < 0.0 ? 2.0 * std::sqrt(-kappa) : 1.0;
  const double L = kappa < 0.0 ? 2.0 * M_PI * std::sinh(std::atanh(std::sqrt(-kappa) / k)) / std::sqrt(-kappa)
                               : 2.0 * M_PI / k;
  const auto curve = mirror_curve(kappa, H, twist_from_rate(H, L, [&](double) { return 2.0 * H + k; }, 2001));
  const auto rep = gauss_bonnet_loop_check(curve, kappa, H);
  const double resid = rep.loops.size() == 1 ? std::abs(rep.loops[0].residual) : 1e300;
  res.checks.push_back(at_most("gauss_bonnet_circle", resid, 1e-6));
}

}  // namespace

std::string pipeline_name(Pipeline p) {
  switch (p) {
    case Pipeline::Scherk: return "scherk";
    case Pipeline::Knoid: return "knoid";
    case Pipeline::Noid2k: return "noid2k";
    case Pipeline::Sister: return "sister";
    case Pipeline::Verify: return "verify";
  }
  return "";
}

Pipeline parse_pipeline(const std::string& name) {
  for (Pipeline p : {Pipeline::Scherk, Pipeline::Knoid, Pipeline::Noid2k, Pipeline::Sister, Pipeline::Verify})
    if (pipeline_name(p) == name) return p;
  throw ConfigError("unknown pipeline: " + name);
}

double RunConfig::resolved_alpha() const { return alpha < 0.0 ? M_PI / (2.0 * k) : alpha; }

NoidSpec RunConfig::spec(double truncation) const {
  NoidSpec s;
  s.family = pipeline == Pipeline::Knoid ? Family::Knoid : pipeline == Pipeline::Noid2k ? Family::Noid2k : family;
  s.space = space;
  s.k = k;
  s.a = a;
  s.d = d;
  s.alpha = resolved_alpha();
  s.truncation = truncation;
  return s;
}

void RunConfig::validate() const {
  space.validate();
  if (!(solver.h > 0.0)) throw ConfigError("solver.h must be positive");
  if (!(solver.tolerance > 0.0)) throw ConfigError("solver.tolerance must be positive");
  if (solver.max_iterations < 1) throw ConfigError("solver.max_iterations must be at least 1");
  if (solver.extra_levels < 0) throw ConfigError("solver.extra_levels must be >= 0");
  if (patch_u < 2 || patch_v < 2) throw ConfigError("mesh patch needs at least 2 x 2 samples");
  if (pipeline == Pipeline::Scherk) {
    if (!(space.kappa_e() < 0.0)) throw ConfigError("scherk needs kappa + 4H^2 < 0");
    if (scherk_points < 2) throw ConfigError("scherk.points must be at least 2");
    if (scherk_sign != 1 && scherk_sign != -1) throw ConfigError("scherk.sign must be 1 or -1");
    if (!(scherk_s_max > 0.0 && scherk_s_max < M_PI / 2)) throw ConfigError("scherk.s_max must lie in (0, pi/2)");
    return;
  }
  if (truncations.empty()) throw ConfigError("noid.truncations is empty");
  for (std::size_t i = 1; i < truncations.size(); ++i)
    if (!(truncations[i] > truncations[i - 1])) throw ConfigError("noid.truncations must increase");
  for (double t : truncations) spec(t).validate();
  if (twist.samples < 3 || twist.circle < 16 || twist.radius < 0.0) throw ConfigError("invalid sister options");
  if (verify_loops < 1) throw ConfigError("verify.loops must be at least 1");
}

RunConfig parse_config(std::istream& is, Pipeline pipeline) {
  RunConfig cfg;
  cfg.pipeline = pipeline;
  std::map<std::string, std::function<void(const std::string&, const std::string&)>> keys = {
      {"space.kappa", [&](auto& k, auto& v) { cfg.space.kappa = to_double(k, v); }},
      {"space.H", [&](auto& k, auto& v) { cfg.space.h_mean = to_double(k, v); }},
      {"noid.family", [&](auto&, auto& v) {
         if (v == "knoid") cfg.family = Family::Knoid;
         else if (v == "noid2k") cfg.family = Family::Noid2k;
         else throw ConfigError("noid.family must be knoid or noid2k");
       }},
      {"noid.k", [&](auto& k, auto& v) { cfg.k = to_int(k, v); }},
      {"noid.a", [&](auto& k, auto& v) { cfg.a = to_double(k, v); }},
      {"noid.d", [&](auto& k, auto& v) { cfg.d = to_double(k, v); }},
      {"noid.alpha", [&](auto& k, auto& v) {
         cfg.alpha = to_double(k, v);
         if (!(cfg.alpha > 0.0)) throw ConfigError("noid.alpha must be positive");
       }},
      {"noid.truncations", [&](auto& k, auto& v) { cfg.truncations = to_list(k, v); }},
      {"solver.h", [&](auto& k, auto& v) { cfg.solver.h = to_double(k, v); }},
      {"solver.tolerance", [&](auto& k, auto& v) { cfg.solver.tolerance = to_double(k, v); }},
      {"solver.max_iterations", [&](auto& k, auto& v) { cfg.solver.max_iterations = to_int(k, v); }},
      {"solver.extra_levels", [&](auto& k, auto& v) { cfg.solver.extra_levels = to_int(k, v); }},
      {"scherk.points", [&](auto& k, auto& v) { cfg.scherk_points = to_int(k, v); }},
      {"scherk.sign", [&](auto& k, auto& v) { cfg.scherk_sign = to_int(k, v); }},
      {"scherk.s_max", [&](auto& k, auto& v) { cfg.scherk_s_max = to_double(k, v); }},
      {"mesh.patch_u", [&](auto& k, auto& v) { cfg.patch_u = to_int(k, v); }},
      {"mesh.patch_v", [&](auto& k, auto& v) { cfg.patch_v = to_int(k, v); }},
      {"sister.samples", [&](auto& k, auto& v) { cfg.twist.samples = to_int(k, v); }},
      {"sister.circle", [&](auto& k, auto& v) { cfg.twist.circle = to_int(k, v); }},
      {"sister.radius", [&](auto& k, auto& v) { cfg.twist.radius = to_double(k, v); }},
      {"verify.loops", [&](auto& k, auto& v) { cfg.verify_loops = to_int(k, v); }},
      {"verify.seed", [&](auto& k, auto& v) { cfg.verify_seed = static_cast<unsigned>(to_int(k, v)); }},
  };
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = section + "." + trim(line.substr(0, eq));
    const auto it = keys.find(key);
    if (it == keys.end()) throw ConfigError("line " + std::to_string(lineno) + ": unknown key " + key);
    it->second(key, trim(line.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const fs::path& path, Pipeline pipeline) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read " + path.string());
  return parse_config(is, pipeline);
}

void write_config(std::ostream& os, const RunConfig& cfg) {
  auto n = format_number;
  os << "# pipeline " << pipeline_name(cfg.pipeline) << "\n";
  os << "[space]\nkappa = " << n(cfg.space.kappa) << "\nH = " << n(cfg.space.h_mean) << "\n";
  os << "[noid]\nfamily = " << family_name(cfg.family) << "\nk = " << cfg.k << "\na = " << n(cfg.a)
     << "\nd = " << n(cfg.d) << "\nalpha = " << n(cfg.resolved_alpha()) << "\ntruncations = ";
  for (std::size_t i = 0; i < cfg.truncations.size(); ++i) os << (i ? ", " : "") << n(cfg.truncations[i]);
  os << "\n[solver]\nh = " << n(cfg.solver.h) << "\ntolerance = " << n(cfg.solver.tolerance)
     << "\nmax_iterations = " << cfg.solver.max_iterations << "\nextra_levels = " << cfg.solver.extra_levels << "\n";
  os << "[scherk]\npoints = " << cfg.scherk_points << "\nsign = " << cfg.scherk_sign << "\ns_max = " << n(cfg.scherk_s_max)
     << "\n";
  os << "[mesh]\npatch_u = " << cfg.patch_u << "\npatch_v = " << cfg.patch_v << "\n";
  os << "[sister]\nsamples = " << cfg.twist.samples << "\ncircle = " << cfg.twist.circle << "\nradius = "
     << n(cfg.twist.radius) << "\n";
  os << "[verify]\nloops = " << cfg.verify_loops << "\nseed = " << cfg.verify_seed << "\n";
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

void CsvTable::add(const std::vector<double>& values) {
  std::vector<std::string> cells;
  for (double v : values) cells.push_back(format_number(v));
  add_cells(std::move(cells));
}

void CsvTable::add_cells(std::vector<std::string> cells) {
  if (cells.size() != header.size()) throw DomainError("csv row width does not match the header");
  rows.push_back(std::move(cells));
}

void write_csv(const fs::path& path, const CsvTable& t) {
  auto os = open_out(path);
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
    os << "\n";
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
  if (!os) throw IoError("write failed: " + path.string());
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read " + path.string());
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (first) t.header = cells;
    else t.rows.push_back(cells);
    first = false;
  }
  return t;
}

TriMesh patch_mesh(const SurfacePatch& patch, int nu, int nv) {
  if (nu < 2 || nv < 2) throw DomainError("patch mesh needs at least 2 x 2 samples");
  TriMesh m;
  for (int i = 0; i < nu; ++i)
    for (int j = 0; j < nv; ++j) {
      const double u = patch.u0 + (patch.u1 - patch.u0) * i / (nu - 1);
      const double v = patch.v0 + (patch.v1 - patch.v0) * j / (nv - 1);
      m.vertices.push_back(patch(u, v));
    }
  auto id = [&](int i, int j) { return i * nv + j; };
  for (int i = 0; i + 1 < nu; ++i)
    for (int j = 0; j + 1 < nv; ++j) {
      m.faces.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      m.faces.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  return m;
}

TriMesh graph_mesh(const DiscreteGraph& g) {
  const Patch3 p = graph_patch(g);
  return {p.points, p.tris};
}

void write_obj(std::ostream& os, const TriMesh& mesh) {
  for (const auto& v : mesh.vertices)
    os << "v " << format_number(v.x()) << " " << format_number(v.y()) << " " << format_number(v.z()) << "\n";
  for (const auto& f : mesh.faces) os << "f " << f[0] + 1 << " " << f[1] + 1 << " " << f[2] + 1 << "\n";
}

TriMesh read_obj(std::istream& is) {
  TriMesh m;
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      std::string x, y, z;
      ls >> x >> y >> z;
      m.vertices.emplace_back(to_double("v", x), to_double("v", y), to_double("v", z));
    } else if (tag == "f") {
      std::array<int, 3> f{};
      for (int& i : f) {
        std::string tok;
        ls >> tok;
        i = to_int("f", tok.substr(0, tok.find('/'))) - 1;
      }
      m.faces.push_back(f);
    }
  }
  for (const auto& f : m.faces)
    for (int i : f)
      if (i < 0 || i >= static_cast<int>(m.vertices.size())) throw IoError("obj face index out of range");
  return m;
}

void write_ply(std::ostream& os, const TriMesh& mesh) {
  os << "ply\nformat ascii 1.0\nelement vertex " << mesh.vertices.size()
     << "\nproperty double x\nproperty double y\nproperty double z\nelement face " << mesh.faces.size()
     << "\nproperty list uchar int vertex_indices\nend_header\n";
  for (const auto& v : mesh.vertices)
    os << format_number(v.x()) << " " << format_number(v.y()) << " " << format_number(v.z()) << "\n";
  for (const auto& f : mesh.faces) os << "3 " << f[0] << " " << f[1] << " " << f[2] << "\n";
}

void export_mesh(const fs::path& path, const TriMesh& mesh) {
  auto os = open_out(path);
  if (path.extension() == ".ply") write_ply(os, mesh);
  else if (path.extension() == ".obj") write_obj(os, mesh);
  else throw IoError("unknown mesh format: " + path.string());
  if (!os) throw IoError("write failed: " + path.string());
}

bool RunResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

RunResult run_pipeline(const RunConfig& cfg, const fs::path& out) {
  cfg.validate();
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());
  RunResult res;
  Writer w{out, res};
  w.text("resolved.cfg", [&](std::ostream& os) { write_config(os, cfg); });
  switch (cfg.pipeline) {
    case Pipeline::Scherk: run_scherk(cfg, w, res); break;
    case Pipeline::Knoid: run_noid(cfg, Family::Knoid, w, res); break;
    case Pipeline::Noid2k: run_noid(cfg, Family::Noid2k, w, res); break;
    case Pipeline::Sister: run_sister(cfg, w, res); break;
    case Pipeline::Verify: run_verify(cfg, w, res); break;
  }
  CsvTable report{{"check", "value", "tolerance", "pass"}, {}};
  for (const auto& c : res.checks)
    report.add_cells({c.name, format_number(c.value), format_number(c.tolerance), c.pass ? "1" : "0"});
  w.csv("report.csv", report);
  res.facts.insert(res.facts.begin(), {"pipeline", pipeline_name(cfg.pipeline)});
  res.facts.push_back({"passed", res.passed() ? "1" : "0"});
  CsvTable summary{{"key", "value"}, {}};
  for (const auto& [k, v] : res.facts) summary.add_cells({k, v});
  w.csv("summary.csv", summary);
  return res;
}

}  // namespace noids
