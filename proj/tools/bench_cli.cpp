// Benchmark and verification harness. Subcommands:
//   run            generate an instance, run a method batch, export CSV + SVG
//   verify         run invariant suites over seeded instances
//   dump-schedule  print a family's coefficient table
//   gen-instance   serialize a generated instance as JSON
// Exit codes: 0 success, 1 verification/run failure, 2 usage or config error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "opt/diagnostics.hpp"
#include "opt/methods.hpp"
#include "opt/problems.hpp"
#include "opt/schedules.hpp"
#include "opt/serialize.hpp"
#include "opt/svg_plot.hpp"
#include "opt/trace_io.hpp"

namespace fs = std::filesystem;
using namespace opt;

namespace {

Vec seeded_vec(int n, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = scale * rng.normal();
  return v;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    fail(ErrorCode::invalid_argument, std::string("config parse error in ") + path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io_error, "cannot open output file: " + path);
  out << content;
  if (!out) fail(ErrorCode::io_error, "write failed: " + path);
}

// ---------------------------------------------------------------------------
// run

BenchConfig default_bench(int K) {
  BenchConfig c;
  c.instance = InstanceConfig::defaults(InstanceKind::lasso);
  c.methods.push_back(MethodSpec::make(Family::ista));
  c.methods.push_back(MethodSpec::make(Family::fista));
  MethodSpec fpgm = MethodSpec::make(Family::fpgm_m);
  fpgm.switch_index = std::max(1, K / 2);
  c.methods.push_back(fpgm);
  c.methods.push_back(MethodSpec::make(Family::fista_g));
  c.methods.push_back(
      MethodSpec::make_composed(MethodSpec::make(Family::fista), MethodSpec::make(Family::fista_g)));
  c.horizons = {K};
  return c;
}

double metric_value(Metric m, const TraceRecord& r, double F_ref, const Vec* x_ref) {
  switch (m) {
    case Metric::F_gap: return r.F - F_ref;
    case Metric::gmap_sq: return r.gmap_sq;
    case Metric::subgrad_sq: return r.subgrad_sq;
    case Metric::dist_sq: return (r.x - *x_ref).squaredNorm();
  }
  fail(ErrorCode::invalid_argument, "unknown metric");
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed,
            std::optional<int> K, std::optional<std::string> out_dir) {
  BenchConfig cfg = config_path.empty() ? default_bench(K.value_or(100))
                                        : bench_config_from_json(load_json_file(config_path));
  if (seed) cfg.instance.seed = *seed;
  if (K && !config_path.empty()) cfg.horizons = {*K};
  if (out_dir) cfg.out_dir = *out_dir;

  const GeneratedInstance gi = generate(cfg.instance);
  const CompositeProblem& p = gi.problem;
  const int dim = static_cast<int>(gi.x_true.size());
  const Vec x0 = Vec::Zero(dim);
  const Vec* x_star = p.known_opt ? &p.known_opt->x_star : nullptr;

  // Reference point for gap/distance metrics: the recorded optimum when the
  // instance has one, otherwise a certified estimate.
  bool need_ref = false;
  for (Metric m : cfg.metrics) need_ref |= (m == Metric::F_gap || m == Metric::dist_sq);
  std::optional<FstarEstimate> est;
  if (need_ref && !p.known_opt) est = estimate_Fstar(p, 100000, x0);
  const double F_ref = p.known_opt ? p.known_opt->F_star : (est ? est->F_star_hat : 0.0);
  const Vec* x_ref = p.known_opt ? &p.known_opt->x_star : (est ? &est->x_hat : nullptr);

  fs::create_directories(cfg.out_dir);
  std::vector<std::string> failures;
  std::ostringstream combined;
  write_long_csv_header(combined, x_star != nullptr);

  for (int h : cfg.horizons) {
    std::vector<std::pair<std::string, RunTrace>> traces;
    for (const MethodSpec& m : cfg.methods) {
      const std::string label = method_label(m);
      // A composed method runs each phase for the horizon it is given; split
      // the budget so its total step count matches the single-phase methods.
      const int hm = m.family == Family::composed ? std::max(1, h / 2) : h;
      try {
        traces.emplace_back(label, run(m, p, x0, hm));
      } catch (const Error& e) {
        failures.push_back(label + " (K=" + std::to_string(h) + "): " + e.what());
        continue;
      }
      const auto& tr = traces.back().second;
      std::ostringstream csv;
      write_trace_csv(csv, tr, x_star);
      const std::string path = cfg.out_dir + "/" + label + "_K" + std::to_string(h) + ".csv";
      write_text_file(path, csv.str());
      append_long_csv(combined, label + "@K" + std::to_string(h), tr, x_star);
      std::cout << label << " K=" << h << ": final gmap_sq = " << tr.records.back().gmap_sq
                << " -> " << path << "\n";
    }
    for (Metric metric : cfg.metrics) {
      if ((metric == Metric::F_gap || metric == Metric::dist_sq) && !x_ref && !p.known_opt)
        continue;  // no reference available
      std::vector<PlotSeries> series;
      for (const auto& [label, tr] : traces) {
        PlotSeries s;
        s.label = label;
        for (const auto& r : tr.records) s.y.push_back(metric_value(metric, r, F_ref, x_ref));
        series.push_back(std::move(s));
      }
      if (series.empty()) continue;
      std::ostringstream svg;
      const std::string title = std::string(metric_name(metric)) + " on " +
                                instance_kind_name(cfg.instance.kind) + ", K=" + std::to_string(h);
      write_log_plot(svg, title, metric_name(metric), series);
      const std::string path =
          cfg.out_dir + "/" + metric_name(metric) + "_K" + std::to_string(h) + ".svg";
      write_text_file(path, svg.str());
      std::cout << "plot -> " << path << "\n";
    }
  }
  write_text_file(cfg.out_dir + "/combined.csv", combined.str());
  std::cout << "combined -> " << cfg.out_dir << "/combined.csv\n";

  for (const auto& f : failures) std::cerr << "method failed: " << f << "\n";
  return failures.empty() ? 0 : 1;
}

// ---------------------------------------------------------------------------
// verify

struct CheckRow {
  std::string suite;
  std::string name;
  DiagnosticReport rep;
};

json row_to_json(const CheckRow& r) {
  return json{{"suite", r.suite},       {"name", r.name},
              {"pass", r.rep.pass},     {"worst", r.rep.worst},
              {"tolerance", r.rep.tolerance}, {"checks", r.rep.residuals.size()},
              {"first_fail", r.rep.first_fail}, {"note", r.rep.note}};
}

enum class InstanceNeed { smooth, smooth_sc, composite, prox };

InstanceNeed need_for(Family f) {
  switch (f) {
    case Family::sc_fgm:
    case Family::sc_ogm:
    case Family::tmm:
    case Family::item:
    case Family::nonstationary_sc_fgm:
    case Family::geometric_descent: return InstanceNeed::smooth_sc;
    case Family::ista:
    case Family::fista:
    case Family::fpgm_m:
    case Family::fista_g:
    case Family::g_fista_g: return InstanceNeed::composite;
    case Family::guler1:
    case Family::guler2:
    case Family::guler_g:
    case Family::g_guler_g:
    case Family::proximal_tmm:
    case Family::proximal_item: return InstanceNeed::prox;
    default: return InstanceNeed::smooth;
  }
}

GeneratedInstance instance_for(InstanceNeed need, std::uint64_t seed) {
  switch (need) {
    case InstanceNeed::smooth: return make_smooth_quadratic(20, 0.0, 5.0, seed);
    case InstanceNeed::smooth_sc: return make_strongly_convex_quadratic(20, 10.0, seed);
    case InstanceNeed::composite: {
      InstanceConfig c = InstanceConfig::defaults(InstanceKind::lasso);
      c.seed = seed;
      return gen_lasso(c);
    }
    case InstanceNeed::prox: return make_prox_only_quadratic_l1(20, 1.0, 0.1, seed);
  }
  fail(ErrorCode::invalid_argument, "unknown instance need");
}

RunTrace run_seeded(Family fam, Form form, const GeneratedInstance& gi, std::uint64_t seed, int K) {
  MethodSpec s = MethodSpec::make(fam, form);
  s.lambda = 1.0;
  if (fam == Family::fpgm_m) s.switch_index = std::max(1, K / 2);
  return run(s, gi.problem, seeded_vec(static_cast<int>(gi.x_true.size()), seed + 1000), K);
}

std::vector<Family> parse_families(const std::string& csv, const std::vector<Family>& fallback) {
  if (csv.empty()) return fallback;
  std::vector<Family> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(family_from_name(tok));
  return out;
}

// Keep only families from `wanted` that the suite supports; an explicit
// request for an unsupported family is a usage error.
std::vector<Family> intersect_families(const std::vector<Family>& wanted,
                                       const std::vector<Family>& supported, bool explicit_list,
                                       const char* suite) {
  std::vector<Family> out;
  for (Family f : wanted) {
    const bool ok = std::find(supported.begin(), supported.end(), f) != supported.end();
    if (ok)
      out.push_back(f);
    else if (explicit_list)
      fail(ErrorCode::invalid_argument,
           std::string(family_name(f)) + " is not covered by the " + suite + " suite");
  }
  return out;
}

void verify_lyapunov(const std::vector<Family>& fams, int seeds, int K, std::vector<CheckRow>& rows) {
  for (Family fam : fams) {
    for (int s = 1; s <= seeds; ++s) {
      const auto gi = instance_for(need_for(fam), static_cast<std::uint64_t>(s));
      // The proximal ITEM potential amplifies rounding by (1-sqrt q)^{-2k};
      // cap its horizon to the regime double precision can certify.
      const int Kf = fam == Family::proximal_item ? std::min(K, 9) : K;
      MethodSpec spec = MethodSpec::make(fam);
      spec.lambda = 1.0;
      const auto tr = run(spec, gi.problem, seeded_vec(static_cast<int>(gi.x_true.size()),
                                                       static_cast<std::uint64_t>(s) + 1000),
                          Kf);
      const auto U = lyapunov_sequence(spec, tr, gi.problem);
      const std::string tag = std::string(family_name(fam)) + "/seed" + std::to_string(s);
      rows.push_back({"lyapunov", tag, check_monotone(U)});
      if (fam == Family::proximal_tmm) {
        const double sq = std::sqrt(tr.q_eff);
        rows.push_back({"lyapunov", tag + "/contraction", check_monotone(U, (1.0 - sq) * (1.0 - sq))});
      }
    }
  }
}

void verify_parallel(const std::vector<Family>& fams, int seeds, int K, std::vector<CheckRow>& rows) {
  for (Family fam : fams) {
    for (int s = 1; s <= seeds; ++s) {
      const auto gi = instance_for(need_for(fam), static_cast<std::uint64_t>(s));
      const auto tr = run_seeded(fam, Form::auxiliary, gi, static_cast<std::uint64_t>(s), K);
      const std::string tag = std::string(family_name(fam)) + "/seed" + std::to_string(s);
      rows.push_back({"parallel", tag, check_parallel(tr)});
      rows.push_back({"parallel", tag + "/coplanar", check_coplanar(tr)});
    }
  }
}

void verify_collinear(const std::vector<Family>& fams, int seeds, int K, std::vector<CheckRow>& rows) {
  for (Family fam : fams) {
    for (int s = 1; s <= seeds; ++s) {
      const auto gi = instance_for(need_for(fam), static_cast<std::uint64_t>(s));
      const Form form = fam == Family::geometric_descent ? Form::momentum : Form::auxiliary;
      const auto tr = run_seeded(fam, form, gi, static_cast<std::uint64_t>(s), K);
      const std::string tag = std::string(family_name(fam)) + "/seed" + std::to_string(s);
      rows.push_back({"collinear", tag, check_collinear(tr)});
      rows.push_back({"collinear", tag + "/coplanar", check_coplanar(tr)});
    }
  }
}

void verify_rates(const std::vector<RateBound>& bounds, int seeds, int K, std::vector<CheckRow>& rows) {
  for (RateBound b : bounds) {
    for (int s = 1; s <= seeds; ++s) {
      const std::uint64_t seed = static_cast<std::uint64_t>(s);
      GeneratedInstance gi = (b == RateBound::prox_gradient || b == RateBound::prox_gradient_composed ||
                              b == RateBound::general_prox_gradient ||
                              b == RateBound::prox_distance_tmm || b == RateBound::prox_distance_item)
                                 ? instance_for(InstanceNeed::prox, seed)
                                 : instance_for(InstanceNeed::smooth, seed);
      Family fam = Family::fista_g;
      switch (b) {
        case RateBound::composite_gradient:
        case RateBound::general_composite_gradient: fam = Family::fista_g; break;
        case RateBound::prox_gradient: fam = Family::guler_g; break;
        case RateBound::general_prox_gradient: fam = Family::g_guler_g; break;
        case RateBound::prox_distance_tmm: fam = Family::proximal_tmm; break;
        case RateBound::prox_distance_item: fam = Family::proximal_item; break;
        case RateBound::smooth_gradient_tight:
        case RateBound::smooth_gradient_loose: fam = Family::ogm_g; break;
        case RateBound::smooth_gradient_reference: fam = Family::fgm_g; break;
        case RateBound::general_smooth_gradient: fam = Family::g_fgm_g; break;
        case RateBound::composite_gradient_composed:
        case RateBound::prox_gradient_composed: fam = Family::composed; break;
      }
      const Vec x0 = seeded_vec(static_cast<int>(gi.x_true.size()), seed + 1000);
      MethodSpec spec = MethodSpec::make(Family::fista);
      if (b == RateBound::composite_gradient_composed) {
        spec = MethodSpec::make_composed(MethodSpec::make(Family::fista),
                                         MethodSpec::make(Family::fista_g));
      } else if (b == RateBound::prox_gradient_composed) {
        MethodSpec g1 = MethodSpec::make(Family::guler1);
        g1.lambda = 1.0;
        MethodSpec gg = MethodSpec::make(Family::guler_g);
        gg.lambda = 1.0;
        spec = MethodSpec::make_composed(g1, gg);
      } else {
        spec = MethodSpec::make(fam);
        spec.lambda = 1.0;
      }
      const auto tr = run(spec, gi.problem, x0, K);
      const auto rep = check_rate_bound(b, tr, gi.problem, nullptr, nullptr, &spec);
      rows.push_back(
          {"rates", std::string(rate_bound_name(b)) + "/seed" + std::to_string(s), rep});
    }
  }
}

void verify_lemmas(int seeds, std::vector<CheckRow>& rows) {
  for (int s = 1; s <= seeds; ++s) {
    const std::uint64_t seed = static_cast<std::uint64_t>(s);
    InstanceConfig lc = InstanceConfig::defaults(InstanceKind::lasso);
    lc.seed = seed;
    rows.push_back({"lemmas", "lasso/seed" + std::to_string(s),
                    check_inequality_lemmas(gen_lasso(lc).problem, lc.n, 500, seed)});
    const auto prox = instance_for(InstanceNeed::prox, seed);
    rows.push_back({"lemmas", "prox/seed" + std::to_string(s),
                    check_inequality_lemmas(prox.problem, 20, 500, seed)});
    const auto smooth = instance_for(InstanceNeed::smooth, seed);
    rows.push_back({"lemmas", "smooth/seed" + std::to_string(s),
                    check_inequality_lemmas(smooth.problem, 20, 500, seed)});
  }
}

void verify_form_equivalence(const std::vector<Family>& fams, int seeds, int K,
                             std::vector<CheckRow>& rows) {
  for (Family fam : fams) {
    for (int s = 1; s <= seeds; ++s) {
      const auto gi = instance_for(need_for(fam), static_cast<std::uint64_t>(s));
      const auto m = run_seeded(fam, Form::momentum, gi, static_cast<std::uint64_t>(s), K);
      const auto a = run_seeded(fam, Form::auxiliary, gi, static_cast<std::uint64_t>(s), K);
      std::vector<double> res;
      for (std::size_t k = 0; k < m.records.size(); ++k)
        res.push_back((m.records[k].x - a.records[k].x).norm() /
                      std::max(1.0, m.records[k].x.norm()));
      rows.push_back({"form-equivalence", std::string(family_name(fam)) + "/seed" + std::to_string(s),
                      detail::finalize_report("form_equivalence", std::move(res), 1e-8)});
    }
  }
}

int cmd_verify(const std::string& suite, const std::string& families_csv, int seeds, int K,
               const std::string& theorem, const std::string& out_path) {
  static const std::vector<std::string> suites = {"lyapunov", "parallel",  "collinear",
                                                  "rates",    "lemmas",    "form-equivalence",
                                                  "all"};
  if (std::find(suites.begin(), suites.end(), suite) == suites.end())
    fail(ErrorCode::invalid_argument, "unknown suite: " + suite);
  const bool all = suite == "all";
  const bool explicit_fams = !families_csv.empty();

  static const std::vector<Family> lyap_supported = {
      Family::ogm_g,   Family::fgm_g,     Family::g_fgm_g,      Family::fista_g, Family::g_fista_g,
      Family::guler_g, Family::g_guler_g, Family::proximal_tmm, Family::proximal_item};
  static const std::vector<Family> par_supported = {
      Family::fgm,     Family::ogm,     Family::ogm_g,      Family::fgm_g,   Family::g_fgm_g,
      Family::fista,   Family::fista_g, Family::g_fista_g,  Family::guler1,  Family::guler2,
      Family::guler_g, Family::g_guler_g};
  static const std::vector<Family> col_supported = {
      Family::sc_fgm, Family::sc_ogm,       Family::tmm,
      Family::item,   Family::nonstationary_sc_fgm, Family::geometric_descent,
      Family::proximal_tmm, Family::proximal_item};
  static const std::vector<Family> form_supported = {
      Family::fgm,    Family::ogm,     Family::ogm_g,      Family::fgm_g,        Family::g_fgm_g,
      Family::sc_fgm, Family::sc_ogm,  Family::tmm,        Family::item,
      Family::nonstationary_sc_fgm,    Family::fista,      Family::fista_g,      Family::g_fista_g,
      Family::guler1, Family::guler2,  Family::guler_g,    Family::g_guler_g,
      Family::proximal_tmm,            Family::proximal_item};

  std::vector<CheckRow> rows;
  if (all || suite == "lyapunov") {
    const auto fams = intersect_families(parse_families(families_csv, lyap_supported),
                                         lyap_supported, explicit_fams && suite == "lyapunov",
                                         "lyapunov");
    verify_lyapunov(fams, seeds, K, rows);
  }
  if (all || suite == "parallel") {
    const auto fams = intersect_families(parse_families(families_csv, par_supported), par_supported,
                                         explicit_fams && suite == "parallel", "parallel");
    verify_parallel(fams, seeds, K, rows);
  }
  if (all || suite == "collinear") {
    const auto fams = intersect_families(parse_families(families_csv, col_supported), col_supported,
                                         explicit_fams && suite == "collinear", "collinear");
    verify_collinear(fams, seeds, K, rows);
  }
  if (all || suite == "rates") {
    std::vector<RateBound> bounds;
    if (theorem.empty()) {
      bounds = {RateBound::composite_gradient,  RateBound::composite_gradient_composed,
                RateBound::prox_gradient,       RateBound::prox_gradient_composed,
                RateBound::prox_distance_tmm,   RateBound::prox_distance_item,
                RateBound::smooth_gradient_tight, RateBound::smooth_gradient_loose,
                RateBound::general_composite_gradient, RateBound::general_smooth_gradient,
                RateBound::smooth_gradient_reference,  RateBound::general_prox_gradient};
    } else {
      bounds.push_back(rate_bound_from_name(theorem));
    }
    verify_rates(bounds, seeds, K, rows);
  }
  if (all || suite == "lemmas") verify_lemmas(seeds, rows);
  if (all || suite == "form-equivalence") {
    const auto fams = intersect_families(parse_families(families_csv, form_supported),
                                         form_supported, explicit_fams && suite == "form-equivalence",
                                         "form-equivalence");
    verify_form_equivalence(fams, seeds, K, rows);
  }

  int failed = 0;
  for (const auto& r : rows) {
    if (!r.rep.pass) ++failed;
    std::cout << r.suite << " " << r.name << ": " << describe(r.rep) << "\n";
  }
  std::cout << rows.size() << " checks, " << failed << " failed\n";
  if (!out_path.empty()) {
    json report = json::array();
    for (const auto& r : rows) report.push_back(row_to_json(r));
    write_text_file(out_path, report.dump(2) + "\n");
    std::cout << "report -> " << out_path << "\n";
  }
  return failed == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// dump-schedule

std::string dump_schedule_table(Family fam, int K, double kappa, double q) {
  std::ostringstream out;
  const auto g = [](double v) { return opt::detail::fmt17(v); };
  switch (fam) {
    case Family::fgm:
    case Family::fista:
    case Family::guler1: {
      ThetaSchedule th(ThetaVariant::fgm_forward, K);
      out << "k,theta,a\n";
      for (int k = -1; k <= K + 1; ++k) {
        out << k << ',' << g(th.theta(k)) << ',';
        if (k >= 0 && k < K) out << g((th.theta(k) - 1.0) / th.theta(k + 1));
        out << "\n";
      }
      break;
    }
    case Family::ogm:
    case Family::guler2: {
      ThetaSchedule th(ThetaVariant::ogm_forward_with_last, K);
      out << "k,theta,a,b\n";
      for (int k = -1; k <= K; ++k) {
        out << k << ',' << g(th.theta(k)) << ',';
        if (k >= 0 && k < K)
          out << g((th.theta(k) - 1.0) / th.theta(k + 1)) << ',' << g(th.theta(k) / th.theta(k + 1));
        else
          out << ',';
        out << "\n";
      }
      break;
    }
    case Family::ogm_g:
    case Family::guler_g: {
      const auto variant =
          fam == Family::ogm_g ? ThetaVariant::ogmg_backward : ThetaVariant::gulerg_backward;
      ThetaSchedule th(variant, K);
      out << "k,theta,a,b\n";
      for (int k = 0; k <= K + 1; ++k) {
        out << k << ',' << g(th.theta(k)) << ',';
        if (k < K) {
          const double t = th.theta(k), tn = th.theta(k + 1);
          out << g(((t - 1.0) * (2.0 * tn - 1.0)) / (t * (2.0 * t - 1.0))) << ','
              << g((2.0 * tn - 1.0) / (2.0 * t - 1.0));
        } else {
          out << ',';
        }
        out << "\n";
      }
      break;
    }
    case Family::fista_g:
    case Family::fgm_g:
    case Family::g_fista_g:
    case Family::g_fgm_g:
    case Family::g_guler_g: {
      const PhiTauSchedule ps = fam == Family::g_guler_g ? PhiTauSchedule::from_backward_theta(K)
                                                         : PhiTauSchedule::reference(K);
      out << "k,phi,tau,a\n";
      for (int k = -1; k <= K + 1; ++k) {
        out << k << ',' << g(ps.phi(k)) << ',';
        if (k >= 0 && k <= K) out << g(ps.tau(k));
        out << ',';
        if (k >= 0 && k < K)
          out << g((ps.phi(k + 1) - ps.phi(k + 2)) / (ps.phi(k) - ps.phi(k + 1)));
        out << "\n";
      }
      break;
    }
    case Family::item:
    case Family::proximal_item: {
      ItemSchedule sc(fam == Family::item ? ItemVariant::item_smooth : ItemVariant::proximal_item, K,
                      fam == Family::item ? kappa : q);
      out << "k,A,gamma,delta\n";
      for (int k = 0; k <= K + 1; ++k) {
        out << k << ',' << g(sc.A(k)) << ',';
        if (k <= K)
          out << g(sc.gamma(k)) << ',' << g(sc.delta(k));
        else
          out << ',';
        out << "\n";
      }
      break;
    }
    case Family::nonstationary_sc_fgm: {
      NonstationarySchedule sc(K, 1.0 / kappa);
      out << "k,A,gamma,delta,alpha\n";
      for (int k = 0; k <= K + 1; ++k) {
        out << k << ',' << g(sc.A(k)) << ',';
        if (k <= K)
          out << g(sc.gamma(k)) << ',' << g(sc.delta(k)) << ',' << g(sc.alpha(k));
        else
          out << ",,";
        out << "\n";
      }
      break;
    }
    default:
      fail(ErrorCode::invalid_argument,
           std::string(family_name(fam)) +
               " has no per-iteration coefficient schedule (constant coefficients)");
  }
  return out.str();
}

int cmd_dump_schedule(const std::string& family, int K, double kappa, double q,
                      const std::string& out_path) {
  if (K < 1) fail(ErrorCode::invalid_argument, "K must be >= 1");
  const std::string table = dump_schedule_table(family_from_name(family), K, kappa, q);
  if (out_path.empty())
    std::cout << table;
  else {
    write_text_file(out_path, table);
    std::cout << "schedule -> " << out_path << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// gen-instance

int cmd_gen_instance(const std::string& kind, const std::string& config_path,
                     std::optional<std::uint64_t> seed, const std::string& out_path) {
  InstanceConfig cfg = config_path.empty()
                           ? InstanceConfig::defaults(instance_kind_from_name(kind))
                           : instance_config_from_json(load_json_file(config_path));
  if (seed) cfg.seed = *seed;
  const std::string text = instance_to_json(generate(cfg)).dump(2) + "\n";
  if (out_path.empty())
    std::cout << text;
  else {
    write_text_file(out_path, text);
    std::cout << "instance -> " << out_path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"first-order method benchmark and verification harness"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "run a method batch and export CSV curves + SVG plots");
  std::string run_config;
  std::optional<std::uint64_t> run_seed;
  std::optional<int> run_K;
  std::optional<std::string> run_out;
  run_cmd->add_option("--config", run_config, "bench config JSON (defaults to the lasso batch)");
  run_cmd->add_option("--seed", run_seed, "override instance seed");
  run_cmd->add_option("--K", run_K, "override horizon");
  run_cmd->add_option("--out", run_out, "output directory");

  auto* verify_cmd = app.add_subcommand("verify", "run invariant suites over seeded instances");
  std::string suite = "all", families, theorem, verify_out;
  int seeds = 5, verify_K = 30;
  verify_cmd->add_option("--suite", suite,
                         "lyapunov|parallel|collinear|rates|lemmas|form-equivalence|all");
  verify_cmd->add_option("--families", families, "comma-separated family names");
  verify_cmd->add_option("--seeds", seeds, "number of seeds (1..N)")->check(CLI::PositiveNumber);
  verify_cmd->add_option("--K", verify_K, "trace horizon")->check(CLI::PositiveNumber);
  verify_cmd->add_option("--theorem", theorem, "rate bound id (1,c1,2,2c,3,4,5,5l,6,7,8,9)");
  verify_cmd->add_option("--out", verify_out, "write machine-readable JSON report here");

  auto* dump_cmd = app.add_subcommand("dump-schedule", "print a family's coefficient table");
  std::string dump_family, dump_out;
  int dump_K = 10;
  double dump_kappa = 10.0, dump_q = 0.5;
  dump_cmd->add_option("--family", dump_family, "family name")->required();
  dump_cmd->add_option("--K", dump_K, "horizon");
  dump_cmd->add_option("--kappa", dump_kappa, "condition number (item, nonstationary_sc_fgm)");
  dump_cmd->add_option("--q", dump_q, "contraction parameter (proximal_item)");
  dump_cmd->add_option("--out", dump_out, "output file (stdout when absent)");

  auto* gen_cmd = app.add_subcommand("gen-instance", "serialize a generated instance as JSON");
  std::string gen_kind = "lasso", gen_config, gen_out;
  std::optional<std::uint64_t> gen_seed;
  gen_cmd->add_option("--kind", gen_kind, "instance kind (default lasso)");
  gen_cmd->add_option("--config", gen_config, "instance config JSON file");
  gen_cmd->add_option("--seed", gen_seed, "override seed");
  gen_cmd->add_option("--out", gen_out, "output file (stdout when absent)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(run_config, run_seed, run_K, run_out);
    if (verify_cmd->parsed())
      return cmd_verify(suite, families, seeds, verify_K, theorem, verify_out);
    if (dump_cmd->parsed()) return cmd_dump_schedule(dump_family, dump_K, dump_kappa, dump_q, dump_out);
    if (gen_cmd->parsed()) return cmd_gen_instance(gen_kind, gen_config, gen_seed, gen_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::invalid_argument || e.code() == ErrorCode::io_error ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
