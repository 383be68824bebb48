#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <initializer_list>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "opt/errors.hpp"
#include "opt/methods.hpp"
#include "opt/oracles.hpp"
#include "opt/problems.hpp"
#include "opt/rng.hpp"
#include "opt/schedules.hpp"
#include "opt/steps.hpp"

namespace opt {

// Outcome of one diagnostic suite. pass holds exactly when every residual is
// finite and worst <= tolerance; residual meaning is suite-specific but is
// always oriented so that larger is worse and <= tolerance is acceptable.
struct DiagnosticReport {
  std::string suite;
  std::vector<double> residuals;
  double worst = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  int worst_index = -1;  // position of the worst residual, -1 when empty
  int first_fail = -1;   // first residual above tolerance, -1 when none
  std::string note;      // free-form context: slack applied, empirical factors
};

namespace detail {

inline DiagnosticReport finalize_report(std::string suite, std::vector<double> residuals,
                                        double tolerance, std::string note = {}) {
  DiagnosticReport rep;
  rep.suite = std::move(suite);
  rep.residuals = std::move(residuals);
  rep.tolerance = tolerance;
  rep.note = std::move(note);
  rep.pass = true;
  for (std::size_t i = 0; i < rep.residuals.size(); ++i) {
    double v = rep.residuals[i];
    if (!std::isfinite(v)) v = std::numeric_limits<double>::infinity();
    if (rep.worst_index < 0 || v > rep.worst) {
      rep.worst = v;
      rep.worst_index = static_cast<int>(i);
    }
    if (v > tolerance && rep.first_fail < 0) rep.first_fail = static_cast<int>(i);
  }
  if (rep.worst_index < 0) rep.worst = 0.0;
  rep.pass = rep.first_fail < 0;
  return rep;
}

inline void require_records(const RunTrace& tr) {
  if (tr.horizon < 1 || tr.records.size() != static_cast<std::size_t>(tr.horizon) + 1)
    fail(ErrorCode::invalid_argument, "diagnostic: trace is empty or inconsistent with its horizon");
}

inline const Vec& record_z(const TraceRecord& rec) {
  if (!rec.z)
    fail(ErrorCode::unsupported_trace, "diagnostic needs an auxiliary-form trace carrying z");
  return *rec.z;
}

// z_k for families whose auxiliary form blends x_k = c * adv_{k-1} + (1-c) z_k.
// At k = 0 every such family starts from z_0 = x_0.
inline Vec blended_z(const RunTrace& tr, int k, double c) {
  if (k == 0) return tr.records[0].x;
  if (std::abs(1.0 - c) < 1e-14)
    fail(ErrorCode::unsupported_trace, "z reconstruction degenerate: blend weight at one");
  const auto ku = static_cast<std::size_t>(k);
  return (tr.records[ku].x - c * tr.records[ku - 1].adv) / (1.0 - c);
}

inline std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace detail

// Lyapunov (potential) value sequence U_0..U_K for the families whose
// convergence analysis is potential-based. z_k is always rebuilt from the
// momentum-visible data (x_k, adv_{k-1}) via the family's auxiliary blend, so
// the same evaluation audits momentum-form and auxiliary-form traces alike.
// Strongly convex proximal families need the instance optimum recorded on p.
inline std::vector<double> lyapunov_sequence(const MethodSpec& spec, const RunTrace& tr,
                                             const CompositeProblem& p) {
  detail::require_records(tr);
  if (spec.family != tr.family)
    fail(ErrorCode::invalid_argument, "lyapunov: spec family does not match the trace");
  const int K = tr.horizon;
  const auto& rec = tr.records;
  auto at = [&rec](int k) -> const TraceRecord& { return rec[static_cast<std::size_t>(k)]; };
  std::vector<double> U(static_cast<std::size_t>(K) + 1, 0.0);

  switch (tr.family) {
    case Family::ogm_g: {
      const ThetaSchedule th(ThetaVariant::ogmg_backward, K);
      const double L = tr.modulus;
      const double gK_sq = at(K).gmap_sq;
      const double fK = p.f().value(at(K).x);
      const double th0 = th.theta(0);
      U[0] = (2.0 / (th0 * th0)) * (gK_sq / (2.0 * L) + p.f().value(at(0).x) - fK);
      for (int k = 1; k <= K; ++k) {
        const Vec& x = at(k).x;
        const Vec& ap = at(k - 1).adv;
        const Vec grad = L * (x - at(k).adv);
        const double t = th.theta(k);
        const Vec z = x + ((t - 1.0) * (t - 1.0) / (2.0 * t - 1.0)) * (x - ap);
        const double bracket = (gK_sq + at(k).gmap_sq) / (2.0 * L) + p.f().value(x) - fK -
                               grad.dot(x - ap);
        U[static_cast<std::size_t>(k)] =
            bracket / (t * t) + (L / (t * t * t * t)) * (z - ap).dot(z - at(K).adv);
      }
      break;
    }
    case Family::fista_g:
    case Family::g_fista_g: {
      const PhiTauSchedule ps = spec.schedule ? *spec.schedule : PhiTauSchedule::reference(K);
      if (ps.horizon() != K)
        fail(ErrorCode::invalid_argument, "lyapunov: schedule horizon does not match the trace");
      const double L = tr.modulus;
      const double FK = at(K).F;
      for (int k = 0; k <= K; ++k) {
        const Vec& x = at(k).x;
        const Vec& ap = k > 0 ? at(k - 1).adv : at(0).x;
        const Vec gmap = L * (x - at(k).adv);
        const Vec z = detail::blended_z(tr, k, ps.phi(k + 1) / ps.phi(k));
        const double bracket = at(k).gmap_sq / (2.0 * L) + at(k).F - FK - gmap.dot(x - ap);
        U[static_cast<std::size_t>(k)] =
            ps.tau(k) * bracket + (L / ps.phi(k)) * (z - ap).dot(z - at(K).adv);
      }
      break;
    }
    case Family::fgm_g:
    case Family::g_fgm_g: {
      const PhiTauSchedule ps = spec.schedule ? *spec.schedule : PhiTauSchedule::reference(K);
      if (ps.horizon() != K)
        fail(ErrorCode::invalid_argument, "lyapunov: schedule horizon does not match the trace");
      const double L = tr.modulus;
      const double gK_sq = at(K).gmap_sq;
      const double fK = p.f().value(at(K).x);
      for (int k = 0; k <= K; ++k) {
        const Vec& x = at(k).x;
        const Vec& ap = k > 0 ? at(k - 1).adv : at(0).x;
        const Vec grad = L * (x - at(k).adv);
        const Vec z = detail::blended_z(tr, k, ps.phi(k + 1) / ps.phi(k));
        const double bracket = (gK_sq + at(k).gmap_sq) / (2.0 * L) + p.f().value(x) - fK -
                               grad.dot(x - ap);
        U[static_cast<std::size_t>(k)] =
            ps.tau(k) * bracket + (L / ps.phi(k)) * (z - ap).dot(z - at(K).adv);
      }
      break;
    }
    case Family::guler_g:
    case Family::g_guler_g: {
      const PhiTauSchedule ps = spec.schedule ? *spec.schedule : PhiTauSchedule::from_backward_theta(K);
      if (ps.horizon() != K)
        fail(ErrorCode::invalid_argument, "lyapunov: schedule horizon does not match the trace");
      const double lam = tr.lambda;
      const double FK = at(K).F;
      for (int k = 0; k <= K; ++k) {
        const Vec& x = at(k).x;
        const Vec& ap = k > 0 ? at(k - 1).adv : at(0).x;
        const Vec gmap = (x - at(k).adv) / lam;
        const Vec z = detail::blended_z(tr, k, ps.phi(k + 1) / ps.phi(k));
        const double bracket = lam * at(k).gmap_sq + at(k).F - FK - gmap.dot(x - ap);
        U[static_cast<std::size_t>(k)] =
            ps.tau(k) * bracket + (1.0 / (lam * ps.phi(k))) * (z - ap).dot(z - at(K).adv);
      }
      break;
    }
    case Family::proximal_tmm:
    case Family::proximal_item: {
      if (!p.known_opt)
        fail(ErrorCode::invalid_argument,
             "lyapunov for strongly convex proximal families needs the instance optimum");
      const double q = tr.q_eff;
      const double mu = p.g().strong_convexity();
      const double lam = tr.lambda;
      const Vec& xs = p.known_opt->x_star;
      const double gs = p.known_opt->F_star;
      const double g0 = p.g().value(at(0).x);
      if (tr.family == Family::proximal_tmm) {
        const double sq = std::sqrt(q);
        const double c = (1.0 - sq) / (1.0 + sq);
        for (int k = 0; k <= K; ++k) {
          const Vec& xc_prev = k > 0 ? at(k - 1).adv : at(0).x;
          const double g_prev = k > 0 ? at(k - 1).F : g0;
          const Vec z = detail::blended_z(tr, k, c);
          U[static_cast<std::size_t>(k)] = g_prev - gs - 0.5 * mu * (xc_prev - xs).squaredNorm() +
                                           mu * (z - xs).squaredNorm();
        }
      } else {
        const ItemSchedule is(ItemVariant::proximal_item, K, q, spec.item_table_seed);
        for (int k = 0; k <= K; ++k) {
          const Vec& xc_prev = k > 0 ? at(k - 1).adv : at(0).x;
          const double g_prev = k > 0 ? at(k - 1).F : g0;
          const Vec z = detail::blended_z(tr, k, is.gamma(k));
          const double head = is.A(k) * (g_prev - gs - 0.5 * mu * (xc_prev - xs).squaredNorm());
          U[static_cast<std::size_t>(k)] =
              head + (is.A(k) * mu + mu + 1.0 / lam) * (z - xs).squaredNorm();
        }
      }
      break;
    }
    default:
      fail(ErrorCode::unsupported_trace,
           std::string("no Lyapunov rule for family ") + family_name(tr.family));
  }
  return U;
}

// Per-step decrease of a scalar sequence: residual_k = (U_{k+1} - decay*U_k)
// normalized by max(1, |U_k|, |U_{k+1}|), so the default 1e-8 gate is
// magnitude-independent. decay = 1 checks plain monotonicity; decay < 1
// checks a geometric contraction.
inline DiagnosticReport check_monotone(const std::vector<double>& U, double decay = 1.0,
                                       double tolerance = 1e-8) {
  if (U.size() < 2)
    fail(ErrorCode::invalid_argument, "monotonicity check needs at least two values");
  if (!(decay > 0.0) || decay > 1.0)
    fail(ErrorCode::invalid_argument, "monotonicity decay factor must lie in (0, 1]");
  std::vector<double> res;
  res.reserve(U.size() - 1);
  for (std::size_t k = 0; k + 1 < U.size(); ++k) {
    const double scale = std::max({1.0, std::abs(U[k]), std::abs(U[k + 1])});
    res.push_back((U[k + 1] - decay * U[k]) / scale);
  }
  return detail::finalize_report("monotone", std::move(res), tolerance);
}

namespace detail {

// A displacement shorter than the rounding noise of the quantities differenced
// carries no certifiable direction at the requested tolerance: the angular
// error of such a vector is eps * magnitude / length, so lengths below
// 64 eps magnitude / tolerance cannot distinguish structure from roundoff.
// Steps under this floor are degenerate for measurement purposes and pass, as
// an exact zero does by definition.
inline double direction_floor(double tolerance, double magnitude) {
  return 64.0 * std::numeric_limits<double>::epsilon() / tolerance * magnitude;
}

inline std::string masked_note(int masked) {
  return masked == 0 ? std::string()
                     : std::to_string(masked) + " step(s) below the direction noise floor";
}

}  // namespace detail

// Direction agreement between the advance step u_k = adv_k - x_k and the
// auxiliary displacement v_k = z_{k+1} - z_k. residual = 1 - |cos angle|.
// A vanishing u or v carries no direction and passes by definition.
inline DiagnosticReport check_parallel(const RunTrace& tr, double tolerance = 1e-9) {
  detail::require_records(tr);
  if (!(tolerance > 0.0)) fail(ErrorCode::invalid_argument, "tolerance must be positive");
  std::vector<double> res;
  res.reserve(static_cast<std::size_t>(tr.horizon));
  int masked = 0;
  for (int k = 0; k < tr.horizon; ++k) {
    const auto& cur = tr.records[static_cast<std::size_t>(k)];
    const auto& nxt = tr.records[static_cast<std::size_t>(k) + 1];
    const Vec u = cur.adv - cur.x;
    const Vec v = detail::record_z(nxt) - detail::record_z(cur);
    const double mag = std::max({1.0, cur.x.norm(), detail::record_z(cur).norm()});
    const double floor = detail::direction_floor(tolerance, mag);
    const double nu = u.norm(), nv = v.norm();
    if (nu <= floor || nv <= floor) {
      res.push_back(0.0);
      ++masked;
      continue;
    }
    res.push_back(std::max(0.0, 1.0 - std::abs(u.dot(v)) / (nu * nv)));
  }
  return detail::finalize_report("parallel", std::move(res), tolerance,
                                 detail::masked_note(masked));
}

// Collinearity of z_k, z_{k+1}, and the long-step point
// w_k = x_k - (1/q_eff)(x_k - adv_k), which equals x - (1/mu) grad f(x) for
// smooth strongly convex families and x - (lambda + 1/mu) gmap(x) for the
// proximal ones. residual = orthogonal part of (w_k - z_k) relative to the
// segment direction, normalized by |w_k - z_k|.
inline DiagnosticReport check_collinear(const RunTrace& tr, double tolerance = 1e-9) {
  detail::require_records(tr);
  if (!(tr.q_eff > 0.0))
    fail(ErrorCode::unsupported_form,
         "collinearity is defined only for strongly convex traces (q_eff > 0)");
  if (!(tolerance > 0.0)) fail(ErrorCode::invalid_argument, "tolerance must be positive");
  std::vector<double> res;
  res.reserve(static_cast<std::size_t>(tr.horizon));
  int masked = 0;
  for (int k = 0; k < tr.horizon; ++k) {
    const auto& cur = tr.records[static_cast<std::size_t>(k)];
    const auto& nxt = tr.records[static_cast<std::size_t>(k) + 1];
    const Vec w = cur.x - (cur.x - cur.adv) / tr.q_eff;
    const Vec a = w - detail::record_z(cur);
    const Vec b = detail::record_z(nxt) - detail::record_z(cur);
    // The long step amplifies oracle rounding by 1/q_eff; fold its length into
    // the magnitude the noise floor is measured against.
    const double mag = std::max({1.0, cur.x.norm(), detail::record_z(cur).norm(),
                                 (cur.x - cur.adv).norm() / tr.q_eff});
    const double floor = detail::direction_floor(tolerance, mag);
    const double na = a.norm(), nb = b.norm();
    if (na <= floor || nb <= floor) {
      res.push_back(0.0);
      ++masked;
      continue;
    }
    const Vec orth = a - (a.dot(b) / b.squaredNorm()) * b;
    res.push_back(orth.norm() / na);
  }
  return detail::finalize_report("collinear", std::move(res), tolerance,
                                 detail::masked_note(masked));
}

// Flatness of the six-point stack {adv_{k-1}, x_k, adv_k, x_{k+1}, z_k,
// z_{k+1}}: after centering, the third singular value relative to the first
// measures the escape from the best-fit plane. adv_{-1} := x_0.
inline DiagnosticReport check_coplanar(const RunTrace& tr, double tolerance = 1e-8) {
  detail::require_records(tr);
  std::vector<double> res;
  res.reserve(static_cast<std::size_t>(tr.horizon));
  const auto dim = tr.records[0].x.size();
  for (int k = 0; k < tr.horizon; ++k) {
    const auto& cur = tr.records[static_cast<std::size_t>(k)];
    const auto& nxt = tr.records[static_cast<std::size_t>(k) + 1];
    const Vec& ap = k > 0 ? tr.records[static_cast<std::size_t>(k) - 1].adv : tr.records[0].x;
    Mat pts(6, dim);
    pts.row(0) = ap.transpose();
    pts.row(1) = cur.x.transpose();
    pts.row(2) = cur.adv.transpose();
    pts.row(3) = nxt.x.transpose();
    pts.row(4) = detail::record_z(cur).transpose();
    pts.row(5) = detail::record_z(nxt).transpose();
    pts.rowwise() -= pts.colwise().mean();
    const Eigen::JacobiSVD<Mat> svd(pts);
    const auto& sv = svd.singularValues();
    if (sv.size() < 3 || sv(0) <= 1e-14 * std::max(1.0, cur.x.norm())) {
      res.push_back(0.0);
      continue;
    }
    res.push_back(sv(2) / sv(0));
  }
  return detail::finalize_report("coplanar", std::move(res), tolerance);
}

// Final-iterate and per-iterate guarantees checkable on a finished trace.
// Names state the quantity bounded; the short ids are the CLI selectors.
enum class RateBound {
  composite_gradient,           // "1"  4*gmap_sq(x_K) <= 264 L/(K+2)^2 * (F(x_0)-F*)
  composite_gradient_composed,  // "c1" 4*gmap_sq(x_2K) <= 528 L^2/(K+2)^4 * |x_0-x*|^2
  prox_gradient,                // "2"  gmap_sq(x_K) <= 4/(lambda (K+2)^2) * (g(x_0)-g*)
  prox_gradient_composed,       // "2c" gmap_sq(x_2K) <= 4/(lambda^2 (K+2)^4) * |x_0-x*|^2
  prox_distance_tmm,            // "3"  |z_k-x*|^2 <= (2/mu)(1-sqrt q)^{2k} (g(x_0)-g*)
  prox_distance_item,           // "4"  |z_k-x*|^2 <= w_k/(w_k+q) |z_0-x*|^2, w_k=(1-sqrt q)^{2k}, k>=1
  smooth_gradient_tight,        // "5"  grad_sq(x_K) <= 2L/theta_0^2 * (f(x_0)-f*)
  smooth_gradient_loose,        // "5l" grad_sq(x_K) <= 4L/(K+1)^2 * (f(x_0)-f*)
  general_composite_gradient,   // "6"  gmap_sq(x_K) <= 2 L tau_0 (F(x_0)-F*)
  general_smooth_gradient,      // "7"  grad_sq(x_K) <= 2 L tau_0 (f(x_0)-f*)
  smooth_gradient_reference,    // "8"  grad_sq(x_K) <= 66 L/(K+2)^2 (f(x_0)-f*)
  general_prox_gradient,        // "9"  gmap_sq(x_K) <= tau_0/lambda (g(x_0)-g*)
};

inline const char* rate_bound_name(RateBound b) {
  switch (b) {
    case RateBound::composite_gradient: return "1";
    case RateBound::composite_gradient_composed: return "c1";
    case RateBound::prox_gradient: return "2";
    case RateBound::prox_gradient_composed: return "2c";
    case RateBound::prox_distance_tmm: return "3";
    case RateBound::prox_distance_item: return "4";
    case RateBound::smooth_gradient_tight: return "5";
    case RateBound::smooth_gradient_loose: return "5l";
    case RateBound::general_composite_gradient: return "6";
    case RateBound::general_smooth_gradient: return "7";
    case RateBound::smooth_gradient_reference: return "8";
    case RateBound::general_prox_gradient: return "9";
  }
  return "unknown";
}

inline RateBound rate_bound_from_name(const std::string& name) {
  for (RateBound b :
       {RateBound::composite_gradient, RateBound::composite_gradient_composed,
        RateBound::prox_gradient, RateBound::prox_gradient_composed, RateBound::prox_distance_tmm,
        RateBound::prox_distance_item, RateBound::smooth_gradient_tight,
        RateBound::smooth_gradient_loose, RateBound::general_composite_gradient,
        RateBound::general_smooth_gradient, RateBound::smooth_gradient_reference,
        RateBound::general_prox_gradient})
    if (name == rate_bound_name(b)) return b;
  fail(ErrorCode::invalid_argument, "unknown rate bound id: " + name);
}

namespace detail {

struct OptimumRef {
  double F_star = 0.0;
  double gap = 0.0;  // certified distance of F_star above the true optimum
  const Vec* x_star = nullptr;
  bool estimated = false;
};

inline OptimumRef resolve_optimum(const CompositeProblem& p, const FstarEstimate* est) {
  if (p.known_opt) return {p.known_opt->F_star, 0.0, &p.known_opt->x_star, false};
  if (est) return {est->F_star_hat, est->certified_gap, &est->x_hat, true};
  fail(ErrorCode::unsupported_form, "rate check needs a recorded optimum or an estimate of it");
}

inline void require_rate_family(const RunTrace& tr, std::initializer_list<Family> fams) {
  for (Family f : fams)
    if (tr.family == f) return;
  fail(ErrorCode::invalid_argument, std::string("rate bound does not cover a ") +
                                        family_name(tr.family) + " trace");
}

inline int composed_phase_length(const RunTrace& tr) {
  if (tr.family != Family::composed || !tr.phase_boundary)
    fail(ErrorCode::invalid_argument, "this rate bound needs a composed two-phase trace");
  return *tr.phase_boundary;
}

}  // namespace detail

// Checks LHS_k <= RHS_k for the selected guarantee. residuals are raw
// LHS - RHS values; the tolerance is rel_tol * max(1, |LHS|, |RHS|) plus an
// absolute slack when the optimum is estimated: objective-gap bounds add
// coefficient * certified_gap (exact containment), distance bounds add 1e-3
// of the RHS because a certified objective gap does not bound the distance
// error of the estimated minimizer.
//
// schedule overrides the tau_0/theta_0 source for the generalized families
// when the trace was produced with a non-default schedule. spec, when given,
// validates the phase structure of composed traces.
inline DiagnosticReport check_rate_bound(RateBound bound, const RunTrace& tr,
                                         const CompositeProblem& p,
                                         const FstarEstimate* est = nullptr,
                                         const PhiTauSchedule* schedule = nullptr,
                                         const MethodSpec* spec = nullptr,
                                         double rel_tol = 1e-8) {
  detail::require_records(tr);
  const auto& rec = tr.records;
  auto at = [&rec](int k) -> const TraceRecord& { return rec[static_cast<std::size_t>(k)]; };
  const int K = tr.horizon;
  const detail::OptimumRef opt = detail::resolve_optimum(p, est);

  auto tau0_for = [&](RateBound b) {
    if (schedule) {
      if (schedule->horizon() != K)
        fail(ErrorCode::invalid_argument, "rate check: schedule horizon does not match the trace");
      return schedule->tau(0);
    }
    const bool theta_default = b == RateBound::general_prox_gradient;
    return (theta_default ? PhiTauSchedule::from_backward_theta(K) : PhiTauSchedule::reference(K))
        .tau(0);
  };
  auto check_phases = [&](Family first, Family second) {
    if (!spec) return;
    if (spec->family != Family::composed || !spec->first || !spec->second ||
        spec->first->family != first || spec->second->family != second)
      fail(ErrorCode::invalid_argument, "composed rate check got a mismatched method spec");
  };

  std::vector<double> lhs, rhs;
  double slack_abs = 0.0;
  std::string note;

  switch (bound) {
    case RateBound::composite_gradient: {
      detail::require_rate_family(tr, {Family::fista_g, Family::g_fista_g});
      const double coef = 264.0 * tr.modulus / ((K + 2.0) * (K + 2.0));
      lhs.push_back(4.0 * at(K).gmap_sq);
      rhs.push_back(coef * (p.F(at(0).x) - opt.F_star));
      slack_abs = coef * opt.gap;
      break;
    }
    case RateBound::composite_gradient_composed: {
      const int Kp = detail::composed_phase_length(tr);
      check_phases(Family::fista, Family::fista_g);
      const double den = std::pow(Kp + 2.0, 4);
      const double coef = 528.0 * tr.modulus * tr.modulus / den;
      lhs.push_back(4.0 * at(K).gmap_sq);
      rhs.push_back(coef * (at(0).x - *opt.x_star).squaredNorm());
      if (opt.estimated) slack_abs = 1e-3 * rhs.back();
      break;
    }
    case RateBound::prox_gradient: {
      detail::require_rate_family(tr, {Family::guler_g, Family::g_guler_g});
      const double coef = 4.0 / (tr.lambda * (K + 2.0) * (K + 2.0));
      lhs.push_back(at(K).gmap_sq);
      rhs.push_back(coef * (p.F(at(0).x) - opt.F_star));
      slack_abs = coef * opt.gap;
      break;
    }
    case RateBound::prox_gradient_composed: {
      const int Kp = detail::composed_phase_length(tr);
      check_phases(Family::guler1, Family::guler_g);
      const double den = std::pow(Kp + 2.0, 4);
      const double coef = 4.0 / (tr.lambda * tr.lambda * den);
      lhs.push_back(at(K).gmap_sq);
      rhs.push_back(coef * (at(0).x - *opt.x_star).squaredNorm());
      if (opt.estimated) slack_abs = 1e-3 * rhs.back();
      break;
    }
    case RateBound::prox_distance_tmm:
    case RateBound::prox_distance_item: {
      const bool tmm = bound == RateBound::prox_distance_tmm;
      detail::require_rate_family(tr, {tmm ? Family::proximal_tmm : Family::proximal_item});
      const double q = tr.q_eff;
      const double sq = std::sqrt(q);
      const double step = (1.0 - sq) * (1.0 - sq);
      const double mu = p.g().strong_convexity();
      const double sc = tmm ? (2.0 / mu) * (p.g().value(at(0).x) - opt.F_star)
                            : (at(0).x - *opt.x_star).squaredNorm();
      // z from the trace when the run recorded it, otherwise rebuilt from the
      // momentum data via the family's auxiliary blend.
      std::optional<ItemSchedule> item_sched;
      if (!tmm)
        item_sched.emplace(ItemVariant::proximal_item, K, q, spec && spec->item_table_seed);
      const double c_tmm = (1.0 - sq) / (1.0 + sq);
      auto z_at = [&](int k) {
        if (at(k).z) return *at(k).z;
        return detail::blended_z(tr, k, tmm ? c_tmm : item_sched->gamma(k));
      };
      double w = 1.0;
      double emp = 0.0;
      double prev_d2 = -1.0;
      const int k_begin = tmm ? 0 : 1;
      if (!tmm) w = step;
      for (int k = k_begin; k <= K; ++k) {
        const double d2 = (z_at(k) - *opt.x_star).squaredNorm();
        lhs.push_back(d2);
        rhs.push_back(tmm ? sc * w : sc * w / (w + q));
        if (prev_d2 > 1e-300) emp = std::max(emp, d2 / prev_d2);
        prev_d2 = d2;
        w *= step;
      }
      if (opt.estimated) {
        double worst_rhs = 0.0;
        for (double v : rhs) worst_rhs = std::max(worst_rhs, std::abs(v));
        slack_abs = 1e-3 * worst_rhs;
      }
      if (tmm) {
        const double alt = (1.0 - 1.0 / sq) * (1.0 - 1.0 / sq);
        note = "per-step contraction of |z_k-x*|^2: empirical max " + detail::fmt_g(emp) +
               ", bound decay " + detail::fmt_g(step) + ", comparison value (1-1/sqrt(q))^2 = " +
               detail::fmt_g(alt);
      } else {
        note = "indices cover k = 1..K";
      }
      break;
    }
    case RateBound::smooth_gradient_tight:
    case RateBound::smooth_gradient_loose: {
      detail::require_rate_family(tr, {Family::ogm_g});
      double coef;
      if (bound == RateBound::smooth_gradient_tight) {
        const ThetaSchedule th(ThetaVariant::ogmg_backward, K);
        coef = 2.0 * tr.modulus / (th.theta(0) * th.theta(0));
      } else {
        coef = 4.0 * tr.modulus / ((K + 1.0) * (K + 1.0));
      }
      lhs.push_back(at(K).gmap_sq);
      rhs.push_back(coef * (p.F(at(0).x) - opt.F_star));
      slack_abs = coef * opt.gap;
      break;
    }
    case RateBound::general_composite_gradient:
    case RateBound::general_smooth_gradient: {
      detail::require_rate_family(tr, bound == RateBound::general_composite_gradient
                                          ? std::initializer_list<Family>{Family::g_fista_g,
                                                                          Family::fista_g}
                                          : std::initializer_list<Family>{Family::g_fgm_g,
                                                                          Family::fgm_g});
      const double coef = 2.0 * tr.modulus * tau0_for(bound);
      lhs.push_back(at(K).gmap_sq);
      rhs.push_back(coef * (p.F(at(0).x) - opt.F_star));
      slack_abs = coef * opt.gap;
      break;
    }
    case RateBound::smooth_gradient_reference: {
      detail::require_rate_family(tr, {Family::fgm_g});
      const double coef = 66.0 * tr.modulus / ((K + 2.0) * (K + 2.0));
      lhs.push_back(at(K).gmap_sq);
      rhs.push_back(coef * (p.F(at(0).x) - opt.F_star));
      slack_abs = coef * opt.gap;
      break;
    }
    case RateBound::general_prox_gradient: {
      detail::require_rate_family(tr, {Family::g_guler_g, Family::guler_g});
      const double coef = tau0_for(bound) / tr.lambda;
      lhs.push_back(at(K).gmap_sq);
      rhs.push_back(coef * (p.F(at(0).x) - opt.F_star));
      slack_abs = coef * opt.gap;
      break;
    }
  }

  std::vector<double> res(lhs.size());
  double scale = 1.0;
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    res[i] = lhs[i] - rhs[i];
    scale = std::max({scale, std::abs(lhs[i]), std::abs(rhs[i])});
  }
  const double tol = rel_tol * scale + slack_abs;
  if (slack_abs > 0.0) {
    if (!note.empty()) note += "; ";
    note += "estimator slack " + detail::fmt_g(slack_abs);
  }
  return detail::finalize_report(std::string("rate_") + rate_bound_name(bound), std::move(res),
                                 tol, std::move(note));
}

// Samples the foundational one- and two-point inequalities behind the step
// analyses on random point pairs: smooth cocoercivity and the smooth upper
// bound, the (possibly strongly convex) subgradient inequality at the prox
// output, the witness norm bound, sufficient decrease of the composite step,
// and prox cocoercivity. Each sample's residual is the worst violation
// normalized by max(1, |F(x)|, |F(y)|, |x|^2, |y|^2). dim is the ambient
// dimension to sample in; when f vanishes any positive step constant is
// admissible and 1 is used.
inline DiagnosticReport check_inequality_lemmas(const CompositeProblem& p, int dim,
                                                int sample_count, std::uint64_t seed = 20260821,
                                                double tolerance = 1e-9) {
  if (dim < 1) fail(ErrorCode::invalid_argument, "inequality check needs dim >= 1");
  if (sample_count < 1) fail(ErrorCode::invalid_argument, "inequality check needs samples >= 1");
  const double L = p.smoothness() > 0.0 ? p.smoothness() : 1.0;
  const double mu_g = p.g().strong_convexity();
  Rng rng(seed);
  static constexpr const char* kNames[6] = {"smooth_cocoercivity", "smooth_upper_bound",
                                            "prox_subgradient",    "witness_norm",
                                            "sufficient_decrease", "prox_cocoercivity"};
  std::vector<double> res;
  res.reserve(static_cast<std::size_t>(sample_count));
  int worst_name = 0;
  double worst_val = -std::numeric_limits<double>::infinity();

  auto draw = [&](double spread) {
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v[i] = spread * rng.normal();
    return v;
  };
  for (int s = 0; s < sample_count; ++s) {
    const double spread = std::exp(0.7 * rng.normal());
    const Vec x = draw(spread), y = draw(spread);
    const double fx = p.f().value(x), fy = p.f().value(y);
    const Vec gx = p.f().gradient(x), gy = p.f().gradient(y);
    const Vec xo = p.g().prox(1.0 / L, x - gx / L);
    const Vec yo = p.g().prox(1.0 / L, y - gy / L);
    const Vec gmx = L * (x - xo);
    const Vec gmy = L * (y - yo);
    const Vec u = gmx - gx;  // subgradient of g at xo induced by the prox step

    double r[6];
    r[0] = fx - fy + gx.dot(y - x) + (gx - gy).squaredNorm() / (2.0 * L);
    r[1] = fy - fx - gx.dot(y - x) - 0.5 * L * (x - y).squaredNorm();
    r[2] = p.g().value(xo) + u.dot(y - xo) + 0.5 * mu_g * (xo - y).squaredNorm() - p.g().value(y);
    r[3] = (u + p.f().gradient(xo)).norm() - 2.0 * gmx.norm();
    r[4] = gmx.squaredNorm() / (2.0 * L) - (p.F(x) - p.F(xo));
    r[5] = gmy.squaredNorm() / (2.0 * L) - (y - x).dot(gmy) - (p.F(x) - p.F(yo));

    const double scale = std::max({1.0, std::abs(p.F(x)), std::abs(p.F(y)), x.squaredNorm(),
                                   y.squaredNorm()});
    double m = -std::numeric_limits<double>::infinity();
    int which = 0;
    for (int i = 0; i < 6; ++i)
      if (r[i] > m) {
        m = r[i];
        which = i;
      }
    m /= scale;
    if (m > worst_val) {
      worst_val = m;
      worst_name = which;
    }
    res.push_back(m);
  }
  return detail::finalize_report("inequality_lemmas", std::move(res), tolerance,
                                 std::string("worst sub-check: ") + kNames[worst_name]);
}

inline std::string describe(const DiagnosticReport& rep) {
  std::string out = rep.suite + ": " + (rep.pass ? "pass" : "FAIL") +
                    " worst=" + detail::fmt_g(rep.worst) + " tol=" + detail::fmt_g(rep.tolerance) +
                    " n=" + std::to_string(rep.residuals.size());
  if (rep.first_fail >= 0) out += " first_fail=" + std::to_string(rep.first_fail);
  if (!rep.note.empty()) out += "; " + rep.note;
  return out;
}

}  // namespace opt
