#pragma once

#include <chrono>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "opt/errors.hpp"
#include "opt/oracles.hpp"
#include "opt/schedules.hpp"
#include "opt/steps.hpp"

namespace opt {

enum class Family {
  ista,
  fista,
  fpgm_m,
  fista_g,
  g_fista_g,
  fgm,
  ogm,
  ogm_g,
  fgm_g,
  g_fgm_g,
  guler1,
  guler2,
  guler_g,
  g_guler_g,
  sc_fgm,
  sc_ogm,
  tmm,
  item,
  nonstationary_sc_fgm,
  geometric_descent,
  proximal_tmm,
  proximal_item,
  composed,
};

enum class Form { momentum, auxiliary };

inline const char* family_name(Family f) {
  switch (f) {
    case Family::ista: return "ista";
    case Family::fista: return "fista";
    case Family::fpgm_m: return "fpgm_m";
    case Family::fista_g: return "fista_g";
    case Family::g_fista_g: return "g_fista_g";
    case Family::fgm: return "fgm";
    case Family::ogm: return "ogm";
    case Family::ogm_g: return "ogm_g";
    case Family::fgm_g: return "fgm_g";
    case Family::g_fgm_g: return "g_fgm_g";
    case Family::guler1: return "guler1";
    case Family::guler2: return "guler2";
    case Family::guler_g: return "guler_g";
    case Family::g_guler_g: return "g_guler_g";
    case Family::sc_fgm: return "sc_fgm";
    case Family::sc_ogm: return "sc_ogm";
    case Family::tmm: return "tmm";
    case Family::item: return "item";
    case Family::nonstationary_sc_fgm: return "nonstationary_sc_fgm";
    case Family::geometric_descent: return "geometric_descent";
    case Family::proximal_tmm: return "proximal_tmm";
    case Family::proximal_item: return "proximal_item";
    case Family::composed: return "composed";
  }
  return "unknown";
}

inline Family family_from_name(const std::string& name) {
  for (Family f : {Family::ista, Family::fista, Family::fpgm_m, Family::fista_g, Family::g_fista_g,
                   Family::fgm, Family::ogm, Family::ogm_g, Family::fgm_g, Family::g_fgm_g,
                   Family::guler1, Family::guler2, Family::guler_g, Family::g_guler_g, Family::sc_fgm,
                   Family::sc_ogm, Family::tmm, Family::item, Family::nonstationary_sc_fgm,
                   Family::geometric_descent, Family::proximal_tmm, Family::proximal_item,
                   Family::composed})
    if (name == family_name(f)) return f;
  fail(ErrorCode::invalid_argument, "unknown method family: " + name);
}

inline const char* form_name(Form f) { return f == Form::momentum ? "momentum" : "auxiliary"; }

struct MethodSpec {
  Family family = Family::fista;
  Form form = Form::momentum;
  int switch_index = 1;   // fpgm_m: momentum active for k < switch_index
  double lambda = 1.0;    // proximal-point families
  bool item_table_seed = false;
  std::shared_ptr<const PhiTauSchedule> schedule;  // g_* families; null = default
  std::shared_ptr<const MethodSpec> first, second;  // composed

  static MethodSpec make(Family f, Form form = Form::momentum) {
    MethodSpec s;
    s.family = f;
    s.form = form;
    return s;
  }
  static MethodSpec make_composed(MethodSpec a, MethodSpec b) {
    MethodSpec s;
    s.family = Family::composed;
    s.first = std::make_shared<MethodSpec>(std::move(a));
    s.second = std::make_shared<MethodSpec>(std::move(b));
    return s;
  }
};

struct TraceRecord {
  Vec x;
  Vec adv;  // the advanced point the family is built on
  std::optional<Vec> z;
  double F = 0.0;         // objective at the advanced point
  double gmap_sq = 0.0;   // squared norm of the gradient mapping at x
  double subgrad_sq = 0.0;  // squared norm of the subgradient witness at adv
};

struct RunTrace {
  std::vector<TraceRecord> records;  // indices 0..horizon
  int horizon = 0;
  Setup setup = Setup::smooth;
  Family family = Family::fista;
  Form form = Form::momentum;
  double modulus = 0.0;  // L for smooth/composite families, 1/lambda for proximal-point
  double lambda = 0.0;   // proximal-point families only
  double q_eff = 0.0;    // 1/kappa or q for strongly convex families, else 0
  double wall_seconds = 0.0;
  std::optional<int> phase_boundary;  // composed: index where the second phase starts
};

struct MethodState {
  Vec x;         // x_k
  Vec adv;       // advanced point of x_k
  Vec gmap;      // modulus * (x_k - adv)
  Vec adv_prev;  // advanced point of x_{k-1}; := x_0 at the start
  std::optional<Vec> z;
};

namespace detail {

inline bool family_is_smooth(Family f) {
  switch (f) {
    case Family::fgm:
    case Family::ogm:
    case Family::ogm_g:
    case Family::fgm_g:
    case Family::g_fgm_g:
    case Family::sc_fgm:
    case Family::sc_ogm:
    case Family::tmm:
    case Family::item:
    case Family::nonstationary_sc_fgm:
    case Family::geometric_descent: return true;
    default: return false;
  }
}

inline bool family_is_prox_point(Family f) {
  switch (f) {
    case Family::guler1:
    case Family::guler2:
    case Family::guler_g:
    case Family::g_guler_g:
    case Family::proximal_tmm:
    case Family::proximal_item: return true;
    default: return false;
  }
}

inline bool family_needs_strong_convexity(Family f) {
  switch (f) {
    case Family::sc_fgm:
    case Family::sc_ogm:
    case Family::tmm:
    case Family::item:
    case Family::geometric_descent:
    case Family::proximal_tmm:
    case Family::proximal_item: return true;
    default: return false;
  }
}

}  // namespace detail

// Shared fixed-horizon runner. Momentum form:
//   x_{k+1} = adv_k + a_k (adv_k - adv_{k-1}) + b_k (adv_k - x_k)
// Auxiliary form:
//   x_k = c_k adv_{k-1} + (1 - c_k) z_k
// with either the displacement z-update  z_{k+1} = z_k - s_k (x_k - adv_k)
// or the pull-toward-long-step update    z_{k+1} = z_k + d_k (x_k - z_k) - r_k (x_k - adv_k),
// whose limit point x - (1/q)(x - adv) is the long gradient / proximal step.
class MethodEngine {
 public:
  MethodEngine(const MethodSpec& spec, const CompositeProblem& p, int K)
      : spec_(spec), p_(p), K_(K) {
    if (K < 1) fail(ErrorCode::invalid_argument, "run needs K >= 1");
    if (spec.family == Family::composed)
      fail(ErrorCode::invalid_argument, "composed specs are executed by run(), not by an engine");
    check_setup();
    build_tables();
  }

  const CompositeProblem& problem() const { return p_; }
  int horizon() const { return K_; }
  double modulus() const { return modulus_; }
  double q_eff() const { return q_eff_; }
  Setup setup() const { return p_.setup(); }

  // Advanced point of x plus the gradient mapping vector modulus*(x - adv).
  void advance(const Vec& x, Vec& adv, Vec& gmap) const {
    switch (p_.setup()) {
      case Setup::smooth: {
        adv = x - p_.f().gradient(x) / modulus_;
        gmap = modulus_ * (x - adv);
        return;
      }
      case Setup::proximal_point: {
        auto r = prox_point_step(p_.g(), spec_.lambda, x);
        adv = std::move(r.x_circ);
        gmap = std::move(r.gmap);
        return;
      }
      case Setup::prox_grad: {
        auto r = prox_grad_step(p_, x);
        adv = std::move(r.x_oplus);
        gmap = std::move(r.gmap);
        return;
      }
    }
    fail(ErrorCode::invalid_argument, "unreachable setup");
  }

  MethodState initial_state(const Vec& x0) const {
    MethodState st;
    st.x = x0;
    guard(st.x, 0);
    advance(st.x, st.adv, st.gmap);
    st.adv_prev = x0;  // the pre-start advanced point is pinned to x_0
    if (spec_.form == Form::auxiliary) st.z = x0;
    return st;
  }

  // x_{k+1} from (x_k, adv_k, adv_{k-1}); refreshes the advanced point.
  void step_momentum(MethodState& st, int k) const {
    if (k < 0 || k >= K_) fail(ErrorCode::invalid_argument, "step index out of range");
    Vec x_next = st.adv + a_[static_cast<std::size_t>(k)] * (st.adv - st.adv_prev) +
                 b_[static_cast<std::size_t>(k)] * (st.adv - st.x);
    guard(x_next, k + 1);
    st.adv_prev = std::move(st.adv);
    st.x = std::move(x_next);
    advance(st.x, st.adv, st.gmap);
  }

  // z_{k+1} then x_{k+1} = c_{k+1} adv_k + (1-c_{k+1}) z_{k+1}.
  void step_auxiliary(MethodState& st, int k) const {
    if (k < 0 || k >= K_) fail(ErrorCode::invalid_argument, "step index out of range");
    if (!st.z) fail(ErrorCode::invalid_argument, "auxiliary step needs z in the state");
    const std::size_t uk = static_cast<std::size_t>(k);
    Vec& z = *st.z;
    if (zkind_ == ZKind::displacement) {
      z -= s_[uk] * (st.x - st.adv);
    } else {
      z += d_[uk] * (st.x - z) - r_[uk] * (st.x - st.adv);
    }
    const double c = c_[static_cast<std::size_t>(k + 1)];
    Vec x_next = c * st.adv + (1.0 - c) * z;
    guard(x_next, k + 1);
    st.adv_prev = std::move(st.adv);
    st.x = std::move(x_next);
    advance(st.x, st.adv, st.gmap);
  }

  void step(MethodState& st, int k) const {
    if (spec_.form == Form::auxiliary && zkind_ != ZKind::none) step_auxiliary(st, k);
    else step_momentum(st, k);
  }

  TraceRecord record(const MethodState& st) const {
    TraceRecord r;
    r.x = st.x;
    r.adv = st.adv;
    r.z = st.z;
    r.F = p_.F(st.adv);
    r.gmap_sq = st.gmap.squaredNorm();
    const Vec witness = composite_subgradient_witness_from(st);
    r.subgrad_sq = witness.squaredNorm();
    return r;
  }

  double lambda() const { return spec_.lambda; }
  Form form() const { return spec_.form; }

 private:
  enum class ZKind { displacement, collinear, none };

  void check_setup() {
    const Family f = spec_.family;
    const Setup setup = p_.setup();
    if (detail::family_is_smooth(f) && setup != Setup::smooth)
      fail(ErrorCode::setup_mismatch, std::string(family_name(f)) + " requires g == 0");
    if (detail::family_is_prox_point(f) && setup != Setup::proximal_point)
      fail(ErrorCode::setup_mismatch, std::string(family_name(f)) + " requires f == 0");

    if (detail::family_is_prox_point(f)) {
      if (spec_.lambda <= 0.0) fail(ErrorCode::invalid_argument, "proximal stepsize lambda must be > 0");
      modulus_ = 1.0 / spec_.lambda;
    } else {
      modulus_ = p_.smoothness();
      if (modulus_ <= 0.0)
        fail(ErrorCode::invalid_argument, std::string(family_name(f)) + " needs a positive smoothness constant");
    }

    if (detail::family_needs_strong_convexity(f) || f == Family::nonstationary_sc_fgm) {
      const double mu = detail::family_is_prox_point(f) ? p_.g().strong_convexity()
                                                        : p_.f().strong_convexity();
      if (detail::family_is_prox_point(f)) {
        if (mu <= 0.0 && detail::family_needs_strong_convexity(f))
          fail(ErrorCode::setup_mismatch, std::string(family_name(f)) + " requires strongly convex g");
        q_eff_ = mu > 0.0 ? proximal_q(spec_.lambda, mu) : 0.0;
      } else {
        if (mu <= 0.0 && detail::family_needs_strong_convexity(f))
          fail(ErrorCode::setup_mismatch, std::string(family_name(f)) + " requires strongly convex f");
        q_eff_ = mu > 0.0 ? mu / modulus_ : 0.0;
      }
      // kappa = 1 is admissible for the closed-form families (they reduce to
      // plain gradient/proximal steps); the A-recursion families reject it in
      // their schedule constructor.
      if (q_eff_ > 1.0) fail(ErrorCode::setup_mismatch, "strong convexity must not exceed the smoothness level");
    }
  }

  void build_tables() {
    const Family f = spec_.family;
    const int K = K_;
    a_.assign(static_cast<std::size_t>(K), 0.0);
    b_.assign(static_cast<std::size_t>(K), 0.0);
    c_.assign(static_cast<std::size_t>(K) + 1, 0.0);
    s_.assign(static_cast<std::size_t>(K), 0.0);
    d_.assign(static_cast<std::size_t>(K), 0.0);
    r_.assign(static_cast<std::size_t>(K), 0.0);
    zkind_ = ZKind::displacement;

    auto fill_theta_square = [&](const ThetaSchedule& th, double s_scale) {
      for (int k = 0; k < K; ++k) {
        a_[static_cast<std::size_t>(k)] = (th.theta(k) - 1.0) / th.theta(k + 1);
        s_[static_cast<std::size_t>(k)] = s_scale * th.theta(k);
      }
      for (int k = 1; k <= K; ++k) {
        const double t0 = th.theta(k - 1), t1 = th.theta(k);
        c_[static_cast<std::size_t>(k)] = (t0 * t0) / (t1 * t1);
      }
    };
    auto fill_backward_theta = [&](const ThetaSchedule& th) {
      for (int k = 0; k < K; ++k) {
        const double tk = th.theta(k), tn = th.theta(k + 1);
        a_[static_cast<std::size_t>(k)] = ((tk - 1.0) * (2.0 * tn - 1.0)) / (tk * (2.0 * tk - 1.0));
        b_[static_cast<std::size_t>(k)] = (2.0 * tn - 1.0) / (2.0 * tk - 1.0);
        s_[static_cast<std::size_t>(k)] = th.theta(k);
      }
      for (int k = 1; k <= K; ++k) {
        const double tk = th.theta(k), tn = th.theta(k + 1);
        c_[static_cast<std::size_t>(k)] = (tn * tn * tn * tn) / (tk * tk * tk * tk);
      }
    };
    auto fill_phi_displacement = [&](const PhiTauSchedule& ps) {
      // s_k = tau_k phi_k - tau_{k+1} phi_{k+1}; momentum by the generic
      // displacement-form conversion through z_k = (x_k - c_k adv_{k-1})/(1-c_k).
      for (int k = 0; k < K; ++k)
        s_[static_cast<std::size_t>(k)] = ps.tau(k) * ps.phi(k) - ps.tau(k + 1) * ps.phi(k + 1);
      for (int k = 1; k <= K; ++k) c_[static_cast<std::size_t>(k)] = ps.phi(k + 1) / ps.phi(k);
      for (int k = 0; k < K; ++k) {
        const double ck = ps.phi(k + 1) / ps.phi(k);
        const double cn = ps.phi(k + 2) / ps.phi(k + 1);
        a_[static_cast<std::size_t>(k)] = (1.0 - cn) * ck / (1.0 - ck);
        b_[static_cast<std::size_t>(k)] = (1.0 - cn) * (s_[static_cast<std::size_t>(k)] - 1.0 / (1.0 - ck));
      }
    };
    auto fill_collinear_const = [&](double blend_prev, double d, double r, double a, double b) {
      for (int k = 0; k < K; ++k) {
        a_[static_cast<std::size_t>(k)] = a;
        b_[static_cast<std::size_t>(k)] = b;
        d_[static_cast<std::size_t>(k)] = d;
        r_[static_cast<std::size_t>(k)] = r;
      }
      for (int k = 1; k <= K; ++k) c_[static_cast<std::size_t>(k)] = blend_prev;
      zkind_ = ZKind::collinear;
    };
    // gamma_k = blend weight on adv_{k-1}; momentum by the pull-form conversion.
    auto fill_collinear_schedule = [&](auto&& gamma, auto&& dd, auto&& rr) {
      for (int k = 1; k <= K; ++k) c_[static_cast<std::size_t>(k)] = gamma(k);
      for (int k = 0; k < K; ++k) {
        const double g = gamma(k), gn = gamma(k + 1), dk = dd(k), rk = rr(k);
        d_[static_cast<std::size_t>(k)] = dk;
        r_[static_cast<std::size_t>(k)] = rk;
        a_[static_cast<std::size_t>(k)] = (1.0 - gn) * (1.0 - dk) * g / (1.0 - g);
        b_[static_cast<std::size_t>(k)] = (1.0 - gn) * (rk - dk - (1.0 - dk) / (1.0 - g));
      }
      zkind_ = ZKind::collinear;
    };

    switch (f) {
      case Family::ista:
        zkind_ = ZKind::none;
        if (spec_.form == Form::auxiliary)
          fail(ErrorCode::unsupported_form, "ista has no auxiliary form");
        break;
      case Family::fpgm_m: {
        zkind_ = ZKind::none;
        if (spec_.form == Form::auxiliary)
          fail(ErrorCode::unsupported_form, "fpgm_m has no auxiliary form");
        if (spec_.switch_index < 0) fail(ErrorCode::invalid_argument, "fpgm_m switch index must be >= 0");
        ThetaSchedule th(ThetaVariant::fgm_forward, K);
        for (int k = 0; k < K && k < spec_.switch_index; ++k)
          a_[static_cast<std::size_t>(k)] = (th.theta(k) - 1.0) / th.theta(k + 1);
        break;
      }
      case Family::fgm:
      case Family::fista:
      case Family::guler1:
        fill_theta_square(ThetaSchedule(ThetaVariant::fgm_forward, K), 1.0);
        break;
      case Family::ogm: {
        ThetaSchedule th(ThetaVariant::ogm_forward_with_last, K);
        fill_theta_square(th, 2.0);
        for (int k = 0; k < K; ++k) b_[static_cast<std::size_t>(k)] = th.theta(k) / th.theta(k + 1);
        // Final auxiliary blend follows the final-step theta rule, under which
        // 2 theta_{K-1}^2 = theta_K^2 - theta_K.
        const double t0 = th.theta(K - 1), t1 = th.theta(K);
        c_[static_cast<std::size_t>(K)] = 2.0 * t0 * t0 / (t1 * t1);
        break;
      }
      case Family::guler2: {
        ThetaSchedule th(ThetaVariant::fgm_forward, K);
        fill_theta_square(th, 2.0);
        for (int k = 0; k < K; ++k) b_[static_cast<std::size_t>(k)] = th.theta(k) / th.theta(k + 1);
        break;
      }
      case Family::ogm_g: {
        ThetaSchedule th(ThetaVariant::ogmg_backward, K);
        fill_backward_theta(th);
        s_[0] = 0.5 * (th.theta(0) + 1.0);  // special first z-step
        break;
      }
      case Family::guler_g:
        fill_backward_theta(ThetaSchedule(ThetaVariant::gulerg_backward, K));
        break;
      case Family::fista_g:
      case Family::fgm_g:
        fill_phi_displacement(PhiTauSchedule::reference(K));
        break;
      case Family::g_fista_g:
      case Family::g_fgm_g:
      case Family::g_guler_g: {
        std::shared_ptr<const PhiTauSchedule> ps = spec_.schedule;
        if (!ps) {
          ps = std::make_shared<PhiTauSchedule>(
              f == Family::g_guler_g ? PhiTauSchedule::from_backward_theta(K)
                                     : PhiTauSchedule::reference(K));
        }
        if (ps->horizon() != K)
          fail(ErrorCode::invalid_argument, "schedule horizon does not match the run horizon");
        // The half-slack condition implies the factor-one condition, so the
        // gradient-norm analyses needing factor one accept either kind; only
        // g_fista_g is tied to the tighter half condition.
        if (f == Family::g_fista_g && ps->slack_factor() != SlackFactor::half)
          fail(ErrorCode::invalid_argument, std::string(family_name(f)) + " requires a half-slack schedule");
        ps->validate();
        fill_phi_displacement(*ps);
        break;
      }
      case Family::sc_fgm: {
        const double rk = std::sqrt(1.0 / q_eff_);
        fill_collinear_const(rk / (rk + 1.0), 1.0 / rk, rk, (rk - 1.0) / (rk + 1.0), 0.0);
        break;
      }
      case Family::tmm: {
        const double rk = std::sqrt(1.0 / q_eff_);
        fill_collinear_const((rk - 1.0) / (rk + 1.0), 1.0 / rk, rk,
                             (rk - 1.0) * (rk - 1.0) / (rk * (rk + 1.0)), (rk - 1.0) / rk);
        break;
      }
      case Family::sc_ogm: {
        const double kap = 1.0 / q_eff_;
        const double s8 = std::sqrt(8.0 * kap + 1.0);
        const double ab = (kap - 1.0) / (s8 + 2.0 + kap);
        const double d = (s8 + 3.0) / (s8 + 1.0 + 2.0 * kap);
        fill_collinear_const((s8 + 1.0 + 2.0 * kap) / (2.0 * (s8 + 2.0 + kap)), d, kap * d, ab, ab);
        break;
      }
      case Family::item: {
        item_ = std::make_shared<ItemSchedule>(ItemVariant::item_smooth, K, 1.0 / q_eff_,
                                               spec_.item_table_seed);
        const double q = q_eff_;
        fill_collinear_schedule([&](int k) { return item_->gamma(k); },
                                [&](int k) { return q * item_->delta(k); },
                                [&](int k) { return item_->delta(k); });
        break;
      }
      case Family::proximal_tmm: {
        const double sq = std::sqrt(q_eff_);
        fill_collinear_const((1.0 - sq) / (1.0 + sq), sq, 1.0 / sq,
                             (1.0 - sq) * (1.0 - sq) / (1.0 + sq), 1.0 - sq);
        break;
      }
      case Family::proximal_item: {
        item_ = std::make_shared<ItemSchedule>(ItemVariant::proximal_item, K, q_eff_,
                                               spec_.item_table_seed);
        const double q = q_eff_;
        fill_collinear_schedule([&](int k) { return item_->gamma(k); },
                                [&](int k) { return q * item_->delta(k); },
                                [&](int k) { return item_->delta(k); });
        break;
      }
      case Family::nonstationary_sc_fgm: {
        ns_ = std::make_shared<NonstationarySchedule>(K, q_eff_);
        const double q = q_eff_;
        fill_collinear_schedule([&](int k) { return 1.0 - ns_->gamma(k); },
                                [&](int k) { return q * ns_->delta(k); },
                                [&](int k) { return ns_->delta(k); });
        // The single-coefficient momentum form is given directly.
        for (int k = 0; k < K; ++k) {
          a_[static_cast<std::size_t>(k)] = ns_->alpha(k);
          b_[static_cast<std::size_t>(k)] = 0.0;
        }
        break;
      }
      case Family::geometric_descent:
        fail(ErrorCode::invalid_argument, "geometric descent runs through its dedicated stepper");
      case Family::composed:
        fail(ErrorCode::invalid_argument, "composed specs are executed by run()");
    }
  }

  Vec composite_subgradient_witness_from(const MethodState& st) const {
    if (p_.setup() == Setup::proximal_point) return st.gmap;  // f == 0
    return st.gmap - p_.f().gradient(st.x) + p_.f().gradient(st.adv);
  }

  void guard(const Vec& x, int k) const {
    if (!x.allFinite() || x.norm() > 1e12)
      fail(ErrorCode::divergence, std::string(family_name(spec_.family)) +
                                      " diverged at k=" + std::to_string(k));
  }

  MethodSpec spec_;
  const CompositeProblem& p_;
  int K_;
  double modulus_ = 0.0;
  double q_eff_ = 0.0;
  ZKind zkind_ = ZKind::displacement;
  std::vector<double> a_, b_, c_, s_, d_, r_;
  std::shared_ptr<ItemSchedule> item_;
  std::shared_ptr<NonstationarySchedule> ns_;
};

// Ball-shrinking first-order method; needs an exact line search, so f must
// expose its Hessian action (quadratics), and g must vanish.
struct GeometricState {
  Vec x;
  Vec center;        // current enclosing-ball center
  double radius_sq = 0.0;
  bool started = false;
};

inline GeometricState geometric_descent_init(const CompositeProblem& p, const Vec& x0) {
  if (p.setup() != Setup::smooth)
    fail(ErrorCode::setup_mismatch, "geometric_descent requires g == 0");
  const double L = p.smoothness(), mu = p.f().strong_convexity();
  if (mu <= 0.0) fail(ErrorCode::setup_mismatch, "geometric_descent requires strongly convex f");
  Vec probe = Vec::Zero(x0.size());
  Vec out;
  if (!p.f().hessian_apply(probe, out))
    fail(ErrorCode::unsupported_oracle, "geometric_descent needs Hessian access (quadratic f)");
  GeometricState st;
  st.x = x0;
  const Vec g0 = p.f().gradient(x0);
  st.center = x0 - g0 / mu;
  st.radius_sq = (1.0 - mu / L) * g0.squaredNorm() / (mu * mu);
  st.started = true;
  return st;
}

// One iteration: exact line search between the ball center and the short
// gradient step, then the minimum enclosing ball of (old ball) ∩ (new bound
// ball), with a cheap superset ball when the gradient test says the old ball
// is already slack.
inline GeometricState geometric_descent_step(const CompositeProblem& p, const GeometricState& st) {
  if (!st.started) fail(ErrorCode::invalid_argument, "geometric state not initialized");
  const double L = p.smoothness(), mu = p.f().strong_convexity(), kap = L / mu;
  const Vec gx = p.f().gradient(st.x);
  const Vec xp = st.x - gx / L;
  const Vec dir = xp - st.center;
  Vec hdir;
  if (!p.f().hessian_apply(dir, hdir))
    fail(ErrorCode::unsupported_oracle, "geometric_descent needs Hessian access (quadratic f)");
  const double dhd = dir.dot(hdir);
  const double lam = dhd > 0.0 ? -p.f().gradient(st.center).dot(dir) / dhd : 0.0;
  GeometricState out;
  out.x = (1.0 - lam) * st.center + lam * xp;
  if (!out.x.allFinite() || out.x.norm() > 1e12) fail(ErrorCode::divergence, "geometric_descent diverged");
  const Vec gn = p.f().gradient(out.x);
  const Vec long_step = out.x - gn / mu;
  const double r_bound_sq = (1.0 - 1.0 / kap) * gn.squaredNorm() / (mu * mu);

  if (gx.squaredNorm() / (mu * mu) < 0.5 * st.radius_sq) {
    // Old ball is slack: restart it from the new bound alone (valid superset).
    out.center = long_step;
    out.radius_sq = (gn.squaredNorm() / (mu * mu)) / (1.0 - 1.0 / kap);
  } else {
    const double dist_sq = (long_step - st.center).squaredNorm();
    if (dist_sq < 1e-300) {
      out.center = long_step;
      out.radius_sq = std::min(st.radius_sq, r_bound_sq);
    } else {
      // Minimum ball enclosing the intersection of the two balls.
      const double c = (st.radius_sq - r_bound_sq + dist_sq) / (2.0 * dist_sq);
      if (c >= 1.0) {
        out.center = long_step;
        out.radius_sq = r_bound_sq;
      } else if (c <= 0.0) {
        out.center = st.center;
        out.radius_sq = st.radius_sq;
      } else {
        out.center = (1.0 - c) * st.center + c * long_step;
        out.radius_sq = (1.0 - c) * st.radius_sq + c * r_bound_sq - c * (1.0 - c) * dist_sq;
      }
    }
  }
  out.started = true;
  return out;
}

inline RunTrace run(const MethodSpec& spec, const CompositeProblem& p, const Vec& x0, int K);

namespace detail {

inline RunTrace run_geometric(const MethodSpec& spec, const CompositeProblem& p, const Vec& x0, int K) {
  const auto t0 = std::chrono::steady_clock::now();
  RunTrace tr;
  tr.horizon = K;
  tr.setup = Setup::smooth;
  tr.family = Family::geometric_descent;
  tr.form = spec.form;
  tr.modulus = p.smoothness();
  tr.q_eff = p.f().strong_convexity() / p.smoothness();
  GeometricState st = geometric_descent_init(p, x0);
  const double L = tr.modulus;
  Vec prev_center = x0;  // z-slot lags one step: the center that produced x_k
  for (int k = 0; k <= K; ++k) {
    TraceRecord r;
    r.x = st.x;
    const Vec gx = p.f().gradient(st.x);
    r.adv = st.x - gx / L;
    r.z = prev_center;
    r.F = p.F(r.adv);
    r.gmap_sq = gx.squaredNorm();
    r.subgrad_sq = p.f().gradient(r.adv).squaredNorm();
    tr.records.push_back(std::move(r));
    if (k < K) {
      prev_center = st.center;
      st = geometric_descent_step(p, st);
    }
  }
  tr.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return tr;
}

inline RunTrace run_composed(const MethodSpec& spec, const CompositeProblem& p, const Vec& x0, int K) {
  if (!spec.first || !spec.second)
    fail(ErrorCode::invalid_argument, "composed spec needs both phases");
  RunTrace first = run(*spec.first, p, x0, K);
  RunTrace second = run(*spec.second, p, first.records.back().x, K);
  RunTrace tr = std::move(first);
  tr.family = Family::composed;
  tr.horizon = 2 * K;
  tr.phase_boundary = K;
  tr.wall_seconds += second.wall_seconds;
  for (int k = 1; k <= K; ++k)
    tr.records.push_back(std::move(second.records[static_cast<std::size_t>(k)]));
  return tr;
}

}  // namespace detail

inline RunTrace run(const MethodSpec& spec, const CompositeProblem& p, const Vec& x0, int K) {
  if (K < 1) fail(ErrorCode::invalid_argument, "run needs K >= 1");
  if (spec.family == Family::composed) return detail::run_composed(spec, p, x0, K);
  if (spec.family == Family::geometric_descent) return detail::run_geometric(spec, p, x0, K);

  const auto t0 = std::chrono::steady_clock::now();
  MethodEngine eng(spec, p, K);
  RunTrace tr;
  tr.horizon = K;
  tr.setup = p.setup();
  tr.family = spec.family;
  tr.form = spec.form;
  tr.modulus = eng.modulus();
  tr.lambda = detail::family_is_prox_point(spec.family) ? spec.lambda : 0.0;
  tr.q_eff = eng.q_eff();
  MethodState st = eng.initial_state(x0);
  for (int k = 0; k <= K; ++k) {
    tr.records.push_back(eng.record(st));
    if (k < K) eng.step(st, k);
  }
  tr.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return tr;
}

}  // namespace opt
