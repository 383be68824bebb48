#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "opt/errors.hpp"

namespace opt {

// q for proximal strongly convex problems: lambda*mu/(lambda*mu + 1).
inline double proximal_q(double lambda, double mu) {
  if (lambda <= 0.0 || mu <= 0.0) fail(ErrorCode::invalid_argument, "proximal_q needs lambda, mu > 0");
  const double lm = lambda * mu;
  return lm / (lm + 1.0);
}

enum class ThetaVariant { fgm_forward, ogm_forward_with_last, ogmg_backward, gulerg_backward };

inline const char* theta_variant_name(ThetaVariant v) {
  switch (v) {
    case ThetaVariant::fgm_forward: return "fgm_forward";
    case ThetaVariant::ogm_forward_with_last: return "ogm_forward_with_last";
    case ThetaVariant::ogmg_backward: return "ogmg_backward";
    case ThetaVariant::gulerg_backward: return "gulerg_backward";
  }
  return "unknown";
}

// Stepsize-parameter sequence theta_k. Index domains:
//   fgm_forward:           theta_{-1}=0, theta_0=1, forward recursion through K+1
//   ogm_forward_with_last: as fgm through K-1, then theta_K from the final-step rule
//   ogmg_backward:         theta_K=1 backward to theta_0 (special first), sentinel theta_{K+1}=0
//   gulerg_backward:       sentinel theta_{K+1}=0, backward recursion to theta_0
class ThetaSchedule {
 public:
  ThetaSchedule(ThetaVariant variant, int K) : variant_(variant), K_(K) {
    if (K < 1) fail(ErrorCode::invalid_argument, "theta schedule needs K >= 1");
    th_.assign(static_cast<std::size_t>(K) + 3, 0.0);  // storage for indices -1..K+1
    switch (variant) {
      case ThetaVariant::fgm_forward:
        set(-1, 0.0);
        set(0, 1.0);
        for (int k = 0; k <= K; ++k) set(k + 1, up(at(k)));
        break;
      case ThetaVariant::ogm_forward_with_last:
        set(-1, 0.0);
        set(0, 1.0);
        for (int k = 0; k < K - 1; ++k) set(k + 1, up(at(k)));
        set(K, 0.5 * (1.0 + std::sqrt(1.0 + 8.0 * at(K - 1) * at(K - 1))));
        set(K + 1, std::numeric_limits<double>::quiet_NaN());
        break;
      case ThetaVariant::ogmg_backward:
        set(K + 1, 0.0);  // sentinel: the last auxiliary blend weight vanishes
        set(K, 1.0);
        for (int k = K - 1; k >= 1; --k) set(k, up(at(k + 1)));
        set(0, 0.5 * (1.0 + std::sqrt(1.0 + 8.0 * at(1) * at(1))));
        set(-1, std::numeric_limits<double>::quiet_NaN());
        break;
      case ThetaVariant::gulerg_backward:
        set(K + 1, 0.0);
        for (int k = K; k >= 0; --k) set(k, up(at(k + 1)));
        set(-1, std::numeric_limits<double>::quiet_NaN());
        break;
    }
  }

  double theta(int k) const {
    if (k < -1 || k > K_ + 1) fail(ErrorCode::invalid_argument, "theta index out of range");
    const double v = at(k);
    if (std::isnan(v)) fail(ErrorCode::invalid_argument, "theta undefined at this index for variant");
    return v;
  }

  int horizon() const { return K_; }
  ThetaVariant variant() const { return variant_; }

  // Worst residual of the defining recursion; tests gate this at 1e-10.
  double recursion_residual() const {
    double worst = 0.0;
    auto rec = [&](int k_next, int k_cur) {
      worst = std::max(worst, std::abs(at(k_next) - up(at(k_cur))));
    };
    switch (variant_) {
      case ThetaVariant::fgm_forward:
        for (int k = 0; k <= K_; ++k) rec(k + 1, k);
        break;
      case ThetaVariant::ogm_forward_with_last:
        for (int k = 0; k < K_ - 1; ++k) rec(k + 1, k);
        worst = std::max(worst, std::abs(at(K_) - 0.5 * (1.0 + std::sqrt(1.0 + 8.0 * at(K_ - 1) * at(K_ - 1)))));
        break;
      case ThetaVariant::ogmg_backward:
        for (int k = 1; k <= K_ - 1; ++k) rec(k, k + 1);
        worst = std::max(worst, std::abs(at(0) - 0.5 * (1.0 + std::sqrt(1.0 + 8.0 * at(1) * at(1)))));
        break;
      case ThetaVariant::gulerg_backward:
        for (int k = 0; k <= K_; ++k) rec(k, k + 1);
        break;
    }
    return worst;
  }

 private:
  static double up(double t) { return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t)); }
  double at(int k) const { return th_[static_cast<std::size_t>(k + 1)]; }
  void set(int k, double v) { th_[static_cast<std::size_t>(k + 1)] = v; }

  ThetaVariant variant_;
  int K_;
  std::vector<double> th_;
};

enum class SlackFactor { half, one };

// Paired weight sequences (phi, tau) for the gradient-norm methods and their
// generalizations. phi is indexed -1..K+1, tau 0..K. Valid schedules satisfy
//   coupling:  tau_k phi_k - tau_{k+1} phi_{k+1} = phi_{k+1}(tau_{k+1}-tau_k) + 1
//   slack:     (tau_k phi_k - tau_{k+1} phi_{k+1})(tau_{k+1}-tau_k) <= factor * tau_{k+1}
// with phi_{K+1}=0 and phi_K = tau_K = 1.
class PhiTauSchedule {
 public:
  static PhiTauSchedule reference(int K) {
    if (K < 1) fail(ErrorCode::invalid_argument, "phi/tau schedule needs K >= 1");
    PhiTauSchedule s(K, SlackFactor::half);
    s.phi_set(K + 1, 0.0);
    s.phi_set(K, 1.0);
    for (int k = K - 1; k >= -1; --k) {
      const double p1 = s.phi_at(k + 1), p2 = s.phi_at(k + 2);
      const double root = std::sqrt(p2 * p2 + 3.0 * p1 * p1);
      s.phi_set(k, (p2 * p2 - p1 * p2 + 2.0 * p1 * p1 + (p1 - p2) * root) / (p1 + p2));
    }
    for (int k = 0; k <= K; ++k) {
      const double d = s.phi_at(k - 1) - s.phi_at(k);
      s.tau_set(k, 2.0 * s.phi_at(k - 1) / (d * d));
    }
    s.validate();
    return s;
  }

  // Build phi from a tau grid. Prefers the closed form that makes the slack
  // inequality bind (valid when tau strictly increases and reproduces the
  // reference schedule from its own tau); otherwise solves the coupling
  // identity backward. Throws schedule_violation naming the first failing k.
  static PhiTauSchedule custom(int K, const std::vector<double>& tau, SlackFactor factor) {
    if (K < 1) fail(ErrorCode::invalid_argument, "phi/tau schedule needs K >= 1");
    if (tau.size() != static_cast<std::size_t>(K) + 1)
      fail(ErrorCode::invalid_argument, "custom schedule: tau must have K+1 entries");
    for (int k = 0; k <= K; ++k) {
      if (tau[static_cast<std::size_t>(k)] < 0.0)
        fail(ErrorCode::schedule_violation, "custom schedule: tau negative at k=" + std::to_string(k));
      if (k > 0 && tau[static_cast<std::size_t>(k)] < tau[static_cast<std::size_t>(k - 1)] - 1e-12)
        fail(ErrorCode::schedule_violation, "custom schedule: tau decreases at k=" + std::to_string(k));
    }
    if (std::abs(tau[static_cast<std::size_t>(K)] - 1.0) > 1e-9)
      fail(ErrorCode::schedule_violation, "custom schedule: tau_K must equal 1");

    PhiTauSchedule s(K, factor);
    for (int k = 0; k <= K; ++k) s.tau_set(k, tau[static_cast<std::size_t>(k)]);
    s.phi_set(K + 1, 0.0);
    s.phi_set(K, 1.0);

    // Binding route: the slack-equality closed form determines phi_{k+1} from
    // tau alone wherever tau strictly increases.
    const double bf = factor == SlackFactor::half ? 0.5 : 1.0;
    bool binding_ok = true;
    std::vector<double> bind(static_cast<std::size_t>(K) + 1, 0.0);  // bind[k+1] for k=0..K-1
    for (int k = 0; k < K && binding_ok; ++k) {
      const double d = s.tau_at(k + 1) - s.tau_at(k);
      if (d <= 0.0) {
        binding_ok = false;
        break;
      }
      bind[static_cast<std::size_t>(k + 1)] = (bf * s.tau_at(k + 1) / d - 1.0) / d;
    }
    if (binding_ok && std::abs(bind[static_cast<std::size_t>(K)] - 1.0) > 1e-9) binding_ok = false;
    if (binding_ok) {
      for (int k = 1; k <= K; ++k) s.phi_set(k, bind[static_cast<std::size_t>(k)]);
      s.phi_set(K, 1.0);  // exact boundary beats the rounded closed form
      // phi_0 has no binding source; close the chain with the coupling identity.
      if (s.tau_at(0) <= 0.0) binding_ok = false;
      else s.phi_set(0, (s.phi_at(1) * (2.0 * s.tau_at(1) - s.tau_at(0)) + 1.0) / s.tau_at(0));
    }
    if (binding_ok && s.coupling_residual() > 1e-10) binding_ok = false;

    if (!binding_ok) {
      for (int k = K - 1; k >= 0; --k) {
        if (s.tau_at(k) <= 0.0)
          fail(ErrorCode::schedule_violation,
               "custom schedule: coupling identity unsolvable (tau zero) at k=" + std::to_string(k));
        s.phi_set(k, (s.phi_at(k + 1) * (2.0 * s.tau_at(k + 1) - s.tau_at(k)) + 1.0) / s.tau_at(k));
      }
    }

    // phi_{-1} from the tau_0 relation 2 phi_{-1}/(phi_{-1}-phi_0)^2 = tau_0
    // (larger quadratic root); only the reference schedule's diagnostics read
    // it, but the storage stays uniform.
    const double t0 = s.tau_at(0), p0 = s.phi_at(0);
    if (t0 > 0.0) {
      const double b = t0 * p0 + 1.0;
      s.phi_set(-1, (b + std::sqrt(b * b - t0 * t0 * p0 * p0)) / t0);
    } else {
      s.phi_set(-1, p0 + 1.0);
    }
    s.validate();
    return s;
  }

  static PhiTauSchedule constant_tau(int K, SlackFactor factor) {
    return custom(K, std::vector<double>(static_cast<std::size_t>(K) + 1, 1.0), factor);
  }

  // Instantiation phi_k = theta_k^4, tau_k = theta_k^{-2} from the backward
  // four-coefficient theta sequence; binds the slack inequality with factor
  // one exactly.
  static PhiTauSchedule from_backward_theta(int K) {
    ThetaSchedule th(ThetaVariant::gulerg_backward, K);
    std::vector<double> tau(static_cast<std::size_t>(K) + 1);
    for (int k = 0; k <= K; ++k) tau[static_cast<std::size_t>(k)] = 1.0 / (th.theta(k) * th.theta(k));
    return custom(K, tau, SlackFactor::one);
  }

  double phi(int k) const {
    if (k < -1 || k > K_ + 1) fail(ErrorCode::invalid_argument, "phi index out of range");
    return phi_at(k);
  }
  double tau(int k) const {
    if (k < 0 || k > K_) fail(ErrorCode::invalid_argument, "tau index out of range");
    return tau_at(k);
  }
  int horizon() const { return K_; }
  SlackFactor slack_factor() const { return factor_; }

  // Residuals are normalized by the magnitude of the identity's own terms so
  // the 1e-10 gate is horizon-independent; the raw terms grow like O(K).
  double coupling_residual() const {
    double worst = 0.0;
    for (int k = 0; k < K_; ++k) worst = std::max(worst, coupling_at(k));
    return worst;
  }

  // max over k of normalized (LHS - factor*tau_{k+1}); feasible <= 0 (+tol).
  double slack_residual() const {
    double worst = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < K_; ++k) worst = std::max(worst, slack_at(k));
    return worst;
  }

  void validate() const {
    if (std::abs(phi_at(K_ + 1)) > 0.0 || std::abs(phi_at(K_) - 1.0) > 1e-12 ||
        std::abs(tau_at(K_) - 1.0) > 1e-9)
      fail(ErrorCode::schedule_violation, "phi/tau boundary conditions violated");
    for (int k = 0; k < K_; ++k) {
      if (coupling_at(k) > 1e-10)
        fail(ErrorCode::schedule_violation, "coupling identity violated at k=" + std::to_string(k));
      if (slack_at(k) > 1e-10)
        fail(ErrorCode::schedule_violation, "slack condition violated at k=" + std::to_string(k));
    }
    for (int k = 0; k <= K_; ++k) {
      if (phi_at(k) < 0.0 || phi_at(k) <= phi_at(k + 1))
        fail(ErrorCode::schedule_violation, "phi must be positive decreasing; fails at k=" + std::to_string(k));
      if (k > 0 && tau_at(k) < tau_at(k - 1) - 1e-12)
        fail(ErrorCode::schedule_violation, "tau must be nondecreasing; fails at k=" + std::to_string(k));
    }
  }

 private:
  PhiTauSchedule(int K, SlackFactor f)
      : K_(K), factor_(f), phi_(static_cast<std::size_t>(K) + 3, 0.0), tau_(static_cast<std::size_t>(K) + 1, 0.0) {}

  // Backward-error normalization: the identity relates differences of the
  // products tau*phi, so rounding is measured against those products, not
  // against the (much smaller) differences themselves.
  double coupling_at(int k) const {
    const double pk = tau_at(k) * phi_at(k), pk1 = tau_at(k + 1) * phi_at(k + 1);
    const double lhs = pk - pk1;
    const double rhs = phi_at(k + 1) * (tau_at(k + 1) - tau_at(k)) + 1.0;
    return std::abs(lhs - rhs) / std::max({1.0, std::abs(pk), std::abs(pk1)});
  }

  double slack_at(int k) const {
    const double f = factor_ == SlackFactor::half ? 0.5 : 1.0;
    const double lhs = (tau_at(k) * phi_at(k) - tau_at(k + 1) * phi_at(k + 1)) * (tau_at(k + 1) - tau_at(k));
    const double rhs = f * tau_at(k + 1);
    return (lhs - rhs) / std::max({1.0, std::abs(lhs), std::abs(rhs)});
  }

  double phi_at(int k) const { return phi_[static_cast<std::size_t>(k + 1)]; }
  void phi_set(int k, double v) { phi_[static_cast<std::size_t>(k + 1)] = v; }
  double tau_at(int k) const { return tau_[static_cast<std::size_t>(k)]; }
  void tau_set(int k, double v) { tau_[static_cast<std::size_t>(k)] = v; }

  int K_;
  SlackFactor factor_;
  std::vector<double> phi_, tau_;
};

enum class ItemVariant { item_smooth, proximal_item };

// Accumulation sequence A_k with mixing weights gamma (blend toward z) and
// delta (z-step size) for the strongly convex pair of methods.
class ItemSchedule {
 public:
  // kappa_or_q: condition number kappa for item_smooth (q_eff = 1/kappa),
  // contraction parameter q in (0,1) for proximal_item.
  ItemSchedule(ItemVariant variant, int K, double kappa_or_q, bool table_a1_seed = false)
      : variant_(variant), K_(K), table_seed_(table_a1_seed) {
    if (K < 1) fail(ErrorCode::invalid_argument, "item schedule needs K >= 1");
    q_ = variant == ItemVariant::item_smooth ? 1.0 / kappa_or_q : kappa_or_q;
    if (!(q_ > 0.0 && q_ < 1.0))
      fail(ErrorCode::invalid_argument, "item schedule needs effective q in (0,1)");

    A_.assign(static_cast<std::size_t>(K) + 2, 0.0);
    A_[0] = 0.0;
    int start = 0;
    if (table_seed_) {
      A_[1] = 1.0 / (1.0 - q_);
      start = 1;
    }
    const double den = (1.0 - q_) * (1.0 - q_);
    for (int k = start; k <= K; ++k) {
      const double a = A_[static_cast<std::size_t>(k)];
      // sqrt((1+A)(1+qA)) factored so the intermediate cannot overflow before
      // A itself does (A ~ 1e258 at q=0.9, K=100).
      const double root = std::sqrt(1.0 + a) * std::sqrt(1.0 + q_ * a);
      const double next = ((1.0 + q_) * a + 2.0 * (1.0 + root)) / den;
      if (!std::isfinite(next))
        fail(ErrorCode::schedule_violation,
             "item schedule overflow: horizon too large for this q at k=" + std::to_string(k));
      A_[static_cast<std::size_t>(k + 1)] = next;
    }

    gamma_.assign(static_cast<std::size_t>(K) + 1, 0.0);
    delta_.assign(static_cast<std::size_t>(K) + 1, 0.0);
    for (int k = 0; k <= K; ++k) {
      const double a = A_[static_cast<std::size_t>(k)], an = A_[static_cast<std::size_t>(k + 1)];
      gamma_[static_cast<std::size_t>(k)] = a / ((1.0 - q_) * an);
      delta_[static_cast<std::size_t>(k)] = (den * an - (1.0 + q_) * a) / (2.0 * (1.0 + q_ + q_ * a));
    }
    validate();
  }

  double A(int k) const {
    if (k < 0 || k > K_ + 1) fail(ErrorCode::invalid_argument, "A index out of range");
    return A_[static_cast<std::size_t>(k)];
  }
  double gamma(int k) const {
    if (k < 0 || k > K_) fail(ErrorCode::invalid_argument, "gamma index out of range");
    return gamma_[static_cast<std::size_t>(k)];
  }
  double delta(int k) const {
    if (k < 0 || k > K_) fail(ErrorCode::invalid_argument, "delta index out of range");
    return delta_[static_cast<std::size_t>(k)];
  }
  double q_eff() const { return q_; }
  int horizon() const { return K_; }
  ItemVariant variant() const { return variant_; }
  bool table_seed() const { return table_seed_; }

  void validate() const {
    const double contraction = (1.0 - std::sqrt(q_)) * (1.0 - std::sqrt(q_));
    for (int k = 0; k <= K_; ++k) {
      const double a = A_[static_cast<std::size_t>(k)], an = A_[static_cast<std::size_t>(k + 1)];
      if (!(an > a)) fail(ErrorCode::schedule_violation, "A must increase; fails at k=" + std::to_string(k));
      if (k >= 1 && an * contraction < a * (1.0 - 1e-12))
        fail(ErrorCode::schedule_violation, "A growth bound violated at k=" + std::to_string(k));
      const double g = gamma_[static_cast<std::size_t>(k)];
      if (!(g >= 0.0 && g < 1.0))
        fail(ErrorCode::schedule_violation, "gamma outside [0,1) at k=" + std::to_string(k));
      if (!(delta_[static_cast<std::size_t>(k)] > 0.0))
        fail(ErrorCode::schedule_violation, "delta not positive at k=" + std::to_string(k));
    }
  }

 private:
  ItemVariant variant_;
  int K_;
  bool table_seed_;
  double q_;
  std::vector<double> A_, gamma_, delta_;
};

// Accumulation sequence for the non-stationary strongly convex momentum
// method. q_inv = mu/L may be zero (the merely convex limit), in which case
// the sequence reduces to the squared fgm thetas.
class NonstationarySchedule {
 public:
  NonstationarySchedule(int K, double q_inv) : K_(K), q_inv_(q_inv) {
    if (K < 1) fail(ErrorCode::invalid_argument, "schedule needs K >= 1");
    if (q_inv < 0.0 || q_inv >= 1.0) fail(ErrorCode::invalid_argument, "needs mu/L in [0,1)");
    A_.assign(static_cast<std::size_t>(K) + 3, 0.0);
    A_[0] = 0.0;
    for (int k = 0; k <= K + 1; ++k) {
      const double a = A_[static_cast<std::size_t>(k)];
      const double root = std::sqrt(4.0 * a + 4.0 * q_inv * a * a + 1.0);
      A_[static_cast<std::size_t>(k + 1)] = (2.0 * a + 1.0 + root) / (2.0 * (1.0 - q_inv));
    }
  }

  double A(int k) const {
    if (k < 0 || k > K_ + 2) fail(ErrorCode::invalid_argument, "A index out of range");
    return A_[static_cast<std::size_t>(k)];
  }
  // Blend weight on z when forming x_k.
  double gamma(int k) const {
    const double a = A(k), an = A(k + 1);
    return ((an - a) * (1.0 + q_inv_ * a)) / (an + 2.0 * q_inv_ * a * an - q_inv_ * a * a);
  }
  // z-step weight; the z-update uses q_inv * delta as the pull toward the
  // long-step point, which stays finite as q_inv -> 0.
  double delta(int k) const { return (A(k + 1) - A(k)) / (1.0 + q_inv_ * A(k + 1)); }
  // Momentum coefficient for the single-coefficient update form.
  double alpha(int k) const {
    const double a = A(k), an = A(k + 1), ann = A(k + 2);
    return ((ann - an) * (an * (1.0 - q_inv_) - a - 1.0)) /
           (ann * (2.0 * q_inv_ * an + 1.0) - q_inv_ * an * an);
  }
  double q_inv() const { return q_inv_; }
  int horizon() const { return K_; }

 private:
  int K_;
  double q_inv_;
  std::vector<double> A_;
};

}  // namespace opt
