#pragma once

#include "opt/oracles.hpp"

namespace opt {

// x - step * grad f(x). step is 1/L for the short step, 1/mu for the long one.
inline Vec grad_step(const SmoothOracle& f, const Vec& x, double step) {
  if (step <= 0.0) fail(ErrorCode::invalid_argument, "grad_step: step must be positive");
  Vec gr = f.gradient(x);
  if (!gr.allFinite()) fail(ErrorCode::oracle_failure, "grad_step: non-finite gradient");
  return x - step * gr;
}

struct ProxPointResult {
  Vec x_circ;  // Prox_{lambda g}(x)
  Vec gmap;    // (x - x_circ)/lambda
};

inline ProxPointResult prox_point_step(const ProxOracle& g, double lambda, const Vec& x) {
  if (lambda <= 0.0) fail(ErrorCode::invalid_argument, "prox_point_step: lambda must be positive");
  Vec xc = g.prox(lambda, x);
  if (!xc.allFinite()) fail(ErrorCode::oracle_failure, "prox_point_step: non-finite prox output");
  Vec gmap = (x - xc) / lambda;
  return {std::move(xc), std::move(gmap)};
}

struct ProxGradResult {
  Vec x_oplus;  // Prox_{(1/L) g}(x - (1/L) grad f(x))
  Vec gmap;     // L * (x - x_oplus)
};

inline ProxGradResult prox_grad_step(const CompositeProblem& p, const Vec& x) {
  const double L = p.smoothness();
  if (L <= 0.0) fail(ErrorCode::invalid_argument, "prox_grad_step: problem needs L > 0");
  Vec gr = p.f().gradient(x);
  if (!gr.allFinite()) fail(ErrorCode::oracle_failure, "prox_grad_step: non-finite gradient");
  Vec xo = p.g().prox(1.0 / L, x - gr / L);
  if (!xo.allFinite()) fail(ErrorCode::oracle_failure, "prox_grad_step: non-finite prox output");
  Vec gmap = L * (x - xo);
  return {std::move(xo), std::move(gmap)};
}

// Certified subgradient of F at the prox-grad point:
//   v = L(x - x_oplus) - grad f(x) + grad f(x_oplus)  belongs to dF(x_oplus)
// and satisfies |v| <= 2 * |L(x - x_oplus)|.
inline Vec composite_subgradient_witness(const CompositeProblem& p, const Vec& x) {
  auto r = prox_grad_step(p, x);
  return r.gmap - p.f().gradient(x) + p.f().gradient(r.x_oplus);
}

}  // namespace opt
