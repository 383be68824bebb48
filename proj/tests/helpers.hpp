#pragma once

#include <cstdint>
#include <memory>

#include "opt/oracles.hpp"
#include "opt/rng.hpp"

namespace test_support {

using opt::Mat;
using opt::Vec;

// Random quadratic with exact spectrum endpoints [mu, L] via a Haar-ish
// orthogonal basis from QR of a Gaussian matrix.
inline std::shared_ptr<opt::QuadraticSmooth> random_quadratic(int n, double mu, double L,
                                                              std::uint64_t seed) {
  opt::Rng rng(seed);
  Mat G(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) G(i, j) = rng.normal();
  Eigen::HouseholderQR<Mat> qr(G);
  Mat Q = qr.householderQ();
  Vec evals(n);
  for (int i = 0; i < n; ++i) evals[i] = n == 1 ? L : mu + (L - mu) * double(i) / double(n - 1);
  Mat H = Q * evals.asDiagonal() * Q.transpose();
  H = 0.5 * (H + H.transpose()).eval();
  Vec shift(n);
  for (int i = 0; i < n; ++i) shift[i] = rng.normal();
  return std::make_shared<opt::QuadraticSmooth>(H, shift, mu, L);
}

inline Vec random_vec(int n, std::uint64_t seed, double scale = 1.0) {
  opt::Rng rng(seed);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = scale * rng.normal();
  return v;
}

inline opt::CompositeProblem smooth_problem(int n, double mu, double L, std::uint64_t seed) {
  return opt::CompositeProblem(random_quadratic(n, mu, L, seed), std::make_shared<opt::ZeroProx>());
}

inline opt::CompositeProblem composite_problem(int n, double L, double l1_weight,
                                               std::uint64_t seed) {
  return opt::CompositeProblem(random_quadratic(n, 0.0, L, seed),
                               std::make_shared<opt::L1Prox>(l1_weight));
}

inline opt::CompositeProblem prox_point_problem(int n, double mu, double l1_weight,
                                                std::uint64_t seed) {
  return opt::CompositeProblem(
      std::make_shared<opt::ZeroSmooth>(),
      std::make_shared<opt::QuadraticL1Prox>(mu, random_vec(n, seed + 1, 2.0), l1_weight));
}

}  // namespace test_support
