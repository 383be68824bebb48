#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "opt/errors.hpp"
#include "opt/methods.hpp"
#include "opt/oracles.hpp"
#include "opt/rng.hpp"

// Instance generators for the benchmarks: sparse least squares with an l1
// penalty, its symmetric nuclear-norm cousin, and synthetic quadratic test
// beds with known optima. Generators are pure functions of (config, seed).

namespace opt {

enum class InstanceKind {
  lasso,
  nuclear_sym,
  quadratic_smooth,
  strongly_convex_quadratic,
  prox_only_quadratic_l1,
};

inline const char* instance_kind_name(InstanceKind k) {
  switch (k) {
    case InstanceKind::lasso: return "lasso";
    case InstanceKind::nuclear_sym: return "nuclear_sym";
    case InstanceKind::quadratic_smooth: return "quadratic_smooth";
    case InstanceKind::strongly_convex_quadratic: return "strongly_convex_quadratic";
    case InstanceKind::prox_only_quadratic_l1: return "prox_only_quadratic_l1";
  }
  return "unknown";
}

inline InstanceKind instance_kind_from_name(const std::string& s) {
  for (InstanceKind k : {InstanceKind::lasso, InstanceKind::nuclear_sym, InstanceKind::quadratic_smooth,
                         InstanceKind::strongly_convex_quadratic, InstanceKind::prox_only_quadratic_l1}) {
    if (s == instance_kind_name(k)) return k;
  }
  fail(ErrorCode::invalid_argument, "unknown instance kind: " + s);
}

struct InstanceConfig {
  InstanceKind kind = InstanceKind::lasso;
  int m = 60;        // rows of the data matrix
  int n = 100;       // signal dimension (matrix side for nuclear_sym)
  int sparsity = 20; // nonzeros planted in the true signal
  double lambda = 0.1;
  std::uint64_t seed = 1;
  double mu = 0.0;    // strong-convexity weight where the kind uses one
  double kappa = 10.0;  // condition number; doubles as L when mu = 0
  // The generator plants the top three singular values at sqrt(L_declared),
  // so sigma_max(A)^2 == L_declared by construction.
  double L_declared = 324.0;
  // Use L_declared directly as the smoothness constant instead of the value
  // recomputed from the generated matrix. The recomputed constant is the
  // correct one for f(x) = |Ax-b|^2 (twice the squared top singular value);
  // this switch reproduces runs that treated L_declared itself as L.
  bool use_declared_L = false;
  // Plain half-vectorization without the sqrt(2) off-diagonal scaling. The
  // scaled embedding keeps half-vector Euclidean geometry equal to matrix
  // Frobenius geometry, which is what makes the eigenvalue prox exact.
  bool unscaled_half_vec = false;

  static InstanceConfig defaults(InstanceKind k) {
    InstanceConfig c;
    c.kind = k;
    switch (k) {
      case InstanceKind::lasso:
        break;  // (m, n, sparsity, lambda) = (60, 100, 20, 0.1), L_declared 324
      case InstanceKind::nuclear_sym:
        c.m = 60;
        c.n = 20;
        c.sparsity = 20;
        c.L_declared = 400.0;
        break;
      case InstanceKind::quadratic_smooth:
        c.n = 50;
        c.mu = 0.0;
        c.kappa = 10.0;
        break;
      case InstanceKind::strongly_convex_quadratic:
        c.n = 10;
        c.mu = 1.0;
        c.kappa = 10.0;
        break;
      case InstanceKind::prox_only_quadratic_l1:
        c.n = 20;
        c.mu = 1.0;
        c.lambda = 0.1;
        break;
    }
    return c;
  }
};

// ---------------------------------------------------------------------------
// Symmetric half-vectorization. Order: columns j = 0..n-1, rows i = 0..j.
// With scaling, off-diagonal entries carry sqrt(2) so that <u,v> in the
// half-vector space equals the Frobenius inner product of the matrices.

inline int half_vec_dim(int n) { return n * (n + 1) / 2; }

inline Vec sym_to_half(const Mat& X, bool scaled = true) {
  const int n = static_cast<int>(X.rows());
  if (X.cols() != n) fail(ErrorCode::invalid_argument, "half-vectorization needs a square matrix");
  const double r2 = std::sqrt(2.0);
  Vec v(half_vec_dim(n));
  int idx = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= j; ++i) v[idx++] = (i == j || !scaled) ? X(i, j) : r2 * X(i, j);
  return v;
}

inline Mat half_to_sym(const Vec& v, int n, bool scaled = true) {
  if (v.size() != half_vec_dim(n)) fail(ErrorCode::invalid_argument, "half-vector has the wrong length");
  const double inv_r2 = 1.0 / std::sqrt(2.0);
  Mat X(n, n);
  int idx = 0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i <= j; ++i) {
      const double t = (i == j || !scaled) ? v[idx] : inv_r2 * v[idx];
      X(i, j) = t;
      X(j, i) = t;
      ++idx;
    }
  }
  return X;
}

// g(x) = weight * (sum of absolute eigenvalues of the symmetrized matrix).
// Prox via eigendecomposition with eigenvalue soft-thresholding; exact in the
// scaled embedding, where half-vector distance equals Frobenius distance.
class NuclearProx final : public ProxOracle {
 public:
  NuclearProx(int n, double weight, bool scaled = true) : n_(n), weight_(weight), scaled_(scaled) {
    if (n_ < 1 || weight_ < 0.0) fail(ErrorCode::invalid_argument, "bad nuclear-norm parameters");
  }

  double value(const Vec& x) const override {
    return weight_ * eigDecomp(half_to_sym(x, n_, scaled_)).eigenvalues().cwiseAbs().sum();
  }

  Vec prox(double c, const Vec& x) const override {
    const auto es = eigDecomp(half_to_sym(x, n_, scaled_));
    Vec lam = es.eigenvalues();
    const double t = c * weight_;
    for (Eigen::Index i = 0; i < lam.size(); ++i) lam[i] = soft_threshold(lam[i], t);
    const Mat X = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
    return sym_to_half(X, scaled_);
  }

  // sum|eig| >= |X|_F >= |x|_2 in both embeddings
  double norm_bound_scale() const override { return weight_; }
  int side() const { return n_; }
  double weight() const { return weight_; }
  bool scaled() const { return scaled_; }

 private:
  Eigen::SelfAdjointEigenSolver<Mat> eigDecomp(const Mat& X) const {
    Eigen::SelfAdjointEigenSolver<Mat> es(X);
    if (es.info() != Eigen::Success) fail(ErrorCode::oracle_failure, "eigendecomposition failed");
    return es;
  }

  int n_;
  double weight_;
  bool scaled_;
};

// f(x) = |Ax - b|^2 (no half factor): gradient 2 A^T (Ax - b), curvature
// 2 A^T A, so L = 2 sigma_max(A)^2.
class LeastSquaresSmooth final : public SmoothOracle {
 public:
  LeastSquaresSmooth(Mat A, Vec b) : A_(std::move(A)), b_(std::move(b)) {
    if (A_.rows() != b_.size() || A_.rows() < 1) fail(ErrorCode::invalid_argument, "shape mismatch");
    // Spectrum of the smaller gram matrix; both sides share nonzero eigenvalues.
    const bool tall = A_.rows() >= A_.cols();
    const Mat gram = tall ? Mat(A_.transpose() * A_) : Mat(A_ * A_.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(gram);
    if (es.info() != Eigen::Success) fail(ErrorCode::oracle_failure, "gram eigendecomposition failed");
    const double lam_max = es.eigenvalues().maxCoeff();
    const double lam_min = es.eigenvalues().minCoeff();
    L_ = 2.0 * lam_max;
    mu_ = (tall && lam_min > 1e-12 * lam_max) ? 2.0 * lam_min : 0.0;
  }

  double value(const Vec& x) const override { return (A_ * x - b_).squaredNorm(); }
  Vec gradient(const Vec& x) const override { return 2.0 * (A_.transpose() * (A_ * x - b_)); }
  double smoothness() const override { return L_; }
  double strong_convexity() const override { return mu_; }
  bool nonnegative() const override { return true; }
  bool hessian_apply(const Vec& v, Vec& out) const override {
    out = 2.0 * (A_.transpose() * (A_ * v));
    return true;
  }
  const Mat& matrix() const { return A_; }
  const Vec& rhs() const { return b_; }

 private:
  Mat A_;
  Vec b_;
  double L_ = 0.0, mu_ = 0.0;
};

// ---------------------------------------------------------------------------
// Generators

struct GeneratedInstance {
  CompositeProblem problem;
  InstanceConfig config;
  Mat A;       // least-squares kinds; empty otherwise
  Vec b;       // ditto
  Vec x_true;  // planted signal (half-vector coordinates for nuclear_sym)
};

namespace detail {

// Orthonormal factor of a seeded Gaussian matrix, sign-fixed so the result is
// a deterministic function of the draw.
inline Mat orthonormal_factor(Rng& rng, int n) {
  Mat G(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) G(i, j) = rng.normal();
  Eigen::HouseholderQR<Mat> qr(G);
  Mat Q = qr.householderQ() * Mat::Identity(n, n);
  for (int j = 0; j < n; ++j)
    if (qr.matrixQR()(j, j) < 0.0) Q.col(j) = -Q.col(j);
  return Q;
}

inline Vec planted_signal(Rng& rng, int dim, int sparsity) {
  std::vector<double> entries(static_cast<std::size_t>(dim), 0.0);
  for (int i = 0; i < sparsity; ++i) entries[static_cast<std::size_t>(i)] = rng.normal();
  rng.shuffle(entries);
  Vec x(dim);
  for (int i = 0; i < dim; ++i) x[i] = entries[static_cast<std::size_t>(i)];
  return x;
}

// A = U Sigma V^T with |Gaussian| singular values, the top three planted at
// sqrt(top_sq) so sigma_max is known exactly.
inline Mat planted_matrix(Rng& rng, int m, int n, double top_sq) {
  const Mat U = orthonormal_factor(rng, m);
  const Mat V = orthonormal_factor(rng, n);
  Vec sig(m);
  for (int i = 0; i < m; ++i) sig[i] = std::abs(rng.normal());
  for (int i = m - 3; i < m; ++i) sig[i] = std::sqrt(top_sq);
  return U * sig.asDiagonal() * V.leftCols(m).transpose();
}

inline GeneratedInstance least_squares_instance(const InstanceConfig& cfg, int ambient,
                                                std::shared_ptr<ProxOracle> g) {
  if (cfg.sparsity < 0 || cfg.sparsity > ambient)
    fail(ErrorCode::invalid_argument, "sparsity exceeds the signal dimension");
  if (cfg.m < 3 || cfg.m > ambient)
    fail(ErrorCode::invalid_argument, "need 3 <= m <= signal dimension");
  if (cfg.lambda < 0.0 || cfg.L_declared <= 0.0)
    fail(ErrorCode::invalid_argument, "penalty and planted smoothness must be positive");

  Rng rng(cfg.seed);
  const Vec x_true = planted_signal(rng, ambient, cfg.sparsity);
  const Mat A = planted_matrix(rng, cfg.m, ambient, cfg.L_declared);
  Vec noise(cfg.m);
  for (int i = 0; i < cfg.m; ++i) noise[i] = rng.normal();
  const Vec b = A * x_true + 0.01 * noise;

  auto f = std::make_shared<LeastSquaresSmooth>(A, b);
  CompositeProblem p = cfg.use_declared_L ? CompositeProblem(f, std::move(g), cfg.L_declared)
                                          : CompositeProblem(f, std::move(g));
  return GeneratedInstance{std::move(p), cfg, A, b, x_true};
}

}  // namespace detail

inline GeneratedInstance gen_lasso(const InstanceConfig& cfg) {
  return detail::least_squares_instance(cfg, cfg.n, std::make_shared<L1Prox>(cfg.lambda));
}

inline GeneratedInstance gen_nuclear_sym(const InstanceConfig& cfg) {
  return detail::least_squares_instance(
      cfg, half_vec_dim(cfg.n),
      std::make_shared<NuclearProx>(cfg.n, cfg.lambda, !cfg.unscaled_half_vec));
}

// f(x) = 0.5 x' H x with spectrum exactly [1, kappa] (endpoints are
// eigenvalues), minimizer 0 recorded on the problem.
inline GeneratedInstance make_strongly_convex_quadratic(int n, double kappa, std::uint64_t seed) {
  if (n < 2 || kappa < 1.0) fail(ErrorCode::invalid_argument, "need n >= 2 and kappa >= 1");
  Rng rng(seed);
  const Mat Q = detail::orthonormal_factor(rng, n);
  const Vec evals = Vec::LinSpaced(n, 1.0, kappa);
  Mat H = Q * evals.asDiagonal() * Q.transpose();
  H = 0.5 * (H + H.transpose()).eval();
  auto f = std::make_shared<QuadraticSmooth>(H, Vec::Zero(n), 1.0, kappa);
  CompositeProblem p(f, std::make_shared<ZeroProx>());
  p.known_opt = Optimum{0.0, Vec::Zero(n)};
  InstanceConfig cfg = InstanceConfig::defaults(InstanceKind::strongly_convex_quadratic);
  cfg.n = n;
  cfg.kappa = kappa;
  cfg.seed = seed;
  return GeneratedInstance{std::move(p), cfg, Mat(), Vec(), Vec::Zero(n)};
}

// Merely convex quadratic with a known minimizer (the smallest eigenvalue is
// mu, 0 by default) and f_star = 0.
inline GeneratedInstance make_smooth_quadratic(int n, double mu, double L, std::uint64_t seed) {
  if (n < 2 || L <= 0.0 || mu < 0.0 || mu > L) fail(ErrorCode::invalid_argument, "bad spectrum");
  Rng rng(seed);
  const Mat Q = detail::orthonormal_factor(rng, n);
  const Vec evals = Vec::LinSpaced(n, mu, L);
  Mat H = Q * evals.asDiagonal() * Q.transpose();
  H = 0.5 * (H + H.transpose()).eval();
  Vec shift(n);
  for (int i = 0; i < n; ++i) shift[i] = rng.normal();
  auto f = std::make_shared<QuadraticSmooth>(H, shift, mu, L);
  CompositeProblem p(f, std::make_shared<ZeroProx>());
  p.known_opt = Optimum{0.0, shift};
  InstanceConfig cfg = InstanceConfig::defaults(InstanceKind::quadratic_smooth);
  cfg.n = n;
  cfg.mu = mu;
  cfg.kappa = L;
  cfg.seed = seed;
  return GeneratedInstance{std::move(p), cfg, Mat(), Vec(), shift};
}

// f = 0 with g(x) = (mu/2)|x - c|^2 + lambda|x|_1; the minimizer is the
// entrywise soft-threshold of c at lambda/mu.
inline GeneratedInstance make_prox_only_quadratic_l1(int n, double mu, double lambda,
                                                     std::uint64_t seed) {
  if (n < 1 || mu <= 0.0 || lambda < 0.0) fail(ErrorCode::invalid_argument, "bad parameters");
  Rng rng(seed);
  Vec center(n);
  for (int i = 0; i < n; ++i) center[i] = 2.0 * rng.normal();
  auto g = std::make_shared<QuadraticL1Prox>(mu, center, lambda);
  Vec x_star(n);
  for (int i = 0; i < n; ++i) x_star[i] = soft_threshold(center[i], lambda / mu);
  CompositeProblem p(std::make_shared<ZeroSmooth>(), g);
  p.known_opt = Optimum{g->value(x_star), x_star};
  InstanceConfig cfg = InstanceConfig::defaults(InstanceKind::prox_only_quadratic_l1);
  cfg.n = n;
  cfg.mu = mu;
  cfg.lambda = lambda;
  cfg.seed = seed;
  return GeneratedInstance{std::move(p), cfg, Mat(), Vec(), x_star};
}

inline GeneratedInstance generate(const InstanceConfig& cfg) {
  switch (cfg.kind) {
    case InstanceKind::lasso: return gen_lasso(cfg);
    case InstanceKind::nuclear_sym: return gen_nuclear_sym(cfg);
    case InstanceKind::quadratic_smooth:
      return make_smooth_quadratic(cfg.n, cfg.mu, cfg.kappa, cfg.seed);
    case InstanceKind::strongly_convex_quadratic:
      return make_strongly_convex_quadratic(cfg.n, cfg.kappa, cfg.seed);
    case InstanceKind::prox_only_quadratic_l1:
      return make_prox_only_quadratic_l1(cfg.n, cfg.mu, cfg.lambda, cfg.seed);
  }
  fail(ErrorCode::invalid_argument, "unknown instance kind");
}

// ---------------------------------------------------------------------------
// Reference-optimum estimation

struct FstarEstimate {
  double F_star_hat = 0.0;  // objective at the best advanced point; never below the true minimum
  double certified_gap = 0.0;  // sound bound on F_star_hat - F_star
  Vec x_hat;                   // the point achieving F_star_hat
};

namespace detail {

// 0.5 * v' H^+ v via conjugate gradients on the oracle's Hessian product,
// padded by the residual cross term. The system is consistent when v is a
// gradient of the quadratic; near machine convergence v also carries rounding
// noise outside range(H), so acceptance only asks the residual to drop to a
// modest fraction of |v| instead of all the way down.
inline bool half_pinv_quadratic_form(const SmoothOracle& f, const Vec& v, double& out) {
  const double vnorm = v.norm();
  if (vnorm == 0.0) {
    out = 0.0;
    return true;
  }
  Vec y = Vec::Zero(v.size());
  Vec r = v, p = v, hp(v.size());
  double rs = r.squaredNorm();
  const double target = 1e-12 * vnorm;
  const int max_iter = static_cast<int>(8 * v.size()) + 20;
  for (int it = 0; it < max_iter && std::sqrt(rs) > target; ++it) {
    if (!f.hessian_apply(p, hp)) return false;
    const double php = p.dot(hp);
    if (php <= 0.0) break;  // numerically in the null space
    const double alpha = rs / php;
    y += alpha * p;
    r -= alpha * hp;
    const double rs_next = r.squaredNorm();
    p = r + (rs_next / rs) * p;
    rs = rs_next;
  }
  const double rnorm = std::sqrt(rs);
  if (rnorm > 1e-3 * vnorm) return false;
  // 0.5 v'H^+v = 0.5 y'Hy + y'r + 0.5 r'H^+r; the pad covers the cross term,
  // the last term is rounding dust once rnorm <= 1e-3 |v|.
  out = std::max(0.0, 0.5 * v.dot(y)) + rnorm * y.norm();
  return std::isfinite(out);
}

}  // namespace detail

// Runs the standard accelerated method for the problem's setup at the given
// budget and returns the best objective seen plus a certified optimality gap.
// The gap route depends on structure: exact distance when the optimum is
// recorded, |v|^2/(2 mu) under strong convexity, a Hessian solve for pure
// quadratics, and a norm-coercivity radius when g dominates a multiple of
// |x|_2. x0 fixes the dimension; the oracle interface cannot supply it.
inline FstarEstimate estimate_Fstar(const CompositeProblem& p, int budget, const Vec& x0) {
  if (budget < 1000) fail(ErrorCode::invalid_argument, "estimation budget must be at least 1000");

  const Family fam = p.setup() == Setup::proximal_point ? Family::guler1 : Family::fista;
  MethodSpec spec = MethodSpec::make(fam);
  MethodEngine eng(spec, p, budget);
  MethodState st = eng.initial_state(x0);
  const double gmap0_norm = st.gmap.norm();

  double best_F = p.F(st.adv);
  Vec best_x = st.x, best_adv = st.adv, best_gmap = st.gmap;
  for (int k = 0; k < budget; ++k) {
    eng.step(st, k);
    const double Fk = p.F(st.adv);
    if (Fk < best_F) {
      best_F = Fk;
      best_x = st.x;
      best_adv = st.adv;
      best_gmap = st.gmap;
    }
  }

  // Subgradient witness at the best advanced point.
  Vec v;
  switch (p.setup()) {
    case Setup::smooth: v = p.f().gradient(best_adv); break;
    case Setup::proximal_point: v = best_gmap; break;
    case Setup::prox_grad:
      v = best_gmap - p.f().gradient(best_x) + p.f().gradient(best_adv);
      break;
  }
  const double vnorm = v.norm();

  double gap = -1.0;
  const double mu_total = p.f().strong_convexity() + p.g().strong_convexity();
  if (p.known_opt.has_value() && p.known_opt->x_star.size() == best_adv.size()) {
    gap = vnorm * (best_adv - p.known_opt->x_star).norm();
  } else if (mu_total > 0.0) {
    gap = vnorm * vnorm / (2.0 * mu_total);
  } else if (p.g().is_zero()) {
    // The floor absorbs objective-evaluation rounding at machine convergence;
    // below it, double precision cannot certify anything about F either way.
    const double floor = 1e-12 * std::max(1.0, std::abs(best_F));
    double q = 0.0;
    if (detail::half_pinv_quadratic_form(p.f(), v, q)) {
      gap = q * (1.0 + 1e-6) + floor;
    } else if (vnorm <= 1e-12 * std::max(1.0, gmap0_norm)) {
      // The gradient collapsed to relative machine noise and is no longer a
      // usable right-hand side; the run is converged to working precision.
      gap = floor;
    }
  }
  if (gap < 0.0 && p.f().nonnegative() && p.g().norm_bound_scale() > 0.0 && best_F >= 0.0) {
    // F(x_star) <= best_F and g >= t|.|_2 bound the optimum's radius.
    gap = vnorm * (best_adv.norm() + best_F / p.g().norm_bound_scale());
  }
  if (gap < 0.0)
    fail(ErrorCode::unsupported_form, "no certified optimality gap for this problem structure");

  return FstarEstimate{best_F, gap, best_adv};
}

}  // namespace opt
