#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <utility>

#include "opt/errors.hpp"

namespace opt {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Smooth convex term: value, gradient, smoothness constant L, strong-convexity
// constant mu (0 when merely convex). Oracles are immutable once built.
class SmoothOracle {
 public:
  virtual ~SmoothOracle() = default;
  virtual double value(const Vec& x) const = 0;
  virtual Vec gradient(const Vec& x) const = 0;
  virtual double smoothness() const = 0;
  virtual double strong_convexity() const { return 0.0; }
  virtual bool is_zero() const { return false; }
  // True only when value(x) >= 0 is guaranteed for every x.
  virtual bool nonnegative() const { return false; }
  // Exact Hessian-vector product where the function is quadratic; methods that
  // need an exact line search probe this and reject oracles without it.
  virtual bool hessian_apply(const Vec&, Vec&) const { return false; }
};

// Prox-friendly term: value (may return +inf), proximal map, strong convexity.
// prox(c, x) = argmin_y  c*g(y) + 0.5*|y - x|^2.
class ProxOracle {
 public:
  virtual ~ProxOracle() = default;
  virtual double value(const Vec& x) const = 0;
  virtual Vec prox(double c, const Vec& x) const = 0;
  virtual double strong_convexity() const { return 0.0; }
  virtual bool is_zero() const { return false; }
  // Largest t with g(x) >= t*|x|_2 for all x, or 0 when no such bound is
  // known. Lets optimality-gap certificates bound |x_star| by g(x_star)/t.
  virtual double norm_bound_scale() const { return 0.0; }
};

class ZeroSmooth final : public SmoothOracle {
 public:
  double value(const Vec&) const override { return 0.0; }
  Vec gradient(const Vec& x) const override { return Vec::Zero(x.size()); }
  double smoothness() const override { return 0.0; }
  bool is_zero() const override { return true; }
  bool nonnegative() const override { return true; }
  bool hessian_apply(const Vec& v, Vec& out) const override {
    out = Vec::Zero(v.size());
    return true;
  }
};

class ZeroProx final : public ProxOracle {
 public:
  double value(const Vec&) const override { return 0.0; }
  Vec prox(double, const Vec& x) const override { return x; }
  bool is_zero() const override { return true; }
};

// f(x) = 0.5*(x-s)' H (x-s) + offset, H symmetric PSD. The constructor takes
// the exact extreme eigenvalues so smoothness()/strong_convexity() are not
// estimates.
class QuadraticSmooth final : public SmoothOracle {
 public:
  QuadraticSmooth(Mat H, Vec shift, double mu, double L, double offset = 0.0)
      : H_(std::move(H)), shift_(std::move(shift)), mu_(mu), L_(L), offset_(offset) {
    if (L_ <= 0.0 || mu_ < 0.0 || mu_ > L_) fail(ErrorCode::invalid_argument, "bad spectrum bounds");
  }
  double value(const Vec& x) const override {
    const Vec d = x - shift_;
    return 0.5 * d.dot(H_ * d) + offset_;
  }
  Vec gradient(const Vec& x) const override { return H_ * (x - shift_); }
  double smoothness() const override { return L_; }
  double strong_convexity() const override { return mu_; }
  bool hessian_apply(const Vec& v, Vec& out) const override {
    out = H_ * v;
    return true;
  }
  bool nonnegative() const override { return offset_ >= 0.0; }
  const Vec& minimizer() const { return shift_; }

 private:
  Mat H_;
  Vec shift_;
  double mu_, L_, offset_;
};

inline double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

// g(x) = weight * |x|_1
class L1Prox final : public ProxOracle {
 public:
  explicit L1Prox(double weight) : weight_(weight) {
    if (weight_ < 0.0) fail(ErrorCode::invalid_argument, "l1 weight must be nonnegative");
  }
  double value(const Vec& x) const override { return weight_ * x.lpNorm<1>(); }
  Vec prox(double c, const Vec& x) const override {
    Vec out(x.size());
    const double t = c * weight_;
    for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = soft_threshold(x[i], t);
    return out;
  }
  double weight() const { return weight_; }
  // weight*|x|_1 >= weight*|x|_2
  double norm_bound_scale() const override { return weight_; }

 private:
  double weight_;
};

// g(x) = (mu/2)*|x - center|^2; prox is the closed-form shrink toward center.
class QuadraticProx final : public ProxOracle {
 public:
  QuadraticProx(double mu, Vec center) : mu_(mu), center_(std::move(center)) {
    if (mu_ <= 0.0) fail(ErrorCode::invalid_argument, "quadratic prox needs mu > 0");
  }
  double value(const Vec& x) const override { return 0.5 * mu_ * (x - center_).squaredNorm(); }
  Vec prox(double c, const Vec& x) const override { return (x + (c * mu_) * center_) / (1.0 + c * mu_); }
  double strong_convexity() const override { return mu_; }
  const Vec& minimizer() const { return center_; }

 private:
  double mu_;
  Vec center_;
};

// g(x) = (mu/2)*|x - center|^2 + weight*|x|_1. Closed-form prox: shrink the
// quadratic part first, then soft-threshold with the rescaled weight.
class QuadraticL1Prox final : public ProxOracle {
 public:
  QuadraticL1Prox(double mu, Vec center, double weight)
      : mu_(mu), center_(std::move(center)), weight_(weight) {
    if (mu_ <= 0.0 || weight_ < 0.0) fail(ErrorCode::invalid_argument, "bad quadratic+l1 parameters");
  }
  double value(const Vec& x) const override {
    return 0.5 * mu_ * (x - center_).squaredNorm() + weight_ * x.lpNorm<1>();
  }
  Vec prox(double c, const Vec& x) const override {
    const double denom = 1.0 + c * mu_;
    const double t = c * weight_ / denom;
    Vec out = (x + (c * mu_) * center_) / denom;
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = soft_threshold(out[i], t);
    return out;
  }
  double strong_convexity() const override { return mu_; }
  double norm_bound_scale() const override { return weight_; }
  const Vec& center() const { return center_; }
  double weight() const { return weight_; }

 private:
  double mu_;
  Vec center_;
  double weight_;
};

enum class Setup { smooth, proximal_point, prox_grad };

inline const char* setup_name(Setup s) {
  switch (s) {
    case Setup::smooth: return "smooth";
    case Setup::proximal_point: return "proximal_point";
    case Setup::prox_grad: return "prox_grad";
  }
  return "unknown";
}

struct Optimum {
  double F_star = 0.0;
  Vec x_star;
};

// Composite problem F = f + g. L defaults to f's smoothness; problems with
// f == 0 may override it so prox-grad reductions (1/lambda = L) are testable.
class CompositeProblem {
 public:
  CompositeProblem(std::shared_ptr<const SmoothOracle> f, std::shared_ptr<const ProxOracle> g,
                   double L_override = -1.0)
      : f_(std::move(f)), g_(std::move(g)) {
    if (!f_ || !g_) fail(ErrorCode::invalid_argument, "null oracle");
    L_ = L_override > 0.0 ? L_override : f_->smoothness();
  }

  const SmoothOracle& f() const { return *f_; }
  const ProxOracle& g() const { return *g_; }
  double smoothness() const { return L_; }

  Setup setup() const {
    if (g_->is_zero()) return Setup::smooth;
    if (f_->is_zero()) return Setup::proximal_point;
    return Setup::prox_grad;
  }

  double F(const Vec& x) const { return f_->value(x) + g_->value(x); }

  std::optional<Optimum> known_opt;

 private:
  std::shared_ptr<const SmoothOracle> f_;
  std::shared_ptr<const ProxOracle> g_;
  double L_;
};

}  // namespace opt
