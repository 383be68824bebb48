#include <catch2/catch_amalgamated.hpp>

#include "opt/oracles.hpp"
#include "opt/rng.hpp"
#include "opt/steps.hpp"

using namespace opt;

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Vec vec1(double a) {
  Vec v(1);
  v << a;
  return v;
}

// Random strongly convex quadratic with exact spectrum endpoints [mu, L].
std::shared_ptr<QuadraticSmooth> random_quadratic(int n, double mu, double L, std::uint64_t seed) {
  Rng rng(seed);
  Mat G(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) G(i, j) = rng.normal();
  Eigen::HouseholderQR<Mat> qr(G);
  Mat Q = qr.householderQ();
  Vec eig(n);
  for (int i = 0; i < n; ++i) eig[i] = mu + (L - mu) * i / std::max(1, n - 1);
  Mat H = Q * eig.asDiagonal() * Q.transpose();
  H = 0.5 * (H + H.transpose());
  Vec shift(n);
  for (int i = 0; i < n; ++i) shift[i] = rng.normal();
  return std::make_shared<QuadraticSmooth>(H, shift, mu, L);
}

Vec random_vec(int n, Rng& rng) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

}  // namespace

TEST_CASE("rng is deterministic with pinned outputs") {
  Rng r(42);
  CHECK(r.next_u64() == 0xbdd732262feb6e95ULL);
  CHECK(r.next_u64() == 0x28efe333b266f103ULL);
  CHECK(r.next_u64() == 0x47526757130f9f52ULL);

  Rng u(42);
  CHECK(u.uniform() == Catch::Approx(0.7415648787718233).epsilon(1e-15));
  CHECK(u.uniform() == Catch::Approx(0.1599103928769201).epsilon(1e-15));

  Rng nrm(7);
  CHECK(nrm.normal() == Catch::Approx(-0.04174152338145233).epsilon(1e-14));
  CHECK(nrm.normal() == Catch::Approx(-0.18308020910924752).epsilon(1e-14));
  CHECK(nrm.normal() == Catch::Approx(0.8764814690994567).epsilon(1e-14));

  Rng sh(3);
  std::vector<int> v{0, 1, 2, 3, 4, 5};
  sh.shuffle(v);
  CHECK(v == std::vector<int>{5, 0, 2, 4, 1, 3});
}

TEST_CASE("rng normal moments are sane") {
  Rng r(123);
  const int N = 200000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < N; ++i) {
    const double x = r.normal();
    s1 += x;
    s2 += x * x;
  }
  CHECK(std::abs(s1 / N) < 0.01);
  CHECK(std::abs(s2 / N - 1.0) < 0.02);
}

TEST_CASE("grad_step on half squared norm") {
  Mat H = Mat::Identity(2, 2);
  auto f = std::make_shared<QuadraticSmooth>(H, Vec::Zero(2), 1.0, 1.0);

  Vec x = vec2(2.0, 0.0);
  CHECK((grad_step(*f, x, 1.0) - vec2(0.0, 0.0)).norm() == 0.0);
  CHECK((grad_step(*f, x, 0.5) - vec2(1.0, 0.0)).norm() == 0.0);
  CHECK_THROWS_AS(grad_step(*f, x, 0.0), Error);
}

TEST_CASE("prox_point_step matches scalar closed forms") {
  SECTION("l1 soft threshold") {
    L1Prox g(1.0);
    auto r = prox_point_step(g, 0.1, vec1(0.5));
    CHECK(r.x_circ[0] == Catch::Approx(0.4).margin(1e-15));
    CHECK(r.gmap[0] == Catch::Approx(1.0).margin(1e-12));
  }
  SECTION("zero prox is the identity") {
    ZeroProx g;
    auto r = prox_point_step(g, 0.7, vec2(1.5, -2.0));
    CHECK((r.x_circ - vec2(1.5, -2.0)).norm() == 0.0);
    CHECK(r.gmap.norm() == 0.0);
  }
  SECTION("quadratic prox shrinks toward the center") {
    QuadraticProx g(1.0, vec1(2.0));
    auto r = prox_point_step(g, 1.0, vec1(0.0));
    CHECK(r.x_circ[0] == Catch::Approx(1.0).margin(1e-15));
    CHECK(r.gmap[0] == Catch::Approx(-1.0).margin(1e-15));
  }
  SECTION("lambda must be positive") {
    ZeroProx g;
    CHECK_THROWS_AS(prox_point_step(g, -1.0, vec1(0.0)), Error);
  }
}

TEST_CASE("prox_grad_step reductions") {
  auto f = random_quadratic(5, 0.5, 4.0, 11);
  Rng rng(99);
  Vec x = random_vec(5, rng);

  SECTION("g == 0 gives the short gradient step") {
    CompositeProblem p(f, std::make_shared<ZeroProx>());
    auto r = prox_grad_step(p, x);
    Vec expect = grad_step(*f, x, 1.0 / f->smoothness());
    CHECK((r.x_oplus - expect).norm() < 1e-14);
    CHECK((r.gmap - f->smoothness() * (x - expect)).norm() < 1e-12);
  }
  SECTION("f == 0 with L = 1/lambda gives the prox-point step") {
    const double lambda = 0.35;
    auto g = std::make_shared<L1Prox>(0.8);
    CompositeProblem p(std::make_shared<ZeroSmooth>(), g, 1.0 / lambda);
    auto r = prox_grad_step(p, x);
    auto s = prox_point_step(*g, lambda, x);
    CHECK((r.x_oplus - s.x_circ).norm() < 1e-14);
    CHECK((r.gmap - s.gmap).norm() < 1e-12);
  }
}

TEST_CASE("composite_subgradient_witness") {
  SECTION("g == 0 reduces to the gradient at the stepped point") {
    auto f = random_quadratic(4, 1.0, 6.0, 21);
    CompositeProblem p(f, std::make_shared<ZeroProx>());
    Rng rng(5);
    Vec x = random_vec(4, rng);
    Vec v = composite_subgradient_witness(p, x);
    Vec xp = grad_step(*f, x, 1.0 / f->smoothness());
    CHECK((v - f->gradient(xp)).norm() < 1e-12);
  }
  SECTION("vanishes at a fixed point of the prox-grad map") {
    // Minimize 0.5|x|^2 + w|x|_1: minimizer x* = 0, and prox-grad fixes 0.
    Mat H = Mat::Identity(3, 3);
    auto f = std::make_shared<QuadraticSmooth>(H, Vec::Zero(3), 1.0, 1.0);
    CompositeProblem p(f, std::make_shared<L1Prox>(0.3));
    Vec v = composite_subgradient_witness(p, Vec::Zero(3));
    CHECK(v.norm() < 1e-15);
  }
  SECTION("norm bounded by twice the gradient mapping on random points") {
    auto f = random_quadratic(8, 0.2, 9.0, 31);
    CompositeProblem p(f, std::make_shared<L1Prox>(0.5));
    Rng rng(77);
    for (int t = 0; t < 200; ++t) {
      Vec x = 3.0 * random_vec(8, rng);
      Vec v = composite_subgradient_witness(p, x);
      auto r = prox_grad_step(p, x);
      CHECK(v.norm() <= 2.0 * r.gmap.norm() + 1e-12);
    }
  }
}

TEST_CASE("smoothness and strong convexity inequalities hold on samples") {
  auto f = random_quadratic(6, 0.8, 5.0, 41);
  const double L = f->smoothness();
  Rng rng(4242);
  const double tol = 1e-9;

  for (int t = 0; t < 500; ++t) {
    Vec x = 2.0 * random_vec(6, rng);
    Vec y = 2.0 * random_vec(6, rng);
    const double scale = std::max({1.0, std::abs(f->value(x)), x.squaredNorm()});

    // descent lemma
    CHECK(f->value(y) <= f->value(x) + f->gradient(x).dot(y - x) + 0.5 * L * (x - y).squaredNorm() +
                             tol * scale);
    // cocoercivity
    CHECK(f->value(x) - f->value(y) + f->gradient(x).dot(y - x) +
              (f->gradient(x) - f->gradient(y)).squaredNorm() / (2.0 * L) <=
          tol * scale);
    // gradient Lipschitz
    CHECK((f->gradient(x) - f->gradient(y)).norm() <= L * (x - y).norm() + tol * scale);
  }
}

TEST_CASE("sufficient decrease and prox-grad cocoercivity") {
  auto f = random_quadratic(6, 0.3, 7.0, 51);
  CompositeProblem p(f, std::make_shared<L1Prox>(0.4));
  const double L = p.smoothness();
  Rng rng(5151);
  const double tol = 1e-9;

  for (int t = 0; t < 500; ++t) {
    Vec x = 2.0 * random_vec(6, rng);
    Vec y = 2.0 * random_vec(6, rng);
    const double scale = std::max({1.0, std::abs(p.F(x)), x.squaredNorm()});

    auto rx = prox_grad_step(p, x);
    CHECK(rx.gmap.squaredNorm() / (2.0 * L) <= p.F(x) - p.F(rx.x_oplus) + tol * scale);

    auto ry = prox_grad_step(p, y);
    CHECK(ry.gmap.squaredNorm() / (2.0 * L) - (y - x).dot(ry.gmap) <=
          p.F(x) - p.F(ry.x_oplus) + tol * scale);
  }
}

TEST_CASE("sufficient decrease detects an understated L") {
  // True curvature 7, declared smoothness 1.75: the overlong step must break
  // sufficient decrease somewhere.
  CompositeProblem p(
      std::make_shared<QuadraticSmooth>(Mat(Mat::Identity(6, 6) * 7.0), Vec::Zero(6), 1.75, 1.75),
      std::make_shared<ZeroProx>());
  Rng rng(8);
  bool violated = false;
  for (int t = 0; t < 100 && !violated; ++t) {
    Vec x = 2.0 * random_vec(6, rng);
    auto r = prox_grad_step(p, x);
    const double scale = std::max({1.0, std::abs(p.F(x)), x.squaredNorm()});
    if (r.gmap.squaredNorm() / (2.0 * p.smoothness()) > p.F(x) - p.F(r.x_oplus) + 1e-9 * scale)
      violated = true;
  }
  CHECK(violated);
}

TEST_CASE("prox oracles are firmly nonexpansive on samples") {
  Rng rng(71);
  auto check_firm = [&](const ProxOracle& g, int n, double c) {
    for (int t = 0; t < 300; ++t) {
      Vec x = 3.0 * random_vec(n, rng);
      Vec y = 3.0 * random_vec(n, rng);
      Vec px = g.prox(c, x);
      Vec py = g.prox(c, y);
      CHECK((px - py).squaredNorm() <= (px - py).dot(x - y) + 1e-12);
    }
  };
  check_firm(L1Prox(0.7), 5, 0.4);
  check_firm(QuadraticProx(2.0, Vec::Ones(5)), 5, 1.3);
  Rng cr(72);
  check_firm(QuadraticL1Prox(1.5, random_vec(5, cr), 0.6), 5, 0.9);
}

TEST_CASE("quadratic plus l1 prox matches scalar minimization") {
  // 1-D: prox_c(v) minimizes c*(mu/2)(y-a)^2 + c*w|y| + 0.5(y-v)^2.
  const double mu = 1.5, a = 0.8, w = 0.6, c = 0.9;
  QuadraticL1Prox g(mu, vec1(a), w);
  auto objective = [&](double y, double v) {
    return c * (0.5 * mu * (y - a) * (y - a) + w * std::abs(y)) + 0.5 * (y - v) * (y - v);
  };
  for (double v : {-2.0, -0.3, 0.0, 0.4, 1.7}) {
    const double y = g.prox(c, vec1(v))[0];
    const double fy = objective(y, v);
    for (double d : {-1e-4, 1e-4, -1e-2, 1e-2, -0.5, 0.5})
      CHECK(fy <= objective(y + d, v) + 1e-12);
  }
}

TEST_CASE("prox fixed point at the minimizer") {
  QuadraticProx g(2.0, vec2(1.0, -3.0));
  Vec m = vec2(1.0, -3.0);
  CHECK((g.prox(0.7, m) - m).norm() < 1e-15);

  L1Prox l1(0.5);
  CHECK(l1.prox(0.3, Vec::Zero(4)).norm() == 0.0);
}

TEST_CASE("setup classification is total") {
  auto f = random_quadratic(3, 1.0, 2.0, 81);
  CHECK(CompositeProblem(f, std::make_shared<ZeroProx>()).setup() == Setup::smooth);
  CHECK(CompositeProblem(std::make_shared<ZeroSmooth>(), std::make_shared<L1Prox>(1.0), 1.0).setup() ==
        Setup::proximal_point);
  CHECK(CompositeProblem(f, std::make_shared<L1Prox>(1.0)).setup() == Setup::prox_grad);
}
