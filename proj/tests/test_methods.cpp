#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <memory>

#include "helpers.hpp"
#include "opt/methods.hpp"
#include "opt/schedules.hpp"

using namespace opt;
using test_support::composite_problem;
using test_support::prox_point_problem;
using test_support::random_quadratic;
using test_support::random_vec;
using test_support::smooth_problem;

namespace {

double trace_x_dev(const RunTrace& a, const RunTrace& b) {
  REQUIRE(a.records.size() == b.records.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    const double scale = std::max(1.0, a.records[k].x.norm());
    worst = std::max(worst, (a.records[k].x - b.records[k].x).norm() / scale);
  }
  return worst;
}

RunTrace run_form(Family fam, Form form, const CompositeProblem& p, const Vec& x0, int K,
                  double lambda = 1.0) {
  MethodSpec s = MethodSpec::make(fam, form);
  s.lambda = lambda;
  return run(s, p, x0, K);
}

// A smooth oracle with no Hessian access, for the geometric-descent gate.
class QuarticSmooth final : public SmoothOracle {
 public:
  double value(const Vec& x) const override { return 0.25 * std::pow(x.squaredNorm(), 2) + 0.5 * x.squaredNorm(); }
  Vec gradient(const Vec& x) const override { return (x.squaredNorm() + 1.0) * x; }
  double smoothness() const override { return 4.0; }  // valid near the unit ball
  double strong_convexity() const override { return 1.0; }
};

}  // namespace

TEST_CASE("momentum and auxiliary forms produce the same iterates") {
  const int K = 12;

  SECTION("smooth families, merely convex") {
    auto p = smooth_problem(6, 0.0, 3.0, 101);
    const Vec x0 = random_vec(6, 7, 2.0);
    for (Family fam : {Family::fgm, Family::ogm, Family::ogm_g, Family::fgm_g, Family::g_fgm_g}) {
      auto m = run_form(fam, Form::momentum, p, x0, K);
      auto a = run_form(fam, Form::auxiliary, p, x0, K);
      INFO(family_name(fam));
      REQUIRE(trace_x_dev(m, a) <= 1e-12);
    }
  }

  SECTION("smooth families, strongly convex") {
    auto p = smooth_problem(6, 0.4, 4.0, 102);
    const Vec x0 = random_vec(6, 8, 2.0);
    for (Family fam :
         {Family::sc_fgm, Family::sc_ogm, Family::tmm, Family::item, Family::nonstationary_sc_fgm}) {
      auto m = run_form(fam, Form::momentum, p, x0, K);
      auto a = run_form(fam, Form::auxiliary, p, x0, K);
      INFO(family_name(fam));
      REQUIRE(trace_x_dev(m, a) <= 1e-12);
    }
  }

  SECTION("composite families") {
    auto p = composite_problem(6, 3.0, 0.3, 103);
    const Vec x0 = random_vec(6, 9, 2.0);
    for (Family fam : {Family::fista, Family::fista_g, Family::g_fista_g}) {
      auto m = run_form(fam, Form::momentum, p, x0, K);
      auto a = run_form(fam, Form::auxiliary, p, x0, K);
      INFO(family_name(fam));
      REQUIRE(trace_x_dev(m, a) <= 1e-12);
    }
  }

  SECTION("proximal-point families") {
    auto p = prox_point_problem(6, 0.5, 0.2, 104);
    const Vec x0 = random_vec(6, 10, 2.0);
    for (Family fam : {Family::guler1, Family::guler2, Family::guler_g, Family::g_guler_g,
                       Family::proximal_tmm, Family::proximal_item}) {
      auto m = run_form(fam, Form::momentum, p, x0, K, 0.8);
      auto a = run_form(fam, Form::auxiliary, p, x0, K, 0.8);
      INFO(family_name(fam));
      REQUIRE(trace_x_dev(m, a) <= 1e-12);
    }
  }

  SECTION("single-iteration horizon exercises the terminal coefficients") {
    auto p = smooth_problem(4, 0.0, 2.0, 105);
    const Vec x0 = random_vec(4, 11);
    for (Family fam : {Family::fgm, Family::ogm, Family::ogm_g, Family::fgm_g}) {
      auto m = run_form(fam, Form::momentum, p, x0, 1);
      auto a = run_form(fam, Form::auxiliary, p, x0, 1);
      INFO(family_name(fam));
      REQUIRE(trace_x_dev(m, a) <= 1e-14);
    }
  }
}

TEST_CASE("hand-evaluated single step of the gradient-norm composite method") {
  // f = x^2/2 (L=1), g = 0, x0 = 1: the first proximal-gradient point is 0 and
  // the momentum weight at k=0 is 1/(1+sqrt(3)).
  Mat H = Mat::Identity(1, 1);
  auto p = CompositeProblem(std::make_shared<QuadraticSmooth>(H, Vec::Zero(1), 1.0, 1.0),
                            std::make_shared<ZeroProx>());
  Vec x0(1);
  x0 << 1.0;
  auto tr = run(MethodSpec::make(Family::fista_g), p, x0, 1);
  REQUIRE(tr.records.size() == 2);
  REQUIRE(tr.records[0].adv[0] == Catch::Approx(0.0).margin(1e-15));
  REQUIRE(tr.records[1].x[0] == Catch::Approx(-0.36602540378443865).margin(1e-15));
}

TEST_CASE("ista is the plain proximal-gradient iteration") {
  auto p = composite_problem(5, 2.5, 0.4, 106);
  const Vec x0 = random_vec(5, 12, 1.5);
  auto tr = run(MethodSpec::make(Family::ista), p, x0, 8);
  for (int k = 0; k + 1 <= 8; ++k) {
    const auto& cur = tr.records[static_cast<std::size_t>(k)];
    const auto& nxt = tr.records[static_cast<std::size_t>(k + 1)];
    REQUIRE((nxt.x - cur.adv).norm() <= 1e-14);
  }
  REQUIRE_THROWS_AS(run(MethodSpec::make(Family::ista, Form::auxiliary), p, x0, 8), Error);
}

TEST_CASE("momentum switch-off reproduces the accelerated prefix and plain tail") {
  auto p = composite_problem(5, 2.0, 0.25, 107);
  const Vec x0 = random_vec(5, 13, 1.5);
  const int K = 9, m = 3;
  MethodSpec sw = MethodSpec::make(Family::fpgm_m);
  sw.switch_index = m;
  auto tr = run(sw, p, x0, K);
  auto fista = run(MethodSpec::make(Family::fista), p, x0, K);
  for (int k = 0; k <= m; ++k)
    REQUIRE((tr.records[static_cast<std::size_t>(k)].x - fista.records[static_cast<std::size_t>(k)].x)
                .norm() <= 1e-14);
  for (int k = m; k < K; ++k) {
    const auto& cur = tr.records[static_cast<std::size_t>(k)];
    const auto& nxt = tr.records[static_cast<std::size_t>(k + 1)];
    REQUIRE((nxt.x - cur.adv).norm() <= 1e-14);
  }

  MethodSpec all = MethodSpec::make(Family::fpgm_m);
  all.switch_index = K + 1;
  REQUIRE(trace_x_dev(run(all, p, x0, K), fista) <= 1e-15);
  MethodSpec none = MethodSpec::make(Family::fpgm_m);
  none.switch_index = 0;
  auto ista = run(MethodSpec::make(Family::ista), p, x0, K);
  REQUIRE(trace_x_dev(run(none, p, x0, K), ista) <= 1e-15);
}

TEST_CASE("composite gradient-norm method with g = 0 equals its smooth variant") {
  auto p = smooth_problem(6, 0.0, 3.5, 108);
  const Vec x0 = random_vec(6, 14, 2.0);
  auto a = run(MethodSpec::make(Family::fista_g), p, x0, 15);
  auto b = run(MethodSpec::make(Family::fgm_g), p, x0, 15);
  REQUIRE(trace_x_dev(a, b) == 0.0);  // identical code path and coefficients
}

TEST_CASE("generalized schedules reduce to their fixed instantiations") {
  SECTION("half-slack reference schedule") {
    auto p = composite_problem(6, 3.0, 0.3, 109);
    const Vec x0 = random_vec(6, 15, 2.0);
    auto fixed = run(MethodSpec::make(Family::fista_g), p, x0, 20);
    auto general = run(MethodSpec::make(Family::g_fista_g), p, x0, 20);
    REQUIRE(trace_x_dev(fixed, general) <= 1e-10);
  }
  SECTION("theta-instantiated one-slack schedule") {
    auto p = prox_point_problem(6, 0.5, 0.2, 110);
    const Vec x0 = random_vec(6, 16, 2.0);
    auto fixed = run_form(Family::guler_g, Form::momentum, p, x0, 20, 0.8);
    auto general = run_form(Family::g_guler_g, Form::momentum, p, x0, 20, 0.8);
    REQUIRE(trace_x_dev(fixed, general) <= 1e-10);
  }
  SECTION("non-half schedule is rejected where the analysis needs half") {
    auto p = composite_problem(6, 3.0, 0.3, 109);
    MethodSpec s = MethodSpec::make(Family::g_fista_g);
    s.schedule = std::make_shared<PhiTauSchedule>(PhiTauSchedule::from_backward_theta(20));
    REQUIRE_THROWS_AS(run(s, p, random_vec(6, 15), 20), Error);
  }
  SECTION("factor-one schedules are accepted where the analysis only needs one") {
    auto p = smooth_problem(6, 0.0, 3.0, 130);
    const Vec x0 = random_vec(6, 31, 2.0);
    MethodSpec s = MethodSpec::make(Family::g_fgm_g);
    s.schedule = std::make_shared<PhiTauSchedule>(PhiTauSchedule::from_backward_theta(15));
    auto m = run(s, p, x0, 15);
    MethodSpec sa = s;
    sa.form = Form::auxiliary;
    auto a = run(sa, p, x0, 15);
    REQUIRE(trace_x_dev(m, a) <= 1e-12);
    for (const auto& r : m.records) REQUIRE(std::isfinite(r.F));
  }
}

TEST_CASE("nonstationary momentum at mu = 0 reduces to the classical method") {
  auto p = smooth_problem(6, 0.0, 3.0, 111);
  const Vec x0 = random_vec(6, 17, 2.0);
  auto ns_m = run_form(Family::nonstationary_sc_fgm, Form::momentum, p, x0, 25);
  auto ns_a = run_form(Family::nonstationary_sc_fgm, Form::auxiliary, p, x0, 25);
  auto classical = run_form(Family::fgm, Form::momentum, p, x0, 25);
  REQUIRE(trace_x_dev(ns_m, classical) <= 1e-10);
  REQUIRE(trace_x_dev(ns_a, classical) <= 1e-10);
}

TEST_CASE("fixed point: starting at the minimizer keeps every iterate there") {
  auto f = random_quadratic(5, 0.0, 3.0, 112);
  auto p = CompositeProblem(f, std::make_shared<ZeroProx>());
  const Vec x0 = f->minimizer();
  for (Family fam : {Family::fgm, Family::ogm, Family::fista_g}) {
    auto tr = run(MethodSpec::make(fam), p, x0, 10);
    for (const auto& r : tr.records) {
      REQUIRE((r.x - x0).norm() <= 1e-12);
      REQUIRE(r.gmap_sq <= 1e-24);
    }
  }
}

TEST_CASE("extra correction term separates the two classical momentum methods") {
  auto p = smooth_problem(2, 0.0, 2.0, 113);
  const Vec x0 = random_vec(2, 18, 1.0);
  const int K = 5;
  auto fgm = run(MethodSpec::make(Family::fgm), p, x0, K);
  auto ogm = run(MethodSpec::make(Family::ogm), p, x0, K);
  // At k=0 both momentum terms collapse onto (x0+ - x0); the difference of the
  // two updates is exactly (theta_0/theta_1)(x0+ - x0) with theta_0 = 1.
  ThetaSchedule th(ThetaVariant::fgm_forward, K);
  const Vec expect = (1.0 / th.theta(1)) * (fgm.records[0].adv - x0);
  REQUIRE((ogm.records[1].x - fgm.records[1].x - expect).norm() <= 1e-14);
}

TEST_CASE("backward-schedule auxiliary runs end with z_K = x_K") {
  auto p = smooth_problem(6, 0.0, 3.0, 114);
  const Vec x0 = random_vec(6, 19, 2.0);
  for (Family fam : {Family::ogm_g, Family::fgm_g}) {
    auto tr = run_form(fam, Form::auxiliary, p, x0, 10);
    REQUIRE(tr.records[0].z.has_value());
    REQUIRE((*tr.records[0].z - x0).norm() == 0.0);
    const auto& last = tr.records.back();
    REQUIRE((*last.z - last.x).norm() <= 1e-12);
  }
}

TEST_CASE("composed runs concatenate phases sharing the handoff record") {
  auto p = composite_problem(6, 3.0, 0.3, 115);
  const Vec x0 = random_vec(6, 20, 2.0);
  const int K = 10;
  auto spec = MethodSpec::make_composed(MethodSpec::make(Family::fista),
                                        MethodSpec::make(Family::fista_g));
  auto tr = run(spec, p, x0, K);
  REQUIRE(tr.records.size() == 2 * static_cast<std::size_t>(K) + 1);
  REQUIRE(tr.horizon == 2 * K);
  REQUIRE(tr.phase_boundary.has_value());
  REQUIRE(*tr.phase_boundary == K);

  auto fista = run(MethodSpec::make(Family::fista), p, x0, K);
  for (int k = 0; k <= K; ++k)
    REQUIRE((tr.records[static_cast<std::size_t>(k)].x - fista.records[static_cast<std::size_t>(k)].x)
                .norm() == 0.0);

  auto tail = run(MethodSpec::make(Family::fista_g), p, fista.records.back().x, K);
  for (int k = 1; k <= K; ++k)
    REQUIRE((tr.records[static_cast<std::size_t>(K + k)].x - tail.records[static_cast<std::size_t>(k)].x)
                .norm() == 0.0);
}

TEST_CASE("strongly convex coefficient edge: kappa = 1 degenerates to gradient descent") {
  auto p = smooth_problem(4, 2.0, 2.0, 116);
  const Vec x0 = random_vec(4, 21, 1.0);
  auto tr = run(MethodSpec::make(Family::tmm), p, x0, 6);
  for (int k = 0; k < 6; ++k) {
    const auto& cur = tr.records[static_cast<std::size_t>(k)];
    const auto& nxt = tr.records[static_cast<std::size_t>(k + 1)];
    REQUIRE((nxt.x - cur.adv).norm() <= 1e-14);
  }
}

TEST_CASE("accumulation-sequence momentum matches its closed-form coefficients") {
  // The closed-form single-step weights, with the first factor of the
  // alpha numerator carrying a minus sign on its last term.
  auto alpha_closed = [](const ItemSchedule& s, double q, int k) {
    const double a0 = s.A(k), a1 = s.A(k + 1), a2 = s.A(k + 2);
    const double n1 = 2.0 * (1.0 + q) + q * (3.0 + q) * a0 - (1.0 - q) * (1.0 - q) * q * a1;
    return n1 * ((1.0 - q) * a2 - a1) * a0 /
           (2.0 * (1.0 - q) * (1.0 + q + q * a0) * ((1.0 - q) * a1 - a0) * a2);
  };
  auto beta_closed = [](const ItemSchedule& s, double q, int k) {
    const double a0 = s.A(k), a1 = s.A(k + 1), a2 = s.A(k + 2);
    return (q * a0 * a0 + 2.0 * (1.0 - q) * a1 + (1.0 - q) * q * a0 * a1) *
           ((1.0 - q) * a2 - a1) /
           (2.0 * (1.0 + q + q * a0) * ((1.0 - q) * a1 - a0) * a2);
  };

  SECTION("coefficients match the auxiliary-form conversion") {
    const double q = 0.3;
    ItemSchedule s(ItemVariant::proximal_item, 12, q);
    for (int k = 0; k < 10; ++k) {
      const double phk = 1.0 - s.gamma(k), phk1 = 1.0 - s.gamma(k + 1);
      const double zt = 1.0 - q * s.delta(k);
      const double a_conv = phk1 * zt * (1.0 - phk) / phk;
      const double b_conv = phk1 * ((1.0 / q - 1.0) * (1.0 - zt) * phk - zt) / phk;
      if (k >= 1)  // alpha's closed form has A_k in a factor; k=0 gives 0/0-free zero
        REQUIRE(alpha_closed(s, q, k) == Catch::Approx(a_conv).epsilon(1e-12));
      else
        REQUIRE(a_conv == Catch::Approx(0.0).margin(1e-15));
      REQUIRE(beta_closed(s, q, k) == Catch::Approx(b_conv).epsilon(1e-12));
    }
  }

  SECTION("a momentum run reproduces the closed-form update") {
    auto p = smooth_problem(5, 0.5, 5.0, 117);
    const double q = 0.5 / 5.0;
    const Vec x0 = random_vec(5, 22, 1.5);
    const int K = 8;
    ItemSchedule s(ItemVariant::item_smooth, K, 1.0 / q);
    auto tr = run(MethodSpec::make(Family::item), p, x0, K);
    for (int k = 1; k < K; ++k) {
      const Vec& adv = tr.records[static_cast<std::size_t>(k)].adv;
      const Vec& adv_prev = tr.records[static_cast<std::size_t>(k - 1)].adv;
      const Vec& xk = tr.records[static_cast<std::size_t>(k)].x;
      const Vec predict = adv + alpha_closed(s, q, k) * (adv - adv_prev) +
                          beta_closed(s, q, k) * (adv - xk);
      REQUIRE((tr.records[static_cast<std::size_t>(k + 1)].x - predict).norm() <= 1e-11);
    }
  }
}

TEST_CASE("accumulation-sequence coefficients approach the optimized method's") {
  const int K = 20;
  const double kappa = 1e12;
  ItemSchedule s(ItemVariant::item_smooth, K, kappa);
  ThetaSchedule th(ThetaVariant::fgm_forward, K);
  for (int k = 1; k < K; ++k) {
    const double t0 = th.theta(k - 1), t1 = th.theta(k);
    REQUIRE(s.gamma(k) == Catch::Approx(t0 * t0 / (t1 * t1)).epsilon(1e-4));
  }
  for (int k = 0; k < K; ++k)
    REQUIRE(s.delta(k) == Catch::Approx(2.0 * th.theta(k)).epsilon(1e-4));
}

TEST_CASE("geometric descent: init, one-step solve at kappa = 1, containment") {
  SECTION("radius seed and one-step convergence at kappa = 1") {
    Mat H = 2.0 * Mat::Identity(1, 1);
    auto p = CompositeProblem(std::make_shared<QuadraticSmooth>(H, Vec::Zero(1), 2.0, 2.0),
                              std::make_shared<ZeroProx>());
    Vec x0(1);
    x0 << 3.0;
    auto st = geometric_descent_init(p, x0);
    REQUIRE(st.radius_sq == Catch::Approx(0.0).margin(1e-15));
    auto st1 = geometric_descent_step(p, st);
    REQUIRE(st1.x[0] == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(st1.radius_sq == Catch::Approx(0.0).margin(1e-15));
  }

  SECTION("radius seed formula") {
    auto f = random_quadratic(4, 1.0, 10.0, 118);
    auto p = CompositeProblem(f, std::make_shared<ZeroProx>());
    const Vec x0 = random_vec(4, 23, 1.0);
    auto st = geometric_descent_init(p, x0);
    const double g2 = f->gradient(x0).squaredNorm();
    REQUIRE(st.radius_sq == Catch::Approx((1.0 - 0.1) * g2).epsilon(1e-12));
  }

  SECTION("ball containment of the minimizer") {
    for (double kappa : {2.0, 10.0, 100.0}) {
      auto f = random_quadratic(8, 1.0, kappa, 119);
      auto p = CompositeProblem(f, std::make_shared<ZeroProx>());
      auto st = geometric_descent_init(p, random_vec(8, 24, 1.0));
      for (int k = 0; k < 60; ++k) {
        const double dist_sq = (st.center - f->minimizer()).squaredNorm();
        REQUIRE(dist_sq <= st.radius_sq + 1e-9 * std::max(1.0, st.radius_sq));
        st = geometric_descent_step(p, st);
      }
      REQUIRE(p.F(st.x) - p.F(f->minimizer()) <=
              1e-6 * (p.F(random_vec(8, 24, 1.0)) - p.F(f->minimizer())));
    }
  }

  SECTION("trace carries the lagged centers so the z-column is collinear") {
    auto f = random_quadratic(5, 1.0, 10.0, 120);
    auto p = CompositeProblem(f, std::make_shared<ZeroProx>());
    auto tr = run(MethodSpec::make(Family::geometric_descent), p, random_vec(5, 25, 1.0), 12);
    REQUIRE(tr.records.size() == 13);
    REQUIRE((*tr.records[0].z - tr.records[0].x).norm() == 0.0);
    for (const auto& r : tr.records) REQUIRE(r.z.has_value());
  }

  SECTION("non-quadratic smooth part is rejected") {
    auto p = CompositeProblem(std::make_shared<QuarticSmooth>(), std::make_shared<ZeroProx>());
    try {
      run(MethodSpec::make(Family::geometric_descent), p, random_vec(3, 26, 0.5), 5);
      FAIL("expected unsupported_oracle");
    } catch (const Error& e) {
      REQUIRE(e.code() == ErrorCode::unsupported_oracle);
    }
  }
}

TEST_CASE("setup mismatches are rejected with the dedicated error code") {
  auto smooth = smooth_problem(4, 0.5, 2.0, 121);
  auto comp = composite_problem(4, 2.0, 0.3, 122);
  auto prox = prox_point_problem(4, 0.5, 0.2, 123);
  const Vec x0 = random_vec(4, 27, 1.0);

  auto expect_code = [&](const MethodSpec& s, const CompositeProblem& p, ErrorCode want) {
    try {
      run(s, p, x0, 5);
      FAIL("expected an error");
    } catch (const Error& e) {
      REQUIRE(e.code() == want);
    }
  };

  expect_code(MethodSpec::make(Family::fgm), comp, ErrorCode::setup_mismatch);
  expect_code(MethodSpec::make(Family::guler1), smooth, ErrorCode::setup_mismatch);
  expect_code(MethodSpec::make(Family::tmm), comp, ErrorCode::setup_mismatch);

  // Strong convexity required but absent.
  auto flat = smooth_problem(4, 0.0, 2.0, 124);
  expect_code(MethodSpec::make(Family::item), flat, ErrorCode::setup_mismatch);

  // Composite family on a proximal-point problem without a usable smoothness
  // constant.
  expect_code(MethodSpec::make(Family::fista), prox, ErrorCode::invalid_argument);
}

TEST_CASE("a mis-specified smoothness constant trips the divergence guard") {
  auto f = random_quadratic(4, 1.0, 5.0, 125);
  auto p = CompositeProblem(f, std::make_shared<ZeroProx>(), /*L_override=*/0.05);
  try {
    run(MethodSpec::make(Family::fgm), p, random_vec(4, 28, 1.0), 60);
    FAIL("expected divergence");
  } catch (const Error& e) {
    REQUIRE(e.code() == ErrorCode::divergence);
    REQUIRE(std::string(e.what()).find("k=") != std::string::npos);
  }
}

TEST_CASE("trace bookkeeping: sizes, forms, and the z column") {
  auto p = composite_problem(5, 2.0, 0.3, 126);
  const Vec x0 = random_vec(5, 29, 1.0);
  auto mom = run_form(Family::fista, Form::momentum, p, x0, 7);
  REQUIRE(mom.records.size() == 8);
  REQUIRE(mom.horizon == 7);
  REQUIRE(mom.setup == Setup::prox_grad);
  REQUIRE_FALSE(mom.records[3].z.has_value());
  REQUIRE(mom.wall_seconds >= 0.0);

  auto aux = run_form(Family::fista, Form::auxiliary, p, x0, 7);
  for (const auto& r : aux.records) REQUIRE(r.z.has_value());

  // F column is the objective at the advanced point; gmap is scaled by L.
  const auto& r2 = mom.records[2];
  REQUIRE(r2.F == Catch::Approx(p.F(r2.adv)).margin(1e-12));
  REQUIRE(r2.gmap_sq ==
          Catch::Approx(p.smoothness() * p.smoothness() * (r2.x - r2.adv).squaredNorm())
              .epsilon(1e-12));
}
