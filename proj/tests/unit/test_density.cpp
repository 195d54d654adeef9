#include <doctest.h>

#include <boost/math/quadrature/ooura_fourier_integrals.hpp>

#include <cmath>
#include <memory>
#include <numbers>
#include <random>

#include "levyheat/density.hpp"
#include "levyheat/errors.hpp"

using namespace levyheat;
using std::numbers::pi;

namespace {

Vec v1(double a) {
  Vec v(1);
  v << a;
  return v;
}
Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

LevyModel tempered_1d(double beta = 1.0) {
  ExpDamp damp;
  damp.beta = beta;
  return LevyModel("tempered", 1, GaussianPart{0.0, Mat::Zero(1, 1), 1.0}, PolyScale::power(1.0), damp, 1.0,
                   1.0, pi, 1.0 / pi, Vec(), ClosedForm{});
}

LevyModel stable_model(int dim, double alpha) {
  const double norm = 1.0 / stable_constant(dim, alpha);
  return LevyModel("stable", dim, GaussianPart{0.0, Mat::Zero(dim, dim), 1.0}, PolyScale::power(alpha), ExpDamp{},
                   1.0, 1.0, std::max(norm, 1.0 / norm), norm, Vec(), ClosedForm{});
}

// Gaussian part diag(1, 2) plus tempered jumps with kernel j(|D x|), D = diag(1, 2).
LevyModel aniso_2d() {
  Mat A(2, 2);
  A << 1.0, 0.0, 0.0, 2.0;
  ExpDamp damp;
  damp.beta = 1.0;
  return LevyModel("aniso", 2, GaussianPart{1.0, A, 2.0}, PolyScale::power(1.0), damp, 1.0, 1.0, 10.0, 0.1,
                   v2(1.0, 2.0), ClosedForm{});
}

// Trapezoid sum of the inversion integral. By Poisson summation it equals
// sum_m p(t, x + 2 pi m / h), so it is exact up to aliasing of the far tails
// and the truncation at |xi| = xi_max.
double trapezoid_1d(const LevyModel& m, double t, double x, double h, double xi_max) {
  double acc = 0.5;
  for (int k = 1; k * h <= xi_max; ++k) acc += std::exp(-t * psi_fast(m, v1(k * h))) * std::cos(k * h * x);
  return acc * h / pi;
}

double trapezoid_2d(const LevyModel& m, double t, const Vec& x, double h, double xi_max) {
  const int n = static_cast<int>(xi_max / h);
  double acc = 0.0;
  for (int i = -n; i <= n; ++i)
    for (int k = -n; k <= n; ++k) {
      const Vec xi = v2(i * h, k * h);
      acc += std::exp(-t * psi_fast(m, xi)) * std::cos(xi.dot(x));
    }
  return acc * h * h / (4.0 * pi * pi);
}

}  // namespace

TEST_CASE("closed forms") {
  DensityEvaluator c1(LevyModel::cauchy(1));
  CHECK(c1.method() == InversionMethod::ClosedForm);
  CHECK(c1(1.0, v1(0.0)) == doctest::Approx(1.0 / pi).epsilon(1e-14));
  CHECK(c1(2.0, v1(1.0)) == doctest::Approx(2.0 / (5.0 * pi)).epsilon(1e-14));

  // d = 3 Cauchy: t / (pi^2 (t^2 + r^2)^2).
  DensityEvaluator c3(LevyModel::cauchy(3));
  Vec x(3);
  x << 1.0, 2.0, 0.5;
  CHECK(c3(0.7, x) == doctest::Approx(0.7 / (pi * pi * std::pow(0.49 + x.squaredNorm(), 2))).epsilon(1e-13));

  Mat A(2, 2);
  A << 1.0, 0.0, 0.0, 2.0;
  DensityEvaluator g(LevyModel("g", 2, GaussianPart{1.0, A, 2.0}, std::nullopt, ExpDamp{}, 1, 1, 1, 1, Vec(),
                               ClosedForm{}));
  CHECK(g.method() == InversionMethod::ClosedForm);
  CHECK(g(1.0, v2(0.0, 0.0)) == doctest::Approx(1.0 / (4.0 * pi * std::sqrt(2.0))).epsilon(1e-14));
  CHECK(g(0.5, v2(1.0, 2.0)) ==
        doctest::Approx(std::exp(-(1.0 + 2.0) / 2.0) / (2.0 * pi * std::sqrt(2.0))).epsilon(1e-13));

  CHECK_THROWS_AS(DensityEvaluator(LevyModel::brownian(2, 0.0)), ConfigError);
  CHECK_THROWS_AS(c1(0.0, v1(1.0)), DomainError);
  CHECK_THROWS_AS(c1(1.0, v2(1.0, 0.0)), DomainError);
}

TEST_CASE("radial inversion reproduces Cauchy densities") {
  DensityOptions o;
  o.force_radial = true;
  for (int d : {1, 2, 3}) {
    DensityEvaluator closed(LevyModel::cauchy(d));
    DensityEvaluator radial(LevyModel::cauchy(d), o);
    REQUIRE(radial.method() == InversionMethod::RadialBessel);
    for (double t : {0.01, 0.1, 1.0, 10.0})
      for (double r : {0.0, 0.003, 0.3, 1.0, 3.0, 10.0, 30.0}) {
        const double ex = closed.radial(t, r);
        INFO("d=" << d << " t=" << t << " r=" << r);
        CHECK(std::abs(radial.radial(t, r) - ex) <= 1e-6 * ex);
      }
  }
}

TEST_CASE("radial inversion against Fourier oracles") {
  boost::math::quadrature::ooura_fourier_cos<double> fcos(1e-13, 14);
  boost::math::quadrature::ooura_fourier_sin<double> fsin(1e-13, 14);

  SUBCASE("stable alpha = 1.5, d = 1") {
    DensityEvaluator ev(stable_model(1, 1.5));
    for (double t : {0.3, 1.0})
      for (double r : {0.0, 0.5, 2.0, 5.0}) {
        double oracle = 0.0;
        if (r == 0.0)
          oracle = std::tgamma(1.0 + 1.0 / 1.5) * std::pow(t, -1.0 / 1.5) / pi;
        else
          oracle = fcos.integrate([&](double xi) { return std::exp(-t * std::pow(xi, 1.5)); }, r).first / pi;
        INFO("t=" << t << " r=" << r);
        CHECK(ev.radial(t, r) == doctest::Approx(oracle).epsilon(1e-7));
      }
  }
  SUBCASE("stable alpha = 0.5, d = 3") {
    // p(t, r) = (2 pi^2 r)^{-1} int_0^inf xi sin(xi r) exp(-t xi^alpha) dxi.
    DensityEvaluator ev(stable_model(3, 0.5));
    for (double r : {0.5, 2.0}) {
      const double t = 1.0;
      const double oracle =
          fsin.integrate([&](double xi) { return xi * std::exp(-t * std::sqrt(xi)); }, r).first / (2.0 * pi * pi * r);
      INFO("r=" << r);
      CHECK(ev.radial(t, r) == doctest::Approx(oracle).epsilon(1e-6));
    }
  }
  SUBCASE("Brownian plus Cauchy, d = 1") {
    LevyModel m("mixed", 1, GaussianPart{1.0, Mat::Identity(1, 1), 1.0}, PolyScale::power(1.0), ExpDamp{}, 1, 1, pi,
                1.0 / pi, Vec(), ClosedForm{});
    DensityEvaluator ev(m);
    CHECK(ev.method() == InversionMethod::RadialBessel);
    for (double r : {0.0, 1.0, 4.0}) {
      const double t = 0.5;
      auto f = [&](double xi) { return std::exp(-t * (xi * xi + xi)); };
      const double oracle = r == 0.0 ? (std::sqrt(pi / t) / 2.0 * std::exp(t / 4.0) * std::erfc(std::sqrt(t) / 2.0)) / pi
                                     : fcos.integrate(f, r).first / pi;
      INFO("r=" << r);
      CHECK(ev.radial(t, r) == doctest::Approx(oracle).epsilon(1e-7));
    }
  }
}

TEST_CASE("tempered d = 1 against a trapezoid oracle") {
  DensityEvaluator ev(tempered_1d());
  for (double t : {0.1, 1.0, 4.0}) {
    const double xi_max = 40.0 / t;  // exp(-t Psi) < 1e-15 beyond
    for (double x : {0.0, 0.2, 1.0, 3.0, 6.0}) {
      const double oracle = trapezoid_1d(ev.model(), t, x, 0.005, xi_max);
      INFO("t=" << t << " x=" << x);
      CHECK(std::abs(ev.radial(t, x) - oracle) <= 1e-7 * oracle + 1e-11 * ev.radial(t, 0.0));
    }
  }
  // Small time: p(t, r) ~ t j(r).
  for (double r : {3.0, 5.0}) CHECK(ev.radial(1e-3, r) / (1e-3 * ev.model().radial_jump(r)) == doctest::Approx(1.0).epsilon(2e-2));
}

TEST_CASE("grid inversion for an anisotropic model") {
  DensityEvaluator ev(aniso_2d());
  REQUIRE(ev.method() == InversionMethod::GridFFT);
  for (const Vec& x : {v2(0.0, 0.0), v2(0.7, 0.0), v2(0.0, 0.7), v2(1.3, -2.1), v2(3.0, 1.0)}) {
    const double t = 0.5;
    const double oracle = trapezoid_2d(ev.model(), t, x, 0.04, 12.0);
    INFO("x=(" << x[0] << "," << x[1] << ")");
    CHECK(std::abs(ev(t, x) - oracle) <= 2e-4 * ev(t, Vec::Zero(2)));
    CHECK(ev(t, x) == ev(t, Vec(-x)));
    CHECK(ev(t, x) <= ev(t, Vec::Zero(2)));
  }
  CHECK_THROWS_AS(ev.radial(1.0, 1.0), DomainError);
  CHECK(total_mass(ev, 1.0, 1e-5) == doctest::Approx(1.0).epsilon(2e-3));
}

TEST_CASE("density diagnostics") {
  DensityEvaluator ev(tempered_1d());
  for (double t : {0.1, 1.0, 10.0}) {
    INFO("t=" << t);
    CHECK(total_mass(ev, t, 1e-6) == doctest::Approx(1.0).epsilon(2e-3));
    CHECK(ev.radial(t, 0.37) == ev(t, v1(-0.37)));
    double prev = ev.radial(t, 0.0);
    for (double r = 0.05; r < 20.0; r *= 1.3) {
      const double p = ev.radial(t, r);
      CHECK(p <= prev);
      prev = p;
    }
  }
  CHECK(chapman_kolmogorov_gap(ev, 0.5, 0.7) < 1e-4);

  std::vector<double> ts;
  for (double t = 1e-3; t <= 1e3; t *= 10.0) ts.push_back(t);
  const double c = on_diagonal_constant(ev, ts);
  CHECK(c > 0.1);
  CHECK(c < 10.0);

  DensityEvaluator stable2(stable_model(2, 1.2));
  CHECK(total_mass(stable2, 1.0, 1e-4) == doctest::Approx(1.0).epsilon(2e-3));
}

TEST_CASE("radial density table") {
  auto ev = std::make_shared<const DensityEvaluator>(tempered_1d());
  RadialDensityTable table(ev, {});
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ls(std::log(1e-4), std::log(4.0)), lr(std::log(1e-3), std::log(30.0));
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double s = std::exp(ls(rng)), r = std::exp(lr(rng));
    const double p = ev->radial(s, r);
    if (p < 1e-6 * ev->radial(s, 0.0)) continue;
    worst = std::max(worst, std::abs(table(s, r) - p) / p);
  }
  CHECK(worst < 2e-3);  // Catmull-Rom in log p, third order in the node spacing
  // Outside the table: direct evaluation.
  CHECK(table(20.0, 1.0) == ev->radial(20.0, 1.0));
  CHECK(table(1.0, 1e4) == ev->radial(1.0, 1e4));

  auto grid = std::make_shared<const DensityEvaluator>(aniso_2d());
  CHECK_THROWS(RadialDensityTable(grid, {}));
}

TEST_CASE("envelope examples") {
  CHECK(pc(2, 1.0, 0.0) == 1.0);
  CHECK(pc(1, 4.0, 2.0) == doctest::Approx(0.5 * std::exp(-1.0)));

  // beta = inf, r = 2, T = 1, t = 1/2, a = 1: (t / (T r))^{a r} = 1/16.
  ExpDamp trunc;
  trunc.beta = kInf;
  LevyModel tm("trunc", 1, GaussianPart{0.0, Mat::Zero(1, 1), 1.0}, PolyScale::power(1.0), trunc, 1, 1, pi, 1.0 / pi,
               Vec(), ClosedForm{});
  Envelopes te(tm, std::make_shared<ScaleFunction>(tm, ScaleFunction::Variant::Full));
  CHECK(te.h(1.0, 1.0, 0.5, 2.0) == doctest::Approx(0.0625).epsilon(1e-14));
  CHECK_THROWS_AS(te.h(1.0, 1.0, 2.0, 1.0), DomainError);
  CHECK_THROWS_AS(te.k(1.0, 1.0, 0.5, 1.0), DomainError);

  // beta = 0 and a0 = 0: both envelopes reduce to Phi^{-1}(t)^{-d} ^ t j(a r).
  auto cauchy = LevyModel::cauchy(1);
  auto sf = std::make_shared<ScaleFunction>(cauchy, ScaleFunction::Variant::Full);
  Envelopes ce(cauchy, sf);
  for (double t : {0.1, 1.0, 10.0})
    for (double r : {0.0, 0.5, 2.0, 50.0}) {
      const double want = std::min(1.0 / sf->phi_inv(t), r > 0.0 ? t * cauchy.radial_jump(0.5 * r) : kInf);
      CHECK(ce.hk(0.5, 1.0, t, r) == doctest::Approx(want).epsilon(1e-12));
    }
  CHECK(ce.h(0.5, 1.0, 1.0, 3.0) == doctest::Approx(ce.k(0.5, 1.0, 1.0, 3.0)).epsilon(1e-12));
}

TEST_CASE("envelopes are nonincreasing in r") {
  for (double beta : {0.0, 0.5, 1.0, 2.0}) {
    const auto m = tempered_1d(beta);
    Envelopes env(m, std::make_shared<ScaleFunction>(m, ScaleFunction::Variant::Full));
    for (double a : {0.25, 0.5})
      for (double t : {0.01, 0.3, 1.0, 3.0, 100.0}) {
        double prev = kInf;
        for (double r = 0.01; r < 100.0; r *= 1.1) {
          const double v = env.hk(a, 1.0, t, r);
          INFO("beta=" << beta << " a=" << a << " t=" << t << " r=" << r);
          CHECK(v <= prev * (1.0 + 1e-12));
          prev = v;
        }
      }
  }
}

TEST_CASE("log factor comparison") {
  const auto m = tempered_1d(2.0);
  Envelopes env(m, std::make_shared<ScaleFunction>(m, ScaleFunction::Variant::Full));
  const auto rows = log_factor_comparison(env, 0.5, 1.0, {2.0, 10.0}, {1.0, 30.0, 300.0});
  REQUIRE(rows.size() == 6);
  for (const auto& row : rows) {
    CHECK(std::isfinite(row.ratio));
    // r T / t >= 1: |log x| < 1 + log x, so the uncorrected envelope is larger.
    if (row.r >= row.t) CHECK(row.ratio >= 1.0);
  }
}

TEST_CASE("sandwich fit") {
  SUBCASE("single point") {
    auto p = [](double, double) { return 2.0; };
    auto e = [](double, double, double) { return 1.0; };
    const auto rep = fit_free_sandwich(p, e, e, {{1.0, 1.0}}, {});
    CHECK(rep.pass);
    CHECK(rep.c2 == doctest::Approx(2.0));
    CHECK(rep.violations.empty());

    auto zero = [](double, double) { return 0.0; };
    const auto bad = fit_free_sandwich(zero, e, e, {{1.0, 1.0}}, {});
    CHECK_FALSE(bad.pass);
    CHECK(std::isinf(bad.c2));
    CHECK(bad.violations.size() == 1);
  }
  SUBCASE("Cauchy") {
    DensityEvaluator ev(LevyModel::cauchy(1));
    Envelopes env(ev.model(), ev.scale_ptr());
    std::vector<FreeGridPoint> grid;
    for (double t = 1e-2; t <= 1e2; t *= 10.0)
      for (double r : {0.0, 0.1, 1.0, 10.0, 100.0}) grid.push_back({t, r});
    const auto rep = fit_free_sandwich(ev, env, grid);
    CHECK(rep.pass);
    CHECK(rep.c2 < 10.0);
    CHECK(rep.rows.size() == grid.size());
  }
  SUBCASE("Brownian, exact shape") {
    // p = (4 pi t)^{-1/2} exp(-r^2/(4t)) = (4 pi)^{-1/2} pc(t, r/2).
    DensityEvaluator ev(LevyModel::brownian(1, 1.0));
    Envelopes env(ev.model(), ev.scale_ptr());
    std::vector<FreeGridPoint> grid;
    for (double t : {0.1, 1.0, 5.0})
      for (double r : {0.0, 0.5, 2.0}) grid.push_back({t, r});
    const auto rep = fit_free_sandwich(ev, env, grid);
    CHECK(rep.a_upper == 0.5);
    CHECK(rep.c2 == doctest::Approx(std::sqrt(4.0 * pi)).epsilon(1e-6));
  }
}
