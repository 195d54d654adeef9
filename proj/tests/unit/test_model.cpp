#include <doctest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <numbers>

#include "levyheat/errors.hpp"
#include "levyheat/model.hpp"
#include "levyheat/model_io.hpp"

using namespace levyheat;
using nlohmann::json;

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

LevyModel tempered_1d(double beta = 1.0, double norm = 1.0) {
  ExpDamp damp;
  damp.beta = beta;
  return LevyModel("tempered", 1, GaussianPart{0.0, Mat::Zero(1, 1), 1.0}, PolyScale::power(1.0), damp,
                   1.0, 1.0, std::max(norm, 1.0 / norm), norm, Vec(), ClosedForm{});
}

LevyModel stable_model(int dim, double alpha, bool closed) {
  ExpDamp damp;
  const double norm = 1.0 / stable_constant(dim, alpha);
  ClosedForm cf;
  if (closed) cf = ClosedForm{ClosedForm::Kind::Stable, alpha, 0.0};
  return LevyModel("stable", dim, GaussianPart{0.0, Mat::Zero(dim, dim), 1.0}, PolyScale::power(alpha), damp,
                   1.0, 1.0, 1.0 / norm, norm, Vec(), cf);
}

// 2 int_0^inf (1 - cos(xi y)) j(y) dy, independent of the library's radial
// reduction: tanh-sinh on the first half period, Gauss-Kronrod per period after.
template <class J>
double oracle_psi_1d(const J& j, double xi, double cut = kInf) {
  using namespace boost::math::quadrature;
  auto f = [&](double y) {
    if (y < 1e-100) return 0.0;
    const double h = std::sin(0.5 * xi * y);
    return 2.0 * h * h * j(y);
  };
  const double end = std::isinf(cut) ? 60.0 : cut;  // exponential tails beyond 60 are negligible
  const double period = 2.0 * std::numbers::pi / xi;
  double lo = std::min(0.5 * period, std::min(1.0, end));
  tanh_sinh<double> ts;
  double v = ts.integrate(f, 0.0, lo, 1e-14);
  while (lo < end) {
    double hi = std::min(lo + period, end);
    if (lo < 1.0 && hi > 1.0) hi = 1.0;
    v += gauss_kronrod<double, 31>::integrate(f, lo, hi, 8, 1e-14);
    lo = hi;
  }
  return 2.0 * v;
}

}  // namespace

TEST_CASE("psi examples") {
  auto cauchy = LevyModel::cauchy(1);
  CHECK(psi(cauchy, v1(2.0)) == doctest::Approx(2.0).epsilon(1e-14));

  auto bm = LevyModel::brownian(2, 1.0);
  CHECK(psi(bm, v2(1.0, 1.0)) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(psi(bm, Vec::Zero(2)) == 0.0);
}

TEST_CASE("tempered psi matches an independent quadrature") {
  auto m = tempered_1d();
  auto j = [](double y) { return y <= 1.0 ? 1.0 / (y * y) : 1.0 / (y * y * std::exp(y - 1.0)); };
  for (double xi : {1e-3, 0.1, 1.0, 7.5, 300.0}) {
    const double ref = oracle_psi_1d(j, xi);
    const auto got = psi_detailed(m, v1(xi));
    CHECK(got.method == PsiValue::Method::Quadrature);
    CHECK(got.value == doctest::Approx(ref).epsilon(1e-9));
    CHECK(psi_fast(m, v1(xi)) == doctest::Approx(ref).epsilon(1e-7));
  }
}

TEST_CASE("truncated kernel psi is a finite-range integral") {
  ExpDamp damp;
  damp.beta = kInf;
  LevyModel m("trunc", 1, GaussianPart{0.0, Mat::Zero(1, 1), 1.0}, PolyScale::power(0.5), damp, 1.0, 1.0, 1.0,
              1.0, Vec(), ClosedForm{});
  auto j = [](double y) { return std::pow(y, -1.5); };
  for (double xi : {0.01, 1.0, 40.0, 1e4}) {
    const double ref = oracle_psi_1d(j, xi, 1.0);
    CHECK(psi(m, v1(xi)) == doctest::Approx(ref).epsilon(1e-9));
  }
  CHECK(jump_density(m, v1(2.0)) == 0.0);
}

TEST_CASE("closed forms agree with quadrature") {
  for (int d : {1, 2, 3})
    for (double a : {0.5, 1.0, 1.5}) {
      auto m = stable_model(d, a, true);
      for (double s : {1e-3, 0.7, 25.0}) {
        Vec xi = Vec::Zero(d);
        xi[0] = s;
        CHECK(psi(m, xi) == doctest::Approx(std::pow(s, a)).epsilon(1e-12));
        CHECK(psi_quadrature(m, xi) == doctest::Approx(std::pow(s, a)).epsilon(1e-6));
      }
    }
  PolyScale p = PolyScale::power(1.0);
  ExpDamp damp;
  damp.beta = 1.0;
  for (int d : {1, 3}) {
    LevyModel rel("rel", d, GaussianPart{0.0, Mat::Zero(d, d), 1.0}, p, damp, 0.5, 2.0, 100.0, 1.0, Vec(),
                  ClosedForm{ClosedForm::Kind::Relativistic, 1.0, 1.0});
    for (double s : {0.05, 1.0, 30.0}) {
      Vec xi = Vec::Zero(d);
      xi[d - 1] = s;
      const double closed = std::sqrt(s * s + 1.0) - 1.0;
      CHECK(psi(rel, xi) == doctest::Approx(closed).epsilon(1e-12));
      CHECK(psi_quadrature(rel, xi) == doctest::Approx(closed).epsilon(1e-6));
    }
  }
}

TEST_CASE("two-dimensional psi against a polar cubature") {
  ExpDamp damp;
  damp.beta = 2.0;
  LevyModel m("t2", 2, GaussianPart{0.0, Mat::Zero(2, 2), 1.0}, PolyScale::piecewise(0.7, 1.2), damp, 1.0,
              1.0, 1.0, 1.0, Vec(), ClosedForm{});
  using boost::math::quadrature::gauss_kronrod;
  using boost::math::quadrature::tanh_sinh;
  for (double s : {0.3, 4.0}) {
    auto angular = [&](double rho) {
      auto g = [&](double th) {
        const double h = std::sin(0.5 * s * rho * std::cos(th));
        return 2.0 * h * h;
      };
      return 4.0 * gauss_kronrod<double, 61>::integrate(g, 0.0, 0.5 * std::numbers::pi, 10, 1e-13);
    };
    auto f = [&](double rho) { return rho < 1e-100 ? 0.0 : rho * m.radial_jump(rho) * angular(rho); };
    tanh_sinh<double> ts;
    double ref = ts.integrate(f, 0.0, 1.0, 1e-12);
    ref += gauss_kronrod<double, 61>::integrate(f, 1.0, 12.0, 15, 1e-12);
    CHECK(psi(m, v2(s, 0.0)) == doctest::Approx(ref).epsilon(1e-8));
    CHECK(psi(m, v2(0.0, -s)) == doctest::Approx(ref).epsilon(1e-8));
  }
}

TEST_CASE("anisotropic kernel rescales the isotropic exponent") {
  ExpDamp damp;
  damp.beta = 1.0;
  Vec D(2);
  D << 1.0, 2.0;
  LevyModel iso("iso", 2, GaussianPart{0.0, Mat::Zero(2, 2), 1.0}, PolyScale::power(1.0), damp, 1.0, 1.0, 1.0,
                1.0, Vec(), ClosedForm{});
  LevyModel an("an", 2, GaussianPart{0.0, Mat::Zero(2, 2), 1.0}, PolyScale::power(1.0), damp, 1.0, 1.0, 1.0,
               1.0, D, ClosedForm{});
  const Vec xi = v2(1.0, 3.0);
  CHECK(psi(an, xi) == doctest::Approx(psi(iso, xi.cwiseQuotient(D)) / 2.0).epsilon(1e-12));
  CHECK(jump_density(an, v2(0.5, 0.5)) == doctest::Approx(iso.radial_jump(std::sqrt(0.25 + 1.0))));
}

TEST_CASE("jump density examples") {
  auto m = stable_model(1, 1.0, false);
  const double norm = m.normalization();
  CHECK(jump_density(m, v1(2.0)) / norm == doctest::Approx(0.25));
  CHECK(m.canonical_profile(2.0, 1.0) == doctest::Approx(0.25));
  CHECK_THROWS_AS(jump_density(m, v1(0.0)), DomainError);

  auto t = tempered_1d(1.0);
  CHECK(jump_density(t, v1(1.0)) == doctest::Approx(1.0));
  CHECK(jump_density(t, v1(-3.0)) == jump_density(t, v1(3.0)));
}

TEST_CASE("Levy measure integrals") {
  auto m = stable_model(1, 1.0, false);
  const double n = m.normalization();
  // int_{|y|>=eps} |y|^{-2} = 2/eps; int_{|y|<eps} |y|^2 |y|^{-2} = 2 eps.
  CHECK(levy_tail_mass(m, 0.5) == doctest::Approx(4.0 * n).epsilon(1e-9));
  CHECK(levy_second_moment(m, 0.5) == doctest::Approx(1.0 * n).epsilon(1e-9));
  CHECK(levy_integrability(m) == doctest::Approx(4.0 * n).epsilon(1e-9));
}

TEST_CASE("sphere averages") {
  for (double s : {1e-4, 0.5, 3.0, 20.0}) {
    CHECK(sphere_cos_average(1, s) == doctest::Approx(std::cos(s)));
    CHECK(sphere_cos_average(3, s) == doctest::Approx(std::sin(s) / s));
    CHECK(sphere_cos_average(2, s) == doctest::Approx(std::cyl_bessel_j(0.0, s)));
    CHECK(one_minus_sphere_cos_average(3, s) + sphere_cos_average(3, s) == doctest::Approx(1.0));
  }
  CHECK(one_minus_sphere_cos_average(2, 1e-5) == doctest::Approx(0.25e-10).epsilon(1e-8));
  CHECK(sphere_cos_average(2, sphere_cos_average_zero(2, 3)) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(stable_constant(1, 1.0) == doctest::Approx(std::numbers::pi));
}

TEST_CASE("validate examples") {
  auto cauchy = LevyModel::cauchy(1);
  auto rep = validate(cauchy);
  for (const auto& e : rep.entries) {
    INFO(e.name << " " << e.detail);
    CHECK(e.pass);
  }
  REQUIRE(rep.find("comp") != nullptr);
  CHECK(rep.find("comp")->witness == doctest::Approx(1.0).epsilon(1e-10));

  auto gauss = [](double a11, double a22) {
    Mat A = Mat::Zero(2, 2);
    A(0, 0) = a11;
    A(1, 1) = a22;
    return LevyModel("g", 2, GaussianPart{1.0, A, 4.0}, std::nullopt, ExpDamp{}, 1.0, 1.0, 1.0, 1.0, Vec(),
                     ClosedForm{});
  };
  // Comp compares against the last coordinate.
  auto r41 = validate(gauss(4.0, 1.0));
  CHECK(r41.all_pass());
  CHECK(r41.find("comp")->witness == doctest::Approx(4.0).epsilon(1e-10));
  CHECK(validate(gauss(1.0, 4.0)).find("comp")->witness == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("UJS constant against a dense grid") {
  auto m = tempered_1d(1.0);
  using boost::math::quadrature::gauss_kronrod;
  double oracle = 0.0;
  for (double R = 1e-2; R <= 1e2; R *= 1.15)
    for (double q = 0.5; q > 1e-2; q *= 0.8) {
      const double r = q * R;
      auto j = [&](double y) { return m.radial_jump(y); };
      double mass = 0.0;
      if (R - r < 1.0 && R + r > 1.0)
        mass = gauss_kronrod<double, 61>::integrate(j, R - r, 1.0, 8, 1e-10) +
               gauss_kronrod<double, 61>::integrate(j, 1.0, R + r, 8, 1e-10);
      else
        mass = gauss_kronrod<double, 61>::integrate(j, R - r, R + r, 8, 1e-10);
      oracle = std::max(oracle, m.radial_jump(R) * r / mass);
    }
  ValidationOptions opt;
  opt.r_min = 1e-2;
  opt.r_max = 1e2;
  const double c = ujs_constant(m, opt);
  CHECK(std::isfinite(c));
  CHECK(c == doctest::Approx(oracle).epsilon(0.05));
  CHECK(validate(m).find("ujs")->pass);
}

TEST_CASE("model json round trip and diagnostics") {
  json doc = {{"format", "levyheat-model/1"}, {"name", "tempered"},  {"dim", 1},
              {"a0", 0.0},                    {"A", {{0.0}}},        {"gamma", 1.0},
              {"phi1", {{"profile", "power"}, {"params", {{"alpha", 1.0}}}}},
              {"psi1", {{"beta", 1.0}, {"gamma1", 1.0}, {"gamma2", 1.0}}},
              {"kappa1", 1.0},                {"kappa2", 1.0},       {"normalization", 0.5}};
  auto m = model_from_json(doc);
  CHECK(m.normalization() == 0.5);
  CHECK(m.damp().a1 == doctest::Approx(std::exp(-1.0)));
  auto back = model_from_json(model_to_json(m));
  CHECK(psi(back, v1(1.3)) == doctest::Approx(psi(m, v1(1.3))).epsilon(1e-14));

  doc["psi1"]["beta"] = "inf";
  CHECK(model_from_json(doc).damp().truncated());

  doc["normalization"] = "unit";
  CHECK(psi(model_from_json(doc), v1(1.0)) == doctest::Approx(1.0).epsilon(1e-12));

  json bad = doc;
  bad["phi1"]["params"]["alpha"] = "x";
  try {
    model_from_json(bad);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("phi1.params.alpha") != std::string::npos);
  }
  bad = doc;
  bad["format"] = "other";
  CHECK_THROWS_AS(model_from_json(bad), ConfigError);
  bad = doc;
  bad["phi1"]["params"]["alpha"] = 2.5;
  CHECK_THROWS_AS(model_from_json(bad), ConfigError);
}
