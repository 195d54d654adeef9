#include <doctest.h>

#include <cmath>
#include <numbers>

#include "levyheat/errors.hpp"
#include "levyheat/verify.hpp"

using namespace levyheat;
using std::numbers::pi;

namespace {

Vec point(std::initializer_list<double> v) {
  Vec x(static_cast<int>(v.size()));
  int i = 0;
  for (double c : v) x(i++) = c;
  return x;
}

LevyModel tempered_1d(double beta) {
  ExpDamp damp;
  damp.beta = beta;
  return LevyModel("tempered", 1, GaussianPart{0.0, Mat::Zero(1, 1), 1.0}, PolyScale::power(1.0), damp, 1.0, 1.0,
                   pi, 1.0 / pi, Vec(), ClosedForm{});
}

struct Setup {
  explicit Setup(const LevyModel& m, long n, std::uint64_t seed = 17)
      : ev(std::make_shared<DensityEvaluator>(m)), p(ev), env(m, ev->scale_ptr()), sim(m, config(n, seed)) {}
  static SimConfig config(long n, std::uint64_t seed) {
    SimConfig c;
    c.n_paths = n;
    c.seed = seed;
    return c;
  }
  std::shared_ptr<DensityEvaluator> ev;
  KilledDensity p;
  Envelopes env;
  PathSimulator sim;
};

}  // namespace

TEST_CASE("boundary factor") {
  ScaleFunction sf(LevyModel::cauchy(1));
  CHECK(boundary_factor(sf, 4.0, 1.0) == doctest::Approx(0.5));
  CHECK(boundary_factor(sf, 1.0, 1.0) == doctest::Approx(1.0));
  CHECK(boundary_factor(sf, 1.0, 3.0) == 1.0);
  CHECK(boundary_factor(sf, 1.0, 0.0) == 0.0);
  CHECK_THROWS_AS(boundary_factor(sf, 0.0, 1.0), DomainError);
  CHECK_THROWS_AS(boundary_factor(sf, 1.0, -1.0), DomainError);
}

TEST_CASE("sandwich grid layout") {
  const auto g = sandwich_grid(1, {0.5, 1.0}, {0.1, 1.0}, {0.5, 2.0, 8.0});
  CHECK(g.size() == 12);
  CHECK(g[0].x(0) == 0.1);
  CHECK(g[2].y(0) == doctest::Approx(8.1));
  const auto g2 = sandwich_grid(2, {1.0}, {2.0}, {3.0});
  CHECK(g2[0].x(1) == 2.0);
  CHECK(g2[0].y(1) == 2.0);
  CHECK(g2[0].y(0) == 3.0);
}

TEST_CASE("Cauchy sandwiches") {
  Setup s(LevyModel::cauchy(1), 4000);
  const auto est = estimate_grid(s.sim, s.p, sandwich_grid(1, {0.25, 1.0, 4.0}, {0.1, 1.0, 10.0}, {0.5, 2.0, 8.0}));
  const auto up = verify_upper(s.env, est);
  const auto two = verify_twosided(s.env, est);
  const auto conj = verify_conjecture_form(s.p, s.ev->scale(), est);
  for (const auto* r : {&up, &two, &conj}) {
    INFO(r->kind << " c1=" << r->c1 << " " << r->detail);
    CHECK(r->pass);
    CHECK(r->violations.empty());
    CHECK(std::isfinite(r->c1));
    CHECK(r->coherent);
    CHECK(r->rows.size() == 27);
  }
  // Fitted sandwich is ordered and contains the estimates within slack.
  for (const auto& r : two.rows) {
    CHECK(r.lower_env / two.c1_lower <= r.upper_env * two.c1_upper);
    CHECK((r.time_regime == "t<T" || r.time_regime == "t>=T"));
    CHECK((r.space_regime == "near" || r.space_regime == "far"));
    CHECK(r.bf_x * r.bf_y == doctest::Approx(r.bf_y * r.bf_x));
  }
  // Cauchy scaling: p(c t, c z) = p(t, z)/c, so the form fit keeps the unit scales.
  CHECK(conj.t_upper == 1.0);
  CHECK(conj.s_upper == 1.0);
  CHECK(conj.t_lower == 1.0);
  CHECK(conj.s_lower == 1.0);
}

TEST_CASE("boundary points vanish") {
  Setup s(LevyModel::cauchy(1), 2000);
  std::vector<GridPoint> g;
  g.push_back({1.0, point({0.0}), point({1.0})});
  g.push_back({1.0, point({1.0}), point({0.0})});
  const auto est = estimate_grid(s.sim, s.p, g);
  for (const auto& e : est) CHECK(std::abs(e.p) <= 3.0 * e.stderr + 1e-12);
  const auto rep = verify_upper(s.env, est);
  for (const auto& r : rep.rows) CHECK(r.upper_env == 0.0);
  CHECK(rep.pass);
}

TEST_CASE("single-point form fit") {
  Setup s(LevyModel::brownian(1, 1.0), 2000);
  const auto est = estimate_grid(s.sim, s.p, {GridPoint{1.0, point({1.0}), point({1.5})}});
  const auto conj = verify_conjecture_form(s.p, s.ev->scale(), est);
  CHECK(conj.pass);
  CHECK(conj.rows.size() == 1);
  // Gaussian: the unit scales are among the best pairs.
  CHECK(conj.s_upper == 1.0);
  CHECK(conj.s_lower == 1.0);
}

TEST_CASE("lower regimes") {
  Setup s(LevyModel::cauchy(1), 4000);
  const auto in = check_interior(s.sim, s.p, {0.25, 1.0, 4.0});
  INFO("scaled in [" << in.min_scaled << ", " << in.max_scaled << "]");
  CHECK(in.pass);
  CHECK(in.rows.size() == 3);
  for (const auto& r : in.rows) CHECK(r.delta == doctest::Approx(4.0 * r.t));

  const auto st = check_small_time(s.sim, s.p, point({5.0}), point({6.0}), {0.005, 0.01, 0.02, 0.05});
  CHECK(st.pass);
  CHECK(st.constant > 0.1);
  // Deep points, short times: p_H ~ p ~ t j.
  for (const auto& r : st.rows) CHECK(r.ratio == doctest::Approx(1.0).epsilon(0.2));
  CHECK_THROWS_AS(check_small_time(s.sim, s.p, point({5.0}), point({5.0}), {0.01}), DomainError);
}

TEST_CASE("survival comparison") {
  SimConfig c;
  c.n_paths = 4000;
  PathSimulator sim(LevyModel::cauchy(1), c);
  const auto rep = survival_comparison(sim, {0.1, 1.0, 5.0}, {0.5, 2.0});
  CHECK(rep.rows.size() == 6);
  CHECK(rep.pass);
  CHECK(rep.C0 < 10.0);
  for (const auto& r : rep.rows) CHECK(r.reference == doctest::Approx(std::min(1.0, std::sqrt(r.delta / r.t))));
  c.n_paths = 150;
  CHECK_THROWS_AS(survival_comparison(PathSimulator(LevyModel::cauchy(1), c), {1.0}, {1.0}), ConfigError);
}

TEST_CASE("tail bound and vanishing") {
  SimConfig c;
  c.n_paths = 4000;
  const auto m = tempered_1d(1.0);
  PathSimulator sim(m, c);
  ScaleFunction sf(m);
  const auto tail = check_tail_bound(sim, sf, {0.01, 0.1, 1.0, 10.0}, {0.1, 1.0, 10.0, 100.0});
  CHECK(tail.rows.size() == 16);
  CHECK(tail.pass);
  CHECK(tail.c > 0.0);

  const auto van = check_vanishing(vanishing_H(m, c, 1.0, {1, 2, 4, 8, 16}));
  CHECK(van.pass);
  std::vector<VanishingRow> flat{{1, 0.5, 0.01, 1}, {2, 0.5, 0.01, 1}};
  CHECK(!check_vanishing(flat).pass);
}

TEST_CASE("HKC") {
  const std::vector<double> ts{0.1, 1.0, 10.0}, rs{0.1, 0.5, 1.0, 3.0, 10.0};
  for (const auto& m : {LevyModel::cauchy(1), LevyModel::brownian(1, 1.0)}) {
    const auto rep = check_HKC(DensityEvaluator(m), ts, rs);
    CHECK(rep.pass);
    CHECK(rep.C1 == 1.0);
    CHECK(rep.C2 == 1.0);
    CHECK(rep.c == doctest::Approx(1.0));
    for (const auto& r : rep.rows)
      if (r.rx == r.ry) CHECK(r.ratio == doctest::Approx(1.0));
  }
  const auto tr = check_HKC(DensityEvaluator(tempered_1d(1.0)), {0.5, 2.0}, {0.2, 1.0, 4.0});
  CHECK(tr.pass);
}
