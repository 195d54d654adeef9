#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>

#include "levyheat/errors.hpp"
#include "levyheat/scaling.hpp"

using namespace levyheat;
using std::numbers::pi;

namespace {

LevyModel tempered_1d(double beta) {
  ExpDamp damp;
  damp.beta = beta;
  return LevyModel("tempered", 1, GaussianPart{0.0, Mat::Zero(1, 1), 1.0}, PolyScale::power(1.0), damp, 1.0, 1.0,
                   pi, 1.0 / pi, Vec(), ClosedForm{});
}

LevyModel stable_quadrature(int dim, double alpha) {
  const double norm = 1.0 / stable_constant(dim, alpha);
  return LevyModel("stable", dim, GaussianPart{0.0, Mat::Zero(dim, dim), 1.0}, PolyScale::power(alpha), ExpDamp{},
                   1.0, 1.0, std::max(norm, 1.0 / norm), norm, Vec(), ClosedForm{});
}

LevyModel gaussian_diag(double a, double b) {
  Mat A(2, 2);
  A << a, 0.0, 0.0, b;
  return LevyModel("aniso", 2, GaussianPart{std::min(a, b), A, std::max(a, b) / std::min(a, b)}, std::nullopt,
                   ExpDamp{}, 1, 1, 1, 1, Vec(), ClosedForm{});
}

}  // namespace

TEST_CASE("stable scale function is exact") {
  for (double alpha : {0.5, 1.0, 1.5}) {
    ScaleFunction sf(LevyModel::isotropic_stable(1, alpha));
    CHECK(sf.closed_tag() == "stable");
    for (double r : {1e-3, 0.7, 1.0, 42.0}) {
      CHECK(sf.phi(r) == doctest::Approx(std::pow(r, alpha)).epsilon(1e-12));
      CHECK(sf.phi_inv(r) == doctest::Approx(std::pow(r, 1.0 / alpha)).epsilon(1e-12));
    }
  }
}

TEST_CASE("stable scale function from quadrature") {
  for (double alpha : {0.5, 1.5}) {
    ScaleFunction sf(stable_quadrature(1, alpha));
    CHECK(sf.closed_tag().empty());
    for (double r : {1e-3, 0.7, 3.0, 500.0}) {
      INFO("alpha=" << alpha << " r=" << r);
      CHECK(sf.phi(r) == doctest::Approx(std::pow(r, alpha)).epsilon(1e-7));
      CHECK(sf.phi_inv(r) == doctest::Approx(std::pow(r, 1.0 / alpha)).epsilon(1e-7));
    }
  }
}

TEST_CASE("Brownian scale function") {
  ScaleFunction sf(LevyModel::brownian(1, 1.0));
  CHECK(sf.closed_tag() == "brownian");
  CHECK(sf.phi_inv(4.0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(sf.phi(3.0) == doctest::Approx(9.0).epsilon(1e-14));
  CHECK_THROWS_AS(sf.phi_inv(0.0), DomainError);
}

TEST_CASE("psi_star of an anisotropic Gaussian") {
  // Psi(xi) = xi_1^2 + 4 xi_2^2: Psi*(r) = 4 r^2, Psi_1*(r) = 4 r^2 along e_2.
  const auto m = gaussian_diag(1.0, 4.0);
  for (double r : {0.1, 1.0, 3.0}) {
    CHECK(psi_star(m, r) == doctest::Approx(4.0 * r * r).epsilon(1e-12));
    CHECK(psi1_star(m, r) == doctest::Approx(4.0 * r * r).epsilon(1e-12));
    CHECK(psi_coordinate(m, r) == doctest::Approx(4.0 * r * r).epsilon(1e-12));
  }
  ScaleFunction full(m, ScaleFunction::Variant::Full);
  CHECK(full.phi(0.5) == doctest::Approx(0.25 / 4.0).epsilon(1e-9));

  // Along e_d the diag(4, 1) model sees only the weak direction.
  const auto w = gaussian_diag(4.0, 1.0);
  CHECK(psi1_star(w, 2.0) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(comp_witness(w).constant == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(comp_witness(m).constant == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("tempered round trip") {
  for (double beta : {0.0, 1.0, 2.0, kInf}) {
    ScaleFunction sf(tempered_1d(beta));
    for (double t = 1e-5; t < 1e5; t *= 7.3) {
      const double r = sf.phi_inv(t);
      INFO("beta=" << beta << " t=" << t);
      CHECK(std::abs(sf.phi(r) - t) <= 1e-8 * t);
    }
    // Nondecreasing.
    double prev = 0.0;
    for (double r = 1e-4; r < 1e4; r *= 1.37) {
      CHECK(sf.phi(r) >= prev);
      prev = sf.phi(r);
    }
  }
}

TEST_CASE("scaling inequality") {
  const auto ts = log_grid(1e-3, 1e3, 10);
  const std::vector<double> lambdas{1.0, 1.5, 3.0, 10.0, 100.0};
  for (double beta : {0.0, 1.0, 2.0, kInf}) {
    ScaleFunction sf(tempered_1d(beta));
    const auto c = check_scaling_inequality(sf, ts, lambdas);
    INFO("beta=" << beta << " worst: " << c.worst);
    CHECK(c.pass);
    CHECK(c.points == 50);
    CHECK(c.min_ratio >= 1.0);
    CHECK(c.max_excess <= 1.0);
  }
}

TEST_CASE("Phi against the canonical references") {
  CHECK(check_L51(ScaleFunction(LevyModel::isotropic_stable(1, 0.5))).pass);
  const auto rep = check_L51(ScaleFunction(tempered_1d(1.0)));
  CHECK(rep.pass);
  CHECK(rep.small_reference == "phi1");
  CHECK(rep.large_reference == "r^2");
}

TEST_CASE("Pruitt bracket") {
  // d = 1 Cauchy, J(z) = 1/(pi z^2): int J (1 ^ z^2/r^2) = 4/(pi r).
  const auto c = LevyModel::cauchy(1);
  for (double r : {0.01, 1.0, 30.0}) CHECK(pruitt_middle(c, r) == doctest::Approx(4.0 / (pi * r)).epsilon(1e-8));
  // Brownian: ||A|| / r^2.
  CHECK(pruitt_middle(LevyModel::brownian(2, 3.0), 2.0) == doctest::Approx(0.75));

  const auto rs = log_grid(1e-3, 1e3, 40);
  for (double beta : {0.0, 1.0, kInf}) {
    const auto chk = check_pruitt(ScaleFunction(tempered_1d(beta)), rs);
    INFO("beta=" << beta);
    CHECK(chk.pass);
    CHECK(chk.points == 40);
    CHECK(chk.min_lower_margin >= 1.0);
    CHECK(chk.max_upper_ratio <= 1.0);
  }
}

TEST_CASE("scale function CSV") {
  ScaleFunction::Options o;
  o.r_min = 1e-2;
  o.r_max = 1e2;
  o.per_decade = 5;
  ScaleFunction sf(tempered_1d(1.0), ScaleFunction::Variant::Full, o);
  const auto path = (std::filesystem::temp_directory_path() / "levyheat_phi_test.csv").string();
  sf.write_csv(path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "r,phi,phi_inv_roundtrip_err");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == static_cast<int>(sf.table_rows().size()));
  CHECK(rows >= 21);
  for (const auto& row : sf.table_rows()) CHECK(row.roundtrip_err <= 1e-8);
  std::filesystem::remove(path);
}

TEST_CASE("direction net") {
  CHECK(direction_net(1).size() == 1);
  for (int d : {2, 3, 5})
    for (const auto& u : direction_net(d, 32)) CHECK(u.norm() == doctest::Approx(1.0));
  CHECK(direction_net(3, 64).size() >= 64);
}
