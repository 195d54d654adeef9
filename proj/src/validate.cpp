#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "levyheat/errors.hpp"
#include "levyheat/model.hpp"
#include "levyheat/quadrature.hpp"
#include "levyheat/scaling.hpp"

namespace levyheat {

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

double unit_ball_volume(int d) { return std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0); }

// Fraction of the sphere of radius rho inside B(y, r), |y| = R, r < R.
double cap_fraction(int d, double rho, double R, double r) {
  if (rho < R - r || rho > R + r) return 0.0;
  if (d == 1) return 0.5;
  const double c0 = (rho * rho + R * R - r * r) / (2.0 * rho * R);
  if (c0 >= 1.0) return 0.0;
  return 0.5 * boost::math::ibeta(0.5 * (d - 1), 0.5, 1.0 - c0 * c0);
}

// Radical inverse in base b: the Halton coordinate.
double halton(int index, int base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * (index % base);
    index /= base;
  }
  return r;
}

std::vector<Vec> halton_ball(int d, int count) {
  static constexpr int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  std::vector<Vec> pts;
  for (int i = 1; static_cast<int>(pts.size()) < count; ++i) {
    Vec p(d);
    for (int k = 0; k < d; ++k) p[k] = 2.0 * halton(i, primes[k % 12]) - 1.0;
    if (p.squaredNorm() <= 1.0) pts.push_back(p);
  }
  return pts;
}

double log_psi1(const ExpDamp& damp, double r) {
  if (r <= 1.0) return 0.0;
  if (damp.truncated()) return kInf;
  if (damp.beta == 0.0) return 0.0;
  return damp.gamma1 * (std::pow(r, damp.beta) - 1.0);
}

}  // namespace

double ujs_constant(const LevyModel& model, const ValidationOptions& opt) {
  if (!model.has_jumps()) return 0.0;
  const int d = model.dim();
  const auto radii = log_grid_per_decade(opt.r_min, opt.r_max, opt.per_decade);
  double worst = 0.0;
  if (model.kernel_profile() != KernelProfile::DiagonalAnisotropic) {
    const double area = sphere_area(d);
    const double R_trunc = model.truncation_radius();
    for (double R : radii) {
      const double jy = model.radial_jump(R);
      if (jy <= 0.0) continue;
      for (int k = 1; k <= 6; ++k) {
        const double r = R / std::ldexp(1.0, k);
        auto f = [&](double rho) {
          return area * model.radial_jump(rho) * std::pow(rho, d - 1) * cap_fraction(d, rho, R, r);
        };
        std::vector<double> pts{R - r, R};
        for (double b : {1.0, 1.0 / model.kappa1(), R_trunc})
          if (b > R - r && b < R + r) pts.push_back(b);
        pts.push_back(std::min(R + r, R_trunc));
        std::sort(pts.begin(), pts.end());
        quad::Options qo;
        qo.rel_tol = 1e-8;
        qo.abs_tol = 0.0;
        double mass = 0.0;
        for (std::size_t i = 0; i + 1 < pts.size(); ++i)
          if (pts[i + 1] > pts[i]) mass += quad::integrate(f, pts[i], pts[i + 1], qo).value;
        worst = std::max(worst, jy * std::pow(r, d) / mass);
      }
    }
    return worst;
  }
  const auto net = direction_net(d, 16);
  const auto ball = halton_ball(d, 1024);
  const double vol = unit_ball_volume(d);
  for (double R : radii) {
    for (const Vec& u : net) {
      const Vec y = R * u;
      const double jy = jump_density(model, y);
      if (jy <= 0.0) continue;
      for (int k = 1; k <= 6; ++k) {
        const double r = R / std::ldexp(1.0, k);
        double acc = 0.0;
        for (const Vec& p : ball) acc += jump_density(model, (y + r * p).eval());
        const double mass = vol * std::pow(r, d) * acc / ball.size();
        worst = std::max(worst, jy * std::pow(r, d) / mass);
      }
    }
  }
  return worst;
}

ValidationReport validate(const LevyModel& model, const ValidationOptions& opt) {
  ValidationReport rep;
  const int d = model.dim();
  const auto rs = log_grid_per_decade(opt.r_min, opt.r_max, opt.per_decade);
  auto add = [&](std::string name, bool pass, double witness, std::string detail) {
    rep.entries.push_back({std::move(name), pass, witness, std::move(detail)});
  };
  auto guarded = [&](const std::string& name, auto&& body) {
    try {
      body();
    } catch (const std::exception& e) {
      add(name, false, kInf, std::string("evaluation failed: ") + e.what());
    }
  };

  // Gaussian ellipticity: extreme eigenvalues against gamma^{-1} a0, gamma a0.
  {
    const auto& g = model.gaussian();
    Eigen::SelfAdjointEigenSolver<Mat> eig(g.A);
    const double lmin = eig.eigenvalues().minCoeff(), lmax = eig.eigenvalues().maxCoeff();
    if (g.a0 == 0.0) {
      add("gaussian_ellipticity", lmax <= 0.0, lmax, "a0 = 0 requires A = 0");
    } else {
      const double witness = std::max(lmax / g.a0, g.a0 / std::max(lmin, 1e-300));
      add("gaussian_ellipticity", witness <= g.gamma * (1.0 + 1e-12), witness,
          "effective gamma " + fmt(witness) + " vs declared " + fmt(g.gamma));
    }
  }

  if (!model.has_jumps()) {
    add("not_compound_poisson", model.gaussian().a0 > 0.0, model.gaussian().a0, "Gaussian part present");
    add("symmetry", true, 0.0, "quadratic form");
    const auto w = comp_witness(model, opt.r_min, opt.r_max, opt.per_decade);
    add("comp", std::isfinite(w.constant), w.constant, "sup Psi*/Psi1* at r = " + fmt(w.at_r));
    return rep;
  }

  const PolyScale& poly = *model.poly();
  {
    bool ok = poly(0.0) == 0.0 && std::abs(poly(1.0) - 1.0) < 1e-15;
    double worst = 0.0;  // smallest slack of the two-sided ratio bound, in log units
    double prev = 0.0;
    for (double r : rs) {
      const double v = poly(r);
      if (!(v > prev)) ok = false;
      prev = v;
    }
    worst = kInf;
    for (std::size_t i = 0; i < rs.size(); i += 5)
      for (std::size_t j = i + 1; j < rs.size(); j += 7) {
        const double q = std::log(poly(rs[j]) / poly(rs[i]));
        const double l = std::log(rs[j] / rs[i]);
        const double lo = q - (std::log(poly.a3) + poly.beta1() * l);
        const double hi = (std::log(poly.a4) + poly.beta2() * l) - q;
        worst = std::min({worst, lo, hi});
      }
    ok = ok && worst >= -1e-12;
    add("poly_scaling", ok, worst, "min log-slack of the phi1 ratio bounds");
  }
  {
    const ExpDamp& dm = model.damp();
    double worst = kInf;
    bool ok = true;
    for (double r : log_grid_per_decade(1.0 + 1e-9, opt.r_max, opt.per_decade)) {
      const double lp = log_psi1(dm, r);
      if (dm.truncated()) {
        ok = ok && std::isinf(lp);
        continue;
      }
      const double rb = dm.beta == 0.0 ? 1.0 : std::pow(r, dm.beta);
      const double lo = lp - (std::log(dm.a1) + dm.gamma1 * rb);
      const double hi = (std::log(dm.a2) + dm.gamma2 * rb) - lp;
      worst = std::min({worst, lo, hi});
    }
    if (!dm.truncated()) ok = worst >= -1e-9 * (1.0 + std::abs(worst));
    add("exp_damping", ok, dm.truncated() ? 0.0 : worst,
        dm.truncated() ? "truncated kernel" : "min log-slack of the psi1 bounds");
  }
  guarded("jump_comparability", [&] {
    const double g = model.comparability_gamma();
    double witness = 1.0;
    auto probe = [&](const Vec& x) {
      const double r = x.norm();
      const double j = jump_density(model, x);
      const double upper = model.canonical_profile(r, model.kappa1());
      const double lower = model.canonical_profile(r, model.kappa2());
      if (upper == 0.0 && j > 0.0) witness = kInf;
      if (j > 0.0 && upper > 0.0) witness = std::max(witness, j / upper);
      if (lower > 0.0) witness = std::max(witness, j > 0.0 ? lower / j : kInf);
    };
    for (const Vec& u : direction_net(d, 16))
      for (double r : rs) probe((r * u).eval());
    add("jump_comparability", witness <= g * (1.0 + 1e-9), witness,
        "effective gamma " + fmt(witness) + " vs declared " + fmt(g));
  });
  guarded("levy_integrability", [&] {
    const double v = levy_integrability(model);
    add("levy_integrability", std::isfinite(v) && v > 0.0, v, "int (1 ^ |y|^2) J(y) dy");
  });
  guarded("not_compound_poisson", [&] {
    const Vec e = Vec::Unit(d, 0);
    const double ratio = psi(model, (1e8 * e).eval()) / psi(model, (1e4 * e).eval());
    const bool ok = model.gaussian().a0 > 0.0 || ratio > 2.0;
    add("not_compound_poisson", ok, ratio, "Psi(1e8 e1)/Psi(1e4 e1)");
  });
  guarded("symmetry", [&] {
    double worst = 0.0;
    for (const Vec& u : direction_net(d, 8))
      for (double s : {1e-2, 1.0, 1e2}) {
        const Vec xi = s * u;
        const double a = psi(model, xi), b = psi(model, (-xi).eval());
        worst = std::max(worst, std::abs(a - b) / std::max(a, 1e-300));
      }
    const double at0 = psi(model, Vec::Zero(d));
    add("symmetry", worst == 0.0 && at0 == 0.0, worst, "Psi(xi) = Psi(-xi), Psi(0) = 0");
  });
  if (model.closed_form().kind == ClosedForm::Kind::Stable ||
      model.closed_form().kind == ClosedForm::Kind::Relativistic) {
    guarded("closed_form_consistency", [&] {
      double worst = 0.0;
      for (double s : {1e-2, 0.3, 1.0, 3.0, 1e2}) {
        const Vec xi = s * Vec::Unit(d, 0);
        const double a = psi(model, xi), b = psi_quadrature(model, xi);
        worst = std::max(worst, std::abs(a - b) / a);
      }
      add("closed_form_consistency", worst <= 1e-6, worst, "max relative gap closed form vs quadrature");
    });
  }
  guarded("ujs", [&] {
    const double c = ujs_constant(model, opt);
    add("ujs", std::isfinite(c) && c > 0.0, c, "sup J(y) r^d / int_{B(y,r)} J, r <= |y|/2");
  });
  guarded("comp", [&] {
    const auto w = comp_witness(model, opt.r_min, opt.r_max, opt.per_decade);
    add("comp", std::isfinite(w.constant), w.constant, "sup Psi*/Psi1* at r = " + fmt(w.at_r));
  });
  return rep;
}

}  // namespace levyheat
