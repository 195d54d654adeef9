#include "levyheat/model.hpp"

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/interpolators/cardinal_quintic_b_spline.hpp>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <sstream>

#include "levyheat/errors.hpp"
#include "levyheat/quadrature.hpp"

namespace levyheat {

using std::numbers::pi;

// ---------------------------------------------------------------------------
// phi1 / psi1

PolyScale PolyScale::power(double alpha) {
  PolyScale p;
  p.profile = Profile::Power;
  p.alpha_small = p.alpha_large = alpha;
  return p;
}

PolyScale PolyScale::piecewise(double alpha_small, double alpha_large) {
  PolyScale p;
  p.profile = Profile::PiecewisePower;
  p.alpha_small = alpha_small;
  p.alpha_large = alpha_large;
  return p;
}

double PolyScale::operator()(double r) const {
  if (r <= 0.0) return 0.0;
  return r <= 1.0 ? std::pow(r, alpha_small) : std::pow(r, alpha_large);
}

double ExpDamp::operator()(double r) const {
  if (r <= 1.0) return 1.0;
  if (truncated()) return kInf;
  if (beta == 0.0) return 1.0;
  return std::exp(gamma1 * (std::pow(r, beta) - 1.0));
}

// ---------------------------------------------------------------------------
// sphere averages

double sphere_area(int dim) {
  const double h = 0.5 * dim;
  return 2.0 * std::pow(pi, h) / std::tgamma(h);
}

double stable_constant(int dim, double alpha) {
  return std::pow(pi, 0.5 * dim) * std::abs(std::tgamma(-0.5 * alpha)) /
         (std::pow(2.0, alpha) * std::tgamma(0.5 * (dim + alpha)));
}

namespace {

// 1 - Lambda_d(s) as a power series; alternating, fine for s < 2.
double one_minus_lambda_series(int dim, double s) {
  const double h = 0.5 * dim;
  const double q = 0.25 * s * s;
  double term = 1.0;  // (s/2)^{2k} / (k! (h)_k), built incrementally
  double sum = 0.0;
  for (int k = 1; k < 60; ++k) {
    term *= q / (k * (h + k - 1));
    const double signed_term = (k % 2 == 1) ? term : -term;
    sum += signed_term;
    if (term < 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

}  // namespace

double sphere_cos_average(int dim, double s) {
  s = std::abs(s);
  if (dim == 1) return std::cos(s);
  if (s < 1.0) return 1.0 - one_minus_lambda_series(dim, s);
  if (dim == 3) return std::sin(s) / s;
  const double nu = 0.5 * dim - 1.0;
  return std::tgamma(0.5 * dim) * std::pow(2.0 / s, nu) * std::cyl_bessel_j(nu, s);
}

double one_minus_sphere_cos_average(int dim, double s) {
  s = std::abs(s);
  if (dim == 1) {
    const double h = std::sin(0.5 * s);
    return 2.0 * h * h;
  }
  if (s < 1.0) return one_minus_lambda_series(dim, s);
  return 1.0 - sphere_cos_average(dim, s);
}

double sphere_cos_average_zero(int dim, int k) {
  if (dim == 1) return (k - 0.5) * pi;
  if (dim == 3) return k * pi;
  return boost::math::cyl_bessel_j_zero(0.5 * dim - 1.0, k);
}

// ---------------------------------------------------------------------------
// LevyModel

struct LevyModel::Caches {
  std::once_flag psi_once;
  // log Psi_J against log s on a uniform grid, cubic B-spline
  std::unique_ptr<boost::math::interpolators::cardinal_quintic_b_spline<double>> psi_spline;
  double log_s_min = 0.0, log_s_max = 0.0;
  double slope_lo = 2.0, slope_hi = 1.0;
  double log_psi_lo = 0.0, log_psi_hi = 0.0;
};

LevyModel::LevyModel(std::string name, int dim, GaussianPart gaussian,
                     std::optional<PolyScale> poly, ExpDamp damp, double kappa1, double kappa2,
                     double comparability_gamma, double normalization, Vec anisotropy,
                     ClosedForm closed_form)
    : name_(std::move(name)),
      dim_(dim),
      gaussian_(std::move(gaussian)),
      poly_(poly),
      damp_(damp),
      kappa1_(kappa1),
      kappa2_(kappa2),
      comparability_gamma_(comparability_gamma),
      normalization_(normalization),
      anisotropy_(std::move(anisotropy)),
      closed_(closed_form),
      caches_(std::make_shared<Caches>()) {
  if (dim_ < 1) throw ConfigError("dim: must be >= 1");
  if (gaussian_.A.size() == 0) gaussian_.A = gaussian_.a0 * Mat::Identity(dim_, dim_);
  if (gaussian_.A.rows() != dim_ || gaussian_.A.cols() != dim_)
    throw ConfigError("A: must be a dim x dim matrix");
  if ((gaussian_.A - gaussian_.A.transpose()).norm() > 1e-12 * (1.0 + gaussian_.A.norm()))
    throw ConfigError("A: must be symmetric");
  if (gaussian_.a0 < 0.0) throw ConfigError("a0: must be >= 0");
  if (gaussian_.gamma < 1.0) throw ConfigError("gamma: must be >= 1");
  Eigen::SelfAdjointEigenSolver<Mat> eig(gaussian_.A);
  if (eig.eigenvalues().minCoeff() < -1e-12 * (1.0 + gaussian_.A.norm()))
    throw ConfigError("A: must be non-negative definite");
  gaussian_norm_ = std::max(0.0, eig.eigenvalues().maxCoeff());

  if (closed_.kind == ClosedForm::Kind::Brownian && poly_)
    throw ConfigError("closed_form: brownian model cannot declare phi1");
  if (poly_) {
    if (!(poly_->beta1() > 0.0) || !(poly_->beta2() < 2.0))
      throw ConfigError("phi1: exponents must lie in (0, 2)");
    if (!(normalization_ > 0.0)) throw ConfigError("normalization: must be > 0");
    if (!(kappa1_ > 0.0) || !(kappa2_ > 0.0)) throw ConfigError("kappa1/kappa2: must be > 0");
    if (damp_.beta < 0.0) throw ConfigError("psi1.beta: must be >= 0");
    if (!(damp_.gamma1 > 0.0) || damp_.gamma2 < damp_.gamma1)
      throw ConfigError("psi1: need 0 < gamma1 <= gamma2");
    if (!(damp_.a1 > 0.0) || damp_.a2 < damp_.a1) throw ConfigError("psi1: need 0 < a1 <= a2");
    kernel_ = anisotropy_.size() > 0 ? KernelProfile::DiagonalAnisotropic
                                     : KernelProfile::CanonicalIsotropic;
  } else {
    kernel_ = KernelProfile::None;
  }
  if (kernel_ == KernelProfile::DiagonalAnisotropic) {
    if (anisotropy_.size() != dim_) throw ConfigError("anisotropy: needs dim entries");
    if (anisotropy_.minCoeff() <= 0.0) throw ConfigError("anisotropy: entries must be > 0");
  }
  if (closed_.kind == ClosedForm::Kind::Stable) {
    if (!poly_ || poly_->profile != PolyScale::Profile::Power ||
        std::abs(poly_->alpha_small - closed_.alpha) > 1e-14 || damp_.beta != 0.0 ||
        kernel_ != KernelProfile::CanonicalIsotropic)
      throw ConfigError(
          "closed_form: stable requires an isotropic power phi1 with the same alpha and beta = 0");
  }
  if (closed_.kind == ClosedForm::Kind::Relativistic) {
    if (!poly_ || kernel_ != KernelProfile::CanonicalIsotropic)
      throw ConfigError("closed_form: relativistic requires an isotropic jump declaration");
    if (!(closed_.alpha > 0.0 && closed_.alpha < 2.0) || !(closed_.mass > 0.0))
      throw ConfigError("closed_form: relativistic needs alpha in (0,2) and mass > 0");
  }
}

LevyModel LevyModel::brownian(int dim, double a0) {
  GaussianPart g{a0, a0 * Mat::Identity(dim, dim), 1.0};
  return LevyModel("brownian", dim, g, std::nullopt, ExpDamp{}, 1.0, 1.0, 1.0, 1.0, Vec(),
                   ClosedForm{ClosedForm::Kind::Brownian, 2.0, 0.0});
}

LevyModel LevyModel::isotropic_stable(int dim, double alpha) {
  GaussianPart g{0.0, Mat::Zero(dim, dim), 1.0};
  ExpDamp damp;
  damp.beta = 0.0;
  const double norm = 1.0 / stable_constant(dim, alpha);
  return LevyModel("stable", dim, g, PolyScale::power(alpha), damp, 1.0, 1.0,
                   std::max(norm, 1.0 / norm) * (1.0 + 1e-12), norm, Vec(),
                   ClosedForm{ClosedForm::Kind::Stable, alpha, 0.0});
}

bool LevyModel::isotropic() const {
  if (kernel_ == KernelProfile::DiagonalAnisotropic &&
      (anisotropy_.maxCoeff() - anisotropy_.minCoeff()) > 1e-14 * anisotropy_.maxCoeff())
    return false;
  const Mat& A = gaussian_.A;
  const double mean = A.trace() / dim_;
  return (A - mean * Mat::Identity(dim_, dim_)).norm() <= 1e-14 * (1.0 + A.norm());
}

double LevyModel::truncation_radius() const {
  if (kernel_ == KernelProfile::None) return 0.0;
  if (closed_.kind == ClosedForm::Kind::Relativistic) return kInf;
  return damp_.truncated() ? 1.0 / kappa1_ : kInf;
}

double LevyModel::stable_psi_constant() const {
  if (closed_.kind != ClosedForm::Kind::Stable) return 0.0;
  return normalization_ * stable_constant(dim_, closed_.alpha);
}

double LevyModel::canonical_profile(double r, double kappa) const {
  if (!poly_ || r <= 0.0) return 0.0;
  const double damping = damp_(kappa * r);
  if (std::isinf(damping)) return 0.0;
  return 1.0 / (std::pow(r, dim_) * (*poly_)(r) * damping);
}

double LevyModel::radial_jump(double r) const {
  if (kernel_ == KernelProfile::None || r <= 0.0) return 0.0;
  if (closed_.kind == ClosedForm::Kind::Relativistic) {
    const double a = closed_.alpha, m = closed_.mass, d = dim_;
    const double nu = 0.5 * (d + a);
    const double z = std::pow(m, 1.0 / a) * r;
    if (z > 700.0) return 0.0;
    const double pref = a * std::pow(m, nu / a) /
                        (std::pow(2.0, 0.5 * (d - a)) * std::pow(pi, 0.5 * d) * std::tgamma(1.0 - 0.5 * a));
    return normalization_ * pref * std::cyl_bessel_k(nu, z) / std::pow(r, nu);
  }
  return normalization_ * canonical_profile(r, kappa1_);
}

// ---------------------------------------------------------------------------
// Radial Levy-measure integrals

namespace {

quad::Options tight() {
  quad::Options o;
  o.rel_tol = 1e-12;
  o.abs_tol = 1e-300;
  o.max_intervals = 4000;
  return o;
}

// Points where the radial profile has a kink (phi1 at 1, psi1 at 1/kappa).
std::vector<double> profile_breaks(const LevyModel& m) {
  std::vector<double> b;
  if (m.closed_form().kind == ClosedForm::Kind::Relativistic) return b;
  b.push_back(1.0);
  b.push_back(1.0 / m.kappa1());
  return b;
}

// int_lo^hi f(rho) drho via rho = e^u, splitting at breakpoints.
template <class F>
double integrate_log(const F& f, double lo, double hi, const std::vector<double>& breaks) {
  if (!(hi > lo)) return 0.0;
  std::vector<double> pts{lo};
  for (double b : breaks)
    if (b > lo && b < hi) pts.push_back(b);
  pts.push_back(hi);
  std::sort(pts.begin(), pts.end());
  auto g = [&](double u) {
    const double rho = std::exp(u);
    return f(rho) * rho;
  };
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    total += quad::integrate(g, std::log(pts[i]), std::log(pts[i + 1]), tight()).value;
  return total;
}

// Local log-log slope of a positive function at x.
template <class F>
double local_exponent(const F& f, double x) {
  const double a = f(x), b = f(0.5 * x);
  if (!(a > 0.0) || !(b > 0.0)) return -kInf;
  return std::log(a / b) / std::log(2.0);
}

constexpr double kDecadesBelow = 10.0;  // log-integration span before the power-law remainder
constexpr double kDecadesAbove = 10.0;

}  // namespace

namespace {

double aniso_factor(const LevyModel& model) {
  return model.kernel_profile() == KernelProfile::DiagonalAnisotropic
             ? 1.0 / model.anisotropy().prod()
             : 1.0;
}

// int_{rho >= eps} g(rho) drho for the isotropic profile.
double radial_tail_mass(const LevyModel& model, double eps) {
  const int d = model.dim();
  const double area = sphere_area(d);
  auto g = [&](double rho) { return area * model.radial_jump(rho) * std::pow(rho, d - 1); };
  const double R = model.truncation_radius();
  if (eps >= R) return 0.0;
  const double hi = std::min(R, eps * std::pow(10.0, kDecadesAbove));
  double total = integrate_log(g, eps, hi, profile_breaks(model));
  if (hi < R) {
    const double e = local_exponent(g, hi);
    if (e >= -1.0) throw NumericalError("Levy measure tail is not integrable");
    if (std::isfinite(e)) total += hi * g(hi) / (-1.0 - e);
  }
  return total;
}

// int_{rho < eps} rho^2 g(rho) drho for the isotropic profile.
double radial_second_moment(const LevyModel& model, double eps) {
  const int d = model.dim();
  const double area = sphere_area(d);
  auto g2 = [&](double rho) { return area * model.radial_jump(rho) * std::pow(rho, d + 1); };
  const double hi = std::min(eps, model.truncation_radius());
  const double lo = hi * std::pow(10.0, -kDecadesBelow);
  double total = integrate_log(g2, lo, hi, profile_breaks(model));
  const double e = local_exponent(g2, lo);
  if (e <= -1.0) throw NumericalError("second moment of the Levy measure diverges at the origin");
  total += lo * g2(lo) / (1.0 + e);
  return total;
}

}  // namespace

double levy_tail_mass(const LevyModel& model, double eps) {
  if (!model.has_jumps()) return 0.0;
  return aniso_factor(model) * radial_tail_mass(model, eps);
}

double levy_second_moment(const LevyModel& model, double eps) {
  if (!model.has_jumps()) return 0.0;
  return aniso_factor(model) * radial_second_moment(model, eps);
}

double levy_integrability(const LevyModel& model) {
  return levy_second_moment(model, 1.0) + levy_tail_mass(model, 1.0);
}

// ---------------------------------------------------------------------------
// Psi

namespace {

double psi_jump_radial_quadrature(const LevyModel& model, double s, double* abs_err) {
  if (s <= 0.0 || !model.has_jumps()) return 0.0;
  const int d = model.dim();
  const double area = sphere_area(d);
  auto g = [&](double rho) { return area * model.radial_jump(rho) * std::pow(rho, d - 1); };
  const double R = model.truncation_radius();
  const double rc = std::min(1.0 / s, R);
  const auto breaks = profile_breaks(model);

  // |xi| |y| <= 1 part: 1 - Lambda <= (s rho)^2 / (2d) near the origin, the
  // remainder below lo is taken from the local power law of rho^2 g.
  auto inner_f = [&](double rho) { return one_minus_sphere_cos_average(d, s * rho) * g(rho); };
  // Anchored at min(rc, 1) so the remainder stays in the power-law regime.
  const double lo = std::min(rc, 1.0) * std::pow(10.0, -kDecadesBelow);
  double inner = integrate_log(inner_f, lo, rc, breaks);
  auto g2 = [&](double rho) { return rho * rho * g(rho); };
  const double e = local_exponent(g2, lo);
  if (e <= -1.0) throw NumericalError("Levy exponent integral diverges at the origin");
  inner += s * s / (2.0 * d) * lo * g2(lo) / (1.0 + e);

  double outer = 0.0;
  double err = 0.0;
  if (1.0 / s < R) {
    // Lambda_d part over [1/s, R), partitioned at kernel zeros.
    const double tail = radial_tail_mass(model, 1.0 / s);
    quad::PartitionOptions po;
    po.inner = tight();
    po.rel_tol = 1e-12;
    po.abs_tol = 1e-16 * (tail + inner);
    po.max_pieces = 100000;
    po.accelerate_after = 12;
    po.confirmations = 3;
    // int_a^end Lambda(s rho) f(rho) drho, pieces between kernel zeros and profile kinks.
    auto oscillatory = [&](auto&& f, double a, double end, bool kinks = true) {
      auto osc = [&](double rho) { return sphere_cos_average(d, s * rho) * f(rho); };
      std::vector<double> extra;
      for (double b : breaks)
        if (kinks && b > a && b < end) extra.push_back(b);
      std::sort(extra.begin(), extra.end());
      auto opts = po;
      if (!extra.empty()) opts.accelerate_from = extra.back();
      // Asymptotic zero index (McMahon) as a starting guess, then adjust.
      const double nu = 0.5 * d - 1.0;
      int zi = std::max(1, static_cast<int>(std::floor(a * s / std::numbers::pi + 0.25 - 0.5 * nu)) - 1);
      while (zi > 1 && sphere_cos_average_zero(d, zi - 1) / s > a) --zi;
      while (sphere_cos_average_zero(d, zi) / s <= a) ++zi;
      std::size_t ei = 0;
      auto next_break = [&](std::size_t) {
        const double z = sphere_cos_average_zero(d, zi) / s;
        if (ei < extra.size() && extra[ei] < z) return extra[ei++];
        ++zi;
        return z;
      };
      return quad::integrate_partitioned(osc, next_break, a, end, opts);
    };
    // Segments between profile kinks. Long segments use the analytic
    // continuation of the segment's branch: [a, b) = [a, inf) - [b, inf).
    std::vector<double> pts{1.0 / s};
    for (double b : breaks)
      if (b > pts.back() && b < R) pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    pts.push_back(R);
    const auto& poly = *model.poly();
    const auto& damp = model.damp();
    quad::Result res;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const double a = pts[i], b = pts[i + 1];
      quad::Result part;
      if (std::isinf(b) || s * (b - a) / std::numbers::pi < 400.0) {
        part = oscillatory(g, a, b);
      } else {
        const double ref = std::isinf(b) ? 2.0 * a : 0.5 * (a + b);
        const double expo = ref <= 1.0 ? poly.alpha_small : poly.alpha_large;
        const bool damped = model.kappa1() * ref > 1.0 && !damp.truncated() && damp.beta > 0.0;
        auto branch = [&](double rho) {
          double v = area * model.normalization() / (rho * std::pow(rho, expo));
          if (damped) v *= std::exp(-damp.gamma1 * (std::pow(model.kappa1() * rho, damp.beta) - 1.0));
          return v;
        };
        const auto head = oscillatory(branch, a, kInf, false);
        const auto beyond = oscillatory(branch, b, kInf, false);
        part.value = head.value - beyond.value;
        part.error = head.error + beyond.error;
      }
      res.value += part.value;
      res.error += part.error;
    }
    outer = tail - res.value;
    err = res.error;
  }
  if (abs_err) *abs_err = err + 1e-12 * std::abs(inner + outer);
  return inner + outer;
}

double closed_jump_psi(const LevyModel& model, double s) {
  const auto& cf = model.closed_form();
  switch (cf.kind) {
    case ClosedForm::Kind::Stable:
      return model.stable_psi_constant() * std::pow(s, cf.alpha);
    case ClosedForm::Kind::Relativistic: {
      const double m2 = std::pow(cf.mass, 2.0 / cf.alpha);
      // (s^2 + m2)^{a/2} - m written to avoid cancellation for small s
      const double full = std::pow(s * s + m2, 0.5 * cf.alpha);
      return model.normalization() * (s * s / m2 < 1e-6
                                          ? cf.mass * std::expm1(0.5 * cf.alpha * std::log1p(s * s / m2))
                                          : full - cf.mass);
    }
    default:
      return 0.0;
  }
}

bool jump_part_closed(const LevyModel& model) {
  const auto k = model.closed_form().kind;
  return k == ClosedForm::Kind::Stable || k == ClosedForm::Kind::Relativistic;
}

// |D^{-1} xi| and 1/det D for the anisotropic kernel.
std::pair<double, double> reduced_argument(const LevyModel& model, const Vec& xi) {
  if (model.kernel_profile() == KernelProfile::DiagonalAnisotropic) {
    const Vec& D = model.anisotropy();
    return {xi.cwiseQuotient(D).norm(), 1.0 / D.prod()};
  }
  return {xi.norm(), 1.0};
}

void check_dim(const LevyModel& model, const Vec& v) {
  if (v.size() != model.dim()) {
    std::ostringstream msg;
    msg << "vector of size " << v.size() << " given to a model of dimension " << model.dim();
    throw DomainError(msg.str());
  }
}

void build_psi_cache(const LevyModel& model, LevyModel::Caches& c) {
  constexpr double log_min = -8.0 * std::numbers::ln10, log_max = 8.0 * std::numbers::ln10;
  constexpr int per_decade = 100;
  const int n = 16 * per_decade + 1;
  const double h = (log_max - log_min) / (n - 1);
  std::vector<double> values(n);
  for (int i = 0; i < n; ++i) {
    const double s = std::exp(log_min + i * h);
    const double v = psi_jump_radial_quadrature(model, s, nullptr);
    if (!(v > 0.0)) throw NumericalError("radial Levy exponent is not positive on the cache grid");
    values[i] = std::log(v);
  }
  c.log_s_min = log_min;
  c.log_s_max = log_max;
  c.log_psi_lo = values.front();
  c.log_psi_hi = values.back();
  c.slope_lo = (values[1] - values[0]) / h;
  c.slope_hi = (values[n - 1] - values[n - 2]) / h;
  c.psi_spline = std::make_unique<boost::math::interpolators::cardinal_quintic_b_spline<double>>(
      values, log_min, h, std::pair{c.slope_lo, 0.0}, std::pair{c.slope_hi, 0.0});
}

}  // namespace

double psi_jump_radial(const LevyModel& model, double s) {
  if (s <= 0.0 || !model.has_jumps()) return 0.0;
  if (jump_part_closed(model)) return closed_jump_psi(model, s);
  return psi_jump_radial_quadrature(model, s, nullptr);
}

double psi_jump_radial_fast(const LevyModel& model, double s) {
  if (s <= 0.0 || !model.has_jumps()) return 0.0;
  if (jump_part_closed(model)) return closed_jump_psi(model, s);
  auto& c = *model.caches();
  std::call_once(c.psi_once, [&] { build_psi_cache(model, c); });
  const double ls = std::log(s);
  if (ls <= c.log_s_min) return std::exp(c.log_psi_lo + c.slope_lo * (ls - c.log_s_min));
  if (ls >= c.log_s_max) return std::exp(c.log_psi_hi + c.slope_hi * (ls - c.log_s_max));
  return std::exp((*c.psi_spline)(ls));
}

PsiValue psi_detailed(const LevyModel& model, const Vec& xi) {
  check_dim(model, xi);
  PsiValue out;
  out.value = xi.dot(model.gaussian().A * xi);
  if (!model.has_jumps()) {
    out.method = PsiValue::Method::Gaussian;
    return out;
  }
  const auto [s, mult] = reduced_argument(model, xi);
  if (jump_part_closed(model)) {
    out.method = PsiValue::Method::ClosedForm;
    out.value += mult * closed_jump_psi(model, s);
    return out;
  }
  double err = 0.0;
  out.method = PsiValue::Method::Quadrature;
  out.value += mult * psi_jump_radial_quadrature(model, s, &err);
  out.abs_error = mult * err;
  return out;
}

double psi(const LevyModel& model, const Vec& xi) { return psi_detailed(model, xi).value; }

double psi_quadrature(const LevyModel& model, const Vec& xi) {
  check_dim(model, xi);
  double v = xi.dot(model.gaussian().A * xi);
  if (!model.has_jumps()) return v;
  const auto [s, mult] = reduced_argument(model, xi);
  return v + mult * psi_jump_radial_quadrature(model, s, nullptr);
}

double psi_fast(const LevyModel& model, const Vec& xi) {
  double v = xi.dot(model.gaussian().A * xi);
  if (!model.has_jumps()) return v;
  const auto [s, mult] = reduced_argument(model, xi);
  return v + mult * psi_jump_radial_fast(model, s);
}

double jump_density(const LevyModel& model, const Vec& x) {
  check_dim(model, x);
  const double r = x.norm();
  if (r == 0.0) throw DomainError("jump_density: J is not defined at x = 0");
  if (model.kernel_profile() == KernelProfile::DiagonalAnisotropic)
    return model.radial_jump(x.cwiseProduct(model.anisotropy()).norm());
  return model.radial_jump(r);
}

// ---------------------------------------------------------------------------

bool ValidationReport::all_pass() const {
  return std::all_of(entries.begin(), entries.end(), [](const CheckEntry& e) { return e.pass; });
}

const CheckEntry* ValidationReport::find(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return &e;
  return nullptr;
}

}  // namespace levyheat
