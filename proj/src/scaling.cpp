#include "levyheat/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "levyheat/errors.hpp"

namespace levyheat {

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> out;
  if (n <= 1) {
    out.push_back(lo);
    return out;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < n; ++i) out.push_back(std::exp(a + (b - a) * i / (n - 1)));
  out.front() = lo;
  out.back() = hi;
  return out;
}

std::vector<double> log_grid_per_decade(double lo, double hi, int per_decade) {
  const int n = static_cast<int>(std::lround(std::log10(hi / lo) * per_decade)) + 1;
  return log_grid(lo, hi, n);
}

std::vector<Vec> direction_net(int dim, int min_dirs) {
  std::vector<Vec> net;
  if (dim == 1) {
    net.push_back(Vec::Ones(1));
    return net;
  }
  if (dim == 2) {
    // Half circle is enough: Psi is even.
    const int n = std::max(4, min_dirs + (min_dirs % 2));
    for (int k = 0; k < n; ++k) {
      const double th = std::numbers::pi * k / n;
      Vec u(2);
      u << std::cos(th), std::sin(th);
      net.push_back(u);
    }
    return net;
  }
  if (dim == 3) {
    for (int i = 0; i < 3; ++i) net.push_back(Vec::Unit(3, i));
    const int n = std::max(8, min_dirs);
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < n; ++k) {
      const double z = 1.0 - (k + 0.5) / n;  // upper hemisphere, z in (0, 1)
      const double rad = std::sqrt(1.0 - z * z);
      Vec u(3);
      u << rad * std::cos(golden * k), rad * std::sin(golden * k), z;
      net.push_back(u);
    }
    return net;
  }
  for (int i = 0; i < dim; ++i) net.push_back(Vec::Unit(dim, i));
  // Diagonals up to sign (half of them suffice by symmetry).
  const int count = 1 << (dim - 1);
  for (int mask = 0; mask < count; ++mask) {
    Vec u(dim);
    for (int i = 0; i < dim; ++i) u[i] = ((mask >> i) & 1) ? -1.0 : 1.0;
    net.push_back(u / std::sqrt(static_cast<double>(dim)));
  }
  return net;
}

namespace {

bool jump_isotropic(const LevyModel& m) {
  return m.kernel_profile() != KernelProfile::DiagonalAnisotropic || m.isotropic();
}

// Psi along the fastest-growing radial profile when the sup over the ball is
// attained on a single direction for every radius.
double radial_full(const LevyModel& m, double s) {
  return m.gaussian_norm() * s * s + psi_jump_radial_fast(m, s);
}

template <class F>
double scan_max(const F& f, double r) {
  if (r <= 0.0) return 0.0;
  double best = f(r);
  for (double s : log_grid(r * 1e-8, r, 401)) best = std::max(best, f(s));
  return best;
}

}  // namespace

double psi_coordinate(const LevyModel& model, double s) {
  Vec e = Vec::Unit(model.dim(), model.dim() - 1) * s;
  return psi_fast(model, e);
}

double psi_star(const LevyModel& model, double r) {
  if (jump_isotropic(model)) return scan_max([&](double s) { return radial_full(model, s); }, r);
  double best = 0.0;
  for (const Vec& u : direction_net(model.dim()))
    best = std::max(best, scan_max([&](double s) { return psi_fast(model, (s * u).eval()); }, r));
  return best;
}

double psi1_star(const LevyModel& model, double r) {
  return scan_max([&](double s) { return psi_coordinate(model, s); }, r);
}

// ---------------------------------------------------------------------------

ScaleFunction::ScaleFunction(LevyModel model, Variant variant)
    : ScaleFunction(std::move(model), variant, Options{}) {}

ScaleFunction::ScaleFunction(LevyModel model, Variant variant, Options opt)
    : model_(std::move(model)), variant_(variant), opt_(opt) {
  if (!(opt_.r_min > 0.0) || !(opt_.r_max > opt_.r_min) || opt_.per_decade < 1)
    throw ConfigError("scale function: invalid table range");
  if (!(opt_.inverse_tolerance > 0.0)) throw ConfigError("scale function: tolerance must be > 0");
  if (!model_.has_jumps() && !model_.has_gaussian())
    throw ConfigError("scale function: model has neither jumps nor a Gaussian part");
  const auto kind = model_.closed_form().kind;
  const bool closed_jump = kind == ClosedForm::Kind::Stable || kind == ClosedForm::Kind::Relativistic;
  if (!model_.has_jumps()) {
    closed_tag_ = "brownian";
  } else if (closed_jump) {
    closed_tag_ = kind == ClosedForm::Kind::Stable ? "stable" : "relativistic";
    if (model_.has_gaussian()) closed_tag_ = "gaussian+" + closed_tag_;
  }
  radial_ = variant_ == Variant::Coordinate || jump_isotropic(model_);
  if (!radial_) net_ = direction_net(model_.dim(), opt_.net_size);
}

double ScaleFunction::raw_psi(double s, const Vec& direction) const {
  if (variant_ == Variant::Coordinate) return psi_coordinate(model_, s);
  // Direct quadrature: the table needs far fewer radii than the shared cache holds.
  if (radial_) return model_.gaussian_norm() * s * s + psi_jump_radial(model_, s);
  return psi_fast(model_, (s * direction).eval());
}

// Closed jump parts (stable, relativistic) are increasing in |xi|, so the sup
// over the ball sits on the boundary along the largest Gaussian direction.
double ScaleFunction::closed_psi_star(double s) const {
  const double g = variant_ == Variant::Coordinate
                       ? model_.gaussian().A(model_.dim() - 1, model_.dim() - 1)
                       : model_.gaussian_norm();
  return g * s * s + psi_jump_radial(model_, s);
}

std::shared_ptr<const ScaleFunction::Table> ScaleFunction::build(double r_min, double r_max) const {
  auto t = std::make_shared<Table>();
  const auto rs = log_grid_per_decade(r_min, r_max, opt_.per_decade);
  const int n = static_cast<int>(rs.size());
  t->log_r_min = std::log(rs.front());
  t->log_r_max = std::log(rs.back());
  t->h = (t->log_r_max - t->log_r_min) / (n - 1);
  t->log_phi.assign(n, 0.0);
  // Ascending in s = 1/r, running maximum gives Psi*.
  double running = 0.0;
  for (int i = n - 1; i >= 0; --i) {
    const double s = std::exp(-(t->log_r_min + i * t->h));
    double v = 0.0;
    if (radial_) {
      v = raw_psi(s, Vec());
    } else {
      for (const Vec& u : net_) v = std::max(v, raw_psi(s, u));
    }
    running = std::max(running, v);
    if (!(running > 0.0) || !std::isfinite(running))
      throw NumericalError("scale function: Psi* is not positive and finite at s = " +
                           std::to_string(s));
    t->log_phi[i] = -std::log(running);
  }
  return t;
}

std::shared_ptr<const ScaleFunction::Table> ScaleFunction::table_for(double r) const {
  std::lock_guard<std::mutex> lock(mutex_);
  if (!table_) table_ = build(opt_.r_min, opt_.r_max);
  const double lr = std::log(r);
  if (lr < table_->log_r_min - 1e-12 || lr > table_->log_r_max + 1e-12) {
    if (!(r > 0.0) || !std::isfinite(r)) throw DomainError("scale function: r must be positive and finite");
    // Extend by whole decades on the side that is short, keeping the spacing.
    double lo = std::exp(table_->log_r_min), hi = std::exp(table_->log_r_max);
    while (r < lo) lo /= 1e3;
    while (r > hi) hi *= 1e3;
    if (lo < 1e-300 || hi > 1e300) throw NumericalError("scale function: cannot extend table to r");
    table_ = build(lo, hi);
  }
  return table_;
}

double ScaleFunction::psi_star(double s) const {
  if (s <= 0.0) return 0.0;
  return 1.0 / phi(1.0 / s);
}

double ScaleFunction::phi(double r) const {
  if (r <= 0.0) return 0.0;
  if (std::isinf(r)) return kInf;
  if (!closed_tag_.empty()) {
    if (closed_tag_ == "stable") return std::pow(r, model_.closed_form().alpha) / model_.stable_psi_constant();
    return 1.0 / closed_psi_star(1.0 / r);
  }
  const auto t = table_for(r);
  const double x = (std::log(r) - t->log_r_min) / t->h;
  const int n = static_cast<int>(t->log_phi.size());
  int i = std::clamp(static_cast<int>(std::floor(x)), 0, n - 2);
  const double w = std::clamp(x - i, 0.0, 1.0);
  return std::exp((1.0 - w) * t->log_phi[i] + w * t->log_phi[i + 1]);
}

double ScaleFunction::phi_inv(double t) const {
  if (!(t > 0.0)) throw DomainError("phi_inv: t must be > 0");
  if (closed_tag_ == "stable") {
    const double a = model_.closed_form().alpha;
    return std::pow(t * model_.stable_psi_constant(), 1.0 / a);
  }
  if (closed_tag_ == "brownian") {
    const double g = variant_ == Variant::Coordinate
                         ? model_.gaussian().A(model_.dim() - 1, model_.dim() - 1)
                         : model_.gaussian_norm();
    return std::sqrt(g * t);
  }
  double lo = 1.0, hi = 1.0;
  int guard = 0;
  while (phi(lo) > t) {
    lo /= 10.0;
    if (++guard > 600) throw NumericalError("phi_inv: failed to bracket t = " + std::to_string(t));
  }
  while (phi(hi) <= t) {
    hi *= 10.0;
    if (++guard > 600) throw NumericalError("phi_inv: failed to bracket t = " + std::to_string(t));
  }
  const double tol = opt_.inverse_tolerance / 4.0;
  while (hi / lo - 1.0 > tol) {
    const double mid = std::sqrt(lo * hi);
    if (phi(mid) > t)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

std::vector<ScaleFunction::Row> ScaleFunction::table_rows() const {
  std::vector<Row> rows;
  for (double r : log_grid_per_decade(opt_.r_min, opt_.r_max, opt_.per_decade)) {
    const double p = phi(r);
    const double back = phi_inv(p);
    rows.push_back({r, p, std::abs(back - r) / r});
  }
  return rows;
}

void ScaleFunction::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  out << "r,phi,phi_inv_roundtrip_err\n" << std::setprecision(17);
  for (const auto& row : table_rows()) out << row.r << ',' << row.phi << ',' << row.roundtrip_err << '\n';
}

// ---------------------------------------------------------------------------

ScalingCheck check_scaling_inequality(const ScaleFunction& sf, const std::vector<double>& ts,
                                      const std::vector<double>& lambdas) {
  ScalingCheck out;
  double worst = -kInf;
  for (double t : ts) {
    const double base = sf.phi(t);
    for (double lam : lambdas) {
      const double ratio = sf.phi(lam * t) / base;
      const double bound = 2.0 * (1.0 + lam * lam);
      ++out.points;
      out.min_ratio = std::min(out.min_ratio, ratio);
      out.max_excess = std::max(out.max_excess, ratio / bound);
      if (ratio < 1.0 || ratio > bound) out.pass = false;
      const double badness = std::max(1.0 - ratio, ratio / bound - 1.0);
      if (badness > worst) {
        worst = badness;
        std::ostringstream s;
        s << "t=" << t << " lambda=" << lam << " ratio=" << ratio;
        out.worst = s.str();
      }
    }
  }
  return out;
}

AsymptoticReport check_L51(const ScaleFunction& sf, double r_lo, double r_hi, int per_decade) {
  const LevyModel& m = sf.model();
  AsymptoticReport rep;
  const bool has_poly = m.poly().has_value();
  const bool small_quadratic = !has_poly || m.gaussian().a0 > 0.0;
  const bool large_quadratic = !has_poly || m.beta() > 0.0;
  rep.small_reference = small_quadratic ? "r^2" : "phi1";
  rep.large_reference = large_quadratic ? "r^2" : "phi1";
  auto ref = [&](double r, bool quadratic) { return quadratic ? r * r : (*m.poly())(r); };
  auto span = [&](double a, double b, bool quadratic, double& mn, double& mx) {
    mn = kInf;
    mx = 0.0;
    for (double r : log_grid_per_decade(a, b, per_decade)) {
      const double q = sf.phi(r) / ref(r, quadratic);
      mn = std::min(mn, q);
      mx = std::max(mx, q);
    }
  };
  span(r_lo, 1.0, small_quadratic, rep.small_min, rep.small_max);
  span(1.0, r_hi, large_quadratic, rep.large_min, rep.large_max);
  // Comparability on a finite grid: ratios finite, positive and within a
  // fixed spread so that polynomial drift across the grid is caught.
  constexpr double kSpread = 100.0;
  auto ok = [&](double mn, double mx) {
    return mn > 0.0 && std::isfinite(mx) && mx / mn <= kSpread;
  };
  rep.pass = ok(rep.small_min, rep.small_max) && ok(rep.large_min, rep.large_max);
  return rep;
}

double pruitt_middle(const LevyModel& model, double r) {
  double v = model.gaussian_norm() / (r * r);
  if (!model.has_jumps()) return v;
  auto iso = [&](double rr) { return levy_second_moment(model, rr) / (rr * rr) + levy_tail_mass(model, rr); };
  if (model.kernel_profile() != KernelProfile::DiagonalAnisotropic) return v + iso(r);
  // J(z) = j(|Dz|): average the isotropic quantity over directions.
  const Vec inv = model.anisotropy().cwiseInverse();
  const auto net = direction_net(model.dim(), 64);
  double acc = 0.0;
  for (const Vec& u : net) acc += iso(r / u.cwiseProduct(inv).norm());
  return v + acc / net.size();
}

PruittCheck check_pruitt(const ScaleFunction& sf, const std::vector<double>& rs) {
  PruittCheck out;
  const double upper = 8.0 * (1.0 + 2.0 * sf.model().dim());
  for (double r : rs) {
    const double m = pruitt_middle(sf.model(), r);
    const double phi = sf.phi(r);
    ++out.points;
    out.min_lower_margin = std::min(out.min_lower_margin, 2.0 * m * phi);
    out.max_upper_ratio = std::max(out.max_upper_ratio, m * phi / upper);
    if (2.0 * m * phi < 1.0 || m * phi > upper) out.pass = false;
  }
  return out;
}

CompWitness comp_witness(const LevyModel& model, double r_min, double r_max, int per_decade) {
  ScaleFunction::Options opt;
  opt.r_min = std::min(1e-6, 1.0 / r_max);
  opt.r_max = std::max(1e6, 1.0 / r_min);
  ScaleFunction full(model, ScaleFunction::Variant::Full, opt);
  ScaleFunction coord(model, ScaleFunction::Variant::Coordinate, opt);
  CompWitness w;
  for (double r : log_grid_per_decade(r_min, r_max, per_decade)) {
    const double q = full.psi_star(r) / coord.psi_star(r);
    if (q > w.constant) {
      w.constant = q;
      w.at_r = r;
    }
  }
  return w;
}

}  // namespace levyheat
