#include "levyheat/density.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "levyheat/errors.hpp"
#include "levyheat/quadrature.hpp"

namespace levyheat {

using std::numbers::pi;

std::string to_string(InversionMethod m) {
  switch (m) {
    case InversionMethod::ClosedForm:
      return "closed-form";
    case InversionMethod::RadialBessel:
      return "radial-bessel";
    case InversionMethod::GridFFT:
      return "grid-fft";
  }
  return "?";
}

namespace {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

bool cauchy_closed(const LevyModel& m) {
  return m.closed_form().kind == ClosedForm::Kind::Stable && m.closed_form().alpha == 1.0 && !m.has_gaussian();
}

// Catmull-Rom weights at fractional offset u in [0, 1].
std::array<double, 4> catmull_rom(double u) {
  const double u2 = u * u, u3 = u2 * u;
  return {-0.5 * u3 + u2 - 0.5 * u, 1.5 * u3 - 2.5 * u2 + 1.0, -1.5 * u3 + 2.0 * u2 + 0.5 * u,
          0.5 * u3 - 0.5 * u2};
}

std::string num(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

}  // namespace

struct DensityEvaluator::Grid {
  double t = 0.0, h = 0.0;
  int n = 0;
  std::vector<double> v;  // row-major, x = (j - n/2) h
};

DensityEvaluator::DensityEvaluator(LevyModel model, DensityOptions opt)
    : model_(std::move(model)),
      opt_(opt),
      clamped_(std::make_shared<std::atomic<long>>(0)),
      grid_mutex_(std::make_shared<std::mutex>()),
      grids_(std::make_shared<std::map<double, std::shared_ptr<const Grid>>>()) {
  scale_ = std::make_shared<ScaleFunction>(model_, ScaleFunction::Variant::Full);
  const bool iso = model_.isotropic();
  if (!model_.has_jumps()) {
    Eigen::SelfAdjointEigenSolver<Mat> eig(model_.gaussian().A);
    if (eig.eigenvalues().minCoeff() <= 0.0)
      throw ConfigError("density: degenerate Gaussian part has no transition density");
    method_ = InversionMethod::ClosedForm;
  } else if (cauchy_closed(model_) && !opt_.force_radial) {
    method_ = InversionMethod::ClosedForm;
  } else if (iso) {
    method_ = InversionMethod::RadialBessel;
    radial_a_ = model_.gaussian().A(0, 0);
  } else if (model_.dim() <= 2) {
    method_ = InversionMethod::GridFFT;
  } else {
    throw ConfigError("density: anisotropic models are supported for d <= 2 only");
  }
  if (opt_.force_radial && !iso) throw ConfigError("density: radial inversion needs an isotropic model");
}

double free_density(const DensityEvaluator& ev, double t, const Vec& x) { return ev(t, x); }

double DensityEvaluator::finish(double v, double t) const {
  if (v >= 0.0) return v;
  // Round-off below the on-diagonal scale Phi^{-1}(t)^{-d}.
  if (v > -1e-9 * std::pow(scale_->phi_inv(t), -model_.dim())) {
    clamped_->fetch_add(1);
    return 0.0;
  }
  throw NumericalError("density: inversion returned " + num(v) + " at t = " + num(t));
}

double DensityEvaluator::operator()(double t, const Vec& x) const {
  if (!(t > 0.0)) throw DomainError("density: t must be > 0");
  if (x.size() != model_.dim()) throw DomainError("density: point has the wrong dimension");
  switch (method_) {
    case InversionMethod::ClosedForm:
      return closed(t, x);
    case InversionMethod::RadialBessel:
      return finish(radial_inversion(t, x.norm()), t);
    case InversionMethod::GridFFT:
      return finish(grid_value(t, x), t);
  }
  return 0.0;
}

double DensityEvaluator::radial(double t, double r) const {
  Vec x = Vec::Zero(model_.dim());
  x[0] = std::abs(r);
  if (method_ == InversionMethod::GridFFT) throw DomainError("density: radial() needs an isotropic model");
  return (*this)(t, x);
}

double DensityEvaluator::closed(double t, const Vec& x) const {
  const int d = model_.dim();
  if (!model_.has_jumps()) {
    const Mat& A = model_.gaussian().A;
    const double q = x.dot(A.ldlt().solve(x));
    return std::pow(4.0 * pi * t, -0.5 * d) / std::sqrt(A.determinant()) * std::exp(-q / (4.0 * t));
  }
  // Cauchy: Psi = c|xi|.
  const double ct = model_.stable_psi_constant() * t;
  const double r2 = x.squaredNorm();
  return std::tgamma(0.5 * (d + 1)) / std::pow(pi, 0.5 * (d + 1)) * ct / std::pow(ct * ct + r2, 0.5 * (d + 1));
}

double DensityEvaluator::rho_max(double t) const {
  auto psi_r = [&](double rho) {
    if (method_ == InversionMethod::GridFFT) {
      double lo = kInf;
      for (const Vec& u : direction_net(model_.dim(), 32)) lo = std::min(lo, psi_fast(model_, (rho * u).eval()));
      return lo;
    }
    return radial_a_ * rho * rho + psi_jump_radial_fast(model_, rho);
  };
  double rho = 1e-3;
  while (t * psi_r(rho) < opt_.cutoff) {
    rho *= 2.0;
    if (rho > 1e15)
      throw NumericalError("density: exp(-t Psi) is not integrable in practice at t = " + num(t) +
                           " (t Psi stays below the cutoff up to |xi| = 1e15)");
  }
  return rho;
}

double DensityEvaluator::radial_inversion(double t, double r) const {
  const int d = model_.dim();
  const double cd = sphere_area(d) / std::pow(2.0 * pi, d);
  const double cap = 2.0 * rho_max(t);
  auto amp = [&](double rho) {
    return std::exp(-t * (radial_a_ * rho * rho + psi_jump_radial_fast(model_, rho))) * std::pow(rho, d - 1);
  };
  auto f = [&](double rho) { return amp(rho) * sphere_cos_average(d, rho * r); };

  quad::Options inner;
  inner.rel_tol = 1e-11;
  inner.abs_tol = 0.1 * opt_.abs_tol / cd;
  inner.max_depth = opt_.max_depth;
  inner.max_intervals = 4000;

  // Non-oscillating head [0, b]: geometric pieces towards the origin.
  const double first_zero = r > 0.0 ? sphere_cos_average_zero(d, 1) / r : kInf;
  const double b = std::min(cap, first_zero);
  double head = 0.0;
  double hi = b;
  for (int k = 0; k < 60 && hi > b * 1e-13; ++k) {
    const double lo = 0.5 * hi;
    head += quad::integrate(f, lo, hi, inner).value;
    hi = lo;
  }
  head += std::pow(hi, d) / d;  // exp(-t Psi) Lambda ~ 1 on [0, hi]
  if (b >= cap) return cd * head;

  quad::PartitionOptions po;
  po.inner = inner;
  po.abs_tol = 0.1 * opt_.abs_tol / cd;
  po.rel_tol = 0.01 * opt_.rel_tol;
  po.accelerate_finite = true;
  po.accelerate_after = 16;
  po.confirmations = 3;
  po.max_pieces = 400000;
  int zi = 2;
  auto next = [&](std::size_t) { return sphere_cos_average_zero(d, zi++) / r; };
  const auto tail = quad::integrate_partitioned(f, next, b, cap, po);
  return cd * (head + tail.value);
}

// ---------------------------------------------------------------------------
// Grid FFT for anisotropic d <= 2

std::shared_ptr<const DensityEvaluator::Grid> DensityEvaluator::grid_for(double t) const {
  {
    std::lock_guard<std::mutex> lock(*grid_mutex_);
    auto it = grids_->find(t);
    if (it != grids_->end()) return it->second;
  }
  const int d = model_.dim();
  const double xi_max = rho_max(t) * 0.8;  // t Psi >= 0.4 cutoff in every direction
  const double half = opt_.fft_extent * scale_->phi_inv(t);
  double h = pi / xi_max;
  int n = 16;
  while (n * h < 2.0 * half && n < opt_.fft_max_n) n *= 2;
  h = std::max(h, 2.0 * half / n);
  const double dxi = 2.0 * pi / (n * h);
  const std::size_t total = d == 1 ? n : static_cast<std::size_t>(n) * n;
  fftw_complex* buf = fftw_alloc_complex(total);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    plan = d == 1 ? fftw_plan_dft_1d(n, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE)
                  : fftw_plan_dft_2d(n, n, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  Vec xi(d);
  for (std::size_t idx = 0; idx < total; ++idx) {
    const int k1 = static_cast<int>(idx / (d == 1 ? total : n));
    const int k2 = static_cast<int>(idx % n);
    if (d == 1)
      xi[0] = (k2 - n / 2) * dxi;
    else
      xi << (k1 - n / 2) * dxi, (k2 - n / 2) * dxi;
    const double sign = ((d == 1 ? k2 : k1 + k2) % 2 == 0) ? 1.0 : -1.0;
    buf[idx][0] = sign * std::exp(-t * psi_fast(model_, xi));
    buf[idx][1] = 0.0;
  }
  fftw_execute(plan);
  auto g = std::make_shared<Grid>();
  g->t = t;
  g->h = h;
  g->n = n;
  g->v.resize(total);
  const double scale = std::pow(dxi / (2.0 * pi), d);
  for (std::size_t idx = 0; idx < total; ++idx) {
    const int j1 = static_cast<int>(idx / (d == 1 ? total : n));
    const int j2 = static_cast<int>(idx % n);
    const double sign = ((d == 1 ? j2 : j1 + j2) % 2 == 0) ? 1.0 : -1.0;
    g->v[idx] = scale * sign * buf[idx][0];
  }
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(buf);
  std::lock_guard<std::mutex> lock(*grid_mutex_);
  auto [it, inserted] = grids_->emplace(t, g);
  return it->second;
}

double DensityEvaluator::grid_value(double t, const Vec& x) const {
  const auto g = grid_for(t);
  const int d = model_.dim();
  const int n = g->n;
  auto interp = [&](const Vec& p) {
    std::array<int, 2> base{0, 0};
    std::array<std::array<double, 4>, 2> w;
    for (int k = 0; k < d; ++k) {
      const double u = p[k] / g->h + n / 2;
      const int i = static_cast<int>(std::floor(u));
      if (i < 1 || i > n - 3)
        throw NumericalError("density: point outside the FFT grid at t = " + num(t));
      base[k] = i - 1;
      w[k] = catmull_rom(u - i);
    }
    double acc = 0.0;
    if (d == 1) {
      for (int a = 0; a < 4; ++a) acc += w[0][a] * g->v[base[0] + a];
      return acc;
    }
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) acc += w[0][a] * w[1][b] * g->v[(base[0] + a) * n + base[1] + b];
    return acc;
  };
  // Averaging x and -x keeps the result exactly even.
  return 0.5 * (interp(x) + interp((-x).eval()));
}

// ---------------------------------------------------------------------------

RadialDensityTable::RadialDensityTable(std::shared_ptr<const DensityEvaluator> ev, Options opt)
    : ev_(std::move(ev)), opt_(opt) {
  if (ev_->method() == InversionMethod::GridFFT)
    throw ConfigError("density table: radial lookups need an isotropic model");
  direct_ = ev_->method() == InversionMethod::ClosedForm;
  ls0_ = std::log(opt_.s_min);
  lr0_ = std::log(opt_.r_min);
  ns_ = static_cast<int>(std::ceil(std::log10(opt_.s_max / opt_.s_min) * opt_.s_per_decade)) + 1;
  nr_ = static_cast<int>(std::ceil(std::log10(opt_.r_max / opt_.r_min) * opt_.r_per_decade)) + 1;
  hs_ = std::log(10.0) / opt_.s_per_decade;
  hr_ = std::log(10.0) / opt_.r_per_decade;
  rows_.resize(ns_);
  once_ = std::make_unique<std::once_flag[]>(ns_);
}

const std::vector<double>& RadialDensityTable::row(int i) const {
  std::call_once(once_[i], [&] {
    const double s = std::exp(ls0_ + i * hs_);
    std::vector<double> v(nr_);
    for (int j = 0; j < nr_; ++j) {
      const double p = ev_->radial(s, std::exp(lr0_ + j * hr_));
      v[j] = std::log(std::max(p, 1e-300));
    }
    rows_[i] = std::move(v);
  });
  return rows_[i];
}

double RadialDensityTable::operator()(double s, double r) const {
  if (direct_) return ev_->radial(s, r);
  const double us = (std::log(s) - ls0_) / hs_;
  const double ur = (std::log(std::max(r, 1e-300)) - lr0_) / hr_;
  if (us < 0.0 || us > ns_ - 1 || ur < 0.0 || ur > nr_ - 1) return ev_->radial(s, r);
  const int is = std::min(static_cast<int>(us), ns_ - 2);
  const int ir = std::min(static_cast<int>(ur), nr_ - 2);
  const auto ws = catmull_rom(us - is);
  const auto wr = catmull_rom(ur - ir);
  double acc = 0.0;
  for (int a = 0; a < 4; ++a) {
    const auto& rw = row(std::clamp(is - 1 + a, 0, ns_ - 1));
    double racc = 0.0;
    for (int b = 0; b < 4; ++b) racc += wr[b] * rw[std::clamp(ir - 1 + b, 0, nr_ - 1)];
    acc += ws[a] * racc;
  }
  return std::exp(acc);
}

// ---------------------------------------------------------------------------
// Envelopes

double pc(int dim, double t, double r) { return std::pow(t, -0.5 * dim) * std::exp(-r * r / t); }

Envelopes::Envelopes(LevyModel model, std::shared_ptr<const ScaleFunction> sf)
    : model_(std::move(model)), sf_(std::move(sf)) {
  if (!sf_ || sf_->variant() != ScaleFunction::Variant::Full)
    throw ConfigError("envelopes: need the full scale function of the model");
}

double Envelopes::h(double a, double T, double t, double r) const {
  if (!(t > 0.0) || t > T * (1.0 + 1e-12))
    throw DomainError("envelope h: needs 0 < t <= T (t = " + num(t) + ", T = " + num(T) + ")");
  const int d = model_.dim();
  const double beta = model_.beta();
  if (beta <= 1.0 || r <= 1.0) {
    const double diag = std::pow(sf_->phi_inv(t), -d);
    const double jump = !model_.has_jumps() ? 0.0 : a * r > 0.0 ? t * j(a * r) : kInf;
    return model_.gaussian().a0 * pc(d, t, a * r) + std::min(diag, jump);
  }
  if (std::isinf(beta)) return std::pow(t / (T * r), a * r);
  const double lg = std::log(T * r / t);
  return t * std::exp(-a * std::min(r * std::pow(lg, (beta - 1.0) / beta), std::pow(r, beta)));
}

double Envelopes::k(double a, double T, double t, double r, bool corrected) const {
  if (t < T * (1.0 - 1e-12))
    throw DomainError("envelope k: needs t >= T (t = " + num(t) + ", T = " + num(T) + ")");
  const int d = model_.dim();
  const double beta = model_.beta();
  const double td = std::pow(t, -0.5 * d);
  if (beta == 0.0) {
    const double diag = std::pow(sf_->phi_inv(t), -d);
    const double jump = !model_.has_jumps() ? 0.0 : a * r > 0.0 ? t * j(a * r) : kInf;
    return std::min(diag, model_.gaussian().a0 * pc(d, t, a * r) + jump);
  }
  if (beta <= 1.0) return td * std::exp(-a * std::min(std::pow(r, beta), r * r * T / t));
  const double x = r * T / t;
  const double lg = corrected ? 1.0 + std::max(0.0, std::log(x)) : std::abs(std::log(x));
  if (std::isinf(beta)) return td * std::exp(-a * r * std::min(lg, x));
  return td * std::exp(-a * r * std::min(std::pow(lg, (beta - 1.0) / beta), x));
}

double Envelopes::hk(double a, double T, double t, double r, bool corrected) const {
  return t <= T ? h(a, T, t, r) : k(a, T, t, r, corrected);
}

std::vector<LogFactorRow> log_factor_comparison(const Envelopes& env, double a, double T,
                                                const std::vector<double>& ts,
                                                const std::vector<double>& rs) {
  std::vector<LogFactorRow> out;
  for (double t : ts)
    for (double r : rs) {
      const double c = env.k(a, T, t, r, true);
      const double u = env.k(a, T, t, r, false);
      out.push_back({t, r, c, u, u / c});
    }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<double> shape_candidates() {
  std::vector<double> c;
  for (int k = -6; k <= 6; ++k) c.push_back(std::ldexp(1.0, k));
  return c;
}

FreeSandwichReport fit_free_sandwich(const std::function<double(double, double)>& p, const EnvelopeFn& lower,
                                     const EnvelopeFn& upper, const std::vector<FreeGridPoint>& grid,
                                     const FreeSandwichOptions& opt) {
  FreeSandwichReport rep;
  rep.cap = opt.cap;
  std::vector<double> pv;
  for (const auto& g : grid) pv.push_back(p(g.t, g.r));
  auto ratio_lo = [&](double a, std::size_t i) {
    const double e = lower(a, grid[i].t, grid[i].r);
    if (e <= 0.0) return 0.0;
    return pv[i] > 0.0 ? e / pv[i] : kInf;
  };
  auto ratio_hi = [&](double a, std::size_t i) {
    const double e = upper(a, grid[i].t, grid[i].r);
    if (pv[i] <= 0.0) return 0.0;
    return e > 0.0 ? pv[i] / e : kInf;
  };
  for (double a : opt.candidates) {
    double lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      lo = std::max(lo, ratio_lo(a, i));
      hi = std::max(hi, ratio_hi(a, i));
    }
    if (lo < rep.c_lower) {
      rep.c_lower = lo;
      rep.a_lower = a;
    }
    if (hi <= rep.c_upper && std::isfinite(hi)) {  // ties go to the sharper shape
      rep.c_upper = hi;
      rep.a_upper = a;
    }
  }
  rep.c2 = std::max(rep.c_lower, rep.c_upper);
  double worst = -1.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    FreeSandwichReport::Row row;
    row.t = grid[i].t;
    row.r = grid[i].r;
    row.p = pv[i];
    row.lower_env = lower(rep.a_lower, row.t, row.r);
    row.upper_env = upper(rep.a_upper, row.t, row.r);
    row.ratio_lower = ratio_lo(rep.a_lower, i);
    row.ratio_upper = ratio_hi(rep.a_upper, i);
    const double m = std::max(row.ratio_lower, row.ratio_upper);
    if (m > worst) {
      worst = m;
      rep.worst = grid[i];
    }
    if (m > opt.cap) rep.violations.push_back(grid[i]);
    rep.rows.push_back(row);
  }
  rep.pass = std::isfinite(rep.c2) && rep.c2 <= opt.cap;
  return rep;
}

FreeSandwichReport fit_free_sandwich(const DensityEvaluator& ev, const Envelopes& env,
                                     const std::vector<FreeGridPoint>& grid, const FreeSandwichOptions& opt) {
  auto p = [&](double t, double r) {
    Vec x = Vec::Zero(ev.model().dim());
    x[0] = r;
    return ev(t, x);
  };
  auto e = [&](double a, double t, double r) { return env.hk(a, opt.T, t, r, opt.corrected); };
  return fit_free_sandwich(p, e, e, grid, opt);
}

// ---------------------------------------------------------------------------

double total_mass(const DensityEvaluator& ev, double t, double tail_target) {
  const int d = ev.model().dim();
  double R = ev.scale().phi_inv(t / tail_target);
  if (ev.method() == InversionMethod::GridFFT) {
    R = std::min(R, 0.9 * ev.options().fft_extent * ev.scale().phi_inv(t));
    // Riemann sum over the FFT grid restricted to |x| <= R.
    double acc = 0.0;
    const double h = R / 400.0;
    Vec x(d);
    if (d == 1) {
      for (int i = -400; i <= 400; ++i) {
        x << i * h;
        acc += ev(t, x) * h;
      }
      return acc;
    }
    for (int i = -400; i <= 400; ++i)
      for (int k = -400; k <= 400; ++k) {
        if (i * i + k * k > 160000) continue;
        x << i * h, k * h;
        acc += ev(t, x) * h * h;
      }
    return acc;
  }
  auto f = [&](double r) { return sphere_area(d) * std::pow(r, d - 1) * ev.radial(t, r); };
  quad::Options o;
  o.rel_tol = 1e-8;
  o.abs_tol = 1e-10;
  o.max_intervals = 400;
  o.throw_on_failure = false;  // round-off in far tails; the mass is a diagnostic
  // Pieces on a geometric scale around the natural width Phi^{-1}(t).
  const double w = ev.scale().phi_inv(t);
  double total = quad::integrate(f, 0.0, std::min(w, R), o).value;
  for (double lo = w; lo < R; lo *= 4.0) total += quad::integrate(f, lo, std::min(4.0 * lo, R), o).value;
  return total;
}

double chapman_kolmogorov_gap(const DensityEvaluator& ev, double t, double s, double h, double half_width) {
  if (ev.model().dim() != 1) throw DomainError("Chapman-Kolmogorov check is for d = 1");
  h = std::min(h, ev.scale().phi_inv(std::min(t, s)) / 20.0);
  const int n = static_cast<int>(std::ceil(half_width / h));
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = i * h;
    const double w = (i == 0 ? 1.0 : 2.0) * (i == n ? 0.5 : 1.0);
    acc += w * ev.radial(t, x) * ev.radial(s, x) * h;
  }
  const double direct = ev.radial(t + s, 0.0);
  return std::abs(acc - direct) / direct;
}

double on_diagonal_constant(const DensityEvaluator& ev, const std::vector<double>& ts) {
  double best = 0.0;
  const int d = ev.model().dim();
  for (double t : ts) best = std::max(best, ev(t, Vec::Zero(d)) * std::pow(ev.scale().phi_inv(t), d));
  return best;
}

}  // namespace levyheat
