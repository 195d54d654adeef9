#include "levyheat/halfspace.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <numbers>
#include <thread>

#include "levyheat/errors.hpp"
#include "levyheat/quadrature.hpp"

namespace levyheat {

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::Auto: return "auto";
    case Scheme::ExactStable: return "exact-stable";
    case Scheme::CpGaussian: return "cp-gaussian";
  }
  return "auto";
}

Scheme scheme_from_string(const std::string& s) {
  if (s == "auto") return Scheme::Auto;
  if (s == "exact-stable" || s == "exact") return Scheme::ExactStable;
  if (s == "cp-gaussian" || s == "cp") return Scheme::CpGaussian;
  throw ConfigError("unknown scheme '" + s + "' (auto, exact-stable, cp-gaussian)");
}

std::uint64_t replica_seed(std::uint64_t seed, long replica) {
  // splitmix64 over (seed, replica)
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(replica) + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

int thread_count(int requested) {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("LEVYHEAT_THREADS")) {
    const int e = std::atoi(env);
    if (e > 0) n = e;
  }
  if (requested > 0) n = std::min(n, requested);
  return std::max(n, 1);
}

namespace {

constexpr long kChunk = 512;

// fn(i) for i in [0, n); every index is written by exactly one worker, so
// results stored by index do not depend on scheduling.
template <class Fn>
void parallel_replicas(long n, int threads, const Fn& fn) {
  const long chunks = (n + kChunk - 1) / kChunk;
  threads = static_cast<int>(std::min<long>(threads, std::max<long>(chunks, 1)));
  if (threads <= 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr err;
  std::mutex err_mutex;
  auto work = [&] {
    try {
      for (long c; (c = next.fetch_add(1)) < chunks;)
        for (long i = c * kChunk, e = std::min(n, i + kChunk); i < e; ++i) fn(i);
    } catch (...) {
      std::lock_guard<std::mutex> lk(err_mutex);
      if (!err) err = std::current_exception();
      next = chunks;
    }
  };
  std::vector<std::thread> pool;
  for (int k = 1; k < threads; ++k) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

double uniform_open(std::mt19937_64& rng) {
  // (0, 1)
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

Estimate mean_of(const std::vector<double>& v) {
  Estimate e;
  e.n = static_cast<long>(v.size());
  if (v.empty()) return e;
  double s = 0.0;
  for (double x : v) s += x;
  e.value = s / e.n;
  if (e.n > 1) {
    double q = 0.0;
    for (double x : v) q += (x - e.value) * (x - e.value);
    e.stderr = std::sqrt(q / (e.n - 1) / e.n);
  }
  return e;
}

bool pure_stable(const LevyModel& m) {
  return m.closed_form().kind == ClosedForm::Kind::Stable && !m.has_gaussian() && m.isotropic();
}

// Positive strictly (a)-stable variable with Laplace transform exp(-lambda^a), a in (0, 1).
double kanter(double a, std::mt19937_64& rng) {
  const double u = std::numbers::pi * uniform_open(rng);
  const double e = -std::log(uniform_open(rng));
  return std::sin(a * u) * std::pow(std::sin(u), -1.0 / a) * std::pow(std::sin((1.0 - a) * u) / e, (1.0 - a) / a);
}

// Symmetric alpha-stable with E exp(i xi S) = exp(-|xi|^alpha), d = 1.
double cms(double alpha, std::mt19937_64& rng) {
  const double v = std::numbers::pi * (uniform_open(rng) - 0.5);
  const double w = -std::log(uniform_open(rng));
  if (alpha == 1.0) return std::tan(v);
  return std::sin(alpha * v) / std::pow(std::cos(v), 1.0 / alpha) *
         std::pow(std::cos((1.0 - alpha) * v) / w, (1.0 - alpha) / alpha);
}

// Symmetric square root; fine for singular covariances.
Mat sqrt_psd(const Mat& c) {
  if (!(c.norm() > 0.0)) return Mat::Zero(c.rows(), c.cols());
  Eigen::SelfAdjointEigenSolver<Mat> es(c);
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

// 2A plus the Gaussian stand-in for jumps of reduced size below cut.
Mat continuous_cov(const LevyModel& m, const Vec& inv_aniso, double cut) {
  const int d = m.dim();
  Mat c = m.has_gaussian() ? Mat(2.0 * m.gaussian().A) : Mat::Zero(d, d);
  if (m.has_jumps() && cut > 0.0) c += Mat(inv_aniso.cwiseAbs2().asDiagonal()) * (levy_second_moment(m, cut) / d);
  return c;
}

}  // namespace

// ---------------------------------------------------------------------------

PathSimulator::PathSimulator(LevyModel model, SimConfig cfg) : model_(std::move(model)), cfg_(cfg) {
  const int d = model_.dim();
  if (!(cfg_.dt > 0.0) || !std::isfinite(cfg_.dt)) throw ConfigError("simulation: dt must be positive");
  if (cfg_.n_paths < 1) throw ConfigError("simulation: n_paths must be positive");
  if (cfg_.eps < 0.0) throw ConfigError("simulation: eps must be non-negative");

  scheme_ = cfg_.scheme;
  if (scheme_ == Scheme::Auto) scheme_ = pure_stable(model_) ? Scheme::ExactStable : Scheme::CpGaussian;
  if (scheme_ == Scheme::ExactStable && !pure_stable(model_))
    throw ConfigError("exact-stable scheme needs a pure isotropic stable model");

  inv_aniso_ = Vec::Ones(d);
  if (model_.kernel_profile() == KernelProfile::DiagonalAnisotropic) inv_aniso_ = model_.anisotropy().cwiseInverse();

  if (scheme_ == Scheme::ExactStable) {
    stable_alpha_ = model_.closed_form().alpha;
    stable_c_ = model_.stable_psi_constant();
    cov_ = Mat::Zero(d, d);
    chol_ = cov_;
    return;
  }

  if (model_.has_jumps()) {
    sf_ = std::make_shared<ScaleFunction>(model_);
    eps_ = cfg_.eps > 0.0 ? cfg_.eps : sf_->phi_inv(cfg_.dt);
    rate_ = levy_tail_mass(model_, eps_);
    // Large-jump radius table: T(r) = int_{rho >= r} g, cells integrated from eps upward.
    const double area = sphere_area(d);
    auto g = [&](double rho) { return area * model_.radial_jump(rho) * std::pow(rho, d - 1); };
    const double R = model_.truncation_radius();
    std::vector<double> nodes{eps_};
    const double step = std::pow(10.0, 1.0 / 100.0);
    std::vector<double> kinks{1.0, 1.0 / model_.kappa1()};
    std::sort(kinks.begin(), kinks.end());
    std::vector<double> cells;
    double total = 0.0;
    quad::Options qo;
    qo.rel_tol = 1e-10;
    qo.abs_tol = 1e-300;
    qo.throw_on_failure = false;
    double r = eps_;
    double top_tail = 0.0;
    for (int i = 0; i < 20000; ++i) {
      double nr = r * step;
      for (double k : kinks)
        if (k > r * (1 + 1e-12) && k < nr) nr = k;
      if (nr >= R) nr = R;
      const double m = quad::integrate(g, r, nr, qo).value;
      cells.push_back(m);
      total += m;
      nodes.push_back(nr);
      r = nr;
      if (r >= R) break;
      const double gr = g(r);
      if (!(gr > 0.0)) break;
      const double e = std::log(g(r * 1.01) / gr) / std::log(1.01);
      if (r > 10.0 * kinks.back() && e < -1.0) {
        const double rest = r * gr / (-1.0 - e);
        if (rest < 1e-15 * total) {
          top_tail = rest;
          tail_slope_ = e + 1.0;
          break;
        }
      }
    }
    log_r_.resize(nodes.size());
    log_tail_.resize(nodes.size());
    double acc = top_tail;
    for (std::size_t i = nodes.size(); i-- > 0;) {
      log_r_[i] = std::log(nodes[i]);
      log_tail_[i] = std::log(std::max(acc, 1e-300));
      if (i > 0) acc += cells[i - 1];
    }
    if (tail_slope_ == 0.0) tail_slope_ = -kInf;  // nothing beyond the last node
  }

  cov_ = continuous_cov(model_, inv_aniso_, eps_);
  chol_ = sqrt_psd(cov_);
}

double PathSimulator::radius_from_log(double target) const {
  if (target >= log_tail_.front()) return std::exp(log_r_.front());
  if (target < log_tail_.back()) {
    if (!std::isfinite(tail_slope_)) return std::exp(log_r_.back());
    return std::exp(log_r_.back() + (target - log_tail_.back()) / tail_slope_);
  }
  // log_tail_ decreasing: first node with log_tail <= target.
  auto it = std::lower_bound(log_tail_.begin(), log_tail_.end(), target, std::greater<double>());
  const std::size_t j = static_cast<std::size_t>(it - log_tail_.begin());
  if (j == 0) return std::exp(log_r_.front());
  const double t0 = log_tail_[j - 1], t1 = log_tail_[j];
  const double f = t1 < t0 ? (target - t0) / (t1 - t0) : 0.0;
  return std::exp(log_r_[j - 1] + f * (log_r_[j] - log_r_[j - 1]));
}

double PathSimulator::jump_radius(double u, double cut) const {
  if (log_r_.empty()) throw DomainError("jump_radius: model has no large-jump table");
  if (!(u > 0.0 && u <= 1.0)) throw DomainError("jump_radius: u must lie in (0, 1]");
  double top = log_tail_.front();
  if (cut > eps_) top = end_law_top(cut);
  return radius_from_log(std::log(u) + top);
}

Vec PathSimulator::large_jump(std::mt19937_64& rng, double log_top) const {
  const int d = model_.dim();
  const double rho = radius_from_log(std::log(uniform_open(rng)) + log_top);
  Vec u(d);
  if (d == 1) {
    u(0) = (rng() & 1) ? 1.0 : -1.0;
  } else {
    std::normal_distribution<double> n01;
    double nrm = 0.0;
    do {
      for (int i = 0; i < d; ++i) u(i) = n01(rng);
      nrm = u.norm();
    } while (!(nrm > 0.0));
    u /= nrm;
  }
  return (rho * u).cwiseProduct(inv_aniso_);
}

Vec PathSimulator::stable_increment(double h, std::mt19937_64& rng) const {
  const int d = model_.dim();
  const double scale = std::pow(stable_c_ * h, 1.0 / stable_alpha_);
  Vec z(d);
  if (d == 1) {
    z(0) = scale * cms(stable_alpha_, rng);
    return z;
  }
  // Sub-Gaussian: sqrt(A) N(0, 2I) with A positive (alpha/2)-stable.
  const double a = kanter(0.5 * stable_alpha_, rng);
  std::normal_distribution<double> n01;
  const double f = scale * std::sqrt(2.0 * a);
  for (int i = 0; i < d; ++i) z(i) = f * n01(rng);
  return z;
}

ExitRecord PathSimulator::simulate_exit(const Vec& x0, double horizon, long replica, Slab slab) const {
  const int d = model_.dim();
  if (x0.size() != d) throw DomainError("simulate_exit: start point has the wrong dimension");
  if (!(horizon > 0.0)) throw DomainError("simulate_exit: horizon must be positive");
  if (!(slab.upper > slab.lower)) throw DomainError("simulate_exit: empty slab");
  ExitRecord rec;
  rec.path_seed = replica_seed(cfg_.seed, replica);
  const int k = d - 1;
  auto outside = [&](const Vec& p) { return p(k) <= slab.lower || p(k) >= slab.upper; };
  if (outside(x0)) {
    rec.tau = 0.0;
    rec.x_exit = x0;
    rec.survived = false;
    return rec;
  }
  std::mt19937_64 rng(rec.path_seed);
  const double dt = cfg_.dt;
  const long steps = static_cast<long>(std::ceil(horizon / dt - 1e-9));
  Vec x = x0;

  auto finish = [&](double tau, const Vec& at) {
    rec.tau = tau;
    rec.x_exit = at;
    rec.survived = false;
    return rec;
  };

  if (scheme_ == Scheme::ExactStable) {
    for (long s = 0; s < steps; ++s) {
      const double t0 = s * dt;
      const double h = std::min(dt, horizon - t0);
      x += stable_increment(h, rng);
      if (outside(x)) return finish(t0 + h, x);
    }
    rec.x_exit = x;
    return rec;
  }

  const double var = cov_(k, k);
  const bool continuous = var > 0.0;
  std::poisson_distribution<long> full_step(rate_ * dt);
  std::normal_distribution<double> n01;
  std::vector<double> events;
  Vec xn(d), z(d);

  // Continuous motion over [t0, t0 + delta); returns true on exit.
  auto diffuse = [&](double t0, double delta) {
    if (!continuous || delta <= 0.0) return false;
    for (int i = 0; i < d; ++i) z(i) = n01(rng);
    xn.noalias() = x + chol_ * z * std::sqrt(delta);
    if (outside(xn)) {
      // One bisection: bridge midpoint.
      for (int i = 0; i < d; ++i) z(i) = n01(rng);
      Vec mid = 0.5 * (x + xn) + chol_ * z * std::sqrt(0.25 * delta);
      if (outside(mid)) {
        finish(t0 + 0.5 * delta, mid);
      } else {
        finish(t0 + delta, xn);
      }
      return true;
    }
    if (cfg_.bridge_correction) {
      double p = 0.0;
      const double a = x(k) - slab.lower, b = xn(k) - slab.lower;
      p += std::exp(-2.0 * a * b / (var * delta));
      if (std::isfinite(slab.upper)) {
        const double a2 = slab.upper - x(k), b2 = slab.upper - xn(k);
        p += std::exp(-2.0 * a2 * b2 / (var * delta));
      }
      if (p > 0.0 && uniform_open(rng) < p) {
        Vec at = 0.5 * (x + xn);
        const bool lower = std::isinf(slab.upper) ||
                           (x(k) - slab.lower) * (xn(k) - slab.lower) < (slab.upper - x(k)) * (slab.upper - xn(k));
        at(k) = lower ? slab.lower : slab.upper;
        finish(t0 + 0.5 * delta, at);
        return true;
      }
    }
    x = xn;
    return false;
  };

  for (long s = 0; s < steps; ++s) {
    const double t0 = s * dt;
    const double h = std::min(dt, horizon - t0);
    long n = 0;
    if (rate_ > 0.0) {
      if (h == dt) {
        n = full_step(rng);
      } else {
        std::poisson_distribution<long> part(rate_ * h);
        n = part(rng);
      }
    }
    events.resize(static_cast<std::size_t>(n));
    for (auto& e : events) e = h * uniform_open(rng);
    std::sort(events.begin(), events.end());
    double last = 0.0;
    for (double e : events) {
      if (diffuse(t0 + last, e - last)) return rec;
      last = e;
      x += large_jump(rng, log_tail_.front());
      if (outside(x)) return finish(t0 + e, x);
    }
    if (diffuse(t0 + last, h - last)) return rec;
  }
  rec.x_exit = x;
  return rec;
}

std::vector<ExitRecord> PathSimulator::exit_batch(const Vec& x, double horizon, Slab slab) const {
  std::vector<ExitRecord> out(static_cast<std::size_t>(cfg_.n_paths));
  parallel_replicas(cfg_.n_paths, thread_count(cfg_.threads),
                    [&](long i) { out[static_cast<std::size_t>(i)] = simulate_exit(x, horizon, i, slab); });
  return out;
}

PathSimulator::EndLaw PathSimulator::end_law(double t) const {
  if (!(t > 0.0)) throw DomainError("endpoint: t must be positive");
  EndLaw law;
  law.cut = eps_;
  law.rate = rate_;
  law.root = chol_;
  if (scheme_ == Scheme::ExactStable || rate_ <= 0.0) return law;
  law.log_top = log_tail_.front();
  // At most a few thousand jumps per endpoint; smaller ones join the Gaussian part.
  constexpr double kMaxJumps = 4096.0;
  if (rate_ * t > kMaxJumps) {
    law.cut = std::max(eps_, sf_->phi_inv(t / kMaxJumps));
    law.log_top = end_law_top(law.cut);
    law.rate = rate_ * std::exp(law.log_top - log_tail_.front());
    law.root = sqrt_psd(continuous_cov(model_, inv_aniso_, law.cut));
  }
  return law;
}

double PathSimulator::end_law_top(double cut) const {
  // log T(cut) from the table, power-law beyond it.
  const double lc = std::log(cut);
  if (lc <= log_r_.front()) return log_tail_.front();
  if (lc >= log_r_.back()) {
    if (!std::isfinite(tail_slope_)) return -kInf;
    return log_tail_.back() + tail_slope_ * (lc - log_r_.back());
  }
  auto it = std::upper_bound(log_r_.begin(), log_r_.end(), lc);
  const std::size_t j = static_cast<std::size_t>(it - log_r_.begin());
  const double f = (lc - log_r_[j - 1]) / (log_r_[j] - log_r_[j - 1]);
  return log_tail_[j - 1] + f * (log_tail_[j] - log_tail_[j - 1]);
}

Vec PathSimulator::endpoint_with(const EndLaw& law, double t, long replica) const {
  const int d = model_.dim();
  std::mt19937_64 rng(replica_seed(cfg_.seed, replica));
  if (scheme_ == Scheme::ExactStable) return stable_increment(t, rng);
  Vec x = Vec::Zero(d);
  if (law.root.norm() > 0.0) {
    std::normal_distribution<double> n01;
    Vec z(d);
    for (int i = 0; i < d; ++i) z(i) = n01(rng);
    x += law.root * z * std::sqrt(t);
  }
  if (law.rate > 0.0) {
    std::poisson_distribution<long> pn(law.rate * t);
    const long n = pn(rng);
    for (long i = 0; i < n; ++i) x += large_jump(rng, law.log_top);
  }
  return x;
}

Vec PathSimulator::endpoint(double t, long replica) const { return endpoint_with(end_law(t), t, replica); }

std::vector<Vec> PathSimulator::endpoint_batch(double t) const {
  const auto law = end_law(t);
  std::vector<Vec> out(static_cast<std::size_t>(cfg_.n_paths));
  parallel_replicas(cfg_.n_paths, thread_count(cfg_.threads),
                    [&](long i) { out[static_cast<std::size_t>(i)] = endpoint_with(law, t, i); });
  return out;
}

ExitRecord simulate_exit(const LevyModel& model, const SimConfig& cfg, const Vec& x, double horizon) {
  return PathSimulator(model, cfg).simulate_exit(x, horizon, 0);
}

// ---------------------------------------------------------------------------
// Survival

std::vector<SurvivalEstimate> survival_curve(const PathSimulator& sim, const ScaleFunction& coordinate_sf,
                                             const Vec& x, const std::vector<double>& ts) {
  if (sim.config().n_paths < 100) throw ConfigError("survival: need at least 100 paths");
  if (ts.empty()) return {};
  const double delta = x(x.size() - 1);
  if (!(delta > 0.0)) throw DomainError("survival: start point must lie in the half-space");
  for (double t : ts)
    if (!(t > 0.0)) throw DomainError("survival: t must be positive");
  const auto recs = sim.exit_batch(x, *std::max_element(ts.begin(), ts.end()));
  std::vector<SurvivalEstimate> out;
  const double phi = coordinate_sf.phi(delta);
  for (double t : ts) {
    std::vector<double> alive(recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) alive[i] = recs[i].tau > t ? 1.0 : 0.0;
    SurvivalEstimate s;
    s.est = mean_of(alive);
    s.t = t;
    s.delta = delta;
    s.reference = std::min(1.0, std::sqrt(phi / t));
    s.ratio = s.est.value / s.reference;
    out.push_back(s);
  }
  return out;
}

SurvivalEstimate survival_prob(const LevyModel& model, const SimConfig& cfg, const Vec& x, double t) {
  if (cfg.n_paths < 100) throw ConfigError("survival: need at least 100 paths");
  PathSimulator sim(model, cfg);
  ScaleFunction sf(model, ScaleFunction::Variant::Coordinate);
  return survival_curve(sim, sf, x, {t}).front();
}

// ---------------------------------------------------------------------------
// Killed density

KilledDensity::KilledDensity(std::shared_ptr<const DensityEvaluator> ev) : ev_(std::move(ev)) {
  if (ev_->method() == InversionMethod::GridFFT)
    throw ConfigError("killed-term lookups need an isotropic model or a closed form");
  if (ev_->method() == InversionMethod::RadialBessel) {
    RadialDensityTable::Options o;
    o.s_max = 64.0;
    table_ = std::make_unique<RadialDensityTable>(ev_, o);
  }
}

double KilledDensity::operator()(double s, const Vec& z) const {
  if (table_) return (*table_)(s, z.norm());
  return (*ev_)(s, z);
}

std::vector<DirichletEstimate> dirichlet_batch(const PathSimulator& sim, const KilledDensity& p, const Vec& x,
                                               const std::vector<DirichletQuery>& queries) {
  const int d = sim.model().dim();
  if (queries.empty()) return {};
  if (x.size() != d || x(d - 1) < 0.0) throw DomainError("dirichlet: x must lie in the closed half-space");
  double tmax = 0.0;
  for (const auto& q : queries) {
    if (q.y.size() != d) throw DomainError("dirichlet: y has the wrong dimension");
    if (!(q.t > 0.0)) throw DomainError("dirichlet: t must be positive");
    tmax = std::max(tmax, q.t);
  }
  const auto recs = sim.exit_batch(x, tmax);
  std::vector<DirichletEstimate> out;
  out.reserve(queries.size());
  for (const auto& q : queries) {
    DirichletEstimate e;
    e.t = q.t;
    e.x = x;
    e.y = q.y;
    e.n = static_cast<long>(recs.size());
    if (!(q.y(d - 1) > 0.0) || !(x(d - 1) > 0.0)) {
      out.push_back(e);  // p_H vanishes off H; a start on the boundary is killed at once
      continue;
    }
    e.free = p(q.t, q.y - x);
    std::vector<double> killed(recs.size(), 0.0);
    for (std::size_t i = 0; i < recs.size(); ++i) {
      const auto& r = recs[i];
      if (r.tau < q.t) {
        ++e.exits;
        killed[i] = p(q.t - r.tau, q.y - r.x_exit);
      }
    }
    const auto k = mean_of(killed);
    e.killed = k.value;
    e.stderr = k.stderr;
    e.value = e.free - e.killed;
    e.negative = e.value < 0.0;
    out.push_back(e);
  }
  return out;
}

DirichletEstimate dirichlet_density(const LevyModel& model, const SimConfig& cfg, double t, const Vec& x,
                                    const Vec& y) {
  PathSimulator sim(model, cfg);
  KilledDensity p(std::make_shared<DensityEvaluator>(model));
  return dirichlet_batch(sim, p, x, {{t, y}}).front();
}

// ---------------------------------------------------------------------------
// Strip, tails

StripEstimate mean_exit_strip(const LevyModel& model, const SimConfig& cfg, double x_d, double r, double horizon) {
  if (!(r > 0.0) || !(x_d > 0.0) || !(x_d < r)) throw DomainError("strip: need 0 < x_d < r");
  ScaleFunction sf(model, ScaleFunction::Variant::Coordinate);
  const double phi_r = sf.phi(r);
  if (horizon <= 0.0) horizon = 20.0 * phi_r;
  PathSimulator sim(model, cfg);
  Vec x = Vec::Zero(model.dim());
  x(model.dim() - 1) = x_d;
  const auto recs = sim.exit_batch(x, horizon, Slab{0.0, r});
  std::vector<double> tau(recs.size());
  long inside = 0;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    tau[i] = std::min(recs[i].tau, horizon);
    if (recs[i].survived) ++inside;
  }
  StripEstimate s;
  s.est = mean_of(tau);
  s.x_d = x_d;
  s.r = r;
  s.horizon = horizon;
  s.truncated = static_cast<double>(inside) / static_cast<double>(recs.size());
  if (s.truncated > 0.05)
    throw DomainError("strip: " + std::to_string(s.truncated * 100.0) +
                      "% of paths still inside at the horizon; raise the horizon");
  s.bound = std::sqrt(phi_r * sf.phi(x_d));
  s.c = s.est.value / s.bound;
  return s;
}

Estimate tail_prob(const PathSimulator& sim, double t, double r) {
  if (!(r > 0.0)) throw DomainError("tail_prob: r must be positive");
  const auto pts = sim.endpoint_batch(t);
  std::vector<double> hit(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) hit[i] = pts[i].norm() > r ? 1.0 : 0.0;
  return mean_of(hit);
}

Estimate tail_prob(const LevyModel& model, const SimConfig& cfg, double t, double r) {
  return tail_prob(PathSimulator(model, cfg), t, r);
}

std::vector<VanishingRow> vanishing_H(const LevyModel& model, const SimConfig& cfg, double c_scale,
                                      const std::vector<double>& M_list, const std::vector<double>& ts) {
  if (!(c_scale > 0.0)) throw DomainError("vanishing_H: scale constant must be positive");
  PathSimulator sim(model, cfg);
  ScaleFunction sf(model);
  std::vector<VanishingRow> rows;
  for (double M : M_list) {
    VanishingRow row;
    row.M = M;
    row.H = -1.0;
    rows.push_back(row);
  }
  for (double t : ts) {
    // Same endpoints for every M.
    const auto pts = sim.endpoint_batch(t);
    const double scale = sf.phi_inv(t);
    for (auto& row : rows) {
      std::vector<double> hit(pts.size());
      for (std::size_t i = 0; i < pts.size(); ++i) hit[i] = pts[i].norm() > c_scale * row.M * scale ? 1.0 : 0.0;
      const auto e = mean_of(hit);
      if (e.value > row.H) {
        row.H = e.value;
        row.stderr = e.stderr;
        row.t_at = t;
      }
    }
  }
  return rows;
}

}  // namespace levyheat
