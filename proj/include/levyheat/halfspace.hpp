#pragma once

// Monte Carlo for the process killed on leaving the upper half-space
// H = {x : x_d > 0}: exit records, survival, the killed-density estimator of
// p_H, strip exit times and free-process tail probabilities.

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "levyheat/density.hpp"
#include "levyheat/model.hpp"
#include "levyheat/scaling.hpp"

namespace levyheat {

enum class Scheme { Auto, ExactStable, CpGaussian };
std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

struct SimConfig {
  double dt = 1e-3;
  double eps = 0.0;  // small-jump cutoff; 0 selects Phi^{-1}(dt)
  long n_paths = 10000;
  std::uint64_t seed = 1;
  bool bridge_correction = true;
  Scheme scheme = Scheme::Auto;
  int threads = 0;  // 0: LEVYHEAT_THREADS or the hardware count
};

struct ExitRecord {
  double tau = kInf;  // +inf if the path survived to the horizon
  Vec x_exit;         // exit position, or the position at the horizon
  bool survived = true;
  std::uint64_t path_seed = 0;
};

struct Estimate {
  double value = 0.0;
  double stderr = 0.0;
  long n = 0;
};

// Seed of replica i, independent of scheduling.
std::uint64_t replica_seed(std::uint64_t seed, long replica);
// Worker threads: min(LEVYHEAT_THREADS, cfg.threads) when set, else hardware.
int thread_count(int requested = 0);

// Exit interval (lower, upper) for the d-th coordinate.
struct Slab {
  double lower = 0.0;
  double upper = kInf;
};

class PathSimulator {
 public:
  PathSimulator(LevyModel model, SimConfig cfg);

  const LevyModel& model() const { return model_; }
  const SimConfig& config() const { return cfg_; }
  Scheme scheme() const { return scheme_; }
  double eps() const { return eps_; }
  double jump_rate() const { return rate_; }     // intensity of jumps with |D y| >= eps
  const Mat& diffusion() const { return cov_; }  // continuous covariance per unit time

  ExitRecord simulate_exit(const Vec& x, double horizon, long replica, Slab slab = {}) const;
  // n_paths records from x, in replica order.
  std::vector<ExitRecord> exit_batch(const Vec& x, double horizon, Slab slab = {}) const;
  // X_t of the free process started at 0.
  Vec endpoint(double t, long replica) const;
  std::vector<Vec> endpoint_batch(double t) const;

  // Radius of a jump with reduced size >= cut (default eps), from u in (0, 1).
  double jump_radius(double u, double cut = 0.0) const;

 private:
  // One-shot endpoint law over time t: coarser cutoff, matching covariance.
  struct EndLaw {
    double cut = 0.0, rate = 0.0, log_top = 0.0;
    Mat root;
  };
  EndLaw end_law(double t) const;
  Vec endpoint_with(const EndLaw& law, double t, long replica) const;
  double end_law_top(double cut) const;  // log T(cut)
  double radius_from_log(double log_target) const;
  Vec large_jump(std::mt19937_64& rng, double log_top) const;
  Vec stable_increment(double h, std::mt19937_64& rng) const;

  LevyModel model_;
  SimConfig cfg_;
  Scheme scheme_;
  double eps_ = 0.0;
  double rate_ = 0.0;
  Mat cov_;
  Mat chol_;  // lower factor of cov_
  Vec inv_aniso_;
  double stable_c_ = 0.0, stable_alpha_ = 0.0;
  // Large-jump radii: log r_i against log of the tail mass T(r_i), decreasing.
  std::vector<double> log_r_, log_tail_;
  double tail_slope_ = 0.0;
  std::shared_ptr<const ScaleFunction> sf_;
};

// One path of the killed process from x (replica 0 of cfg.seed).
ExitRecord simulate_exit(const LevyModel& model, const SimConfig& cfg, const Vec& x, double horizon);

struct SurvivalEstimate {
  Estimate est;
  double t = 0.0, delta = 0.0;
  double reference = 0.0;  // sqrt(Phi_1(delta)/t) ^ 1
  double ratio = 0.0;      // est / reference
};
SurvivalEstimate survival_prob(const LevyModel& model, const SimConfig& cfg, const Vec& x, double t);
// All times from one batch of paths (common random numbers).
std::vector<SurvivalEstimate> survival_curve(const PathSimulator& sim, const ScaleFunction& coordinate_sf,
                                             const Vec& x, const std::vector<double>& ts);

// p(s, z) lookups for the killed term: closed forms directly, isotropic
// models through a RadialDensityTable. Anisotropic inversions are refused.
class KilledDensity {
 public:
  explicit KilledDensity(std::shared_ptr<const DensityEvaluator> ev);
  double operator()(double s, const Vec& z) const;
  const DensityEvaluator& evaluator() const { return *ev_; }

 private:
  std::shared_ptr<const DensityEvaluator> ev_;
  std::unique_ptr<RadialDensityTable> table_;
};

struct DirichletEstimate {
  double t = 0.0;
  Vec x, y;
  double value = 0.0;  // p(t, y - x) - killed
  double stderr = 0.0;
  double free = 0.0;
  double killed = 0.0;
  long exits = 0;  // paths with tau < t
  long n = 0;
  bool negative = false;
};
struct DirichletQuery {
  double t;
  Vec y;
};
// Killed-density representation with one batch of paths from x for all queries.
std::vector<DirichletEstimate> dirichlet_batch(const PathSimulator& sim, const KilledDensity& p, const Vec& x,
                                               const std::vector<DirichletQuery>& queries);
DirichletEstimate dirichlet_density(const LevyModel& model, const SimConfig& cfg, double t, const Vec& x,
                                    const Vec& y);

struct StripEstimate {
  Estimate est;  // E[tau ^ horizon]
  double x_d = 0.0, r = 0.0, horizon = 0.0;
  double truncated = 0.0;  // fraction of paths still inside at the horizon
  double bound = 0.0;      // sqrt(Phi_1(r) Phi_1(x_d))
  double c = 0.0;          // est / bound
};
// Exit time of the d-th coordinate from (0, r), simulated in full dimension.
// horizon <= 0 picks 20 Phi_1(r). Throws DomainError if more than 5% of the
// paths are still inside at the horizon.
StripEstimate mean_exit_strip(const LevyModel& model, const SimConfig& cfg, double x_d, double r,
                              double horizon = 0.0);

// P_0(|X_t| > r).
Estimate tail_prob(const LevyModel& model, const SimConfig& cfg, double t, double r);
Estimate tail_prob(const PathSimulator& sim, double t, double r);

struct VanishingRow {
  double M = 0.0;
  double H = 0.0;  // sup_t P(|X_t| > c M Phi^{-1}(t))
  double stderr = 0.0;
  double t_at = 0.0;
};
std::vector<VanishingRow> vanishing_H(const LevyModel& model, const SimConfig& cfg, double c_scale,
                                      const std::vector<double>& M_list,
                                      const std::vector<double>& ts = {0.01, 0.1, 1.0, 10.0, 100.0});

}  // namespace levyheat
