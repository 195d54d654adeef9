#pragma once

// Free transition density p(t, x) by Fourier inversion of exp(-t Psi), the
// bound envelopes p^c, h_{a,T}, k_{a,T}, and fits of p between envelopes.

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "levyheat/model.hpp"
#include "levyheat/scaling.hpp"

namespace levyheat {

enum class InversionMethod { ClosedForm, RadialBessel, GridFFT };
std::string to_string(InversionMethod m);

struct DensityOptions {
  int max_depth = 40;
  double abs_tol = 1e-14;
  double rel_tol = 1e-10;
  double cutoff = 50.0;       // t Psi(rho_max) >= cutoff
  int fft_max_n = 2048;       // per dimension
  double fft_extent = 64.0;   // grid half-width in units of Phi^{-1}(t)
  bool force_radial = false;  // skip closed forms (isotropic models only)
};

class DensityEvaluator {
 public:
  explicit DensityEvaluator(LevyModel model, DensityOptions opt = {});

  const LevyModel& model() const { return model_; }
  const ScaleFunction& scale() const { return *scale_; }
  std::shared_ptr<const ScaleFunction> scale_ptr() const { return scale_; }
  InversionMethod method() const { return method_; }
  const DensityOptions& options() const { return opt_; }

  double operator()(double t, const Vec& x) const;
  // Isotropic models: p(t, x) at |x| = r.
  double radial(double t, double r) const;
  // Smallest rho with t Psi(rho) >= cutoff; throws if exp(-t Psi) is not
  // integrable in practice (ExpL fails at this t).
  double rho_max(double t) const;
  long clamped() const { return clamped_->load(); }

 private:
  double radial_inversion(double t, double r) const;
  double closed(double t, const Vec& x) const;
  double grid_value(double t, const Vec& x) const;
  double finish(double v, double t) const;

  struct Grid;
  std::shared_ptr<const Grid> grid_for(double t) const;

  LevyModel model_;
  DensityOptions opt_;
  InversionMethod method_;
  double radial_a_ = 0.0;  // A = radial_a I for the radial path
  std::shared_ptr<const ScaleFunction> scale_;
  std::shared_ptr<std::atomic<long>> clamped_;
  std::shared_ptr<std::mutex> grid_mutex_;
  std::shared_ptr<std::map<double, std::shared_ptr<const Grid>>> grids_;
};

double free_density(const DensityEvaluator& ev, double t, const Vec& x);

// Lazily filled (log s, log r) table of the radial density for repeated
// lookups p(s, r) with s in [s_min, s_max]. Rows are built once on first use
// and interpolated with Catmull-Rom splines in log p. Closed forms bypass it.
class RadialDensityTable {
 public:
  struct Options {
    double s_min = 1e-5;
    double s_max = 8.0;
    double r_min = 1e-4;
    double r_max = 1e3;
    int s_per_decade = 16;
    int r_per_decade = 32;
  };
  RadialDensityTable(std::shared_ptr<const DensityEvaluator> ev, Options opt);
  double operator()(double s, double r) const;
  const Options& options() const { return opt_; }

 private:
  const std::vector<double>& row(int i) const;
  std::shared_ptr<const DensityEvaluator> ev_;
  Options opt_;
  bool direct_ = false;
  double ls0_ = 0, hs_ = 0, lr0_ = 0, hr_ = 0;
  int ns_ = 0, nr_ = 0;
  mutable std::vector<std::vector<double>> rows_;
  mutable std::unique_ptr<std::once_flag[]> once_;
};

// ---------------------------------------------------------------------------
// Envelopes

// p^c(t, r) = t^{-d/2} exp(-r^2/t).
double pc(int dim, double t, double r);

class Envelopes {
 public:
  // The scale function must be the full variant of the same model.
  Envelopes(LevyModel model, std::shared_ptr<const ScaleFunction> sf);

  const LevyModel& model() const { return model_; }
  const ScaleFunction& scale() const { return *sf_; }

  // Radial jump profile j(r) used inside the envelopes.
  double j(double r) const { return model_.radial_jump(r); }
  // t in (0, T].
  double h(double a, double T, double t, double r) const;
  // t in [T, inf). corrected = false swaps (1 + log^+ (rT/t)) for |log(rT/t)|.
  double k(double a, double T, double t, double r, bool corrected = true) const;
  // h for t <= T, k for t > T.
  double hk(double a, double T, double t, double r, bool corrected = true) const;

 private:
  LevyModel model_;
  std::shared_ptr<const ScaleFunction> sf_;
};

// Corrected vs uncorrected long-time log factor, side by side.
struct LogFactorRow {
  double t, r, corrected, uncorrected, ratio;
};
std::vector<LogFactorRow> log_factor_comparison(const Envelopes& env, double a, double T,
                                                const std::vector<double>& ts,
                                                const std::vector<double>& rs);

// ---------------------------------------------------------------------------
// Sandwich fit for the free density

std::vector<double> shape_candidates();  // {2^k : k = -6..6}

struct FreeGridPoint {
  double t, r;
};

struct FreeSandwichReport {
  bool pass = false;
  double c2 = kInf;  // c2^{-1} env(a_lo) <= p <= c2 env(a_hi)
  double c_lower = kInf, c_upper = kInf;
  double a_lower = 0.0, a_upper = 0.0;
  double cap = 0.0;
  FreeGridPoint worst{0.0, 0.0};
  struct Row {
    double t, r, p, lower_env, upper_env, ratio_lower, ratio_upper;
  };
  std::vector<Row> rows;
  std::vector<FreeGridPoint> violations;  // points where the final fit fails
};

struct FreeSandwichOptions {
  double T = 1.0;
  double cap = 1e3;
  std::vector<double> candidates = shape_candidates();
  bool corrected = true;
};

// Envelope is any (a, t, r) -> value; by default h/k of `env`.
using EnvelopeFn = std::function<double(double a, double t, double r)>;
FreeSandwichReport fit_free_sandwich(const std::function<double(double t, double r)>& p,
                                     const EnvelopeFn& lower, const EnvelopeFn& upper,
                                     const std::vector<FreeGridPoint>& grid, const FreeSandwichOptions& opt);
FreeSandwichReport fit_free_sandwich(const DensityEvaluator& ev, const Envelopes& env,
                                     const std::vector<FreeGridPoint>& grid,
                                     const FreeSandwichOptions& opt = {});

// ---------------------------------------------------------------------------
// Density diagnostics

// int p(t, x) dx over |x| <= R(t), with R chosen from the tail bound.
double total_mass(const DensityEvaluator& ev, double t, double tail_target = 1e-4);
// d = 1: max relative gap between p(t+s) and the discrete convolution of
// p(t) and p(s) on a uniform grid, measured at the mode.
double chapman_kolmogorov_gap(const DensityEvaluator& ev, double t, double s, double h = 0.01,
                              double half_width = 60.0);
// sup_x p(t, x) Phi^{-1}(t)^d over the given times (sup at x = 0).
double on_diagonal_constant(const DensityEvaluator& ev, const std::vector<double>& ts);

}  // namespace levyheat
