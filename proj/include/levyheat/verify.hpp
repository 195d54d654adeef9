#pragma once

// Half-space heat kernel checks: boundary factor, survival comparison,
// upper / two-sided / free-density-form sandwiches for p_H, the interior
// and small-time lower regimes, tail and vanishing checks, and (HKC).

#include <string>
#include <vector>

#include "levyheat/density.hpp"
#include "levyheat/halfspace.hpp"

namespace levyheat {

// sqrt(Phi(delta)/t) ^ 1; 0 at delta = 0.
double boundary_factor(const ScaleFunction& sf, double t, double delta);

struct GridPoint {
  double t = 0.0;
  Vec x, y;
};

// (t, delta, |x - y|) grid: x = delta e_d, and y = x + r e_d in d = 1,
// y = x + r e_1 otherwise. Order: delta, then t, then r.
std::vector<GridPoint> sandwich_grid(int dim, const std::vector<double>& ts, const std::vector<double>& deltas,
                                     const std::vector<double>& rs);

struct MCPoint {
  GridPoint g;
  double p = 0.0, stderr = 0.0;
  long exits = 0, n = 0;
  bool negative = false;
};
// One batch of paths per distinct start point, shared by its queries.
std::vector<MCPoint> estimate_grid(const PathSimulator& sim, const KilledDensity& p,
                                   const std::vector<GridPoint>& grid);

struct VerifyOptions {
  double T = 1.0;    // h below T, k above
  double M1 = 1.0;   // regime split at |x - y| = 4 M1 Phi^{-1}(t)
  double cap = 1e3;  // largest acceptable fitted constant
  double slack = 3.0;  // stderr multiples on the MC side
  double continuity_factor = 10.0;
  std::vector<double> candidates = shape_candidates();
  std::vector<double> scale_candidates = {0.25, 0.5, 1.0, 2.0, 4.0};  // free-density form
};

struct SandwichReport {
  std::string kind;  // upper, twosided, conjecture
  bool pass = false;
  double c1 = kInf;  // max of the two comparability constants in use
  double c1_upper = kInf, c1_lower = kInf;
  double a_upper = 0.0, a_lower = 0.0;      // shape constants (h, k forms)
  double t_upper = 0.0, s_upper = 0.0;      // p(t_upper t, s_upper z) (free-density form)
  double t_lower = 0.0, s_lower = 0.0;
  bool coherent = true;                      // c1_lower^{-1} lower <= c1_upper upper everywhere
  double continuity = 1.0;                   // worst jump across the regime split, envelope-normalised
  bool continuity_ok = true;
  struct Row {
    double t, delta_x, delta_y, dist, p, stderr, bf_x, bf_y, lower_env, upper_env;
    std::string time_regime;   // "t<T" or "t>=T"
    std::string space_regime;  // "near" or "far"
    bool violation;
  };
  std::vector<Row> rows;
  std::vector<std::size_t> violations;
  std::string detail;
};

// p_H <= c1 bf(x) bf(y) hk(a, T, t, |x - y|/6).
SandwichReport verify_upper(const Envelopes& env, const std::vector<MCPoint>& est, const VerifyOptions& opt = {});
// Adds c1^{-1} bf(x) bf(y) hk(a', T, t, 3|x - y|/2) <= p_H.
SandwichReport verify_twosided(const Envelopes& env, const std::vector<MCPoint>& est, const VerifyOptions& opt = {});
// bf bf p(c2 t, c3 z) <= c1 p_H and p_H <= c1 bf bf p(c4 t, c5 z).
SandwichReport verify_conjecture_form(const KilledDensity& p, const ScaleFunction& sf,
                                      const std::vector<MCPoint>& est, const VerifyOptions& opt = {});

// Survival against sqrt(Phi_1(delta)/t) ^ 1 over a (delta, t) grid.
struct SurvivalComparison {
  struct Row {
    double delta, t, estimate, stderr, reference, ratio, ratio_half;
  };
  std::vector<Row> rows;
  double C0 = kInf;       // max(max ratio, 1 / min ratio) with all paths
  double C0_half = kInf;  // same with the first half of the paths
  bool stable = false;    // |C0 / C0_half - 1| <= 0.2
  bool pass = false;
};
SurvivalComparison survival_comparison(const PathSimulator& sim, const std::vector<double>& deltas,
                                       const std::vector<double>& ts);

// x = y = delta e_d with delta = factor Phi^{-1}(t): p_H Phi^{-1}(t)^d in [lo, hi].
struct InteriorReport {
  struct Row {
    double t, delta, p, stderr, scaled;
  };
  std::vector<Row> rows;
  double lo = 0.05, hi = 20.0;
  double min_scaled = kInf, max_scaled = 0.0;
  bool pass = false;
};
InteriorReport check_interior(const PathSimulator& sim, const KilledDensity& p, const std::vector<double>& ts,
                              double factor = 4.0, double lo = 0.05, double hi = 20.0);

// Fixed x != y, small t: p_H / (t j(|x - y|)) bounded below.
struct SmallTimeReport {
  struct Row {
    double t, p, stderr, ratio;
  };
  std::vector<Row> rows;
  double constant = 0.0;  // min ratio
  bool pass = false;      // every estimate positive beyond 3 stderr
};
SmallTimeReport check_small_time(const PathSimulator& sim, const KilledDensity& p, const Vec& x, const Vec& y,
                                 const std::vector<double>& ts);

// P(|X_t| > r) <= c t / Phi(r).
struct TailReport {
  struct Row {
    double t, r, estimate, stderr, bound;
  };
  std::vector<Row> rows;
  double c = 0.0;
  double cap = 100.0;
  bool pass = false;
};
TailReport check_tail_bound(const PathSimulator& sim, const ScaleFunction& sf, const std::vector<double>& ts,
                            const std::vector<double>& rs, double cap = 100.0);

struct VanishingReport {
  std::vector<VanishingRow> rows;
  bool pass = false;  // non-increasing within 3 stderr, strictly lower at the end
};
VanishingReport check_vanishing(const std::vector<VanishingRow>& rows);

// p(t, x) <= c p(C1 t, C2 y) for |x| >= |y| > 0.
struct HKCReport {
  struct Row {
    double t, rx, ry, ratio;
  };
  std::vector<Row> rows;
  double c = kInf, C1 = 0.0, C2 = 0.0;  // c is a power of 2
  double ratio_max = kInf;               // max p(t, x) / p(C1 t, C2 y) at the fitted (C1, C2)
  double cap = 1e3;
  bool pass = false;
};
HKCReport check_HKC(const DensityEvaluator& ev, const std::vector<double>& ts, const std::vector<double>& rs,
                    const std::vector<double>& candidates = {0.25, 0.5, 1.0, 2.0, 4.0}, double cap = 1e3);

}  // namespace levyheat
