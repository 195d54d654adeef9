#pragma once

// Psi*(r) = sup_{|z| <= r} Psi(z), the scale function Phi(r) = 1/Psi*(1/r),
// its right-continuous inverse, and the d-th coordinate variants.

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "levyheat/model.hpp"

namespace levyheat {

// Deterministic direction set: +-e_i and the diagonals for d >= 4, an even
// net of at least `min_dirs` unit vectors for d = 2, 3.
std::vector<Vec> direction_net(int dim, int min_dirs = 64);

// Psi along the d-th coordinate axis, Psi_1(s) = Psi(s e_d).
double psi_coordinate(const LevyModel& model, double s);

// Direct (untabulated) suprema, maximised over a fine radial scan.
double psi_star(const LevyModel& model, double r);
double psi1_star(const LevyModel& model, double r);

class ScaleFunction {
 public:
  enum class Variant { Full, Coordinate };
  struct Options {
    double r_min = 1e-6;
    double r_max = 1e6;
    int per_decade = 25;
    double inverse_tolerance = 1e-10;
    int net_size = 64;
  };

  explicit ScaleFunction(LevyModel model, Variant variant = Variant::Full);
  ScaleFunction(LevyModel model, Variant variant, Options opt);

  const LevyModel& model() const { return model_; }
  Variant variant() const { return variant_; }
  const Options& options() const { return opt_; }
  // "stable", "brownian", "relativistic" when Phi is evaluated analytically.
  const std::string& closed_tag() const { return closed_tag_; }

  double psi_star(double s) const;  // from the same source as phi
  double phi(double r) const;
  // inf{s > 0 : Phi(s) > t} by bisection to inverse_tolerance.
  double phi_inv(double t) const;

  struct Row {
    double r, phi, roundtrip_err;
  };
  std::vector<Row> table_rows() const;
  void write_csv(const std::string& path) const;

 private:
  struct Table {
    double log_r_min, log_r_max, h;
    std::vector<double> log_phi;
  };
  std::shared_ptr<const Table> table_for(double r) const;
  std::shared_ptr<const Table> build(double r_min, double r_max) const;
  double closed_psi_star(double s) const;
  double raw_psi(double s, const Vec& direction) const;

  LevyModel model_;
  Variant variant_;
  Options opt_;
  std::string closed_tag_;
  std::vector<Vec> net_;
  bool radial_ = true;  // sup over the ball reduces to a radial scan
  mutable std::mutex mutex_;
  mutable std::shared_ptr<const Table> table_;
};

// Scaling inequality 1 <= Phi(lambda t)/Phi(t) <= 2(1 + lambda^2).
struct ScalingCheck {
  bool pass = true;
  double min_ratio = kInf;       // min Phi(lambda t)/Phi(t)
  double max_excess = 0.0;       // max (Phi(lambda t)/Phi(t)) / (2(1+lambda^2))
  int points = 0;
  std::string worst;
};
ScalingCheck check_scaling_inequality(const ScaleFunction& sf, const std::vector<double>& ts,
                                      const std::vector<double>& lambdas);

// Relation between Phi and phi1 for the canonical classes: on (0,1] Phi is
// comparable to phi1 (a0 = 0) or r^2 (a0 > 0); on [1, inf) to phi1 (beta = 0)
// or r^2 (beta > 0).
struct AsymptoticReport {
  bool pass = false;
  std::string small_reference, large_reference;
  double small_min = 0, small_max = 0, large_min = 0, large_max = 0;
};
AsymptoticReport check_L51(const ScaleFunction& sf, double r_lo = 1e-4, double r_hi = 1e4,
                           int per_decade = 10);

// ||A|| / r^2 + int J(z) (1 ^ |z|^2/r^2) dz.
double pruitt_middle(const LevyModel& model, double r);

struct PruittCheck {
  bool pass = true;
  double min_lower_margin = kInf;  // middle * 2 Phi
  double max_upper_ratio = 0.0;    // middle * Phi / (8 (1 + 2d))
  int points = 0;
};
PruittCheck check_pruitt(const ScaleFunction& sf, const std::vector<double>& rs);

// sup_r Psi*(r)/Psi_1*(r) over a log grid.
struct CompWitness {
  double constant = 0.0;
  double at_r = 0.0;
};
CompWitness comp_witness(const LevyModel& model, double r_min = 1e-4, double r_max = 1e4,
                         int per_decade = 25);

std::vector<double> log_grid(double lo, double hi, int n);
std::vector<double> log_grid_per_decade(double lo, double hi, int per_decade);

}  // namespace levyheat
