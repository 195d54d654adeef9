#pragma once

// Symmetric Levy process models: Gaussian part, jump kernel built from a
// polynomial scale phi1 and an exponential damping psi1, optional analytic
// exponent. Everything here is immutable after construction.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace levyheat {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// phi1: strictly increasing, phi1(0) = 0, phi1(1) = 1, with power-type
/// scaling between exponents beta1 <= beta2 < 2.
struct PolyScale {
  enum class Profile { Power, PiecewisePower };

  Profile profile = Profile::Power;
  double alpha_small = 1.0;  // exponent on (0, 1]
  double alpha_large = 1.0;  // exponent on [1, inf)
  double a3 = 1.0;           // declared lower scaling constant
  double a4 = 1.0;           // declared upper scaling constant

  static PolyScale power(double alpha);
  static PolyScale piecewise(double alpha_small, double alpha_large);

  double beta1() const { return std::min(alpha_small, alpha_large); }
  double beta2() const { return std::max(alpha_small, alpha_large); }
  double operator()(double r) const;
};

/// psi1(r) = 1 on (0, 1] and exp(gamma1 (r^beta - 1)) beyond; beta = inf is
/// the hard truncation (psi1 = +inf for r > 1).
struct ExpDamp {
  double beta = 0.0;
  double gamma1 = 1.0;
  double gamma2 = 1.0;
  double a1 = std::exp(-1.0);
  double a2 = std::exp(-1.0);

  bool truncated() const { return std::isinf(beta); }
  double operator()(double r) const;
};

struct GaussianPart {
  double a0 = 0.0;
  Mat A;               // d x d, symmetric non-negative definite
  double gamma = 1.0;  // ellipticity ratio
};

struct ClosedForm {
  enum class Kind { None, Stable, Relativistic, Brownian };
  Kind kind = Kind::None;
  double alpha = 0.0;
  double mass = 0.0;
};

enum class KernelProfile { None, CanonicalIsotropic, DiagonalAnisotropic };

class LevyModel {
 public:
  // Throws ConfigError if the pieces are inconsistent (dimension mismatch,
  // closed form that contradicts the kernel, beta2 >= 2, ...).
  LevyModel(std::string name, int dim, GaussianPart gaussian, std::optional<PolyScale> poly,
            ExpDamp damp, double kappa1, double kappa2, double comparability_gamma,
            double normalization, Vec anisotropy, ClosedForm closed_form);

  static LevyModel brownian(int dim, double a0);
  // Psi(xi) = |xi|^alpha (jump normalisation chosen to make it so).
  static LevyModel isotropic_stable(int dim, double alpha);
  static LevyModel cauchy(int dim) { return isotropic_stable(dim, 1.0); }

  const std::string& name() const { return name_; }
  int dim() const { return dim_; }
  const GaussianPart& gaussian() const { return gaussian_; }
  const std::optional<PolyScale>& poly() const { return poly_; }
  const ExpDamp& damp() const { return damp_; }
  double kappa1() const { return kappa1_; }
  double kappa2() const { return kappa2_; }
  double comparability_gamma() const { return comparability_gamma_; }
  double normalization() const { return normalization_; }
  const Vec& anisotropy() const { return anisotropy_; }
  const ClosedForm& closed_form() const { return closed_; }
  KernelProfile kernel_profile() const { return kernel_; }

  bool has_jumps() const { return kernel_ != KernelProfile::None; }
  bool has_gaussian() const { return gaussian_.A.norm() > 0.0; }
  // Psi depends on |xi| only.
  bool isotropic() const;
  double beta() const { return has_jumps() ? damp_.beta : 0.0; }
  // Jumps vanish beyond this radius of the isotropic profile (1/kappa for beta = inf).
  double truncation_radius() const;
  double gaussian_norm() const { return gaussian_norm_; }  // ||A|| = largest eigenvalue
  double stable_psi_constant() const;                      // c in Psi_J = c |xi|^alpha

  // Radial jump profile j(r) including normalisation: J(x) = j(|x|) for the
  // isotropic kernels, J(x) = j(|D x|) for the diagonal-anisotropic one.
  double radial_jump(double r) const;
  // Canonical profile value 1 / (r^d phi1(r) psi1(kappa r)) without normalisation.
  double canonical_profile(double r, double kappa) const;

  // Shared lazily-built tables (radial exponent cache, ...). Copies share them.
  struct Caches;
  const std::shared_ptr<Caches>& caches() const { return caches_; }

 private:
  std::string name_;
  int dim_;
  GaussianPart gaussian_;
  std::optional<PolyScale> poly_;
  ExpDamp damp_;
  double kappa1_, kappa2_;
  double comparability_gamma_;
  double normalization_;
  Vec anisotropy_;
  ClosedForm closed_;
  KernelProfile kernel_;
  double gaussian_norm_ = 0.0;
  std::shared_ptr<Caches> caches_;
};

// Surface area of the unit sphere in R^d.
double sphere_area(int dim);
// Average of cos(xi . u) over the unit sphere at |xi| = s, and 1 - that
// (computed without cancellation for small s).
double sphere_cos_average(int dim, double s);
double one_minus_sphere_cos_average(int dim, double s);
// Positive zeros of the sphere average s -> Lambda_d(s), k = 1, 2, ...
double sphere_cos_average_zero(int dim, int k);
// pi^{d/2} |Gamma(-alpha/2)| / (2^alpha Gamma((d+alpha)/2)).
double stable_constant(int dim, double alpha);

struct PsiValue {
  double value = 0.0;
  double abs_error = 0.0;
  double rel_target = 1e-8;
  enum class Method { ClosedForm, Quadrature, Gaussian } method = Method::Gaussian;
};

/// Levy exponent Psi(xi) = xi^T A xi + int (1 - cos xi.y) J(y) dy.
double psi(const LevyModel& model, const Vec& xi);
PsiValue psi_detailed(const LevyModel& model, const Vec& xi);
/// Same as psi() but never takes the closed-form path.
double psi_quadrature(const LevyModel& model, const Vec& xi);
/// Psi through the model's interpolated radial cache when the jump part needs
/// quadrature; closed forms pass straight through.
double psi_fast(const LevyModel& model, const Vec& xi);
/// Jump part of Psi for the isotropic radial profile at |xi| = s.
double psi_jump_radial(const LevyModel& model, double s);
double psi_jump_radial_fast(const LevyModel& model, double s);

/// J(x); throws DomainError at x = 0.
double jump_density(const LevyModel& model, const Vec& x);

/// Radial Levy-measure integrals of the isotropic profile
/// g(rho) = |S^{d-1}| j(rho) rho^{d-1}.
double levy_tail_mass(const LevyModel& model, double eps);       // int_{|y| >= eps} J
double levy_second_moment(const LevyModel& model, double eps);   // int_{|y| < eps} |y|^2 J
double levy_integrability(const LevyModel& model);               // int (1 ^ |y|^2) J

struct CheckEntry {
  std::string name;
  bool pass = false;
  double witness = 0.0;  // the constant the check produced
  std::string detail;
};

struct ValidationReport {
  std::vector<CheckEntry> entries;
  bool all_pass() const;
  const CheckEntry* find(const std::string& name) const;
};

struct ValidationOptions {
  double r_min = 1e-4;
  double r_max = 1e4;
  int per_decade = 25;
};

/// Grid checks of the structural conditions. Failures are report entries.
ValidationReport validate(const LevyModel& model, const ValidationOptions& opt = {});

/// UJS constant sup J(y) r^d / int_{B(y,r)} J over the sampled (|y|, r) grid.
double ujs_constant(const LevyModel& model, const ValidationOptions& opt = {});

}  // namespace levyheat
