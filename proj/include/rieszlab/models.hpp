#ifndef RIESZLAB_MODELS_HPP
#define RIESZLAB_MODELS_HPP

#include <optional>
#include <string>
#include <vector>

namespace rieszlab::models {

enum class Law { finite_limit, logarithmic, power };

std::string to_string(Law law);

/// Growth law of values V(c) as a cutoff c decreases to 0. The power model
/// V = A + B c^p takes p from a log-log fit of successive increments; the
/// logarithmic model is V = A + B log(1/c). The power model wins when its
/// residual is at least 4 times smaller and |p| >= 0.05; p > 0 is a finite
/// limit.
struct FitReport {
  Law law = Law::finite_limit;
  double exponent = 0.0;  // p of the power model (0 for a log law)
  double log_slope = 0.0;  // B of the log model
  double r2_log = 0.0;  // R^2 of V against log(1/c)
  double r2_power = 0.0;  // R^2 of the power model
  double residual_ratio = 0.0;  // log-model residual / power-model residual
  double limit = 0.0;  // A of the power model (finite limits)
  std::vector<double> cutoffs;
  std::vector<double> values;
  // Increment per unit of log(1/c) between successive cutoffs.
  std::vector<double> segment_slopes;
  bool divergent() const { return law != Law::finite_limit; }
};

/// Cutoffs must be positive and strictly decreasing, at least 3 of them.
FitReport classify_cutoff_law(const std::vector<double>& cutoffs, const std::vector<double>& values);

/// Geometric sequence from `first` down to `last` with `count` points.
std::vector<double> geometric_cutoffs(double first, double last, int count);

// ---- model integrals of double points ----

/// 8 pi^2 rho^(alpha+4) (sqrt(2)^(alpha+2) - 1) / ((alpha+2)(alpha+4)), with
/// the limit 2 pi^2 rho^2 log 2 at alpha = -2. Requires alpha > -4.
double orthogonal_closed_form(double alpha, double rho);

/// (2 pi)^2 ∫∫ (t^2 + s^2)^(alpha/2) t s over [0, rho]^2 minus the disk
/// t^2 + s^2 < cutoff^2.
double orthogonal_model_value(double alpha, double rho, double cutoff = 0.0);

struct ModelIntegral {
  double value = 0.0;  // NaN when divergent
  double closed_form = 0.0;  // NaN when divergent
  bool divergent = false;
  std::optional<FitReport> cutoff_study;  // set when divergent
};

/// Orthogonal self-intersection of two flat m = 2 discs of radius rho. For
/// alpha <= -4 the value is replaced by a cutoff study.
ModelIntegral orthogonal_model_integral(double alpha, double rho,
                                        const std::vector<double>& cutoffs = {});

FitReport orthogonal_model_scan(double alpha, double rho, const std::vector<double>& cutoffs);

/// ∫_{rho_min}^R (∫_0^R ((rho/2)^4 + r^2)^(alpha/2) r dr) rho d rho:
/// a sphere touching its tangent plane.
double tangent_model_value(double alpha, double R, double rho_min);
FitReport tangent_model_scan(double alpha, double R, const std::vector<double>& rho_min);

/// ∫_c^1 (∫_c^1 (r + rho)^alpha rho d rho) r dr: the two nappes of a cone.
double cone_model_value(double alpha, double cutoff);
FitReport cone_model_scan(double alpha, const std::vector<double>& cutoffs);

// ---- two-body sweep ----

/// c_1 = 0.9 (1 - 2^-m) Vol(B^m).
double annulus_constant(int m);

/// lambda_alpha(delta, rho) = 2^alpha c_1^2 rho^(2m+alpha) (1 + delta/rho)^alpha.
double lambda_bound(int m, double alpha, double delta, double rho);

/// Σ_{j >= 0} lambda_alpha(delta, eps3 / 2^j) until the terms fall below
/// 1e-17 of the sum.
double lambda_bound_sum(int m, double alpha, double delta, double eps3);

enum class ContactKind {
  // m-spheres in complementary (m+1)-planes of R^(2m+1) through the gap
  // axis: the tangent planes at the closest points are orthogonal
  transversal,
  // coaxial m-spheres in R^(m+1): parallel tangent planes at the gap
  tangential
};

std::string to_string(ContactKind kind);

/// ∬_{S1 x S2} |x - y|^alpha for two round m-spheres of the given radius at
/// gap delta.
double cross_energy(int m, double alpha, double radius, double delta,
                    ContactKind kind = ContactKind::transversal);

struct SweepRow {
  double delta = 0.0;
  double energy = 0.0;
  double lambda_sum = 0.0;
};

struct SweepReport {
  int m = 2;
  double alpha = 0.0;
  double radius = 1.0;
  ContactKind kind = ContactKind::transversal;
  std::vector<SweepRow> rows;
  // power for alpha < -2m, logarithmic at alpha = -2m, bounded otherwise
  Law predicted = Law::power;
  double predicted_exponent = 0.0;  // 2m + alpha
  FitReport fit;
  double log_r2 = 0.0;  // R^2 of energy against log(1/delta)
  double power_exponent = 0.0;  // log-log slope of energy increments
  bool bound_holds = true;  // energy >= lambda sum on every row
};

/// Default delta sequence: 0.1, 0.05, 0.025, 0.0125.
std::vector<double> default_deltas();

SweepReport two_body_sweep(int m, double alpha, double radius, const std::vector<double>& deltas,
                           ContactKind kind = ContactKind::transversal);

std::string to_json(const FitReport& r);
std::string to_json(const ModelIntegral& r);
std::string to_json(const SweepReport& r);
/// alpha,delta,energy,lambda_bound_sum rows with a header line.
std::string to_csv(const SweepReport& r);

}  // namespace rieszlab::models

#endif
