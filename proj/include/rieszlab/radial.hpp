#ifndef RIESZLAB_RADIAL_HPP
#define RIESZLAB_RADIAL_HPP

#include "rieszlab/core.hpp"
#include "rieszlab/geometry/patch.hpp"

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace rieszlab::radial {

/// Volume of the unit k-sphere in R^{k+1}: 2, 2 pi, 4 pi, ...
double sphere_volume(int k);
/// Volume of the unit ball in R^m.
double ball_volume(int m);

struct EnergyParams {
  double alpha = 0.0;
  int m = 1;

  EnergyParams() = default;
  EnergyParams(double a, int dim);
  /// max(floor(-alpha) - m, 0): number of Taylor terms to subtract.
  int alpha_bar() const;
  /// alpha within 1e-12 of {-m, -m-2, -m-4, ...}.
  bool pole() const;
  /// Taylor index j with alpha + m + j = 0 (pole only), else -1.
  int log_index() const;
};

/// A function known near 0 through its derivatives there.
struct SmoothFunction {
  std::function<double(double)> value;
  std::vector<double> derivatives;  // g(0), g'(0), g''(0), ...
};

/// g(t)/t extended continuously by 0 at t = 0, for g(0) = g'(0) = 0. The
/// derivatives at 0 follow g_bar^(j)(0) = g^(j+1)(0) / (j + 1).
SmoothFunction safe_ratio(const SmoothFunction& g);

struct RadialPoint {
  double xi = 0.0;
  double dxi_dt = 1.0;
  double residual = 0.0;  // |xi^2 + |h|^2 - t^2|
  int iterations = 0;
  Vec h;
  Mat dh;
};

/// Solves xi^2 + |h(xi v)|^2 = t^2 for xi >= 0 by Newton iteration from
/// xi = t, and returns d xi / d t = t / (xi + <h, Dh v>).
RadialPoint radial_inverse(const geometry::GraphPatch& patch, const Vec& v, double t,
                           geometry::PatchHint* hint = nullptr);

/// Directions and weights on S^{m-1}: the two points +-1 for m = 1, a
/// periodic trapezoid rule for m = 2.
struct AngularRule {
  std::vector<Vec> directions;
  std::vector<double> weights;
};
AngularRule angular_rule(int m, int nodes = 64);

/// phi_bar(t) = int_{S^{m-1}} J(xi v) (xi/t)^{m-1} dxi/dt dv with
/// J = sqrt(det(I + Dh^T Dh)). Keeps per-direction warm starts, so one
/// instance must not be shared between threads.
class RadialDensity {
 public:
  RadialDensity(std::shared_ptr<const geometry::GraphPatch> patch, int angular_nodes = 64);
  double operator()(double t);
  int dim() const { return m_; }
  long evaluations() const { return evaluations_; }

 private:
  std::shared_ptr<const geometry::GraphPatch> patch_;
  int m_;
  AngularRule rule_;
  std::vector<geometry::PatchHint> hints_;
  long evaluations_ = 0;
};

/// Cutoff equal to 1 on [0, eps/2] and 0 on [eps, inf), a polynomial
/// smoothstep in between that is C^6 at both joins.
double smooth_cutoff(double t, double eps);

struct ProfileOptions {
  int angular_nodes = 64;
  int fit_samples = 20;
  int fit_degree = 8;            // highest power of t^2
  double fit_tolerance = 1e-7;   // rms residual relative to sigma
  bool constrain_odd = true;     // unconstrained fits report odd terms too
};

struct RadialProfile {
  int m = 1;
  double sigma = 0.0;   // phi_bar(0)
  double radius = 0.0;  // largest t the density is valid for
  std::vector<double> t, phi;    // samples on (0, radius], fitted up to radius/2
  std::vector<double> taylor;    // phi_bar^(j)(0) / j!, j = 0, 1, ...
  double fit_residual = 0.0;     // rms residual / sigma
  // Density integrated against t^(alpha+m-1): phi_bar, or cutoff * phi_bar.
  std::function<double(double)> density;
  bool cutoff = false;
  double cutoff_radius = 0.0;
  // The Taylor series stands for the density on [0, series_range]; 0 when
  // only the listed leading coefficients are known.
  double series_range = 0.0;

  /// Profile built from a known density and its Taylor coefficients.
  static RadialProfile from_function(int m, std::function<double(double)> density,
                                     std::vector<double> taylor, double radius,
                                     double series_range = 0.0);
  /// Same profile with density replaced by smooth_cutoff(t, eps) * density.
  RadialProfile with_cutoff(double eps) const;
  double taylor_value(double t, int order) const;
};

/// Samples phi_bar on (0, radius/2] and fits the even Taylor polynomial with
/// phi_bar(0) pinned to sigma_{m-1}. Throws a numerical error carrying the
/// residual when the fit misses its tolerance.
RadialProfile radial_profile(std::shared_ptr<const geometry::GraphPatch> patch, double radius,
                             const ProfileOptions& opt = {});

struct FinitePartResult {
  double value = 0.0;
  // (exponent alpha+m+j, coefficient of eps^exponent) for the subtracted terms
  std::vector<std::pair<double, double>> subtracted;
  double log_coefficient = 0.0;
  double error = 0.0;
  int evaluations = 0;
};

struct FinitePartOptions {
  // [0, tail_fraction eps] at least uses the series, and all of series_range
  double tail_fraction = 1.0 / 16.0;
  double rel_tol = 1e-11;
  double abs_tol = 1e-14;
};

/// Hadamard finite part of int_0^eps t^(alpha+m-1) density(t) dt.
FinitePartResult finite_part(const EnergyParams& params, const RadialProfile& profile,
                             double eps, const FinitePartOptions& opt = {});

/// Plain int_a^b t^(alpha+m-1) density(t) dt with grading toward a = 0.
double plain_integral(const EnergyParams& params, const RadialProfile& profile, double a,
                      double b, double* error = nullptr);

/// (t, phi) rows.
std::string profile_csv(const RadialProfile& p);
/// JSON header: m, sigma, radius, taylor, fit_residual.
std::string profile_header_json(const RadialProfile& p);
void write_profile(const RadialProfile& p, const std::string& csv_path,
                   const std::string& json_path);

}  // namespace rieszlab::radial

#endif
