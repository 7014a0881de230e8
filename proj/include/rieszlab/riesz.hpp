#ifndef RIESZLAB_RIESZ_HPP
#define RIESZLAB_RIESZ_HPP

#include "rieszlab/geometry/surface.hpp"
#include "rieszlab/radial.hpp"

#include <optional>
#include <string>

namespace rieszlab::riesz {

using radial::EnergyParams;

struct EnergyOptions {
  int order = 16;       // chart rule order of the outer nodes
  // Rule order of the far-field nodes on charts; 0: 4 * order, raised until
  // the node spacing is below eps0 / 24.
  int far_order = 0;
  double eps0 = 0.0;    // near-ball radius; 0 picks default_eps0
  int angular_nodes = 64;
  // Second evaluation at a lower order; the difference is reported as the
  // quadrature part of the error estimate.
  bool estimate_error = true;
  int coarse_order = 0;  // 0: about 3/4 of `order`
  // Meshes: near balls from fitted vertex patches (m = 2, n = 3). Without
  // them only alpha > -m is supported, with a flat self-cell correction.
  bool mesh_patches = true;
  radial::ProfileOptions profile;
  radial::FinitePartOptions finite_part;
};

struct EnergyReport {
  double value = 0.0;
  double near = 0.0;
  double far = 0.0;
  double eps0 = 0.0;
  double error_estimate = 0.0;
  std::optional<double> residue;  // poles only: integral of the log coefficient
  double alpha = 0.0;
  int m = 0;
  int nodes = 0;
  int order = 0;
};

/// ∫_M Pf ∫_M |x - y|^alpha dy dx: finite part over a smoothly cut off near
/// ball on the sheet through x, direct quadrature elsewhere.
EnergyReport riesz_energy(const geometry::Surface& s, const EnergyParams& params,
                          const EnergyOptions& opt = {});

/// 0.75 of the reach (charts); meshes: half the smallest fitted curvature
/// radius, at least 2.5 mean edge lengths. Capped by half the distance
/// between components.
double default_eps0(const geometry::Surface& s, int order = 16);

/// Far-field kernel (1 - chi(|x-y|)) |x-y|^alpha on the sheet, |x-y|^alpha
/// off it, between all pairs of quadrature nodes (weights not applied).
Mat far_kernel(const geometry::Surface& s, const EnergyParams& params,
               const EnergyOptions& opt = {});

std::string to_json(const EnergyReport& r);

enum class OracleShape { circle, sphere };

/// Closed forms of ∬|x-y|^z for the round circle in R^2 and the round
/// 2-sphere in R^3 of the given radius. Throws PoleError with the residue at
/// poles (circle: z = -1, -3, ...; sphere: z = -2).
double beta_oracle(OracleShape shape, double radius, double z);
/// Residue of the closed form at a pole.
double oracle_residue(OracleShape shape, double radius, double z);
bool oracle_pole(OracleShape shape, double z);
/// Constant Laurent term of the closed form at a pole.
double finite_part_at_pole(OracleShape shape, double radius, double z);

struct ScalingReport {
  double lambda = 1.0;
  double exponent = 0.0;  // 2m + alpha
  double base = 0.0;      // E(M)
  double scaled = 0.0;    // E(lambda M)
  double predicted = 0.0; // lambda^(2m+alpha) E(M), plus the log term at poles
  double discrepancy = 0.0;
  double tolerance = 0.0;  // combined error estimates
  bool pole = false;
  // poles: (E(lambda M) lambda^-(2m+alpha) - E(M)) / log lambda, and the residue
  double fitted_log_coefficient = 0.0;
  double residue = 0.0;
  bool pass = false;
};

ScalingReport scaling_check(const geometry::Surface& s, const EnergyParams& params,
                            double lambda, const EnergyOptions& opt = {});

std::string to_json(const ScalingReport& r);

}  // namespace rieszlab::riesz

#endif
