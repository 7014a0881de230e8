#ifndef RIESZLAB_GEOMETRY_PATCH_HPP
#define RIESZLAB_GEOMETRY_PATCH_HPP

#include "rieszlab/core.hpp"
#include "rieszlab/geometry/chart.hpp"

#include <array>
#include <functional>
#include <memory>
#include <vector>

namespace rieszlab::geometry {

/// Warm-start state for repeated height evaluations along a path.
struct PatchHint {
  Vec q;
  bool valid = false;
};

/// Local graph of the surface over its tangent plane at `base`:
/// y = base + T u + N h(u) for |u| < radius, with h(0) = 0 and Dh(0) = 0.
class GraphPatch {
 public:
  GraphPatch(Vec base, Mat tangent, Mat normal, double radius);
  virtual ~GraphPatch() = default;

  int dim() const { return static_cast<int>(tangent_.cols()); }
  int ambient() const { return static_cast<int>(tangent_.rows()); }
  int codim() const { return static_cast<int>(normal_.cols()); }
  const Vec& base() const { return base_; }
  const Mat& tangent() const { return tangent_; }
  const Mat& normal() const { return normal_; }
  double radius() const { return radius_; }
  void set_radius(double r) { radius_ = r; }

  /// Height h(u) (codim) and Jacobian Dh(u) (codim x m). Returns false when
  /// u is outside the region the patch can represent.
  virtual bool height(const Vec& u, Vec& h, Mat& dh, PatchHint* hint) const = 0;

  Vec embed(const Vec& u, const Vec& h) const;
  /// Whether an ambient point lies on this sheet of the surface.
  bool contains(const Vec& y, double tol = 1e-8) const;

 protected:
  Vec base_;
  Mat tangent_, normal_;
  double radius_;
};

/// Patch given by a closure; used for analytic test geometry.
class FunctionPatch : public GraphPatch {
 public:
  using HeightFn = std::function<bool(const Vec& u, Vec& h, Mat& dh)>;
  FunctionPatch(Vec base, Mat tangent, Mat normal, double radius, HeightFn f);
  bool height(const Vec& u, Vec& h, Mat& dh, PatchHint* hint) const override;

 private:
  HeightFn f_;
};

/// Patch of a chart: h(u) is found by Newton iteration on the chart
/// parameter so that T^T (X(q) - base) = u.
class ChartPatch : public GraphPatch {
 public:
  ChartPatch(const Chart& chart, Vec q0, Vec base, Mat tangent, Mat normal,
             double radius);
  bool height(const Vec& u, Vec& h, Mat& dh, PatchHint* hint) const override;

 private:
  Chart chart_;
  Vec q0_;
  double det0_;  // sign of the tangent projection Jacobian at the base
};

/// Polynomial height without constant or linear terms, one polynomial per
/// normal direction. Exponents list (a, b) for u1^a u2^b (b = 0 when m = 1).
class PolynomialPatch : public GraphPatch {
 public:
  PolynomialPatch(Vec base, Mat tangent, Mat normal, double radius,
                  std::vector<std::array<int, 2>> exponents, Mat coefficients);
  bool height(const Vec& u, Vec& h, Mat& dh, PatchHint* hint) const override;
  const Mat& coefficients() const { return coeff_; }
  const std::vector<std::array<int, 2>>& exponents() const { return exps_; }

 private:
  std::vector<std::array<int, 2>> exps_;
  Mat coeff_;  // codim x terms
};

/// Measured derivative sup-bounds of h on a polar grid.
struct PatchBounds {
  // sup |d^mu h| over the grid for |mu| = 0, 1, 2, 3
  std::array<double, 4> by_order{};
  double b = 0.0;  // max over orders 1..k
  double validated_radius = 0.0;
  int radial_samples = 0, angular_samples = 0;
};

/// Samples h on radial x angular polar grid up to `radius` and returns the
/// largest radius on which the patch is representable (height evaluation
/// succeeds and the chord length grows along every ray), with the derivative
/// bounds measured there. Second and third derivatives use central
/// differences of Dh.
PatchBounds measure_patch(const GraphPatch& patch, double radius,
                          int radial = 16, int angular = 16, int k = 3);

}  // namespace rieszlab::geometry

#endif
