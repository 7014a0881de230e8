#ifndef RIESZLAB_GEOMETRY_SURFACE_HPP
#define RIESZLAB_GEOMETRY_SURFACE_HPP

#include "rieszlab/core.hpp"
#include "rieszlab/geometry/chart.hpp"
#include "rieszlab/geometry/mesh.hpp"
#include "rieszlab/geometry/patch.hpp"

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace rieszlab::geometry {

using Surface = std::variant<ChartSurface, TriMesh>;

int dim(const Surface& s);
int ambient(const Surface& s);
std::string describe(const Surface& s);

/// Point on a chart surface: component index and atlas[0] parameter.
struct ChartPoint {
  int component = 0;
  Vec q;
};

/// Point on a mesh: a vertex, or a face with barycentric coordinates.
struct MeshPoint {
  int vertex = -1;
  int face = -1;
  Vec bary;
  static MeshPoint at_vertex(int v) { return MeshPoint{v, -1, {}}; }
};

struct Frames {
  Vec point;
  Mat tangent;  // n x m, orthonormal, oriented
  Mat normal;   // n x (n - m), orthonormal, [tangent normal] positively oriented
};

/// Orthonormal frames from a Jacobian. Tangent vectors come from a
/// Gram-Schmidt pass over the columns, so the tangent orientation follows
/// the parameter order; the normal completes a positively oriented basis.
Frames frames_from_jacobian(const Vec& point, const Mat& jacobian);

Frames tangent_frame(const ChartSurface& s, const ChartPoint& p);
Frames tangent_frame(const TriMesh& mesh, const MeshPoint& p);

/// Position of a locator point.
Vec point_of(const ChartSurface& s, const ChartPoint& p);
Vec point_of(const TriMesh& mesh, const MeshPoint& p);

/// Index of the atlas chart best conditioned at an ambient point of
/// component c, with its parameter.
std::pair<int, Vec> best_chart(const ChartComponent& c, const Vec& x);

struct CurvatureData {
  // h[i][j] in R^{n-m}, in the basis of the reported normal frame
  std::vector<std::vector<Vec>> h;
  Vec mean;  // H = trace h
  double hs_norm = 0.0;  // ||h||
  double delta = 0.0;
  double gauss = 0.0;
  std::optional<std::array<double, 2>> principal;  // hypersurfaces, m = 2
  Frames frames;
  double fit_residual = 0.0;  // rms of the local fit (meshes), 0 for charts
};

/// Curvature from second fundamental form values in an orthonormal frame.
CurvatureData curvature_from_form(const std::vector<std::vector<Vec>>& h);

CurvatureData curvature_at(const ChartSurface& s, const ChartPoint& p);
CurvatureData curvature_at(const TriMesh& mesh, int vertex);

enum class RadiusPolicy { strict, shrink };

struct PatchResult {
  std::shared_ptr<GraphPatch> patch;
  PatchBounds bounds;
  double requested = 0.0;
  // Pointwise rms residual of the local fit on meshes, 0 for charts.
  double fit_residual = 0.0;
};

/// Graph patch at a point with validated radius <= request. With the strict
/// policy a patch-radius error carrying the validated radius is thrown when
/// the request cannot be met.
PatchResult graph_patch_at(const ChartSurface& s, const ChartPoint& p, double radius,
                           RadiusPolicy policy = RadiusPolicy::strict);
PatchResult graph_patch_at(const TriMesh& mesh, int vertex, double radius,
                           RadiusPolicy policy = RadiusPolicy::strict);

/// Patch without bound measurement, for inner loops that validate through
/// the radial solver.
std::shared_ptr<GraphPatch> chart_patch(const ChartSurface& s, int component,
                                        const Vec& x, const Frames& frames,
                                        double radius);

/// Quadric-plus-cubic least squares fit over the 2-ring of a vertex in the
/// fitted tangent frame (m = 2, n = 3).
struct MeshFit {
  std::shared_ptr<PolynomialPatch> patch;
  Frames frames;
  double residual_rms = 0.0;
  int samples = 0;
};
MeshFit fit_vertex(const TriMesh& mesh, int vertex, double radius = 0.0);

/// Quadrature nodes of a surface with oriented frames.
struct SurfaceNodes {
  int m = 0, n = 0;
  std::vector<Vec> x;
  std::vector<double> w;
  std::vector<Mat> tangent;
  std::vector<Mat> normal;
  std::vector<int> component;
  std::vector<ChartPoint> chart_point;  // chart surfaces only
  std::vector<int> vertex;              // meshes only
  std::size_t size() const { return x.size(); }
};

/// Chart surfaces: tensor rules of each component at `order`; meshes: one
/// node per vertex with barycentric weight and fitted frame.
SurfaceNodes sample(const ChartSurface& s, int order);
SurfaceNodes sample(const TriMesh& mesh);

/// Smallest curvature radius over a sample (chart surfaces), used when the
/// catalog does not know the reach.
double estimated_reach(const ChartSurface& s, int order = 12);

struct PatchClassParams {
  int k = 3;
  double eps0 = 0.1;
  double b = 10.0;
  double volume = 20.0;
};

struct PatchViolation {
  int index;
  Vec point;
  std::string reason;
};

struct PatchClassReport {
  bool patches_ok = true;
  bool bounds_ok = true;
  bool volume_ok = true;
  bool pass = true;
  double volume = 0.0;
  double max_bound = 0.0;       // sup over samples of measured b
  double max_fit_residual = 0.0;  // meshes: pointwise residual measure
  double min_validated_radius = 0.0;
  int samples = 0;
  std::vector<PatchViolation> violations;
};

PatchClassReport validate_patch_class(const Surface& s, const PatchClassParams& params,
                                      int sample_order = 6);

/// Surface volume by quadrature (charts) or simplex sum (meshes).
double total_volume(const Surface& s, int order = 24);

/// Euler characteristic: catalog value for charts (closed components),
/// V - E + F for meshes.
int euler_characteristic(const Surface& s);

}  // namespace rieszlab::geometry

#endif
