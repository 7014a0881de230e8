#ifndef RIESZLAB_MOEBIUS_HPP
#define RIESZLAB_MOEBIUS_HPP

#include "rieszlab/geometry/surface.hpp"
#include "rieszlab/riesz.hpp"

#include <optional>
#include <string>
#include <variant>

namespace rieszlab::moebius {

using geometry::Surface;

/// cos of the combined angle between T_yM and the tangent space at y of the
/// m-sphere tangent to M at x through y. `tx` is an oriented orthonormal
/// tangent basis at x, `wy` any oriented tangent basis at y (n x m).
double combined_angle_cos(const Vec& x, const Mat& tx, const Vec& y, const Mat& wy);
double combined_angle_cos(const geometry::ChartSurface& s, const geometry::ChartPoint& x,
                          const geometry::ChartPoint& y);
/// Mesh vertices with fitted frames.
double combined_angle_cos(const geometry::TriMesh& mesh, int x, int y);

/// Eigenvalues of the rank-one matrix (a_i a_j), descending:
/// |a|^2, 0, ..., 0.
Vec outer_product_eigenvalues(const Vec& a);

struct KSOptions {
  int order = 16;  // chart rule order
  bool estimate_error = true;  // second evaluation at about 3/4 of `order`
  // Non-embedded meshes (coincident non-adjacent vertices) are rejected
  // unless this is set.
  bool allow_immersed = false;
};

/// Per-node data of the KS quadrature: position, weight, oriented tangent
/// frame (and unit normal for surfaces in R^3), local node spacing, and the
/// bounded limit of the integrand at the node.
struct KSNode {
  Vec x;
  Mat tangent;
  Vec normal;  // set for m = 2, n = 3
  double w = 0.0;
  double spacing = 0.0;
  double limit = 0.0;
  int component = 0;
};

/// Node data of a mesh vertex from its fitted frame and patch. `component`
/// labels the connected component of the vertex.
KSNode ks_mesh_node(const geometry::TriMesh& mesh, int vertex, int component = 0);

/// Integrand between node a and node b (a's limit at coincidence or below a
/// quarter of a's spacing).
double ks_pair(const KSNode& a, const KSNode& b);

/// Σ_i Σ_j w_i w_j ks_pair(i, j) in fixed order.
double ks_sum(const std::vector<KSNode>& nodes);

/// ∬ (1 - cos θ)^m / |x - y|^(2m) by product quadrature. Pairs closer than a
/// quarter of the local node spacing, including the diagonal, take the
/// bounded limit of the integrand at x. The report's `near` is that
/// diagonal part, `far` the rest.
riesz::EnergyReport ks_energy(const Surface& s, const KSOptions& opt = {});

struct ASReport {
  double value = 0.0;
  double s = 0.0;
  riesz::EnergyReport e4;        // E_{-4}
  double delta_log_delta = 0.0;  // (pi/16) ∫ Δ log Δ
  double topological = 0.0;      // (pi^2/2) χ
  double delta_integral = 0.0;   // ∫ Δ (multiplied by s in the value)
  int euler = 0;
  double error_estimate = 0.0;
};

/// E_{-4} + (pi/16) ∫ Δ log Δ + (pi^2/2) χ + s ∫ Δ for surfaces (m = 2).
ASReport as_energy(const Surface& surface, double s, const riesz::EnergyOptions& opt = {});

enum class MapKind { inversion, similarity };

struct MoebiusMap {
  MapKind kind = MapKind::inversion;
  Vec center;          // inversion center, or the shift of a similarity
  double radius = 1.0; // inversion radius, or the similarity scale
  Mat rotation;        // similarities only; empty means the identity
};

geometry::AmbientMap ambient_map(const MoebiusMap& map, int n);

struct MappedSurface {
  Surface surface;
  int orientation = 1;  // -1 when the map reverses the ambient orientation
};

/// Image surface: charts are composed with the map, mesh vertices mapped.
/// Throws a singular-map error when an inversion center is on the surface.
MappedSurface apply_moebius(const Surface& s, const MoebiusMap& map);

struct EnergySelector {
  enum class Kind { ks, as } kind = Kind::ks;
  double s = 0.0;  // AS parameter
};

struct InvarianceConfig {
  int order = 16;          // chart rule order
  int refined_order = 24;  // chart rule order of the refined comparison
  // Finer discretization of the same surface for the refined comparison.
  // Required for meshes (e.g. one more subdivision level); for charts it
  // replaces the refined order.
  std::optional<Surface> refined;
};

struct InvarianceReport {
  std::string energy;
  double original = 0.0;
  double mapped = 0.0;
  double relative_difference = 0.0;
  // The same comparison on the refined discretization, when there is one.
  bool has_refinement = false;
  double refined_original = 0.0;
  double refined_mapped = 0.0;
  double refined_relative_difference = 0.0;
  bool decreasing = false;  // refined difference strictly smaller
  int order = 0, refined_order = 0;
  int nodes = 0, refined_nodes = 0;
  int orientation = 1;
  MoebiusMap map;
};

/// E(M) against E(T(M)) on the given discretization and on its refinement.
InvarianceReport moebius_invariance_check(const Surface& s, const MoebiusMap& map,
                                          const EnergySelector& energy,
                                          const InvarianceConfig& config = {});

std::string to_json(const ASReport& r);
std::string to_json(const InvarianceReport& r);

}  // namespace rieszlab::moebius

#endif
