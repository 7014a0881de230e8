#ifndef RIESZLAB_GEOMETRY_MESH_HPP
#define RIESZLAB_GEOMETRY_MESH_HPP

#include "rieszlab/core.hpp"
#include "rieszlab/geometry/chart.hpp"

#include <array>
#include <string>
#include <vector>

namespace rieszlab::geometry {

/// Simplicial mesh of a curve (m = 1, segments) or surface (m = 2,
/// triangles) in R^n. Face vertex order defines the orientation.
class TriMesh {
 public:
  TriMesh() = default;
  /// Checks index ranges and that no simplex is degenerate. Closedness and
  /// orientation are checked on demand by check_closed().
  TriMesh(int m, std::vector<Vec> vertices, std::vector<std::array<int, 3>> faces);

  int dim() const { return m_; }
  int ambient() const { return vertices_.empty() ? 0 : static_cast<int>(vertices_[0].size()); }
  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t face_count() const { return faces_.size(); }
  const std::vector<Vec>& vertices() const { return vertices_; }
  const std::vector<std::array<int, 3>>& faces() const { return faces_; }

  /// Same connectivity, new positions (re-validated).
  TriMesh with_vertices(std::vector<Vec> vertices) const;

  /// Sorted 1-ring vertex neighbors.
  const std::vector<std::vector<int>>& neighbors() const { return neighbors_; }
  /// Faces incident to each vertex.
  const std::vector<std::vector<int>>& vertex_faces() const { return vertex_faces_; }
  /// Vertices within k edges of v, including v, sorted.
  std::vector<int> ring(int v, int k) const;

  /// Barycentric vertex areas (m = 2) or half adjacent edge lengths (m = 1).
  std::vector<double> vertex_areas() const;
  double volume() const;
  double face_volume(int f) const;
  double mean_edge_length() const;
  double bounding_diagonal() const;
  /// Area-weighted face normal sum at v, normalized (m = 2, n = 3).
  Vec vertex_normal(int v) const;
  Vec face_normal(int f) const;

  /// Connected components as vertex labels.
  std::vector<int> component_labels() const;
  int component_count() const;

 private:
  int m_ = 2;
  std::vector<Vec> vertices_;
  std::vector<std::array<int, 3>> faces_;
  std::vector<std::vector<int>> neighbors_;
  std::vector<std::vector<int>> vertex_faces_;
  void build();
};

/// Throws a topology error unless every (m-1)-face is shared by exactly two
/// m-faces, and an orientation error unless neighbors induce opposite
/// orientations on their shared face.
void check_closed(const TriMesh& mesh);
bool is_closed(const TriMesh& mesh);

/// V - E + F for closed surfaces, 0 for closed curves.
int euler_characteristic(const TriMesh& mesh);

TriMesh disjoint_union(const TriMesh& a, const TriMesh& b);
TriMesh mapped(const TriMesh& mesh, const AmbientMap& map);
/// Reverses every face's orientation.
TriMesh flipped(const TriMesh& mesh);

TriMesh read_off(const std::string& path);
TriMesh read_obj(const std::string& path);
/// Dispatches on the file extension.
TriMesh read_mesh(const std::string& path);
void write_off(const TriMesh& mesh, const std::string& path);
void write_obj(const TriMesh& mesh, const std::string& path);

namespace meshes {
/// Subdivided icosahedron projected to the sphere.
TriMesh icosphere(int level, double radius = 1.0, const Vec& center = Vec::Zero(3));
TriMesh torus(double major, double minor, int nu, int nv);
/// Regular polygon approximating a circle in the plane.
TriMesh polygon(int n, double radius = 1.0);
/// Icosphere scaled by (a, b, c) along the axes.
TriMesh ellipsoid(int level, double a, double b, double c);
}  // namespace meshes

}  // namespace rieszlab::geometry

#endif
