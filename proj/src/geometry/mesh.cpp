#include "rieszlab/geometry/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <queue>
#include <sstream>

namespace rieszlab::geometry {

namespace {

int simplex_size(int m) { return m + 1; }

Vec cross3(const Vec& a, const Vec& b) {
  Vec c(3);
  c << a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0];
  return c;
}

double triangle_area(const Vec& a, const Vec& b, const Vec& c) {
  const Vec e1 = b - a, e2 = c - a;
  // Gram determinant works in any ambient dimension.
  const double g11 = e1.squaredNorm(), g22 = e2.squaredNorm(), g12 = e1.dot(e2);
  return 0.5 * std::sqrt(std::max(0.0, g11 * g22 - g12 * g12));
}

}  // namespace

TriMesh::TriMesh(int m, std::vector<Vec> vertices, std::vector<std::array<int, 3>> faces)
    : m_(m), vertices_(std::move(vertices)), faces_(std::move(faces)) {
  require(m == 1 || m == 2, ErrorKind::unsupported, "meshes support m = 1 and m = 2 only");
  require(!vertices_.empty() && !faces_.empty(), ErrorKind::precondition,
          "mesh: no vertices or faces");
  const long n = vertices_[0].size();
  require(n > m, ErrorKind::precondition, "mesh: ambient dimension must exceed m");
  for (const auto& v : vertices_) {
    require(v.size() == n, ErrorKind::precondition, "mesh: mixed vertex dimensions");
    require(v.allFinite(), ErrorKind::precondition, "mesh: non-finite vertex");
  }
  const int nv = static_cast<int>(vertices_.size());
  for (std::size_t f = 0; f < faces_.size(); ++f) {
    auto& face = faces_[f];
    if (m == 1) face[2] = -1;
    for (int k = 0; k < simplex_size(m); ++k)
      require(face[k] >= 0 && face[k] < nv, ErrorKind::precondition,
              "mesh: face " + std::to_string(f) + " has an out-of-range vertex index");
    require(face_volume(static_cast<int>(f)) > 0.0, ErrorKind::precondition,
            "mesh: face " + std::to_string(f) + " is degenerate");
  }
  build();
}

void TriMesh::build() {
  const std::size_t nv = vertices_.size();
  neighbors_.assign(nv, {});
  vertex_faces_.assign(nv, {});
  for (std::size_t f = 0; f < faces_.size(); ++f) {
    const auto& face = faces_[f];
    const int s = simplex_size(m_);
    for (int a = 0; a < s; ++a) {
      vertex_faces_[face[a]].push_back(static_cast<int>(f));
      for (int b = 0; b < s; ++b)
        if (a != b) neighbors_[face[a]].push_back(face[b]);
    }
  }
  for (auto& nb : neighbors_) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
}

TriMesh TriMesh::with_vertices(std::vector<Vec> vertices) const {
  require(vertices.size() == vertices_.size(), ErrorKind::precondition,
          "mesh: vertex count changed");
  return TriMesh(m_, std::move(vertices), faces_);
}

std::vector<int> TriMesh::ring(int v, int k) const {
  std::vector<int> dist(vertices_.size(), -1);
  std::vector<int> out{v};
  std::queue<int> q;
  dist[v] = 0;
  q.push(v);
  while (!q.empty()) {
    const int a = q.front();
    q.pop();
    if (dist[a] == k) continue;
    for (int b : neighbors_[a])
      if (dist[b] < 0) {
        dist[b] = dist[a] + 1;
        out.push_back(b);
        q.push(b);
      }
  }
  std::sort(out.begin(), out.end());
  return out;
}

double TriMesh::face_volume(int f) const {
  const auto& face = faces_[f];
  if (m_ == 1) return (vertices_[face[1]] - vertices_[face[0]]).norm();
  return triangle_area(vertices_[face[0]], vertices_[face[1]], vertices_[face[2]]);
}

std::vector<double> TriMesh::vertex_areas() const {
  std::vector<double> a(vertices_.size(), 0.0);
  const int s = simplex_size(m_);
  for (std::size_t f = 0; f < faces_.size(); ++f) {
    const double share = face_volume(static_cast<int>(f)) / s;
    for (int k = 0; k < s; ++k) a[faces_[f][k]] += share;
  }
  return a;
}

double TriMesh::volume() const {
  CompensatedSum s;
  for (std::size_t f = 0; f < faces_.size(); ++f) s.add(face_volume(static_cast<int>(f)));
  return s.value();
}

double TriMesh::mean_edge_length() const {
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t a = 0; a < neighbors_.size(); ++a)
    for (int b : neighbors_[a])
      if (static_cast<int>(a) < b) {
        total += (vertices_[a] - vertices_[b]).norm();
        ++count;
      }
  return count ? total / count : 0.0;
}

double TriMesh::bounding_diagonal() const {
  Vec lo = vertices_[0], hi = vertices_[0];
  for (const auto& v : vertices_) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  return (hi - lo).norm();
}

Vec TriMesh::face_normal(int f) const {
  require(m_ == 2 && ambient() == 3, ErrorKind::unsupported,
          "face normals need a surface in R^3");
  const auto& face = faces_[f];
  return cross3(vertices_[face[1]] - vertices_[face[0]], vertices_[face[2]] - vertices_[face[0]])
      .normalized();
}

Vec TriMesh::vertex_normal(int v) const {
  require(m_ == 2 && ambient() == 3, ErrorKind::unsupported,
          "vertex normals need a surface in R^3");
  Vec n = Vec::Zero(3);
  for (int f : vertex_faces_[v]) {
    const auto& face = faces_[f];
    n += cross3(vertices_[face[1]] - vertices_[face[0]], vertices_[face[2]] - vertices_[face[0]]);
  }
  return n.normalized();
}

std::vector<int> TriMesh::component_labels() const {
  std::vector<int> parent(vertices_.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t a = 0; a < neighbors_.size(); ++a)
    for (int b : neighbors_[a]) parent[find(static_cast<int>(a))] = find(b);
  std::map<int, int> relabel;
  std::vector<int> out(vertices_.size());
  for (std::size_t v = 0; v < out.size(); ++v) {
    const int r = find(static_cast<int>(v));
    auto it = relabel.find(r);
    if (it == relabel.end()) it = relabel.emplace(r, static_cast<int>(relabel.size())).first;
    out[v] = it->second;
  }
  return out;
}

int TriMesh::component_count() const {
  const auto l = component_labels();
  return l.empty() ? 0 : *std::max_element(l.begin(), l.end()) + 1;
}

namespace {
// Empty string when closed and consistently oriented, else the reason.
std::pair<ErrorKind, std::string> closed_defect(const TriMesh& mesh) {
  const auto& faces = mesh.faces();
  for (std::size_t v = 0; v < mesh.vertex_count(); ++v)
    if (mesh.vertex_faces()[v].empty())
      return {ErrorKind::topology, "vertex " + std::to_string(v) + " is not used by any face"};
  if (mesh.dim() == 1) {
    std::vector<int> out(mesh.vertex_count(), 0), in(mesh.vertex_count(), 0);
    for (const auto& f : faces) {
      ++out[f[0]];
      ++in[f[1]];
    }
    for (std::size_t v = 0; v < out.size(); ++v) {
      if (out[v] + in[v] != 2)
        return {ErrorKind::topology,
                "vertex " + std::to_string(v) + " is not shared by exactly two segments"};
      if (out[v] != 1)
        return {ErrorKind::orientation,
                "segments at vertex " + std::to_string(v) + " are inconsistently oriented"};
    }
    return {ErrorKind::topology, ""};
  }
  std::map<std::pair<int, int>, std::pair<int, int>> edges;  // (forward, backward)
  for (const auto& f : faces)
    for (int k = 0; k < 3; ++k) {
      const int a = f[k], b = f[(k + 1) % 3];
      auto& e = edges[{std::min(a, b), std::max(a, b)}];
      (a < b ? e.first : e.second)++;
    }
  for (const auto& [key, e] : edges) {
    if (e.first + e.second != 2)
      return {ErrorKind::topology, "edge (" + std::to_string(key.first) + ", " +
                                       std::to_string(key.second) +
                                       ") is not shared by exactly two faces"};
    if (e.first != 1)
      return {ErrorKind::orientation, "faces at edge (" + std::to_string(key.first) + ", " +
                                          std::to_string(key.second) +
                                          ") are inconsistently oriented"};
  }
  return {ErrorKind::topology, ""};
}
}  // namespace

void check_closed(const TriMesh& mesh) {
  const auto [kind, why] = closed_defect(mesh);
  if (!why.empty()) fail(kind, "mesh is not closed and oriented: " + why);
}

bool is_closed(const TriMesh& mesh) { return closed_defect(mesh).second.empty(); }

int euler_characteristic(const TriMesh& mesh) {
  check_closed(mesh);
  if (mesh.dim() == 1) return 0;
  std::size_t edges = 0;
  for (const auto& nb : mesh.neighbors()) edges += nb.size();
  edges /= 2;
  return static_cast<int>(mesh.vertex_count()) - static_cast<int>(edges) +
         static_cast<int>(mesh.face_count());
}

TriMesh disjoint_union(const TriMesh& a, const TriMesh& b) {
  require(a.dim() == b.dim() && a.ambient() == b.ambient(), ErrorKind::precondition,
          "disjoint union: meshes of different dimensions");
  std::vector<Vec> v = a.vertices();
  v.insert(v.end(), b.vertices().begin(), b.vertices().end());
  auto f = a.faces();
  const int off = static_cast<int>(a.vertex_count());
  for (auto face : b.faces()) {
    for (int k = 0; k < a.dim() + 1; ++k) face[k] += off;
    f.push_back(face);
  }
  return TriMesh(a.dim(), std::move(v), std::move(f));
}

TriMesh mapped(const TriMesh& mesh, const AmbientMap& map) {
  std::vector<Vec> v;
  v.reserve(mesh.vertex_count());
  Vec img;
  Mat dt;
  for (const auto& p : mesh.vertices()) {
    map.apply(p, img, dt, nullptr);
    v.push_back(img);
  }
  return mesh.with_vertices(std::move(v));
}

TriMesh flipped(const TriMesh& mesh) {
  auto f = mesh.faces();
  for (auto& face : f) std::swap(face[0], face[1]);
  return TriMesh(mesh.dim(), mesh.vertices(), std::move(f));
}

namespace {

std::vector<std::string> tokens(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  std::string t;
  while (is >> t) {
    if (t[0] == '#') break;
    out.push_back(t);
  }
  return out;
}

TriMesh assemble(std::vector<Vec> verts, std::vector<std::vector<int>> polys,
                 const std::string& path) {
  require(!polys.empty(), ErrorKind::io, path + ": no faces");
  const std::size_t arity = polys[0].size();
  require(arity == 2 || arity == 3, ErrorKind::io,
          path + ": only segments and triangles are supported");
  for (const auto& p : polys)
    require(p.size() == arity, ErrorKind::io, path + ": mixed face arities");
  const int m = static_cast<int>(arity) - 1;
  // Planar curves stored with z = 0 are read back into R^2.
  if (m == 1) {
    bool planar = true;
    for (const auto& v : verts) planar = planar && v.size() == 3 && v[2] == 0.0;
    if (planar)
      for (auto& v : verts) v = Vec(v.head(2));
  }
  std::vector<std::array<int, 3>> faces;
  for (const auto& p : polys) faces.push_back({p[0], p[1], arity == 3 ? p[2] : -1});
  return TriMesh(m, std::move(verts), std::move(faces));
}

double parse_double(const std::string& s, const std::string& path) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return d;
  } catch (const std::exception&) {
    fail(ErrorKind::io, path + ": bad number '" + s + "'");
  }
}

int parse_int(const std::string& s, const std::string& path) {
  try {
    std::size_t pos = 0;
    const int d = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return d;
  } catch (const std::exception&) {
    fail(ErrorKind::io, path + ": bad integer '" + s + "'");
  }
}

}  // namespace

TriMesh read_off(const std::string& path) {
  std::ifstream in(path);
  require(bool(in), ErrorKind::io, "cannot open " + path);
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line))
    for (auto& t : tokens(line)) words.push_back(t);
  std::size_t i = 0;
  require(!words.empty() && words[i] == "OFF", ErrorKind::io, path + ": missing OFF header");
  ++i;
  require(words.size() >= 4, ErrorKind::io, path + ": truncated header");
  const int nv = parse_int(words[i++], path), nf = parse_int(words[i++], path);
  ++i;  // edge count
  std::vector<Vec> verts;
  for (int v = 0; v < nv; ++v) {
    require(i + 3 <= words.size(), ErrorKind::io, path + ": truncated vertex list");
    Vec p(3);
    for (int k = 0; k < 3; ++k) p[k] = parse_double(words[i++], path);
    verts.push_back(p);
  }
  std::vector<std::vector<int>> polys;
  for (int f = 0; f < nf; ++f) {
    require(i < words.size(), ErrorKind::io, path + ": truncated face list");
    const int k = parse_int(words[i++], path);
    require(i + k <= words.size(), ErrorKind::io, path + ": truncated face list");
    std::vector<int> p;
    for (int j = 0; j < k; ++j) p.push_back(parse_int(words[i++], path));
    polys.push_back(p);
  }
  return assemble(std::move(verts), std::move(polys), path);
}

TriMesh read_obj(const std::string& path) {
  std::ifstream in(path);
  require(bool(in), ErrorKind::io, "cannot open " + path);
  std::vector<Vec> verts;
  std::vector<std::vector<int>> polys;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = tokens(line);
    if (t.empty()) continue;
    if (t[0] == "v") {
      require(t.size() >= 4, ErrorKind::io, path + ": vertex needs three coordinates");
      Vec p(3);
      for (int k = 0; k < 3; ++k) p[k] = parse_double(t[k + 1], path);
      verts.push_back(p);
    } else if (t[0] == "f" || t[0] == "l") {
      std::vector<int> p;
      for (std::size_t k = 1; k < t.size(); ++k) {
        const std::string idx = t[k].substr(0, t[k].find('/'));
        int j = parse_int(idx, path);
        j = j < 0 ? static_cast<int>(verts.size()) + j : j - 1;
        p.push_back(j);
      }
      polys.push_back(p);
    }
  }
  return assemble(std::move(verts), std::move(polys), path);
}

TriMesh read_mesh(const std::string& path) {
  auto ends = [&](const char* ext) {
    const std::string e(ext);
    if (path.size() < e.size()) return false;
    std::string tail = path.substr(path.size() - e.size());
    std::transform(tail.begin(), tail.end(), tail.begin(), ::tolower);
    return tail == e;
  };
  if (ends(".off")) return read_off(path);
  if (ends(".obj")) return read_obj(path);
  fail(ErrorKind::io, path + ": unknown mesh format (expected .off or .obj)");
}

namespace {
void write_coords(std::ostream& os, const Vec& v) {
  for (int k = 0; k < 3; ++k) {
    if (k) os << ' ';
    os << (k < v.size() ? v[k] : 0.0);
  }
}
void check_writable(const TriMesh& mesh) {
  require(mesh.ambient() <= 3, ErrorKind::unsupported,
          "mesh files hold at most three coordinates");
}
}  // namespace

void write_off(const TriMesh& mesh, const std::string& path) {
  check_writable(mesh);
  std::ofstream os(path);
  require(bool(os), ErrorKind::io, "cannot write " + path);
  os << std::setprecision(17);
  os << "OFF\n" << mesh.vertex_count() << ' ' << mesh.face_count() << " 0\n";
  for (const auto& v : mesh.vertices()) {
    write_coords(os, v);
    os << '\n';
  }
  for (const auto& f : mesh.faces()) {
    os << mesh.dim() + 1;
    for (int k = 0; k < mesh.dim() + 1; ++k) os << ' ' << f[k];
    os << '\n';
  }
}

void write_obj(const TriMesh& mesh, const std::string& path) {
  check_writable(mesh);
  std::ofstream os(path);
  require(bool(os), ErrorKind::io, "cannot write " + path);
  os << std::setprecision(17);
  for (const auto& v : mesh.vertices()) {
    os << "v ";
    write_coords(os, v);
    os << '\n';
  }
  for (const auto& f : mesh.faces()) {
    os << (mesh.dim() == 1 ? 'l' : 'f');
    for (int k = 0; k < mesh.dim() + 1; ++k) os << ' ' << f[k] + 1;
    os << '\n';
  }
}

namespace meshes {

TriMesh icosphere(int level, double radius, const Vec& center) {
  require(level >= 0 && radius > 0, ErrorKind::precondition,
          "icosphere: need level >= 0 and radius > 0");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec> v;
  auto add = [&](double x, double y, double z) {
    Vec p(3);
    p << x, y, z;
    v.push_back(p.normalized());
  };
  add(-1, t, 0); add(1, t, 0); add(-1, -t, 0); add(1, -t, 0);
  add(0, -1, t); add(0, 1, t); add(0, -1, -t); add(0, 1, -t);
  add(t, 0, -1); add(t, 0, 1); add(-t, 0, -1); add(-t, 0, 1);
  std::vector<std::array<int, 3>> f = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::make_pair(std::min(a, b), std::max(a, b));
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      const int idx = static_cast<int>(v.size()) - 1;
      mid.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> g;
    for (const auto& face : f) {
      const int a = midpoint(face[0], face[1]), b = midpoint(face[1], face[2]),
                c = midpoint(face[2], face[0]);
      g.push_back({face[0], a, c});
      g.push_back({face[1], b, a});
      g.push_back({face[2], c, b});
      g.push_back({a, b, c});
    }
    f = std::move(g);
  }
  for (auto& p : v) p = center + radius * p;
  return TriMesh(2, std::move(v), std::move(f));
}

TriMesh ellipsoid(int level, double a, double b, double c) {
  TriMesh s = icosphere(level);
  std::vector<Vec> v = s.vertices();
  for (auto& p : v) p = Vec(p.cwiseProduct((Vec(3) << a, b, c).finished()));
  return s.with_vertices(std::move(v));
}

TriMesh torus(double major, double minor, int nu, int nv) {
  require(major > minor && minor > 0 && nu >= 3 && nv >= 3, ErrorKind::precondition,
          "torus mesh: need major > minor > 0 and at least 3 divisions");
  std::vector<Vec> v;
  for (int i = 0; i < nu; ++i)
    for (int j = 0; j < nv; ++j) {
      const double u = 2 * pi * i / nu, w = 2 * pi * j / nv;
      Vec p(3);
      p << (major + minor * std::cos(w)) * std::cos(u),
          (major + minor * std::cos(w)) * std::sin(u), minor * std::sin(w);
      v.push_back(p);
    }
  auto id = [&](int i, int j) { return ((i + nu) % nu) * nv + (j + nv) % nv; };
  std::vector<std::array<int, 3>> f;
  for (int i = 0; i < nu; ++i)
    for (int j = 0; j < nv; ++j) {
      f.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      f.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  return TriMesh(2, std::move(v), std::move(f));
}

TriMesh polygon(int n, double radius) {
  require(n >= 3 && radius > 0, ErrorKind::precondition,
          "polygon: need at least 3 vertices and positive radius");
  std::vector<Vec> v;
  std::vector<std::array<int, 3>> f;
  for (int i = 0; i < n; ++i) {
    Vec p(2);
    p << radius * std::cos(2 * pi * i / n), radius * std::sin(2 * pi * i / n);
    v.push_back(p);
    f.push_back({i, (i + 1) % n, -1});
  }
  return TriMesh(1, std::move(v), std::move(f));
}

}  // namespace meshes

}  // namespace rieszlab::geometry
