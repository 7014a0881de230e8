#include "rieszlab/moebius.hpp"

#include <json.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace rieszlab::moebius {

using geometry::ChartSurface;
using geometry::GraphPatch;
using geometry::SurfaceNodes;
using geometry::TriMesh;

double combined_angle_cos(const Vec& x, const Mat& tx, const Vec& y, const Mat& wy) {
  const long m = tx.cols();
  require(tx.rows() == x.size() && wy.rows() == y.size() && wy.cols() == m &&
              x.size() == y.size(),
          ErrorKind::precondition, "combined angle: frame sizes do not match");
  const Vec d = y - x;
  const double r = d.norm();
  require(r > 0, ErrorKind::singular, "combined angle: coincident points");
  const Vec v = d / r;
  // Reflection of the x-frame across the chord: (-1)^(m-1) times an oriented
  // orthonormal basis of the tangent space of the tangent sphere at y.
  Mat e_hat = 2.0 * v * (v.transpose() * tx) - tx;
  const Mat g = e_hat.transpose() * wy;
  const Mat gram = wy.transpose() * wy;
  const double sign = (m - 1) % 2 ? -1.0 : 1.0;
  const double c = sign * g.determinant() / std::sqrt(gram.determinant());
  return std::clamp(c, -1.0, 1.0);
}

double combined_angle_cos(const ChartSurface& s, const geometry::ChartPoint& x,
                          const geometry::ChartPoint& y) {
  const auto fx = geometry::tangent_frame(s, x);
  const auto fy = geometry::tangent_frame(s, y);
  return combined_angle_cos(fx.point, fx.tangent, fy.point, fy.tangent);
}

double combined_angle_cos(const TriMesh& mesh, int x, int y) {
  const auto fx = geometry::tangent_frame(mesh, geometry::MeshPoint::at_vertex(x));
  const auto fy = geometry::tangent_frame(mesh, geometry::MeshPoint::at_vertex(y));
  return combined_angle_cos(fx.point, fx.tangent, fy.point, fy.tangent);
}

Vec outer_product_eigenvalues(const Vec& a) {
  Vec ev = Vec::Zero(a.size());
  if (a.size()) ev[0] = a.squaredNorm();
  return ev;
}

// ---- Kusner-Sullivan energy ----

namespace {

double ks_integrand(double c, double d, int m) {
  return std::pow((1.0 - c) / (d * d), m);
}

// Limit of the integrand as y -> x on the patch: averages over directions
// cancel the odd powers of the radius, and two Richardson passes remove the
// r^2 and r^4 terms.
double ks_limit(const GraphPatch& patch, double r0) {
  const int m = patch.dim();
  std::vector<Vec> dirs;
  if (m == 1) {
    dirs = {Vec::Constant(1, 1.0), Vec::Constant(1, -1.0)};
  } else {
    require(m == 2, ErrorKind::unsupported, "ks_energy supports m = 1 and m = 2");
    // the r^0 term is a trig polynomial of degree 12 in the direction, so 16
    // equispaced directions average it exactly, independent of the frame
    for (int k = 0; k < 16; ++k) {
      Vec d(2);
      d << std::cos(pi * k / 8.0), std::sin(pi * k / 8.0);
      dirs.push_back(d);
    }
  }
  const Vec x = patch.base();
  const Mat& t = patch.tangent();
  auto mean_at = [&](double r) {
    double sum = 0.0;
    geometry::PatchHint hint;
    for (const auto& v : dirs) {
      Vec h;
      Mat dh;
      hint.valid = false;
      require(patch.height(r * v, h, dh, &hint), ErrorKind::numerical,
              "ks_energy: patch height fails next to a node");
      const Vec y = patch.embed(r * v, h);
      const Mat w = t + patch.normal() * dh;
      sum += ks_integrand(combined_angle_cos(x, t, y, w), (y - x).norm(), m);
    }
    return sum / dirs.size();
  };
  const double g1 = mean_at(r0), g2 = mean_at(r0 / 2.0), g3 = mean_at(r0 / 4.0);
  const double a = (4.0 * g2 - g1) / 3.0, b = (4.0 * g3 - g2) / 3.0;
  return (16.0 * b - a) / 15.0;
}

void check_embedded_mesh(const TriMesh& mesh) {
  const double tol = 1e-9 * mesh.bounding_diagonal();
  const auto& v = mesh.vertices();
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size(); ++j)
      if ((v[i] - v[j]).norm() <= tol)
        fail(ErrorKind::topology, "ks_energy: vertices " + std::to_string(i) + " and " +
                                      std::to_string(j) +
                                      " coincide (immersed input is rejected)");
}

Vec cross3(const Mat& t) {
  Vec n(3);
  n << t(1, 0) * t(2, 1) - t(2, 0) * t(1, 1), t(2, 0) * t(0, 1) - t(0, 0) * t(2, 1),
      t(0, 0) * t(1, 1) - t(1, 0) * t(0, 1);
  return n;
}

KSNode make_node(const Vec& x, const Mat& tangent, double w, int component, const GraphPatch& patch) {
  KSNode k;
  k.x = x;
  k.tangent = tangent;
  if (tangent.rows() == 3 && tangent.cols() == 2) k.normal = cross3(tangent);
  k.w = w;
  k.spacing = std::pow(w, 1.0 / tangent.cols());
  k.component = component;
  k.limit = ks_limit(patch, 0.5 * k.spacing);
  return k;
}

std::vector<KSNode> chart_nodes(const ChartSurface& cs, int order) {
  const auto nodes = geometry::sample(cs, order);
  std::vector<KSNode> out(nodes.size());
  parallel_for(nodes.size(), [&](std::size_t i) {
    geometry::Frames f{nodes.x[i], nodes.tangent[i], nodes.normal[i]};
    const double spacing = std::pow(nodes.w[i], 1.0 / nodes.m);
    const auto patch = geometry::chart_patch(cs, nodes.component[i], nodes.x[i], f, spacing);
    out[i] = make_node(nodes.x[i], nodes.tangent[i], nodes.w[i], nodes.component[i], *patch);
  });
  return out;
}


struct KSResult {
  double value = 0.0, diagonal = 0.0;
  int nodes = 0;
};

KSResult ks_rule(const std::vector<KSNode>& nodes) {
  const std::size_t n = nodes.size();
  std::vector<double> row(n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    CompensatedSum s;
    for (std::size_t j = 0; j < n; ++j) s.add(nodes[j].w * ks_pair(nodes[i], nodes[j]));
    row[i] = s.value();
  });
  KSResult r;
  CompensatedSum v, dg;
  for (std::size_t i = 0; i < n; ++i) {
    v.add(nodes[i].w * row[i]);
    dg.add(nodes[i].w * nodes[i].w * nodes[i].limit);
  }
  r.value = v.value();
  r.diagonal = dg.value();
  r.nodes = static_cast<int>(n);
  return r;
}

std::vector<KSNode> mesh_nodes(const TriMesh& mesh) {
  std::vector<KSNode> out(mesh.vertex_count());
  const auto labels = mesh.component_labels();
  parallel_for(out.size(), [&](std::size_t v) {
    out[v] = ks_mesh_node(mesh, static_cast<int>(v), labels[v]);
  });
  return out;
}

KSResult ks_rule(const Surface& s, int order) {
  if (const auto* cs = std::get_if<ChartSurface>(&s)) return ks_rule(chart_nodes(*cs, order));
  return ks_rule(mesh_nodes(std::get<TriMesh>(s)));
}

}  // namespace

KSNode ks_mesh_node(const TriMesh& mesh, int vertex, int component) {
  const auto fit = geometry::fit_vertex(mesh, vertex);
  double area = 0.0;
  for (int f : mesh.vertex_faces()[vertex]) area += mesh.face_volume(f);
  return make_node(mesh.vertices()[vertex], fit.frames.tangent, area / 3.0, component, *fit.patch);
}

double ks_pair(const KSNode& a, const KSNode& b) {
  const int m = static_cast<int>(a.tangent.cols());
  if (a.normal.size() == 3 && b.normal.size() == 3) {
    const double d0 = b.x[0] - a.x[0], d1 = b.x[1] - a.x[1], d2 = b.x[2] - a.x[2];
    const double r2 = d0 * d0 + d1 * d1 + d2 * d2;
    if (a.component == b.component && r2 < 0.0625 * a.spacing * a.spacing) return a.limit;
    const double vn_a = d0 * a.normal[0] + d1 * a.normal[1] + d2 * a.normal[2];
    const double vn_b = d0 * b.normal[0] + d1 * b.normal[1] + d2 * b.normal[2];
    const double nn =
        a.normal[0] * b.normal[0] + a.normal[1] * b.normal[1] + a.normal[2] * b.normal[2];
    const double c = std::clamp(nn - 2.0 * vn_a * vn_b / r2, -1.0, 1.0);
    const double q = (1.0 - c) / r2;
    return q * q;
  }
  const Vec d = b.x - a.x;
  const double r = d.norm();
  if (a.component == b.component && r < 0.25 * a.spacing) return a.limit;
  double c;
  if (a.normal.size() && b.normal.size()) {
    const double vn_a = d.dot(a.normal) / r, vn_b = d.dot(b.normal) / r;
    c = std::clamp(a.normal.dot(b.normal) - 2.0 * vn_a * vn_b, -1.0, 1.0);
  } else {
    c = combined_angle_cos(a.x, a.tangent, b.x, b.tangent);
  }
  return ks_integrand(c, r, m);
}

double ks_sum(const std::vector<KSNode>& nodes) { return ks_rule(nodes).value; }

riesz::EnergyReport ks_energy(const Surface& s, const KSOptions& opt) {
  const int m = geometry::dim(s);
  require(m == 1 || m == 2, ErrorKind::unsupported, "ks_energy supports m = 1 and m = 2");
  if (const auto* mesh = std::get_if<TriMesh>(&s)) {
    geometry::check_closed(*mesh);
    require(m == 2 && mesh->ambient() == 3, ErrorKind::unsupported,
            "ks_energy on meshes needs a surface in R^3");
    if (!opt.allow_immersed) check_embedded_mesh(*mesh);
  } else {
    require(std::get<ChartSurface>(s).closed(), ErrorKind::topology,
            "ks_energy: surface must be closed");
  }
  const KSResult fine = ks_rule(s, opt.order);
  riesz::EnergyReport rep;
  rep.value = fine.value;
  rep.near = fine.diagonal;
  rep.far = fine.value - fine.diagonal;
  rep.alpha = -2.0 * m;
  rep.m = m;
  rep.nodes = fine.nodes;
  rep.order = opt.order;
  if (opt.estimate_error && std::holds_alternative<ChartSurface>(s)) {
    const int coarse = std::max(2, (3 * opt.order + 3) / 4);
    if (coarse < opt.order) rep.error_estimate = std::abs(fine.value - ks_rule(s, coarse).value);
  }
  return rep;
}

// ---- Auckly-Sadun energy ----

ASReport as_energy(const Surface& surface, double s, const riesz::EnergyOptions& opt) {
  require(geometry::dim(surface) == 2, ErrorKind::unsupported,
          "as_energy is defined for surfaces (m = 2)");
  ASReport rep;
  rep.s = s;
  rep.e4 = riesz::riesz_energy(surface, riesz::EnergyParams(-4.0, 2), opt);
  SurfaceNodes nodes;
  std::vector<double> delta;
  if (const auto* cs = std::get_if<ChartSurface>(&surface)) {
    nodes = geometry::sample(*cs, opt.order);
    for (const auto& p : nodes.chart_point) delta.push_back(geometry::curvature_at(*cs, p).delta);
  } else {
    const auto& mesh = std::get<TriMesh>(surface);
    nodes = geometry::sample(mesh);
    for (int v : nodes.vertex) delta.push_back(geometry::curvature_at(mesh, v).delta);
  }
  CompensatedSum dl, di;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double d = delta[i];
    // x log x -> 0 at umbilic points
    if (d >= 1e-14) dl.add(nodes.w[i] * d * std::log(d));
    di.add(nodes.w[i] * d);
  }
  rep.delta_log_delta = pi / 16.0 * dl.value();
  rep.delta_integral = di.value();
  rep.euler = geometry::euler_characteristic(surface);
  rep.topological = pi * pi / 2.0 * rep.euler;
  rep.value = rep.e4.value + rep.delta_log_delta + rep.topological + s * rep.delta_integral;
  rep.error_estimate = rep.e4.error_estimate;
  return rep;
}

// ---- Moebius maps ----

geometry::AmbientMap ambient_map(const MoebiusMap& map, int n) {
  const Vec c = map.center.size() ? map.center : Vec::Zero(n);
  require(c.size() == n, ErrorKind::precondition, "Moebius map: center has the wrong size");
  if (map.kind == MapKind::similarity) return geometry::similarity(n, map.radius, c, map.rotation);
  require(map.radius > 0, ErrorKind::precondition, "inversion radius must be positive");
  const double r2 = map.radius * map.radius;
  geometry::AmbientMap a;
  auto apply = [c, r2, n](const Vec& p, Vec& image, Mat& jac, std::vector<Mat>* hess) {
    const Vec d = p - c;
    const double s = d.squaredNorm();
    require(s > 0, ErrorKind::singular, "inversion: point at the center");
    image = c + (r2 / s) * d;
    jac = (r2 / s) * (Mat::Identity(n, n) - (2.0 / s) * d * d.transpose());
    if (hess) {
      hess->assign(n, Mat::Zero(n, n));
      for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            double v = 8.0 * d[k] * d[i] * d[j] / (s * s * s);
            v -= 2.0 * ((i == k) * d[j] + (j == k) * d[i] + (i == j) * d[k]) / (s * s);
            (*hess)[k](i, j) = r2 * v;
          }
    }
  };
  a.apply = apply;
  a.inverse = [apply](const Vec& y) {
    Vec x;
    Mat j;
    apply(y, x, j, nullptr);
    return x;
  };
  a.orientation = -1;
  a.reach_scale = 0.0;
  return a;
}

MappedSurface apply_moebius(const Surface& s, const MoebiusMap& map) {
  const int n = geometry::ambient(s);
  const auto a = ambient_map(map, n);
  if (map.kind == MapKind::inversion) {
    const Vec c = map.center.size() ? map.center : Vec::Zero(n);
    double dmin = std::numeric_limits<double>::infinity();
    double scale = 0.0;
    if (const auto* cs = std::get_if<ChartSurface>(&s)) {
      const auto nodes = geometry::sample(*cs, 16);
      for (const auto& x : nodes.x) {
        dmin = std::min(dmin, (x - c).norm());
        scale = std::max(scale, x.norm());
      }
      for (const auto& comp : cs->components())
        for (const auto& chart : comp.atlas)
          if (const auto q = chart.locate(c)) dmin = std::min(dmin, (chart.position(*q) - c).norm());
    } else {
      for (const auto& x : std::get<TriMesh>(s).vertices()) {
        dmin = std::min(dmin, (x - c).norm());
        scale = std::max(scale, x.norm());
      }
    }
    require(dmin > 1e-9 * (1.0 + scale), ErrorKind::singular,
            "apply_moebius: inversion center lies on the surface");
  }
  MappedSurface out;
  out.orientation = a.orientation;
  out.surface = std::visit(
      [&](const auto& surf) -> Surface {
        using T = std::decay_t<decltype(surf)>;
        if constexpr (std::is_same_v<T, ChartSurface>)
          return surf.mapped(a, map.kind == MapKind::inversion ? " inverted" : " mapped");
        else
          return geometry::mapped(surf, a);
      },
      s);
  return out;
}

namespace {

struct Selected {
  double value = 0.0;
  int nodes = 0;
};

Selected selected_energy(const Surface& s, const EnergySelector& e, int order) {
  if (e.kind == EnergySelector::Kind::ks) {
    KSOptions o;
    o.order = order;
    o.estimate_error = false;
    const auto r = ks_energy(s, o);
    return {r.value, r.nodes};
  }
  riesz::EnergyOptions o;
  o.order = order;
  o.estimate_error = false;
  const auto r = as_energy(s, e.s, o);
  return {r.value, r.e4.nodes};
}

double relative_difference(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale > 0 ? std::abs(a - b) / scale : 0.0;
}

}  // namespace

InvarianceReport moebius_invariance_check(const Surface& s, const MoebiusMap& map,
                                          const EnergySelector& energy,
                                          const InvarianceConfig& config) {
  InvarianceReport rep;
  rep.energy = energy.kind == EnergySelector::Kind::ks ? "KS" : "AS";
  rep.map = map;
  rep.order = config.order;
  const auto img = apply_moebius(s, map);
  rep.orientation = img.orientation;
  const auto a = selected_energy(s, energy, config.order);
  const auto b = selected_energy(img.surface, energy, config.order);
  rep.original = a.value;
  rep.mapped = b.value;
  rep.nodes = a.nodes;
  rep.relative_difference = relative_difference(rep.original, rep.mapped);

  const Surface* fine = config.refined ? &*config.refined : nullptr;
  if (!fine && std::holds_alternative<TriMesh>(s)) return rep;
  const Surface& base = fine ? *fine : s;
  require(geometry::dim(base) == geometry::dim(s) && geometry::ambient(base) == geometry::ambient(s),
          ErrorKind::precondition, "invariance check: refined surface has another dimension");
  const int order = fine ? config.order : config.refined_order;
  const auto fine_img = fine ? apply_moebius(*fine, map) : img;
  const auto c = selected_energy(base, energy, order);
  const auto d = selected_energy(fine_img.surface, energy, order);
  rep.has_refinement = true;
  rep.refined_order = order;
  rep.refined_original = c.value;
  rep.refined_mapped = d.value;
  rep.refined_nodes = c.nodes;
  rep.refined_relative_difference = relative_difference(c.value, d.value);
  rep.decreasing = rep.refined_relative_difference < rep.relative_difference;
  return rep;
}

std::string to_json(const ASReport& r) {
  nlohmann::json j;
  j["value"] = r.value;
  j["s"] = r.s;
  j["e_minus4"] = r.e4.value;
  j["delta_log_delta_term"] = r.delta_log_delta;
  j["topological_term"] = r.topological;
  j["delta_integral"] = r.delta_integral;
  j["euler_characteristic"] = r.euler;
  j["error_estimate"] = r.error_estimate;
  return j.dump(2);
}

std::string to_json(const InvarianceReport& r) {
  nlohmann::json j;
  j["energy"] = r.energy;
  j["map"] = {{"kind", r.map.kind == MapKind::inversion ? "inversion" : "similarity"},
              {"center", std::vector<double>(r.map.center.data(),
                                             r.map.center.data() + r.map.center.size())},
              {"radius", r.map.radius}};
  if (r.map.rotation.size()) {
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < r.map.rotation.rows(); ++i) {
      rows.emplace_back();
      for (int k = 0; k < r.map.rotation.cols(); ++k) rows.back().push_back(r.map.rotation(i, k));
    }
    j["map"]["rotation"] = rows;
  }
  j["original"] = r.original;
  j["mapped"] = r.mapped;
  j["relative_difference"] = r.relative_difference;
  j["orientation"] = r.orientation;
  j["order"] = r.order;
  j["nodes"] = r.nodes;
  if (r.has_refinement)
    j["refinement"] = {{"order", r.refined_order},
                       {"nodes", r.refined_nodes},
                       {"original", r.refined_original},
                       {"mapped", r.refined_mapped},
                       {"relative_difference", r.refined_relative_difference},
                       {"decreasing", r.decreasing}};
  else
    j["refinement"] = nullptr;
  return j.dump(2);
}

}  // namespace rieszlab::moebius
