#include "rieszlab/geometry/surface.hpp"

#include "rieszlab/geometry/mesh_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace rieszlab::geometry {

int dim(const Surface& s) {
  return std::visit([](const auto& x) { return x.dim(); }, s);
}

int ambient(const Surface& s) {
  return std::visit([](const auto& x) { return x.ambient(); }, s);
}

std::string describe(const Surface& s) {
  if (const auto* c = std::get_if<ChartSurface>(&s)) return c->description();
  const auto& m = std::get<TriMesh>(s);
  std::ostringstream os;
  os << "mesh(m=" << m.dim() << ", n=" << m.ambient() << ", V=" << m.vertex_count()
     << ", F=" << m.face_count() << ")";
  return os.str();
}

namespace {

// Modified Gram-Schmidt: J = Q R with R upper triangular, positive diagonal.
void orthonormalize(const Mat& jac, Mat& q, Mat& r) {
  const long n = jac.rows(), m = jac.cols();
  q = jac;
  r = Mat::Zero(m, m);
  const double scale = std::max(jac.norm(), 1e-300);
  for (long i = 0; i < m; ++i) {
    for (long j = 0; j < i; ++j) {
      r(j, i) = q.col(j).dot(q.col(i));
      q.col(i) -= r(j, i) * q.col(j);
    }
    // second pass for orthogonality to working precision
    for (long j = 0; j < i; ++j) {
      const double c = q.col(j).dot(q.col(i));
      r(j, i) += c;
      q.col(i) -= c * q.col(j);
    }
    r(i, i) = q.col(i).norm();
    if (!(r(i, i) > 1e-12 * scale))
      fail(ErrorKind::rank_deficiency, "tangent frame: Jacobian has rank < m");
    q.col(i) /= r(i, i);
  }
  (void)n;
}

Mat complete_normal(const Mat& t) {
  const long n = t.rows(), m = t.cols();
  if (n == 3 && m == 2) {
    Mat nrm(3, 1);
    nrm.col(0) = Eigen::Vector3d(t.col(0)).cross(Eigen::Vector3d(t.col(1)));
    return nrm;
  }
  if (n == 2 && m == 1) {
    Mat nrm(2, 1);
    nrm << -t(1, 0), t(0, 0);
    return nrm;
  }
  Eigen::HouseholderQR<Mat> qr(t);
  Mat full = qr.householderQ() * Mat::Identity(n, n);
  Mat nrm = full.rightCols(n - m);
  Mat basis(n, n);
  basis << t, nrm;
  if (basis.determinant() < 0) nrm.col(n - m - 1) *= -1.0;
  // re-orthogonalize against the tangent columns
  for (long k = 0; k < n - m; ++k) {
    for (long j = 0; j < m; ++j) nrm.col(k) -= t.col(j).dot(nrm.col(k)) * t.col(j);
    for (long j = 0; j < k; ++j) nrm.col(k) -= nrm.col(j).dot(nrm.col(k)) * nrm.col(j);
    nrm.col(k).normalize();
  }
  return nrm;
}

const ChartComponent& component_of(const ChartSurface& s, int c) {
  require(c >= 0 && c < static_cast<int>(s.components().size()), ErrorKind::precondition,
          "chart point: component index out of range");
  return s.components()[c];
}

}  // namespace

Frames frames_from_jacobian(const Vec& point, const Mat& jacobian) {
  Frames f;
  f.point = point;
  Mat r;
  orthonormalize(jacobian, f.tangent, r);
  f.normal = complete_normal(f.tangent);
  return f;
}

std::pair<int, Vec> best_chart(const ChartComponent& c, const Vec& x) {
  int best = -1;
  double best_cond = -1.0;
  Vec best_q;
  ChartJet j;
  const double scale = 1.0 + x.norm();
  for (std::size_t i = 0; i < c.atlas.size(); ++i) {
    const auto q = c.atlas[i].locate(x);
    if (!q) continue;
    c.atlas[i].jet(*q, j, false);
    if ((j.pos - x).norm() > 1e-8 * scale) continue;
    const Eigen::SelfAdjointEigenSolver<Mat> es(j.jac.transpose() * j.jac);
    const double lmax = es.eigenvalues().maxCoeff();
    const double cond = lmax > 0 ? std::sqrt(std::max(0.0, es.eigenvalues().minCoeff()) / lmax)
                                 : 0.0;
    if (cond > best_cond) {
      best_cond = cond;
      best = static_cast<int>(i);
      best_q = *q;
    }
  }
  require(best >= 0, ErrorKind::precondition,
          "point is not on component '" + c.name + "' (no chart reaches it)");
  require(best_cond > 1e-8, ErrorKind::rank_deficiency,
          "no chart of component '" + c.name + "' is regular at the point");
  return {best, best_q};
}

Vec point_of(const ChartSurface& s, const ChartPoint& p) {
  return component_of(s, p.component).atlas[0].position(p.q);
}

Vec point_of(const TriMesh& mesh, const MeshPoint& p) {
  if (p.vertex >= 0) {
    require(p.vertex < static_cast<int>(mesh.vertex_count()), ErrorKind::precondition,
            "mesh point: vertex index out of range");
    return mesh.vertices()[p.vertex];
  }
  require(p.face >= 0 && p.face < static_cast<int>(mesh.face_count()), ErrorKind::precondition,
          "mesh point: face index out of range");
  const int k = mesh.dim() + 1;
  require(p.bary.size() == k, ErrorKind::precondition,
          "mesh point: barycentric coordinates have the wrong length");
  Vec x = Vec::Zero(mesh.ambient());
  for (int i = 0; i < k; ++i) x += p.bary[i] * mesh.vertices()[mesh.faces()[p.face][i]];
  return x;
}

Frames tangent_frame(const ChartSurface& s, const ChartPoint& p) {
  const auto& comp = component_of(s, p.component);
  const Vec x = comp.atlas[0].position(p.q);
  ChartJet j;
  comp.atlas[0].jet(p.q, j, false);
  const Eigen::SelfAdjointEigenSolver<Mat> es(j.jac.transpose() * j.jac);
  const double lmax = es.eigenvalues().maxCoeff();
  if (comp.atlas.size() == 1 || (lmax > 0 && es.eigenvalues().minCoeff() > 1e-10 * lmax))
    return frames_from_jacobian(x, j.jac);
  // Coordinate singularity of atlas[0]: use the best conditioned chart.
  const auto [idx, q] = best_chart(comp, x);
  comp.atlas[idx].jet(q, j, false);
  return frames_from_jacobian(x, j.jac);
}

Frames tangent_frame(const TriMesh& mesh, const MeshPoint& p) {
  if (p.vertex >= 0) {
    const Vec x = point_of(mesh, p);
    if (mesh.dim() == 1) {
      const auto& vf = mesh.vertex_faces()[p.vertex];
      Vec t = Vec::Zero(mesh.ambient());
      for (int f : vf) {
        const auto& face = mesh.faces()[f];
        t += mesh.vertices()[face[1]] - mesh.vertices()[face[0]];
      }
      Mat jac = t;
      return frames_from_jacobian(x, jac);
    }
    return fit_vertex(mesh, p.vertex).frames;
  }
  const Vec x = point_of(mesh, p);
  const auto& face = mesh.faces()[p.face];
  Mat jac(mesh.ambient(), mesh.dim());
  for (int k = 0; k < mesh.dim(); ++k)
    jac.col(k) = mesh.vertices()[face[k + 1]] - mesh.vertices()[face[0]];
  return frames_from_jacobian(x, jac);
}

CurvatureData curvature_from_form(const std::vector<std::vector<Vec>>& h) {
  CurvatureData c;
  c.h = h;
  const int m = static_cast<int>(h.size());
  c.mean = Vec::Zero(h[0][0].size());
  double hs2 = 0.0;
  for (int i = 0; i < m; ++i) {
    c.mean += h[i][i];
    for (int j = 0; j < m; ++j) hs2 += h[i][j].squaredNorm();
  }
  c.hs_norm = std::sqrt(hs2);
  if (m == 2) {
    c.delta = (h[0][0] - h[1][1]).squaredNorm() + 4.0 * h[0][1].squaredNorm();
    c.gauss = h[0][0].dot(h[1][1]) - h[0][1].squaredNorm();
    if (h[0][0].size() == 1) {
      Eigen::Matrix2d s;
      s << h[0][0][0], h[0][1][0], h[1][0][0], h[1][1][0];
      const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(s);
      c.principal = std::array<double, 2>{es.eigenvalues()[1], es.eigenvalues()[0]};
    }
  }
  return c;
}

namespace {
CurvatureData chart_form(const ChartSurface& s, const ChartPoint& p) {
  const auto& comp = component_of(s, p.component);
  const Vec x = comp.atlas[0].position(p.q);
  int idx = 0;
  Vec q = p.q;
  ChartJet j;
  comp.atlas[0].jet(q, j, false);
  const Eigen::SelfAdjointEigenSolver<Mat> es(j.jac.transpose() * j.jac);
  if (comp.atlas.size() > 1 &&
      !(es.eigenvalues().minCoeff() > 1e-10 * es.eigenvalues().maxCoeff()))
    std::tie(idx, q) = best_chart(comp, x);
  comp.atlas[idx].jet(q, j, true);
  Frames f;
  f.point = x;
  Mat r;
  orthonormalize(j.jac, f.tangent, r);
  f.normal = complete_normal(f.tangent);
  const int m = s.dim(), n = s.ambient();
  const Mat rinv = r.inverse();
  std::vector<std::vector<Vec>> h(m, std::vector<Vec>(m));
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      Vec xab(n);
      for (int k = 0; k < n; ++k) xab[k] = j.hess[k](a, b);
      h[a][b] = f.normal.transpose() * xab;
    }
  std::vector<std::vector<Vec>> e(m, std::vector<Vec>(m));
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < m; ++k) {
      Vec v = Vec::Zero(n - m);
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) v += rinv(a, i) * rinv(b, k) * h[a][b];
      e[i][k] = v;
    }
  CurvatureData c = curvature_from_form(e);
  c.frames = f;
  return c;
}
}  // namespace

CurvatureData curvature_at(const ChartSurface& s, const ChartPoint& p) {
  require(s.dim() == 2, ErrorKind::precondition, "curvature_at: needs m = 2");
  return chart_form(s, p);
}

CurvatureData curvature_at(const TriMesh& mesh, int vertex) {
  require(mesh.dim() == 2, ErrorKind::precondition, "curvature_at: needs m = 2");
  const MeshFit fit = fit_vertex(mesh, vertex);
  // z = c20 x^2 + c11 x y + c02 y^2 + cubic terms in the fitted frame
  const auto& ex = fit.patch->exponents();
  const Mat& co = fit.patch->coefficients();
  double c20 = 0, c11 = 0, c02 = 0;
  for (std::size_t t = 0; t < ex.size(); ++t) {
    if (ex[t] == std::array<int, 2>{2, 0}) c20 = co(0, t);
    if (ex[t] == std::array<int, 2>{1, 1}) c11 = co(0, t);
    if (ex[t] == std::array<int, 2>{0, 2}) c02 = co(0, t);
  }
  std::vector<std::vector<Vec>> h(2, std::vector<Vec>(2, Vec(1)));
  h[0][0][0] = 2.0 * c20;
  h[0][1][0] = h[1][0][0] = c11;
  h[1][1][0] = 2.0 * c02;
  CurvatureData c = curvature_from_form(h);
  c.frames = fit.frames;
  c.fit_residual = fit.residual_rms;
  return c;
}

std::shared_ptr<GraphPatch> chart_patch(const ChartSurface& s, int component, const Vec& x,
                                        const Frames& frames, double radius) {
  const auto& comp = component_of(s, component);
  const auto [idx, q] = best_chart(comp, x);
  return std::make_shared<ChartPatch>(comp.atlas[idx], q, x, frames.tangent, frames.normal,
                                      radius);
}

namespace {
PatchResult finish_patch(std::shared_ptr<GraphPatch> patch, double radius, RadiusPolicy policy,
                         double data_radius) {
  PatchResult out;
  out.requested = radius;
  out.bounds = measure_patch(*patch, radius);
  double validated = out.bounds.validated_radius;
  if (data_radius > 0 && data_radius < validated) validated = data_radius;
  if (validated < radius * (1.0 - 1e-12)) {
    if (policy == RadiusPolicy::strict) {
      std::ostringstream os;
      os.precision(17);
      os << "requested patch radius " << radius << " exceeds the validated radius "
         << validated;
      throw PatchRadiusError(os.str(), validated);
    }
    out.bounds = measure_patch(*patch, validated);
    out.bounds.validated_radius = validated;
  }
  patch->set_radius(std::min(radius, validated));
  out.patch = std::move(patch);
  return out;
}
}  // namespace

PatchResult graph_patch_at(const ChartSurface& s, const ChartPoint& p, double radius,
                           RadiusPolicy policy) {
  require(radius > 0, ErrorKind::precondition, "graph patch radius must be positive");
  const Frames f = tangent_frame(s, p);
  auto patch = chart_patch(s, p.component, f.point, f, radius);
  return finish_patch(std::move(patch), radius, policy, 0.0);
}

PatchResult graph_patch_at(const TriMesh& mesh, int vertex, double radius,
                           RadiusPolicy policy) {
  require(radius > 0, ErrorKind::precondition, "graph patch radius must be positive");
  require(mesh.dim() == 2 && mesh.ambient() == 3, ErrorKind::unsupported,
          "mesh graph patches need a surface in R^3");
  const MeshFit fit = fit_vertex(mesh, vertex, radius);
  std::shared_ptr<GraphPatch> patch = fit.patch;
  // The fit is only trusted over the tangent extent of its data.
  double extent = 0.0;
  for (int w : mesh.ring(vertex, 2)) {
    const Vec d = mesh.vertices()[w] - mesh.vertices()[vertex];
    extent = std::max(extent, (fit.frames.tangent.transpose() * d).norm());
  }
  PatchResult out = finish_patch(std::move(patch), radius, policy, extent);
  out.fit_residual = fit.residual_rms;
  return out;
}

MeshFit fit_vertex(const TriMesh& mesh, int vertex, double radius) {
  require(mesh.dim() == 2 && mesh.ambient() == 3, ErrorKind::unsupported,
          "mesh fits need a surface in R^3");
  require(vertex >= 0 && vertex < static_cast<int>(mesh.vertex_count()),
          ErrorKind::precondition, "mesh fit: vertex index out of range");
  const auto ring = mesh.ring(vertex, 2);
  std::vector<std::array<double, 3>> pts;
  for (int w : ring)
    if (w != vertex) {
      const Vec& p = mesh.vertices()[w];
      pts.push_back({p[0], p[1], p[2]});
    }
  const Vec& c = mesh.vertices()[vertex];
  const std::array<double, 3> center{c[0], c[1], c[2]};
  const Vec n0v = mesh.vertex_normal(vertex);
  const std::array<double, 3> n0{n0v[0], n0v[1], n0v[2]};
  const auto fit = local_fit::quadric_frame<double>(center, pts, n0);
  require(fit.ok, ErrorKind::numerical,
          "mesh fit at vertex " + std::to_string(vertex) + ": only " +
              std::to_string(pts.size()) + " neighbor samples for a " +
              std::to_string(fit.terms) + "-term fit (residual unavailable)");
  MeshFit out;
  out.samples = static_cast<int>(pts.size());
  out.residual_rms = fit.residual_rms;
  out.frames.point = c;
  out.frames.tangent.resize(3, 2);
  out.frames.normal.resize(3, 1);
  for (int k = 0; k < 3; ++k) {
    out.frames.tangent(k, 0) = fit.t1[k];
    out.frames.tangent(k, 1) = fit.t2[k];
    out.frames.normal(k, 0) = fit.n[k];
  }
  Mat coeff(1, static_cast<long>(fit.coefficients.size()));
  for (std::size_t t = 0; t < fit.coefficients.size(); ++t) coeff(0, t) = fit.coefficients[t];
  double r = radius;
  if (r <= 0)
    for (const auto& p : pts) {
      const double d = std::sqrt((p[0] - c[0]) * (p[0] - c[0]) + (p[1] - c[1]) * (p[1] - c[1]) +
                                 (p[2] - c[2]) * (p[2] - c[2]));
      r = std::max(r, d);
    }
  out.patch = std::make_shared<PolynomialPatch>(c, out.frames.tangent, out.frames.normal, r,
                                                fit.exponents, coeff);
  return out;
}

SurfaceNodes sample(const ChartSurface& s, int order) {
  SurfaceNodes out;
  out.m = s.dim();
  out.n = s.ambient();
  ChartJet j;
  for (std::size_t c = 0; c < s.components().size(); ++c) {
    const auto& comp = s.components()[c];
    for (const auto& node : comp.rule(order)) {
      comp.atlas[0].jet(node.q, j, false);
      Frames f;
      Mat r;
      orthonormalize(j.jac, f.tangent, r);
      f.normal = complete_normal(f.tangent);
      const double vol = std::abs(r.diagonal().prod());
      out.x.push_back(j.pos);
      out.w.push_back(node.w * vol);
      out.tangent.push_back(f.tangent);
      out.normal.push_back(f.normal);
      out.component.push_back(static_cast<int>(c));
      out.chart_point.push_back({static_cast<int>(c), node.q});
    }
  }
  return out;
}

SurfaceNodes sample(const TriMesh& mesh) {
  SurfaceNodes out;
  out.m = mesh.dim();
  out.n = mesh.ambient();
  require(mesh.dim() == 1 || mesh.ambient() == 3, ErrorKind::unsupported,
          "mesh surfaces are supported in R^3 only");
  const auto areas = mesh.vertex_areas();
  const auto labels = mesh.component_labels();
  for (std::size_t v = 0; v < mesh.vertex_count(); ++v) {
    const Frames f = tangent_frame(mesh, MeshPoint::at_vertex(static_cast<int>(v)));
    out.x.push_back(mesh.vertices()[v]);
    out.w.push_back(areas[v]);
    out.tangent.push_back(f.tangent);
    out.normal.push_back(f.normal);
    out.component.push_back(labels[v]);
    out.vertex.push_back(static_cast<int>(v));
  }
  return out;
}

double estimated_reach(const ChartSurface& s, int order) {
  double kmax = 0.0;
  for (std::size_t c = 0; c < s.components().size(); ++c)
    for (const auto& node : s.components()[c].rule(order)) {
      const auto cd = chart_form(s, {static_cast<int>(c), node.q});
      kmax = std::max(kmax, cd.hs_norm);
    }
  return kmax > 0 ? 1.0 / kmax : 0.0;
}

double total_volume(const Surface& s, int order) {
  if (const auto* m = std::get_if<TriMesh>(&s)) return m->volume();
  const auto nodes = sample(std::get<ChartSurface>(s), order);
  return compensated_total(nodes.w);
}

int euler_characteristic(const Surface& s) {
  if (const auto* m = std::get_if<TriMesh>(&s)) return euler_characteristic(*m);
  int chi = 0;
  for (const auto& c : std::get<ChartSurface>(s).components()) {
    require(c.closed, ErrorKind::topology,
            "Euler characteristic needs a closed surface; component '" + c.name + "' is open");
    require(c.euler.has_value(), ErrorKind::unsupported,
            "component '" + c.name + "' has no known Euler characteristic");
    chi += *c.euler;
  }
  return chi;
}

PatchClassReport validate_patch_class(const Surface& s, const PatchClassParams& params,
                                      int sample_order) {
  PatchClassReport rep;
  rep.volume = total_volume(s);
  rep.volume_ok = rep.volume <= params.volume;
  rep.min_validated_radius = std::numeric_limits<double>::infinity();
  auto record = [&](int idx, const Vec& x, const PatchResult& pr) {
    rep.max_bound = std::max(rep.max_bound, pr.bounds.b);
    rep.max_fit_residual = std::max(rep.max_fit_residual, pr.fit_residual);
    rep.min_validated_radius = std::min(rep.min_validated_radius, pr.bounds.validated_radius);
    if (pr.bounds.validated_radius < params.eps0 * (1 - 1e-12)) {
      rep.patches_ok = false;
      rep.violations.push_back({idx, x, "graph patch radius below eps0"});
    }
    if (pr.bounds.b > params.b) {
      rep.bounds_ok = false;
      rep.violations.push_back({idx, x, "derivative bound exceeds b"});
    }
  };
  auto patch_failure = [&](int idx, const Vec& x, const std::string& why) {
    rep.patches_ok = false;
    rep.min_validated_radius = 0.0;
    rep.violations.push_back({idx, x, why});
  };
  if (const auto* cs = std::get_if<ChartSurface>(&s)) {
    const auto nodes = sample(*cs, sample_order);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      ++rep.samples;
      try {
        record(static_cast<int>(i), nodes.x[i],
               graph_patch_at(*cs, nodes.chart_point[i], params.eps0, RadiusPolicy::shrink));
      } catch (const Error& e) {
        patch_failure(static_cast<int>(i), nodes.x[i], e.what());
      }
    }
  } else {
    const auto& mesh = std::get<TriMesh>(s);
    for (std::size_t v = 0; v < mesh.vertex_count(); ++v) {
      ++rep.samples;
      try {
        record(static_cast<int>(v), mesh.vertices()[v],
               graph_patch_at(mesh, static_cast<int>(v), params.eps0, RadiusPolicy::shrink));
      } catch (const Error& e) {
        patch_failure(static_cast<int>(v), mesh.vertices()[v], e.what());
      }
    }
  }
  if (rep.samples == 0) rep.min_validated_radius = 0.0;
  rep.pass = rep.patches_ok && rep.bounds_ok && rep.volume_ok;
  return rep;
}

}  // namespace rieszlab::geometry
