#include "doctest.h"

#include "rieszlab/geometry/mesh.hpp"
#include "rieszlab/moebius.hpp"
#include "rieszlab/quadrature.hpp"

#include <json.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

using namespace rieszlab;
using namespace rieszlab::moebius;
namespace catalog = rieszlab::geometry::catalog;
namespace meshes = rieszlab::geometry::meshes;

namespace {

Vec vec3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

Mat plane_frame() {
  Mat t = Mat::Zero(3, 2);
  t(0, 0) = 1.0;
  t(1, 1) = 1.0;
  return t;
}

// Frame of the graph of xy at (u, v): columns (1, 0, v), (0, 1, u).
Mat saddle_frame(double u, double v) {
  Mat w(3, 2);
  w << 1.0, 0.0, 0.0, 1.0, v, u;
  return w;
}

// ∫Δ over the spheroid with equatorial radius a and polar radius c, from
// the principal curvatures of the meridian and the parallels.
double spheroid_delta_integral(double a, double c) {
  quad::AdaptiveOptions o;
  o.rel_tol = 1e-12;
  auto f = [&](double phi) {
    const double q = a * a * std::cos(phi) * std::cos(phi) + c * c * std::sin(phi) * std::sin(phi);
    const double k1 = a * c / std::pow(q, 1.5);
    const double k2 = c / (a * std::sqrt(q));
    return (k1 - k2) * (k1 - k2) * a * std::sin(phi) * std::sqrt(q);
  };
  return 2.0 * pi * quad::integrate(f, 0.0, pi, o).value;
}

MoebiusMap inversion(const Vec& c, double r) {
  MoebiusMap m;
  m.kind = MapKind::inversion;
  m.center = c;
  m.radius = r;
  return m;
}

}  // namespace

TEST_CASE("combined angle is symmetric and in range on random pairs") {
  std::mt19937 rng(7);
  for (const auto& s : {catalog::ellipsoid(1.0, 0.8, 0.6), catalog::torus(1.0, 0.4)}) {
    const auto nodes = geometry::sample(s, 8);
    std::uniform_int_distribution<std::size_t> pick(0, nodes.size() - 1);
    for (int k = 0; k < 100; ++k) {
      const auto i = pick(rng), j = pick(rng);
      if ((nodes.x[i] - nodes.x[j]).norm() < 1e-6) continue;
      const double a = combined_angle_cos(s, nodes.chart_point[i], nodes.chart_point[j]);
      const double b = combined_angle_cos(s, nodes.chart_point[j], nodes.chart_point[i]);
      CHECK(std::abs(a - b) <= 1e-10);
      CHECK(a >= -1.0);
      CHECK(a <= 1.0);
    }
  }
}

TEST_CASE("combined angle with a non-orthonormal frame at y matches the orthonormal one") {
  const Vec x = Vec::Zero(3);
  const Vec y = vec3(0.3, -0.2, 0.3 * -0.2);
  const Mat w = saddle_frame(0.3, -0.2);
  Mat q = w.householderQr().householderQ() * Mat::Identity(3, 2);
  if ((w.transpose() * q).determinant() < 0) q.col(1) *= -1.0;
  CHECK(combined_angle_cos(x, plane_frame(), y, w) ==
        doctest::Approx(combined_angle_cos(x, plane_frame(), y, q)).epsilon(1e-12));
}

TEST_CASE("parallel planes: chord normal to the planes gives -1, chord inside gives 1") {
  const Mat t = plane_frame();
  const Vec x = Vec::Zero(3);
  CHECK(combined_angle_cos(x, t, vec3(0, 0, 1.7), t) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(combined_angle_cos(x, t, vec3(1.0, 2.0, 0.0), t) == doctest::Approx(1.0).epsilon(1e-12));
  // opposite orientation at y reverses both
  Mat r = t;
  r.col(1) *= -1.0;
  CHECK(combined_angle_cos(x, t, vec3(0, 0, 1.7), r) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(combined_angle_cos(x, t, vec3(1.0, 2.0, 0.0), r) == doctest::Approx(-1.0).epsilon(1e-12));
  // curves: parallel lines in the plane
  Mat l(2, 1);
  l << 1.0, 0.0;
  Vec o = Vec::Zero(2), p(2), s(2);
  p << 0.0, 1.0;
  s << 3.0, 0.0;
  CHECK(combined_angle_cos(o, l, p, l) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(combined_angle_cos(o, l, s, l) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("combined angle vanishes on round spheres and circles") {
  const auto s = catalog::sphere(1.3);
  const auto nodes = geometry::sample(s, 6);
  for (std::size_t i = 0; i < nodes.size(); i += 7)
    for (std::size_t j = 0; j < nodes.size(); j += 5) {
      if ((nodes.x[i] - nodes.x[j]).norm() < 1e-6) continue;
      CHECK(combined_angle_cos(s, nodes.chart_point[i], nodes.chart_point[j]) ==
            doctest::Approx(1.0).epsilon(1e-12));
    }
  const auto c = catalog::circle(0.7);
  const auto cn = geometry::sample(c, 8);
  for (std::size_t j = 1; j < cn.size(); ++j)
    CHECK(combined_angle_cos(c, cn.chart_point[0], cn.chart_point[j]) ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("normal-vector form of the KS integrand matches the reflected-frame form") {
  std::mt19937 rng(3);
  std::normal_distribution<double> g;
  for (int k = 0; k < 50; ++k) {
    KSNode a, b;
    a.x = vec3(g(rng), g(rng), g(rng));
    b.x = vec3(g(rng), g(rng), g(rng));
    a.tangent = Mat(3, 2);
    b.tangent = Mat(3, 2);
    for (auto* n : {&a, &b}) {
      Mat m(3, 2);
      m << g(rng), g(rng), g(rng), g(rng), g(rng), g(rng);
      n->tangent = m.householderQr().householderQ() * Mat::Identity(3, 2);
      n->component = 0;
      n->w = 1.0;
      n->spacing = 1e-3;
    }
    const double general = ks_pair(a, b);
    for (auto* n : {&a, &b}) {
      const Eigen::Vector3d t0 = n->tangent.col(0), t1 = n->tangent.col(1);
      n->normal = t0.cross(t1);
    }
    CHECK(ks_pair(a, b) == doctest::Approx(general).epsilon(1e-10));
  }
}

TEST_CASE("combined angle on the saddle xy") {
  const Vec x = Vec::Zero(3);
  for (double t : {0.1, 0.03, 0.01, 0.003}) {
    // along an axis the tangent sphere through y is the plane z = 0, and the
    // normal at (t, 0) is tilted by atan(t)
    const double th = std::acos(combined_angle_cos(x, plane_frame(), vec3(t, 0, 0), saddle_frame(t, 0)));
    CHECK(th == doctest::Approx(std::atan(t)).epsilon(1e-8));
    CHECK(th / t > 0.99);
  }
  // on the diagonal the sphere of radius 1 + t^2/2 tangent at 0 matches the
  // saddle to first order: 1 - cos θ is the normal mismatch
  for (double t : {0.1, 0.05}) {
    const double r = 1.0 + t * t / 2.0;
    const Vec ns = vec3(-t, -t, r - t * t) / r;
    const Vec nh = vec3(-t, -t, 1.0).normalized();
    const double expected = 1.0 - ns.dot(nh);
    const double got = 1.0 - combined_angle_cos(x, plane_frame(), vec3(t, t, t * t), saddle_frame(t, t));
    CHECK(got == doctest::Approx(expected).epsilon(1e-6));
  }
}

TEST_CASE("order estimates: (1 - cos θ)/|x - y|^2 bounded, θ at least linear") {
  const auto s = catalog::ellipsoid(1.0, 0.8, 0.6);
  const auto& chart = s.components()[0].atlas[0];
  geometry::ChartPoint p{0, Vec(2)};
  p.q << 1.1, 0.7;
  std::vector<double> logs, logt;
  double bound = 0.0;
  for (int k = 0; k < 6; ++k) {
    const double h = 0.2 * std::pow(0.5, k);
    geometry::ChartPoint q{0, p.q};
    q.q[0] += h;
    q.q[1] -= 0.6 * h;
    const double c = combined_angle_cos(s, p, q);
    const double d = (chart.position(q.q) - chart.position(p.q)).norm();
    bound = std::max(bound, (1.0 - c) / (d * d));
    logs.push_back(std::log(d));
    logt.push_back(std::log(std::acos(c)));
  }
  // θ is about κ|x - y| with principal curvatures at most 1/0.36
  CHECK(bound < 2.0 * std::pow(1.0 / 0.36, 2));
  const double slope = (logt.back() - logt.front()) / (logs.back() - logs.front());
  CHECK(slope >= 1.0 - 1e-3);
}

TEST_CASE("eigenvalues of the rank-one outer product") {
  std::mt19937 rng(11);
  std::normal_distribution<double> g;
  for (int n : {1, 2, 3, 5, 8}) {
    Vec a(n);
    for (int i = 0; i < n; ++i) a[i] = g(rng);
    const Vec ev = outer_product_eigenvalues(a);
    Eigen::SelfAdjointEigenSolver<Mat> es(a * a.transpose());
    Vec ref = es.eigenvalues().reverse();
    REQUIRE(ev.size() == n);
    for (int i = 0; i < n; ++i) CHECK(std::abs(ev[i] - ref[i]) <= 1e-10 * (1.0 + a.squaredNorm()));
  }
}

TEST_CASE("KS energy of round spheres and circles vanishes") {
  KSOptions o;
  o.order = 10;
  CHECK(ks_energy(catalog::sphere(1.0), o).value < 1e-8);
  CHECK(ks_energy(catalog::circle(2.0), o).value < 1e-8);
  CHECK(ks_energy(meshes::icosphere(3)).value < 1e-8);
}

TEST_CASE("KS energy is similarity invariant to rounding") {
  const auto s = catalog::ellipsoid(1.0, 0.8, 0.6);
  MoebiusMap sim;
  sim.kind = MapKind::similarity;
  sim.radius = 2.5;
  sim.center = vec3(0.3, -1.0, 2.0);
  sim.rotation = Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
  KSOptions o;
  o.order = 10;
  o.estimate_error = false;
  const double a = ks_energy(s, o).value;
  const double b = ks_energy(apply_moebius(s, sim).surface, o).value;
  CHECK(a > 0.1);
  CHECK(std::abs(a - b) <= 1e-10 * a);

  const auto mesh = meshes::ellipsoid(2, 1.0, 0.8, 0.6);
  const double c = ks_energy(mesh).value;
  const double d = ks_energy(apply_moebius(mesh, sim).surface).value;
  CHECK(std::abs(c - d) <= 1e-10 * c);
}

TEST_CASE("KS chart quadrature converges on the ellipsoid") {
  const auto s = catalog::ellipsoid(1.0, 0.8, 0.6);
  KSOptions o;
  o.estimate_error = false;
  std::vector<double> v;
  for (int order : {8, 16, 32}) {
    o.order = order;
    v.push_back(ks_energy(s, o).value);
  }
  CHECK(std::abs(v[2] - v[1]) < 0.5 * std::abs(v[1] - v[0]));
}

TEST_CASE("KS inversion invariance on meshes improves under refinement") {
  const auto map = inversion(vec3(2.0, 1.0, 0.5), 1.5);
  InvarianceConfig cfg;
  cfg.refined = meshes::ellipsoid(3, 1.0, 0.8, 0.6);
  const auto rep = moebius_invariance_check(meshes::ellipsoid(2, 1.0, 0.8, 0.6), map, {}, cfg);
  CHECK(rep.orientation == -1);
  REQUIRE(rep.has_refinement);
  CHECK(rep.refined_relative_difference < 0.02);
  CHECK(rep.decreasing);
  const auto j = nlohmann::json::parse(to_json(rep));
  CHECK(j["energy"] == "KS");
  CHECK(j["map"]["kind"] == "inversion");
  CHECK(j["refinement"]["decreasing"] == true);
  CHECK(j.contains("original"));
  CHECK(j.contains("mapped"));
}

TEST_CASE("KS on inverted charts is invariant through the composed chart") {
  const auto rep = moebius_invariance_check(catalog::ellipsoid(1.0, 0.8, 0.6),
                                            inversion(vec3(2.0, 1.0, 0.5), 1.5), {},
                                            InvarianceConfig{8, 10, std::nullopt});
  // the pulled-back rule is the same up to the diagonal-limit radii, which
  // follow the mapped weights
  CHECK(rep.relative_difference < 1e-6);
  CHECK(rep.refined_relative_difference < 1e-6);
  const auto sphere = moebius_invariance_check(catalog::sphere(1.0), inversion(vec3(0.5, 3.0, 0.0), 1.0),
                                               {}, InvarianceConfig{8, 10, std::nullopt});
  CHECK(sphere.original < 1e-8);
  CHECK(sphere.mapped < 1e-8);
}

TEST_CASE("KS rejects immersed and unsupported input") {
  auto m = meshes::icosphere(1);
  const auto twice = geometry::disjoint_union(m, m);
  CHECK_THROWS_AS(ks_energy(twice), Error);
  KSOptions o;
  o.allow_immersed = true;
  o.order = 4;
  CHECK_NOTHROW(ks_energy(twice, o));
  CHECK_THROWS_AS(ks_energy(catalog::disk(1.0, 0.0)), Error);
}

TEST_CASE("AS energy of the round sphere") {
  riesz::EnergyOptions o;
  o.order = 8;
  o.estimate_error = false;
  for (double r : {1.0, 0.6}) {
    const auto rep = as_energy(catalog::sphere(r), 0.5, o);
    CHECK(rep.e4.value == doctest::Approx(-pi * pi).epsilon(0.01));
    CHECK(rep.topological == doctest::Approx(pi * pi).epsilon(1e-14));
    CHECK(std::abs(rep.delta_integral) < 1e-6);
    CHECK(std::abs(rep.delta_log_delta) < 1e-6);
    CHECK(std::abs(rep.value) < 0.01 * pi * pi);
  }
}

TEST_CASE("AS energy is affine in s with slope ∫Δ") {
  riesz::EnergyOptions o;
  o.order = 8;
  o.estimate_error = false;
  const auto r0 = as_energy(catalog::ellipsoid(1.0, 1.0, 1.2), 0.0, o);
  const double di = spheroid_delta_integral(1.0, 1.2);
  CHECK(r0.delta_integral == doctest::Approx(di).epsilon(1e-6));
  const double v1 = r0.e4.value + r0.delta_log_delta + r0.topological + r0.delta_integral;
  CHECK(r0.value + r0.delta_integral == doctest::Approx(v1).epsilon(1e-14));
  CHECK(r0.euler == 2);
  const auto j = nlohmann::json::parse(to_json(r0));
  CHECK(j["euler_characteristic"] == 2);
}

TEST_CASE("inversion maps spheres off the center to spheres") {
  const auto mesh = meshes::icosphere(2, 1.0, vec3(0.2, 0.1, 0.0));
  const auto img = std::get<geometry::TriMesh>(apply_moebius(mesh, inversion(vec3(2.0, 0.5, 0.3), 1.3)).surface);
  // fit the center by least squares: |x|^2 = 2 c.x + (r^2 - |c|^2)
  const auto& v = img.vertices();
  Mat a(v.size(), 4);
  Vec b(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    a.row(i) << 2.0 * v[i][0], 2.0 * v[i][1], 2.0 * v[i][2], 1.0;
    b[i] = v[i].squaredNorm();
  }
  const Vec sol = a.colPivHouseholderQr().solve(b);
  const Vec c = sol.head(3);
  const double r = std::sqrt(sol[3] + c.squaredNorm());
  for (const auto& p : v) CHECK(std::abs((p - c).norm() - r) <= 1e-8 * r);
}

TEST_CASE("similarities scale pairwise distances, inversions are involutions") {
  const auto mesh = meshes::ellipsoid(1, 1.0, 0.8, 0.6);
  MoebiusMap sim;
  sim.kind = MapKind::similarity;
  sim.radius = 1.7;
  sim.center = vec3(1, 2, 3);
  const auto s = std::get<geometry::TriMesh>(apply_moebius(mesh, sim).surface);
  const auto& v0 = mesh.vertices();
  const auto& v1 = s.vertices();
  for (std::size_t i = 0; i < v0.size(); i += 3)
    for (std::size_t j = i + 1; j < v0.size(); j += 5)
      CHECK((v1[i] - v1[j]).norm() == doctest::Approx(1.7 * (v0[i] - v0[j]).norm()).epsilon(1e-12));

  const auto inv = inversion(vec3(1.5, 0.2, -0.4), 0.9);
  const auto once = apply_moebius(mesh, inv);
  const auto twice = std::get<geometry::TriMesh>(apply_moebius(once.surface, inv).surface);
  CHECK(once.orientation == -1);
  for (std::size_t i = 0; i < v0.size(); ++i) CHECK((twice.vertices()[i] - v0[i]).norm() <= 1e-10);

  // charts: positions of the doubly inverted chart agree with the original
  const auto e = catalog::ellipsoid(1.0, 0.8, 0.6);
  const auto e2 = std::get<geometry::ChartSurface>(
      apply_moebius(apply_moebius(e, inv).surface, inv).surface);
  const auto n0 = geometry::sample(e, 4), n2 = geometry::sample(e2, 4);
  REQUIRE(n0.size() == n2.size());
  for (std::size_t i = 0; i < n0.size(); ++i) CHECK((n0.x[i] - n2.x[i]).norm() <= 1e-10);
}

TEST_CASE("inversion centered on the surface is a singular map") {
  const auto s = catalog::sphere(1.0);
  try {
    apply_moebius(s, inversion(vec3(0.6, 0.0, 0.8), 1.0));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::singular);
  }
  CHECK_THROWS_AS(apply_moebius(meshes::icosphere(1), inversion(meshes::icosphere(1).vertices()[5], 1.0)),
                  Error);
}
