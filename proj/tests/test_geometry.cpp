#include "doctest.h"

#include "rieszlab/geometry/surface.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

using namespace rieszlab;
using namespace rieszlab::geometry;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<long>(xs.size()));
  long i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

double orthonormality_defect(const Frames& f) {
  Mat b(f.tangent.rows(), f.tangent.cols() + f.normal.cols());
  b << f.tangent, f.normal;
  return (b.transpose() * b - Mat::Identity(b.cols(), b.cols())).cwiseAbs().maxCoeff();
}

// Distance of a vector from the span of the tangent frame.
double off_span(const Frames& f, const Vec& v) {
  return (v - f.tangent * (f.tangent.transpose() * v)).norm();
}

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("circle frame at angle zero") {
  const auto c = catalog::circle();
  const Frames f = tangent_frame(c, {0, vec({0.0})});
  CHECK(orthonormality_defect(f) < 1e-12);
  CHECK(std::abs(std::abs(f.tangent(1, 0)) - 1.0) < 1e-15);
  CHECK(std::abs(std::abs(f.normal(0, 0)) - 1.0) < 1e-15);
}

TEST_CASE("sphere frame at the pole of the polar chart") {
  const auto s = catalog::sphere();
  const Frames f = tangent_frame(s, {0, vec({0.0, 0.3})});
  CHECK(orthonormality_defect(f) < 1e-12);
  CHECK(off_span(f, vec({1, 0, 0})) < 1e-12);
  CHECK(off_span(f, vec({0, 1, 0})) < 1e-12);
  CHECK(std::abs(std::abs(f.normal(2, 0)) - 1.0) < 1e-12);
}

TEST_CASE("closed surface normals point outward") {
  for (const auto& s : {catalog::sphere(1.5), catalog::ellipsoid(1, 2, 0.5),
                        catalog::torus(2.0, 0.7)}) {
    const auto nodes = sample(s, 6);
    for (std::size_t i = 0; i < nodes.size(); i += 7) {
      // outward for these shapes: away from the center axis
      Vec radial = nodes.x[i];
      if (s.description().rfind("torus", 0) == 0) {
        Vec axis_point = vec({nodes.x[i][0], nodes.x[i][1], 0.0});
        axis_point *= 2.0 / axis_point.norm();
        radial = nodes.x[i] - axis_point;
      }
      CHECK(nodes.normal[i].col(0).dot(radial) > 0.0);
    }
  }
}

TEST_CASE("graph frame at a critical point") {
  const auto g = catalog::graph(1.0, 0.0, 1.0, 1.0);
  const Frames f = tangent_frame(g, {0, vec({0.0, 0.0})});
  CHECK(off_span(f, vec({1, 0, 0})) < 1e-14);
  CHECK(off_span(f, vec({0, 1, 0})) < 1e-14);
}

TEST_CASE("frames of random ellipsoid and torus points are orthonormal") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> th(0.05, pi - 0.05), ph(0, 2 * pi);
  for (const auto& s : {catalog::ellipsoid(1, 1.3, 0.8), catalog::torus(2, 0.5)})
    for (int i = 0; i < 50; ++i) {
      const Frames f = tangent_frame(s, {0, vec({th(rng), ph(rng)})});
      CHECK(orthonormality_defect(f) < 1e-12);
    }
}

TEST_CASE("degenerate Jacobian is rejected") {
  Mat j(3, 2);
  j << 1, 2, 0, 0, 0, 0;
  try {
    frames_from_jacobian(vec({0, 0, 0}), j);
    FAIL("expected a rank deficiency error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::rank_deficiency);
  }
}

TEST_CASE("sphere graph patch at the pole is the cap height") {
  const auto s = catalog::sphere();
  const auto pr = graph_patch_at(s, {0, vec({0.0, 0.0})}, 0.5);
  const auto& p = *pr.patch;
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> d(-0.35, 0.35);
  for (int i = 0; i < 40; ++i) {
    const Vec u = vec({d(rng), d(rng)});
    Vec h;
    Mat dh;
    PatchHint hint;
    REQUIRE(p.height(u, h, dh, &hint));
    const double r2 = u.squaredNorm();
    const double expect = 1.0 - std::sqrt(1.0 - r2);
    CHECK(std::abs(std::abs(h[0]) - expect) < 1e-12);
    // Dh = grad of the cap height, up to the normal sign
    const double g = 1.0 / std::sqrt(1.0 - r2);
    CHECK(std::abs(std::abs(dh(0, 0)) - g * std::abs(u[0])) < 1e-10);
  }
  Vec h0;
  Mat dh0;
  REQUIRE(p.height(Vec::Zero(2), h0, dh0, nullptr));
  CHECK(h0.norm() < 1e-15);
  CHECK(dh0.norm() < 1e-14);
  CHECK(pr.bounds.validated_radius >= 0.5);
  CHECK(pr.bounds.b >= 1.0);
  CHECK(pr.bounds.by_order[2] == doctest::Approx(1.0 / std::pow(0.75, 1.5)).epsilon(1e-3));
}

TEST_CASE("patch re-embedding reproduces surface points") {
  const auto s = catalog::ellipsoid(1.0, 1.0, 1.2);
  const ChartPoint at{0, vec({1.0, 0.4})};
  const auto pr = graph_patch_at(s, at, 0.4);
  const auto& p = *pr.patch;
  for (int i = 0; i < 20; ++i) {
    const Vec q = at.q + 0.2 * vec({std::cos(i * 0.9), std::sin(i * 1.3)});
    const Vec y = s.components()[0].atlas[0].position(q);
    const Vec u = p.tangent().transpose() * (y - p.base());
    Vec h;
    Mat dh;
    REQUIRE(p.height(u, h, dh, nullptr));
    CHECK((p.embed(u, h) - y).norm() < 1e-12);
    CHECK(p.contains(y));
  }
  // the antipodal sheet is not part of the patch
  CHECK_FALSE(p.contains(-p.base()));
}

TEST_CASE("patch radius beyond vertical tangency is rejected") {
  const auto s = catalog::sphere();
  try {
    graph_patch_at(s, {0, vec({0.7, 1.0})}, 1.2);
    FAIL("expected a patch radius error");
  } catch (const PatchRadiusError& e) {
    CHECK(e.validated_radius() < 1.0);
    CHECK(e.validated_radius() > 0.9);
  }
  const auto shrunk = graph_patch_at(s, {0, vec({0.7, 1.0})}, 1.2, RadiusPolicy::shrink);
  CHECK(shrunk.patch->radius() < 1.0);
}

TEST_CASE("flat plane patch has zero height and bound") {
  const auto pl = catalog::plane(2.0);
  const auto pr = graph_patch_at(pl, {0, vec({0.1, -0.2})}, 0.5);
  Vec h;
  Mat dh;
  REQUIRE(pr.patch->height(vec({0.3, 0.2}), h, dh, nullptr));
  CHECK(h.norm() < 1e-15);
  CHECK(pr.bounds.b == 0.0);
}

TEST_CASE("cylinder patch is flat along the axis") {
  const auto cy = catalog::cylinder(1.0, 2.0);
  const auto pr = graph_patch_at(cy, {0, vec({0.4, 0.1})}, 0.3);
  const auto& p = *pr.patch;
  // find the tangent direction along the axis
  const int axis = std::abs(p.tangent()(2, 0)) > 0.5 ? 0 : 1;
  Vec e = Vec::Zero(2);
  const double d = 1e-3;
  e[axis] = d;
  Vec hp, hm, h0;
  Mat dh;
  REQUIRE(p.height(e, hp, dh, nullptr));
  REQUIRE(p.height(-e, hm, dh, nullptr));
  REQUIRE(p.height(Vec::Zero(2), h0, dh, nullptr));
  CHECK(std::abs((hp[0] - 2 * h0[0] + hm[0]) / (d * d)) < 1e-6);
  const auto cd = curvature_at(cy, {0, vec({0.4, 0.1})});
  REQUIRE(cd.principal);
  CHECK(std::abs(std::abs((*cd.principal)[0]) + std::abs((*cd.principal)[1]) - 1.0) < 1e-12);
  CHECK(std::abs(cd.delta - 1.0) < 1e-12);
  CHECK(std::abs(cd.gauss) < 1e-12);
}

TEST_CASE("sphere and plane curvature") {
  const auto s = catalog::sphere(2.0);
  const auto cd = curvature_at(s, {0, vec({1.1, 2.0})});
  CHECK(cd.delta < 1e-12);
  CHECK(cd.gauss == doctest::Approx(0.25).epsilon(1e-12));
  const auto pl = curvature_at(catalog::plane(1.0), {0, vec({0.2, 0.3})});
  CHECK(pl.delta == 0.0);
  CHECK(pl.gauss == 0.0);
}

TEST_CASE("curvature identities on ellipsoid and torus") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> a(0.1, pi - 0.1), b(0, 2 * pi);
  for (const auto& s : {catalog::ellipsoid(1, 1.5, 0.7), catalog::torus(3, 1)})
    for (int i = 0; i < 30; ++i) {
      const auto cd = curvature_at(s, {0, vec({a(rng), b(rng)})});
      const double h2 = cd.hs_norm * cd.hs_norm, H2 = cd.mean.squaredNorm();
      CHECK(std::abs(cd.delta - (2 * h2 - H2)) < 1e-10);
      CHECK(std::abs(cd.gauss - 0.5 * (H2 - h2)) < 1e-10);
      CHECK(std::abs(cd.h[0][1][0] - cd.h[1][0][0]) < 1e-12);
      REQUIRE(cd.principal);
      const double k1 = (*cd.principal)[0], k2 = (*cd.principal)[1];
      CHECK(std::abs(cd.delta - (k1 - k2) * (k1 - k2)) < 1e-10);
      CHECK(std::abs(cd.gauss - k1 * k2) < 1e-10);
    }
}

TEST_CASE("torus Gaussian curvature matches the classical formula") {
  const double R = 2.0, r = 0.5;
  const auto t = catalog::torus(R, r);
  for (double v : {0.0, 0.7, 2.0, pi}) {
    const auto cd = curvature_at(t, {0, vec({0.3, v})});
    CHECK(cd.gauss == doctest::Approx(std::cos(v) / (r * (R + r * std::cos(v)))).epsilon(1e-10));
  }
}

TEST_CASE("mesh curvature converges on icosphere refinements") {
  double prev = 1e9;
  for (int level = 1; level <= 4; ++level) {
    const auto m = meshes::icosphere(level);
    double err = 0.0;
    for (std::size_t v = 0; v < m.vertex_count(); v += 3)
      err = std::max(err, std::abs(curvature_at(m, static_cast<int>(v)).gauss - 1.0));
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 2e-2);
}

TEST_CASE("mesh cylinder-like curvature from the quadric fit") {
  const auto t = meshes::torus(3.0, 1.0, 180, 60);
  // outer equator vertex: principal curvatures 1 and 1/4
  const auto cd = curvature_at(t, 0);
  REQUIRE(cd.principal);
  const double k1 = std::abs((*cd.principal)[0]), k2 = std::abs((*cd.principal)[1]);
  CHECK(std::max(k1, k2) == doctest::Approx(1.0).epsilon(1e-2));
  CHECK(std::min(k1, k2) == doctest::Approx(0.25).epsilon(2e-2));
}

TEST_CASE("mesh fit reports insufficient sampling") {
  std::vector<Vec> v = {vec({0, 0, 0}), vec({1, 0, 0}), vec({0, 1, 0}), vec({0, 0, 1})};
  const TriMesh tet(2, v, {{{0, 2, 1}}, {{0, 1, 3}}, {{0, 3, 2}}, {{1, 2, 3}}});
  try {
    curvature_at(tet, 0);
    FAIL("expected an estimation error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::numerical);
    CHECK(std::string(e.what()).find("samples") != std::string::npos);
  }
}

TEST_CASE("Euler characteristic of meshes") {
  CHECK(euler_characteristic(meshes::icosphere(2)) == 2);
  CHECK(euler_characteristic(meshes::torus(2, 1, 12, 8)) == 0);
  CHECK(euler_characteristic(meshes::polygon(17)) == 0);
  const auto u = disjoint_union(meshes::icosphere(1), meshes::icosphere(0, 1.0, vec({5, 0, 0})));
  CHECK(euler_characteristic(u) == 4);
  const auto ut = disjoint_union(u, meshes::torus(2, 1, 10, 6));
  CHECK(euler_characteristic(ut) == 4);
  CHECK(ut.component_count() == 3);
}

TEST_CASE("open and misoriented meshes are rejected") {
  const auto s = meshes::icosphere(1);
  auto faces = s.faces();
  faces.pop_back();
  const TriMesh open(2, s.vertices(), faces);
  try {
    euler_characteristic(open);
    FAIL("expected a topology error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::topology);
  }
  faces = s.faces();
  std::swap(faces[0][1], faces[0][2]);
  const TriMesh bad(2, s.vertices(), faces);
  try {
    check_closed(bad);
    FAIL("expected an orientation error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::orientation);
  }
}

TEST_CASE("degenerate faces are rejected at construction") {
  std::vector<Vec> v = {vec({0, 0, 0}), vec({1, 0, 0}), vec({2, 0, 0})};
  CHECK_THROWS_AS(TriMesh(2, v, {{{0, 1, 2}}}), Error);
  CHECK_THROWS_AS(TriMesh(2, v, {{{0, 1, 5}}}), Error);
}

TEST_CASE("icosphere faces are outward oriented") {
  const auto s = meshes::icosphere(2, 1.0);
  for (std::size_t f = 0; f < s.face_count(); ++f) {
    const auto& face = s.faces()[f];
    const Vec c = (s.vertices()[face[0]] + s.vertices()[face[1]] + s.vertices()[face[2]]) / 3.0;
    CHECK(s.face_normal(static_cast<int>(f)).dot(c) > 0);
  }
}

TEST_CASE("chart Euler characteristic and volume") {
  CHECK(euler_characteristic(Surface{catalog::sphere()}) == 2);
  CHECK(euler_characteristic(Surface{catalog::torus(2, 1)}) == 0);
  CHECK(total_volume(Surface{catalog::sphere(2.0)}) == doctest::Approx(16 * pi).epsilon(1e-13));
  CHECK(total_volume(Surface{catalog::torus(2, 1)}) ==
        doctest::Approx(4 * pi * pi * 2).epsilon(1e-13));
  CHECK_THROWS_AS(euler_characteristic(Surface{catalog::plane(1.0)}), Error);
}

TEST_CASE("mesh files round trip") {
  const auto s = meshes::torus(2, 0.5, 9, 7);
  for (const char* name : {"rieszlab_rt.off", "rieszlab_rt.obj"}) {
    const auto path = temp_file(name).string();
    if (std::string(name).find(".off") != std::string::npos)
      write_off(s, path);
    else
      write_obj(s, path);
    const auto back = read_mesh(path);
    REQUIRE(back.vertex_count() == s.vertex_count());
    REQUIRE(back.faces() == s.faces());
    for (std::size_t v = 0; v < s.vertex_count(); ++v)
      CHECK(back.vertices()[v] == s.vertices()[v]);
    std::filesystem::remove(path);
  }
  const auto poly = meshes::polygon(11);
  const auto path = temp_file("rieszlab_poly.off").string();
  write_off(poly, path);
  const auto back = read_mesh(path);
  CHECK(back.dim() == 1);
  CHECK(back.ambient() == 2);
  std::filesystem::remove(path);
}

TEST_CASE("malformed mesh files report io errors") {
  const auto path = temp_file("rieszlab_bad.off").string();
  {
    std::FILE* f = std::fopen(path.c_str(), "w");
    std::fputs("OFF\n3 1 0\n0 0 0\n1 0 x\n", f);
    std::fclose(f);
  }
  try {
    read_mesh(path);
    FAIL("expected an io error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::io);
  }
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_mesh("/nonexistent/file.off"), Error);
}

TEST_CASE("patch class validation") {
  const Surface s{catalog::sphere()};
  const auto ok = validate_patch_class(s, {3, 0.1, 10.0, 20.0});
  CHECK(ok.pass);
  CHECK(ok.volume == doctest::Approx(4 * pi).epsilon(1e-12));
  CHECK(ok.max_bound >= 1.0);
  CHECK(ok.max_bound < 10.0);
  const auto small = validate_patch_class(s, {3, 0.1, 10.0, 1.0});
  CHECK_FALSE(small.pass);
  CHECK_FALSE(small.volume_ok);
  CHECK(small.volume == doctest::Approx(12.566370614359172).epsilon(1e-12));
  const Surface two{catalog::sphere().united(catalog::sphere(1.0, vec({3.0, 0, 0})))};
  const auto both = validate_patch_class(two, {3, 0.4, 10.0, 30.0});
  CHECK(both.patches_ok);
  CHECK(both.bounds_ok);
  const auto tight = validate_patch_class(s, {3, 0.1, 0.5, 20.0});
  CHECK_FALSE(tight.bounds_ok);
  CHECK_FALSE(tight.violations.empty());
}

TEST_CASE("mesh patch class validation reports fit residuals") {
  const Surface m{meshes::icosphere(3)};
  const auto rep = validate_patch_class(m, {3, 0.1, 10.0, 20.0});
  CHECK(rep.patches_ok);
  CHECK(rep.max_fit_residual > 0.0);
  CHECK(rep.max_fit_residual < 1e-3);
  CHECK(rep.volume < 4 * pi);
}
