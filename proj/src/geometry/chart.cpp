#include "rieszlab/geometry/chart.hpp"

#include "rieszlab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rieszlab::geometry {

Chart::Chart(int m, int n, PositionFn position, JetFn jet, LocateFn locate)
    : m_(m), n_(n), position_(std::move(position)), jet_(std::move(jet)),
      locate_(std::move(locate)) {
  require(m >= 1 && n > m, ErrorKind::precondition, "chart: need 1 <= m < n");
}

Vec Chart::position(const Vec& q) const {
  Vec out(n_);
  position_(q.data(), out.data());
  return out;
}

void Chart::jet(const Vec& q, ChartJet& out, bool second) const {
  jet_(q.data(), out, second);
}

Chart Chart::composed(const AmbientMap& map) const {
  const Chart inner = *this;
  const int m = m_, n = n_;
  auto position = [inner, map, n](const double* q, double* out) {
    ChartJet j;
    Eigen::Map<const Vec> qv(q, inner.dim());
    Vec p = inner.position(qv), image;
    Mat dt;
    map.apply(p, image, dt, nullptr);
    for (int k = 0; k < n; ++k) out[k] = image[k];
  };
  auto jet = [inner, map, m, n](const double* q, ChartJet& out, bool second) {
    ChartJet in;
    Eigen::Map<const Vec> qv(q, m);
    inner.jet(qv, in, second);
    Vec image;
    Mat dt;
    std::vector<Mat> d2t;
    map.apply(in.pos, image, dt, second ? &d2t : nullptr);
    out.pos = image;
    out.jac = dt * in.jac;
    if (second) {
      out.hess.assign(n, Mat::Zero(m, m));
      for (int k = 0; k < n; ++k) {
        Mat hk = in.jac.transpose() * d2t[k] * in.jac;
        for (int l = 0; l < n; ++l) hk += dt(k, l) * in.hess[l];
        out.hess[k] = hk;
      }
    }
  };
  auto locate = [inner, map](const Vec& p) -> std::optional<Vec> {
    Vec pre;
    try {
      pre = map.inverse(p);
    } catch (const Error& e) {
      // no preimage (the image of infinity), so not on the surface
      if (e.kind() == ErrorKind::singular) return std::nullopt;
      throw;
    }
    return inner.locate(pre);
  };
  return Chart(m, n, position, jet, locate);
}

ChartSurface::ChartSurface(std::string description, std::vector<ChartComponent> components)
    : description_(std::move(description)), components_(std::move(components)) {
  require(!components_.empty(), ErrorKind::precondition, "chart surface: no components");
  for (const auto& c : components_) {
    require(!c.atlas.empty(), ErrorKind::precondition, "chart surface: empty atlas");
    const int m = c.atlas[0].dim(), n = c.atlas[0].ambient();
    if (m_ == 0) {
      m_ = m;
      n_ = n;
    }
    require(m == m_ && n == n_, ErrorKind::precondition,
            "chart surface: components of different dimensions");
    for (const auto& ch : c.atlas)
      require(ch.dim() == m_ && ch.ambient() == n_, ErrorKind::precondition,
              "chart surface: atlas charts of different dimensions");
  }
}

AmbientMap similarity(int n, double scale, const Vec& shift, const Mat& rotation) {
  require(scale > 0, ErrorKind::precondition, "similarity: scale must be positive");
  const Vec b = shift.size() ? shift : Vec::Zero(n);
  const Mat r = rotation.size() ? rotation : Mat::Identity(n, n);
  require(b.size() == n && r.rows() == n && r.cols() == n, ErrorKind::precondition,
          "similarity: shift or rotation has the wrong size");
  require((r.transpose() * r - Mat::Identity(n, n)).norm() < 1e-10, ErrorKind::precondition,
          "similarity: rotation must be orthogonal");
  const Mat a = scale * r;
  AmbientMap map;
  map.apply = [a, b, n](const Vec& p, Vec& image, Mat& jacobian, std::vector<Mat>* hessians) {
    image = a * p + b;
    jacobian = a;
    if (hessians) hessians->assign(n, Mat::Zero(n, n));
  };
  const Mat ainv = r.transpose() / scale;
  map.inverse = [ainv, b](const Vec& y) -> Vec { return ainv * (y - b); };
  map.orientation = r.determinant() > 0 ? 1 : -1;
  map.reach_scale = scale;
  return map;
}

bool ChartSurface::closed() const {
  for (const auto& c : components_)
    if (!c.closed) return false;
  return true;
}

ChartSurface ChartSurface::mapped(const AmbientMap& map, const std::string& suffix) const {
  std::vector<ChartComponent> out;
  for (const auto& c : components_) {
    ChartComponent d = c;
    d.atlas.clear();
    for (const auto& ch : c.atlas) d.atlas.push_back(ch.composed(map));
    d.reach = c.reach * map.reach_scale;
    d.name = c.name + suffix;
    out.push_back(std::move(d));
  }
  return ChartSurface(description_ + suffix, std::move(out));
}

ChartSurface ChartSurface::united(const ChartSurface& other) const {
  std::vector<ChartComponent> all = components_;
  for (const auto& c : other.components_) all.push_back(c);
  return ChartSurface(description_ + " + " + other.description_, std::move(all));
}

namespace catalog {
namespace {

using std::cos;
using std::sin;

std::string fmt(const char* name, std::initializer_list<std::pair<const char*, double>> ps) {
  std::ostringstream os;
  os.precision(17);
  os << name;
  char sep = ':';
  for (const auto& [k, v] : ps) {
    os << sep << k << '=' << v;
    sep = ',';
  }
  return os.str();
}

// Sphere-like rule: Gauss-Legendre in cos(theta), trapezoid in phi, with the
// 1/sin(theta) factor folded into the parameter weight.
std::function<std::vector<QuadNode>(int)> polar_rule() {
  return [](int order) {
    require(order >= 1, ErrorKind::precondition, "quadrature order must be >= 1");
    const auto gz = quad::gauss_legendre(order);
    const auto gp = quad::periodic_trapezoid(2 * order, 0.0, 2.0 * pi);
    std::vector<QuadNode> nodes;
    nodes.reserve(gz.nodes.size() * gp.nodes.size());
    for (std::size_t i = 0; i < gz.nodes.size(); ++i) {
      const double z = gz.nodes[i];
      const double theta = std::acos(z), s = std::sqrt(1.0 - z * z);
      for (std::size_t j = 0; j < gp.nodes.size(); ++j) {
        Vec q(2);
        q << theta, gp.nodes[j];
        nodes.push_back({q, gz.weights[i] * gp.weights[j] / s});
      }
    }
    return nodes;
  };
}

std::function<std::vector<QuadNode>(int)> box_rule(double a0, double a1, double b0,
                                                   double b1) {
  return [=](int order) {
    require(order >= 1, ErrorKind::precondition, "quadrature order must be >= 1");
    const auto ga = quad::gauss_legendre(order, a0, a1);
    const auto gb = quad::gauss_legendre(order, b0, b1);
    std::vector<QuadNode> nodes;
    for (std::size_t i = 0; i < ga.nodes.size(); ++i)
      for (std::size_t j = 0; j < gb.nodes.size(); ++j) {
        Vec q(2);
        q << ga.nodes[i], gb.nodes[j];
        nodes.push_back({q, ga.weights[i] * gb.weights[j]});
      }
    return nodes;
  };
}

double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * pi);
  return a < 0 ? a + 2.0 * pi : a;
}

Vec v2(double a, double b) {
  Vec q(2);
  q << a, b;
  return q;
}

}  // namespace

ChartSurface circle(double radius, const Vec& center) {
  require(radius > 0, ErrorKind::precondition, "circle: radius must be positive");
  require(center.size() == 2, ErrorKind::precondition, "circle: center must be in R^2");
  const double cx = center[0], cy = center[1], r = radius;
  auto f = [=](const auto& q) {
    using T = std::decay_t<decltype(q[0])>;
    return std::array<T, 2>{cx + r * cos(q[0]), cy + r * sin(q[0])};
  };
  auto locate = [=](const Vec& p) -> std::optional<Vec> {
    Vec q(1);
    q[0] = wrap_angle(std::atan2(p[1] - cy, p[0] - cx));
    return q;
  };
  ChartComponent c;
  c.name = "circle";
  c.atlas.push_back(make_chart<1, 2>(f, locate));
  c.rule = [](int order) {
    require(order >= 1, ErrorKind::precondition, "quadrature order must be >= 1");
    const auto g = quad::periodic_trapezoid(2 * order, 0.0, 2.0 * pi);
    std::vector<QuadNode> nodes;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      Vec q(1);
      q[0] = g.nodes[i];
      nodes.push_back({q, g.weights[i]});
    }
    return nodes;
  };
  c.closed = true;
  c.euler = 0;
  c.reach = r;
  return ChartSurface(fmt("circle", {{"r", r}}), {c});
}

ChartSurface ellipse(double a, double b) {
  require(a > 0 && b > 0, ErrorKind::precondition, "ellipse: semi-axes must be positive");
  auto f = [=](const auto& q) {
    using T = std::decay_t<decltype(q[0])>;
    return std::array<T, 2>{a * cos(q[0]), b * sin(q[0])};
  };
  auto locate = [=](const Vec& p) -> std::optional<Vec> {
    Vec q(1);
    q[0] = wrap_angle(std::atan2(p[1] / b, p[0] / a));
    return q;
  };
  ChartComponent c;
  c.name = "ellipse";
  c.atlas.push_back(make_chart<1, 2>(f, locate));
  c.rule = [](int order) {
    require(order >= 1, ErrorKind::precondition, "quadrature order must be >= 1");
    const auto g = quad::periodic_trapezoid(2 * order, 0.0, 2.0 * pi);
    std::vector<QuadNode> nodes;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      Vec q(1);
      q[0] = g.nodes[i];
      nodes.push_back({q, g.weights[i]});
    }
    return nodes;
  };
  c.closed = true;
  c.euler = 0;
  // smallest radius of curvature
  c.reach = std::min(b * b / a, a * a / b);
  return ChartSurface(fmt("ellipse", {{"a", a}, {"b", b}}), {c});
}

namespace {
ChartComponent ellipsoid_component(double a, double b, double c, const Vec& center,
                                   const std::string& name) {
  const double cx = center[0], cy = center[1], cz = center[2];
  // Pole on the z axis.
  auto f0 = [=](const auto& q) {
    using T = std::decay_t<decltype(q[0])>;
    const T s = sin(q[0]);
    return std::array<T, 3>{cx + a * s * cos(q[1]), cy + b * s * sin(q[1]),
                            cz + c * cos(q[0])};
  };
  auto l0 = [=](const Vec& p) -> std::optional<Vec> {
    const double x = (p[0] - cx) / a, y = (p[1] - cy) / b, z = (p[2] - cz) / c;
    const double rr = std::sqrt(x * x + y * y + z * z);
    if (rr == 0) return std::nullopt;
    return v2(std::acos(std::clamp(z / rr, -1.0, 1.0)), wrap_angle(std::atan2(y, x)));
  };
  // Cyclic permutation: pole on the x axis, same orientation.
  auto f1 = [=](const auto& q) {
    using T = std::decay_t<decltype(q[0])>;
    const T s = sin(q[0]);
    return std::array<T, 3>{cx + a * cos(q[0]), cy + b * s * cos(q[1]),
                            cz + c * s * sin(q[1])};
  };
  auto l1 = [=](const Vec& p) -> std::optional<Vec> {
    const double x = (p[0] - cx) / a, y = (p[1] - cy) / b, z = (p[2] - cz) / c;
    const double rr = std::sqrt(x * x + y * y + z * z);
    if (rr == 0) return std::nullopt;
    return v2(std::acos(std::clamp(x / rr, -1.0, 1.0)), wrap_angle(std::atan2(z, y)));
  };
  // Second cyclic permutation: pole on the y axis.
  auto f2 = [=](const auto& q) {
    using T = std::decay_t<decltype(q[0])>;
    const T s = sin(q[0]);
    return std::array<T, 3>{cx + a * s * sin(q[1]), cy + b * cos(q[0]),
                            cz + c * s * cos(q[1])};
  };
  auto l2 = [=](const Vec& p) -> std::optional<Vec> {
    const double x = (p[0] - cx) / a, y = (p[1] - cy) / b, z = (p[2] - cz) / c;
    const double rr = std::sqrt(x * x + y * y + z * z);
    if (rr == 0) return std::nullopt;
    return v2(std::acos(std::clamp(y / rr, -1.0, 1.0)), wrap_angle(std::atan2(x, z)));
  };
  ChartComponent comp;
  comp.name = name;
  comp.atlas.push_back(make_chart<2, 3>(f0, l0));
  comp.atlas.push_back(make_chart<2, 3>(f1, l1));
  comp.atlas.push_back(make_chart<2, 3>(f2, l2));
  comp.rule = polar_rule();
  comp.closed = true;
  comp.euler = 2;
  const double lo = std::min({a, b, c}), hi = std::max({a, b, c});
  comp.reach = lo * lo / hi;
  return comp;
}
}  // namespace

ChartSurface sphere(double radius, const Vec& center) {
  require(radius > 0, ErrorKind::precondition, "sphere: radius must be positive");
  require(center.size() == 3, ErrorKind::precondition, "sphere: center must be in R^3");
  std::string d = fmt("sphere", {{"r", radius}});
  if (center.norm() > 0)
    d = fmt("sphere", {{"r", radius}, {"cx", center[0]}, {"cy", center[1]}, {"cz", center[2]}});
  return ChartSurface(d, {ellipsoid_component(radius, radius, radius, center, "sphere")});
}

ChartSurface ellipsoid(double a, double b, double c) {
  require(a > 0 && b > 0 && c > 0, ErrorKind::precondition,
          "ellipsoid: semi-axes must be positive");
  return ChartSurface(fmt("ellipsoid", {{"a", a}, {"b", b}, {"c", c}}),
                      {ellipsoid_component(a, b, c, Vec::Zero(3), "ellipsoid")});
}

ChartSurface torus(double major, double minor) {
  require(minor > 0 && major > minor, ErrorKind::precondition,
          "torus: need major > minor > 0");
  const double R = major, r = minor;
  auto f = [=](const auto& q) {
    using T = std::decay_t<decltype(q[0])>;
    const T rho = R + r * cos(q[1]);
    return std::array<T, 3>{rho * cos(q[0]), rho * sin(q[0]), r * sin(q[1])};
  };
  auto locate = [=](const Vec& p) -> std::optional<Vec> {
    const double rho = std::hypot(p[0], p[1]);
    return v2(wrap_angle(std::atan2(p[1], p[0])), wrap_angle(std::atan2(p[2], rho - R)));
  };
  ChartComponent comp;
  comp.name = "torus";
  comp.atlas.push_back(make_chart<2, 3>(f, locate));
  const double ratio = (R + r) / r;
  comp.rule = [ratio](int order) {
    require(order >= 1, ErrorKind::precondition, "quadrature order must be >= 1");
    const int nu = static_cast<int>(std::ceil(order * ratio));
    const auto gu = quad::periodic_trapezoid(nu, 0.0, 2.0 * pi);
    const auto gv = quad::periodic_trapezoid(2 * order, 0.0, 2.0 * pi);
    std::vector<QuadNode> nodes;
    for (std::size_t i = 0; i < gu.nodes.size(); ++i)
      for (std::size_t j = 0; j < gv.nodes.size(); ++j)
        nodes.push_back({v2(gu.nodes[i], gv.nodes[j]), gu.weights[i] * gv.weights[j]});
    return nodes;
  };
  comp.closed = true;
  comp.euler = 0;
  comp.reach = std::min(r, R - r);
  return ChartSurface(fmt("torus", {{"R", R}, {"r", r}}), {comp});
}

ChartSurface cylinder(double radius, double half_height) {
  require(radius > 0 && half_height > 0, ErrorKind::precondition,
          "cylinder: radius and height must be positive");
  const double r = radius, L = half_height;
  auto f = [=](const auto& q) {
    using T = std::decay_t<decltype(q[0])>;
    return std::array<T, 3>{r * cos(q[0]), r * sin(q[0]), T(1.0) * q[1]};
  };
  auto locate = [=](const Vec& p) -> std::optional<Vec> {
    if (std::abs(p[2]) > L * (1 + 1e-12)) return std::nullopt;
    return v2(wrap_angle(std::atan2(p[1], p[0])), p[2]);
  };
  ChartComponent comp;
  comp.name = "cylinder";
  comp.atlas.push_back(make_chart<2, 3>(f, locate));
  comp.rule = [L](int order) {
    require(order >= 1, ErrorKind::precondition, "quadrature order must be >= 1");
    const auto gu = quad::periodic_trapezoid(2 * order, 0.0, 2.0 * pi);
    const auto gz = quad::gauss_legendre(order, -L, L);
    std::vector<QuadNode> nodes;
    for (std::size_t i = 0; i < gu.nodes.size(); ++i)
      for (std::size_t j = 0; j < gz.nodes.size(); ++j)
        nodes.push_back({v2(gu.nodes[i], gz.nodes[j]), gu.weights[i] * gz.weights[j]});
    return nodes;
  };
  comp.closed = false;
  comp.reach = r;
  return ChartSurface(fmt("cylinder", {{"r", r}, {"h", L}}), {comp});
}

ChartSurface graph(double a, double b, double c, double half_width) {
  require(half_width > 0, ErrorKind::precondition, "graph: half width must be positive");
  auto f = [=](const auto& q) {
    using T = std::decay_t<decltype(q[0])>;
    const T x = T(1.0) * q[0], y = T(1.0) * q[1];
    return std::array<T, 3>{x, y, a * x * x + b * x * y + c * y * y};
  };
  const double L = half_width;
  auto locate = [=](const Vec& p) -> std::optional<Vec> {
    if (std::abs(p[0]) > L * (1 + 1e-12) || std::abs(p[1]) > L * (1 + 1e-12))
      return std::nullopt;
    return v2(p[0], p[1]);
  };
  ChartComponent comp;
  comp.name = "graph";
  comp.atlas.push_back(make_chart<2, 3>(f, locate));
  comp.rule = box_rule(-L, L, -L, L);
  comp.closed = false;
  const double k = 2.0 * std::max({std::abs(a), std::abs(b), std::abs(c)});
  comp.reach = k > 0 ? 1.0 / k : 0.0;
  return ChartSurface(fmt("graph", {{"a", a}, {"b", b}, {"c", c}, {"w", L}}), {comp});
}

ChartSurface plane(double half_width) { return graph(0.0, 0.0, 0.0, half_width); }

ChartSurface disk(double radius, double height, int normal_sign) {
  require(radius > 0, ErrorKind::precondition, "disk: radius must be positive");
  const double R = radius, z0 = height;
  const double sg = normal_sign >= 0 ? 1.0 : -1.0;
  // Polar chart for quadrature, Cartesian chart for local patches.
  auto fp = [=](const auto& q) {
    using T = std::decay_t<decltype(q[0])>;
    return std::array<T, 3>{q[0] * cos(q[1]), sg * q[0] * sin(q[1]), T(z0)};
  };
  auto lp = [=](const Vec& p) -> std::optional<Vec> {
    return v2(std::hypot(p[0], p[1]), wrap_angle(std::atan2(sg * p[1], p[0])));
  };
  auto fc = [=](const auto& q) {
    using T = std::decay_t<decltype(q[0])>;
    if (sg > 0) return std::array<T, 3>{T(1.0) * q[0], T(1.0) * q[1], T(z0)};
    return std::array<T, 3>{T(1.0) * q[1], T(1.0) * q[0], T(z0)};
  };
  auto lc = [=](const Vec& p) -> std::optional<Vec> {
    if (sg > 0) return v2(p[0], p[1]);
    return v2(p[1], p[0]);
  };
  ChartComponent comp;
  comp.name = "disk";
  comp.atlas.push_back(make_chart<2, 3>(fp, lp));
  comp.atlas.push_back(make_chart<2, 3>(fc, lc));
  comp.rule = [R](int order) {
    require(order >= 1, ErrorKind::precondition, "quadrature order must be >= 1");
    const auto gr = quad::gauss_legendre(order, 0.0, R);
    const auto gp = quad::periodic_trapezoid(2 * order, 0.0, 2.0 * pi);
    std::vector<QuadNode> nodes;
    for (std::size_t i = 0; i < gr.nodes.size(); ++i)
      for (std::size_t j = 0; j < gp.nodes.size(); ++j)
        nodes.push_back({v2(gr.nodes[i], gp.nodes[j]), gr.weights[i] * gp.weights[j]});
    return nodes;
  };
  comp.closed = false;
  comp.reach = 0.0;
  return ChartSurface(fmt("disk", {{"r", R}, {"z", z0}, {"sign", sg}}), {comp});
}

}  // namespace catalog

}  // namespace rieszlab::geometry
