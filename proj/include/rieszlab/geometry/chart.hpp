#ifndef RIESZLAB_GEOMETRY_CHART_HPP
#define RIESZLAB_GEOMETRY_CHART_HPP

#include "rieszlab/core.hpp"
#include "rieszlab/jet.hpp"

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace rieszlab::geometry {

/// Position, Jacobian (n x m) and optionally the n Hessians (m x m) of a
/// chart map at one parameter.
struct ChartJet {
  Vec pos;
  Mat jac;
  std::vector<Mat> hess;
};

/// Smooth map of R^n onto itself with first and second derivatives, used to
/// push charts and meshes forward (similarities, inversions).
struct AmbientMap {
  std::function<void(const Vec& p, Vec& image, Mat& jacobian,
                     std::vector<Mat>* hessians)>
      apply;
  std::function<Vec(const Vec&)> inverse;
  int orientation = 1;  // sign of det of the Jacobian
  double reach_scale = 0.0;  // similarities: factor on the reach, 0 if unknown
};

/// x -> scale * rotation * x + shift. An empty rotation means the identity.
AmbientMap similarity(int n, double scale, const Vec& shift = Vec(), const Mat& rotation = Mat());

class Chart {
 public:
  using PositionFn = std::function<void(const double* q, double* out)>;
  using JetFn = std::function<void(const double* q, ChartJet& out, bool second)>;
  using LocateFn = std::function<std::optional<Vec>(const Vec& p)>;

  Chart(int m, int n, PositionFn position, JetFn jet, LocateFn locate);

  int dim() const { return m_; }
  int ambient() const { return n_; }

  Vec position(const Vec& q) const;
  void jet(const Vec& q, ChartJet& out, bool second = false) const;
  /// Parameter of a point on the image, if the chart reaches it.
  std::optional<Vec> locate(const Vec& p) const { return locate_(p); }

  /// Chart of T(image).
  Chart composed(const AmbientMap& map) const;

 private:
  int m_, n_;
  PositionFn position_;
  JetFn jet_;
  LocateFn locate_;
};

namespace detail {
template <int M, int K>
std::array<Jet<M, K>, M> seed(const double* q) {
  std::array<Jet<M, K>, M> a;
  for (int i = 0; i < M; ++i) a[i] = Jet<M, K>::variable(q[i], i);
  return a;
}
}  // namespace detail

/// Builds a chart from a generic lambda `f(std::array<T, M>) -> std::array<T, N>`
/// evaluated with doubles and jets.
template <int M, int N, class F>
Chart make_chart(F f, Chart::LocateFn locate) {
  auto position = [f](const double* q, double* out) {
    std::array<double, M> a;
    for (int i = 0; i < M; ++i) a[i] = q[i];
    const auto r = f(a);
    for (int k = 0; k < N; ++k) out[k] = r[k];
  };
  auto jet = [f](const double* q, ChartJet& out, bool second) {
    out.pos.resize(N);
    out.jac.resize(N, M);
    if (second) {
      const auto r = f(detail::seed<M, 2>(q));
      out.hess.resize(N);
      for (int k = 0; k < N; ++k) {
        out.pos[k] = r[k].v;
        out.hess[k].resize(M, M);
        for (int a = 0; a < M; ++a) {
          out.jac(k, a) = r[k].g[a];
          for (int b = 0; b < M; ++b) out.hess[k](a, b) = r[k].hess(a, b);
        }
      }
    } else {
      const auto r = f(detail::seed<M, 1>(q));
      for (int k = 0; k < N; ++k) {
        out.pos[k] = r[k].v;
        for (int a = 0; a < M; ++a) out.jac(k, a) = r[k].g[a];
      }
    }
  };
  return Chart(M, N, position, jet, std::move(locate));
}

/// A chart-space quadrature node: parameter and parameter-space weight. The
/// surface weight is this weight times the chart's volume element.
struct QuadNode {
  Vec q;
  double w;
};

/// One connected piece of a chart surface. atlas[0] carries the quadrature;
/// the remaining charts cover its coordinate singularities and are used for
/// local graph patches. All atlas charts share one orientation.
struct ChartComponent {
  std::string name;
  std::vector<Chart> atlas;
  std::function<std::vector<QuadNode>(int order)> rule;
  bool closed = true;
  std::optional<int> euler;
  double reach = 0.0;  // lower bound on curvature radius; 0 if unknown
};

class ChartSurface {
 public:
  ChartSurface() = default;
  ChartSurface(std::string description, std::vector<ChartComponent> components);

  int dim() const { return m_; }
  int ambient() const { return n_; }
  const std::vector<ChartComponent>& components() const { return components_; }
  const std::string& description() const { return description_; }
  bool closed() const;

  ChartSurface mapped(const AmbientMap& map, const std::string& suffix) const;
  ChartSurface united(const ChartSurface& other) const;

 private:
  std::string description_;
  std::vector<ChartComponent> components_;
  int m_ = 0, n_ = 0;
};

/// Built-in chart catalog. Orientation: outward normal for closed
/// hypersurfaces, parameter order otherwise.
namespace catalog {
ChartSurface circle(double radius = 1.0, const Vec& center = Vec::Zero(2));
ChartSurface sphere(double radius = 1.0, const Vec& center = Vec::Zero(3));
ChartSurface ellipse(double a, double b);
ChartSurface ellipsoid(double a, double b, double c);
ChartSurface torus(double major, double minor);
/// Open cylinder x^2 + y^2 = r^2, |z| <= half_height.
ChartSurface cylinder(double radius, double half_height);
/// Open graph z = a x^2 + b x y + c y^2 over [-half_width, half_width]^2.
ChartSurface graph(double a, double b, double c, double half_width);
/// Open flat disk of the given radius in the plane z = height, oriented by
/// +z when normal_sign > 0.
ChartSurface disk(double radius, double height, int normal_sign = 1);
/// Plane z = 0 over [-half_width, half_width]^2.
ChartSurface plane(double half_width);
}  // namespace catalog

}  // namespace rieszlab::geometry

#endif
