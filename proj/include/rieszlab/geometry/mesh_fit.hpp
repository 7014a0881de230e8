#ifndef RIESZLAB_GEOMETRY_MESH_FIT_HPP
#define RIESZLAB_GEOMETRY_MESH_FIT_HPP

#include "rieszlab/jet.hpp"

#include <array>
#include <cmath>
#include <vector>

// Weighted least squares height fit around a mesh vertex, written over a
// generic scalar so the same code yields fitted normals and their
// derivatives with respect to vertex positions.
namespace rieszlab::geometry::local_fit {

template <class T>
using P3 = std::array<T, 3>;

template <class T>
T dot(const P3<T>& a, const P3<T>& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

template <class T>
P3<T> cross(const P3<T>& a, const P3<T>& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

template <class T>
P3<T> normalized(const P3<T>& a) {
  using std::sqrt;
  const T s = 1.0 / sqrt(dot(a, a));
  return {a[0] * s, a[1] * s, a[2] * s};
}

template <class T>
struct QuadricFit {
  bool ok = false;
  int terms = 0;
  P3<T> n, t1, t2;
  std::vector<std::array<int, 2>> exponents;  // final fit, no linear terms
  std::vector<T> coefficients;
  double residual_rms = 0.0;
};

// Solves the k x k symmetric positive definite system g c = r in place.
template <class T>
bool cholesky_solve(std::vector<T>& g, std::vector<T>& r, int k) {
  using std::sqrt;
  double dmax = 0.0;
  for (int i = 0; i < k; ++i) dmax = std::max(dmax, std::abs(value_of(g[i * k + i])));
  for (int j = 0; j < k; ++j) {
    T d = g[j * k + j];
    for (int p = 0; p < j; ++p) d = d - g[j * k + p] * g[j * k + p];
    if (!(value_of(d) > 1e-13 * dmax)) return false;
    const T l = sqrt(d);
    g[j * k + j] = l;
    for (int i = j + 1; i < k; ++i) {
      T s = g[i * k + j];
      for (int p = 0; p < j; ++p) s = s - g[i * k + p] * g[j * k + p];
      g[i * k + j] = s / l;
    }
  }
  for (int i = 0; i < k; ++i) {
    T s = r[i];
    for (int p = 0; p < i; ++p) s = s - g[i * k + p] * r[p];
    r[i] = s / g[i * k + i];
  }
  for (int i = k - 1; i >= 0; --i) {
    T s = r[i];
    for (int p = i + 1; p < k; ++p) s = s - g[p * k + i] * r[p];
    r[i] = s / g[i * k + i];
  }
  return true;
}

template <class T>
void tangent_basis(const P3<T>& n, P3<T>& t1, P3<T>& t2) {
  int axis = 0;
  for (int k = 1; k < 3; ++k)
    if (std::abs(value_of(n[k])) < std::abs(value_of(n[axis]))) axis = k;
  P3<T> e{T(0.0), T(0.0), T(0.0)};
  e[axis] = T(1.0);
  const T c = n[axis];
  t1 = normalized(P3<T>{e[0] - c * n[0], e[1] - c * n[1], e[2] - c * n[2]});
  t2 = cross(n, t1);
}

// Fits z = sum c_ab x^a y^b in the frame (t1, t2, n) over the samples. With
// `linear` the first two terms are x and y.
template <class T>
bool fit_height(const P3<T>& center, const std::vector<P3<T>>& pts, const P3<T>& t1,
                const P3<T>& t2, const P3<T>& n, const std::vector<std::array<int, 2>>& ex,
                std::vector<T>& coeff, double* residual) {
  using std::exp;
  using std::sqrt;
  const int k = static_cast<int>(ex.size());
  std::vector<P3<T>> local;
  T sigma(0.0);
  for (const auto& p : pts) {
    const P3<T> d{p[0] - center[0], p[1] - center[1], p[2] - center[2]};
    local.push_back({dot(d, t1), dot(d, t2), dot(d, n)});
    sigma = sigma + sqrt(dot(d, d));
  }
  sigma = sigma / static_cast<double>(pts.size());
  std::vector<T> g(k * k, T(0.0)), r(k, T(0.0)), row(k);
  std::vector<T> weights;
  for (const auto& l : local) {
    const T x = l[0] / sigma, y = l[1] / sigma, z = l[2] / sigma;
    const T w = exp(-(x * x + y * y + z * z));
    weights.push_back(w);
    for (int t = 0; t < k; ++t) {
      T mono(1.0);
      for (int a = 0; a < ex[t][0]; ++a) mono = mono * x;
      for (int b = 0; b < ex[t][1]; ++b) mono = mono * y;
      row[t] = mono;
    }
    for (int i = 0; i < k; ++i) {
      r[i] = r[i] + w * row[i] * z;
      for (int j = 0; j < k; ++j) g[i * k + j] = g[i * k + j] + w * row[i] * row[j];
    }
  }
  if (!cholesky_solve(g, r, k)) return false;
  coeff.resize(k);
  for (int t = 0; t < k; ++t) {
    // undo the 1/sigma scaling: c = c~ sigma^(1 - a - b)
    T s(1.0);
    const int deg = ex[t][0] + ex[t][1];
    for (int p = 1; p < deg; ++p) s = s / sigma;
    coeff[t] = r[t] * s;
  }
  if (residual) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < local.size(); ++i) {
      const double x = value_of(local[i][0]), y = value_of(local[i][1]);
      double model = 0.0;
      for (int t = 0; t < k; ++t)
        model += value_of(coeff[t]) * std::pow(x, ex[t][0]) * std::pow(y, ex[t][1]);
      const double e = value_of(local[i][2]) - model;
      num += value_of(weights[i]) * e * e;
      den += value_of(weights[i]);
    }
    *residual = std::sqrt(num / den);
  }
  return true;
}

/// Normal and height polynomial at `center` from its neighbor samples,
/// starting from the estimate n0. Uses quadratic plus cubic terms when at
/// least 12 samples are available, quadratic terms otherwise.
template <class T>
QuadricFit<T> quadric_frame(const P3<T>& center, const std::vector<P3<T>>& pts,
                            const P3<T>& n0, int iterations = 3) {
  QuadricFit<T> out;
  const bool cubic = pts.size() >= 12;
  std::vector<std::array<int, 2>> curved = {{2, 0}, {1, 1}, {0, 2}};
  if (cubic)
    for (auto e : {std::array<int, 2>{3, 0}, {2, 1}, {1, 2}, {0, 3}}) curved.push_back(e);
  std::vector<std::array<int, 2>> with_linear = {{1, 0}, {0, 1}};
  with_linear.insert(with_linear.end(), curved.begin(), curved.end());
  out.terms = static_cast<int>(with_linear.size());
  if (pts.size() < with_linear.size() + 1) return out;
  P3<T> n = normalized(n0), t1, t2;
  std::vector<T> c;
  for (int it = 0; it < iterations; ++it) {
    tangent_basis(n, t1, t2);
    if (!fit_height(center, pts, t1, t2, n, with_linear, c, nullptr)) return out;
    n = normalized(P3<T>{n[0] - c[0] * t1[0] - c[1] * t2[0], n[1] - c[0] * t1[1] - c[1] * t2[1],
                         n[2] - c[0] * t1[2] - c[1] * t2[2]});
  }
  tangent_basis(n, t1, t2);
  if (!fit_height(center, pts, t1, t2, n, curved, c, &out.residual_rms)) return out;
  out.ok = true;
  out.n = n;
  out.t1 = t1;
  out.t2 = t2;
  out.exponents = curved;
  out.coefficients = c;
  return out;
}

}  // namespace rieszlab::geometry::local_fit

#endif
