#ifndef RIESZLAB_JET_HPP
#define RIESZLAB_JET_HPP

#include <array>
#include <cmath>

namespace rieszlab {

// Truncated Taylor jet in M variables: value, gradient and (for Order == 2)
// the symmetric Hessian. Chart maps are written once as generic lambdas and
// evaluated with double, Jet<M, 1> or Jet<M, 2> to get positions, Jacobians
// and second derivatives from the same code.
template <int M, int Order = 2>
struct Jet {
  static_assert(Order == 1 || Order == 2);
  static constexpr int dims = M;
  static constexpr int order = Order;
  static constexpr int hess_size = Order == 2 ? M * M : 0;

  double v = 0.0;
  std::array<double, M> g{};
  std::array<double, hess_size> h{};

  Jet() = default;
  Jet(double value) : v(value) {}  // NOLINT: constants promote implicitly

  static Jet variable(double value, int i) {
    Jet j(value);
    j.g[i] = 1.0;
    return j;
  }

  double hess(int a, int b) const {
    if constexpr (Order == 2)
      return h[a * M + b];
    else
      return 0.0;
  }

  Jet& operator+=(const Jet& o) {
    v += o.v;
    for (int i = 0; i < M; ++i) g[i] += o.g[i];
    for (int i = 0; i < hess_size; ++i) h[i] += o.h[i];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    v -= o.v;
    for (int i = 0; i < M; ++i) g[i] -= o.g[i];
    for (int i = 0; i < hess_size; ++i) h[i] -= o.h[i];
    return *this;
  }
  Jet& operator*=(double s) {
    v *= s;
    for (auto& x : g) x *= s;
    for (auto& x : h) x *= s;
    return *this;
  }
};

template <int M, int K>
Jet<M, K> operator-(Jet<M, K> a) {
  a *= -1.0;
  return a;
}
template <int M, int K>
Jet<M, K> operator+(Jet<M, K> a, const Jet<M, K>& b) {
  return a += b;
}
template <int M, int K>
Jet<M, K> operator-(Jet<M, K> a, const Jet<M, K>& b) {
  return a -= b;
}
template <int M, int K>
Jet<M, K> operator+(Jet<M, K> a, double b) {
  a.v += b;
  return a;
}
template <int M, int K>
Jet<M, K> operator+(double b, Jet<M, K> a) {
  a.v += b;
  return a;
}
template <int M, int K>
Jet<M, K> operator-(Jet<M, K> a, double b) {
  a.v -= b;
  return a;
}
template <int M, int K>
Jet<M, K> operator-(double b, Jet<M, K> a) {
  a *= -1.0;
  a.v += b;
  return a;
}
template <int M, int K>
Jet<M, K> operator*(Jet<M, K> a, double s) {
  return a *= s;
}
template <int M, int K>
Jet<M, K> operator*(double s, Jet<M, K> a) {
  return a *= s;
}
template <int M, int K>
Jet<M, K> operator*(const Jet<M, K>& a, const Jet<M, K>& b) {
  Jet<M, K> r;
  r.v = a.v * b.v;
  for (int i = 0; i < M; ++i) r.g[i] = a.g[i] * b.v + a.v * b.g[i];
  if constexpr (K == 2) {
    for (int i = 0; i < M; ++i)
      for (int j = 0; j < M; ++j)
        r.h[i * M + j] = a.h[i * M + j] * b.v + a.v * b.h[i * M + j] +
                         a.g[i] * b.g[j] + a.g[j] * b.g[i];
  }
  return r;
}

// f(a) given f, f', f'' at a.v.
template <int M, int K>
Jet<M, K> chain(const Jet<M, K>& a, double f0, double f1, double f2) {
  Jet<M, K> r;
  r.v = f0;
  for (int i = 0; i < M; ++i) r.g[i] = f1 * a.g[i];
  if constexpr (K == 2) {
    for (int i = 0; i < M; ++i)
      for (int j = 0; j < M; ++j)
        r.h[i * M + j] = f1 * a.h[i * M + j] + f2 * a.g[i] * a.g[j];
  }
  return r;
}

template <int M, int K>
Jet<M, K> inverse(const Jet<M, K>& a) {
  const double q = 1.0 / a.v;
  return chain(a, q, -q * q, 2.0 * q * q * q);
}
template <int M, int K>
Jet<M, K> operator/(const Jet<M, K>& a, const Jet<M, K>& b) {
  return a * inverse(b);
}
template <int M, int K>
Jet<M, K> operator/(Jet<M, K> a, double s) {
  return a *= 1.0 / s;
}
template <int M, int K>
Jet<M, K> operator/(double s, const Jet<M, K>& a) {
  return s * inverse(a);
}

template <int M, int K>
Jet<M, K> sin(const Jet<M, K>& a) {
  const double s = std::sin(a.v), c = std::cos(a.v);
  return chain(a, s, c, -s);
}
template <int M, int K>
Jet<M, K> cos(const Jet<M, K>& a) {
  const double s = std::sin(a.v), c = std::cos(a.v);
  return chain(a, c, -s, -c);
}
template <int M, int K>
Jet<M, K> exp(const Jet<M, K>& a) {
  const double e = std::exp(a.v);
  return chain(a, e, e, e);
}
template <int M, int K>
Jet<M, K> log(const Jet<M, K>& a) {
  return chain(a, std::log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v));
}
template <int M, int K>
Jet<M, K> sqrt(const Jet<M, K>& a) {
  const double s = std::sqrt(a.v);
  return chain(a, s, 0.5 / s, -0.25 / (s * a.v));
}
template <int M, int K>
Jet<M, K> pow(const Jet<M, K>& a, double p) {
  const double f0 = std::pow(a.v, p);
  return chain(a, f0, p * f0 / a.v, p * (p - 1.0) * f0 / (a.v * a.v));
}

inline double value_of(double x) { return x; }
template <int M, int K>
double value_of(const Jet<M, K>& j) {
  return j.v;
}

}  // namespace rieszlab

#endif
