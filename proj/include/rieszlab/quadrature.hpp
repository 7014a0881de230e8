#ifndef RIESZLAB_QUADRATURE_HPP
#define RIESZLAB_QUADRATURE_HPP

#include <functional>
#include <vector>

namespace rieszlab::quad {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [a, b].
Rule gauss_legendre(int n, double a = -1.0, double b = 1.0);

/// n-point periodic trapezoid rule on [a, a + period).
Rule periodic_trapezoid(int n, double a, double period);

struct Estimate {
  double value = 0.0;
  double error = 0.0;
  int evaluations = 0;
  bool converged = true;
};

struct AdaptiveOptions {
  double abs_tol = 1e-13;
  double rel_tol = 1e-11;
  int max_depth = 40;
  int max_evaluations = 200000;
};

/// Adaptive Gauss-Kronrod (7/15) bisection on [a, b].
Estimate integrate(const std::function<double(double)>& f, double a, double b,
                   const AdaptiveOptions& opt = {});

/// Integrates over [a, b] split at the given interior breakpoints.
Estimate integrate_piecewise(const std::function<double(double)>& f,
                             std::vector<double> breakpoints,
                             const AdaptiveOptions& opt = {});

/// Breakpoints a, a + (b-a) q^k ... geometrically graded toward `a`, with the
/// smallest panel of width at least `min_width`.
std::vector<double> graded_breakpoints(double a, double b, double ratio,
                                       double min_width);

}  // namespace rieszlab::quad

#endif
