#include "rieszlab/quadrature.hpp"

#include "rieszlab/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace rieszlab::quad {

Rule gauss_legendre(int n, double a, double b) {
  require(n >= 1, ErrorKind::precondition, "gauss_legendre: n must be >= 1");
  Rule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged node
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[i] = mid - half * x;
    r.nodes[n - 1 - i] = mid + half * x;
    r.weights[i] = r.weights[n - 1 - i] = half * w;
  }
  return r;
}

Rule periodic_trapezoid(int n, double a, double period) {
  require(n >= 1, ErrorKind::precondition, "periodic_trapezoid: n must be >= 1");
  Rule r;
  r.nodes.resize(n);
  r.weights.assign(n, period / n);
  for (int i = 0; i < n; ++i) r.nodes[i] = a + period * i / n;
  return r;
}

namespace {

// QUADPACK qk15 abscissae and weights.
constexpr double xgk[8] = {0.991455371120812639206854697526329,
                           0.949107912342758524526189684047851,
                           0.864864423359769072789712788640926,
                           0.741531185599394439863864773280788,
                           0.586087235467691130294144845693013,
                           0.405845151377397166906606412076961,
                           0.207784955007898467600689403773245,
                           0.000000000000000000000000000000000};
constexpr double wgk[8] = {0.022935322010529224963732008058970,
                           0.063092092629978553290700663189204,
                           0.104790010322250183839876322541518,
                           0.140653259715525918745189590510238,
                           0.169004726639267902826583426598550,
                           0.190350578064785409913256402421014,
                           0.204432940075298892414161999234649,
                           0.209482141084727828012999174891714};
constexpr double wg[4] = {0.129484966168869693270611432679082,
                          0.279705391489276667901467771423780,
                          0.381830050505118944950369775488975,
                          0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
  int depth;
  bool operator<(const Panel& o) const { return error < o.error; }
};

Panel gk15(const std::function<double(double)>& f, double a, double b,
           int depth, int& evals) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const double fc = f(c);
  double resk = fc * wgk[7];
  double resg = fc * wg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * xgk[j];
    const double f1 = f(c - dx), f2 = f(c + dx);
    resk += wgk[j] * (f1 + f2);
    if (j % 2 == 1) resg += wg[j / 2] * (f1 + f2);
  }
  evals += 15;
  Panel p{a, b, resk * h, std::abs((resk - resg) * h), depth};
  if (!std::isfinite(p.value)) p.error = std::numeric_limits<double>::infinity();
  return p;
}

}  // namespace

Estimate integrate(const std::function<double(double)>& f, double a, double b,
                   const AdaptiveOptions& opt) {
  return integrate_piecewise(f, {a, b}, opt);
}

Estimate integrate_piecewise(const std::function<double(double)>& f,
                             std::vector<double> bp,
                             const AdaptiveOptions& opt) {
  std::sort(bp.begin(), bp.end());
  bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
  Estimate est;
  if (bp.size() < 2) return est;
  std::priority_queue<Panel> heap;
  // Panels are re-summed left to right at the end so the result does not
  // depend on heap tie-breaking.
  std::vector<Panel> done;
  double total = 0.0, err = 0.0;
  for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
    Panel p = gk15(f, bp[i], bp[i + 1], 0, est.evaluations);
    total += p.value;
    err += p.error;
    heap.push(p);
  }
  while (!heap.empty()) {
    const double tol = std::max(opt.abs_tol, opt.rel_tol * std::abs(total));
    if (err <= tol || est.evaluations >= opt.max_evaluations) break;
    Panel p = heap.top();
    heap.pop();
    if (p.depth >= opt.max_depth || !std::isfinite(p.error)) {
      done.push_back(p);
      if (!std::isfinite(p.error)) break;
      // cannot refine further; keep its error in the budget
      continue;
    }
    const double c = 0.5 * (p.a + p.b);
    Panel l = gk15(f, p.a, c, p.depth + 1, est.evaluations);
    Panel r = gk15(f, c, p.b, p.depth + 1, est.evaluations);
    total += l.value + r.value - p.value;
    err += l.error + r.error - p.error;
    heap.push(l);
    heap.push(r);
  }
  while (!heap.empty()) {
    done.push_back(heap.top());
    heap.pop();
  }
  std::sort(done.begin(), done.end(),
            [](const Panel& x, const Panel& y) { return x.a < y.a; });
  CompensatedSum sv, se;
  for (const auto& p : done) {
    sv.add(p.value);
    se.add(p.error);
  }
  est.value = sv.value();
  est.error = se.value();
  const double tol = std::max(opt.abs_tol, opt.rel_tol * std::abs(est.value));
  est.converged = std::isfinite(est.value) && est.error <= 10.0 * tol;
  return est;
}

std::vector<double> graded_breakpoints(double a, double b, double ratio,
                                       double min_width) {
  std::vector<double> bp{b};
  double w = b - a;
  while (w * ratio > min_width) {
    w *= ratio;
    bp.push_back(a + w);
  }
  bp.push_back(a);
  std::reverse(bp.begin(), bp.end());
  return bp;
}

}  // namespace rieszlab::quad
