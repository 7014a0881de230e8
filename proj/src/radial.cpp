#include "rieszlab/radial.hpp"

#include "rieszlab/quadrature.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace rieszlab::radial {

double sphere_volume(int k) {
  require(k >= 0, ErrorKind::precondition, "sphere_volume: k must be >= 0");
  if (k == 0) return 2.0;
  if (k == 1) return 2.0 * pi;
  // sigma_k = 2 pi^{(k+1)/2} / Gamma((k+1)/2)
  return 2.0 * std::pow(pi, 0.5 * (k + 1)) / std::tgamma(0.5 * (k + 1));
}

double ball_volume(int m) {
  require(m >= 1, ErrorKind::precondition, "ball_volume: m must be >= 1");
  return std::pow(pi, 0.5 * m) / std::tgamma(0.5 * m + 1.0);
}

EnergyParams::EnergyParams(double a, int dim) : alpha(a), m(dim) {
  require(std::isfinite(a), ErrorKind::precondition, "alpha must be finite");
  require(dim >= 1, ErrorKind::precondition, "m must be >= 1");
}

int EnergyParams::alpha_bar() const {
  // floor(-alpha) with pole values snapped so that 1e-13 noise cannot move it
  const double na = -alpha;
  const double r = std::round(na);
  const double f = std::abs(na - r) < 1e-12 ? r : std::floor(na);
  return std::max(static_cast<int>(f) - m, 0);
}

bool EnergyParams::pole() const {
  const double s = alpha + m;  // pole iff s in {0, -2, -4, ...}
  if (s > 1e-12) return false;
  const double k = std::round(-s / 2.0);
  return std::abs(s + 2.0 * k) < 1e-12;
}

int EnergyParams::log_index() const {
  if (!pole()) return -1;
  return static_cast<int>(std::round(-(alpha + m)));
}

SmoothFunction safe_ratio(const SmoothFunction& g) {
  require(g.derivatives.size() >= 2, ErrorKind::precondition,
          "safe_ratio: needs g(0) and g'(0)");
  require(std::abs(g.derivatives[0]) <= 1e-14 && std::abs(g.derivatives[1]) <= 1e-14,
          ErrorKind::precondition, "safe_ratio: requires g(0) = g'(0) = 0");
  SmoothFunction out;
  for (std::size_t j = 0; j + 1 < g.derivatives.size(); ++j)
    out.derivatives.push_back(g.derivatives[j + 1] / static_cast<double>(j + 1));
  const auto f = g.value;
  const auto d = out.derivatives;
  out.value = [f, d](double t) {
    if (std::abs(t) > 1e-6) return f(t) / t;
    double s = 0.0, fact = 1.0, tp = 1.0;
    for (std::size_t j = 0; j < d.size(); ++j) {
      if (j > 0) {
        fact *= static_cast<double>(j);
        tp *= t;
      }
      s += d[j] * tp / fact;
    }
    return s;
  };
  return out;
}

RadialPoint radial_inverse(const geometry::GraphPatch& patch, const Vec& v, double t,
                           geometry::PatchHint* hint) {
  require(t >= 0.0, ErrorKind::precondition, "radial_inverse: t must be >= 0");
  const int m = patch.dim();
  RadialPoint rp;
  if (t == 0.0) {
    if (!patch.height(Vec::Zero(m), rp.h, rp.dh, hint))
      fail(ErrorKind::numerical, "radial_inverse: patch height fails at the base point");
    return rp;
  }
  double xi = t;
  bool converged = false;
  for (int it = 1; it <= 50; ++it) {
    rp.iterations = it;
    if (!patch.height(xi * v, rp.h, rp.dh, hint))
      fail(ErrorKind::numerical, "radial_inverse: patch height fails at xi = " +
                                     std::to_string(xi) + " (outside the valid patch)");
    const double f = xi * xi + rp.h.squaredNorm() - t * t;
    const double df = 2.0 * (xi + rp.h.dot(rp.dh * v));
    if (!(df > 0.0))
      fail(ErrorKind::numerical,
           "radial_inverse: chord length not increasing along the ray (patch bound violated)");
    double step = f / df;
    double next = xi - step;
    if (next <= 0.0) next = 0.5 * xi;
    step = xi - next;
    xi = next;
    if (std::abs(step) <= 1e-13 * t) {
      converged = true;
      break;
    }
  }
  if (!converged)
    fail(ErrorKind::numerical, "radial_inverse: Newton iteration did not converge");
  if (!patch.height(xi * v, rp.h, rp.dh, hint))
    fail(ErrorKind::numerical, "radial_inverse: patch height fails at the solution");
  rp.xi = xi;
  rp.residual = std::abs(xi * xi + rp.h.squaredNorm() - t * t);
  rp.dxi_dt = t / (xi + rp.h.dot(rp.dh * v));
  return rp;
}

AngularRule angular_rule(int m, int nodes) {
  AngularRule r;
  if (m == 1) {
    r.directions = {Vec::Constant(1, 1.0), Vec::Constant(1, -1.0)};
    r.weights = {1.0, 1.0};
    return r;
  }
  require(m == 2, ErrorKind::unsupported,
          "radial profiles support m = 1 and m = 2 (angular rules for S^{m-1})");
  require(nodes >= 4, ErrorKind::precondition, "angular rule needs at least 4 nodes");
  const auto tr = quad::periodic_trapezoid(nodes, 0.0, 2.0 * pi);
  for (int i = 0; i < nodes; ++i) {
    Vec d(2);
    d << std::cos(tr.nodes[i]), std::sin(tr.nodes[i]);
    r.directions.push_back(d);
    r.weights.push_back(tr.weights[i]);
  }
  return r;
}

RadialDensity::RadialDensity(std::shared_ptr<const geometry::GraphPatch> patch,
                             int angular_nodes)
    : patch_(std::move(patch)), m_(patch_->dim()), rule_(angular_rule(m_, angular_nodes)),
      hints_(rule_.directions.size()) {}

double RadialDensity::operator()(double t) {
  if (t == 0.0) return m_ == 1 ? 2.0 : 2.0 * pi;
  ++evaluations_;
  CompensatedSum sum;
  for (std::size_t i = 0; i < rule_.directions.size(); ++i) {
    const Vec& v = rule_.directions[i];
    RadialPoint rp;
    try {
      rp = radial_inverse(*patch_, v, t, &hints_[i]);
    } catch (const Error&) {
      // The warm start may sit on a far part of the patch: restart from
      // the base point and walk out along the ray.
      hints_[i] = geometry::PatchHint{};
      for (int s = 1; s < 8; ++s) radial_inverse(*patch_, v, t * s / 8.0, &hints_[i]);
      rp = radial_inverse(*patch_, v, t, &hints_[i]);
    }
    const Mat g = Mat::Identity(m_, m_) + rp.dh.transpose() * rp.dh;
    const double jac = std::sqrt(g.determinant());
    double ratio = 1.0;
    for (int k = 1; k < m_; ++k) ratio *= rp.xi / t;
    sum.add(rule_.weights[i] * jac * ratio * rp.dxi_dt);
  }
  return sum.value();
}

double smooth_cutoff(double t, double eps) {
  const double a = 0.5 * eps;
  if (t <= a) return 1.0;
  if (t >= eps) return 0.0;
  // 1 - S(s) with the degree 13 smoothstep S, C^6 at both ends
  const double s = (t - a) / (eps - a), r = 1.0 - s;
  constexpr int n = 6;
  double sum = 0.0, binom = 1.0, rp = 1.0;
  for (int k = 0; k <= n; ++k) {
    sum += binom * rp;
    binom = binom * (n + k + 1) / (k + 1);
    rp *= r;
  }
  return 1.0 - std::pow(s, n + 1) * sum;
}

RadialProfile RadialProfile::from_function(int m, std::function<double(double)> density,
                                           std::vector<double> taylor, double radius,
                                           double series_range) {
  require(!taylor.empty(), ErrorKind::precondition, "profile needs Taylor coefficients");
  require(radius > 0, ErrorKind::precondition, "profile radius must be positive");
  RadialProfile p;
  p.m = m;
  p.sigma = taylor[0];
  p.radius = radius;
  p.taylor = std::move(taylor);
  p.density = std::move(density);
  p.series_range = series_range;
  return p;
}

RadialProfile RadialProfile::with_cutoff(double eps) const {
  require(eps > 0 && eps <= radius * (1 + 1e-12), ErrorKind::precondition,
          "cutoff radius must lie in (0, profile radius]");
  RadialProfile p = *this;
  const auto inner = density;
  p.density = [inner, eps](double t) {
    const double c = smooth_cutoff(t, eps);
    return c == 0.0 ? 0.0 : c * inner(t);
  };
  p.cutoff = true;
  p.cutoff_radius = eps;
  return p;
}

double RadialProfile::taylor_value(double t, int order) const {
  double s = 0.0, tp = 1.0;
  for (int j = 0; j <= order && j < static_cast<int>(taylor.size()); ++j) {
    s += taylor[j] * tp;
    tp *= t;
  }
  return s;
}

RadialProfile radial_profile(std::shared_ptr<const geometry::GraphPatch> patch, double radius,
                             const ProfileOptions& opt) {
  require(radius > 0, ErrorKind::precondition, "profile radius must be positive");
  require(opt.fit_samples > (opt.constrain_odd ? opt.fit_degree : 2 * opt.fit_degree),
          ErrorKind::precondition, "profile fit needs more samples than coefficients");
  const int m = patch->dim();
  auto dens = std::make_shared<RadialDensity>(patch, opt.angular_nodes);
  RadialProfile p;
  p.m = m;
  p.sigma = sphere_volume(m - 1);
  p.radius = radius;
  // Chebyshev points in s = t^2 on (0, T^2], T = radius / 2.
  const double T = 0.5 * radius;
  const int n = opt.fit_samples;
  for (int i = 1; i <= n; ++i) {
    const double s = 0.5 * (1.0 - std::cos((2.0 * i - 1.0) * pi / (2.0 * n)));
    // ordered from the origin outward
    p.t.push_back(T * std::sqrt(s));
  }
  std::sort(p.t.begin(), p.t.end());
  for (double t : p.t) p.phi.push_back((*dens)(t));
  const int cols = opt.constrain_odd ? opt.fit_degree : 2 * opt.fit_degree;
  Mat a(n, cols);
  Vec y(n);
  for (int i = 0; i < n; ++i) {
    const double x = p.t[i] / T;
    y[i] = p.phi[i] - p.sigma;
    for (int c = 0; c < cols; ++c) {
      const int power = opt.constrain_odd ? 2 * (c + 1) : c + 1;
      a(i, c) = std::pow(x, power);
    }
  }
  const Vec coef = a.colPivHouseholderQr().solve(y);
  const Vec res = a * coef - y;
  p.fit_residual = std::sqrt(res.squaredNorm() / n) / p.sigma;
  p.series_range = T;
  const int top = 2 * opt.fit_degree;
  p.taylor.assign(top + 1, 0.0);
  p.taylor[0] = p.sigma;
  for (int c = 0; c < cols; ++c) {
    const int power = opt.constrain_odd ? 2 * (c + 1) : c + 1;
    p.taylor[power] = coef[c] / std::pow(T, power);
  }
  if (!(p.fit_residual <= opt.fit_tolerance)) {
    std::ostringstream os;
    os << "radial profile fit residual " << p.fit_residual
       << " (relative rms) exceeds tolerance " << opt.fit_tolerance;
    fail(ErrorKind::numerical, os.str());
  }
  // tabulate the rest of (0, radius] as well; these rows are not fitted
  for (int i = 1; i <= 8; ++i) {
    const double t = T + (radius - T) * i / 8.0;
    p.t.push_back(t);
    p.phi.push_back((*dens)(t));
  }
  // Very short chords are below the resolution of the patch solve (heights
  // of order t^2 drown in rounding); the fitted series takes over there.
  const double t_series = 1e-3 * T;
  const std::vector<double> series = p.taylor;
  p.density = [dens, t_series, series](double t) {
    if (t >= t_series) return (*dens)(t);
    double s = 0.0, tp = 1.0;
    for (double c : series) {
      s += c * tp;
      tp *= t;
    }
    return s;
  };
  return p;
}

FinitePartResult finite_part(const EnergyParams& params, const RadialProfile& profile,
                             double eps, const FinitePartOptions& opt) {
  require(eps > 0 && eps <= profile.radius * (1 + 1e-12), ErrorKind::precondition,
          "finite_part: eps must lie in (0, profile radius]");
  require(params.m == profile.m, ErrorKind::precondition,
          "finite_part: profile dimension does not match the parameters");
  const int abar = params.alpha_bar();
  require(static_cast<int>(profile.taylor.size()) > abar, ErrorKind::precondition,
          "finite_part: profile lacks Taylor coefficients up to order alpha_bar");
  const double alpha = params.pole() ? -static_cast<double>(params.m + params.log_index())
                                     : params.alpha;
  const int m = params.m;
  FinitePartResult out;
  CompensatedSum total;
  for (int j = 0; j <= abar; ++j) {
    const double c = profile.taylor[j];
    const double p = alpha + m + j;
    if (std::abs(p) < 1e-12 && !params.pole()) {
      // integer alpha off the pole set meets p = 0 only at odd j, where the
      // coefficient vanishes
      continue;
    }
    if (std::abs(p) < 1e-12) {
      // the log convention at poles
      total.add(c * std::log(eps));
      out.log_coefficient += c;
      out.subtracted.emplace_back(0.0, c);
    } else {
      total.add(c * std::pow(eps, p) / p);
      out.subtracted.emplace_back(p, c / p);
    }
  }

  // Remainder: series on [0, tm], adaptive quadrature on [tm, eps]. Over
  // the fitted range the series is the profile's own representation of the
  // density, so tm extends to the end of that range (and of the flat part
  // of a cutoff).
  double tm = opt.tail_fraction * eps;
  double reach = profile.series_range;
  if (profile.cutoff) reach = std::min(reach, 0.5 * profile.cutoff_radius);
  if (reach > 0) tm = std::max(tm, std::min(reach, eps));
  double tail = 0.0, tail_err = 0.0;
  for (int j = abar + 1; j < static_cast<int>(profile.taylor.size()); ++j) {
    const double p = alpha + m + j;
    const double term = profile.taylor[j] * std::pow(tm, p) / p;
    tail += term;
    if (j + 2 >= static_cast<int>(profile.taylor.size())) tail_err += std::abs(term);
  }
  {
    const double p = alpha + m + abar + 1;
    tail_err += profile.fit_residual * std::abs(profile.sigma) * std::pow(tm, p) / p;
  }
  const double p0 = alpha + m;
  auto integrand = [&](double t) {
    return std::pow(t, p0 - 1.0) * (profile.density(t) - profile.taylor_value(t, abar));
  };
  std::vector<double> bp;
  for (double t = tm; t < 0.5 * eps * (1 + 1e-12); t *= 2.0) bp.push_back(t);
  if (tm < eps * (1 - 1e-12)) {
    if (bp.empty()) bp.push_back(tm);
    if (bp.back() < 0.75 * eps) bp.push_back(0.75 * eps);
    bp.push_back(eps);
  }
  double quad_value = 0.0, quad_error = 0.0;
  int evaluations = 0;
  if (bp.size() >= 2) {
    quad::AdaptiveOptions qo;
    qo.rel_tol = opt.rel_tol;
    qo.abs_tol = opt.abs_tol * std::abs(profile.sigma) * std::pow(eps, p0);
    const auto est = quad::integrate_piecewise(integrand, bp, qo);
    if (!est.converged || !std::isfinite(est.value))
      fail(ErrorKind::numerical, "finite_part: remainder quadrature did not converge");
    quad_value = est.value;
    quad_error = est.error;
    evaluations = est.evaluations;
  }
  total.add(tail);
  total.add(quad_value);
  out.value = total.value();
  out.error = quad_error + tail_err;
  out.evaluations = evaluations;
  return out;
}

double plain_integral(const EnergyParams& params, const RadialProfile& profile, double a,
                      double b, double* error) {
  require(0 <= a && a < b, ErrorKind::precondition, "plain_integral: need 0 <= a < b");
  const double p0 = params.alpha + params.m;
  require(a > 0 || p0 > 0, ErrorKind::precondition,
          "plain_integral: divergent at 0 for alpha <= -m");
  auto f = [&](double t) { return std::pow(t, p0 - 1.0) * profile.density(t); };
  std::vector<double> bp;
  if (a == 0)
    bp = quad::graded_breakpoints(0.0, b, 0.25, b * 1e-10);
  else
    bp = {a, 0.5 * (a + b), b};
  quad::AdaptiveOptions qo;
  qo.rel_tol = 1e-12;
  qo.abs_tol = 1e-15;
  const auto est = quad::integrate_piecewise(f, bp, qo);
  if (error) *error = est.error;
  return est.value;
}

std::string profile_csv(const RadialProfile& p) {
  std::ostringstream os;
  os << std::setprecision(17) << "t,phi\n";
  for (std::size_t i = 0; i < p.t.size(); ++i) os << p.t[i] << ',' << p.phi[i] << '\n';
  return os.str();
}

std::string profile_header_json(const RadialProfile& p) {
  nlohmann::json j;
  j["m"] = p.m;
  j["sigma"] = p.sigma;
  j["radius"] = p.radius;
  j["taylor"] = p.taylor;
  j["fit_residual"] = p.fit_residual;
  j["samples"] = p.t.size();
  return j.dump(2);
}

void write_profile(const RadialProfile& p, const std::string& csv_path,
                   const std::string& json_path) {
  std::ofstream c(csv_path), j(json_path);
  require(bool(c) && bool(j), ErrorKind::io, "cannot write profile files");
  c << profile_csv(p);
  j << profile_header_json(p) << '\n';
}

}  // namespace rieszlab::radial
