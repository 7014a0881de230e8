#include "rieszlab/models.hpp"

#include "rieszlab/core.hpp"
#include "rieszlab/fit.hpp"
#include "rieszlab/quadrature.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace rieszlab::models {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();
constexpr double kLogExponent = 0.05;

quad::AdaptiveOptions tight(double rel = 1e-12) {
  quad::AdaptiveOptions o;
  o.rel_tol = rel;
  o.abs_tol = 0.0;
  o.max_depth = 50;
  o.max_evaluations = 2000000;
  return o;
}

// Panels doubling in width away from `a`, the first of width h.
std::vector<double> graded(double a, double b, double h) {
  std::vector<double> v{a};
  if (!(h > 0) || h >= b - a) {
    v.push_back(b);
    return v;
  }
  for (double w = h; a + w < b; w *= 2.0) v.push_back(a + w);
  v.push_back(b);
  return v;
}

// Panels doubling in width away from the interior point p on both sides.
std::vector<double> graded_around(double a, double b, double p, double h) {
  if (p <= a) return graded(a, b, h);
  if (p >= b) {
    auto v = graded(-b, -a, h);
    for (auto& x : v) x = -x;
    std::reverse(v.begin(), v.end());
    return v;
  }
  auto left = graded(-p, -a, h);
  std::vector<double> v;
  for (auto it = left.rbegin(); it != left.rend(); ++it) v.push_back(-*it);
  const auto right = graded(p, b, h);
  v.insert(v.end(), right.begin() + 1, right.end());
  return v;
}

double integrate(const std::function<double(double)>& f, const std::vector<double>& bp,
                 double rel = 1e-12) {
  return quad::integrate_piecewise(f, bp, tight(rel)).value;
}

double sphere_area(int k) {  // |S^k|
  return 2.0 * std::pow(pi, 0.5 * (k + 1)) / std::tgamma(0.5 * (k + 1));
}

void check_cutoffs(const std::vector<double>& c) {
  require(c.size() >= 3, ErrorKind::precondition, "cutoff scan needs at least 3 cutoffs");
  for (std::size_t i = 0; i < c.size(); ++i) {
    require(c[i] > 0, ErrorKind::precondition, "cutoffs must be positive");
    if (i) require(c[i] < c[i - 1], ErrorKind::precondition, "cutoffs must decrease");
  }
}

}  // namespace

std::string to_string(Law law) {
  switch (law) {
    case Law::finite_limit:
      return "finite";
    case Law::logarithmic:
      return "logarithmic";
    case Law::power:
      return "power";
  }
  return "";
}

std::string to_string(ContactKind kind) {
  return kind == ContactKind::transversal ? "transversal" : "tangential";
}

std::vector<double> geometric_cutoffs(double first, double last, int count) {
  require(count >= 2 && first > last && last > 0, ErrorKind::precondition,
          "geometric_cutoffs: need first > last > 0 and count >= 2");
  std::vector<double> c(count);
  for (int i = 0; i < count; ++i)
    c[i] = first * std::pow(last / first, static_cast<double>(i) / (count - 1));
  c.back() = last;
  return c;
}

FitReport classify_cutoff_law(const std::vector<double>& cutoffs, const std::vector<double>& values) {
  check_cutoffs(cutoffs);
  require(values.size() == cutoffs.size(), ErrorKind::precondition,
          "classify_cutoff_law: one value per cutoff");
  const std::size_t n = values.size();
  FitReport r;
  r.cutoffs = cutoffs;
  r.values = values;
  std::vector<double> loginv(n);
  for (std::size_t i = 0; i < n; ++i) loginv[i] = std::log(1.0 / cutoffs[i]);
  for (std::size_t i = 0; i + 1 < n; ++i)
    r.segment_slopes.push_back((values[i + 1] - values[i]) / (loginv[i + 1] - loginv[i]));

  double mean = 0.0;
  for (double v : values) mean += v / n;
  double total = 0.0;
  for (double v : values) total += (v - mean) * (v - mean);
  double vmax = 0.0;
  for (double v : values) vmax = std::max(vmax, std::abs(v));
  // residuals below the quadrature accuracy of the values carry no information
  const double floor = n * std::pow(1e-9 * vmax, 2) + 1e-300;
  if (total <= floor) {  // constant values
    r.law = Law::finite_limit;
    r.limit = mean;
    r.exponent = std::numeric_limits<double>::infinity();
    r.r2_log = r.r2_power = 1.0;
    return r;
  }

  const auto lin = fit::least_squares(loginv, values);
  r.log_slope = lin.slope;
  r.r2_log = lin.r2;

  // exponent from the increments: V_{k+1} - V_k ~ B c_k^p (c_{k+1}/c_k)^p - 1
  std::vector<double> lc, ld;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double d = std::abs(values[i + 1] - values[i]);
    if (d > 0) {
      lc.push_back(0.5 * (std::log(cutoffs[i]) + std::log(cutoffs[i + 1])));
      ld.push_back(std::log(d));
    }
  }
  double p = 0.0;
  if (lc.size() >= 2) p = fit::least_squares(lc, ld).slope;
  r.exponent = p;

  Mat a(n, 2);
  Vec b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a(i, 0) = 1.0;
    a(i, 1) = std::pow(cutoffs[i], p);
    b[i] = values[i];
  }
  const Vec coef = a.colPivHouseholderQr().solve(b);
  const double rss_pow = (a * coef - b).squaredNorm();
  r.limit = coef[0];
  r.r2_power = 1.0 - rss_pow / total;
  r.residual_ratio = (lin.rss + floor) / (rss_pow + floor);
  // below |p| = 0.05, c^p and 1 + p log c agree to O(p^2 log^2 c) on any
  // scanned range, so the power law is not told apart from the log law
  if (r.residual_ratio >= 4.0 && std::abs(p) >= kLogExponent)
    r.law = p > 0 ? Law::finite_limit : Law::power;
  else
    r.law = Law::logarithmic;
  if (r.law == Law::logarithmic) {
    r.limit = nan;
    r.exponent = 0.0;
  }
  return r;
}

// ---- model integrals ----

double orthogonal_closed_form(double alpha, double rho) {
  require(alpha > -4.0, ErrorKind::precondition, "orthogonal closed form needs alpha > -4");
  const double u = alpha + 2.0;
  // (sqrt(2)^u - 1)/u -> log(sqrt 2) at u = 0
  const double ratio = std::abs(u) < 1e-8 ? 0.5 * std::log(2.0) * (1.0 + 0.25 * u * std::log(2.0))
                                          : (std::pow(std::sqrt(2.0), u) - 1.0) / u;
  return 8.0 * pi * pi * std::pow(rho, alpha + 4.0) * ratio / (alpha + 4.0);
}

double orthogonal_model_value(double alpha, double rho, double cutoff) {
  require(rho > 0 && cutoff >= 0 && cutoff < rho, ErrorKind::precondition,
          "orthogonal model: need 0 <= cutoff < rho");
  require(cutoff > 0 || alpha > -4.0, ErrorKind::precondition,
          "orthogonal model diverges for alpha <= -4 without a cutoff");
  auto inner = [&](double t) {
    const double s0 = t < cutoff ? std::sqrt(cutoff * cutoff - t * t) : 0.0;
    const double h = std::max(t, 1e-300) / 4.0;
    auto f = [&](double s) { return std::pow(t * t + s * s, 0.5 * alpha) * s; };
    return t * integrate(f, graded(s0, rho, h));
  };
  std::vector<double> bp;
  if (cutoff > 0) {
    bp.push_back(0.0);
    for (int k = 1; k <= 30; ++k) bp.push_back(cutoff * (1.0 - std::pow(0.5, k)));
    const auto up = graded(cutoff, rho, cutoff / 8.0);
    bp.insert(bp.end(), up.begin(), up.end());
  } else {
    bp = graded(0.0, rho, 1e-14 * rho);
  }
  return 4.0 * pi * pi * integrate(inner, bp, 1e-11);
}

FitReport orthogonal_model_scan(double alpha, double rho, const std::vector<double>& cutoffs) {
  check_cutoffs(cutoffs);
  std::vector<double> v(cutoffs.size());
  parallel_for(cutoffs.size(), [&](std::size_t i) { v[i] = orthogonal_model_value(alpha, rho, cutoffs[i]); });
  return classify_cutoff_law(cutoffs, v);
}

ModelIntegral orthogonal_model_integral(double alpha, double rho, const std::vector<double>& cutoffs) {
  require(rho > 0, ErrorKind::precondition, "orthogonal model: rho must be positive");
  ModelIntegral r;
  if (alpha <= -4.0) {
    r.divergent = true;
    r.value = nan;
    r.closed_form = nan;
    r.cutoff_study = orthogonal_model_scan(
        alpha, rho, cutoffs.empty() ? geometric_cutoffs(1e-2 * rho, 1e-4 * rho, 5) : cutoffs);
    return r;
  }
  r.value = orthogonal_model_value(alpha, rho);
  r.closed_form = orthogonal_closed_form(alpha, rho);
  return r;
}

double tangent_model_value(double alpha, double R, double rho_min) {
  require(R > 0 && R <= 1.0, ErrorKind::precondition, "tangent model: need 0 < R <= 1");
  require(rho_min > 0 && rho_min < R, ErrorKind::precondition, "tangent model: need 0 < rho_min < R");
  auto outer = [&](double rho) {
    const double a = std::pow(0.5 * rho, 4);
    auto f = [&](double r) { return std::pow(a + r * r, 0.5 * alpha) * r; };
    return rho * integrate(f, graded(0.0, R, rho * rho / 64.0));
  };
  return integrate(outer, graded(rho_min, R, rho_min / 4.0), 1e-11);
}

FitReport tangent_model_scan(double alpha, double R, const std::vector<double>& rho_min) {
  check_cutoffs(rho_min);
  std::vector<double> v(rho_min.size());
  parallel_for(rho_min.size(), [&](std::size_t i) { v[i] = tangent_model_value(alpha, R, rho_min[i]); });
  return classify_cutoff_law(rho_min, v);
}

double cone_model_value(double alpha, double cutoff) {
  require(cutoff >= 0 && cutoff < 1.0, ErrorKind::precondition, "cone model: need 0 <= cutoff < 1");
  require(cutoff > 0 || alpha > -4.0, ErrorKind::precondition,
          "cone model diverges for alpha <= -4 without a cutoff");
  auto outer = [&](double r) {
    auto f = [&](double rho) { return std::pow(r + rho, alpha) * rho; };
    return r * integrate(f, graded(cutoff, 1.0, (r + cutoff) / 8.0));
  };
  const auto bp = cutoff > 0 ? graded(cutoff, 1.0, cutoff / 8.0) : graded(0.0, 1.0, 1e-14);
  return integrate(outer, bp, 1e-11);
}

FitReport cone_model_scan(double alpha, const std::vector<double>& cutoffs) {
  check_cutoffs(cutoffs);
  std::vector<double> v(cutoffs.size());
  parallel_for(cutoffs.size(), [&](std::size_t i) { v[i] = cone_model_value(alpha, cutoffs[i]); });
  return classify_cutoff_law(cutoffs, v);
}

// ---- two-body sweep ----

double annulus_constant(int m) {
  require(m >= 1, ErrorKind::precondition, "annulus_constant: m must be positive");
  const double ball = std::pow(pi, 0.5 * m) / std::tgamma(0.5 * m + 1.0);
  return 0.9 * (1.0 - std::pow(0.5, m)) * ball;
}

double lambda_bound(int m, double alpha, double delta, double rho) {
  require(delta > 0 && rho > 0, ErrorKind::precondition, "lambda_bound: need delta, rho > 0");
  const double c1 = annulus_constant(m);
  return std::pow(2.0, alpha) * c1 * c1 * std::pow(rho, 2 * m + alpha) * std::pow(1.0 + delta / rho, alpha);
}

double lambda_bound_sum(int m, double alpha, double delta, double eps3) {
  CompensatedSum s;
  for (int j = 0; j < 2000; ++j) {
    const double t = lambda_bound(m, alpha, delta, eps3 * std::pow(0.5, j));
    s.add(t);
    if (t < 1e-17 * s.value()) break;
  }
  return s.value();
}

double cross_energy(int m, double alpha, double radius, double delta, ContactKind kind) {
  require(m >= 1, ErrorKind::precondition, "cross_energy: m must be positive");
  require(radius > 0, ErrorKind::precondition, "cross_energy: radius must be positive");
  require(delta > 0, ErrorKind::precondition, "cross_energy: the gap delta must be positive");
  const double r = radius;
  const double h = std::sqrt(delta / r) / 8.0;
  // θ_i is the polar angle on sphere i from its point closest to the other
  auto gap = [&](double t1, double t2) { return delta + r * (2.0 - std::cos(t1) - std::cos(t2)); };
  if (kind == ContactKind::transversal) {
    const double s = sphere_area(m - 1);
    auto outer = [&](double t1) {
      const double s1 = std::sin(t1);
      auto f = [&](double t2) {
        const double s2 = std::sin(t2), z = gap(t1, t2);
        return std::pow(z * z + r * r * (s1 * s1 + s2 * s2), 0.5 * alpha) * std::pow(s2, m - 1);
      };
      return std::pow(s1, m - 1) * integrate(f, graded(0.0, pi, h), 1e-11);
    };
    return s * s * std::pow(r, 2 * m) * integrate(outer, graded(0.0, pi, h), 1e-10);
  }
  // coaxial: the integrand depends on the angle φ between the two axial
  // directions as well
  auto fiber = [&](double t1, double t2) {
    const double s1 = std::sin(t1), s2 = std::sin(t2), z = gap(t1, t2);
    auto f = [&](double c) {
      return std::pow(std::max(z * z + r * r * (s1 * s1 + s2 * s2 - 2.0 * s1 * s2 * c), 0.0), 0.5 * alpha);
    };
    if (m == 1) return f(1.0) + f(-1.0);
    const double d0 = std::sqrt(z * z + r * r * (s1 - s2) * (s1 - s2));
    const double phi0 = s1 * s2 > 0 ? d0 / (r * std::sqrt(s1 * s2)) : pi;
    auto g = [&](double phi) { return f(std::cos(phi)) * std::pow(std::sin(phi), m - 2); };
    return sphere_area(m - 2) * integrate(g, graded(0.0, pi, phi0 / 8.0), 1e-10);
  };
  auto outer = [&](double t1) {
    const double width = gap(t1, t1) / (4.0 * r);
    auto f = [&](double t2) { return fiber(t1, t2) * std::pow(std::sin(t2), m - 1); };
    auto bp = graded_around(0.0, pi, t1, std::min(width, h));
    return std::pow(std::sin(t1), m - 1) * integrate(f, bp, 1e-9);
  };
  return sphere_area(m - 1) * std::pow(r, 2 * m) * integrate(outer, graded(0.0, pi, h), 1e-8);
}

std::vector<double> default_deltas() { return {0.1, 0.05, 0.025, 0.0125}; }

SweepReport two_body_sweep(int m, double alpha, double radius, const std::vector<double>& deltas,
                           ContactKind kind) {
  check_cutoffs(deltas);
  SweepReport rep;
  rep.m = m;
  rep.alpha = alpha;
  rep.radius = radius;
  rep.kind = kind;
  rep.predicted_exponent = 2 * m + alpha;
  rep.predicted = alpha < -2.0 * m ? Law::power
                  : alpha == -2.0 * m ? Law::logarithmic
                                      : Law::finite_limit;
  rep.rows.resize(deltas.size());
  // annuli of radius rho <= 2r have volume at least c_1 rho^m on a round
  // sphere; the scales start at min(1, r)
  const double eps3 = std::min(1.0, radius);
  parallel_for(deltas.size(), [&](std::size_t i) {
    rep.rows[i].delta = deltas[i];
    rep.rows[i].energy = cross_energy(m, alpha, radius, deltas[i], kind);
    rep.rows[i].lambda_sum = lambda_bound_sum(m, alpha, deltas[i], eps3);
  });
  std::vector<double> e;
  for (const auto& row : rep.rows) {
    e.push_back(row.energy);
    rep.bound_holds = rep.bound_holds && row.energy >= row.lambda_sum;
  }
  rep.fit = classify_cutoff_law(deltas, e);
  rep.log_r2 = rep.fit.r2_log;
  rep.power_exponent = rep.fit.exponent;
  return rep;
}

// ---- output ----

namespace {

nlohmann::json fit_json(const FitReport& r) {
  nlohmann::json j;
  j["law"] = to_string(r.law);
  j["exponent"] = r.exponent;
  j["log_slope"] = r.log_slope;
  j["r2"] = r.law == Law::logarithmic ? r.r2_log : r.r2_power;
  j["r2_log"] = r.r2_log;
  j["r2_power"] = r.r2_power;
  j["residual_ratio"] = r.residual_ratio;
  j["divergent"] = r.divergent();
  if (std::isfinite(r.limit))
    j["limit"] = r.limit;
  else
    j["limit"] = nullptr;
  j["cutoffs"] = r.cutoffs;
  j["values"] = r.values;
  j["segment_slopes"] = r.segment_slopes;
  return j;
}

}  // namespace

std::string to_json(const FitReport& r) { return fit_json(r).dump(2); }

std::string to_json(const ModelIntegral& r) {
  nlohmann::json j;
  j["divergent"] = r.divergent;
  j["value"] = r.divergent ? nlohmann::json(nullptr) : nlohmann::json(r.value);
  j["closed_form"] = r.divergent ? nlohmann::json(nullptr) : nlohmann::json(r.closed_form);
  j["cutoff_study"] = r.cutoff_study ? fit_json(*r.cutoff_study) : nlohmann::json(nullptr);
  return j.dump(2);
}

std::string to_json(const SweepReport& r) {
  nlohmann::json j;
  j["m"] = r.m;
  j["alpha"] = r.alpha;
  j["radius"] = r.radius;
  j["contact"] = to_string(r.kind);
  j["predicted_law"] = to_string(r.predicted);
  j["predicted_exponent"] = r.predicted_exponent;
  j["law"] = to_string(r.fit.law);
  j["exponent"] = r.power_exponent;
  j["r2"] = r.log_r2;
  j["bound_holds"] = r.bound_holds;
  j["fit"] = fit_json(r.fit);
  j["rows"] = nlohmann::json::array();
  for (const auto& row : r.rows)
    j["rows"].push_back({{"delta", row.delta}, {"energy", row.energy}, {"lambda_bound_sum", row.lambda_sum}});
  return j.dump(2);
}

std::string to_csv(const SweepReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "alpha,delta,energy,lambda_bound_sum\n";
  for (const auto& row : r.rows)
    out << r.alpha << ',' << row.delta << ',' << row.energy << ',' << row.lambda_sum << '\n';
  return out.str();
}

}  // namespace rieszlab::models
