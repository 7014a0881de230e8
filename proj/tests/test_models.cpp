#include "doctest.h"

#include "rieszlab/core.hpp"
#include "rieszlab/models.hpp"
#include "rieszlab/quadrature.hpp"

#include <json.hpp>

#include <cmath>
#include <sstream>

using namespace rieszlab;
using namespace rieszlab::models;

namespace {

// Tangent model with the inner r-integral in closed form.
double tangent_by_antiderivative(double alpha, double R, double rho_min) {
  auto f = [&](double rho) {
    const double a = std::pow(rho / 2.0, 4);
    const double e = alpha / 2.0 + 1.0;
    return rho * (std::pow(a + R * R, e) - std::pow(a, e)) / (alpha + 2.0);
  };
  quad::AdaptiveOptions o;
  o.rel_tol = 1e-12;
  return quad::integrate_piecewise(f, quad::graded_breakpoints(rho_min, R, 0.5, rho_min / 4.0), o).value;
}

// Two unit m-spheres (m = 1, 2) in complementary subspaces at gap delta, by
// a plain product rule on their standard parametrizations.
double transversal_brute_force(int m, double alpha, double delta, int n) {
  const auto g = quad::gauss_legendre(n, 0.0, pi);
  const auto t = quad::periodic_trapezoid(2 * n, 0.0, 2.0 * pi);
  const double c = 1.0 + delta / 2.0;
  CompensatedSum sum;
  if (m == 1) {
    // circles in the (e0, e1) and (e0, e2) planes of R^3
    for (std::size_t i = 0; i < t.nodes.size(); ++i)
      for (std::size_t j = 0; j < t.nodes.size(); ++j) {
        const double x0 = -c + std::cos(t.nodes[i]), x1 = std::sin(t.nodes[i]);
        const double y0 = c - std::cos(t.nodes[j]), y2 = std::sin(t.nodes[j]);
        const double d2 = (x0 - y0) * (x0 - y0) + x1 * x1 + y2 * y2;
        sum.add(t.weights[i] * t.weights[j] * std::pow(d2, alpha / 2.0));
      }
    return sum.value();
  }
  // spheres in the (e0, e1, e2) and (e0, e3, e4) subspaces of R^5
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
      const double th1 = g.nodes[i], th2 = g.nodes[k];
      for (std::size_t a = 0; a < t.nodes.size(); ++a)
        for (std::size_t b = 0; b < t.nodes.size(); ++b) {
          const double x[5] = {-c + std::cos(th1), std::sin(th1) * std::cos(t.nodes[a]),
                               std::sin(th1) * std::sin(t.nodes[a]), 0.0, 0.0};
          const double y[5] = {c - std::cos(th2), 0.0, 0.0, std::sin(th2) * std::cos(t.nodes[b]),
                               std::sin(th2) * std::sin(t.nodes[b])};
          double d2 = 0.0;
          for (int q = 0; q < 5; ++q) d2 += (x[q] - y[q]) * (x[q] - y[q]);
          sum.add(g.weights[i] * g.weights[k] * t.weights[a] * t.weights[b] * std::sin(th1) *
                  std::sin(th2) * std::pow(d2, alpha / 2.0));
        }
    }
  return sum.value();
}

// Coaxial unit 2-spheres at gap delta: every point of one sphere sees the
// other in shells, which integrates in closed form.
double coaxial_closed_form(double alpha, double delta) {
  const double L = 2.0 + delta;
  return 4.0 * pi * pi / (L * (alpha + 2.0) * (alpha + 3.0)) *
         (std::pow(L + 2.0, alpha + 3.0) - 2.0 * std::pow(L, alpha + 3.0) + std::pow(delta, alpha + 3.0));
}

}  // namespace

TEST_CASE("classifier recognizes synthetic laws") {
  const auto c = geometric_cutoffs(1e-2, 1e-4, 5);
  std::vector<double> pw, lg, fin;
  for (double x : c) {
    pw.push_back(3.0 + 2.0 * std::pow(x, -1.5));
    lg.push_back(1.0 + 0.5 * std::log(1.0 / x));
    fin.push_back(2.0 - std::pow(x, 0.7));
  }
  const auto a = classify_cutoff_law(c, pw);
  CHECK(a.law == Law::power);
  CHECK(a.exponent == doctest::Approx(-1.5).epsilon(1e-8));
  const auto b = classify_cutoff_law(c, lg);
  CHECK(b.law == Law::logarithmic);
  CHECK(b.log_slope == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(b.r2_log == doctest::Approx(1.0).epsilon(1e-12));
  const auto f = classify_cutoff_law(c, fin);
  CHECK(f.law == Law::finite_limit);
  CHECK(f.exponent == doctest::Approx(0.7).epsilon(1e-8));
  CHECK(f.limit == doctest::Approx(2.0).epsilon(1e-10));
  CHECK_FALSE(f.divergent());

  CHECK_THROWS_AS(classify_cutoff_law({1e-2, 1e-3}, {1.0, 2.0}), Error);
  CHECK_THROWS_AS(classify_cutoff_law({1e-3, 1e-2, 1e-1}, {1.0, 2.0, 3.0}), Error);
}

TEST_CASE("orthogonal model reproduces the closed form") {
  CHECK(orthogonal_closed_form(-3.0, 1.0) == doctest::Approx(8.0 * pi * pi * (1.0 - 1.0 / std::sqrt(2.0))));
  CHECK(orthogonal_closed_form(-3.0, 1.0) == doctest::Approx(23.125).epsilon(1e-4));
  CHECK(orthogonal_closed_form(0.0, 1.0) == doctest::Approx(pi * pi).epsilon(1e-14));
  // α = 0 integrand is elementary: (2π)^2 (1/2)(1/2)
  CHECK(orthogonal_model_value(0.0, 1.0) == doctest::Approx(pi * pi).epsilon(1e-12));
  // α = -2: the limit of the closed form
  CHECK(orthogonal_closed_form(-2.0, 1.0) == doctest::Approx(2.0 * pi * pi * std::log(2.0)).epsilon(1e-12));
  CHECK(orthogonal_closed_form(-2.0 + 1e-6, 1.0) ==
        doctest::Approx(orthogonal_closed_form(-2.0, 1.0)).epsilon(1e-6));
  for (double alpha : {-3.5, -3.0, -2.0, -1.0, 0.0})
    for (double rho : {0.5, 1.0}) {
      const auto r = orthogonal_model_integral(alpha, rho);
      CHECK_FALSE(r.divergent);
      CHECK(r.value == doctest::Approx(r.closed_form).epsilon(1e-9));
    }
}

TEST_CASE("orthogonal model diverges exactly from alpha = -4") {
  const auto r = orthogonal_model_integral(-4.0, 1.0);
  CHECK(r.divergent);
  CHECK(std::isnan(r.value));
  REQUIRE(r.cutoff_study);
  CHECK(r.cutoff_study->law == Law::logarithmic);
  // the growth per unit of log(1/c) is (2π)^2 ∫ cos θ sin θ dθ = 2π^2
  for (double s : r.cutoff_study->segment_slopes) CHECK(s == doctest::Approx(2.0 * pi * pi).epsilon(1e-3));
  const auto cuts = geometric_cutoffs(1e-2, 1e-4, 5);
  const auto below = orthogonal_model_scan(-4.5, 1.0, cuts);
  CHECK(below.law == Law::power);
  CHECK(below.exponent == doctest::Approx(-0.5).epsilon(1e-3));
  for (double alpha : {-3.9, -3.5, -3.0}) CHECK_FALSE(orthogonal_model_scan(alpha, 1.0, cuts).divergent());
  CHECK(orthogonal_model_scan(-4.1, 1.0, cuts).divergent());
  const auto j = nlohmann::json::parse(to_json(r));
  CHECK(j["divergent"] == true);
  CHECK(j["value"].is_null());
  CHECK(j["cutoff_study"]["law"] == "logarithmic");
}

TEST_CASE("tangent model values match the antiderivative form") {
  for (double alpha : {-4.0, -3.0, -2.5})
    for (double rho_min : {1e-2, 1e-4})
      CHECK(tangent_model_value(alpha, 0.5, rho_min) ==
            doctest::Approx(tangent_by_antiderivative(alpha, 0.5, rho_min)).epsilon(1e-8));
}

TEST_CASE("tangent model: finite above -3, logarithmic at -3, power 2 alpha + 6 below") {
  const auto fin = tangent_model_scan(-2.5, 0.5, {1e-2, 1e-3, 1e-4});
  CHECK(fin.law == Law::finite_limit);
  const double d1 = fin.values[1] - fin.values[0], d2 = fin.values[2] - fin.values[1];
  CHECK(std::abs(d1) >= 5.0 * std::abs(d2));

  const auto cuts = geometric_cutoffs(1e-2, 1e-4, 5);
  const auto log = tangent_model_scan(-3.0, 0.5, cuts);
  CHECK(log.law == Law::logarithmic);
  double lo = log.segment_slopes[0], hi = lo;
  for (double s : log.segment_slopes) {
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  CHECK(hi <= 1.05 * lo);
  // at α = -3 the inner integral is about 4/ρ^2, so the growth rate is 4
  CHECK(log.log_slope == doctest::Approx(4.0).epsilon(1e-3));

  for (double alpha : {-4.0, -3.5}) {
    const auto p = tangent_model_scan(alpha, 0.5, cuts);
    CHECK(p.law == Law::power);
    CHECK(std::abs(p.exponent - (2.0 * alpha + 6.0)) <= 0.1);
  }
  CHECK_FALSE(tangent_model_scan(-2.9, 0.5, cuts).divergent());
  CHECK(tangent_model_scan(-3.1, 0.5, cuts).divergent());
}

TEST_CASE("cone model: exact values and the threshold at -4") {
  // ∫∫ r ρ = 1/4 and ∫∫ (r + ρ) r ρ = 1/3
  CHECK(cone_model_value(0.0, 0.0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(cone_model_value(1.0, 0.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  const auto cuts = geometric_cutoffs(1e-2, 1e-4, 5);
  const auto fin = cone_model_scan(-3.5, cuts);
  CHECK(fin.law == Law::finite_limit);
  CHECK(fin.limit == doctest::Approx(cone_model_value(-3.5, 0.0)).epsilon(0.005));
  const auto log = cone_model_scan(-4.0, cuts);
  CHECK(log.law == Law::logarithmic);
  for (double alpha : {-5.0, -4.5}) {
    const auto p = cone_model_scan(alpha, cuts);
    CHECK(p.law == Law::power);
    CHECK(std::abs(p.exponent - (alpha + 4.0)) <= 0.1);
  }
  CHECK_FALSE(cone_model_scan(-3.9, cuts).divergent());
  CHECK(cone_model_scan(-4.1, cuts).divergent());
}

TEST_CASE("lambda bound") {
  CHECK(annulus_constant(2) == doctest::Approx(0.675 * pi).epsilon(1e-14));
  CHECK(annulus_constant(1) == doctest::Approx(0.9).epsilon(1e-14));
  const double c1 = annulus_constant(2);
  for (double alpha : {-4.0, -5.0, -3.0}) {
    const double rho = 0.3;
    CHECK(lambda_bound(2, alpha, rho, rho) ==
          doctest::Approx(std::pow(2.0, 2 * alpha) * c1 * c1 * std::pow(rho, 4 + alpha)).epsilon(1e-13));
    CHECK(lambda_bound(2, alpha, 1e-12, rho) ==
          doctest::Approx(std::pow(2.0, alpha) * c1 * c1 * std::pow(rho, 4 + alpha)).epsilon(1e-9));
    double prev = lambda_bound(2, alpha, 1e-3, rho);
    for (double d : {1e-2, 0.1, 0.5, 1.0}) {
      const double l = lambda_bound(2, alpha, d, rho);
      CHECK(l < prev);
      prev = l;
    }
  }
  CHECK_THROWS_AS(lambda_bound(2, -4.0, 0.0, 1.0), Error);
}

TEST_CASE("transversal cross energy agrees with a brute-force product rule") {
  for (double alpha : {-4.0, -2.0})
    CHECK(cross_energy(2, alpha, 1.0, 0.5) ==
          doctest::Approx(transversal_brute_force(2, alpha, 0.5, 48)).epsilon(1e-7));
  CHECK(cross_energy(1, -2.0, 1.0, 0.5) ==
        doctest::Approx(transversal_brute_force(1, -2.0, 0.5, 128)).epsilon(1e-9));
  // radius scaling: E(λ r, λ δ) = λ^(2m+α) E(r, δ)
  CHECK(cross_energy(2, -5.0, 2.0, 0.2) == doctest::Approx(std::pow(2.0, -1.0) * cross_energy(2, -5.0, 1.0, 0.1)).epsilon(1e-8));
}

TEST_CASE("coaxial cross energy agrees with the shell closed form") {
  for (double alpha : {-4.0, -5.0, -2.5})
    for (double delta : {0.1, 0.02})
      CHECK(cross_energy(2, alpha, 1.0, delta, ContactKind::tangential) ==
            doctest::Approx(coaxial_closed_form(alpha, delta)).epsilon(1e-7));
}

TEST_CASE("two-body sweep follows the predicted laws and dominates the bound") {
  const auto four = two_body_sweep(2, -4.0, 1.0, default_deltas());
  CHECK(four.predicted == Law::logarithmic);
  CHECK(four.fit.law == Law::logarithmic);
  CHECK(four.log_r2 > 0.99);
  CHECK(four.bound_holds);
  const auto five = two_body_sweep(2, -5.0, 1.0, default_deltas());
  CHECK(five.predicted == Law::power);
  CHECK(five.fit.law == Law::power);
  CHECK(std::abs(five.power_exponent - (-1.0)) <= 0.1);
  CHECK(five.bound_holds);
  const auto three = two_body_sweep(2, -3.0, 1.0, default_deltas());
  CHECK(three.predicted == Law::finite_limit);
  CHECK(three.fit.law == Law::finite_limit);
  for (const auto* r : {&four, &five, &three})
    for (const auto& row : r->rows) CHECK(row.energy >= row.lambda_sum);

  // tangential contacts blow up faster: δ^(α+3)
  const auto tan = two_body_sweep(2, -5.0, 1.0, default_deltas(), ContactKind::tangential);
  CHECK(tan.power_exponent == doctest::Approx(-2.0).epsilon(0.05));
  CHECK(tan.bound_holds);

  CHECK_THROWS_AS(two_body_sweep(2, -4.0, 1.0, {0.1, 0.0, -0.1}), Error);
  CHECK_THROWS_AS(cross_energy(2, -4.0, 1.0, 0.0), Error);
}

TEST_CASE("sweep output formats") {
  const auto r = two_body_sweep(1, -2.0, 1.0, {0.2, 0.1, 0.05});
  const auto csv = to_csv(r);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "alpha,delta,energy,lambda_bound_sum");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3);
  const auto j = nlohmann::json::parse(to_json(r));
  CHECK(j["law"] == "logarithmic");
  CHECK(j.contains("exponent"));
  CHECK(j.contains("r2"));
  CHECK(j["rows"].size() == 3);
  CHECK(j["contact"] == "transversal");
}
