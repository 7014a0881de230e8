#include "rieszlab/riesz.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/factorials.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace rieszlab::riesz {

using geometry::ChartSurface;
using geometry::GraphPatch;
using geometry::Surface;
using geometry::SurfaceNodes;
using geometry::TriMesh;

namespace {

// Nodes, near-ball patches and the same-sheet test for one surface.
struct Setup {
  SurfaceNodes nodes;  // outer nodes x, carrying the near balls
  SurfaceNodes inner;  // far-field nodes y
  // Charts: a sparser far-field rule whose difference to `inner` enters the
  // error estimate.
  std::optional<SurfaceNodes> inner_check;
  const ChartSurface* chart = nullptr;
  const TriMesh* mesh = nullptr;
  double eps = 0.0;
  bool single_sheet = false;  // charts: eps below the reach
  bool patches = true;

  std::shared_ptr<GraphPatch> patch(std::size_t i) const {
    if (chart) {
      geometry::Frames f{nodes.x[i], nodes.tangent[i], nodes.normal[i]};
      return geometry::chart_patch(*chart, nodes.component[i], nodes.x[i], f, eps);
    }
    return geometry::fit_vertex(*mesh, nodes.vertex[i], eps).patch;
  }

  // Within the default radius a ball around a mesh vertex meets only its
  // own component in a single sheet; charts fall back to the patch test
  // when eps exceeds the reach.
  bool same_sheet(std::size_t i, const SurfaceNodes& in, std::size_t j,
                  const GraphPatch* p) const {
    if (nodes.component[i] != in.component[j]) return false;
    if (mesh || single_sheet) return true;
    return p != nullptr && p->contains(in.x[j]);
  }
};

double min_component_gap(const SurfaceNodes& nodes) {
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (std::size_t j = i + 1; j < nodes.size(); ++j)
      if (nodes.component[i] != nodes.component[j])
        gap = std::min(gap, (nodes.x[i] - nodes.x[j]).norm());
  return gap;
}

double chart_reach(const ChartSurface& s) {
  double r = std::numeric_limits<double>::infinity();
  for (const auto& c : s.components()) r = std::min(r, c.reach);
  if (!(r > 0) || !std::isfinite(r)) r = geometry::estimated_reach(s);
  return r;
}

Setup make_setup(const Surface& s, int order, int far_order, double eps,
                 const EnergyOptions& opt, const EnergyParams& params,
                 bool check_far = false) {
  Setup st;
  st.eps = eps;
  if (const auto* cs = std::get_if<ChartSurface>(&s)) {
    require(cs->closed(), ErrorKind::topology, "riesz_energy: surface must be closed");
    st.chart = cs;
    st.nodes = geometry::sample(*cs, order);
    int fo = far_order;
    if (fo > 0) {
      st.inner = fo == order ? st.nodes : geometry::sample(*cs, fo);
    } else {
      // Resolve the cutoff transition [eps/2, eps] by about twelve node spacings.
      fo = 4 * order;
      st.inner = geometry::sample(*cs, fo);
      const double spacing = std::pow(compensated_total(st.inner.w) / st.inner.size(),
                                      1.0 / st.inner.m);
      if (spacing > eps / 24.0) {
        fo = std::min(32 * order, static_cast<int>(std::ceil(fo * spacing * 24.0 / eps)));
        st.inner = geometry::sample(*cs, fo);
      }
    }
    if (check_far && fo > order) st.inner_check = geometry::sample(*cs, std::max(order, 3 * fo / 4));
    double reach_min = std::numeric_limits<double>::infinity();
    for (const auto& c : cs->components())
      reach_min = std::min(reach_min, c.reach > 0 ? c.reach : 0.0);
    st.single_sheet = eps < reach_min;
    return st;
  }
  const auto& mesh = std::get<TriMesh>(s);
  geometry::check_closed(mesh);
  st.mesh = &mesh;
  st.nodes = geometry::sample(mesh);
  st.inner = st.nodes;
  st.patches = opt.mesh_patches && mesh.dim() == 2 && mesh.ambient() == 3;
  if (!st.patches)
    require(params.alpha > -params.m, ErrorKind::unsupported,
            "riesz_energy: alpha <= -m on a mesh needs fitted vertex patches (m = 2, n = 3)");
  return st;
}

struct RuleResult {
  double value = 0.0, near = 0.0, far = 0.0, near_error = 0.0, far_error = 0.0;
  double residue = 0.0;
  int nodes = 0;
};

std::string node_name(std::size_t i, const Vec& x) {
  std::ostringstream os;
  os.precision(10);
  os << "node " << i << " at (";
  for (long k = 0; k < x.size(); ++k) os << (k ? ", " : "") << x[k];
  os << ")";
  return os.str();
}

// Outer node i against inner node j. Without near balls both grids are the
// same and the diagonal is skipped.
double kernel(const Setup& st, const SurfaceNodes& in, const EnergyParams& params,
              double eps, std::size_t i, std::size_t j, const GraphPatch* patch_i) {
  if (!st.patches && i == j) return 0.0;
  const double d = (st.nodes.x[i] - in.x[j]).norm();
  if (st.patches && d < eps) {
    const bool same = st.same_sheet(i, in, j, patch_i);
    if (same && d <= 0.5 * eps) return 0.0;
    require(d > 0, ErrorKind::singular, "riesz_energy: coincident quadrature nodes");
    const double k = std::pow(d, params.alpha);
    return same ? (1.0 - radial::smooth_cutoff(d, eps)) * k : k;
  }
  require(d > 0, ErrorKind::singular, "riesz_energy: coincident quadrature nodes");
  return std::pow(d, params.alpha);
}

int far_order_of(const EnergyOptions& opt, int order) {
  return opt.far_order > 0 ? std::max(opt.far_order, order) : 0;
}

RuleResult evaluate_rule(const Surface& s, const EnergyParams& params, int order, double eps,
                         const EnergyOptions& opt, bool check_far) {
  const Setup st =
      make_setup(s, order, far_order_of(opt, order), eps, opt, params, check_far);
  const std::size_t n = st.nodes.size();
  std::vector<double> near(n, 0.0), far(n, 0.0), far_check(n, 0.0), err(n, 0.0), logc(n, 0.0);
  const int m = st.nodes.m;
  parallel_for(n, [&](std::size_t i) {
    std::shared_ptr<GraphPatch> patch;
    if (st.patches) {
      try {
        patch = st.patch(i);
        radial::ProfileOptions po = opt.profile;
        po.angular_nodes = opt.angular_nodes;
        const auto prof = radial::radial_profile(patch, eps, po).with_cutoff(eps);
        const auto fp = radial::finite_part(params, prof, eps, opt.finite_part);
        near[i] = fp.value;
        err[i] = fp.error;
        logc[i] = fp.log_coefficient;
      } catch (const PoleError&) {
        throw;
      } catch (const Error& e) {
        fail(e.kind(), "riesz_energy: near field failed at " + node_name(i, st.nodes.x[i]) +
                           ": " + e.what());
      }
    } else {
      // flat self-cell: the ball of the node's volume in its tangent plane
      const double rho = std::pow(st.nodes.w[i] / radial::ball_volume(m), 1.0 / m);
      const double p = params.alpha + m;
      near[i] = radial::sphere_volume(m - 1) * std::pow(rho, p) / p;
    }
    auto far_sum = [&](const SurfaceNodes& in) {
      CompensatedSum f;
      for (std::size_t j = 0; j < in.size(); ++j)
        f.add(in.w[j] * kernel(st, in, params, eps, i, j, patch.get()));
      return f.value();
    };
    far[i] = far_sum(st.inner);
    far_check[i] = st.inner_check ? far_sum(*st.inner_check) : far[i];
  });
  RuleResult r;
  CompensatedSum v, nr, fr, fc, e, res;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = st.nodes.w[i];
    v.add(w * (near[i] + far[i]));
    nr.add(w * near[i]);
    fr.add(w * far[i]);
    fc.add(w * far_check[i]);
    e.add(w * err[i]);
    res.add(w * logc[i]);
  }
  r.value = v.value();
  r.near = nr.value();
  r.far = fr.value();
  r.near_error = e.value();
  r.far_error = std::abs(r.far - fc.value());
  r.residue = res.value();
  r.nodes = static_cast<int>(n);
  return r;
}

}  // namespace

double default_eps0(const Surface& s, int order) {
  double eps;
  SurfaceNodes nodes;
  if (const auto* cs = std::get_if<ChartSurface>(&s)) {
    eps = 0.75 * chart_reach(*cs);
    nodes = geometry::sample(*cs, std::min(order, 12));
  } else {
    const auto& mesh = std::get<TriMesh>(s);
    eps = 2.5 * mesh.mean_edge_length();
    if (mesh.dim() == 2) {
      double kmax = 0.0;
      for (std::size_t v = 0; v < mesh.vertex_count(); ++v)
        kmax = std::max(kmax, geometry::curvature_at(mesh, static_cast<int>(v)).hs_norm);
      // hs_norm is sqrt(k1^2 + k2^2), sqrt(2) k on umbilic points
      if (kmax > 0) eps = std::max(eps, 0.7 / kmax);
    }
    nodes = geometry::sample(mesh);
  }
  const double gap = min_component_gap(nodes);
  if (std::isfinite(gap)) eps = std::min(eps, 0.5 * gap);
  require(eps > 0 && std::isfinite(eps), ErrorKind::numerical,
          "default near-ball radius is not positive");
  return eps;
}

EnergyReport riesz_energy(const Surface& s, const EnergyParams& params,
                          const EnergyOptions& opt) {
  require(params.m == geometry::dim(s), ErrorKind::precondition,
          "riesz_energy: parameter dimension does not match the surface");
  require(opt.order >= 2, ErrorKind::precondition, "riesz_energy: order must be >= 2");
  const double eps = opt.eps0 > 0 ? opt.eps0 : default_eps0(s, opt.order);
  const RuleResult fine = evaluate_rule(s, params, opt.order, eps, opt, opt.estimate_error);
  EnergyReport rep;
  rep.value = fine.value;
  rep.near = fine.near;
  rep.far = fine.far;
  rep.eps0 = eps;
  rep.alpha = params.alpha;
  rep.m = params.m;
  rep.nodes = fine.nodes;
  rep.order = opt.order;
  rep.error_estimate = std::abs(fine.near_error) + fine.far_error;
  const bool chart = std::holds_alternative<ChartSurface>(s);
  if (opt.estimate_error && chart) {
    const int coarse = opt.coarse_order > 0 ? opt.coarse_order
                                            : std::max(2, (3 * opt.order + 3) / 4);
    if (coarse < opt.order) {
      const RuleResult c = evaluate_rule(s, params, coarse, eps, opt, false);
      rep.error_estimate += std::abs(fine.value - c.value);
    }
  }
  if (params.pole()) rep.residue = fine.residue;
  if (const auto* mesh = std::get_if<TriMesh>(&s); mesh && !(opt.mesh_patches &&
                                                           mesh->dim() == 2)) {
    rep.eps0 = 0.0;
  }
  return rep;
}

Mat far_kernel(const Surface& s, const EnergyParams& params, const EnergyOptions& opt) {
  const double eps = opt.eps0 > 0 ? opt.eps0 : default_eps0(s, opt.order);
  const Setup st = make_setup(s, opt.order, opt.order, eps, opt, params);
  const std::size_t n = st.nodes.size();
  Mat k = Mat::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    std::shared_ptr<GraphPatch> patch;
    if (st.patches) patch = st.patch(i);
    for (std::size_t j = 0; j < n; ++j)
      k(i, j) = i == j ? 0.0 : kernel(st, st.inner, params, eps, i, j, patch.get());
  }
  return k;
}

std::string to_json(const EnergyReport& r) {
  nlohmann::json j;
  j["value"] = r.value;
  j["near"] = r.near;
  j["far"] = r.far;
  j["eps0"] = r.eps0;
  j["error_estimate"] = r.error_estimate;
  if (r.residue)
    j["pole"] = {{"residue", *r.residue}};
  else
    j["pole"] = nullptr;
  j["alpha"] = r.alpha;
  j["m"] = r.m;
  j["nodes"] = r.nodes;
  j["order"] = r.order;
  return j.dump(2);
}

// ---- closed forms ----

namespace {

bool near_integer(double x, double tol = 1e-12) { return std::abs(x - std::round(x)) < tol; }

// circle: B(z) = r^(2+z) A(z) Gamma((z+1)/2), A(z) = 2 pi 2^(z+1) sqrt(pi) / Gamma(z/2+1)
double circle_a(double r, double z) {
  const double g = z / 2.0 + 1.0;
  if (g <= 0 && near_integer(g)) return 0.0;
  return std::pow(r, 2.0 + z) * 2.0 * pi * std::pow(2.0, z + 1.0) * std::sqrt(pi) /
         std::tgamma(g);
}

// pole index k for z = -2k-1, or -1
int circle_pole_index(double z) {
  const double k = -(z + 1.0) / 2.0;
  if (k < -1e-12 || !near_integer(k)) return -1;
  return static_cast<int>(std::round(k));
}

}  // namespace

bool oracle_pole(OracleShape shape, double z) {
  if (shape == OracleShape::circle) return circle_pole_index(z) >= 0;
  return std::abs(z + 2.0) < 1e-12;
}

double oracle_residue(OracleShape shape, double radius, double z) {
  require(radius > 0, ErrorKind::precondition, "oracle radius must be positive");
  require(oracle_pole(shape, z), ErrorKind::precondition, "oracle_residue: z is not a pole");
  if (shape == OracleShape::circle) {
    const int k = circle_pole_index(z);
    const double z0 = -2.0 * k - 1.0;
    const double sign = k % 2 ? -1.0 : 1.0;
    return 2.0 * sign * circle_a(radius, z0) / boost::math::factorial<double>(k);
  }
  return 8.0 * pi * pi * radius * radius;
}

double beta_oracle(OracleShape shape, double radius, double z) {
  require(radius > 0, ErrorKind::precondition, "oracle radius must be positive");
  if (oracle_pole(shape, z)) {
    std::ostringstream os;
    os.precision(17);
    os << "beta oracle has a pole at z = " << z;
    throw PoleError(os.str(), oracle_residue(shape, radius, z));
  }
  if (shape == OracleShape::circle) return circle_a(radius, z) * std::tgamma((z + 1.0) / 2.0);
  return std::pow(radius, 4.0 + z) * std::pow(2.0, z + 5.0) * pi * pi / (z + 2.0);
}

double finite_part_at_pole(OracleShape shape, double radius, double z) {
  require(radius > 0, ErrorKind::precondition, "oracle radius must be positive");
  require(oracle_pole(shape, z), ErrorKind::precondition,
          "finite_part_at_pole: z is not a pole of the closed form");
  if (shape == OracleShape::circle) {
    const int k = circle_pole_index(z);
    const double z0 = -2.0 * k - 1.0;
    const double a = circle_a(radius, z0);
    const double da =
        a * (std::log(radius) + std::log(2.0) - 0.5 * boost::math::digamma(z0 / 2.0 + 1.0));
    const double sign = k % 2 ? -1.0 : 1.0;
    // Gamma(-k + d) = (-1)^k / k! (1/d + psi(k+1) + O(d)), d = (z - z0)/2
    return sign / boost::math::factorial<double>(k) *
           (2.0 * da + a * boost::math::digamma(k + 1.0));
  }
  return 8.0 * pi * pi * radius * radius * (std::log(2.0) + std::log(radius));
}

// ---- scaling ----

ScalingReport scaling_check(const Surface& s, const EnergyParams& params, double lambda,
                            const EnergyOptions& opt) {
  require(lambda > 0, ErrorKind::precondition, "scaling_check: lambda must be positive");
  ScalingReport rep;
  rep.lambda = lambda;
  rep.exponent = 2.0 * params.m + params.alpha;
  rep.pole = params.pole();
  EnergyOptions o = opt;
  o.eps0 = opt.eps0 > 0 ? opt.eps0 : default_eps0(s, opt.order);
  const auto base = riesz_energy(s, params, o);
  const int n = geometry::ambient(s);
  const auto map = geometry::similarity(n, lambda);
  Surface scaled_surface = std::visit(
      [&](const auto& surf) -> Surface {
        using T = std::decay_t<decltype(surf)>;
        if constexpr (std::is_same_v<T, ChartSurface>)
          return surf.mapped(map, " scaled");
        else
          return geometry::mapped(surf, map);
      },
      s);
  EnergyOptions os = o;
  os.eps0 = lambda * o.eps0;
  const auto scaled = riesz_energy(scaled_surface, params, os);
  const double f = std::pow(lambda, rep.exponent);
  rep.base = base.value;
  rep.scaled = scaled.value;
  rep.predicted = f * base.value;
  if (rep.pole) {
    rep.residue = base.residue.value_or(0.0);
    rep.predicted += f * rep.residue * std::log(lambda);
    if (lambda != 1.0)
      rep.fitted_log_coefficient = (scaled.value / f - base.value) / std::log(lambda);
  }
  rep.discrepancy = std::abs(rep.scaled - rep.predicted);
  rep.tolerance = f * base.error_estimate + scaled.error_estimate +
                  1e-12 * std::max(std::abs(rep.scaled), std::abs(rep.predicted));
  rep.pass = rep.discrepancy <= rep.tolerance;
  return rep;
}

std::string to_json(const ScalingReport& r) {
  nlohmann::json j;
  j["lambda"] = r.lambda;
  j["exponent"] = r.exponent;
  j["base"] = r.base;
  j["scaled"] = r.scaled;
  j["predicted"] = r.predicted;
  j["discrepancy"] = r.discrepancy;
  j["tolerance"] = r.tolerance;
  j["pole"] = r.pole;
  if (r.pole) {
    j["fitted_log_coefficient"] = r.fitted_log_coefficient;
    j["residue"] = r.residue;
  }
  j["pass"] = r.pass;
  return j.dump(2);
}

}  // namespace rieszlab::riesz
