// riesz_lab: command-line front end of the rieszlab library.

#include "rieszlab/core.hpp"
#include "rieszlab/flow.hpp"
#include "rieszlab/geometry/chart.hpp"
#include "rieszlab/geometry/mesh.hpp"
#include "rieszlab/geometry/surface.hpp"
#include "rieszlab/models.hpp"
#include "rieszlab/moebius.hpp"
#include "rieszlab/riesz.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace rieszlab;
using geometry::ChartSurface;
using geometry::Surface;
using geometry::TriMesh;
using nlohmann::json;

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitUnsupported = 4;

int exit_code(ErrorKind kind) {
  switch (kind) {
    // invalid parameter values surface as precondition failures
    case ErrorKind::precondition:
    case ErrorKind::config:
    case ErrorKind::io: return kExitConfig;
    case ErrorKind::unsupported: return kExitUnsupported;
    default: return kExitNumerical;
  }
}

[[noreturn]] void config_error(const std::string& what) { fail(ErrorKind::config, what); }

// ---- surface catalog ----

struct SurfaceSpec {
  std::string name;
  std::map<std::string, double> params;
  std::string path;  // mesh files
};

SurfaceSpec parse_surface_spec(const std::string& text) {
  SurfaceSpec spec;
  const auto colon = text.find(':');
  spec.name = text.substr(0, colon);
  const auto ext = [&](const std::string& e) {
    return text.size() > e.size() && text.compare(text.size() - e.size(), e.size(), e) == 0;
  };
  if (spec.name == "file") {
    spec.path = colon == std::string::npos ? "" : text.substr(colon + 1);
    return spec;
  }
  if (ext(".off") || ext(".obj") || ext(".OFF") || ext(".OBJ")) {
    spec.name = "file";
    spec.path = text;
    return spec;
  }
  if (colon == std::string::npos) return spec;
  std::stringstream rest(text.substr(colon + 1));
  std::string item;
  while (std::getline(rest, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) config_error("surface parameter '" + item + "' is not key=value");
    const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
    try {
      std::size_t used = 0;
      spec.params[key] = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      config_error("surface parameter '" + key + "' needs a number, got '" + value + "'");
    }
  }
  return spec;
}

class ParamReader {
 public:
  explicit ParamReader(const SurfaceSpec& s) : spec_(s) {}
  double get(const std::string& key, double fallback) {
    used_.push_back(key);
    const auto it = spec_.params.find(key);
    return it == spec_.params.end() ? fallback : it->second;
  }
  int get_int(const std::string& key, int fallback) {
    const double v = get(key, fallback);
    if (v != std::floor(v)) config_error("surface parameter '" + key + "' must be an integer");
    return static_cast<int>(v);
  }
  void finish() const {
    for (const auto& [key, value] : spec_.params)
      if (std::find(used_.begin(), used_.end(), key) == used_.end())
        config_error("surface '" + spec_.name + "' has no parameter '" + key + "'");
  }

 private:
  const SurfaceSpec& spec_;
  std::vector<std::string> used_;
};

Vec vec3(double x, double y, double z) {
  Vec v(3);
  v << x, y, z;
  return v;
}

const char* kCatalog =
    "charts: circle:r, ellipse:a,b, sphere:r,cx,cy,cz, ellipsoid:a,b,c, torus:R,r; "
    "meshes: icosphere:level,r, ellipsoid_mesh:level,a,b,c, torus_mesh:R,r,nu,nv, "
    "polygon:n,r, two_spheres:level,r,gap; files: path.off, path.obj, file:path";

Surface make_surface(const std::string& text) {
  const SurfaceSpec spec = parse_surface_spec(text);
  if (spec.name == "file") {
    if (spec.path.empty()) config_error("file: surface needs a path");
    if (!std::ifstream(spec.path)) config_error("mesh file '" + spec.path + "' does not exist");
    return geometry::read_mesh(spec.path);
  }
  ParamReader p(spec);
  std::optional<Surface> out;
  if (spec.name == "circle") {
    out = geometry::catalog::circle(p.get("r", 1.0));
  } else if (spec.name == "ellipse") {
    out = geometry::catalog::ellipse(p.get("a", 1.0), p.get("b", 0.6));
  } else if (spec.name == "sphere") {
    const double r = p.get("r", 1.0);
    out = geometry::catalog::sphere(r, vec3(p.get("cx", 0.0), p.get("cy", 0.0), p.get("cz", 0.0)));
  } else if (spec.name == "ellipsoid") {
    out = geometry::catalog::ellipsoid(p.get("a", 1.0), p.get("b", 0.8), p.get("c", 0.6));
  } else if (spec.name == "torus") {
    out = geometry::catalog::torus(p.get("R", 2.0), p.get("r", 0.5));
  } else if (spec.name == "icosphere") {
    const int level = p.get_int("level", 2);
    out = geometry::meshes::icosphere(level, p.get("r", 1.0));
  } else if (spec.name == "ellipsoid_mesh") {
    const int level = p.get_int("level", 3);
    out = geometry::meshes::ellipsoid(level, p.get("a", 1.0), p.get("b", 0.8), p.get("c", 0.6));
  } else if (spec.name == "torus_mesh") {
    const double R = p.get("R", 2.0), r = p.get("r", 0.5);
    out = geometry::meshes::torus(R, r, p.get_int("nu", 32), p.get_int("nv", 16));
  } else if (spec.name == "polygon") {
    out = geometry::meshes::polygon(p.get_int("n", 64), p.get("r", 1.0));
  } else if (spec.name == "two_spheres") {
    const int level = p.get_int("level", 2);
    const double r = p.get("r", 1.0), gap = p.get("gap", 0.1);
    out = geometry::disjoint_union(geometry::meshes::icosphere(level, r),
                                   geometry::meshes::icosphere(level, r, vec3(2.0 * r + gap, 0, 0)));
  } else {
    config_error("unknown surface '" + spec.name + "' (" + kCatalog + ")");
  }
  p.finish();
  return *out;
}

std::optional<riesz::OracleShape> oracle_shape(const std::string& text, double& radius) {
  const SurfaceSpec spec = parse_surface_spec(text);
  const auto r = spec.params.find("r");
  radius = r == spec.params.end() ? 1.0 : r->second;
  if (spec.name == "circle") return riesz::OracleShape::circle;
  if (spec.name == "sphere") return riesz::OracleShape::sphere;
  return std::nullopt;
}

// ---- output ----

std::string fmt17(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write '" + path + "'");
  out << text;
  if (!out) fail(ErrorKind::io, "write to '" + path + "' failed");
}

// Gnuplot two-column data: "# x y" header, then one pair per line.
std::string two_column(const std::string& xname, const std::string& yname,
                       const std::vector<double>& x, const std::vector<double>& y) {
  std::ostringstream os;
  os << std::setprecision(17) << "# " << xname << ' ' << yname << '\n';
  for (std::size_t i = 0; i < x.size(); ++i) os << x[i] << ' ' << y[i] << '\n';
  return os.str();
}

json parse_report(const std::string& text) { return json::parse(text); }

// ---- configuration ----

struct Config {
  std::string command;
  std::string model_kind;
  std::string surface;
  std::string refined;
  std::optional<double> alpha;
  bool ks = false;
  std::optional<double> as_s;
  double z = 0.0;
  int order = 16;
  int refined_order = 24;
  double eps0 = 0.0;
  double rho = 1.0;
  std::string cutoffs;
  int m = 2;
  double radius = 1.0;
  std::string deltas;
  std::string kind = "transversal";
  int steps = 20;
  double perturb = 0.0;
  double ceiling = 0.0;
  std::string map = "inversion";
  std::string center;
  double map_radius = 1.0;
  int patch_k = 3;
  double patch_eps0 = 0.1;
  double patch_b = 10.0;
  double patch_volume = 20.0;
  std::uint64_t seed = 0;
  std::string output, csv, plot, trajectory, initial_off, final_off;
  int threads = 0;
};

// Comma-separated numbers.
std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  if (text.empty()) return out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      config_error(what + ": '" + item + "' is not a number");
    }
  }
  return out;
}

void require_order(int order, int minimum, const std::string& what) {
  if (order < minimum)
    config_error(what + " must be at least " + std::to_string(minimum) + ", got " +
                 std::to_string(order));
}

json energy_spec_json(const Config& c) {
  if (c.ks) return {{"kind", "ks"}};
  if (c.as_s) return {{"kind", "as"}, {"s", *c.as_s}};
  return {{"kind", "riesz"}, {"alpha", *c.alpha}};
}

int selected_energies(const Config& c) {
  return (c.alpha ? 1 : 0) + (c.ks ? 1 : 0) + (c.as_s ? 1 : 0);
}

void require_energy(const Config& c) {
  if (selected_energies(c) != 1) config_error("select exactly one of --alpha, --ks, --as");
}

// ---- commands ----

json run_energy(const Config& c) {
  require_energy(c);
  require_order(c.order, 4, "--order");
  const Surface s = make_surface(c.surface);
  json j;
  j["command"] = "energy";
  j["surface"] = geometry::describe(s);
  j["energy"] = energy_spec_json(c);
  riesz::EnergyOptions opt;
  opt.order = c.order;
  opt.eps0 = c.eps0;
  if (c.ks) {
    moebius::KSOptions ko;
    ko.order = c.order;
    j["report"] = parse_report(riesz::to_json(moebius::ks_energy(s, ko)));
  } else if (c.as_s) {
    j["report"] = parse_report(moebius::to_json(moebius::as_energy(s, *c.as_s, opt)));
  } else {
    const riesz::EnergyParams params(*c.alpha, geometry::dim(s));
    const auto rep = riesz::riesz_energy(s, params, opt);
    j["report"] = parse_report(riesz::to_json(rep));
    double r = 1.0;
    if (const auto shape = oracle_shape(c.surface, r);
        shape && !riesz::oracle_pole(*shape, *c.alpha)) {
      const double oracle = riesz::beta_oracle(*shape, r, *c.alpha);
      j["oracle"] = oracle;
      j["relative_difference"] = oracle != 0.0 ? std::abs(rep.value / oracle - 1.0)
                                               : std::abs(rep.value);
    }
  }
  j["value"] = j["report"]["value"];
  return j;
}

json run_beta(const Config& c) {
  require_order(c.order, 4, "--order");
  const Surface s = make_surface(c.surface);
  const riesz::EnergyParams params(c.z, geometry::dim(s));
  riesz::EnergyOptions opt;
  opt.order = c.order;
  opt.eps0 = c.eps0;
  const auto rep = riesz::riesz_energy(s, params, opt);
  json j;
  j["command"] = "beta";
  j["surface"] = geometry::describe(s);
  j["z"] = c.z;
  j["pole"] = params.pole();
  j["value"] = rep.value;  // finite part (constant Laurent term) at poles
  j["residue"] = rep.residue ? json(*rep.residue) : json(nullptr);
  j["report"] = parse_report(riesz::to_json(rep));
  double r = 1.0;
  if (const auto shape = oracle_shape(c.surface, r)) {
    if (riesz::oracle_pole(*shape, c.z)) {
      j["oracle"] = riesz::finite_part_at_pole(*shape, r, c.z);
      j["oracle_residue"] = riesz::oracle_residue(*shape, r, c.z);
    } else {
      j["oracle"] = riesz::beta_oracle(*shape, r, c.z);
    }
  }
  return j;
}

json fit_rows(const models::FitReport& f, const Config& c) {
  if (!c.csv.empty()) {
    std::ostringstream os;
    os << std::setprecision(17) << "cutoff,value\n";
    for (std::size_t i = 0; i < f.cutoffs.size(); ++i) os << f.cutoffs[i] << ',' << f.values[i] << '\n';
    write_text(c.csv, os.str());
  }
  if (!c.plot.empty()) write_text(c.plot, two_column("cutoff", "value", f.cutoffs, f.values));
  return parse_report(models::to_json(f));
}

json run_model(const Config& c) {
  if (!c.alpha) config_error("model needs --alpha");
  const double a = *c.alpha;
  std::vector<double> cuts = parse_list(c.cutoffs, "--cutoffs");
  json j;
  j["command"] = "model";
  j["model"] = c.model_kind;
  j["alpha"] = a;
  if (c.model_kind == "orthogonal") {
    j["rho"] = c.rho;
    if (cuts.empty()) cuts = models::geometric_cutoffs(1e-2 * c.rho, 1e-4 * c.rho, 5);
    const auto r = models::orthogonal_model_integral(a, c.rho, cuts);
    j["report"] = parse_report(models::to_json(r));
    j["value"] = r.divergent ? json(nullptr) : json(r.value);
    j["closed_form"] = r.divergent ? json(nullptr) : json(r.closed_form);
    j["divergent"] = r.divergent;
    j["scan"] = fit_rows(models::orthogonal_model_scan(a, c.rho, cuts), c);
    return j;
  }
  if (cuts.empty()) cuts = models::geometric_cutoffs(1e-2, 1e-4, 5);
  if (c.model_kind == "tangent") {
    if (!(c.rho > 0.0 && c.rho <= 1.0)) config_error("tangent model needs 0 < --rho <= 1");
    j["rho"] = c.rho;
    const auto f = models::tangent_model_scan(a, c.rho, cuts);
    j["finite"] = a > -3.0;
    // the inner hole makes the integrand regular; the full value is the
    // extrapolated limit of the scan
    j["value"] = a > -3.0 && !f.divergent() ? json(f.limit) : json(nullptr);
    j["predicted_exponent"] = 2.0 * a + 6.0;
    j["scan"] = fit_rows(f, c);
    return j;
  }
  if (c.model_kind == "cone") {
    const auto f = models::cone_model_scan(a, cuts);
    j["finite"] = a > -4.0;
    j["value"] = a > -4.0 ? json(models::cone_model_value(a, 0.0)) : json(nullptr);
    j["predicted_exponent"] = a + 4.0;
    j["scan"] = fit_rows(f, c);
    return j;
  }
  config_error("model kind must be orthogonal, tangent or cone");
}

json run_sweep(const Config& c) {
  if (!c.alpha) config_error("sweep needs --alpha");
  models::ContactKind kind;
  if (c.kind == "transversal")
    kind = models::ContactKind::transversal;
  else if (c.kind == "tangential")
    kind = models::ContactKind::tangential;
  else
    config_error("--kind must be transversal or tangential");
  const auto given = parse_list(c.deltas, "--deltas");
  const auto deltas = given.empty() ? models::default_deltas() : given;
  const auto rep = models::two_body_sweep(c.m, *c.alpha, c.radius, deltas, kind);
  if (!c.csv.empty()) write_text(c.csv, models::to_csv(rep));
  if (!c.plot.empty()) {
    std::vector<double> x, y;
    for (const auto& r : rep.rows) {
      x.push_back(r.delta);
      y.push_back(r.energy);
    }
    write_text(c.plot, two_column("delta", "energy", x, y));
  }
  json j;
  j["command"] = "sweep";
  j["report"] = parse_report(models::to_json(rep));
  return j;
}

// Smooth random radial perturbation 1 + amp * f of every vertex about the
// centroid; f is a random quadratic in the unit direction scaled to |f| <= 1.
TriMesh perturb_mesh(const TriMesh& mesh, double amp, std::uint64_t seed) {
  if (amp == 0.0) return mesh;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = mesh.ambient();
  Vec lin(n);
  Mat quad(n, n);
  for (int i = 0; i < n; ++i) lin[i] = u(rng);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) quad(i, k) = u(rng);
  quad = 0.5 * (quad + quad.transpose());
  const double scale = lin.cwiseAbs().sum() + quad.cwiseAbs().sum();
  Vec centroid = Vec::Zero(n);
  for (const auto& v : mesh.vertices()) centroid += v;
  centroid /= static_cast<double>(mesh.vertex_count());
  auto verts = mesh.vertices();
  for (auto& v : verts) {
    const Vec d = v - centroid;
    const double r = d.norm();
    if (r == 0.0) continue;
    const Vec e = d / r;
    v = centroid + d * (1.0 + amp * (lin.dot(e) + e.dot(quad * e)) / scale);
  }
  return mesh.with_vertices(std::move(verts));
}

json run_flow(const Config& c) {
  require_energy(c);
  if (c.steps < 0) config_error("--steps must be non-negative");
  Surface s = make_surface(c.surface);
  const auto* mesh = std::get_if<TriMesh>(&s);
  if (!mesh) fail(ErrorKind::unsupported, "flow needs a mesh surface");
  const TriMesh start = perturb_mesh(*mesh, c.perturb, c.seed);
  flow::FlowEnergy e;
  if (c.ks) {
    e.kind = flow::FlowEnergy::Kind::ks;
  } else if (c.as_s) {
    e.kind = flow::FlowEnergy::Kind::as;
    e.s = *c.as_s;
  } else {
    e.kind = flow::FlowEnergy::Kind::riesz;
    e.params = riesz::EnergyParams(*c.alpha, start.dim());
  }
  e.options.eps0 = c.eps0;
  auto st = flow::make_state(start, e);
  if (!c.initial_off.empty()) geometry::write_off(st.mesh, c.initial_off);
  st = flow::run_flow(st, c.steps);
  if (!c.final_off.empty()) geometry::write_off(st.mesh, c.final_off);
  const std::string csv = flow::trajectory_csv(st);
  if (!c.trajectory.empty()) write_text(c.trajectory, csv);
  if (!c.csv.empty()) write_text(c.csv, csv);
  if (!c.plot.empty()) {
    std::vector<double> x, y;
    for (const auto& r : st.trajectory) {
      x.push_back(r.iteration);
      y.push_back(r.energy);
    }
    write_text(c.plot, two_column("iteration", "energy", x, y));
  }
  json j;
  j["command"] = "flow";
  j["perturb"] = c.perturb;
  j["seed"] = c.seed;
  j["state"] = parse_report(flow::to_json(st));
  j["contact"] = parse_report(flow::to_json(flow::contact_monitor(st, c.ceiling)));
  return j;
}

json run_invariance(const Config& c) {
  require_order(c.order, 4, "--order");
  require_order(c.refined_order, c.order + 1, "--refined-order");
  if (c.alpha) fail(ErrorKind::unsupported, "invariance checks apply to --ks or --as");
  if (c.ks && c.as_s) config_error("select one of --ks, --as");
  moebius::EnergySelector sel;
  if (c.as_s) {
    sel.kind = moebius::EnergySelector::Kind::as;
    sel.s = *c.as_s;
  }
  const Surface s = make_surface(c.surface);
  moebius::MoebiusMap map;
  const int n = geometry::ambient(s);
  if (c.map == "inversion")
    map.kind = moebius::MapKind::inversion;
  else if (c.map == "similarity")
    map.kind = moebius::MapKind::similarity;
  else
    config_error("--map must be inversion or similarity");
  const auto center = parse_list(c.center, "--center");
  if (center.empty()) {
    map.center = Vec::Zero(n);
    if (map.kind == moebius::MapKind::inversion) map.center[0] = 2.0;
  } else {
    if (static_cast<int>(center.size()) != n)
      config_error("--center needs " + std::to_string(n) + " coordinates");
    map.center = Eigen::Map<const Vec>(center.data(), n);
  }
  map.radius = c.map_radius;
  moebius::InvarianceConfig cfg;
  cfg.order = c.order;
  cfg.refined_order = c.refined_order;
  if (!c.refined.empty()) cfg.refined = make_surface(c.refined);
  const auto rep = moebius::moebius_invariance_check(s, map, sel, cfg);
  json j;
  j["command"] = "invariance";
  j["surface"] = geometry::describe(s);
  j["report"] = parse_report(moebius::to_json(rep));
  return j;
}

json run_validate(const Config& c) {
  const Surface s = make_surface(c.surface);
  geometry::PatchClassParams p;
  p.k = c.patch_k;
  p.eps0 = c.patch_eps0;
  p.b = c.patch_b;
  p.volume = c.patch_volume;
  const auto rep = geometry::validate_patch_class(s, p);
  json j;
  j["command"] = "validate";
  j["surface"] = geometry::describe(s);
  j["params"] = {{"k", p.k}, {"eps0", p.eps0}, {"b", p.b}, {"volume", p.volume}};
  j["pass"] = rep.pass;
  j["patches_ok"] = rep.patches_ok;
  j["bounds_ok"] = rep.bounds_ok;
  j["volume_ok"] = rep.volume_ok;
  j["volume"] = rep.volume;
  j["max_bound"] = rep.max_bound;
  j["max_fit_residual"] = rep.max_fit_residual;
  j["min_validated_radius"] = rep.min_validated_radius;
  j["samples"] = rep.samples;
  j["euler_characteristic"] = geometry::euler_characteristic(s);
  auto v = json::array();
  for (const auto& x : rep.violations) {
    std::vector<double> pt(x.point.data(), x.point.data() + x.point.size());
    v.push_back({{"index", x.index}, {"point", pt}, {"reason", x.reason}});
  }
  j["violations"] = v;
  return j;
}

// ---- argument handling ----

const std::vector<std::string> kCommands = {"energy", "beta",       "model",   "sweep",
                                            "flow",   "invariance", "validate"};

bool is_command(const std::string& s) {
  return std::find(kCommands.begin(), kCommands.end(), s) != kCommands.end();
}

// JSON config entries become --key=value tokens placed before the user's
// own flags, so flags given on the command line win.
std::vector<std::string> config_tokens(const json& cfg) {
  std::vector<std::string> out;
  for (const auto& [key, value] : cfg.items()) {
    if (key == "command" || key == "model") continue;
    const std::string flag = "--" + key;
    if (value.is_boolean()) {
      if (value.get<bool>()) out.push_back(flag);
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& x : value) {
        if (!x.is_number()) config_error("config '" + key + "' must be a list of numbers");
        if (!joined.empty()) joined += ',';
        joined += fmt17(x.get<double>());
      }
      out.push_back(flag + "=" + joined);
    } else if (value.is_string()) {
      out.push_back(flag + "=" + value.get<std::string>());
    } else if (value.is_number_integer() || value.is_number_unsigned()) {
      out.push_back(flag + "=" + value.dump());
    } else if (value.is_number()) {
      out.push_back(flag + "=" + fmt17(value.get<double>()));
    } else {
      config_error("config '" + key + "' has an unsupported value");
    }
  }
  return out;
}

std::vector<std::string> expand_arguments(std::vector<std::string> args) {
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
  }
  if (config_path.empty()) return args;
  std::ifstream in(config_path);
  if (!in) config_error("config file '" + config_path + "' does not exist");
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::parse_error& e) {
    config_error("config file '" + config_path + "': " + e.what());
  }
  if (!cfg.is_object()) config_error("config file must hold a JSON object");
  std::size_t pos = 0;
  while (pos < args.size() && !is_command(args[pos])) ++pos;
  if (pos == args.size()) {
    if (!cfg.contains("command") || !cfg["command"].is_string())
      config_error("no command given on the command line or in the config file");
    std::vector<std::string> head{cfg["command"].get<std::string>()};
    if (head[0] == "model" && cfg.contains("model") && cfg["model"].is_string())
      head.push_back(cfg["model"].get<std::string>());
    args.insert(args.begin(), head.begin(), head.end());
    pos = 0;
  }
  std::size_t insert_at = pos + 1;
  if (args[pos] == "model") {
    bool has_kind = false;
    for (std::size_t i = insert_at; i < args.size(); ++i)
      has_kind = has_kind || args[i] == "orthogonal" || args[i] == "tangent" || args[i] == "cone";
    if (!has_kind && cfg.contains("model") && cfg["model"].is_string())
      args.insert(args.begin() + insert_at++, cfg["model"].get<std::string>());
  }
  const auto extra = config_tokens(cfg);
  args.insert(args.begin() + insert_at, extra.begin(), extra.end());
  return args;
}

void add_common(CLI::App* sub, Config& c) {
  sub->add_option("--output,-o", c.output, "write the JSON report here as well as to stdout");
  sub->add_option("--seed", c.seed, "random seed");
}

void add_surface(CLI::App* sub, Config& c, bool required = true) {
  auto* o = sub->add_option("--surface", c.surface, std::string("surface: ") + kCatalog);
  if (required) o->required();
}

void add_energy(CLI::App* sub, Config& c) {
  sub->add_option("--alpha", c.alpha, "Riesz exponent");
  sub->add_flag("--ks", c.ks, "Kusner-Sullivan energy");
  sub->add_option("--as", c.as_s, "Auckly-Sadun energy with parameter s");
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  Config c;
  CLI::App app{"Regularized Riesz, Kusner-Sullivan and Auckly-Sadun energies"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file; flags override its entries");
  app.add_option("--threads", c.threads, "worker cap (RIESZ_LAB_THREADS when unset)")
      ->check(CLI::NonNegativeNumber);
  app.fallthrough();

  auto* energy = app.add_subcommand("energy", "regularized energy of a surface");
  add_surface(energy, c);
  add_energy(energy, c);
  energy->add_option("--order", c.order, "chart rule order");
  energy->add_option("--eps0", c.eps0, "near-ball radius (0: default)");
  add_common(energy, c);

  auto* beta = app.add_subcommand("beta", "beta function value (finite part at poles)");
  add_surface(beta, c);
  beta->add_option("--z", c.z, "exponent")->required();
  beta->add_option("--order", c.order, "chart rule order");
  beta->add_option("--eps0", c.eps0, "near-ball radius (0: default)");
  add_common(beta, c);

  auto* model = app.add_subcommand("model", "model integrals of double points");
  model->add_option("kind", c.model_kind, "orthogonal, tangent or cone")
      ->required()
      ->check(CLI::IsMember({"orthogonal", "tangent", "cone"}));
  model->add_option("--alpha", c.alpha, "Riesz exponent")->required();
  model->add_option("--rho", c.rho, "disc radius (orthogonal) or outer radius (tangent)");
  model->add_option("--cutoffs", c.cutoffs, "decreasing cutoffs, comma separated");
  model->add_option("--csv", c.csv, "cutoff scan CSV");
  model->add_option("--plot", c.plot, "cutoff scan two-column data");
  add_common(model, c);

  auto* sweep = app.add_subcommand("sweep", "two-body gap sweep");
  sweep->add_option("--m", c.m, "sphere dimension");
  sweep->add_option("--alpha", c.alpha, "Riesz exponent")->required();
  sweep->add_option("--radius", c.radius, "sphere radius");
  sweep->add_option("--deltas", c.deltas, "gaps, comma separated");
  sweep->add_option("--kind", c.kind, "transversal or tangential");
  sweep->add_option("--csv", c.csv, "alpha,delta,energy,lambda_bound_sum table");
  sweep->add_option("--plot", c.plot, "delta energy two-column data");
  add_common(sweep, c);

  auto* flow = app.add_subcommand("flow", "gradient flow of a mesh");
  add_surface(flow, c);
  add_energy(flow, c);
  flow->add_option("--steps", c.steps, "number of flow steps");
  flow->add_option("--perturb", c.perturb, "random smooth radial perturbation amplitude");
  flow->add_option("--eps0", c.eps0, "near-ball radius for E_alpha and AS (0: default)");
  flow->add_option("--ceiling", c.ceiling, "contact monitor energy ceiling");
  flow->add_option("--trajectory,--csv", c.trajectory, "trajectory CSV");
  flow->add_option("--plot", c.plot, "iteration energy two-column data");
  flow->add_option("--initial-off", c.initial_off, "initial mesh (OFF)");
  flow->add_option("--final-off", c.final_off, "final mesh (OFF)");
  add_common(flow, c);

  auto* inv = app.add_subcommand("invariance", "Moebius invariance check");
  add_surface(inv, c);
  add_energy(inv, c);
  inv->add_option("--refined", c.refined, "finer discretization of the same surface");
  inv->add_option("--map", c.map, "inversion or similarity");
  inv->add_option("--center", c.center, "inversion center or similarity shift, x,y,z");
  inv->add_option("--radius", c.map_radius, "inversion radius or similarity scale");
  inv->add_option("--order", c.order, "chart rule order");
  inv->add_option("--refined-order", c.refined_order, "chart rule order of the refinement");
  add_common(inv, c);

  auto* val = app.add_subcommand("validate", "patch-class check");
  add_surface(val, c);
  val->add_option("--k", c.patch_k, "smoothness order");
  val->add_option("--eps0", c.patch_eps0, "patch radius");
  val->add_option("--b", c.patch_b, "derivative bound");
  val->add_option("--volume", c.patch_volume, "volume bound");
  add_common(val, c);

  args = expand_arguments(args);
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    config_error(e.what());
  }
  if (c.threads > 0) set_thread_count(c.threads);
  const CLI::App* sub = app.get_subcommands().front();
  c.command = sub->get_name();
  json report;
  if (c.command == "energy") report = run_energy(c);
  if (c.command == "beta") report = run_beta(c);
  if (c.command == "model") report = run_model(c);
  if (c.command == "sweep") report = run_sweep(c);
  if (c.command == "flow") report = run_flow(c);
  if (c.command == "invariance") report = run_invariance(c);
  if (c.command == "validate") report = run_validate(c);
  const std::string text = report.dump(2) + "\n";
  if (!c.output.empty()) write_text(c.output, text);
  std::cout << text;
  return 0;
}

void print_error(const std::string& kind, const std::string& message, int code) {
  json j;
  j["error"] = {{"kind", kind}, {"message", message}, {"exit_code", code}};
  std::cout << j.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    const int code = exit_code(e.kind());
    print_error(to_string(e.kind()), e.what(), code);
    return code;
  } catch (const json::exception& e) {
    print_error("config", e.what(), kExitConfig);
    return kExitConfig;
  } catch (const std::exception& e) {
    print_error("numerical", e.what(), kExitNumerical);
    return kExitNumerical;
  }
}
