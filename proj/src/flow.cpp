#include "rieszlab/flow.hpp"

#include "rieszlab/moebius.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace rieszlab::flow {

using moebius::KSNode;

std::string to_string(const FlowEnergy& e) {
  std::ostringstream os;
  os << std::setprecision(17);
  switch (e.kind) {
    case FlowEnergy::Kind::riesz: os << "riesz(alpha=" << e.params.alpha << ")"; break;
    case FlowEnergy::Kind::ks: os << "ks"; break;
    case FlowEnergy::Kind::as: os << "as(s=" << e.s << ")"; break;
  }
  return os.str();
}

double energy_value(const TriMesh& mesh, const FlowEnergy& energy) {
  const geometry::Surface s = mesh;
  switch (energy.kind) {
    case FlowEnergy::Kind::riesz: {
      auto opt = energy.options;
      opt.estimate_error = false;
      riesz::EnergyParams p(energy.params.alpha, mesh.dim());
      return riesz::riesz_energy(s, p, opt).value;
    }
    case FlowEnergy::Kind::ks: {
      moebius::KSOptions opt;
      opt.estimate_error = false;
      return moebius::ks_energy(s, opt).value;
    }
    case FlowEnergy::Kind::as: {
      auto opt = energy.options;
      opt.estimate_error = false;
      return moebius::as_energy(s, energy.s, opt).value;
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double vertex_diameter(const TriMesh& mesh) {
  const auto& v = mesh.vertices();
  double best = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size(); ++j) best = std::max(best, (v[i] - v[j]).norm());
  return best;
}

double min_nonadjacent_distance(const TriMesh& mesh) {
  const auto& v = mesh.vertices();
  const auto& nb = mesh.neighbors();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size(); ++j) {
      if (std::binary_search(nb[i].begin(), nb[i].end(), static_cast<int>(j))) continue;
      best = std::min(best, (v[i] - v[j]).norm());
    }
  return best;
}

FlowState make_state(const TriMesh& mesh, const FlowEnergy& energy, const FlowOptions& opt) {
  require(mesh.dim() == 2 || energy.kind == FlowEnergy::Kind::riesz, ErrorKind::unsupported,
          "flow: KS and AS need a surface mesh");
  geometry::check_closed(mesh);
  FlowState st;
  st.mesh = mesh;
  st.energy = energy;
  if (energy.kind != FlowEnergy::Kind::ks && st.energy.options.eps0 <= 0.0)
    st.energy.options.eps0 = riesz::default_eps0(geometry::Surface(mesh), st.energy.options.order);
  st.step = opt.initial_step * mesh.mean_edge_length();
  st.value = energy_value(mesh, st.energy);
  require(std::isfinite(st.value), ErrorKind::numerical, "flow: initial energy is not finite");
  st.trajectory.push_back({0, st.value, 0.0, min_nonadjacent_distance(mesh)});
  return st;
}

namespace {

// Differencing directions at vertex k: the vertex normal and two tangents
// from its first neighbor on surfaces in R^3, so the difference stencil moves
// rigidly with the mesh; the coordinate axes otherwise.
Mat stencil_frame(const TriMesh& mesh, int k) {
  const int n = mesh.ambient();
  if (mesh.dim() != 2 || n != 3) return Mat::Identity(n, n);
  const Eigen::Vector3d nrm = mesh.vertex_normal(k);
  const Eigen::Vector3d edge = mesh.vertices()[mesh.neighbors()[k].front()] - mesh.vertices()[k];
  const Eigen::Vector3d t1 = (edge - edge.dot(nrm) * nrm).normalized();
  Mat f(3, 3);
  f.col(0) = t1;
  f.col(1) = nrm.cross(t1);
  f.col(2) = nrm;
  return f;
}

std::vector<KSNode> ks_nodes(const TriMesh& mesh, const std::vector<int>& labels) {
  std::vector<KSNode> out(mesh.vertex_count());
  parallel_for(out.size(), [&](std::size_t v) {
    out[v] = moebius::ks_mesh_node(mesh, static_cast<int>(v), labels[v]);
  });
  return out;
}

// Change of Σ_i Σ_j w_i w_j F(i, j) when the nodes in `moved` are replaced
// by `fresh`. `rows` holds Σ_j w_j F(i, j) of the unperturbed nodes.
double ks_delta(const std::vector<KSNode>& nodes, const std::vector<double>& rows,
                const std::vector<int>& moved, const std::vector<KSNode>& fresh,
                const std::vector<char>& in_moved) {
  const std::size_t n = nodes.size();
  CompensatedSum d;
  for (std::size_t a = 0; a < moved.size(); ++a) {
    const KSNode& na = fresh[a];
    CompensatedSum row;
    for (std::size_t j = 0; j < n; ++j)
      if (!in_moved[j]) row.add(nodes[j].w * moebius::ks_pair(na, nodes[j]));
    for (std::size_t b = 0; b < moved.size(); ++b) row.add(fresh[b].w * moebius::ks_pair(na, fresh[b]));
    d.add(na.w * row.value());
    d.add(-nodes[moved[a]].w * rows[moved[a]]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (in_moved[i]) continue;
    CompensatedSum col;
    for (std::size_t a = 0; a < moved.size(); ++a) {
      col.add(fresh[a].w * moebius::ks_pair(nodes[i], fresh[a]));
      col.add(-nodes[moved[a]].w * moebius::ks_pair(nodes[i], nodes[moved[a]]));
    }
    d.add(nodes[i].w * col.value());
  }
  return d.value();
}

[[noreturn]] void gradient_failure(int vertex, const Error& e) {
  fail(ErrorKind::numerical, "energy_gradient: evaluation failed with vertex " +
                                 std::to_string(vertex) + " perturbed: " + e.what());
}

std::vector<Vec> ks_gradient(const TriMesh& mesh, double h) {
  geometry::check_closed(mesh);
  require(mesh.dim() == 2 && mesh.ambient() == 3, ErrorKind::unsupported,
          "KS gradient needs a surface in R^3");
  const auto labels = mesh.component_labels();
  const auto nodes = ks_nodes(mesh, labels);
  const std::size_t nv = nodes.size();
  std::vector<double> rows(nv);
  parallel_for(nv, [&](std::size_t i) {
    CompensatedSum s;
    for (std::size_t j = 0; j < nv; ++j) s.add(nodes[j].w * moebius::ks_pair(nodes[i], nodes[j]));
    rows[i] = s.value();
  });
  std::vector<Vec> grad(nv, Vec::Zero(mesh.ambient()));
  parallel_for(nv, [&](std::size_t k) {
    const auto moved = mesh.ring(static_cast<int>(k), 2);
    std::vector<char> in_moved(nv, 0);
    for (int a : moved) in_moved[a] = 1;
    auto verts = mesh.vertices();
    const Mat frame = stencil_frame(mesh, static_cast<int>(k));
    for (int c = 0; c < mesh.ambient(); ++c) {
      double delta[2];
      for (int sgn = 0; sgn < 2; ++sgn) {
        verts[k] = mesh.vertices()[k] + (sgn == 0 ? h : -h) * frame.col(c);
        try {
          const TriMesh trial = mesh.with_vertices(verts);
          std::vector<KSNode> fresh(moved.size());
          for (std::size_t a = 0; a < moved.size(); ++a)
            fresh[a] = moebius::ks_mesh_node(trial, moved[a], labels[moved[a]]);
          delta[sgn] = ks_delta(nodes, rows, moved, fresh, in_moved);
        } catch (const Error& e) {
          gradient_failure(static_cast<int>(k), e);
        }
      }
      grad[k] += (delta[0] - delta[1]) / (2.0 * h) * frame.col(c);
    }
  });
  return grad;
}

// Full re-evaluation per perturbation; the energy evaluation is parallel
// itself, so vertices are visited in order.
std::vector<Vec> full_gradient(const TriMesh& mesh, const FlowEnergy& energy, double h) {
  std::vector<Vec> grad(mesh.vertex_count(), Vec::Zero(mesh.ambient()));
  auto verts = mesh.vertices();
  for (std::size_t k = 0; k < verts.size(); ++k) {
    const Mat frame = stencil_frame(mesh, static_cast<int>(k));
    for (int c = 0; c < mesh.ambient(); ++c) {
      double e[2];
      for (int sgn = 0; sgn < 2; ++sgn) {
        verts[k] = mesh.vertices()[k] + (sgn == 0 ? h : -h) * frame.col(c);
        try {
          e[sgn] = energy_value(mesh.with_vertices(verts), energy);
        } catch (const Error& err) {
          gradient_failure(static_cast<int>(k), err);
        }
      }
      grad[k] += (e[0] - e[1]) / (2.0 * h) * frame.col(c);
    }
    verts[k] = mesh.vertices()[k];
  }
  return grad;
}

double max_norm(const std::vector<Vec>& g) {
  double m = 0.0;
  for (const auto& v : g) m = std::max(m, v.norm());
  return m;
}

bool faces_flip(const TriMesh& before, const TriMesh& after) {
  if (before.dim() != 2 || before.ambient() != 3) return false;
  const auto& vb = before.vertices();
  const auto& va = after.vertices();
  for (const auto& f : before.faces()) {
    const Eigen::Vector3d b0 = vb[f[0]], b1 = vb[f[1]], b2 = vb[f[2]];
    const Eigen::Vector3d a0 = va[f[0]], a1 = va[f[1]], a2 = va[f[2]];
    if ((b1 - b0).cross(b2 - b0).dot((a1 - a0).cross(a2 - a0)) <= 0.0) return true;
  }
  return false;
}

}  // namespace

std::vector<Vec> energy_gradient(const TriMesh& mesh, const FlowEnergy& energy,
                                 const FlowOptions& opt) {
  const double h = opt.fd_relative_step * vertex_diameter(mesh);
  require(h > 0.0, ErrorKind::precondition, "energy_gradient: degenerate mesh extent");
  if (energy.kind == FlowEnergy::Kind::ks) return ks_gradient(mesh, h);
  return full_gradient(mesh, energy, h);
}

std::vector<Vec> energy_gradient(const FlowState& state, const FlowOptions& opt) {
  return energy_gradient(state.mesh, state.energy, opt);
}

FlowState flow_step(const FlowState& state, const FlowOptions& opt) {
  FlowState next = state;
  if (state.stationary) return next;
  const auto g = energy_gradient(state.mesh, state.energy, opt);
  const double gmax = max_norm(g);
  double g2 = 0.0;
  for (const auto& v : g) g2 += v.squaredNorm();
  if (gmax * vertex_diameter(state.mesh) <= opt.gradient_tolerance) {
    next.stationary = true;
    next.status = "stationary: gradient below tolerance";
    return next;
  }
  const double edge = state.mesh.mean_edge_length();
  double disp = state.step > 0.0 ? state.step : opt.initial_step * edge;
  for (int attempt = 0; attempt <= opt.max_halvings; ++attempt, disp *= 0.5) {
    const double t = disp / gmax;
    std::vector<Vec> verts = state.mesh.vertices();
    for (std::size_t k = 0; k < verts.size(); ++k) verts[k] -= t * g[k];
    double value;
    TriMesh trial;
    try {
      trial = state.mesh.with_vertices(std::move(verts));
      if (faces_flip(state.mesh, trial)) continue;
      value = energy_value(trial, state.energy);
    } catch (const Error&) {
      continue;
    }
    if (!std::isfinite(value) || !(value < state.value) ||
        value > state.value - opt.armijo * t * g2)
      continue;
    next.mesh = std::move(trial);
    next.value = value;
    next.iteration = state.iteration + 1;
    next.step = std::min(disp * opt.growth, opt.max_step * edge);
    next.trajectory.push_back({next.iteration, value, disp, min_nonadjacent_distance(next.mesh)});
    return next;
  }
  next.stationary = true;
  next.status = "stationary: no decreasing step";
  return next;
}

FlowState run_flow(const FlowState& state, int steps, const FlowOptions& opt) {
  FlowState st = state;
  for (int i = 0; i < steps && !st.stationary; ++i) st = flow_step(st, opt);
  if (!st.stationary) st.status = "step limit";
  return st;
}

ContactReport contact_monitor(const FlowState& state, double ceiling) {
  ContactReport r;
  r.min_distance = min_nonadjacent_distance(state.mesh);
  r.energy = state.value;
  r.ceiling = ceiling;
  const std::size_t n = state.trajectory.size();
  if (n >= 2) r.shrinking = state.trajectory[n - 1].min_distance < state.trajectory[n - 2].min_distance;
  r.flagged = r.shrinking && r.energy > ceiling;
  return r;
}

std::string trajectory_csv(const FlowState& state) {
  std::ostringstream os;
  os << std::setprecision(17) << "iteration,energy,step_size,min_distance\n";
  for (const auto& row : state.trajectory)
    os << row.iteration << ',' << row.energy << ',' << row.step_size << ',' << row.min_distance
       << '\n';
  return os.str();
}

std::string to_json(const FlowState& state) {
  nlohmann::json j;
  j["energy"] = to_string(state.energy);
  j["iteration"] = state.iteration;
  j["value"] = state.value;
  j["step"] = state.step;
  j["stationary"] = state.stationary;
  j["status"] = state.status;
  j["vertices"] = state.mesh.vertex_count();
  auto rows = nlohmann::json::array();
  for (const auto& r : state.trajectory)
    rows.push_back({{"iteration", r.iteration},
                    {"energy", r.energy},
                    {"step_size", r.step_size},
                    {"min_distance", r.min_distance}});
  j["trajectory"] = rows;
  return j.dump(2);
}

std::string to_json(const ContactReport& r) {
  nlohmann::json j;
  j["min_distance"] = r.min_distance;
  j["energy"] = r.energy;
  j["ceiling"] = r.ceiling;
  j["shrinking"] = r.shrinking;
  j["flagged"] = r.flagged;
  return j.dump(2);
}

}  // namespace rieszlab::flow
