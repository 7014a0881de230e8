#ifndef RIESZLAB_FLOW_HPP
#define RIESZLAB_FLOW_HPP

#include "rieszlab/geometry/mesh.hpp"
#include "rieszlab/riesz.hpp"

#include <string>
#include <vector>

namespace rieszlab::flow {

using geometry::TriMesh;

struct FlowEnergy {
  enum class Kind { riesz, ks, as } kind = Kind::ks;
  riesz::EnergyParams params;  // riesz only
  double s = 0.0;              // AS parameter
  riesz::EnergyOptions options;  // riesz and AS
};

std::string to_string(const FlowEnergy& e);

struct TrajectoryRow {
  int iteration = 0;
  double energy = 0.0;
  double step_size = 0.0;
  double min_distance = 0.0;
};

struct FlowOptions {
  // Largest vertex displacement of a trial step, in mean edge lengths.
  double initial_step = 0.05;
  // An accepted step grows the next trial step by this factor, up to
  // max_step mean edge lengths.
  double growth = 2.0;
  double max_step = 0.25;
  int max_halvings = 20;
  // Armijo constant of the sufficient-decrease test.
  double armijo = 1e-4;
  // Stationary when max_k |g_k| times the vertex diameter is at most this
  // (an absolute energy scale).
  double gradient_tolerance = 1e-6;
  double fd_relative_step = 1e-5;  // h_fd = this times the vertex diameter
};

struct FlowState {
  TriMesh mesh;
  FlowEnergy energy;
  double step = 0.0;  // current trial displacement (absolute length)
  int iteration = 0;
  double value = 0.0;  // energy of `mesh`
  bool stationary = false;
  std::string status = "running";
  std::vector<TrajectoryRow> trajectory;
};

/// Energy of the mesh. KS and AS need a closed surface in R^3.
double energy_value(const TriMesh& mesh, const FlowEnergy& energy);

/// Initial state: evaluates the energy and records trajectory row 0. An
/// unset eps0 of E_alpha and AS is frozen at the default of the initial mesh
/// so the flow follows one discrete functional.
FlowState make_state(const TriMesh& mesh, const FlowEnergy& energy,
                     const FlowOptions& opt = {});

/// Central finite differences with step h_fd along three directions per
/// vertex, one vertex per task. On surfaces in R^3 the directions are the
/// vertex normal and two tangents fixed by the first neighbor, so the
/// gradient moves with rigid motions of the mesh. KS perturbations only
/// recompute the node data of the 2-ring of the moved vertex.
std::vector<Vec> energy_gradient(const TriMesh& mesh, const FlowEnergy& energy,
                                 const FlowOptions& opt = {});
std::vector<Vec> energy_gradient(const FlowState& state, const FlowOptions& opt = {});

/// One descent step x - t g with backtracking. A trial is accepted when the
/// energy decreases by at least armijo * t |g|^2 and no face normal flips
/// against the current mesh. Without an accepted trial the state is marked
/// stationary and returned unchanged.
FlowState flow_step(const FlowState& state, const FlowOptions& opt = {});

/// Runs up to `steps` steps or until stationary.
FlowState run_flow(const FlowState& state, int steps, const FlowOptions& opt = {});

/// Largest distance between two vertices; unlike the bounding-box diagonal
/// it is invariant under rotations.
double vertex_diameter(const TriMesh& mesh);

/// Smallest distance between vertices that do not share a face.
double min_nonadjacent_distance(const TriMesh& mesh);

struct ContactReport {
  double min_distance = 0.0;
  double energy = 0.0;
  double ceiling = 0.0;
  bool shrinking = false;  // min distance below the previous trajectory row
  bool flagged = false;    // energy above the ceiling while shrinking
};

ContactReport contact_monitor(const FlowState& state, double ceiling);

/// iteration,energy,step_size,min_distance with a header line.
std::string trajectory_csv(const FlowState& state);
std::string to_json(const FlowState& state);
std::string to_json(const ContactReport& r);

}  // namespace rieszlab::flow

#endif
