#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "phases/graphon.hpp"

namespace phases {

struct OptimizerOptions {
  std::uint64_t seed = 1;
  /// Random starts, in addition to closed-form and warm-start candidates.
  int starts = 40;
  bool closed_form_starts = true;
  double feasibility_tol = 1e-8;
  /// Block values stay in [value_floor, 1 - value_floor] during ascent.
  double value_floor = 1e-9;
  double initial_penalty = 1e5;
  double penalty_growth = 5.0;
  int max_rounds = 12;
  int max_inner_iterations = 400;
  double merge_tol = 1e-4;
  /// Two starts share a basin when their canonical forms agree to this.
  double basin_tol = 1e-3;
  double symmetry_tol = 1e-3;
  double escalation_tol = 1e-7;
  int max_podality = 6;
  int threads = 1;
  DensityCaps caps{};
  /// Extra starting graphons (any podality up to m; padded by splitting).
  std::vector<StepGraphon> warm_starts;
};

struct OptimizerFlags {
  bool symmetric_bipodal = false;
  bool constant = false;
};

/// Best basin of a multistart constrained ascent.
struct OptimizerResult {
  bool feasible = false;
  StepGraphon graphon = StepGraphon::constant(0.0);
  /// Entropy of the canonical graphon (the objective for entropy runs).
  double entropy = 0.0;
  /// Objective value; equals entropy unless a density objective was used.
  double objective = 0.0;
  std::vector<double> residuals;
  int podality = 1;
  /// Podality searched (before canonical merging).
  int searched_podality = 1;
  OptimizerFlags flags;
  /// Objective gap to the best distinct basin; empty if every start landed
  /// in the same basin.
  std::optional<double> multistart_spread;
  int feasible_starts = 0;
  int total_starts = 0;
};

/// Maximize the graphon entropy over m-podal graphons subject to t(q) = alpha.
OptimizerResult maximize_entropy(const ConstraintVector& constraints, int m,
                                 const OptimizerOptions& opts = {});

/// Escalates m = 1, 2, ... until two consecutive podalities gain less than
/// opts.escalation_tol; reports the smallest podality reaching the optimum.
OptimizerResult constrained_entropy(const ConstraintVector& constraints,
                                    const OptimizerOptions& opts = {});

/// Maximize a density functional instead of the entropy.
OptimizerResult maximize_density(const SubgraphPattern& objective,
                                 const ConstraintVector& constraints, int m,
                                 const OptimizerOptions& opts = {});

/// Closed-form edge/triangle candidate. Below the Erdos-Renyi curve it is the
/// equal-mass bipodal graphon with values eps -+ (eps^3 - tau)^(1/3); above it
/// the symmetric bipodal root of a + d = 2 eps, a^3 + 3 a d^2 = 4 tau while
/// that has d >= 0, and otherwise a clique-with-spectators graphon.
StepGraphon reference_construction(double eps, double tau);

/// Unique a in [eps, 2 eps] with 4a^3 - 12 eps a^2 + 12 eps^2 a = 4 tau, by
/// bisection on the monotone cubic.
double symmetric_bipodal_root(double eps, double tau);

/// Largest t1 subject to t2 = 0 over m-podal graphons.
double bounded_signed_max(const SubgraphPattern& objective, const SubgraphPattern& zero_constraint,
                          int m, const OptimizerOptions& opts = {});

// ---------------------------------------------------------------------------
// Parameterization used by the ascent; exposed for gradient tests.

/// Coordinates: m softmax logits for the masses followed by the upper-triangular
/// block values, which live in the box [value_floor, 1 - value_floor].
struct GraphonParameters {
  std::size_t m = 0;
  std::vector<double> x;

  static GraphonParameters from_graphon(const StepGraphon& q, double value_floor);
  StepGraphon to_graphon(double value_floor) const;
  std::size_t size() const { return x.size(); }
};

/// Chain rule from (mass, full-matrix value) partials to parameter space.
std::vector<double> chain_to_parameters(const GraphonParameters& params,
                                        const DensityGradient& grad, double value_floor);

// ---------------------------------------------------------------------------
// Phase scans

struct ModelSpec {
  std::string name;
  SubgraphPattern first;
  SubgraphPattern second;

  /// edge-triangle, edge-kstar:K, half-blip
  static ModelSpec from_name(const std::string& name);
};

struct ScanGrid {
  double x_min = 0.0, x_max = 0.0;
  double y_min = 0.0, y_max = 0.0;
  int nx = 1, ny = 1;
  /// When set, y is an offset from the Erdos-Renyi curve x^e, where e is the
  /// number of edges of the second pattern.
  bool y_relative_to_er = false;
};

struct ScanOptions {
  OptimizerOptions optimizer{};
  double spike_factor = 10.0;
};

struct PhaseCell {
  int ix = 0, iy = 0;
  double x = 0.0, y = 0.0;
  bool feasible = false;
  std::string error;
  std::optional<OptimizerResult> result;
  /// Canonical parameters padded to the map-wide podality.
  std::vector<double> params;
  double d_x = 0.0, d_y = 0.0;
  double derivative_norm = 0.0;
  bool transition = false;
};

struct PhaseMap {
  std::string model;
  ScanGrid grid;
  int param_podality = 0;
  double median_derivative = 0.0;
  double spike_factor = 10.0;
  std::vector<PhaseCell> cells;  // ix-major: index = ix * ny + iy

  const PhaseCell& at(int ix, int iy) const { return cells[static_cast<std::size_t>(ix * grid.ny + iy)]; }
};

PhaseMap phase_scan(const ModelSpec& model, const ScanGrid& grid, const ScanOptions& opts = {});

}  // namespace phases
