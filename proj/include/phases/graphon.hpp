#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "phases/common.hpp"

namespace phases {

/// Piecewise-constant (m-podal) graphon: block masses c_i summing to one and a
/// symmetric m x m matrix of block values p_ij in [0,1], stored row-major.
class StepGraphon {
 public:
  static constexpr double kMassTolerance = 1e-12;

  StepGraphon(std::vector<double> masses, std::vector<double> values);

  static StepGraphon constant(double p);
  static StepGraphon from_rows(std::vector<double> masses,
                               const std::vector<std::vector<double>>& rows);
  /// Equal-mass two-block graphon with diagonal `diag` and off-diagonal `off`.
  static StepGraphon symmetric_bipodal(double diag, double off);

  std::size_t podality() const { return masses_.size(); }
  double mass(std::size_t i) const { return masses_[i]; }
  double value(std::size_t i, std::size_t j) const { return values_[i * masses_.size() + j]; }
  std::span<const double> masses() const { return masses_; }
  std::span<const double> values() const { return values_; }
  std::vector<std::vector<double>> rows() const;

  /// Sum_j c_j p_ij, the degree of a node in block i.
  double degree(std::size_t i) const;
  double edge_density() const;

  /// Splits block i into pieces with the given fractions of its mass.
  StepGraphon split_block(std::size_t i, std::span<const double> fractions) const;
  StepGraphon permuted(std::span<const std::size_t> order) const;

  friend bool operator==(const StepGraphon&, const StepGraphon&) = default;

 private:
  std::vector<double> masses_;
  std::vector<double> values_;
};

/// One pattern edge between vertices u < v (0-based). A present edge
/// contributes a factor q, an absent one a factor 1 - q.
struct PatternEdge {
  int u = 0;
  int v = 0;
  bool present = true;
  friend bool operator==(const PatternEdge&, const PatternEdge&) = default;
};

/// Small simple graph with signed edges defining a density functional.
class SubgraphPattern {
 public:
  SubgraphPattern(int k, std::vector<PatternEdge> edges, std::string name = {});

  static SubgraphPattern edge();
  static SubgraphPattern triangle();
  /// k edges sharing vertex 0.
  static SubgraphPattern kstar(int k);
  static SubgraphPattern cycle(int k);
  static SubgraphPattern complete(int k);
  /// q(x,y) [1 - q(y,z)]
  static SubgraphPattern signed_two_star();
  /// q(w,x) [1 - q(x,y)] q(y,z) [1 - q(z,w)]
  static SubgraphPattern signed_square();
  /// Builtin names: edge, triangle, k-star:K (or 2-star, 3-star, ...),
  /// cycle:K, complete:K, signed-2-star, signed-square.
  static SubgraphPattern from_name(const std::string& name);

  int vertex_count() const { return k_; }
  const std::vector<PatternEdge>& edges() const { return edges_; }
  std::size_t present_edge_count() const;
  bool all_present() const;
  /// Number of leaves if this is an all-present star centred anywhere.
  std::optional<int> star_order() const;
  bool is_triangle() const;
  const std::string& name() const { return name_; }

  friend bool operator==(const SubgraphPattern& a, const SubgraphPattern& b) {
    return a.k_ == b.k_ && a.edges_ == b.edges_;
  }

 private:
  int k_;
  std::vector<PatternEdge> edges_;
  std::string name_;
};

/// Labeled simple undirected graph stored as adjacency bit rows.
class FiniteGraph {
 public:
  static constexpr std::size_t kMaxNodes = 1u << 15;

  explicit FiniteGraph(std::size_t n);
  static FiniteGraph from_edges(std::size_t n,
                                const std::vector<std::pair<std::size_t, std::size_t>>& edges);
  static FiniteGraph complete(std::size_t n);
  static FiniteGraph cycle(std::size_t n);

  std::size_t node_count() const { return n_; }
  bool has_edge(std::size_t u, std::size_t v) const {
    return (rows_[u * words_ + v / 64] >> (v % 64)) & 1u;
  }
  void set_edge(std::size_t u, std::size_t v, bool on);
  void toggle(std::size_t u, std::size_t v) { set_edge(u, v, !has_edge(u, v)); }
  std::size_t degree(std::size_t u) const;
  std::size_t common_neighbors(std::size_t u, std::size_t v) const;
  std::uint64_t edge_count() const;
  std::uint64_t triangle_count() const;
  std::vector<std::pair<std::size_t, std::size_t>> edge_list() const;

  friend bool operator==(const FiniteGraph&, const FiniteGraph&) = default;

 private:
  std::size_t n_;
  std::size_t words_;
  std::vector<std::uint64_t> rows_;
};

/// A density constraint t_P(q) = target.
struct DensityConstraint {
  SubgraphPattern pattern;
  double target = 0.0;
};

/// Constraint targets plus the softening window delta used at finite n.
struct ConstraintVector {
  std::vector<DensityConstraint> constraints;
  double delta = 0.0;

  void validate() const;
  std::size_t size() const { return constraints.size(); }
};

ConstraintVector edge_triangle_constraints(double eps, double tau, double delta = 0.0);

struct DensityCaps {
  int max_pattern_vertices = 6;
};

/// Homomorphism density: sum over block assignments of the pattern vertices.
double subgraph_density(const StepGraphon& q, const SubgraphPattern& pattern,
                        const DensityCaps& caps = {});

/// Sum_i c_i (Sum_j c_j p_ij)^k.
double kstar_density(const StepGraphon& q, int k);

/// Value together with partial derivatives with respect to every mass c_a
/// and every matrix entry p_ab, each entry treated as an independent
/// variable (so a symmetric perturbation of p_ab gets d_ab + d_ba).
struct DensityGradient {
  double value = 0.0;
  std::vector<double> d_masses;
  std::vector<double> d_values;
};

DensityGradient subgraph_density_gradient(const StepGraphon& q, const SubgraphPattern& pattern,
                                          const DensityCaps& caps = {});

double graphon_entropy(const StepGraphon& q);
DensityGradient graphon_entropy_gradient(const StepGraphon& q);

/// -1/2 [p ln p + (1-p) ln(1-p)] with 0 ln 0 = 0.
double half_binary_entropy(double p);

StepGraphon empirical_graphon(const FiniteGraph& g);

/// Injective-embedding density normalized so that every pattern has density
/// one in the complete graph.
Rational finite_density(const FiniteGraph& g, const SubgraphPattern& pattern);

FiniteGraph blowup(const FiniteGraph& g, std::size_t k);

struct CutDistanceOptions {
  std::size_t max_blocks = 20;
  /// Candidate alignments enumerated before falling back to the identity.
  std::size_t max_permutations = 40320;
  double mass_match_tolerance = 1e-9;
};

/// Block-permutation restricted cut distance. An upper bound on the cut
/// distance of the reduced graphons.
double cut_distance_upper(const StepGraphon& a, const StepGraphon& b,
                          const CutDistanceOptions& opts = {});

/// Connected simple graphs with 2..max_order vertices in the fixed order used
/// by dbar_distance: vertex count, then edge count, then canonical code.
std::vector<SubgraphPattern> connected_graph_enumeration(int max_order);

struct DbarResult {
  double value = 0.0;
  int max_order = 0;
  std::size_t terms = 0;
};

DbarResult dbar_distance(const StepGraphon& a, const StepGraphon& b, int max_order);

/// Merges blocks whose rows are within merge_tol in mass-weighted L1 and
/// sorts blocks by mass, then row sum, descending.
StepGraphon canonicalize(const StepGraphon& q, double merge_tol = 1e-4);

}  // namespace phases
