#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "phases/common.hpp"
#include "phases/graphon.hpp"

namespace phases {

/// Exact pattern counting on finite graphs, for the patterns the sampler can
/// maintain incrementally: the edge, the triangle and k-stars.
///
/// A count is normalized as in finite_density: the number of copies divided
/// by the number in the complete graph on n nodes.
class PatternCounter {
 public:
  PatternCounter(const SubgraphPattern& pattern, std::size_t n);

  /// Copies of the pattern in g.
  std::int64_t count(const FiniteGraph& g) const;
  /// Change in the count when the pair (u, v) is toggled in g (before the toggle).
  std::int64_t toggle_delta(const FiniteGraph& g, std::size_t u, std::size_t v) const;
  /// Number of copies in the complete graph.
  std::uint64_t denominator() const { return den_; }
  const SubgraphPattern& pattern() const { return pattern_; }

 private:
  enum class Kind { Edge, Triangle, Star };
  SubgraphPattern pattern_;
  Kind kind_;
  int k_ = 1;
  std::uint64_t den_ = 1;
};

struct ChainConfig {
  std::size_t n = 0;
  ConstraintVector constraints;
  std::uint64_t seed = 1;
  /// Defaults: burn-in 50 n^2 proposals, one sample every n^2 proposals.
  std::optional<std::uint64_t> burn_in;
  std::optional<std::uint64_t> interval;
  std::size_t samples = 10;
  /// Greedy toggles allowed while repairing the initial graph into the window.
  std::optional<std::uint64_t> repair_budget;

  void validate() const;
  std::uint64_t resolved_burn_in() const { return burn_in.value_or(50 * n * n); }
  std::uint64_t resolved_interval() const { return interval.value_or(n * n); }
};

struct SampleRecord {
  std::uint64_t step = 0;
  std::vector<double> densities;  // one per constraint, in constraint order
};

struct ChainResult {
  std::vector<FiniteGraph> samples;
  std::vector<SampleRecord> records;
  std::uint64_t proposals = 0;
  std::uint64_t accepted = 0;
  /// Set when a full sweep of n(n-1)/2 proposals passed with no accepted move.
  bool stalled = false;
  std::vector<std::string> warnings;
};

/// Metropolis chain over single edge toggles targeting the uniform
/// distribution on graphs whose densities lie in the open windows
/// (alpha_j - delta, alpha_j + delta). Deterministic given cfg.seed.
ChainResult sample_constrained(const ChainConfig& cfg);

/// Independent chains with seeds derive_seed(cfg.seed, chain index).
std::vector<ChainResult> sample_chains(const ChainConfig& cfg, std::size_t chains, int threads = 1);

/// Observer called with the current graph after every proposal of a chain,
/// for visit statistics. Returns the chain result as usual.
ChainResult sample_constrained_observed(const ChainConfig& cfg,
                                        const std::function<void(const FiniteGraph&)>& observe);

struct BlockEstimate {
  StepGraphon graphon = StepGraphon::constant(0.0);
  /// Within-cluster sum of squared distances between adjacency rows and
  /// their cluster centre.
  double objective = 0.0;
  /// Cluster of each node, indexing the blocks of `graphon`.
  std::vector<std::size_t> assignment;
};

/// k-means on adjacency rows (k-means++ seeding, best of `restarts`).
/// Empty clusters are dropped, so fewer than m blocks may be returned when
/// the rows take fewer than m distinct values.
BlockEstimate estimate_block_structure(const FiniteGraph& g, std::size_t m,
                                       std::uint64_t seed = 1, int restarts = 10);

/// Graph drawn with independent edges from a step graphon: node i belongs to
/// the block containing (i + 1/2) / n.
FiniteGraph sample_from_graphon(const StepGraphon& q, std::size_t n, std::uint64_t seed);

struct CountBin {
  std::uint64_t edges = 0;
  std::uint64_t triangles = 0;
  std::uint64_t graphs = 0;
};

struct EnumerationReport {
  std::size_t n = 0;
  std::vector<CountWindow> windows;
  std::vector<std::uint64_t> denominators;
  std::uint64_t count = 0;
  /// (1/n^2) ln Z; empty when Z = 0.
  std::optional<double> normalized_log_count;
  /// Joint (edge count, triangle count) histogram over all labeled graphs,
  /// sorted by edges then triangles.
  std::vector<CountBin> histogram;
};

/// Exact count of labeled graphs on n <= 7 nodes inside the constraint windows.
EnumerationReport enumerate_Z(std::size_t n, const ConstraintVector& constraints, int threads = 1);

}  // namespace phases
