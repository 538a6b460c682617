#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "phases/common.hpp"

namespace phases {

/// A permutation stored by its values pi_1..pi_n (1-based).
class Permutation {
 public:
  explicit Permutation(std::vector<int> values);
  static Permutation identity(std::size_t n);
  /// Whitespace- or comma-separated values, e.g. "2 4 1 3".
  static Permutation parse(const std::string& text);

  std::size_t size() const { return values_.size(); }
  int operator[](std::size_t i) const { return values_[i]; }
  const std::vector<int>& values() const { return values_; }
  std::string to_string() const;

 private:
  std::vector<int> values_;
};

/// Pattern of length k whose symbols are fixed ranks 1..k or wildcards. A
/// plain pattern has no wildcards.
class StarPattern {
 public:
  /// symbols[i] in 1..k, or 0 for a wildcard.
  explicit StarPattern(std::vector<int> symbols);
  /// "12", "132", "*2*"; lengths above 9 use comma separation ("1,10,*,...").
  static StarPattern parse(const std::string& text);

  std::size_t length() const { return symbols_.size(); }
  bool has_wildcards() const;
  const std::vector<int>& symbols() const { return symbols_; }
  /// Every plain pattern consistent with the fixed symbols, lexicographic.
  const std::vector<std::vector<int>>& completions() const { return completions_; }
  std::string to_string() const;

 private:
  std::vector<int> symbols_;
  std::vector<std::vector<int>> completions_;
};

/// Exact density of the pattern among the k-subsets of positions of pi.
/// Plain patterns up to length 6, star patterns up to length 4.
Rational perm_pattern_density(const Permutation& pi, const StarPattern& tau);

/// Number of k-subsets of positions whose induced order is a completion of tau.
std::uint64_t perm_pattern_count(const Permutation& pi, const StarPattern& tau);

/// Piecewise-constant permuton on a k x k grid. g(i, j) is the density on the
/// cell whose x-range is [i/k, (i+1)/k) and y-range is [j/k, (j+1)/k); every
/// row and column of g sums to k.
class GridPermuton {
 public:
  static constexpr double kMarginalTolerance = 1e-9;

  /// Validates nonnegativity and uniform marginals.
  GridPermuton(std::size_t k, std::vector<double> g);
  static GridPermuton uniform(std::size_t k);

  std::size_t resolution() const { return k_; }
  double at(std::size_t i, std::size_t j) const { return g_[i * k_ + j]; }
  const std::vector<double>& cells() const { return g_; }

 private:
  std::size_t k_;
  std::vector<double> g_;
};

/// k = n grid with g(j, pi_{j+1} - 1) = n.
GridPermuton perm_to_permuton(const Permutation& pi);

/// Alternating row/column rescaling of a nonnegative k x k matrix until every
/// row and column sums to k within `tol`. Throws if it does not converge.
std::vector<double> sinkhorn_project(std::vector<double> g, std::size_t k, double tol = 1e-10,
                                     int max_iter = 100000);

double permuton_entropy(const GridPermuton& gamma);

/// Exact pattern density for patterns (or star patterns) of length <= 3 and
/// resolution <= 40. Within a cell, points sit at independent uniform positions.
double permuton_pattern_density(const GridPermuton& gamma, const StarPattern& tau);

struct PermutonGradient {
  double value = 0.0;
  std::vector<double> d_cells;  // partials with respect to g(i, j)
};

PermutonGradient permuton_pattern_gradient(const GridPermuton& gamma, const StarPattern& tau);
/// Pattern density of an arbitrary nonnegative cell matrix (marginals not checked).
PermutonGradient pattern_gradient_unchecked(const std::vector<double>& g, std::size_t k,
                                            const StarPattern& tau);

struct MonteCarloEstimate {
  double value = 0.0;
  double standard_error = 0.0;
  std::uint64_t samples = 0;
};

MonteCarloEstimate permuton_pattern_density_mc(const GridPermuton& gamma, const StarPattern& tau,
                                               std::uint64_t samples, std::uint64_t seed);

struct PatternConstraint {
  StarPattern pattern;
  double target = 0.0;
};

struct PermutonOptions {
  std::uint64_t seed = 1;
  int starts = 8;
  double feasibility_tol = 1e-8;
  /// Cell densities never drop below this during ascent.
  double density_floor = 1e-12;
  double initial_penalty = 1e4;
  double penalty_growth = 5.0;
  int max_rounds = 12;
  int max_inner_iterations = 500;
  int threads = 1;
};

struct PermutonResult {
  bool feasible = false;
  GridPermuton permuton = GridPermuton::uniform(1);
  double entropy = 0.0;
  std::vector<double> residuals;
  /// Set when the best approach sits within ln 2 of the grid's entropy floor
  /// -ln k, i.e. the constraints push toward a singular permuton.
  bool degenerate = false;
  int feasible_starts = 0;
  int total_starts = 0;
};

/// Maximizes permuton entropy on a k x k grid subject to pattern densities.
PermutonResult maximize_permuton_entropy(const std::vector<PatternConstraint>& constraints,
                                         std::size_t k, const PermutonOptions& opts = {});

struct PermutationCount {
  std::size_t n = 0;
  std::uint64_t count = 0;
  /// (1/n) ln(count / n!); empty when count = 0.
  std::optional<double> normalized_log;
  std::vector<CountWindow> windows;
  std::vector<std::uint64_t> denominators;
};

/// Exact number of permutations of n <= 9 whose pattern densities lie in the
/// open windows (alpha_j - delta, alpha_j + delta).
PermutationCount count_constrained_perms(std::size_t n, const std::vector<PatternConstraint>& constraints,
                                         double delta, int threads = 1);

}  // namespace phases
