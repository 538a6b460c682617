#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

#include "phases/sampler.hpp"

namespace phases {

namespace {

struct Clustering {
  std::vector<std::size_t> assignment;
  double objective = std::numeric_limits<double>::infinity();
};

double squared_distance(const std::vector<double>& row, const std::vector<double>& centre) {
  double s = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) s += (row[i] - centre[i]) * (row[i] - centre[i]);
  return s;
}

Clustering lloyd(const std::vector<std::vector<double>>& rows, std::size_t m, std::mt19937_64& rng) {
  const std::size_t n = rows.size();
  std::vector<std::vector<double>> centres;
  // k-means++ seeding
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  centres.push_back(rows[pick(rng)]);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  while (centres.size() < m) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(rows[i], centres.back()));
      total += nearest[i];
    }
    if (total == 0.0) break;
    std::uniform_real_distribution<double> u(0.0, total);
    double r = u(rng);
    std::size_t chosen = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      r -= nearest[i];
      if (r <= 0.0) {
        chosen = i;
        break;
      }
    }
    centres.push_back(rows[chosen]);
  }
  const std::size_t k = centres.size();
  Clustering c;
  c.assignment.assign(n, 0);
  for (int it = 0; it < 100; ++it) {
    bool changed = false;
    double objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double bd = squared_distance(rows[i], centres[0]);
      for (std::size_t a = 1; a < k; ++a) {
        const double d = squared_distance(rows[i], centres[a]);
        if (d < bd) {
          bd = d;
          best = a;
        }
      }
      objective += bd;
      if (best != c.assignment[i]) changed = true;
      c.assignment[i] = best;
    }
    c.objective = objective;
    if (!changed && it > 0) break;
    std::vector<std::size_t> sizes(k, 0);
    for (auto& centre : centres) std::fill(centre.begin(), centre.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      ++sizes[c.assignment[i]];
      for (std::size_t j = 0; j < n; ++j) centres[c.assignment[i]][j] += rows[i][j];
    }
    for (std::size_t a = 0; a < k; ++a)
      if (sizes[a] > 0)
        for (double& x : centres[a]) x /= static_cast<double>(sizes[a]);
  }
  return c;
}

}  // namespace

BlockEstimate estimate_block_structure(const FiniteGraph& g, std::size_t m, std::uint64_t seed,
                                       int restarts) {
  const std::size_t n = g.node_count();
  if (m < 1 || m > 8) throw DomainError("block estimation needs 1 <= m <= 8");
  if (m > n) throw DomainError("more blocks requested than the graph has nodes");
  std::vector<std::vector<double>> rows(n, std::vector<double>(n, 0.0));
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v)
      if (u != v && g.has_edge(u, v)) rows[u][v] = 1.0;

  Clustering best;
  for (int r = 0; r < std::max(1, restarts); ++r) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    Clustering c = lloyd(rows, m, rng);
    if (c.objective < best.objective) best = std::move(c);
  }

  // relabel non-empty clusters densely
  std::vector<std::size_t> label(m, SIZE_MAX);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (label[best.assignment[i]] == SIZE_MAX) label[best.assignment[i]] = k++;
  std::vector<std::size_t> assign(n);
  std::vector<double> sizes(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    assign[i] = label[best.assignment[i]];
    sizes[assign[i]] += 1.0;
  }
  std::vector<double> edges(k * k, 0.0);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v)
      if (u != v && g.has_edge(u, v)) edges[assign[u] * k + assign[v]] += 1.0;
  const double overall = n > 1 ? static_cast<double>(g.edge_count()) / (0.5 * n * (n - 1.0)) : 0.0;
  std::vector<double> masses(k), values(k * k);
  for (std::size_t a = 0; a < k; ++a) {
    masses[a] = sizes[a] / static_cast<double>(n);
    for (std::size_t b = 0; b < k; ++b) {
      const double pairs = a == b ? sizes[a] * (sizes[a] - 1.0) : sizes[a] * sizes[b];
      // a singleton block has no internal pair to observe
      values[a * k + b] = pairs > 0.0 ? edges[a * k + b] / pairs : overall;
    }
  }
  StepGraphon raw(std::move(masses), std::move(values));
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    if (raw.mass(x) != raw.mass(y)) return raw.mass(x) > raw.mass(y);
    return raw.degree(x) > raw.degree(y);
  });
  std::vector<std::size_t> position(k);
  for (std::size_t i = 0; i < k; ++i) position[order[i]] = i;
  BlockEstimate out;
  out.graphon = raw.permuted(order);
  out.objective = best.objective;
  out.assignment.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.assignment[i] = position[assign[i]];
  return out;
}

}  // namespace phases
