#include <algorithm>
#include <bit>
#include <tuple>
#include <cmath>
#include <numeric>
#include <set>

#include "phases/graphon.hpp"

namespace phases {

namespace {

// sup over block subsets S, T of |sum_{i in S, j in T} w_ij|. For fixed T the
// best S takes every row with positive (or every row with negative) partial
// sum; T runs over all subsets in Gray-code order.
double block_cut_norm(const std::vector<double>& w, std::size_t k) {
  std::vector<double> row(k, 0.0);
  double best = 0.0;
  const std::uint64_t total = std::uint64_t{1} << k;
  std::uint64_t gray = 0;
  for (std::uint64_t step = 1; step < total; ++step) {
    const std::size_t flip = static_cast<std::size_t>(std::countr_zero(step));
    const bool adding = ((gray >> flip) & 1u) == 0;
    gray ^= std::uint64_t{1} << flip;
    for (std::size_t i = 0; i < k; ++i) row[i] += adding ? w[i * k + flip] : -w[i * k + flip];
    double pos = 0.0, neg = 0.0;
    for (double r : row) (r > 0.0 ? pos : neg) += r;
    best = std::max({best, pos, -neg});
  }
  return best;
}

struct AlignmentSearch {
  const StepGraphon& a;
  const StepGraphon& b;
  double tol;
  std::size_t limit;
  std::size_t visited = 0;
  std::vector<std::size_t> perm;
  std::vector<char> used;
  double best = INFINITY;

  void run(std::size_t i) {
    if (visited >= limit) return;
    const std::size_t m = a.podality();
    if (i == m) {
      ++visited;
      std::vector<double> w(m * m);
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < m; ++c)
          w[r * m + c] = a.mass(r) * a.mass(c) * (a.value(r, c) - b.value(perm[r], perm[c]));
      best = std::min(best, block_cut_norm(w, m));
      return;
    }
    for (std::size_t j = 0; j < m; ++j) {
      if (used[j] || std::abs(a.mass(i) - b.mass(j)) > tol) continue;
      used[j] = 1;
      perm[i] = j;
      run(i + 1);
      used[j] = 0;
      if (visited >= limit) return;
    }
  }
};

}  // namespace

double cut_distance_upper(const StepGraphon& a, const StepGraphon& b,
                          const CutDistanceOptions& opts) {
  if (a.podality() > opts.max_blocks || b.podality() > opts.max_blocks)
    throw DomainError("cut distance enumerates 2^m block subsets; podality above the cap of " +
                      std::to_string(opts.max_blocks) + " is refused");
  if (a.podality() == b.podality()) {
    AlignmentSearch search{a, b, opts.mass_match_tolerance, opts.max_permutations, 0,
                           std::vector<std::size_t>(a.podality(), 0),
                           std::vector<char>(a.podality(), 0), INFINITY};
    search.run(0);
    if (search.visited > 0) return search.best;
  }
  // Common refinement of the two interval partitions in block order.
  std::vector<double> cuts;
  double acc = 0.0;
  for (double c : a.masses()) cuts.push_back(acc += c);
  acc = 0.0;
  for (double c : b.masses()) cuts.push_back(acc += c);
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> pieces;
  std::vector<std::size_t> in_a, in_b;
  double left = 0.0;
  std::size_t ia = 0, ib = 0;
  double end_a = a.mass(0), end_b = b.mass(0);
  for (double cut : cuts) {
    const double width = std::min(cut, 1.0) - left;
    if (width > opts.mass_match_tolerance) {
      const double mid = left + 0.5 * width;
      while (ia + 1 < a.podality() && mid > end_a) end_a += a.mass(++ia);
      while (ib + 1 < b.podality() && mid > end_b) end_b += b.mass(++ib);
      pieces.push_back(width);
      in_a.push_back(ia);
      in_b.push_back(ib);
      left = cut;
    }
  }
  const std::size_t k = pieces.size();
  if (k > opts.max_blocks)
    throw DomainError("common refinement has " + std::to_string(k) +
                      " blocks, above the cut-distance cap of " + std::to_string(opts.max_blocks));
  std::vector<double> w(k * k);
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t c = 0; c < k; ++c)
      w[r * k + c] = pieces[r] * pieces[c] * (a.value(in_a[r], in_a[c]) - b.value(in_b[r], in_b[c]));
  return block_cut_norm(w, k);
}

std::vector<SubgraphPattern> connected_graph_enumeration(int max_order) {
  if (max_order > 5) throw DomainError("d-bar enumeration is capped at 5 vertices");
  struct Entry {
    int k;
    int edges;
    std::uint32_t code;
  };
  std::vector<Entry> entries;
  for (int k = 2; k <= max_order; ++k) {
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j) pairs.emplace_back(i, j);
    const std::size_t np = pairs.size();
    auto code_of = [&](std::uint32_t mask, const std::vector<int>& relabel) {
      std::uint32_t code = 0;
      for (std::size_t e = 0; e < np; ++e) {
        if (!((mask >> e) & 1u)) continue;
        int u = relabel[static_cast<std::size_t>(pairs[e].first)];
        int v = relabel[static_cast<std::size_t>(pairs[e].second)];
        if (u > v) std::swap(u, v);
        const auto pos = std::find(pairs.begin(), pairs.end(), std::make_pair(u, v)) - pairs.begin();
        code |= 1u << (np - 1 - static_cast<std::size_t>(pos));
      }
      return code;
    };
    std::set<std::uint32_t> seen;
    for (std::uint32_t mask = 0; mask < (1u << np); ++mask) {
      // connectivity by flood fill
      std::uint32_t reach = 1;
      for (int round = 0; round < k; ++round)
        for (std::size_t e = 0; e < np; ++e)
          if ((mask >> e) & 1u) {
            const auto u = static_cast<unsigned>(pairs[e].first), v = static_cast<unsigned>(pairs[e].second);
            if (((reach >> u) & 1u) || ((reach >> v) & 1u)) reach |= (1u << u) | (1u << v);
          }
      if (reach != (1u << k) - 1) continue;
      std::vector<int> relabel(static_cast<std::size_t>(k));
      std::iota(relabel.begin(), relabel.end(), 0);
      std::uint32_t canon = UINT32_MAX;
      do {
        canon = std::min(canon, code_of(mask, relabel));
      } while (std::next_permutation(relabel.begin(), relabel.end()));
      if (seen.insert(canon).second)
        entries.push_back({k, std::popcount(mask), canon});
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) {
    return std::tie(x.k, x.edges, x.code) < std::tie(y.k, y.edges, y.code);
  });
  std::vector<SubgraphPattern> out;
  for (const auto& en : entries) {
    std::vector<PatternEdge> edges;
    std::size_t np = static_cast<std::size_t>(en.k * (en.k - 1) / 2);
    std::size_t e = 0;
    for (int i = 0; i < en.k; ++i)
      for (int j = i + 1; j < en.k; ++j, ++e)
        if ((en.code >> (np - 1 - e)) & 1u) edges.push_back({i, j, true});
    out.emplace_back(en.k, std::move(edges),
                     "connected:" + std::to_string(en.k) + ":" + std::to_string(en.code));
  }
  return out;
}

DbarResult dbar_distance(const StepGraphon& a, const StepGraphon& b, int max_order) {
  DbarResult r;
  r.max_order = max_order;
  const auto graphs = connected_graph_enumeration(max_order);
  double weight = 1.0;
  for (const auto& h : graphs) {
    weight *= 0.5;
    r.value += std::abs(subgraph_density(a, h) - subgraph_density(b, h)) * weight;
  }
  r.terms = graphs.size();
  return r;
}

namespace {
constexpr double kMasslessBlock = 1e-12;
}  // namespace

StepGraphon canonicalize(const StepGraphon& q, double merge_tol) {
  if (merge_tol < 0.0) throw DomainError("merge tolerance must be nonnegative");
  StepGraphon cur = q;
  for (;;) {
    const std::size_t m = cur.podality();
    auto distance = [&](std::size_t i, std::size_t j) {
      double d = 0.0;
      for (std::size_t k = 0; k < m; ++k) d += cur.mass(k) * std::abs(cur.value(i, k) - cur.value(j, k));
      return d;
    };
    std::vector<std::size_t> visit(m);
    std::iota(visit.begin(), visit.end(), 0);
    std::stable_sort(visit.begin(), visit.end(),
                     [&](std::size_t x, std::size_t y) { return cur.mass(x) > cur.mass(y); });
    std::vector<std::size_t> cluster(m);
    std::vector<std::size_t> reps;
    for (std::size_t i : visit) {
      // numerically massless blocks join the nearest heavier block
      const bool massless = cur.mass(i) < kMasslessBlock && !reps.empty();
      auto it = massless ? std::min_element(reps.begin(), reps.end(),
                                            [&](std::size_t r1, std::size_t r2) {
                                              return distance(i, r1) < distance(i, r2);
                                            })
                         : std::find_if(reps.begin(), reps.end(),
                                        [&](std::size_t r) { return distance(i, r) < merge_tol; });
      if (it == reps.end()) {
        cluster[i] = reps.size();
        reps.push_back(i);
      } else {
        cluster[i] = static_cast<std::size_t>(it - reps.begin());
      }
    }
    if (reps.size() == m) break;
    const std::size_t k = reps.size();
    std::vector<double> masses(k, 0.0), weighted(k * k, 0.0);
    for (std::size_t i = 0; i < m; ++i) masses[cluster[i]] += cur.mass(i);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        weighted[cluster[i] * k + cluster[j]] += cur.mass(i) * cur.mass(j) * cur.value(i, j);
    std::vector<double> values(k * k);
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b)
        values[a * k + b] = std::clamp(weighted[a * k + b] / (masses[a] * masses[b]), 0.0, 1.0);
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = a + 1; b < k; ++b) values[b * k + a] = values[a * k + b];
    cur = StepGraphon(std::move(masses), std::move(values));
  }
  const std::size_t m = cur.podality();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    if (cur.mass(x) != cur.mass(y)) return cur.mass(x) > cur.mass(y);
    if (cur.degree(x) != cur.degree(y)) return cur.degree(x) > cur.degree(y);
    return cur.value(x, x) > cur.value(y, y);
  });
  return cur.permuted(order);
}

}  // namespace phases
