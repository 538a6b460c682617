#include <bit>
#include <cmath>

#include "phases/sampler.hpp"

namespace phases {

EnumerationReport enumerate_Z(std::size_t n, const ConstraintVector& constraints, int threads) {
  if (n < 1 || n > 7) throw DomainError("exact enumeration is capped at n = 7 (2^21 labeled graphs)");
  constraints.validate();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v) pairs.emplace_back(u, v);
  const std::size_t np = pairs.size();

  EnumerationReport rep;
  rep.n = n;
  std::vector<PatternCounter> counters;
  for (const auto& c : constraints.constraints) {
    counters.emplace_back(c.pattern, n);
    rep.denominators.push_back(counters.back().denominator());
    rep.windows.push_back(CountWindow::make(c.target, constraints.delta, counters.back().denominator()));
  }
  const std::size_t nc = counters.size();
  const std::size_t max_tri = n >= 3 ? binomial(static_cast<unsigned>(n), 3) : 0;
  const std::size_t hist_size = (np + 1) * (max_tri + 1);

  // The top `lead` edge bits are fixed per chunk; the rest run in Gray order.
  const std::size_t lead = std::min<std::size_t>(np, 6);
  const std::size_t low = np - lead;
  const std::size_t chunks = std::size_t{1} << lead;
  std::vector<std::uint64_t> chunk_count(chunks, 0);
  std::vector<std::vector<std::uint64_t>> chunk_hist(chunks);

  parallel_for(chunks, resolve_threads(threads), [&](std::size_t chunk) {
    FiniteGraph g(n);
    for (std::size_t b = 0; b < lead; ++b)
      if ((chunk >> b) & 1u) g.set_edge(pairs[low + b].first, pairs[low + b].second, true);
    std::vector<std::int64_t> counts(nc);
    for (std::size_t j = 0; j < nc; ++j) counts[j] = counters[j].count(g);
    std::int64_t edges = static_cast<std::int64_t>(g.edge_count());
    std::int64_t triangles = static_cast<std::int64_t>(g.triangle_count());
    auto& hist = chunk_hist[chunk];
    hist.assign(hist_size, 0);
    std::uint64_t found = 0;
    const std::uint64_t total = std::uint64_t{1} << low;
    for (std::uint64_t step = 0;; ++step) {
      bool ok = true;
      for (std::size_t j = 0; j < nc && ok; ++j) ok = rep.windows[j].contains(counts[j]);
      if (ok) ++found;
      ++hist[static_cast<std::size_t>(edges) * (max_tri + 1) + static_cast<std::size_t>(triangles)];
      if (step + 1 == total) break;
      const auto flip = static_cast<std::size_t>(std::countr_zero(step + 1));
      const auto [u, v] = pairs[flip];
      for (std::size_t j = 0; j < nc; ++j) counts[j] += counters[j].toggle_delta(g, u, v);
      const std::int64_t common = static_cast<std::int64_t>(g.common_neighbors(u, v));
      const bool present = g.has_edge(u, v);
      edges += present ? -1 : 1;
      triangles += present ? -common : common;
      g.toggle(u, v);
    }
    chunk_count[chunk] = found;
  });

  std::vector<std::uint64_t> hist(hist_size, 0);
  for (std::size_t c = 0; c < chunks; ++c) {
    rep.count += chunk_count[c];
    for (std::size_t i = 0; i < hist_size; ++i) hist[i] += chunk_hist[c][i];
  }
  for (std::size_t e = 0; e <= np; ++e)
    for (std::size_t t = 0; t <= max_tri; ++t)
      if (const auto h = hist[e * (max_tri + 1) + t]; h > 0) rep.histogram.push_back({e, t, h});
  if (rep.count > 0)
    rep.normalized_log_count = std::log(static_cast<double>(rep.count)) / static_cast<double>(n * n);
  return rep;
}

}  // namespace phases
