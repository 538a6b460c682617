#include <algorithm>
#include <cmath>
#include <numeric>

#include "phases/graphon.hpp"

namespace phases {

namespace {

struct BackEdge {
  int other;  // earlier endpoint
  bool present;
};

// For each vertex v, the edges to vertices u < v.
std::vector<std::vector<BackEdge>> back_edges(const SubgraphPattern& pattern) {
  std::vector<std::vector<BackEdge>> out(static_cast<std::size_t>(pattern.vertex_count()));
  for (const auto& e : pattern.edges()) out[static_cast<std::size_t>(e.v)].push_back({e.u, e.present});
  return out;
}

void check_caps(const SubgraphPattern& pattern, const DensityCaps& caps) {
  if (pattern.vertex_count() > caps.max_pattern_vertices)
    throw DomainError("pattern " + pattern.name() + " has " +
                      std::to_string(pattern.vertex_count()) +
                      " vertices, above the evaluation cap of " +
                      std::to_string(caps.max_pattern_vertices));
}

double edge_factor(double p, bool present) { return present ? p : 1.0 - p; }

double density_recursive(const StepGraphon& q, const std::vector<std::vector<BackEdge>>& back,
                         std::vector<int>& assign, std::size_t v, double weight) {
  const std::size_t k = back.size();
  if (v == k) return weight;
  const std::size_t m = q.podality();
  double total = 0.0;
  for (std::size_t b = 0; b < m; ++b) {
    double w = weight * q.mass(b);
    for (const auto& e : back[v]) {
      w *= edge_factor(q.value(static_cast<std::size_t>(assign[static_cast<std::size_t>(e.other)]), b),
                       e.present);
      if (w == 0.0) break;
    }
    if (w == 0.0) continue;
    assign[v] = static_cast<int>(b);
    total += density_recursive(q, back, assign, v + 1, w);
  }
  return total;
}

}  // namespace

double subgraph_density(const StepGraphon& q, const SubgraphPattern& pattern,
                        const DensityCaps& caps) {
  check_caps(pattern, caps);
  if (auto star = pattern.star_order()) return kstar_density(q, *star);
  const auto back = back_edges(pattern);
  std::vector<int> assign(back.size(), 0);
  const double t = density_recursive(q, back, assign, 0, 1.0);
  return std::clamp(t, 0.0, 1.0);
}

double kstar_density(const StepGraphon& q, int k) {
  if (k < 1) throw DomainError("k-star needs k >= 1");
  double t = 0.0;
  for (std::size_t i = 0; i < q.podality(); ++i) t += q.mass(i) * std::pow(q.degree(i), k);
  return std::clamp(t, 0.0, 1.0);
}

namespace {

DensityGradient kstar_gradient(const StepGraphon& q, int k) {
  const std::size_t m = q.podality();
  DensityGradient g;
  g.d_masses.assign(m, 0.0);
  g.d_values.assign(m * m, 0.0);
  std::vector<double> deg(m);
  for (std::size_t i = 0; i < m; ++i) deg[i] = q.degree(i);
  for (std::size_t i = 0; i < m; ++i) {
    g.value += q.mass(i) * std::pow(deg[i], k);
    // d/dc_a of c_i d_i^k: direct term when a == i, plus k c_i d_i^(k-1) p_ia
    const double inner = static_cast<double>(k) * q.mass(i) * std::pow(deg[i], k - 1);
    g.d_masses[i] += std::pow(deg[i], k);
    for (std::size_t a = 0; a < m; ++a) {
      g.d_masses[a] += inner * q.value(i, a);
      g.d_values[i * m + a] += inner * q.mass(a);
    }
  }
  return g;
}

}  // namespace

DensityGradient subgraph_density_gradient(const StepGraphon& q, const SubgraphPattern& pattern,
                                          const DensityCaps& caps) {
  check_caps(pattern, caps);
  const bool centred_at_zero = std::all_of(pattern.edges().begin(), pattern.edges().end(),
                                           [](const PatternEdge& e) { return e.u == 0; });
  if (auto star = pattern.star_order(); star && centred_at_zero) return kstar_gradient(q, *star);
  const std::size_t m = q.podality();
  const std::size_t k = static_cast<std::size_t>(pattern.vertex_count());
  const auto& edges = pattern.edges();
  const std::size_t nf = k + edges.size();

  DensityGradient g;
  g.d_masses.assign(m, 0.0);
  g.d_values.assign(m * m, 0.0);

  std::vector<std::size_t> assign(k, 0);
  std::vector<double> factor(nf), prefix(nf + 1), suffix(nf + 1);
  for (;;) {
    for (std::size_t v = 0; v < k; ++v) factor[v] = q.mass(assign[v]);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const double p = q.value(assign[static_cast<std::size_t>(edges[e].u)],
                               assign[static_cast<std::size_t>(edges[e].v)]);
      factor[k + e] = edge_factor(p, edges[e].present);
    }
    prefix[0] = 1.0;
    for (std::size_t f = 0; f < nf; ++f) prefix[f + 1] = prefix[f] * factor[f];
    suffix[nf] = 1.0;
    for (std::size_t f = nf; f-- > 0;) suffix[f] = suffix[f + 1] * factor[f];
    g.value += prefix[nf];
    for (std::size_t v = 0; v < k; ++v) g.d_masses[assign[v]] += prefix[v] * suffix[v + 1];
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const double others = prefix[k + e] * suffix[k + e + 1];
      const std::size_t a = assign[static_cast<std::size_t>(edges[e].u)];
      const std::size_t b = assign[static_cast<std::size_t>(edges[e].v)];
      g.d_values[a * m + b] += edges[e].present ? others : -others;
    }
    // odometer
    std::size_t pos = 0;
    while (pos < k && ++assign[pos] == m) assign[pos++] = 0;
    if (pos == k) break;
  }
  return g;
}

double half_binary_entropy(double p) {
  double h = 0.0;
  if (p > 0.0) h -= p * std::log(p);
  if (p < 1.0) h -= (1.0 - p) * std::log1p(-p);
  return 0.5 * h;
}

double graphon_entropy(const StepGraphon& q) {
  const std::size_t m = q.podality();
  double s = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) s += q.mass(i) * q.mass(j) * half_binary_entropy(q.value(i, j));
  return std::clamp(s, 0.0, 0.5 * std::log(2.0));
}

DensityGradient graphon_entropy_gradient(const StepGraphon& q) {
  const std::size_t m = q.podality();
  DensityGradient g;
  g.d_masses.assign(m, 0.0);
  g.d_values.assign(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double p = q.value(i, j);
      const double h = half_binary_entropy(p);
      g.value += q.mass(i) * q.mass(j) * h;
      g.d_masses[i] += q.mass(j) * h;
      g.d_masses[j] += q.mass(i) * h;
      // -1/2 ln(p / (1-p)); infinite at the endpoints
      const double slope = -0.5 * (std::log(p) - std::log1p(-p));
      g.d_values[i * m + j] = q.mass(i) * q.mass(j) * slope;
    }
  }
  return g;
}

StepGraphon empirical_graphon(const FiniteGraph& g) {
  const std::size_t n = g.node_count();
  if (n == 0) throw DomainError("empirical graphon needs at least one node");
  std::vector<double> masses(n, 1.0 / static_cast<double>(n));
  std::vector<double> values(n * n, 0.0);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v)
      if (u != v && g.has_edge(u, v)) values[u * n + v] = 1.0;
  return StepGraphon(std::move(masses), std::move(values));
}

namespace {

// Counts injective maps of pattern vertices into graph nodes that send every
// pattern edge onto a graph edge.
std::uint64_t count_injective(const FiniteGraph& g, const std::vector<std::vector<BackEdge>>& back,
                              std::vector<std::size_t>& image, std::vector<char>& used,
                              std::size_t v) {
  if (v == back.size()) return 1;
  std::uint64_t total = 0;
  for (std::size_t x = 0; x < g.node_count(); ++x) {
    if (used[x]) continue;
    bool ok = true;
    for (const auto& e : back[v]) {
      if (!g.has_edge(image[static_cast<std::size_t>(e.other)], x)) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    used[x] = 1;
    image[v] = x;
    total += count_injective(g, back, image, used, v + 1);
    used[x] = 0;
  }
  return total;
}

}  // namespace

Rational finite_density(const FiniteGraph& g, const SubgraphPattern& pattern) {
  if (!pattern.all_present())
    throw DomainError("finite densities are defined for all-present patterns only");
  const std::size_t k = static_cast<std::size_t>(pattern.vertex_count());
  const std::size_t n = g.node_count();
  if (k > n) throw DomainError("pattern has more vertices than the graph");
  const auto back = back_edges(pattern);
  std::vector<std::size_t> image(k, 0);
  std::vector<char> used(n, 0);
  const std::uint64_t count = count_injective(g, back, image, used, 0);
  return Rational::make(count, falling_factorial(n, static_cast<unsigned>(k)));
}

FiniteGraph blowup(const FiniteGraph& g, std::size_t k) {
  if (k < 1) throw DomainError("blow-up factor must be at least 1");
  const std::size_t n = g.node_count();
  if (n != 0 && k > FiniteGraph::kMaxNodes / n)
    throw DomainError("blow-up would exceed the node cap of " +
                      std::to_string(FiniteGraph::kMaxNodes));
  FiniteGraph out(n * k);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v)
      if (g.has_edge(u, v))
        for (std::size_t a = 0; a < k; ++a)
          for (std::size_t b = 0; b < k; ++b) out.set_edge(u * k + a, v * k + b, true);
  return out;
}

}  // namespace phases
