#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "phases/graphon.hpp"

namespace phases {

StepGraphon::StepGraphon(std::vector<double> masses, std::vector<double> values)
    : masses_(std::move(masses)), values_(std::move(values)) {
  const std::size_t m = masses_.size();
  if (m == 0) throw DomainError("step graphon needs at least one block");
  if (values_.size() != m * m) throw DomainError("step graphon value matrix must be m x m");
  double total = 0.0;
  for (double c : masses_) {
    if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("block masses must be positive");
    total += c;
  }
  if (std::abs(total - 1.0) > kMassTolerance)
    throw DomainError("block masses must sum to one");
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double p = values_[i * m + j];
      if (!(p >= 0.0 && p <= 1.0)) throw DomainError("block values must lie in [0,1]");
      if (j > i && std::abs(p - values_[j * m + i]) > 1e-12)
        throw DomainError("block value matrix must be symmetric");
    }
  }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) values_[j * m + i] = values_[i * m + j];
}

StepGraphon StepGraphon::constant(double p) { return StepGraphon({1.0}, {p}); }

StepGraphon StepGraphon::from_rows(std::vector<double> masses,
                                   const std::vector<std::vector<double>>& rows) {
  std::vector<double> flat;
  for (const auto& row : rows) {
    if (row.size() != rows.size()) throw DomainError("value matrix must be square");
    flat.insert(flat.end(), row.begin(), row.end());
  }
  return StepGraphon(std::move(masses), std::move(flat));
}

StepGraphon StepGraphon::symmetric_bipodal(double diag, double off) {
  return StepGraphon({0.5, 0.5}, {diag, off, off, diag});
}

std::vector<std::vector<double>> StepGraphon::rows() const {
  const std::size_t m = podality();
  std::vector<std::vector<double>> out(m);
  for (std::size_t i = 0; i < m; ++i)
    out[i].assign(values_.begin() + static_cast<std::ptrdiff_t>(i * m),
                  values_.begin() + static_cast<std::ptrdiff_t>((i + 1) * m));
  return out;
}

double StepGraphon::degree(std::size_t i) const {
  double d = 0.0;
  for (std::size_t j = 0; j < podality(); ++j) d += masses_[j] * value(i, j);
  return d;
}

double StepGraphon::edge_density() const {
  double e = 0.0;
  for (std::size_t i = 0; i < podality(); ++i) e += masses_[i] * degree(i);
  return e;
}

StepGraphon StepGraphon::split_block(std::size_t i, std::span<const double> fractions) const {
  const std::size_t m = podality();
  if (i >= m || fractions.empty()) throw DomainError("invalid block split");
  std::vector<std::size_t> origin;
  std::vector<double> masses;
  for (std::size_t b = 0; b < m; ++b) {
    if (b == i) {
      for (double f : fractions) {
        origin.push_back(b);
        masses.push_back(masses_[b] * f);
      }
    } else {
      origin.push_back(b);
      masses.push_back(masses_[b]);
    }
  }
  const std::size_t n = origin.size();
  std::vector<double> values(n * n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) values[a * n + b] = value(origin[a], origin[b]);
  // renormalize rounding so the mass invariant holds exactly enough
  const double total = std::accumulate(masses.begin(), masses.end(), 0.0);
  for (double& c : masses) c /= total;
  return StepGraphon(std::move(masses), std::move(values));
}

StepGraphon StepGraphon::permuted(std::span<const std::size_t> order) const {
  const std::size_t m = podality();
  if (order.size() != m) throw DomainError("permutation size mismatch");
  std::vector<double> masses(m), values(m * m);
  for (std::size_t a = 0; a < m; ++a) {
    masses[a] = masses_[order[a]];
    for (std::size_t b = 0; b < m; ++b) values[a * m + b] = value(order[a], order[b]);
  }
  return StepGraphon(std::move(masses), std::move(values));
}

// ---------------------------------------------------------------------------

SubgraphPattern::SubgraphPattern(int k, std::vector<PatternEdge> edges, std::string name)
    : k_(k), edges_(std::move(edges)), name_(std::move(name)) {
  if (k_ < 1) throw DomainError("pattern needs at least one vertex");
  std::set<std::pair<int, int>> seen;
  for (auto& e : edges_) {
    if (e.u == e.v) throw DomainError("pattern edges may not be loops");
    if (e.u > e.v) std::swap(e.u, e.v);
    if (e.u < 0 || e.v >= k_) throw DomainError("pattern edge endpoint out of range");
    if (!seen.insert({e.u, e.v}).second) throw DomainError("pattern has a duplicate edge");
  }
  if (name_.empty()) name_ = "pattern";
}

SubgraphPattern SubgraphPattern::edge() { return SubgraphPattern(2, {{0, 1, true}}, "edge"); }

SubgraphPattern SubgraphPattern::triangle() {
  return SubgraphPattern(3, {{0, 1, true}, {1, 2, true}, {0, 2, true}}, "triangle");
}

SubgraphPattern SubgraphPattern::kstar(int k) {
  if (k < 1) throw DomainError("k-star needs k >= 1");
  std::vector<PatternEdge> edges;
  for (int leaf = 1; leaf <= k; ++leaf) edges.push_back({0, leaf, true});
  return SubgraphPattern(k + 1, std::move(edges), std::to_string(k) + "-star");
}

SubgraphPattern SubgraphPattern::cycle(int k) {
  if (k < 3) throw DomainError("cycle needs at least 3 vertices");
  std::vector<PatternEdge> edges;
  for (int i = 0; i < k; ++i) edges.push_back({i, (i + 1) % k, true});
  return SubgraphPattern(k, std::move(edges), "cycle:" + std::to_string(k));
}

SubgraphPattern SubgraphPattern::complete(int k) {
  std::vector<PatternEdge> edges;
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) edges.push_back({i, j, true});
  return SubgraphPattern(k, std::move(edges), "complete:" + std::to_string(k));
}

SubgraphPattern SubgraphPattern::signed_two_star() {
  return SubgraphPattern(3, {{0, 1, true}, {1, 2, false}}, "signed-2-star");
}

SubgraphPattern SubgraphPattern::signed_square() {
  return SubgraphPattern(4, {{0, 1, true}, {1, 2, false}, {2, 3, true}, {3, 0, false}},
                         "signed-square");
}

namespace {

int parse_suffix(const std::string& name, const std::string& prefix) {
  const std::string rest = name.substr(prefix.size());
  std::size_t used = 0;
  int k = 0;
  try {
    k = std::stoi(rest, &used);
  } catch (const std::exception&) {
    throw InputError("bad pattern name '" + name + "'");
  }
  if (used != rest.size()) throw InputError("bad pattern name '" + name + "'");
  return k;
}

}  // namespace

SubgraphPattern SubgraphPattern::from_name(const std::string& name) {
  if (name == "edge") return edge();
  if (name == "triangle") return triangle();
  if (name == "signed-2-star" || name == "t1") return signed_two_star();
  if (name == "signed-square" || name == "t2") return signed_square();
  if (name.rfind("k-star:", 0) == 0) return kstar(parse_suffix(name, "k-star:"));
  if (name.rfind("cycle:", 0) == 0) return cycle(parse_suffix(name, "cycle:"));
  if (name.rfind("complete:", 0) == 0) return complete(parse_suffix(name, "complete:"));
  if (name.size() > 5 && name.substr(name.size() - 5) == "-star")
    return kstar(parse_suffix(name.substr(0, name.size() - 5), ""));
  throw InputError("unknown pattern name '" + name + "'");
}

std::size_t SubgraphPattern::present_edge_count() const {
  return static_cast<std::size_t>(
      std::count_if(edges_.begin(), edges_.end(), [](const PatternEdge& e) { return e.present; }));
}

bool SubgraphPattern::all_present() const { return present_edge_count() == edges_.size(); }

std::optional<int> SubgraphPattern::star_order() const {
  if (!all_present() || edges_.empty()) return std::nullopt;
  if (static_cast<int>(edges_.size()) != k_ - 1) return std::nullopt;
  std::vector<int> deg(static_cast<std::size_t>(k_), 0);
  for (const auto& e : edges_) {
    ++deg[static_cast<std::size_t>(e.u)];
    ++deg[static_cast<std::size_t>(e.v)];
  }
  const auto centre = std::max_element(deg.begin(), deg.end());
  if (*centre != k_ - 1) return std::nullopt;
  return k_ - 1;
}

bool SubgraphPattern::is_triangle() const {
  return k_ == 3 && edges_.size() == 3 && all_present();
}

// ---------------------------------------------------------------------------

FiniteGraph::FiniteGraph(std::size_t n) : n_(n), words_((n + 63) / 64) {
  if (n > kMaxNodes) throw DomainError("graph exceeds the node cap");
  rows_.assign(n_ * words_, 0);
}

FiniteGraph FiniteGraph::from_edges(std::size_t n,
                                    const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  FiniteGraph g(n);
  for (auto [u, v] : edges) {
    if (u >= n || v >= n) throw DomainError("edge endpoint out of range");
    if (u == v) throw DomainError("graphs may not have loops");
    g.set_edge(u, v, true);
  }
  return g;
}

FiniteGraph FiniteGraph::complete(std::size_t n) {
  FiniteGraph g(n);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v) g.set_edge(u, v, true);
  return g;
}

FiniteGraph FiniteGraph::cycle(std::size_t n) {
  FiniteGraph g(n);
  for (std::size_t u = 0; u < n; ++u) g.set_edge(u, (u + 1) % n, true);
  return g;
}

void FiniteGraph::set_edge(std::size_t u, std::size_t v, bool on) {
  if (u == v) throw DomainError("graphs may not have loops");
  const std::uint64_t bu = std::uint64_t{1} << (v % 64);
  const std::uint64_t bv = std::uint64_t{1} << (u % 64);
  if (on) {
    rows_[u * words_ + v / 64] |= bu;
    rows_[v * words_ + u / 64] |= bv;
  } else {
    rows_[u * words_ + v / 64] &= ~bu;
    rows_[v * words_ + u / 64] &= ~bv;
  }
}

std::size_t FiniteGraph::degree(std::size_t u) const {
  std::size_t d = 0;
  for (std::size_t w = 0; w < words_; ++w) d += static_cast<std::size_t>(std::popcount(rows_[u * words_ + w]));
  return d;
}

std::size_t FiniteGraph::common_neighbors(std::size_t u, std::size_t v) const {
  std::size_t c = 0;
  for (std::size_t w = 0; w < words_; ++w)
    c += static_cast<std::size_t>(std::popcount(rows_[u * words_ + w] & rows_[v * words_ + w]));
  return c;
}

std::uint64_t FiniteGraph::edge_count() const {
  std::uint64_t total = 0;
  for (std::size_t u = 0; u < n_; ++u) total += degree(u);
  return total / 2;
}

std::uint64_t FiniteGraph::triangle_count() const {
  std::uint64_t total = 0;
  for (std::size_t u = 0; u < n_; ++u)
    for (std::size_t v = u + 1; v < n_; ++v)
      if (has_edge(u, v)) total += common_neighbors(u, v);
  return total / 3;
}

std::vector<std::pair<std::size_t, std::size_t>> FiniteGraph::edge_list() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t u = 0; u < n_; ++u)
    for (std::size_t v = u + 1; v < n_; ++v)
      if (has_edge(u, v)) out.emplace_back(u, v);
  return out;
}

// ---------------------------------------------------------------------------

void ConstraintVector::validate() const {
  for (const auto& c : constraints)
    if (!(c.target >= 0.0 && c.target <= 1.0))
      throw DomainError("constraint target for " + c.pattern.name() + " must lie in [0,1]");
  if (!(delta >= 0.0 && delta <= 1.0)) throw DomainError("softening delta must lie in [0,1]");
}

ConstraintVector edge_triangle_constraints(double eps, double tau, double delta) {
  ConstraintVector cv;
  cv.constraints.push_back({SubgraphPattern::edge(), eps});
  cv.constraints.push_back({SubgraphPattern::triangle(), tau});
  cv.delta = delta;
  cv.validate();
  return cv;
}

}  // namespace phases
