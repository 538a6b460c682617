#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "phases/graphon.hpp"
#include "phases/sampler.hpp"

using namespace phases;

namespace {

StepGraphon random_graphon(std::size_t m, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(0.05, 1.0), p(lo, hi);
  std::vector<double> masses(m);
  for (double& c : masses) c = u(rng);
  const double total = std::accumulate(masses.begin(), masses.end(), 0.0);
  for (double& c : masses) c /= total;
  double sum = std::accumulate(masses.begin(), masses.end() - 1, 0.0);
  masses.back() = 1.0 - sum;
  std::vector<double> values(m * m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j) values[i * m + j] = values[j * m + i] = p(rng);
  return StepGraphon(masses, values);
}

// Brute-force triple sum.
double triangle_oracle(const StepGraphon& q) {
  double t = 0.0;
  const std::size_t m = q.podality();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < m; ++k)
        t += q.mass(i) * q.mass(j) * q.mass(k) * q.value(i, j) * q.value(j, k) * q.value(k, i);
  return t;
}

using Matrix = std::vector<std::vector<double>>;

Matrix multiply(const Matrix& a, const Matrix& b) {
  const std::size_t n = a.size();
  Matrix c(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < n; ++j) c[i][j] += a[i][k] * b[k][j];
  return c;
}

double trace(const Matrix& a) {
  double t = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) t += a[i][i];
  return t;
}

// Q C with C = diag(masses); (1 - Q) C when `complement`.
Matrix weighted(const StepGraphon& q, bool complement) {
  const std::size_t m = q.podality();
  Matrix a(m, std::vector<double>(m));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) a[i][j] = (complement ? 1.0 - q.value(i, j) : q.value(i, j)) * q.mass(j);
  return a;
}

std::uint64_t hom_count(const FiniteGraph& g, const SubgraphPattern& h) {
  const std::size_t n = g.node_count();
  const int k = h.vertex_count();
  std::vector<std::size_t> phi(static_cast<std::size_t>(k), 0);
  std::uint64_t count = 0;
  for (;;) {
    bool ok = true;
    for (const auto& e : h.edges()) ok = ok && g.has_edge(phi[e.u], phi[e.v]);
    count += ok;
    int pos = 0;
    while (pos < k && ++phi[static_cast<std::size_t>(pos)] == n) phi[static_cast<std::size_t>(pos++)] = 0;
    if (pos == k) break;
  }
  return count;
}

FiniteGraph random_graph(std::size_t n, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(p);
  FiniteGraph g(n);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v)
      if (coin(rng)) g.set_edge(u, v, true);
  return g;
}

}  // namespace

TEST_CASE("step graphon invariants are enforced") {
  CHECK_THROWS_AS(StepGraphon({0.5, 0.4}, {0, 0, 0, 0}), DomainError);
  CHECK_THROWS_AS(StepGraphon({1.0, 0.0}, {0, 0, 0, 0}), DomainError);
  CHECK_THROWS_AS(StepGraphon({0.5, 0.5}, {0, 0.2, 0.3, 0}), DomainError);
  CHECK_THROWS_AS(StepGraphon({1.0}, {1.5}), DomainError);
  CHECK_THROWS_AS(StepGraphon({0.5, 0.5 + 1e-11}, {0, 0, 0, 0}), DomainError);
  CHECK_NOTHROW(StepGraphon({0.5, 0.5 + 1e-13}, {0, 0, 0, 0}));
}

TEST_CASE("pattern invariants are enforced") {
  CHECK_THROWS_AS(SubgraphPattern(3, {{0, 0, true}}), DomainError);
  CHECK_THROWS_AS(SubgraphPattern(3, {{0, 1, true}, {1, 0, false}}), DomainError);
  CHECK_THROWS_AS(SubgraphPattern(0, {}), DomainError);
  CHECK_THROWS_AS(subgraph_density(StepGraphon::constant(0.5), SubgraphPattern::complete(7)), DomainError);
  CHECK_THROWS_AS(SubgraphPattern::from_name("pentagram"), InputError);
}

TEST_CASE("densities on constant and bipartite graphons") {
  CHECK(subgraph_density(StepGraphon::constant(0.5), SubgraphPattern::triangle()) == doctest::Approx(0.125).epsilon(1e-15));
  const StepGraphon bip = StepGraphon::symmetric_bipodal(0.0, 1.0);
  CHECK(subgraph_density(bip, SubgraphPattern::triangle()) == 0.0);
  CHECK(subgraph_density(bip, SubgraphPattern::edge()) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(subgraph_density(StepGraphon::constant(0.5), SubgraphPattern::signed_two_star()) == doctest::Approx(0.25));
  CHECK(subgraph_density(StepGraphon::constant(0.5), SubgraphPattern::signed_square()) == doctest::Approx(0.0625));
  for (double eps : {0.1, 0.37, 0.8}) {
    const StepGraphon q = StepGraphon::constant(eps);
    CHECK(subgraph_density(q, SubgraphPattern::triangle()) == doctest::Approx(std::pow(eps, 3)).epsilon(1e-14));
    CHECK(subgraph_density(q, SubgraphPattern::kstar(2)) == doctest::Approx(std::pow(eps, 2)).epsilon(1e-14));
    CHECK(subgraph_density(q, SubgraphPattern::cycle(4)) == doctest::Approx(std::pow(eps, 4)).epsilon(1e-14));
  }
}

TEST_CASE("k-star closed form") {
  CHECK(kstar_density(StepGraphon::constant(0.3), 2) == doctest::Approx(0.09).epsilon(1e-14));
  // both blocks have degree 1/2: 2 * (1/2) * (1/2)^3
  CHECK(kstar_density(StepGraphon::symmetric_bipodal(0.0, 1.0), 3) == doctest::Approx(0.125).epsilon(1e-14));
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const StepGraphon q = random_graphon(1 + trial % 5, rng);
    CHECK(kstar_density(q, 1) == doctest::Approx(q.edge_density()).epsilon(1e-13));
    for (int k = 1; k <= 5; ++k)
      CHECK(std::abs(kstar_density(q, k) - subgraph_density(q, SubgraphPattern::kstar(k))) < 1e-12);
  }
}

TEST_CASE("densities against independent oracles on random graphons") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const StepGraphon q = random_graphon(1 + trial % 6, rng);
    CHECK(std::abs(subgraph_density(q, SubgraphPattern::triangle()) - triangle_oracle(q)) < 1e-14);
    const Matrix a = weighted(q, false), b = weighted(q, true);
    const Matrix a2 = multiply(a, a);
    CHECK(std::abs(subgraph_density(q, SubgraphPattern::cycle(4)) - trace(multiply(a2, a2))) < 1e-13);
    CHECK(std::abs(subgraph_density(q, SubgraphPattern::cycle(5)) - trace(multiply(multiply(a2, a2), a))) < 1e-13);
    // t1 = sum_y c_y d_y (1 - d_y); t2 = tr((Q C (1-Q) C)^2)
    double t1 = 0.0;
    for (std::size_t y = 0; y < q.podality(); ++y) t1 += q.mass(y) * q.degree(y) * (1.0 - q.degree(y));
    CHECK(std::abs(subgraph_density(q, SubgraphPattern::signed_two_star()) - t1) < 1e-14);
    const Matrix ab = multiply(a, b);
    CHECK(std::abs(subgraph_density(q, SubgraphPattern::signed_square()) - trace(multiply(ab, ab))) < 1e-14);
    for (const auto& h : connected_graph_enumeration(4)) {
      const double t = subgraph_density(q, h);
      CHECK(t >= 0.0);
      CHECK(t <= 1.0);
    }
  }
}

TEST_CASE("4-cycle density agrees with grid quadrature") {
  std::mt19937_64 rng(3);
  const StepGraphon q = random_graphon(3, rng);
  const std::size_t n = 300;
  std::vector<std::size_t> block(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = (static_cast<double>(i) + 0.5) / n;
    double acc = 0.0;
    std::size_t b = 0;
    while (b + 1 < q.podality() && x >= acc + q.mass(b)) acc += q.mass(b++);
    block[i] = b;
  }
  Matrix w(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) w[i][j] = q.value(block[i], block[j]) / n;
  const Matrix w2 = multiply(w, w);
  double quad = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) quad += w2[i][j] * w2[j][i];
  CHECK(std::abs(subgraph_density(q, SubgraphPattern::cycle(4)) - quad) < 1e-3);
}

TEST_CASE("graphon entropy values and invariances") {
  CHECK(graphon_entropy(StepGraphon::constant(0.5)) == doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-15));
  CHECK(graphon_entropy(StepGraphon::constant(0.3)) == doctest::Approx(0.305432).epsilon(1e-6));
  CHECK(graphon_entropy(StepGraphon::symmetric_bipodal(0.0, 1.0)) == 0.0);
  CHECK(graphon_entropy(StepGraphon::constant(1.0)) == 0.0);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const StepGraphon q = random_graphon(2 + trial % 4, rng);
    const double s = graphon_entropy(q);
    CHECK(s >= 0.0);
    CHECK(s <= 0.5 * std::log(2.0) + 1e-15);
    std::vector<std::size_t> order(q.podality());
    std::iota(order.rbegin(), order.rend(), 0);
    CHECK(std::abs(graphon_entropy(q.permuted(order)) - s) < 1e-15);
    const std::vector<double> split{0.3, 0.7};
    const StepGraphon r = q.split_block(0, split);
    CHECK(r.podality() == q.podality() + 1);
    CHECK(std::abs(graphon_entropy(r) - s) < 1e-14);
    CHECK(std::abs(subgraph_density(r, SubgraphPattern::cycle(4)) - subgraph_density(q, SubgraphPattern::cycle(4))) <
          1e-14);
  }
}

TEST_CASE("empirical graphon") {
  const FiniteGraph edge = FiniteGraph::from_edges(2, {{0, 1}});
  const StepGraphon q = empirical_graphon(edge);
  CHECK(q.masses()[0] == 0.5);
  CHECK(q.value(0, 1) == 1.0);
  CHECK(q.value(0, 0) == 0.0);
  CHECK(subgraph_density(empirical_graphon(FiniteGraph::complete(3)), SubgraphPattern::triangle()) ==
        doctest::Approx(6.0 / 27.0).epsilon(1e-15));
  const StepGraphon empty = empirical_graphon(FiniteGraph(5));
  CHECK(empty.edge_density() == 0.0);
  std::mt19937_64 rng(17);
  const FiniteGraph g = random_graph(9, 0.5, rng);
  const StepGraphon w = empirical_graphon(g);
  for (const auto& h : {SubgraphPattern::triangle(), SubgraphPattern::cycle(4), SubgraphPattern::kstar(3)})
    CHECK(subgraph_density(w, h) ==
          doctest::Approx(static_cast<double>(hom_count(g, h)) / std::pow(9.0, h.vertex_count())).epsilon(1e-13));
}

TEST_CASE("finite injective densities") {
  CHECK(finite_density(FiniteGraph::complete(4), SubgraphPattern::triangle()) == Rational{1, 1});
  CHECK(finite_density(FiniteGraph::complete(6), SubgraphPattern::cycle(4)) == Rational{1, 1});
  CHECK(finite_density(FiniteGraph::cycle(5), SubgraphPattern::triangle()) == Rational{0, 1});
  CHECK(finite_density(FiniteGraph::cycle(5), SubgraphPattern::edge()) == Rational{1, 2});
  CHECK_THROWS_AS(finite_density(FiniteGraph::complete(3), SubgraphPattern::cycle(4)), DomainError);
  // a path on 3 nodes has 1 of the 3 possible 2-stars
  CHECK(finite_density(FiniteGraph::from_edges(3, {{0, 1}, {1, 2}}), SubgraphPattern::kstar(2)) == Rational{1, 3});
}

TEST_CASE("finite and homomorphism densities differ by O(1/n)") {
  std::mt19937_64 rng(23);
  for (const auto& h : {SubgraphPattern::edge(), SubgraphPattern::triangle()}) {
    double previous = 1.0;
    for (std::size_t n : {50u, 100u, 200u}) {
      const FiniteGraph g = random_graph(n, 0.5, rng);
      const double gap = std::abs(finite_density(g, h).value() - subgraph_density(empirical_graphon(g), h));
      const double k = h.vertex_count();
      CHECK(gap < 5.0 * k * k / static_cast<double>(n));
      CHECK(gap < previous);
      previous = gap;
    }
  }
}

TEST_CASE("blow-ups") {
  const FiniteGraph tri = FiniteGraph::complete(3);
  CHECK(blowup(tri, 1) == tri);
  const FiniteGraph k22 = blowup(FiniteGraph::from_edges(2, {{0, 1}}), 2);
  CHECK(k22.edge_count() == 4);
  CHECK(k22.triangle_count() == 0);
  for (std::size_t v = 0; v < 4; ++v) CHECK(k22.degree(v) == 2);
  const FiniteGraph k222 = blowup(tri, 2);
  CHECK(k222.edge_count() == 12);
  CHECK(k222.triangle_count() == 8);
  std::mt19937_64 rng(29);
  const FiniteGraph g = random_graph(7, 0.5, rng);
  const FiniteGraph b = blowup(g, 3);
  for (const auto& h : connected_graph_enumeration(4))
    CHECK(std::abs(subgraph_density(empirical_graphon(g), h) - subgraph_density(empirical_graphon(b), h)) < 1e-12);
  const StepGraphon cb = canonicalize(empirical_graphon(b), 1e-12), cg = canonicalize(empirical_graphon(g), 1e-12);
  REQUIRE(cb.podality() == cg.podality());
  for (std::size_t i = 0; i < cg.podality(); ++i) {
    CHECK(cb.mass(i) == doctest::Approx(cg.mass(i)).epsilon(1e-12));
    for (std::size_t j = 0; j < cg.podality(); ++j) CHECK(cb.value(i, j) == doctest::Approx(cg.value(i, j)).epsilon(1e-12));
  }
}

TEST_CASE("cut distance upper bound") {
  std::mt19937_64 rng(31);
  const StepGraphon q = random_graphon(4, rng);
  CHECK(cut_distance_upper(q, q) == 0.0);
  CHECK(cut_distance_upper(StepGraphon::constant(0.2), StepGraphon::constant(0.7)) == doctest::Approx(0.5));
  const StepGraphon b = StepGraphon::symmetric_bipodal(0.3, 0.8);
  const std::vector<std::size_t> swap{1, 0};
  CHECK(cut_distance_upper(b, b.permuted(swap)) < 1e-15);
  // same mass profile triples
  for (int trial = 0; trial < 20; ++trial) {
    const StepGraphon a = random_graphon(3, rng);
    auto rows = [&](const StepGraphon& base) {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      std::vector<double> values(9);
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = i; j < 3; ++j) values[i * 3 + j] = values[j * 3 + i] = u(rng);
      return StepGraphon(std::vector<double>(base.masses().begin(), base.masses().end()), values);
    };
    const StepGraphon x = rows(a), y = rows(a);
    const double axy = cut_distance_upper(a, x), axz = cut_distance_upper(a, y), xz = cut_distance_upper(x, y);
    CHECK(std::abs(axy - cut_distance_upper(x, a)) < 1e-15);
    CHECK(axz <= axy + xz + 1e-12);
  }
  const StepGraphon two = StepGraphon::constant(0.5).split_block(0, std::vector<double>{0.5, 0.5});
  CHECK(cut_distance_upper(two, StepGraphon::constant(0.5)) < 1e-15);
}

TEST_CASE("d-bar distance") {
  CHECK(connected_graph_enumeration(2).size() == 1);
  CHECK(connected_graph_enumeration(3).size() == 3);
  CHECK(connected_graph_enumeration(4).size() == 9);
  CHECK(connected_graph_enumeration(5).size() == 30);
  const auto order = connected_graph_enumeration(5);
  for (std::size_t i = 1; i < order.size(); ++i) {
    CHECK(order[i - 1].vertex_count() <= order[i].vertex_count());
    if (order[i - 1].vertex_count() == order[i].vertex_count())
      CHECK(order[i - 1].edges().size() <= order[i].edges().size());
  }
  std::mt19937_64 rng(37);
  const StepGraphon q = random_graphon(3, rng), r = random_graphon(2, rng);
  CHECK(dbar_distance(q, q, 5).value == 0.0);
  const DbarResult d2 = dbar_distance(StepGraphon::constant(0.2), StepGraphon::constant(0.7), 2);
  CHECK(d2.value == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(d2.terms == 1);
  const double d4 = dbar_distance(q, r, 4).value, d5 = dbar_distance(q, r, 5).value;
  CHECK(d4 <= d5 + std::pow(2.0, -9.0));
  CHECK(d4 <= d5);
}

TEST_CASE("canonical form") {
  const StepGraphon same = StepGraphon::symmetric_bipodal(0.4, 0.4);
  CHECK(canonicalize(same).podality() == 1);
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const StepGraphon q = random_graphon(2 + trial % 4, rng);
    const StepGraphon c = canonicalize(q);
    CHECK(canonicalize(c) == c);
    for (std::size_t i = 1; i < c.podality(); ++i) CHECK(c.mass(i - 1) >= c.mass(i));
  }
  // near-duplicate rows merge and densities move by at most 3 merge_tol
  const double tol = 1e-4;
  const StepGraphon near({0.25, 0.25, 0.5}, {0.2, 0.2, 0.7, 0.2, 0.2 + 5e-5, 0.7, 0.7, 0.7, 0.1});
  const StepGraphon merged = canonicalize(near, tol);
  CHECK(merged.podality() == 2);
  for (const auto& h : connected_graph_enumeration(4))
    CHECK(std::abs(subgraph_density(merged, h) - subgraph_density(near, h)) <= 3 * tol);
  // empirical graphon of a graph drawn from the complete bipartite graphon
  const FiniteGraph g = sample_from_graphon(StepGraphon::symmetric_bipodal(0.0, 1.0), 40, 3);
  const StepGraphon blocks = canonicalize(empirical_graphon(g), 0.1);
  CHECK(blocks.podality() == 2);
  CHECK(blocks.value(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(blocks.value(0, 0) == doctest::Approx(0.0));
}
