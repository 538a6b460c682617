#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "phases/permuton.hpp"

using namespace phases;

namespace {

Permutation random_permutation(std::size_t n, std::mt19937_64& rng) {
  std::vector<int> v(n);
  std::iota(v.begin(), v.end(), 1);
  std::shuffle(v.begin(), v.end(), rng);
  return Permutation(v);
}

GridPermuton random_permuton(std::size_t k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 3.0);
  std::vector<double> g(k * k);
  for (double& x : g) x = u(rng);
  return GridPermuton(k, sinkhorn_project(g, k));
}

bool matches(const std::vector<int>& order, const std::vector<int>& symbols) {
  for (std::size_t i = 0; i < order.size(); ++i)
    if (symbols[i] != 0 && symbols[i] != order[i]) return false;
  return true;
}

// Subsets of positions by bitmask; the induced order is read off by ranking.
std::uint64_t brute_count(const Permutation& pi, const std::vector<int>& symbols) {
  const std::size_t n = pi.size(), k = symbols.size();
  std::uint64_t count = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) != k) continue;
    std::vector<int> vals;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1u) vals.push_back(pi[i]);
    std::vector<int> order(k);
    for (std::size_t a = 0; a < k; ++a)
      order[a] = 1 + static_cast<int>(std::count_if(vals.begin(), vals.end(), [&](int v) { return v < vals[a]; }));
    count += matches(order, symbols);
  }
  return count;
}

std::uint64_t factorial(std::size_t n) { return n <= 1 ? 1 : n * factorial(n - 1); }

// Permutations of n with exactly i inversions, by the insertion recurrence.
std::vector<std::uint64_t> mahonian(std::size_t n) {
  std::vector<std::uint64_t> row{1};
  for (std::size_t m = 2; m <= n; ++m) {
    std::vector<std::uint64_t> next(row.size() + m - 1, 0);
    for (std::size_t i = 0; i < row.size(); ++i)
      for (std::size_t j = 0; j < m; ++j) next[i + j] += row[i];
    row = next;
  }
  return row;
}

std::uint64_t non_inversions(const Permutation& pi) {
  std::uint64_t c = 0;
  for (std::size_t i = 0; i < pi.size(); ++i)
    for (std::size_t j = i + 1; j < pi.size(); ++j) c += pi[i] < pi[j];
  return c;
}

PermutonOptions quick(int starts = 4) {
  PermutonOptions o;
  o.starts = starts;
  return o;
}

}  // namespace

TEST_CASE("permutations and star patterns parse") {
  CHECK(Permutation::parse("2 4 1 3").values() == std::vector<int>{2, 4, 1, 3});
  CHECK(Permutation::parse("2,4,1,3").values() == std::vector<int>{2, 4, 1, 3});
  CHECK(Permutation::parse("2 4 1 3").to_string() == "2 4 1 3");
  CHECK_THROWS(Permutation::parse("1 1 2"));
  CHECK_THROWS(Permutation::parse("1 2 4"));
  CHECK_THROWS(Permutation::parse("1 x"));

  const StarPattern star = StarPattern::parse("*2*");
  CHECK(star.has_wildcards());
  CHECK(star.completions() == std::vector<std::vector<int>>{{1, 2, 3}, {3, 2, 1}});
  CHECK(star.to_string() == "*2*");
  CHECK_FALSE(StarPattern::parse("132").has_wildcards());
  CHECK_THROWS(StarPattern::parse("*4*"));
  CHECK_THROWS(StarPattern::parse("11"));
}

TEST_CASE("pattern densities in permutations") {
  CHECK(perm_pattern_density(Permutation::identity(10), StarPattern::parse("12")) == Rational::make(1, 1));
  CHECK(perm_pattern_density(Permutation::parse("2 4 1 3"), StarPattern::parse("12")) == Rational::make(1, 2));
  CHECK(perm_pattern_count(Permutation::parse("2 4 1 3"), StarPattern::parse("12")) == 3);
  CHECK(perm_pattern_density(Permutation::identity(3), StarPattern::parse("*2*")) == Rational::make(1, 1));
  CHECK_THROWS_AS(perm_pattern_density(Permutation::identity(2), StarPattern::parse("123")), DomainError);

  std::mt19937_64 rng(31);
  const std::vector<std::string> patterns{"12", "21", "132", "231", "*2*", "1*", "2413", "3142", "1*3*", "12345"};
  for (int trial = 0; trial < 15; ++trial) {
    const Permutation pi = random_permutation(5 + trial % 5, rng);
    for (const std::string& text : patterns) {
      const StarPattern tau = StarPattern::parse(text);
      if (tau.length() > pi.size()) continue;
      CAPTURE(text);
      const std::uint64_t expected = brute_count(pi, tau.symbols());
      CHECK(perm_pattern_count(pi, tau) == expected);
      CHECK(perm_pattern_density(pi, tau) == Rational::make(expected, binomial(pi.size(), tau.length())));
    }
  }
}

TEST_CASE("grid permutons validate their marginals") {
  CHECK_NOTHROW(GridPermuton(2, {2, 0, 0, 2}));
  CHECK_THROWS(GridPermuton(2, {1.5, 0.5, 0.0, 2.0}));
  CHECK_THROWS(GridPermuton(2, {2.5, -0.5, -0.5, 2.5}));
  CHECK_THROWS(GridPermuton(2, {1, 1, 1}));

  const GridPermuton id = perm_to_permuton(Permutation::identity(2));
  CHECK(id.cells() == std::vector<double>{2, 0, 0, 2});
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const Permutation pi = random_permutation(3 + trial, rng);
    const GridPermuton g = perm_to_permuton(pi);
    for (std::size_t i = 0; i < pi.size(); ++i) {
      double row = 0.0, col = 0.0;
      for (std::size_t j = 0; j < pi.size(); ++j) {
        row += g.at(i, j);
        col += g.at(j, i);
      }
      CHECK(row == static_cast<double>(pi.size()));
      CHECK(col == static_cast<double>(pi.size()));
      CHECK(g.at(i, static_cast<std::size_t>(pi[i] - 1)) == static_cast<double>(pi.size()));
    }
  }
}

TEST_CASE("projection leaves valid permutons unchanged") {
  std::mt19937_64 rng(8);
  for (std::size_t k : {3u, 10u, 25u}) {
    const GridPermuton g = random_permuton(k, rng);
    const std::vector<double> again = sinkhorn_project(g.cells(), k);
    for (std::size_t i = 0; i < again.size(); ++i) CHECK(again[i] == doctest::Approx(g.cells()[i]).epsilon(1e-9));
    const GridPermuton p = perm_to_permuton(random_permutation(k, rng));
    CHECK(sinkhorn_project(p.cells(), k) == p.cells());
  }
  CHECK_THROWS(sinkhorn_project({1, 0, 0, 0}, 2));
}

TEST_CASE("permuton entropy") {
  CHECK(permuton_entropy(GridPermuton::uniform(7)) == 0.0);
  CHECK(permuton_entropy(perm_to_permuton(Permutation::parse("3 1 4 2"))) == doctest::Approx(-std::log(4.0)).epsilon(1e-12));
  std::mt19937_64 rng(12);
  for (std::size_t n = 3; n <= 8; ++n)
    CHECK(std::abs(permuton_entropy(perm_to_permuton(random_permutation(n, rng))) + std::log(double(n))) < 1e-12);

  std::vector<double> blocks(16, 0.0);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      if (i / 2 == j / 2) blocks[i * 4 + j] = 2.0;
  CHECK(permuton_entropy(GridPermuton(4, blocks)) == doctest::Approx(-std::log(2.0)).epsilon(1e-12));

  for (int trial = 0; trial < 20; ++trial) CHECK(permuton_entropy(random_permuton(2 + trial % 8, rng)) < -1e-12);
}

TEST_CASE("pattern densities of permutons") {
  const GridPermuton u = GridPermuton::uniform(5);
  CHECK(std::abs(permuton_pattern_density(u, StarPattern::parse("12")) - 0.5) < 1e-9);
  CHECK(std::abs(permuton_pattern_density(u, StarPattern::parse("123")) - 1.0 / 6.0) < 1e-9);
  CHECK(std::abs(permuton_pattern_density(u, StarPattern::parse("*2*")) - 1.0 / 3.0) < 1e-9);
  CHECK(permuton_pattern_density(perm_to_permuton(Permutation::identity(8)), StarPattern::parse("12")) ==
        doctest::Approx(0.9375).epsilon(1e-14));
  const GridPermuton swap = perm_to_permuton(Permutation::parse("2 1"));
  CHECK(permuton_pattern_density(swap, StarPattern::parse("21")) == doctest::Approx(0.75).epsilon(1e-14));
  const MonteCarloEstimate mc = permuton_pattern_density_mc(swap, StarPattern::parse("21"), 200000, 3);
  CHECK(std::abs(mc.value - 0.75) < 4 * mc.standard_error);

  std::mt19937_64 rng(21);
  const std::vector<std::string> s3{"123", "132", "213", "231", "312", "321"};
  for (int trial = 0; trial < 20; ++trial) {
    const GridPermuton g = random_permuton(2 + trial % 9, rng);
    double total = 0.0;
    for (const auto& t : s3) total += permuton_pattern_density(g, StarPattern::parse(t));
    CHECK(std::abs(total - 1.0) < 1e-9);
    CHECK(std::abs(permuton_pattern_density(g, StarPattern::parse("12")) +
                   permuton_pattern_density(g, StarPattern::parse("21")) - 1.0) < 1e-9);
    CHECK(permuton_pattern_density(g, StarPattern::parse("*2*")) ==
          doctest::Approx(permuton_pattern_density(g, StarPattern::parse("123")) +
                          permuton_pattern_density(g, StarPattern::parse("321"))).epsilon(1e-12));
  }
}

TEST_CASE("exact and Monte Carlo densities agree") {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 6; ++trial) {
    const GridPermuton g = random_permuton(3 + trial, rng);
    for (const char* t : {"12", "132", "312", "*2*", "2*"}) {
      CAPTURE(t);
      const MonteCarloEstimate mc = permuton_pattern_density_mc(g, StarPattern::parse(t), 100000, 100 + trial);
      CHECK(mc.samples == 100000);
      CHECK(std::abs(mc.value - permuton_pattern_density(g, StarPattern::parse(t))) < 4 * mc.standard_error);
    }
    double total = 0.0;
    for (const char* t : {"1234", "4321"}) total += permuton_pattern_density_mc(g, StarPattern::parse(t), 1000, 1).value;
    CHECK(total <= 1.0);
  }
  CHECK_THROWS(permuton_pattern_density(GridPermuton::uniform(3), StarPattern::parse("1234")));
  CHECK_THROWS(permuton_pattern_density(GridPermuton::uniform(41), StarPattern::parse("12")));
}

TEST_CASE("pattern gradients match central differences") {
  std::mt19937_64 rng(66);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  for (const char* t : {"12", "21", "123", "132", "231", "*2*", "1*"}) {
    CAPTURE(t);
    const StarPattern tau = StarPattern::parse(t);
    double worst = 0.0;
    for (int point = 0; point < 20; ++point) {
      const std::size_t k = 2 + point % 5;
      std::vector<double> g(k * k);
      for (double& x : g) x = u(rng);
      const PermutonGradient grad = pattern_gradient_unchecked(g, k, tau);
      double diff = 0.0, scale = 0.0;
      for (std::size_t c = 0; c < g.size(); ++c) {
        std::vector<double> up = g, down = g;
        up[c] += 1e-5;
        down[c] -= 1e-5;
        const double fd = (pattern_gradient_unchecked(up, k, tau).value -
                           pattern_gradient_unchecked(down, k, tau).value) / 2e-5;
        diff = std::max(diff, std::abs(fd - grad.d_cells[c]));
        scale = std::max(scale, std::abs(grad.d_cells[c]));
      }
      worst = std::max(worst, diff / scale);
    }
    CHECK(worst < 1e-5);
  }
  const GridPermuton g = random_permuton(6, rng);
  const PermutonGradient checked = permuton_pattern_gradient(g, StarPattern::parse("132"));
  CHECK(checked.value == doctest::Approx(permuton_pattern_density(g, StarPattern::parse("132"))).epsilon(1e-14));
}

// Exact evaluation stops at resolution 40, so n = 80 uses Monte Carlo and
// allows four standard errors on top of the gap.
TEST_CASE("permutation densities approach the permuton densities") {
  std::mt19937_64 rng(90);
  const std::vector<std::string> patterns{"12", "123", "132", "*2*"};
  std::vector<double> gaps;
  for (std::size_t n : {20u, 40u, 80u}) {
    double gap = 0.0, noise = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
      const Permutation pi = random_permutation(n, rng);
      const GridPermuton g = perm_to_permuton(pi);
      const double exact12 = (2.0 * non_inversions(pi) + 0.5 * n) / (double(n) * n);
      if (n <= 40)
        CHECK(permuton_pattern_density(g, StarPattern::parse("12")) == doctest::Approx(exact12).epsilon(1e-12));
      for (const auto& t : patterns) {
        const StarPattern tau = StarPattern::parse(t);
        double value = 0.0;
        if (n <= 40) {
          value = permuton_pattern_density(g, tau);
        } else {
          const MonteCarloEstimate mc = permuton_pattern_density_mc(g, tau, 2000000, 7 + trial);
          value = mc.value;
          noise = std::max(noise, 4 * mc.standard_error);
        }
        gap = std::max(gap, std::abs(perm_pattern_density(pi, tau).value() - value));
      }
    }
    CHECK(gap < 3.0 / n + noise);
    gaps.push_back(gap);
  }
  CHECK(gaps[1] < gaps[0]);
  CHECK(gaps[2] < gaps[1]);
}

TEST_CASE("constrained permutation counts") {
  const PatternConstraint twelve{StarPattern::parse("12"), 0.5};
  const PermutationCount four = count_constrained_perms(4, {twelve}, 0.1);
  CHECK(four.count == 6);
  CHECK(*four.normalized_log == doctest::Approx(std::log(6.0 / 24.0) / 4.0).epsilon(1e-14));

  const PermutationCount three = count_constrained_perms(3, {{StarPattern::parse("123"), 1.0}}, 0.5);
  CHECK(three.count == 1);

  for (std::size_t n = 1; n <= 7; ++n) {
    const PermutationCount all = count_constrained_perms(n, {}, 0.1);
    CHECK(all.count == factorial(n));
    CHECK(*all.normalized_log == 0.0);
  }
  CHECK(count_constrained_perms(4, {{StarPattern::parse("12"), 0.5}}, 0.01).count == 6);
  const PermutationCount none = count_constrained_perms(4, {{StarPattern::parse("123"), 0.5}, {StarPattern::parse("321"), 0.5}}, 0.01);
  CHECK(none.count == 0);
  CHECK_FALSE(none.normalized_log.has_value());
  CHECK_THROWS_AS(count_constrained_perms(10, {}, 0.1), DomainError);
}

TEST_CASE("counting trend toward the maximal entropy") {
  const PatternConstraint twelve{StarPattern::parse("12"), 0.5};
  double previous = -INFINITY;
  for (std::size_t n = 5; n <= 9; ++n) {
    CAPTURE(n);
    const PermutationCount c = count_constrained_perms(n, {twelve}, 0.1);
    const std::vector<std::uint64_t> m = mahonian(n);
    const std::uint64_t pairs = binomial(n, 2);
    std::uint64_t expected = 0;
    for (std::uint64_t inv = 0; inv <= pairs; ++inv) {
      const double density = double(pairs - inv) / double(pairs);
      if (std::abs(density - 0.5) < 0.1 - 1e-12) expected += m[inv];
    }
    CHECK(c.count == expected);
    REQUIRE(c.normalized_log);
    CHECK(*c.normalized_log < 0.0);
    CHECK(*c.normalized_log > previous);
    previous = *c.normalized_log;
  }
}

TEST_CASE("entropy maximization at the uniform point") {
  const PermutonResult r = maximize_permuton_entropy({{StarPattern::parse("12"), 0.5}}, 10, quick());
  REQUIRE(r.feasible);
  CHECK(std::abs(r.entropy) < 1e-6);
  CHECK_FALSE(r.degenerate);
  for (double res : r.residuals) CHECK(res < 1e-8);
}

TEST_CASE("entropy falls as the pair density rises") {
  double previous = 0.0;
  for (double target : {0.6, 0.8, 0.95}) {
    CAPTURE(target);
    const PermutonResult r = maximize_permuton_entropy({{StarPattern::parse("12"), target}}, 20, quick());
    REQUIRE(r.feasible);
    CHECK(r.entropy < previous);
    CHECK(std::abs(permuton_pattern_density(r.permuton, StarPattern::parse("12")) - target) < 1e-8);
    CHECK(std::abs(r.entropy - permuton_entropy(r.permuton)) < 1e-12);
    previous = r.entropy;
  }
}

TEST_CASE("a fully ordered target is singular on any grid") {
  const std::size_t k = 20;
  const PermutonResult r = maximize_permuton_entropy({{StarPattern::parse("12"), 1.0}}, k, quick());
  CHECK_FALSE(r.feasible);
  CHECK(r.degenerate);
  CHECK(r.entropy >= -std::log(double(k)) - 1e-9);
  CHECK(r.entropy < -std::log(double(k)) + std::log(2.0));
  REQUIRE(r.residuals.size() == 1);
  CHECK(r.residuals[0] >= 1.0 / (2.0 * k) - 1e-9);
}

TEST_CASE("star constraint is stable across resolutions") {
  const std::vector<PatternConstraint> c{{StarPattern::parse("*2*"), 1.0 / 3.0}};
  const PermutonResult coarse = maximize_permuton_entropy(c, 20, quick());
  const PermutonResult fine = maximize_permuton_entropy(c, 30, quick());
  REQUIRE(coarse.feasible);
  REQUIRE(fine.feasible);
  CHECK(std::abs(coarse.entropy - fine.entropy) < 1e-6);
}

TEST_CASE("invalid optimization requests") {
  CHECK_THROWS(maximize_permuton_entropy({{StarPattern::parse("1234"), 0.1}}, 10));
  CHECK_THROWS(maximize_permuton_entropy({{StarPattern::parse("12"), 0.5}}, 41));
}
