#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "phases/optimizer.hpp"

using namespace phases;

namespace {

double binary_entropy(double p) { return -0.5 * (p * std::log(p) + (1 - p) * std::log(1 - p)); }

const double kMaxEntropy = 0.5 * std::log(2.0);

double edge(const StepGraphon& q) { return subgraph_density(q, SubgraphPattern::edge()); }
double triangle(const StepGraphon& q) { return subgraph_density(q, SubgraphPattern::triangle()); }

OptimizerOptions quick(int starts = 12) {
  OptimizerOptions o;
  o.starts = starts;
  return o;
}

}  // namespace

TEST_CASE("reference construction meets both densities") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const double eps = 0.02 + 0.48 * u(rng);
    const double tau = std::pow(eps, 3) * u(rng);
    const StepGraphon q = reference_construction(eps, tau);
    CHECK(std::abs(edge(q) - eps) < 1e-10);
    CHECK(std::abs(triangle(q) - tau) < 1e-10);
  }
  for (int i = 0; i < 50; ++i) {
    const double eps = 0.02 + 0.48 * u(rng);
    const double lo = std::pow(eps, 3), hi = std::pow(eps, 1.5);
    const double tau = lo + (hi - lo) * u(rng);
    const StepGraphon q = reference_construction(eps, tau);
    CHECK(std::abs(edge(q) - eps) < 1e-10);
    CHECK(std::abs(triangle(q) - tau) < 1e-10);
  }
}

TEST_CASE("reference construction examples") {
  const StepGraphon bip = reference_construction(0.5, 0.0);
  REQUIRE(bip.podality() == 2);
  CHECK(bip.mass(0) == doctest::Approx(0.5));
  CHECK(std::abs(bip.value(0, 0)) < 1e-15);
  CHECK(std::abs(bip.value(1, 1)) < 1e-15);
  CHECK(bip.value(0, 1) == 1.0);

  for (double eps : {0.1, 0.25, 0.4, 0.5}) {
    const StepGraphon q = canonicalize(reference_construction(eps, eps * eps * eps));
    REQUIRE(q.podality() == 1);
    CHECK(q.value(0, 0) == doctest::Approx(eps).epsilon(1e-12));
  }

  const StepGraphon sym = reference_construction(0.5, 0.15);
  const double a = sym.value(0, 0), d = sym.value(0, 1);
  CHECK(a == doctest::Approx(0.7924).epsilon(1e-4));
  CHECK(d == doctest::Approx(0.2076).epsilon(1e-3));
  CHECK(4 * a * a * a - 6 * a * a + 3 * a == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(symmetric_bipodal_root(0.5, 0.15) == doctest::Approx(a).epsilon(1e-14));

  CHECK_THROWS_AS(reference_construction(0.6, 0.1), DomainError);
  CHECK_THROWS_AS(reference_construction(0.3, 0.2), DomainError);
  CHECK_THROWS_AS(reference_construction(0.3, -0.01), DomainError);
}

TEST_CASE("constant graphon on the Erdos-Renyi curve") {
  for (double eps : {0.2, 0.3, 0.4, 0.5}) {
    CAPTURE(eps);
    const OptimizerResult r = constrained_entropy(edge_triangle_constraints(eps, eps * eps * eps));
    REQUIRE(r.feasible);
    CHECK(r.podality == 1);
    CHECK(r.flags.constant);
    CHECK(std::abs(r.entropy - binary_entropy(eps)) < 1e-6);
  }
  const OptimizerResult r = maximize_entropy(edge_triangle_constraints(0.3, 0.027), 4);
  REQUIRE(r.feasible);
  CHECK(r.podality == 1);
  CHECK(r.graphon.value(0, 0) == doctest::Approx(0.3).epsilon(1e-6));
  CHECK(r.entropy == doctest::Approx(0.305432).epsilon(1e-6));
}

TEST_CASE("unconstrained maximum at the centre") {
  const OptimizerResult r = constrained_entropy(edge_triangle_constraints(0.5, 0.125));
  REQUIRE(r.feasible);
  CHECK(r.podality == 1);
  CHECK(std::abs(r.entropy - kMaxEntropy) < 1e-9);
}

TEST_CASE("bipodal optimum below the curve") {
  for (double tau : {0.02, 0.06, 0.10}) {
    CAPTURE(tau);
    const double x = std::cbrt(0.125 - tau);
    const OptimizerResult r = constrained_entropy(edge_triangle_constraints(0.5, tau));
    REQUIRE(r.feasible);
    REQUIRE(r.podality == 2);
    CHECK(std::abs(r.graphon.mass(0) - 0.5) < 1e-4);
    CHECK(std::abs(r.graphon.value(0, 0) - (0.5 - x)) < 1e-4);
    CHECK(std::abs(r.graphon.value(1, 1) - (0.5 - x)) < 1e-4);
    CHECK(std::abs(r.graphon.value(0, 1) - (0.5 + x)) < 1e-4);
    CHECK(r.entropy >= graphon_entropy(reference_construction(0.5, tau)) - 1e-6);
  }

  const OptimizerResult two = maximize_entropy(edge_triangle_constraints(0.5, 0.1), 2);
  REQUIRE(two.feasible);
  CHECK(two.graphon.value(0, 0) == doctest::Approx(0.20760).epsilon(1e-4));
  CHECK(two.graphon.value(0, 1) == doctest::Approx(0.79240).epsilon(1e-4));
  CHECK(std::abs(two.entropy - graphon_entropy(StepGraphon::symmetric_bipodal(0.5 - std::cbrt(0.025),
                                                                                0.5 + std::cbrt(0.025)))) < 1e-6);

  const OptimizerResult r = constrained_entropy(edge_triangle_constraints(0.4, 0.032));
  REQUIRE(r.feasible);
  REQUIRE(r.podality == 2);
  CHECK(r.graphon.mass(0) == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(r.graphon.value(0, 0) == doctest::Approx(0.08252).epsilon(1e-4));
  CHECK(r.graphon.value(0, 1) == doctest::Approx(0.71748).epsilon(1e-4));
  for (double res : r.residuals) CHECK(res < 1e-8);
}

TEST_CASE("above the curve the optimum dominates the symmetric candidate") {
  const OptimizerResult r = constrained_entropy(edge_triangle_constraints(0.5, 0.15));
  REQUIRE(r.feasible);
  const double candidate = graphon_entropy(reference_construction(0.5, 0.15));
  CHECK(r.entropy >= candidate - 1e-6);
  MESSAGE("symmetric_bipodal flag at (0.5, 0.15): " << r.flags.symmetric_bipodal);
}

TEST_CASE("feasibility boundary") {
  for (auto [eps, tau] : {std::pair{0.3, 0.17}, std::pair{0.4, 0.26}, std::pair{0.3, 0.2}}) {
    CAPTURE(eps);
    CAPTURE(tau);
    const OptimizerResult r = constrained_entropy(edge_triangle_constraints(eps, tau), quick());
    CHECK_FALSE(r.feasible);
  }
  for (double eps : {0.3, 0.4}) {
    CAPTURE(eps);
    const OptimizerResult r = constrained_entropy(edge_triangle_constraints(eps, std::pow(eps, 1.5) - 0.01));
    CHECK(r.feasible);
  }
}

TEST_CASE("entropy bounds and candidate dominance over a sweep") {
  for (double eps : {0.15, 0.3, 0.45}) {
    for (double frac : {0.0, 0.3, 0.7, 1.0}) {
      const double tau = frac * eps * eps * eps;
      CAPTURE(eps);
      CAPTURE(tau);
      const OptimizerResult r = constrained_entropy(edge_triangle_constraints(eps, tau), quick());
      REQUIRE(r.feasible);
      CHECK(r.entropy <= kMaxEntropy + 1e-12);
      CHECK(r.entropy >= -1e-12);
      CHECK(r.entropy >= graphon_entropy(reference_construction(eps, tau)) - 1e-6);
      CHECK(r.entropy == doctest::Approx(graphon_entropy(r.graphon)).epsilon(1e-12));
    }
  }
}

TEST_CASE("identical seeds give identical results") {
  OptimizerOptions o = quick();
  o.seed = 99;
  const auto c = edge_triangle_constraints(0.45, 0.06);
  const OptimizerResult a = constrained_entropy(c, o), b = constrained_entropy(c, o);
  REQUIRE(a.graphon.podality() == b.graphon.podality());
  CHECK(a.entropy == b.entropy);
  CHECK(a.residuals == b.residuals);
  CHECK(std::equal(a.graphon.masses().begin(), a.graphon.masses().end(), b.graphon.masses().begin()));
  CHECK(std::equal(a.graphon.values().begin(), a.graphon.values().end(), b.graphon.values().begin()));

  o.threads = 4;
  const OptimizerResult t = constrained_entropy(c, o);
  CHECK(t.entropy == a.entropy);
}

TEST_CASE("entropy does not decrease with podality") {
  for (auto [eps, tau] : {std::pair{0.5, 0.1}, std::pair{0.4, 0.09}}) {
    double previous = -1.0;
    for (int m = 1; m <= 4; ++m) {
      const OptimizerResult r = maximize_entropy(edge_triangle_constraints(eps, tau), m, quick());
      if (!r.feasible) continue;
      CHECK(r.entropy >= previous - 1e-9);
      previous = r.entropy;
    }
    CHECK(previous > 0.0);
  }
}

TEST_CASE("signed density maximization") {
  const auto t1 = SubgraphPattern::signed_two_star();
  const auto t2 = SubgraphPattern::signed_square();
  // A constant graphon has t2 = t1^2, so a residual within tolerance bounds t1.
  CHECK(std::abs(bounded_signed_max(t1, t2, 1)) <= std::sqrt(OptimizerOptions{}.feasibility_tol));

  ConstraintVector zero;
  zero.constraints.push_back({t2, 0.0});
  const OptimizerResult two = maximize_density(t1, zero, 2);
  REQUIRE(two.feasible);
  CHECK(two.objective > 0.0);
  CHECK(two.objective == doctest::Approx(subgraph_density(two.graphon, t1)).epsilon(1e-9));
  CHECK(std::abs(subgraph_density(two.graphon, t2)) < 1e-7);

  double previous = 0.0;
  for (int m : {2, 4}) {
    const double v = bounded_signed_max(t1, t2, m);
    CHECK(v >= previous - 1e-9);
    CHECK(v <= 1.0 / 6.0 + 1e-3);
    previous = v;
  }
}

TEST_CASE("single cell scan") {
  ScanGrid grid;
  grid.x_min = grid.x_max = 0.5;
  grid.y_min = grid.y_max = 0.1;
  ScanOptions o;
  o.optimizer = quick();
  const PhaseMap map = phase_scan(ModelSpec::from_name("edge-triangle"), grid, o);
  REQUIRE(map.cells.size() == 1);
  const PhaseCell& cell = map.at(0, 0);
  REQUIRE(cell.result.has_value());
  CHECK(cell.feasible);
  CHECK(cell.result->podality == 2);
  CHECK_FALSE(cell.transition);
  CHECK(cell.result->entropy ==
        doctest::Approx(constrained_entropy(edge_triangle_constraints(0.5, 0.1), quick()).entropy).epsilon(1e-9));
}

TEST_CASE("phase III scan is bipodal and smooth") {
  ScanGrid grid;
  grid.x_min = 0.4;
  grid.x_max = 0.5;
  grid.y_min = -0.04;
  grid.y_max = -0.01;
  grid.nx = grid.ny = 3;
  grid.y_relative_to_er = true;
  ScanOptions o;
  o.optimizer = quick(8);
  const PhaseMap map = phase_scan(ModelSpec::from_name("edge-triangle"), grid, o);
  REQUIRE(map.cells.size() == 9);
  for (const PhaseCell& cell : map.cells) {
    CAPTURE(cell.x);
    CAPTURE(cell.y);
    REQUIRE(cell.feasible);
    CHECK(cell.y == doctest::Approx(std::pow(cell.x, 3) + grid.y_min + (grid.y_max - grid.y_min) * cell.iy / 2));
    CHECK(cell.result->podality == 2);
    CHECK(cell.result->graphon.value(0, 0) < cell.result->graphon.value(0, 1));
    CHECK_FALSE(cell.transition);
  }
}

TEST_CASE("invalid requests") {
  CHECK_THROWS_AS(maximize_entropy(edge_triangle_constraints(0.5, 0.1), 0), DomainError);
  CHECK_THROWS_AS(maximize_entropy(edge_triangle_constraints(0.5, 0.1), 17), DomainError);
  CHECK_THROWS(ModelSpec::from_name("no-such-model"));
}
