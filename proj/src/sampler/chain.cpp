#include <algorithm>
#include <cmath>
#include <random>

#include "phases/optimizer.hpp"
#include "phases/sampler.hpp"

namespace phases {

PatternCounter::PatternCounter(const SubgraphPattern& pattern, std::size_t n) : pattern_(pattern) {
  const auto nn = static_cast<unsigned>(n);
  if (pattern.vertex_count() == 2 && pattern.all_present() && pattern.edges().size() == 1) {
    kind_ = Kind::Edge;
    den_ = binomial(nn, 2);
  } else if (pattern.is_triangle()) {
    kind_ = Kind::Triangle;
    den_ = binomial(nn, 3);
  } else if (auto star = pattern.star_order()) {
    kind_ = Kind::Star;
    k_ = *star;
    const std::uint64_t c = binomial(nn - 1, static_cast<unsigned>(k_));
    if (c != 0 && n > UINT64_MAX / c) throw DomainError("k-star count overflows at this n");
    den_ = n * c;
  } else {
    throw DomainError("finite-graph sampling supports edge, triangle and k-star patterns; got " +
                      pattern.name());
  }
  if (static_cast<std::size_t>(pattern.vertex_count()) > n)
    throw DomainError("pattern " + pattern.name() + " has more vertices than the graph");
}

std::int64_t PatternCounter::count(const FiniteGraph& g) const {
  switch (kind_) {
    case Kind::Edge:
      return static_cast<std::int64_t>(g.edge_count());
    case Kind::Triangle:
      return static_cast<std::int64_t>(g.triangle_count());
    case Kind::Star: {
      std::uint64_t s = 0;
      for (std::size_t v = 0; v < g.node_count(); ++v)
        s += binomial(static_cast<unsigned>(g.degree(v)), static_cast<unsigned>(k_));
      return static_cast<std::int64_t>(s);
    }
  }
  return 0;
}

std::int64_t PatternCounter::toggle_delta(const FiniteGraph& g, std::size_t u, std::size_t v) const {
  const bool present = g.has_edge(u, v);
  const std::int64_t sign = present ? -1 : 1;
  switch (kind_) {
    case Kind::Edge:
      return sign;
    case Kind::Triangle:
      return sign * static_cast<std::int64_t>(g.common_neighbors(u, v));
    case Kind::Star: {
      // C(d+1,k) - C(d,k) = C(d,k-1)
      auto change = [&](std::size_t x) {
        const auto d = static_cast<unsigned>(g.degree(x));
        const unsigned base = present ? d - 1 : d;
        return static_cast<std::int64_t>(binomial(base, static_cast<unsigned>(k_ - 1)));
      };
      return sign * (change(u) + change(v));
    }
  }
  return 0;
}

void ChainConfig::validate() const {
  if (n < 4) throw DomainError("chains need n >= 4");
  if (!(constraints.delta > 0.0)) throw DomainError("chains need a positive window delta");
  constraints.validate();
  if (samples == 0) throw DomainError("at least one sample is required");
  if (resolved_interval() == 0) throw DomainError("sample interval must be positive");
}

FiniteGraph sample_from_graphon(const StepGraphon& q, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::size_t> block(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double pos = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    double acc = 0.0;
    std::size_t b = 0;
    while (b + 1 < q.podality() && pos > (acc += q.mass(b))) ++b;
    block[i] = b;
  }
  FiniteGraph g(n);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v)
      if (unit(rng) < q.value(block[u], block[v])) g.set_edge(u, v, true);
  return g;
}

namespace {

struct WindowState {
  std::vector<PatternCounter> counters;
  std::vector<CountWindow> windows;
  std::vector<std::int64_t> counts;

  // Distance of the counts from their windows, in density units.
  double violation(const std::vector<std::int64_t>& c) const {
    double v = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) {
      const auto& w = windows[j];
      const double den = static_cast<double>(counters[j].denominator());
      if (c[j] < w.lo) v += static_cast<double>(w.lo - c[j]) / den;
      if (c[j] > w.hi) v += static_cast<double>(c[j] - w.hi) / den;
    }
    return v;
  }
  bool inside(const std::vector<std::int64_t>& c) const {
    for (std::size_t j = 0; j < c.size(); ++j)
      if (!windows[j].contains(c[j])) return false;
    return true;
  }
};

WindowState make_state(const ChainConfig& cfg, const FiniteGraph& g) {
  WindowState s;
  for (const auto& c : cfg.constraints.constraints) {
    s.counters.emplace_back(c.pattern, cfg.n);
    s.windows.push_back(
        CountWindow::make(c.target, cfg.constraints.delta, s.counters.back().denominator()));
    if (s.windows.back().empty())
      throw DomainError("window for " + c.pattern.name() + " contains no attainable count at n = " +
                        std::to_string(cfg.n));
    s.counts.push_back(s.counters.back().count(g));
  }
  return s;
}

StepGraphon initial_graphon(const ConstraintVector& cv) {
  std::optional<double> eps, tau;
  for (const auto& c : cv.constraints) {
    if (c.pattern.vertex_count() == 2) eps = c.target;
    if (c.pattern.is_triangle()) tau = c.target;
  }
  if (eps && tau && *eps > 0.0 && *eps <= 0.5) {
    try {
      return reference_construction(*eps, *tau);
    } catch (const DomainError&) {
    }
  }
  return StepGraphon::constant(eps.value_or(0.5));
}

}  // namespace

ChainResult sample_constrained_observed(const ChainConfig& cfg,
                                        const std::function<void(const FiniteGraph&)>& observe) {
  cfg.validate();
  const std::size_t n = cfg.n;
  std::mt19937_64 rng(cfg.seed);
  FiniteGraph g = sample_from_graphon(initial_graphon(cfg.constraints), n, derive_seed(cfg.seed, 0));
  WindowState state = make_state(cfg, g);
  std::uniform_int_distribution<std::size_t> node(0, n - 1);
  auto propose = [&](std::size_t& u, std::size_t& v) {
    do {
      u = node(rng);
      v = node(rng);
    } while (u == v);
  };
  const std::size_t nc = state.counters.size();
  std::vector<std::int64_t> trial(nc);

  // Greedy repair: best of a batch of random toggles, accepted only if it
  // moves the counts closer to the windows.
  const std::uint64_t budget = cfg.repair_budget.value_or(200 * n * n);
  std::uint64_t spent = 0;
  double current = state.violation(state.counts);
  while (current > 0.0) {
    if (spent >= budget)
      throw DomainError("could not repair an initial graph into the constraint windows within " +
                        std::to_string(budget) + " toggles");
    double best = current;
    std::size_t bu = 0, bv = 0;
    for (int c = 0; c < 64; ++c, ++spent) {
      std::size_t u, v;
      propose(u, v);
      for (std::size_t j = 0; j < nc; ++j) trial[j] = state.counts[j] + state.counters[j].toggle_delta(g, u, v);
      const double vio = state.violation(trial);
      if (vio < best) {
        best = vio;
        bu = u;
        bv = v;
      }
    }
    if (best < current) {
      for (std::size_t j = 0; j < nc; ++j) state.counts[j] += state.counters[j].toggle_delta(g, bu, bv);
      g.toggle(bu, bv);
      current = best;
    }
  }

  ChainResult out;
  const std::uint64_t burn = cfg.resolved_burn_in();
  const std::uint64_t interval = cfg.resolved_interval();
  const std::uint64_t total = burn + interval * cfg.samples;
  const std::uint64_t sweep = n * (n - 1) / 2;
  std::uint64_t since_accept = 0;
  for (std::uint64_t step = 1; step <= total; ++step) {
    std::size_t u, v;
    propose(u, v);
    for (std::size_t j = 0; j < nc; ++j) trial[j] = state.counts[j] + state.counters[j].toggle_delta(g, u, v);
    ++out.proposals;
    if (state.inside(trial)) {
      g.toggle(u, v);
      state.counts = trial;
      ++out.accepted;
      since_accept = 0;
    } else if (++since_accept == sweep && !out.stalled) {
      out.stalled = true;
      out.warnings.push_back("no move accepted during a full sweep of " + std::to_string(sweep) +
                             " proposals ending at step " + std::to_string(step) +
                             "; the window may be too tight to mix");
    }
    if (observe) observe(g);
    if (step > burn && (step - burn) % interval == 0) {
      SampleRecord rec;
      rec.step = step;
      for (std::size_t j = 0; j < nc; ++j)
        rec.densities.push_back(static_cast<double>(state.counts[j]) /
                                static_cast<double>(state.counters[j].denominator()));
      out.records.push_back(std::move(rec));
      out.samples.push_back(g);
    }
  }
  return out;
}

ChainResult sample_constrained(const ChainConfig& cfg) { return sample_constrained_observed(cfg, {}); }

std::vector<ChainResult> sample_chains(const ChainConfig& cfg, std::size_t chains, int threads) {
  std::vector<ChainResult> out(chains);
  parallel_for(chains, resolve_threads(threads), [&](std::size_t i) {
    ChainConfig local = cfg;
    local.seed = derive_seed(cfg.seed, i);
    out[i] = sample_constrained(local);
  });
  return out;
}

}  // namespace phases
