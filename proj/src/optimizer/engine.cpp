#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>

#include "optimizer/engine.hpp"

namespace phases {

namespace {

constexpr double kMassLogitBound = 30.0;


}  // namespace

GraphonParameters GraphonParameters::from_graphon(const StepGraphon& q, double value_floor) {
  const std::size_t m = q.podality();
  GraphonParameters p;
  p.m = m;
  p.x.reserve(m + m * (m + 1) / 2);
  for (std::size_t i = 0; i < m; ++i)
    p.x.push_back(std::clamp(std::log(q.mass(i)), -kMassLogitBound, kMassLogitBound));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j) {
      p.x.push_back(std::clamp(q.value(i, j), value_floor, 1.0 - value_floor));
    }
  return p;
}

StepGraphon GraphonParameters::to_graphon(double value_floor) const {
  std::vector<double> masses(m);
  const double top = *std::max_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(m));
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) total += masses[i] = std::exp(x[i] - top);
  for (double& c : masses) c /= total;
  std::vector<double> values(m * m);
  std::size_t k = m;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j, ++k) {
      const double v = std::clamp(x[k], value_floor, 1.0 - value_floor);
      values[i * m + j] = values[j * m + i] = v;
    }
  return StepGraphon(std::move(masses), std::move(values));
}

std::vector<double> chain_to_parameters(const GraphonParameters& params,
                                        const DensityGradient& grad, double value_floor) {
  const std::size_t m = params.m;
  const StepGraphon q = params.to_graphon(value_floor);
  std::vector<double> out(params.size(), 0.0);
  double mean = 0.0;
  for (std::size_t b = 0; b < m; ++b) mean += q.mass(b) * grad.d_masses[b];
  for (std::size_t a = 0; a < m; ++a) out[a] = q.mass(a) * (grad.d_masses[a] - mean);
  std::size_t k = m;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j, ++k) {
      double g = grad.d_values[i * m + j];
      if (i != j) g += grad.d_values[j * m + i];
      out[k] = g;
    }
  return out;
}

namespace detail {

Evaluation evaluate(const Problem& problem, const GraphonParameters& params) {
  const StepGraphon q = params.to_graphon(problem.value_floor);
  Evaluation ev;
  if (problem.objective) {
    const auto g = subgraph_density_gradient(q, *problem.objective, problem.caps);
    ev.objective = g.value;
    ev.objective_grad = chain_to_parameters(params, g, problem.value_floor);
  } else {
    const auto g = graphon_entropy_gradient(q);
    ev.objective = g.value;
    ev.objective_grad = chain_to_parameters(params, g, problem.value_floor);
  }
  for (const auto& c : problem.constraints) {
    const auto g = subgraph_density_gradient(q, c.pattern, problem.caps);
    ev.residuals.push_back(g.value - c.target);
    ev.residual_grads.push_back(chain_to_parameters(params, g, problem.value_floor));
  }
  return ev;
}

namespace {

struct Box {
  std::vector<double> lo, hi;
  void project(std::vector<double>& x) const {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
  }
};

Box parameter_box(std::size_t m, double floor) {
  const std::size_t n = m + m * (m + 1) / 2;
  Box b;
  b.lo.assign(n, 0.0);
  b.hi.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    b.lo[i] = i < m ? -kMassLogitBound : floor;
    b.hi[i] = i < m ? kMassLogitBound : 1.0 - floor;
  }
  return b;
}

using Objective = std::function<double(const std::vector<double>&, std::vector<double>&)>;

// Box-projected L-BFGS minimizer with Armijo backtracking.
void minimize_lbfgs(const Objective& f, std::vector<double>& x, const Box& box, int max_iter) {
  constexpr std::size_t kMemory = 8;
  const std::size_t n = x.size();
  box.project(x);
  std::vector<double> g(n), g_new(n), d(n), x_new(n);
  double fx = f(x, g);
  std::vector<std::vector<double>> s_hist, y_hist;
  std::vector<double> rho_hist;
  int flat_steps = 0;
  for (int it = 0; it < max_iter; ++it) {
    double pg = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      pg = std::max(pg, std::abs(std::clamp(x[i] - g[i], box.lo[i], box.hi[i]) - x[i]));
    if (pg < 1e-13) break;

    // two-loop recursion
    d = g;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t h = s_hist.size(); h-- > 0;) {
      alpha[h] = rho_hist[h] * std::inner_product(s_hist[h].begin(), s_hist[h].end(), d.begin(), 0.0);
      for (std::size_t i = 0; i < n; ++i) d[i] -= alpha[h] * y_hist[h][i];
    }
    if (!s_hist.empty()) {
      const auto& s = s_hist.back();
      const auto& y = y_hist.back();
      const double gamma = std::inner_product(s.begin(), s.end(), y.begin(), 0.0) /
                           std::inner_product(y.begin(), y.end(), y.begin(), 0.0);
      for (double& v : d) v *= gamma;
    }
    for (std::size_t h = 0; h < s_hist.size(); ++h) {
      const double beta =
          rho_hist[h] * std::inner_product(y_hist[h].begin(), y_hist[h].end(), d.begin(), 0.0);
      for (std::size_t i = 0; i < n; ++i) d[i] += s_hist[h][i] * (alpha[h] - beta);
    }
    for (double& v : d) v = -v;
    auto freeze_bounds = [&] {
      for (std::size_t i = 0; i < n; ++i)
        if ((x[i] <= box.lo[i] && d[i] < 0.0) || (x[i] >= box.hi[i] && d[i] > 0.0)) d[i] = 0.0;
    };
    freeze_bounds();
    double slope = std::inner_product(g.begin(), g.end(), d.begin(), 0.0);
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
      freeze_bounds();
      slope = std::inner_product(g.begin(), g.end(), d.begin(), 0.0);
      if (!(slope < 0.0)) break;
    }
    double step = 1.0;
    if (s_hist.empty()) {
      double dmax = 0.0;
      for (double v : d) dmax = std::max(dmax, std::abs(v));
      step = std::min(1.0, 1.0 / std::max(dmax, 1e-300));
    }
    double f_new = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + step * d[i];
      box.project(x_new);
      f_new = f(x_new, g_new);
      double decrease = 0.0;
      for (std::size_t i = 0; i < n; ++i) decrease += g[i] * (x_new[i] - x[i]);
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * decrease) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = x_new[i] - x[i];
      y[i] = g_new[i] - g[i];
    }
    const double sy = std::inner_product(s.begin(), s.end(), y.begin(), 0.0);
    const double ss = std::inner_product(s.begin(), s.end(), s.begin(), 0.0);
    const double yy = std::inner_product(y.begin(), y.end(), y.begin(), 0.0);
    if (sy > 1e-12 * std::sqrt(ss * yy)) {
      if (s_hist.size() == kMemory) {
        s_hist.erase(s_hist.begin());
        y_hist.erase(y_hist.begin());
        rho_hist.erase(rho_hist.begin());
      }
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
    }
    const double change = fx - f_new;
    x.swap(x_new);
    g.swap(g_new);
    fx = f_new;
    flat_steps = change <= 1e-16 * std::max(1.0, std::abs(fx)) ? flat_steps + 1 : 0;
    if (flat_steps >= 4) break;
  }
}

double max_abs(const std::vector<double>& v) {
  double r = 0.0;
  for (double x : v) r = std::max(r, std::abs(x));
  return r;
}

// Solves the small dense system a y = b by Gaussian elimination with partial
// pivoting; a is n x n row-major.
std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
    if (a[piv * n + col] == 0.0) continue;
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[piv * n + c]);
      std::swap(b[col], b[piv]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] / a[col * n + col];
      for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> y(n, 0.0);
  for (std::size_t r = n; r-- > 0;) {
    double s = b[r];
    for (std::size_t c = r + 1; c < n; ++c) s -= a[r * n + c] * y[c];
    y[r] = a[r * n + r] == 0.0 ? 0.0 : s / a[r * n + r];
  }
  return y;
}

// Minimum-norm Newton steps onto the constraint manifold.
void polish_feasibility(const Problem& problem, GraphonParameters& params, const Box& box,
                        double target) {
  Evaluation ev = evaluate(problem, params);
  const std::size_t nc = ev.residuals.size();
  if (nc == 0) return;
  for (int it = 0; it < 30 && max_abs(ev.residuals) > target; ++it) {
    const std::size_t n = params.size();
    std::vector<double> jjt(nc * nc, 0.0);
    for (std::size_t a = 0; a < nc; ++a)
      for (std::size_t b = 0; b < nc; ++b)
        jjt[a * nc + b] = std::inner_product(ev.residual_grads[a].begin(), ev.residual_grads[a].end(),
                                             ev.residual_grads[b].begin(), 0.0);
    double diag = 0.0;
    for (std::size_t a = 0; a < nc; ++a) diag = std::max(diag, jjt[a * nc + a]);
    if (diag == 0.0) return;
    for (std::size_t a = 0; a < nc; ++a) jjt[a * nc + a] += 1e-14 * diag;
    std::vector<double> rhs(nc);
    for (std::size_t a = 0; a < nc; ++a) rhs[a] = -ev.residuals[a];
    const auto y = solve_dense(jjt, rhs);
    std::vector<double> dx(n, 0.0);
    for (std::size_t a = 0; a < nc; ++a)
      for (std::size_t i = 0; i < n; ++i) dx[i] += ev.residual_grads[a][i] * y[a];
    double step = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 30; ++ls) {
      GraphonParameters trial = params;
      for (std::size_t i = 0; i < n; ++i) trial.x[i] += step * dx[i];
      box.project(trial.x);
      Evaluation tev = evaluate(problem, trial);
      if (max_abs(tev.residuals) < max_abs(ev.residuals)) {
        params = std::move(trial);
        ev = std::move(tev);
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) return;
  }
}

}  // namespace

StartOutcome ascend(const Problem& problem, GraphonParameters start,
                    const OptimizerOptions& opts, std::uint64_t seed) {
  const Box box = parameter_box(start.m, problem.value_floor);
  box.project(start.x);
  const std::size_t nc = problem.constraints.size();
  std::vector<double> lambda(nc, 0.0);
  double mu = opts.initial_penalty;
  GraphonParameters params = std::move(start);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  double previous = INFINITY;

  for (int round = 0; round < opts.max_rounds; ++round) {
    Objective neg_lagrangian = [&](const std::vector<double>& x, std::vector<double>& grad) {
      GraphonParameters p{params.m, x};
      const Evaluation ev = evaluate(problem, p);
      double value = ev.objective;
      grad = ev.objective_grad;
      for (std::size_t j = 0; j < nc; ++j) {
        const double r = ev.residuals[j];
        value -= lambda[j] * r + 0.5 * mu * r * r;
        const double w = lambda[j] + mu * r;
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] -= w * ev.residual_grads[j][i];
      }
      for (double& gi : grad) gi = -gi;
      return -value;
    };
    minimize_lbfgs(neg_lagrangian, params.x, box, opts.max_inner_iterations);
    const Evaluation ev = evaluate(problem, params);
    const double res = max_abs(ev.residuals);
    if (nc == 0 || res <= 1e-3 * opts.feasibility_tol) break;
    // A stalled round far from feasibility usually means the iterate sits on
    // an invariant symmetric manifold (e.g. all blocks equal); kick it off.
    if (res > 0.5 * previous && res > 1e-6) {
      for (std::size_t i = 0; i < params.size(); ++i)
        params.x[i] += (i < params.m ? 0.5 : 0.05) * jitter(rng);
      box.project(params.x);
    } else {
      for (std::size_t j = 0; j < nc; ++j) lambda[j] += mu * ev.residuals[j];
      mu *= opts.penalty_growth;
    }
    previous = res;
  }
  polish_feasibility(problem, params, box, 1e-3 * opts.feasibility_tol);

  StartOutcome out;
  out.graphon = params.to_graphon(problem.value_floor);
  const Evaluation ev = evaluate(problem, params);
  out.objective = ev.objective;
  out.residuals = ev.residuals;
  for (double& r : out.residuals) r = std::abs(r);
  out.max_residual = max_abs(ev.residuals);
  out.feasible = out.max_residual <= opts.feasibility_tol;
  return out;
}

StepGraphon pad_to_podality(const StepGraphon& q, std::size_t m) {
  StepGraphon cur = q;
  while (cur.podality() < m) {
    std::size_t largest = 0;
    for (std::size_t i = 1; i < cur.podality(); ++i)
      if (cur.mass(i) > cur.mass(largest)) largest = i;
    const double halves[2] = {0.5, 0.5};
    cur = cur.split_block(largest, halves);
  }
  return cur;
}

StepGraphon random_graphon(std::size_t m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> dirichlet_unit(1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> masses(m);
  double total = 0.0;
  for (double& c : masses) total += c = std::max(dirichlet_unit(rng), 1e-6);
  for (double& c : masses) c /= total;
  std::vector<double> values(m * m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j) values[i * m + j] = values[j * m + i] = unit(rng);
  return StepGraphon(std::move(masses), std::move(values));
}

bool same_basin(const StepGraphon& a, const StepGraphon& b, double tol) {
  if (a.podality() != b.podality()) return false;
  for (std::size_t i = 0; i < a.podality(); ++i)
    if (std::abs(a.mass(i) - b.mass(i)) > tol) return false;
  for (std::size_t i = 0; i < a.values().size(); ++i)
    if (std::abs(a.values()[i] - b.values()[i]) > tol) return false;
  return true;
}

OptimizerResult run_multistart(const Problem& problem, std::size_t m,
                               const std::vector<StepGraphon>& seeded,
                               const OptimizerOptions& opts) {
  if (m < 1 || m > 16) throw DomainError("podality must lie in [1, 16]");
  std::vector<StepGraphon> starts;
  for (const auto& s : seeded)
    if (s.podality() <= m) starts.push_back(pad_to_podality(s, m));
  const std::size_t n_seeded = starts.size();
  const std::size_t total = n_seeded + static_cast<std::size_t>(std::max(0, opts.starts));

  std::vector<StartOutcome> outcomes(total);
  parallel_for(total, resolve_threads(opts.threads), [&](std::size_t i) {
    const StepGraphon init =
        i < n_seeded ? starts[i] : random_graphon(m, derive_seed(opts.seed, (m << 20) + i));
    outcomes[i] = ascend(problem, GraphonParameters::from_graphon(init, problem.value_floor), opts,
                         derive_seed(opts.seed, (m << 20) + i + (1u << 19)));
  });

  std::size_t best = 0;
  bool any_feasible = false;
  int feasible_count = 0;
  for (std::size_t i = 0; i < total; ++i) {
    const auto& o = outcomes[i];
    if (o.feasible) ++feasible_count;
    if (o.feasible && (!any_feasible || o.objective > outcomes[best].objective)) {
      best = i;
      any_feasible = true;
    } else if (!any_feasible && o.max_residual < outcomes[best].max_residual) {
      best = i;
    }
  }

  const StartOutcome& win = outcomes[best];
  OptimizerResult r;
  r.feasible = win.feasible;
  r.searched_podality = static_cast<int>(m);
  r.total_starts = static_cast<int>(total);
  r.feasible_starts = feasible_count;

  // Report the canonical form when merging keeps the constraints satisfied.
  StepGraphon chosen = canonicalize(win.graphon, opts.merge_tol);
  auto residuals_of = [&](const StepGraphon& q) {
    std::vector<double> res;
    for (const auto& c : problem.constraints)
      res.push_back(std::abs(subgraph_density(q, c.pattern, problem.caps) - c.target));
    return res;
  };
  std::vector<double> res = residuals_of(chosen);
  if (win.feasible && max_abs(res) > opts.feasibility_tol) {
    chosen = canonicalize(win.graphon, 0.0);
    res = residuals_of(chosen);
  }
  r.graphon = chosen;
  r.residuals = res;
  r.entropy = graphon_entropy(chosen);
  r.objective = problem.objective ? subgraph_density(chosen, *problem.objective, problem.caps)
                                  : r.entropy;
  r.podality = static_cast<int>(chosen.podality());
  r.flags.constant = chosen.podality() == 1;
  r.flags.symmetric_bipodal = chosen.podality() == 2 &&
                              std::abs(chosen.mass(0) - chosen.mass(1)) <= opts.symmetry_tol &&
                              std::abs(chosen.value(0, 0) - chosen.value(1, 1)) <= opts.symmetry_tol;

  if (win.feasible) {
    const StepGraphon best_canon = canonicalize(win.graphon, opts.merge_tol);
    std::optional<double> runner_up;
    for (std::size_t i = 0; i < total; ++i) {
      if (i == best || !outcomes[i].feasible) continue;
      if (runner_up && outcomes[i].objective <= *runner_up) continue;
      if (same_basin(best_canon, canonicalize(outcomes[i].graphon, opts.merge_tol), opts.basin_tol))
        continue;
      runner_up = outcomes[i].objective;
    }
    if (runner_up) r.multistart_spread = std::max(0.0, win.objective - *runner_up);
  }
  return r;
}

}  // namespace detail

namespace {

std::vector<StepGraphon> closed_form_candidates(const ConstraintVector& cv) {
  std::vector<StepGraphon> out;
  std::optional<double> eps, tau;
  for (const auto& c : cv.constraints) {
    if (c.pattern.all_present() && c.pattern.vertex_count() == 2) eps = c.target;
    if (c.pattern.is_triangle()) tau = c.target;
  }
  const double e = eps.value_or(0.5);
  out.push_back(StepGraphon::constant(e));
  if (eps && tau) {
    try {
      out.push_back(reference_construction(*eps, *tau));
    } catch (const DomainError&) {
    }
  }
  out.push_back(StepGraphon::symmetric_bipodal(0.0, std::min(1.0, 2.0 * e)));
  return out;
}

}  // namespace

OptimizerResult maximize_entropy(const ConstraintVector& constraints, int m,
                                 const OptimizerOptions& opts) {
  constraints.validate();
  detail::Problem problem{std::nullopt, constraints.constraints, opts.caps, opts.value_floor};
  std::vector<StepGraphon> seeded = opts.warm_starts;
  if (opts.closed_form_starts) {
    auto extra = closed_form_candidates(constraints);
    seeded.insert(seeded.end(), extra.begin(), extra.end());
  }
  return detail::run_multistart(problem, static_cast<std::size_t>(m), seeded, opts);
}

OptimizerResult maximize_density(const SubgraphPattern& objective,
                                 const ConstraintVector& constraints, int m,
                                 const OptimizerOptions& opts) {
  constraints.validate();
  detail::Problem problem{objective, constraints.constraints, opts.caps, opts.value_floor};
  return detail::run_multistart(problem, static_cast<std::size_t>(m), opts.warm_starts, opts);
}

OptimizerResult constrained_entropy(const ConstraintVector& constraints,
                                    const OptimizerOptions& opts) {
  std::vector<OptimizerResult> runs;
  std::optional<double> best;
  int quiet = 0;
  int stuck = 0;
  double closest = INFINITY;
  OptimizerOptions local = opts;
  for (int m = 1; m <= opts.max_podality; ++m) {
    OptimizerResult r = maximize_entropy(constraints, m, local);
    if (!best && !r.feasible) {
      // no feasible point yet: give up once extra blocks stop helping
      const double res = r.residuals.empty() ? 0.0 : *std::max_element(r.residuals.begin(), r.residuals.end());
      stuck = (m > 1 && res > 0.9 * closest) ? stuck + 1 : 0;
      closest = std::min(closest, res);
      runs.push_back(std::move(r));
      if (stuck >= 2) break;
      continue;
    }
    double gain = 0.0;
    if (r.feasible) {
      gain = best ? r.entropy - *best : std::numeric_limits<double>::infinity();
      if (!best || r.entropy > *best) best = r.entropy;
      // the previous optimum seeds the next podality so escalation is monotone
      local.warm_starts = opts.warm_starts;
      local.warm_starts.push_back(r.graphon);
    }
    runs.push_back(std::move(r));
    if (best) {
      quiet = gain < opts.escalation_tol ? quiet + 1 : 0;
      if (quiet >= 2) break;
    }
  }
  if (!best) {
    // report the closest approach from the largest podality tried
    return runs.back();
  }
  for (auto& r : runs)
    if (r.feasible && r.entropy >= *best - opts.escalation_tol) return r;
  return runs.back();
}

}  // namespace phases
