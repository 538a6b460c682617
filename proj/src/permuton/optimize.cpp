#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include "phases/permuton.hpp"

namespace phases {

namespace {

struct PermProblem {
  std::vector<PatternConstraint> constraints;
  std::size_t k;
  double floor;
};

struct PermEval {
  double entropy = 0.0;
  std::vector<double> entropy_grad;
  std::vector<double> residuals;
  std::vector<std::vector<double>> residual_grads;
};

PermEval evaluate(const PermProblem& pb, const std::vector<double>& g) {
  const double area = 1.0 / static_cast<double>(pb.k * pb.k);
  PermEval ev;
  ev.entropy_grad.resize(g.size());
  for (std::size_t c = 0; c < g.size(); ++c) {
    const double x = std::max(g[c], pb.floor);
    ev.entropy -= area * x * std::log(x);
    ev.entropy_grad[c] = -area * (std::log(x) + 1.0);
  }
  for (const auto& con : pb.constraints) {
    auto pg = pattern_gradient_unchecked(g, pb.k, con.pattern);
    ev.residuals.push_back(pg.value - con.target);
    ev.residual_grads.push_back(std::move(pg.d_cells));
  }
  return ev;
}

double max_abs(const std::vector<double>& v) {
  double r = 0.0;
  for (double x : v) r = std::max(r, std::abs(x));
  return r;
}

constexpr int kStepProjectionIterations = 2000;

std::vector<double> project(std::vector<double> g, const PermProblem& pb,
                            int max_iter = kStepProjectionIterations) {
  for (double& x : g) x = std::max(x, pb.floor);
  return sinkhorn_project(std::move(g), pb.k, 1e-10, max_iter);
}

// A trial whose projection does not converge is treated as a rejected step.
std::optional<std::vector<double>> try_project(std::vector<double> g, const PermProblem& pb) {
  try {
    return project(std::move(g), pb);
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

// Multiplicative (mirror) step g * exp(eta * k^2 * grad), then projection.
std::optional<std::vector<double>> mirror_step(const std::vector<double>& g, const std::vector<double>& grad,
                                               double eta, const PermProblem& pb) {
  const double scale = eta * static_cast<double>(pb.k * pb.k);
  std::vector<double> out(g.size());
  for (std::size_t c = 0; c < g.size(); ++c) out[c] = g[c] * std::exp(std::clamp(scale * grad[c], -50.0, 50.0));
  return try_project(std::move(out), pb);
}

// Removes row and column potentials from d (weighted by g) so that the
// multiplicative perturbation g * exp(t d) preserves marginals to first order.
std::vector<double> tangent(const std::vector<double>& g, std::vector<double> d, std::size_t k) {
  for (int it = 0; it < 200; ++it) {
    double worst = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      double num = 0.0, den = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        num += g[i * k + j] * d[i * k + j];
        den += g[i * k + j];
      }
      const double a = num / den;
      worst = std::max(worst, std::abs(a));
      for (std::size_t j = 0; j < k; ++j) d[i * k + j] -= a;
    }
    for (std::size_t j = 0; j < k; ++j) {
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        num += g[i * k + j] * d[i * k + j];
        den += g[i * k + j];
      }
      const double b = num / den;
      worst = std::max(worst, std::abs(b));
      for (std::size_t i = 0; i < k; ++i) d[i * k + j] -= b;
    }
    if (worst < 1e-15) break;
  }
  return d;
}

// Minimum-norm Newton steps on the constraints along marginal-preserving
// multiplicative directions.
void polish(const PermProblem& pb, std::vector<double>& g, double target) {
  PermEval ev = evaluate(pb, g);
  const std::size_t nc = ev.residuals.size();
  for (int it = 0; it < 40 && nc > 0 && max_abs(ev.residuals) > target; ++it) {
    const std::size_t n = g.size();
    std::vector<std::vector<double>> dirs(nc);
    for (std::size_t a = 0; a < nc; ++a) {
      std::vector<double> d(n);
      for (std::size_t c = 0; c < n; ++c) d[c] = ev.residual_grads[a][c] * static_cast<double>(pb.k * pb.k);
      dirs[a] = tangent(g, std::move(d), pb.k);
    }
    // J[a][b] = d residual_a / d y_b for g -> g * exp(sum_b y_b dirs_b)
    std::vector<double> jac(nc * nc, 0.0);
    for (std::size_t a = 0; a < nc; ++a)
      for (std::size_t b = 0; b < nc; ++b)
        for (std::size_t c = 0; c < n; ++c) jac[a * nc + b] += ev.residual_grads[a][c] * g[c] * dirs[b][c];
    // Gaussian elimination on the small system
    std::vector<double> rhs(nc), y(nc, 0.0);
    for (std::size_t a = 0; a < nc; ++a) rhs[a] = -ev.residuals[a];
    std::vector<double> m = jac;
    bool singular = false;
    for (std::size_t col = 0; col < nc; ++col) {
      std::size_t piv = col;
      for (std::size_t r = col + 1; r < nc; ++r)
        if (std::abs(m[r * nc + col]) > std::abs(m[piv * nc + col])) piv = r;
      if (std::abs(m[piv * nc + col]) < 1e-300) {
        singular = true;
        break;
      }
      for (std::size_t c = 0; c < nc; ++c) std::swap(m[col * nc + c], m[piv * nc + c]);
      std::swap(rhs[col], rhs[piv]);
      for (std::size_t r = col + 1; r < nc; ++r) {
        const double f = m[r * nc + col] / m[col * nc + col];
        for (std::size_t c = col; c < nc; ++c) m[r * nc + c] -= f * m[col * nc + c];
        rhs[r] -= f * rhs[col];
      }
    }
    if (singular) return;
    for (std::size_t r = nc; r-- > 0;) {
      double s = rhs[r];
      for (std::size_t c = r + 1; c < nc; ++c) s -= m[r * nc + c] * y[c];
      y[r] = s / m[r * nc + r];
    }
    double step = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 30; ++ls) {
      std::vector<double> trial(n);
      for (std::size_t c = 0; c < n; ++c) {
        double d = 0.0;
        for (std::size_t b = 0; b < nc; ++b) d += y[b] * dirs[b][c];
        trial[c] = g[c] * std::exp(std::clamp(step * d, -50.0, 50.0));
      }
      auto projected = try_project(std::move(trial), pb);
      if (!projected) {
        step *= 0.5;
        continue;
      }
      PermEval tev = evaluate(pb, *projected);
      if (max_abs(tev.residuals) < max_abs(ev.residuals)) {
        g = std::move(*projected);
        ev = std::move(tev);
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) return;
  }
}

struct PermOutcome {
  std::vector<double> g;
  double entropy = 0.0;
  std::vector<double> residuals;
  double max_residual = 0.0;
};

PermOutcome ascend(const PermProblem& pb, std::vector<double> g, const PermutonOptions& opts) {
  g = project(std::move(g), pb, 100000);
  const std::size_t nc = pb.constraints.size();
  std::vector<double> lambda(nc, 0.0);
  double mu = opts.initial_penalty;
  auto lagrangian = [&](const PermEval& ev) {
    double v = ev.entropy;
    for (std::size_t j = 0; j < nc; ++j) v -= lambda[j] * ev.residuals[j] + 0.5 * mu * ev.residuals[j] * ev.residuals[j];
    return v;
  };
  double previous = std::numeric_limits<double>::infinity();
  int stuck = 0;
  for (int round = 0; round < opts.max_rounds; ++round) {
    PermEval ev = evaluate(pb, g);
    double value = lagrangian(ev);
    double eta = 1.0;
    int flat = 0;
    for (int it = 0; it < opts.max_inner_iterations; ++it) {
      std::vector<double> grad = ev.entropy_grad;
      for (std::size_t j = 0; j < nc; ++j) {
        const double wgt = lambda[j] + mu * ev.residuals[j];
        for (std::size_t c = 0; c < grad.size(); ++c) grad[c] -= wgt * ev.residual_grads[j][c];
      }
      bool accepted = false;
      for (int ls = 0; ls < 40; ++ls) {
        auto trial = mirror_step(g, grad, eta, pb);
        if (!trial) {
          eta *= 0.5;
          continue;
        }
        PermEval tev = evaluate(pb, *trial);
        const double tv = lagrangian(tev);
        if (tv > value) {
          flat = tv - value <= 1e-15 * std::max(1.0, std::abs(value)) ? flat + 1 : 0;
          g = std::move(*trial);
          ev = std::move(tev);
          value = tv;
          accepted = true;
          eta = std::min(1.0, eta * 1.5);
          break;
        }
        eta *= 0.5;
      }
      if (!accepted || flat >= 5) break;
    }
    const double res = max_abs(ev.residuals);
    if (nc == 0 || res <= 1e-3 * opts.feasibility_tol) break;
    // unattainable targets: the residual stops shrinking while the penalty grows
    stuck = res > 0.9 * previous ? stuck + 1 : 0;
    if (stuck >= 2) break;
    previous = std::min(previous, res);
    for (std::size_t j = 0; j < nc; ++j) lambda[j] += mu * ev.residuals[j];
    mu *= opts.penalty_growth;
  }
  polish(pb, g, 1e-3 * opts.feasibility_tol);
  PermOutcome out;
  const PermEval ev = evaluate(pb, g);
  out.g = std::move(g);
  out.entropy = ev.entropy;
  out.residuals = ev.residuals;
  for (double& r : out.residuals) r = std::abs(r);
  out.max_residual = max_abs(ev.residuals);
  return out;
}

}  // namespace

PermutonResult maximize_permuton_entropy(const std::vector<PatternConstraint>& constraints, std::size_t k,
                                         const PermutonOptions& opts) {
  if (k < 1 || k > 40) throw DomainError("permuton resolution must lie in [1, 40]");
  for (const auto& c : constraints) {
    if (c.pattern.length() > 3) throw DomainError("permuton constraints need patterns of length <= 3");
    if (!(c.target >= 0.0 && c.target <= 1.0)) throw DomainError("pattern density target must lie in [0,1]");
  }
  const PermProblem pb{constraints, k, opts.density_floor};
  const std::size_t total = static_cast<std::size_t>(std::max(1, opts.starts));
  std::vector<PermOutcome> outcomes(total);
  parallel_for(total, resolve_threads(opts.threads), [&](std::size_t s) {
    std::vector<double> g(k * k, 1.0);
    if (s > 0) {
      std::mt19937_64 rng(derive_seed(opts.seed, s));
      std::normal_distribution<double> noise(0.0, 1.0);
      for (double& x : g) x = std::exp(noise(rng));
    }
    outcomes[s] = ascend(pb, std::move(g), opts);
  });

  PermutonResult r;
  r.total_starts = static_cast<int>(total);
  std::size_t best = 0;
  bool any = false;
  for (std::size_t s = 0; s < total; ++s) {
    const auto& o = outcomes[s];
    const bool feasible = o.max_residual <= opts.feasibility_tol;
    if (feasible) ++r.feasible_starts;
    if (feasible && (!any || o.entropy > outcomes[best].entropy)) {
      best = s;
      any = true;
    } else if (!any && o.max_residual < outcomes[best].max_residual) {
      best = s;
    }
  }
  const auto& win = outcomes[best];
  r.feasible = any;
  r.permuton = GridPermuton(k, win.g);
  r.entropy = permuton_entropy(r.permuton);
  r.residuals = win.residuals;
  r.degenerate = k > 1 && r.entropy <= -std::log(static_cast<double>(k)) + std::log(2.0);
  return r;
}

}  // namespace phases
