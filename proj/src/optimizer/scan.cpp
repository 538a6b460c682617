#include <algorithm>
#include <cmath>
#include <limits>

#include "optimizer/engine.hpp"

namespace phases {

namespace {

// Threshold graphon on j equal blocks: p_ab = 1 when a + b >= j - 1. Nested
// neighbourhoods make the signed square vanish.
StepGraphon staircase(std::size_t j, double floor) {
  std::vector<double> masses(j, 1.0 / static_cast<double>(j));
  std::vector<double> values(j * j);
  for (std::size_t a = 0; a < j; ++a)
    for (std::size_t b = 0; b < j; ++b) values[a * j + b] = a + b + 1 >= j ? 1.0 - floor : floor;
  return StepGraphon(std::move(masses), std::move(values));
}

}  // namespace

double bounded_signed_max(const SubgraphPattern& objective, const SubgraphPattern& zero_constraint,
                          int m, const OptimizerOptions& opts) {
  if (m < 1 || m > 12) throw DomainError("bounded signed maximization needs 1 <= m <= 12");
  ConstraintVector cv;
  cv.constraints.push_back({zero_constraint, 0.0});
  OptimizerOptions local = opts;
  for (int j = 1; j <= m; ++j)
    local.warm_starts.push_back(staircase(static_cast<std::size_t>(j), opts.value_floor));
  const OptimizerResult r = maximize_density(objective, cv, m, local);
  if (!r.feasible) throw DomainError("no feasible graphon found with the zero constraint satisfied");
  return r.objective;
}

ModelSpec ModelSpec::from_name(const std::string& name) {
  if (name == "edge-triangle") return {name, SubgraphPattern::edge(), SubgraphPattern::triangle()};
  if (name == "half-blip")
    return {name, SubgraphPattern::signed_two_star(), SubgraphPattern::signed_square()};
  const std::string prefix = "edge-kstar:";
  if (name.rfind(prefix, 0) == 0) {
    int k = 0;
    try {
      k = std::stoi(name.substr(prefix.size()));
    } catch (const std::exception&) {
      throw InputError("model " + name + ": k-star order is not an integer");
    }
    if (k < 2) throw InputError("model " + name + ": k-star order must be at least 2");
    return {name, SubgraphPattern::edge(), SubgraphPattern::kstar(k)};
  }
  throw InputError("unknown model '" + name + "' (expected edge-triangle, edge-kstar:K or half-blip)");
}

namespace {

double axis_point(double lo, double hi, int n, int i) {
  return n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
}

std::vector<double> padded_parameters(const StepGraphon& q, std::size_t m) {
  const StepGraphon p = detail::pad_to_podality(q, m);
  std::vector<double> out(p.masses().begin(), p.masses().end());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j) out.push_back(p.value(i, j));
  return out;
}

double difference_norm(const std::vector<double>& a, const std::vector<double>& b, double h) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s) / h;
}

}  // namespace

PhaseMap phase_scan(const ModelSpec& model, const ScanGrid& grid, const ScanOptions& opts) {
  if (grid.nx < 1 || grid.ny < 1 || grid.nx > 200 || grid.ny > 200)
    throw DomainError("scan resolution must lie between 1x1 and 200x200");
  if (grid.y_relative_to_er && !model.second.all_present())
    throw DomainError("an Erdos-Renyi offset needs an all-present second pattern");
  PhaseMap map;
  map.model = model.name;
  map.grid = grid;
  map.spike_factor = opts.spike_factor;
  map.cells.resize(static_cast<std::size_t>(grid.nx * grid.ny));
  const double er_power = static_cast<double>(model.second.present_edge_count());

  OptimizerOptions cell_opts = opts.optimizer;
  cell_opts.threads = 1;
  parallel_for(static_cast<std::size_t>(grid.nx), resolve_threads(opts.optimizer.threads),
               [&](std::size_t col) {
    const int ix = static_cast<int>(col);
    std::optional<StepGraphon> previous;
    for (int iy = 0; iy < grid.ny; ++iy) {
      PhaseCell& cell = map.cells[static_cast<std::size_t>(ix * grid.ny + iy)];
      cell.ix = ix;
      cell.iy = iy;
      cell.x = axis_point(grid.x_min, grid.x_max, grid.nx, ix);
      cell.y = axis_point(grid.y_min, grid.y_max, grid.ny, iy);
      if (grid.y_relative_to_er) cell.y += std::pow(cell.x, er_power);
      try {
        ConstraintVector cv;
        cv.constraints.push_back({model.first, cell.x});
        cv.constraints.push_back({model.second, cell.y});
        cv.validate();
        OptimizerOptions local = cell_opts;
        local.seed = derive_seed(opts.optimizer.seed, col * 1000 + static_cast<std::size_t>(iy));
        if (previous) local.warm_starts.push_back(*previous);
        OptimizerResult r = constrained_entropy(cv, local);
        cell.feasible = r.feasible;
        if (r.feasible) previous = r.graphon;
        cell.result = std::move(r);
      } catch (const std::exception& e) {
        cell.feasible = false;
        cell.error = e.what();
      }
    }
  });

  std::size_t podality = 1;
  for (const auto& c : map.cells)
    if (c.feasible) podality = std::max(podality, c.result->graphon.podality());
  map.param_podality = static_cast<int>(podality);
  for (auto& c : map.cells)
    if (c.feasible) c.params = padded_parameters(c.result->graphon, podality);

  const double hx = grid.nx > 1 ? (grid.x_max - grid.x_min) / (grid.nx - 1) : 0.0;
  const double hy = grid.ny > 1 ? (grid.y_max - grid.y_min) / (grid.ny - 1) : 0.0;
  auto feasible_at = [&](int ix, int iy) -> const PhaseCell* {
    if (ix < 0 || iy < 0 || ix >= grid.nx || iy >= grid.ny) return nullptr;
    const PhaseCell& c = map.cells[static_cast<std::size_t>(ix * grid.ny + iy)];
    return c.feasible ? &c : nullptr;
  };
  // Centred differences where both neighbours are feasible, one-sided otherwise.
  auto derivative = [&](const PhaseCell& c, int dx, int dy, double h) {
    if (h <= 0.0) return 0.0;
    const PhaseCell* fwd = feasible_at(c.ix + dx, c.iy + dy);
    const PhaseCell* back = feasible_at(c.ix - dx, c.iy - dy);
    if (fwd && back) return difference_norm(fwd->params, back->params, 2.0 * h);
    if (fwd) return difference_norm(fwd->params, c.params, h);
    if (back) return difference_norm(c.params, back->params, h);
    return 0.0;
  };
  std::vector<double> norms;
  for (auto& c : map.cells) {
    if (!c.feasible) continue;
    c.d_x = derivative(c, 1, 0, hx);
    c.d_y = derivative(c, 0, 1, hy);
    c.derivative_norm = std::hypot(c.d_x, c.d_y);
    norms.push_back(c.derivative_norm);
  }
  if (!norms.empty()) {
    std::sort(norms.begin(), norms.end());
    const std::size_t n = norms.size();
    map.median_derivative = n % 2 ? norms[n / 2] : 0.5 * (norms[n / 2 - 1] + norms[n / 2]);
    for (auto& c : map.cells)
      c.transition = c.feasible && c.derivative_norm > opts.spike_factor * map.median_derivative &&
                     c.derivative_norm > 0.0;
  }
  return map;
}

}  // namespace phases
