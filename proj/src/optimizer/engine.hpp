#pragma once

#include <optional>
#include <vector>

#include "phases/optimizer.hpp"

namespace phases::detail {

struct Problem {
  std::optional<SubgraphPattern> objective;  // entropy when empty
  std::vector<DensityConstraint> constraints;
  DensityCaps caps;
  double value_floor = 1e-9;
};

struct Evaluation {
  double objective = 0.0;
  std::vector<double> objective_grad;
  std::vector<double> residuals;
  std::vector<std::vector<double>> residual_grads;
};

struct StartOutcome {
  StepGraphon graphon = StepGraphon::constant(0.0);
  double objective = 0.0;
  std::vector<double> residuals;
  double max_residual = 0.0;
  bool feasible = false;
};

Evaluation evaluate(const Problem& problem, const GraphonParameters& params);
StartOutcome ascend(const Problem& problem, GraphonParameters start, const OptimizerOptions& opts,
                    std::uint64_t seed = 0);
StepGraphon pad_to_podality(const StepGraphon& q, std::size_t m);
StepGraphon random_graphon(std::size_t m, std::uint64_t seed);
bool same_basin(const StepGraphon& a, const StepGraphon& b, double tol);
OptimizerResult run_multistart(const Problem& problem, std::size_t m,
                               const std::vector<StepGraphon>& seeded, const OptimizerOptions& opts);

}  // namespace phases::detail
