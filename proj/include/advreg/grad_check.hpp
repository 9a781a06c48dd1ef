#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "advreg/errors.hpp"
#include "advreg/graph.hpp"

namespace advreg {

struct GradCheckResult {
  std::vector<double> max_rel_error;  // one entry per checked parameter node
  double worst = 0.0;
};

/// Central-difference gradient oracle. `backward_loss` seeds the reverse
/// pass; `fd_loss` is the scalar that gets numerically differentiated. They
/// are the same node for ordinary graphs, and differ when the graph routes a
/// loss through a gradient reversal layer (backward follows the reversed
/// path, so the finite differences must probe the effective objective
/// Lc - lambda*Lp built as its own node).
inline GradCheckResult grad_check(Graph& graph, NodeId backward_loss, NodeId fd_loss,
                                  std::span<const NodeId> params, double step) {
  if (step <= 0.0) throw ContractError("grad_check: step must be positive");
  for (NodeId p : params)
    if (!graph.is_leaf(p)) throw ContractError("grad_check: parameters must be leaf nodes");

  const GradMap grads = graph.backward(backward_loss);
  GradCheckResult result;
  result.max_rel_error.reserve(params.size());

  for (NodeId p : params) {
    Tensor& theta = graph.leaf_value(p);
    double worst = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double saved = theta[i];
      theta[i] = saved + step;
      graph.recompute();
      const double plus = graph.value(fd_loss)[0];
      theta[i] = saved - step;
      graph.recompute();
      const double minus = graph.value(fd_loss)[0];
      theta[i] = saved;
      const double numeric = (plus - minus) / (2.0 * step);
      const double analytic = grads.has(p) ? grads.at(p)[i] : 0.0;
      const double rel = std::abs(analytic - numeric) /
                         (std::max(std::abs(analytic), std::abs(numeric)) + 1e-8);
      worst = std::max(worst, rel);
    }
    result.max_rel_error.push_back(worst);
    result.worst = std::max(result.worst, worst);
  }
  graph.recompute();  // restore cached values
  return result;
}

inline GradCheckResult grad_check(Graph& graph, NodeId loss,
                                  std::span<const NodeId> params, double step) {
  return grad_check(graph, loss, loss, params, step);
}

}  // namespace advreg
