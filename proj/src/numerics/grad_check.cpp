#include "adarank/numerics/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace adarank {
namespace {

double evaluate(const LossBuilder& build, std::span<const ParamRef<double>> params,
                std::uint64_t seed, Graph<double>& graph) {
  graph.clear();
  std::vector<Var> leaves;
  leaves.reserve(params.size());
  for (const auto& p : params) leaves.push_back(graph.parameter(*p.value, false));
  Rng rng = Rng::stream(seed, "grad_check");
  const Var loss = build(graph, leaves, rng);
  return graph.value(loss)[0];
}

}  // namespace

GradCheckReport grad_check(const LossBuilder& build, std::span<const ParamRef<double>> params,
                           double h, std::uint64_t seed) {
  Graph<double> graph;
  std::vector<Var> leaves;
  for (const auto& p : params) leaves.push_back(graph.parameter(*p.value, true));
  Rng rng = Rng::stream(seed, "grad_check");
  const Var loss = build(graph, leaves, rng);
  const double base = graph.value(loss)[0];
  graph.backward(loss);
  std::vector<Tensor<double>> analytic;
  for (const Var v : leaves) {
    const Tensor<double>& g = graph.grad(v);
    analytic.push_back(g.empty() ? Tensor<double>(graph.value(v).rows(), graph.value(v).cols())
                                 : g);
  }

  Graph<double> probe;
  if (evaluate(build, params, seed, probe) != base) {
    throw std::logic_error("grad_check: loss is not deterministic under a fixed seed");
  }

  GradCheckReport report;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<double>& value = *params[i].value;
    double diff_sq = 0.0, analytic_sq = 0.0, numeric_sq = 0.0;
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double saved = value[k];
      value[k] = saved + h;
      const double plus = evaluate(build, params, seed, probe);
      value[k] = saved - h;
      const double minus = evaluate(build, params, seed, probe);
      value[k] = saved;
      const double numeric = (plus - minus) / (2.0 * h);
      const double a = analytic[i][k];
      diff_sq += (a - numeric) * (a - numeric);
      analytic_sq += a * a;
      numeric_sq += numeric * numeric;
      ++report.entries;
      if (std::abs(a - numeric) > report.max_abs_error) {
        report.max_abs_error = std::abs(a - numeric);
        report.worst_entry_parameter = params[i].name;
        report.worst_index = k;
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
    const double denom = std::max({std::sqrt(analytic_sq), std::sqrt(numeric_sq), 1e-12});
    const double rel = std::sqrt(diff_sq) / denom;
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_parameter = params[i].name;
    }
  }
  return report;
}

}  // namespace adarank
