#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "adarank/numerics/adam.hpp"
#include "adarank/numerics/graph.hpp"

namespace adarank {

/// Builds a scalar loss on the graph from the bound parameter leaves. Must
/// be a pure function of the parameter values and the supplied Rng.
using LossBuilder = std::function<Var(Graph<double>&, std::span<const Var>, Rng&)>;

struct GradCheckReport {
  /// Max over parameter tensors of ||a - n|| / max(||a||, ||n||, 1e-12),
  /// with a the analytic and n the central-difference gradient (L2 norms).
  double max_rel_error = 0.0;
  std::size_t entries = 0;
  std::string worst_parameter;
  /// Largest elementwise |a - n| and where it occurred, for diagnostics.
  double max_abs_error = 0.0;
  std::string worst_entry_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Compares backward() against central differences with step h over every
/// element of every parameter. Throws std::logic_error if two evaluations
/// at the same point differ.
GradCheckReport grad_check(const LossBuilder& build, std::span<const ParamRef<double>> params,
                           double h, std::uint64_t seed);

}  // namespace adarank
