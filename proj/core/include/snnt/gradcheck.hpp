// Copyright (c) 2026 the snnt authors. Apache-2.0 license.
#pragma once

#include <functional>
#include <map>
#include <string>

#include "snnt/graph.hpp"
#include "snnt/tensor.hpp"

namespace snnt {

using ParamMap = std::map<std::string, Tensor>;

// Objective evaluated at a parameter setting. Must be deterministic.
using Objective = std::function<double(const ParamMap&)>;

struct FdReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  int64_t worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  double step = 0.0;
  double tol = 0.0;
  bool pass = true;

  std::string summary() const;
};

// Compares an analytic gradient against central finite differences of `f`,
// one scalar parameter at a time. Relative error uses
// |a-n| / max(|a|, |n|, 1e-3); the floor keeps finite-difference roundoff on
// near-zero gradients from dominating the report.
FdReport finite_difference_check(const Objective& f, const GradientMap& analytic,
                                 const ParamMap& params, double step, double tol);

// Convenience: builds the analytic gradient by evaluating `build` (a graph
// construction returning the scalar root) and running backward, then checks
// it against central differences of the same construction.
FdReport check_gradients(
    const std::function<Value(Graph&, const ParamMap&)>& build,
    const ParamMap& params, double step, double tol);

}  // namespace snnt
