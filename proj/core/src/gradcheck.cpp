// Copyright (c) 2026 the snnt authors. Apache-2.0 license.
#include "snnt/gradcheck.hpp"

#include <cmath>
#include <sstream>

#include "snnt/errors.hpp"

namespace snnt {

namespace {
constexpr double kRelFloor = 1e-3;

double rel_error(double a, double n) {
  const double denom = std::max({std::abs(a), std::abs(n), kRelFloor});
  return std::abs(a - n) / denom;
}
}  // namespace

std::string FdReport::summary() const {
  std::ostringstream os;
  os << (pass ? "pass" : "FAIL") << " max_rel_error=" << max_rel_error
     << " tol=" << tol;
  if (!worst_param.empty()) {
    os << " worst=" << worst_param << "[" << worst_index << "]"
       << " analytic=" << worst_analytic << " numeric=" << worst_numeric;
  }
  return os.str();
}

FdReport finite_difference_check(const Objective& f, const GradientMap& analytic,
                                 const ParamMap& params, double step, double tol) {
  if (step <= 0.0) throw ConfigError("finite_difference_check: step must be > 0");
  if (tol <= 0.0) throw ConfigError("finite_difference_check: tol must be > 0");

  FdReport report;
  report.step = step;
  report.tol = tol;

  ParamMap work = params;
  for (const auto& [name, tensor] : params) {
    auto it = analytic.find(name);
    if (it == analytic.end()) {
      throw ConfigError("finite_difference_check: no analytic gradient for '" +
                        name + "'");
    }
    const Tensor& grad = it->second;
    if (!grad.same_shape(tensor)) {
      throw ShapeError("analytic gradient shape mismatch for '" + name + "'");
    }
    Tensor& t = work[name];
    for (int64_t i = 0; i < t.size(); ++i) {
      const double saved = t[i];
      t[i] = saved + step;
      const double hi = f(work);
      t[i] = saved - step;
      const double lo = f(work);
      t[i] = saved;
      if (!std::isfinite(hi) || !std::isfinite(lo)) {
        throw NonFiniteError("finite_difference_check",
                             name + "[" + std::to_string(i) + "]");
      }
      const double numeric = (hi - lo) / (2.0 * step);
      const double err = rel_error(grad[i], numeric);
      if (err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst_param = name;
        report.worst_index = i;
        report.worst_analytic = grad[i];
        report.worst_numeric = numeric;
      }
    }
  }
  report.pass = report.max_rel_error <= tol;
  return report;
}

FdReport check_gradients(
    const std::function<Value(Graph&, const ParamMap&)>& build,
    const ParamMap& params, double step, double tol) {
  Graph graph;
  Value root = build(graph, params);
  GradientMap analytic = graph.backward(root);
  Objective f = [&build](const ParamMap& p) {
    Graph g;
    return build(g, p).scalar();
  };
  return finite_difference_check(f, analytic, params, step, tol);
}

}  // namespace snnt
