// Copyright (c) 2026 the snnt authors. Apache-2.0 license.
#include "snnt/cells.hpp"

#include <algorithm>
#include <cmath>

#include "snnt/errors.hpp"

namespace snnt {

void CellConfig::validate() const {
  if (input_size < 1 || units < 1) {
    throw ConfigError("cell needs input_size >= 1 and units >= 1, got m=" +
                      std::to_string(input_size) + " n=" + std::to_string(units));
  }
  if (membrane_decay < 0.0 || membrane_decay > 1.0) {
    throw ConfigError("membrane decay must lie in [0,1]");
  }
  if (threshold_decay < 0.0 || threshold_decay > 1.0) {
    throw ConfigError("threshold decay must lie in [0,1]");
  }
  if (axo_somatic_recurrent) {
    if (variant != CellVariant::SSNU_A) {
      throw ConfigError("axo-somatic recurrence only exists for the adaptive-threshold unit");
    }
    if (!recurrent) {
      throw ConfigError("axo-somatic recurrence requires the recurrent flag");
    }
  }
  if (variant == CellVariant::LSTM && !recurrent) {
    throw ConfigError("the LSTM baseline is always recurrent");
  }
  if (pin_output_gate && variant != CellVariant::SSNU_O) {
    throw ConfigError("pin_output_gate only applies to the output-modulated unit");
  }
}

std::string CellConfig::variant_name() const {
  switch (variant) {
    case CellVariant::LSTM:
      return "LSTM";
    case CellVariant::SSNU:
      return recurrent ? "sSNU R" : "sSNU";
    case CellVariant::SSNU_A:
      if (axo_somatic_recurrent) return "sSNU-a Ra";
      return recurrent ? "sSNU-a R" : "sSNU-a";
    case CellVariant::SSNU_O:
      return recurrent ? "sSNU-o R" : "sSNU-o";
  }
  return "?";
}

CellConfig cell_config_from_name(const std::string& name) {
  CellConfig c;
  if (name == "LSTM") {
    c.variant = CellVariant::LSTM;
    c.recurrent = true;
  } else if (name == "sSNU") {
    c.variant = CellVariant::SSNU;
  } else if (name == "sSNU R") {
    c.variant = CellVariant::SSNU;
    c.recurrent = true;
  } else if (name == "sSNU-a") {
    c.variant = CellVariant::SSNU_A;
  } else if (name == "sSNU-a R") {
    c.variant = CellVariant::SSNU_A;
    c.recurrent = true;
  } else if (name == "sSNU-a Ra") {
    c.variant = CellVariant::SSNU_A;
    c.recurrent = true;
    c.axo_somatic_recurrent = true;
  } else if (name == "sSNU-o") {
    c.variant = CellVariant::SSNU_O;
  } else if (name == "sSNU-o R") {
    c.variant = CellVariant::SSNU_O;
    c.recurrent = true;
  } else {
    throw ConfigError("unknown cell variant '" + name + "'");
  }
  return c;
}

namespace {

Tensor glorot_uniform(int rows, int cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / (rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor t({rows, cols});
  for (int64_t i = 0; i < t.size(); ++i) t[i] = dist(rng);
  return t;
}

}  // namespace

CellParams CellParams::init(const CellConfig& config, std::mt19937_64& rng) {
  config.validate();
  const int m = config.input_size;
  const int n = config.units;

  CellParams out;
  out.config = config;
  auto& t = out.tensors;

  auto input_matrix = [&]() { return glorot_uniform(n, m, rng); };
  auto recur_matrix = [&]() { return glorot_uniform(n, n, rng); };
  auto bias = [&]() { return Tensor({n}); };

  switch (config.variant) {
    case CellVariant::SSNU:
      t.emplace("W", input_matrix());
      if (config.recurrent) t.emplace("H", recur_matrix());
      t.emplace("b", bias());
      break;
    case CellVariant::SSNU_A:
      t.emplace("W", input_matrix());
      if (config.recurrent) t.emplace("H", recur_matrix());
      if (config.axo_somatic_recurrent) {
        t.emplace("H_a", recur_matrix());
        t.emplace("rho", Tensor::full({n}, config.threshold_decay));
      }
      t.emplace("b0", bias());
      break;
    case CellVariant::SSNU_O:
      t.emplace("W", input_matrix());
      if (config.recurrent) t.emplace("H", recur_matrix());
      t.emplace("b", bias());
      t.emplace("W_o", input_matrix());
      if (config.recurrent) t.emplace("H_o", recur_matrix());
      t.emplace("b_o", bias());
      break;
    case CellVariant::LSTM:
      for (const char* gate : {"i", "c", "f", "s"}) {
        t.emplace(std::string("W_") + gate, input_matrix());
        t.emplace(std::string("H_") + gate, recur_matrix());
        t.emplace(std::string("b_") + gate, bias());
      }
      break;
  }
  return out;
}

int64_t CellParams::scalar_count() const {
  int64_t total = 0;
  for (const auto& [name, tensor] : tensors) total += tensor.size();
  return total;
}

std::vector<std::string> CellParams::names() const {
  std::vector<std::string> out;
  out.reserve(tensors.size());
  for (const auto& [name, tensor] : tensors) out.push_back(name);
  return out;
}

const Value& BoundCell::at(const std::string& name) const {
  auto it = p.find(name);
  if (it == p.end()) {
    throw ConfigError("cell '" + config.variant_name() + "' has no parameter '" +
                      name + "'");
  }
  return it->second;
}

BoundCell bind_cell(Graph& graph, const CellParams& params, const std::string& prefix) {
  BoundCell bound;
  bound.config = params.config;
  for (const auto& [name, tensor] : params.tensors) {
    bound.p.emplace(name, graph.param(prefix + "." + name, tensor));
  }
  bound.ones = graph.constant(Tensor::full({params.config.units}, 1.0));
  return bound;
}

CellState initial_cell_state(Graph& graph, const CellConfig& config) {
  CellState state;
  const Tensor zero({config.units});
  state.membrane = graph.constant(zero);
  state.output = graph.constant(zero);
  if (config.variant == CellVariant::SSNU_A) state.threshold = graph.constant(zero);
  if (config.variant == CellVariant::SSNU_O) state.raw_output = graph.constant(zero);
  return state;
}

namespace {

// s^t = W x + [H y^{t-1}] + d * s^{t-1} .* (1 - reset_source)
Value membrane_update(const BoundCell& cell, const CellState& state, Value x,
                      Value reset_source) {
  Value drive = matvec(cell.at("W"), x);
  if (cell.has("H")) drive = add(drive, matvec(cell.at("H"), state.output));
  Value decayed = scale(cell.config.membrane_decay, state.membrane);
  Value retained = mul(decayed, sub(cell.ones, reset_source));
  return add(drive, retained);
}

std::pair<Value, CellState> ssnu_step(Graph&, const BoundCell& cell,
                                      const CellState& state, Value x) {
  Value s = membrane_update(cell, state, x, state.output);
  Value y = sigmoid(add(s, cell.at("b")));
  CellState next;
  next.membrane = s;
  next.output = y;
  return {y, next};
}

std::pair<Value, CellState> ssnu_a_step(Graph& graph, const BoundCell& cell,
                                        const CellState& state, Value x) {
  Value s = membrane_update(cell, state, x, state.output);

  // Threshold low-pass: b^t = rho .* b^{t-1} + (1 - rho) .* drive. The drive
  // is the axo-somatic recurrence H_a y^{t-1} when present, otherwise the
  // unit's own previous output.
  Value drive = cell.has("H_a") ? matvec(cell.at("H_a"), state.output) : state.output;
  Value threshold;
  if (cell.has("rho")) {
    Value rho = cell.at("rho");
    threshold = add(mul(rho, state.threshold), mul(sub(cell.ones, rho), drive));
  } else {
    const double rho = cell.config.threshold_decay;
    threshold = add(scale(rho, state.threshold), scale(1.0 - rho, drive));
  }

  Value y = sigmoid(add(add(s, scale(cell.config.threshold_scale, threshold)),
                        cell.at("b0")));
  CellState next;
  next.membrane = s;
  next.output = y;
  next.threshold = threshold;
  (void)graph;
  return {y, next};
}

std::pair<Value, CellState> ssnu_o_step(Graph&, const BoundCell& cell,
                                        const CellState& state, Value x) {
  // The reset is driven by the previous unmodulated output; the recurrent
  // drives H and H_o see the modulated one.
  Value s = membrane_update(cell, state, x, state.raw_output);
  Value raw = sigmoid(add(s, cell.at("b")));

  Value y;
  if (cell.config.pin_output_gate) {
    y = raw;
  } else {
    Value gate_drive = matvec(cell.at("W_o"), x);
    if (cell.has("H_o")) gate_drive = add(gate_drive, matvec(cell.at("H_o"), state.output));
    Value gate = sigmoid(add(gate_drive, cell.at("b_o")));
    y = mul(raw, gate);
  }

  CellState next;
  next.membrane = s;
  next.output = y;
  next.raw_output = raw;
  return {y, next};
}

std::pair<Value, CellState> lstm_step(Graph&, const BoundCell& cell,
                                      const CellState& state, Value x) {
  auto gate_drive = [&](const char* g) {
    return add(add(matvec(cell.at(std::string("W_") + g), x),
                   matvec(cell.at(std::string("H_") + g), state.output)),
               cell.at(std::string("b_") + g));
  };
  Value in_gate = sigmoid(gate_drive("i"));
  Value out_gate = sigmoid(gate_drive("c"));
  Value forget_gate = sigmoid(gate_drive("f"));
  Value candidate = tanh(gate_drive("s"));

  Value s = add(mul(forget_gate, state.membrane), mul(in_gate, candidate));
  Value y = mul(out_gate, tanh(s));

  CellState next;
  next.membrane = s;
  next.output = y;
  return {y, next};
}

}  // namespace

std::pair<Value, CellState> cell_step(Graph& graph, const BoundCell& cell,
                                      const CellState& state, Value x) {
  if (x.tensor().rank() != 1 || x.tensor().dim(0) != cell.config.input_size) {
    throw ShapeError("cell input must be a vector of length " +
                     std::to_string(cell.config.input_size) + ", got " +
                     shape_str(x.tensor().shape()));
  }
  switch (cell.config.variant) {
    case CellVariant::SSNU:
      return ssnu_step(graph, cell, state, x);
    case CellVariant::SSNU_A:
      return ssnu_a_step(graph, cell, state, x);
    case CellVariant::SSNU_O:
      return ssnu_o_step(graph, cell, state, x);
    case CellVariant::LSTM:
      return lstm_step(graph, cell, state, x);
  }
  throw Error("unhandled variant");
}

std::vector<Value> run_layer(Graph& graph, const BoundCell& cell,
                             const std::vector<Value>& inputs) {
  if (inputs.empty()) throw ShapeError("run_layer: empty input sequence");
  std::vector<Value> outputs;
  outputs.reserve(inputs.size());
  CellState state = initial_cell_state(graph, cell.config);
  for (const Value& x : inputs) {
    auto [y, next] = cell_step(graph, cell, state, x);
    outputs.push_back(y);
    state = next;
  }
  return outputs;
}

std::vector<Value> run_bidirectional(Graph& graph, const BoundCell& fwd,
                                     const BoundCell& bwd,
                                     const std::vector<Value>& inputs) {
  if (fwd.config.units != bwd.config.units) {
    throw ShapeError("bidirectional halves must have equal unit counts");
  }
  std::vector<Value> fwd_out = run_layer(graph, fwd, inputs);
  std::vector<Value> reversed(inputs.rbegin(), inputs.rend());
  std::vector<Value> bwd_out = run_layer(graph, bwd, reversed);

  const size_t T = inputs.size();
  std::vector<Value> out;
  out.reserve(T);
  for (size_t t = 0; t < T; ++t) {
    out.push_back(concat(fwd_out[t], bwd_out[T - 1 - t]));
  }
  return out;
}

}  // namespace snnt
