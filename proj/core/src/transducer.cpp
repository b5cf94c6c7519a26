// Copyright (c) 2026 the snnt authors. Apache-2.0 license.
#include "snnt/transducer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "snnt/errors.hpp"

namespace snnt {

void TransducerConfig::validate_and_wire() {
  if (encoder_layers.empty()) throw ConfigError("encoder needs at least one layer");
  if (input_dim < 1) throw ConfigError("input_dim must be >= 1");
  if (embedding_dim < 1) throw ConfigError("embedding_dim must be >= 1");
  if (vocab < 1) throw ConfigError("vocab must be >= 1");
  if (joint_dim < 1) throw ConfigError("joint_dim must be >= 1");

  int in = input_dim;
  for (auto& layer : encoder_layers) {
    layer.input_size = in;
    layer.validate();
    in = 2 * layer.units;
  }
  prediction.input_size = embedding_dim;
  prediction.validate();
}

TransducerConfig make_transducer_config(const std::string& encoder_variant,
                                        int encoder_layers, int encoder_units,
                                        const std::string& prediction_variant,
                                        int prediction_units, int input_dim,
                                        int vocab, int embedding_dim,
                                        int joint_dim) {
  TransducerConfig cfg;
  cfg.input_dim = input_dim;
  cfg.vocab = vocab;
  cfg.embedding_dim = embedding_dim;
  cfg.joint_dim = joint_dim;
  CellConfig enc = cell_config_from_name(encoder_variant);
  enc.units = encoder_units;
  cfg.encoder_layers.assign(static_cast<size_t>(encoder_layers), enc);
  cfg.prediction = cell_config_from_name(prediction_variant);
  cfg.prediction.units = prediction_units;
  cfg.validate_and_wire();
  return cfg;
}

namespace {
Tensor glorot(int rows, int cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / (rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor t({rows, cols});
  for (int64_t i = 0; i < t.size(); ++i) t[i] = dist(rng);
  return t;
}
}  // namespace

TransducerModel TransducerModel::init(TransducerConfig config, uint64_t seed) {
  config.validate_and_wire();
  TransducerModel model;
  model.config = config;
  std::mt19937_64 rng(seed);

  for (const CellConfig& layer : config.encoder_layers) {
    model.encoder.push_back(
        {CellParams::init(layer, rng), CellParams::init(layer, rng)});
  }
  model.embedding = glorot(config.vocab + 1, config.embedding_dim, rng);
  model.prediction = CellParams::init(config.prediction, rng);

  const int enc_out = config.encoder_output_dim();
  const int pred_out = config.prediction.units;
  model.enc_proj = glorot(config.joint_dim, enc_out, rng);
  model.pred_proj = glorot(config.joint_dim, pred_out, rng);
  model.out_weight = glorot(config.vocab + 1, config.joint_dim, rng);
  model.out_bias = Tensor({config.vocab + 1});
  return model;
}

int64_t TransducerModel::live_parameter_count() const {
  int64_t total = embedding.size() + enc_proj.size() + pred_proj.size() +
                  out_weight.size() + out_bias.size() + prediction.scalar_count();
  for (const auto& layer : encoder) {
    total += layer[0].scalar_count() + layer[1].scalar_count();
  }
  return total;
}

NamedTensors TransducerModel::named_tensors() const {
  NamedTensors out;
  for (size_t l = 0; l < encoder.size(); ++l) {
    for (int dir = 0; dir < 2; ++dir) {
      const std::string prefix = "enc.l" + std::to_string(l) + "." +
                                 (dir == 0 ? "fwd" : "bwd") + ".";
      for (const auto& [name, tensor] : encoder[l][static_cast<size_t>(dir)].tensors) {
        out.emplace(prefix + name, tensor);
      }
    }
  }
  out.emplace("embedding", embedding);
  for (const auto& [name, tensor] : prediction.tensors) {
    out.emplace("pred." + name, tensor);
  }
  out.emplace("joint.enc_proj", enc_proj);
  out.emplace("joint.pred_proj", pred_proj);
  out.emplace("joint.out_weight", out_weight);
  out.emplace("joint.out_bias", out_bias);
  return out;
}

void TransducerModel::load_named_tensors(const NamedTensors& tensors) {
  auto take = [&](const std::string& name, Tensor& dst) {
    auto it = tensors.find(name);
    if (it == tensors.end()) {
      throw ConfigError("checkpoint is missing tensor '" + name + "'");
    }
    if (!it->second.same_shape(dst)) {
      throw ConfigError("checkpoint tensor '" + name + "' has shape " +
                        shape_str(it->second.shape()) + ", model expects " +
                        shape_str(dst.shape()));
    }
    dst = it->second;
  };
  size_t expected = 5 + prediction.tensors.size();
  for (size_t l = 0; l < encoder.size(); ++l) {
    for (int dir = 0; dir < 2; ++dir) {
      auto& cell = encoder[l][static_cast<size_t>(dir)];
      const std::string prefix = "enc.l" + std::to_string(l) + "." +
                                 (dir == 0 ? "fwd" : "bwd") + ".";
      for (auto& [name, tensor] : cell.tensors) take(prefix + name, tensor);
      expected += cell.tensors.size();
    }
  }
  take("embedding", embedding);
  for (auto& [name, tensor] : prediction.tensors) take("pred." + name, tensor);
  take("joint.enc_proj", enc_proj);
  take("joint.pred_proj", pred_proj);
  take("joint.out_weight", out_weight);
  take("joint.out_bias", out_bias);
  if (tensors.size() != expected) {
    throw ConfigError("checkpoint has " + std::to_string(tensors.size()) +
                      " tensors, model expects " + std::to_string(expected));
  }
}

BoundModel bind_model(Graph& graph, const TransducerModel& model) {
  BoundModel bound;
  bound.config = &model.config;
  for (size_t l = 0; l < model.encoder.size(); ++l) {
    const std::string prefix = "enc.l" + std::to_string(l);
    bound.encoder.push_back(
        {bind_cell(graph, model.encoder[l][0], prefix + ".fwd"),
         bind_cell(graph, model.encoder[l][1], prefix + ".bwd")});
  }
  bound.embedding = graph.param("embedding", model.embedding);
  bound.prediction = bind_cell(graph, model.prediction, "pred");
  bound.enc_proj = graph.param("joint.enc_proj", model.enc_proj);
  bound.pred_proj = graph.param("joint.pred_proj", model.pred_proj);
  bound.out_weight = graph.param("joint.out_weight", model.out_weight);
  bound.out_bias = graph.param("joint.out_bias", model.out_bias);
  return bound;
}

namespace {

Value dropout_mask_mul(Graph& graph, Value x, double p, std::mt19937_64& rng) {
  const int64_t n = x.size();
  Tensor mask(x.tensor().shape());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double keep_scale = 1.0 / (1.0 - p);
  for (int64_t i = 0; i < n; ++i) {
    mask[i] = unit(rng) < p ? 0.0 : keep_scale;
  }
  return mul(x, graph.constant(std::move(mask)));
}

}  // namespace

std::vector<Value> encode(Graph& graph, const BoundModel& model,
                          const Tensor& features, const ForwardOpts* train) {
  if (features.rank() != 2) throw ShapeError("encode expects T x F features");
  const int T = features.dim(0);
  const int F = features.dim(1);
  if (F != model.config->input_dim) {
    throw ShapeError("feature width " + std::to_string(F) + " does not match input_dim " +
                     std::to_string(model.config->input_dim));
  }

  std::vector<Value> xs;
  xs.reserve(static_cast<size_t>(T));
  for (int t = 0; t < T; ++t) {
    Tensor frame({F});
    std::copy(features.data() + static_cast<int64_t>(t) * F,
              features.data() + static_cast<int64_t>(t + 1) * F, frame.data());
    xs.push_back(graph.constant(std::move(frame)));
  }

  for (const auto& layer : model.encoder) {
    if (train != nullptr && train->input_dropout > 0.0) {
      for (Value& x : xs) {
        x = dropout_mask_mul(graph, x, train->input_dropout, *train->rng);
      }
    }
    xs = run_bidirectional(graph, layer[0], layer[1], xs);
  }
  return xs;
}

namespace {
std::pair<Value, PredState> prediction_advance(Graph& graph, const BoundModel& model,
                                               const PredState& state, int symbol,
                                               const ForwardOpts* train) {
  Value emb = embed_row(model.embedding, symbol);
  if (train != nullptr && train->embedding_dropout > 0.0) {
    emb = dropout_mask_mul(graph, emb, train->embedding_dropout, *train->rng);
  }
  auto [y, next] = cell_step(graph, model.prediction, state.cell, emb);
  return {y, PredState{next}};
}
}  // namespace

std::pair<Value, PredState> predict_start(Graph& graph, const BoundModel& model,
                                          const ForwardOpts* train) {
  PredState zero{initial_cell_state(graph, model.prediction.config)};
  return prediction_advance(graph, model, zero, model.config->blank_id(), train);
}

std::pair<Value, PredState> predict_step(Graph& graph, const BoundModel& model,
                                         const PredState& state, int label,
                                         const ForwardOpts* train) {
  if (label < 0 || label >= model.config->vocab) {
    throw ConfigError("prediction label " + std::to_string(label) +
                      " out of range [0," + std::to_string(model.config->vocab) +
                      "); the blank is only fed as the start token");
  }
  return prediction_advance(graph, model, state, label, train);
}

namespace {
Value joint_combine(const BoundModel& model, Value enc_projected, Value pred_projected) {
  Value z = tanh(mul(enc_projected, pred_projected));
  return log_softmax(add(matvec(model.out_weight, z), model.out_bias));
}
}  // namespace

Value joint(Graph& graph, const BoundModel& model, Value h_enc, Value h_pred) {
  (void)graph;
  return joint_combine(model, matvec(model.enc_proj, h_enc),
                       matvec(model.pred_proj, h_pred));
}

AlignmentLattice build_lattice(Graph& graph, const BoundModel& model,
                               const std::vector<Value>& frames,
                               const std::vector<Value>& prediction) {
  (void)graph;
  if (frames.empty() || prediction.empty()) {
    throw ShapeError("lattice needs at least one frame and one prediction state");
  }
  AlignmentLattice lat;
  lat.frames = static_cast<int>(frames.size());
  lat.target_len = static_cast<int>(prediction.size()) - 1;
  lat.vocab = model.config->vocab;
  lat.rows.reserve(frames.size() * prediction.size());

  std::vector<Value> enc_projected;
  enc_projected.reserve(frames.size());
  for (const Value& f : frames) enc_projected.push_back(matvec(model.enc_proj, f));
  std::vector<Value> pred_projected;
  pred_projected.reserve(prediction.size());
  for (const Value& p : prediction) pred_projected.push_back(matvec(model.pred_proj, p));

  for (const Value& e : enc_projected) {
    for (const Value& p : pred_projected) {
      lat.rows.push_back(joint_combine(model, e, p));
    }
  }
  return lat;
}

AlignmentLattice lattice_from_values(Graph& graph, int frames, int target_len,
                                     int vocab, const std::vector<double>& grid) {
  const int64_t row = vocab + 1;
  const int64_t expected = static_cast<int64_t>(frames) * (target_len + 1) * row;
  if (static_cast<int64_t>(grid.size()) != expected) {
    throw ShapeError("lattice grid has " + std::to_string(grid.size()) +
                     " values, expected " + std::to_string(expected));
  }
  AlignmentLattice lat;
  lat.frames = frames;
  lat.target_len = target_len;
  lat.vocab = vocab;
  lat.rows.reserve(static_cast<size_t>(frames) * (target_len + 1));
  for (int64_t i = 0; i < static_cast<int64_t>(frames) * (target_len + 1); ++i) {
    Tensor r({vocab + 1});
    std::copy(grid.begin() + i * row, grid.begin() + (i + 1) * row, r.data());
    lat.rows.push_back(graph.constant(std::move(r)));
  }
  return lat;
}

void validate_lattice(const AlignmentLattice& lattice) {
  for (const Value& row : lattice.rows) {
    const Tensor& r = row.tensor();
    if (r.rank() != 1 || r.dim(0) != lattice.vocab + 1) {
      throw ShapeError("lattice row has shape " + shape_str(r.shape()) +
                       ", expected [" + std::to_string(lattice.vocab + 1) + "]");
    }
    double mass = 0.0;
    for (int64_t i = 0; i < r.size(); ++i) mass += std::exp(r[i]);
    if (std::abs(mass - 1.0) > 1e-9) {
      throw ConfigError("lattice row is not a normalised distribution (sum of exp = " +
                        std::to_string(mass) + ")");
    }
  }
}

Value rnnt_loss(Graph& graph, const AlignmentLattice& lattice,
                const std::vector<int>& targets) {
  const int T = lattice.frames;
  const int U = lattice.target_len;
  const int blank = lattice.vocab;
  if (static_cast<int>(targets.size()) != U) {
    throw ShapeError("lattice built for " + std::to_string(U) + " labels, got " +
                     std::to_string(targets.size()));
  }
  for (int lab : targets) {
    if (lab < 0 || lab >= lattice.vocab) {
      throw ConfigError("target label " + std::to_string(lab) + " out of range [0," +
                        std::to_string(lattice.vocab) + ")");
    }
  }
  // Loose wiring-bug guard only: finite-difference probes nudge single
  // entries, so the strict 1e-9 normalisation invariant is checked by
  // validate_lattice, not here.
  for (const Value& row : lattice.rows) {
    const Tensor& r = row.tensor();
    double mass = 0.0;
    for (int64_t i = 0; i < r.size(); ++i) mass += std::exp(r[i]);
    if (std::abs(mass - 1.0) > 1e-3) {
      throw ConfigError("lattice row is not a normalised distribution (sum of exp = " +
                        std::to_string(mass) + ")");
    }
  }

  // alpha(t,u): log-probability of consuming t+1 frames and emitting the
  // first u labels. Row-major over (t, u).
  std::vector<Value> alpha(static_cast<size_t>(T) * (U + 1));
  auto a = [&](int t, int u) -> Value& {
    return alpha[static_cast<size_t>(t) * (U + 1) + u];
  };

  a(0, 0) = graph.constant_scalar(0.0);
  for (int t = 1; t < T; ++t) {
    a(t, 0) = add(a(t - 1, 0), pick(lattice.at(t - 1, 0), blank));
  }
  for (int u = 1; u <= U; ++u) {
    a(0, u) = add(a(0, u - 1),
                  pick(lattice.at(0, u - 1), targets[static_cast<size_t>(u - 1)]));
  }
  for (int t = 1; t < T; ++t) {
    for (int u = 1; u <= U; ++u) {
      Value via_blank = add(a(t - 1, u), pick(lattice.at(t - 1, u), blank));
      Value via_label = add(
          a(t, u - 1), pick(lattice.at(t, u - 1), targets[static_cast<size_t>(u - 1)]));
      a(t, u) = logaddexp(via_blank, via_label);
    }
  }
  Value total = add(a(T - 1, U), pick(lattice.at(T - 1, U), blank));
  return scale(-1.0, total);
}

double alignment_cut_gap(int frames, int target_len, int vocab,
                         const std::vector<double>& grid,
                         const std::vector<int>& targets) {
  const int T = frames;
  const int U = target_len;
  const int row = vocab + 1;
  const int blank = vocab;
  auto lp = [&](int t, int u, int sym) {
    return grid[(static_cast<size_t>(t) * (U + 1) + u) * row + sym];
  };
  auto lse = [](double x, double y) {
    const double hi = std::max(x, y);
    return hi + std::log1p(std::exp(std::min(x, y) - hi));
  };

  std::vector<double> alpha(static_cast<size_t>(T) * (U + 1));
  auto a = [&](int t, int u) -> double& {
    return alpha[static_cast<size_t>(t) * (U + 1) + u];
  };
  a(0, 0) = 0.0;
  for (int t = 1; t < T; ++t) a(t, 0) = a(t - 1, 0) + lp(t - 1, 0, blank);
  for (int u = 1; u <= U; ++u) {
    a(0, u) = a(0, u - 1) + lp(0, u - 1, targets[static_cast<size_t>(u - 1)]);
  }
  for (int t = 1; t < T; ++t) {
    for (int u = 1; u <= U; ++u) {
      a(t, u) = lse(a(t - 1, u) + lp(t - 1, u, blank),
                    a(t, u - 1) + lp(t, u - 1, targets[static_cast<size_t>(u - 1)]));
    }
  }
  const double total = a(T - 1, U) + lp(T - 1, U, blank);

  // beta(t,u): log-probability of completing from (t,u), including the final
  // blank. Every monotone path crosses each anti-diagonal t+u=c exactly
  // once, so every cut must carry the whole mass.
  std::vector<double> beta(static_cast<size_t>(T) * (U + 1));
  auto b = [&](int t, int u) -> double& {
    return beta[static_cast<size_t>(t) * (U + 1) + u];
  };
  b(T - 1, U) = lp(T - 1, U, blank);
  for (int t = T - 2; t >= 0; --t) b(t, U) = b(t + 1, U) + lp(t, U, blank);
  for (int u = U - 1; u >= 0; --u) {
    b(T - 1, u) = b(T - 1, u + 1) + lp(T - 1, u, targets[static_cast<size_t>(u)]);
  }
  for (int t = T - 2; t >= 0; --t) {
    for (int u = U - 1; u >= 0; --u) {
      b(t, u) = lse(b(t + 1, u) + lp(t, u, blank),
                    b(t, u + 1) + lp(t, u, targets[static_cast<size_t>(u)]));
    }
  }

  double worst = 0.0;
  for (int cut = 0; cut <= T - 1 + U; ++cut) {
    double mass = -std::numeric_limits<double>::infinity();
    for (int t = std::max(0, cut - U); t < T && cut - t >= 0; ++t) {
      const int u = cut - t;
      if (u > U) continue;
      mass = lse(mass, a(t, u) + b(t, u));
    }
    worst = std::max(worst, std::abs(mass - total));
  }
  return worst;
}

}  // namespace snnt
