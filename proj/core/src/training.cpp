// Copyright (c) 2026 the snnt authors. Apache-2.0 license.
#include "snnt/training.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "snnt/config.hpp"
#include "snnt/decode.hpp"
#include "snnt/errors.hpp"

namespace snnt {

double ScheduleConfig::rate_at(int64_t global_step) const {
  if (global_step < 0) throw ConfigError("schedule step must be >= 0");
  if (peak_rate <= 0.0 || init_div <= 0.0 || min_div <= 0.0) {
    throw ConfigError("schedule rates must be positive");
  }
  const int64_t warmup_steps =
      static_cast<int64_t>(warmup_epochs) * steps_per_epoch;
  const int64_t decay_steps = static_cast<int64_t>(decay_epochs) * steps_per_epoch;
  const double init = initial_rate();
  const double floor = min_rate();
  if (global_step <= warmup_steps) {
    if (warmup_steps == 0) return peak_rate;
    const double f = static_cast<double>(global_step) / static_cast<double>(warmup_steps);
    return init + (peak_rate - init) * f;
  }
  const int64_t into_decay = global_step - warmup_steps;
  if (into_decay <= decay_steps) {
    const double f = static_cast<double>(into_decay) / static_cast<double>(decay_steps);
    return peak_rate + (floor - peak_rate) * f;
  }
  return floor;
}

void adamw_step(OptimizerState& opt, std::map<std::string, Tensor>& params,
                const GradientMap& grads, double lr) {
  opt.step += 1;
  const double b1 = opt.hp.beta1;
  const double b2 = opt.hp.beta2;
  const double bias1 = 1.0 - std::pow(b1, static_cast<double>(opt.step));
  const double bias2 = 1.0 - std::pow(b2, static_cast<double>(opt.step));

  for (auto& [name, value] : params) {
    auto git = grads.find(name);
    if (git == grads.end()) {
      throw ConfigError("adamw_step: no gradient for parameter '" + name + "'");
    }
    const Tensor& g = git->second;
    if (!g.same_shape(value)) {
      throw ShapeError("adamw_step: gradient shape mismatch for '" + name + "'");
    }
    Tensor& m = opt.m.try_emplace(name, Tensor(value.shape())).first->second;
    Tensor& v = opt.v.try_emplace(name, Tensor(value.shape())).first->second;
    for (int64_t i = 0; i < value.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      value[i] -= lr * (m_hat / (std::sqrt(v_hat) + opt.hp.eps) +
                        opt.hp.weight_decay * value[i]);
    }
  }
}

double clip_gradients(GradientMap& grads, double c, bool unconditional) {
  if (c <= 0.0) throw ConfigError("clip threshold must be > 0");
  double sq = 0.0;
  for (const auto& [name, g] : grads) {
    for (int64_t i = 0; i < g.size(); ++i) sq += g[i] * g[i];
  }
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) throw NonFiniteError("clip_gradients", "gradient norm");
  if (norm == 0.0) return norm;
  if (unconditional || norm > c) {
    const double factor = c / norm;
    for (auto& [name, g] : grads) {
      for (int64_t i = 0; i < g.size(); ++i) g[i] *= factor;
    }
  }
  return norm;
}

Tensor apply_dropout(const Tensor& input, double p, std::mt19937_64& rng,
                     bool training) {
  if (p < 0.0 || p >= 1.0) throw ConfigError("dropout probability must lie in [0,1)");
  if (!training || p == 0.0) return input;
  Tensor out(input.shape());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double keep_scale = 1.0 / (1.0 - p);
  for (int64_t i = 0; i < input.size(); ++i) {
    out[i] = unit(rng) < p ? 0.0 : input[i] * keep_scale;
  }
  return out;
}

namespace {

// Trainable threshold decays parameterise a low-pass filter; project them
// back to [0,1] after each update so the filter stays stable.
void clamp_threshold_decays(std::map<std::string, Tensor>& params) {
  for (auto& [name, tensor] : params) {
    if (name.size() >= 4 && name.compare(name.size() - 4, 4, ".rho") == 0) {
      for (int64_t i = 0; i < tensor.size(); ++i) {
        tensor[i] = std::clamp(tensor[i], 0.0, 1.0);
      }
    }
  }
}

Value utterance_loss(Graph& graph, const BoundModel& bound, const Utterance& utt,
                     ForwardOpts* train) {
  std::vector<Value> frames = encode(graph, bound, utt.features, train);
  std::vector<Value> prediction;
  prediction.reserve(utt.labels.size() + 1);
  auto [h, state] = predict_start(graph, bound, train);
  prediction.push_back(h);
  for (int label : utt.labels) {
    auto [hh, next] = predict_step(graph, bound, state, label, train);
    prediction.push_back(hh);
    state = next;
  }
  AlignmentLattice lattice = build_lattice(graph, bound, frames, prediction);
  return rnnt_loss(graph, lattice, utt.labels);
}

}  // namespace

double evaluate_token_error(const TransducerModel& model, const Dataset& dataset) {
  std::vector<std::vector<int>> hyps, refs;
  hyps.reserve(dataset.size());
  refs.reserve(dataset.size());
  for (const Utterance& utt : dataset) {
    hyps.push_back(greedy_decode(model, utt.features).labels);
    refs.push_back(utt.labels);
  }
  return token_error_rate(hyps, refs);
}

TrainLog fit(TransducerModel& model, const Dataset& dataset,
             const TrainOptions& options) {
  if (dataset.empty()) throw ConfigError("fit: dataset is empty");
  if (options.epochs < 0) throw ConfigError("fit: epochs must be >= 0");
  if (options.batch_size < 1) throw ConfigError("fit: batch size must be >= 1");

  TrainLog log;
  if (options.epochs == 0) return log;

  const int64_t n = static_cast<int64_t>(dataset.size());
  const int64_t steps_per_epoch =
      (n + options.batch_size - 1) / options.batch_size;

  ScheduleConfig schedule;
  schedule.peak_rate = options.peak_rate;
  schedule.warmup_epochs = options.warmup_epochs;
  schedule.decay_epochs = options.epochs - options.warmup_epochs;
  if (schedule.decay_epochs < 0) {
    throw ConfigError("fit: warmup epochs exceed total epochs");
  }
  schedule.steps_per_epoch = static_cast<int>(steps_per_epoch);
  schedule.init_div = options.init_div;
  schedule.min_div = options.min_div;

  std::map<std::string, Tensor> params = model.named_tensors();
  OptimizerState opt;
  opt.hp.weight_decay = options.weight_decay;

  std::mt19937_64 shuffle_rng(options.seed);
  std::mt19937_64 dropout_rng(options.seed ^ 0xd1b54a32d192ed03ull);

  std::vector<int64_t> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  const std::filesystem::path ckpt_dir = options.checkpoint_dir;
  auto write_epoch_checkpoint = [&](const std::string& stem, int epoch) {
    if (options.checkpoint_dir.empty()) return;
    std::filesystem::create_directories(ckpt_dir);
    std::ostringstream meta;
    meta << "{\"epoch\":" << epoch << ",\"seed\":" << options.seed
         << ",\"model\":" << transducer_config_json(model.config) << "}";
    write_checkpoint((ckpt_dir / (stem + ".ckpt")).string(), model.named_tensors(),
                     meta.str());
  };

  int64_t global_step = 0;
  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss_sum = 0.0;
    int64_t epoch_batches = 0;

    for (int64_t start = 0; start < n; start += options.batch_size) {
      const int64_t end = std::min(n, start + options.batch_size);
      const int64_t batch_id = global_step;
      const double lr = schedule.rate_at(global_step);

      double batch_loss = 0.0;
      GradientMap grads;
      try {
        Graph graph;
        BoundModel bound = bind_model(graph, model);
        ForwardOpts train;
        train.input_dropout = options.input_dropout;
        train.embedding_dropout = options.embedding_dropout;
        train.rng = &dropout_rng;

        Value total;
        for (int64_t i = start; i < end; ++i) {
          Value item = utterance_loss(
              graph, bound, dataset[static_cast<size_t>(order[static_cast<size_t>(i)])],
              &train);
          total = (i == start) ? item : add(total, item);
        }
        Value mean = scale(1.0 / static_cast<double>(end - start), total);
        batch_loss = mean.scalar();
        grads = graph.backward(mean);
      } catch (const NonFiniteError& e) {
        throw DivergenceError(std::string("training diverged: ") + e.what(), batch_id);
      }
      if (!std::isfinite(batch_loss)) {
        throw DivergenceError("training diverged: non-finite loss", batch_id);
      }

      clip_gradients(grads, options.clip_threshold, options.clip_unconditional);
      adamw_step(opt, params, grads, lr);
      clamp_threshold_decays(params);
      model.load_named_tensors(params);

      log.rows.push_back({epoch, global_step, lr, batch_loss, -1.0});
      epoch_loss_sum += batch_loss;
      ++epoch_batches;
      ++global_step;
    }

    log.epoch_loss.push_back(epoch_loss_sum / static_cast<double>(epoch_batches));
    log.epoch_token_error.push_back(evaluate_token_error(model, dataset));
    log.rows.back().token_error = log.epoch_token_error.back();

    {
      std::ostringstream stem;
      stem << "epoch_";
      stem.width(3);
      stem.fill('0');
      stem << epoch;
      write_epoch_checkpoint(stem.str(), epoch);
    }
  }
  write_epoch_checkpoint("final", options.epochs);
  return log;
}

void write_train_log_csv(const TrainLog& log, const std::string& path,
                         const std::string& config_hash) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open training log '" + path + "' for writing");
  os << "# config_hash=" << config_hash << "\n";
  os << "epoch,step,lr,loss,token_error\n";
  os.precision(17);
  for (const StepRow& row : log.rows) {
    os << row.epoch << "," << row.step << "," << row.lr << "," << row.loss << ",";
    if (row.token_error >= 0.0) os << row.token_error;
    os << "\n";
  }
  if (!os) throw ConfigError("short write to training log '" + path + "'");
}

}  // namespace snnt
