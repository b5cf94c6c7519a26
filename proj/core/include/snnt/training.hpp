// Copyright (c) 2026 the snnt authors. Apache-2.0 license.
#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "snnt/dataio.hpp"
#include "snnt/graph.hpp"
#include "snnt/transducer.hpp"

namespace snnt {

// One-cycle schedule: linear ramp from peak/init_div up to peak over the
// warmup steps, then linearly down to peak/min_div over the decay steps,
// constant afterwards.
struct ScheduleConfig {
  double peak_rate = 3e-3;
  int warmup_epochs = 6;
  int decay_epochs = 14;
  int steps_per_epoch = 1;
  double init_div = 10.0;
  double min_div = 100.0;

  double initial_rate() const { return peak_rate / init_div; }
  double min_rate() const { return peak_rate / min_div; }
  double rate_at(int64_t global_step) const;
};

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

// Decoupled-weight-decay Adam. Moments are kept per parameter name and
// created lazily on the first step.
struct OptimizerState {
  AdamWConfig hp;
  int64_t step = 0;
  std::map<std::string, Tensor> m;
  std::map<std::string, Tensor> v;
};

void adamw_step(OptimizerState& opt, std::map<std::string, Tensor>& params,
                const GradientMap& grads, double lr);

// Scales all gradients by c/norm when the global L2 norm exceeds c; the
// unconditional flag applies the rescaling regardless of the norm. Returns
// the pre-clip norm.
double clip_gradients(GradientMap& grads, double c, bool unconditional = false);

// Inverted dropout: zero with probability p and scale survivors by 1/(1-p)
// in training mode; identity at inference.
Tensor apply_dropout(const Tensor& input, double p, std::mt19937_64& rng,
                     bool training);

struct TrainOptions {
  int epochs = 20;
  int batch_size = 8;
  double peak_rate = 3e-3;
  int warmup_epochs = 6;
  double init_div = 10.0;
  double min_div = 100.0;
  double clip_threshold = 10.0;
  bool clip_unconditional = false;
  double input_dropout = 0.25;
  double embedding_dropout = 0.05;
  double weight_decay = 0.0;
  uint64_t seed = 42;
  std::string checkpoint_dir;  // empty: do not write checkpoints
};

struct StepRow {
  int epoch = 0;
  int64_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
  double token_error = -1.0;  // filled on epoch-final rows only
};

struct TrainLog {
  std::vector<StepRow> rows;
  std::vector<double> epoch_loss;
  std::vector<double> epoch_token_error;
};

// Seeded, single-threaded, deterministic training run. Writes one checkpoint
// per epoch plus final.ckpt when checkpoint_dir is set. Throws
// DivergenceError (with the offending batch id) if the loss goes non-finite.
TrainLog fit(TransducerModel& model, const Dataset& dataset,
             const TrainOptions& options);

// CSV columns: epoch,step,lr,loss,token_error. The hash line pins the run
// configuration the log belongs to.
void write_train_log_csv(const TrainLog& log, const std::string& path,
                         const std::string& config_hash);

// Greedy-decodes the whole dataset and returns the corpus token error rate.
double evaluate_token_error(const TransducerModel& model, const Dataset& dataset);

}  // namespace snnt
