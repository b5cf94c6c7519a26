// Copyright (c) 2026 the snnt authors. Apache-2.0 license.
#include "snnt/profiler.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include "snnt/decode.hpp"
#include "snnt/errors.hpp"

#ifdef __linux__
#include <sched.h>
#endif

namespace snnt {

int64_t count_params(const CellConfig& config) {
  config.validate();
  const int64_t m = config.input_size;
  const int64_t n = config.units;
  switch (config.variant) {
    case CellVariant::LSTM:
      return 4 * (n * m + n * n + n);
    case CellVariant::SSNU:
      return n * m + (config.recurrent ? n * n : 0) + n;
    case CellVariant::SSNU_A: {
      int64_t total = n * m + (config.recurrent ? n * n : 0) + n;  // W [, H], b0
      if (config.axo_somatic_recurrent) total += n * n + n;        // H_a, trainable rho
      return total;
    }
    case CellVariant::SSNU_O: {
      const int64_t per_branch = n * m + (config.recurrent ? n * n : 0) + n;
      return 2 * per_branch;  // (W [,H], b) plus (W_o [,H_o], b_o)
    }
  }
  throw Error("unhandled variant");
}

int64_t count_mults(const CellConfig& config) {
  config.validate();
  const int64_t m = config.input_size;
  const int64_t n = config.units;
  // Shared membrane update: W x (n*m) [, H y (n*n)], d*s (n), .*(1-reset) (n).
  const int64_t membrane = n * m + (config.recurrent ? n * n : 0) + 2 * n;
  switch (config.variant) {
    case CellVariant::LSTM:
      // Four gate drives plus f.*s, i.*candidate, c.*tanh(s).
      return 4 * (n * m + n * n) + 3 * n;
    case CellVariant::SSNU:
      return membrane;
    case CellVariant::SSNU_A:
      // rho.*b, (1-rho).*drive, beta*b, and H_a y when axo-somatic.
      return membrane + 3 * n + (config.axo_somatic_recurrent ? n * n : 0);
    case CellVariant::SSNU_O:
      // Gate drive W_o x [, H_o y] and the output product.
      return membrane + n * m + (config.recurrent ? n * n : 0) + n;
  }
  throw Error("unhandled variant");
}

ModelCost count_model(const TransducerConfig& config) {
  TransducerConfig wired = config;
  wired.validate_and_wire();
  ModelCost cost;
  for (const CellConfig& layer : wired.encoder_layers) {
    cost.encoder_params += 2 * count_params(layer);
    cost.encoder_mults += 2 * count_mults(layer);
  }
  cost.prediction_params = count_params(wired.prediction);
  cost.prediction_mults = count_mults(wired.prediction);
  return cost;
}

std::string format_percent(int64_t value, int64_t baseline) {
  if (baseline <= 0) throw ConfigError("percent baseline must be positive");
  // Below one percent the table prints "<1" rather than a rounded 0 or 1.
  if (100 * value < baseline) return "<1";
  const double pct = 100.0 * static_cast<double>(value) / static_cast<double>(baseline);
  return std::to_string(std::llround(pct));
}

namespace {

TransducerConfig lstm_baseline_of(const TransducerConfig& config) {
  TransducerConfig base = config;
  for (CellConfig& layer : base.encoder_layers) {
    const int units = layer.units;
    layer = cell_config_from_name("LSTM");
    layer.units = units;
  }
  const int pred_units = base.prediction.units;
  base.prediction = cell_config_from_name("LSTM");
  base.prediction.units = pred_units;
  base.validate_and_wire();
  return base;
}

}  // namespace

std::vector<SubnetworkCost> cost_report(const TransducerConfig& config) {
  TransducerConfig wired = config;
  wired.validate_and_wire();
  const ModelCost cost = count_model(wired);
  const ModelCost base = count_model(lstm_baseline_of(wired));

  const std::string enc_name = wired.encoder_layers.front().variant_name();
  const std::string pred_name = wired.prediction.variant_name();

  std::vector<SubnetworkCost> rows;
  rows.push_back({enc_name, "encoder", cost.encoder_params, cost.encoder_mults,
                  format_percent(cost.encoder_params, base.encoder_params),
                  format_percent(cost.encoder_mults, base.encoder_mults)});
  rows.push_back({pred_name, "prediction", cost.prediction_params, cost.prediction_mults,
                  format_percent(cost.prediction_params, base.prediction_params),
                  format_percent(cost.prediction_mults, base.prediction_mults)});
  rows.push_back({enc_name + " / " + pred_name, "full", cost.total_params(),
                  cost.total_mults(),
                  format_percent(cost.total_params(), base.total_params()),
                  format_percent(cost.total_mults(), base.total_mults())});
  return rows;
}

namespace {
constexpr int kRefInput = 340;
constexpr int kRefEncoderLayers = 6;
constexpr int kRefEncoderUnits = 640;
constexpr int kRefPredictionUnits = 768;
constexpr int kRefVocab = 45;
constexpr int kRefEmbedding = 10;

TransducerConfig reference_config(const std::string& enc, const std::string& pred) {
  return make_transducer_config(enc, kRefEncoderLayers, kRefEncoderUnits, pred,
                                kRefPredictionUnits, kRefInput, kRefVocab,
                                kRefEmbedding);
}
}  // namespace

std::vector<SubnetworkCost> reference_cost_table() {
  const ModelCost lstm = count_model(reference_config("LSTM", "LSTM"));

  std::vector<SubnetworkCost> rows;
  for (const char* pred : {"LSTM", "sSNU", "sSNU R", "sSNU-a", "sSNU-a R",
                           "sSNU-o", "sSNU-o R"}) {
    const ModelCost c = count_model(reference_config("LSTM", pred));
    rows.push_back({pred, "prediction", c.prediction_params, c.prediction_mults,
                    format_percent(c.prediction_params, lstm.prediction_params),
                    format_percent(c.prediction_mults, lstm.prediction_mults)});
  }
  for (const char* enc : {"LSTM", "sSNU-a Ra", "sSNU-o", "sSNU-o R"}) {
    const ModelCost c = count_model(reference_config(enc, "LSTM"));
    rows.push_back({enc, "encoder", c.encoder_params, c.encoder_mults,
                    format_percent(c.encoder_params, lstm.encoder_params),
                    format_percent(c.encoder_mults, lstm.encoder_mults)});
  }
  const std::pair<const char*, const char*> full_models[] = {
      {"LSTM", "LSTM"}, {"sSNU-o R", "sSNU-a R"}, {"sSNU-o R", "sSNU-o R"}};
  for (const auto& [enc, pred] : full_models) {
    const ModelCost c = count_model(reference_config(enc, pred));
    rows.push_back({std::string(enc) + " / " + pred, "full", c.total_params(),
                    c.total_mults(), format_percent(c.total_params(), lstm.total_params()),
                    format_percent(c.total_mults(), lstm.total_mults())});
  }
  return rows;
}

TransducerModel timing_model(const TransducerConfig& config, uint64_t seed) {
  TransducerModel model = TransducerModel::init(config, seed);
  // Blank-dominant output head: every timed model emits the same (empty)
  // transcript, so runs compare like for like.
  model.out_bias[model.config.blank_id()] += 8.0;
  return model;
}

std::vector<TimingRow> time_decode(const TransducerModel& model,
                                   const std::vector<int>& lengths, int repeats,
                                   uint64_t seed, const std::string& variant_label) {
  if (repeats < 1) throw ConfigError("time_decode: repeats must be >= 1");
  for (int T : lengths) {
    if (T < 1) throw ConfigError("time_decode: utterance length must be >= 1");
  }

#ifdef __linux__
  cpu_set_t cpus;
  CPU_ZERO(&cpus);
  CPU_SET(0, &cpus);
  sched_setaffinity(0, sizeof(cpus), &cpus);  // best effort
#endif

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<TimingRow> rows;
  rows.reserve(lengths.size());
  for (int T : lengths) {
    Tensor features({T, model.config.input_dim});
    for (int64_t i = 0; i < features.size(); ++i) features[i] = normal(rng);

    greedy_decode(model, features);  // warm-up, excluded

    std::vector<double> seconds;
    seconds.reserve(static_cast<size_t>(repeats));
    for (int r = 0; r < repeats; ++r) {
      const auto start = std::chrono::steady_clock::now();
      greedy_decode(model, features);
      const auto stop = std::chrono::steady_clock::now();
      seconds.push_back(std::chrono::duration<double>(stop - start).count());
    }
    double mean = 0.0;
    for (double s : seconds) mean += s;
    mean /= static_cast<double>(repeats);
    double var = 0.0;
    for (double s : seconds) var += (s - mean) * (s - mean);
    const double stddev =
        repeats > 1 ? std::sqrt(var / static_cast<double>(repeats - 1)) : 0.0;
    rows.push_back({variant_label, T, mean, stddev, repeats});
  }
  return rows;
}

void write_cost_csv(const std::vector<SubnetworkCost>& rows, const std::string& path,
                    const std::string& config_hash) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open '" + path + "' for writing");
  os << "# config_hash=" << config_hash << "\n";
  os << "# multiplications are per output timestep, summed over layers and directions;\n";
  os << "# subnetwork totals cover recurrent cells only (embedding and joint excluded)\n";
  os << "variant,subnetwork,params,mults,percent_params,percent_mults\n";
  for (const SubnetworkCost& row : rows) {
    os << row.variant << "," << row.subnetwork << "," << row.params << ","
       << row.mults << "," << row.percent_params << "," << row.percent_mults << "\n";
  }
  if (!os) throw ConfigError("short write to '" + path + "'");
}

void write_timing_csv(const std::vector<TimingRow>& rows, const std::string& path,
                      const std::string& config_hash) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open '" + path + "' for writing");
  os << "# config_hash=" << config_hash << "\n";
  os << "variant,T,mean_s,std_s\n";
  os.precision(9);
  for (const TimingRow& row : rows) {
    os << row.variant << "," << row.frames << "," << row.mean_s << "," << row.std_s
       << "\n";
  }
  if (!os) throw ConfigError("short write to '" + path + "'");
}

double pearson_correlation(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw ConfigError("pearson correlation needs two equal-length series");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace snnt
