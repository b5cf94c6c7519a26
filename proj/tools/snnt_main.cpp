// Copyright (c) 2026 the snnt authors. Apache-2.0 license.
//
// Command-line entry point: dataset generation, training, decoding,
// cost/latency profiling and gradient verification.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "snnt/config.hpp"
#include "snnt/dataio.hpp"
#include "snnt/decode.hpp"
#include "snnt/errors.hpp"
#include "snnt/profiler.hpp"
#include "snnt/training.hpp"
#include "snnt/verification.hpp"

namespace {

using namespace snnt;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitVerification = 2;
constexpr int kExitDivergence = 3;

struct TrainArgs {
  std::string config_path;
  std::string data_override;
  std::string out_override;
  int64_t seed_override = -1;
  int epochs_override = -1;
  int batch_override = -1;
  bool f32 = false;
};

int cmd_train(const TrainArgs& args) {
  RunConfig cfg = load_run_config(args.config_path);
  if (!args.data_override.empty()) cfg.paths.data = args.data_override;
  if (!args.out_override.empty()) cfg.paths.out = args.out_override;
  if (args.seed_override >= 0) cfg.training.seed = static_cast<uint64_t>(args.seed_override);
  if (args.epochs_override >= 0) cfg.training.epochs = args.epochs_override;
  if (args.batch_override >= 1) cfg.training.batch_size = args.batch_override;
  if (args.f32) cfg.precision = Precision::f32;
  set_default_precision(cfg.precision);

  if (cfg.paths.data.empty()) throw ConfigError("no dataset: set paths.data or --data");
  if (cfg.paths.out.empty()) throw ConfigError("no output directory: set paths.out or --out");
  if (!std::filesystem::exists(cfg.paths.data)) {
    throw ConfigError("dataset file '" + cfg.paths.data + "' does not exist");
  }

  const std::string hash = config_hash_hex(cfg);
  std::cout << "config_hash=" << hash << "\n";

  Dataset data = read_dataset_jsonl(cfg.paths.data);
  TransducerModel model = TransducerModel::init(cfg.model, cfg.training.seed);

  TrainOptions options = cfg.training;
  options.checkpoint_dir = cfg.paths.out;
  TrainLog log = fit(model, data, options);

  std::filesystem::create_directories(cfg.paths.out);
  write_train_log_csv(log, (std::filesystem::path(cfg.paths.out) / "train_log.csv").string(),
                      hash);
  if (!log.epoch_loss.empty()) {
    std::cout << "final_loss=" << log.epoch_loss.back()
              << " final_token_error=" << log.epoch_token_error.back() << "\n";
  }
  std::cout << "checkpoint=" << (std::filesystem::path(cfg.paths.out) / "final.ckpt").string()
            << "\n";
  return kExitOk;
}

struct DecodeArgs {
  std::string checkpoint;
  std::string data;
  std::string out;
  std::string mode = "greedy";
  int width = 16;
  bool f32 = false;
};

TransducerModel model_from_checkpoint(const std::string& path) {
  Checkpoint ckpt = read_checkpoint(path);
  json meta;
  try {
    meta = json::parse(ckpt.meta_json);
  } catch (const json::parse_error& e) {
    throw ConfigError("checkpoint meta is not valid JSON: " + std::string(e.what()));
  }
  if (!meta.contains("model")) {
    throw ConfigError("checkpoint meta carries no model configuration");
  }
  TransducerConfig cfg = parse_transducer_config(meta.at("model").dump());
  TransducerModel model = TransducerModel::init(cfg, 0);
  model.load_named_tensors(ckpt.tensors);
  return model;
}

int cmd_decode(const DecodeArgs& args) {
  if (args.mode != "greedy" && args.mode != "beam") {
    throw ConfigError("decode mode must be 'greedy' or 'beam'");
  }
  if (args.width < 1) throw ConfigError("beam width must be >= 1");
  if (!std::filesystem::exists(args.data)) {
    throw ConfigError("dataset file '" + args.data + "' does not exist");
  }
  set_default_precision(args.f32 ? Precision::f32 : Precision::f64);

  TransducerModel model = model_from_checkpoint(args.checkpoint);
  Dataset data = read_dataset_jsonl(args.data);

  std::ofstream os(args.out);
  if (!os) throw ConfigError("cannot open '" + args.out + "' for writing");

  std::vector<std::vector<int>> hyps, refs;
  bool have_refs = false;
  double total_lp = 0.0;
  for (const Utterance& utt : data) {
    DecodeResult result = args.mode == "beam"
                              ? beam_decode(model, utt.features, args.width)
                              : greedy_decode(model, utt.features);
    json rec;
    rec["id"] = utt.id;
    rec["labels"] = result.labels;
    rec["log_prob"] = result.log_prob;
    if (result.truncated) rec["truncated"] = true;
    os << rec.dump() << "\n";
    hyps.push_back(result.labels);
    refs.push_back(utt.labels);
    if (!utt.labels.empty()) have_refs = true;
    total_lp += result.log_prob;
  }
  std::cout << "utterances=" << data.size()
            << " mean_log_prob=" << (data.empty() ? 0.0 : total_lp / data.size()) << "\n";
  if (have_refs) {
    std::cout << "token_error=" << token_error_rate(hyps, refs) << "\n";
  }
  return kExitOk;
}

struct ProfileArgs {
  std::string config_path;
  bool reference = false;
  std::vector<int> lengths;
  int repeats = 10;
  uint64_t seed = 1;
  std::string out_dir = ".";
  bool counts_only = false;
};

int cmd_profile(const ProfileArgs& args) {
  std::filesystem::create_directories(args.out_dir);
  const std::filesystem::path out(args.out_dir);

  std::string hash = "reference";
  std::vector<SubnetworkCost> counts;
  RunConfig cfg;
  if (args.reference) {
    counts = reference_cost_table();
  } else {
    if (args.config_path.empty()) {
      throw ConfigError("profile needs --config or --reference");
    }
    cfg = load_run_config(args.config_path);
    hash = config_hash_hex(cfg);
    counts = cost_report(cfg.model);
  }
  write_cost_csv(counts, (out / "counts.csv").string(), hash);
  std::cout << "counts_csv=" << (out / "counts.csv").string() << "\n";

  if (args.counts_only || args.lengths.empty()) return kExitOk;

  TransducerConfig model_cfg;
  if (args.reference) {
    model_cfg = make_transducer_config("sSNU-o R", 6, 640, "sSNU-a R", 768, 340, 45, 10);
  } else {
    model_cfg = cfg.model;
  }
  for (int T : args.lengths) {
    if (T < 1) throw ConfigError("invalid utterance length " + std::to_string(T));
  }

  TransducerConfig lstm_cfg = model_cfg;
  for (CellConfig& layer : lstm_cfg.encoder_layers) {
    const int units = layer.units;
    layer = cell_config_from_name("LSTM");
    layer.units = units;
  }
  {
    const int units = lstm_cfg.prediction.units;
    lstm_cfg.prediction = cell_config_from_name("LSTM");
    lstm_cfg.prediction.units = units;
  }
  lstm_cfg.validate_and_wire();

  const std::string variant = model_cfg.encoder_layers.front().variant_name() + " / " +
                              model_cfg.prediction.variant_name();
  std::vector<TimingRow> rows =
      time_decode(timing_model(model_cfg, args.seed), args.lengths, args.repeats,
                  args.seed, variant);
  std::vector<TimingRow> lstm_rows =
      time_decode(timing_model(lstm_cfg, args.seed), args.lengths, args.repeats,
                  args.seed, "LSTM / LSTM");
  rows.insert(rows.end(), lstm_rows.begin(), lstm_rows.end());
  write_timing_csv(rows, (out / "timing.csv").string(), hash);
  std::cout << "timing_csv=" << (out / "timing.csv").string() << "\n";
  return kExitOk;
}

int cmd_gradcheck(double tol, uint64_t seed) {
  if (tol <= 0.0) throw ConfigError("gradcheck tolerance must be > 0");
  VerificationSuite suite = run_verification_suite(tol, seed);
  for (const VerificationCheck& check : suite.checks) {
    std::cout << (check.report.pass ? "[pass] " : "[FAIL] ") << check.name << ": "
              << check.report.summary() << "\n";
  }
  if (!suite.all_passed()) {
    throw VerificationError("gradient check failed: " + suite.first_failure()->name);
  }
  std::cout << "all " << suite.checks.size() << " checks passed at tol=" << tol << "\n";
  return kExitOk;
}

struct GenDataArgs {
  ToyTaskSpec spec;
  std::string out;
};

int cmd_gen_data(const GenDataArgs& args) {
  args.spec.validate();
  Dataset data = generate_toy_dataset(args.spec);
  write_dataset_jsonl(data, args.out);
  std::cout << "wrote " << data.size() << " utterances to " << args.out << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sequence transduction toolkit (sSNU recurrent units + RNN transducer)"};
  app.require_subcommand(1);

  GenDataArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen-data", "generate a synthetic toy dataset");
  gen_cmd->add_option("--out", gen.out, "output JSONL path")->required();
  gen_cmd->add_option("--vocab", gen.spec.vocab, "vocabulary size");
  gen_cmd->add_option("--feature-dim", gen.spec.feature_dim, "feature width");
  gen_cmd->add_option("--frames-min", gen.spec.frames_per_symbol_min, "min frames per symbol");
  gen_cmd->add_option("--frames-max", gen.spec.frames_per_symbol_max, "max frames per symbol");
  gen_cmd->add_option("--labels-min", gen.spec.labels_min, "min labels per utterance");
  gen_cmd->add_option("--labels-max", gen.spec.labels_max, "max labels per utterance");
  gen_cmd->add_option("--noise", gen.spec.noise_sigma, "feature noise sigma");
  gen_cmd->add_option("--count", gen.spec.utterance_count, "number of utterances");
  gen_cmd->add_option("--seed", gen.spec.seed, "generator seed");

  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand("train", "train a transducer on a dataset");
  train_cmd->add_option("--config", train.config_path, "run config JSON")->required();
  train_cmd->add_option("--data", train.data_override, "dataset path (overrides config)");
  train_cmd->add_option("--out", train.out_override, "output directory (overrides config)");
  train_cmd->add_option("--seed", train.seed_override, "seed (overrides config)");
  train_cmd->add_option("--epochs", train.epochs_override, "epochs (overrides config)");
  train_cmd->add_option("--batch", train.batch_override, "batch size (overrides config)");
  train_cmd->add_flag("--f32", train.f32, "run in 32-bit mode");

  DecodeArgs dec;
  CLI::App* dec_cmd = app.add_subcommand("decode", "decode a dataset with a checkpoint");
  dec_cmd->add_option("--checkpoint", dec.checkpoint, "checkpoint path")->required();
  dec_cmd->add_option("--data", dec.data, "dataset path")->required();
  dec_cmd->add_option("--out", dec.out, "hypothesis JSONL path")->required();
  dec_cmd->add_option("--mode", dec.mode, "greedy or beam");
  dec_cmd->add_option("--width", dec.width, "beam width");
  dec_cmd->add_flag("--f32", dec.f32, "run in 32-bit mode");

  ProfileArgs prof;
  CLI::App* prof_cmd =
      app.add_subcommand("profile", "parameter/multiplication counts and decode timing");
  prof_cmd->add_option("--config", prof.config_path, "run config JSON");
  prof_cmd->add_flag("--reference", prof.reference,
                     "use the full-scale reference configurations");
  prof_cmd->add_option("--lengths", prof.lengths, "utterance lengths to time")
      ->delimiter(',');
  prof_cmd->add_option("--repeats", prof.repeats, "timing repetitions per length");
  prof_cmd->add_option("--seed", prof.seed, "feature/model seed");
  prof_cmd->add_option("--out", prof.out_dir, "output directory");

  ProfileArgs count;
  count.counts_only = true;
  CLI::App* count_cmd = app.add_subcommand("count", "parameter/multiplication counts only");
  count_cmd->add_option("--config", count.config_path, "run config JSON");
  count_cmd->add_flag("--reference", count.reference,
                      "use the full-scale reference configurations");
  count_cmd->add_option("--out", count.out_dir, "output directory");

  double tol = 1e-4;
  uint64_t gc_seed = 1;
  CLI::App* gc_cmd = app.add_subcommand("gradcheck", "finite-difference verification");
  gc_cmd->add_option("--tol", tol, "relative-error tolerance");
  gc_cmd->add_option("--seed", gc_seed, "randomisation seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen_cmd->parsed()) return cmd_gen_data(gen);
    if (train_cmd->parsed()) return cmd_train(train);
    if (dec_cmd->parsed()) return cmd_decode(dec);
    if (prof_cmd->parsed()) return cmd_profile(prof);
    if (count_cmd->parsed()) return cmd_profile(count);
    if (gc_cmd->parsed()) return cmd_gradcheck(tol, gc_seed);
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const VerificationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitVerification;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
