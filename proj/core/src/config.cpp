// Copyright (c) 2026 the snnt authors. Apache-2.0 license.
#include "snnt/config.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "snnt/errors.hpp"

namespace snnt {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
void read_into(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

CellConfig parse_cell(const json& obj, const std::string& where) {
  reject_unknown_keys(obj,
                      {"variant", "units", "layers", "membrane_decay",
                       "threshold_decay", "threshold_scale"},
                      where);
  if (!obj.contains("variant")) throw ConfigError(where + " needs a 'variant'");
  CellConfig cell = cell_config_from_name(obj.at("variant").get<std::string>());
  read_into(obj, "units", cell.units);
  read_into(obj, "membrane_decay", cell.membrane_decay);
  read_into(obj, "threshold_decay", cell.threshold_decay);
  read_into(obj, "threshold_scale", cell.threshold_scale);
  return cell;
}

json cell_to_json(const CellConfig& cell, bool with_layers, int layers) {
  json obj;
  obj["variant"] = cell.variant_name();
  obj["units"] = cell.units;
  if (with_layers) obj["layers"] = layers;
  obj["membrane_decay"] = cell.membrane_decay;
  obj["threshold_decay"] = cell.threshold_decay;
  obj["threshold_scale"] = cell.threshold_scale;
  return obj;
}

TransducerConfig parse_model(const json& obj) {
  reject_unknown_keys(obj,
                      {"input_dim", "encoder", "prediction", "embedding_dim",
                       "vocab", "joint_dim"},
                      "model");
  TransducerConfig model;
  read_into(obj, "input_dim", model.input_dim);
  read_into(obj, "embedding_dim", model.embedding_dim);
  read_into(obj, "vocab", model.vocab);
  read_into(obj, "joint_dim", model.joint_dim);
  if (!obj.contains("encoder")) throw ConfigError("model needs an 'encoder' section");
  if (!obj.contains("prediction")) throw ConfigError("model needs a 'prediction' section");

  const json& enc = obj.at("encoder");
  if (enc.is_array()) {
    for (const json& item : enc) {
      model.encoder_layers.push_back(parse_cell(item, "model.encoder[]"));
    }
    if (model.encoder_layers.empty()) throw ConfigError("encoder array is empty");
  } else {
    int layers = 1;
    read_into(enc, "layers", layers);
    if (layers < 1) throw ConfigError("encoder needs layers >= 1");
    CellConfig enc_cell = parse_cell(enc, "model.encoder");
    model.encoder_layers.assign(static_cast<size_t>(layers), enc_cell);
  }

  model.prediction = parse_cell(obj.at("prediction"), "model.prediction");
  model.validate_and_wire();
  return model;
}

bool same_layer(const CellConfig& a, const CellConfig& b) {
  return a.variant == b.variant && a.recurrent == b.recurrent &&
         a.axo_somatic_recurrent == b.axo_somatic_recurrent && a.units == b.units &&
         a.membrane_decay == b.membrane_decay &&
         a.threshold_decay == b.threshold_decay &&
         a.threshold_scale == b.threshold_scale;
}

json model_to_json(const TransducerConfig& model) {
  json obj;
  obj["input_dim"] = model.input_dim;
  const bool uniform =
      std::all_of(model.encoder_layers.begin(), model.encoder_layers.end(),
                  [&](const CellConfig& c) {
                    return same_layer(c, model.encoder_layers.front());
                  });
  if (uniform) {
    obj["encoder"] = cell_to_json(model.encoder_layers.front(), true,
                                  static_cast<int>(model.encoder_layers.size()));
  } else {
    json layers = json::array();
    for (const CellConfig& layer : model.encoder_layers) {
      layers.push_back(cell_to_json(layer, false, 0));
    }
    obj["encoder"] = layers;
  }
  obj["prediction"] = cell_to_json(model.prediction, false, 0);
  obj["embedding_dim"] = model.embedding_dim;
  obj["vocab"] = model.vocab;
  obj["joint_dim"] = model.joint_dim;
  return obj;
}

TrainOptions parse_training(const json& obj) {
  reject_unknown_keys(obj,
                      {"epochs", "batch_size", "peak_rate", "warmup_epochs",
                       "init_div", "min_div", "clip", "clip_unconditional",
                       "input_dropout", "embedding_dropout", "weight_decay", "seed"},
                      "training");
  TrainOptions t;
  read_into(obj, "epochs", t.epochs);
  read_into(obj, "batch_size", t.batch_size);
  read_into(obj, "peak_rate", t.peak_rate);
  read_into(obj, "warmup_epochs", t.warmup_epochs);
  read_into(obj, "init_div", t.init_div);
  read_into(obj, "min_div", t.min_div);
  read_into(obj, "clip", t.clip_threshold);
  read_into(obj, "clip_unconditional", t.clip_unconditional);
  read_into(obj, "input_dropout", t.input_dropout);
  read_into(obj, "embedding_dropout", t.embedding_dropout);
  read_into(obj, "weight_decay", t.weight_decay);
  read_into(obj, "seed", t.seed);
  return t;
}

json training_to_json(const TrainOptions& t) {
  json obj;
  obj["epochs"] = t.epochs;
  obj["batch_size"] = t.batch_size;
  obj["peak_rate"] = t.peak_rate;
  obj["warmup_epochs"] = t.warmup_epochs;
  obj["init_div"] = t.init_div;
  obj["min_div"] = t.min_div;
  obj["clip"] = t.clip_threshold;
  obj["clip_unconditional"] = t.clip_unconditional;
  obj["input_dropout"] = t.input_dropout;
  obj["embedding_dropout"] = t.embedding_dropout;
  obj["weight_decay"] = t.weight_decay;
  obj["seed"] = t.seed;
  return obj;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown_keys(root, {"model", "training", "decode", "paths", "precision"},
                      "config");
  if (!root.contains("model")) throw ConfigError("config needs a 'model' section");

  RunConfig cfg;
  cfg.model = parse_model(root.at("model"));
  if (root.contains("training")) cfg.training = parse_training(root.at("training"));
  if (root.contains("decode")) {
    const json& d = root.at("decode");
    reject_unknown_keys(d, {"mode", "width"}, "decode");
    read_into(d, "mode", cfg.decode.mode);
    read_into(d, "width", cfg.decode.width);
    if (cfg.decode.mode != "greedy" && cfg.decode.mode != "beam") {
      throw ConfigError("decode mode must be 'greedy' or 'beam'");
    }
    if (cfg.decode.width < 1) throw ConfigError("beam width must be >= 1");
  }
  if (root.contains("paths")) {
    const json& p = root.at("paths");
    reject_unknown_keys(p, {"data", "out", "checkpoint"}, "paths");
    read_into(p, "data", cfg.paths.data);
    read_into(p, "out", cfg.paths.out);
    read_into(p, "checkpoint", cfg.paths.checkpoint);
  }
  if (root.contains("precision")) {
    const std::string p = root.at("precision").get<std::string>();
    if (p == "f64") cfg.precision = Precision::f64;
    else if (p == "f32") cfg.precision = Precision::f32;
    else throw ConfigError("precision must be 'f64' or 'f32'");
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_run_config(buf.str());
}

std::string run_config_json(const RunConfig& config) {
  json root;
  root["model"] = model_to_json(config.model);
  root["training"] = training_to_json(config.training);
  root["decode"] = {{"mode", config.decode.mode}, {"width", config.decode.width}};
  root["paths"] = {{"data", config.paths.data},
                   {"out", config.paths.out},
                   {"checkpoint", config.paths.checkpoint}};
  root["precision"] = config.precision == Precision::f32 ? "f32" : "f64";
  return root.dump();
}

uint64_t fnv1a64(std::string_view bytes) {
  uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  return hash;
}

std::string config_hash_hex(const RunConfig& config) {
  const uint64_t h = fnv1a64(run_config_json(config));
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

std::string transducer_config_json(const TransducerConfig& config) {
  return model_to_json(config).dump();
}

TransducerConfig parse_transducer_config(const std::string& json_text) {
  json obj;
  try {
    obj = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("model config is not valid JSON: ") + e.what());
  }
  return parse_model(obj);
}

}  // namespace snnt
