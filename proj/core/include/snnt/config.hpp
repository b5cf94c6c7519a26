// Copyright (c) 2026 the snnt authors. Apache-2.0 license.
#pragma once

#include <cstdint>
#include <string>

#include "snnt/training.hpp"
#include "snnt/transducer.hpp"

namespace snnt {

struct DecodeOptions {
  std::string mode = "greedy";  // greedy | beam
  int width = 16;
};

struct PathsConfig {
  std::string data;
  std::string out;
  std::string checkpoint;
};

// One structured config file drives every command; command-line flags
// override individual keys. Unknown keys are rejected.
struct RunConfig {
  TransducerConfig model;
  TrainOptions training;
  DecodeOptions decode;
  PathsConfig paths;
  Precision precision = Precision::f64;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

// Canonical serialisation (sorted keys) of the effective configuration.
std::string run_config_json(const RunConfig& config);

uint64_t fnv1a64(std::string_view bytes);
std::string config_hash_hex(const RunConfig& config);

// Model-only (de)serialisation, used for checkpoint metadata.
std::string transducer_config_json(const TransducerConfig& config);
TransducerConfig parse_transducer_config(const std::string& json_text);

}  // namespace snnt
