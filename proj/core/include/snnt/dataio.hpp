// Copyright (c) 2026 the snnt authors. Apache-2.0 license.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snnt/tensor.hpp"

namespace snnt {

struct Utterance {
  std::string id;
  Tensor features;          // T x F
  std::vector<int> labels;  // in [0, vocab)

  int frames() const { return features.dim(0); }
  int feature_dim() const { return features.dim(1); }
};

using Dataset = std::vector<Utterance>;

// Synthetic transduction task: every label emits its prototype vector for a
// random number of frames plus Gaussian noise. Deterministic per seed.
struct ToyTaskSpec {
  int vocab = 8;
  int feature_dim = 16;
  int frames_per_symbol_min = 2;
  int frames_per_symbol_max = 5;
  int labels_min = 3;
  int labels_max = 8;
  double noise_sigma = 0.1;
  int utterance_count = 500;
  uint64_t seed = 42;

  void validate() const;
};

Dataset generate_toy_dataset(const ToyTaskSpec& spec);

// The prototype matrix (vocab x F) the generator derives from the seed.
Tensor toy_prototypes(const ToyTaskSpec& spec);

// T x F -> T x 3F: appends first and second time derivatives. Interior rows
// use central differences; boundary rows copy the nearest computed row.
Tensor add_deltas(const Tensor& features);

// T x F -> ceil(T/2) x 2F: concatenates frame pairs (2i, 2i+1); an odd tail
// duplicates the final frame.
Tensor stack_frames(const Tensor& features);

// Line-delimited JSON records: {"id", "shape", "features", "labels"}.
void write_dataset_jsonl(const Dataset& dataset, const std::string& path);
Dataset read_dataset_jsonl(const std::string& path);

}  // namespace snnt
