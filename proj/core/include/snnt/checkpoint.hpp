// Copyright (c) 2026 the snnt authors. Apache-2.0 license.
#pragma once

#include <map>
#include <string>

#include "snnt/tensor.hpp"

namespace snnt {

using NamedTensors = std::map<std::string, Tensor>;

// Single binary container: a text header describing each tensor (name,
// element type, shape, payload offset) and one meta line, followed by
// row-major little-endian float64 payloads. Round-trips bit exactly.
void write_checkpoint(const std::string& path, const NamedTensors& tensors,
                      const std::string& meta_json);

struct Checkpoint {
  NamedTensors tensors;
  std::string meta_json;
};

Checkpoint read_checkpoint(const std::string& path);

}  // namespace snnt
