// Copyright (c) 2026 the snnt authors. Apache-2.0 license.
#pragma once

#include <cstdint>
#include <vector>

#include "snnt/transducer.hpp"

namespace snnt {

struct DecodeResult {
  std::vector<int> labels;     // blank-free transcript
  std::vector<int> alignment;  // greedy only: every emitted symbol incl. blanks
  double log_prob = 0.0;
  bool truncated = false;      // hit the emission cap
};

// Argmax decoding: blank advances the frame, a label extends the transcript
// and steps the prediction network. Emissions are capped at 10*T; hitting
// the cap truncates and is reported.
DecodeResult greedy_decode(const TransducerModel& model, const Tensor& features,
                           int64_t max_emissions = -1);

// Breadth-limited search over blank-free hypotheses. Duplicate label
// sequences are merged by logsumexp; candidate ranking breaks log-prob ties
// by lower label index, then by shorter sequence. Width 1 reproduces greedy;
// a width at least the number of reachable hypotheses is exhaustive.
DecodeResult beam_decode(const TransducerModel& model, const Tensor& features,
                         int width, int64_t max_emissions = -1);

int edit_distance(const std::vector<int>& a, const std::vector<int>& b);

// Sum of edit distances over the corpus divided by total reference length.
double token_error_rate(const std::vector<std::vector<int>>& hyps,
                        const std::vector<std::vector<int>>& refs);

}  // namespace snnt
