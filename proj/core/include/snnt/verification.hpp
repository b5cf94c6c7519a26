// Copyright (c) 2026 the snnt authors. Apache-2.0 license.
#pragma once

#include <string>
#include <vector>

#include "snnt/cells.hpp"
#include "snnt/gradcheck.hpp"

namespace snnt {

struct VerificationCheck {
  std::string name;
  FdReport report;
};

struct VerificationSuite {
  std::vector<VerificationCheck> checks;
  bool all_passed() const;
  const VerificationCheck* first_failure() const;
};

// Gradient check for one op kind on random operands (shapes up to 8x8).
FdReport check_op_gradient(OpKind op, uint64_t seed, double tol);

// BPTT gradient check for one cell variant: `steps` unrolled transitions,
// loss = sum of all outputs.
FdReport check_cell_gradient(const CellConfig& config, int steps, uint64_t seed,
                             double tol);

// End-to-end check through a tiny transducer (features -> encoder -> joint
// -> alignment loss).
FdReport check_transducer_gradient(uint64_t seed, double tol);

// Everything cmd_gradcheck runs: every applicable op kind, every variant row
// (unrolled over four steps at n=m=5), and the tiny end-to-end model.
VerificationSuite run_verification_suite(double tol, uint64_t seed);

}  // namespace snnt
