// Copyright (c) 2026 the snnt authors. Apache-2.0 license.
#include "snnt/verification.hpp"

#include <random>

#include "snnt/cells.hpp"
#include "snnt/errors.hpp"
#include "snnt/transducer.hpp"

namespace snnt {

bool VerificationSuite::all_passed() const {
  for (const auto& check : checks) {
    if (!check.report.pass) return false;
  }
  return true;
}

const VerificationCheck* VerificationSuite::first_failure() const {
  for (const auto& check : checks) {
    if (!check.report.pass) return &check;
  }
  return nullptr;
}

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0,
                     double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.size(); ++i) t[i] = dist(rng);
  return t;
}

constexpr double kFdStep = 1e-5;

}  // namespace

FdReport check_op_gradient(OpKind op, uint64_t seed, double tol) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dim(1, 8);
  const int n = dim(rng);
  const int m = dim(rng);

  ParamMap params;
  OpAttr attr;
  switch (op) {
    case OpKind::kMatVec:
      params.emplace("a", random_tensor({n, m}, rng));
      params.emplace("b", random_tensor({m}, rng));
      break;
    case OpKind::kConcat:
      params.emplace("a", random_tensor({n}, rng));
      params.emplace("b", random_tensor({m}, rng));
      break;
    case OpKind::kEmbedRow:
      params.emplace("a", random_tensor({n, m}, rng));
      attr.index = std::uniform_int_distribution<int>(0, n - 1)(rng);
      break;
    case OpKind::kPick:
      params.emplace("a", random_tensor({n}, rng));
      attr.index = std::uniform_int_distribution<int>(0, n - 1)(rng);
      break;
    case OpKind::kScale:
      params.emplace("a", random_tensor({n}, rng));
      attr.scalar = std::uniform_real_distribution<double>(-2.0, 2.0)(rng);
      break;
    case OpKind::kAdd:
    case OpKind::kSub:
    case OpKind::kMul:
    case OpKind::kLogAddExp:
      params.emplace("a", random_tensor({n}, rng));
      params.emplace("b", random_tensor({n}, rng));
      break;
    case OpKind::kSigmoid:
    case OpKind::kTanh:
    case OpKind::kIdentity:
    case OpKind::kLogSoftmax:
    case OpKind::kSum:
      params.emplace("a", random_tensor({n}, rng));
      break;
    default:
      throw ConfigError(std::string("no gradient check for op '") + op_name(op) + "'");
  }

  // Fold the op output through a fixed random weighting so the scalar root
  // exercises every output coordinate.
  int out_len = n;
  switch (op) {
    case OpKind::kConcat: out_len = n + m; break;
    case OpKind::kMatVec: out_len = n; break;
    case OpKind::kEmbedRow: out_len = m; break;
    case OpKind::kPick:
    case OpKind::kSum: out_len = 1; break;
    default: break;
  }
  const Tensor probe_src = random_tensor({out_len}, rng, 0.5, 1.5);

  auto build = [op, attr, &probe_src](Graph& g, const ParamMap& p) -> Value {
    std::vector<Value> operands;
    operands.push_back(g.param("a", p.at("a")));
    if (p.count("b")) operands.push_back(g.param("b", p.at("b")));
    Value out = g.apply(op, operands, attr);
    Tensor probe = probe_src;
    if (out.tensor().rank() == 0) {
      return mul(out, g.constant(Tensor::scalar(probe[0])));
    }
    return sum(mul(out, g.constant(std::move(probe))));
  };
  return check_gradients(build, params, kFdStep, tol);
}

FdReport check_cell_gradient(const CellConfig& config, int steps, uint64_t seed,
                             double tol) {
  config.validate();
  std::mt19937_64 rng(seed);
  CellParams cell = CellParams::init(config, rng);
  // Random nonzero biases make the check exercise every term.
  for (auto& [name, tensor] : cell.tensors) {
    if (tensor.rank() == 1 && name != "rho") {
      tensor = random_tensor(tensor.shape(), rng, -0.5, 0.5);
    }
  }

  ParamMap params(cell.tensors.begin(), cell.tensors.end());
  std::vector<Tensor> inputs;
  for (int t = 0; t < steps; ++t) {
    inputs.push_back(random_tensor({config.input_size}, rng));
  }

  auto build = [&config, &inputs](Graph& g, const ParamMap& p) -> Value {
    CellParams bound_params;
    bound_params.config = config;
    bound_params.tensors = std::map<std::string, Tensor>(p.begin(), p.end());
    BoundCell cell = bind_cell(g, bound_params, "cell");
    std::vector<Value> xs;
    xs.reserve(inputs.size());
    for (const Tensor& x : inputs) xs.push_back(g.constant(x));
    std::vector<Value> ys = run_layer(g, cell, xs);
    Value total = sum(ys[0]);
    for (size_t t = 1; t < ys.size(); ++t) total = add(total, sum(ys[t]));
    return total;
  };

  // bind_cell registers leaves as "cell.<name>"; align the reference map.
  ParamMap prefixed;
  for (const auto& [name, tensor] : params) prefixed.emplace("cell." + name, tensor);
  auto build_prefixed = [&](Graph& g, const ParamMap& p) -> Value {
    ParamMap stripped;
    for (const auto& [name, tensor] : p) stripped.emplace(name.substr(5), tensor);
    return build(g, stripped);
  };
  return check_gradients(build_prefixed, prefixed, kFdStep, tol);
}

FdReport check_transducer_gradient(uint64_t seed, double tol) {
  TransducerConfig cfg = make_transducer_config("sSNU-o R", 2, 4, "sSNU-a R", 4,
                                                /*input_dim=*/3, /*vocab=*/3,
                                                /*embedding_dim=*/3, /*joint_dim=*/4);
  TransducerModel model = TransducerModel::init(cfg, seed);

  std::mt19937_64 rng(seed ^ 0xabcdef12345ull);
  const Tensor features = random_tensor({3, 3}, rng);  // T = 3
  const std::vector<int> targets = {1, 2};             // U = 2

  ParamMap params;
  {
    NamedTensors named = model.named_tensors();
    params = ParamMap(named.begin(), named.end());
  }

  auto build = [&](Graph& g, const ParamMap& p) -> Value {
    TransducerModel local = model;
    local.load_named_tensors(NamedTensors(p.begin(), p.end()));
    BoundModel bound = bind_model(g, local);
    std::vector<Value> frames = encode(g, bound, features);
    std::vector<Value> prediction;
    auto [h, state] = predict_start(g, bound);
    prediction.push_back(h);
    for (int label : targets) {
      auto [hh, next] = predict_step(g, bound, state, label);
      prediction.push_back(hh);
      state = next;
    }
    AlignmentLattice lattice = build_lattice(g, bound, frames, prediction);
    return rnnt_loss(g, lattice, targets);
  };
  return check_gradients(build, params, kFdStep, tol);
}

VerificationSuite run_verification_suite(double tol, uint64_t seed) {
  if (tol <= 0.0) throw ConfigError("gradcheck tolerance must be > 0");
  VerificationSuite suite;

  for (OpKind op : all_op_kinds()) {
    suite.checks.push_back(
        {std::string("op ") + op_name(op), check_op_gradient(op, seed, tol)});
  }

  const char* variants[] = {"sSNU",   "sSNU R",   "sSNU-a", "sSNU-a R",
                            "sSNU-a Ra", "sSNU-o", "sSNU-o R", "LSTM"};
  for (const char* name : variants) {
    CellConfig cfg = cell_config_from_name(name);
    cfg.input_size = 5;
    cfg.units = 5;
    suite.checks.push_back({std::string("cell ") + name,
                            check_cell_gradient(cfg, /*steps=*/4, seed, tol)});
  }

  suite.checks.push_back({"transducer end-to-end", check_transducer_gradient(seed, tol)});
  return suite;
}

}  // namespace snnt
