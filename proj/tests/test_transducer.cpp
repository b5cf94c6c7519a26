#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "snnt/decode.hpp"
#include "snnt/errors.hpp"
#include "snnt/gradcheck.hpp"
#include "snnt/transducer.hpp"
#include "snnt/verification.hpp"
#include "test_util.hpp"

using namespace snnt;

namespace {

// Brute-force oracle: walks every monotone alignment path explicitly,
// multiplying probabilities in the linear domain, independent of the
// forward recursion under test.
struct PathEnumerator {
  int T, U, vocab;
  const std::vector<double>* grid;
  const std::vector<int>* targets;

  double lp(int t, int u, int sym) const {
    return (*grid)[(static_cast<size_t>(t) * (U + 1) + u) * (vocab + 1) + sym];
  }

  double total = 0.0;
  void walk(int t, int u, double prob) {
    if (t == T - 1 && u == U) {
      total += prob * std::exp(lp(t, u, vocab));
      return;
    }
    if (t + 1 < T) walk(t + 1, u, prob * std::exp(lp(t, u, vocab)));
    if (u < U) walk(t, u + 1, prob * std::exp(lp(t, u, (*targets)[static_cast<size_t>(u)])));
  }

  double neg_log_likelihood() {
    total = 0.0;
    walk(0, 0, 1.0);
    return -std::log(total);
  }
};

std::vector<double> random_lattice_grid(int T, int U, int vocab, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> logits(-2.0, 2.0);
  std::vector<double> grid(static_cast<size_t>(T) * (U + 1) * (vocab + 1));
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u <= U; ++u) {
      double* row = grid.data() + (static_cast<size_t>(t) * (U + 1) + u) * (vocab + 1);
      double hi = -1e300;
      for (int v = 0; v <= vocab; ++v) {
        row[v] = logits(rng);
        hi = std::max(hi, row[v]);
      }
      double acc = 0.0;
      for (int v = 0; v <= vocab; ++v) acc += std::exp(row[v] - hi);
      const double lse = hi + std::log(acc);
      for (int v = 0; v <= vocab; ++v) row[v] -= lse;
    }
  }
  return grid;
}

TransducerConfig tiny_config(const std::string& enc = "sSNU R",
                             const std::string& pred = "sSNU R") {
  return make_transducer_config(enc, 1, 3, pred, 3, /*input_dim=*/2, /*vocab=*/2,
                                /*embedding_dim=*/2, /*joint_dim=*/3);
}

double row_entry(const TransducerModel& model, Graph& g, const BoundModel& bound,
                 Value h_enc, Value h_pred, int idx) {
  (void)model;
  return pick(joint(g, bound, h_enc, h_pred), idx).scalar();
}

}  // namespace

TEST_CASE("zero-weight single-layer encoder maps every frame to one half") {
  TransducerConfig cfg = make_transducer_config("sSNU", 1, 2, "sSNU", 2, 3, 2, 2, 2);
  TransducerModel model = TransducerModel::init(cfg, 1);
  for (auto& cell : model.encoder) {
    for (int dir = 0; dir < 2; ++dir) {
      for (auto& [name, tensor] : cell[static_cast<size_t>(dir)].tensors) {
        for (int64_t i = 0; i < tensor.size(); ++i) tensor[i] = 0.0;
      }
    }
  }
  Graph g;
  BoundModel bound = bind_model(g, model);
  std::mt19937_64 rng(2);
  std::vector<Value> out = encode(g, bound, test::random_tensor({3, 3}, rng));
  REQUIRE(out.size() == 3);
  for (const Value& frame : out) {
    REQUIRE(frame.tensor().shape() == Shape{4});
    for (int i = 0; i < 4; ++i) CHECK(frame.tensor()[i] == 0.5);
  }
}

TEST_CASE("encoder output width is twice the top layer regardless of length") {
  TransducerConfig cfg = make_transducer_config("sSNU-o R", 2, 3, "sSNU", 3, 2, 2, 2, 3);
  TransducerModel model = TransducerModel::init(cfg, 7);
  std::mt19937_64 rng(3);
  for (int T : {1, 2, 5}) {
    Graph g;
    BoundModel bound = bind_model(g, model);
    std::vector<Value> out = encode(g, bound, test::random_tensor({T, 2}, rng));
    CHECK(static_cast<int>(out.size()) == T);
    for (const Value& frame : out) CHECK(frame.tensor().shape() == Shape{6});
  }
  Graph g;
  BoundModel bound = bind_model(g, model);
  CHECK_THROWS_AS(encode(g, bound, test::random_tensor({2, 5}, rng)), ShapeError);
}

TEST_CASE("prediction start is deterministic and labels separate states") {
  TransducerModel model = TransducerModel::init(tiny_config(), 11);
  Graph g;
  BoundModel bound = bind_model(g, model);
  auto [h1, s1] = predict_start(g, bound);
  Graph g2;
  BoundModel bound2 = bind_model(g2, model);
  auto [h2, s2] = predict_start(g2, bound2);
  CHECK(h1.tensor() == h2.tensor());

  auto [ha, sa] = predict_step(g, bound, s1, 0);
  auto [hb, sb] = predict_step(g, bound, s1, 1);
  CHECK(ha.tensor().values() != hb.tensor().values());

  CHECK_THROWS_AS(predict_step(g, bound, s1, 2), ConfigError);   // vocab = 2
  CHECK_THROWS_AS(predict_step(g, bound, s1, -1), ConfigError);
}

TEST_CASE("embedding plus cell gradient check") {
  TransducerModel model = TransducerModel::init(tiny_config(), 13);
  ParamMap params;
  {
    NamedTensors named = model.named_tensors();
    params = ParamMap(named.begin(), named.end());
  }
  auto build = [&](Graph& g, const ParamMap& p) -> Value {
    TransducerModel local = model;
    local.load_named_tensors(NamedTensors(p.begin(), p.end()));
    BoundModel bound = bind_model(g, local);
    auto [h0, s0] = predict_start(g, bound);
    auto [h1, s1] = predict_step(g, bound, s0, 1);
    auto [h2, s2] = predict_step(g, bound, s1, 0);
    return add(sum(h1), sum(h2));
  };
  FdReport report = check_gradients(build, params, 1e-5, 1e-6);
  INFO(report.summary());
  CHECK(report.pass);
}

TEST_CASE("joint rows are normalised distributions") {
  TransducerModel model = TransducerModel::init(tiny_config(), 17);
  std::mt19937_64 rng(18);
  Graph g;
  BoundModel bound = bind_model(g, model);
  Value h_enc = g.constant(test::random_tensor({6}, rng));
  Value h_pred = g.constant(test::random_tensor({3}, rng));
  Value row = joint(g, bound, h_enc, h_pred);
  double mass = 0.0;
  for (int i = 0; i < 3; ++i) mass += std::exp(row.tensor()[i]);
  CHECK(std::abs(mass - 1.0) <= 1e-12);
}

TEST_CASE("zero output weights give the uniform row") {
  TransducerModel model = TransducerModel::init(tiny_config(), 19);
  for (int64_t i = 0; i < model.out_weight.size(); ++i) model.out_weight[i] = 0.0;
  for (int64_t i = 0; i < model.out_bias.size(); ++i) model.out_bias[i] = 0.0;
  std::mt19937_64 rng(20);
  Graph g;
  BoundModel bound = bind_model(g, model);
  Value row = joint(g, bound, g.constant(test::random_tensor({6}, rng)),
                    g.constant(test::random_tensor({3}, rng)));
  const double expected = -std::log(3.0);  // vocab + blank = 3 symbols
  for (int i = 0; i < 3; ++i) {
    CHECK(row.tensor()[i] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("joint is equivariant under simultaneous output permutation") {
  TransducerModel model = TransducerModel::init(tiny_config(), 23);
  std::mt19937_64 rng(24);
  const Tensor h_enc = test::random_tensor({6}, rng);
  const Tensor h_pred = test::random_tensor({3}, rng);

  const int perm[3] = {2, 0, 1};
  TransducerModel permuted = model;
  for (int r = 0; r < 3; ++r) {
    permuted.out_bias[perm[r]] = model.out_bias[r];
    for (int c = 0; c < model.out_weight.dim(1); ++c) {
      permuted.out_weight.at(perm[r], c) = model.out_weight.at(r, c);
    }
  }

  Graph g1, g2;
  BoundModel b1 = bind_model(g1, model);
  BoundModel b2 = bind_model(g2, permuted);
  Value row1 = joint(g1, b1, g1.constant(h_enc), g1.constant(h_pred));
  Value row2 = joint(g2, b2, g2.constant(h_enc), g2.constant(h_pred));
  for (int r = 0; r < 3; ++r) {
    CHECK(row1.tensor()[r] == doctest::Approx(row2.tensor()[perm[r]]).epsilon(1e-14));
  }
}

TEST_CASE("lattice rows equal pairwise joint calls bit for bit") {
  TransducerModel model = TransducerModel::init(tiny_config(), 29);
  std::mt19937_64 rng(30);
  Graph g;
  BoundModel bound = bind_model(g, model);
  std::vector<Value> frames = encode(g, bound, test::random_tensor({3, 2}, rng));
  std::vector<Value> prediction;
  auto [h, s] = predict_start(g, bound);
  prediction.push_back(h);
  auto [h1, s1] = predict_step(g, bound, s, 1);
  prediction.push_back(h1);

  AlignmentLattice lattice = build_lattice(g, bound, frames, prediction);
  validate_lattice(lattice);
  for (int t = 0; t < 3; ++t) {
    for (int u = 0; u <= 1; ++u) {
      Value direct = joint(g, bound, frames[static_cast<size_t>(t)],
                           prediction[static_cast<size_t>(u)]);
      CHECK(lattice.at(t, u).tensor() == direct.tensor());
    }
  }
}

TEST_CASE("single-frame empty-target loss is the blank log-probability") {
  Graph g;
  std::vector<double> grid = {std::log(0.25), std::log(0.35), std::log(0.40)};
  AlignmentLattice lattice = lattice_from_values(g, 1, 0, 2, grid);
  Value loss = rnnt_loss(g, lattice, {});
  CHECK(loss.scalar() == doctest::Approx(-std::log(0.40)).epsilon(1e-14));
}

TEST_CASE("two-path uniform lattice gives log 4") {
  Graph g;
  // T=2, U=1, vocab=1: every row is (0.5, 0.5).
  std::vector<double> grid(2 * 2 * 2, std::log(0.5));
  AlignmentLattice lattice = lattice_from_values(g, 2, 1, 1, grid);
  Value loss = rnnt_loss(g, lattice, {0});
  CHECK(loss.scalar() == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  CHECK(loss.scalar() == doctest::Approx(1.3862943611198906).epsilon(1e-12));
}

TEST_CASE("forward recursion equals brute-force path enumeration") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> t_dist(1, 4), u_dist(0, 3), v_dist(1, 3);
  for (int trial = 0; trial < 60; ++trial) {
    const int T = t_dist(rng);
    const int U = u_dist(rng);
    const int vocab = v_dist(rng);
    std::vector<double> grid = random_lattice_grid(T, U, vocab, rng);
    std::vector<int> targets;
    std::uniform_int_distribution<int> lab(0, vocab - 1);
    for (int u = 0; u < U; ++u) targets.push_back(lab(rng));

    Graph g;
    AlignmentLattice lattice = lattice_from_values(g, T, U, vocab, grid);
    const double loss = rnnt_loss(g, lattice, targets).scalar();

    PathEnumerator oracle{T, U, vocab, &grid, &targets};
    const double expected = oracle.neg_log_likelihood();
    CHECK(std::abs(loss - expected) <=
          1e-10 * std::max({1.0, std::abs(loss), std::abs(expected)}));
  }
}

TEST_CASE("loss is non-negative and anti-diagonal cuts agree") {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 20; ++trial) {
    const int T = 3, U = 2, vocab = 2;
    std::vector<double> grid = random_lattice_grid(T, U, vocab, rng);
    std::vector<int> targets = {1, 0};
    Graph g;
    AlignmentLattice lattice = lattice_from_values(g, T, U, vocab, grid);
    CHECK(rnnt_loss(g, lattice, targets).scalar() >= 0.0);
    CHECK(alignment_cut_gap(T, U, vocab, grid, targets) <= 1e-9);
  }
}

TEST_CASE("loss gradient w.r.t. lattice log-probabilities") {
  std::mt19937_64 rng(41);
  const int T = 3, U = 2, vocab = 2;
  std::vector<double> grid = random_lattice_grid(T, U, vocab, rng);
  const std::vector<int> targets = {0, 1};

  ParamMap params;
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u <= U; ++u) {
      Tensor row({vocab + 1});
      for (int v = 0; v <= vocab; ++v) {
        row[v] = grid[(static_cast<size_t>(t) * (U + 1) + u) * (vocab + 1) + v];
      }
      params.emplace("row." + std::to_string(t) + "." + std::to_string(u), row);
    }
  }
  auto build = [&](Graph& g, const ParamMap& p) -> Value {
    AlignmentLattice lattice;
    lattice.frames = T;
    lattice.target_len = U;
    lattice.vocab = vocab;
    for (int t = 0; t < T; ++t) {
      for (int u = 0; u <= U; ++u) {
        lattice.rows.push_back(
            g.param("row." + std::to_string(t) + "." + std::to_string(u),
                    p.at("row." + std::to_string(t) + "." + std::to_string(u))));
      }
    }
    return rnnt_loss(g, lattice, targets);
  };
  FdReport report = check_gradients(build, params, 1e-6, 1e-6);
  INFO(report.summary());
  CHECK(report.pass);

  // On-path entries carry non-positive gradients: raising the probability of
  // a transition the target alignment uses can only lower the loss.
  Graph g;
  Value root = build(g, params);
  GradientMap grads = g.backward(root);
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u <= U; ++u) {
      const Tensor& grow =
          grads.at("row." + std::to_string(t) + "." + std::to_string(u));
      CHECK(grow[vocab] <= 0.0);  // blank is on some alignment path everywhere
      if (u < U) CHECK(grow[targets[static_cast<size_t>(u)]] <= 0.0);
    }
  }
}

TEST_CASE("end-to-end gradient through encoder, joint and loss") {
  FdReport report = check_transducer_gradient(/*seed=*/5, /*tol=*/1e-4);
  INFO(report.summary());
  CHECK(report.pass);
}

TEST_CASE("rnnt_loss rejects bad targets and malformed rows") {
  Graph g;
  std::vector<double> grid(2 * 2 * 2, std::log(0.5));
  AlignmentLattice lattice = lattice_from_values(g, 2, 1, 1, grid);
  CHECK_THROWS_AS(rnnt_loss(g, lattice, {5}), ConfigError);
  CHECK_THROWS_AS(rnnt_loss(g, lattice, {0, 0}), ShapeError);

  Graph g2;
  std::vector<double> bad(1 * 1 * 2, -0.1);  // exp sums to 1.8
  AlignmentLattice unnorm = lattice_from_values(g2, 1, 0, 1, bad);
  CHECK_THROWS_AS(rnnt_loss(g2, unnorm, {}), ConfigError);
  CHECK_THROWS_AS(validate_lattice(unnorm), ConfigError);
}

namespace {

TransducerModel blank_biased_model(uint64_t seed, double bias = 10.0) {
  TransducerModel model = TransducerModel::init(tiny_config(), seed);
  model.out_bias[model.config.blank_id()] += bias;
  return model;
}

}  // namespace

TEST_CASE("a blank-dominated model transcribes nothing") {
  TransducerModel model = blank_biased_model(43);
  std::mt19937_64 rng(44);
  DecodeResult result = greedy_decode(model, test::random_tensor({6, 2}, rng));
  CHECK(result.labels.empty());
  CHECK_FALSE(result.truncated);
  CHECK(result.alignment == std::vector<int>(6, model.config.blank_id()));
}

TEST_CASE("greedy decoding is deterministic") {
  TransducerModel model = TransducerModel::init(tiny_config(), 47);
  std::mt19937_64 rng(48);
  const Tensor features = test::random_tensor({5, 2}, rng);
  DecodeResult a = greedy_decode(model, features);
  DecodeResult b = greedy_decode(model, features);
  CHECK(a.labels == b.labels);
  CHECK(a.alignment == b.alignment);
  CHECK(a.log_prob == b.log_prob);
}

TEST_CASE("removing blanks from the greedy alignment yields the transcript") {
  std::mt19937_64 rng(49);
  for (uint64_t seed = 0; seed < 10; ++seed) {
    TransducerModel model = TransducerModel::init(tiny_config(), 100 + seed);
    model.out_bias[model.config.blank_id()] += 1.0;  // keep emissions modest
    DecodeResult result = greedy_decode(model, test::random_tensor({4, 2}, rng));
    std::vector<int> no_blanks;
    for (int sym : result.alignment) {
      if (sym != model.config.blank_id()) no_blanks.push_back(sym);
    }
    CHECK(no_blanks == result.labels);
  }
}

TEST_CASE("the emission cap truncates a label-happy model") {
  TransducerModel model = blank_biased_model(53, -10.0);  // blank suppressed
  std::mt19937_64 rng(54);
  DecodeResult result = greedy_decode(model, test::random_tensor({3, 2}, rng));
  CHECK(result.truncated);
  CHECK(result.labels.size() == 30);  // 10 * T
}

TEST_CASE("beam width one reproduces greedy decoding") {
  std::mt19937_64 rng(61);
  for (uint64_t seed = 200; seed < 215; ++seed) {
    TransducerModel model = TransducerModel::init(tiny_config(), seed);
    model.out_bias[model.config.blank_id()] += 0.5;
    const Tensor features = test::random_tensor({4, 2}, rng);
    DecodeResult greedy = greedy_decode(model, features);
    DecodeResult beam = beam_decode(model, features, 1);
    CHECK(greedy.labels == beam.labels);
  }
}

TEST_CASE("wider beams never score below greedy") {
  std::mt19937_64 rng(67);
  int compared = 0;
  for (uint64_t seed = 300; seed < 320; ++seed) {
    TransducerModel model = TransducerModel::init(tiny_config(), seed);
    // Keep the blank competitive so greedy terminates and its log-prob is a
    // complete alignment mass, comparable with beam hypotheses.
    model.out_bias[model.config.blank_id()] += 2.0;
    const Tensor features = test::random_tensor({3, 2}, rng);
    DecodeResult greedy = greedy_decode(model, features);
    if (greedy.truncated) continue;
    DecodeResult beam = beam_decode(model, features, 16);
    CHECK(beam.log_prob >= greedy.log_prob - 1e-12);
    ++compared;
  }
  CHECK(compared >= 15);
}

namespace {

// Exhaustive reference: scores every label sequence up to the emission cap
// by brute-force path enumeration over the model's own lattice rows and
// returns the best under the decoder's tie-break order.
std::vector<int> exhaustive_best(const TransducerModel& model, const Tensor& features,
                                 int max_len) {
  Graph g;
  BoundModel bound = bind_model(g, model);
  std::vector<Value> frames = encode(g, bound, features);
  const int T = static_cast<int>(frames.size());
  const int vocab = model.config.vocab;

  std::vector<std::vector<int>> candidates;
  std::vector<int> current;
  std::function<void(int)> gen = [&](int remaining) {
    candidates.push_back(current);
    if (remaining == 0) return;
    for (int v = 0; v < vocab; ++v) {
      current.push_back(v);
      gen(remaining - 1);
      current.pop_back();
    }
  };
  gen(max_len);

  std::vector<int> best;
  double best_lp = -1e300;
  bool first = true;
  for (const std::vector<int>& cand : candidates) {
    std::vector<Value> prediction;
    auto [h, s] = predict_start(g, bound);
    prediction.push_back(h);
    for (int label : cand) {
      auto [hh, next] = predict_step(g, bound, s, label);
      prediction.push_back(hh);
      s = next;
    }
    AlignmentLattice lattice = build_lattice(g, bound, frames, prediction);
    std::vector<double> grid;
    grid.reserve(lattice.rows.size() * (vocab + 1));
    for (const Value& row : lattice.rows) {
      for (int v = 0; v <= vocab; ++v) grid.push_back(row.tensor()[v]);
    }
    std::vector<int> targets = cand;
    PathEnumerator oracle{T, static_cast<int>(cand.size()), vocab, &grid, &targets};
    const double lp = -oracle.neg_log_likelihood();
    if (first || lp > best_lp || (lp == best_lp && cand < best)) {
      best = cand;
      best_lp = lp;
      first = false;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("a wide beam equals exhaustive search on tiny problems") {
  std::mt19937_64 rng(71);
  for (uint64_t seed = 400; seed < 412; ++seed) {
    TransducerModel model = TransducerModel::init(tiny_config(), seed);
    const Tensor features = test::random_tensor({3, 2}, rng);
    // vocab 2, cap 2: seven candidate sequences in total.
    std::vector<int> reference = exhaustive_best(model, features, 2);
    DecodeResult beam = beam_decode(model, features, 64, /*max_emissions=*/2);
    CHECK(beam.labels == reference);
  }
}

TEST_CASE("edit distance and token error rate") {
  CHECK(edit_distance({1, 2, 3}, {1, 2, 3}) == 0);
  CHECK(edit_distance({1, 2, 3}, {1, 3}) == 1);
  CHECK(edit_distance({}, {4, 5}) == 2);
  CHECK(edit_distance({4, 5}, {}) == 2);
  CHECK(edit_distance({1, 2}, {2, 1}) == 2);
  CHECK(token_error_rate({{1, 2}}, {{1, 2}}) == 0.0);
  CHECK(token_error_rate({{1}}, {{1, 2}}) == doctest::Approx(0.5));
}

TEST_CASE("model save and load round-trips through the checkpoint container") {
  TransducerModel model = TransducerModel::init(tiny_config("sSNU-o R", "sSNU-a Ra"), 73);
  NamedTensors named = model.named_tensors();
  TransducerModel other = TransducerModel::init(model.config, 74);
  other.load_named_tensors(named);
  CHECK(other.named_tensors() == named);
  CHECK(model.live_parameter_count() ==
        static_cast<int64_t>([&] {
          int64_t total = 0;
          for (const auto& [name, tensor] : named) total += tensor.size();
          return total;
        }()));

  NamedTensors missing = named;
  missing.erase("embedding");
  CHECK_THROWS_AS(other.load_named_tensors(missing), ConfigError);
}
