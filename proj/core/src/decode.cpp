// Copyright (c) 2026 the snnt authors. Apache-2.0 license.
#include "snnt/decode.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "snnt/errors.hpp"

namespace snnt {

namespace {

double logaddexp_d(double a, double b) {
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// Log-probability row for one (frame, prediction) pair, reusing the cached
// projections.
Value joint_row(const BoundModel& model, Value enc_projected, Value pred_projected) {
  Value z = tanh(mul(enc_projected, pred_projected));
  return log_softmax(add(matvec(model.out_weight, z), model.out_bias));
}

std::vector<Value> project_frames(const BoundModel& model,
                                  const std::vector<Value>& frames) {
  std::vector<Value> out;
  out.reserve(frames.size());
  for (const Value& f : frames) out.push_back(matvec(model.enc_proj, f));
  return out;
}

}  // namespace

DecodeResult greedy_decode(const TransducerModel& model, const Tensor& features,
                           int64_t max_emissions) {
  Graph graph;
  BoundModel bound = bind_model(graph, model);
  std::vector<Value> frames = encode(graph, bound, features);
  std::vector<Value> enc_projected = project_frames(bound, frames);

  const int T = static_cast<int>(frames.size());
  const int blank = model.config.blank_id();
  const int64_t cap = max_emissions >= 0 ? max_emissions : 10LL * T;

  auto [h_pred, state] = predict_start(graph, bound);
  Value pred_projected = matvec(bound.pred_proj, h_pred);

  DecodeResult result;
  int64_t emitted = 0;
  int t = 0;
  while (t < T) {
    Value row = joint_row(bound, enc_projected[static_cast<size_t>(t)], pred_projected);
    const Tensor& r = row.tensor();
    int best = 0;
    for (int i = 1; i < static_cast<int>(r.size()); ++i) {
      if (r[i] > r[best]) best = i;
    }
    result.log_prob += r[best];
    result.alignment.push_back(best);
    if (best == blank) {
      ++t;
      continue;
    }
    result.labels.push_back(best);
    ++emitted;
    if (emitted >= cap) {
      result.truncated = true;
      break;
    }
    auto [h, next] = predict_step(graph, bound, state, best);
    state = next;
    pred_projected = matvec(bound.pred_proj, h);
  }
  return result;
}

namespace {

struct BeamHyp {
  double lp = 0.0;
  PredState state;
  Value pred_projected;
};

// Hypotheses keyed by their label sequence. std::map keeps keys in
// lexicographic order (lower label index first, shorter prefix first), so a
// stable sort by log-prob yields exactly the documented tie-break.
using HypMap = std::map<std::vector<int>, BeamHyp>;

struct RankedCand {
  const std::vector<int>* labels;
  double lp;
  bool is_stop;  // blank transition to the next frame vs. label continuation
};

void rank_and_prune(std::vector<RankedCand>& cands, size_t width) {
  std::stable_sort(cands.begin(), cands.end(),
                   [](const RankedCand& a, const RankedCand& b) { return a.lp > b.lp; });
  if (cands.size() > width) cands.resize(width);
}

}  // namespace

DecodeResult beam_decode(const TransducerModel& model, const Tensor& features,
                         int width, int64_t max_emissions) {
  if (width < 1) throw ConfigError("beam width must be >= 1");

  Graph graph;
  BoundModel bound = bind_model(graph, model);
  std::vector<Value> frames = encode(graph, bound, features);
  std::vector<Value> enc_projected = project_frames(bound, frames);

  const int T = static_cast<int>(frames.size());
  const int V = model.config.vocab;
  const int blank = model.config.blank_id();
  const int64_t cap = max_emissions >= 0 ? max_emissions : 10LL * T;

  HypMap beam;
  {
    auto [h, state] = predict_start(graph, bound);
    BeamHyp root;
    root.lp = 0.0;
    root.state = state;
    root.pred_projected = matvec(bound.pred_proj, h);
    beam.emplace(std::vector<int>{}, std::move(root));
  }

  for (int t = 0; t < T; ++t) {
    const Value enc_t = enc_projected[static_cast<size_t>(t)];
    HypMap survivors;  // hypotheses advanced to frame t+1 via a blank
    HypMap frontier = std::move(beam);
    beam.clear();

    while (!frontier.empty()) {
      // Expand every frontier hypothesis once, then rank the blank stops
      // jointly with the label continuations and keep the top `width`. At
      // exact log-prob ties continuations outrank stops, matching the greedy
      // argmax which prefers the lowest symbol index (blank is last).
      struct StopInfo {
        double lp;
        const BeamHyp* parent;
      };
      struct ContInfo {
        double lp;
        const BeamHyp* parent;
        int label;
      };
      std::map<std::vector<int>, StopInfo> stops;
      std::map<std::vector<int>, ContInfo> conts;

      for (const auto& [labels, hyp] : frontier) {
        Value row = joint_row(bound, enc_t, hyp.pred_projected);
        const Tensor& r = row.tensor();
        {
          auto [it, fresh] = stops.emplace(labels, StopInfo{hyp.lp + r[blank], &hyp});
          if (!fresh) it->second.lp = logaddexp_d(it->second.lp, hyp.lp + r[blank]);
        }
        if (static_cast<int64_t>(labels.size()) >= cap) continue;
        for (int v = 0; v < V; ++v) {
          std::vector<int> ext = labels;
          ext.push_back(v);
          auto [it, fresh] = conts.emplace(std::move(ext), ContInfo{hyp.lp + r[v], &hyp, v});
          if (!fresh) it->second.lp = logaddexp_d(it->second.lp, hyp.lp + r[v]);
        }
      }

      std::vector<RankedCand> pool;
      pool.reserve(stops.size() + conts.size());
      for (const auto& [labels, info] : conts) pool.push_back({&labels, info.lp, false});
      for (const auto& [labels, info] : stops) pool.push_back({&labels, info.lp, true});
      rank_and_prune(pool, static_cast<size_t>(width));

      HypMap next_frontier;
      for (const RankedCand& cand : pool) {
        if (cand.is_stop) {
          const StopInfo& info = stops.at(*cand.labels);
          // The prediction state is a pure function of the label sequence,
          // so any parent's state serves the merged hypothesis.
          auto [it, fresh] = survivors.emplace(*cand.labels, BeamHyp{});
          if (fresh) {
            it->second.lp = cand.lp;
            it->second.state = info.parent->state;
            it->second.pred_projected = info.parent->pred_projected;
          } else {
            it->second.lp = logaddexp_d(it->second.lp, cand.lp);
          }
        } else {
          const ContInfo& info = conts.at(*cand.labels);
          auto [h, next] = predict_step(graph, bound, info.parent->state, info.label);
          BeamHyp hyp;
          hyp.lp = cand.lp;
          hyp.state = next;
          hyp.pred_projected = matvec(bound.pred_proj, h);
          next_frontier.emplace(*cand.labels, std::move(hyp));
        }
      }
      frontier = std::move(next_frontier);
    }

    std::vector<RankedCand> pool;
    pool.reserve(survivors.size());
    for (const auto& [labels, hyp] : survivors) pool.push_back({&labels, hyp.lp, true});
    rank_and_prune(pool, static_cast<size_t>(width));
    for (const RankedCand& cand : pool) {
      beam.emplace(*cand.labels, survivors.at(*cand.labels));
    }
  }

  std::vector<RankedCand> pool;
  pool.reserve(beam.size());
  for (const auto& [labels, hyp] : beam) pool.push_back({&labels, hyp.lp, true});
  rank_and_prune(pool, 1);
  if (pool.empty()) throw Error("beam search produced no hypotheses");

  DecodeResult result;
  result.labels = *pool[0].labels;
  result.log_prob = pool[0].lp;
  result.truncated = static_cast<int64_t>(result.labels.size()) >= cap;
  return result;
}

int edit_distance(const std::vector<int>& a, const std::vector<int>& b) {
  const size_t n = a.size(), m = b.size();
  std::vector<int> prev(m + 1), cur(m + 1);
  for (size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
  for (size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<int>(i);
    for (size_t j = 1; j <= m; ++j) {
      const int subst = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, subst});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double token_error_rate(const std::vector<std::vector<int>>& hyps,
                        const std::vector<std::vector<int>>& refs) {
  if (hyps.size() != refs.size()) {
    throw ShapeError("token_error_rate: hypothesis/reference count mismatch");
  }
  int64_t errors = 0, total = 0;
  for (size_t i = 0; i < hyps.size(); ++i) {
    errors += edit_distance(hyps[i], refs[i]);
    total += static_cast<int64_t>(refs[i].size());
  }
  if (total == 0) return errors == 0 ? 0.0 : 1.0;
  return static_cast<double>(errors) / static_cast<double>(total);
}

}  // namespace snnt
