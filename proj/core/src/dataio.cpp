// Copyright (c) 2026 the snnt authors. Apache-2.0 license.
#include "snnt/dataio.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <random>
#include <sstream>

#include "snnt/errors.hpp"

namespace snnt {

using nlohmann::json;

void ToyTaskSpec::validate() const {
  if (vocab < 1) throw ConfigError("toy task: vocab must be >= 1");
  if (feature_dim < 1) throw ConfigError("toy task: feature_dim must be >= 1");
  if (frames_per_symbol_min < 1 || frames_per_symbol_max < frames_per_symbol_min) {
    throw ConfigError("toy task: invalid frames-per-symbol range");
  }
  if (labels_min < 1 || labels_max < labels_min) {
    throw ConfigError("toy task: invalid labels-per-utterance range");
  }
  if (noise_sigma < 0.0) throw ConfigError("toy task: noise sigma must be >= 0");
  if (utterance_count < 1) throw ConfigError("toy task: utterance_count must be >= 1");
}

Tensor toy_prototypes(const ToyTaskSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Tensor protos({spec.vocab, spec.feature_dim});
  for (int64_t i = 0; i < protos.size(); ++i) protos[i] = dist(rng);
  return protos;
}

Dataset generate_toy_dataset(const ToyTaskSpec& spec) {
  spec.validate();
  const Tensor protos = toy_prototypes(spec);

  // Utterance draws use a separate stream so prototype changes cannot shift
  // them and vice versa.
  std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_int_distribution<int> label_count(spec.labels_min, spec.labels_max);
  std::uniform_int_distribution<int> symbol(0, spec.vocab - 1);
  std::uniform_int_distribution<int> frame_count(spec.frames_per_symbol_min,
                                                 spec.frames_per_symbol_max);
  std::normal_distribution<double> noise(0.0, 1.0);

  Dataset out;
  out.reserve(static_cast<size_t>(spec.utterance_count));
  for (int u = 0; u < spec.utterance_count; ++u) {
    Utterance utt;
    {
      std::ostringstream id;
      id << "toy-" << spec.seed << "-" << u;
      utt.id = id.str();
    }
    const int n_labels = label_count(rng);
    utt.labels.resize(static_cast<size_t>(n_labels));
    std::vector<int> spans(static_cast<size_t>(n_labels));
    int total_frames = 0;
    for (int i = 0; i < n_labels; ++i) {
      utt.labels[static_cast<size_t>(i)] = symbol(rng);
      spans[static_cast<size_t>(i)] = frame_count(rng);
      total_frames += spans[static_cast<size_t>(i)];
    }
    utt.features = Tensor({total_frames, spec.feature_dim});
    int t = 0;
    for (int i = 0; i < n_labels; ++i) {
      const int lab = utt.labels[static_cast<size_t>(i)];
      for (int k = 0; k < spans[static_cast<size_t>(i)]; ++k, ++t) {
        for (int f = 0; f < spec.feature_dim; ++f) {
          utt.features.at(t, f) =
              protos.at(lab, f) + spec.noise_sigma * noise(rng);
        }
      }
    }
    out.push_back(std::move(utt));
  }
  return out;
}

namespace {

// Central differences with boundary rows copying their nearest computed
// neighbour; degenerate lengths fall back to a simple difference (T=2) or
// zeros (T=1), so constant input gives zero and linear input a constant.
Tensor time_derivative(const Tensor& features) {
  const int T = features.dim(0);
  const int F = features.dim(1);
  Tensor d({T, F});
  if (T == 1) return d;
  if (T == 2) {
    for (int f = 0; f < F; ++f) {
      const double slope = features.at(1, f) - features.at(0, f);
      d.at(0, f) = slope;
      d.at(1, f) = slope;
    }
    return d;
  }
  for (int t = 1; t < T - 1; ++t) {
    for (int f = 0; f < F; ++f) {
      d.at(t, f) = 0.5 * (features.at(t + 1, f) - features.at(t - 1, f));
    }
  }
  for (int f = 0; f < F; ++f) {
    d.at(0, f) = d.at(1, f);
    d.at(T - 1, f) = d.at(T - 2, f);
  }
  return d;
}

}  // namespace

Tensor add_deltas(const Tensor& features) {
  if (features.rank() != 2) throw ShapeError("add_deltas expects a T x F matrix");
  const int T = features.dim(0);
  const int F = features.dim(1);
  const Tensor d1 = time_derivative(features);
  const Tensor d2 = time_derivative(d1);
  Tensor out({T, 3 * F});
  for (int t = 0; t < T; ++t) {
    for (int f = 0; f < F; ++f) {
      out.at(t, f) = features.at(t, f);
      out.at(t, F + f) = d1.at(t, f);
      out.at(t, 2 * F + f) = d2.at(t, f);
    }
  }
  return out;
}

Tensor stack_frames(const Tensor& features) {
  if (features.rank() != 2) throw ShapeError("stack_frames expects a T x F matrix");
  const int T = features.dim(0);
  const int F = features.dim(1);
  const int rows = (T + 1) / 2;
  Tensor out({rows, 2 * F});
  for (int r = 0; r < rows; ++r) {
    const int first = 2 * r;
    const int second = std::min(2 * r + 1, T - 1);
    for (int f = 0; f < F; ++f) {
      out.at(r, f) = features.at(first, f);
      out.at(r, F + f) = features.at(second, f);
    }
  }
  return out;
}

void write_dataset_jsonl(const Dataset& dataset, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open '" + path + "' for writing");
  for (const Utterance& utt : dataset) {
    json rec;
    rec["id"] = utt.id;
    rec["shape"] = utt.features.shape();
    rec["features"] = utt.features.values();
    rec["labels"] = utt.labels;
    os << rec.dump() << "\n";
  }
  if (!os) throw ConfigError("short write to '" + path + "'");
}

Dataset read_dataset_jsonl(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open dataset file '" + path + "'");
  Dataset out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    for (const char* key : {"id", "shape", "features", "labels"}) {
      if (!rec.contains(key)) {
        throw ConfigError(path + ":" + std::to_string(line_no) +
                          ": missing key '" + key + "'");
      }
    }
    Utterance utt;
    utt.id = rec.at("id").get<std::string>();
    Shape shape = rec.at("shape").get<Shape>();
    std::vector<double> values = rec.at("features").get<std::vector<double>>();
    if (shape.size() != 2 || shape_numel(shape) != static_cast<int64_t>(values.size())) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": bad shape");
    }
    utt.features = Tensor(shape, std::move(values));
    utt.labels = rec.at("labels").get<std::vector<int>>();
    out.push_back(std::move(utt));
  }
  return out;
}

}  // namespace snnt
