#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "snnt/config.hpp"
#include "snnt/dataio.hpp"
#include "snnt/errors.hpp"
#include "test_util.hpp"

using namespace snnt;

namespace {

const char* kGoodConfig = R"({
  "model": {
    "input_dim": 6,
    "encoder": { "variant": "sSNU-o R", "layers": 2, "units": 8 },
    "prediction": { "variant": "sSNU-a R", "units": 8 },
    "embedding_dim": 4,
    "vocab": 4,
    "joint_dim": 8
  },
  "training": { "epochs": 2, "batch_size": 4, "peak_rate": 0.005, "warmup_epochs": 1,
                "seed": 11 },
  "decode": { "mode": "beam", "width": 4 },
  "paths": { "data": "d.jsonl", "out": "out" }
})";

// Runs the CLI binary (path from SNNT_BIN) and returns its exit code.
int run_cli(const std::string& args, std::string* output = nullptr) {
  const char* bin = std::getenv("SNNT_BIN");
  REQUIRE_MESSAGE(bin != nullptr, "SNNT_BIN must point at the snnt binary");
  const std::string log = std::filesystem::temp_directory_path() / "snnt-cli-out.txt";
  const std::string cmd = std::string(bin) + " " + args + " >" + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  if (output != nullptr) {
    std::ifstream is(log);
    std::ostringstream buf;
    buf << is.rdbuf();
    *output = buf.str();
  }
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("a well-formed config parses with all sections") {
  RunConfig cfg = parse_run_config(kGoodConfig);
  CHECK(cfg.model.encoder_layers.size() == 2);
  CHECK(cfg.model.encoder_layers[0].variant_name() == "sSNU-o R");
  CHECK(cfg.model.encoder_layers[1].input_size == 16);  // 2 * units of layer 1
  CHECK(cfg.model.prediction.variant_name() == "sSNU-a R");
  CHECK(cfg.model.prediction.input_size == 4);  // embedding width
  CHECK(cfg.training.epochs == 2);
  CHECK(cfg.training.seed == 11);
  CHECK(cfg.decode.mode == "beam");
  CHECK(cfg.decode.width == 4);
  CHECK(cfg.paths.data == "d.jsonl");
}

TEST_CASE("unknown keys are rejected at every level") {
  std::string bad1 = kGoodConfig;
  bad1.insert(bad1.rfind('}'), ", \"extra\": 1");
  CHECK_THROWS_AS(parse_run_config(bad1), ConfigError);

  std::string bad2 = kGoodConfig;
  bad2.replace(bad2.find("\"epochs\""), 8, "\"epoches\"");
  CHECK_THROWS_AS(parse_run_config(bad2), ConfigError);

  const std::string bad3 = R"({"model":{"input_dim":6,
    "encoder":{"variant":"sSNU","unitz":8},
    "prediction":{"variant":"sSNU","units":8},"vocab":4}})";
  CHECK_THROWS_AS(parse_run_config(bad3), ConfigError);

  CHECK_THROWS_AS(parse_run_config("{"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("{}"), ConfigError);  // missing model
}

TEST_CASE("bad enum values are rejected") {
  std::string bad = kGoodConfig;
  bad.replace(bad.find("\"beam\""), 6, "\"best\"");
  CHECK_THROWS_AS(parse_run_config(bad), ConfigError);

  std::string badvar = kGoodConfig;
  badvar.replace(badvar.find("\"sSNU-o R\""), 10, "\"sSNU-q\"");
  CHECK_THROWS_AS(parse_run_config(badvar), ConfigError);
}

TEST_CASE("the config hash is stable and key-order independent") {
  RunConfig a = parse_run_config(kGoodConfig);
  CHECK(config_hash_hex(a) == config_hash_hex(a));

  // Same content, different key order in the source text.
  std::string reordered = R"({
    "paths": { "out": "out", "data": "d.jsonl" },
    "decode": { "width": 4, "mode": "beam" },
    "training": { "seed": 11, "warmup_epochs": 1, "peak_rate": 0.005,
                  "batch_size": 4, "epochs": 2 },
    "model": {
      "joint_dim": 8,
      "vocab": 4,
      "embedding_dim": 4,
      "prediction": { "units": 8, "variant": "sSNU-a R" },
      "encoder": { "units": 8, "layers": 2, "variant": "sSNU-o R" },
      "input_dim": 6
    }
  })";
  CHECK(config_hash_hex(parse_run_config(reordered)) == config_hash_hex(a));

  RunConfig b = a;
  b.training.seed = 12;
  CHECK(config_hash_hex(b) != config_hash_hex(a));
}

TEST_CASE("model configs round-trip through json") {
  RunConfig cfg = parse_run_config(kGoodConfig);
  const std::string json = transducer_config_json(cfg.model);
  TransducerConfig back = parse_transducer_config(json);
  CHECK(transducer_config_json(back) == json);

  // Heterogeneous stacks serialise as arrays.
  TransducerConfig hetero = cfg.model;
  hetero.encoder_layers[1] = cell_config_from_name("LSTM");
  hetero.encoder_layers[1].units = 8;
  hetero.validate_and_wire();
  TransducerConfig hback = parse_transducer_config(transducer_config_json(hetero));
  CHECK(hback.encoder_layers[1].variant_name() == "LSTM");
  CHECK(transducer_config_json(hback) == transducer_config_json(hetero));
}

TEST_CASE("cli: missing data file fails with exit 1 naming the path") {
  test::TempDir tmp("snnt-cli");
  const std::string cfg_path = tmp.file("cfg.json");
  {
    std::ofstream os(cfg_path);
    std::string cfg = kGoodConfig;
    const std::string missing = tmp.file("nope.jsonl");
    cfg.replace(cfg.find("d.jsonl"), 7, missing);
    os << cfg;
  }
  std::string out;
  const int code = run_cli("train --config " + cfg_path + " --out " + tmp.file("o"), &out);
  CHECK(code == 1);
  CHECK(out.find("nope.jsonl") != std::string::npos);
}

TEST_CASE("cli: gradcheck rejects a zero tolerance with exit 1") {
  std::string out;
  CHECK(run_cli("gradcheck --tol 0", &out) == 1);
  CHECK(out.find("tolerance") != std::string::npos);
}

TEST_CASE("cli: unknown subcommands and missing required options exit 1") {
  CHECK(run_cli("frobnicate") == 1);
  CHECK(run_cli("decode") == 1);
}

TEST_CASE("cli: train, decode and re-train determinism") {
  test::TempDir tmp("snnt-cli-train");

  ToyTaskSpec task;
  task.vocab = 4;
  task.feature_dim = 6;
  task.utterance_count = 16;
  task.labels_min = 2;
  task.labels_max = 3;
  task.seed = 5;
  write_dataset_jsonl(generate_toy_dataset(task), tmp.file("data.jsonl"));

  const std::string cfg_path = tmp.file("cfg.json");
  {
    std::ofstream os(cfg_path);
    std::string cfg = kGoodConfig;
    cfg.replace(cfg.find("d.jsonl"), 7, tmp.file("data.jsonl"));
    os << cfg;
  }

  std::string out;
  REQUIRE(run_cli("train --config " + cfg_path + " --out " + tmp.file("runA"), &out) == 0);
  CHECK(out.find("config_hash=") != std::string::npos);
  REQUIRE(run_cli("train --config " + cfg_path + " --out " + tmp.file("runB"), &out) == 0);

  auto slurp = [](const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::ostringstream buf;
    buf << is.rdbuf();
    return buf.str();
  };
  const std::string a = slurp(tmp.file("runA") + "/final.ckpt");
  const std::string b = slurp(tmp.file("runB") + "/final.ckpt");
  REQUIRE_FALSE(a.empty());
  CHECK(a == b);  // identical checkpoint bytes

  // Beam width 1 writes the same hypothesis file as greedy.
  REQUIRE(run_cli("decode --checkpoint " + tmp.file("runA") + "/final.ckpt --data " +
                      tmp.file("data.jsonl") + " --out " + tmp.file("greedy.jsonl") +
                      " --mode greedy",
                  &out) == 0);
  CHECK(out.find("token_error=") != std::string::npos);
  REQUIRE(run_cli("decode --checkpoint " + tmp.file("runA") + "/final.ckpt --data " +
                      tmp.file("data.jsonl") + " --out " + tmp.file("beam1.jsonl") +
                      " --mode beam --width 1",
                  &out) == 0);
  CHECK(slurp(tmp.file("greedy.jsonl")) == slurp(tmp.file("beam1.jsonl")));

  // A wider beam never lowers the mean hypothesis log-probability.
  std::string greedy_out, beam_out;
  REQUIRE(run_cli("decode --checkpoint " + tmp.file("runA") + "/final.ckpt --data " +
                      tmp.file("data.jsonl") + " --out " + tmp.file("beam16.jsonl") +
                      " --mode beam --width 16",
                  &beam_out) == 0);
  auto mean_lp = [](const std::string& text) {
    const std::string key = "mean_log_prob=";
    const size_t pos = text.find(key);
    REQUIRE(pos != std::string::npos);
    return std::stod(text.substr(pos + key.size()));
  };
  REQUIRE(run_cli("decode --checkpoint " + tmp.file("runA") + "/final.ckpt --data " +
                      tmp.file("data.jsonl") + " --out " + tmp.file("greedy2.jsonl") +
                      " --mode greedy",
                  &greedy_out) == 0);
  CHECK(mean_lp(beam_out) >= mean_lp(greedy_out) - 1e-9);
}

TEST_CASE("cli: count emits the reference table") {
  test::TempDir tmp("snnt-cli-count");
  std::string out;
  REQUIRE(run_cli("count --reference --out " + tmp.path().string(), &out) == 0);
  std::ifstream is(tmp.file("counts.csv"));
  std::ostringstream buf;
  buf << is.rdbuf();
  const std::string csv = buf.str();
  CHECK(csv.find("54200320") != std::string::npos);
  CHECK(csv.find("2393088") != std::string::npos);
  CHECK(csv.find("sSNU R,prediction,598272,599040,25,25") != std::string::npos);
}
