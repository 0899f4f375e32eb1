#include <doctest.h>

#include "ticketforge/config.hpp"
#include "ticketforge/error.hpp"

using namespace ticketforge;

namespace {

const char* kMinimal = R"({
  "name": "tiny",
  "dataset": {"source": "two_moons"},
  "architectures": [{"id": "mlp8", "hidden": [8, 8]}]
})";

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  FAIL("expected ConfigError");
  return {};
}

}  // namespace

TEST_CASE("minimal config fills the protocol defaults") {
  const ExperimentConfig cfg = parse_config(kMinimal);
  CHECK(cfg.search.K == 5);
  CHECK(cfg.search.prune_fraction == 0.16);
  CHECK(cfg.n_runs == 50);
  CHECK(cfg.output_dir == "tiny");
  REQUIRE(cfg.architectures.size() == 1);
  CHECK(cfg.architectures[0].spec == mlp_spec(2, {8, 8}, 2));
  CHECK(cfg.architectures[0].source["type"] == "mlp");
}

TEST_CASE("misspelled keys are rejected with a suggestion") {
  const std::string msg = config_error(R"({
    "name": "x", "dataset": {"source": "two_moons"},
    "search": {"prune_frac": 0.2},
    "architectures": [{"id": "a", "hidden": [4]}]
  })");
  CHECK(msg.find("prune_frac") != std::string::npos);
  CHECK(msg.find("did you mean 'prune_fraction'") != std::string::npos);
}

TEST_CASE("every violation is reported at once") {
  const std::string msg = config_error(R"({
    "name": "x", "n_runs": 0, "dataset": {"source": "two_moons"},
    "search": {"K": 0},
    "architectures": [{"id": "a", "hidden": [4]}, {"id": "a", "hidden": [4]}]
  })");
  CHECK(msg.find("n_runs") != std::string::npos);
  CHECK(msg.find("K must be at least 1") != std::string::npos);
  CHECK(msg.find("duplicate id") != std::string::npos);
}

TEST_CASE("syntax errors carry a line and column") {
  const std::string msg = config_error("{\n  \"name\": \"x\",\n  oops\n}");
  CHECK(msg.find("line 3") != std::string::npos);
}

TEST_CASE("file-backed sources need their files") {
  const std::string msg = config_error(R"({
    "name": "m", "dataset": {"source": "mnist_idx", "data_dir": "/nonexistent"},
    "architectures": [{"id": "lenet", "type": "lenet5"}]
  })");
  CHECK(msg.find("train-images-idx3-ubyte") != std::string::npos);
  const std::string no_dir = config_error(R"({
    "name": "m", "dataset": {"source": "cifar10_binary"},
    "architectures": [{"id": "lenet", "type": "lenet5"}]
  })");
  CHECK(no_dir.find("data_dir") != std::string::npos);
}

TEST_CASE("batch size must fit the training split") {
  const std::string msg = config_error(R"({
    "name": "x", "dataset": {"source": "two_moons", "n_samples": 50},
    "search": {"train": {"batch_size": 64}},
    "architectures": [{"id": "a", "hidden": [4]}]
  })");
  CHECK(msg.find("batch_size") != std::string::npos);
}

TEST_CASE("explicit layer lists and lenet") {
  const ExperimentConfig cfg = parse_config(R"({
    "name": "x", "dataset": {"source": "gaussian_blobs", "dim": 4, "centers": 3},
    "architectures": [
      {"id": "custom", "type": "layers",
       "layers": [{"type": "dense", "out": 5}, {"type": "relu"}, {"type": "dense", "out": 3}]}
    ]
  })");
  const NetworkSpec& s = cfg.architectures[0].spec;
  CHECK(s == NetworkSpec{{Dense{4, 5}, ReLU{}, Dense{5, 3}}, {4}, 3});

  const NetworkSpec lenet = build_architecture({{"id", "l"}, {"type", "lenet5"}}, {1, 28, 28}, 10);
  CHECK(parameter_count(lenet) == 44426);
  CHECK_THROWS_AS(build_architecture({{"id", "bad"}, {"type", "transformer"}}, {2}, 2), Error);
}

TEST_CASE("config digest ignores where results go") {
  ExperimentConfig a = parse_config(kMinimal);
  ExperimentConfig b = a;
  b.output_dir = "elsewhere";
  b.jobs = 7;
  CHECK(config_digest(a) == config_digest(b));
  CHECK(config_digest(a).size() == 16);
  b.master_seed = 1;
  CHECK(config_digest(a) != config_digest(b));
  CHECK(parse_config(to_json(a).dump()).search == a.search);
}

TEST_CASE("edit distance") {
  CHECK(edit_distance("kitten", "sitting") == 3);
  CHECK(edit_distance("", "abc") == 3);
  CHECK(edit_distance("same", "same") == 0);
}
