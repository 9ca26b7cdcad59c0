#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cfgnn/harness.hpp"
#include "test_helpers.hpp"

using namespace cfgnn;
namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// a micro experiment that runs in well under a second
ExperimentConfig micro_config(const std::string& out_dir) {
  ExperimentConfig cfg;
  cfg.sizes = {3};
  cfg.train_drops = 4;
  cfg.test_drops = 3;
  cfg.seed = 11;
  cfg.out_dir = out_dir;
  cfg.drop.steps_per_drop = 6;
  cfg.trainer.batch_size = 6;
  cfg.wmmse.max_iters = 50;
  cfg.finalize();
  return cfg;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("key-value config parsing") {
  const std::string text =
      "# comment\n"
      "\n"
      "experiment.sizes = 6, 14\n"
      "trainer.c_min = 2.5\n"
      "trainer.shared_slack = false\n"
      "experiment.seed = 99\n"
      "experiment.out_dir = out/x\n";
  const KeyValueConfig kv = KeyValueConfig::from_string(text);
  CHECK(kv.get_int_list("experiment.sizes", {}) == std::vector<int>{6, 14});
  CHECK(kv.get_double("trainer.c_min", 0.0) == 2.5);
  CHECK(kv.get_bool("trainer.shared_slack", true) == false);
  CHECK(kv.get_u64("experiment.seed", 0) == 99);
  CHECK(kv.get_string("experiment.out_dir", "") == "out/x");
  CHECK(kv.get_double("missing.key", 7.5) == 7.5);
  kv.check_all_consumed();

  CHECK_THROWS_AS(KeyValueConfig::from_string("novalue\n"), std::runtime_error);
  CHECK_THROWS_AS(KeyValueConfig::from_string("a = 1\na = 2\n"), std::runtime_error);
  CHECK_THROWS_AS(KeyValueConfig::from_string("a = abc\n").get_double("a", 0.0), std::runtime_error);

  const KeyValueConfig unknown = KeyValueConfig::from_string("experiment.sizse = 6\n");
  CHECK_THROWS_AS(unknown.check_all_consumed(), std::runtime_error);
}

TEST_CASE("experiment config wires the radio figures into sub-configs") {
  const std::string text =
      "radio.p_max_dbm = 20\n"
      "radio.bandwidth_hz = 5e6\n"
      "experiment.sizes = 4\n";
  const ExperimentConfig cfg = ExperimentConfig::from_config(KeyValueConfig::from_string(text));
  CHECK(cfg.tin.p_max == doctest::Approx(0.1));
  CHECK(cfg.regnn.p_max == doctest::Approx(0.1));
  CHECK(cfg.wmmse.p_max == doctest::Approx(0.1));
  CHECK(cfg.radio.noise_power() == doctest::Approx(noise_power_watts(-174.0, 5e6)));

  CHECK_THROWS_AS(
      ExperimentConfig::from_config(KeyValueConfig::from_string("experiment.typo = 1\n")),
      std::runtime_error);
}

TEST_CASE("drop seeds separate roles, sizes and indices") {
  const auto a = drop_seed(1, false, 6, 0);
  CHECK(a != drop_seed(1, true, 6, 0));
  CHECK(a != drop_seed(1, false, 8, 0));
  CHECK(a != drop_seed(1, false, 6, 1));
  CHECK(a == drop_seed(1, false, 6, 0));
}

TEST_CASE("make_batch produces consistent channel/graph pairs") {
  ExperimentConfig cfg = micro_config("unused");
  DropParams prm = cfg.drop;
  prm.num_pairs = 3;
  prm.seed = 42;
  const Batch batch = make_batch(prm, cfg.fading, cfg.radio, cfg.tin, 5);
  REQUIRE(batch.size() == 5);
  CHECK(batch.num_pairs() == 3);
  for (int t = 0; t < 5; ++t) {
    CHECK(batch.channels[t].noise_power == doctest::Approx(cfg.radio.noise_power()));
    CHECK(batch.gsos[t].normalized);
    CHECK(std::abs(testutil::svd_spectral_norm(batch.gsos[t].s) - 1.0) < 1e-6);
  }
  // consecutive steps come from one fading process, channels differ
  CHECK(batch.channels[0].h != batch.channels[1].h);
}

TEST_CASE("run_train emits checkpoints and parseable logs, deterministically") {
  TempDir dir_a("cfgnn_train_a"), dir_b("cfgnn_train_b");
  ExperimentConfig cfg_a = micro_config(dir_a.path.string());
  ExperimentConfig cfg_b = micro_config(dir_b.path.string());
  std::ostringstream quiet;
  run_train(cfg_a, quiet);
  run_train(cfg_b, quiet);

  const std::string log_a = read_file((dir_a.path / "train_m3.csv").string());
  CHECK(log_a == read_file((dir_b.path / "train_m3.csv").string()));
  CHECK(read_file((dir_a.path / "regnn_m3.ckpt").string()) ==
        read_file((dir_b.path / "regnn_m3.ckpt").string()));

  // header plus one row per drop, iteration indices monotone from 1
  std::istringstream lines(log_a);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "iter,s,mean_lambda,mean_mu,utility,batch_sum_rate,batch_p5_rate");
  int expect = 1;
  while (std::getline(lines, line)) {
    CHECK(line.rfind(std::to_string(expect) + ",", 0) == 0);
    ++expect;
  }
  CHECK(expect == cfg_a.train_drops + 1);

  const RegnnParams params = load_checkpoint((dir_a.path / "regnn_m3.ckpt").string());
  CHECK(params.config.p_max == doctest::Approx(cfg_a.radio.p_max()));
}

TEST_CASE("run_eval consumes checkpoints and writes one row per policy") {
  TempDir dir("cfgnn_eval");
  ExperimentConfig cfg = micro_config(dir.path.string());
  std::ostringstream quiet;
  run_train(cfg, quiet);
  const auto rows = run_eval(cfg, true, cfg.out_dir, quiet);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].policy == "TDM");
  CHECK(rows[1].policy == "WMMSE");
  CHECK(rows[2].policy == "CF-GNN");
  for (const auto& r : rows) {
    CHECK(r.size == 3);
    CHECK(r.n_drops == cfg.test_drops);
    CHECK(r.sum_rate >= 0.0);
    CHECK(r.p5_rate >= 0.0);
  }
  const std::string summary = read_file((dir.path / "eval_summary.csv").string());
  CHECK(summary.rfind("size,policy,sum_rate,p5_rate,n_drops,seed\n", 0) == 0);

  // baseline-only mode skips the trained policy
  const auto base_rows = run_eval(cfg, false, cfg.out_dir, quiet);
  REQUIRE(base_rows.size() == 2);
  CHECK(fs::exists(dir.path / "baseline_summary.csv"));
}

TEST_CASE("run_eval rejects a checkpoint trained under a different power budget") {
  TempDir dir("cfgnn_eval_pmax");
  ExperimentConfig cfg = micro_config(dir.path.string());
  std::ostringstream quiet;
  run_train(cfg, quiet);
  ExperimentConfig other = cfg;
  other.radio.p_max_dbm = 20.0;
  other.finalize();
  try {
    run_eval(other, true, cfg.out_dir, quiet);
    FAIL("expected a p_max mismatch error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("p_max") != std::string::npos);
  }
}

TEST_CASE("run_eval names the size of a missing checkpoint") {
  TempDir dir("cfgnn_eval_missing");
  ExperimentConfig cfg = micro_config(dir.path.string());
  std::ostringstream quiet;
  try {
    run_eval(cfg, true, cfg.out_dir, quiet);
    FAIL("expected a missing-checkpoint error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("m=3") != std::string::npos);
  }
}

TEST_CASE("gen_drops writes loadable files") {
  TempDir dir("cfgnn_gen");
  ExperimentConfig cfg = micro_config(dir.path.string());
  std::ostringstream quiet;
  const auto paths = gen_drops(cfg, 4, 3, quiet);
  REQUIRE(paths.size() == 3);
  for (const auto& p : paths) {
    const LoadedDrop loaded = load_drop(p);
    CHECK(loaded.params.num_pairs == 4);
    CHECK(loaded.drop.num_pairs() == 4);
  }
  // distinct drops per index
  CHECK(load_drop(paths[0]).params.seed != load_drop(paths[1]).params.seed);
}

TEST_CASE("selftest passes quietly") {
  std::ostringstream out;
  const SelftestResult res = run_selftest(out);
  CHECK(res.failed == 0);
  CHECK(res.passed >= 8);
}

}  // TEST_SUITE
