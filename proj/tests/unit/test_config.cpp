#include <doctest.h>

#include <filesystem>
#include <regex>

#include "pmmm/config.hpp"

using namespace pmmm;

TEST_CASE("configuration defaults") {
  const RunConfig c;
  CHECK(c.search.depth == 4);
  CHECK(c.search.p == 2);
  CHECK(c.derive.lambda_seq == 0.9);
  CHECK(c.derive.lambda_res == 0.9);
  CHECK(c.search.epochs == 30);
  CHECK(c.search.runs == 3);
  CHECK(c.eval_seeds == 10);
  CHECK(c.search.mode == SearchMode::Partial);
  CHECK(c.dataset.empty());
  CHECK_NOTHROW(c.validate());
  CHECK(parse_run_config("").canonical() == c.canonical());
}

TEST_CASE("sectioned key=value parsing") {
  const RunConfig c = parse_run_config(
      "; comment\n"
      "[run]\nseed = 7\nout = results\n"
      "[search]\nmode = onepath\nepochs = 12\ndepth = 2\ntransform = off\nselect_by = loss\n"
      "[derive]\nlambda_seq = 1\nlambda_res = 0.5\n"
      "[eval]\nseeds = 4\nlr = 0.02\n");
  CHECK(c.seed == 7);
  CHECK(c.out == "results");
  CHECK(c.search.mode == SearchMode::OnePath);
  CHECK(c.search.epochs == 12);
  CHECK(c.search.depth == 2);
  CHECK(c.search.use_transform == false);
  CHECK(c.search.select_by == SelectBy::Loss);
  CHECK(c.derive.lambda_seq == 1.0);
  CHECK(c.derive.lambda_res == 0.5);
  CHECK(c.eval_seeds == 4);
  CHECK(c.target.adam.lr == 0.02);
  CHECK(c.search_config().seed == 7);
}

TEST_CASE("synth kind applies before the other synth keys") {
  const RunConfig c = parse_run_config("[synth]\nnoise = 0.1\naux = 50\nkind = multi_chain\n");
  CHECK(c.synth.kind == SynthKind::MultiChain);
  CHECK(c.synth.label_noise == 0.1);
  CHECK(c.synth.num_aux == 50);
  CHECK(c.synth.depth == SynthSpec::multi_chain().depth);
}

TEST_CASE("configuration errors") {
  CHECK_THROWS_AS(parse_run_config("[search]\nfoo = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("[search]\nepochs = ten\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("[search]\nepochs = 10x\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("[search]\nmode = greedy\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("[search]\ntransform = maybe\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("seed = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("[search\nepochs = 1\n"), ConfigError);
  CHECK_THROWS_AS(load_run_config("/nonexistent/config.ini"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("[derive]\nlambda_seq = 1.5\n").validate(), ConfigError);
  CHECK_THROWS_AS(parse_run_config("[search]\np = 0\n").validate(), ConfigError);
  CHECK_THROWS_AS(parse_run_config("[eval]\nseeds = 0\n").validate(), ConfigError);
  CHECK_THROWS_AS(parse_run_config("[data]\ntask = recommendation\n").validate(), ConfigError);
  RunConfig c;
  CHECK_THROWS_AS(apply_setting(c, "nosection", "1"), ConfigError);
}

TEST_CASE("config hash") {
  const RunConfig base;
  CHECK(std::regex_match(base.hash(), std::regex("[0-9a-f]{16}")));
  CHECK(base.hash() == RunConfig{}.hash());
  RunConfig moved = base;
  moved.out = "elsewhere";
  CHECK(moved.hash() == base.hash());
  for (const auto& [k, v] : std::vector<std::pair<std::string, std::string>>{{"run.seed", "1"},
                                                                             {"search.epochs", "31"},
                                                                             {"search.lr_alpha", "0.0031"},
                                                                             {"derive.lambda_res", "0.5"},
                                                                             {"synth.noise", "0.1"},
                                                                             {"eval.transform", "off"},
                                                                             {"search.onepath_sampling", "strength"}}) {
    RunConfig c = base;
    apply_setting(c, k, v);
    CHECK_MESSAGE(c.hash() != base.hash(), k);
  }
}

TEST_CASE("data loading") {
  namespace fs = std::filesystem;
  RunConfig c;
  c.synth.num_targets = 60;
  c.synth.num_mid = 80;
  c.synth.num_aux = 6;
  const LoadedData generated = load_data(c);
  CHECK(generated.graph.types()[0].count == 60);

  const fs::path dir = fs::temp_directory_path() / "pmmm_unit_data";
  fs::remove_all(dir);
  write_synth(generate_hin(c.synth), dir);
  RunConfig from_disk = c;
  from_disk.dataset = dir;
  const LoadedData loaded = load_data(from_disk);
  CHECK(loaded.splits == generated.splits);
  CHECK(loaded.graph.total_nodes() == generated.graph.total_nodes());

  from_disk.task = Task::Recommendation;
  CHECK_THROWS_AS(load_data(from_disk), ConfigError);
  from_disk.task = Task::Classification;
  from_disk.splits = dir / "missing.json";
  CHECK_THROWS_AS(load_data(from_disk), ConfigError);
  from_disk.dataset = dir / "nope";
  CHECK_THROWS_AS(load_data(from_disk), ConfigError);
}
