// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "test_util.hpp"
#include "artflow/dataset.hpp"
#include "artflow/image_io.hpp"

using namespace artflow;
namespace fs = std::filesystem;

namespace {

// Exit status of the CLI; stdout and stderr land in `log`.
int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(ARTFLOW_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("argument errors exit nonzero with usage") {
  const auto dir = testing::temp_dir("cli_args");
  CHECK(run_cli("", dir / "a.log") != 0);
  CHECK(run_cli("--definitely-not-a-flag", dir / "b.log") != 0);
  CHECK(run_cli("train --bogus 3", dir / "c.log") != 0);
  CHECK(slurp(dir / "c.log").find("--bogus") != std::string::npos);
  CHECK(run_cli("eval --models " + (dir / "nope").string() + " --dataset " + dir.string(), dir / "d.log") != 0);
  CHECK(run_cli("--help", dir / "e.log") == 0);
  CHECK(slurp(dir / "e.log").find("reconstruct") != std::string::npos);
}

TEST_CASE("dataset, train, reconstruct and eval end to end") {
  const auto dir = testing::temp_dir("cli_e2e");
  WorkflowConfig cfg = testing::tiny_config();
  cfg.hyper.T = 2;
  save_config(cfg, dir / "config.json");
  const std::string config = " --config " + (dir / "config.json").string();

  REQUIRE(run_cli("dataset synth --count 6 --seed 3 --out " + (dir / "data").string() + config, dir / "synth.log") == 0);
  CHECK(run_cli("dataset validate --dataset " + (dir / "data").string(), dir / "validate.log") == 0);

  REQUIRE(run_cli("train --dataset " + (dir / "data").string() + config + " --out " + (dir / "run").string() +
                      " --seed 2 --inference-iters 1 --generation-iters 1 --regularizer-iters 1 --holdout 2",
                  dir / "train.log") == 0);
  CHECK(fs::exists(dir / "run" / "manifest.json"));

  const auto examples = load_dataset(dir / "data").examples;
  write_png(dir / "art.png", examples.back().images.back());
  REQUIRE(run_cli("reconstruct --models " + (dir / "run").string() + " --image " + (dir / "art.png").string() +
                      " --out " + (dir / "rec").string(),
                  dir / "rec.log") == 0);
  for (int k = 1; k <= 3; ++k) {
    CHECK(fs::exists(dir / "rec" / ("inferred_stage" + std::to_string(k) + ".png")));
    CHECK(fs::exists(dir / "rec" / ("reconstructed_stage" + std::to_string(k) + ".png")));
  }
  CHECK(fs::exists(dir / "rec" / "optstate_stage1.json"));
  CHECK(fs::exists(dir / "rec" / "optstate_stage2.json"));
  CHECK_FALSE(fs::exists(dir / "rec" / "optstate_stage3.json"));

  REQUIRE(run_cli("eval --models " + (dir / "run").string() + " --dataset " + (dir / "data").string() +
                      " --test-count 2 --modes none,adain,adain-lr --trials 1 --out " + (dir / "eval").string(),
                  dir / "eval.log") == 0);
  const std::string recon = slurp(dir / "eval" / "eval_reconstruction.csv");
  CHECK(recon.rfind("method,w_mode,l1,fid_mean,fid_std,n,seed\n", 0) == 0);
  CHECK(recon.find("AdaIN,LR,") != std::string::npos);
  CHECK(fs::exists(dir / "eval" / "eval_editing.csv"));

  CHECK(run_cli("eval --models " + (dir / "run").string() + " --dataset " + (dir / "data").string() +
                    " --modes warp --out " + (dir / "eval2").string(),
                dir / "eval2.log") != 0);
}
