// Copyright 2026 The RankOOD Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "test_util.hpp"

namespace fs = std::filesystem;
namespace testutil = rankood::testutil;

namespace {

// The binary under test arrives via the environment (set by ctest).
std::string cli_path() {
  const char* env = std::getenv("RANKOOD_CLI");
  REQUIRE_MESSAGE(env != nullptr, "RANKOOD_CLI is not set");
  return env;
}

int run(const std::string& args, const fs::path& stderr_file = {}) {
  std::string cmd = cli_path() + " " + args + " > /dev/null";
  cmd += stderr_file.empty() ? " 2>&1" : " 2> " + stderr_file.string();
  const int status = std::system(cmd.c_str());
  REQUIRE(status >= 0);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("exit codes and artifacts across the pipeline chain") {
  testutil::TempDir dir("cli_contract");
  const std::string out = " --out " + dir.path.string();

  // Validation failures exit 2 before touching the output tree.
  CHECK(run("synth --classes 2" + out) == 2);
  CHECK(run("synth --classes 5 --dim 8 --ood-mode sideways" + out) == 2);

  // The happy chain exits 0 at every stage.
  CHECK(run("synth --classes 4 --dim 8 --samples 24 --similarity 0.2 "
            "--seed 3" + out) == 0);
  CHECK(run("train-ce --epochs 4 --batch-size 12 --hidden 8 --seed 3" + out) ==
        0);
  CHECK(run("rpm" + out) == 0);
  CHECK(run("canon" + out) == 0);
  CHECK(run("train-rank --epochs 4 --batch-size 12 --hidden 8 --alpha 1.0 "
            "--seed 3" + out) == 0);
  CHECK(run("profile --percentile 0.9" + out) == 0);
  CHECK(run("score --gamma 1.5" + out) == 0);
  CHECK(run("eval" + out) == 0);

  // Every stage leaves its keystone artifact and a resolved config echo.
  const std::pair<const char*, const char*> artifacts[] = {
      {"data", "manifest.json"},   {"ce", "model/arch.json"},
      {"rpm", "index.json"},       {"canon", "canonical.json"},
      {"rank", "history.csv"},     {"profile", "profile.json"},
      {"score", "weights.json"},   {"eval", "reports.csv"},
  };
  for (const auto& [stage, file] : artifacts) {
    CHECK(fs::exists(dir.path / stage / file));
    CHECK(fs::exists(dir.path / stage / "config.json"));
  }
  CHECK(fs::exists(dir.path / "score" / "scores_test_id.csv"));
  CHECK(fs::exists(dir.path / "eval" / "report_rankood.json"));
  CHECK(fs::exists(dir.path / "eval" / "cp_rank_id.csv"));
  CHECK(fs::exists(dir.path / "eval" / "cp_ce_id.csv"));

  SUBCASE("missing upstream artifact exits 3 and names the producer") {
    fs::remove(dir.path / "canon" / "canonical.json");
    const fs::path log = dir.path / "stderr.txt";
    CHECK(run("profile" + out, log) == 3);
    const std::string message = testutil::slurp(log);
    CHECK(message.find("rankood canon") != std::string::npos);
  }

  SUBCASE("corrupted tensor fails its checksum and exits 3") {
    std::fstream f(dir.path / "data" / "train.rkod",
                   std::ios::binary | std::ios::in | std::ios::out);
    REQUIRE(f.seekg(40).good());
    const char byte = static_cast<char>(f.get() ^ 0xff);
    REQUIRE(f.seekp(40).good());
    f.put(byte);
    f.close();
    const fs::path log = dir.path / "stderr.txt";
    CHECK(run("train-ce --epochs 2" + out, log) == 3);
    const std::string message = testutil::slurp(log);
    CHECK(message.find("rankood synth") != std::string::npos);
    CHECK(message.find("checksum") != std::string::npos);
  }

  SUBCASE("diverging training exits 4") {
    CHECK(run("train-ce --epochs 3 --lr 1e9 --schedule constant" + out) == 4);
  }
}

TEST_CASE("config file supplies defaults and flags override it") {
  testutil::TempDir dir("cli_config");
  const fs::path cfg = dir.path / "cfg.json";
  testutil::spit(cfg, "{\"synth\": {\"classes\": 6, \"dim\": 9, "
                      "\"samples_per_class\": 16, \"seed\": 4}}\n");
  CHECK(run("synth --config " + cfg.string() + " --similarity 0.1 --out " +
            (dir.path / "run").string()) == 0);

  const std::string echoed =
      testutil::slurp(dir.path / "run" / "data" / "config.json");
  CHECK(echoed.find("\"classes\": 6") != std::string::npos);      // from file
  CHECK(echoed.find("\"dim\": 9") != std::string::npos);          // from file
  CHECK(echoed.find("\"class_similarity\": 0.1") != std::string::npos);

  CHECK(run("synth --config " + (dir.path / "absent.json").string()) == 2);
}

TEST_CASE("help exits 0, bad usage exits 2") {
  CHECK(run("--help") == 0);
  CHECK(run("synth --help") == 0);
  CHECK(run("") == 2);                        // a subcommand is required
  CHECK(run("synth --bogus-flag 1") == 2);
  CHECK(run("transmogrify") == 2);
}
