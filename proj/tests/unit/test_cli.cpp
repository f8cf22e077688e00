// Copyright 2026 The semback Authors
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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(SEMBACK_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("command-line driver") {
  const fs::path dir = fs::temp_directory_path() / "semback-cli-test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path log = dir / "log.txt";
  const fs::path cfg = dir / "config.json";
  {
    std::ofstream out(cfg);
    out << R"({"task": {"dim": 4, "classes": 3, "ood_classes": 4, "train_per_class": 60,
               "val_per_class": 20, "test_per_class": 20, "min_separation": 0.3},
              "recipe": {"max_epochs": 20}})";
  }
  const std::string common = "--config " + cfg.string() + " --out " + (dir / "out").string();

  SUBCASE("usage errors exit with 1") {
    CHECK(run("", log) == 1);
    CHECK(run("no-such-command", log) == 1);
    CHECK(run("build-pool " + common, log) == 1);  // no seed
    CHECK(slurp(log).find("--seed") != std::string::npos);
    CHECK(run("build-pool --seed 1 --epsilon abc " + common, log) == 1);
  }
  SUBCASE("stats table") {
    CHECK(run("stats-table 28", log) == 0);
    const auto text = slurp(log);
    CHECK(text.find("24,0.71,0.000089996,0.40") != std::string::npos);
    CHECK(text.find("28,1.00,0.000000004,0.80") != std::string::npos);
  }
  SUBCASE("build-pool writes four models and a manifest") {
    REQUIRE(run("build-pool --seed 3 --pool-size 2 --epsilon none " + common, log) == 0);
    const fs::path pool = dir / "out" / "pools" / "plain";
    std::size_t models = 0;
    for (const auto& e : fs::directory_iterator(pool)) models += e.path().extension() == ".model";
    CHECK(models == 4);
    const auto manifest = nlohmann::json::parse(slurp(pool / "manifest.json"));
    CHECK(manifest["members"].size() == 4);
    const std::string first = slurp(pool / "manifest.json");
    REQUIRE(run("build-pool --seed 3 --pool-size 2 --epsilon none " + common, log) == 0);
    CHECK(slurp(log).find("trained 0 models") != std::string::npos);
    CHECK(slurp(pool / "manifest.json") == first);
  }
  SUBCASE("gen-set and make-task") {
    REQUIRE(run("make-task --seed 4 " + common, log) == 0);
    CHECK(fs::exists(dir / "out" / "task.csv"));
    CHECK(fs::exists(dir / "out" / "task.csv.meta.json"));
    CHECK(fs::exists(dir / "out" / "ood.csv"));
    REQUIRE(run("build-pool --seed 4 --pool-size 2 --epsilon none " + common, log) == 0);
    const auto model = dir / "out" / "pools" / "plain" / "clean-0.model";
    CHECK(run("gen-set --seed 4 --kind Adversarial --model " + model.string() + " --output " +
                  (dir / "adv.csv").string() + " " + common, log) == 0);
    CHECK(slurp(dir / "adv.csv").rfind("# semback-test-set kind=Adversarial", 0) == 0);
    CHECK(run("gen-set --seed 4 --kind Inverted " + common, log) == 1);  // model missing
  }
  fs::remove_all(dir);
}
