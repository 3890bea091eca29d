// Copyright 2026 The Nightlights Authors.
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

#include "pipeline.h"

#include <filesystem>

#include <gtest/gtest.h>

#include "test_util.h"

namespace nightlights::cli {
namespace {

int RunMain(std::vector<std::string> args) {
  args.insert(args.begin(), "nightlights");
  std::vector<char*> argv;
  for (std::string& a : args) argv.push_back(a.data());
  return Main(static_cast<int>(argv.size()), argv.data());
}

constexpr char kSmallConfig[] = R"(
# tiny world
[model]
kind = "forest"
n_trees = 10

[cv]
scheme = "block-buffered"
k = 3

[kriging]
window_deg = 5

[world]
min_lat = 0
max_lat = 4
min_lng = 0
max_lng = 4
n_centers = 12
country_rows = 2
country_cols = 2
residual.psill = 2
residual.range_km = 80
)";

TEST(Config, ParsesSectionsCommentsAndQuotes) {
  const Config c = Config::Parse(
      "top = 1\n# note\n[model]\nkind = \"linear\"  \nn_trees=5 # trailing\n"
      "[world]\nresidual.psill = 2\n",
      "inline");
  EXPECT_EQ(c.Get("run.top"), "1");
  EXPECT_EQ(c.Get("model.kind"), "linear");
  EXPECT_EQ(c.GetInt("model.n_trees", 0), 5);
  EXPECT_EQ(c.Get("world.residual.psill"), "2");
  EXPECT_EQ(c.Section("world").at("residual.psill"), "2");
  EXPECT_EQ(c.GetDouble("model.missing", 1.5), 1.5);
  EXPECT_FALSE(c.Get("model.missing").has_value());
  EXPECT_THROW(Config::Parse("[model\n", "bad"), ValidationError);
  EXPECT_THROW(Config::Parse("novalue\n", "bad"), ValidationError);
  EXPECT_THROW(Config::Load("/nonexistent/config.toml"), MissingInputError);
}

TEST(Config, AssignmentsOverride) {
  Config c = Config::Parse("[model]\nkind = forest\n", "x");
  c.SetAssignment("model.kind=linear");
  c.SetAssignment("cv.k = 4");
  EXPECT_EQ(c.Get("model.kind"), "linear");
  EXPECT_EQ(c.GetInt("cv.k", 0), 4);
  EXPECT_TRUE(c.GetBool("x.y", true));
  EXPECT_THROW(c.SetAssignment("nodot=1"), ValidationError);
  EXPECT_THROW(c.SetAssignment("model.kind"), ValidationError);
}

TEST(Config, ResolveValidates) {
  const PipelineConfig d = Resolve(Config{});
  EXPECT_EQ(d.paths.out, "out");
  EXPECT_EQ(d.level, 12);
  EXPECT_EQ(d.model.kind, ModelKind::kForest);
  EXPECT_EQ(d.folds.kind, FoldScheme::Kind::kBlockBuffered);
  EXPECT_THROW(d.RequireSeed("simulate"), ValidationError);
  for (const char* bad : {"model.kind=svm", "grid.level=11", "privacy.epsilon=-1",
                          "cv.k=1", "bogus.key=1", "model.colour=red", "map.source=sky",
                          "eval.p_value=z", "intervals.scheme=daily"}) {
    Config c;
    c.SetAssignment(bad);
    EXPECT_THROW(Resolve(c), ValidationError) << bad;
  }
  Config ok;
  ok.SetAssignment("run.seed=9");
  EXPECT_EQ(Resolve(ok).RequireSeed("train"), 9u);
}

TEST(Cli, ExitCodes) {
  TempDir dir;
  WriteFile(dir.File("bad.toml"), "[model]\nkind = svm\n");
  EXPECT_EQ(RunMain({"train", "--config", dir.File("bad.toml")}), 3);
  EXPECT_EQ(RunMain({"aggregate", "--seed", "1", "--out", dir.File("o"), "--set",
                     "paths.trips=" + dir.File("missing.csv")}),
            2);
  EXPECT_EQ(RunMain({"simulate", "--out", dir.File("o")}), 3);  // no seed
  EXPECT_EQ(RunMain({"no-such-command"}), 3);
  EXPECT_EQ(RunMain({"--config", dir.File("absent.toml"), "train"}), 2);
  EXPECT_EQ(RunMain({"--help"}), 0);
}

TEST(Cli, RunAllIsReproducible) {
  TempDir dir;
  WriteFile(dir.File("c.toml"), kSmallConfig);
  const std::string a = dir.File("a"), b = dir.File("b");
  ASSERT_EQ(RunMain({"run-all", "--config", dir.File("c.toml"), "--seed", "5", "--out", a}), 0);
  ASSERT_EQ(RunMain({"run-all", "--config", dir.File("c.toml"), "--seed", "5", "--out", b,
                     "--threads", "2"}),
            0);
  const std::string ma = ReadFile(a + "/manifest.csv");
  ASSERT_FALSE(ma.empty());
  EXPECT_EQ(ma, ReadFile(b + "/manifest.csv"));
  for (const char* f : {"flows.csv", "features.csv", "cell_light.csv", "cell_regions.csv",
                        "predictions.csv", "rk_cv.csv", "predicted.lgrid", "diff.png",
                        "gdp_correlation.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(a + "/" + f)) << f;
    EXPECT_NE(ma.find(f), std::string::npos) << f;
  }
  EXPECT_EQ(Sha256File(a + "/flows.csv"), Sha256File(b + "/flows.csv"));
  WriteFile(dir.File("empty"), "");
  EXPECT_EQ(Sha256File(dir.File("empty")),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

}  // namespace
}  // namespace nightlights::cli
