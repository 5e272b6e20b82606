// Copyright 2026 The covrnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "cli.h"

#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "covrnn/persistence.h"
#include "fixtures.h"

namespace covrnn {
namespace {

namespace fs = std::filesystem;
using ::covrnn::testing::ScratchDir;

struct Outcome {
  int status;
  std::string out;
  std::string err;
};

Outcome cli(std::vector<std::string> args) {
  args.insert(args.begin(), "covrnn");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int status = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {status, out.str(), err.str()};
}

std::map<std::string, std::string> metric_lines(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  for (std::string key, value; in >> key >> value;) {
    if (key == "functional" || key == "statement" || key == "branch") out[key] = value;
  }
  return out;
}

const std::string kIsa = testing::toy_isa_path().string();

TEST(Cli, BaselineHonoursBudget) {
  ScratchDir tmp("cli_base");
  const std::string dir = (tmp.path() / "runA").string();
  auto r = cli({"run", "--mode", "baseline", "--isa", kIsa, "--seed", "7", "--max-time", "50", "--out", dir});
  ASSERT_EQ(r.status, kExitOk) << r.err;
  auto rows = parse_campaign_log(read_text(RunDirectory(dir).log_path()));
  EXPECT_EQ(rows.size(), 50u);
  EXPECT_NE(r.out.find("termination budget"), std::string::npos) << r.out;
}

TEST(Cli, ReplayMatchesSummary) {
  ScratchDir tmp("cli_replay");
  const std::string dir = (tmp.path() / "runB").string();
  auto r = cli({"run", "--mode", "optimal_set", "--isa", kIsa, "--seed", "3", "--max-time", "8",
                "--epoch-len", "10", "--out", dir});
  ASSERT_EQ(r.status, kExitOk) << r.err;
  auto replayed = cli({"replay", "--suite", (fs::path(dir) / "suite.manifest").string()});
  ASSERT_EQ(replayed.status, kExitOk) << replayed.err;

  auto summary = nlohmann::json::parse(read_text(RunDirectory(dir).summary_path()));
  auto printed = metric_lines(replayed.out);
  ASSERT_EQ(printed.size(), 3u) << replayed.out;
  for (const auto& [metric, value] : printed) {
    EXPECT_EQ(value, format_decimal(summary.at("final_coverage").at(metric).get<double>())) << metric;
  }
  EXPECT_EQ(printed, metric_lines(r.out));
  EXPECT_NE(replayed.out.find("programs " + std::to_string(summary.at("suite_size").get<int>())),
            std::string::npos);
}

TEST(Cli, ConfigFileAndOverrides) {
  ScratchDir tmp("cli_cfg");
  write_text(tmp.path() / "c.cfg", "mode = baseline\nisa = " + kIsa + "\nmax_time = 5\nseed = 2\n");
  const std::string dir = (tmp.path() / "run").string();
  auto r = cli({"run", "--config", (tmp.path() / "c.cfg").string(), "--max-time", "7", "--out", dir});
  ASSERT_EQ(r.status, kExitOk) << r.err;
  RunConfig stored = load_run_config(RunDirectory(dir).config_path());
  EXPECT_EQ(stored.campaign.max_time, 7);
  EXPECT_EQ(stored.campaign.seed, 2u);
  EXPECT_EQ(parse_campaign_log(read_text(RunDirectory(dir).log_path())).size(), 7u);
}

TEST(Cli, LocalMinimumExitStatus) {
  // One-instruction programs exhaust what they can reach long before closure.
  ScratchDir tmp("cli_lm");
  auto r = cli({"run", "--mode", "on_the_fly", "--isa", kIsa, "--seed", "1", "--max-time", "5000",
                "--program-length", "1", "--out", (tmp.path() / "run").string()});
  EXPECT_EQ(r.status, kExitLocalMinimum) << r.out << r.err;
  EXPECT_NE(r.out.find("termination local_minimum"), std::string::npos);
}

TEST(Cli, UsageErrors) {
  ScratchDir tmp("cli_err");
  auto r = cli({"run", "--mode", "baseline", "--out", (tmp.path() / "x").string()});
  EXPECT_EQ(r.status, kExitError);
  EXPECT_FALSE(r.err.empty());
  EXPECT_EQ(cli({"run", "--isa", kIsa}).status, kExitError);
  EXPECT_EQ(cli({"frobnicate"}).status, kExitError);
  EXPECT_EQ(cli({"run", "--isa", kIsa, "--mode", "sideways", "--out", (tmp.path() / "y").string()}).status,
            kExitError);
  EXPECT_EQ(cli({"run", "--isa", "/nonexistent.isa", "--out", (tmp.path() / "z").string()}).status,
            kExitError);
}

TEST(Cli, SimulateAndBins) {
  ScratchDir tmp("cli_sim");
  write_text(tmp.path() / "p.s", "ADDI r1 r0 3\nNOP\n");
  auto r = cli({"simulate", (tmp.path() / "p.s").string(), "--isa", kIsa});
  ASSERT_EQ(r.status, kExitOk) << r.err;
  auto doc = nlohmann::json::parse(r.out);
  EXPECT_EQ(doc.at("cycles").get<int>(), 2);
  EXPECT_EQ(doc.at("halt").get<std::string>(), "end_of_program");
  EXPECT_EQ(doc.at("metrics").at("functional").at("total").get<int>(), 418);

  auto bins = cli({"bins", "--isa", kIsa});
  ASSERT_EQ(bins.status, kExitOk);
  EXPECT_NE(bins.out.find("# functional 418"), std::string::npos);
  EXPECT_NE(bins.out.find("branch,0,"), std::string::npos);
}

TEST(Cli, ExportWeights) {
  auto r = cli({"export-weights", "--isa", kIsa, "--model", "acyclic"});
  ASSERT_EQ(r.status, kExitOk) << r.err;
  std::istringstream in(r.out);
  int rows = 0;
  for (std::string l; std::getline(in, l);) ++rows;
  EXPECT_EQ(rows, 41);
  auto b = cli({"export-weights", "--isa", kIsa, "--model", "bipolar", "--neurons", "3"});
  EXPECT_EQ(b.out.substr(0, b.out.find('\n')), "0,1,-1");
}

TEST(Cli, ExportCurves) {
  ScratchDir tmp("cli_curves");
  const std::string a = (tmp.path() / "a").string();
  ASSERT_EQ(cli({"run", "--mode", "baseline", "--isa", kIsa, "--max-time", "12", "--out", a}).status, kExitOk);
  auto r = cli({"export-curves", a, "--metric", "statement"});
  ASSERT_EQ(r.status, kExitOk) << r.err;
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "programs,a");
  EXPECT_EQ(cli({"export-curves", (tmp.path() / "nothing").string()}).status, kExitError);
}

}  // namespace
}  // namespace covrnn
