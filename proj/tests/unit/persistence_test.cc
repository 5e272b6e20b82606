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
#include "covrnn/persistence.h"

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "covrnn/errors.h"
#include "fixtures.h"

namespace covrnn {
namespace {

namespace fs = std::filesystem;
using ::covrnn::testing::ScratchDir;

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

TEST(RunConfig, RoundTrip) {
  RunConfig rc;
  rc.isa = "/data/some.isa";
  CampaignConfig& c = rc.campaign;
  c.mode = CampaignMode::kOptimalSet;
  c.weight_model = WeightModel::kBipolar;
  c.seed = 123456789012345ull;
  c.max_time = 77;
  c.max_epoch_length = 7;
  c.best_prog_runs = 3;
  c.bootstrap = false;
  c.stochastic_activation = true;
  c.epsilon0 = 0.25;
  c.alpha = 0.975;
  c.programs_per_eval = 2;
  c.program_length = 64;
  c.max_cycles = 999;
  c.lambda = 1.7;
  c.sign_carry = SignCarry::kResetPerRow;
  c.metric_weights["statement"] = 0.5;
  c.goals["functional"] = 90;

  RunConfig back = parse_run_config(format_run_config(rc));
  EXPECT_EQ(back.isa, rc.isa);
  const CampaignConfig& b = back.campaign;
  EXPECT_EQ(b.mode, c.mode);
  EXPECT_EQ(b.weight_model, c.weight_model);
  EXPECT_EQ(b.seed, c.seed);
  EXPECT_EQ(b.max_time, c.max_time);
  EXPECT_EQ(b.max_epoch_length, c.max_epoch_length);
  EXPECT_EQ(b.best_prog_runs, c.best_prog_runs);
  EXPECT_EQ(b.bootstrap, c.bootstrap);
  EXPECT_EQ(b.stochastic_activation, c.stochastic_activation);
  EXPECT_EQ(b.epsilon0, c.epsilon0);
  EXPECT_EQ(b.alpha, c.alpha);
  EXPECT_EQ(b.programs_per_eval, c.programs_per_eval);
  EXPECT_EQ(b.program_length, c.program_length);
  EXPECT_EQ(b.max_cycles, c.max_cycles);
  EXPECT_EQ(b.lambda, c.lambda);
  EXPECT_EQ(b.sign_carry, c.sign_carry);
  EXPECT_EQ(b.metric_weights, c.metric_weights);
  EXPECT_EQ(b.goals, c.goals);
  EXPECT_EQ(format_run_config(back), format_run_config(rc));
}

TEST(RunConfig, ParseDetails) {
  RunConfig base;
  base.campaign.seed = 5;
  RunConfig rc = parse_run_config("# comment\n\nmode = baseline  # trailing\nmax_time=12\n", base);
  EXPECT_EQ(rc.campaign.mode, CampaignMode::kBaseline);
  EXPECT_EQ(rc.campaign.max_time, 12);
  EXPECT_EQ(rc.campaign.seed, 5u);
  EXPECT_THROW(parse_run_config("colour = blue\n"), ConfigError);
  EXPECT_THROW(parse_run_config("max_time = lots\n"), ConfigError);
  EXPECT_THROW(parse_run_config("just words\n"), ConfigError);
  EXPECT_THROW(parse_run_config("mode = sideways\n"), ConfigError);
  EXPECT_THROW(parse_run_config("bootstrap = maybe\n"), ConfigError);
}

TEST(LoadIsa, BundledOrFile) {
  RunConfig rc;
  EXPECT_EQ(load_isa(rc).neuron_count(), 41u);
  rc.isa = testing::toy_isa_path();
  EXPECT_EQ(load_isa(rc).neuron_count(), 41u);
}

class RunTest : public ::testing::Test {
 protected:
  RunTest() : graph_(parse_isa(bundled_isa_text())), oracle_(graph_, 1000) {}

  CampaignResult run(CampaignMode mode, std::int64_t max_time, std::uint64_t seed) {
    RunConfig rc;
    rc.campaign.mode = mode;
    rc.campaign.max_time = max_time;
    rc.campaign.seed = seed;
    return run_campaign(graph_, oracle_, rc.campaign);
  }

  // Runs a campaign into `dir` the same way the command-line tool does.
  CampaignResult run_into(const fs::path& dir, CampaignMode mode, std::int64_t max_time,
                          std::uint64_t seed, std::size_t programs_per_eval = 1) {
    RunConfig rc;
    rc.campaign.mode = mode;
    rc.campaign.max_time = max_time;
    rc.campaign.seed = seed;
    rc.campaign.programs_per_eval = programs_per_eval;
    RunDirectory rd(dir);
    RunConfig snapshot = rd.prepare(rc, bundled_isa_text());
    CampaignResult result = run_campaign(graph_, oracle_, snapshot.campaign);
    rd.write_result(result, snapshot);
    return result;
  }

  IsaGraph graph_;
  DuvOracle oracle_;
};

TEST_F(RunTest, CampaignLogFormat) {
  auto result = run(CampaignMode::kOnTheFly, 30, 2);
  std::string csv = campaign_log_csv(result);
  auto ls = lines(csv);
  ASSERT_EQ(ls.size(), result.steps.size() + 1);
  EXPECT_EQ(ls[0], "step,neuron,accepted,energy,functional,statement,branch,wall_ms");
  auto rows = parse_campaign_log(csv);
  ASSERT_EQ(rows.size(), result.steps.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].step, result.steps[i].step);
    EXPECT_EQ(rows[i].neuron, result.steps[i].neuron);
    EXPECT_EQ(rows[i].accepted, result.steps[i].accepted);
    EXPECT_NEAR(rows[i].energy, result.steps[i].energy, 1e-6);
    EXPECT_NEAR(rows[i].functional, result.steps[i].coverage.at("functional"), 1e-6);
  }
  std::string stripped = strip_wall_time(csv);
  auto sl = lines(stripped);
  ASSERT_EQ(sl.size(), ls.size());
  EXPECT_EQ(sl[0], "step,neuron,accepted,energy,functional,statement,branch");
  for (std::size_t i = 1; i < sl.size(); ++i) EXPECT_EQ(sl[i], ls[i].substr(0, ls[i].rfind(',')));
}

TEST_F(RunTest, CoverageDbJsonRoundTrip) {
  auto result = run(CampaignMode::kOnTheFly, 40, 3);
  CoverageDb back = coverage_db_from_json(coverage_db_to_json(result.db));
  EXPECT_EQ(back.cumulative(), result.db.cumulative());
  ASSERT_EQ(back.history().size(), result.db.history().size());
  for (std::size_t i = 0; i < back.history().size(); ++i) {
    EXPECT_EQ(back.history()[i].step, result.db.history()[i].step);
    EXPECT_EQ(back.history()[i].added, result.db.history()[i].added);
  }
  EXPECT_THROW(coverage_db_from_json("{not json"), Error);
}

TEST_F(RunTest, RunDirectoryContents) {
  ScratchDir tmp("rundir");
  auto result = run_into(tmp.path() / "run", CampaignMode::kOptimalSet, 6, 4);
  RunDirectory rd(tmp.path() / "run");
  for (const auto& p : {rd.config_path(), rd.isa_path(), rd.log_path(), rd.network_log_path(),
                        rd.history_path(), rd.coverage_db_path(), rd.manifest_path(), rd.summary_path()}) {
    EXPECT_TRUE(fs::exists(p)) << p;
  }
  auto listed = read_manifest(rd.manifest_path());
  ASSERT_EQ(listed.size(), result.suite.size());
  for (const auto& p : listed) EXPECT_TRUE(fs::exists(p)) << p;
  auto suite = load_suite(rd.manifest_path());
  for (std::size_t i = 0; i < suite.size(); ++i) {
    EXPECT_EQ(serialize(suite[i]), serialize(result.suite[i]));
  }
  EXPECT_EQ(replay(oracle_, suite).percentages(), result.final_coverage().percentages());
  CoverageDb db = coverage_db_from_json(read_text(rd.coverage_db_path()));
  EXPECT_EQ(db.cumulative(), result.db.cumulative());
}

TEST_F(RunTest, RunDirectoryReproducesItself) {
  ScratchDir tmp("selfdesc");
  run_into(tmp.path() / "a", CampaignMode::kOnTheFly, 80, 12);
  RunDirectory rd(tmp.path() / "a");
  RunConfig stored = load_run_config(rd.config_path());
  EXPECT_EQ(stored.isa, fs::absolute(rd.isa_path()).lexically_normal());
  IsaGraph g = load_isa(stored);
  DuvOracle oracle(g, stored.campaign.effective_max_cycles());
  auto again = run_campaign(g, oracle, stored.campaign);
  EXPECT_EQ(strip_wall_time(campaign_log_csv(again)), strip_wall_time(read_text(rd.log_path())));
}

TEST_F(RunTest, ExportCurvesSingleRun) {
  ScratchDir tmp("curves1");
  run_into(tmp.path() / "solo", CampaignMode::kBaseline, 25, 1);
  std::vector<fs::path> runs = {tmp.path() / "solo"};
  auto ls = lines(export_curves(runs));
  ASSERT_EQ(ls.size(), 26u);
  EXPECT_EQ(ls[0], "programs,solo");
  auto rows = parse_campaign_log(read_text(RunDirectory(runs[0]).log_path()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(ls[i + 1], std::to_string(i + 1) + "," + format_decimal(rows[i].functional));
  }
}

TEST_F(RunTest, ExportCurvesPadsShorterRuns) {
  ScratchDir tmp("curves2");
  run_into(tmp.path() / "long", CampaignMode::kBaseline, 30, 1);
  run_into(tmp.path() / "short", CampaignMode::kBaseline, 10, 2);
  std::vector<fs::path> runs = {tmp.path() / "long", tmp.path() / "short"};
  auto ls = lines(export_curves(runs, "branch"));
  ASSERT_EQ(ls.size(), 31u);
  EXPECT_EQ(ls[0], "programs,long,short");
  auto short_rows = parse_campaign_log(read_text(RunDirectory(runs[1]).log_path()));
  const std::string last = format_decimal(short_rows.back().branch);
  for (std::size_t p = 10; p <= 30; ++p) {
    EXPECT_EQ(ls[p].substr(ls[p].rfind(',') + 1), last) << p;
  }
}

TEST_F(RunTest, ExportCurvesMatchHistory) {
  ScratchDir tmp("curves3");
  run_into(tmp.path() / "otf", CampaignMode::kOnTheFly, 60, 5, 2);
  std::vector<fs::path> runs = {tmp.path() / "otf"};
  RunDirectory rd(runs[0]);
  CoverageDb db = coverage_db_from_json(read_text(rd.coverage_db_path()));
  auto ls = lines(export_curves(runs));
  const std::size_t rows = parse_campaign_log(read_text(rd.log_path())).size();
  ASSERT_EQ(ls.size(), 2 * rows + 1);
  for (std::size_t p = 1; p <= 2 * rows; ++p) {
    // Row r (0-based) accounts for programs 2r+1 and 2r+2.
    const std::int64_t last_row = static_cast<std::int64_t>(p / 2) - 1;
    const double pct = last_row < 0 ? 0.0 : db.replay_history(last_row).percentage("functional");
    EXPECT_EQ(ls[p], std::to_string(p) + "," + format_decimal(pct)) << p;
  }
}

TEST_F(RunTest, ExportCurvesNeedsLogs) {
  ScratchDir tmp("curves4");
  std::vector<fs::path> runs = {tmp.path()};
  EXPECT_THROW(export_curves(runs), MissingLog);
}

TEST(FormatDecimal, FixedDigits) {
  EXPECT_EQ(format_decimal(12.5), "12.500000");
  EXPECT_EQ(format_decimal(1.0 / 3.0, 3), "0.333");
  EXPECT_EQ(format_decimal(-0.0), "0.000000");
}

TEST(Programs, FileRoundTrip) {
  ScratchDir tmp("prog");
  IsaGraph g = parse_isa(bundled_isa_text());
  Program p = generate_program(g, uniform_constraints(g), 30, 8);
  write_text(tmp.path() / "p.s", serialize(p));
  EXPECT_EQ(load_program(tmp.path() / "p.s").instructions, p.instructions);
  EXPECT_THROW(load_program(tmp.path() / "missing.s"), Error);
}

}  // namespace
}  // namespace covrnn
