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
#include "covrnn/controller.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "covrnn/errors.h"
#include "covrnn/persistence.h"
#include "fixtures.h"

namespace covrnn {
namespace {

CoverageSnapshot small_universe() {
  CoverageSnapshot s;
  s.add_metric("functional", 10);
  s.add_metric("statement", 4);
  s.add_metric("branch", 2);
  return s;
}

// Every program hits every bin.
class SaturatingOracle final : public CoverageOracle {
 public:
  CoverageSnapshot universe() const override { return small_universe(); }
  CoverageSnapshot evaluate(const Program&) const override {
    CoverageSnapshot s = small_universe();
    for (const auto& [name, bins] : s.metrics()) {
      for (std::size_t i = 0; i < bins.total(); ++i) s.metric(name).hit(i);
    }
    return s;
  }
};

// Every program hits the same single bin.
class StuckOracle final : public CoverageOracle {
 public:
  CoverageSnapshot universe() const override { return small_universe(); }
  CoverageSnapshot evaluate(const Program&) const override {
    calls_++;
    CoverageSnapshot s = small_universe();
    s.metric("functional").hit(0);
    return s;
  }
  int calls() const { return calls_; }

 private:
  mutable std::atomic<int> calls_{0};
};

class ControllerTest : public ::testing::Test {
 protected:
  ControllerTest() : graph_(parse_isa(bundled_isa_text())), oracle_(graph_, 1000) {}

  CampaignConfig config(CampaignMode mode, std::int64_t max_time, std::uint64_t seed = 1) const {
    CampaignConfig c;
    c.mode = mode;
    c.max_time = max_time;
    c.seed = seed;
    return c;
  }

  IsaGraph graph_;
  DuvOracle oracle_;
};

std::vector<double> initial_state(const IsaGraph& g, std::uint64_t seed) {
  return init_state(g.neuron_count(),
                    derive_seed(seed, {static_cast<std::uint64_t>(Stream::kInitState)}));
}

TEST_F(ControllerTest, SaturatingOracleClosesImmediately) {
  SaturatingOracle oracle;
  for (bool bootstrap : {true, false}) {
    auto c = config(CampaignMode::kOnTheFly, 100);
    c.bootstrap = bootstrap;
    auto r = run_on_the_fly(graph_, oracle, c);
    EXPECT_EQ(r.termination, Termination::kClosure);
    ASSERT_EQ(r.steps.size(), 1u);
    EXPECT_TRUE(r.steps[0].accepted);
    EXPECT_EQ(r.final_energy(), 0.0);
  }
}

TEST_F(ControllerTest, StuckOracleFillsTabu) {
  StuckOracle oracle;
  auto c = config(CampaignMode::kOnTheFly, 1000);
  auto r = run_on_the_fly(graph_, oracle, c);
  EXPECT_EQ(r.termination, Termination::kLocalMinimum);
  const std::size_t n = graph_.neuron_count();
  ASSERT_EQ(r.steps.size(), n + 1);  // bootstrap row + one rejection per neuron
  std::vector<int> seen(n, 0);
  for (std::size_t i = 1; i < r.steps.size(); ++i) {
    EXPECT_FALSE(r.steps[i].accepted);
    ++seen[static_cast<std::size_t>(r.steps[i].neuron)];
  }
  for (int s : seen) EXPECT_EQ(s, 1);
  EXPECT_EQ(oracle.calls(), static_cast<int>(n + 1));
  // Every activation was reverted.
  EXPECT_EQ(r.final_state, initial_state(graph_, 1));
}

TEST_F(ControllerTest, StuckOracleWithoutBootstrap) {
  StuckOracle oracle;
  auto c = config(CampaignMode::kOnTheFly, 1000);
  c.bootstrap = false;
  auto r = run_on_the_fly(graph_, oracle, c);
  // The first program adds its bin; after that nothing is new.
  EXPECT_EQ(r.termination, Termination::kLocalMinimum);
  EXPECT_EQ(r.steps.size(), graph_.neuron_count() + 1);
  EXPECT_TRUE(r.steps[0].accepted);
}

TEST_F(ControllerTest, BudgetEndingWithFullTabuIsLocalMinimum) {
  StuckOracle oracle;
  auto c = config(CampaignMode::kOnTheFly, static_cast<std::int64_t>(graph_.neuron_count()));
  auto r = run_on_the_fly(graph_, oracle, c);
  EXPECT_EQ(r.termination, Termination::kLocalMinimum);
  c.max_time -= 1;
  EXPECT_EQ(run_on_the_fly(graph_, oracle, c).termination, Termination::kBudget);
}

TEST_F(ControllerTest, AcceptedEnergyStrictlyDecreases) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto r = run_on_the_fly(graph_, oracle_, config(CampaignMode::kOnTheFly, 300, seed));
    double prev = INFINITY;
    std::map<std::string, double> prev_cov;
    for (const auto& s : r.steps) {
      if (s.accepted) {
        EXPECT_LT(s.energy, prev);
        prev = s.energy;
      } else {
        EXPECT_EQ(s.energy, prev);
      }
      for (const auto& [m, pct] : s.coverage) EXPECT_GE(pct, prev_cov[m]);
      prev_cov = s.coverage;
    }
  }
}

TEST_F(ControllerTest, StochasticAcceptanceNeverRaisesEnergy) {
  auto c = config(CampaignMode::kOnTheFly, 300, 4);
  c.stochastic_activation = true;
  c.epsilon0 = 0.5;
  c.alpha = 0.999;
  auto r = run_on_the_fly(graph_, oracle_, c);
  double prev = INFINITY;
  int flat_accepts = 0;
  for (const auto& s : r.steps) {
    EXPECT_LE(s.energy, prev);
    if (s.accepted && s.energy == prev) ++flat_accepts;
    prev = s.energy;
  }
  EXPECT_GT(flat_accepts, 0);
}

// Re-applies only the accepted activations to a fresh network.
std::vector<double> replay_accepted(const IsaGraph& g, const CampaignResult& r,
                                    const CampaignConfig& c) {
  Network net(acyclic_graph_weights(g.pairs()), initial_state(g, c.seed), c.lambda);
  for (const auto& s : r.steps) {
    if (s.accepted && s.neuron >= 0) net.activate(static_cast<std::size_t>(s.neuron));
  }
  return {net.state().begin(), net.state().end()};
}

TEST_F(ControllerTest, RejectedActivationsAreReverted) {
  for (std::uint64_t seed : {5u, 6u}) {
    auto c = config(CampaignMode::kOnTheFly, 400, seed);
    auto r = run_on_the_fly(graph_, oracle_, c);
    ASSERT_GT(std::count_if(r.steps.begin(), r.steps.end(), [](auto& s) { return !s.accepted; }), 0);
    EXPECT_EQ(r.final_state, replay_accepted(graph_, r, c));
  }
}

TEST_F(ControllerTest, CommittedProgramsReproduceCoverage) {
  auto c = config(CampaignMode::kOnTheFly, 200, 7);
  auto r = run_on_the_fly(graph_, oracle_, c);
  std::vector<Program> programs;
  for (const auto& cp : r.committed) programs.push_back(cp.program);
  EXPECT_EQ(replay(oracle_, programs).percentages(), r.final_coverage().percentages());
  EXPECT_EQ(r.db.replay_history().percentages(), r.final_coverage().percentages());
}

TEST_F(ControllerTest, OnTheFlyIsReproducible) {
  auto c = config(CampaignMode::kOnTheFly, 150, 9);
  auto a = campaign_log_csv(run_on_the_fly(graph_, oracle_, c));
  auto b = campaign_log_csv(run_on_the_fly(graph_, oracle_, c));
  EXPECT_EQ(strip_wall_time(a), strip_wall_time(b));
  c.seed = 10;
  EXPECT_NE(strip_wall_time(a), strip_wall_time(campaign_log_csv(run_on_the_fly(graph_, oracle_, c))));
}

TEST_F(ControllerTest, GoldenCampaignLog) {
  auto c = config(CampaignMode::kOnTheFly, 60, 3);
  std::string log = strip_wall_time(campaign_log_csv(run_on_the_fly(graph_, oracle_, c)));
  const auto path = testing::test_data("golden_campaign.csv");
  if (std::getenv("COVRNN_UPDATE_GOLDEN") != nullptr) std::ofstream(path, std::ios::binary) << log;
  std::ifstream in(path, std::ios::binary);
  ASSERT_TRUE(in) << path;
  std::stringstream golden;
  golden << in.rdbuf();
  EXPECT_EQ(log, golden.str());
}

TEST_F(ControllerTest, OptimalSetSuiteReplays) {
  for (std::uint64_t seed : {1u, 2u}) {
    auto c = config(CampaignMode::kOptimalSet, 40, seed);
    auto r = run_optimal_set(graph_, oracle_, c);
    std::size_t epochs = 0;
    for (const auto& s : r.steps) epochs += (s.accepted && s.neuron >= 0);
    EXPECT_EQ(r.suite.size(), epochs + 1);
    auto replayed = replay(oracle_, r.suite);
    EXPECT_EQ(replayed.percentages(), r.final_coverage().percentages());
    for (const auto& [name, bins] : replayed.metrics()) {
      for (std::size_t i = 0; i < bins.total(); ++i) {
        EXPECT_EQ(bins.is_hit(i), r.final_coverage().metric(name).is_hit(i));
      }
    }
  }
}

TEST_F(ControllerTest, OptimalSetEpochStructure) {
  auto c = config(CampaignMode::kOptimalSet, 5, 3);
  auto r = run_optimal_set(graph_, oracle_, c);
  ASSERT_EQ(r.steps.size(), c.best_prog_runs + 5 * c.max_epoch_length);
  for (std::size_t e = 0; e < 5; ++e) {
    std::set<std::int64_t> neurons;
    int accepted = 0;
    for (std::size_t k = 0; k < c.max_epoch_length; ++k) {
      const auto& s = r.steps[c.best_prog_runs + e * c.max_epoch_length + k];
      neurons.insert(s.neuron);
      accepted += s.accepted;
    }
    EXPECT_EQ(neurons.size(), c.max_epoch_length);
    EXPECT_EQ(accepted, 1);
  }
  EXPECT_EQ(r.programs_generated, r.steps.size());
}

TEST_F(ControllerTest, OptimalSetTieGoesToFirstTrial) {
  StuckOracle oracle;
  auto c = config(CampaignMode::kOptimalSet, 3, 2);
  auto r = run_optimal_set(graph_, oracle, c);
  EXPECT_EQ(r.suite.size(), 1u + 3u);
  EXPECT_TRUE(r.steps[0].accepted);  // first bootstrap run
  for (std::size_t e = 0; e < 3; ++e) {
    EXPECT_TRUE(r.steps[c.best_prog_runs + e * c.max_epoch_length].accepted);
  }
}

TEST_F(ControllerTest, OptimalSetSingleNeuron) {
  IsaGraph tiny = parse_isa("set isa { NOP }\nelement NOP\n");
  StuckOracle oracle;
  auto c = config(CampaignMode::kOptimalSet, 4, 2);
  c.bootstrap = false;
  auto r = run_optimal_set(tiny, oracle, c);
  ASSERT_EQ(r.steps.size(), 4u);
  for (const auto& s : r.steps) {
    EXPECT_EQ(s.neuron, 0);
    EXPECT_TRUE(s.accepted);
  }
  EXPECT_EQ(r.suite.size(), 4u);
}

TEST_F(ControllerTest, SerialAndParallelAgree) {
  auto c = config(CampaignMode::kOptimalSet, 15, 4);
  c.threads = 1;
  auto serial = run_optimal_set(graph_, oracle_, c);
  c.threads = 8;
  auto parallel = run_optimal_set(graph_, oracle_, c);
  EXPECT_EQ(strip_wall_time(campaign_log_csv(serial)), strip_wall_time(campaign_log_csv(parallel)));
  ASSERT_EQ(serial.suite.size(), parallel.suite.size());
  for (std::size_t i = 0; i < serial.suite.size(); ++i) {
    EXPECT_EQ(serialize(serial.suite[i]), serialize(parallel.suite[i]));
  }
  EXPECT_EQ(serial.final_state, parallel.final_state);
}

TEST_F(ControllerTest, BaselineCurve) {
  auto c = config(CampaignMode::kBaseline, 50, 11);
  auto a = run_baseline(graph_, oracle_, c);
  auto b = run_baseline(graph_, oracle_, c);
  EXPECT_EQ(strip_wall_time(campaign_log_csv(a)), strip_wall_time(campaign_log_csv(b)));
  ASSERT_EQ(a.steps.size(), 50u);
  EXPECT_EQ(a.committed.size(), 50u);
  for (std::size_t i = 1; i < a.steps.size(); ++i) {
    EXPECT_LE(a.steps[i].energy, a.steps[i - 1].energy);
    EXPECT_EQ(a.steps[i].programs, i + 1);
  }
}

TEST_F(ControllerTest, ModeMismatchAndValidation) {
  auto c = config(CampaignMode::kBaseline, 5);
  EXPECT_THROW(run_on_the_fly(graph_, oracle_, c), ConfigError);
  EXPECT_THROW(run_optimal_set(graph_, oracle_, c), ConfigError);
  c.mode = CampaignMode::kOnTheFly;
  EXPECT_THROW(run_baseline(graph_, oracle_, c), ConfigError);
  EXPECT_NO_THROW(run_campaign(graph_, oracle_, c));
  auto bad = c;
  bad.max_time = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.alpha = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.epsilon0 = 1.5;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.max_epoch_length = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.goals["functional"] = 120;
  EXPECT_THROW(bad.validate(), ConfigError);
  EXPECT_THROW(parse_mode("sideways"), ConfigError);
  EXPECT_EQ(parse_mode("on-the-fly"), CampaignMode::kOnTheFly);
}

TEST(StochasticAccept, Schedule) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) EXPECT_FALSE(stochastic_accept(i, 0.0, 0.99, rng));
  for (int i = 0; i < 1000; ++i) EXPECT_TRUE(stochastic_accept(i, 1.0, 1.0, rng));
  EXPECT_NEAR(acceptance_probability(100, 0.1, 0.99), 0.0366, 5e-5);
  constexpr int kDraws = 100000;
  int accepted = 0;
  for (int i = 0; i < kDraws; ++i) accepted += stochastic_accept(100, 0.1, 0.99, rng);
  const double p = 0.1 * std::pow(0.99, 100);
  const double sigma = std::sqrt(p * (1 - p) / kDraws);
  EXPECT_NEAR(accepted / double(kDraws), p, 5 * sigma);
}

TEST_F(ControllerTest, ReplayIsOrderIndependent) {
  auto c = config(CampaignMode::kOptimalSet, 20, 6);
  auto r = run_optimal_set(graph_, oracle_, c);
  auto expected = replay(oracle_, r.suite).percentages();
  std::mt19937_64 rng(6);
  auto suite = r.suite;
  for (int k = 0; k < 10; ++k) {
    std::shuffle(suite.begin(), suite.end(), rng);
    EXPECT_EQ(replay(oracle_, suite).percentages(), expected);
  }
  std::vector<Program> empty;
  for (const auto& [m, pct] : replay(oracle_, empty).percentages()) EXPECT_EQ(pct, 0.0);
}

TEST_F(ControllerTest, ProgramsToReach) {
  auto c = config(CampaignMode::kBaseline, 30, 2);
  auto r = run_baseline(graph_, oracle_, c);
  auto at = programs_to_reach(r, "functional", r.steps[9].coverage.at("functional"));
  ASSERT_TRUE(at.has_value());
  EXPECT_LE(*at, 10u);
  EXPECT_FALSE(programs_to_reach(r, "functional", 100.1).has_value());
  EXPECT_EQ(programs_to_reach(r, {{"functional", 0.0}, {"branch", 0.0}}), 1u);
}

TEST(ResolveThreads, EnvironmentCap) {
  ::setenv("COVRNN_THREADS", "2", 1);
  EXPECT_EQ(resolve_threads(8), 2u);
  EXPECT_EQ(resolve_threads(1), 1u);
  ::unsetenv("COVRNN_THREADS");
  EXPECT_EQ(resolve_threads(3), 3u);
  EXPECT_GE(resolve_threads(0), 1u);
}

}  // namespace
}  // namespace covrnn
