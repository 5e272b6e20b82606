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
#ifndef COVRNN_CONTROLLER_H_
#define COVRNN_CONTROLLER_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "covrnn/duv.h"
#include "covrnn/energy.h"
#include "covrnn/isa_model.h"
#include "covrnn/prg.h"
#include "covrnn/rng.h"
#include "covrnn/rnn.h"

namespace covrnn {

enum class CampaignMode { kOnTheFly, kOptimalSet, kBaseline };
enum class WeightModel { kBipolar, kAcyclic };
enum class Termination { kClosure, kLocalMinimum, kBudget };

std::string_view to_string(CampaignMode mode);
std::string_view to_string(WeightModel model);
std::string_view to_string(Termination reason);
CampaignMode parse_mode(std::string_view text);
WeightModel parse_weight_model(std::string_view text);

struct CampaignConfig {
  CampaignMode mode = CampaignMode::kOnTheFly;
  /// Main-loop budget: steps for on-the-fly and baseline, epochs for the
  /// optimal-set search.
  std::int64_t max_time = 1000;
  std::size_t max_epoch_length = 20;
  std::size_t best_prog_runs = 10;
  /// Start from the default (uniform) generator configuration before the
  /// network takes over.
  bool bootstrap = true;
  bool stochastic_activation = false;
  double epsilon0 = 0.1;
  double alpha = 0.99;
  std::size_t programs_per_eval = 1;
  std::size_t program_length = 100;
  /// 0 selects duv::default_max_cycles(program_length).
  std::uint64_t max_cycles = 0;
  double lambda = 0.9;
  WeightModel weight_model = WeightModel::kAcyclic;
  SignCarry sign_carry = SignCarry::kCarried;
  MetricWeights metric_weights = default_metric_weights();
  CoverageGoals goals;
  std::uint64_t seed = 1;
  /// 0 picks the hardware concurrency; COVRNN_THREADS caps either.
  unsigned threads = 0;

  /// Throws ConfigError.
  void validate() const;
  std::uint64_t effective_max_cycles() const;
};

/// Anything that turns a program into coverage. Must be safe to call from
/// several threads at once.
class CoverageOracle {
 public:
  virtual ~CoverageOracle() = default;
  /// An empty snapshot describing the bin universe.
  virtual CoverageSnapshot universe() const = 0;
  virtual CoverageSnapshot evaluate(const Program& program) const = 0;
};

/// The bundled simulator as a coverage oracle.
class DuvOracle final : public CoverageOracle {
 public:
  DuvOracle(const IsaGraph& graph, std::uint64_t max_cycles)
      : model_(graph), max_cycles_(max_cycles) {}

  CoverageSnapshot universe() const override { return model_.empty_snapshot(); }
  CoverageSnapshot evaluate(const Program& program) const override {
    return duv::simulate(model_, program, max_cycles_);
  }
  const duv::CoverageModel& model() const { return model_; }

 private:
  duv::CoverageModel model_;
  std::uint64_t max_cycles_;
};

/// One evaluation (a bootstrap run, a step, or an epoch trial). Energy and
/// coverage are the committed cumulative values after the row.
struct StepRecord {
  std::int64_t step = 0;
  std::int64_t neuron = -1;
  bool accepted = false;
  double energy = 0.0;
  std::map<std::string, double> coverage;
  double wall_ms = 0.0;
  /// Programs generated so far, this row included.
  std::uint64_t programs = 0;
  double mean_output = 0.5;
};

struct CommittedProgram {
  std::int64_t step = 0;
  std::size_t index = 0;
  Program program;
};

struct CampaignResult {
  CampaignMode mode = CampaignMode::kOnTheFly;
  std::vector<StepRecord> steps;
  CoverageDb db;
  Termination termination = Termination::kBudget;
  /// Every program whose coverage was committed, in commit order.
  std::vector<CommittedProgram> committed;
  /// Regression suite (optimal-set mode only).
  std::vector<Program> suite;
  std::vector<double> final_state;
  std::uint64_t programs_generated = 0;

  const CoverageSnapshot& final_coverage() const { return db.cumulative(); }
  double final_energy() const { return steps.empty() ? 0.0 : steps.back().energy; }
};

/// Greedy on-the-fly optimisation with a tabu list: activate one random
/// non-tabu neuron, generate from the new constraints, keep the activation
/// if the cumulative energy strictly drops (or the stochastic schedule says
/// so), otherwise revert it and make the neuron tabu.
CampaignResult run_on_the_fly(const IsaGraph& graph, const CoverageOracle& oracle,
                              const CampaignConfig& config);

/// Epoch search for a small regression suite: each epoch evaluates up to
/// max_epoch_length single-neuron trials on copies of the network, then
/// commits the one with the largest energy drop and keeps its programs.
CampaignResult run_optimal_set(const IsaGraph& graph, const CoverageOracle& oracle,
                               const CampaignConfig& config);

/// Default generator only: uniform constraints, every program committed.
CampaignResult run_baseline(const IsaGraph& graph, const CoverageOracle& oracle,
                            const CampaignConfig& config);

/// Dispatches on config.mode.
CampaignResult run_campaign(const IsaGraph& graph, const CoverageOracle& oracle,
                            const CampaignConfig& config);

/// epsilon0 * alpha^t.
double acceptance_probability(std::int64_t t, double epsilon0, double alpha);

/// uniform(0,1) < epsilon0 * alpha^t.
bool stochastic_accept(std::int64_t t, double epsilon0, double alpha, Rng& rng);

/// Fresh database, every program simulated in order and committed.
CoverageSnapshot replay(const CoverageOracle& oracle, std::span<const Program> suite);

/// Programs generated when `metric` first reached `threshold` percent, if
/// it ever did.
std::optional<std::uint64_t> programs_to_reach(const CampaignResult& result,
                                               std::string_view metric, double threshold);

/// Programs generated when every listed metric first reached its level.
std::optional<std::uint64_t> programs_to_reach(const CampaignResult& result,
                                               const std::map<std::string, double>& levels);

/// Thread count after applying COVRNN_THREADS.
unsigned resolve_threads(unsigned requested);

}  // namespace covrnn

#endif  // COVRNN_CONTROLLER_H_
