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
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "covrnn/errors.h"

namespace covrnn {
namespace {

using Clock = std::chrono::steady_clock;

// Runs fn(0..count-1) on up to `threads` workers. Results must be written to
// per-index slots; ordering of execution is irrelevant.
template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mu);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

WeightMatrix build_weights(const IsaGraph& graph, const CampaignConfig& config) {
  switch (config.weight_model) {
    case WeightModel::kBipolar:
      return bipolar_weights(graph.neuron_count(), config.sign_carry);
    case WeightModel::kAcyclic:
      return acyclic_graph_weights(graph.pairs(), config.sign_carry);
  }
  throw ConfigError("unknown weight model");
}

Network initial_network(const IsaGraph& graph, const CampaignConfig& config) {
  return Network(build_weights(graph, config),
                 init_state(graph.neuron_count(),
                            derive_seed(config.seed, {static_cast<std::uint64_t>(Stream::kInitState)})),
                 config.lambda);
}

struct Evaluation {
  std::vector<Program> programs;
  CoverageSnapshot coverage;
};

// Generates programs_per_eval programs (seeds from `seed_of`) and unions their
// coverage.
template <typename SeedFn>
Evaluation evaluate(const IsaGraph& graph, const CoverageOracle& oracle,
                    const CampaignConfig& config, const ConstraintSet& constraints,
                    std::uint64_t state_hash, SeedFn seed_of) {
  Evaluation ev{{}, oracle.universe()};
  ev.programs.reserve(config.programs_per_eval);
  for (std::size_t j = 0; j < config.programs_per_eval; ++j) {
    Program p = generate_program(graph, constraints, config.program_length, seed_of(j));
    p.state_hash = state_hash;
    ev.coverage.merge(oracle.evaluate(p));
    ev.programs.push_back(std::move(p));
  }
  return ev;
}

std::uint64_t u64(std::int64_t v) { return static_cast<std::uint64_t>(v); }

class Recorder {
 public:
  Recorder(CampaignResult& result, const CampaignConfig& config)
      : result_(result), config_(config), start_(Clock::now()) {}

  void row(std::int64_t neuron, bool accepted, double energy, double mean) {
    StepRecord r;
    r.step = static_cast<std::int64_t>(result_.steps.size());
    r.neuron = neuron;
    r.accepted = accepted;
    r.energy = energy;
    r.coverage = result_.db.cumulative().percentages();
    r.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start_).count();
    result_.programs_generated += config_.programs_per_eval;
    r.programs = result_.programs_generated;
    r.mean_output = mean;
    result_.steps.push_back(std::move(r));
  }

  std::int64_t next_step() const { return static_cast<std::int64_t>(result_.steps.size()); }

  // `source` is the row that generated the programs; the coverage becomes
  // visible in the row about to be recorded.
  void commit(Evaluation& ev, std::int64_t source) {
    result_.db.commit(ev.coverage, next_step());
    for (std::size_t k = 0; k < ev.programs.size(); ++k) {
      result_.committed.push_back({source, k, ev.programs[k]});
    }
  }

 private:
  CampaignResult& result_;
  const CampaignConfig& config_;
  Clock::time_point start_;
};

void require_mode(const CampaignConfig& config, CampaignMode mode) {
  config.validate();
  if (config.mode != mode) {
    throw ConfigError("campaign configured for mode '" + std::string(to_string(config.mode)) +
                      "' but run as '" + std::string(to_string(mode)) + "'");
  }
}

}  // namespace

std::string_view to_string(CampaignMode mode) {
  switch (mode) {
    case CampaignMode::kOnTheFly:
      return "on_the_fly";
    case CampaignMode::kOptimalSet:
      return "optimal_set";
    case CampaignMode::kBaseline:
      return "baseline";
  }
  return "?";
}

std::string_view to_string(WeightModel model) {
  return model == WeightModel::kBipolar ? "bipolar" : "acyclic";
}

std::string_view to_string(Termination reason) {
  switch (reason) {
    case Termination::kClosure:
      return "closure";
    case Termination::kLocalMinimum:
      return "local_minimum";
    case Termination::kBudget:
      return "budget";
  }
  return "?";
}

CampaignMode parse_mode(std::string_view text) {
  if (text == "on_the_fly" || text == "on-the-fly") return CampaignMode::kOnTheFly;
  if (text == "optimal_set" || text == "optimal-set") return CampaignMode::kOptimalSet;
  if (text == "baseline") return CampaignMode::kBaseline;
  throw ConfigError("unknown mode '" + std::string(text) + "'");
}

WeightModel parse_weight_model(std::string_view text) {
  if (text == "bipolar") return WeightModel::kBipolar;
  if (text == "acyclic") return WeightModel::kAcyclic;
  throw ConfigError("unknown weight model '" + std::string(text) + "'");
}

void CampaignConfig::validate() const {
  if (max_time < 1) throw ConfigError("max_time must be at least 1");
  if (max_epoch_length < 1) throw ConfigError("max_epoch_length must be at least 1");
  if (!(epsilon0 >= 0.0 && epsilon0 <= 1.0)) throw ConfigError("epsilon0 must lie in [0, 1]");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
  if (programs_per_eval < 1) throw ConfigError("programs_per_eval must be at least 1");
  if (program_length < 1) throw ConfigError("program_length must be at least 1");
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  validate_weights(metric_weights);
  for (const auto& [metric, goal] : goals) {
    if (!(goal >= 0.0 && goal <= 100.0)) throw ConfigError("goal for '" + metric + "' outside [0, 100]");
  }
}

std::uint64_t CampaignConfig::effective_max_cycles() const {
  return max_cycles != 0 ? max_cycles : duv::default_max_cycles(program_length);
}

double acceptance_probability(std::int64_t t, double epsilon0, double alpha) {
  return epsilon0 * std::pow(alpha, static_cast<double>(t));
}

bool stochastic_accept(std::int64_t t, double epsilon0, double alpha, Rng& rng) {
  return rng.uniform() < acceptance_probability(t, epsilon0, alpha);
}

unsigned resolve_threads(unsigned requested) {
  unsigned n = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("COVRNN_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return n;
}

CampaignResult run_on_the_fly(const IsaGraph& graph, const CoverageOracle& oracle,
                              const CampaignConfig& config) {
  require_mode(config, CampaignMode::kOnTheFly);
  const std::size_t n = graph.neuron_count();
  const auto& pairs = graph.pairs();

  CampaignResult result;
  result.mode = config.mode;
  result.db = CoverageDb(oracle.universe());
  Recorder rec(result, config);
  Network net = initial_network(graph, config);
  double current = energy(result.db.cumulative(), config.metric_weights);

  auto closed = [&] {
    return closure_reached(result.db.cumulative(), config.metric_weights, config.goals);
  };

  if (config.bootstrap) {
    const ConstraintSet defaults = uniform_constraints(graph);
    Evaluation ev = evaluate(graph, oracle, config, defaults, 0, [&](std::size_t j) {
      return derive_seed(config.seed, {u64(static_cast<std::int64_t>(Stream::kBootstrap)), 0, j});
    });
    rec.commit(ev, rec.next_step());
    current = energy(result.db.cumulative(), config.metric_weights);
    rec.row(-1, true, current, mean_output(net.state()));
  }

  Rng select(derive_seed(config.seed, {static_cast<std::uint64_t>(Stream::kSelect)}));
  Rng accept_rng(derive_seed(config.seed, {static_cast<std::uint64_t>(Stream::kAccept)}));
  std::vector<bool> tabu(n, false);
  std::size_t tabu_count = 0;
  std::vector<std::size_t> candidates;
  candidates.reserve(n);

  result.termination = Termination::kBudget;
  if (closed()) {
    result.termination = Termination::kClosure;
  } else {
    for (std::int64_t t = 0; t < config.max_time; ++t) {
      if (tabu_count == n) {
        result.termination = Termination::kLocalMinimum;
        break;
      }
      candidates.clear();
      for (std::size_t i = 0; i < n; ++i) {
        if (!tabu[i]) candidates.push_back(i);
      }
      const std::size_t neuron = candidates[select.below(candidates.size())];
      const double previous = net.output(neuron);
      net.activate(neuron);

      const std::int64_t step = rec.next_step();
      const ConstraintSet constraints = state_to_constraints(net.state(), pairs);
      Evaluation ev = evaluate(graph, oracle, config, constraints, hash_state(net.state()),
                               [&](std::size_t j) {
                                 return derive_seed(config.seed,
                                                    {static_cast<std::uint64_t>(Stream::kProgram),
                                                     u64(step), j});
                               });
      const double candidate =
          energy(result.db.merge_preview(ev.coverage), config.metric_weights);

      bool accepted = candidate < current;
      if (!accepted && config.stochastic_activation) {
        accepted = stochastic_accept(t, config.epsilon0, config.alpha, accept_rng);
      }
      if (accepted) {
        rec.commit(ev, step);
        current = candidate;
        std::fill(tabu.begin(), tabu.end(), false);
        tabu_count = 0;
      } else {
        net.restore(neuron, previous);
        if (!tabu[neuron]) {
          tabu[neuron] = true;
          ++tabu_count;
        }
      }
      rec.row(static_cast<std::int64_t>(neuron), accepted, current, mean_output(net.state()));
      if (accepted && closed()) {
        result.termination = Termination::kClosure;
        break;
      }
    }
    if (result.termination == Termination::kBudget && tabu_count == n) {
      result.termination = Termination::kLocalMinimum;
    }
  }
  result.final_state.assign(net.state().begin(), net.state().end());
  return result;
}

CampaignResult run_optimal_set(const IsaGraph& graph, const CoverageOracle& oracle,
                               const CampaignConfig& config) {
  require_mode(config, CampaignMode::kOptimalSet);
  const std::size_t n = graph.neuron_count();
  const auto& pairs = graph.pairs();
  const unsigned threads = resolve_threads(config.threads);

  CampaignResult result;
  result.mode = config.mode;
  result.db = CoverageDb(oracle.universe());
  Recorder rec(result, config);
  Network net = initial_network(graph, config);
  double current = energy(result.db.cumulative(), config.metric_weights);

  auto closed = [&] {
    return closure_reached(result.db.cumulative(), config.metric_weights, config.goals);
  };

  // Picks the evaluation with the lowest candidate energy (largest drop);
  // ties go to the earliest index.
  auto best_of = [&](const std::vector<double>& energies) {
    return static_cast<std::size_t>(
        std::min_element(energies.begin(), energies.end()) - energies.begin());
  };

  if (config.bootstrap && config.best_prog_runs > 0) {
    const ConstraintSet defaults = uniform_constraints(graph);
    std::vector<Evaluation> runs(config.best_prog_runs);
    std::vector<double> energies(runs.size());
    parallel_for(runs.size(), threads, [&](std::size_t r) {
      runs[r] = evaluate(graph, oracle, config, defaults, 0, [&](std::size_t j) {
        return derive_seed(config.seed, {static_cast<std::uint64_t>(Stream::kBootstrap), r, j});
      });
      energies[r] = energy(result.db.merge_preview(runs[r].coverage), config.metric_weights);
    });
    const std::size_t best = best_of(energies);
    const std::int64_t first = rec.next_step();
    for (std::size_t r = 0; r < runs.size(); ++r) {
      if (r + 1 == runs.size()) {
        rec.commit(runs[best], first + static_cast<std::int64_t>(best));
        current = energy(result.db.cumulative(), config.metric_weights);
      }
      rec.row(-1, r == best, current, mean_output(net.state()));
    }
    for (const Program& p : runs[best].programs) result.suite.push_back(p);
  }

  const std::size_t epoch_length = std::min(config.max_epoch_length, n);
  Rng select(derive_seed(config.seed, {static_cast<std::uint64_t>(Stream::kSelect)}));
  std::vector<std::size_t> order(n);

  result.termination = Termination::kBudget;
  std::int64_t t = 0;
  while (true) {
    if (closed()) {
      result.termination = Termination::kClosure;
      break;
    }
    if (t >= config.max_time) break;

    // Distinct neurons for this epoch: partial Fisher-Yates.
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t k = 0; k < epoch_length; ++k) {
      const std::size_t j = k + select.below(n - k);
      std::swap(order[k], order[j]);
    }

    std::vector<Evaluation> trials(epoch_length);
    std::vector<double> energies(epoch_length);
    parallel_for(epoch_length, threads, [&](std::size_t k) {
      Network trial = net;
      trial.activate(order[k]);
      const ConstraintSet constraints = state_to_constraints(trial.state(), pairs);
      trials[k] = evaluate(graph, oracle, config, constraints, hash_state(trial.state()),
                           [&](std::size_t j) {
                             return derive_seed(config.seed,
                                                {static_cast<std::uint64_t>(Stream::kProgram),
                                                 u64(t), k * config.programs_per_eval + j});
                           });
      energies[k] = energy(result.db.merge_preview(trials[k].coverage), config.metric_weights);
    });

    const std::size_t best = best_of(energies);
    const std::int64_t first = rec.next_step();
    for (std::size_t k = 0; k < epoch_length; ++k) {
      if (k + 1 == epoch_length) {
        net.activate(order[best]);
        rec.commit(trials[best], first + static_cast<std::int64_t>(best));
        current = energies[best];
      }
      rec.row(static_cast<std::int64_t>(order[k]), k == best, current, mean_output(net.state()));
    }
    for (const Program& p : trials[best].programs) result.suite.push_back(p);
    ++t;
  }
  result.final_state.assign(net.state().begin(), net.state().end());
  return result;
}

CampaignResult run_baseline(const IsaGraph& graph, const CoverageOracle& oracle,
                            const CampaignConfig& config) {
  require_mode(config, CampaignMode::kBaseline);
  CampaignResult result;
  result.mode = config.mode;
  result.db = CoverageDb(oracle.universe());
  Recorder rec(result, config);
  const ConstraintSet defaults = uniform_constraints(graph);
  std::vector<double> half(graph.neuron_count(), 0.5);

  result.termination = Termination::kBudget;
  for (std::int64_t t = 0; t < config.max_time; ++t) {
    const std::int64_t step = rec.next_step();
    Evaluation ev = evaluate(graph, oracle, config, defaults, 0, [&](std::size_t j) {
      return derive_seed(config.seed, {static_cast<std::uint64_t>(Stream::kProgram), u64(step), j});
    });
    rec.commit(ev, step);
    rec.row(-1, true, energy(result.db.cumulative(), config.metric_weights), 0.5);
    if (closure_reached(result.db.cumulative(), config.metric_weights, config.goals)) {
      result.termination = Termination::kClosure;
      break;
    }
  }
  result.final_state = std::move(half);
  return result;
}

CampaignResult run_campaign(const IsaGraph& graph, const CoverageOracle& oracle,
                            const CampaignConfig& config) {
  switch (config.mode) {
    case CampaignMode::kOnTheFly:
      return run_on_the_fly(graph, oracle, config);
    case CampaignMode::kOptimalSet:
      return run_optimal_set(graph, oracle, config);
    case CampaignMode::kBaseline:
      return run_baseline(graph, oracle, config);
  }
  throw ConfigError("unknown campaign mode");
}

CoverageSnapshot replay(const CoverageOracle& oracle, std::span<const Program> suite) {
  CoverageDb db(oracle.universe());
  std::int64_t step = 0;
  for (const Program& p : suite) db.commit(oracle.evaluate(p), step++);
  return db.cumulative();
}

std::optional<std::uint64_t> programs_to_reach(const CampaignResult& result,
                                               std::string_view metric, double threshold) {
  return programs_to_reach(result, {{std::string(metric), threshold}});
}

std::optional<std::uint64_t> programs_to_reach(const CampaignResult& result,
                                               const std::map<std::string, double>& levels) {
  for (const StepRecord& r : result.steps) {
    const bool reached = std::all_of(levels.begin(), levels.end(), [&](const auto& kv) {
      auto it = r.coverage.find(kv.first);
      return it != r.coverage.end() && it->second >= kv.second;
    });
    if (reached) return r.programs;
  }
  return std::nullopt;
}

}  // namespace covrnn
