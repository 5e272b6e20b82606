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
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "covrnn/controller.h"
#include "covrnn/duv.h"
#include "covrnn/errors.h"
#include "covrnn/isa_model.h"
#include "covrnn/persistence.h"
#include "covrnn/rnn.h"

namespace covrnn {
namespace {

namespace fs = std::filesystem;

// Parses "metric=value" pairs from repeated flags.
std::map<std::string, double> parse_assignments(const std::vector<std::string>& items,
                                                std::string_view flag) {
  std::map<std::string, double> out;
  for (const std::string& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError(std::string(flag) + " expects <metric>=<value>, got '" + item + "'");
    }
    try {
      std::size_t used = 0;
      const std::string value = item.substr(eq + 1);
      const double v = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
      out[item.substr(0, eq)] = v;
    } catch (const std::logic_error&) {
      throw ConfigError(std::string(flag) + ": bad number in '" + item + "'");
    }
  }
  return out;
}

std::pair<IsaGraph, std::string> read_isa(const std::string& path) {
  if (path.empty()) {
    std::string text(bundled_isa_text());
    return {parse_isa(text), text};
  }
  std::string text = read_text(path);
  return {parse_isa(text), text};
}

void print_snapshot(std::ostream& out, const CoverageSnapshot& s) {
  for (const auto& [metric, bins] : s.metrics()) {
    out << metric << ' ' << format_decimal(bins.percentage()) << '\n';
  }
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Coverage-driven verification with a recurrent-network constraint optimiser"};
  app.name("covrnn");
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Run a verification campaign into a run directory");
  std::string run_config_file, run_isa, run_mode, run_model, run_out;
  std::uint64_t seed = 0, max_cycles = 0;
  std::int64_t max_time = 0;
  std::size_t epoch_len = 0, best_prog_runs = 0, program_length = 0, programs_per_eval = 0;
  double lambda = 0, epsilon0 = 0, alpha = 0;
  unsigned threads = 0;
  bool stochastic = false, no_bootstrap = false;
  std::vector<std::string> goals, weights;
  run->add_option("--config", run_config_file, "Key-value config file; flags override it");
  auto* o_isa = run->add_option("--isa", run_isa, "ISA description file");
  auto* o_mode = run->add_option("--mode", run_mode, "on_the_fly | optimal_set | baseline");
  auto* o_model = run->add_option("--model", run_model, "Weight model: bipolar | acyclic");
  auto* o_seed = run->add_option("--seed", seed, "Master seed");
  auto* o_max_time = run->add_option("--max-time", max_time, "Step budget (epochs for optimal_set)");
  auto* o_epoch = run->add_option("--epoch-len", epoch_len, "Maximum epoch length (default 20)");
  auto* o_best = run->add_option("--best-prog-runs", best_prog_runs, "Bootstrap runs of the default generator");
  auto* o_lambda = run->add_option("--lambda", lambda, "Sigmoid steepness (default 0.9)");
  auto* o_len = run->add_option("--program-length", program_length, "Instructions per program (default 100)");
  auto* o_ppe = run->add_option("--programs-per-eval", programs_per_eval, "Programs per evaluation (default 1)");
  auto* o_stoch = run->add_flag("--stochastic", stochastic, "Enable stochastic acceptance");
  auto* o_eps = run->add_option("--epsilon0", epsilon0, "Initial stochastic acceptance probability");
  auto* o_alpha = run->add_option("--alpha", alpha, "Decay of the stochastic acceptance probability");
  auto* o_goal = run->add_option("--goal", goals, "Closure goal <metric>=<pct> (repeatable)");
  auto* o_weight = run->add_option("--weight", weights, "Energy weight <metric>=<a> (repeatable)");
  auto* o_nob = run->add_flag("--no-bootstrap", no_bootstrap, "Skip the default-generator bootstrap");
  auto* o_cycles = run->add_option("--max-cycles", max_cycles, "Simulation cycle budget per program");
  run->add_option("--threads", threads, "Worker threads for trial evaluation");
  run->add_option("--out", run_out, "Run directory")->required();

  // replay
  auto* replay_cmd = app.add_subcommand("replay", "Replay a regression suite and print final coverage");
  std::string suite_path, replay_isa;
  std::uint64_t replay_cycles = 0;
  replay_cmd->add_option("--suite", suite_path, "Suite manifest")->required();
  replay_cmd->add_option("--isa", replay_isa, "ISA file (default: the run's snapshot, else bundled)");
  replay_cmd->add_option("--max-cycles", replay_cycles, "Cycle budget (default: the run's setting)");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate one program and print its coverage");
  std::string program_path, sim_isa;
  std::uint64_t sim_cycles = 0;
  sim_cmd->add_option("program", program_path, "Assembly file")->required();
  sim_cmd->add_option("--isa", sim_isa, "ISA file (default: bundled)");
  sim_cmd->add_option("--max-cycles", sim_cycles, "Cycle budget (default: 10 x program length)");

  // bins
  auto* bins_cmd = app.add_subcommand("bins", "Dump the coverage bin universe");
  std::string bins_isa;
  bins_cmd->add_option("--isa", bins_isa, "ISA file (default: bundled)");

  // export-weights
  auto* ew_cmd = app.add_subcommand("export-weights", "Write a weight matrix as CSV");
  std::string ew_isa, ew_model = "acyclic", ew_out;
  std::size_t ew_neurons = 0;
  ew_cmd->add_option("--isa", ew_isa, "ISA file (default: bundled)");
  ew_cmd->add_option("--model", ew_model, "bipolar | acyclic");
  ew_cmd->add_option("--neurons", ew_neurons, "Bipolar size (default: ISA neuron count)");
  ew_cmd->add_option("--out", ew_out, "Output file (default: stdout)");

  // export-curves
  auto* ec_cmd = app.add_subcommand("export-curves", "Align coverage curves of several runs");
  std::vector<std::string> ec_runs;
  std::string ec_metric = std::string(kFunctional), ec_out;
  ec_cmd->add_option("runs", ec_runs, "Run directories")->required();
  ec_cmd->add_option("--metric", ec_metric, "Metric column to export");
  ec_cmd->add_option("--out", ec_out, "Output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "covrnn: " << e.what() << "\n" << "Run 'covrnn --help' for usage.\n";
    return kExitError;
  }

  try {
    if (*run) {
      RunConfig rc;
      if (!run_config_file.empty()) rc = load_run_config(run_config_file);
      CampaignConfig& c = rc.campaign;
      if (*o_isa) rc.isa = run_isa;
      if (*o_mode) c.mode = parse_mode(run_mode);
      if (*o_model) c.weight_model = parse_weight_model(run_model);
      if (*o_seed) c.seed = seed;
      if (*o_max_time) c.max_time = max_time;
      if (*o_epoch) c.max_epoch_length = epoch_len;
      if (*o_best) c.best_prog_runs = best_prog_runs;
      if (*o_lambda) c.lambda = lambda;
      if (*o_len) c.program_length = program_length;
      if (*o_ppe) c.programs_per_eval = programs_per_eval;
      if (*o_stoch) c.stochastic_activation = true;
      if (*o_eps) c.epsilon0 = epsilon0;
      if (*o_alpha) c.alpha = alpha;
      if (*o_nob) c.bootstrap = false;
      if (*o_cycles) c.max_cycles = max_cycles;
      if (*o_goal) {
        for (auto& [m, v] : parse_assignments(goals, "--goal")) c.goals[m] = v;
      }
      if (*o_weight) {
        for (auto& [m, v] : parse_assignments(weights, "--weight")) c.metric_weights[m] = v;
      }
      c.threads = threads;
      if (rc.isa.empty()) {
        err << "covrnn run: an ISA is required (--isa or 'isa' in --config)\n";
        return kExitError;
      }
      c.validate();

      const std::string isa_text = read_text(rc.isa);
      const IsaGraph graph = parse_isa(isa_text);
      RunDirectory dir(run_out);
      const RunConfig snapshot = dir.prepare(rc, isa_text);
      DuvOracle oracle(graph, c.effective_max_cycles());
      const CampaignResult result = run_campaign(graph, oracle, snapshot.campaign);
      dir.write_result(result, snapshot);

      out << "mode " << to_string(result.mode) << '\n'
          << "termination " << to_string(result.termination) << '\n'
          << "programs " << result.programs_generated << '\n';
      print_snapshot(out, result.final_coverage());
      return result.termination == Termination::kLocalMinimum ? kExitLocalMinimum : kExitOk;
    }

    if (*replay_cmd) {
      const fs::path manifest(suite_path);
      const RunDirectory dir(manifest.parent_path());
      std::optional<RunConfig> stored;
      if (fs::exists(dir.config_path())) stored = load_run_config(dir.config_path());
      std::string isa_file = replay_isa;
      if (isa_file.empty() && stored) isa_file = stored->isa.string();
      const auto [graph, text] = read_isa(isa_file);
      std::uint64_t cycles = replay_cycles;
      if (cycles == 0) {
        cycles = stored ? stored->campaign.effective_max_cycles() : CampaignConfig{}.effective_max_cycles();
      }
      DuvOracle oracle(graph, cycles);
      const std::vector<Program> suite = load_suite(manifest);
      out << "programs " << suite.size() << '\n';
      print_snapshot(out, replay(oracle, suite));
      return kExitOk;
    }

    if (*sim_cmd) {
      const auto [graph, text] = read_isa(sim_isa);
      const duv::CoverageModel model(graph);
      const Program program = load_program(program_path);
      const std::uint64_t cycles = sim_cycles != 0 ? sim_cycles : duv::default_max_cycles(program.size());
      const duv::SimulationResult r = duv::run(model, program, cycles);
      out << "{\n  \"cycles\": " << r.final_state.cycles << ",\n  \"halt\": \""
          << (r.halt == duv::HaltReason::kEndOfProgram ? "end_of_program" : "cycle_budget")
          << "\",\n  \"metrics\": {";
      bool first_metric = true;
      for (const auto& [metric, bins] : r.coverage.metrics()) {
        out << (first_metric ? "" : ",") << "\n    \"" << metric << "\": {\"hit\": " << bins.hit_count()
            << ", \"total\": " << bins.total() << ", \"percentage\": " << format_decimal(bins.percentage())
            << ", \"bins\": [";
        first_metric = false;
        bool first_bin = true;
        const auto& names = model.bin_names(metric);
        for (std::size_t i = 0; i < bins.total(); ++i) {
          if (!bins.is_hit(i)) continue;
          out << (first_bin ? "" : ", ") << '"' << names[i] << '"';
          first_bin = false;
        }
        out << "]}";
      }
      out << "\n  }\n}\n";
      return kExitOk;
    }

    if (*bins_cmd) {
      const auto [graph, text] = read_isa(bins_isa);
      const duv::CoverageModel model(graph);
      for (const auto& [metric, count] : duv::total_bins(model)) {
        out << "# " << metric << ' ' << count << '\n';
        const auto& names = model.bin_names(metric);
        for (std::size_t i = 0; i < names.size(); ++i) out << metric << ',' << i << ',' << names[i] << '\n';
      }
      return kExitOk;
    }

    if (*ew_cmd) {
      const auto [graph, text] = read_isa(ew_isa);
      WeightMatrix w;
      switch (parse_weight_model(ew_model)) {
        case WeightModel::kBipolar:
          w = bipolar_weights(ew_neurons != 0 ? ew_neurons : graph.neuron_count());
          break;
        case WeightModel::kAcyclic:
          w = acyclic_graph_weights(graph.pairs());
          break;
      }
      const std::string csv = weights_to_csv(w);
      if (ew_out.empty()) {
        out << csv;
      } else {
        write_text(ew_out, csv);
      }
      return kExitOk;
    }

    if (*ec_cmd) {
      std::vector<fs::path> runs(ec_runs.begin(), ec_runs.end());
      const std::string csv = export_curves(runs, ec_metric);
      if (ec_out.empty()) {
        out << csv;
      } else {
        write_text(ec_out, csv);
      }
      return kExitOk;
    }
  } catch (const std::exception& e) {
    err << "covrnn: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

}  // namespace covrnn
