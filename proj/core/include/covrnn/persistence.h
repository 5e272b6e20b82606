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
#ifndef COVRNN_PERSISTENCE_H_
#define COVRNN_PERSISTENCE_H_

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "covrnn/controller.h"
#include "covrnn/energy.h"
#include "covrnn/prg.h"

namespace covrnn {

/// Everything needed to reproduce a run.
struct RunConfig {
  CampaignConfig campaign;
  /// Empty means the bundled toy ISA.
  std::filesystem::path isa;
};

/// `key = value` lines, `#` comments. Keys mirror CampaignConfig fields;
/// metric weights and goals use `weight.<metric>` and `goal.<metric>`.
/// Unknown keys and malformed values throw ConfigError. Keys absent from the
/// text keep the values already in `base`.
RunConfig parse_run_config(std::string_view text, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});
std::string format_run_config(const RunConfig& config);

/// Loads the ISA named by the config, or the bundled one.
IsaGraph load_isa(const RunConfig& config);

/// Campaign log: `step,neuron,accepted,energy,functional,statement,branch,wall_ms`.
std::string campaign_log_csv(const CampaignResult& result);

struct LogRow {
  std::int64_t step = 0;
  std::int64_t neuron = -1;
  bool accepted = false;
  double energy = 0.0;
  double functional = 0.0;
  double statement = 0.0;
  double branch = 0.0;
  double wall_ms = 0.0;
};
std::vector<LogRow> parse_campaign_log(std::string_view csv);

/// The log with the wall-clock column removed; what reproducibility checks
/// compare.
std::string strip_wall_time(std::string_view csv);

/// Per-commit history: `step,metric,percentage,energy`.
std::string history_csv(const CoverageDb& db, const MetricWeights& weights);

std::string coverage_db_to_json(const CoverageDb& db);
CoverageDb coverage_db_from_json(std::string_view text);

/// Layout of a run directory.
class RunDirectory {
 public:
  explicit RunDirectory(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path config_path() const { return root_ / "config.cfg"; }
  std::filesystem::path isa_path() const { return root_ / "model.isa"; }
  std::filesystem::path programs_dir() const { return root_ / "programs"; }
  std::filesystem::path logs_dir() const { return root_ / "logs"; }
  std::filesystem::path log_path() const { return logs_dir() / "campaign.csv"; }
  std::filesystem::path network_log_path() const { return logs_dir() / "network.csv"; }
  std::filesystem::path history_path() const { return logs_dir() / "history.csv"; }
  std::filesystem::path coverage_db_path() const { return root_ / "coverage.json"; }
  std::filesystem::path manifest_path() const { return root_ / "suite.manifest"; }
  std::filesystem::path summary_path() const { return root_ / "summary.json"; }

  /// Creates the directory tree, copies the ISA in and writes the config
  /// snapshot (pointing at the copy). Returns the snapshot as written.
  RunConfig prepare(const RunConfig& config, std::string_view isa_text) const;

  /// Writes programs, logs, coverage database, suite manifest and summary.
  void write_result(const CampaignResult& result, const RunConfig& config) const;

  static std::string program_file_name(std::int64_t step, std::size_t index);

 private:
  std::filesystem::path root_;
};

/// Program paths listed in a manifest, resolved against its directory.
std::vector<std::filesystem::path> read_manifest(const std::filesystem::path& manifest);
std::vector<Program> load_suite(const std::filesystem::path& manifest);
Program load_program(const std::filesystem::path& path);

/// Aligns runs on cumulative programs generated: `programs,<run>,...`, one
/// row per program count, shorter runs padded with their final value.
/// Throws MissingLog when a run has no campaign log.
std::string export_curves(std::span<const std::filesystem::path> runs,
                          std::string_view metric = kFunctional);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

/// Fixed-precision decimal used by every CSV writer.
std::string format_decimal(double value, int digits = 6);

}  // namespace covrnn

#endif  // COVRNN_PERSISTENCE_H_
