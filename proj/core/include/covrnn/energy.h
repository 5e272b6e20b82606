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
#ifndef COVRNN_ENERGY_H_
#define COVRNN_ENERGY_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace covrnn {

inline constexpr std::string_view kFunctional = "functional";
inline constexpr std::string_view kStatement = "statement";
inline constexpr std::string_view kBranch = "branch";

/// Hit counts over a fixed bin universe for one metric.
class MetricBins {
 public:
  MetricBins() = default;
  explicit MetricBins(std::size_t total) : counts_(total, 0) {}

  std::size_t total() const { return counts_.size(); }
  std::size_t hit_count() const;
  double percentage() const;

  void hit(std::size_t bin, std::uint32_t times = 1);
  std::uint32_t count(std::size_t bin) const { return counts_.at(bin); }
  bool is_hit(std::size_t bin) const { return counts_.at(bin) != 0; }
  std::span<const std::uint32_t> counts() const { return counts_; }

  void merge(const MetricBins& other);

  friend bool operator==(const MetricBins&, const MetricBins&) = default;

 private:
  std::vector<std::uint32_t> counts_;
};

/// Per-metric bin hits. Percentages are always derived from the bins.
class CoverageSnapshot {
 public:
  using MetricMap = std::map<std::string, MetricBins, std::less<>>;

  CoverageSnapshot() = default;

  /// Declares a metric with `total` bins. Throws ConfigError if total is 0.
  void add_metric(std::string name, std::size_t total);

  bool has_metric(std::string_view name) const { return metrics_.find(name) != metrics_.end(); }
  const MetricBins& metric(std::string_view name) const;
  MetricBins& metric(std::string_view name);
  const MetricMap& metrics() const { return metrics_; }

  double percentage(std::string_view name) const { return metric(name).percentage(); }
  std::map<std::string, double> percentages() const;

  /// Same metric names and bin counts.
  bool same_universe(const CoverageSnapshot& other) const;

  /// A snapshot with this universe and no hits.
  CoverageSnapshot empty_like() const;

  /// In-place union. Throws BinUniverseMismatch.
  void merge(const CoverageSnapshot& other);

  friend bool operator==(const CoverageSnapshot&, const CoverageSnapshot&) = default;

 private:
  MetricMap metrics_;
};

/// Relative importance a_c of each metric in the energy.
using MetricWeights = std::map<std::string, double, std::less<>>;
/// Closure goal per metric, in percent. Metrics not listed default to 100.
using CoverageGoals = std::map<std::string, double, std::less<>>;

/// functional = 1, statement = branch = 0.0001.
MetricWeights default_metric_weights();

/// Throws ConfigError on negative weights or when no weight is positive.
void validate_weights(const MetricWeights& weights);

/// (100 - x)^2. Throws RangeError outside [0, 100].
double penalty(double percentage);

/// Weighted sum of penalties over the weighted metrics. Throws MissingMetric
/// when a metric with positive weight is absent from the snapshot.
double energy(const CoverageSnapshot& snapshot, const MetricWeights& weights);

/// True when every metric with positive weight meets its goal.
bool closure_reached(const CoverageSnapshot& snapshot, const MetricWeights& weights,
                     const CoverageGoals& goals);

/// Cumulative coverage over everything accepted so far.
class CoverageDb {
 public:
  struct Entry {
    std::int64_t step = 0;
    CoverageSnapshot added;
  };

  CoverageDb() = default;
  explicit CoverageDb(CoverageSnapshot universe);

  const CoverageSnapshot& cumulative() const { return cumulative_; }
  const std::vector<Entry>& history() const { return history_; }

  /// Cumulative coverage as it would be after committing `incoming`. Does
  /// not modify the database. Throws BinUniverseMismatch.
  CoverageSnapshot merge_preview(const CoverageSnapshot& incoming) const;

  /// Folds `incoming` into the cumulative coverage and records it.
  void commit(const CoverageSnapshot& incoming, std::int64_t step);

  /// Rebuilds the cumulative state from history alone, up to and including
  /// entries with step <= last_step.
  CoverageSnapshot replay_history(std::int64_t last_step = INT64_MAX) const;

 private:
  CoverageSnapshot cumulative_;
  std::vector<Entry> history_;
};

}  // namespace covrnn

#endif  // COVRNN_ENERGY_H_
