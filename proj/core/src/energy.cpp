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
#include "covrnn/energy.h"

#include <algorithm>
#include <limits>

#include "covrnn/errors.h"

namespace covrnn {

std::size_t MetricBins::hit_count() const {
  return static_cast<std::size_t>(
      std::count_if(counts_.begin(), counts_.end(), [](std::uint32_t c) { return c != 0; }));
}

double MetricBins::percentage() const {
  if (counts_.empty()) return 0.0;
  return 100.0 * static_cast<double>(hit_count()) / static_cast<double>(counts_.size());
}

void MetricBins::hit(std::size_t bin, std::uint32_t times) {
  std::uint32_t& c = counts_.at(bin);
  c = times > std::numeric_limits<std::uint32_t>::max() - c
          ? std::numeric_limits<std::uint32_t>::max()
          : c + times;
}

void MetricBins::merge(const MetricBins& other) {
  if (other.total() != total()) {
    throw BinUniverseMismatch("bin count " + std::to_string(other.total()) + " vs " +
                              std::to_string(total()));
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    if (other.counts_[i] != 0) hit(i, other.counts_[i]);
  }
}

void CoverageSnapshot::add_metric(std::string name, std::size_t total) {
  if (total == 0) throw ConfigError("metric '" + name + "' has no bins");
  metrics_.insert_or_assign(std::move(name), MetricBins(total));
}

const MetricBins& CoverageSnapshot::metric(std::string_view name) const {
  auto it = metrics_.find(name);
  if (it == metrics_.end()) throw MissingMetric("metric '" + std::string(name) + "' not present");
  return it->second;
}

MetricBins& CoverageSnapshot::metric(std::string_view name) {
  auto it = metrics_.find(name);
  if (it == metrics_.end()) throw MissingMetric("metric '" + std::string(name) + "' not present");
  return it->second;
}

std::map<std::string, double> CoverageSnapshot::percentages() const {
  std::map<std::string, double> out;
  for (const auto& [name, bins] : metrics_) out.emplace(name, bins.percentage());
  return out;
}

bool CoverageSnapshot::same_universe(const CoverageSnapshot& other) const {
  if (metrics_.size() != other.metrics_.size()) return false;
  auto a = metrics_.begin();
  auto b = other.metrics_.begin();
  for (; a != metrics_.end(); ++a, ++b) {
    if (a->first != b->first || a->second.total() != b->second.total()) return false;
  }
  return true;
}

CoverageSnapshot CoverageSnapshot::empty_like() const {
  CoverageSnapshot out;
  for (const auto& [name, bins] : metrics_) out.add_metric(name, bins.total());
  return out;
}

void CoverageSnapshot::merge(const CoverageSnapshot& other) {
  if (!same_universe(other)) throw BinUniverseMismatch("snapshots cover different bin universes");
  for (auto& [name, bins] : metrics_) bins.merge(other.metric(name));
}

MetricWeights default_metric_weights() {
  return {{std::string(kFunctional), 1.0},
          {std::string(kStatement), 0.0001},
          {std::string(kBranch), 0.0001}};
}

void validate_weights(const MetricWeights& weights) {
  bool any_positive = false;
  for (const auto& [name, a] : weights) {
    if (!(a >= 0.0)) throw ConfigError("weight of metric '" + name + "' must be non-negative");
    any_positive = any_positive || a > 0.0;
  }
  if (!any_positive) throw ConfigError("at least one metric weight must be positive");
}

double penalty(double percentage) {
  if (!(percentage >= 0.0 && percentage <= 100.0)) {
    throw RangeError("coverage percentage " + std::to_string(percentage) + " outside [0, 100]");
  }
  const double shortfall = 100.0 - percentage;
  return shortfall * shortfall;
}

double energy(const CoverageSnapshot& snapshot, const MetricWeights& weights) {
  double e = 0.0;
  for (const auto& [name, a] : weights) {
    if (a == 0.0) continue;
    e += a * penalty(snapshot.percentage(name));
  }
  return e;
}

bool closure_reached(const CoverageSnapshot& snapshot, const MetricWeights& weights,
                     const CoverageGoals& goals) {
  for (const auto& [name, a] : weights) {
    if (a <= 0.0) continue;
    auto g = goals.find(name);
    const double goal = g == goals.end() ? 100.0 : g->second;
    if (snapshot.percentage(name) < goal) return false;
  }
  return true;
}

CoverageDb::CoverageDb(CoverageSnapshot universe) : cumulative_(universe.empty_like()) {}

CoverageSnapshot CoverageDb::merge_preview(const CoverageSnapshot& incoming) const {
  CoverageSnapshot preview = cumulative_;
  preview.merge(incoming);
  return preview;
}

void CoverageDb::commit(const CoverageSnapshot& incoming, std::int64_t step) {
  cumulative_.merge(incoming);
  history_.push_back({step, incoming});
}

CoverageSnapshot CoverageDb::replay_history(std::int64_t last_step) const {
  CoverageSnapshot out = cumulative_.empty_like();
  for (const Entry& e : history_) {
    if (e.step > last_step) break;
    out.merge(e.added);
  }
  return out;
}

}  // namespace covrnn
