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

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "covrnn/errors.h"

namespace covrnn {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr std::string_view kLogHeader =
    "step,neuron,accepted,energy,functional,statement,branch,wall_ms";

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(pos, end - pos));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    pos = end + 1;
  }
  return lines;
}

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    cells.emplace_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
  T out{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("bad value '" + text + "' for key '" + key + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("bad boolean '" + text + "' for key '" + key + "'");
}

std::string shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

std::string format_decimal(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, value);
  std::string s = buf;
  if (s.starts_with("-") && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

RunConfig parse_run_config(std::string_view text, RunConfig base) {
  RunConfig rc = std::move(base);
  CampaignConfig& c = rc.campaign;
  std::size_t line_no = 0;
  for (const std::string& raw : split_lines(text)) {
    ++line_no;
    std::string line = raw.substr(0, raw.find('#'));
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));

    if (key == "mode") {
      c.mode = parse_mode(value);
    } else if (key == "isa") {
      rc.isa = value;
    } else if (key == "model") {
      c.weight_model = parse_weight_model(value);
    } else if (key == "seed") {
      c.seed = parse_value<std::uint64_t>(key, value);
    } else if (key == "max_time") {
      c.max_time = parse_value<std::int64_t>(key, value);
    } else if (key == "max_epoch_length") {
      c.max_epoch_length = parse_value<std::size_t>(key, value);
    } else if (key == "best_prog_runs") {
      c.best_prog_runs = parse_value<std::size_t>(key, value);
    } else if (key == "bootstrap") {
      c.bootstrap = parse_bool(key, value);
    } else if (key == "stochastic") {
      c.stochastic_activation = parse_bool(key, value);
    } else if (key == "epsilon0") {
      c.epsilon0 = parse_value<double>(key, value);
    } else if (key == "alpha") {
      c.alpha = parse_value<double>(key, value);
    } else if (key == "programs_per_eval") {
      c.programs_per_eval = parse_value<std::size_t>(key, value);
    } else if (key == "program_length") {
      c.program_length = parse_value<std::size_t>(key, value);
    } else if (key == "max_cycles") {
      c.max_cycles = parse_value<std::uint64_t>(key, value);
    } else if (key == "lambda") {
      c.lambda = parse_value<double>(key, value);
    } else if (key == "sign_carry") {
      if (value == "carried") {
        c.sign_carry = SignCarry::kCarried;
      } else if (value == "reset") {
        c.sign_carry = SignCarry::kResetPerRow;
      } else {
        throw ConfigError("sign_carry must be 'carried' or 'reset'");
      }
    } else if (key.starts_with("weight.")) {
      c.metric_weights[key.substr(7)] = parse_value<double>(key, value);
    } else if (key.starts_with("goal.")) {
      c.goals[key.substr(5)] = parse_value<double>(key, value);
    } else {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  return rc;
}

RunConfig load_run_config(const fs::path& path, RunConfig base) {
  return parse_run_config(read_text(path), std::move(base));
}

std::string format_run_config(const RunConfig& rc) {
  const CampaignConfig& c = rc.campaign;
  std::ostringstream out;
  out << "mode = " << to_string(c.mode) << '\n';
  if (!rc.isa.empty()) out << "isa = " << rc.isa.string() << '\n';
  out << "model = " << to_string(c.weight_model) << '\n'
      << "seed = " << c.seed << '\n'
      << "max_time = " << c.max_time << '\n'
      << "max_epoch_length = " << c.max_epoch_length << '\n'
      << "best_prog_runs = " << c.best_prog_runs << '\n'
      << "bootstrap = " << (c.bootstrap ? "true" : "false") << '\n'
      << "stochastic = " << (c.stochastic_activation ? "true" : "false") << '\n'
      << "epsilon0 = " << shortest(c.epsilon0) << '\n'
      << "alpha = " << shortest(c.alpha) << '\n'
      << "programs_per_eval = " << c.programs_per_eval << '\n'
      << "program_length = " << c.program_length << '\n'
      << "max_cycles = " << c.max_cycles << '\n'
      << "lambda = " << shortest(c.lambda) << '\n'
      << "sign_carry = " << (c.sign_carry == SignCarry::kCarried ? "carried" : "reset") << '\n';
  for (const auto& [metric, a] : c.metric_weights) out << "weight." << metric << " = " << shortest(a) << '\n';
  for (const auto& [metric, g] : c.goals) out << "goal." << metric << " = " << shortest(g) << '\n';
  return out.str();
}

IsaGraph load_isa(const RunConfig& config) {
  return config.isa.empty() ? parse_isa(bundled_isa_text()) : load_isa_file(config.isa);
}

std::string campaign_log_csv(const CampaignResult& result) {
  std::string out(kLogHeader);
  out += '\n';
  auto pct = [](const StepRecord& r, std::string_view m) {
    auto it = r.coverage.find(std::string(m));
    return format_decimal(it == r.coverage.end() ? 0.0 : it->second);
  };
  for (const StepRecord& r : result.steps) {
    out += std::to_string(r.step) + ',' + std::to_string(r.neuron) + ',' + (r.accepted ? "1" : "0") +
           ',' + format_decimal(r.energy) + ',' + pct(r, kFunctional) + ',' + pct(r, kStatement) + ',' +
           pct(r, kBranch) + ',' + format_decimal(r.wall_ms, 3) + '\n';
  }
  return out;
}

std::vector<LogRow> parse_campaign_log(std::string_view csv) {
  auto lines = split_lines(csv);
  if (lines.empty() || lines.front() != kLogHeader) throw MissingLog("not a campaign log");
  std::vector<LogRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto cells = split_csv(lines[i]);
    if (cells.size() != 8) throw MissingLog("campaign log row " + std::to_string(i) + " malformed");
    LogRow r;
    r.step = parse_value<std::int64_t>("step", cells[0]);
    r.neuron = parse_value<std::int64_t>("neuron", cells[1]);
    r.accepted = cells[2] == "1";
    r.energy = parse_value<double>("energy", cells[3]);
    r.functional = parse_value<double>("functional", cells[4]);
    r.statement = parse_value<double>("statement", cells[5]);
    r.branch = parse_value<double>("branch", cells[6]);
    r.wall_ms = parse_value<double>("wall_ms", cells[7]);
    rows.push_back(r);
  }
  return rows;
}

std::string strip_wall_time(std::string_view csv) {
  std::string out;
  for (const std::string& line : split_lines(csv)) {
    auto cut = line.rfind(',');
    out += cut == std::string::npos ? line : line.substr(0, cut);
    out += '\n';
  }
  return out;
}

std::string history_csv(const CoverageDb& db, const MetricWeights& weights) {
  std::string out = "step,metric,percentage,energy\n";
  CoverageSnapshot running = db.cumulative().empty_like();
  for (const CoverageDb::Entry& e : db.history()) {
    running.merge(e.added);
    const std::string en = format_decimal(energy(running, weights));
    for (const auto& [metric, bins] : running.metrics()) {
      out += std::to_string(e.step) + ',' + metric + ',' + format_decimal(bins.percentage()) + ',' + en + '\n';
    }
  }
  return out;
}

namespace {

json snapshot_to_json(const CoverageSnapshot& s, bool with_totals) {
  json metrics = json::object();
  for (const auto& [name, bins] : s.metrics()) {
    json hits = json::array();
    auto counts = bins.counts();
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (counts[i] != 0) hits.push_back({i, counts[i]});
    }
    if (with_totals) {
      metrics[name] = {{"total", bins.total()}, {"hits", std::move(hits)}};
    } else {
      metrics[name] = std::move(hits);
    }
  }
  return metrics;
}

void fill_snapshot(CoverageSnapshot& s, const json& metrics, bool with_totals) {
  for (auto it = metrics.begin(); it != metrics.end(); ++it) {
    const json& hits = with_totals ? it.value().at("hits") : it.value();
    MetricBins& bins = s.metric(it.key());
    for (const json& h : hits) {
      const auto bin = h.at(0).get<std::size_t>();
      if (bin >= bins.total()) throw BinUniverseMismatch("bin id out of range in coverage database");
      bins.hit(bin, h.at(1).get<std::uint32_t>());
    }
  }
}

}  // namespace

std::string coverage_db_to_json(const CoverageDb& db) {
  json doc;
  doc["cumulative"] = snapshot_to_json(db.cumulative(), true);
  json history = json::array();
  for (const CoverageDb::Entry& e : db.history()) {
    history.push_back({{"step", e.step}, {"bins", snapshot_to_json(e.added, false)}});
  }
  doc["history"] = std::move(history);
  return doc.dump(1) + '\n';
}

CoverageDb coverage_db_from_json(std::string_view text) {
  try {
    const json doc = json::parse(text);
    CoverageSnapshot universe;
    const json& cumulative = doc.at("cumulative");
    for (auto it = cumulative.begin(); it != cumulative.end(); ++it) {
      universe.add_metric(it.key(), it.value().at("total").get<std::size_t>());
    }
    CoverageDb db(universe);
    for (const json& e : doc.at("history")) {
      CoverageSnapshot added = universe.empty_like();
      fill_snapshot(added, e.at("bins"), false);
      db.commit(added, e.at("step").get<std::int64_t>());
    }
    CoverageSnapshot stored = universe.empty_like();
    fill_snapshot(stored, cumulative, true);
    if (!(stored == db.cumulative())) {
      throw BinUniverseMismatch("coverage database history does not reproduce its cumulative state");
    }
    return db;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed coverage database: ") + e.what());
  }
}

std::string RunDirectory::program_file_name(std::int64_t step, std::size_t index) {
  return "step_" + std::to_string(step) + "_" + std::to_string(index) + ".s";
}

RunConfig RunDirectory::prepare(const RunConfig& config, std::string_view isa_text) const {
  fs::create_directories(programs_dir());
  fs::create_directories(logs_dir());
  write_text(isa_path(), isa_text);
  RunConfig snapshot = config;
  snapshot.isa = fs::absolute(isa_path()).lexically_normal();
  write_text(config_path(), format_run_config(snapshot));
  return snapshot;
}

void RunDirectory::write_result(const CampaignResult& result, const RunConfig& config) const {
  fs::create_directories(programs_dir());
  fs::create_directories(logs_dir());

  std::string manifest;
  for (const CommittedProgram& cp : result.committed) {
    const std::string name = program_file_name(cp.step, cp.index);
    write_text(programs_dir() / name, serialize(cp.program));
    manifest += "programs/" + name + '\n';
  }
  write_text(manifest_path(), manifest);

  write_text(log_path(), campaign_log_csv(result));
  std::string network = "step,mean_output\n";
  for (const StepRecord& r : result.steps) {
    network += std::to_string(r.step) + ',' + format_decimal(r.mean_output, 9) + '\n';
  }
  write_text(network_log_path(), network);
  write_text(history_path(), history_csv(result.db, config.campaign.metric_weights));
  write_text(coverage_db_path(), coverage_db_to_json(result.db));

  json summary;
  summary["mode"] = std::string(to_string(result.mode));
  summary["termination"] = std::string(to_string(result.termination));
  summary["seed"] = config.campaign.seed;
  summary["steps"] = result.steps.size();
  summary["programs_generated"] = result.programs_generated;
  summary["final_energy"] = energy(result.final_coverage(), config.campaign.metric_weights);
  json coverage = json::object();
  for (const auto& [metric, pct] : result.final_coverage().percentages()) coverage[metric] = pct;
  summary["final_coverage"] = std::move(coverage);
  summary["committed_programs"] = result.committed.size();
  if (result.mode == CampaignMode::kOptimalSet) summary["suite_size"] = result.suite.size();
  write_text(summary_path(), summary.dump(2) + '\n');
}

std::vector<fs::path> read_manifest(const fs::path& manifest) {
  const fs::path base = manifest.parent_path();
  std::vector<fs::path> out;
  for (const std::string& raw : split_lines(read_text(manifest))) {
    std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    fs::path p(line);
    out.push_back(p.is_absolute() ? p : base / p);
  }
  return out;
}

Program load_program(const fs::path& path) { return deserialize(read_text(path)); }

std::vector<Program> load_suite(const fs::path& manifest) {
  std::vector<Program> suite;
  for (const fs::path& p : read_manifest(manifest)) suite.push_back(load_program(p));
  return suite;
}

std::string export_curves(std::span<const fs::path> runs, std::string_view metric) {
  struct Series {
    std::string name;
    std::vector<double> values;
    std::size_t per_row = 1;
  };
  std::vector<Series> series;
  std::size_t longest = 0;
  for (const fs::path& run : runs) {
    RunDirectory dir(run);
    if (!fs::exists(dir.log_path())) throw MissingLog("no campaign log in " + run.string());
    Series s;
    s.name = run.filename().empty() ? run.parent_path().filename().string() : run.filename().string();
    if (fs::exists(dir.config_path())) {
      s.per_row = load_run_config(dir.config_path()).campaign.programs_per_eval;
    }
    for (const LogRow& r : parse_campaign_log(read_text(dir.log_path()))) {
      if (metric == kFunctional) {
        s.values.push_back(r.functional);
      } else if (metric == kStatement) {
        s.values.push_back(r.statement);
      } else if (metric == kBranch) {
        s.values.push_back(r.branch);
      } else {
        throw MissingMetric("metric '" + std::string(metric) + "' is not in campaign logs");
      }
    }
    longest = std::max(longest, s.values.size() * s.per_row);
    series.push_back(std::move(s));
  }

  std::string out = "programs";
  for (const Series& s : series) out += ',' + s.name;
  out += '\n';
  for (std::size_t p = 1; p <= longest; ++p) {
    out += std::to_string(p);
    for (const Series& s : series) {
      // Last row whose cumulative program count does not exceed p.
      const std::size_t rows = std::min(p / s.per_row, s.values.size());
      out += ',' + format_decimal(rows == 0 ? 0.0 : s.values[rows - 1]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace covrnn
