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
#include "covrnn/isa_model.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <unordered_set>

#include "covrnn/errors.h"

namespace covrnn {
namespace {

constexpr std::string_view kTargetPrefix = "target:";

std::vector<std::string> tokenize(std::string_view line) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::exchange(current, {}));
  };
  for (char c : line) {
    if (c == '#') break;
    if (c == ' ' || c == '\t' || c == '\r') {
      flush();
    } else if (c == '{' || c == '}') {
      flush();
      tokens.emplace_back(1, c);
    } else {
      current.push_back(c);
    }
  }
  flush();
  return tokens;
}

bool valid_name(std::string_view name) {
  if (name.empty()) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
           (c >= '0' && c <= '9') || c == '_' || c == '.' || c == '-';
  });
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = text.find(sep, start);
    parts.emplace_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

void decode_payload(Element& e) {
  switch (e.kind) {
    case ElementKind::kOpcode: {
      if (e.payload.empty()) return;
      for (const std::string& token : split(e.payload, ',')) {
        OperandSource src;
        std::string_view name = token;
        if (name.starts_with(kTargetPrefix)) {
          src.kind = OperandSource::Kind::kTarget;
          name.remove_prefix(kTargetPrefix.size());
        }
        if (!valid_name(name)) {
          throw ParseError(e.line, "bad operand source '" + token + "'");
        }
        src.set = std::string(name);
        e.operands.push_back(std::move(src));
      }
      return;
    }
    case ElementKind::kRegister:
      if (!parse_number(e.payload, e.register_index) || e.register_index < 0) {
        throw ParseError(e.line, "register payload must be a non-negative index");
      }
      return;
    case ElementKind::kImmediate: {
      auto parts = split(e.payload, ':');
      if (parts.size() != 2 || !parse_number(parts[0], e.imm_lo) ||
          !parse_number(parts[1], e.imm_hi) || e.imm_lo > e.imm_hi) {
        throw ParseError(e.line, "immediate payload must be lo:hi with lo <= hi");
      }
      return;
    }
  }
}

}  // namespace

std::string_view to_string(ElementKind kind) {
  switch (kind) {
    case ElementKind::kOpcode:
      return "opcode";
    case ElementKind::kRegister:
      return "register";
    case ElementKind::kImmediate:
      return "imm";
  }
  return "?";
}

const IsaSet* IsaGraph::find_set(std::string_view name) const {
  auto it = set_index_.find(std::string(name));
  return it == set_index_.end() ? nullptr : &sets_[it->second];
}

const Element* IsaGraph::find_element(std::string_view name) const {
  auto it = element_index_.find(std::string(name));
  return it == element_index_.end() ? nullptr : &elements_[it->second];
}

bool IsaGraph::contains(std::string_view name) const {
  return find_set(name) != nullptr || find_element(name) != nullptr;
}

std::span<const std::size_t> IsaGraph::pairs_of_set(std::string_view set) const {
  auto it = set_index_.find(std::string(set));
  if (it == set_index_.end()) throw UnknownReference(std::string(set));
  return set_pairs_[it->second];
}

std::vector<const Element*> IsaGraph::opcodes() const {
  std::vector<const Element*> out;
  for (const Element& e : elements_) {
    if (e.kind == ElementKind::kOpcode) out.push_back(&e);
  }
  return out;
}

IsaGraph parse_isa(std::string_view text) {
  IsaGraph g;
  std::unordered_map<std::string, std::size_t> declared_at;

  auto declare = [&](const std::string& name, std::size_t line) {
    if (!valid_name(name)) throw ParseError(line, "invalid name '" + name + "'");
    auto [it, inserted] = declared_at.emplace(name, line);
    if (!inserted) {
      throw ParseError(line, "duplicate name '" + name + "' (first declared on line " +
                                 std::to_string(it->second) + ")");
    }
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;

    auto tokens = tokenize(line);
    if (tokens.empty()) continue;

    if (tokens[0] == "set") {
      if (tokens.size() < 4 || tokens[2] != "{" || tokens.back() != "}") {
        throw ParseError(line_no, "expected 'set <name> { <member> ... }'");
      }
      IsaSet s{tokens[1], {}, line_no};
      declare(s.name, line_no);
      std::unordered_set<std::string> seen;
      for (std::size_t i = 3; i + 1 < tokens.size(); ++i) {
        const std::string& m = tokens[i];
        if (m == "{" || m == "}") throw ParseError(line_no, "unexpected brace");
        if (!valid_name(m)) throw ParseError(line_no, "invalid member name '" + m + "'");
        if (!seen.insert(m).second) {
          throw ParseError(line_no, "member '" + m + "' listed twice in set '" + s.name + "'");
        }
        s.members.push_back(m);
      }
      if (s.members.empty()) throw ParseError(line_no, "set '" + s.name + "' has no members");
      g.set_index_.emplace(s.name, g.sets_.size());
      g.sets_.push_back(std::move(s));
    } else if (tokens[0] == "element") {
      if (tokens.size() < 2) throw ParseError(line_no, "expected 'element <name>'");
      Element e;
      e.name = tokens[1];
      e.line = line_no;
      declare(e.name, line_no);
      bool have_kind = false;
      bool have_payload = false;
      for (std::size_t i = 2; i < tokens.size(); ++i) {
        std::string_view tok = tokens[i];
        auto eq = tok.find('=');
        if (eq == std::string_view::npos) {
          throw ParseError(line_no, "expected key=value, got '" + tokens[i] + "'");
        }
        std::string_view key = tok.substr(0, eq);
        std::string_view value = tok.substr(eq + 1);
        if (key == "kind" && !have_kind) {
          have_kind = true;
          if (value == "opcode") {
            e.kind = ElementKind::kOpcode;
          } else if (value == "register") {
            e.kind = ElementKind::kRegister;
          } else if (value == "imm") {
            e.kind = ElementKind::kImmediate;
          } else {
            throw ParseError(line_no, "unknown element kind '" + std::string(value) + "'");
          }
        } else if (key == "payload" && !have_payload) {
          have_payload = true;
          e.payload = std::string(value);
        } else {
          throw ParseError(line_no, "unexpected attribute '" + std::string(key) + "'");
        }
      }
      decode_payload(e);
      g.element_index_.emplace(e.name, g.elements_.size());
      g.elements_.push_back(std::move(e));
    } else {
      throw ParseError(line_no, "unknown declaration '" + tokens[0] + "'");
    }
  }

  if (g.sets_.empty()) throw ParseError(line_no, "no root set declared");
  g.root_ = g.sets_.front().name;

  // Resolve references.
  for (const IsaSet& s : g.sets_) {
    for (const std::string& m : s.members) {
      if (!g.contains(m)) throw UnknownReference(m);
    }
  }
  for (const Element& e : g.elements_) {
    for (const OperandSource& src : e.operands) {
      if (g.find_set(src.set) == nullptr) throw UnknownReference(src.set);
    }
  }

  // Adjacency over member and operand edges, keyed by name.
  auto successors = [&](const std::string& name) {
    std::vector<std::string> next;
    if (const IsaSet* s = g.find_set(name)) {
      next = s->members;
    } else if (const Element* e = g.find_element(name)) {
      for (const OperandSource& src : e->operands) next.push_back(src.set);
    }
    return next;
  };

  // Cycle detection with an explicit path for the error message.
  {
    enum class Mark { kNone, kActive, kDone };
    std::unordered_map<std::string, Mark> mark;
    std::vector<std::string> path;
    std::function<void(const std::string&)> visit = [&](const std::string& name) {
      Mark& m = mark[name];
      if (m == Mark::kDone) return;
      if (m == Mark::kActive) {
        auto start = std::find(path.begin(), path.end(), name);
        std::string msg;
        for (auto it = start; it != path.end(); ++it) msg += *it + " -> ";
        throw CycleError(msg + name);
      }
      m = Mark::kActive;
      path.push_back(name);
      for (const std::string& n : successors(name)) visit(n);
      path.pop_back();
      mark[name] = Mark::kDone;
    };
    for (const IsaSet& s : g.sets_) visit(s.name);
  }

  // Reachability from the root, and the role each set plays: sets reached
  // through member edges from the root produce instructions, sets reached
  // through operand edges produce operands.
  std::unordered_set<std::string> reached;
  std::unordered_set<std::string> instruction_sets;
  std::unordered_set<std::string> operand_sets;
  auto flood = [&](std::vector<std::string> stack, std::unordered_set<std::string>& sets) {
    while (!stack.empty()) {
      std::string name = std::move(stack.back());
      stack.pop_back();
      reached.insert(name);
      if (const IsaSet* s = g.find_set(name)) {
        if (!sets.insert(name).second) continue;
        for (const std::string& m : s->members) stack.push_back(m);
      }
    }
  };
  flood({g.root_}, instruction_sets);
  std::vector<std::string> operand_roots;
  for (const Element& e : g.elements_) {
    if (!reached.count(e.name)) continue;
    for (const OperandSource& src : e.operands) operand_roots.push_back(src.set);
  }
  flood(std::move(operand_roots), operand_sets);

  for (const IsaSet& s : g.sets_) {
    if (!reached.count(s.name)) {
      throw ParseError(s.line, "set '" + s.name + "' is unreachable from root '" + g.root_ + "'");
    }
    if (instruction_sets.count(s.name) && operand_sets.count(s.name)) {
      throw ParseError(s.line, "set '" + s.name + "' is used both as an instruction set and an operand source");
    }
  }
  for (const Element& e : g.elements_) {
    if (!reached.count(e.name)) {
      throw ParseError(e.line, "element '" + e.name + "' is unreachable from root '" + g.root_ + "'");
    }
  }
  for (const IsaSet& s : g.sets_) {
    const bool instr = instruction_sets.count(s.name) > 0;
    for (const std::string& m : s.members) {
      const Element* e = g.find_element(m);
      if (e == nullptr) continue;
      if (instr && e->kind != ElementKind::kOpcode) {
        throw ParseError(s.line, "instruction set '" + s.name + "' contains non-opcode '" + m + "'");
      }
      if (!instr && e->kind == ElementKind::kOpcode) {
        throw ParseError(s.line, "operand set '" + s.name + "' contains opcode '" + m + "'");
      }
    }
  }

  // Instance vector in document order.
  g.set_pairs_.resize(g.sets_.size());
  for (std::size_t si = 0; si < g.sets_.size(); ++si) {
    for (const std::string& m : g.sets_[si].members) {
      g.set_pairs_[si].push_back(g.pairs_.size());
      g.pairs_.push_back({g.sets_[si].name, m});
    }
  }
  return g;
}

IsaGraph load_isa_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open ISA file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_isa(buf.str());
}

std::vector<InstancePair> instance_vector(const IsaGraph& graph) { return graph.pairs(); }

double path_probability(const IsaGraph& graph, std::span<const double> edge_probabilities,
                        std::string_view element, std::string_view from) {
  if (edge_probabilities.size() != graph.neuron_count()) {
    throw InvalidSize("edge probability vector does not match the instance vector");
  }
  if (graph.find_element(element) == nullptr) throw UnknownReference(std::string(element));
  const std::string start = from.empty() ? graph.root() : std::string(from);
  if (graph.find_set(start) == nullptr) throw UnknownReference(start);

  // Forward propagation of probability mass along member edges. Sets are
  // visited in topological order so every parent is final before it pushes
  // mass to its members.
  std::vector<std::string> order;
  {
    std::unordered_set<std::string> done;
    std::function<void(const std::string&)> visit = [&](const std::string& name) {
      if (!done.insert(name).second) return;
      if (const IsaSet* s = graph.find_set(name)) {
        for (const std::string& m : s->members) visit(m);
        order.push_back(name);
      }
    };
    visit(start);
    std::reverse(order.begin(), order.end());
  }

  std::unordered_map<std::string, double> mass{{start, 1.0}};
  for (const std::string& set : order) {
    const double m = mass[set];
    if (m == 0.0) continue;
    for (std::size_t idx : graph.pairs_of_set(set)) {
      mass[graph.pairs()[idx].member] += m * edge_probabilities[idx];
    }
  }
  auto it = mass.find(std::string(element));
  return it == mass.end() ? 0.0 : it->second;
}

}  // namespace covrnn
