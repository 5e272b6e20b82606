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
#include "covrnn/prg.h"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <unordered_map>

#include "covrnn/errors.h"
#include "covrnn/rng.h"

namespace covrnn {
namespace {

// Picks one neuron index among `candidates` in proportion to its probability.
std::size_t pick(std::span<const std::size_t> candidates, const ConstraintSet& c, Rng& rng) {
  double total = 0.0;
  for (std::size_t i : candidates) total += c[i];
  double u = rng.uniform() * total;
  for (std::size_t i : candidates) {
    if (u < c[i]) return i;
    u -= c[i];
  }
  return candidates.back();
}

const Element& descend(const IsaGraph& g, const ConstraintSet& c, std::string_view set, Rng& rng) {
  std::string_view current = set;
  while (true) {
    const std::size_t idx = pick(g.pairs_of_set(current), c, rng);
    const std::string& member = g.pairs()[idx].member;
    if (const Element* e = g.find_element(member)) return *e;
    current = member;
  }
}

std::int64_t draw_value(const Element& e, Rng& rng) {
  switch (e.kind) {
    case ElementKind::kRegister:
      return e.register_index;
    case ElementKind::kImmediate:
      return rng.between(e.imm_lo, e.imm_hi);
    case ElementKind::kOpcode:
      break;
  }
  throw InvalidProgram("opcode '" + e.name + "' drawn as an operand");
}

Operand draw_operand(const IsaGraph& g, const ConstraintSet& c, const OperandSource& src,
                     std::int64_t pc, std::int64_t length, Rng& rng) {
  if (src.kind == OperandSource::Kind::kDraw) {
    const Element& e = descend(g, c, src.set, rng);
    return {e.kind == ElementKind::kRegister ? Operand::Kind::kRegister : Operand::Kind::kImmediate,
            draw_value(e, rng)};
  }
  std::int64_t target = pc;
  for (int attempt = 0; attempt < kMaxTargetResamples; ++attempt) {
    target = pc + draw_value(descend(g, c, src.set, rng), rng);
    if (target >= 0 && target < length) return {Operand::Kind::kTarget, target};
  }
  return {Operand::Kind::kTarget, std::clamp<std::int64_t>(target, 0, length - 1)};
}

bool parse_int(std::string_view s, std::int64_t& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

ConstraintSet state_to_constraints(std::span<const double> state,
                                   std::span<const InstancePair> pairs) {
  if (state.size() != pairs.size()) {
    throw InvalidSize("state has " + std::to_string(state.size()) + " entries, instance vector " +
                      std::to_string(pairs.size()));
  }
  std::unordered_map<std::string_view, double> sums;
  for (std::size_t i = 0; i < pairs.size(); ++i) sums[pairs[i].set] += state[i];
  std::vector<double> p(state.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double denom = sums[pairs[i].set];
    if (!(denom > 0.0)) throw EmptySet("set '" + pairs[i].set + "' has no probability mass");
    p[i] = state[i] / denom;
  }
  return ConstraintSet(std::move(p));
}

ConstraintSet uniform_constraints(const IsaGraph& graph) {
  std::vector<double> half(graph.neuron_count(), 0.5);
  return state_to_constraints(half, graph.pairs());
}

Program generate_program(const IsaGraph& graph, const ConstraintSet& constraints,
                         std::size_t length, std::uint64_t seed) {
  if (constraints.size() != graph.neuron_count()) {
    throw InvalidSize("constraint set does not match the instance vector");
  }
  Rng rng(seed);
  Program prog;
  prog.seed = seed;
  prog.instructions.reserve(length);
  const auto len = static_cast<std::int64_t>(length);
  for (std::int64_t pc = 0; pc < len; ++pc) {
    const Element& op = descend(graph, constraints, graph.root(), rng);
    if (op.kind != ElementKind::kOpcode) {
      throw InvalidProgram("instruction slot resolved to non-opcode '" + op.name + "'");
    }
    Instruction ins{op.name, {}};
    ins.operands.reserve(op.operands.size());
    for (const OperandSource& src : op.operands) {
      ins.operands.push_back(draw_operand(graph, constraints, src, pc, len, rng));
    }
    prog.instructions.push_back(std::move(ins));
  }
  return prog;
}

std::string sample_element(const IsaGraph& graph, const ConstraintSet& constraints,
                           std::string_view set, std::uint64_t seed) {
  Rng rng(seed);
  return descend(graph, constraints, set, rng).name;
}

std::string serialize(const Program& program) {
  std::string out;
  for (const Instruction& ins : program.instructions) {
    out += ins.opcode;
    for (const Operand& o : ins.operands) {
      out += ' ';
      switch (o.kind) {
        case Operand::Kind::kRegister:
          out += 'r';
          break;
        case Operand::Kind::kTarget:
          out += '@';
          break;
        case Operand::Kind::kImmediate:
          break;
      }
      out += std::to_string(o.value);
    }
    out += '\n';
  }
  return out;
}

Program deserialize(std::string_view text) {
  Program prog;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);

    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && std::strchr(" \t\r,", line[i])) ++i;
      std::size_t start = i;
      while (i < line.size() && !std::strchr(" \t\r,", line[i])) ++i;
      if (i > start) tokens.push_back(line.substr(start, i - start));
    }
    if (tokens.empty()) continue;

    Instruction ins{std::string(tokens[0]), {}};
    for (std::size_t k = 1; k < tokens.size(); ++k) {
      std::string_view t = tokens[k];
      Operand o;
      std::string_view digits = t;
      if (t.front() == 'r') {
        o.kind = Operand::Kind::kRegister;
        digits.remove_prefix(1);
      } else if (t.front() == '@') {
        o.kind = Operand::Kind::kTarget;
        digits.remove_prefix(1);
      }
      if (!parse_int(digits, o.value)) {
        throw InvalidProgram("line " + std::to_string(line_no) + ": bad operand '" +
                             std::string(t) + "'");
      }
      ins.operands.push_back(o);
    }
    prog.instructions.push_back(std::move(ins));
  }
  return prog;
}

std::uint64_t hash_state(std::span<const double> state) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : state) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace covrnn
