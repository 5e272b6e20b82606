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
#ifndef COVRNN_PRG_H_
#define COVRNN_PRG_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "covrnn/isa_model.h"

namespace covrnn {

/// Categorical distribution for every set, stored per neuron: entry i is
/// P(pairs[i].member | pairs[i].set).
class ConstraintSet {
 public:
  ConstraintSet() = default;
  explicit ConstraintSet(std::vector<double> probabilities)
      : probabilities_(std::move(probabilities)) {}

  std::span<const double> probabilities() const { return probabilities_; }
  double operator[](std::size_t i) const { return probabilities_[i]; }
  std::size_t size() const { return probabilities_.size(); }

 private:
  std::vector<double> probabilities_;
};

/// Normalises neuron outputs within each set: p_i = v_i / sum_{j in set} v_j.
/// Throws InvalidSize on length mismatch and EmptySet when a set's outputs
/// sum to zero.
ConstraintSet state_to_constraints(std::span<const double> state,
                                   std::span<const InstancePair> pairs);

/// The default generator configuration: uniform choice in every set.
ConstraintSet uniform_constraints(const IsaGraph& graph);

struct Operand {
  enum class Kind { kRegister, kImmediate, kTarget };
  Kind kind = Kind::kImmediate;
  std::int64_t value = 0;

  friend bool operator==(const Operand&, const Operand&) = default;
};

struct Instruction {
  std::string opcode;
  std::vector<Operand> operands;

  friend bool operator==(const Instruction&, const Instruction&) = default;
};

/// One stimulus: an instruction stream loaded at address 0.
struct Program {
  std::vector<Instruction> instructions;
  std::uint64_t seed = 0;
  std::uint64_t state_hash = 0;

  std::size_t size() const { return instructions.size(); }
  bool empty() const { return instructions.empty(); }
};

/// Attempts at drawing an in-range control-flow target before clamping.
inline constexpr int kMaxTargetResamples = 100;

/// Samples `length` instructions by descending the ISA graph from the root
/// for each slot, then drawing each operand from its source set. Targets
/// that fall outside the program are redrawn, and clamped after
/// kMaxTargetResamples attempts. Pure function of its arguments.
Program generate_program(const IsaGraph& graph, const ConstraintSet& constraints,
                         std::size_t length, std::uint64_t seed);

/// Draws one element reachable from `set` (used for single-slot sampling).
std::string sample_element(const IsaGraph& graph, const ConstraintSet& constraints,
                           std::string_view set, std::uint64_t seed);

/// One instruction per line: `<opcode> <operands...>`, registers as rN,
/// targets as @index, immediates as signed decimals.
std::string serialize(const Program& program);

/// Inverse of serialize. Blank lines and `#` comments are ignored. Throws
/// InvalidProgram on malformed operands.
Program deserialize(std::string_view text);

/// FNV-1a over the bytes of a state vector; recorded as program metadata.
std::uint64_t hash_state(std::span<const double> state);

}  // namespace covrnn

#endif  // COVRNN_PRG_H_
