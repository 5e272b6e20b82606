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
#ifndef COVRNN_ISA_MODEL_H_
#define COVRNN_ISA_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace covrnn {

enum class ElementKind { kOpcode, kRegister, kImmediate };

std::string_view to_string(ElementKind kind);

/// Where an opcode draws one operand from.
struct OperandSource {
  enum class Kind {
    kDraw,    // sample an element of `set` and use it as the operand
    kTarget,  // sample an offset from `set`, operand is pc + offset
  };
  Kind kind = Kind::kDraw;
  std::string set;

  friend bool operator==(const OperandSource&, const OperandSource&) = default;
};

struct Element {
  std::string name;
  ElementKind kind = ElementKind::kOpcode;
  std::string payload;
  std::size_t line = 0;

  // Decoded payload; which fields are meaningful depends on `kind`.
  std::vector<OperandSource> operands;
  int register_index = -1;
  std::int64_t imm_lo = 0;
  std::int64_t imm_hi = 0;
};

struct IsaSet {
  std::string name;
  std::vector<std::string> members;
  std::size_t line = 0;
};

/// One (set, member) edge of the graph. Its position in the instance vector
/// is the index of the neuron that controls it.
struct InstancePair {
  std::string set;
  std::string member;

  friend bool operator==(const InstancePair&, const InstancePair&) = default;
};

/// Immutable, validated ISA description.
///
/// The member relation forms a DAG rooted at the first declared set. Opcode
/// payloads add operand edges (opcode -> operand set) that take part in the
/// acyclicity and reachability checks but are not instance pairs.
class IsaGraph {
 public:
  const std::string& root() const { return root_; }
  const std::vector<IsaSet>& sets() const { return sets_; }
  const std::vector<Element>& elements() const { return elements_; }
  const std::vector<InstancePair>& pairs() const { return pairs_; }
  std::size_t neuron_count() const { return pairs_.size(); }

  const IsaSet* find_set(std::string_view name) const;
  const Element* find_element(std::string_view name) const;
  bool contains(std::string_view name) const;

  /// Neuron indices of every (set, *) pair, in member order.
  std::span<const std::size_t> pairs_of_set(std::string_view set) const;

  /// Opcode elements in declaration order.
  std::vector<const Element*> opcodes() const;

 private:
  friend IsaGraph parse_isa(std::string_view text);

  std::string root_;
  std::vector<IsaSet> sets_;
  std::vector<Element> elements_;
  std::vector<InstancePair> pairs_;
  std::unordered_map<std::string, std::size_t> set_index_;
  std::unordered_map<std::string, std::size_t> element_index_;
  std::vector<std::vector<std::size_t>> set_pairs_;
};

/// Parses and validates an ISA description.
///
/// Grammar, one declaration per line, `#` starts a comment:
///
///     set <name> { <member> ... }
///     element <name> [kind=opcode|register|imm] [payload=...]
///
/// Payloads: opcodes list operand sources separated by commas (`gpr` or
/// `target:brofs`), registers give their index, immediates give `lo:hi`.
///
/// Throws ParseError, CycleError or UnknownReference.
IsaGraph parse_isa(std::string_view text);

IsaGraph load_isa_file(const std::filesystem::path& path);

/// Text of the toy ISA shipped with the library (data/toy.isa).
std::string_view bundled_isa_text();

std::vector<InstancePair> instance_vector(const IsaGraph& graph);

/// Probability that a draw starting at `from` (the root by default) ends at
/// `element`, summed over every path. `edge_probabilities` is indexed by
/// neuron, i.e. aligned with the instance vector, and gives P(member | set).
double path_probability(const IsaGraph& graph,
                        std::span<const double> edge_probabilities,
                        std::string_view element, std::string_view from = {});

}  // namespace covrnn

#endif  // COVRNN_ISA_MODEL_H_
