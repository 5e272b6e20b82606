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
#ifndef COVRNN_DUV_H_
#define COVRNN_DUV_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "covrnn/energy.h"
#include "covrnn/isa_model.h"
#include "covrnn/prg.h"

namespace covrnn {

/// Behavioural model of a small 32-bit RISC core used as the design under
/// verification. Eight registers (r0 reads as zero), 256 words of data
/// memory with wrapped addressing, one instruction per cycle, no traps.
namespace duv {

inline constexpr int kRegisterCount = 8;
inline constexpr std::size_t kMemoryWords = 256;
inline constexpr std::int64_t kImmMin = -2048;
inline constexpr std::int64_t kImmMax = 2047;

enum class Opcode {
  kAdd, kSub, kAnd, kOr, kXor, kSlt, kSll, kSrl,
  kAddi, kAndi, kOri, kLui,
  kLw, kSw,
  kBeq, kBne, kBlt, kJal,
  kNop,
};

enum class Format {
  kRegRegReg,     // rd rs1 rs2
  kRegRegImm,     // rd rs1 imm  (SW: rs2 rs1 imm)
  kRegImm,        // rd imm
  kRegRegTarget,  // rs1 rs2 @target
  kRegTarget,     // rd @target
  kNone,
};

struct OpcodeInfo {
  std::string_view mnemonic;
  Opcode opcode;
  Format format;
};

/// Every opcode the core implements.
const std::vector<OpcodeInfo>& opcode_table();
const OpcodeInfo* find_opcode(std::string_view mnemonic);

struct ProcessorState {
  std::array<std::uint32_t, kRegisterCount> regs{};
  std::int64_t pc = 0;
  std::array<std::uint32_t, kMemoryWords> memory{};
  std::uint64_t cycles = 0;
  bool halted = false;
};

enum class HaltReason { kEndOfProgram, kCycleBudget };

/// Coverage bins for the opcodes a given ISA exposes.
///
/// functional: op.<OP>, rd.rN, imm.<OP>.{zero,pos,neg,max},
///             br.<OP>.{taken,not_taken}, pair.<A>.<B> (dynamic sequence)
/// statement:  exec.<OP> plus shared actions (register write, pc update,
///             memory access)
/// branch:     both outcomes of every conditional in the semantics
class CoverageModel {
 public:
  /// Throws ConfigError when the ISA names an opcode the core does not
  /// implement, or when operand sources do not match the opcode format.
  explicit CoverageModel(const IsaGraph& graph);

  const std::vector<OpcodeInfo>& opcodes() const { return opcodes_; }

  /// Bin names of one metric; a bin's id is its index.
  const std::vector<std::string>& bin_names(std::string_view metric) const;
  std::optional<std::size_t> bin_id(std::string_view metric, std::string_view name) const;

  /// An empty snapshot over this model's universe.
  CoverageSnapshot empty_snapshot() const;

  bool implements(std::string_view mnemonic) const;

 private:
  struct Metric {
    std::vector<std::string> names;
    std::unordered_map<std::string, std::size_t> ids;
    void add(std::string name);
  };

  std::vector<OpcodeInfo> opcodes_;
  std::map<std::string, Metric, std::less<>> metrics_;
};

/// Per-metric bin counts of a model. Constant per ISA.
std::map<std::string, std::size_t> total_bins(const CoverageModel& model);

struct SimulationResult {
  CoverageSnapshot coverage;
  ProcessorState final_state;
  HaltReason halt = HaltReason::kEndOfProgram;
};

/// Throws InvalidProgram if any instruction is unknown to the model, has the
/// wrong operands, or jumps outside the program.
void validate_program(const CoverageModel& model, const Program& program);

/// Runs from pc 0 until the pc leaves the program or `max_cycles`
/// instructions have executed. Coverage holds only this run's hits.
SimulationResult run(const CoverageModel& model, const Program& program, std::uint64_t max_cycles);

CoverageSnapshot simulate(const CoverageModel& model, const Program& program,
                          std::uint64_t max_cycles);

/// Default cycle budget: ten cycles per instruction.
inline std::uint64_t default_max_cycles(std::size_t program_length) {
  return 10 * static_cast<std::uint64_t>(program_length);
}

}  // namespace duv
}  // namespace covrnn

#endif  // COVRNN_DUV_H_
