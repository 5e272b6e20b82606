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
#include "covrnn/duv.h"

#include <functional>

#include "covrnn/errors.h"

namespace covrnn::duv {
namespace {

enum class Slot { kReg, kImm, kTarget };

std::vector<Slot> slots(Format f) {
  switch (f) {
    case Format::kRegRegReg:
      return {Slot::kReg, Slot::kReg, Slot::kReg};
    case Format::kRegRegImm:
      return {Slot::kReg, Slot::kReg, Slot::kImm};
    case Format::kRegImm:
      return {Slot::kReg, Slot::kImm};
    case Format::kRegRegTarget:
      return {Slot::kReg, Slot::kReg, Slot::kTarget};
    case Format::kRegTarget:
      return {Slot::kReg, Slot::kTarget};
    case Format::kNone:
      return {};
  }
  return {};
}

bool has_imm(Format f) { return f == Format::kRegRegImm || f == Format::kRegImm; }

bool is_conditional_branch(Opcode op) {
  return op == Opcode::kBeq || op == Opcode::kBne || op == Opcode::kBlt;
}

bool writes_register(Opcode op) {
  switch (op) {
    case Opcode::kSw:
    case Opcode::kBeq:
    case Opcode::kBne:
    case Opcode::kBlt:
    case Opcode::kNop:
      return false;
    default:
      return true;
  }
}

const char* imm_bucket(std::int64_t v) {
  if (v == 0) return "zero";
  if (v == kImmMax) return "max";
  return v < 0 ? "neg" : "pos";
}

void collect_leaves(const IsaGraph& g, std::string_view set, std::vector<const Element*>& out) {
  for (std::size_t idx : g.pairs_of_set(set)) {
    const std::string& m = g.pairs()[idx].member;
    if (const Element* e = g.find_element(m)) {
      out.push_back(e);
    } else {
      collect_leaves(g, m, out);
    }
  }
}

}  // namespace

const std::vector<OpcodeInfo>& opcode_table() {
  static const std::vector<OpcodeInfo> table = {
      {"ADD", Opcode::kAdd, Format::kRegRegReg},     {"SUB", Opcode::kSub, Format::kRegRegReg},
      {"AND", Opcode::kAnd, Format::kRegRegReg},     {"OR", Opcode::kOr, Format::kRegRegReg},
      {"XOR", Opcode::kXor, Format::kRegRegReg},     {"SLT", Opcode::kSlt, Format::kRegRegReg},
      {"SLL", Opcode::kSll, Format::kRegRegReg},     {"SRL", Opcode::kSrl, Format::kRegRegReg},
      {"ADDI", Opcode::kAddi, Format::kRegRegImm},   {"ANDI", Opcode::kAndi, Format::kRegRegImm},
      {"ORI", Opcode::kOri, Format::kRegRegImm},     {"LUI", Opcode::kLui, Format::kRegImm},
      {"LW", Opcode::kLw, Format::kRegRegImm},       {"SW", Opcode::kSw, Format::kRegRegImm},
      {"BEQ", Opcode::kBeq, Format::kRegRegTarget},  {"BNE", Opcode::kBne, Format::kRegRegTarget},
      {"BLT", Opcode::kBlt, Format::kRegRegTarget},  {"JAL", Opcode::kJal, Format::kRegTarget},
      {"NOP", Opcode::kNop, Format::kNone},
  };
  return table;
}

const OpcodeInfo* find_opcode(std::string_view mnemonic) {
  for (const OpcodeInfo& info : opcode_table()) {
    if (info.mnemonic == mnemonic) return &info;
  }
  return nullptr;
}

void CoverageModel::Metric::add(std::string name) {
  ids.emplace(name, names.size());
  names.push_back(std::move(name));
}

CoverageModel::CoverageModel(const IsaGraph& graph) {
  for (const Element* e : graph.opcodes()) {
    const OpcodeInfo* info = find_opcode(e->name);
    if (info == nullptr) throw ConfigError("opcode '" + e->name + "' is not implemented by the core");
    const auto expected = slots(info->format);
    if (expected.size() != e->operands.size()) {
      throw ConfigError("opcode '" + e->name + "' expects " + std::to_string(expected.size()) +
                        " operands, ISA gives " + std::to_string(e->operands.size()));
    }
    for (std::size_t k = 0; k < expected.size(); ++k) {
      const OperandSource& src = e->operands[k];
      if ((expected[k] == Slot::kTarget) != (src.kind == OperandSource::Kind::kTarget)) {
        throw ConfigError("opcode '" + e->name + "' operand " + std::to_string(k) +
                          " has the wrong source kind");
      }
      std::vector<const Element*> leaves;
      collect_leaves(graph, src.set, leaves);
      const ElementKind want =
          expected[k] == Slot::kReg ? ElementKind::kRegister : ElementKind::kImmediate;
      for (const Element* leaf : leaves) {
        if (leaf->kind != want) {
          throw ConfigError("opcode '" + e->name + "' operand " + std::to_string(k) +
                            " draws '" + leaf->name + "' of kind " +
                            std::string(to_string(leaf->kind)));
        }
        if (want == ElementKind::kRegister && leaf->register_index >= kRegisterCount) {
          throw ConfigError("register '" + leaf->name + "' does not exist on the core");
        }
        if (expected[k] == Slot::kImm && (leaf->imm_lo < kImmMin || leaf->imm_hi > kImmMax)) {
          throw ConfigError("immediate '" + leaf->name + "' exceeds the 12-bit field");
        }
      }
    }
    opcodes_.push_back(*info);
  }

  Metric& func = metrics_[std::string(kFunctional)];
  Metric& stmt = metrics_[std::string(kStatement)];
  Metric& branch = metrics_[std::string(kBranch)];

  bool any_writer = false;
  bool any_redirect = false;
  bool any_load = false;
  bool any_store = false;
  for (const OpcodeInfo& op : opcodes_) {
    any_writer = any_writer || writes_register(op.opcode);
    any_redirect = any_redirect || is_conditional_branch(op.opcode) || op.opcode == Opcode::kJal;
    any_load = any_load || op.opcode == Opcode::kLw;
    any_store = any_store || op.opcode == Opcode::kSw;
  }

  for (const OpcodeInfo& op : opcodes_) func.add("op." + std::string(op.mnemonic));
  if (any_writer) {
    for (int r = 0; r < kRegisterCount; ++r) func.add("rd.r" + std::to_string(r));
  }
  for (const OpcodeInfo& op : opcodes_) {
    if (!has_imm(op.format)) continue;
    for (const char* b : {"zero", "pos", "neg", "max"}) {
      func.add("imm." + std::string(op.mnemonic) + "." + b);
    }
  }
  for (const OpcodeInfo& op : opcodes_) {
    if (!is_conditional_branch(op.opcode)) continue;
    func.add("br." + std::string(op.mnemonic) + ".taken");
    func.add("br." + std::string(op.mnemonic) + ".not_taken");
  }
  for (const OpcodeInfo& a : opcodes_) {
    for (const OpcodeInfo& b : opcodes_) {
      func.add("pair." + std::string(a.mnemonic) + "." + std::string(b.mnemonic));
    }
  }

  for (const OpcodeInfo& op : opcodes_) stmt.add("exec." + std::string(op.mnemonic));
  if (any_writer) {
    stmt.add("reg.write");
    stmt.add("reg.write_r0_ignored");
  }
  stmt.add("pc.advance");
  if (any_redirect) stmt.add("pc.redirect");
  if (any_load) stmt.add("mem.read");
  if (any_store) stmt.add("mem.write");
  if (any_load || any_store) stmt.add("mem.addr_wrap");

  for (const OpcodeInfo& op : opcodes_) {
    const std::string m(op.mnemonic);
    if (is_conditional_branch(op.opcode) || op.opcode == Opcode::kSlt) {
      branch.add("cond." + m + ".T");
      branch.add("cond." + m + ".F");
    }
    if (op.opcode == Opcode::kLw || op.opcode == Opcode::kSw) {
      branch.add("cond." + m + ".wrap.T");
      branch.add("cond." + m + ".wrap.F");
    }
    if (op.opcode == Opcode::kSll || op.opcode == Opcode::kSrl) {
      branch.add("cond." + m + ".shamt_zero.T");
      branch.add("cond." + m + ".shamt_zero.F");
    }
  }
  if (any_writer) {
    branch.add("cond.rd_is_r0.T");
    branch.add("cond.rd_is_r0.F");
  }

  for (const auto& [name, metric] : metrics_) {
    if (metric.names.empty()) throw ConfigError("ISA yields no " + name + " coverage bins");
  }
}

const std::vector<std::string>& CoverageModel::bin_names(std::string_view metric) const {
  auto it = metrics_.find(metric);
  if (it == metrics_.end()) throw MissingMetric("metric '" + std::string(metric) + "' not modelled");
  return it->second.names;
}

std::optional<std::size_t> CoverageModel::bin_id(std::string_view metric, std::string_view name) const {
  auto it = metrics_.find(metric);
  if (it == metrics_.end()) return std::nullopt;
  auto b = it->second.ids.find(std::string(name));
  if (b == it->second.ids.end()) return std::nullopt;
  return b->second;
}

CoverageSnapshot CoverageModel::empty_snapshot() const {
  CoverageSnapshot s;
  for (const auto& [name, metric] : metrics_) s.add_metric(name, metric.names.size());
  return s;
}

bool CoverageModel::implements(std::string_view mnemonic) const {
  for (const OpcodeInfo& op : opcodes_) {
    if (op.mnemonic == mnemonic) return true;
  }
  return false;
}

std::map<std::string, std::size_t> total_bins(const CoverageModel& model) {
  std::map<std::string, std::size_t> out;
  for (std::string_view m : {kFunctional, kStatement, kBranch}) {
    out.emplace(std::string(m), model.bin_names(m).size());
  }
  return out;
}

void validate_program(const CoverageModel& model, const Program& program) {
  const auto len = static_cast<std::int64_t>(program.size());
  for (std::size_t pc = 0; pc < program.size(); ++pc) {
    const Instruction& ins = program.instructions[pc];
    auto fail = [&](const std::string& why) {
      throw InvalidProgram("instruction " + std::to_string(pc) + " (" + ins.opcode + "): " + why);
    };
    const OpcodeInfo* info = find_opcode(ins.opcode);
    if (info == nullptr || !model.implements(ins.opcode)) fail("unknown opcode");
    const auto expected = slots(info->format);
    if (expected.size() != ins.operands.size()) fail("wrong operand count");
    for (std::size_t k = 0; k < expected.size(); ++k) {
      const Operand& o = ins.operands[k];
      switch (expected[k]) {
        case Slot::kReg:
          if (o.kind != Operand::Kind::kRegister) fail("operand " + std::to_string(k) + " must be a register");
          if (o.value < 0 || o.value >= kRegisterCount) fail("register out of range");
          break;
        case Slot::kImm:
          if (o.kind != Operand::Kind::kImmediate) fail("operand " + std::to_string(k) + " must be an immediate");
          if (o.value < kImmMin || o.value > kImmMax) fail("immediate out of range");
          break;
        case Slot::kTarget:
          if (o.kind != Operand::Kind::kTarget) fail("operand " + std::to_string(k) + " must be a target");
          if (o.value < 0 || o.value >= len) fail("target outside the program");
          break;
      }
    }
  }
}

namespace {

class Executor {
 public:
  Executor(const CoverageModel& model, SimulationResult& out)
      : model_(model),
        out_(out),
        func_(out.coverage.metric(kFunctional)),
        stmt_(out.coverage.metric(kStatement)),
        branch_(out.coverage.metric(kBranch)) {}

  void hit(MetricBins& bins, std::string_view metric, const std::string& name) {
    // Every name produced below exists in the model for the opcodes present.
    bins.hit(*model_.bin_id(metric, name));
  }
  void func(const std::string& n) { hit(func_, kFunctional, n); }
  void stmt(const std::string& n) { hit(stmt_, kStatement, n); }
  void cond(const std::string& n, bool outcome) {
    hit(branch_, kBranch, "cond." + n + (outcome ? ".T" : ".F"));
  }

  void write(std::int64_t rd, std::uint32_t value) {
    func("rd.r" + std::to_string(rd));
    const bool zero = rd == 0;
    cond("rd_is_r0", zero);
    if (zero) {
      stmt("reg.write_r0_ignored");
    } else {
      stmt("reg.write");
      s().regs[static_cast<std::size_t>(rd)] = value;
    }
  }

  std::size_t address(const std::string& m, std::uint32_t base, std::int64_t offset) {
    const std::int64_t raw = static_cast<std::int64_t>(static_cast<std::int32_t>(base)) + offset;
    const auto words = static_cast<std::int64_t>(kMemoryWords);
    const bool wrap = raw < 0 || raw >= words;
    cond(m + ".wrap", wrap);
    if (wrap) stmt("mem.addr_wrap");
    return static_cast<std::size_t>(((raw % words) + words) % words);
  }

  ProcessorState& s() { return out_.final_state; }

  std::uint32_t reg(const Operand& o) { return s().regs[static_cast<std::size_t>(o.value)]; }

  void step(const Instruction& ins, const OpcodeInfo& info) {
    const std::string m(info.mnemonic);
    const auto& ops = ins.operands;
    func("op." + m);
    stmt("exec." + m);
    if (has_imm(info.format)) func("imm." + m + "." + imm_bucket(ops.back().value));

    std::int64_t next = s().pc + 1;
    switch (info.opcode) {
      case Opcode::kAdd:
        write(ops[0].value, reg(ops[1]) + reg(ops[2]));
        break;
      case Opcode::kSub:
        write(ops[0].value, reg(ops[1]) - reg(ops[2]));
        break;
      case Opcode::kAnd:
        write(ops[0].value, reg(ops[1]) & reg(ops[2]));
        break;
      case Opcode::kOr:
        write(ops[0].value, reg(ops[1]) | reg(ops[2]));
        break;
      case Opcode::kXor:
        write(ops[0].value, reg(ops[1]) ^ reg(ops[2]));
        break;
      case Opcode::kSlt: {
        const bool lt = static_cast<std::int32_t>(reg(ops[1])) < static_cast<std::int32_t>(reg(ops[2]));
        cond(m, lt);
        write(ops[0].value, lt ? 1u : 0u);
        break;
      }
      case Opcode::kSll:
      case Opcode::kSrl: {
        const std::uint32_t shamt = reg(ops[2]) & 31u;
        cond(m + ".shamt_zero", shamt == 0);
        const std::uint32_t v = info.opcode == Opcode::kSll ? reg(ops[1]) << shamt : reg(ops[1]) >> shamt;
        write(ops[0].value, v);
        break;
      }
      case Opcode::kAddi:
        write(ops[0].value, reg(ops[1]) + static_cast<std::uint32_t>(ops[2].value));
        break;
      case Opcode::kAndi:
        write(ops[0].value, reg(ops[1]) & static_cast<std::uint32_t>(ops[2].value));
        break;
      case Opcode::kOri:
        write(ops[0].value, reg(ops[1]) | static_cast<std::uint32_t>(ops[2].value));
        break;
      case Opcode::kLui:
        write(ops[0].value, static_cast<std::uint32_t>(ops[1].value) << 20);
        break;
      case Opcode::kLw: {
        const std::size_t a = address(m, reg(ops[1]), ops[2].value);
        stmt("mem.read");
        write(ops[0].value, s().memory[a]);
        break;
      }
      case Opcode::kSw: {
        const std::size_t a = address(m, reg(ops[1]), ops[2].value);
        stmt("mem.write");
        s().memory[a] = reg(ops[0]);
        break;
      }
      case Opcode::kBeq:
      case Opcode::kBne:
      case Opcode::kBlt: {
        bool taken = false;
        if (info.opcode == Opcode::kBeq) {
          taken = reg(ops[0]) == reg(ops[1]);
        } else if (info.opcode == Opcode::kBne) {
          taken = reg(ops[0]) != reg(ops[1]);
        } else {
          taken = static_cast<std::int32_t>(reg(ops[0])) < static_cast<std::int32_t>(reg(ops[1]));
        }
        cond(m, taken);
        func("br." + m + (taken ? ".taken" : ".not_taken"));
        if (taken) next = ops[2].value;
        break;
      }
      case Opcode::kJal:
        write(ops[0].value, static_cast<std::uint32_t>(s().pc + 1));
        next = ops[1].value;
        break;
      case Opcode::kNop:
        break;
    }
    stmt(next == s().pc + 1 ? "pc.advance" : "pc.redirect");
    s().pc = next;
  }

 private:
  const CoverageModel& model_;
  SimulationResult& out_;
  MetricBins& func_;
  MetricBins& stmt_;
  MetricBins& branch_;
};

}  // namespace

SimulationResult run(const CoverageModel& model, const Program& program, std::uint64_t max_cycles) {
  validate_program(model, program);

  // Decode once; the table lookup is by string.
  std::vector<const OpcodeInfo*> decoded;
  decoded.reserve(program.size());
  for (const Instruction& ins : program.instructions) decoded.push_back(find_opcode(ins.opcode));

  SimulationResult out{model.empty_snapshot(), {}, HaltReason::kEndOfProgram};
  Executor exec(model, out);
  ProcessorState& s = out.final_state;
  const auto len = static_cast<std::int64_t>(program.size());
  const OpcodeInfo* previous = nullptr;
  while (s.pc < len) {
    if (s.cycles >= max_cycles) {
      out.halt = HaltReason::kCycleBudget;
      break;
    }
    const auto pc = static_cast<std::size_t>(s.pc);
    const OpcodeInfo& info = *decoded[pc];
    if (previous != nullptr) {
      exec.func("pair." + std::string(previous->mnemonic) + "." + std::string(info.mnemonic));
    }
    previous = &info;
    exec.step(program.instructions[pc], info);
    ++s.cycles;
  }
  s.halted = true;
  return out;
}

CoverageSnapshot simulate(const CoverageModel& model, const Program& program,
                          std::uint64_t max_cycles) {
  return run(model, program, max_cycles).coverage;
}

}  // namespace covrnn::duv
