#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "expand.hpp"
#include "heap.hpp"

namespace tfsm {

using RegId = std::uint32_t;

enum class Opcode : std::uint8_t {
  PutNode,          // a=type, b=reg
  PutRef,           // a=src, b=dst
  SetArc,           // a=reg, b=feat, c=val
  GetNode,          // a=type, b=reg
  GetArc,           // a=reg, b=feat, c=dst
  UnifyRegs,        // a, b
  BindConstituent,  // a=k (1-based)
  AdvanceDot,
  BuildHead,        // a=reg, b=type
  Proceed,
};
constexpr std::size_t kOpcodeCount = 10;

const char* opcode_name(Opcode op) noexcept;

struct Instruction {
  Opcode op;
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  std::uint32_t c = 0;
  friend bool operator==(const Instruction&, const Instruction&) = default;
};

struct CodeFragment {
  std::vector<Instruction> code;
  std::uint32_t registers = 0;
  std::vector<std::uint32_t> resume;  // relative offsets just after each ADVANCE_DOT
};

constexpr std::uint32_t kDefaultRegisterCap = 4096;

// Translates an expanded rule into straight-line code. Throws
// CompileError(RegisterOverflow).
CodeFragment compile_rule(const RuleTemplate& rule, std::uint32_t register_cap = kDefaultRegisterCap);

struct RuleEntry {
  std::string name;
  std::uint32_t entry = 0;
  std::vector<std::uint32_t> resume;
  std::uint32_t arity = 0;
  std::uint32_t registers = 0;
  bool initial_only = false;  // fires only with an initial chart item as first constituent
};

// Compiled grammar for one direction. Lexical entries are kept as frozen
// structures in `store`.
struct Program {
  explicit Program(const Signature& sig) : store(sig) {}

  const Signature& signature() const { return store.signature(); }
  std::uint32_t add_rule(const RuleTemplate& rule, std::uint32_t register_cap = kDefaultRegisterCap);
  void add_lexical(const std::string& word, const Heap& src, CellRef root);
  std::vector<CellRef> lookup(std::string_view word) const;

  std::vector<Instruction> code;
  std::vector<RuleEntry> rules;
  Heap store;
  std::vector<std::pair<std::string, CellRef>> lexicon;  // source order
  std::uint32_t empty_categories = 0;
  bool non_equivalent = false;  // empty-category expansion stopped at its budget
};

std::string disassemble(std::span<const Instruction> code, const Signature& sig);
std::string disassemble(const Program& p);
std::string format_instruction(const Instruction& ins, const Signature& sig);

// Suspended rule attempt: the working region at an ADVANCE_DOT, with
// registers relative to the buffer.
struct Snapshot {
  std::vector<Cell> cells;
  std::vector<CellRef> regs;
  std::uint32_t pc = 0;
  std::uint32_t rule = 0;
  std::uint32_t bound = 0;  // constituents bound so far
};

enum class MachineStatus { Idle, Running, Suspended, Succeeded, Failed };

class Machine {
 public:
  Machine(const Program& program, Heap& heap) : program_(program), heap_(heap) {}

  // Begins rule `rule` with the given frozen constituents (usually one).
  void start(std::uint32_t rule, std::span<const CellRef> constituents);
  void resume(const Snapshot& s, std::span<const CellRef> constituents);
  MachineStatus step();
  MachineStatus run();

  MachineStatus status() const noexcept { return status_; }
  // Valid after Suspended.
  const Snapshot& snapshot() const noexcept { return snapshot_; }
  Snapshot take_snapshot() { return std::move(snapshot_); }
  // Frozen head structure, valid after Succeeded.
  CellRef result() const noexcept { return result_; }
  const std::optional<UnifyFailure>& failure() const noexcept { return failure_; }

  std::uint32_t pc() const noexcept { return pc_; }
  std::uint32_t rule() const noexcept { return rule_; }
  std::uint32_t dot() const noexcept { return bound_; }
  std::span<const CellRef> registers() const noexcept { return regs_; }
  const Heap& heap() const noexcept { return heap_; }
  const Program& program() const noexcept { return program_; }
  std::uint64_t steps() const noexcept { return steps_; }

  // Called before each instruction executes.
  std::function<void(const Machine&, const Instruction&)> on_step;

 private:
  CellRef reg(std::uint32_t r) const;
  MachineStatus fail(std::optional<UnifyFailure> f);

  const Program& program_;
  Heap& heap_;
  MachineStatus status_ = MachineStatus::Idle;
  std::vector<CellRef> regs_;
  std::vector<CellRef> constituents_;
  std::uint32_t first_ = 0;  // ordinal (0-based) of constituents_[0]
  std::uint32_t pc_ = 0;
  std::uint32_t rule_ = 0;
  std::uint32_t bound_ = 0;
  std::uint32_t head_ = 0;
  std::uint64_t steps_ = 0;
  Snapshot snapshot_;
  CellRef result_ = kNullRef;
  std::optional<UnifyFailure> failure_;
};

}  // namespace tfsm
