#include "machine.hpp"

#include <unordered_map>

namespace tfsm {

const char* opcode_name(Opcode op) noexcept {
  switch (op) {
    case Opcode::PutNode: return "PUT_NODE";
    case Opcode::PutRef: return "PUT_REF";
    case Opcode::SetArc: return "SET_ARC";
    case Opcode::GetNode: return "GET_NODE";
    case Opcode::GetArc: return "GET_ARC";
    case Opcode::UnifyRegs: return "UNIFY_REGS";
    case Opcode::BindConstituent: return "BIND_CONSTITUENT";
    case Opcode::AdvanceDot: return "ADVANCE_DOT";
    case Opcode::BuildHead: return "BUILD_HEAD";
    case Opcode::Proceed: return "PROCEED";
  }
  return "?";
}

namespace {

class RuleCompiler {
 public:
  RuleCompiler(const RuleTemplate& t, std::uint32_t cap) : t_(t), h_(t.heap), sig_(t.heap.signature()), cap_(cap) {}

  CodeFragment run() {
    count_indegrees();
    auto n = static_cast<std::uint32_t>(t_.arity());
    next_ = n + 1;
    if (next_ > cap_) overflow();
    for (std::uint32_t k = 1; k <= n; ++k) {
      if (k > 1) {
        emit({Opcode::AdvanceDot});
        out_.resume.push_back(static_cast<std::uint32_t>(out_.code.size()));
      }
      emit({Opcode::BindConstituent, k});
      CellRef r = h_.deref(t_.roots[k]);
      auto it = regs_.find(r);
      if (it != regs_.end()) {
        emit({Opcode::UnifyRegs, it->second, k});
      } else {
        regs_.emplace(r, k);
        get(r, k, kBot);
      }
    }
    CellRef head = h_.deref(t_.head());
    TypeId type = h_.cell(head).type;
    auto it = regs_.find(head);
    if (it != regs_.end()) {
      emit({Opcode::PutRef, it->second, 0});
    } else {
      regs_.emplace(head, 0);
      if (!leaf(head)) {
        emit({Opcode::PutNode, index(type), 0});
        set_arcs(head, 0);
      }
    }
    emit({Opcode::BuildHead, 0, index(type)});
    emit({Opcode::Proceed});
    out_.registers = next_;
    return std::move(out_);
  }

 private:
  void emit(Instruction i) { out_.code.push_back(i); }

  [[noreturn]] void overflow() const {
    throw CompileError(ErrorCode::RegisterOverflow,
                       "rule " + (t_.name.empty() ? std::string("(unnamed)") : t_.name) + " needs more than " +
                           std::to_string(cap_) + " registers",
                       {t_.name}, t_.pos);
  }

  RegId fresh() {
    if (next_ >= cap_) overflow();
    return next_++;
  }

  void count_indegrees() {
    std::vector<CellRef> work;
    for (CellRef r : t_.roots) {
      CellRef d = h_.deref(r);
      if (indegree_[d]++ == 0) work.push_back(d);
    }
    while (!work.empty()) {
      CellRef r = work.back();
      work.pop_back();
      const Cell& c = h_.cell(r);
      if (c.kind != CellKind::Node) continue;
      std::size_t arity = sig_.features_of(c.type).size();
      for (std::size_t i = 0; i < arity; ++i) {
        CellRef d = h_.deref(r + 1 + static_cast<CellRef>(i));
        if (indegree_[d]++ == 0) work.push_back(d);
      }
    }
  }

  // Unshared, of the restriction type, with trivial arcs: nothing to do.
  bool trivial(CellRef r, TypeId restriction) const {
    if (indegree_.at(r) > 1) return false;
    const Cell& c = h_.cell(r);
    if (c.type != restriction) return false;
    return leaf(r);
  }

  bool leaf(CellRef r) const {
    const Cell& c = h_.cell(r);
    if (c.kind != CellKind::Node) return true;
    auto approp = sig_.features_of(c.type);
    for (std::size_t i = 0; i < approp.size(); ++i)
      if (!trivial(h_.deref(r + 1 + static_cast<CellRef>(i)), approp[i].restriction)) return false;
    return true;
  }

  void get(CellRef r, RegId reg, TypeId restriction) {
    const Cell& c = h_.cell(r);
    if (c.type != restriction) emit({Opcode::GetNode, index(c.type), reg});
    if (c.kind != CellKind::Node) return;
    auto approp = sig_.features_of(c.type);
    for (std::size_t i = 0; i < approp.size(); ++i) {
      CellRef child = h_.deref(r + 1 + static_cast<CellRef>(i));
      std::uint32_t f = index(approp[i].feat);
      auto it = regs_.find(child);
      if (it != regs_.end()) {
        RegId tmp = fresh();
        emit({Opcode::GetArc, reg, f, tmp});
        emit({Opcode::UnifyRegs, it->second, tmp});
        continue;
      }
      if (trivial(child, approp[i].restriction)) continue;
      RegId cr = fresh();
      regs_.emplace(child, cr);
      emit({Opcode::GetArc, reg, f, cr});
      get(child, cr, approp[i].restriction);
    }
  }

  RegId build(CellRef r) {
    auto it = regs_.find(r);
    if (it != regs_.end()) return it->second;
    RegId reg = fresh();
    regs_.emplace(r, reg);
    emit({Opcode::PutNode, index(h_.cell(r).type), reg});
    set_arcs(r, reg);
    return reg;
  }

  void set_arcs(CellRef r, RegId reg) {
    const Cell& c = h_.cell(r);
    if (c.kind != CellKind::Node) return;
    auto approp = sig_.features_of(c.type);
    for (std::size_t i = 0; i < approp.size(); ++i) {
      CellRef child = h_.deref(r + 1 + static_cast<CellRef>(i));
      if (trivial(child, approp[i].restriction)) continue;
      RegId v = build(child);
      emit({Opcode::SetArc, reg, index(approp[i].feat), v});
    }
  }

  const RuleTemplate& t_;
  const Heap& h_;
  const Signature& sig_;
  std::uint32_t cap_;
  std::uint32_t next_ = 0;
  std::unordered_map<CellRef, int> indegree_;
  std::unordered_map<CellRef, RegId> regs_;
  CodeFragment out_;
};

}  // namespace

CodeFragment compile_rule(const RuleTemplate& rule, std::uint32_t register_cap) {
  return RuleCompiler(rule, register_cap).run();
}

std::uint32_t Program::add_rule(const RuleTemplate& rule, std::uint32_t register_cap) {
  CodeFragment f = compile_rule(rule, register_cap);
  RuleEntry e;
  e.name = rule.name;
  e.entry = static_cast<std::uint32_t>(code.size());
  for (auto r : f.resume) e.resume.push_back(e.entry + r);
  e.arity = static_cast<std::uint32_t>(rule.arity());
  e.registers = f.registers;
  e.initial_only = rule.initial_only;
  code.insert(code.end(), f.code.begin(), f.code.end());
  rules.push_back(std::move(e));
  return static_cast<std::uint32_t>(rules.size() - 1);
}

void Program::add_lexical(const std::string& word, const Heap& src, CellRef root) {
  CellRef r = store.copy_in(src, root);
  lexicon.emplace_back(word, store.freeze(r));
}

std::vector<CellRef> Program::lookup(std::string_view word) const {
  std::vector<CellRef> out;
  for (const auto& [w, r] : lexicon)
    if (w == word) out.push_back(r);
  return out;
}

std::string format_instruction(const Instruction& ins, const Signature& sig) {
  auto reg = [](std::uint32_t r) { return "X" + std::to_string(r); };
  auto type = [&](std::uint32_t t) { return sig.type_name(TypeId{t}); };
  auto feat = [&](std::uint32_t f) { return sig.feature_name(FeatId{f}); };
  std::string s = opcode_name(ins.op);
  switch (ins.op) {
    case Opcode::PutNode:
    case Opcode::GetNode: return s + " " + type(ins.a) + ", " + reg(ins.b);
    case Opcode::PutRef:
    case Opcode::UnifyRegs: return s + " " + reg(ins.a) + ", " + reg(ins.b);
    case Opcode::SetArc:
    case Opcode::GetArc: return s + " " + reg(ins.a) + ", " + feat(ins.b) + ", " + reg(ins.c);
    case Opcode::BindConstituent: return s + " " + std::to_string(ins.a);
    case Opcode::BuildHead: return s + " " + reg(ins.a) + ", " + type(ins.b);
    case Opcode::AdvanceDot:
    case Opcode::Proceed: return s;
  }
  return s;
}

std::string disassemble(std::span<const Instruction> code, const Signature& sig) {
  std::string out;
  for (const auto& i : code) out += format_instruction(i, sig) + "\n";
  return out;
}

std::string disassemble(const Program& p) {
  std::string out;
  const Signature& sig = p.signature();
  for (std::size_t r = 0; r < p.rules.size(); ++r) {
    const RuleEntry& e = p.rules[r];
    std::uint32_t end = r + 1 < p.rules.size() ? p.rules[r + 1].entry : static_cast<std::uint32_t>(p.code.size());
    out += "; rule " + std::to_string(r) + " " + (e.name.empty() ? std::string("(unnamed)") : e.name) + " arity " +
           std::to_string(e.arity) + " registers " + std::to_string(e.registers) + (e.initial_only ? " initial" : "") +
           "\n";
    for (std::uint32_t pc = e.entry; pc < end; ++pc) {
      std::string off = std::to_string(pc);
      out += std::string(off.size() < 5 ? 5 - off.size() : 0, ' ') + off + "  " + format_instruction(p.code[pc], sig) +
             "\n";
    }
  }
  return out;
}

void Machine::start(std::uint32_t rule, std::span<const CellRef> constituents) {
  const RuleEntry& e = program_.rules.at(rule);
  heap_.discard();
  regs_.assign(e.registers, kNullRef);
  constituents_.assign(constituents.begin(), constituents.end());
  first_ = 0;
  pc_ = e.entry;
  rule_ = rule;
  bound_ = 0;
  head_ = 0;
  result_ = kNullRef;
  failure_.reset();
  status_ = MachineStatus::Running;
}

void Machine::resume(const Snapshot& s, std::span<const CellRef> constituents) {
  heap_.discard();
  regs_ = s.regs;
  heap_.import_scratch(s.cells, regs_);
  constituents_.assign(constituents.begin(), constituents.end());
  first_ = s.bound;
  pc_ = s.pc;
  rule_ = s.rule;
  bound_ = s.bound;
  head_ = 0;
  result_ = kNullRef;
  failure_.reset();
  status_ = MachineStatus::Running;
}

CellRef Machine::reg(std::uint32_t r) const {
  if (r >= regs_.size() || regs_[r] == kNullRef)
    throw RuntimeError(ErrorCode::MachineFault, "read of unset register X" + std::to_string(r) + " at " +
                                                    std::to_string(pc_));
  return regs_[r];
}

MachineStatus Machine::fail(std::optional<UnifyFailure> f) {
  heap_.discard();
  failure_ = std::move(f);
  return status_ = MachineStatus::Failed;
}

MachineStatus Machine::step() {
  if (status_ != MachineStatus::Running) return status_;
  if (pc_ >= program_.code.size())
    throw RuntimeError(ErrorCode::MachineFault, "code offset " + std::to_string(pc_) + " out of range");
  const Instruction ins = program_.code[pc_];
  if (on_step) on_step(*this, ins);
  ++steps_;
  ++pc_;
  auto set = [&](std::uint32_t r, CellRef v) {
    if (r >= regs_.size()) throw RuntimeError(ErrorCode::MachineFault, "register X" + std::to_string(r) + " out of range");
    regs_[r] = v;
  };
  UnifyFailure f;
  switch (ins.op) {
    case Opcode::PutNode:
      set(ins.b, heap_.new_node(TypeId{ins.a}));
      break;
    case Opcode::PutRef:
      set(ins.b, reg(ins.a));
      break;
    case Opcode::SetArc: {
      auto slot = heap_.arc(reg(ins.a), FeatId{ins.b});
      if (!slot) return fail(UnifyFailure{{}, heap_.type_of(reg(ins.a)), program_.signature().introducer(FeatId{ins.b})});
      if (!heap_.unify(*slot, reg(ins.c), &f)) return fail(f);
      break;
    }
    case Opcode::GetNode:
      if (!heap_.constrain(reg(ins.b), TypeId{ins.a}, &f)) return fail(f);
      break;
    case Opcode::GetArc: {
      auto slot = heap_.arc(reg(ins.a), FeatId{ins.b});
      if (!slot) return fail(UnifyFailure{{}, heap_.type_of(reg(ins.a)), program_.signature().introducer(FeatId{ins.b})});
      set(ins.c, *slot);
      break;
    }
    case Opcode::UnifyRegs:
      if (!heap_.unify(reg(ins.a), reg(ins.b), &f)) return fail(f);
      break;
    case Opcode::BindConstituent: {
      std::uint32_t k = ins.a;
      if (k == 0 || k - 1 < first_ || k - 1 - first_ >= constituents_.size())
        throw RuntimeError(ErrorCode::MachineFault, "constituent " + std::to_string(k) + " not available");
      set(k, heap_.copy_in(heap_, constituents_[k - 1 - first_]));
      bound_ = k;
      break;
    }
    case Opcode::AdvanceDot:
      if (bound_ - first_ < constituents_.size()) break;
      snapshot_.cells = heap_.export_scratch(regs_, snapshot_.regs);
      snapshot_.pc = pc_;
      snapshot_.rule = rule_;
      snapshot_.bound = bound_;
      heap_.discard();
      return status_ = MachineStatus::Suspended;
    case Opcode::BuildHead:
      if (ins.a >= regs_.size()) throw RuntimeError(ErrorCode::MachineFault, "head register out of range");
      if (regs_[ins.a] == kNullRef)
        regs_[ins.a] = heap_.new_lazy(TypeId{ins.b});
      else if (!heap_.constrain(regs_[ins.a], TypeId{ins.b}, &f))
        return fail(f);
      head_ = ins.a;
      break;
    case Opcode::Proceed:
      result_ = heap_.freeze(reg(head_));
      return status_ = MachineStatus::Succeeded;
  }
  return status_;
}

MachineStatus Machine::run() {
  while (step() == MachineStatus::Running) {
  }
  return status_;
}

}  // namespace tfsm
