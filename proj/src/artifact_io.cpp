// Binary artifact: little-endian, magic "TFSM", format version, then
// length-prefixed sections in fixed order.
#include <algorithm>
#include <cstring>

#include "grammar.hpp"

namespace tfsm {

namespace {

Error bad(const std::string& why) { return Error(ErrorCode::BadArtifact, "bad artifact: " + why); }

class Writer {
 public:
  void u8(std::uint8_t v) { out.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
  }
  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(in_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(in_[pos_++]) << (8 * i);
    return v;
  }
  std::string str() {
    std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  // Element counts are bounded by the remaining bytes so a corrupt
  // length cannot trigger a huge allocation.
  std::uint32_t count(std::size_t min_element_size) {
    std::uint32_t n = u32();
    if (std::uint64_t(n) * min_element_size > in_.size() - pos_) throw bad("count exceeds data");
    return n;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) {
    if (in_.size() - pos_ < n) throw bad("truncated");
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void write_heap(Writer& w, const Heap& h) {
  w.u32(static_cast<std::uint32_t>(h.mark()));
  w.u32(static_cast<std::uint32_t>(h.size()));
  for (const Cell& c : h.cells()) {
    w.u8(static_cast<std::uint8_t>(c.kind));
    w.u32(index(c.type));
    w.u32(c.target);
  }
}

void read_heap(Reader& r, Heap& h) {
  std::uint32_t mark = r.u32();
  std::uint32_t n = r.count(9);
  std::vector<Cell> cells(n);
  for (auto& c : cells) {
    std::uint8_t k = r.u8();
    if (k > static_cast<std::uint8_t>(CellKind::Lazy)) throw bad("cell kind");
    c.kind = static_cast<CellKind>(k);
    c.type = TypeId{r.u32()};
    c.target = r.u32();
  }
  h.restore(std::move(cells), mark);
}

void write_program(Writer& w, const Program& p) {
  w.u32(static_cast<std::uint32_t>(p.code.size()));
  for (const Instruction& i : p.code) {
    w.u8(static_cast<std::uint8_t>(i.op));
    w.u32(i.a);
    w.u32(i.b);
    w.u32(i.c);
  }
  w.u32(static_cast<std::uint32_t>(p.rules.size()));
  for (const RuleEntry& e : p.rules) {
    w.str(e.name);
    w.u32(e.entry);
    w.u32(static_cast<std::uint32_t>(e.resume.size()));
    for (auto x : e.resume) w.u32(x);
    w.u32(e.arity);
    w.u32(e.registers);
    w.u8(e.initial_only);
  }
  write_heap(w, p.store);
  w.u32(static_cast<std::uint32_t>(p.lexicon.size()));
  for (const auto& [word, root] : p.lexicon) {
    w.str(word);
    w.u32(root);
  }
  w.u32(p.empty_categories);
  w.u8(p.non_equivalent);
}

// Operands must stay inside the rule's register file and the signature.
void validate_program(const Program& p) {
  const Signature& sig = p.signature();
  std::vector<std::uint32_t> starts;
  for (const auto& e : p.rules) {
    if (e.entry >= p.code.size()) throw bad("rule entry out of range");
    starts.push_back(e.entry);
  }
  std::sort(starts.begin(), starts.end());
  for (const auto& e : p.rules) {
    auto next = std::upper_bound(starts.begin(), starts.end(), e.entry);
    std::size_t end = next == starts.end() ? p.code.size() : *next;
    if (e.registers > kDefaultRegisterCap * 16 || e.registers <= e.arity) throw bad("register count");
    for (auto x : e.resume)
      if (x < e.entry || x >= end) throw bad("resume offset out of range");
    auto reg = [&](std::uint32_t r) {
      if (r >= e.registers) throw bad("register operand out of range");
    };
    auto type = [&](std::uint32_t t) {
      if (t >= sig.type_count()) throw bad("type operand out of range");
    };
    auto feat = [&](std::uint32_t f) {
      if (f >= sig.feature_count()) throw bad("feature operand out of range");
    };
    bool proceeds = false;
    for (std::size_t pc = e.entry; pc < end; ++pc) {
      const Instruction& i = p.code[pc];
      switch (i.op) {
        case Opcode::PutNode:
        case Opcode::GetNode: type(i.a); reg(i.b); break;
        case Opcode::PutRef:
        case Opcode::UnifyRegs: reg(i.a); reg(i.b); break;
        case Opcode::SetArc:
        case Opcode::GetArc: reg(i.a); feat(i.b); reg(i.c); break;
        case Opcode::BindConstituent:
          if (i.a == 0 || i.a > e.arity) throw bad("constituent operand out of range");
          break;
        case Opcode::AdvanceDot: break;
        case Opcode::BuildHead: reg(i.a); type(i.b); break;
        case Opcode::Proceed: proceeds = true; break;
        default: throw bad("opcode");
      }
    }
    if (!proceeds) throw bad("rule without PROCEED");
  }
  for (const auto& [word, root] : p.lexicon)
    if (root >= p.store.mark()) throw bad("lexical root out of range");
}

void read_program(Reader& r, Program& p) {
  std::uint32_t n = r.count(13);
  p.code.resize(n);
  for (auto& i : p.code) {
    std::uint8_t op = r.u8();
    if (op >= kOpcodeCount) throw bad("opcode");
    i.op = static_cast<Opcode>(op);
    i.a = r.u32();
    i.b = r.u32();
    i.c = r.u32();
  }
  n = r.count(17);
  p.rules.resize(n);
  for (auto& e : p.rules) {
    e.name = r.str();
    e.entry = r.u32();
    std::uint32_t k = r.count(4);
    e.resume.resize(k);
    for (auto& x : e.resume) x = r.u32();
    e.arity = r.u32();
    e.registers = r.u32();
    e.initial_only = r.u8() != 0;
  }
  read_heap(r, p.store);
  n = r.count(8);
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string w = r.str();
    p.lexicon.emplace_back(std::move(w), r.u32());
  }
  p.empty_categories = r.u32();
  p.non_equivalent = r.u8() != 0;
  validate_program(p);
}

}  // namespace

struct ArtifactCodec {
  static std::vector<std::uint8_t> save(const CompiledGrammar& g) {
    Writer w;
    for (char c : std::string_view("TFSM")) w.u8(static_cast<std::uint8_t>(c));
    w.u32(kArtifactVersion);
    w.str(g.compiler_version_);
    w.u64(g.source_hash_);
    w.u32(static_cast<std::uint32_t>(g.decls_.types.size()));
    for (const TypeDecl& t : g.decls_.types) {
      w.str(t.name);
      w.u32(static_cast<std::uint32_t>(t.subtypes.size()));
      for (const auto& s : t.subtypes) w.str(s);
      w.u32(static_cast<std::uint32_t>(t.intro.size()));
      for (const auto& [f, v] : t.intro) {
        w.str(f);
        w.str(v);
      }
    }
    w.str(g.sem_.to_json().dump());
    write_program(w, *g.parse_);
    w.u8(g.gen_ ? 1 : 0);
    if (g.gen_) {
      write_program(w, *g.gen_);
      write_heap(w, g.kb_->heap);
      w.u32(static_cast<std::uint32_t>(g.kb_->records.size()));
      for (const KbRecord& k : g.kb_->records) {
        w.str(k.primitive);
        w.u32(k.arity);
        w.str(k.word);
        w.u32(k.pattern);
        w.u32(k.lexical);
      }
      w.str(g.inverted_text_);
    }
    w.u32(static_cast<std::uint32_t>(g.warnings.size()));
    for (const auto& d : g.warnings) {
      w.str(d.message);
      w.u32(d.pos.line);
      w.u32(d.pos.column);
    }
    return std::move(w.out);
  }

  static std::unique_ptr<CompiledGrammar> load(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), "TFSM", 4) != 0) throw bad("missing TFSM magic");
    Reader r(bytes.subspan(4));
    std::uint32_t version = r.u32();
    if (version != kArtifactVersion)
      throw bad("format version " + std::to_string(version) + ", expected " + std::to_string(kArtifactVersion));
    std::unique_ptr<CompiledGrammar> g(new CompiledGrammar());
    g->compiler_version_ = r.str();
    g->source_hash_ = r.u64();
    std::uint32_t n = r.count(12);
    for (std::uint32_t i = 0; i < n; ++i) {
      TypeDecl t;
      t.name = r.str();
      std::uint32_t k = r.count(4);
      for (std::uint32_t j = 0; j < k; ++j) t.subtypes.push_back(r.str());
      k = r.count(8);
      for (std::uint32_t j = 0; j < k; ++j) {
        std::string f = r.str();
        t.intro.emplace_back(std::move(f), r.str());
      }
      g->decls_.types.push_back(std::move(t));
    }
    try {
      g->sem_ = SemConfig::from_json(nlohmann::json::parse(r.str()));
      g->sig_ = std::make_unique<Signature>(Signature::compile(g->decls_));
    } catch (const nlohmann::json::exception& e) {
      throw bad(std::string("semantic configuration: ") + e.what());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::BadArtifact) throw;
      throw bad(std::string("signature: ") + e.what());
    }
    g->parse_ = std::make_unique<Program>(*g->sig_);
    read_program(r, *g->parse_);
    if (r.u8()) {
      g->gen_ = std::make_unique<Program>(*g->sig_);
      read_program(r, *g->gen_);
      g->kb_ = std::make_unique<SemanticKB>(*g->sig_);
      read_heap(r, g->kb_->heap);
      n = r.count(20);
      for (std::uint32_t i = 0; i < n; ++i) {
        KbRecord k;
        k.primitive = r.str();
        k.arity = r.u32();
        k.word = r.str();
        k.pattern = r.u32();
        k.lexical = r.u32();
        if (k.pattern >= g->kb_->heap.size() || k.lexical >= g->kb_->heap.size()) throw bad("KB reference");
        g->kb_->records.push_back(std::move(k));
      }
      g->inverted_text_ = r.str();
    }
    n = r.count(12);
    for (std::uint32_t i = 0; i < n; ++i) {
      Diagnostic d;
      d.message = r.str();
      d.pos.line = r.u32();
      d.pos.column = r.u32();
      g->warnings.push_back(std::move(d));
    }
    if (!r.done()) throw bad("trailing bytes");
    return g;
  }
};

std::vector<std::uint8_t> CompiledGrammar::save() const { return ArtifactCodec::save(*this); }

std::unique_ptr<CompiledGrammar> CompiledGrammar::load(std::span<const std::uint8_t> bytes) {
  return ArtifactCodec::load(bytes);
}

}  // namespace tfsm
