#include "session.hpp"

#include <fstream>
#include <limits>
#include <sstream>

#include "fs_print.hpp"

namespace tfsm {

namespace {

using J = nlohmann::ordered_json;

Error usage(const std::string& msg) { return Error(ErrorCode::Usage, msg); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw usage("cannot read '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

RunLimits limits_from(const nlohmann::json& req) {
  RunLimits l;
  if (!req.contains("limits")) return l;
  const auto& j = req.at("limits");
  l.max_edges = j.value("max_edges", l.max_edges);
  l.max_steps = j.value("max_steps", l.max_steps);
  l.dedup = j.value("dedup", l.dedup);
  l.lifo = j.value("lifo", l.lifo);
  return l;
}

const char* status_name(ChartStatus s) {
  switch (s) {
    case ChartStatus::Running: return "running";
    case ChartStatus::Done: return "done";
    case ChartStatus::Exhausted: return "exhausted";
  }
  return "?";
}

const char* kind_name(CellKind k) {
  switch (k) {
    case CellKind::Node: return "node";
    case CellKind::Ref: return "ref";
    case CellKind::Lazy: return "lazy";
  }
  return "?";
}

}  // namespace

J error_json(const Error& e) {
  J err{{"code", error_code_name(e.code())}, {"message", e.what()}, {"details", e.details()}};
  if (e.pos().line > 0) {
    err["line"] = e.pos().line;
    err["column"] = e.pos().column;
  }
  return err;
}

DebugSession::DebugSession(std::shared_ptr<const CompiledGrammar> grammar) : grammar_(std::move(grammar)) {}

J DebugSession::handle(const nlohmann::json& request) {
  J out;
  try {
    if (!request.is_object() || !request.contains("cmd") || !request.at("cmd").is_string())
      throw usage("request needs a string 'cmd'");
    const std::string cmd = request.at("cmd").get<std::string>();
    if (cmd == "load")
      out = load(request);
    else if (cmd == "init_parse")
      out = init_parse(request);
    else if (cmd == "init_generate")
      out = init_generate(request);
    else if (cmd == "step")
      out = step(request);
    else if (cmd == "run")
      out = run(request);
    else if (cmd == "break")
      out = set_break(request);
    else if (cmd == "inspect")
      out = inspect(request);
    else
      throw usage("unknown command '" + cmd + "'");
    J ok{{"ok", true}, {"protocol", kProtocolVersion}};
    for (auto& [k, v] : out.items()) ok[k] = v;
    return ok;
  } catch (const Error& e) {
    return J{{"ok", false}, {"protocol", kProtocolVersion}, {"error", error_json(e)}};
  } catch (const nlohmann::json::exception& e) {
    return J{{"ok", false},
             {"protocol", kProtocolVersion},
             {"error", {{"code", "Usage"}, {"message", e.what()}, {"details", J::array()}}}};
  }
}

J DebugSession::load(const nlohmann::json& req) {
  if (req.contains("artifact")) {
    std::string bytes = read_file(req.at("artifact").get<std::string>());
    grammar_ = CompiledGrammar::load(
        std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
  } else if (req.contains("source") || req.contains("path")) {
    std::string src =
        req.contains("source") ? req.at("source").get<std::string>() : read_file(req.at("path").get<std::string>());
    CompileOptions opt;
    opt.invert = req.value("invert", false);
    if (req.contains("sem_config")) opt.sem = SemConfig::from_json(req.at("sem_config"));
    grammar_ = CompiledGrammar::compile(src, opt);
  } else if (!grammar_) {
    throw usage("no grammar: pass 'artifact', 'path' or 'source'");
  }
  chart_.reset();
  input_sem_.reset();
  events_.clear();
  CompileStats s = grammar_->stats();
  return J{{"grammar",
            {{"types", s.types},
             {"features", s.features},
             {"rules", s.rules},
             {"lexical", s.lexical},
             {"instructions", s.instructions},
             {"inverted_rules", s.inverted_rules},
             {"kb_records", s.kb_records}}}};
}

void DebugSession::start_chart(std::unique_ptr<Chart> chart, bool generation) {
  chart_ = std::move(chart);
  generation_ = generation;
  events_.clear();
  chart_->trace = [this](const J& ev) {
    if (events_.size() < max_events_) events_.push_back(ev);
  };
  // The diagonal was filled before the trace was attached.
  for (const Edge& e : chart_->edges())
    events_.push_back(J{{"ev", "edge"},
                        {"id", e.id},
                        {"from", e.from},
                        {"to", e.to},
                        {"kind", "complete"},
                        {"rule", nullptr},
                        {"dot", 0},
                        {"children", J::array()}});
}

J DebugSession::init_parse(const nlohmann::json& req) {
  if (!grammar_) throw usage("load a grammar first");
  std::vector<std::string> words;
  if (req.contains("words"))
    words = req.at("words").get<std::vector<std::string>>();
  else
    words = split_words(req.value("sentence", std::string()));
  input_sem_.reset();
  auto chart = tfsm::init_parse(words, grammar_->parse_program(), limits_from(req));
  start_chart(std::move(chart), false);
  chart_->trace_steps = req.value("trace_steps", false);
  return state(nullptr);
}

J DebugSession::init_generate(const nlohmann::json& req) {
  if (!grammar_) throw usage("load a grammar first");
  const Program* gen = grammar_->generation_program();
  if (!gen) throw usage("grammar was compiled without inversion");
  std::string text = req.at("sem").is_string() ? req.at("sem").get<std::string>() : req.at("sem").dump();
  input_sem_ = std::make_unique<OwnedFs>(read_structure(grammar_->signature(), text));
  auto chart = tfsm::init_generate(input_sem_->heap, input_sem_->root, grammar_->sem_config(), *gen, limits_from(req));
  start_chart(std::move(chart), true);
  chart_->trace_steps = req.value("trace_steps", false);
  return state(nullptr);
}

const Chart& DebugSession::chart() const {
  if (!chart_) throw usage("no chart: send init_parse or init_generate first");
  return *chart_;
}

bool DebugSession::at_breakpoint() const {
  const Machine* m = chart_->current();
  if (!m || m->status() != MachineStatus::Running) return false;
  if (break_offsets_.count(m->pc())) return true;
  return break_rules_.count(m->rule()) && chart_->program().rules[m->rule()].entry == m->pc();
}

J DebugSession::step(const nlohmann::json& req) {
  chart();
  std::uint64_t count = req.value("count", std::uint64_t{1});
  std::optional<Opcode> until;
  if (req.contains("until")) {
    std::string name = req.at("until").get<std::string>();
    for (std::size_t i = 0; i < kOpcodeCount; ++i)
      if (name == opcode_name(static_cast<Opcode>(i))) until = static_cast<Opcode>(i);
    if (!until) throw usage("unknown opcode '" + name + "'");
    if (!req.contains("count")) count = std::numeric_limits<std::uint64_t>::max();
  }
  const char* stopped = "count";
  for (std::uint64_t i = 0; i < count; ++i) {
    if (chart_->step() != ChartStatus::Running) {
      stopped = "finished";
      break;
    }
    if (at_breakpoint()) {
      stopped = "breakpoint";
      break;
    }
    if (until) {
      const Machine* m = chart_->current();
      if (m && m->status() == MachineStatus::Running && chart_->program().code[m->pc()].op == *until) {
        stopped = "opcode";
        break;
      }
    }
  }
  return state(stopped);
}

J DebugSession::run(const nlohmann::json&) {
  chart();
  const char* stopped = "finished";
  while (chart_->step() == ChartStatus::Running) {
    if (at_breakpoint()) {
      stopped = "breakpoint";
      break;
    }
  }
  return state(stopped);
}

J DebugSession::set_break(const nlohmann::json& req) {
  if (req.value("clear", false)) {
    break_offsets_.clear();
    break_rules_.clear();
  }
  const Program* prog = chart_ ? &chart_->program() : grammar_ ? &grammar_->parse_program() : nullptr;
  bool remove = req.value("remove", false);
  if (req.contains("offset")) {
    auto off = req.at("offset").get<std::uint32_t>();
    if (prog && off >= prog->code.size()) throw usage("offset past end of code");
    remove ? (void)break_offsets_.erase(off) : (void)break_offsets_.insert(off);
  }
  if (req.contains("rule")) {
    if (!prog) throw usage("load a grammar first");
    std::optional<std::uint32_t> r;
    if (req.at("rule").is_number_unsigned()) {
      r = req.at("rule").get<std::uint32_t>();
      if (*r >= prog->rules.size()) throw usage("rule index out of range");
    } else {
      std::string name = req.at("rule").get<std::string>();
      for (std::uint32_t i = 0; i < prog->rules.size(); ++i)
        if (prog->rules[i].name == name) r = i;
      if (!r) throw usage("no rule named '" + name + "'");
    }
    remove ? (void)break_rules_.erase(*r) : (void)break_rules_.insert(*r);
  }
  return J{{"breakpoints", {{"offsets", break_offsets_}, {"rules", break_rules_}}}};
}

J DebugSession::registers() const {
  const Machine* m = chart_ ? chart_->current() : nullptr;
  if (!m) return J::array();
  auto regs = m->registers();
  std::vector<CellRef> live;
  for (CellRef r : regs)
    if (r != kNullRef) live.push_back(r);
  FsPrinter p(m->heap(), live);
  J out = J::array();
  for (std::size_t i = 0; i < regs.size(); ++i) {
    if (regs[i] == kNullRef) {
      out.push_back(J{{"reg", i}, {"cell", nullptr}});
      continue;
    }
    out.push_back(J{{"reg", i}, {"cell", m->heap().deref(regs[i])}, {"fs", p.json(regs[i])}});
  }
  return out;
}

J DebugSession::results() {
  J out = J::array();
  if (!generation_) {
    for (std::uint32_t id : chart_->spanning()) out.push_back(J{{"edge", id}, {"fs", edge_json(*chart_, id)}});
    return out;
  }
  GenerationResult g =
      collect_generation(*chart_, input_sem_->heap, input_sem_->root, *grammar_->kb(), grammar_->sem_config());
  for (auto& words : g.strings) {
    std::string s;
    for (const auto& w : words) s += (s.empty() ? "" : " ") + w;
    out.push_back(s);
  }
  return out;
}

J DebugSession::state(const char* stopped) {
  const Chart& c = chart();
  J s{{"status", status_name(c.status())}, {"stopped", stopped ? J(stopped) : J(nullptr)}};
  const ChartCounters& k = c.counters();
  s["counters"] = {{"edges", k.edges}, {"attempts", k.attempts}, {"failures", k.failures}, {"steps", k.steps}};
  s["agenda"] = c.agenda_size();
  if (const Machine* m = c.current()) {
    J mj{{"rule", m->rule()}, {"rule_name", c.program().rules[m->rule()].name}, {"pc", m->pc()}, {"dot", m->dot()}};
    if (m->pc() < c.program().code.size()) {
      const Instruction& ins = c.program().code[m->pc()];
      mj["op"] = opcode_name(ins.op);
      mj["ins"] = format_instruction(ins, c.program().signature());
    }
    mj["edge"] = *c.current_edge();
    s["machine"] = mj;
  } else {
    s["machine"] = nullptr;
  }
  if (c.status() == ChartStatus::Exhausted) s["limit"] = c.exhausted_limit();
  if (c.status() != ChartStatus::Running) s["results"] = results();
  s["events"] = std::move(events_);
  events_.clear();
  return s;
}

J DebugSession::inspect(const nlohmann::json& req) {
  const std::string what = req.at("what").get<std::string>();
  if (what == "registers") {
    chart();
    return J{{"registers", registers()}};
  }
  if (what == "heap") {
    const Heap& h = chart().heap();
    std::size_t from = req.value("from", std::size_t{0});
    std::size_t to = std::min(req.value("to", h.size()), h.size());
    const Signature& sig = h.signature();
    J cells = J::array();
    for (std::size_t i = from; i < to; ++i) {
      const Cell& cell = h.cell(static_cast<CellRef>(i));
      J cj{{"addr", i}, {"kind", kind_name(cell.kind)}, {"frozen", h.frozen(static_cast<CellRef>(i))}};
      if (cell.kind == CellKind::Ref) {
        cj["target"] = cell.target;
      } else {
        cj["type"] = sig.type_name(cell.type);
        if (cell.kind == CellKind::Node) {
          J arcs = J::object();
          auto feats = sig.features_of(cell.type);
          for (std::size_t a = 0; a < feats.size(); ++a) arcs[sig.feature_name(feats[a].feat)] = i + 1 + a;
          cj["arcs"] = arcs;
        }
      }
      cells.push_back(cj);
    }
    return J{{"size", h.size()}, {"mark", h.mark()}, {"cells", cells}};
  }
  if (what == "chart") {
    const Chart& c = chart();
    bool with_fs = req.value("fs", false);
    J edges = J::array();
    for (const Edge& e : c.edges()) {
      J ej{{"id", e.id},
           {"from", e.from},
           {"to", e.to},
           {"kind", e.complete ? "complete" : "active"},
           {"initial", e.initial},
           {"rule", e.rule == kNoRule ? J(nullptr) : J(e.rule)},
           {"rule_name", e.rule == kNoRule ? J(nullptr) : J(c.program().rules[e.rule].name)},
           {"dot", e.dot},
           {"children", e.children},
           {"processed", e.processed}};
      if (with_fs && e.complete) ej["fs"] = edge_json(c, e.id);
      edges.push_back(ej);
    }
    return J{{"length", c.length()}, {"edges", edges}};
  }
  if (what == "edge") {
    const Chart& c = chart();
    auto id = req.at("id").get<std::uint32_t>();
    if (id >= c.edges().size()) throw usage("no edge " + std::to_string(id));
    if (!c.edge(id).complete) throw usage("edge " + std::to_string(id) + " is active");
    return J{{"edge", id}, {"fs", edge_json(c, id)}, {"text", render_edge(c, id, false)}};
  }
  if (what == "disasm") {
    const Program* p = nullptr;
    std::string which = req.value("program", std::string(chart_ ? (generation_ ? "generate" : "parse") : "parse"));
    if (!grammar_) throw usage("load a grammar first");
    if (which == "parse")
      p = &grammar_->parse_program();
    else if (which == "generate")
      p = grammar_->generation_program();
    if (!p) throw usage("no program '" + which + "'");
    J rules = J::array();
    for (std::size_t i = 0; i < p->rules.size(); ++i) {
      const RuleEntry& r = p->rules[i];
      rules.push_back(J{{"index", i},
                        {"name", r.name},
                        {"entry", r.entry},
                        {"resume", r.resume},
                        {"arity", r.arity},
                        {"registers", r.registers},
                        {"initial_only", r.initial_only}});
    }
    J code = J::array();
    for (std::size_t i = 0; i < p->code.size(); ++i)
      code.push_back(J{{"offset", i}, {"text", format_instruction(p->code[i], p->signature())}});
    return J{{"program", which}, {"rules", rules}, {"code", code}};
  }
  throw usage("unknown inspect target '" + what + "'");
}

}  // namespace tfsm
