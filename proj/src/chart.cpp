#include "chart.hpp"

#include <algorithm>
#include <atomic>
#include <sstream>

namespace tfsm {

namespace {
std::atomic<std::uint64_t> g_loop_steps{0};

nlohmann::ordered_json id_or_null(std::uint32_t v) {
  if (v == kNoRule) return nullptr;
  return v;
}
}  // namespace

std::uint64_t Chart::loop_marker() noexcept { return g_loop_steps.load(); }

Chart::Chart(const Program& program, RunLimits limits)
    : program_(program), limits_(limits), heap_(program.signature()), machine_(program, heap_) {
  machine_.on_step = [this](const Machine& m, const Instruction& ins) {
    counters_.opcodes |= 1u << static_cast<unsigned>(ins.op);
    if (trace && trace_steps) {
      trace({{"ev", "step"},
             {"pc", m.pc()},
             {"op", opcode_name(ins.op)},
             {"ins", format_instruction(ins, program_.signature())},
             {"rule", m.rule()},
             {"dot", m.dot()}});
    }
  };
}

std::uint32_t Chart::add_initial(std::uint32_t position, const Heap& src, CellRef root) {
  Edge e;
  e.from = position;
  e.to = position + 1;
  e.initial = true;
  e.fs = heap_.freeze(heap_.copy_in(src, root));
  length_ = std::max(length_, position + 1);
  std::uint32_t id = add_edge(std::move(e));
  if (id != kNoRule) agenda_.push_back(id);
  return id;
}

void Chart::emit_edge(const Edge& e) {
  if (!trace) return;
  trace({{"ev", "edge"},
         {"id", e.id},
         {"from", e.from},
         {"to", e.to},
         {"kind", e.complete ? "complete" : "active"},
         {"rule", id_or_null(e.rule)},
         {"dot", e.dot},
         {"children", e.children}});
}

void Chart::exhaust(const char* limit) {
  status_ = ChartStatus::Exhausted;
  exhausted_ = limit;
  busy_ = false;
  pending_.clear();
  heap_.discard();
}

std::uint32_t Chart::add_edge(Edge e) {
  if (edges_.size() >= limits_.max_edges) {
    exhaust("edges");
    return kNoRule;
  }
  e.id = static_cast<std::uint32_t>(edges_.size());
  std::size_t need = std::max(e.from, e.to) + 1;
  if (active_by_end_.size() < need) {
    active_by_end_.resize(need);
    processed_by_start_.resize(need);
  }
  if (!e.complete) active_by_end_[e.to].push_back(e.id);
  edges_.push_back(std::move(e));
  ++counters_.edges;
  emit_edge(edges_.back());
  return edges_.back().id;
}

void Chart::schedule_complete(const Edge& e) {
  for (std::uint32_t r = 0; r < program_.rules.size(); ++r) {
    const RuleEntry& rule = program_.rules[r];
    if (rule.arity == 0 || (rule.initial_only && !e.initial)) continue;
    pending_.push_back({r, kNoRule, e.id});
  }
  if (e.from < active_by_end_.size())
    for (std::uint32_t a : active_by_end_[e.from]) pending_.push_back({edges_[a].rule, a, e.id});
}

void Chart::schedule_active(const Edge& a) {
  if (a.to < processed_by_start_.size())
    for (std::uint32_t c : processed_by_start_[a.to]) pending_.push_back({a.rule, a.id, c});
}

void Chart::begin(const Attempt& a) {
  ++counters_.attempts;
  attempt_ = a;
  busy_ = true;
  CellRef c = edges_[a.edge].fs;
  if (a.active == kNoRule)
    machine_.start(a.rule, std::span<const CellRef>(&c, 1));
  else
    machine_.resume(*edges_[a.active].snapshot, std::span<const CellRef>(&c, 1));
  if (trace) trace({{"ev", "attempt"}, {"rule", a.rule}, {"edge", a.edge}, {"active", id_or_null(a.active)}});
}

void Chart::finish(MachineStatus s) {
  busy_ = false;
  const Attempt a = attempt_;
  if (s == MachineStatus::Failed) {
    ++counters_.failures;
    if (trace) {
      nlohmann::ordered_json ev{{"ev", "fail"}, {"rule", a.rule}, {"edge", a.edge}};
      if (const auto& f = machine_.failure()) {
        const Signature& sig = program_.signature();
        std::string path;
        for (FeatId x : f->path) path += (path.empty() ? "" : ":") + sig.feature_name(x);
        ev["path"] = path;
        ev["types"] = {sig.type_name(f->left), sig.type_name(f->right)};
      }
      trace(ev);
    }
    return;
  }
  Edge e;
  const Edge& consumed = edges_[a.edge];
  e.to = consumed.to;
  e.rule = a.rule;
  if (a.active != kNoRule) {
    e.from = edges_[a.active].from;
    e.children = edges_[a.active].children;
  } else {
    e.from = consumed.from;
  }
  e.children.push_back(a.edge);
  if (s == MachineStatus::Succeeded) {
    e.fs = machine_.result();
    if (limits_.dedup) {
      std::uint64_t h = structure_hash(heap_, e.fs);
      for (const Edge& o : edges_) {
        if (!o.complete || o.from != e.from || o.to != e.to) continue;
        if (structure_hash(heap_, o.fs) == h && equivalent({&heap_, o.fs}, {&heap_, e.fs})) {
          ++counters_.duplicates;
          return;
        }
      }
    }
    std::uint32_t id = add_edge(std::move(e));
    if (id != kNoRule) agenda_.push_back(id);
    return;
  }
  e.complete = false;
  e.dot = machine_.dot();
  e.snapshot = std::make_shared<const Snapshot>(machine_.take_snapshot());
  std::uint32_t id = add_edge(std::move(e));
  if (id != kNoRule) schedule_active(edges_[id]);
}

ChartStatus Chart::step() {
  g_loop_steps.fetch_add(1, std::memory_order_relaxed);
  if (status_ != ChartStatus::Running) return status_;
  if (busy_) {
    if (counters_.steps >= limits_.max_steps) {
      exhaust("steps");
      return status_;
    }
    ++counters_.steps;
    MachineStatus s = machine_.step();
    if (s != MachineStatus::Running) finish(s);
    return status_;
  }
  if (!pending_.empty()) {
    Attempt a = pending_.front();
    pending_.pop_front();
    begin(a);
    return status_;
  }
  if (!agenda_.empty()) {
    std::uint32_t id;
    if (limits_.lifo) {
      id = agenda_.back();
      agenda_.pop_back();
    } else {
      id = agenda_.front();
      agenda_.pop_front();
    }
    Edge& e = edges_[id];
    e.processed = true;
    processed_by_start_[e.from].push_back(id);
    schedule_complete(e);
    return status_;
  }
  status_ = ChartStatus::Done;
  return status_;
}

ChartStatus Chart::run() {
  while (step() == ChartStatus::Running) {
  }
  return status_;
}

std::vector<std::uint32_t> Chart::spanning() const {
  std::vector<std::uint32_t> out;
  if (length_ == 0) return out;
  for (const Edge& e : edges_)
    if (e.complete && e.from == 0 && e.to == length_) out.push_back(e.id);
  return out;
}

std::vector<std::string> split_words(std::string_view sentence) {
  std::istringstream in{std::string(sentence)};
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::unique_ptr<Chart> init_parse(const std::vector<std::string>& words, const Program& program, RunLimits limits) {
  auto chart = std::make_unique<Chart>(program, limits);
  for (std::uint32_t i = 0; i < words.size(); ++i) {
    auto entries = program.lookup(words[i]);
    if (entries.empty())
      throw RuntimeError(ErrorCode::UnknownWord, "unknown word '" + words[i] + "' at position " + std::to_string(i + 1),
                         {words[i], std::to_string(i + 1)});
    for (CellRef r : entries) chart->add_initial(i, program.store, r);
  }
  return chart;
}

}  // namespace tfsm
