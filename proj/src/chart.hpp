#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "machine.hpp"

namespace tfsm {

constexpr std::uint32_t kNoRule = 0xffffffffu;

struct Edge {
  std::uint32_t id = 0;
  std::uint32_t from = 0;
  std::uint32_t to = 0;
  bool complete = true;
  bool initial = false;                // diagonal item placed by initialization
  CellRef fs = kNullRef;               // complete edges: frozen root in the chart heap
  std::uint32_t rule = kNoRule;        // rule that built it
  std::uint32_t dot = 0;               // active edges: constituents matched
  std::shared_ptr<const Snapshot> snapshot;  // active edges
  std::vector<std::uint32_t> children;       // edge ids of matched constituents
  bool processed = false;              // complete edges: taken off the agenda
};

struct RunLimits {
  std::uint64_t max_edges = 100000;
  std::uint64_t max_steps = 10000000;
  bool dedup = false;  // drop complete edges equivalent to one over the same span
  bool lifo = false;   // agenda order; results do not depend on it
};

struct ChartCounters {
  std::uint64_t edges = 0;
  std::uint64_t attempts = 0;
  std::uint64_t failures = 0;
  std::uint64_t steps = 0;
  std::uint64_t duplicates = 0;
  std::uint32_t opcodes = 0;  // bit i set when opcode i was executed
};

enum class ChartStatus { Running, Done, Exhausted };

// Bottom-up chart driven by an agenda of complete edges. The same loop
// serves every program: what differs between parsing and generation is
// only how the diagonal is filled.
class Chart {
 public:
  Chart(const Program& program, RunLimits limits = {});
  Chart(const Chart&) = delete;
  Chart& operator=(const Chart&) = delete;

  // Adds a complete diagonal edge [position, position+1] holding a copy
  // of the structure at src/root.
  std::uint32_t add_initial(std::uint32_t position, const Heap& src, CellRef root);
  std::uint32_t length() const noexcept { return length_; }

  // Executes one unit of work: an instruction of the current attempt, or
  // scheduling of the next agenda item.
  ChartStatus step();
  ChartStatus run();
  ChartStatus status() const noexcept { return status_; }

  std::vector<std::uint32_t> spanning() const;
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const Edge& edge(std::uint32_t id) const { return edges_.at(id); }
  const Heap& heap() const noexcept { return heap_; }
  Heap& heap() noexcept { return heap_; }
  const Program& program() const noexcept { return program_; }
  const ChartCounters& counters() const noexcept { return counters_; }
  const RunLimits& limits() const noexcept { return limits_; }
  // Set when status() is Exhausted: which limit tripped.
  const std::string& exhausted_limit() const noexcept { return exhausted_; }

  // Machine of the attempt in progress, if any.
  const Machine* current() const noexcept { return busy_ ? &machine_ : nullptr; }
  std::optional<std::uint32_t> current_edge() const noexcept { return busy_ ? std::optional(attempt_.edge) : std::nullopt; }
  std::size_t agenda_size() const noexcept { return agenda_.size(); }

  // Receives trace events: {"ev": "edge"|"attempt"|"fail"|"step", ...}.
  std::function<void(const nlohmann::ordered_json&)> trace;
  bool trace_steps = false;

  // Number of Chart::step calls in this process (coverage marker for the
  // shared run loop).
  static std::uint64_t loop_marker() noexcept;

 private:
  struct Attempt {
    std::uint32_t rule;
    std::uint32_t active;  // kNoRule when starting a rule
    std::uint32_t edge;    // complete edge consumed
  };

  void schedule_complete(const Edge& e);
  void schedule_active(const Edge& a);
  void begin(const Attempt& a);
  void finish(MachineStatus s);
  std::uint32_t add_edge(Edge e);
  void emit_edge(const Edge& e);
  void exhaust(const char* limit);

  const Program& program_;
  RunLimits limits_;
  Heap heap_;
  Machine machine_;
  std::vector<Edge> edges_;
  std::deque<std::uint32_t> agenda_;
  std::deque<Attempt> pending_;
  std::vector<std::vector<std::uint32_t>> active_by_end_;       // position -> active edge ids
  std::vector<std::vector<std::uint32_t>> processed_by_start_;  // position -> processed complete ids
  Attempt attempt_{};
  bool busy_ = false;
  std::uint32_t length_ = 0;
  ChartStatus status_ = ChartStatus::Running;
  ChartCounters counters_;
  std::string exhausted_;
};

// Places the lexical entries of each word on the diagonal. Throws
// RuntimeError(UnknownWord).
std::unique_ptr<Chart> init_parse(const std::vector<std::string>& words, const Program& program, RunLimits limits = {});
std::vector<std::string> split_words(std::string_view sentence);

}  // namespace tfsm
