#pragma once

#include <memory>
#include <set>
#include <string>

#include <json.hpp>

#include "grammar.hpp"

namespace tfsm {

inline constexpr int kProtocolVersion = 1;

// One debugging client: a grammar, at most one chart in progress, a
// breakpoint set, and the trace events not yet delivered.
class DebugSession {
 public:
  explicit DebugSession(std::shared_ptr<const CompiledGrammar> grammar = nullptr);

  // Handles one protocol request; never throws. Errors come back as
  // {"ok": false, "error": {...}}.
  nlohmann::ordered_json handle(const nlohmann::json& request);

 private:
  using J = nlohmann::ordered_json;

  J load(const nlohmann::json& req);
  J init_parse(const nlohmann::json& req);
  J init_generate(const nlohmann::json& req);
  J step(const nlohmann::json& req);
  J run(const nlohmann::json& req);
  J set_break(const nlohmann::json& req);
  J inspect(const nlohmann::json& req);

  void start_chart(std::unique_ptr<Chart> chart, bool generation);
  const Chart& chart() const;
  bool at_breakpoint() const;
  J state(const char* stopped);
  J results();
  J registers() const;

  std::shared_ptr<const CompiledGrammar> grammar_;
  std::unique_ptr<OwnedFs> input_sem_;
  std::unique_ptr<Chart> chart_;
  bool generation_ = false;
  std::set<std::uint32_t> break_offsets_;
  std::set<std::uint32_t> break_rules_;
  std::vector<nlohmann::ordered_json> events_;
  std::size_t max_events_ = 10000;
};

nlohmann::ordered_json error_json(const Error& e);

}  // namespace tfsm
