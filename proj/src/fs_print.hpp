#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "heap.hpp"

namespace tfsm {

enum class PrintStyle { AleText, Json };

struct PrintOptions {
  // Skip arcs whose value is an unshared most general structure of the
  // feature's value restriction.
  bool omit_general = true;
  bool list_sugar = true;
};

// Renders feature structures. Reentrancy tags are shared across every
// root handed to the constructor and numbered in order of first use, so
// the several roots of a rule print with consistent tags.
class FsPrinter {
 public:
  FsPrinter(const Heap& heap, std::span<const CellRef> roots, PrintOptions options = {});

  // ALE description syntax; tags print as variables T1, T2, ...
  std::string text(CellRef root);
  // {"tag": n?, "type": "name", "feats": {"f": <node | {"ref": n}>}}
  // with "lazy": true on unmaterialized placeholders.
  nlohmann::ordered_json json(CellRef root);

 private:
  bool trivial(CellRef r, TypeId restriction) const;
  void write(std::string& out, CellRef r, TypeId restriction = kBot);
  bool write_list(std::string& out, CellRef r);

  const Heap& heap_;
  PrintOptions options_;
  std::unordered_map<CellRef, int> indegree_;
  std::unordered_map<CellRef, int> tags_;
  int next_tag_ = 1;
  std::unordered_map<CellRef, int> json_tags_;
  int next_json_tag_ = 1;
};

std::string print_fs(const Heap& heap, CellRef root, PrintStyle style = PrintStyle::AleText, PrintOptions options = {});

}  // namespace tfsm
