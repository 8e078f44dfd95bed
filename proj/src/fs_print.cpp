#include "fs_print.hpp"

namespace tfsm {

FsPrinter::FsPrinter(const Heap& heap, std::span<const CellRef> roots, PrintOptions options)
    : heap_(heap), options_(options) {
  std::vector<CellRef> work;
  for (CellRef r : roots) {
    CellRef d = heap_.deref(r);
    if (indegree_[d]++ == 0) work.push_back(d);
  }
  const Signature& sig = heap_.signature();
  while (!work.empty()) {
    CellRef r = work.back();
    work.pop_back();
    const Cell& c = heap_.cell(r);
    if (c.kind != CellKind::Node) continue;
    std::size_t arity = sig.features_of(c.type).size();
    for (std::size_t i = 0; i < arity; ++i) {
      CellRef d = heap_.deref(r + 1 + static_cast<CellRef>(i));
      if (indegree_[d]++ == 0) work.push_back(d);
    }
  }
}

bool FsPrinter::trivial(CellRef r, TypeId restriction) const {
  r = heap_.deref(r);
  auto it = indegree_.find(r);
  if (it != indegree_.end() && it->second > 1) return false;
  const Cell& c = heap_.cell(r);
  if (c.type != restriction) return false;
  if (c.kind == CellKind::Lazy) return true;
  auto approp = heap_.signature().features_of(c.type);
  for (std::size_t i = 0; i < approp.size(); ++i)
    if (!trivial(r + 1 + static_cast<CellRef>(i), approp[i].restriction)) return false;
  return true;
}

bool FsPrinter::write_list(std::string& out, CellRef r) {
  const Signature& sig = heap_.signature();
  auto ne = sig.find_type("ne_list");
  auto e = sig.find_type("e_list");
  auto hd = sig.find_feature("hd");
  auto tl = sig.find_feature("tl");
  if (!ne || !e || !hd || !tl) return false;
  auto untagged = [&](CellRef x) { return indegree_.at(x) <= 1; };
  const Cell& c = heap_.cell(r);
  if (!untagged(r)) return false;
  if (c.type == *e) {
    out += "[]";
    return true;
  }
  if (c.type != *ne || c.kind != CellKind::Node) return false;
  out += '[';
  bool first = true;
  for (;;) {
    if (!first) out += ", ";
    first = false;
    write(out, heap_.arc_slot(r, *hd));
    CellRef next = heap_.deref(heap_.arc_slot(r, *tl));
    const Cell& nc = heap_.cell(next);
    if (untagged(next) && nc.type == *e) break;
    if (untagged(next) && nc.type == *ne && nc.kind == CellKind::Node) {
      r = next;
      continue;
    }
    out += " | ";
    write(out, next);
    break;
  }
  out += ']';
  return true;
}

void FsPrinter::write(std::string& out, CellRef r, TypeId restriction) {
  r = heap_.deref(r);
  const Signature& sig = heap_.signature();
  auto tag_it = tags_.find(r);
  if (tag_it != tags_.end()) {
    out += "T" + std::to_string(tag_it->second);
    return;
  }
  if (options_.list_sugar && write_list(out, r)) return;
  const Cell& c = heap_.cell(r);
  bool shared = indegree_.at(r) > 1;
  std::vector<std::string> parts;
  if (shared) {
    int tag = next_tag_++;
    tags_.emplace(r, tag);
    parts.push_back("T" + std::to_string(tag));
  }
  parts.push_back(sig.type_name(c.type));
  if (c.kind == CellKind::Node) {
    auto approp = sig.features_of(c.type);
    for (std::size_t i = 0; i < approp.size(); ++i) {
      CellRef slot = r + 1 + static_cast<CellRef>(i);
      if (options_.omit_general && trivial(slot, approp[i].restriction)) continue;
      std::string v;
      write(v, slot, approp[i].restriction);
      parts.push_back(sig.feature_name(approp[i].feat) + ":" + v);
    }
  }
  // A shared value that says nothing beyond its restriction prints as
  // the bare tag.
  if (shared && parts.size() == 2 && c.type == restriction) parts.pop_back();
  if (parts.size() == 1) {
    out += parts.front();
    return;
  }
  out += '(';
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ", ";
    out += parts[i];
  }
  out += ')';
}

std::string FsPrinter::text(CellRef root) {
  std::string out;
  write(out, root);
  return out;
}

nlohmann::ordered_json FsPrinter::json(CellRef root) {
  const Signature& sig = heap_.signature();
  auto rec = [&](auto&& self, CellRef r) -> nlohmann::ordered_json {
    r = heap_.deref(r);
    auto it = json_tags_.find(r);
    if (it != json_tags_.end()) return {{"ref", it->second}};
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    if (indegree_.at(r) > 1) {
      int tag = next_json_tag_++;
      json_tags_.emplace(r, tag);
      j["tag"] = tag;
    }
    const Cell& c = heap_.cell(r);
    j["type"] = sig.type_name(c.type);
    nlohmann::ordered_json feats = nlohmann::ordered_json::object();
    if (c.kind == CellKind::Node) {
      auto approp = sig.features_of(c.type);
      for (std::size_t i = 0; i < approp.size(); ++i)
        feats[sig.feature_name(approp[i].feat)] = self(self, r + 1 + static_cast<CellRef>(i));
    } else {
      j["lazy"] = true;
    }
    j["feats"] = std::move(feats);
    return j;
  };
  return rec(rec, root);
}

std::string print_fs(const Heap& heap, CellRef root, PrintStyle style, PrintOptions options) {
  FsPrinter p(heap, std::span<const CellRef>(&root, 1), options);
  if (style == PrintStyle::Json) return p.json(root).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
  return p.text(root);
}

}  // namespace tfsm
