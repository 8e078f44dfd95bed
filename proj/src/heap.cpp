#include "heap.hpp"

#include <algorithm>
#include <functional>

namespace tfsm {

CellRef Heap::deref(CellRef r) {
  while (cells_[r].kind == CellKind::Ref) {
    CellRef next = cells_[r].target;
    // Path halving, never inside the frozen region.
    if (r >= mark_ && cells_[next].kind == CellKind::Ref) cells_[r].target = cells_[next].target;
    r = next;
  }
  return r;
}

CellRef Heap::deref(CellRef r) const {
  while (cells_[r].kind == CellKind::Ref) r = cells_[r].target;
  return r;
}

CellRef Heap::new_lazy(TypeId t) {
  cells_.push_back(Cell::lazy(t));
  return static_cast<CellRef>(cells_.size() - 1);
}

CellRef Heap::new_node(TypeId t) {
  auto approp = sig_->features_of(t);
  CellRef n = static_cast<CellRef>(cells_.size());
  cells_.push_back(Cell::node(t));
  for (const auto& a : approp) cells_.push_back(Cell::lazy(a.restriction));
  ++stats_.expansions;
  return n;
}

void Heap::restore(std::vector<Cell> cells, std::size_t mark) {
  auto bad = [](const std::string& why) { return Error(ErrorCode::BadArtifact, "corrupt heap: " + why); };
  if (mark > cells.size()) throw bad("mark past end");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Cell& c = cells[i];
    switch (c.kind) {
      case CellKind::Ref:
        if (c.target >= cells.size()) throw bad("dangling reference");
        break;
      case CellKind::Node:
        if (index(c.type) >= sig_->type_count()) throw bad("type out of range");
        if (i + sig_->features_of(c.type).size() >= cells.size()) throw bad("truncated node");
        break;
      case CellKind::Lazy:
        if (index(c.type) >= sig_->type_count()) throw bad("type out of range");
        break;
      default:
        throw bad("unknown cell kind");
    }
  }
  cells_ = std::move(cells);
  mark_ = mark;
}

CellRef Heap::expand(CellRef r) {
  r = deref(r);
  if (cells_[r].kind == CellKind::Node) return r;
  if (r < mark_) throw RuntimeError(ErrorCode::MachineFault, "attempt to expand a frozen cell");
  CellRef n = new_node(cells_[r].type);
  cells_[r] = Cell::ref(n);
  return n;
}

CellRef Heap::arc_slot(CellRef node, FeatId f) const {
  int pos = sig_->feature_position(cells_[node].type, f);
  if (pos < 0)
    throw RuntimeError(ErrorCode::MachineFault, "feature '" + sig_->feature_name(f) + "' not appropriate for '" +
                                                    sig_->type_name(cells_[node].type) + "'");
  return node + 1 + static_cast<CellRef>(pos);
}

std::optional<CellRef> Heap::arc(CellRef r, FeatId f) {
  if (!constrain(r, sig_->introducer(f))) return std::nullopt;
  CellRef n = expand(r);
  return arc_slot(n, f);
}

bool Heap::constrain(CellRef r, TypeId t, UnifyFailure* failure) {
  r = deref(r);
  auto j = sig_->lub(cells_[r].type, t);
  if (!j) {
    if (failure) *failure = UnifyFailure{{}, cells_[r].type, t};
    return false;
  }
  if (*j == cells_[r].type) return true;
  if (cells_[r].kind == CellKind::Lazy && r >= mark_) {
    cells_[r].type = *j;
    return true;
  }
  CellRef tmp = new_lazy(t);
  return unify(r, tmp, failure);
}

bool Heap::unify(CellRef a0, CellRef b0, UnifyFailure* failure) {
  ++stats_.unifications;
  struct Frame {
    CellRef a, b;
    std::uint32_t parent;
    FeatId feat;
  };
  constexpr std::uint32_t kRoot = 0xffffffffu;
  std::vector<Frame> frames;
  std::vector<std::uint32_t> work;
  frames.push_back({a0, b0, kRoot, FeatId{0}});
  work.push_back(0);

  auto bind = [&](CellRef from, CellRef to) {
    if (from < mark_) throw RuntimeError(ErrorCode::MachineFault, "unification would write into the frozen region");
    cells_[from] = Cell::ref(to);
  };

  while (!work.empty()) {
    std::uint32_t fi = work.back();
    work.pop_back();
    CellRef a = deref(frames[fi].a);
    CellRef b = deref(frames[fi].b);
    if (a == b) continue;
    TypeId ta = cells_[a].type;
    TypeId tb = cells_[b].type;
    auto joined = sig_->lub(ta, tb);
    if (!joined) {
      if (failure) {
        failure->left = ta;
        failure->right = tb;
        failure->path.clear();
        for (std::uint32_t p = fi; frames[p].parent != kRoot; p = frames[p].parent) failure->path.push_back(frames[p].feat);
        std::reverse(failure->path.begin(), failure->path.end());
      }
      return false;
    }
    TypeId t = *joined;
    bool a_node = cells_[a].kind == CellKind::Node;
    bool b_node = cells_[b].kind == CellKind::Node;
    if (!a_node && !b_node) {
      // Keep the survivor in place if it is frozen and already general enough.
      if (b < mark_ && tb == t) std::swap(a, b);
      if (a < mark_ && cells_[a].type == t) {
        bind(b, a);
        continue;
      }
      if (a < mark_) std::swap(a, b);
      if (a < mark_) throw RuntimeError(ErrorCode::MachineFault, "unification would write into the frozen region");
      cells_[a].type = t;
      bind(b, a);
      continue;
    }
    CellRef target;
    if (a_node && ta == t)
      target = a;
    else if (b_node && tb == t)
      target = b;
    else
      target = new_node(t);
    for (CellRef s : {a, b}) {
      if (s == target) continue;
      if (cells_[s].kind == CellKind::Node) {
        auto old = sig_->features_of(cells_[s].type);
        for (std::size_t i = 0; i < old.size(); ++i) {
          frames.push_back({s + 1 + static_cast<CellRef>(i), arc_slot(target, old[i].feat), fi, old[i].feat});
          work.push_back(static_cast<std::uint32_t>(frames.size() - 1));
        }
      }
      bind(s, target);
    }
  }
  return true;
}

void Heap::redirect(CellRef from, CellRef to) {
  from = deref(from);
  to = deref(to);
  if (from == to) return;
  if (from < mark_) throw RuntimeError(ErrorCode::MachineFault, "attempt to redirect a frozen cell");
  cells_[from] = Cell::ref(to);
}

void Heap::retype(CellRef r, TypeId t) {
  r = deref(r);
  if (r < mark_) throw RuntimeError(ErrorCode::MachineFault, "attempt to retype a frozen cell");
  auto a = sig_->features_of(cells_[r].type);
  auto b = sig_->features_of(t);
  if (cells_[r].kind == CellKind::Node && !std::equal(a.begin(), a.end(), b.begin(), b.end()))
    throw RuntimeError(ErrorCode::MachineFault, "retype between types with different features");
  cells_[r].type = t;
}

std::vector<CellRef> Heap::copy_reachable(const Heap& src, std::span<const CellRef> roots, std::vector<Cell>& out,
                                          CellRef base) const {
  std::unordered_map<CellRef, CellRef> placed;
  std::vector<std::pair<CellRef, CellRef>> pending;  // src node, dst index
  auto place = [&](CellRef x) -> CellRef {
    x = src.deref(x);
    auto it = placed.find(x);
    if (it != placed.end()) return it->second;
    const Cell& c = src.cells_[x];
    CellRef at = base + static_cast<CellRef>(out.size());
    placed.emplace(x, at);
    if (c.kind == CellKind::Lazy) {
      out.push_back(c);
    } else {
      out.push_back(Cell::node(c.type));
      out.resize(out.size() + sig_->features_of(c.type).size(), Cell::lazy(kBot));
      pending.emplace_back(x, at);
    }
    return at;
  };
  std::vector<CellRef> result;
  result.reserve(roots.size());
  for (CellRef r : roots) result.push_back(r == kNullRef ? kNullRef : place(r));
  while (!pending.empty()) {
    auto [x, at] = pending.back();
    pending.pop_back();
    std::size_t arity = sig_->features_of(src.cells_[x].type).size();
    for (std::size_t i = 0; i < arity; ++i) {
      CellRef child = place(x + 1 + static_cast<CellRef>(i));
      out[at - base + 1 + i] = Cell::ref(child);
    }
  }
  return result;
}

std::vector<CellRef> Heap::copy_in(const Heap& src, std::span<const CellRef> roots) {
  std::vector<Cell> out;
  auto result = copy_reachable(src, roots, out, static_cast<CellRef>(cells_.size()));
  cells_.insert(cells_.end(), out.begin(), out.end());
  return result;
}

CellRef Heap::copy_in(const Heap& src, CellRef root) { return copy_in(src, std::span<const CellRef>(&root, 1)).front(); }

std::vector<CellRef> Heap::freeze(std::span<const CellRef> roots) {
  std::vector<Cell> out;
  auto result = copy_reachable(*this, roots, out, static_cast<CellRef>(mark_));
  cells_.resize(mark_);
  cells_.insert(cells_.end(), out.begin(), out.end());
  mark_ = cells_.size();
  return result;
}

CellRef Heap::freeze(CellRef root) { return freeze(std::span<const CellRef>(&root, 1)).front(); }

std::vector<Cell> Heap::export_scratch(std::span<const CellRef> roots, std::vector<CellRef>& roots_out) const {
  std::vector<Cell> out;
  roots_out = copy_reachable(*this, roots, out, 0);
  return out;
}

void Heap::import_scratch(std::span<const Cell> buffer, std::span<CellRef> refs) {
  CellRef base = static_cast<CellRef>(cells_.size());
  cells_.reserve(cells_.size() + buffer.size());
  for (Cell c : buffer) {
    if (c.kind == CellKind::Ref) c.target += base;
    cells_.push_back(c);
  }
  for (auto& r : refs)
    if (r != kNullRef) r += base;
}

void Heap::expand_all(CellRef root, unsigned depth) {
  std::vector<std::pair<CellRef, unsigned>> work{{root, depth}};
  std::unordered_map<CellRef, unsigned> seen;
  while (!work.empty()) {
    auto [r, d] = work.back();
    work.pop_back();
    r = deref(r);
    auto it = seen.find(r);
    if (it != seen.end() && it->second >= d) continue;
    seen[r] = d;
    if (cells_[r].kind == CellKind::Lazy) {
      if (d == 0 || sig_->features_of(cells_[r].type).empty()) continue;
      r = expand(r);
      seen[r] = d;
    }
    if (d == 0) continue;
    std::size_t arity = sig_->features_of(cells_[r].type).size();
    for (std::size_t i = 0; i < arity; ++i) work.emplace_back(r + 1 + static_cast<CellRef>(i), d - 1);
  }
}

bool subsumes(const Heap& hg, std::span<const CellRef> general, const Heap& hs, std::span<const CellRef> specific) {
  if (general.size() != specific.size()) return false;
  const Signature& sig = hg.signature();
  // Items on the specific side are real cells or virtual nodes standing
  // for the unmaterialized parts of Lazy cells.
  struct Item {
    std::uint64_t key;
    TypeId type;
    CellRef cell;  // kNullRef when virtual
  };
  std::uint64_t next_virtual = 0;
  auto real = [&](CellRef c) {
    c = hs.deref(c);
    return Item{c, hs.cell(c).type, c};
  };
  std::unordered_map<CellRef, std::uint64_t> mapping;
  std::vector<std::pair<CellRef, Item>> work;
  for (std::size_t i = 0; i < general.size(); ++i) work.emplace_back(general[i], real(specific[i]));
  while (!work.empty()) {
    auto [g, item] = work.back();
    work.pop_back();
    g = hg.deref(g);
    auto [it, inserted] = mapping.emplace(g, item.key);
    if (!inserted) {
      if (it->second != item.key) return false;
      continue;
    }
    const Cell& gc = hg.cell(g);
    if (!sig.subsumes(gc.type, item.type)) return false;
    if (gc.kind == CellKind::Lazy) continue;
    auto approp = sig.features_of(gc.type);
    bool s_node = item.cell != kNullRef && hs.cell(item.cell).kind == CellKind::Node;
    for (std::size_t i = 0; i < approp.size(); ++i) {
      CellRef gchild = g + 1 + static_cast<CellRef>(i);
      if (s_node) {
        work.emplace_back(gchild, real(hs.arc_slot(item.cell, approp[i].feat)));
      } else {
        TypeId r = *sig.restriction(item.type, approp[i].feat);
        work.emplace_back(gchild, Item{(std::uint64_t{1} << 40) | next_virtual++, r, kNullRef});
      }
    }
  }
  return true;
}

bool subsumes(FsView general, FsView specific) {
  return subsumes(*general.heap, std::span<const CellRef>(&general.root, 1), *specific.heap,
                  std::span<const CellRef>(&specific.root, 1));
}

std::uint64_t structure_hash(const Heap& h, CellRef root) {
  const Signature& sig = h.signature();
  std::uint64_t acc = 1469598103934665603ull;
  auto mix = [&](std::uint64_t v) {
    acc ^= v + 0x9e3779b97f4a7c15ull + (acc << 6) + (acc >> 2);
  };
  std::function<void(CellRef, TypeId, unsigned)> walk = [&](CellRef r, TypeId type, unsigned depth) {
    mix(index(type));
    if (depth == 0) return;
    auto approp = sig.features_of(type);
    bool node = r != kNullRef && h.cell(r).kind == CellKind::Node;
    for (std::size_t i = 0; i < approp.size(); ++i) {
      if (node) {
        CellRef c = h.deref(r + 1 + static_cast<CellRef>(i));
        walk(c, h.cell(c).type, depth - 1);
      } else {
        walk(kNullRef, approp[i].restriction, depth - 1);
      }
    }
  };
  CellRef r = h.deref(root);
  walk(r, h.cell(r).type, 3);
  return acc;
}

std::optional<CellRef> follow(const Heap& h, CellRef root, std::span<const FeatId> path) {
  CellRef r = h.deref(root);
  for (FeatId f : path) {
    if (h.cell(r).kind != CellKind::Node) return std::nullopt;
    int pos = h.signature().feature_position(h.cell(r).type, f);
    if (pos < 0) return std::nullopt;
    r = h.deref(r + 1 + static_cast<CellRef>(pos));
  }
  return r;
}

}  // namespace tfsm
