#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "signature.hpp"

namespace tfsm {

using CellRef = std::uint32_t;
constexpr CellRef kNullRef = 0xffffffffu;

enum class CellKind : std::uint8_t {
  Node,  // followed in the heap by one arc slot per appropriate feature
  Ref,   // forwarding pointer
  Lazy,  // most general structure of `type`, not yet materialized
};

struct Cell {
  CellKind kind;
  TypeId type;
  CellRef target;  // Ref only

  static Cell node(TypeId t) { return {CellKind::Node, t, kNullRef}; }
  static Cell ref(CellRef r) { return {CellKind::Ref, kBot, r}; }
  static Cell lazy(TypeId t) { return {CellKind::Lazy, t, kNullRef}; }
  friend bool operator==(const Cell&, const Cell&) = default;
};

// Where and why a unification failed.
struct UnifyFailure {
  std::vector<FeatId> path;
  TypeId left = kBot;
  TypeId right = kBot;
};

struct HeapStats {
  std::uint64_t expansions = 0;    // node blocks materialized
  std::uint64_t unifications = 0;  // top-level unify calls
};

// Tagged-cell storage for feature structures. Cells below mark() form the
// frozen region and are never written; everything above is scratch space
// for the current attempt. Frozen cells only point into the frozen region
// and scratch cells only into the scratch region.
class Heap {
 public:
  explicit Heap(const Signature& sig) : sig_(&sig) {}

  const Signature& signature() const noexcept { return *sig_; }
  std::size_t size() const noexcept { return cells_.size(); }
  std::size_t mark() const noexcept { return mark_; }
  const Cell& cell(CellRef r) const { return cells_[r]; }
  std::span<const Cell> cells() const noexcept { return cells_; }
  bool frozen(CellRef r) const noexcept { return r < mark_; }

  CellRef deref(CellRef r);
  CellRef deref(CellRef r) const;
  TypeId type_of(CellRef r) const { return cells_[deref(r)].type; }

  CellRef new_lazy(TypeId t);
  // Allocates a node block of type t whose arcs are lazy placeholders of
  // the appropriate value restrictions.
  CellRef new_node(TypeId t);

  // Turns a Lazy cell into a Ref to a freshly built node of its type.
  // Returns the node.
  CellRef expand(CellRef r);
  // Arc slot (not dereferenced) of feature f on the node at r. r must
  // dereference to a Node of a type carrying f.
  CellRef arc_slot(CellRef node, FeatId f) const;
  // Value of feature f below r, materializing r one level if needed and
  // raising its type to the feature's introducer. nullopt on type clash.
  std::optional<CellRef> arc(CellRef r, FeatId f);

  bool unify(CellRef a, CellRef b, UnifyFailure* failure = nullptr);
  // Raises the type of r to at least t.
  bool constrain(CellRef r, TypeId t, UnifyFailure* failure = nullptr);

  // Scratch-only surgery used by the inversion pass. redirect makes every
  // path through `from` lead to `to`; retype replaces the type of a node
  // whose old and new types carry the same features.
  void redirect(CellRef from, CellRef to);
  void retype(CellRef r, TypeId t);

  // Structure-preserving copy of roots (from any heap, frozen or not)
  // into this heap's scratch region. The returned refs are in root order.
  std::vector<CellRef> copy_in(const Heap& src, std::span<const CellRef> roots);
  CellRef copy_in(const Heap& src, CellRef root);

  // Compacts the structure under roots, discards the rest of the scratch
  // region, and moves the mark so that the result becomes frozen.
  std::vector<CellRef> freeze(std::span<const CellRef> roots);
  CellRef freeze(CellRef root);
  // Drops the scratch region.
  void discard() { cells_.resize(mark_); }
  // Replaces the contents with deserialized cells. Throws
  // Error(BadArtifact) when the cells are not a well-formed heap.
  void restore(std::vector<Cell> cells, std::size_t mark);

  // Copies the scratch structure under roots into a position-independent
  // buffer (refs relative to 0). Used for active-edge snapshots.
  std::vector<Cell> export_scratch(std::span<const CellRef> roots, std::vector<CellRef>& roots_out) const;
  // Appends an exported buffer to the scratch region; refs are rebased.
  void import_scratch(std::span<const Cell> buffer, std::span<CellRef> refs);

  // Materializes Lazy cells reachable from root down to `depth` levels.
  void expand_all(CellRef root, unsigned depth);

  HeapStats& stats() noexcept { return stats_; }
  const HeapStats& stats() const noexcept { return stats_; }

 private:
  std::vector<CellRef> copy_reachable(const Heap& src, std::span<const CellRef> roots, std::vector<Cell>& out,
                                      CellRef base) const;

  const Signature* sig_;
  std::vector<Cell> cells_;
  std::size_t mark_ = 0;
  HeapStats stats_;
};

// A frozen structure and the heap it lives in.
struct FsView {
  const Heap* heap;
  CellRef root;
};

// True iff `general` subsumes `specific`: there is a simulation of the
// general graph in the specific one that preserves types (up to the type
// order), arcs and reentrancies. Lazy cells stand for the most general
// structure of their type.
bool subsumes(FsView general, FsView specific);
inline bool equivalent(FsView a, FsView b) { return subsumes(a, b) && subsumes(b, a); }

// Multi-rooted variant: one simulation across all roots (shared nodes
// between roots must stay shared).
bool subsumes(const Heap& hg, std::span<const CellRef> general, const Heap& hs, std::span<const CellRef> specific);
inline bool equivalent(const Heap& ha, std::span<const CellRef> a, const Heap& hb, std::span<const CellRef> b) {
  return subsumes(ha, a, hb, b) && subsumes(hb, b, ha, a);
}

// Order-independent structural hash, stable under equivalence of fully
// materialized structures (used for optional edge deduplication).
std::uint64_t structure_hash(const Heap& h, CellRef root);

// Follows a feature path; nullopt if some feature is absent.
std::optional<CellRef> follow(const Heap& h, CellRef root, std::span<const FeatId> path);

}  // namespace tfsm
