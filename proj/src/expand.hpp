#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "description.hpp"
#include "heap.hpp"

namespace tfsm {

// Adds `list sub [e_list, ne_list]` and `ne_list intro [hd:bot, tl:list]`
// unless the grammar already declares any of the list types.
void inject_list_types(SignatureDecls& decls);

// Builds the most general totally well-typed structure satisfying a
// description, in the scratch region of a heap. Variables are shared
// across every call until reset_variables().
class DescriptionExpander {
 public:
  explicit DescriptionExpander(Heap& heap) : heap_(heap) {}

  CellRef add(const Desc& d);
  void apply(const Desc& d, CellRef at);
  void reset_variables() { vars_.clear(); }
  const std::unordered_map<std::string, CellRef>& variables() const { return vars_; }

 private:
  void apply(const Desc& d, CellRef at, std::vector<std::string>& path);
  [[noreturn]] void clash(const Desc& d, const std::vector<std::string>& path, const UnifyFailure& f) const;

  Heap& heap_;
  std::unordered_map<std::string, CellRef> vars_;
};

// A rule as frozen structures: roots[0] is the head, roots[1..] the body.
struct RuleTemplate {
  std::string name;
  Heap heap;
  std::vector<CellRef> roots;
  bool initial_only = false;
  SourcePos pos;

  CellRef head() const { return roots.front(); }
  std::size_t arity() const { return roots.size() - 1; }
};

RuleTemplate expand_rule(const RuleDecl& r, const Signature& sig);

// Closed descriptions (lexical entries, empty categories) frozen into one
// heap.
struct FrozenEntries {
  explicit FrozenEntries(const Signature& sig) : heap(sig) {}
  Heap heap;
  std::vector<std::pair<std::string, CellRef>> entries;  // word (empty for ε), root
};

FrozenEntries expand_lexicon(const std::vector<LexEntry>& lexicon, const Signature& sig);
FrozenEntries expand_empties(const std::vector<EmptyDecl>& empties, const Signature& sig);

struct EmptyExpansion {
  std::vector<RuleTemplate> rules;
  bool budget_exceeded = false;
};

// Folds empty categories into rule bodies: every body element that
// unifies with an empty category yields a copy of the rule without that
// element, repeated on the newly produced rules for max_rounds passes.
EmptyExpansion expand_empty_categories(std::vector<RuleTemplate> rules, const FrozenEntries& empties,
                                       unsigned max_rounds, std::vector<Diagnostic>& warnings);

}  // namespace tfsm
