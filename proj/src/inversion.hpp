#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "expand.hpp"
#include "heap.hpp"

namespace tfsm {

// Names of the features that carry semantics.
struct SemConfig {
  std::string sem = "sem";
  std::string var = "var";
  std::string rst = "rst";
  std::string prd = "prd";
  std::vector<std::string> args{"a1", "a2", "a3", "a4"};
  std::string form = "form";
  std::string conn = "conn";
  std::string str = "str";
  std::string str_rest = "str_rest";
  unsigned max_unfold = 8;

  static SemConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Adds list-valued `str` and `str_rest` to the type introducing `sem`.
// Throws CompileError(NotInvertible) when either name is taken.
void add_string_features(SignatureDecls& decls, const SemConfig& cfg);

struct Violation {
  std::string where;  // rule name or lexical entry
  std::string reason;
};

std::vector<Violation> check_invertibility(const std::vector<RuleTemplate>& rules, const FrozenEntries& lexicon,
                                           const SemConfig& cfg);

struct KbRecord {
  std::string primitive;  // type name of the innermost prd value
  unsigned arity = 0;
  std::string word;
  CellRef pattern = kNullRef;  // the entry's primitive, as in the lexicon
  CellRef lexical = kNullRef;  // the primitive as matched by its inverted rule
};

struct SemanticKB {
  explicit SemanticKB(const Signature& sig) : heap(sig) {}
  Heap heap;
  std::vector<KbRecord> records;
};

struct InvertedGrammar {
  explicit InvertedGrammar(const Signature& sig) : kb(sig) {}
  std::vector<RuleTemplate> rules;  // phrase rules first, then the inverted lexicon
  SemanticKB kb;
  std::vector<Diagnostic> warnings;
};

// Restructures rules around their semantic heads and inverts the
// lexicon. Rules and lexicon must be expanded under a signature that
// carries the string features. Throws CompileError(InversionFailure).
InvertedGrammar invert(const std::vector<RuleTemplate>& rules, const FrozenEntries& lexicon, const SemConfig& cfg);

// Chart items for generation: each predicate of the input with its
// formula arguments abstracted, arguments before predicates. Throws
// RuntimeError(MalformedSemantics).
FrozenEntries linearize_semantics(const Heap& heap, CellRef sem, const SemConfig& cfg);

struct Realization {
  std::vector<std::vector<std::string>> strings;
  std::vector<std::string> diagnostics;
};

// Turns the str list of a generation result into word sequences.
Realization realize_strings(const Heap& heap, CellRef result, const SemanticKB& kb, const SemConfig& cfg);

// Grammar text of the inverted rules plus a #kb section.
std::string dump_inverted(const InvertedGrammar& g, const SignatureDecls& decls);

}  // namespace tfsm
