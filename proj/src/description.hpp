#pragma once

#include <string>
#include <vector>

#include "error.hpp"
#include "signature.hpp"

namespace tfsm {

// Partial description of a feature structure, in ALE's notation.
struct Desc {
  enum class Kind {
    Type,   // atom naming a type
    Var,    // variable; repeated occurrences denote reentrancy
    Feat,   // name:args[0]
    Conj,   // args[0], args[1], ...
    List,   // [args...] or [args... | tail] when has_tail
    Macro,  // @name(args...)
  };

  Kind kind = Kind::Type;
  std::string name;
  std::vector<Desc> args;
  bool has_tail = false;
  SourcePos pos;

  static Desc type(std::string n, SourcePos p = {}) { return {Kind::Type, std::move(n), {}, false, p}; }
  static Desc var(std::string n, SourcePos p = {}) { return {Kind::Var, std::move(n), {}, false, p}; }
  static Desc feat(std::string f, Desc v, SourcePos p = {}) { return {Kind::Feat, std::move(f), {std::move(v)}, false, p}; }
  static Desc conj(std::vector<Desc> parts, SourcePos p = {}) { return {Kind::Conj, {}, std::move(parts), false, p}; }

  // Structural equality; positions are ignored.
  friend bool operator==(const Desc& a, const Desc& b);
};

// Prints in the same syntax the reader accepts.
std::string to_string(const Desc& d);

struct RuleDecl {
  std::string name;
  Desc head;
  std::vector<Desc> body;
  // Rule only fires on initial chart items (set on inverted lexical rules).
  bool initial_only = false;
  SourcePos pos;
};

struct LexEntry {
  std::string word;
  Desc desc;
  SourcePos pos;
};

struct MacroDecl {
  std::string name;
  std::vector<std::string> params;
  Desc body;
  SourcePos pos;
};

struct EmptyDecl {
  Desc desc;
  SourcePos pos;
};

// `#kb` section record: primitive/arity -> "word".
struct KbDecl {
  std::string primitive;
  unsigned arity = 0;
  std::string word;
  SourcePos pos;
};

struct GrammarSource {
  SignatureDecls signature;
  std::vector<RuleDecl> rules;
  std::vector<LexEntry> lexicon;  // source order, several entries per word allowed
  std::vector<EmptyDecl> empties;
  std::vector<MacroDecl> macros;
  std::vector<KbDecl> kb;
  std::vector<Diagnostic> warnings;
};

// Reads grammar text. Throws CompileError (SyntaxError, UnsupportedConstruct).
GrammarSource parse_grammar(std::string_view text);
// Reads a single description (used for generation input and tests).
Desc parse_description(std::string_view text);

// Inlines every macro call. Variables of a macro body other than its
// parameters are renamed apart per call. Throws UnknownMacro,
// ArityMismatch, RecursiveMacro.
void expand_macros(GrammarSource& g);
Desc expand_macros(const Desc& d, const std::vector<MacroDecl>& macros);

// Renders the grammar back to source text (signature, macros, rules,
// lexicon, empty categories, #kb section).
std::string to_source(const GrammarSource& g);
std::string to_source(const TypeDecl& d);

// Warns about variables that occur once in a clause.
void lint_single_variables(GrammarSource& g);

}  // namespace tfsm
