// Inverted example grammar and its generation items, shared by the
// inversion tests and the acceptance run.
#pragma once

#include <memory>
#include <optional>
#include <stdexcept>

#include "expected_structures.hpp"
#include "grammar.hpp"
#include "inversion.hpp"

namespace oracle {

inline const char* kEveryBoySleeps =
    "(arg_2, prd:(forall, var:X, form:(bool, conn:if, wff1:B, wff2:S)),"
    " a1:(B, arg_1, prd:boy, a1:X), a2:(S, arg_1, prd:sleep, a1:X))";

// The compile pipeline up to inversion, keeping the templates around.
struct Pipeline {
  tfsm::SemConfig cfg;
  tfsm::SignatureDecls decls;
  std::unique_ptr<tfsm::Signature> sig;
  std::vector<tfsm::RuleTemplate> rules;
  std::optional<tfsm::FrozenEntries> lexicon;
  std::optional<tfsm::InvertedGrammar> inv;

  explicit Pipeline(const std::string& source, bool run_inversion = true) {
    tfsm::GrammarSource g = tfsm::parse_grammar(source);
    tfsm::expand_macros(g);
    decls = g.signature;
    tfsm::inject_list_types(decls);
    tfsm::add_string_features(decls, cfg);
    sig = std::make_unique<tfsm::Signature>(tfsm::Signature::compile(decls));
    for (const auto& r : g.rules) rules.push_back(tfsm::expand_rule(r, *sig));
    lexicon.emplace(tfsm::expand_lexicon(g.lexicon, *sig));
    if (run_inversion) inv.emplace(tfsm::invert(rules, *lexicon, cfg));
  }

  const tfsm::RuleTemplate* find(const std::string& name) const {
    for (const auto& r : inv->rules)
      if (r.name == name) return &r;
    return nullptr;
  }
  tfsm::RuleTemplate expected(const std::string& text) const {
    return tfsm::expand_rule(tfsm::parse_grammar(text).rules.at(0), *sig);
  }
};

// The inverted rules of the example grammar, written out by hand with
// strings as difference lists: head str = [sem | n.str], n.str_rest =
// vp.str, vp.str_rest = head.str_rest.
struct ExpectedRule {
  const char* name;
  const char* text;
};

inline const std::vector<ExpectedRule>& inverted_example_rules() {
  static const std::vector<ExpectedRule> rules = {
      {"rule1/every",
       "(phrase, syn:(syn, cat:s), str:[R3 | S1], str_rest:S3,"
       " sem:(R3, prd:(forall, var:R5, form:(conn:if, wff1:(R8, a1:R5), wff2:(R10, a1:R5))), a1:R8, a2:R10))"
       " ===> (phrase, syn:cat:n, sem:(lambda, rst:R8), str:S1, str_rest:S2),"
       " (phrase, syn:cat:vp, sem:(lambda, rst:R10), str:S2, str_rest:S3),"
       " (lambda, var:R8, rst:(lambda, var:R10, rst:R3))."},
      {"lex/boy",
       "(word, syn:cat:n, sem:R3, str:[R5 | T], str_rest:T) ===> (R3, lambda, var:R4, rst:(R5, prd:noun, a1:R4))."},
      {"lex/sleeps",
       "(word, syn:cat:vp, sem:R3, str:[R5 | T], str_rest:T)"
       " ===> (R3, lambda, var:R4, rst:(R5, prd:v_intrans, a1:R4))."},
      {"lex/every",
       "(word, syn:cat:det, sem:R3, str:[R10 | T], str_rest:T)"
       " ===> (R3, lambda, var:(R4, a1:R6),"
       " rst:(lambda, var:(R8, a1:R6),"
       " rst:(R10, prd:(forall, var:R6, form:(conn:if, wff1:R4, wff2:R8)), a1:R4, a2:R8)))."},
  };
  return rules;
}

// Generation items for "every boy sleeps" in diagonal order: the two
// predications abstracted over their argument, then the quantifier
// abstracted over both predications.
inline int generation_item(Lattice& L, Graph& g, std::size_t i) {
  auto t = [&](const char* n) { return L.id(n); };
  if (i < 2) {
    int x = g.add(t("sem"));
    int body = g.add(t("arg_1"));
    g.nodes[body].arcs = {{"prd", g.add(t(i == 0 ? "boy" : "sleep"))}, {"a1", x}};
    int lam = g.add(t("lambda"));
    g.nodes[lam].arcs = {{"var", x}, {"rst", body}};
    return lam;
  }
  if (i != 2) throw std::out_of_range("three generation items");
  int x = g.add(t("sem"));
  int p = g.add(t("arg_1"));
  g.nodes[p].arcs = {{"a1", x}};
  int q = g.add(t("arg_1"));
  g.nodes[q].arcs = {{"a1", x}};
  int form = g.add(t("bool"));
  g.nodes[form].arcs = {{"conn", g.add(t("if"))}, {"wff1", p}, {"wff2", q}};
  int all = g.add(t("forall"));
  g.nodes[all].arcs = {{"var", x}, {"form", form}};
  int body = g.add(t("arg_2"));
  g.nodes[body].arcs = {{"prd", all}, {"a1", p}, {"a2", q}};
  int inner = g.add(t("lambda"));
  g.nodes[inner].arcs = {{"var", q}, {"rst", body}};
  int outer = g.add(t("lambda"));
  g.nodes[outer].arcs = {{"var", p}, {"rst", inner}};
  return outer;
}

}  // namespace oracle
