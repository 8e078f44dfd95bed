#include <doctest.h>

#include "description.hpp"
#include "expand.hpp"
#include "fs_print.hpp"
#include "support.hpp"

using namespace tfsm;

namespace {

ErrorCode error_of(const std::function<void()>& f, std::string* detail = nullptr) {
  try {
    f();
  } catch (const Error& e) {
    if (detail && !e.details().empty()) *detail = e.details().front();
    return e.code();
  }
  return ErrorCode::Usage;
}

ErrorCode grammar_error(const std::string& text, std::string* detail = nullptr) {
  return error_of(
      [&] {
        GrammarSource g = parse_grammar(text);
        expand_macros(g);
      },
      detail);
}

// Minimal type carrying feature f, found by scanning appropriateness.
std::optional<int> introducer(const oracle::Lattice& L, const std::string& f) {
  for (std::size_t t = 0; t < L.names.size(); ++t) {
    if (!L.approp[t].count(f)) continue;
    bool least = true;
    for (std::size_t u = 0; u < L.names.size(); ++u)
      if (L.approp[u].count(f) && !L.sub[t][u]) least = false;
    if (least) return static_cast<int>(t);
  }
  return std::nullopt;
}

// Builds the most general satisfier of a description in the graph domain.
struct GraphExpander {
  const oracle::Lattice& L;
  oracle::Graph& g;
  std::map<std::string, int> vars;

  bool apply(const Desc& d, int n) {
    oracle::NaiveUnifier u(L, g);
    switch (d.kind) {
      case Desc::Kind::Type: {
        auto it = std::find(L.names.begin(), L.names.end(), d.name);
        REQUIRE(it != L.names.end());
        return u.raise(n, static_cast<int>(it - L.names.begin()));
      }
      case Desc::Kind::Var: {
        auto [it, fresh] = vars.emplace(d.name, n);
        return fresh || u.unify(it->second, n);
      }
      case Desc::Kind::Feat: {
        auto intro = introducer(L, d.name);
        REQUIRE(intro);
        if (!u.raise(n, *intro)) return false;
        n = g.find(n);
        auto& arcs = g.nodes[n].arcs;
        int child;
        if (arcs.count(d.name)) {
          child = arcs[d.name];
        } else {
          child = g.add(*L.restriction(g.nodes[n].type, d.name));
          g.nodes[n].arcs[d.name] = child;
        }
        return apply(d.args[0], child);
      }
      case Desc::Kind::Conj:
        for (const Desc& p : d.args)
          if (!apply(p, n)) return false;
        return true;
      default:
        FAIL("unexpected description kind");
        return false;
    }
  }
};

// Checks every type, path and sharing constraint of d at node n.
bool satisfies(const oracle::Lattice& L, const oracle::Graph& g, int n, const Desc& d, std::map<std::string, int>& vars) {
  n = g.find(n);
  switch (d.kind) {
    case Desc::Kind::Type: {
      auto it = std::find(L.names.begin(), L.names.end(), d.name);
      return L.sub[it - L.names.begin()][g.nodes[n].type];
    }
    case Desc::Kind::Var: {
      auto [it, fresh] = vars.emplace(d.name, n);
      return fresh || g.find(it->second) == n;
    }
    case Desc::Kind::Feat: {
      auto a = g.nodes[n].arcs.find(d.name);
      return a != g.nodes[n].arcs.end() && satisfies(L, g, a->second, d.args[0], vars);
    }
    case Desc::Kind::Conj:
      for (const Desc& p : d.args)
        if (!satisfies(L, g, n, p, vars)) return false;
      return true;
    default:
      return false;
  }
}

Desc random_desc(std::mt19937& rng, const oracle::Lattice& L, const std::vector<std::string>& feats, int depth) {
  int pick = std::uniform_int_distribution<int>(0, depth > 0 ? 9 : 3)(rng);
  if (pick <= 1) return Desc::type(L.names[std::uniform_int_distribution<std::size_t>(0, L.names.size() - 1)(rng)]);
  if (pick <= 3) return Desc::var(std::string(1, "XYZ"[std::uniform_int_distribution<int>(0, 2)(rng)]));
  if (pick <= 7 && !feats.empty())
    return Desc::feat(feats[std::uniform_int_distribution<std::size_t>(0, feats.size() - 1)(rng)],
                      random_desc(rng, L, feats, depth - 1));
  std::vector<Desc> parts;
  int k = std::uniform_int_distribution<int>(2, 3)(rng);
  for (int i = 0; i < k; ++i) parts.push_back(random_desc(rng, L, feats, depth - 1));
  return Desc::conj(std::move(parts));
}

std::vector<std::string> feature_names(const SignatureDecls& d) {
  std::set<std::string> s;
  for (const auto& t : d.types)
    for (const auto& [f, r] : t.intro) s.insert(f);
  return {s.begin(), s.end()};
}

struct EveryBoy {
  GrammarSource g;
  Signature sig;
  oracle::Lattice L;
  static GrammarSource load() {
    GrammarSource g = parse_grammar(oracle::read_file(oracle::grammar_path("every_boy.ale")));
    inject_list_types(g.signature);
    return g;
  }
  EveryBoy() : g(load()), sig(Signature::compile(g.signature)), L(oracle::Lattice::from(g.signature)) {}
  int type(const std::string& n) { return L.id(n); }
};

}  // namespace

TEST_CASE("the example grammar parses into its clauses") {
  GrammarSource g = parse_grammar(oracle::read_file(oracle::grammar_path("every_boy.ale")));
  CHECK(g.rules.size() == 2);
  CHECK(g.lexicon.size() == 3);
  CHECK(g.signature.types.size() == 17);
  CHECK(g.lexicon[1].word == "boy");
  CHECK(g.rules[0].body.size() == 2);
  CHECK(g.warnings.empty());

  // Golden rendering of the parsed source.
  std::string printed = to_source(g);
  CHECK(printed == oracle::read_file(std::string(TFSM_SOURCE_DIR) + "/tests/golden/every_boy.source"));
  GrammarSource again = parse_grammar(printed);
  CHECK(to_source(again) == printed);
  REQUIRE(again.rules.size() == g.rules.size());
  for (std::size_t i = 0; i < g.rules.size(); ++i) {
    CHECK(again.rules[i].head == g.rules[i].head);
    CHECK(again.rules[i].body == g.rules[i].body);
  }
  for (std::size_t i = 0; i < g.lexicon.size(); ++i) CHECK(again.lexicon[i].desc == g.lexicon[i].desc);
}

TEST_CASE("description syntax") {
  Desc d = parse_description("(a, f:(b, g:X), h:X)");
  REQUIRE(d.kind == Desc::Kind::Conj);
  REQUIRE(d.args.size() == 3);
  CHECK(d.args[0] == Desc::type("a"));
  CHECK(d.args[1] == Desc::feat("f", Desc::conj({Desc::type("b"), Desc::feat("g", Desc::var("X"))})));
  CHECK(d.args[2] == Desc::feat("h", Desc::var("X")));

  // ':' binds tighter than ','.
  CHECK(parse_description("f:a, b") == Desc::conj({Desc::feat("f", Desc::type("a")), Desc::type("b")}));
  CHECK(parse_description("f:g:a") == Desc::feat("f", Desc::feat("g", Desc::type("a"))));

  Desc l = parse_description("[a, b | T]");
  CHECK(l.kind == Desc::Kind::List);
  CHECK(l.has_tail);
  CHECK(l.args.size() == 3);
  CHECK(parse_description("[]").args.empty());

  Desc q = parse_description("'Every'");
  CHECK(q == Desc::type("Every"));
}

TEST_CASE("unsupported constructs are rejected by name") {
  struct Case {
    const char* text;
    ErrorCode code;
    const char* detail;
  };
  const Case cases[] = {
      {"bot sub []. s ===> cats> a.", ErrorCode::UnsupportedConstruct, "cats>"},
      {"bot sub []. s ===> cat> a, goal> b.", ErrorCode::UnsupportedConstruct, "goal>"},
      {"bot sub []. p(X) :- q(X).", ErrorCode::UnsupportedConstruct, ":-"},
      {"bot sub []. p if q.", ErrorCode::UnsupportedConstruct, "if"},
      {"bot sub []. w ---> (a ; b).", ErrorCode::UnsupportedConstruct, ";"},
      {"bot sub []. w ---> (X, =\\= Y).", ErrorCode::UnsupportedConstruct, "=\\="},
      {"bot sub []. w ---> {a}.", ErrorCode::UnsupportedConstruct, "{"},
      {"bot sub []. plural lex_rule a **> b.", ErrorCode::UnsupportedConstruct, "lex_rule"},
      {"bot sub []. a cons b.", ErrorCode::UnsupportedConstruct, "cons"},
      {"bot sub [a]. a sub [].\nw ---> (a, .", ErrorCode::SyntaxError, nullptr},
      {"bot sub [a]. a sub [b]. a sub [c].", ErrorCode::DuplicateDeclaration, "a"},
  };
  for (const Case& c : cases) {
    CAPTURE(c.text);
    std::string detail;
    CHECK(grammar_error(c.text, &detail) == c.code);
    if (c.detail) CHECK(detail == c.detail);
  }
}

TEST_CASE("syntax errors carry positions") {
  try {
    parse_grammar("bot sub [a].\n\nw ---> (a,\n  ]).");
    FAIL("accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SyntaxError);
    CHECK(e.pos().line == 4);
    CHECK(e.pos().column == 3);
  }
}

TEST_CASE("a single semicolon in the lexicon gives several entries") {
  GrammarSource g = parse_grammar("bot sub [a, b]. w ---> a ; b. v ---> b.");
  REQUIRE(g.lexicon.size() == 3);
  CHECK(g.lexicon[0].word == "w");
  CHECK(g.lexicon[1].word == "w");
  CHECK(g.lexicon[1].desc == Desc::type("b"));
}

TEST_CASE("macros") {
  GrammarSource g = parse_grammar(
      "bot sub [sign]. sign intro [f:bot].\n"
      "np(X) macro (syn:cat:np, sem:X).\n"
      "wrap(Y) macro (outer, @np(Y)).\n"
      "local macro (a:Z, b:Z).\n"
      "w ---> @np(R1).\n"
      "v ---> (@wrap(s), @local, @local).\n");
  expand_macros(g);
  CHECK(g.lexicon[0].desc == parse_description("(syn:cat:np, sem:R1)"));
  Desc nested = g.lexicon[1].desc;
  REQUIRE(nested.args.size() == 3);
  CHECK(nested.args[0] == parse_description("(outer, (syn:cat:np, sem:s))"));
  // A variable local to a macro body is renamed apart per call.
  REQUIRE(nested.args[1].kind == Desc::Kind::Conj);
  std::string z1 = nested.args[1].args[0].args[0].name;
  std::string z2 = nested.args[2].args[0].args[0].name;
  CHECK(z1 != z2);
  CHECK(nested.args[1].args[1].args[0].name == z1);

  CHECK(grammar_error("bot sub []. w ---> @nope.") == ErrorCode::UnknownMacro);
  CHECK(grammar_error("bot sub []. m(X) macro X. w ---> @m(a, b).") == ErrorCode::ArityMismatch);
  CHECK(grammar_error("bot sub []. m macro (a, @m). w ---> @m.") == ErrorCode::RecursiveMacro);
  CHECK(grammar_error("bot sub []. m macro @n. n macro (b, @m). w ---> @m.") == ErrorCode::RecursiveMacro);
}

TEST_CASE("single-occurrence variables are flagged") {
  GrammarSource g = parse_grammar("bot sub [a]. a intro [f:bot, g:bot]. w ---> (f:X, g:Y, f:Y).");
  lint_single_variables(g);
  REQUIRE(g.warnings.size() == 1);
  CHECK(g.warnings[0].message.find("X") != std::string::npos);
}

TEST_CASE("expanded lexical entries match the initial parsing items") {
  EveryBoy f;
  FrozenEntries lex = expand_lexicon(f.g.lexicon, f.sig);
  REQUIRE(lex.entries.size() == 3);

  auto t = [&](const char* n) { return f.type(n); };
  // boy: word, syn:(syn, cat:n), sem:(lambda, var:[7]sem, rst:(arg_1, prd:boy, a1:[7]))
  {
    oracle::Graph g;
    int root = g.add(t("word"));
    int syn = g.add(t("syn"));
    g.nodes[syn].arcs["cat"] = g.add(t("n"));
    int lam = g.add(t("lambda"));
    int v = g.add(t("sem"));
    int rst = g.add(t("arg_1"));
    g.nodes[rst].arcs = {{"prd", g.add(t("boy"))}, {"a1", v}};
    g.nodes[lam].arcs = {{"var", v}, {"rst", rst}};
    g.nodes[root].arcs = {{"syn", syn}, {"sem", lam}};
    oracle::Graph got;
    int r = oracle::from_heap(f.L, lex.heap, lex.entries[1].second, got);
    CHECK(oracle::same_structure(f.L, g, root, got, r));
  }
  // every: the quantifier shares its variable with both restrictions.
  {
    oracle::Graph g;
    int root = g.add(t("word"));
    int syn = g.add(t("syn"));
    g.nodes[syn].arcs["cat"] = g.add(t("det"));
    int v2 = g.add(t("sem"));
    int v5 = g.add(t("arg_1"));
    int v6 = g.add(t("arg_1"));
    g.nodes[v5].arcs["a1"] = v2;
    g.nodes[v6].arcs["a1"] = v2;
    int form = g.add(t("bool"));
    g.nodes[form].arcs = {{"conn", g.add(t("if"))}, {"wff1", v5}, {"wff2", v6}};
    int all = g.add(t("forall"));
    g.nodes[all].arcs = {{"var", v2}, {"form", form}};
    int inner = g.add(t("arg_2"));
    g.nodes[inner].arcs = {{"prd", all}, {"a1", v5}, {"a2", v6}};
    int lam2 = g.add(t("lambda"));
    g.nodes[lam2].arcs = {{"var", v6}, {"rst", inner}};
    int lam1 = g.add(t("lambda"));
    g.nodes[lam1].arcs = {{"var", v5}, {"rst", lam2}};
    g.nodes[root].arcs = {{"syn", syn}, {"sem", lam1}};
    oracle::Graph got;
    int r = oracle::from_heap(f.L, lex.heap, lex.entries[0].second, got);
    CHECK(oracle::same_structure(f.L, g, root, got, r));
  }
}

TEST_CASE("description expansion errors") {
  Signature sig = Signature::compile(
      parse_grammar("bot sub [cat, np]. cat sub [vp] intro [f:bot]. np sub [].").signature);
  Heap h(sig);
  DescriptionExpander ex(h);
  std::string detail;
  CHECK(error_of([&] { ex.add(parse_description("(np, f:vp)")); }) == ErrorCode::InconsistentDescription);
  CHECK(error_of([&] { ex.add(parse_description("(vp, np)")); }) == ErrorCode::InconsistentDescription);
  CHECK(error_of([&] { ex.add(parse_description("(f:nope)")); }, &detail) == ErrorCode::UnknownType);
  CHECK(error_of([&] { ex.add(parse_description("(g:np)")); }, &detail) == ErrorCode::UnknownFeature);
  CHECK(detail == "g");

  // bot on its own stays an unexpanded placeholder.
  CellRef r = ex.add(parse_description("bot"));
  CHECK(h.cell(h.deref(r)).kind == CellKind::Lazy);
  // Mentioning a feature promotes to its introducer.
  CellRef p = ex.add(parse_description("f:np"));
  CHECK(sig.type_name(h.type_of(p)) == "cat");
}

TEST_CASE("expansion is the most general satisfier on random descriptions") {
  std::mt19937 rng(31337);
  int consistent = 0, clashing = 0;
  for (int s = 0; s < 30; ++s) {
    auto rs = oracle::random_signature(rng, std::uniform_int_distribution<int>(4, 10)(rng), 4);
    Signature sig = Signature::compile(rs.decls);
    auto feats = feature_names(rs.decls);
    for (int k = 0; k < 60; ++k) {
      Desc d = random_desc(rng, rs.lattice, feats, 4);
      CAPTURE(to_string(d));
      oracle::Graph want;
      GraphExpander ge{rs.lattice, want, {}};
      int wroot = want.add(0);
      bool ok = ge.apply(d, wroot);

      Heap h(sig);
      DescriptionExpander ex(h);
      std::optional<CellRef> root;
      ErrorCode code = error_of([&] { root = ex.add(d); });
      if (!ok) {
        CHECK(code == ErrorCode::InconsistentDescription);
        ++clashing;
        continue;
      }
      REQUIRE(root);
      ++consistent;
      oracle::Graph got;
      int groot = oracle::from_heap(rs.lattice, h, *root, got);
      std::map<std::string, int> vars;
      CHECK(satisfies(rs.lattice, got, groot, d, vars));
      CHECK(oracle::same_structure(rs.lattice, want, wroot, got, groot));
    }
  }
  CHECK(consistent >= 300);
  CHECK(clashing >= 100);
  MESSAGE("consistent " << consistent << ", clashing " << clashing);
}

TEST_CASE("printing and reading descriptions is a fixpoint") {
  std::mt19937 rng(8);
  auto rs = oracle::random_signature(rng, 12, 5);
  auto feats = feature_names(rs.decls);
  for (int k = 0; k < 500; ++k) {
    Desc d = random_desc(rng, rs.lattice, feats, 5);
    std::string text = to_string(d);
    CAPTURE(text);
    Desc back = parse_description(text);
    CHECK(back == d);
    CHECK(to_string(back) == text);
  }
  Desc lists = parse_description("(f:[a, (b, g:X)], h:[X | T], k:[])");
  CHECK(parse_description(to_string(lists)) == lists);
}

TEST_CASE("printed structures read back as equivalent structures") {
  std::mt19937 rng(77);
  for (int s = 0; s < 20; ++s) {
    auto rs = oracle::random_signature(rng, 10, 4);
    Signature sig = Signature::compile(rs.decls);
    for (int k = 0; k < 20; ++k) {
      oracle::Graph g;
      std::vector<int> pool;
      int root = oracle::random_graph(rng, rs.lattice, g, 0, 4, pool, 0.3);
      std::vector<Cell> cells;
      auto roots = oracle::to_cells(rs.lattice, g, {root}, sig, cells);
      Heap h(sig);
      h.restore(cells, 0);
      std::string text = print_fs(h, roots[0]);
      CAPTURE(text);
      Heap h2(sig);
      DescriptionExpander ex(h2);
      CellRef r2 = ex.add(parse_description(text));
      CHECK(equivalent({&h, roots[0]}, {&h2, r2}));
    }
  }
}

TEST_CASE("empty categories fold into rule bodies") {
  const char* text =
      "bot sub [cat, val]. cat sub [s, a, b] intro [f:val]. val sub [v1, v2].\n"
      "r rule (s, f:X) ===> cat> (a, f:X), cat> (b, f:X).\n"
      "u rule (s, f:v2) ===> cat> b.\n"
      "empty (b, f:v1).\n";
  GrammarSource g = parse_grammar(text);
  Signature sig = Signature::compile(g.signature);
  std::vector<RuleTemplate> rules;
  for (const auto& r : g.rules) rules.push_back(expand_rule(r, sig));
  FrozenEntries empties = expand_empties(g.empties, sig);

  std::vector<Diagnostic> warnings;
  auto none = expand_empty_categories(rules, expand_empties({}, sig), 2, warnings);
  CHECK(none.rules.size() == 2);

  auto zero = expand_empty_categories(rules, empties, 0, warnings);
  REQUIRE(zero.rules.size() == 2);
  for (std::size_t i = 0; i < 2; ++i)
    CHECK(equivalent(zero.rules[i].heap, zero.rules[i].roots, rules[i].heap, rules[i].roots));

  warnings.clear();
  auto out = expand_empty_categories(rules, empties, 2, warnings);
  CHECK_FALSE(out.budget_exceeded);
  // The binary rule gains a unary variant; u would lose its only element.
  REQUIRE(out.rules.size() == 3);
  RuleTemplate want = expand_rule(parse_grammar("r rule (s, f:(X, v1)) ===> cat> (a, f:X).").rules[0], sig);
  CHECK(equivalent(out.rules[2].heap, out.rules[2].roots, want.heap, want.roots));
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].message.find("empty body") != std::string::npos);
}

TEST_CASE("empty-category expansion stops at its budget") {
  const char* text =
      "bot sub [c].\n"
      "c ===> c, c, c, c, c.\n"
      "empty c.\n";
  GrammarSource g = parse_grammar(text);
  Signature sig = Signature::compile(g.signature);
  std::vector<RuleTemplate> rules{expand_rule(g.rules[0], sig)};
  std::vector<Diagnostic> warnings;
  auto out = expand_empty_categories(rules, expand_empties(g.empties, sig), 2, warnings);
  CHECK(out.budget_exceeded);
  // One rule each of arity 5, 4 and 3.
  std::set<std::size_t> arities;
  for (const auto& r : out.rules) arities.insert(r.arity());
  CHECK(arities == std::set<std::size_t>{3, 4, 5});
  auto more = expand_empty_categories(rules, expand_empties(g.empties, sig), 5, warnings);
  CHECK_FALSE(more.budget_exceeded);
}
