// Lexer and recursive-descent parser for the grammar file format
// (see docs/grammar.md for the EBNF).

#include <cctype>
#include <optional>

#include "description.hpp"

namespace tfsm {
namespace {

enum class Tok {
  Atom,      // lower-case identifier or quoted 'atom'
  Var,       // upper-case or underscore identifier
  String,    // "text"
  Number,
  Punct,     // ( ) [ ] , : | . ; @ /
  Arrow,     // ===>
  LexArrow,  // --->
  KbArrow,   // ->
  CatMark,   // cat>
  Reject,    // cats>, goal>, =\=, :-, {, }, **>
  KbHeader,  // #kb
  End,
};

struct Token {
  Tok kind;
  std::string text;
  SourcePos pos;
  bool quoted = false;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      SourcePos p{line_, col_};
      if (i_ >= src_.size()) {
        out.push_back({Tok::End, "end of input", p});
        return out;
      }
      char c = src_[i_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::string id;
        while (i_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[i_])) || src_[i_] == '_')) id += get();
        if (peek() == '>' && (id == "cat" || id == "cats" || id == "goal")) {
          get();
          out.push_back({id == "cat" ? Tok::CatMark : Tok::Reject, id + ">", p});
        } else {
          bool var = std::isupper(static_cast<unsigned char>(id[0])) || id[0] == '_';
          out.push_back({var ? Tok::Var : Tok::Atom, id, p});
        }
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        std::string n;
        while (i_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_]))) n += get();
        out.push_back({Tok::Number, n, p});
      } else if (c == '\'' || c == '"') {
        get();
        std::string s;
        for (;;) {
          if (i_ >= src_.size() || src_[i_] == '\n') throw syntax(p, "closing quote");
          char d = get();
          if (d == c) break;
          if (d == '\\' && i_ < src_.size()) d = get();
          s += d;
        }
        out.push_back({c == '"' ? Tok::String : Tok::Atom, s, p, true});
      } else if (starts("===>")) {
        advance(4);
        out.push_back({Tok::Arrow, "===>", p});
      } else if (starts("--->")) {
        advance(4);
        out.push_back({Tok::LexArrow, "--->", p});
      } else if (starts("->")) {
        advance(2);
        out.push_back({Tok::KbArrow, "->", p});
      } else if (starts("=\\=") || starts(":-") || starts("**>")) {
        std::string t(src_.substr(i_, starts(":-") ? 2 : 3));
        advance(t.size());
        out.push_back({Tok::Reject, t, p});
      } else if (c == '{' || c == '}') {
        get();
        out.push_back({Tok::Reject, std::string(1, c), p});
      } else if (starts("#kb")) {
        advance(3);
        out.push_back({Tok::KbHeader, "#kb", p});
      } else if (std::string_view("()[],:|.;@/").find(c) != std::string_view::npos) {
        get();
        out.push_back({Tok::Punct, std::string(1, c), p});
      } else {
        throw CompileError(ErrorCode::SyntaxError,
                           at(p) + "unexpected character '" + std::string(1, c) + "'", {}, p);
      }
    }
  }

  static std::string at(SourcePos p) { return std::to_string(p.line) + ":" + std::to_string(p.column) + ": "; }
  static CompileError syntax(SourcePos p, const std::string& expected) {
    return CompileError(ErrorCode::SyntaxError, at(p) + "expected " + expected, {expected}, p);
  }

 private:
  char peek() const { return i_ < src_.size() ? src_[i_] : '\0'; }
  bool starts(std::string_view s) const { return src_.substr(i_, s.size()) == s; }
  char get() {
    char c = src_[i_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }
  void advance(std::size_t n) {
    while (n--) get();
  }
  void skip_space() {
    while (i_ < src_.size()) {
      char c = src_[i_];
      if (c == '%') {
        while (i_ < src_.size() && src_[i_] != '\n') get();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        get();
      } else {
        break;
      }
    }
  }

  std::string_view src_;
  std::size_t i_ = 0;
  int line_ = 1;
  int col_ = 1;
};

const char* reject_reason(const std::string& t) {
  if (t == "cats>") return "cats> list constituents are not supported";
  if (t == "goal>") return "goal> procedural attachments are not supported";
  if (t == "=\\=") return "inequations are not supported";
  if (t == ":-" || t == "if") return "definite clauses are not supported";
  if (t == "**>") return "lexical rules are not supported";
  if (t == "{" || t == "}") return "set values are not supported";
  return "unsupported construct";
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : t_(std::move(toks)) {}

  GrammarSource grammar() {
    GrammarSource g;
    bool kb = false;
    while (cur().kind != Tok::End) {
      if (cur().kind == Tok::KbHeader) {
        ++p_;
        kb = true;
        continue;
      }
      if (kb) {
        g.kb.push_back(kb_record());
        continue;
      }
      clause(g);
    }
    return g;
  }

  Desc lone_description() {
    Desc d = conj();
    if (is_punct(".")) ++p_;
    if (cur().kind != Tok::End) fail("end of description");
    return d;
  }

 private:
  const Token& cur() const { return t_[p_]; }
  const Token& ahead(std::size_t n) const { return t_[std::min(p_ + n, t_.size() - 1)]; }
  bool is_punct(const char* s) const { return cur().kind == Tok::Punct && cur().text == s; }
  bool is_atom(const char* s) const { return cur().kind == Tok::Atom && !cur().quoted && cur().text == s; }

  [[noreturn]] void fail(const std::string& expected) const {
    const Token& t = cur();
    if (t.kind == Tok::Reject) unsupported(t);
    throw CompileError(ErrorCode::SyntaxError, Lexer::at(t.pos) + "expected " + expected + ", found '" + t.text + "'",
                       {expected, t.text}, t.pos);
  }
  [[noreturn]] static void unsupported(const Token& t) {
    throw CompileError(ErrorCode::UnsupportedConstruct, Lexer::at(t.pos) + reject_reason(t.text), {t.text}, t.pos);
  }

  void expect_punct(const char* s) {
    if (!is_punct(s)) fail(std::string("'") + s + "'");
    ++p_;
  }
  std::string atom_text() {
    if (cur().kind != Tok::Atom) fail("atom");
    return t_[p_++].text;
  }

  void end_clause() {
    if (is_atom("if")) unsupported(cur());
    if (is_punct(";")) {
      throw CompileError(ErrorCode::UnsupportedConstruct, Lexer::at(cur().pos) + "disjunction in descriptions is not supported",
                         {";"}, cur().pos);
    }
    expect_punct(".");
  }

  void clause(GrammarSource& g) {
    const Token& first = cur();
    if (first.kind == Tok::Reject) unsupported(first);
    const Token& second = ahead(1);
    bool second_atom = second.kind == Tok::Atom && !second.quoted;
    if (first.kind == Tok::Atom && second_atom && (second.text == "sub" || second.text == "intro"))
      return type_clause(g);
    if (first.kind == Tok::Atom && !first.quoted && first.text == "empty" && second.kind != Tok::Arrow &&
        second.kind != Tok::LexArrow &&
        !(second_atom && second.text == "macro")) {
      ++p_;
      EmptyDecl e{conj(), first.pos};
      end_clause();
      g.empties.push_back(std::move(e));
      return;
    }
    if (first.kind == Tok::Atom && second_atom && second.text == "macro") return macro_clause(g);
    if (first.kind == Tok::Atom && second.kind == Tok::Punct && second.text == "(") return macro_clause(g);
    if (first.kind == Tok::Atom && second_atom && (second.text == "rule" || second.text == "init_rule")) {
      std::string name = first.text;
      bool initial = second.text == "init_rule";
      p_ += 2;
      return rule_clause(g, name, initial, first.pos);
    }
    if (first.kind == Tok::Atom && second_atom &&
        (second.text == "lex_rule" || second.text == "cons" || second.text == "ext" || second.text == "intensional")) {
      const char* what = second.text == "lex_rule" ? "lexical rules are not supported"
                         : second.text == "cons"   ? "type constraints are not supported"
                                                   : "extensional/intensional typing is not supported";
      throw CompileError(ErrorCode::UnsupportedConstruct, Lexer::at(second.pos) + what, {second.text}, second.pos);
    }
    if (first.kind == Tok::Atom && second.kind == Tok::LexArrow) return lex_clause(g);
    rule_clause(g, "", false, first.pos);
  }

  void type_clause(GrammarSource& g) {
    TypeDecl d;
    d.pos = cur().pos;
    d.name = atom_text();
    if (g.signature.find(d.name) != nullptr)
      throw CompileError(ErrorCode::DuplicateDeclaration, Lexer::at(d.pos) + "type '" + d.name + "' declared twice",
                         {d.name}, d.pos);
    if (is_atom("sub")) {
      ++p_;
      expect_punct("[");
      while (!is_punct("]")) {
        d.subtypes.push_back(atom_text());
        if (!is_punct("]")) expect_punct(",");
      }
      ++p_;
    }
    if (is_atom("intro")) {
      ++p_;
      expect_punct("[");
      while (!is_punct("]")) {
        std::string f = atom_text();
        expect_punct(":");
        std::string r = atom_text();
        d.intro.emplace_back(f, r);
        if (!is_punct("]")) expect_punct(",");
      }
      ++p_;
    }
    end_clause();
    g.signature.types.push_back(std::move(d));
  }

  void macro_clause(GrammarSource& g) {
    MacroDecl m;
    m.pos = cur().pos;
    m.name = atom_text();
    if (is_punct("(")) {
      ++p_;
      while (!is_punct(")")) {
        if (cur().kind != Tok::Var) fail("macro parameter variable");
        m.params.push_back(t_[p_++].text);
        if (!is_punct(")")) expect_punct(",");
      }
      ++p_;
    }
    if (!is_atom("macro")) fail("'macro'");
    ++p_;
    m.body = conj();
    end_clause();
    for (const auto& other : g.macros)
      if (other.name == m.name)
        throw CompileError(ErrorCode::DuplicateDeclaration, Lexer::at(m.pos) + "macro '" + m.name + "' declared twice",
                           {m.name}, m.pos);
    g.macros.push_back(std::move(m));
  }

  void rule_clause(GrammarSource& g, std::string name, bool initial, SourcePos pos) {
    RuleDecl r;
    r.name = std::move(name);
    r.initial_only = initial;
    r.pos = pos;
    r.head = conj();
    if (is_atom("if") || (cur().kind == Tok::Reject && cur().text == ":-")) unsupported(cur());
    if (cur().kind != Tok::Arrow) fail("'===>'");
    ++p_;
    for (;;) {
      if (cur().kind == Tok::Reject) unsupported(cur());
      if (cur().kind == Tok::CatMark) ++p_;
      if (cur().kind == Tok::Reject) unsupported(cur());
      r.body.push_back(path());
      if (!is_punct(",")) break;
      ++p_;
    }
    end_clause();
    g.rules.push_back(std::move(r));
  }

  void lex_clause(GrammarSource& g) {
    SourcePos pos = cur().pos;
    std::string word = atom_text();
    ++p_;  // --->
    for (;;) {
      g.lexicon.push_back({word, conj(), pos});
      if (!is_punct(";")) break;
      ++p_;
    }
    end_clause();
  }

  KbDecl kb_record() {
    KbDecl k;
    k.pos = cur().pos;
    k.primitive = atom_text();
    expect_punct("/");
    if (cur().kind != Tok::Number) fail("arity");
    k.arity = static_cast<unsigned>(std::stoul(t_[p_++].text));
    if (cur().kind != Tok::KbArrow) fail("'->'");
    ++p_;
    if (cur().kind != Tok::String) fail("quoted word");
    k.word = t_[p_++].text;
    expect_punct(".");
    return k;
  }

  Desc conj() {
    SourcePos pos = cur().pos;
    std::vector<Desc> parts;
    parts.push_back(path());
    while (is_punct(",")) {
      ++p_;
      parts.push_back(path());
    }
    if (parts.size() == 1) return std::move(parts.front());
    return Desc::conj(std::move(parts), pos);
  }

  Desc path() {
    const Token& t = cur();
    if (t.kind == Tok::Atom && ahead(1).kind == Tok::Punct && ahead(1).text == ":") {
      std::string f = t.text;
      SourcePos pos = t.pos;
      p_ += 2;
      return Desc::feat(f, path(), pos);
    }
    return primary();
  }

  Desc primary() {
    const Token& t = cur();
    switch (t.kind) {
      case Tok::Atom:
        ++p_;
        return Desc::type(t.text, t.pos);
      case Tok::Var:
        ++p_;
        if (is_punct(":")) fail("description after variable (variables take no features)");
        return Desc::var(t.text, t.pos);
      case Tok::Reject:
        unsupported(t);
      case Tok::Punct:
        if (t.text == "(") {
          ++p_;
          Desc d = conj();
          if (is_punct(";"))
            throw CompileError(ErrorCode::UnsupportedConstruct,
                               Lexer::at(cur().pos) + "disjunction in descriptions is not supported", {";"}, cur().pos);
          expect_punct(")");
          return d;
        }
        if (t.text == "[") return list();
        if (t.text == "@") return macro_call();
        break;
      default:
        break;
    }
    fail("description");
  }

  Desc list() {
    Desc d{Desc::Kind::List, {}, {}, false, cur().pos};
    ++p_;
    if (is_punct("]")) {
      ++p_;
      return d;
    }
    for (;;) {
      d.args.push_back(path());
      if (is_punct(",")) {
        ++p_;
        continue;
      }
      if (is_punct("|")) {
        ++p_;
        d.args.push_back(path());
        d.has_tail = true;
      }
      break;
    }
    expect_punct("]");
    return d;
  }

  Desc macro_call() {
    SourcePos pos = cur().pos;
    ++p_;
    Desc d{Desc::Kind::Macro, atom_text(), {}, false, pos};
    if (is_punct("(")) {
      ++p_;
      while (!is_punct(")")) {
        d.args.push_back(path());
        if (!is_punct(")")) expect_punct(",");
      }
      ++p_;
    }
    return d;
  }

  std::vector<Token> t_;
  std::size_t p_ = 0;
};

}  // namespace

GrammarSource parse_grammar(std::string_view text) {
  Parser p(Lexer(text).run());
  return p.grammar();
}

Desc parse_description(std::string_view text) {
  Parser p(Lexer(text).run());
  return p.lone_description();
}

}  // namespace tfsm
