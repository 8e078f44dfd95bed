#include "description.hpp"

#include <algorithm>
#include <map>

namespace tfsm {

bool operator==(const Desc& a, const Desc& b) {
  return a.kind == b.kind && a.name == b.name && a.has_tail == b.has_tail && a.args == b.args;
}

namespace {

bool needs_quotes(const std::string& s) {
  if (s.empty() || !(s[0] >= 'a' && s[0] <= 'z')) return true;
  return !std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

std::string atom(const std::string& s) {
  if (!needs_quotes(s)) return s;
  std::string out = "'";
  for (char c : s) {
    if (c == '\'' || c == '\\') out += '\\';
    out += c;
  }
  return out + "'";
}

// Argument position: conjunctions need parentheses.
void write(std::string& out, const Desc& d, bool arg) {
  switch (d.kind) {
    case Desc::Kind::Type: out += atom(d.name); break;
    case Desc::Kind::Var: out += d.name; break;
    case Desc::Kind::Feat:
      out += atom(d.name) + ":";
      write(out, d.args.front(), true);
      break;
    case Desc::Kind::Conj:
      if (arg) out += '(';
      for (std::size_t i = 0; i < d.args.size(); ++i) {
        if (i) out += ", ";
        write(out, d.args[i], true);
      }
      if (arg) out += ')';
      break;
    case Desc::Kind::List: {
      out += '[';
      std::size_t n = d.args.size() - (d.has_tail ? 1 : 0);
      for (std::size_t i = 0; i < n; ++i) {
        if (i) out += ", ";
        write(out, d.args[i], true);
      }
      if (d.has_tail) {
        out += " | ";
        write(out, d.args.back(), true);
      }
      out += ']';
      break;
    }
    case Desc::Kind::Macro:
      out += "@" + atom(d.name);
      if (!d.args.empty()) {
        out += '(';
        for (std::size_t i = 0; i < d.args.size(); ++i) {
          if (i) out += ", ";
          write(out, d.args[i], true);
        }
        out += ')';
      }
      break;
  }
}

void collect_vars(const Desc& d, std::map<std::string, int>& counts) {
  if (d.kind == Desc::Kind::Var && d.name != "_") ++counts[d.name];
  for (const auto& a : d.args) collect_vars(a, counts);
}

struct MacroExpander {
  const std::vector<MacroDecl>& macros;
  std::vector<std::string> active;
  int fresh = 0;

  const MacroDecl* find(const std::string& name) const {
    for (const auto& m : macros)
      if (m.name == name) return &m;
    return nullptr;
  }

  Desc substitute(const Desc& d, const std::map<std::string, Desc>& params, std::map<std::string, std::string>& renamed) {
    if (d.kind == Desc::Kind::Var) {
      auto it = params.find(d.name);
      if (it != params.end()) return it->second;
      if (d.name == "_") return d;
      auto r = renamed.find(d.name);
      if (r == renamed.end()) r = renamed.emplace(d.name, "M" + std::to_string(fresh++) + "_" + d.name).first;
      return Desc::var(r->second, d.pos);
    }
    Desc out = d;
    for (auto& a : out.args) a = substitute(a, params, renamed);
    return out;
  }

  Desc expand(const Desc& d) {
    if (d.kind != Desc::Kind::Macro) {
      Desc out = d;
      for (auto& a : out.args) a = expand(a);
      return out;
    }
    const MacroDecl* m = find(d.name);
    if (m == nullptr) throw CompileError(ErrorCode::UnknownMacro, "unknown macro '@" + d.name + "'", {d.name}, d.pos);
    if (m->params.size() != d.args.size())
      throw CompileError(ErrorCode::ArityMismatch,
                         "macro '" + d.name + "' takes " + std::to_string(m->params.size()) + " argument(s), " +
                             std::to_string(d.args.size()) + " given",
                         {d.name}, d.pos);
    if (std::find(active.begin(), active.end(), d.name) != active.end()) {
      std::vector<std::string> cycle(std::find(active.begin(), active.end(), d.name), active.end());
      cycle.push_back(d.name);
      std::string path;
      for (const auto& c : cycle) path += (path.empty() ? "" : " -> ") + c;
      throw CompileError(ErrorCode::RecursiveMacro, "recursive macro: " + path, cycle, d.pos);
    }
    std::map<std::string, Desc> params;
    for (std::size_t i = 0; i < m->params.size(); ++i) params.emplace(m->params[i], expand(d.args[i]));
    std::map<std::string, std::string> renamed;
    Desc body = substitute(m->body, params, renamed);
    active.push_back(d.name);
    Desc out = expand(body);
    active.pop_back();
    return out;
  }
};

}  // namespace

std::string to_string(const Desc& d) {
  std::string out;
  write(out, d, false);
  return out;
}

Desc expand_macros(const Desc& d, const std::vector<MacroDecl>& macros) {
  MacroExpander ex{macros, {}, 0};
  return ex.expand(d);
}

void expand_macros(GrammarSource& g) {
  MacroExpander ex{g.macros, {}, 0};
  for (auto& r : g.rules) {
    r.head = ex.expand(r.head);
    for (auto& b : r.body) b = ex.expand(b);
  }
  for (auto& l : g.lexicon) l.desc = ex.expand(l.desc);
  for (auto& e : g.empties) e.desc = ex.expand(e.desc);
  // Macro bodies are checked too, so unused recursive macros are reported.
  for (const auto& m : g.macros) {
    std::vector<Desc> args;
    for (const auto& p : m.params) args.push_back(Desc::var(p));
    Desc call{Desc::Kind::Macro, m.name, std::move(args), false, m.pos};
    ex.expand(call);
  }
}

void lint_single_variables(GrammarSource& g) {
  auto check = [&](std::map<std::string, int>& counts, SourcePos pos, const std::string& where) {
    for (const auto& [v, n] : counts)
      if (n == 1 && v[0] != '_')
        g.warnings.push_back({"variable " + v + " occurs only once in " + where, pos});
  };
  for (const auto& r : g.rules) {
    std::map<std::string, int> counts;
    collect_vars(r.head, counts);
    for (const auto& b : r.body) collect_vars(b, counts);
    check(counts, r.pos, r.name.empty() ? "rule" : "rule " + r.name);
  }
  for (const auto& l : g.lexicon) {
    std::map<std::string, int> counts;
    collect_vars(l.desc, counts);
    check(counts, l.pos, "lexical entry for '" + l.word + "'");
  }
}

std::string to_source(const TypeDecl& d) {
  std::string out = atom(d.name) + " sub [";
  for (std::size_t i = 0; i < d.subtypes.size(); ++i) out += (i ? ", " : "") + atom(d.subtypes[i]);
  out += "]";
  if (!d.intro.empty()) {
    out += " intro [";
    for (std::size_t i = 0; i < d.intro.size(); ++i)
      out += (i ? ", " : "") + atom(d.intro[i].first) + ":" + atom(d.intro[i].second);
    out += "]";
  }
  return out + ".";
}

std::string to_source(const GrammarSource& g) {
  std::string out;
  for (const auto& d : g.signature.types) out += to_source(d) + "\n";
  if (!g.signature.types.empty()) out += "\n";
  for (const auto& m : g.macros) {
    out += atom(m.name);
    if (!m.params.empty()) {
      out += "(";
      for (std::size_t i = 0; i < m.params.size(); ++i) out += (i ? ", " : "") + m.params[i];
      out += ")";
    }
    out += " macro " + to_string(m.body) + ".\n";
  }
  for (const auto& r : g.rules) {
    if (!r.name.empty()) out += atom(r.name) + (r.initial_only ? " init_rule " : " rule ");
    out += to_string(r.head) + "\n===>\n";
    for (std::size_t i = 0; i < r.body.size(); ++i) {
      std::string b;
      write(b, r.body[i], true);
      out += "cat> " + b + (i + 1 < r.body.size() ? ",\n" : ".\n\n");
    }
  }
  for (const auto& l : g.lexicon) out += atom(l.word) + " ---> " + to_string(l.desc) + ".\n";
  for (const auto& e : g.empties) out += "empty " + to_string(e.desc) + ".\n";
  if (!g.kb.empty()) {
    out += "\n#kb\n";
    for (const auto& k : g.kb) {
      std::string w;
      for (char c : k.word) {
        if (c == '"' || c == '\\') w += '\\';
        w += c;
      }
      out += atom(k.primitive) + "/" + std::to_string(k.arity) + " -> \"" + w + "\".\n";
    }
  }
  return out;
}

}  // namespace tfsm
