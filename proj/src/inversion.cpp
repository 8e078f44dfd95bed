#include "inversion.hpp"

#include <algorithm>
#include <functional>
#include <unordered_set>

#include "fs_print.hpp"

namespace tfsm {

SemConfig SemConfig::from_json(const nlohmann::json& j) {
  SemConfig c;
  auto str = [&](const char* key, std::string& out) {
    if (j.contains(key)) out = j.at(key).get<std::string>();
  };
  str("sem", c.sem);
  str("var", c.var);
  str("rst", c.rst);
  str("prd", c.prd);
  str("form", c.form);
  str("conn", c.conn);
  str("str", c.str);
  str("str_rest", c.str_rest);
  if (j.contains("args")) c.args = j.at("args").get<std::vector<std::string>>();
  if (j.contains("max_unfold")) c.max_unfold = j.at("max_unfold").get<unsigned>();
  return c;
}

nlohmann::json SemConfig::to_json() const {
  return {{"sem", sem}, {"var", var},   {"rst", rst},           {"prd", prd},
          {"args", args}, {"form", form}, {"conn", conn},       {"str", str},
          {"str_rest", str_rest}, {"max_unfold", max_unfold}};
}

void add_string_features(SignatureDecls& decls, const SemConfig& cfg) {
  Signature sig = Signature::compile(decls);
  auto sem = sig.find_feature(cfg.sem);
  if (!sem) throw CompileError(ErrorCode::NotInvertible, "no feature '" + cfg.sem + "' to attach strings to", {cfg.sem});
  for (const auto& name : {cfg.str, cfg.str_rest})
    if (sig.find_feature(name))
      throw CompileError(ErrorCode::NotInvertible,
                         "feature '" + name + "' is reserved for generation strings but the grammar declares it", {name});
  TypeDecl& d = decls.ensure(sig.type_name(sig.introducer(*sem)));
  d.intro.emplace_back(cfg.str, "list");
  d.intro.emplace_back(cfg.str_rest, "list");
}

namespace {

struct Ids {
  const Signature& sig;
  FeatId sem, var, rst, prd, str, str_rest, hd, tl;
  std::vector<FeatId> args;
  TypeId ne_list, e_list;

  static std::optional<Ids> resolve(const Signature& sig, const SemConfig& cfg, std::string* missing) {
    auto f = [&](const std::string& n) -> std::optional<FeatId> {
      auto x = sig.find_feature(n);
      if (!x && missing && missing->empty()) *missing = "feature '" + n + "'";
      return x;
    };
    auto sem = f(cfg.sem), var = f(cfg.var), rst = f(cfg.rst), prd = f(cfg.prd), str = f(cfg.str),
         str_rest = f(cfg.str_rest), hd = f("hd"), tl = f("tl");
    auto ne = sig.find_type("ne_list"), e = sig.find_type("e_list");
    if (!ne && missing && missing->empty()) *missing = "type 'ne_list'";
    if (!e && missing && missing->empty()) *missing = "type 'e_list'";
    if (!sem || !var || !rst || !prd || !str || !str_rest || !hd || !tl || !ne || !e) return std::nullopt;
    std::vector<FeatId> args;
    for (const auto& a : cfg.args)
      if (auto x = sig.find_feature(a)) args.push_back(*x);
    if (args.empty()) {
      if (missing && missing->empty()) *missing = "argument features";
      return std::nullopt;
    }
    Ids ids{sig, *sem, *var, *rst, *prd, *str, *str_rest, *hd, *tl, std::move(args), *ne, *e};
    // Shapes the runtime walks without further checks.
    const char* shape = nullptr;
    if (!ids.has(sig.introducer(*rst), *var)) shape = "abstraction type without a variable";
    else if (!ids.has(sig.introducer(*str), *str_rest)) shape = "string type without a rest";
    else if (!ids.has(*ne, *hd) || !ids.has(*ne, *tl)) shape = "list type without head and tail";
    if (shape) {
      if (missing && missing->empty()) *missing = shape;
      return std::nullopt;
    }
    return ids;
  }

  bool has(TypeId t, FeatId f) const { return sig.feature_position(t, f) >= 0; }

  std::optional<CellRef> get(const Heap& h, CellRef r, FeatId f) const {
    FeatId p[] = {f};
    return follow(h, r, p);
  }
  bool lambda(const Heap& h, CellRef r) const {
    r = h.deref(r);
    return h.cell(r).kind == CellKind::Node && has(h.cell(r).type, rst);
  }
  bool formula(const Heap& h, CellRef r) const {
    r = h.deref(r);
    return has(h.cell(r).type, prd);
  }
  // Follows rst through lambdas.
  CellRef body_of(const Heap& h, CellRef r) const {
    r = h.deref(r);
    for (unsigned i = 0; i < 64 && lambda(h, r); ++i) r = *get(h, r, rst);
    return r;
  }
};

Ids require_ids(const Signature& sig, const SemConfig& cfg) {
  std::string missing;
  auto ids = Ids::resolve(sig, cfg, &missing);
  if (!ids) throw CompileError(ErrorCode::NotInvertible, "grammar cannot be inverted: missing " + missing, {missing});
  return std::move(*ids);
}

struct SemHead {
  std::size_t k;
  unsigned m;
};

// Constituents whose sem, after m steps down rst, is the head's sem.
std::vector<SemHead> semantic_heads(const Heap& h, CellRef head, std::span<const CellRef> body, const Ids& ids) {
  std::vector<SemHead> out;
  auto hs = ids.get(h, head, ids.sem);
  if (!hs) return out;
  for (std::size_t k = 0; k < body.size(); ++k) {
    auto n = ids.get(h, body[k], ids.sem);
    for (unsigned m = 0; n && m < 64; ++m) {
      if (h.deref(*n) == h.deref(*hs)) {
        out.push_back({k, m});
        break;
      }
      if (!ids.lambda(h, *n)) break;
      n = ids.get(h, *n, ids.rst);
    }
  }
  return out;
}

std::string rule_label(const RuleTemplate& r, std::size_t i) {
  return r.name.empty() ? "rule" + std::to_string(i + 1) : r.name;
}

enum class LeafKind { Arg, Pending, Functor };

struct Leaf {
  CellRef root;
  LeafKind kind;
  std::string word;
};

struct Unfolding {
  Heap heap;
  CellRef head;
  std::vector<Leaf> leaves;  // phrase order
};

class Inverter {
 public:
  Inverter(const std::vector<RuleTemplate>& rules, const FrozenEntries& lexicon, const SemConfig& cfg)
      : rules_(rules), lexicon_(lexicon), cfg_(cfg), sig_(lexicon.heap.signature()), ids_(require_ids(sig_, cfg)),
        out_(sig_) {}

  InvertedGrammar run() {
    for (std::size_t i = 0; i < rules_.size(); ++i) invert_rule(i);
    for (std::size_t i = 0; i < lexicon_.entries.size(); ++i) invert_entry(i);
    out_.rules.insert(out_.rules.end(), std::make_move_iterator(lexical_.begin()),
                      std::make_move_iterator(lexical_.end()));
    return std::move(out_);
  }

 private:
  [[noreturn]] void failure(const std::string& where, const std::string& why) const {
    throw CompileError(ErrorCode::InversionFailure, "cannot invert " + where + ": " + why, {where, why});
  }

  void invert_rule(std::size_t i) {
    const RuleTemplate& r = rules_[i];
    std::string label = rule_label(r, i);
    Unfolding u{Heap(sig_), kNullRef, {}};
    auto roots = u.heap.copy_in(r.heap, r.roots);
    u.head = roots[0];
    std::span<const CellRef> body(roots.data() + 1, roots.size() - 1);
    auto heads = semantic_heads(u.heap, u.head, body, ids_);
    if (heads.empty()) failure(label, "no constituent's semantics yields the head's semantics");
    if (heads.size() > 1) failure(label, "more than one constituent qualifies as semantic head");
    for (std::size_t k = 0; k < body.size(); ++k)
      u.leaves.push_back({body[k], k == heads[0].k && heads[0].m > 0 ? LeafKind::Pending : LeafKind::Arg, {}});
    if (heads[0].m == 0) {
      emit(u, label, r);
      return;
    }
    std::vector<Unfolding> done;
    unfold(std::move(u), 0, done);
    std::size_t emitted = 0;
    for (auto& d : done) emitted += emit(d, label + "/" + functor_word(d), r) ? 1 : 0;
    if (emitted == 0) failure(label, "semantic head does not unfold to any lexical entry");
  }

  static std::string functor_word(const Unfolding& u) {
    for (const auto& l : u.leaves)
      if (l.kind == LeafKind::Functor) return l.word;
    return {};
  }

  void unfold(Unfolding u, unsigned depth, std::vector<Unfolding>& done) {
    auto p = std::find_if(u.leaves.begin(), u.leaves.end(), [](const Leaf& l) { return l.kind == LeafKind::Pending; });
    if (p == u.leaves.end()) {
      done.push_back(std::move(u));
      return;
    }
    std::size_t at = static_cast<std::size_t>(p - u.leaves.begin());
    if (depth >= cfg_.max_unfold) {
      out_.warnings.push_back({"semantic head unfolding stopped at depth " + std::to_string(depth), {}});
      return;
    }
    for (const auto& r : rules_) {
      Unfolding t = u;
      auto roots = t.heap.copy_in(r.heap, r.roots);
      if (!t.heap.unify(roots[0], t.leaves[at].root)) continue;
      std::span<const CellRef> body(roots.data() + 1, roots.size() - 1);
      auto heads = semantic_heads(t.heap, roots[0], body, ids_);
      if (heads.size() != 1) continue;
      std::vector<Leaf> repl;
      for (std::size_t k = 0; k < body.size(); ++k)
        repl.push_back({body[k], k == heads[0].k ? LeafKind::Pending : LeafKind::Arg, {}});
      t.leaves.erase(t.leaves.begin() + static_cast<std::ptrdiff_t>(at));
      t.leaves.insert(t.leaves.begin() + static_cast<std::ptrdiff_t>(at), repl.begin(), repl.end());
      unfold(std::move(t), depth + 1, done);
    }
    for (const auto& [word, root] : lexicon_.entries) {
      Unfolding t = u;
      CellRef c = t.heap.copy_in(lexicon_.heap, root);
      if (!t.heap.unify(c, t.leaves[at].root)) continue;
      t.leaves[at].kind = LeafKind::Functor;
      t.leaves[at].word = word;
      unfold(std::move(t), depth, done);
    }
  }

  // Threads the string difference lists through the leaves in phrase
  // order: the functor contributes its primitive, arguments their str.
  bool thread_strings(Heap& h, CellRef head, const std::vector<Leaf>& leaves, CellRef prim) {
    auto arc = [&](CellRef r, FeatId f) -> std::optional<CellRef> { return h.arc(r, f); };
    auto cur = arc(head, ids_.str);
    if (!cur) return false;
    CellRef c = *cur;
    for (const auto& l : leaves) {
      if (l.kind == LeafKind::Functor) {
        if (!h.constrain(c, ids_.ne_list)) return false;
        auto hd = arc(c, ids_.hd);
        if (!hd || !h.unify(*hd, prim)) return false;
        auto tl = arc(c, ids_.tl);
        if (!tl) return false;
        c = *tl;
      } else {
        auto s = arc(l.root, ids_.str);
        if (!s || !h.unify(c, *s)) return false;
        auto rest = arc(l.root, ids_.str_rest);
        if (!rest) return false;
        c = *rest;
      }
    }
    auto end = arc(head, ids_.str_rest);
    return end && h.unify(c, *end);
  }

  bool emit(Unfolding& u, const std::string& name, const RuleTemplate& src) {
    Heap& h = u.heap;
    std::vector<CellRef> body;
    CellRef prim = kNullRef;
    auto functor = std::find_if(u.leaves.begin(), u.leaves.end(), [](const Leaf& l) { return l.kind == LeafKind::Functor; });
    if (functor == u.leaves.end()) {
      // Semantics passes through unchanged: keep phrase order.
      for (const auto& l : u.leaves) body.push_back(l.root);
    } else {
      auto fsem = ids_.get(h, functor->root, ids_.sem);
      if (!fsem) return false;
      std::vector<bool> used(u.leaves.size(), false);
      CellRef n = h.deref(*fsem);
      while (ids_.lambda(h, n)) {
        CellRef v = h.deref(*ids_.get(h, n, ids_.var));
        for (std::size_t i = 0; i < u.leaves.size(); ++i) {
          if (used[i] || u.leaves[i].kind != LeafKind::Arg) continue;
          auto s = ids_.get(h, u.leaves[i].root, ids_.sem);
          auto rst = s ? ids_.get(h, *s, ids_.rst) : std::nullopt;
          if (rst && h.deref(*rst) == v) {
            used[i] = true;
            body.push_back(u.leaves[i].root);
            break;
          }
        }
        n = h.deref(*ids_.get(h, n, ids_.rst));
      }
      for (std::size_t i = 0; i < u.leaves.size(); ++i) {
        if (u.leaves[i].kind == LeafKind::Arg && !used[i]) {
          out_.warnings.push_back({name + ": constituent " + std::to_string(i + 1) +
                                       " is not an argument of the semantic head; derivation skipped",
                                   src.pos});
          return false;
        }
      }
      prim = n;
      body.push_back(*fsem);
    }
    if (!thread_strings(h, u.head, u.leaves, prim)) {
      out_.warnings.push_back({name + ": string threading failed; derivation skipped", src.pos});
      return false;
    }
    std::vector<CellRef> roots{u.head};
    roots.insert(roots.end(), body.begin(), body.end());
    roots = h.freeze(roots);
    RuleTemplate t{name, std::move(h), std::move(roots), src.initial_only, src.pos};
    for (const auto& o : out_.rules)
      if (o.roots.size() == t.roots.size() && equivalent(o.heap, o.roots, t.heap, t.roots)) return true;
    out_.rules.push_back(std::move(t));
    return true;
  }

  void invert_entry(std::size_t i) {
    const auto& [word, root] = lexicon_.entries[i];
    Heap h(sig_);
    CellRef l = h.copy_in(lexicon_.heap, root);
    auto sem = ids_.get(h, l, ids_.sem);
    if (!sem) failure("entry '" + word + "'", "no " + cfg_.sem + " value");
    CellRef prim = ids_.body_of(h, *sem);
    if (!ids_.formula(h, prim)) failure("entry '" + word + "'", "semantics has no predicate-argument structure");
    CellRef pred = *ids_.get(h, prim, ids_.prd);

    KbRecord rec;
    rec.word = word;
    rec.primitive = sig_.type_name(h.type_of(pred));
    for (FeatId a : ids_.args)
      if (ids_.has(h.type_of(prim), a)) ++rec.arity;
    rec.pattern = out_.kb.heap.freeze(out_.kb.heap.copy_in(h, prim));

    // Key the inverted entry by the predicate's class: a featureless
    // predicate type is generalized to its single supertype unless that
    // is already the most general value the feature allows.
    TypeId pt = h.type_of(pred);
    auto supers = sig_.immediate_supertypes(pt);
    TypeId limit = *sig_.restriction(h.type_of(prim), ids_.prd);
    if (sig_.features_of(pt).empty() && supers.size() == 1 && supers[0] != limit && sig_.subsumes(limit, supers[0]))
      h.retype(pred, supers[0]);

    auto s = h.arc(l, ids_.str);
    if (!s || !h.constrain(*s, ids_.ne_list)) failure("entry '" + word + "'", "cannot attach " + cfg_.str);
    auto hd = h.arc(*s, ids_.hd);
    auto tl = h.arc(*s, ids_.tl);
    auto rest = h.arc(l, ids_.str_rest);
    if (!hd || !tl || !rest || !h.unify(*hd, prim) || !h.unify(*tl, *rest))
      failure("entry '" + word + "'", "cannot attach " + cfg_.str);

    std::vector<CellRef> roots{l, *sem};
    roots = h.freeze(roots);
    RuleTemplate t{"lex/" + word, std::move(h), std::move(roots), true, {}};
    FeatId path[] = {ids_.str, ids_.hd};
    rec.lexical = out_.kb.heap.freeze(out_.kb.heap.copy_in(t.heap, *follow(t.heap, t.head(), path)));
    out_.kb.records.push_back(rec);
    for (const auto& o : lexical_)
      if (equivalent(o.heap, o.roots, t.heap, t.roots)) return;
    lexical_.push_back(std::move(t));
  }

  const std::vector<RuleTemplate>& rules_;
  const FrozenEntries& lexicon_;
  const SemConfig& cfg_;
  const Signature& sig_;
  Ids ids_;
  InvertedGrammar out_;
  std::vector<RuleTemplate> lexical_;
};

}  // namespace

std::vector<Violation> check_invertibility(const std::vector<RuleTemplate>& rules, const FrozenEntries& lexicon,
                                           const SemConfig& cfg) {
  std::vector<Violation> out;
  const Signature& sig = lexicon.heap.signature();
  std::string missing;
  auto ids = Ids::resolve(sig, cfg, &missing);
  if (!ids) {
    out.push_back({"signature", "missing " + missing});
    return out;
  }
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const RuleTemplate& r = rules[i];
    std::span<const CellRef> body(r.roots.data() + 1, r.roots.size() - 1);
    if (!ids->get(r.heap, r.head(), ids->sem)) {
      out.push_back({rule_label(r, i), "head has no " + cfg.sem + " value"});
      continue;
    }
    auto heads = semantic_heads(r.heap, r.head(), body, *ids);
    if (heads.empty())
      out.push_back({rule_label(r, i), "disconnected semantics: head " + cfg.sem +
                                           " is not reachable from any constituent through " + cfg.rst});
    else if (heads.size() > 1)
      out.push_back({rule_label(r, i), "more than one constituent qualifies as semantic head"});
  }
  for (const auto& [word, root] : lexicon.entries) {
    auto sem = ids->get(lexicon.heap, root, ids->sem);
    if (!sem) {
      out.push_back({"entry '" + word + "'", "no " + cfg.sem + " value"});
      continue;
    }
    CellRef prim = ids->body_of(lexicon.heap, *sem);
    if (!ids->formula(lexicon.heap, prim) || lexicon.heap.cell(prim).kind != CellKind::Node)
      out.push_back({"entry '" + word + "'", "no predicate-argument structure"});
  }
  return out;
}

InvertedGrammar invert(const std::vector<RuleTemplate>& rules, const FrozenEntries& lexicon, const SemConfig& cfg) {
  auto violations = check_invertibility(rules, lexicon, cfg);
  if (!violations.empty())
    throw CompileError(ErrorCode::InversionFailure,
                       "cannot invert " + violations[0].where + ": " + violations[0].reason,
                       {violations[0].where, violations[0].reason});
  return Inverter(rules, lexicon, cfg).run();
}

FrozenEntries linearize_semantics(const Heap& heap, CellRef sem, const SemConfig& cfg) {
  const Signature& sig = heap.signature();
  std::string missing;
  auto found = Ids::resolve(sig, cfg, &missing);
  if (!found) throw RuntimeError(ErrorCode::MalformedSemantics, "semantics cannot be linearized: missing " + missing);
  const Ids& ids = *found;
  auto lambda_type = sig.introducer(ids.rst);
  FrozenEntries out(sig);
  Heap& h = out.heap;

  auto node_formula = [&](CellRef r) {
    r = heap.deref(r);
    return heap.cell(r).kind == CellKind::Node && ids.has(heap.cell(r).type, ids.prd);
  };
  CellRef root = heap.deref(sem);
  if (!node_formula(root))
    throw RuntimeError(ErrorCode::MalformedSemantics, "semantics is not a predicate-argument structure at <root>",
                       {"<root>"});

  auto wrap = [&](CellRef inner, const std::vector<CellRef>& vars) {
    CellRef r = inner;
    for (auto it = vars.rbegin(); it != vars.rend(); ++it) {
      CellRef l = h.new_node(lambda_type);
      if (!h.unify(*h.arc(l, ids.var), *it) || !h.unify(*h.arc(l, ids.rst), r))
        throw RuntimeError(ErrorCode::MalformedSemantics, "cannot abstract over an argument");
      r = l;
    }
    return r;
  };

  std::unordered_set<CellRef> visited;
  std::function<void(CellRef, const std::string&)> visit = [&](CellRef n, const std::string& path) {
    n = heap.deref(n);
    if (!visited.insert(n).second) return;
    std::vector<std::pair<FeatId, CellRef>> args;
    for (FeatId a : ids.args)
      if (auto v = ids.get(heap, n, a)) args.emplace_back(a, *v);
    for (const auto& [a, v] : args)
      if (node_formula(v)) visit(v, path + (path.empty() ? "" : ":") + sig.feature_name(a));

    CellRef c = h.copy_in(heap, n);
    std::vector<CellRef> vars;
    bool abstracted = false;
    for (const auto& [a, v] : args) {
      if (!node_formula(v)) continue;
      abstracted = true;
      CellRef old = *h.arc(c, a);
      // Same type, predicate left open, individual arguments kept.
      CellRef abs = h.new_node(h.type_of(old));
      for (FeatId b : ids.args) {
        auto ov = ids.get(h, old, b);
        if (!ov || (h.cell(h.deref(*ov)).kind == CellKind::Node && ids.formula(h, *ov))) continue;
        if (!h.unify(*h.arc(abs, b), *ov))
          throw RuntimeError(ErrorCode::MalformedSemantics, "inconsistent argument below " + path);
      }
      h.redirect(old, abs);
      vars.push_back(abs);
    }
    if (!abstracted)
      for (const auto& [a, v] : args) vars.push_back(*h.arc(c, a));
    CellRef item = wrap(c, vars);
    out.entries.emplace_back(sig.type_name(heap.type_of(*ids.get(heap, n, ids.prd))), h.freeze(item));
  };
  visit(root, "");
  return out;
}

Realization realize_strings(const Heap& heap, CellRef result, const SemanticKB& kb, const SemConfig& cfg) {
  Realization out;
  const Signature& sig = heap.signature();
  std::string missing;
  auto found = Ids::resolve(sig, cfg, &missing);
  if (!found) {
    out.diagnostics.push_back("missing " + missing);
    return out;
  }
  const Ids& ids = *found;
  Heap h(sig);
  CellRef r = h.copy_in(heap, result);
  if (!ids.has(h.type_of(r), ids.str)) {
    out.diagnostics.push_back("result carries no " + cfg.str + " value");
    return out;
  }
  CellRef s = *h.arc(r, ids.str);
  CellRef rest = *h.arc(r, ids.str_rest);
  if (!h.unify(rest, h.new_lazy(ids.e_list))) {
    out.diagnostics.push_back(cfg.str + " cannot be closed");
    return out;
  }
  std::vector<CellRef> elements;
  CellRef cur = h.deref(s);
  for (std::size_t guard = 0; guard < 100000; ++guard) {
    TypeId t = h.type_of(cur);
    if (t == ids.e_list) break;
    if (!sig.subsumes(ids.ne_list, t) || h.cell(cur).kind != CellKind::Node) {
      out.diagnostics.push_back(cfg.str + " is not a closed list");
      return out;
    }
    elements.push_back(*ids.get(h, cur, ids.hd));
    cur = *ids.get(h, cur, ids.tl);
  }
  std::vector<std::vector<std::string>> choices;
  for (std::size_t i = 0; i < elements.size(); ++i) {
    std::vector<std::string> words;
    for (const auto& rec : kb.records) {
      if (!subsumes({&kb.heap, rec.lexical}, {&h, elements[i]})) continue;
      if (!subsumes({&kb.heap, rec.pattern}, {&h, elements[i]})) continue;
      if (std::find(words.begin(), words.end(), rec.word) == words.end()) words.push_back(rec.word);
    }
    if (words.empty()) {
      out.diagnostics.push_back("no word realizes element " + std::to_string(i + 1) + " of " + cfg.str + ": " +
                                print_fs(h, elements[i]));
      return out;
    }
    choices.push_back(std::move(words));
  }
  out.strings.push_back({});
  for (const auto& c : choices) {
    std::vector<std::vector<std::string>> next;
    for (const auto& prefix : out.strings)
      for (const auto& w : c) {
        next.push_back(prefix);
        next.back().push_back(w);
      }
    out.strings = std::move(next);
  }
  return out;
}

namespace {

std::string quoted_atom(const std::string& s) {
  bool plain = !s.empty() && s[0] >= 'a' && s[0] <= 'z' &&
               std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
  if (plain) return s;
  std::string out = "'";
  for (char c : s) {
    if (c == '\'' || c == '\\') out += '\\';
    out += c;
  }
  return out + "'";
}

}  // namespace

std::string dump_inverted(const InvertedGrammar& g, const SignatureDecls& decls) {
  GrammarSource src;
  src.signature = decls;
  std::string out = to_source(src);
  for (const auto& r : g.rules) {
    FsPrinter p(r.heap, r.roots);
    out += quoted_atom(r.name) + (r.initial_only ? " init_rule\n" : " rule\n") + p.text(r.head()) + "\n===>\n";
    for (std::size_t i = 1; i < r.roots.size(); ++i) {
      std::string b = p.text(r.roots[i]);
      out += b + (i + 1 < r.roots.size() ? ",\n" : ".\n\n");
    }
  }
  if (!g.kb.records.empty()) {
    out += "#kb\n";
    for (const auto& k : g.kb.records) {
      std::string w;
      for (char c : k.word) {
        if (c == '"' || c == '\\') w += '\\';
        w += c;
      }
      out += quoted_atom(k.primitive) + "/" + std::to_string(k.arity) + " -> \"" + w + "\".\n";
    }
  }
  return out;
}

}  // namespace tfsm
