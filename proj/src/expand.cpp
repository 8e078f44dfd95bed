#include "expand.hpp"

#include <algorithm>
#include <set>

namespace tfsm {

void inject_list_types(SignatureDecls& decls) {
  if (decls.find("list") || decls.find("e_list") || decls.find("ne_list")) return;
  TypeDecl& list = decls.ensure("list");
  list.subtypes = {"e_list", "ne_list"};
  TypeDecl& ne = decls.ensure("ne_list");
  ne.intro = {{"hd", "bot"}, {"tl", "list"}};
  decls.ensure("e_list");
}

namespace {

std::string join_path(const std::vector<std::string>& path) {
  std::string s;
  for (const auto& p : path) s += (s.empty() ? "" : ":") + p;
  return s.empty() ? "<root>" : s;
}

}  // namespace

void DescriptionExpander::clash(const Desc& d, const std::vector<std::string>& path, const UnifyFailure& f) const {
  const Signature& sig = heap_.signature();
  std::vector<std::string> full = path;
  for (FeatId x : f.path) full.push_back(sig.feature_name(x));
  std::string p = join_path(full);
  std::string a = sig.type_name(f.left);
  std::string b = sig.type_name(f.right);
  throw CompileError(ErrorCode::InconsistentDescription,
                     std::to_string(d.pos.line) + ":" + std::to_string(d.pos.column) + ": inconsistent description at " +
                         p + ": " + a + " and " + b + " have no common subtype",
                     {p, a, b}, d.pos);
}

CellRef DescriptionExpander::add(const Desc& d) {
  CellRef r = heap_.new_lazy(kBot);
  apply(d, r);
  return r;
}

void DescriptionExpander::apply(const Desc& d, CellRef at) {
  std::vector<std::string> path;
  apply(d, at, path);
}

void DescriptionExpander::apply(const Desc& d, CellRef at, std::vector<std::string>& path) {
  const Signature& sig = heap_.signature();
  UnifyFailure f;
  auto type_of = [&](const std::string& name, SourcePos pos) {
    auto t = sig.find_type(name);
    if (!t)
      throw CompileError(ErrorCode::UnknownType,
                         std::to_string(pos.line) + ":" + std::to_string(pos.column) + ": unknown type '" + name + "'",
                         {name}, pos);
    return *t;
  };
  auto feat_of = [&](const std::string& name, SourcePos pos) {
    auto x = sig.find_feature(name);
    if (!x)
      throw CompileError(ErrorCode::UnknownFeature,
                         std::to_string(pos.line) + ":" + std::to_string(pos.column) + ": unknown feature '" + name + "'",
                         {name}, pos);
    return *x;
  };
  auto arc = [&](CellRef node, FeatId x, const Desc& where) {
    auto slot = heap_.arc(node, x);
    if (!slot) clash(where, path, UnifyFailure{{}, heap_.type_of(node), sig.introducer(x)});
    return *slot;
  };

  switch (d.kind) {
    case Desc::Kind::Type:
      if (!heap_.constrain(at, type_of(d.name, d.pos), &f)) clash(d, path, f);
      break;
    case Desc::Kind::Var: {
      if (d.name == "_") break;
      auto it = vars_.find(d.name);
      if (it == vars_.end())
        vars_.emplace(d.name, at);
      else if (!heap_.unify(at, it->second, &f))
        clash(d, path, f);
      break;
    }
    case Desc::Kind::Feat: {
      FeatId x = feat_of(d.name, d.pos);
      CellRef slot = arc(at, x, d);
      path.push_back(d.name);
      apply(d.args.front(), slot, path);
      path.pop_back();
      break;
    }
    case Desc::Kind::Conj:
      for (const auto& part : d.args) apply(part, at, path);
      break;
    case Desc::Kind::List: {
      TypeId ne = type_of("ne_list", d.pos);
      TypeId e = type_of("e_list", d.pos);
      FeatId hd = feat_of("hd", d.pos);
      FeatId tl = feat_of("tl", d.pos);
      std::size_t n = d.args.size() - (d.has_tail ? 1 : 0);
      CellRef cur = at;
      std::size_t depth = path.size();
      for (std::size_t i = 0; i < n; ++i) {
        if (!heap_.constrain(cur, ne, &f)) clash(d, path, f);
        CellRef head = arc(cur, hd, d);
        path.push_back("hd");
        apply(d.args[i], head, path);
        path.back() = "tl";
        cur = arc(cur, tl, d);
      }
      if (d.has_tail) {
        apply(d.args.back(), cur, path);
      } else if (!heap_.constrain(cur, e, &f)) {
        clash(d, path, f);
      }
      path.resize(depth);
      break;
    }
    case Desc::Kind::Macro:
      throw CompileError(ErrorCode::UnknownMacro, "unexpanded macro '@" + d.name + "'", {d.name}, d.pos);
  }
}

RuleTemplate expand_rule(const RuleDecl& r, const Signature& sig) {
  Heap h(sig);
  DescriptionExpander ex(h);
  std::vector<CellRef> roots;
  roots.push_back(ex.add(r.head));
  for (const auto& b : r.body) roots.push_back(ex.add(b));
  roots = h.freeze(roots);
  return RuleTemplate{r.name, std::move(h), std::move(roots), r.initial_only, r.pos};
}

FrozenEntries expand_lexicon(const std::vector<LexEntry>& lexicon, const Signature& sig) {
  FrozenEntries out(sig);
  for (const auto& l : lexicon) {
    DescriptionExpander ex(out.heap);
    CellRef r = ex.add(l.desc);
    out.entries.emplace_back(l.word, out.heap.freeze(r));
  }
  return out;
}

FrozenEntries expand_empties(const std::vector<EmptyDecl>& empties, const Signature& sig) {
  FrozenEntries out(sig);
  for (const auto& e : empties) {
    DescriptionExpander ex(out.heap);
    CellRef r = ex.add(e.desc);
    out.entries.emplace_back(std::string(), out.heap.freeze(r));
  }
  return out;
}

namespace {

// Derived rule plus where it came from, for deduplication.
struct Derived {
  RuleTemplate rule;
  std::size_t origin;
  std::vector<std::size_t> positions;                      // original position of each body element
  std::set<std::pair<std::size_t, std::size_t>> removed;  // (original position, empty index)
};

std::optional<RuleTemplate> drop_element(const RuleTemplate& r, std::size_t k, const FrozenEntries& empties,
                                         std::size_t e) {
  Heap h(r.heap.signature());
  std::vector<CellRef> roots = h.copy_in(r.heap, r.roots);
  CellRef eps = h.copy_in(empties.heap, empties.entries[e].second);
  if (!h.unify(roots[k + 1], eps)) return std::nullopt;
  roots.erase(roots.begin() + static_cast<std::ptrdiff_t>(k + 1));
  roots = h.freeze(roots);
  return RuleTemplate{r.name + "/e" + std::to_string(e), std::move(h), std::move(roots), r.initial_only, r.pos};
}

}  // namespace

EmptyExpansion expand_empty_categories(std::vector<RuleTemplate> rules, const FrozenEntries& empties,
                                       unsigned max_rounds, std::vector<Diagnostic>& warnings) {
  EmptyExpansion out;
  if (empties.entries.empty()) {
    out.rules = std::move(rules);
    return out;
  }
  std::vector<Derived> batch;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    std::vector<std::size_t> pos(rules[i].arity());
    for (std::size_t k = 0; k < pos.size(); ++k) pos[k] = k;
    batch.push_back({rules[i], i, std::move(pos), {}});
  }
  out.rules = std::move(rules);
  std::set<std::pair<std::size_t, std::set<std::pair<std::size_t, std::size_t>>>> seen;

  // Derivations of d not produced before. With probe set, only reports
  // whether one with a non-empty body exists.
  auto derive = [&](const Derived& d, std::vector<Derived>& next, bool probe) {
    for (std::size_t k = 0; k < d.rule.arity(); ++k) {
      for (std::size_t e = 0; e < empties.entries.size(); ++e) {
        auto key = d.removed;
        key.emplace(d.positions[k], e);
        if (seen.count({d.origin, key})) continue;
        auto r = drop_element(d.rule, k, empties, e);
        if (!r) continue;
        if (probe) {
          if (r->arity() > 0) return true;
          continue;
        }
        seen.insert({d.origin, key});
        if (r->arity() == 0) {
          warnings.push_back({"rule " + (d.rule.name.empty() ? std::string("(unnamed)") : d.rule.name) +
                                  ": empty category would leave an empty body; derived rule dropped",
                              d.rule.pos});
          continue;
        }
        std::vector<std::size_t> pos = d.positions;
        pos.erase(pos.begin() + static_cast<std::ptrdiff_t>(k));
        next.push_back({std::move(*r), d.origin, std::move(pos), std::move(key)});
      }
    }
    return false;
  };

  for (unsigned round = 0; round < max_rounds && !batch.empty(); ++round) {
    std::vector<Derived> next;
    for (const auto& d : batch) derive(d, next, false);
    for (const auto& n : next) out.rules.push_back(n.rule);
    batch = std::move(next);
  }
  std::vector<Derived> unused;
  for (const auto& d : batch) {
    if (derive(d, unused, true)) {
      out.budget_exceeded = true;
      warnings.push_back({"ExpansionBudgetExceeded(" + std::to_string(max_rounds) +
                              "): empty-category expansion stopped early; the compiled grammar may not be "
                              "equivalent to the source",
                          d.rule.pos});
      break;
    }
  }
  return out;
}

}  // namespace tfsm
