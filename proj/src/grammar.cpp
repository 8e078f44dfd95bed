#include "grammar.hpp"

#include <functional>
#include <set>
#include <unordered_map>

#include "description.hpp"
#include "expand.hpp"
#include "fs_print.hpp"

namespace tfsm {

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::unique_ptr<CompiledGrammar> CompiledGrammar::compile(std::string_view source, const CompileOptions& options) {
  std::unique_ptr<CompiledGrammar> out(new CompiledGrammar());
  out->source_hash_ = fnv1a(source);
  out->sem_ = options.sem;

  GrammarSource g = parse_grammar(source);
  expand_macros(g);
  lint_single_variables(g);
  out->warnings = g.warnings;

  SignatureDecls decls = g.signature;
  inject_list_types(decls);
  if (options.invert) add_string_features(decls, options.sem);
  out->decls_ = decls;
  out->sig_ = std::make_unique<Signature>(Signature::compile(decls));
  const Signature& sig = *out->sig_;

  std::vector<RuleTemplate> rules;
  for (const auto& r : g.rules) rules.push_back(expand_rule(r, sig));
  FrozenEntries lexicon = expand_lexicon(g.lexicon, sig);
  FrozenEntries empties = expand_empties(g.empties, sig);
  EmptyExpansion ec = expand_empty_categories(std::move(rules), empties, options.max_ec_rounds, out->warnings);

  out->parse_ = std::make_unique<Program>(sig);
  for (const auto& r : ec.rules) out->parse_->add_rule(r, options.register_cap);
  for (const auto& [word, root] : lexicon.entries) out->parse_->add_lexical(word, lexicon.heap, root);
  out->parse_->empty_categories = static_cast<std::uint32_t>(empties.entries.size());
  out->parse_->non_equivalent = ec.budget_exceeded;

  if (options.invert) {
    InvertedGrammar inv = invert(ec.rules, lexicon, options.sem);
    out->gen_ = std::make_unique<Program>(sig);
    for (const auto& r : inv.rules) out->gen_->add_rule(r, options.register_cap);
    out->inverted_text_ = dump_inverted(inv, decls);
    out->kb_ = std::make_unique<SemanticKB>(std::move(inv.kb));
    out->warnings.insert(out->warnings.end(), inv.warnings.begin(), inv.warnings.end());
  }
  return out;
}

CompileStats CompiledGrammar::stats() const {
  CompileStats s;
  s.types = sig_->type_count();
  s.features = sig_->feature_count();
  s.rules = parse_->rules.size();
  s.lexical = parse_->lexicon.size();
  s.empty_categories = parse_->empty_categories;
  s.instructions = parse_->code.size();
  if (gen_) {
    s.inverted_rules = gen_->rules.size();
    s.inverted_instructions = gen_->code.size();
  }
  if (kb_) s.kb_records = kb_->records.size();
  return s;
}

CellRef read_fs_json(Heap& heap, const nlohmann::json& j) {
  const Signature& sig = heap.signature();
  std::unordered_map<long long, CellRef> tags;
  auto bad = [](const std::string& why) -> RuntimeError {
    return RuntimeError(ErrorCode::MalformedSemantics, "bad feature structure JSON: " + why);
  };
  std::function<CellRef(const nlohmann::json&)> build = [&](const nlohmann::json& n) -> CellRef {
    if (!n.is_object()) throw bad("expected an object");
    if (n.contains("ref")) {
      auto it = tags.find(n.at("ref").get<long long>());
      if (it == tags.end()) throw bad("reference to unknown tag");
      return it->second;
    }
    if (!n.contains("type") || !n.at("type").is_string()) throw bad("missing type");
    auto t = sig.find_type(n.at("type").get<std::string>());
    if (!t) throw bad("unknown type '" + n.at("type").get<std::string>() + "'");
    CellRef r = heap.new_lazy(*t);
    if (n.contains("tag")) tags[n.at("tag").get<long long>()] = r;
    if (n.contains("feats")) {
      for (const auto& [name, value] : n.at("feats").items()) {
        auto f = sig.find_feature(name);
        if (!f) throw bad("unknown feature '" + name + "'");
        auto slot = heap.arc(r, *f);
        if (!slot) throw bad("feature '" + name + "' not appropriate");
        CellRef v = build(value);
        if (!heap.unify(*slot, v)) throw bad("inconsistent value under '" + name + "'");
      }
    }
    return r;
  };
  return build(j);
}

OwnedFs read_structure(const Signature& sig, std::string_view text) {
  OwnedFs out(sig);
  std::size_t i = text.find_first_not_of(" \t\r\n");
  CellRef r;
  if (i != std::string_view::npos && text[i] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw RuntimeError(ErrorCode::MalformedSemantics, std::string("bad feature structure JSON: ") + e.what());
    }
    r = read_fs_json(out.heap, j);
  } else {
    Desc d = parse_description(text);
    DescriptionExpander ex(out.heap);
    r = ex.add(d);
  }
  out.root = out.heap.freeze(r);
  return out;
}

std::unique_ptr<Chart> init_generate(const Heap& heap, CellRef sem, const SemConfig& cfg, const Program& program,
                                     RunLimits limits) {
  FrozenEntries items = linearize_semantics(heap, sem, cfg);
  auto chart = std::make_unique<Chart>(program, limits);
  for (std::uint32_t i = 0; i < items.entries.size(); ++i) chart->add_initial(i, items.heap, items.entries[i].second);
  return chart;
}

GenerationResult collect_generation(const Chart& chart, const Heap& heap, CellRef sem, const SemanticKB& kb,
                                    const SemConfig& cfg) {
  GenerationResult out;
  const Signature& sig = heap.signature();
  auto semf = sig.find_feature(cfg.sem);
  std::set<std::vector<std::string>> seen;
  for (std::uint32_t id : chart.spanning()) {
    const Edge& e = chart.edge(id);
    if (!semf) break;
    FeatId path[] = {*semf};
    auto s = follow(chart.heap(), e.fs, path);
    if (!s || !equivalent({&chart.heap(), *s}, {&heap, sem})) continue;
    out.edges.push_back(id);
    Realization r = realize_strings(chart.heap(), e.fs, kb, cfg);
    for (auto& d : r.diagnostics) out.diagnostics.push_back(std::move(d));
    for (auto& words : r.strings)
      if (seen.insert(words).second) out.strings.push_back(std::move(words));
  }
  return out;
}

namespace {

OwnedFs expanded_copy(const Chart& chart, CellRef root, unsigned depth) {
  OwnedFs c(chart.heap().signature());
  c.root = c.heap.copy_in(chart.heap(), root);
  c.heap.expand_all(c.root, depth);
  return c;
}

}  // namespace

std::string render_edge(const Chart& chart, std::uint32_t edge, bool json, unsigned depth) {
  if (json) return edge_json(chart, edge, depth).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
  OwnedFs c = expanded_copy(chart, chart.edge(edge).fs, depth);
  return print_fs(c.heap, c.root);
}

nlohmann::ordered_json edge_json(const Chart& chart, std::uint32_t edge, unsigned depth) {
  OwnedFs c = expanded_copy(chart, chart.edge(edge).fs, depth);
  FsPrinter p(c.heap, std::span<const CellRef>(&c.root, 1));
  return p.json(c.root);
}

OwnedFs edge_semantics(const Chart& chart, std::uint32_t edge, const SemConfig& cfg) {
  const Signature& sig = chart.heap().signature();
  OwnedFs out(sig);
  auto f = sig.find_feature(cfg.sem);
  if (!f) throw RuntimeError(ErrorCode::MalformedSemantics, "no feature '" + cfg.sem + "'");
  FeatId path[] = {*f};
  auto s = follow(chart.heap(), chart.edge(edge).fs, path);
  if (!s) throw RuntimeError(ErrorCode::MalformedSemantics, "edge has no " + cfg.sem + " value");
  out.root = out.heap.freeze(out.heap.copy_in(chart.heap(), *s));
  return out;
}

}  // namespace tfsm
