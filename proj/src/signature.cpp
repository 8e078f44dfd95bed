#include "signature.hpp"

#include <algorithm>
#include <queue>

namespace tfsm {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingBot: return "MissingBot";
    case ErrorCode::SubtypeCycle: return "SubtypeCycle";
    case ErrorCode::NotBoundedComplete: return "NotBoundedComplete";
    case ErrorCode::FeatureIntroductionViolation: return "FeatureIntroductionViolation";
    case ErrorCode::AppropriatenessNonMonotone: return "AppropriatenessNonMonotone";
    case ErrorCode::UnknownType: return "UnknownType";
    case ErrorCode::UnknownFeature: return "UnknownFeature";
    case ErrorCode::DuplicateDeclaration: return "DuplicateDeclaration";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnsupportedConstruct: return "UnsupportedConstruct";
    case ErrorCode::UnknownMacro: return "UnknownMacro";
    case ErrorCode::ArityMismatch: return "ArityMismatch";
    case ErrorCode::RecursiveMacro: return "RecursiveMacro";
    case ErrorCode::InconsistentDescription: return "InconsistentDescription";
    case ErrorCode::RegisterOverflow: return "RegisterOverflow";
    case ErrorCode::InversionFailure: return "InversionFailure";
    case ErrorCode::NotInvertible: return "NotInvertible";
    case ErrorCode::BadArtifact: return "BadArtifact";
    case ErrorCode::UnknownWord: return "UnknownWord";
    case ErrorCode::MalformedSemantics: return "MalformedSemantics";
    case ErrorCode::ResourceExhausted: return "ResourceExhausted";
    case ErrorCode::MachineFault: return "MachineFault";
    case ErrorCode::Usage: return "Usage";
  }
  return "Unknown";
}

TypeDecl* SignatureDecls::find(std::string_view name) {
  for (auto& d : types)
    if (d.name == name) return &d;
  return nullptr;
}

const TypeDecl* SignatureDecls::find(std::string_view name) const {
  for (const auto& d : types)
    if (d.name == name) return &d;
  return nullptr;
}

TypeDecl& SignatureDecls::ensure(std::string_view name) {
  if (auto* d = find(name)) return *d;
  types.push_back(TypeDecl{std::string(name), {}, {}, {}});
  return types.back();
}

std::optional<TypeId> Signature::find_type(std::string_view name) const {
  auto it = type_index_.find(std::string(name));
  if (it == type_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<FeatId> Signature::find_feature(std::string_view name) const {
  auto it = feat_index_.find(std::string(name));
  if (it == feat_index_.end()) return std::nullopt;
  return it->second;
}

namespace {

struct Bits {
  std::size_t words;
  std::vector<std::uint64_t>& data;
  std::uint64_t* row(std::size_t r) { return data.data() + r * words; }
  bool test(std::size_t r, std::size_t c) const { return (data[r * words + c / 64] >> (c % 64)) & 1u; }
  void set(std::size_t r, std::size_t c) { data[r * words + c / 64] |= std::uint64_t{1} << (c % 64); }
};

}  // namespace

Signature Signature::compile(const SignatureDecls& decls) {
  Signature sig;
  sig.decls_ = decls;

  const TypeDecl* bot = decls.find("bot");
  if (bot == nullptr)
    throw CompileError(ErrorCode::MissingBot, "the signature must declare the most general type 'bot'");

  // Type ids: bot first, then order of first mention.
  auto add_type = [&](const std::string& name) {
    if (sig.type_index_.count(name)) return;
    sig.type_index_.emplace(name, TypeId{static_cast<std::uint32_t>(sig.type_names_.size())});
    sig.type_names_.push_back(name);
  };
  add_type("bot");
  {
    std::unordered_map<std::string, SourcePos> seen;
    for (const auto& d : decls.types) {
      if (seen.count(d.name))
        throw CompileError(ErrorCode::DuplicateDeclaration, "type '" + d.name + "' is declared twice", {d.name}, d.pos);
      seen.emplace(d.name, d.pos);
    }
  }
  for (const auto& d : decls.types) {
    add_type(d.name);
    for (const auto& s : d.subtypes) add_type(s);
  }
  for (const auto& d : decls.types)
    for (const auto& [f, r] : d.intro)
      if (!sig.type_index_.count(r))
        throw CompileError(ErrorCode::UnknownType,
                           "unknown type '" + r + "' in appropriateness of '" + d.name + ":" + f + "'", {r}, d.pos);

  const std::size_t n = sig.type_names_.size();
  sig.subtypes_.assign(n, {});
  sig.supertypes_.assign(n, {});
  for (const auto& d : decls.types) {
    TypeId parent = sig.type_index_.at(d.name);
    for (const auto& s : d.subtypes) {
      TypeId child = sig.type_index_.at(s);
      if (child == kBot)
        throw CompileError(ErrorCode::SubtypeCycle, "'bot' cannot be a subtype of '" + d.name + "'", {"bot", d.name}, d.pos);
      auto& subs = sig.subtypes_[index(parent)];
      if (std::find(subs.begin(), subs.end(), child) != subs.end()) continue;
      subs.push_back(child);
      sig.supertypes_[index(child)].push_back(parent);
    }
  }
  // Types that nobody lists as a subtype hang directly below bot.
  for (std::uint32_t t = 1; t < n; ++t) {
    if (sig.supertypes_[t].empty()) {
      sig.supertypes_[t].push_back(kBot);
      sig.subtypes_[0].push_back(TypeId{t});
    }
  }

  // Cycle detection over the immediate-subtype graph.
  {
    std::vector<int> color(n, 0);
    std::vector<TypeId> stack;
    std::vector<std::string> cycle;
    auto dfs = [&](auto&& self, TypeId t) -> bool {
      color[index(t)] = 1;
      stack.push_back(t);
      for (TypeId c : sig.subtypes_[index(t)]) {
        if (color[index(c)] == 1) {
          auto it = std::find(stack.begin(), stack.end(), c);
          for (; it != stack.end(); ++it) cycle.push_back(sig.type_names_[index(*it)]);
          cycle.push_back(sig.type_names_[index(c)]);
          return true;
        }
        if (color[index(c)] == 0 && self(self, c)) return true;
      }
      stack.pop_back();
      color[index(t)] = 2;
      return false;
    };
    for (std::uint32_t t = 0; t < n; ++t) {
      if (color[t] == 0 && dfs(dfs, TypeId{t})) {
        std::string path;
        for (const auto& c : cycle) path += (path.empty() ? "" : " < ") + c;
        throw CompileError(ErrorCode::SubtypeCycle, "subtype cycle: " + path, cycle);
      }
    }
    // Types unreachable from bot can only sit on a cycle, which is caught above.
  }

  // Topological order (parents first); ties broken by id for determinism.
  std::vector<TypeId> topo;
  {
    std::vector<std::size_t> indeg(n);
    for (std::uint32_t t = 0; t < n; ++t) indeg[t] = sig.supertypes_[t].size();
    std::priority_queue<std::uint32_t, std::vector<std::uint32_t>, std::greater<>> ready;
    for (std::uint32_t t = 0; t < n; ++t)
      if (indeg[t] == 0) ready.push(t);
    while (!ready.empty()) {
      std::uint32_t t = ready.top();
      ready.pop();
      topo.push_back(TypeId{t});
      for (TypeId c : sig.subtypes_[t])
        if (--indeg[index(c)] == 0) ready.push(index(c));
    }
  }
  std::vector<std::size_t> topo_pos(n);
  for (std::size_t i = 0; i < topo.size(); ++i) topo_pos[index(topo[i])] = i;

  // Reflexive-transitive closure, children before parents.
  sig.words_ = (n + 63) / 64;
  sig.up_.assign(n * sig.words_, 0);
  Bits up{sig.words_, sig.up_};
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    std::uint32_t t = index(*it);
    up.set(t, t);
    for (TypeId c : sig.subtypes_[t]) {
      std::uint64_t* dst = up.row(t);
      const std::uint64_t* src = up.row(index(c));
      for (std::size_t w = 0; w < sig.words_; ++w) dst[w] |= src[w];
    }
  }

  // Dense join table; bounded completeness is checked pair by pair.
  sig.lub_.assign(n * n, kNoType);
  std::vector<std::uint64_t> common(sig.words_);
  for (std::uint32_t a = 0; a < n; ++a) {
    sig.lub_[a * n + a] = a;
    for (std::uint32_t b = a + 1; b < n; ++b) {
      bool any = false;
      for (std::size_t w = 0; w < sig.words_; ++w) {
        common[w] = up.row(a)[w] & up.row(b)[w];
        any |= common[w] != 0;
      }
      if (!any) continue;
      std::uint32_t least = kNoType;
      for (TypeId cand : topo) {
        std::uint32_t u = index(cand);
        if (!((common[u / 64] >> (u % 64)) & 1u)) continue;
        bool covers = true;
        for (std::size_t w = 0; w < sig.words_ && covers; ++w) covers = (common[w] & ~up.row(u)[w]) == 0;
        if (covers) least = u;
        break;
      }
      if (least == kNoType) {
        std::vector<std::string> details{sig.type_names_[a], sig.type_names_[b]};
        std::string bounds;
        for (TypeId cand : topo) {
          std::uint32_t u = index(cand);
          if (!((common[u / 64] >> (u % 64)) & 1u)) continue;
          bool minimal = true;
          for (std::uint32_t v = 0; v < n && minimal; ++v)
            if (v != u && ((common[v / 64] >> (v % 64)) & 1u) && up.test(v, u)) minimal = false;
          if (minimal) {
            details.push_back(sig.type_names_[u]);
            bounds += (bounds.empty() ? "" : ", ") + sig.type_names_[u];
          }
        }
        throw CompileError(ErrorCode::NotBoundedComplete,
                           "types '" + sig.type_names_[a] + "' and '" + sig.type_names_[b] +
                               "' have no least upper bound; minimal upper bounds: {" + bounds + "}",
                           details);
      }
      sig.lub_[a * n + b] = least;
      sig.lub_[b * n + a] = least;
    }
  }

  // Features: ids follow the topological order of their declaring clause.
  struct Declared {
    TypeId type;
    TypeId restriction;
  };
  std::vector<std::vector<Declared>> declared;
  {
    std::vector<const TypeDecl*> by_type(n, nullptr);
    for (const auto& d : decls.types) by_type[index(sig.type_index_.at(d.name))] = &d;
    for (TypeId t : topo) {
      const TypeDecl* d = by_type[index(t)];
      if (d == nullptr) continue;
      for (const auto& [fname, rname] : d->intro) {
        auto it = sig.feat_index_.find(fname);
        FeatId f;
        if (it == sig.feat_index_.end()) {
          f = FeatId{static_cast<std::uint32_t>(sig.feat_names_.size())};
          sig.feat_index_.emplace(fname, f);
          sig.feat_names_.push_back(fname);
          declared.emplace_back();
        } else {
          f = it->second;
          for (const auto& prev : declared[index(f)])
            if (prev.type == t)
              throw CompileError(ErrorCode::DuplicateDeclaration,
                                 "feature '" + fname + "' declared twice on '" + d->name + "'", {fname}, d->pos);
        }
        declared[index(f)].push_back({t, sig.type_index_.at(rname)});
      }
    }
  }
  const std::size_t nf = sig.feat_names_.size();
  sig.introducer_.assign(nf, kBot);
  for (std::uint32_t f = 0; f < nf; ++f) {
    std::vector<TypeId> minimal;
    for (const auto& d : declared[f]) {
      bool is_min = true;
      for (const auto& o : declared[f])
        if (o.type != d.type && sig.subsumes(o.type, d.type)) is_min = false;
      if (is_min) minimal.push_back(d.type);
    }
    if (minimal.size() != 1) {
      std::vector<std::string> details{sig.feat_names_[f]};
      std::string at;
      for (TypeId t : minimal) {
        details.push_back(sig.type_names_[index(t)]);
        at += (at.empty() ? "" : ", ") + sig.type_names_[index(t)];
      }
      throw CompileError(ErrorCode::FeatureIntroductionViolation,
                         "feature '" + sig.feat_names_[f] + "' has no unique introducing type (introduced at " + at + ")",
                         details);
    }
    sig.introducer_[f] = minimal.front();
    // Value restrictions may only get tighter further down.
    for (const auto& general : declared[f])
      for (const auto& specific : declared[f])
        if (general.type != specific.type && sig.subsumes(general.type, specific.type) &&
            !sig.subsumes(general.restriction, specific.restriction))
          throw CompileError(ErrorCode::AppropriatenessNonMonotone,
                             "restriction of '" + sig.feat_names_[f] + "' at '" + sig.type_names_[index(specific.type)] +
                                 "' is not subsumed by the one at '" + sig.type_names_[index(general.type)] + "'",
                             {sig.type_names_[index(specific.type)], sig.feat_names_[f]});
  }

  sig.approp_begin_.assign(n + 1, 0);
  sig.feat_pos_.assign(n * nf, -1);
  for (std::uint32_t t = 0; t < n; ++t) {
    sig.approp_begin_[t] = sig.approp_.size();
    for (std::uint32_t f = 0; f < nf; ++f) {
      if (!sig.subsumes(sig.introducer_[f], TypeId{t})) continue;
      TypeId r = kBot;
      for (const auto& d : declared[f]) {
        if (!sig.subsumes(d.type, TypeId{t})) continue;
        auto j = sig.lub(r, d.restriction);
        if (!j)
          throw CompileError(ErrorCode::AppropriatenessNonMonotone,
                             "inherited restrictions of '" + sig.feat_names_[f] + "' at '" + sig.type_names_[t] +
                                 "' are inconsistent",
                             {sig.type_names_[t], sig.feat_names_[f]});
        r = *j;
      }
      sig.feat_pos_[t * nf + f] = static_cast<int>(sig.approp_.size() - sig.approp_begin_[t]);
      sig.approp_.push_back({FeatId{f}, r});
    }
  }
  sig.approp_begin_[n] = sig.approp_.size();

  // Appropriateness loops: t reaches itself through value restrictions.
  sig.loop_.assign(n, false);
  {
    std::vector<std::uint64_t> reach_data(n * sig.words_, 0);
    Bits reach{sig.words_, reach_data};
    for (std::uint32_t t = 0; t < n; ++t)
      for (const auto& a : sig.features_of(TypeId{t})) reach.set(t, index(a.restriction));
    // Warshall closure.
    for (std::uint32_t k = 0; k < n; ++k)
      for (std::uint32_t i = 0; i < n; ++i)
        if (reach.test(i, k))
          for (std::size_t w = 0; w < sig.words_; ++w) reach.row(i)[w] |= reach.row(k)[w];
    for (std::uint32_t t = 0; t < n; ++t) sig.loop_[t] = reach.test(t, t);
  }
  return sig;
}

}  // namespace tfsm
