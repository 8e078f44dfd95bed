// Reference implementations and generators shared by the test binaries.
// Nothing here calls the engine's join table, unifier or subsumption.
#pragma once

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "heap.hpp"
#include "signature.hpp"

namespace oracle {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline std::string grammar_path(const std::string& name) { return std::string(TFSM_SOURCE_DIR) + "/grammars/" + name; }

// Type order, joins and appropriateness computed by brute force from the
// declarations.
struct Lattice {
  std::vector<std::string> names;
  std::map<std::string, int> index;
  std::vector<std::vector<bool>> sub;  // sub[a][b]: a subsumes b (b is a or below it)
  std::vector<std::map<std::string, int>> approp;
  bool acyclic = true;
  bool bounded_complete = true;
  bool approp_ok = true;

  int id(const std::string& n) {
    auto it = index.find(n);
    if (it != index.end()) return it->second;
    int i = static_cast<int>(names.size());
    names.push_back(n);
    index[n] = i;
    return i;
  }

  static Lattice from(const tfsm::SignatureDecls& decls) {
    Lattice L;
    L.id("bot");
    std::vector<std::pair<int, int>> edges;
    for (const auto& d : decls.types) {
      int p = L.id(d.name);
      for (const auto& s : d.subtypes) edges.emplace_back(p, L.id(s));
      for (const auto& [f, r] : d.intro) L.id(r);
    }
    std::size_t n = L.names.size();
    std::vector<std::vector<int>> kids(n);
    for (auto [p, c] : edges) kids[p].push_back(c);
    L.sub.assign(n, std::vector<bool>(n, false));
    for (std::size_t a = 0; a < n; ++a) {
      std::vector<int> stack{static_cast<int>(a)};
      while (!stack.empty()) {
        int x = stack.back();
        stack.pop_back();
        if (L.sub[a][x]) continue;
        L.sub[a][x] = true;
        for (int k : kids[x]) stack.push_back(k);
      }
    }
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        if (a != b && L.sub[a][b] && L.sub[b][a]) L.acyclic = false;
    // Everything hangs below bot.
    for (std::size_t a = 0; a < n; ++a) L.sub[0][a] = true;
    for (std::size_t a = 0; a < n && L.bounded_complete; ++a)
      for (std::size_t b = 0; b < n && L.bounded_complete; ++b) {
        bool any = false;
        for (std::size_t u = 0; u < n; ++u) any |= L.sub[a][u] && L.sub[b][u];
        if (any && !L.lub(static_cast<int>(a), static_cast<int>(b))) L.bounded_complete = false;
      }
    if (!L.acyclic || !L.bounded_complete) return L;
    L.approp.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
      for (const auto& d : decls.types) {
        int a = L.index.at(d.name);
        if (!L.sub[a][t]) continue;
        for (const auto& [f, rname] : d.intro) {
          int r = L.index.at(rname);
          auto it = L.approp[t].find(f);
          if (it == L.approp[t].end()) {
            L.approp[t][f] = r;
          } else {
            auto j = L.lub(it->second, r);
            if (!j) L.approp_ok = false;
            else it->second = *j;
          }
        }
      }
    }
    return L;
  }

  // Most general common subtype, by scanning all types.
  std::optional<int> lub(int a, int b) const {
    std::vector<int> ub;
    for (std::size_t u = 0; u < names.size(); ++u)
      if (sub[a][u] && sub[b][u]) ub.push_back(static_cast<int>(u));
    for (int u : ub) {
      bool least = true;
      for (int v : ub) least &= sub[u][v];
      if (least) return u;
    }
    return std::nullopt;
  }

  std::optional<int> restriction(int t, const std::string& f) const {
    auto it = approp[t].find(f);
    if (it == approp[t].end()) return std::nullopt;
    return it->second;
  }

  std::vector<int> below(int t) const {
    std::vector<int> out;
    for (std::size_t u = 0; u < names.size(); ++u)
      if (sub[t][u]) out.push_back(static_cast<int>(u));
    return out;
  }
};

// Rooted graph with union-find forwarding; an absent arc stands for the
// most general value of the feature's restriction.
struct Graph {
  struct Node {
    int type = 0;
    std::map<std::string, int> arcs;
    int fwd = -1;
  };
  std::vector<Node> nodes;

  int add(int type) {
    nodes.push_back({type, {}, -1});
    return static_cast<int>(nodes.size()) - 1;
  }
  int find(int n) const {
    while (nodes[n].fwd >= 0) n = nodes[n].fwd;
    return n;
  }
  // Offset-shifted copy of another graph; returns the offset.
  int append(const Graph& g) {
    int base = static_cast<int>(nodes.size());
    for (auto n : g.nodes) {
      for (auto& [f, v] : n.arcs) v += base;
      if (n.fwd >= 0) n.fwd += base;
      nodes.push_back(n);
    }
    return base;
  }
};

// Naive unifier: merges classes pairwise and re-imposes the
// appropriateness restrictions after each merge.
class NaiveUnifier {
 public:
  NaiveUnifier(const Lattice& L, Graph& g) : L_(L), g_(g) {}

  bool unify(int a, int b) {
    std::vector<std::pair<int, int>> todo{{a, b}};
    while (!todo.empty()) {
      auto [x, y] = todo.back();
      todo.pop_back();
      x = g_.find(x);
      y = g_.find(y);
      if (x == y) continue;
      auto t = L_.lub(g_.nodes[x].type, g_.nodes[y].type);
      if (!t) return false;
      g_.nodes[y].fwd = x;
      for (auto& [f, v] : g_.nodes[y].arcs) {
        auto it = g_.nodes[x].arcs.find(f);
        if (it == g_.nodes[x].arcs.end())
          g_.nodes[x].arcs[f] = v;
        else
          todo.emplace_back(it->second, v);
      }
      g_.nodes[y].arcs.clear();
      if (!raise(x, *t, true)) return false;
    }
    return true;
  }

  bool raise(int n, int t, bool force = false) {
    n = g_.find(n);
    auto nt = L_.lub(g_.nodes[n].type, t);
    if (!nt) return false;
    if (*nt == g_.nodes[n].type && !force) return true;
    g_.nodes[n].type = *nt;
    auto arcs = g_.nodes[n].arcs;
    for (auto& [f, v] : arcs) {
      auto r = L_.restriction(*nt, f);
      if (!r || !raise(v, *r)) return false;
    }
    return true;
  }

 private:
  const Lattice& L_;
  Graph& g_;
};

// Nodes reachable from root, with in-degree counted over reachable arcs.
inline std::map<int, int> indegrees(const Graph& g, int root) {
  std::map<int, int> deg;
  std::vector<int> stack{g.find(root)};
  deg[g.find(root)] = 0;
  std::set<int> seen;
  while (!stack.empty()) {
    int x = stack.back();
    stack.pop_back();
    if (!seen.insert(x).second) continue;
    for (auto& [f, v] : g.nodes[x].arcs) {
      int y = g.find(v);
      ++deg[y];
      stack.push_back(y);
    }
  }
  return deg;
}

// Isomorphism of two rooted graphs where an absent arc matches an
// unshared value carrying no information beyond its restriction.
inline bool same_structure(const Lattice& L, const Graph& a, int ra, const Graph& b, int rb) {
  auto da = indegrees(a, ra);
  auto db = indegrees(b, rb);
  std::function<bool(const Graph&, const std::map<int, int>&, int, int)> trivial =
      [&](const Graph& g, const std::map<int, int>& deg, int n, int restr) {
        n = g.find(n);
        if (g.nodes[n].type != restr || deg.at(n) > 1) return false;
        for (auto& [f, v] : g.nodes[n].arcs)
          if (!trivial(g, deg, v, *L.restriction(g.nodes[n].type, f))) return false;
        return true;
      };
  std::map<int, int> ab, ba;
  std::vector<std::pair<int, int>> todo{{a.find(ra), b.find(rb)}};
  while (!todo.empty()) {
    auto [x, y] = todo.back();
    todo.pop_back();
    x = a.find(x);
    y = b.find(y);
    auto ix = ab.find(x);
    auto iy = ba.find(y);
    if (ix != ab.end() || iy != ba.end()) {
      if (ix == ab.end() || iy == ba.end() || ix->second != y || iy->second != x) return false;
      continue;
    }
    ab[x] = y;
    ba[y] = x;
    if (a.nodes[x].type != b.nodes[y].type) return false;
    int t = a.nodes[x].type;
    std::set<std::string> feats;
    for (auto& [f, v] : a.nodes[x].arcs) feats.insert(f);
    for (auto& [f, v] : b.nodes[y].arcs) feats.insert(f);
    for (const auto& f : feats) {
      auto fa = a.nodes[x].arcs.find(f);
      auto fb = b.nodes[y].arcs.find(f);
      auto r = L.restriction(t, f);
      if (!r) return false;
      if (fa != a.nodes[x].arcs.end() && fb != b.nodes[y].arcs.end())
        todo.emplace_back(fa->second, fb->second);
      else if (fa != a.nodes[x].arcs.end()) {
        if (!trivial(a, da, fa->second, *r)) return false;
      } else if (!trivial(b, db, fb->second, *r)) {
        return false;
      }
    }
  }
  return true;
}

// Reads engine cells directly (no engine traversal helpers beyond deref).
// Pass the same `seen` map to keep sharing across several roots.
inline int from_heap(const Lattice& L, const tfsm::Heap& h, tfsm::CellRef root, Graph& g,
                     std::map<tfsm::CellRef, int>& seen) {
  const tfsm::Signature& sig = h.signature();
  std::function<int(tfsm::CellRef)> rec = [&](tfsm::CellRef r) {
    while (h.cell(r).kind == tfsm::CellKind::Ref) r = h.cell(r).target;
    auto it = seen.find(r);
    if (it != seen.end()) return it->second;
    const tfsm::Cell& c = h.cell(r);
    int n = g.add(L.index.at(sig.type_name(c.type)));
    seen[r] = n;
    if (c.kind == tfsm::CellKind::Node) {
      auto ap = sig.features_of(c.type);
      for (std::size_t i = 0; i < ap.size(); ++i) {
        int v = rec(r + 1 + static_cast<tfsm::CellRef>(i));
        g.nodes[n].arcs[sig.feature_name(ap[i].feat)] = v;
      }
    }
    return n;
  };
  return rec(root);
}

inline int from_heap(const Lattice& L, const tfsm::Heap& h, tfsm::CellRef root, Graph& g) {
  std::map<tfsm::CellRef, int> seen;
  return from_heap(L, h, root, g, seen);
}

inline std::vector<int> from_heap(const Lattice& L, const tfsm::Heap& h, std::span<const tfsm::CellRef> roots,
                                  Graph& g) {
  std::map<tfsm::CellRef, int> seen;
  std::vector<int> out;
  for (tfsm::CellRef r : roots) out.push_back(from_heap(L, h, r, g, seen));
  return out;
}

// Lays a graph out as raw engine cells: a node block per reachable node,
// absent arcs as placeholders of their restriction.
inline std::vector<tfsm::CellRef> to_cells(const Lattice& L, const Graph& g, const std::vector<int>& roots,
                                           const tfsm::Signature& sig, std::vector<tfsm::Cell>& cells) {
  std::map<int, tfsm::CellRef> addr;
  std::vector<int> order;
  std::function<void(int)> place = [&](int n) {
    n = g.find(n);
    if (addr.count(n)) return;
    tfsm::TypeId t = *sig.find_type(L.names[g.nodes[n].type]);
    addr[n] = static_cast<tfsm::CellRef>(cells.size());
    order.push_back(n);
    cells.push_back(tfsm::Cell::node(t));
    for (std::size_t i = 0; i < sig.features_of(t).size(); ++i) cells.push_back(tfsm::Cell::lazy(tfsm::kBot));
    for (auto& [f, v] : g.nodes[n].arcs) place(v);
  };
  for (int r : roots) place(r);
  for (int n : order) {
    tfsm::CellRef base = addr[n];
    tfsm::TypeId t = cells[base].type;
    auto ap = sig.features_of(t);
    for (std::size_t i = 0; i < ap.size(); ++i) {
      auto it = g.nodes[n].arcs.find(sig.feature_name(ap[i].feat));
      cells[base + 1 + i] = it == g.nodes[n].arcs.end() ? tfsm::Cell::lazy(ap[i].restriction)
                                                        : tfsm::Cell::ref(addr[g.find(it->second)]);
    }
  }
  std::vector<tfsm::CellRef> out;
  for (int r : roots) out.push_back(addr[g.find(r)]);
  return out;
}

// Random type hierarchy below bot: each new type gets one or two parents
// among the earlier ones. Not necessarily bounded complete.
inline tfsm::SignatureDecls random_hierarchy(std::mt19937& rng, int n, double second_parent = 0.3) {
  std::vector<std::vector<std::string>> kids(n);
  auto name = [](int i) { return i == 0 ? std::string("bot") : "t" + std::to_string(i); };
  for (int i = 1; i < n; ++i) {
    int p = std::uniform_int_distribution<int>(0, i - 1)(rng);
    kids[p].push_back(name(i));
    if (i > 1 && std::bernoulli_distribution(second_parent)(rng)) {
      int q = std::uniform_int_distribution<int>(0, i - 1)(rng);
      if (q != p) kids[q].push_back(name(i));
    }
  }
  tfsm::SignatureDecls d;
  for (int i = 0; i < n; ++i) {
    if (kids[i].empty()) continue;
    tfsm::TypeDecl t;
    t.name = name(i);
    t.subtypes = kids[i];
    d.types.push_back(t);
  }
  return d;
}

// Adds features, each introduced once and occasionally specialized on a
// subtype of its introducer.
inline void add_random_features(std::mt19937& rng, tfsm::SignatureDecls& d, const Lattice& L, int count) {
  int n = static_cast<int>(L.names.size());
  for (int k = 0; k < count; ++k) {
    std::string f = "f" + std::to_string(k);
    int intro = std::uniform_int_distribution<int>(1, n - 1)(rng);
    int restr = std::uniform_int_distribution<int>(0, n - 1)(rng);
    d.ensure(L.names[intro]).intro.emplace_back(f, L.names[restr]);
    if (std::bernoulli_distribution(0.3)(rng)) {
      auto lower = L.below(intro);
      auto rlower = L.below(restr);
      int s = lower[std::uniform_int_distribution<std::size_t>(0, lower.size() - 1)(rng)];
      int r = rlower[std::uniform_int_distribution<std::size_t>(0, rlower.size() - 1)(rng)];
      if (s != intro) d.ensure(L.names[s]).intro.emplace_back(f, L.names[r]);
    }
  }
}

// A signature that compiles and whose brute-force view is consistent.
struct RandomSignature {
  tfsm::SignatureDecls decls;
  Lattice lattice;
};

inline RandomSignature random_signature(std::mt19937& rng, int types, int features) {
  for (;;) {
    auto d = random_hierarchy(rng, types, 0.25);
    Lattice base = Lattice::from(d);
    if (!base.bounded_complete) continue;
    add_random_features(rng, d, base, features);
    Lattice L = Lattice::from(d);
    if (!L.approp_ok) continue;
    try {
      (void)tfsm::Signature::compile(d);
    } catch (const tfsm::Error&) {
      continue;
    }
    return {d, L};
  }
}

// Random well-typed structure of type at most `type`; `pool` collects
// nodes so later arcs can point back to them.
inline int random_graph(std::mt19937& rng, const Lattice& L, Graph& g, int type, int depth, std::vector<int>& pool,
                        double share = 0.2, double fill = 0.6) {
  auto choices = L.below(type);
  if (!pool.empty() && std::bernoulli_distribution(share)(rng)) {
    int cand = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
    if (L.sub[type][g.nodes[cand].type]) return cand;
  }
  int t = choices[std::uniform_int_distribution<std::size_t>(0, choices.size() - 1)(rng)];
  int n = g.add(t);
  pool.push_back(n);
  if (depth <= 0) return n;
  for (const auto& [f, r] : L.approp[t]) {
    if (!std::bernoulli_distribution(fill)(rng)) continue;
    int v = random_graph(rng, L, g, r, depth - 1, pool, share, fill);
    g.nodes[n].arcs[f] = v;
  }
  return n;
}

}  // namespace oracle
