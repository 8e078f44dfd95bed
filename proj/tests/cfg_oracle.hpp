// Random context-free skeleton grammars and a closure recognizer for them.
#pragma once

#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace oracle {

// Context-free grammar over categories 0..cats-1 and the words a, b.
struct Cfg {
  int cats = 0;
  std::vector<std::pair<int, std::vector<int>>> rules;
  std::map<std::string, std::vector<int>> lexicon;

  std::string source() const {
    std::string s = "bot sub [sign, cat].\nsign intro [cat:cat].\ncat sub [";
    for (int c = 0; c < cats; ++c) s += (c ? ", c" : "c") + std::to_string(c);
    s += "].\n";
    auto item = [](int c) { return "(sign, cat:c" + std::to_string(c) + ")"; };
    for (const auto& [w, cs] : lexicon) {
      s += w + " ---> ";
      for (std::size_t i = 0; i < cs.size(); ++i) s += (i ? " ; " : "") + item(cs[i]);
      s += ".\n";
    }
    for (const auto& [lhs, rhs] : rules) {
      s += item(lhs) + " ===> ";
      for (std::size_t i = 0; i < rhs.size(); ++i) s += (i ? ", cat> " : "cat> ") + item(rhs[i]);
      s += ".\n";
    }
    return s;
  }
};

// Unary rules only go from a lower to a higher category, so unary chains
// cannot loop.
inline Cfg random_cfg(std::mt19937& rng) {
  Cfg g;
  g.cats = std::uniform_int_distribution<int>(3, 6)(rng);
  auto cat = [&] { return std::uniform_int_distribution<int>(0, g.cats - 1)(rng); };
  for (const char* w : {"a", "b"}) {
    std::set<int> cs{cat()};
    if (std::bernoulli_distribution(0.4)(rng)) cs.insert(cat());
    g.lexicon[w] = {cs.begin(), cs.end()};
  }
  int n = std::uniform_int_distribution<int>(3, 8)(rng);
  std::set<std::pair<int, std::vector<int>>> seen;
  for (int i = 0; i < n; ++i) {
    int kind = std::uniform_int_distribution<int>(0, 9)(rng);
    std::vector<int> rhs;
    int lhs = cat();
    if (kind == 0) {
      int x = cat();
      if (x == lhs) continue;
      rhs = {std::min(x, lhs)};
      lhs = std::max(x, lhs);
    } else {
      int arity = kind <= 7 ? 2 : 3;
      for (int k = 0; k < arity; ++k) rhs.push_back(cat());
    }
    if (seen.insert({lhs, rhs}).second) g.rules.emplace_back(lhs, rhs);
  }
  return g;
}

using Item = std::tuple<int, int, int>;  // from, to, category

// Recognizer: closes the set of derivable items under the rules.
inline std::set<Item> cky(const Cfg& g, const std::vector<std::string>& words) {
  std::set<Item> items;
  for (std::size_t i = 0; i < words.size(); ++i)
    for (int c : g.lexicon.at(words[i])) items.insert({static_cast<int>(i), static_cast<int>(i) + 1, c});
  for (bool grew = true; grew;) {
    grew = false;
    for (const auto& [lhs, rhs] : g.rules) {
      std::function<void(std::size_t, int, int)> walk = [&](std::size_t k, int start, int at) {
        if (k == rhs.size()) {
          grew |= items.insert({start, at, lhs}).second;
          return;
        }
        for (const auto& [f, t, c] : std::vector<Item>(items.begin(), items.end()))
          if (f == at && c == rhs[k]) walk(k + 1, start, t);
      };
      for (int s = 0; s < static_cast<int>(words.size()); ++s) walk(0, s, s);
    }
  }
  return items;
}

inline std::vector<std::vector<std::string>> all_strings(int max_len) {
  std::vector<std::vector<std::string>> out;
  for (int len = 1; len <= max_len; ++len)
    for (int bits = 0; bits < (1 << len); ++bits) {
      std::vector<std::string> w;
      for (int i = 0; i < len; ++i) w.push_back(bits >> i & 1 ? "b" : "a");
      out.push_back(std::move(w));
    }
  return out;
}

}  // namespace oracle
