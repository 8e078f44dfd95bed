#include <doctest.h>

#include "chart.hpp"
#include "cfg_oracle.hpp"
#include "expected_structures.hpp"
#include "grammar.hpp"

using namespace tfsm;

namespace {

using oracle::Cfg;
using oracle::Item;
using oracle::all_strings;
using oracle::cky;
using oracle::random_cfg;

// Number of derivations per item, unary rules taken in category order.
std::map<Item, std::uint64_t> derivations(const Cfg& g, const std::vector<std::string>& words) {
  int n = static_cast<int>(words.size());
  std::map<Item, std::uint64_t> count;
  for (int i = 0; i < n; ++i)
    for (int c : g.lexicon.at(words[static_cast<std::size_t>(i)])) count[{i, i + 1, c}] += 1;
  for (int len = 1; len <= n; ++len) {
    for (int i = 0; i + len <= n; ++i) {
      int j = i + len;
      for (const auto& [lhs, rhs] : g.rules) {
        if (rhs.size() < 2) continue;
        std::function<std::uint64_t(std::size_t, int)> ways = [&](std::size_t k, int at) -> std::uint64_t {
          if (k == rhs.size()) return at == j ? 1 : 0;
          std::uint64_t total = 0;
          for (int t = at + 1; t <= j; ++t) {
            auto it = count.find({at, t, rhs[k]});
            if (it != count.end() && it->second) total += it->second * ways(k + 1, t);
          }
          return total;
        };
        if (std::uint64_t w = ways(0, i)) count[{i, j, lhs}] += w;
      }
      for (int c = 0; c < g.cats; ++c) {
        auto it = count.find({i, j, c});
        if (it == count.end()) continue;
        for (const auto& [lhs, rhs] : g.rules)
          if (rhs.size() == 1 && rhs[0] == c) count[{i, j, lhs}] += it->second;
      }
    }
  }
  return count;
}

std::map<Item, std::uint64_t> chart_items(const Chart& ch) {
  const Signature& sig = ch.program().signature();
  FeatId cat = *sig.find_feature("cat");
  std::map<Item, std::uint64_t> out;
  for (const Edge& e : ch.edges()) {
    if (!e.complete) continue;
    FeatId path[] = {cat};
    auto v = follow(ch.heap(), e.fs, path);
    REQUIRE(v);
    int c = std::stoi(sig.type_name(ch.heap().type_of(*v)).substr(1));
    out[{static_cast<int>(e.from), static_cast<int>(e.to), c}] += 1;
  }
  return out;
}

std::vector<std::string> anbm(int n, int m) {
  std::vector<std::string> w(static_cast<std::size_t>(n), "a");
  w.insert(w.end(), static_cast<std::size_t>(m), "b");
  return w;
}

}  // namespace

TEST_CASE("recognition agrees with a CKY closure on random grammars") {
  std::mt19937 rng(2718);
  auto strings = all_strings(8);
  std::string spans_per_grammar;
  for (int gi = 0; gi < 20; ++gi) {
    Cfg cfg = random_cfg(rng);
    std::string src = cfg.source();
    CAPTURE(src);
    auto g = CompiledGrammar::compile(src);
    int accepted = 0;
    for (const auto& w : strings) {
      RunLimits lim;
      lim.dedup = true;
      auto ch = init_parse(w, g->parse_program(), lim);
      REQUIRE(ch->run() == ChartStatus::Done);
      auto want = cky(cfg, w);
      auto got = chart_items(*ch);
      std::set<Item> got_set;
      for (const auto& [it, k] : got) {
        CHECK(k == 1);
        got_set.insert(it);
      }
      CHECK(got_set == want);
      int n = static_cast<int>(w.size());
      bool spans = std::any_of(want.begin(), want.end(), [&](const Item& it) {
        return std::get<0>(it) == 0 && std::get<1>(it) == n;
      });
      CHECK(spans == !ch->spanning().empty());
      accepted += spans;
    }
    spans_per_grammar += " " + std::to_string(accepted);
  }
  MESSAGE("spanning strings per grammar:" << spans_per_grammar);
}

TEST_CASE("without deduplication every derivation gets its own edge") {
  std::mt19937 rng(99);
  auto strings = all_strings(5);
  for (int gi = 0; gi < 10; ++gi) {
    Cfg cfg = random_cfg(rng);
    auto g = CompiledGrammar::compile(cfg.source());
    for (const auto& w : strings) {
      auto want = derivations(cfg, w);
      std::uint64_t total = 0;
      for (const auto& [it, k] : want) total += k;
      if (total > 5000) continue;
      std::erase_if(want, [](const auto& kv) { return kv.second == 0; });
      auto fifo = init_parse(w, g->parse_program());
      REQUIRE(fifo->run() == ChartStatus::Done);
      CHECK(chart_items(*fifo) == want);

      RunLimits lifo_lim;
      lifo_lim.lifo = true;
      auto lifo = init_parse(w, g->parse_program(), lifo_lim);
      REQUIRE(lifo->run() == ChartStatus::Done);
      CHECK(chart_items(*lifo) == want);
      CHECK(lifo->spanning().size() == fifo->spanning().size());
      CHECK(lifo->counters().attempts == fifo->counters().attempts);
    }
  }
}

TEST_CASE("a^n b^n") {
  auto g = CompiledGrammar::compile(oracle::read_file(oracle::grammar_path("anbn.ale")));
  for (int n = 1; n <= 8; ++n) {
    auto ch = init_parse(anbm(n, n), g->parse_program());
    REQUIRE(ch->run() == ChartStatus::Done);
    CHECK(ch->spanning().size() == 1);
  }
  for (auto [n, m] : std::vector<std::pair<int, int>>{{1, 2}, {2, 1}, {3, 5}, {4, 3}, {0, 2}, {2, 0}}) {
    auto ch = init_parse(anbm(n, m), g->parse_program());
    REQUIRE(ch->run() == ChartStatus::Done);
    CHECK(ch->spanning().empty());
  }
  auto ch = init_parse({"a", "b", "a", "b"}, g->parse_program());
  ch->run();
  CHECK(ch->spanning().empty());
}

TEST_CASE("the example grammar parses its sentence") {
  auto g = CompiledGrammar::compile(oracle::read_file(oracle::grammar_path("every_boy.ale")));
  oracle::Lattice L = oracle::Lattice::from(g->signature_decls());
  auto ch = init_parse(split_words("every boy sleeps"), g->parse_program());
  REQUIRE(ch->run() == ChartStatus::Done);
  auto span = ch->spanning();
  REQUIRE(span.size() == 1);

  FeatId sem = *g->signature().find_feature("sem");
  FeatId path[] = {sem};
  oracle::Graph want;
  int wr = oracle::every_boy_sleeps_sem(L, want);
  oracle::Graph got;
  int gr = oracle::from_heap(L, ch->heap(), *follow(ch->heap(), ch->edge(span[0]).fs, path), got);
  CHECK(oracle::same_structure(L, want, wr, got, gr));

  int nps = 0;
  for (const Edge& e : ch->edges()) {
    if (!e.complete || e.from != 0 || e.to != 2) continue;
    ++nps;
    oracle::Graph np, seen;
    int nr = oracle::every_boy_np(L, np);
    CHECK(oracle::same_structure(L, np, nr, seen, oracle::from_heap(L, ch->heap(), e.fs, seen)));
    CHECK(e.children.size() == 2);
  }
  CHECK(nps == 1);

  auto bad = init_parse(split_words("boy every sleeps"), g->parse_program());
  bad->run();
  CHECK(bad->spanning().empty());

  try {
    init_parse(split_words("every girl sleeps"), g->parse_program());
    FAIL("accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownWord);
  }
}

TEST_CASE("limits stop the run") {
  auto g = CompiledGrammar::compile(oracle::read_file(oracle::grammar_path("anbn.ale")));
  RunLimits few_edges;
  few_edges.max_edges = 5;
  auto a = init_parse(anbm(4, 4), g->parse_program(), few_edges);
  CHECK(a->run() == ChartStatus::Exhausted);
  CHECK(a->exhausted_limit() == "edges");
  CHECK(a->edges().size() <= 5);

  RunLimits few_steps;
  few_steps.max_steps = 20;
  auto b = init_parse(anbm(4, 4), g->parse_program(), few_steps);
  CHECK(b->run() == ChartStatus::Exhausted);
  CHECK(b->exhausted_limit() == "steps");
  CHECK(b->counters().steps <= 20);
  CHECK(b->current() == nullptr);
}

TEST_CASE("stepping exposes the machine and counts the shared loop") {
  auto g = CompiledGrammar::compile(oracle::read_file(oracle::grammar_path("every_boy.ale")));
  auto ch = init_parse(split_words("every boy sleeps"), g->parse_program());
  std::vector<std::string> events;
  ch->trace = [&](const nlohmann::ordered_json& ev) { events.push_back(ev["ev"].get<std::string>()); };
  ch->trace_steps = true;
  std::uint64_t before = Chart::loop_marker();
  bool saw_machine = false;
  std::uint64_t calls = 0;
  while (ch->step() == ChartStatus::Running) {
    ++calls;
    if (ch->current()) {
      saw_machine = true;
      CHECK(ch->current_edge().has_value());
    }
  }
  CHECK(saw_machine);
  CHECK(Chart::loop_marker() - before == calls + 1);
  CHECK(std::count(events.begin(), events.end(), "step") == static_cast<long>(ch->counters().steps));
  // Diagonal edges exist before the trace hook is attached.
  long built = std::count_if(ch->edges().begin(), ch->edges().end(), [](const Edge& e) { return !e.initial; });
  CHECK(std::count(events.begin(), events.end(), "edge") == built);
  CHECK(ch->counters().opcodes != 0);
}
