#include "tfsm/tfsm.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "grammar.hpp"
#include "session.hpp"

using namespace tfsm;

struct tfsm_grammar {
  std::shared_ptr<const CompiledGrammar> g;
};

struct tfsm_result {
  std::vector<std::string> text;
  std::vector<std::string> json;
  std::string stats;
};

struct tfsm_session {
  DebugSession s;
};

namespace {

thread_local std::string t_error;
thread_local std::string t_code;
thread_local std::string t_json;

void clear_error() {
  t_error.clear();
  t_code.clear();
  t_json = "null";
}

tfsm_status status_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::UnknownWord:
    case ErrorCode::MalformedSemantics:
    case ErrorCode::MachineFault: return TFSM_ERR_RUNTIME;
    case ErrorCode::ResourceExhausted: return TFSM_ERR_LIMIT;
    case ErrorCode::BadArtifact: return TFSM_ERR_ARTIFACT;
    case ErrorCode::Usage: return TFSM_ERR_USAGE;
    default: return TFSM_ERR_COMPILE;
  }
}

tfsm_status fail(tfsm_status s, const std::string& code, const std::string& msg, nlohmann::ordered_json j) {
  t_error = msg;
  t_code = code;
  t_json = j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
  return s;
}

// Runs f, turning exceptions into a status and the thread's last error.
template <class F>
tfsm_status guard(F&& f) {
  clear_error();
  try {
    return f();
  } catch (const Error& e) {
    return fail(status_for(e.code()), error_code_name(e.code()), e.what(), error_json(e));
  } catch (const std::bad_alloc&) {
    return fail(TFSM_ERR_LIMIT, "ResourceExhausted", "out of memory",
                {{"code", "ResourceExhausted"}, {"message", "out of memory"}});
  } catch (const std::exception& e) {
    return fail(TFSM_ERR_INTERNAL, "Internal", e.what(), {{"code", "Internal"}, {"message", e.what()}});
  }
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.data(), s.size() + 1);
  return p;
}

Error usage(const std::string& msg) { return Error(ErrorCode::Usage, msg); }

std::string read_file(const char* path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw usage(std::string("cannot read ") + what + " '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

CompileOptions compile_options(const tfsm_compile_options* o) {
  CompileOptions c;
  if (!o) return c;
  c.invert = o->invert != 0;
  if (o->max_ec_rounds) c.max_ec_rounds = o->max_ec_rounds;
  if (o->sem_config_json) {
    try {
      c.sem = SemConfig::from_json(nlohmann::json::parse(o->sem_config_json));
    } catch (const nlohmann::json::exception& e) {
      throw usage(std::string("bad semantic configuration: ") + e.what());
    }
  }
  return c;
}

RunLimits run_limits(const tfsm_run_options* o) {
  RunLimits l;
  if (!o) return l;
  if (o->max_edges) l.max_edges = o->max_edges;
  if (o->max_steps) l.max_steps = o->max_steps;
  l.dedup = o->dedup != 0;
  l.lifo = o->lifo != 0;
  return l;
}

void attach_trace(Chart& chart, const tfsm_run_options* o) {
  if (!o || !o->trace) return;
  tfsm_trace_fn fn = o->trace;
  void* user = o->trace_user;
  chart.trace = [fn, user](const nlohmann::ordered_json& ev) { fn(ev.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace).c_str(), user); };
  chart.trace_steps = o->trace_steps != 0;
  for (const Edge& e : chart.edges())
    fn(nlohmann::ordered_json{{"ev", "edge"},
                              {"id", e.id},
                              {"from", e.from},
                              {"to", e.to},
                              {"kind", "complete"},
                              {"rule", nullptr},
                              {"dot", 0},
                              {"children", nlohmann::ordered_json::array()}}
           .dump(-1, ' ', false, nlohmann::json::error_handler_t::replace)
           .c_str(),
       user);
}

nlohmann::ordered_json chart_stats(const Chart& c) {
  const ChartCounters& k = c.counters();
  nlohmann::ordered_json j{{"status", c.status() == ChartStatus::Exhausted ? "exhausted" : "done"},
                           {"limit", c.exhausted_limit()},
                           {"edges", k.edges},
                           {"attempts", k.attempts},
                           {"failures", k.failures},
                           {"steps", k.steps},
                           {"duplicates", k.duplicates}};
  return j;
}

tfsm_status finish_run(const Chart& c, std::unique_ptr<tfsm_result> r, nlohmann::ordered_json stats,
                       tfsm_result** out) {
  r->stats = stats.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
  *out = r.release();
  if (c.status() == ChartStatus::Exhausted)
    return fail(TFSM_ERR_LIMIT, "ResourceExhausted", "limit reached: " + c.exhausted_limit(),
                {{"code", "ResourceExhausted"}, {"message", "limit reached"}, {"details", {c.exhausted_limit()}}});
  return TFSM_OK;
}

}  // namespace

extern "C" {

const char* tfsm_last_error(void) { return t_error.c_str(); }
const char* tfsm_last_error_code(void) { return t_code.c_str(); }
const char* tfsm_last_error_json(void) { return t_json.empty() ? "null" : t_json.c_str(); }
void tfsm_string_free(char* s) { std::free(s); }
void tfsm_buffer_free(uint8_t* b) { std::free(b); }
const char* tfsm_version(void) { return kCompilerVersion; }

tfsm_status tfsm_compile_source(const char* source, size_t len, const tfsm_compile_options* opts,
                                tfsm_grammar** out) {
  return guard([&] {
    if (!out || (!source && len)) throw usage("null argument");
    *out = nullptr;
    auto g = CompiledGrammar::compile(std::string_view(source ? source : "", len), compile_options(opts));
    *out = new tfsm_grammar{std::move(g)};
    return TFSM_OK;
  });
}

tfsm_status tfsm_compile_file(const char* path, const tfsm_compile_options* opts, tfsm_grammar** out) {
  return guard([&] {
    if (!path || !out) throw usage("null argument");
    *out = nullptr;
    std::string src = read_file(path, "grammar");
    try {
      *out = new tfsm_grammar{CompiledGrammar::compile(src, compile_options(opts))};
    } catch (const Error& e) {
      std::string msg = std::string(path) + ":";
      if (e.pos().line > 0) msg += std::to_string(e.pos().line) + ":" + std::to_string(e.pos().column) + ":";
      throw Error(e.code(), msg + " " + e.what(), e.details(), e.pos());
    }
    return TFSM_OK;
  });
}

tfsm_status tfsm_grammar_serialize(const tfsm_grammar* g, uint8_t** bytes, size_t* len) {
  return guard([&] {
    if (!g || !bytes || !len) throw usage("null argument");
    std::vector<std::uint8_t> v = g->g->save();
    *bytes = static_cast<uint8_t*>(std::malloc(v.size() ? v.size() : 1));
    if (!*bytes) throw std::bad_alloc();
    std::memcpy(*bytes, v.data(), v.size());
    *len = v.size();
    return TFSM_OK;
  });
}

tfsm_status tfsm_grammar_deserialize(const uint8_t* bytes, size_t len, tfsm_grammar** out) {
  return guard([&] {
    if (!out || (!bytes && len)) throw usage("null argument");
    *out = nullptr;
    *out = new tfsm_grammar{CompiledGrammar::load(std::span<const std::uint8_t>(bytes, len))};
    return TFSM_OK;
  });
}

tfsm_status tfsm_grammar_save(const tfsm_grammar* g, const char* path) {
  return guard([&] {
    if (!g || !path) throw usage("null argument");
    std::vector<std::uint8_t> v = g->g->save();
    std::ofstream o(path, std::ios::binary);
    o.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size()));
    if (!o) throw usage(std::string("cannot write '") + path + "'");
    return TFSM_OK;
  });
}

tfsm_status tfsm_grammar_load(const char* path, tfsm_grammar** out) {
  return guard([&] {
    if (!path || !out) throw usage("null argument");
    *out = nullptr;
    std::string bytes = read_file(path, "artifact");
    *out = new tfsm_grammar{CompiledGrammar::load(
        std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()))};
    return TFSM_OK;
  });
}

void tfsm_grammar_free(tfsm_grammar* g) { delete g; }

tfsm_status tfsm_grammar_info(const tfsm_grammar* g, char** json) {
  return guard([&] {
    if (!g || !json) throw usage("null argument");
    CompileStats s = g->g->stats();
    nlohmann::ordered_json warnings = nlohmann::ordered_json::array();
    for (const auto& w : g->g->warnings) {
      nlohmann::ordered_json wj{{"message", w.message}};
      if (w.pos.line > 0) {
        wj["line"] = w.pos.line;
        wj["column"] = w.pos.column;
      }
      warnings.push_back(wj);
    }
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(g->g->source_hash()));
    nlohmann::ordered_json j{{"compiler", g->g->compiler_version()},
                             {"source_hash", hash},
                             {"invertible", g->g->generation_program() != nullptr},
                             {"types", s.types},
                             {"features", s.features},
                             {"rules", s.rules},
                             {"lexical", s.lexical},
                             {"empty_categories", s.empty_categories},
                             {"non_equivalent", g->g->parse_program().non_equivalent},
                             {"instructions", s.instructions},
                             {"inverted_rules", s.inverted_rules},
                             {"inverted_instructions", s.inverted_instructions},
                             {"kb_records", s.kb_records},
                             {"warnings", warnings}};
    *json = dup(j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace));
    return TFSM_OK;
  });
}

tfsm_status tfsm_disassemble(const tfsm_grammar* g, int which, char** text) {
  return guard([&] {
    if (!g || !text) throw usage("null argument");
    const Program* p = which == 0 ? &g->g->parse_program() : g->g->generation_program();
    if (!p) throw usage("grammar was compiled without inversion");
    *text = dup(disassemble(*p));
    return TFSM_OK;
  });
}

tfsm_status tfsm_inverted_source(const tfsm_grammar* g, char** text) {
  return guard([&] {
    if (!g || !text) throw usage("null argument");
    if (!g->g->generation_program()) throw usage("grammar was compiled without inversion");
    *text = dup(g->g->inverted_text());
    return TFSM_OK;
  });
}

tfsm_status tfsm_parse(const tfsm_grammar* g, const char* sentence, const tfsm_run_options* opts,
                       tfsm_result** out) {
  return guard([&] {
    if (!g || !sentence || !out) throw usage("null argument");
    *out = nullptr;
    unsigned depth = opts && opts->depth ? opts->depth : 16;
    auto chart = init_parse(split_words(sentence), g->g->parse_program(), run_limits(opts));
    attach_trace(*chart, opts);
    chart->run();
    auto r = std::make_unique<tfsm_result>();
    for (std::uint32_t id : chart->spanning()) {
      r->text.push_back(render_edge(*chart, id, false, depth));
      r->json.push_back(render_edge(*chart, id, true, depth));
    }
    auto stats = chart_stats(*chart);
    stats["diagnostics"] = nlohmann::ordered_json::array();
    return finish_run(*chart, std::move(r), stats, out);
  });
}

tfsm_status tfsm_generate(const tfsm_grammar* g, const char* sem, const tfsm_run_options* opts,
                          tfsm_result** out) {
  return guard([&] {
    if (!g || !sem || !out) throw usage("null argument");
    *out = nullptr;
    const Program* gen = g->g->generation_program();
    if (!gen) throw usage("grammar was compiled without inversion; recompile with --invert");
    OwnedFs input = read_structure(g->g->signature(), sem);
    auto chart = init_generate(input.heap, input.root, g->g->sem_config(), *gen, run_limits(opts));
    attach_trace(*chart, opts);
    chart->run();
    GenerationResult res = collect_generation(*chart, input.heap, input.root, *g->g->kb(), g->g->sem_config());
    auto r = std::make_unique<tfsm_result>();
    for (const auto& words : res.strings) {
      std::string s;
      for (const auto& w : words) s += (s.empty() ? "" : " ") + w;
      r->text.push_back(s);
      r->json.push_back(nlohmann::json(words).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace));
    }
    auto stats = chart_stats(*chart);
    stats["diagnostics"] = res.diagnostics;
    return finish_run(*chart, std::move(r), stats, out);
  });
}

size_t tfsm_result_count(const tfsm_result* r) { return r ? r->text.size() : 0; }
const char* tfsm_result_text(const tfsm_result* r, size_t i) {
  return r && i < r->text.size() ? r->text[i].c_str() : nullptr;
}
const char* tfsm_result_json(const tfsm_result* r, size_t i) {
  return r && i < r->json.size() ? r->json[i].c_str() : nullptr;
}
const char* tfsm_result_stats(const tfsm_result* r) { return r ? r->stats.c_str() : nullptr; }
void tfsm_result_free(tfsm_result* r) { delete r; }

tfsm_status tfsm_session_new(const tfsm_grammar* g, tfsm_session** out) {
  return guard([&] {
    if (!out) throw usage("null argument");
    *out = new tfsm_session{DebugSession(g ? g->g : nullptr)};
    return TFSM_OK;
  });
}

tfsm_status tfsm_session_request(tfsm_session* s, const char* request_json, char** response_json) {
  return guard([&] {
    if (!s || !request_json || !response_json) throw usage("null argument");
    nlohmann::json req;
    try {
      req = nlohmann::json::parse(request_json);
    } catch (const nlohmann::json::exception& e) {
      throw usage(std::string("request is not JSON: ") + e.what());
    }
    *response_json = dup(s->s.handle(req).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace));
    return TFSM_OK;
  });
}

void tfsm_session_free(tfsm_session* s) { delete s; }

}  // extern "C"
