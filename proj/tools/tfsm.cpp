// Command-line driver. Exit codes: 0 results found, 1 no results,
// 2 usage or compile error, 3 resource limit, 4 bench mismatch.
#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>

#include "tfsm/tfsm.h"

namespace {

enum Exit { kFound = 0, kNone = 1, kError = 2, kLimit = 3, kMismatch = 4 };

struct GrammarPtr {
  tfsm_grammar* g = nullptr;
  ~GrammarPtr() { tfsm_grammar_free(g); }
};

struct ResultPtr {
  tfsm_result* r = nullptr;
  ~ResultPtr() { tfsm_result_free(r); }
};

int report(tfsm_status s) {
  std::cerr << "error: " << tfsm_last_error_code() << ": " << tfsm_last_error() << "\n";
  return s == TFSM_ERR_LIMIT ? kLimit : kError;
}

bool read_file(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream s;
  s << in.rdbuf();
  out = s.str();
  return true;
}

// Accepts either a compiled artifact or grammar source. With `invert`,
// source is compiled for both directions when the grammar allows it.
tfsm_status open_grammar(const std::string& path, GrammarPtr& g, bool invert) {
  std::string bytes;
  if (!read_file(path, bytes)) {
    std::cerr << "error: cannot read '" << path << "'\n";
    return TFSM_ERR_USAGE;
  }
  if (bytes.rfind("TFSM", 0) == 0)
    return tfsm_grammar_deserialize(reinterpret_cast<const uint8_t*>(bytes.data()), bytes.size(), &g.g);
  tfsm_compile_options o{};
  o.invert = invert;
  tfsm_status s = tfsm_compile_file(path.c_str(), &o, &g.g);
  if (invert && s == TFSM_ERR_COMPILE && std::string(tfsm_last_error_code()) == "NotInvertible") {
    o.invert = 0;
    s = tfsm_compile_file(path.c_str(), &o, &g.g);
  }
  return s;
}

struct RunFlags {
  bool json = false;
  bool trace = false;
  bool trace_steps = false;
  uint64_t max_edges = 0;
  uint64_t max_steps = 0;
  bool dedup = false;
  bool lifo = false;
  unsigned depth = 16;

  void add(CLI::App* app) {
    app->add_flag("--json", json, "Print results as JSON");
    app->add_flag("--trace", trace, "Write trace events to stderr as JSON lines");
    app->add_flag("--trace-steps", trace_steps, "Include one event per instruction in the trace");
    app->add_option("--max-edges", max_edges, "Chart edge limit");
    app->add_option("--max-steps", max_steps, "Instruction limit");
    app->add_flag("--dedup", dedup, "Drop complete edges equivalent to an existing one");
    app->add_flag("--lifo", lifo, "Process the agenda last-in first-out");
    app->add_option("--depth", depth, "Placeholder expansion depth when printing");
  }

  tfsm_run_options options() const {
    tfsm_run_options o{};
    o.max_edges = max_edges;
    o.max_steps = max_steps;
    o.dedup = dedup;
    o.lifo = lifo;
    o.depth = depth;
    if (trace || trace_steps) {
      o.trace = [](const char* ev, void*) { std::fprintf(stderr, "%s\n", ev); };
      o.trace_steps = trace_steps;
    }
    return o;
  }
};

int print_results(tfsm_status s, const ResultPtr& r, bool json) {
  if (s != TFSM_OK && s != TFSM_ERR_LIMIT) return report(s);
  std::size_t n = tfsm_result_count(r.r);
  for (std::size_t i = 0; i < n; ++i) std::cout << (json ? tfsm_result_json(r.r, i) : tfsm_result_text(r.r, i)) << "\n";
  auto stats = nlohmann::json::parse(tfsm_result_stats(r.r));
  for (const auto& d : stats["diagnostics"]) std::cerr << "note: " << d.get<std::string>() << "\n";
  if (s == TFSM_ERR_LIMIT) return report(s);
  return n ? kFound : kNone;
}

int cmd_compile(const std::string& grammar, const std::string& out, bool invert, unsigned ec_rounds,
                const std::string& sem_config) {
  std::string cfg;
  if (!sem_config.empty() && !read_file(sem_config, cfg)) {
    std::cerr << "error: cannot read '" << sem_config << "'\n";
    return kError;
  }
  tfsm_compile_options o{};
  o.invert = invert;
  o.max_ec_rounds = ec_rounds;
  o.sem_config_json = cfg.empty() ? nullptr : cfg.c_str();
  GrammarPtr g;
  if (tfsm_status s = tfsm_compile_file(grammar.c_str(), &o, &g.g); s != TFSM_OK) return report(s);
  char* info = nullptr;
  tfsm_grammar_info(g.g, &info);
  auto j = nlohmann::json::parse(info);
  tfsm_string_free(info);
  for (const auto& w : j["warnings"]) {
    std::cerr << "warning: " << grammar;
    if (w.contains("line")) std::cerr << ":" << w["line"] << ":" << w["column"];
    std::cerr << ": " << w["message"].get<std::string>() << "\n";
  }
  std::string target = out;
  if (target.empty()) {
    target = grammar;
    auto dot = target.rfind('.');
    if (dot != std::string::npos && target.find('/', dot) == std::string::npos) target.resize(dot);
    target += ".tfsm";
  }
  if (tfsm_status s = tfsm_grammar_save(g.g, target.c_str()); s != TFSM_OK) return report(s);
  std::cout << "types " << j["types"] << "\n"
            << "features " << j["features"] << "\n"
            << "rules " << j["rules"] << "\n"
            << "lexical " << j["lexical"] << "\n"
            << "empty_categories " << j["empty_categories"] << "\n"
            << "instructions " << j["instructions"] << "\n";
  if (invert)
    std::cout << "inverted_rules " << j["inverted_rules"] << "\n"
              << "inverted_instructions " << j["inverted_instructions"] << "\n"
              << "kb_records " << j["kb_records"] << "\n";
  std::cout << "wrote " << target << "\n";
  return kFound;
}

std::string sem_argument(const std::string& arg) {
  std::string text;
  if (!arg.empty() && arg[0] == '@') {
    if (!read_file(arg.substr(1), text)) throw CLI::ValidationError("cannot read '" + arg.substr(1) + "'");
    return text;
  }
  return arg;
}

// Suite lines: `parse <expected> <sentence>` or `generate <expected> <sem>`.
int cmd_bench(const std::string& artifact, const std::string& suite, const RunFlags& flags) {
  GrammarPtr g;
  if (tfsm_status s = open_grammar(artifact, g, true); s != TFSM_OK) return report(s);
  std::string text;
  if (!read_file(suite, text)) {
    std::cerr << "error: cannot read '" << suite << "'\n";
    return kError;
  }
  std::cout << "kind,input,expected,results,edges,attempts,steps,wall_us,status\n";
  std::istringstream lines(text);
  std::vector<std::string> diffs;
  int line_no = 0;
  bool limited = false;
  for (std::string line; std::getline(lines, line);) {
    ++line_no;
    auto start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    std::istringstream in(line.substr(start));
    std::string kind;
    long expected = -1;
    in >> kind;
    if (!(in >> expected)) expected = -1;
    std::string input;
    std::getline(in, input);
    input.erase(0, input.find_first_not_of(" \t"));
    while (!input.empty() && (input.back() == '\r' || input.back() == ' ')) input.pop_back();
    if ((kind != "parse" && kind != "generate") || expected < 0) {
      std::cerr << "error: " << suite << ":" << line_no << ": expected 'parse|generate <count> <input>'\n";
      return kError;
    }
    tfsm_run_options o = flags.options();
    ResultPtr r;
    auto t0 = std::chrono::steady_clock::now();
    tfsm_status s = kind == "parse" ? tfsm_parse(g.g, input.c_str(), &o, &r.r) : tfsm_generate(g.g, input.c_str(), &o, &r.r);
    auto us = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - t0).count();
    if (s != TFSM_OK && s != TFSM_ERR_LIMIT) return report(s);
    auto stats = nlohmann::json::parse(tfsm_result_stats(r.r));
    std::size_t n = tfsm_result_count(r.r);
    limited |= s == TFSM_ERR_LIMIT;
    std::string quoted = "\"";
    for (char c : input) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
    quoted += "\"";
    std::cout << kind << "," << quoted << "," << expected << "," << n << "," << stats["edges"] << ","
              << stats["attempts"] << "," << stats["steps"] << "," << us << "," << stats["status"].get<std::string>()
              << "\n";
    if (static_cast<long>(n) != expected)
      diffs.push_back(suite + ":" + std::to_string(line_no) + ": " + kind + " " + input + ": expected " +
                      std::to_string(expected) + ", got " + std::to_string(n));
  }
  for (const auto& d : diffs) std::cerr << "mismatch: " << d << "\n";
  if (!diffs.empty()) return kMismatch;
  return limited ? kLimit : kFound;
}

struct SessionPtr {
  std::mutex mu;
  tfsm_session* s = nullptr;
  ~SessionPtr() { tfsm_session_free(s); }
};

int cmd_serve(const std::string& artifact, const std::string& host, int port) {
  GrammarPtr g;
  if (!artifact.empty())
    if (tfsm_status s = open_grammar(artifact, g, true); s != TFSM_OK) return report(s);
  std::mutex mu;
  std::map<std::string, std::shared_ptr<SessionPtr>> sessions;
  std::uint64_t next = 1;

  httplib::Server server;
  auto cors = [](httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS");
  };
  server.Options(R"(/.*)", [&](const httplib::Request&, httplib::Response& res) { cors(res); });
  server.Get("/protocol", [&](const httplib::Request&, httplib::Response& res) {
    cors(res);
    res.set_content(nlohmann::json{{"protocol", 1}, {"engine", tfsm_version()}}.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace), "application/json");
  });
  server.Post("/sessions", [&](const httplib::Request&, httplib::Response& res) {
    cors(res);
    auto slot = std::make_shared<SessionPtr>();
    if (tfsm_session_new(g.g, &slot->s) != TFSM_OK) {
      res.status = 500;
      res.set_content(tfsm_last_error_json(), "application/json");
      return;
    }
    std::string id;
    {
      std::lock_guard<std::mutex> lock(mu);
      id = "s" + std::to_string(next++);
      sessions[id] = slot;
    }
    res.set_content(nlohmann::json{{"session", id}, {"protocol", 1}}.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace), "application/json");
  });
  auto find = [&](const std::string& id) {
    std::lock_guard<std::mutex> lock(mu);
    auto it = sessions.find(id);
    return it == sessions.end() ? nullptr : it->second;
  };
  server.Post(R"(/sessions/([A-Za-z0-9]+))", [&](const httplib::Request& req, httplib::Response& res) {
    cors(res);
    auto slot = find(req.matches[1]);
    if (!slot) {
      res.status = 404;
      res.set_content(R"({"ok":false,"error":{"code":"Usage","message":"unknown session"}})", "application/json");
      return;
    }
    char* out = nullptr;
    tfsm_status s;
    {
      std::lock_guard<std::mutex> lock(slot->mu);
      s = tfsm_session_request(slot->s, req.body.c_str(), &out);
    }
    if (s != TFSM_OK) {
      res.status = 400;
      res.set_content(nlohmann::json{{"ok", false}, {"protocol", 1}, {"error", nlohmann::json::parse(tfsm_last_error_json())}}.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace),
                      "application/json");
      return;
    }
    res.set_content(out, "application/json");
    tfsm_string_free(out);
  });
  server.Delete(R"(/sessions/([A-Za-z0-9]+))", [&](const httplib::Request& req, httplib::Response& res) {
    cors(res);
    std::lock_guard<std::mutex> lock(mu);
    bool gone = sessions.erase(req.matches[1]) > 0;
    res.status = gone ? 200 : 404;
    res.set_content(nlohmann::json{{"ok", gone}}.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace), "application/json");
  });

  int bound = port;
  if (port == 0) {
    bound = server.bind_to_any_port(host);
    if (bound < 0) {
      std::cerr << "error: cannot bind " << host << "\n";
      return kError;
    }
  } else if (!server.bind_to_port(host, port)) {
    std::cerr << "error: cannot bind " << host << ":" << port << "\n";
    return kError;
  }
  std::cout << "listening on http://" << host << ":" << bound << std::endl;
  server.listen_after_bind();
  return kFound;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Typed feature structure grammar compiler and chart engine"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tfsm_version());

  std::string grammar, out, sem_config, artifact, input, suite, host = "127.0.0.1";
  bool invert = false, generation = false;
  unsigned ec_rounds = 0;
  int port = 8080;
  RunFlags flags;

  auto* compile = app.add_subcommand("compile", "Compile a grammar to an artifact");
  compile->add_option("grammar", grammar, "Grammar source")->required();
  compile->add_option("-o,--out", out, "Artifact path (default: grammar name with .tfsm)");
  compile->add_flag("--invert", invert, "Also build the generation program");
  compile->add_option("--max-ec-rounds", ec_rounds, "Empty-category expansion rounds (default 2)");
  compile->add_option("--sem-config", sem_config, "JSON file naming the semantic features");

  auto* parse = app.add_subcommand("parse", "Parse a sentence");
  parse->add_option("artifact", artifact, "Artifact or grammar source")->required();
  parse->add_option("sentence", input, "Words separated by spaces")->required();
  flags.add(parse);

  auto* generate = app.add_subcommand("generate", "Generate strings from a semantic structure");
  generate->add_option("artifact", artifact, "Artifact or grammar source")->required();
  generate->add_option("sem", input, "Description or JSON structure, or @file")->required();
  flags.add(generate);

  auto* bench = app.add_subcommand("bench", "Run a suite and print a CSV table");
  bench->add_option("artifact", artifact, "Artifact or grammar source")->required();
  bench->add_option("suite", suite, "Suite file")->required();
  flags.add(bench);

  auto* serve = app.add_subcommand("serve-debug", "Serve the debug protocol over HTTP");
  serve->add_option("artifact", artifact, "Artifact or grammar source");
  serve->add_option("--port", port, "Port (0 picks a free one)");
  serve->add_option("--host", host, "Address to bind");

  auto* disasm = app.add_subcommand("disasm", "Print the compiled code");
  disasm->add_option("artifact", artifact, "Artifact or grammar source")->required();
  disasm->add_flag("--generate", generation, "Show the generation program");

  auto* inverted = app.add_subcommand("invert", "Print the inverted grammar");
  inverted->add_option("artifact", artifact, "Artifact or grammar source")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kFound : kError;
  }

  try {
    if (*compile) return cmd_compile(grammar, out, invert, ec_rounds, sem_config);
    if (*bench) return cmd_bench(artifact, suite, flags);
    if (*serve) return cmd_serve(artifact, host, port);

    GrammarPtr g;
    bool need_inverse = *generate || *inverted || generation;
    if (tfsm_status s = open_grammar(artifact, g, need_inverse); s != TFSM_OK) return report(s);
    if (*parse) {
      tfsm_run_options o = flags.options();
      ResultPtr r;
      tfsm_status s = tfsm_parse(g.g, input.c_str(), &o, &r.r);
      return print_results(s, r, flags.json);
    }
    if (*generate) {
      tfsm_run_options o = flags.options();
      ResultPtr r;
      std::string sem = sem_argument(input);
      tfsm_status s = tfsm_generate(g.g, sem.c_str(), &o, &r.r);
      return print_results(s, r, flags.json);
    }
    char* text = nullptr;
    tfsm_status s = *disasm ? tfsm_disassemble(g.g, generation ? 1 : 0, &text) : tfsm_inverted_source(g.g, &text);
    if (s != TFSM_OK) return report(s);
    std::cout << text;
    tfsm_string_free(text);
    return kFound;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
}
