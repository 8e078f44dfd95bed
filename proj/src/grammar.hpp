#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "chart.hpp"
#include "inversion.hpp"
#include "machine.hpp"

namespace tfsm {

inline constexpr const char* kCompilerVersion = "tfsm 0.1.0";
inline constexpr std::uint32_t kArtifactVersion = 1;

struct CompileOptions {
  bool invert = false;
  unsigned max_ec_rounds = 2;
  SemConfig sem;
  std::uint32_t register_cap = kDefaultRegisterCap;
};

struct CompileStats {
  std::size_t types = 0;
  std::size_t features = 0;
  std::size_t rules = 0;
  std::size_t lexical = 0;
  std::size_t empty_categories = 0;
  std::size_t instructions = 0;
  std::size_t inverted_rules = 0;
  std::size_t inverted_instructions = 0;
  std::size_t kb_records = 0;
};

// Everything needed to run a grammar in either direction.
class CompiledGrammar {
 public:
  static std::unique_ptr<CompiledGrammar> compile(std::string_view source, const CompileOptions& options = {});
  static std::unique_ptr<CompiledGrammar> load(std::span<const std::uint8_t> bytes);
  std::vector<std::uint8_t> save() const;

  const Signature& signature() const { return *sig_; }
  const SignatureDecls& signature_decls() const { return decls_; }
  const Program& parse_program() const { return *parse_; }
  const Program* generation_program() const { return gen_.get(); }
  const SemanticKB* kb() const { return kb_.get(); }
  const SemConfig& sem_config() const { return sem_; }
  const std::string& inverted_text() const { return inverted_text_; }
  std::uint64_t source_hash() const { return source_hash_; }
  const std::string& compiler_version() const { return compiler_version_; }
  CompileStats stats() const;

  std::vector<Diagnostic> warnings;

 private:
  CompiledGrammar() = default;
  friend struct ArtifactCodec;

  SignatureDecls decls_;
  std::unique_ptr<Signature> sig_;
  std::unique_ptr<Program> parse_;
  std::unique_ptr<Program> gen_;
  std::unique_ptr<SemanticKB> kb_;
  SemConfig sem_;
  std::string inverted_text_;
  std::uint64_t source_hash_ = 0;
  std::string compiler_version_ = kCompilerVersion;
};

std::uint64_t fnv1a(std::string_view text);

// A standalone feature structure (input semantics, test fixtures).
struct OwnedFs {
  explicit OwnedFs(const Signature& sig) : heap(sig) {}
  Heap heap;
  CellRef root = kNullRef;
};

// Reads an ALE description or (when it starts with '{') the JSON
// rendering schema. Throws RuntimeError(MalformedSemantics) or
// CompileError from the description reader.
OwnedFs read_structure(const Signature& sig, std::string_view text);
CellRef read_fs_json(Heap& heap, const nlohmann::json& j);

std::unique_ptr<Chart> init_generate(const Heap& heap, CellRef sem, const SemConfig& cfg, const Program& program,
                                     RunLimits limits = {});

struct GenerationResult {
  std::vector<std::uint32_t> edges;  // spanning edges whose sem matches the input
  std::vector<std::vector<std::string>> strings;
  std::vector<std::string> diagnostics;
};

GenerationResult collect_generation(const Chart& chart, const Heap& heap, CellRef sem, const SemanticKB& kb,
                                    const SemConfig& cfg);

// Text or JSON rendering of a complete edge, placeholders materialized
// to `depth` levels.
std::string render_edge(const Chart& chart, std::uint32_t edge, bool json, unsigned depth = 16);
nlohmann::ordered_json edge_json(const Chart& chart, std::uint32_t edge, unsigned depth = 16);
// The sem value of an edge as a standalone structure.
OwnedFs edge_semantics(const Chart& chart, std::uint32_t edge, const SemConfig& cfg);

}  // namespace tfsm
