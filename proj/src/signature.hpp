#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "error.hpp"

namespace tfsm {

enum class TypeId : std::uint32_t {};
enum class FeatId : std::uint32_t {};

constexpr TypeId kBot{0};

constexpr std::uint32_t index(TypeId t) noexcept { return static_cast<std::uint32_t>(t); }
constexpr std::uint32_t index(FeatId f) noexcept { return static_cast<std::uint32_t>(f); }

// One `type sub [...] intro [...]` clause as written in the grammar.
struct TypeDecl {
  std::string name;
  std::vector<std::string> subtypes;
  std::vector<std::pair<std::string, std::string>> intro;  // feature, value restriction
  SourcePos pos;
};

struct SignatureDecls {
  std::vector<TypeDecl> types;

  TypeDecl* find(std::string_view name);
  const TypeDecl* find(std::string_view name) const;
  // Returns the clause for `name`, appending an empty one if absent.
  TypeDecl& ensure(std::string_view name);
};

struct Approp {
  FeatId feat;
  TypeId restriction;
  friend bool operator==(const Approp&, const Approp&) = default;
};

// Compiled type hierarchy: subtype closure, dense join table and
// appropriateness. Immutable once built.
class Signature {
 public:
  static Signature compile(const SignatureDecls& decls);

  std::size_t type_count() const noexcept { return type_names_.size(); }
  std::size_t feature_count() const noexcept { return feat_names_.size(); }

  const std::string& type_name(TypeId t) const { return type_names_[index(t)]; }
  const std::string& feature_name(FeatId f) const { return feat_names_[index(f)]; }
  std::optional<TypeId> find_type(std::string_view name) const;
  std::optional<FeatId> find_feature(std::string_view name) const;

  // True when `general` is at least as general as `specific`.
  bool subsumes(TypeId general, TypeId specific) const noexcept {
    return (up_[index(general) * words_ + index(specific) / 64] >> (index(specific) % 64)) & 1u;
  }

  // Least upper bound (most general common subtype); nullopt when the
  // two types are inconsistent.
  std::optional<TypeId> lub(TypeId a, TypeId b) const noexcept {
    std::uint32_t r = lub_[index(a) * type_count() + index(b)];
    if (r == kNoType) return std::nullopt;
    return TypeId{r};
  }

  std::span<const Approp> features_of(TypeId t) const {
    return {approp_.data() + approp_begin_[index(t)], approp_begin_[index(t) + 1] - approp_begin_[index(t)]};
  }
  // Arc slot of `f` within nodes of type `t`, or -1 if not appropriate.
  int feature_position(TypeId t, FeatId f) const noexcept {
    return feat_pos_[index(t) * feature_count() + index(f)];
  }
  std::optional<TypeId> restriction(TypeId t, FeatId f) const noexcept {
    int p = feature_position(t, f);
    if (p < 0) return std::nullopt;
    return features_of(t)[static_cast<std::size_t>(p)].restriction;
  }
  TypeId introducer(FeatId f) const { return introducer_[index(f)]; }
  bool has_loop(TypeId t) const { return loop_[index(t)]; }

  std::span<const TypeId> immediate_subtypes(TypeId t) const { return subtypes_[index(t)]; }
  std::span<const TypeId> immediate_supertypes(TypeId t) const { return supertypes_[index(t)]; }

  const SignatureDecls& decls() const noexcept { return decls_; }

 private:
  static constexpr std::uint32_t kNoType = 0xffffffffu;

  SignatureDecls decls_;
  std::vector<std::string> type_names_;
  std::vector<std::string> feat_names_;
  std::unordered_map<std::string, TypeId> type_index_;
  std::unordered_map<std::string, FeatId> feat_index_;
  std::vector<std::vector<TypeId>> subtypes_;
  std::vector<std::vector<TypeId>> supertypes_;
  std::size_t words_ = 0;           // bitset row width in 64-bit words
  std::vector<std::uint64_t> up_;   // up_[t] = { s : t subsumes s }
  std::vector<std::uint32_t> lub_;
  std::vector<Approp> approp_;
  std::vector<std::size_t> approp_begin_;
  std::vector<int> feat_pos_;
  std::vector<TypeId> introducer_;
  std::vector<bool> loop_;
};

}  // namespace tfsm
