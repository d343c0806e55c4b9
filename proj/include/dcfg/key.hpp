#pragma once

#include <cstdint>
#include <variant>

#include "dcfg/error.hpp"
#include "dcfg/manifold.hpp"

namespace dcfg {

using KeyId = std::uint64_t;

/// Packs a one-character tag with an index, e.g. key('x', 3) for pose 3.
/// Problem builders use this to keep their key spaces disjoint.
constexpr KeyId key(char tag, std::uint64_t index) {
  return (static_cast<KeyId>(static_cast<unsigned char>(tag)) << 56) | index;
}
constexpr char key_tag(KeyId id) { return static_cast<char>(id >> 56); }
constexpr std::uint64_t key_index(KeyId id) { return id & ((KeyId(1) << 56) - 1); }

struct DiscreteKind {
  int cardinality = 2;
  bool operator==(const DiscreteKind& o) const { return cardinality == o.cardinality; }
};

/// Typed handle naming one variable: discrete with a cardinality, or
/// continuous with a manifold kind. The kind is fixed at construction.
struct VariableKey {
  KeyId id = 0;
  std::variant<DiscreteKind, ManifoldKind> kind;

  static VariableKey discrete(KeyId id, int cardinality) {
    if (cardinality < 1) throw InvalidArgument("cardinality must be >= 1");
    return {id, DiscreteKind{cardinality}};
  }
  static VariableKey continuous(KeyId id, const ManifoldKind& m) {
    if (m.tangent_dim() < 1) throw InvalidArgument("tangent dimension must be >= 1");
    return {id, m};
  }

  bool is_discrete() const { return std::holds_alternative<DiscreteKind>(kind); }
  int cardinality() const { return std::get<DiscreteKind>(kind).cardinality; }
  const ManifoldKind& manifold() const { return std::get<ManifoldKind>(kind); }
  int tangent_dim() const { return manifold().tangent_dim(); }

  bool same_kind(const VariableKey& o) const {
    if (is_discrete() != o.is_discrete()) return false;
    if (is_discrete()) return cardinality() == o.cardinality();
    return manifold() == o.manifold();
  }
};

}  // namespace dcfg
