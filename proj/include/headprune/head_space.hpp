#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace headprune {

/// Shape of the attention stack: `layers` encoder layers with
/// `heads_per_layer` heads each.
struct Geometry {
  int layers = 0;
  int heads_per_layer = 0;

  Geometry() = default;
  Geometry(int layers, int heads_per_layer);

  int total_heads() const noexcept { return layers * heads_per_layer; }

  friend bool operator==(const Geometry&, const Geometry&) = default;
};

struct HeadIndex {
  int layer = 0;
  int head = 0;

  friend auto operator<=>(const HeadIndex&, const HeadIndex&) = default;
  friend bool operator==(const HeadIndex&, const HeadIndex&) = default;
};

bool in_bounds(HeadIndex h, const Geometry& g) noexcept;
std::string to_string(HeadIndex h);

/// A set of pruned heads. Canonical form is duplicate-free and sorted
/// by (layer, head); every API that stores or hashes masks expects it.
struct PruneMask {
  std::vector<HeadIndex> heads;

  bool empty() const noexcept { return heads.empty(); }
  std::size_t size() const noexcept { return heads.size(); }
  bool contains(HeadIndex h) const;

  friend bool operator==(const PruneMask&, const PruneMask&) = default;
};

/// Deduplicate and sort. Throws BoundsError naming the first offending
/// index if any head lies outside `geometry`.
PruneMask canonicalize(PruneMask mask, const Geometry& geometry);

/// True if sorted strictly ascending (implies duplicate-free).
bool is_canonical(const PruneMask& mask) noexcept;

/// Copy of a canonical mask with `h` inserted in order.
PruneMask with_head(const PruneMask& mask, HeadIndex h);
PruneMask with_heads(const PruneMask& mask, const std::vector<HeadIndex>& extra);

/// All l*n heads in canonical order.
std::vector<HeadIndex> all_heads(const Geometry& geometry);

std::uint64_t mask_hash(const PruneMask& mask) noexcept;

struct PruneMaskHash {
  std::size_t operator()(const PruneMask& m) const noexcept {
    return static_cast<std::size_t>(mask_hash(m));
  }
};

// JSON: heads as [layer, head], masks as arrays of pairs.
void to_json(nlohmann::json& j, const HeadIndex& h);
void from_json(const nlohmann::json& j, HeadIndex& h);
void to_json(nlohmann::json& j, const PruneMask& m);
void from_json(const nlohmann::json& j, PruneMask& m);
void to_json(nlohmann::json& j, const Geometry& g);
void from_json(const nlohmann::json& j, Geometry& g);

}  // namespace headprune
