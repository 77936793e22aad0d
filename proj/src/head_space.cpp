#include "headprune/head_space.hpp"

#include <algorithm>

#include "headprune/errors.hpp"

namespace headprune {

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error([&] {
        std::string joined;
        for (const auto& p : problems) {
          if (!joined.empty()) joined += "; ";
          joined += p;
        }
        return joined;
      }()),
      problems_(std::move(problems)) {}

Geometry::Geometry(int layers, int heads_per_layer)
    : layers(layers), heads_per_layer(heads_per_layer) {
  if (layers < 1 || heads_per_layer < 1) {
    throw ConfigError("geometry must have at least one layer and one head, got " +
                      std::to_string(layers) + "x" + std::to_string(heads_per_layer));
  }
}

bool in_bounds(HeadIndex h, const Geometry& g) noexcept {
  return h.layer >= 0 && h.layer < g.layers && h.head >= 0 && h.head < g.heads_per_layer;
}

std::string to_string(HeadIndex h) {
  return "(" + std::to_string(h.layer) + "," + std::to_string(h.head) + ")";
}

bool PruneMask::contains(HeadIndex h) const {
  return std::binary_search(heads.begin(), heads.end(), h);
}

PruneMask canonicalize(PruneMask mask, const Geometry& geometry) {
  for (const auto& h : mask.heads) {
    if (!in_bounds(h, geometry)) {
      throw BoundsError("head " + to_string(h) + " is out of bounds for geometry " +
                        std::to_string(geometry.layers) + "x" +
                        std::to_string(geometry.heads_per_layer));
    }
  }
  std::sort(mask.heads.begin(), mask.heads.end());
  mask.heads.erase(std::unique(mask.heads.begin(), mask.heads.end()), mask.heads.end());
  return mask;
}

bool is_canonical(const PruneMask& mask) noexcept {
  return std::adjacent_find(mask.heads.begin(), mask.heads.end(),
                            [](HeadIndex a, HeadIndex b) { return !(a < b); }) ==
         mask.heads.end();
}

PruneMask with_head(const PruneMask& mask, HeadIndex h) {
  PruneMask out = mask;
  auto it = std::lower_bound(out.heads.begin(), out.heads.end(), h);
  if (it == out.heads.end() || *it != h) out.heads.insert(it, h);
  return out;
}

PruneMask with_heads(const PruneMask& mask, const std::vector<HeadIndex>& extra) {
  PruneMask out = mask;
  out.heads.insert(out.heads.end(), extra.begin(), extra.end());
  std::sort(out.heads.begin(), out.heads.end());
  out.heads.erase(std::unique(out.heads.begin(), out.heads.end()), out.heads.end());
  return out;
}

std::vector<HeadIndex> all_heads(const Geometry& geometry) {
  std::vector<HeadIndex> out;
  out.reserve(static_cast<std::size_t>(geometry.total_heads()));
  for (int i = 0; i < geometry.layers; ++i) {
    for (int j = 0; j < geometry.heads_per_layer; ++j) out.push_back({i, j});
  }
  return out;
}

std::uint64_t mask_hash(const PruneMask& mask) noexcept {
  // FNV-1a over the (layer, head) pairs, with a length prefix.
  std::uint64_t h = 14695981039346656037ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffU;
      h *= 1099511628211ULL;
    }
  };
  mix(mask.heads.size());
  for (const auto& hd : mask.heads) {
    mix(static_cast<std::uint32_t>(hd.layer));
    mix(static_cast<std::uint32_t>(hd.head));
  }
  return h;
}

void to_json(nlohmann::json& j, const HeadIndex& h) { j = nlohmann::json::array({h.layer, h.head}); }

void from_json(const nlohmann::json& j, HeadIndex& h) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
    throw ConfigError("head index must be an integer pair [layer, head], got " + j.dump());
  }
  h.layer = j[0].get<int>();
  h.head = j[1].get<int>();
}

void to_json(nlohmann::json& j, const PruneMask& m) {
  j = nlohmann::json::array();
  for (const auto& h : m.heads) j.push_back(h);
}

void from_json(const nlohmann::json& j, PruneMask& m) {
  if (!j.is_array()) throw ConfigError("mask must be an array of [layer, head] pairs");
  m.heads.clear();
  for (const auto& e : j) m.heads.push_back(e.get<HeadIndex>());
}

void to_json(nlohmann::json& j, const Geometry& g) {
  j = nlohmann::json::array({g.layers, g.heads_per_layer});
}

void from_json(const nlohmann::json& j, Geometry& g) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
    throw ConfigError("geometry must be an integer pair [layers, heads], got " + j.dump());
  }
  g = Geometry(j[0].get<int>(), j[1].get<int>());
}

}  // namespace headprune
