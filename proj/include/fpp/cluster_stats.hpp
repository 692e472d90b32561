#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "fpp/lattice.hpp"
#include "fpp/random_field.hpp"

namespace fpp {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), size_(n, 1) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
  }

  std::size_t size_of(std::size_t x) { return size_[find(x)]; }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

/// Vertex clusters induced by open edges. A cluster's id is the box index of
/// its first vertex in row-major order.
struct ClusterDecomposition {
  LatticeBox box;
  std::vector<std::size_t> id;                // per vertex index
  std::vector<std::size_t> size_by_id;        // indexed by vertex index; 0 unless it is an id

  std::size_t component_count() const {
    return std::size_t(std::count_if(size_by_id.begin(), size_by_id.end(), [](std::size_t s) { return s > 0; }));
  }
  std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> out;
    for (std::size_t s : size_by_id)
      if (s > 0) out.push_back(s);
    return out;
  }
  bool connected(const Vertex& a, const Vertex& b) const { return id[box.index(a)] == id[box.index(b)]; }
};

inline ClusterDecomposition open_clusters(const Configuration& c, const LatticeBox& box) {
  if (!c.box().contains(box)) throw Error("open_clusters: box outside configuration");
  const std::size_t nv = box.vertex_count();
  DisjointSets ds(nv);
  for (const auto& e : box.edges()) {
    if (c.ticks_unchecked(e) != 0) continue;
    const auto [u, v] = edge_endpoints(e);
    ds.unite(box.index(u), box.index(v));
  }
  ClusterDecomposition out{box, std::vector<std::size_t>(nv), std::vector<std::size_t>(nv, 0)};
  std::vector<std::size_t> first(nv, nv);
  for (std::size_t i = 0; i < nv; ++i) {
    const std::size_t r = ds.find(i);
    if (first[r] == nv) first[r] = i;
    out.id[i] = first[r];
    ++out.size_by_id[first[r]];
  }
  return out;
}

inline std::size_t largest_cluster_size(const Configuration& c, const LatticeBox& box) {
  const auto d = open_clusters(c, box);
  return *std::max_element(d.size_by_id.begin(), d.size_by_id.end());
}

struct TileCount {
  LatticeBox tile;
  std::size_t count = 0;
  bool truncated = false;
};

/// Tiles of side `subside` anchored at the box's lower-left corner (last tile
/// in each direction truncated); for each, the number of vertices joined to
/// the tile boundary by open in-tile paths.
inline std::vector<TileCount> boundary_connected_tiles(const Configuration& c, const LatticeBox& box, int subside) {
  if (subside < 1) throw Error("boundary_connected_sizes: subside must be >= 1");
  if (!c.box().contains(box)) throw Error("boundary_connected_sizes: box outside configuration");
  std::vector<TileCount> out;
  for (int y0 = box.y_min(); y0 < box.y_max() || (y0 == box.y_min() && box.height() == 1); y0 += subside)
    for (int x0 = box.x_min(); x0 < box.x_max() || (x0 == box.x_min() && box.width() == 1); x0 += subside) {
      const int x1 = std::min(x0 + subside, box.x_max());
      const int y1 = std::min(y0 + subside, box.y_max());
      const LatticeBox tile(x0, x1, y0, y1);
      std::vector<std::uint8_t> seen(tile.vertex_count(), 0);
      std::vector<Vertex> stack;
      for (std::size_t i = 0; i < tile.vertex_count(); ++i)
        if (tile.on_boundary(tile.vertex(i))) {
          seen[i] = 1;
          stack.push_back(tile.vertex(i));
        }
      std::size_t count = stack.size();
      while (!stack.empty()) {
        const Vertex v = stack.back();
        stack.pop_back();
        const Vertex nbs[4] = {{v.x + 1, v.y}, {v.x, v.y + 1}, {v.x - 1, v.y}, {v.x, v.y - 1}};
        for (const auto& w : nbs) {
          if (!tile.contains(w) || seen[tile.index(w)]) continue;
          if (c.ticks_unchecked(edge_between(v, w)) != 0) continue;
          seen[tile.index(w)] = 1;
          ++count;
          stack.push_back(w);
        }
      }
      out.push_back({tile, count, x1 - x0 < subside || y1 - y0 < subside});
    }
  return out;
}

inline std::vector<std::size_t> boundary_connected_sizes(const Configuration& c, const LatticeBox& box, int subside) {
  std::vector<std::size_t> out;
  for (const auto& t : boundary_connected_tiles(c, box, subside)) out.push_back(t.count);
  return out;
}

}  // namespace fpp
