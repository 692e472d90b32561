#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace fpp {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct Vertex {
  int x = 0;
  int y = 0;

  friend constexpr auto operator<=>(const Vertex&, const Vertex&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const Vertex& v) {
  return os << '(' << v.x << ',' << v.y << ')';
}

/// Row-major order: by y, then x.
constexpr bool row_major_less(const Vertex& a, const Vertex& b) {
  return a.y != b.y ? a.y < b.y : a.x < b.x;
}

constexpr int manhattan(const Vertex& a, const Vertex& b) {
  return std::abs(a.x - b.x) + std::abs(a.y - b.y);
}

constexpr bool adjacent(const Vertex& a, const Vertex& b) { return manhattan(a, b) == 1; }

/// Squared Euclidean distance; exact in integers.
constexpr std::int64_t dist2(const Vertex& a, const Vertex& b) {
  const std::int64_t dx = a.x - b.x;
  const std::int64_t dy = a.y - b.y;
  return dx * dx + dy * dy;
}

struct VertexHash {
  std::size_t operator()(const Vertex& v) const noexcept {
    return std::hash<std::uint64_t>{}((std::uint64_t(std::uint32_t(v.x)) << 32) |
                                      std::uint32_t(v.y));
  }
};

enum class Orientation : std::uint8_t { Horizontal = 0, Vertical = 1 };

/// Primal edge. Horizontal joins (x,y)-(x+1,y); Vertical joins (x,y)-(x,y+1).
struct Edge {
  Orientation orientation = Orientation::Horizontal;
  Vertex anchor;

  friend constexpr auto operator<=>(const Edge&, const Edge&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const Edge& e) {
  return os << (e.orientation == Orientation::Horizontal ? 'H' : 'V') << '@' << e.anchor;
}

constexpr std::pair<Vertex, Vertex> edge_endpoints(const Edge& e) {
  const Vertex& a = e.anchor;
  if (e.orientation == Orientation::Horizontal) return {a, Vertex{a.x + 1, a.y}};
  return {a, Vertex{a.x, a.y + 1}};
}

/// The edge joining two neighbouring vertices, in either order.
inline Edge edge_between(const Vertex& u, const Vertex& v) {
  if (!adjacent(u, v)) throw Error("edge_between: vertices are not neighbours");
  if (u.y == v.y) return Edge{Orientation::Horizontal, Vertex{std::min(u.x, v.x), u.y}};
  return Edge{Orientation::Vertical, Vertex{u.x, std::min(u.y, v.y)}};
}

struct EdgeHash {
  std::size_t operator()(const Edge& e) const noexcept {
    return VertexHash{}(e.anchor) * 2 + std::size_t(e.orientation);
  }
};

/// Dual edge with its anchor (the lower-left dual endpoint) stored in doubled
/// coordinates, so the dual vertex (a+1/2, b+1/2) is (2a+1, 2b+1).
struct DualEdge {
  Orientation orientation = Orientation::Horizontal;
  int x2 = 1;
  int y2 = 1;

  friend constexpr auto operator<=>(const DualEdge&, const DualEdge&) = default;
};

/// Dual endpoints in doubled coordinates, anchor first.
constexpr std::pair<std::pair<int, int>, std::pair<int, int>> dual_endpoints2(const DualEdge& d) {
  if (d.orientation == Orientation::Horizontal) return {{d.x2, d.y2}, {d.x2 + 2, d.y2}};
  return {{d.x2, d.y2}, {d.x2, d.y2 + 2}};
}

/// The dual edge bisecting e.
constexpr DualEdge dual_of(const Edge& e) {
  const Vertex& a = e.anchor;
  if (e.orientation == Orientation::Horizontal)
    return DualEdge{Orientation::Vertical, 2 * a.x + 1, 2 * a.y - 1};
  return DualEdge{Orientation::Horizontal, 2 * a.x - 1, 2 * a.y + 1};
}

/// The primal edge bisected by d; inverse of dual_of(Edge).
constexpr Edge dual_of(const DualEdge& d) {
  if (d.orientation == Orientation::Vertical)
    return Edge{Orientation::Horizontal, Vertex{(d.x2 - 1) / 2, (d.y2 + 1) / 2}};
  return Edge{Orientation::Vertical, Vertex{(d.x2 + 1) / 2, (d.y2 - 1) / 2}};
}

/// Closed axis-aligned box of lattice vertices. An edge is in the box iff both
/// of its endpoints are.
class LatticeBox {
 public:
  LatticeBox() = default;
  LatticeBox(int x_min, int x_max, int y_min, int y_max)
      : x_min_(x_min), x_max_(x_max), y_min_(y_min), y_max_(y_max) {
    if (x_min > x_max || y_min > y_max) throw Error("LatticeBox: empty extent");
  }

  /// [-h, h]^2 centred at c.
  static LatticeBox centered(int half_width, Vertex c = {}) {
    return {c.x - half_width, c.x + half_width, c.y - half_width, c.y + half_width};
  }

  int x_min() const { return x_min_; }
  int x_max() const { return x_max_; }
  int y_min() const { return y_min_; }
  int y_max() const { return y_max_; }
  int width() const { return x_max_ - x_min_ + 1; }
  int height() const { return y_max_ - y_min_ + 1; }
  std::size_t vertex_count() const { return std::size_t(width()) * std::size_t(height()); }
  std::size_t edge_count() const {
    return std::size_t(width() - 1) * height() + std::size_t(height() - 1) * width();
  }

  bool contains(const Vertex& v) const {
    return v.x >= x_min_ && v.x <= x_max_ && v.y >= y_min_ && v.y <= y_max_;
  }
  bool contains(const Edge& e) const {
    const auto [a, b] = edge_endpoints(e);
    return contains(a) && contains(b);
  }
  bool contains(const LatticeBox& o) const {
    return o.x_min_ >= x_min_ && o.x_max_ <= x_max_ && o.y_min_ >= y_min_ && o.y_max_ <= y_max_;
  }
  /// Strict interior: not on the boundary.
  bool interior(const Vertex& v) const {
    return v.x > x_min_ && v.x < x_max_ && v.y > y_min_ && v.y < y_max_;
  }
  bool on_boundary(const Vertex& v) const { return contains(v) && !interior(v); }

  /// Row-major vertex index.
  std::size_t index(const Vertex& v) const {
    return std::size_t(v.y - y_min_) * std::size_t(width()) + std::size_t(v.x - x_min_);
  }
  Vertex vertex(std::size_t i) const {
    const int w = width();
    return Vertex{x_min_ + int(i % std::size_t(w)), y_min_ + int(i / std::size_t(w))};
  }

  /// In-box edges in canonical order: anchors row-major, Horizontal before
  /// Vertical at each anchor.
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(edge_count());
    for (int y = y_min_; y <= y_max_; ++y)
      for (int x = x_min_; x <= x_max_; ++x) {
        if (x < x_max_) out.push_back({Orientation::Horizontal, {x, y}});
        if (y < y_max_) out.push_back({Orientation::Vertical, {x, y}});
      }
    return out;
  }

  friend bool operator==(const LatticeBox&, const LatticeBox&) = default;

 private:
  int x_min_ = 0, x_max_ = 0, y_min_ = 0, y_max_ = 0;
};

inline std::ostream& operator<<(std::ostream& os, const LatticeBox& b) {
  return os << '[' << b.x_min() << ',' << b.x_max() << "]x[" << b.y_min() << ',' << b.y_max()
            << ']';
}

/// Closed outer box minus the open interior of the inner box, so the inner
/// boundary belongs to the annulus.
class Annulus {
 public:
  Annulus(LatticeBox outer, LatticeBox inner) : outer_(outer), inner_(inner) {
    const bool strict = outer.x_min() < inner.x_min() && outer.x_max() > inner.x_max() &&
                        outer.y_min() < inner.y_min() && outer.y_max() > inner.y_max();
    const bool centred = outer.x_min() + outer.x_max() == inner.x_min() + inner.x_max() &&
                         outer.y_min() + outer.y_max() == inner.y_min() + inner.y_max();
    if (!strict || !centred) throw Error("Annulus: inner box must be strictly inside and concentric");
  }

  const LatticeBox& outer() const { return outer_; }
  const LatticeBox& inner() const { return inner_; }

  bool contains(const Vertex& v) const { return outer_.contains(v) && !inner_.interior(v); }
  bool contains(const Edge& e) const {
    const auto [a, b] = edge_endpoints(e);
    return contains(a) && contains(b);
  }

 private:
  LatticeBox outer_;
  LatticeBox inner_;
};

/// round(n^(1-delta1)), at least 1.
inline int annulus_base_scale(int n, double delta1) {
  const double raw = std::pow(double(n), 1.0 - delta1);
  return std::max(1, int(std::lround(raw)));
}

/// Dyadic annuli A_1..A_k around the origin: A_i = [-2^i b, 2^i b]^2 minus
/// [-2^(i-1) b, 2^(i-1) b]^2 with b = annulus_base_scale(n, delta1) and k the
/// largest index with 2^k b <= n.
inline std::vector<Annulus> annulus_sequence(int n, double delta1) {
  if (n < 4) throw Error("annulus_sequence: n must be >= 4");
  if (!(delta1 > 0.0 && delta1 < 1.0)) throw Error("annulus_sequence: delta1 must lie in (0,1)");
  const int base = annulus_base_scale(n, delta1);
  int k = 0;
  while ((std::int64_t(base) << (k + 1)) <= n) ++k;
  if (k < 3) throw Error("annulus_sequence: fewer than 3 annuli (k=" + std::to_string(k) + ")");
  std::vector<Annulus> out;
  out.reserve(std::size_t(k));
  for (int i = 1; i <= k; ++i)
    out.emplace_back(LatticeBox::centered(base << i), LatticeBox::centered(base << (i - 1)));
  return out;
}

/// Self-avoiding lattice path, or a circuit (first vertex repeated at the end,
/// all others distinct).
class LatticePath {
 public:
  LatticePath() = default;

  static LatticePath path(std::vector<Vertex> vs) {
    check_steps(vs);
    std::unordered_set<Vertex, VertexHash> seen;
    for (const auto& v : vs)
      if (!seen.insert(v).second) throw Error("LatticePath: vertex repeated");
    return LatticePath(std::move(vs), false);
  }

  static LatticePath circuit(std::vector<Vertex> vs) {
    if (vs.size() < 5 || vs.front() != vs.back())
      throw Error("LatticePath: circuit must close on its first vertex");
    check_steps(vs);
    std::unordered_set<Vertex, VertexHash> seen;
    for (std::size_t i = 0; i + 1 < vs.size(); ++i)
      if (!seen.insert(vs[i]).second) throw Error("LatticePath: circuit repeats a vertex");
    return LatticePath(std::move(vs), true);
  }

  const std::vector<Vertex>& vertices() const { return vertices_; }
  bool closed() const { return closed_; }
  bool empty() const { return vertices_.size() <= 1; }
  /// Number of edges.
  std::size_t length() const { return vertices_.empty() ? 0 : vertices_.size() - 1; }

  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    for (std::size_t i = 0; i + 1 < vertices_.size(); ++i)
      out.push_back(edge_between(vertices_[i], vertices_[i + 1]));
    return out;
  }

 private:
  LatticePath(std::vector<Vertex> vs, bool closed) : vertices_(std::move(vs)), closed_(closed) {}

  static void check_steps(const std::vector<Vertex>& vs) {
    for (std::size_t i = 0; i + 1 < vs.size(); ++i)
      if (!adjacent(vs[i], vs[i + 1])) throw Error("LatticePath: consecutive vertices not adjacent");
  }

  std::vector<Vertex> vertices_;
  bool closed_ = false;
};

/// One vertex per line, `x y`.
inline std::string to_vertex_list(const LatticePath& p) {
  std::string out;
  for (const auto& v : p.vertices()) out += std::to_string(v.x) + ' ' + std::to_string(v.y) + '\n';
  return out;
}

}  // namespace fpp
