#pragma once

#include <algorithm>
#include <array>
#include <deque>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "fpp/lattice.hpp"
#include "fpp/random_field.hpp"

namespace fpp {

enum class CrossingDirection { LeftRight, TopBottom };

struct Crossing {
  LatticePath path;
  LatticeBox box;
  CrossingDirection direction = CrossingDirection::LeftRight;
};

/// Vertex partition of a box relative to a left-right crossing. Crossing
/// vertices belong to the lower part.
struct RegionSplit {
  LatticeBox box;
  std::vector<std::uint8_t> upper;  // per box vertex index

  bool is_upper(const Vertex& v) const { return box.contains(v) && upper[box.index(v)] != 0; }
  bool is_lower(const Vertex& v) const { return box.contains(v) && upper[box.index(v)] == 0; }
  std::size_t upper_count() const { return std::size_t(std::count(upper.begin(), upper.end(), 1)); }
};

/// Q_u(M) = [M u1, M u1 + M] x [M u2, M u2 + M].
struct UnitSquare {
  Vertex index;
  int side = 1;

  Vertex corner() const { return {side * index.x, side * index.y}; }
  friend constexpr auto operator<=>(const UnitSquare&, const UnitSquare&) = default;
};

enum class CircuitKind { Innermost, Outermost };

struct AnnulusCircuit {
  LatticePath circuit;
  Annulus annulus;
  CircuitKind kind;
};

namespace detail {

enum class Step : std::uint8_t { East = 0, North = 1, West = 2, South = 3 };

constexpr Vertex advance(const Vertex& v, Step s) {
  switch (s) {
    case Step::East: return {v.x + 1, v.y};
    case Step::North: return {v.x, v.y + 1};
    case Step::West: return {v.x - 1, v.y};
    default: return {v.x, v.y - 1};
  }
}
constexpr Step turn_right(Step s) { return Step((int(s) + 3) % 4); }
constexpr Step turn_left(Step s) { return Step((int(s) + 1) % 4); }

/// Faces on the left and right of a unit step, as lower-left corners.
constexpr std::pair<Vertex, Vertex> step_faces(const Vertex& v, Step s) {
  switch (s) {
    case Step::East: return {{v.x, v.y}, {v.x, v.y - 1}};
    case Step::North: return {{v.x - 1, v.y}, {v.x, v.y}};
    case Step::West: return {{v.x - 1, v.y - 1}, {v.x - 1, v.y}};
    default: return {{v.x, v.y - 1}, {v.x - 1, v.y - 1}};
  }
}

/// Rectangular grid of faces; face (a,b) is the unit square with lower-left
/// corner (a,b).
class FaceGrid {
 public:
  FaceGrid(int a0, int a1, int b0, int b1) : a0_(a0), a1_(a1), b0_(b0), b1_(b1) {}
  bool contains(const Vertex& f) const { return f.x >= a0_ && f.x <= a1_ && f.y >= b0_ && f.y <= b1_; }
  std::size_t size() const { return std::size_t(a1_ - a0_ + 1) * std::size_t(b1_ - b0_ + 1); }
  std::size_t index(const Vertex& f) const {
    return std::size_t(f.y - b0_) * std::size_t(a1_ - a0_ + 1) + std::size_t(f.x - a0_);
  }
  Vertex face(std::size_t i) const {
    const int w = a1_ - a0_ + 1;
    return {a0_ + int(i % std::size_t(w)), b0_ + int(i / std::size_t(w))};
  }
  int a0() const { return a0_; }
  int a1() const { return a1_; }
  int b0() const { return b0_; }
  int b1() const { return b1_; }

 private:
  int a0_, a1_, b0_, b1_;
};

/// The primal edge crossed when moving from face f one step in direction s.
constexpr Edge crossed_edge(const Vertex& f, Step s) {
  switch (s) {
    case Step::East: return {Orientation::Vertical, {f.x + 1, f.y}};
    case Step::North: return {Orientation::Horizontal, {f.x, f.y + 1}};
    case Step::West: return {Orientation::Vertical, {f.x, f.y}};
    default: return {Orientation::Horizontal, {f.x, f.y}};
  }
}

constexpr std::array<Step, 4> kSteps{Step::East, Step::North, Step::West, Step::South};

/// Flood fill over faces. `move(from, step, to)` decides whether a move is
/// allowed; `blocked` faces are never entered.
template <class Move>
std::vector<std::uint8_t> flood_faces(const FaceGrid& g, const std::vector<std::size_t>& seeds,
                                      const std::vector<std::uint8_t>* blocked, Move&& move) {
  std::vector<std::uint8_t> mark(g.size(), 0);
  std::vector<std::size_t> stack;
  for (auto s : seeds)
    if (!mark[s] && !(blocked && (*blocked)[s])) {
      mark[s] = 1;
      stack.push_back(s);
    }
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    const Vertex f = g.face(i);
    for (Step s : kSteps) {
      const Vertex t = advance(f, s);
      if (!g.contains(t)) continue;
      const std::size_t j = g.index(t);
      if (mark[j] || (blocked && (*blocked)[j])) continue;
      if (!move(f, s, t)) continue;
      mark[j] = 1;
      stack.push_back(j);
    }
  }
  return mark;
}

/// Walks the interface between `right` faces (kept on the right-hand side)
/// and the rest, starting with a step `first` from `start`, until `stop`.
template <class RightSide, class Stop>
std::vector<Vertex> trace_interface(const FaceGrid& g, Vertex start, Step first, RightSide&& right,
                                    Stop&& stop, std::size_t max_steps) {
  auto valid = [&](const Vertex& v, Step s) {
    const auto [lf, rf] = step_faces(v, s);
    if (!g.contains(lf) || !g.contains(rf)) return false;
    return right(rf) && !right(lf);
  };
  std::vector<Vertex> out{start};
  Vertex v = start;
  Step heading = first;
  if (!valid(v, heading)) throw Error("trace_interface: start is not on the interface");
  for (std::size_t n = 0; n < max_steps; ++n) {
    v = advance(v, heading);
    out.push_back(v);
    if (stop(v)) return out;
    const std::array<Step, 3> tries{turn_right(heading), heading, turn_left(heading)};
    bool moved = false;
    for (Step s : tries)
      if (valid(v, s)) {
        heading = s;
        moved = true;
        break;
      }
    if (!moved) throw Error("trace_interface: interface ended unexpectedly");
  }
  throw Error("trace_interface: step limit exceeded");
}

/// Face grid of a left-right crossing problem: the faces of the box plus one
/// row below (the bottom line) and one above (the top line).
inline FaceGrid crossing_faces(const LatticeBox& box) {
  return FaceGrid(box.x_min(), box.x_max() - 1, box.y_min() - 1, box.y_max());
}

inline bool is_line_face(const LatticeBox& box, const Vertex& f) {
  return f.y < box.y_min() || f.y >= box.y_max();
}

}  // namespace detail

inline bool has_open_crossing(const Configuration& c, const LatticeBox& box,
                              CrossingDirection dir = CrossingDirection::LeftRight) {
  if (!c.box().contains(box)) throw Error("has_open_crossing: box outside configuration");
  std::vector<std::uint8_t> seen(box.vertex_count(), 0);
  std::vector<Vertex> stack;
  auto start = [&](Vertex v) {
    seen[box.index(v)] = 1;
    stack.push_back(v);
  };
  if (dir == CrossingDirection::LeftRight)
    for (int y = box.y_min(); y <= box.y_max(); ++y) start({box.x_min(), y});
  else
    for (int x = box.x_min(); x <= box.x_max(); ++x) start({x, box.y_max()});
  while (!stack.empty()) {
    const Vertex v = stack.back();
    stack.pop_back();
    if (dir == CrossingDirection::LeftRight ? v.x == box.x_max() : v.y == box.y_min()) return true;
    for (auto s : detail::kSteps) {
      const Vertex w = detail::advance(v, s);
      if (!box.contains(w) || seen[box.index(w)]) continue;
      if (c.ticks_unchecked(edge_between(v, w)) != 0) continue;
      seen[box.index(w)] = 1;
      stack.push_back(w);
    }
  }
  return false;
}

namespace detail {

/// Closed-dual region grown from the bottom line of the box. Empty optional
/// when it reaches the top line (no left-right open crossing).
inline std::optional<std::vector<std::uint8_t>> closed_region_from_bottom(
    const Configuration& c, const LatticeBox& box, const FaceGrid& g,
    const std::vector<std::uint8_t>* restrict_to = nullptr) {
  std::vector<std::size_t> seeds;
  for (int a = g.a0(); a <= g.a1(); ++a) seeds.push_back(g.index({a, g.b0()}));
  std::vector<std::uint8_t> outside;
  if (restrict_to) {
    outside.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) outside[i] = !(*restrict_to)[i];
  }
  auto mark = flood_faces(g, seeds, restrict_to ? &outside : nullptr,
                          [&](const Vertex& f, Step s, const Vertex& t) {
                            if (is_line_face(box, f) && is_line_face(box, t) && f.y == t.y) return true;
                            return c.ticks_unchecked(crossed_edge(f, s)) != 0;
                          });
  if (!restrict_to)
    for (int a = g.a0(); a <= g.a1(); ++a)
      if (mark[g.index({a, g.b1()})]) return std::nullopt;
  return mark;
}

}  // namespace detail

/// Lowest left-right open crossing: the upper boundary of the closed dual
/// region grown from below the box.
inline std::optional<Crossing> lowest_crossing(const Configuration& c, const LatticeBox& box) {
  if (!c.box().contains(box)) throw Error("lowest_crossing: box outside configuration");
  if (box.width() < 2) throw Error("lowest_crossing: box needs at least two columns");
  using namespace detail;
  const FaceGrid g = crossing_faces(box);
  auto below = closed_region_from_bottom(c, box, g);
  if (!below) return std::nullopt;
  std::vector<std::size_t> top;
  for (int a = g.a0(); a <= g.a1(); ++a) top.push_back(g.index({a, g.b1()}));
  const auto above = flood_faces(g, top, &*below, [](const Vertex&, Step, const Vertex&) { return true; });
  auto right = [&](const Vertex& f) { return above[g.index(f)] == 0; };
  int start_y = box.y_min();
  for (int b = g.b0(); b < g.b1(); ++b)
    if (right({box.x_min(), b}) && !right({box.x_min(), b + 1})) {
      start_y = b + 1;
      break;
    }
  auto path = trace_interface(
      g, Vertex{box.x_min(), start_y}, Step::East, right,
      [&](const Vertex& v) { return v.x == box.x_max(); }, box.edge_count() + 1);
  return Crossing{LatticePath::path(std::move(path)), box, CrossingDirection::LeftRight};
}

namespace detail {

inline void check_crossing(const Crossing& cr) {
  const auto& vs = cr.path.vertices();
  if (cr.direction != CrossingDirection::LeftRight) throw Error("crossing: only left-right crossings supported");
  if (vs.empty() || vs.front().x != cr.box.x_min() || vs.back().x != cr.box.x_max())
    throw Error("crossing: endpoints must lie on the left and right sides");
  for (const auto& v : vs)
    if (!cr.box.contains(v)) throw Error("crossing: path leaves the box");
}

/// Faces of the crossing problem lying below the crossing (geometric; moves
/// never pass through a crossing edge).
inline std::vector<std::uint8_t> faces_below(const Crossing& cr, const FaceGrid& g) {
  std::unordered_set<Edge, EdgeHash> on_path;
  for (const auto& e : cr.path.edges()) on_path.insert(e);
  std::vector<std::size_t> seeds;
  for (int a = g.a0(); a <= g.a1(); ++a) seeds.push_back(g.index({a, g.b0()}));
  const LatticeBox& box = cr.box;
  return flood_faces(g, seeds, nullptr, [&](const Vertex& f, Step s, const Vertex& t) {
    if (is_line_face(box, f) && is_line_face(box, t) && f.y == t.y) return true;
    return !on_path.contains(crossed_edge(f, s));
  });
}

}  // namespace detail

/// True iff the crossing is the lowest one: each crossing edge's lower dual
/// endpoint joins the line below the box through closed dual edges that stay
/// at or below the crossing. Throws if the crossing is not open.
inline bool verify_three_arm(const Configuration& c, const Crossing& cr, const LatticeBox& box) {
  using namespace detail;
  if (!(cr.box == box)) throw Error("verify_three_arm: crossing belongs to a different box");
  check_crossing(cr);
  const auto edges = cr.path.edges();
  for (const auto& e : edges)
    if (c.ticks(e) != 0) throw Error("verify_three_arm: crossing is not open");
  const FaceGrid g = crossing_faces(box);
  const auto lower = faces_below(cr, g);
  const auto arm = closed_region_from_bottom(c, box, g, &lower);
  for (const auto& e : edges) {
    const auto [a, b] = edge_endpoints(e);
    const Vertex f1 = e.orientation == Orientation::Horizontal ? Vertex{a.x, a.y - 1} : Vertex{a.x - 1, a.y};
    const Vertex f2 = a;
    std::optional<Vertex> low;
    for (const Vertex& f : {f1, f2})
      if (g.contains(f) && lower[g.index(f)]) low = f;
    if (!low || !(*arm)[g.index(*low)]) return false;
  }
  return true;
}

/// Upper/lower vertex partition. Vertices off the crossing are classified by
/// connectivity to the top or bottom side avoiding crossing vertices; the few
/// enclosed by the crossing alone fall back to the side of their faces.
inline RegionSplit region_split(const Crossing& cr, const LatticeBox& box) {
  using namespace detail;
  if (!(cr.box == box)) throw Error("region_split: crossing belongs to a different box");
  check_crossing(cr);
  RegionSplit split{box, std::vector<std::uint8_t>(box.vertex_count(), 0)};
  std::vector<std::uint8_t> on_path(box.vertex_count(), 0), seen(box.vertex_count(), 0);
  for (const auto& v : cr.path.vertices()) on_path[box.index(v)] = 1;
  auto flood = [&](int y, std::uint8_t label) {
    std::vector<Vertex> stack;
    for (int x = box.x_min(); x <= box.x_max(); ++x) {
      const std::size_t i = box.index({x, y});
      if (!on_path[i] && !seen[i]) {
        seen[i] = 1;
        split.upper[i] = label;
        stack.push_back({x, y});
      }
    }
    while (!stack.empty()) {
      const Vertex v = stack.back();
      stack.pop_back();
      for (auto s : kSteps) {
        const Vertex w = advance(v, s);
        if (!box.contains(w)) continue;
        const std::size_t j = box.index(w);
        if (on_path[j] || seen[j]) continue;
        seen[j] = 1;
        split.upper[j] = label;
        stack.push_back(w);
      }
    }
  };
  flood(box.y_max(), 1);
  flood(box.y_min(), 0);
  bool leftovers = false;
  for (std::size_t i = 0; i < seen.size(); ++i) leftovers |= !seen[i] && !on_path[i];
  if (leftovers) {
    const FaceGrid g = crossing_faces(box);
    const auto lower = faces_below(cr, g);
    for (std::size_t i = 0; i < seen.size(); ++i) {
      if (seen[i] || on_path[i]) continue;
      const Vertex v = box.vertex(i);
      for (const Vertex f : {Vertex{v.x, v.y}, Vertex{v.x - 1, v.y}, Vertex{v.x, v.y - 1}, Vertex{v.x - 1, v.y - 1}})
        if (g.contains(f)) {
          split.upper[i] = lower[g.index(f)] ? 0 : 1;
          break;
        }
    }
  }
  return split;
}

namespace detail {

inline std::int64_t square_dist2(const UnitSquare& a, const UnitSquare& b) {
  const Vertex p = a.corner(), q = b.corner();
  const std::int64_t dx = std::max({0, q.x - (p.x + a.side), p.x - (q.x + b.side)});
  const std::int64_t dy = std::max({0, q.y - (p.y + a.side), p.y - (q.y + b.side)});
  return dx * dx + dy * dy;
}

}  // namespace detail

/// Every M-square inside the box, wholly in the upper part, at vertex-set
/// distance exactly 1 from the crossing; ordered by the first crossing vertex
/// they touch, then row-major.
inline std::vector<UnitSquare> all_good_squares(const Crossing& cr, const RegionSplit& split, int M = 1) {
  if (M < 1) throw Error("good_squares: side must be positive");
  const LatticeBox& box = cr.box;
  std::unordered_map<Vertex, std::size_t, VertexHash> position;
  const auto& vs = cr.path.vertices();
  for (std::size_t i = 0; i < vs.size(); ++i) position.emplace(vs[i], i);

  auto floor_div = [](int a, int m) { return a >= 0 ? a / m : -((-a + m - 1) / m); };
  std::vector<std::pair<std::size_t, UnitSquare>> found;
  for (int u2 = floor_div(box.y_min(), M); M * u2 + M <= box.y_max(); ++u2)
    for (int u1 = floor_div(box.x_min(), M); M * u1 + M <= box.x_max(); ++u1) {
      const UnitSquare sq{{u1, u2}, M};
      const Vertex c = sq.corner();
      if (!box.contains(c)) continue;
      bool upper = true;
      std::size_t first = SIZE_MAX;
      for (int dy = 0; dy <= M && upper; ++dy)
        for (int dx = 0; dx <= M && upper; ++dx) {
          const Vertex v{c.x + dx, c.y + dy};
          if (!split.is_upper(v)) {
            upper = false;
            break;
          }
          if (dx != 0 && dx != M && dy != 0 && dy != M) continue;
          for (auto s : detail::kSteps) {
            auto it = position.find(detail::advance(v, s));
            if (it != position.end()) first = std::min(first, it->second);
          }
        }
      if (upper && first != SIZE_MAX) found.emplace_back(first, sq);
    }
  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return row_major_less(a.second.corner(), b.second.corner());
  });
  std::vector<UnitSquare> out;
  out.reserve(found.size());
  for (auto& f : found) out.push_back(f.second);
  return out;
}

/// Greedy subsequence, in crossing order, whose squares are pairwise at
/// distance >= 3.
inline std::vector<UnitSquare> thin_three_disjoint(const std::vector<UnitSquare>& squares) {
  std::vector<UnitSquare> kept;
  std::unordered_map<Vertex, std::vector<std::size_t>, VertexHash> buckets;
  constexpr int kCell = 8;
  auto cell_of = [](const Vertex& p) {
    auto fd = [](int a) { return a >= 0 ? a / kCell : -((-a + kCell - 1) / kCell); };
    return Vertex{fd(p.x), fd(p.y)};
  };
  for (const auto& sq : squares) {
    const int reach = 1 + (sq.side + 3) / kCell;
    const Vertex cc = cell_of(sq.corner());
    bool ok = true;
    for (int dy = -reach; dy <= reach && ok; ++dy)
      for (int dx = -reach; dx <= reach && ok; ++dx) {
        auto it = buckets.find({cc.x + dx, cc.y + dy});
        if (it == buckets.end()) continue;
        for (auto k : it->second)
          if (detail::square_dist2(kept[k], sq) < 9) {
            ok = false;
            break;
          }
      }
    if (!ok) continue;
    buckets[cc].push_back(kept.size());
    kept.push_back(sq);
  }
  return kept;
}

/// 3-disjoint good squares of the crossing.
inline std::vector<UnitSquare> good_squares(const Crossing& cr, const LatticeBox& box, int M = 1) {
  return thin_three_disjoint(all_good_squares(cr, region_split(cr, box), M));
}

/// Unit square S' sharing one edge with a good square S and the opposite edge
/// with the crossing. `upper_a`/`upper_b` are the shared vertices with S,
/// `low_a`/`low_b` the crossing vertices, with low_a-upper_a and low_b-upper_b
/// the two legs.
struct Companion {
  UnitSquare square;
  Edge crossing_edge;
  Vertex low_a, low_b, upper_a, upper_b;
};

inline std::optional<Companion> companion_square(const Crossing& cr, const UnitSquare& s) {
  if (s.side != 1) throw Error("companion_square: unit squares only");
  std::unordered_set<Edge, EdgeHash> path_edges;
  for (const auto& e : cr.path.edges()) path_edges.insert(e);
  const Vertex c = s.corner();
  std::optional<Companion> best;
  // Shift direction -> (shared edge of S, far edge of S').
  const std::array<Vertex, 4> shifts{Vertex{0, -1}, Vertex{-1, 0}, Vertex{1, 0}, Vertex{0, 1}};
  for (const Vertex& d : shifts) {
    const Vertex sc{c.x + d.x, c.y + d.y};
    Vertex ua, ub, la, lb;
    if (d.y != 0) {
      const int shared_y = d.y < 0 ? c.y : c.y + 1;
      const int far_y = d.y < 0 ? c.y - 1 : c.y + 2;
      ua = {c.x, shared_y};
      ub = {c.x + 1, shared_y};
      la = {c.x, far_y};
      lb = {c.x + 1, far_y};
    } else {
      const int shared_x = d.x < 0 ? c.x : c.x + 1;
      const int far_x = d.x < 0 ? c.x - 1 : c.x + 2;
      ua = {shared_x, c.y};
      ub = {shared_x, c.y + 1};
      la = {far_x, c.y};
      lb = {far_x, c.y + 1};
    }
    const Edge far = edge_between(la, lb);
    if (!path_edges.contains(far)) continue;
    Companion cand{UnitSquare{sc, 1}, far, la, lb, ua, ub};
    if (!best || row_major_less(sc, best->square.corner())) best = cand;
  }
  return best;
}

/// Good squares whose companion's three non-crossing edges are open.
inline std::vector<UnitSquare> accessible_squares(const Configuration& c, const Crossing& cr,
                                                  const std::vector<UnitSquare>& goods) {
  std::vector<UnitSquare> out;
  for (const auto& s : goods) {
    const auto comp = companion_square(cr, s);
    if (!comp) continue;
    const bool open = c.ticks(edge_between(comp->low_a, comp->upper_a)) == 0 &&
                      c.ticks(edge_between(comp->upper_a, comp->upper_b)) == 0 &&
                      c.ticks(edge_between(comp->upper_b, comp->low_b)) == 0;
    if (open) out.push_back(s);
  }
  return out;
}

/// Odd crossing parity of a rightward ray from the centre of face f.
inline bool circuit_encloses_face(const LatticePath& circuit, const Vertex& f) {
  int hits = 0;
  for (const auto& e : circuit.edges())
    if (e.orientation == Orientation::Vertical && e.anchor.y == f.y && e.anchor.x > f.x) ++hits;
  return hits % 2 == 1;
}

/// True iff every face of the inner box is enclosed by the circuit.
inline bool circuit_surrounds(const LatticePath& circuit, const LatticeBox& inner) {
  if (!circuit.closed()) return false;
  if (inner.width() < 2 || inner.height() < 2) {
    // Degenerate inner box: test the faces around its vertices.
    for (int y = inner.y_min(); y <= inner.y_max(); ++y)
      for (int x = inner.x_min(); x <= inner.x_max(); ++x)
        for (const Vertex f : {Vertex{x, y}, Vertex{x - 1, y}, Vertex{x, y - 1}, Vertex{x - 1, y - 1}})
          if (!circuit_encloses_face(circuit, f)) return false;
    return true;
  }
  for (int b = inner.y_min(); b < inner.y_max(); ++b)
    for (int a = inner.x_min(); a < inner.x_max(); ++a)
      if (!circuit_encloses_face(circuit, {a, b})) return false;
  return true;
}

namespace detail {

inline FaceGrid annulus_faces(const Annulus& an) {
  const auto& o = an.outer();
  return FaceGrid(o.x_min() - 1, o.x_max(), o.y_min() - 1, o.y_max());
}

inline bool outside_face(const Annulus& an, const Vertex& f) {
  const auto& o = an.outer();
  return f.x < o.x_min() || f.x >= o.x_max() || f.y < o.y_min() || f.y >= o.y_max();
}

inline bool inner_face(const Annulus& an, const Vertex& f) {
  const auto& i = an.inner();
  return f.x >= i.x_min() && f.x < i.x_max() && f.y >= i.y_min() && f.y < i.y_max();
}

/// Traces the boundary of the region `inside` (kept on the right, clockwise)
/// as a closed circuit.
template <class Inside>
LatticePath trace_region_boundary(const FaceGrid& g, Inside&& inside) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vertex f = g.face(i);
    const Vertex up{f.x, f.y + 1};
    if (!inside(f) || !g.contains(up) || inside(up)) continue;
    const Vertex start{f.x, f.y + 1};
    auto path = trace_interface(
        g, start, Step::East, inside, [&](const Vertex& v) { return v == start; }, g.size() * 4 + 4);
    return LatticePath::circuit(std::move(path));
  }
  throw Error("trace_region_boundary: region has no boundary");
}

}  // namespace detail

/// Innermost open circuit in the annulus surrounding the inner box: the outer
/// boundary of the closed dual cluster of the inner box.
inline std::optional<AnnulusCircuit> innermost_circuit(const Configuration& c, const Annulus& an) {
  using namespace detail;
  if (!c.box().contains(an.outer())) throw Error("innermost_circuit: annulus outside configuration");
  const FaceGrid g = annulus_faces(an);
  std::vector<std::size_t> seeds;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (inner_face(an, g.face(i))) seeds.push_back(i);
  const auto grown = flood_faces(g, seeds, nullptr, [&](const Vertex& f, Step s, const Vertex& t) {
    if (inner_face(an, f) && inner_face(an, t)) return true;
    if (outside_face(an, f)) return false;
    return c.ticks_unchecked(crossed_edge(f, s)) != 0;
  });
  std::vector<std::size_t> outer_seeds;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!outside_face(an, g.face(i))) continue;
    if (grown[i]) return std::nullopt;
    outer_seeds.push_back(i);
  }
  const auto reach_out = flood_faces(g, outer_seeds, &grown, [](const Vertex&, Step, const Vertex&) { return true; });
  auto inside = [&](const Vertex& f) { return reach_out[g.index(f)] == 0; };
  return AnnulusCircuit{trace_region_boundary(g, inside), an, CircuitKind::Innermost};
}

/// Outermost open circuit: the inner boundary of the closed dual cluster grown
/// from outside the annulus.
inline std::optional<AnnulusCircuit> outermost_circuit(const Configuration& c, const Annulus& an) {
  using namespace detail;
  if (!c.box().contains(an.outer())) throw Error("outermost_circuit: annulus outside configuration");
  const FaceGrid g = annulus_faces(an);
  std::vector<std::size_t> seeds, inner_seeds;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vertex f = g.face(i);
    if (outside_face(an, f)) seeds.push_back(i);
    if (inner_face(an, f)) inner_seeds.push_back(i);
  }
  const auto grown = flood_faces(g, seeds, nullptr, [&](const Vertex& f, Step s, const Vertex& t) {
    if (outside_face(an, f) && outside_face(an, t)) return true;
    if (inner_face(an, t) && inner_face(an, f)) return true;
    return c.ticks_unchecked(crossed_edge(f, s)) != 0;
  });
  for (auto i : inner_seeds)
    if (grown[i]) return std::nullopt;
  const auto reach_in = flood_faces(g, inner_seeds, &grown, [](const Vertex&, Step, const Vertex&) { return true; });
  auto inside = [&](const Vertex& f) { return reach_in[g.index(f)] != 0; };
  return AnnulusCircuit{trace_region_boundary(g, inside), an, CircuitKind::Outermost};
}

/// Rectangle hosting the crossing of event E_i (1-based annulus index):
/// [r_{i-1}^in, r_{i+1}^out] x [-r_{i-1}^in, r_{i-1}^in].
inline LatticeBox event_rectangle(const std::vector<Annulus>& annuli, int i) {
  if (i - 1 < 1 || i + 1 > int(annuli.size())) throw Error("event index out of range");
  const int r_in = annuli[std::size_t(i - 2)].inner().x_max();
  const int r_out = annuli[std::size_t(i)].outer().x_max();
  return LatticeBox(r_in, r_out, -r_in, r_in);
}

/// Open circuits in A_{i-1} and A_{i+1} and a left-right open crossing of the
/// event rectangle.
inline bool detect_event_E(const Configuration& c, int i, const std::vector<Annulus>& annuli,
                           const LatticeBox& rectangle) {
  if (i - 1 < 1 || i + 1 > int(annuli.size())) throw Error("detect_event_E: index out of range");
  return innermost_circuit(c, annuli[std::size_t(i - 2)]).has_value() &&
         outermost_circuit(c, annuli[std::size_t(i)]).has_value() && has_open_crossing(c, rectangle);
}

inline bool detect_event_E(const Configuration& c, int i, const std::vector<Annulus>& annuli) {
  return detect_event_E(c, i, annuli, event_rectangle(annuli, i));
}

}  // namespace fpp
