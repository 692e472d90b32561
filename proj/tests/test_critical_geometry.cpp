#include <gtest/gtest.h>

#include <functional>
#include <map>
#include <random>
#include <set>

#include "fpp/critical_geometry.hpp"

using namespace fpp;

namespace {

Configuration constant(const LatticeBox& b, Ticks t) {
  return Configuration::from_function(b, EdgeDistribution::bernoulli(0.5), [t](const Edge&) { return t; });
}

Configuration coin_flips(const LatticeBox& b, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution open(p);
  return Configuration::from_function(b, EdgeDistribution::bernoulli(p), [&](const Edge&) { return Ticks(open(rng) ? 0 : 1); });
}

// Faces (lower-left corners) above a left-right path, flooding from the row
// over the box without crossing path edges. Pockets cut off against a side
// of the box count as below.
std::set<Vertex> above_faces(const LatticeBox& box, const std::vector<Vertex>& path) {
  std::set<Edge> cut;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) cut.insert(edge_between(path[i], path[i + 1]));
  auto in_grid = [&](Vertex f) {
    return f.x >= box.x_min() && f.x < box.x_max() && f.y >= box.y_min() - 1 && f.y <= box.y_max();
  };
  std::set<Vertex> seen;
  std::vector<Vertex> stack;
  for (int x = box.x_min(); x < box.x_max(); ++x) {
    seen.insert({x, box.y_max()});
    stack.push_back({x, box.y_max()});
  }
  while (!stack.empty()) {
    const Vertex f = stack.back();
    stack.pop_back();
    const std::pair<Vertex, Edge> moves[] = {
        {{f.x + 1, f.y}, {Orientation::Vertical, {f.x + 1, f.y}}},
        {{f.x - 1, f.y}, {Orientation::Vertical, {f.x, f.y}}},
        {{f.x, f.y + 1}, {Orientation::Horizontal, {f.x, f.y + 1}}},
        {{f.x, f.y - 1}, {Orientation::Horizontal, {f.x, f.y}}},
    };
    for (const auto& [t, e] : moves) {
      if (!in_grid(t) || seen.count(t)) continue;
      const bool line_move = f.y == t.y && (f.y < box.y_min() || f.y >= box.y_max());
      if (!line_move && cut.count(e)) continue;
      seen.insert(t);
      stack.push_back(t);
    }
  }
  return seen;
}

// Every open self-avoiding path from the left side to the right side.
std::vector<std::vector<Vertex>> open_crossings(const Configuration& c, const LatticeBox& box) {
  std::vector<std::vector<Vertex>> out;
  std::vector<Vertex> path;
  std::set<Vertex> on;
  std::function<void(Vertex)> go = [&](Vertex v) {
    if (v.x == box.x_max()) {
      out.push_back(path);
      return;
    }
    for (Vertex d : {Vertex{1, 0}, Vertex{-1, 0}, Vertex{0, 1}, Vertex{0, -1}}) {
      const Vertex w{v.x + d.x, v.y + d.y};
      if (!box.contains(w) || on.count(w) || c.ticks(edge_between(v, w)) != 0) continue;
      path.push_back(w);
      on.insert(w);
      go(w);
      on.erase(w);
      path.pop_back();
    }
  };
  for (int y = box.y_min(); y <= box.y_max(); ++y) {
    path = {{box.x_min(), y}};
    on = {{box.x_min(), y}};
    go({box.x_min(), y});
  }
  return out;
}

// True iff the open edges among `allowed` vertices contain a cycle winding
// around the origin (ray: vertical edges from y=-1 to y=0 with x>0).
bool winding_cycle(const Configuration& c, const std::set<Vertex>& allowed) {
  std::map<Vertex, long> pot;
  for (const Vertex& s : allowed) {
    if (pot.count(s)) continue;
    pot[s] = 0;
    std::vector<Vertex> stack{s};
    while (!stack.empty()) {
      const Vertex v = stack.back();
      stack.pop_back();
      for (Vertex d : {Vertex{1, 0}, Vertex{-1, 0}, Vertex{0, 1}, Vertex{0, -1}}) {
        const Vertex w{v.x + d.x, v.y + d.y};
        if (!allowed.count(w)) continue;
        const Edge e = edge_between(v, w);
        if (c.ticks(e) != 0) continue;
        long dw = 0;
        if (e.orientation == Orientation::Vertical && e.anchor.y == -1 && e.anchor.x > 0) dw = w.y > v.y ? 1 : -1;
        const long pw = pot[v] + dw;
        auto it = pot.find(w);
        if (it == pot.end()) {
          pot[w] = pw;
          stack.push_back(w);
        } else if (it->second != pw) {
          return true;
        }
      }
    }
  }
  return false;
}

std::set<Vertex> annulus_vertices(const Annulus& an) {
  std::set<Vertex> out;
  const auto& o = an.outer();
  for (int x = o.x_min(); x <= o.x_max(); ++x)
    for (int y = o.y_min(); y <= o.y_max(); ++y)
      if (an.contains(Vertex{x, y})) out.insert({x, y});
  return out;
}

bool vertex_inside(const LatticePath& circuit, const Vertex& v) {
  // A vertex off the circuit is inside iff the face to its upper right is.
  return circuit_encloses_face(circuit, v);
}

}  // namespace

TEST(OpenCrossing, TrivialConfigurations) {
  const LatticeBox b(0, 5, 0, 3);
  EXPECT_TRUE(has_open_crossing(constant(b, 0), b));
  EXPECT_FALSE(has_open_crossing(constant(b, 1), b));
  EXPECT_TRUE(has_open_crossing(constant(b, 0), b, CrossingDirection::TopBottom));
  EXPECT_FALSE(lowest_crossing(constant(b, 1), b).has_value());
}

TEST(LowestCrossing, MinimalBelowRegionExhaustive) {
  const LatticeBox b(0, 2, 0, 1);
  const auto edges = b.edges();
  ASSERT_EQ(edges.size(), 7u);
  int with_crossing = 0;
  for (unsigned mask = 0; mask < (1u << edges.size()); ++mask) {
    std::map<Edge, Ticks> w;
    for (std::size_t i = 0; i < edges.size(); ++i) w[edges[i]] = (mask >> i) & 1u;
    const auto c = Configuration::from_function(b, EdgeDistribution::bernoulli(0.5), [&](const Edge& e) { return w.at(e); });
    const auto all = open_crossings(c, b);
    const auto low = lowest_crossing(c, b);
    ASSERT_EQ(low.has_value(), !all.empty()) << mask;
    if (!low) continue;
    ++with_crossing;
    const auto mine = above_faces(b, low->path.vertices());
    for (const auto& p : all) {
      const auto theirs = above_faces(b, p);
      EXPECT_TRUE(std::includes(mine.begin(), mine.end(), theirs.begin(), theirs.end())) << mask;
    }
  }
  EXPECT_GT(with_crossing, 10);
}

TEST(LowestCrossing, MinimalBelowRegionRandom) {
  std::mt19937_64 rng(12);
  const LatticeBox b(0, 3, 0, 2);
  int checked = 0;
  for (int r = 0; r < 3000; ++r) {
    const auto c = coin_flips(b, 0.6, rng);
    const auto all = open_crossings(c, b);
    const auto low = lowest_crossing(c, b);
    ASSERT_EQ(low.has_value(), !all.empty());
    if (!low) continue;
    ++checked;
    for (const auto& e : low->path.edges()) EXPECT_EQ(c.ticks(e), 0);
    EXPECT_EQ(low->path.vertices().front().x, b.x_min());
    EXPECT_EQ(low->path.vertices().back().x, b.x_max());
    const auto mine = above_faces(b, low->path.vertices());
    for (const auto& p : all) {
      const auto theirs = above_faces(b, p);
      if (!std::includes(mine.begin(), mine.end(), theirs.begin(), theirs.end())) {
        std::string msg;
        for (const auto& e : b.edges()) msg += std::to_string(c.ticks(e));
        msg += " low:";
        for (const auto& v : low->path.vertices()) msg += " " + std::to_string(v.x) + "," + std::to_string(v.y);
        msg += " other:";
        for (const auto& v : p) msg += " " + std::to_string(v.x) + "," + std::to_string(v.y);
        FAIL() << msg;
      }
    }
  }
  EXPECT_GT(checked, 500);
}

TEST(LowestCrossing, BottomRowOfOpenBox) {
  const LatticeBox b(2, 9, -3, 4);
  const auto low = lowest_crossing(constant(b, 0), b);
  ASSERT_TRUE(low);
  EXPECT_EQ(low->path.length(), 7u);
  for (const auto& v : low->path.vertices()) EXPECT_EQ(v.y, -3);
}

TEST(ThreeArm, LowestCrossingPassesAtCriticality) {
  const LatticeBox b(0, 32, 0, 32);
  int passed = 0;
  for (std::uint64_t r = 0; r < 100; ++r) {
    const auto c = sample_configuration(b, EdgeDistribution::bernoulli(0.5), {14, r});
    const auto low = lowest_crossing(c, b);
    if (!low) continue;
    EXPECT_TRUE(verify_three_arm(c, *low, b)) << r;
    ++passed;
  }
  EXPECT_GT(passed, 20);
}

TEST(ThreeArm, StackedRowsUpperRowFails) {
  const LatticeBox b(0, 6, 0, 3);
  const auto c = Configuration::from_function(b, EdgeDistribution::bernoulli(0.5), [](const Edge& e) -> Ticks {
    return e.orientation == Orientation::Horizontal && (e.anchor.y == 0 || e.anchor.y == 2) ? 0 : 1;
  });
  const auto low = lowest_crossing(c, b);
  ASSERT_TRUE(low);
  for (const auto& v : low->path.vertices()) EXPECT_EQ(v.y, 0);
  EXPECT_TRUE(verify_three_arm(c, *low, b));
  std::vector<Vertex> row2;
  for (int x = 0; x <= 6; ++x) row2.push_back({x, 2});
  EXPECT_FALSE(verify_three_arm(c, Crossing{LatticePath::path(row2), b}, b));
  std::vector<Vertex> row1;
  for (int x = 0; x <= 6; ++x) row1.push_back({x, 1});
  EXPECT_THROW(verify_three_arm(c, Crossing{LatticePath::path(row1), b}, b), Error);
}

TEST(RegionSplit, StraightRow) {
  const LatticeBox b(0, 4, 0, 3);
  std::vector<Vertex> row;
  for (int x = 0; x <= 4; ++x) row.push_back({x, 1});
  const auto split = region_split(Crossing{LatticePath::path(row), b}, b);
  for (std::size_t i = 0; i < b.vertex_count(); ++i) EXPECT_EQ(split.is_upper(b.vertex(i)), b.vertex(i).y >= 2);
  EXPECT_EQ(split.upper_count(), 10u);
}

TEST(GoodSquares, BottomRowInTallBox) {
  const LatticeBox b(0, 10, 0, 6);
  const auto low = lowest_crossing(constant(b, 0), b);
  ASSERT_TRUE(low);
  const auto all = all_good_squares(*low, region_split(*low, b));
  ASSERT_EQ(all.size(), 10u);
  for (int x = 0; x < 10; ++x) EXPECT_EQ(all[std::size_t(x)], (UnitSquare{{x, 1}, 1}));
  EXPECT_EQ(good_squares(*low, b), (std::vector<UnitSquare>{{{0, 1}, 1}, {{4, 1}, 1}, {{8, 1}, 1}}));
  for (const auto& s : good_squares(*low, b)) {
    const auto comp = companion_square(*low, s);
    ASSERT_TRUE(comp);
    EXPECT_EQ(comp->square, (UnitSquare{{s.index.x, 0}, 1}));
    EXPECT_EQ(comp->crossing_edge, (Edge{Orientation::Horizontal, {s.index.x, 0}}));
  }
  EXPECT_EQ(accessible_squares(constant(b, 0), *low, good_squares(*low, b)).size(), 3u);
}

TEST(GoodSquares, TopRowCrossingHasNone) {
  const LatticeBox b(0, 6, 0, 4);
  std::vector<Vertex> top;
  for (int x = 0; x <= 6; ++x) top.push_back({x, 4});
  EXPECT_TRUE(good_squares(Crossing{LatticePath::path(top), b}, b).empty());
}

TEST(GoodSquares, PairwiseThreeDisjointAndAdjacent) {
  const LatticeBox b(0, 24, 0, 24);
  for (std::uint64_t r = 0; r < 30; ++r) {
    const auto c = sample_configuration(b, EdgeDistribution::bernoulli(0.55), {15, r});
    const auto low = lowest_crossing(c, b);
    if (!low) continue;
    const auto split = region_split(*low, b);
    const auto goods = good_squares(*low, b);
    std::set<Vertex> path(low->path.vertices().begin(), low->path.vertices().end());
    for (std::size_t i = 0; i < goods.size(); ++i) {
      const Vertex k = goods[i].corner();
      bool touches = false;
      for (int dx = 0; dx <= 1; ++dx)
        for (int dy = 0; dy <= 1; ++dy) {
          const Vertex v{k.x + dx, k.y + dy};
          EXPECT_TRUE(split.is_upper(v));
          for (Vertex d : {Vertex{1, 0}, Vertex{-1, 0}, Vertex{0, 1}, Vertex{0, -1}})
            touches |= path.count({v.x + d.x, v.y + d.y}) > 0;
        }
      EXPECT_TRUE(touches);
      for (std::size_t j = 0; j < i; ++j) {
        const Vertex q = goods[j].corner();
        const int dx = std::max({0, q.x - (k.x + 1), k.x - (q.x + 1)});
        const int dy = std::max({0, q.y - (k.y + 1), k.y - (q.y + 1)});
        EXPECT_GE(dx * dx + dy * dy, 9);
      }
    }
  }
}

TEST(Circuits, AllZeroHugsTheBoundaries) {
  const Annulus an(LatticeBox::centered(6), LatticeBox::centered(3));
  const auto c = constant(LatticeBox::centered(6), 0);
  const auto in = innermost_circuit(c, an);
  const auto out = outermost_circuit(c, an);
  ASSERT_TRUE(in && out);
  EXPECT_EQ(in->circuit.length(), 24u);
  for (const auto& v : in->circuit.vertices()) EXPECT_EQ(std::max(std::abs(v.x), std::abs(v.y)), 3);
  EXPECT_EQ(out->circuit.length(), 48u);
  for (const auto& v : out->circuit.vertices()) EXPECT_EQ(std::max(std::abs(v.x), std::abs(v.y)), 6);
  EXPECT_FALSE(innermost_circuit(constant(LatticeBox::centered(6), 1), an));
  EXPECT_FALSE(outermost_circuit(constant(LatticeBox::centered(6), 1), an));
}

TEST(Circuits, ExistenceMatchesWindingOracle) {
  std::mt19937_64 rng(3);
  for (double p : {0.5, 0.6, 0.7})
    for (int r : {1, 2, 3}) {
      const Annulus an(LatticeBox::centered(2 * r), LatticeBox::centered(r));
      const auto verts = annulus_vertices(an);
      for (int s = 0; s < 300; ++s) {
        const auto c = coin_flips(LatticeBox::centered(2 * r), p, rng);
        const bool want = winding_cycle(c, verts);
        ASSERT_EQ(innermost_circuit(c, an).has_value(), want);
        ASSERT_EQ(outermost_circuit(c, an).has_value(), want);
      }
    }
}

TEST(Circuits, ExtremalAndSurrounding) {
  std::mt19937_64 rng(4);
  int found = 0;
  for (int s = 0; s < 400; ++s) {
    const Annulus an(LatticeBox::centered(6), LatticeBox::centered(2));
    const auto c = coin_flips(LatticeBox::centered(6), 0.6, rng);
    const auto in = innermost_circuit(c, an);
    const auto out = outermost_circuit(c, an);
    ASSERT_EQ(in.has_value(), out.has_value());
    if (!in) continue;
    ++found;
    for (const auto* circ : {&in->circuit, &out->circuit}) {
      EXPECT_TRUE(circuit_surrounds(*circ, an.inner()));
      for (const auto& e : circ->edges()) EXPECT_EQ(c.ticks(e), 0);
      for (const auto& v : circ->vertices()) EXPECT_TRUE(an.contains(v));
    }
    // No surrounding open circuit strictly inside the innermost one, none
    // strictly outside the outermost one.
    const std::set<Vertex> on_in(in->circuit.vertices().begin(), in->circuit.vertices().end());
    const std::set<Vertex> on_out(out->circuit.vertices().begin(), out->circuit.vertices().end());
    std::set<Vertex> inside, outside;
    for (const auto& v : annulus_vertices(an)) {
      if (!on_in.count(v) && vertex_inside(in->circuit, v)) inside.insert(v);
      if (!on_out.count(v) && !vertex_inside(out->circuit, v)) outside.insert(v);
    }
    EXPECT_FALSE(winding_cycle(c, inside));
    EXPECT_FALSE(winding_cycle(c, outside));
  }
  EXPECT_GT(found, 50);
}

TEST(Circuits, SurroundsRejectsOffsetLoops) {
  std::vector<Vertex> loop;
  for (int x = -2; x < 2; ++x) loop.push_back({x, -2});
  for (int y = -2; y < 2; ++y) loop.push_back({2, y});
  for (int x = 2; x > -2; --x) loop.push_back({x, 2});
  for (int y = 2; y > -2; --y) loop.push_back({-2, y});
  loop.push_back({-2, -2});
  const auto circ = LatticePath::circuit(loop);
  EXPECT_TRUE(circuit_surrounds(circ, LatticeBox::centered(1)));
  EXPECT_TRUE(circuit_surrounds(circ, LatticeBox::centered(2)));  // circuits may run along the inner boundary
  EXPECT_FALSE(circuit_surrounds(circ, LatticeBox::centered(3)));
  EXPECT_FALSE(circuit_surrounds(circ, LatticeBox(3, 4, 0, 1)));
}

TEST(EventE, TrivialConfigurations) {
  const auto annuli = annulus_sequence(16, 0.9);
  ASSERT_EQ(annuli.size(), 4u);
  EXPECT_EQ(event_rectangle(annuli, 2), LatticeBox(1, 8, -1, 1));
  const LatticeBox box = LatticeBox::centered(16);
  for (int i = 2; i <= 3; ++i) {
    EXPECT_TRUE(detect_event_E(constant(box, 0), i, annuli));
    EXPECT_FALSE(detect_event_E(constant(box, 1), i, annuli));
  }
  EXPECT_THROW(detect_event_E(constant(box, 0), 1, annuli), Error);
  EXPECT_THROW(detect_event_E(constant(box, 0), 4, annuli), Error);
}
