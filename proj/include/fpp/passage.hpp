#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "fpp/critical_geometry.hpp"
#include "fpp/lattice.hpp"
#include "fpp/random_field.hpp"

namespace fpp {

namespace detail {

/// Calls f(neighbour_index, edge_ticks) for the in-box neighbours of vertex
/// index i, in the order E, N, W, S.
template <class F>
inline void for_each_neighbor(const Configuration& c, std::size_t i, F&& f) {
  const LatticeBox& b = c.box();
  const std::size_t w = std::size_t(b.width());
  const int x = b.x_min() + int(i % w);
  const int y = b.y_min() + int(i / w);
  if (x < b.x_max()) f(i + 1, c.h_ticks(i));
  if (y < b.y_max()) f(i + w, c.v_ticks(i));
  if (x > b.x_min()) f(i - 1, c.h_ticks(i - 1));
  if (y > b.y_min()) f(i - w, c.v_ticks(i - w));
}

constexpr std::size_t kNoParent = std::numeric_limits<std::size_t>::max();

}  // namespace detail

/// Single-source (or multi-source) shortest passage times over a box.
/// Unreachable vertices carry no value rather than a sentinel.
class DistanceField {
 public:
  DistanceField(LatticeBox box, std::vector<Vertex> source, std::int64_t scale)
      : box_(box), source_(std::move(source)), scale_(scale),
        ticks_(box.vertex_count(), 0), reached_(box.vertex_count(), 0),
        parent_(box.vertex_count(), detail::kNoParent) {}

  const LatticeBox& box() const { return box_; }
  const std::vector<Vertex>& source() const { return source_; }

  bool reachable(const Vertex& v) const { return box_.contains(v) && reached_[box_.index(v)]; }
  std::optional<Ticks> ticks_at(const Vertex& v) const {
    if (!reachable(v)) return std::nullopt;
    return ticks_[box_.index(v)];
  }
  std::optional<double> at(const Vertex& v) const {
    auto t = ticks_at(v);
    if (!t) return std::nullopt;
    return double(*t) / double(scale_);
  }

  bool reached(std::size_t i) const { return reached_[i] != 0; }
  Ticks ticks(std::size_t i) const { return ticks_[i]; }
  std::int64_t scale() const { return scale_; }

  /// Shortest-path tree back to the source, source first.
  std::vector<Vertex> path_to(const Vertex& v) const {
    if (!reachable(v)) throw Error("DistanceField: vertex unreachable");
    std::vector<Vertex> out;
    for (std::size_t i = box_.index(v); i != detail::kNoParent; i = parent_[i]) out.push_back(box_.vertex(i));
    std::reverse(out.begin(), out.end());
    return out;
  }

 private:
  friend DistanceField distance_field_two_level(const Configuration&, const std::vector<Vertex>&);
  friend DistanceField distance_field_dijkstra(const Configuration&, const std::vector<Vertex>&);

  LatticeBox box_;
  std::vector<Vertex> source_;
  std::int64_t scale_;
  std::vector<Ticks> ticks_;
  std::vector<std::uint8_t> reached_;
  std::vector<std::size_t> parent_;
};

namespace detail {

inline void check_sources(const Configuration& c, const std::vector<Vertex>& source) {
  if (source.empty()) throw Error("distance_field: empty source set");
  for (const auto& v : source)
    if (!c.box().contains(v)) throw Error("distance_field: source outside box");
}

}  // namespace detail

/// Deque-based shortest paths; valid when every weight is 0 or one common
/// positive value.
inline DistanceField distance_field_two_level(const Configuration& c, const std::vector<Vertex>& source) {
  detail::check_sources(c, source);
  if (!c.distribution().two_level()) throw Error("distance_field_two_level: weights are not two-level");
  DistanceField f(c.box(), source, c.distribution().scale());
  std::vector<std::uint8_t> done(c.box().vertex_count(), 0);
  std::deque<std::size_t> q;
  for (const auto& v : source) {
    const std::size_t i = c.box().index(v);
    if (f.reached_[i]) continue;
    f.reached_[i] = 1;
    f.ticks_[i] = 0;
    q.push_back(i);
  }
  while (!q.empty()) {
    const std::size_t i = q.front();
    q.pop_front();
    if (done[i]) continue;
    done[i] = 1;
    const Ticks di = f.ticks_[i];
    detail::for_each_neighbor(c, i, [&](std::size_t j, Ticks t) {
      const Ticks nd = di + t;
      if (f.reached_[j] && f.ticks_[j] <= nd) return;
      f.reached_[j] = 1;
      f.ticks_[j] = nd;
      f.parent_[j] = i;
      if (t == 0) q.push_front(j);
      else q.push_back(j);
    });
  }
  return f;
}

/// Binary-heap Dijkstra for arbitrary nonnegative weights.
inline DistanceField distance_field_dijkstra(const Configuration& c, const std::vector<Vertex>& source) {
  detail::check_sources(c, source);
  DistanceField f(c.box(), source, c.distribution().scale());
  using Item = std::pair<Ticks, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  std::vector<std::uint8_t> done(c.box().vertex_count(), 0);
  for (const auto& v : source) {
    const std::size_t i = c.box().index(v);
    if (f.reached_[i]) continue;
    f.reached_[i] = 1;
    f.ticks_[i] = 0;
    pq.push({0, i});
  }
  while (!pq.empty()) {
    const auto [d, i] = pq.top();
    pq.pop();
    if (done[i] || d != f.ticks_[i]) continue;
    done[i] = 1;
    detail::for_each_neighbor(c, i, [&](std::size_t j, Ticks t) {
      const Ticks nd = d + t;
      if (f.reached_[j] && f.ticks_[j] <= nd) return;
      f.reached_[j] = 1;
      f.ticks_[j] = nd;
      f.parent_[j] = i;
      pq.push({nd, j});
    });
  }
  return f;
}

inline DistanceField distance_field(const Configuration& c, const std::vector<Vertex>& source) {
  return c.distribution().two_level() ? distance_field_two_level(c, source)
                                      : distance_field_dijkstra(c, source);
}

/// a_{0,n} = T((0,0), (n,0)) inside the configuration's box, in ticks.
inline Ticks point_passage_ticks(const Configuration& c, int n) {
  const Vertex s{0, 0}, t{n, 0};
  if (!c.box().contains(s) || !c.box().contains(t)) throw Error("point_passage_time: endpoints outside box");
  return *distance_field(c, {s}).ticks_at(t);
}

inline double point_passage_time(const Configuration& c, int n) {
  return c.distribution().to_value(point_passage_ticks(c, n));
}

/// Union of edges lying on at least one time-optimal walk from source to target.
struct TightSubgraph {
  std::vector<Edge> edges;
  std::vector<Vertex> source;
  std::vector<Vertex> target;
  Ticks total_ticks = 0;
  double total_time = 0.0;
};

inline TightSubgraph tight_subgraph(const Configuration& c, const std::vector<Vertex>& source,
                                    const std::vector<Vertex>& target) {
  const auto ds = distance_field(c, source);
  const auto dt = distance_field(c, target);
  std::optional<Ticks> best;
  for (const auto& v : target)
    if (auto t = ds.ticks_at(v); t && (!best || *t < *best)) best = t;
  if (!best) throw Error("tight_subgraph: target unreachable");
  TightSubgraph out{{}, source, target, *best, c.distribution().to_value(*best)};
  const LatticeBox& b = c.box();
  for (const auto& e : b.edges()) {
    const auto [u, v] = edge_endpoints(e);
    const std::size_t iu = b.index(u), iv = b.index(v);
    if (!ds.reached(iu) || !ds.reached(iv) || !dt.reached(iu) || !dt.reached(iv)) continue;
    const Ticks w = c.ticks_unchecked(e);
    if (ds.ticks(iu) + w + dt.ticks(iv) == *best || ds.ticks(iv) + w + dt.ticks(iu) == *best)
      out.edges.push_back(e);
  }
  return out;
}

/// Certifies that no optimal path between (0,0) and (n,0) on the whole
/// lattice leaves `box`.
struct ConfinementCertificate {
  LatticeBox box;
  bool certified = false;
  std::string witness;
  int boxes_tried = 0;
  Ticks passage_ticks = 0;
};

namespace detail {

/// Any path leaving the box costs at least min_boundary d_s + min_boundary d_t.
inline bool boundary_cost_exceeds(const LatticeBox& b, const DistanceField& ds, const DistanceField& dt, Ticks T) {
  Ticks ms = std::numeric_limits<Ticks>::max(), mt = ms;
  for (std::size_t i = 0; i < b.vertex_count(); ++i) {
    if (!b.on_boundary(b.vertex(i))) continue;
    ms = std::min(ms, ds.ticks(i));
    mt = std::min(mt, dt.ticks(i));
  }
  return ms + mt > T;
}

/// An open circuit around [-n,n]^2 whose open cluster stays off the box
/// boundary is enclosed by a closed dual circuit inside the box; excursions
/// across both cost strictly more than following the open circuit.
inline std::optional<std::size_t> circuit_pair_witness(const Configuration& c, int n) {
  const LatticeBox& b = c.box();
  if (b.x_max() - n < 2) return std::nullopt;
  const Annulus an(b, LatticeBox::centered(n));
  const auto circ = innermost_circuit(c, an);
  if (!circ) return std::nullopt;
  std::vector<std::uint8_t> seen(b.vertex_count(), 0);
  std::vector<std::size_t> stack;
  for (const auto& v : circ->circuit.vertices()) {
    const std::size_t i = b.index(v);
    if (!seen[i]) {
      seen[i] = 1;
      stack.push_back(i);
    }
  }
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    if (b.on_boundary(b.vertex(i))) return std::nullopt;
    for_each_neighbor(c, i, [&](std::size_t j, Ticks t) {
      if (t != 0 || seen[j]) return;
      seen[j] = 1;
      stack.push_back(j);
    });
  }
  return circ->circuit.length();
}

}  // namespace detail

/// Samples boxes [-h,h]^2 for h = 2n, 2n*growth, ... (same random stream)
/// until a confinement witness is found or h exceeds 64n.
inline std::pair<Configuration, ConfinementCertificate> certify_confinement(const EdgeDistribution& dist, int n,
                                                                            const SeedSpec& seed,
                                                                            double growth = 2.0) {
  if (n < 2) throw Error("certify_confinement: n must be >= 2");
  if (!(growth > 1.0)) throw Error("certify_confinement: growth must exceed 1");
  const std::int64_t cap = 64LL * n;
  std::int64_t h = 2LL * n;
  std::optional<Configuration> last;
  ConfinementCertificate cert;
  while (h <= cap) {
    const LatticeBox box = LatticeBox::centered(int(h));
    Configuration c = sample_configuration(box, dist, seed);
    ++cert.boxes_tried;
    const auto ds = distance_field(c, {{0, 0}});
    const auto dt = distance_field(c, {{n, 0}});
    const Ticks T = *ds.ticks_at({n, 0});
    cert.box = box;
    cert.passage_ticks = T;
    if (detail::boundary_cost_exceeds(box, ds, dt, T)) {
      cert.certified = true;
      cert.witness = "boundary-cost: every exit costs more than T";
      return {std::move(c), cert};
    }
    if (auto len = detail::circuit_pair_witness(c, n)) {
      cert.certified = true;
      cert.witness = "open circuit (length " + std::to_string(*len) +
                     ") inside a closed dual circuit";
      return {std::move(c), cert};
    }
    last.emplace(std::move(c));
    const auto next = std::int64_t(std::ceil(double(h) * growth));
    h = std::max(h + 1, next);
  }
  cert.certified = false;
  cert.witness = "none up to half-width 64n";
  return {std::move(*last), cert};
}

}  // namespace fpp
