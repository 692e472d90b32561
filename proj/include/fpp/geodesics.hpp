#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "fpp/critical_geometry.hpp"
#include "fpp/lattice.hpp"
#include "fpp/passage.hpp"
#include "fpp/random_field.hpp"

namespace fpp {

using BigInt = boost::multiprecision::cpp_int;

enum class CountLimit { None, Cap, Steps };

inline const char* to_string(CountLimit l) {
  switch (l) {
    case CountLimit::Cap: return "cap";
    case CountLimit::Steps: return "steps";
    default: return "none";
  }
}

/// Exact N(s,t) or an Overflow record. Under overflow `lower_bound` holds the
/// largest partial count seen, which never exceeds the true count.
struct GeodesicCount {
  bool overflow = false;
  BigInt value;
  BigInt cap;
  CountLimit fired = CountLimit::None;
  bool partial = false;
  BigInt lower_bound;
  std::uint64_t steps = 0;
  Ticks passage_ticks = 0;

  bool exact() const { return !overflow; }
  /// Decimal count, or "overflow".
  std::string str() const { return overflow ? std::string("overflow") : value.str(); }
};

struct GeodesicLengthStats {
  std::int64_t min_len = 0;
  std::int64_t max_len = 0;
  std::vector<std::int64_t> sample_lengths;
  bool heuristic = false;
};

struct CountLimits {
  BigInt cap = BigInt(1) << 64;
  std::uint64_t step_budget = 200'000'000;
};

namespace detail {

struct Neighbor {
  std::size_t index;
  Ticks ticks;
};

/// Neighbour of vertex index i in direction d (0=E, 1=N, 2=W, 3=S).
inline std::optional<Neighbor> neighbor(const Configuration& c, std::size_t i, int d) {
  const LatticeBox& b = c.box();
  const std::size_t w = std::size_t(b.width());
  const int x = b.x_min() + int(i % w);
  const int y = b.y_min() + int(i / w);
  switch (d) {
    case 0: if (x < b.x_max()) return Neighbor{i + 1, c.h_ticks(i)}; break;
    case 1: if (y < b.y_max()) return Neighbor{i + w, c.v_ticks(i)}; break;
    case 2: if (x > b.x_min()) return Neighbor{i - 1, c.h_ticks(i - 1)}; break;
    default: if (y > b.y_min()) return Neighbor{i - w, c.v_ticks(i - w)}; break;
  }
  return std::nullopt;
}

/// Tight subgraph of the s-t problem. A zero-weight tight edge joins
/// vertices with equal d_s and equal d_t, so each zero level is an undirected
/// graph; its exits are t and the vertices with a positive tight edge.
class TightGraph {
 public:
  TightGraph(const Configuration& c, const Vertex& s, const Vertex& t) : c_(c) {
    const LatticeBox& b = c.box();
    if (!b.contains(s) || !b.contains(t)) throw Error("count_geodesics: endpoint outside box");
    const auto ds = distance_field(c, {s});
    const auto dt = distance_field(c, {t});
    if (!ds.reachable(t)) throw Error("count_geodesics: target unreachable");
    s_ = b.index(s);
    t_ = b.index(t);
    T_ = *ds.ticks_at(t);
    const std::size_t nv = b.vertex_count();
    ds_.resize(nv);
    dt_.resize(nv);
    for (std::size_t i = 0; i < nv; ++i) {
      ds_[i] = ds.reached(i) ? ds.ticks(i) : std::numeric_limits<Ticks>::max() / 4;
      dt_[i] = dt.reached(i) ? dt.ticks(i) : std::numeric_limits<Ticks>::max() / 4;
    }
    exit_.assign(nv, 0);
    for (std::size_t i = 0; i < nv; ++i) {
      if (ds_[i] + dt_[i] != T_) continue;
      if (i == t_) exit_[i] = 1;
      for (int d = 0; d < 4 && !exit_[i]; ++d) {
        const auto nb = neighbor(c, i, d);
        if (nb && nb->ticks > 0 && tight(i, *nb)) exit_[i] = 1;
      }
    }
    mark_.assign(nv, 0);
  }

  const Configuration& config() const { return c_; }
  std::size_t source() const { return s_; }
  std::size_t target() const { return t_; }
  Ticks passage_ticks() const { return T_; }
  std::size_t size() const { return exit_.size(); }
  bool tight(std::size_t u, const Neighbor& nb) const { return ds_[u] + nb.ticks + dt_[nb.index] == T_; }

  /// True if an exit of y's zero level is reachable from y through vertices
  /// not marked in `visited`; y itself may be marked. Adds the search work
  /// to `work`.
  bool can_exit(std::size_t y, const std::vector<std::uint8_t>& visited, std::uint64_t& work) {
    if (exit_[y]) return true;
    if (++stamp_ == 0) {
      std::fill(mark_.begin(), mark_.end(), 0);
      stamp_ = 1;
    }
    queue_.clear();
    queue_.push_back(y);
    mark_[y] = stamp_;
    for (std::size_t h = 0; h < queue_.size(); ++h) {
      const std::size_t u = queue_[h];
      ++work;
      for (int d = 0; d < 4; ++d) {
        const auto nb = neighbor(c_, u, d);
        if (!nb || nb->ticks != 0 || visited[nb->index] || mark_[nb->index] == stamp_ || !tight(u, *nb)) continue;
        if (exit_[nb->index]) return true;
        mark_[nb->index] = stamp_;
        queue_.push_back(nb->index);
      }
    }
    return false;
  }

 private:
  const Configuration& c_;
  std::size_t s_ = 0, t_ = 0;
  Ticks T_ = 0;
  std::vector<Ticks> ds_, dt_;
  std::vector<std::uint8_t> exit_;
  std::vector<std::uint32_t> mark_;
  std::uint32_t stamp_ = 0;
  std::vector<std::size_t> queue_;
};

struct Aborted {};

/// Pruned depth-first counter. Continuations from a vertex entered through a
/// positive tight edge are memoised: every later vertex has strictly larger
/// d_s than every vertex already on the path, so the visited set cannot
/// affect them.
class GeodesicCounter {
 public:
  struct Entry {
    BigInt count = 0;
    std::int64_t min_len = std::numeric_limits<std::int64_t>::max();
    std::int64_t max_len = -1;
    bool done = false;

    void absorb(const Entry& sub, std::int64_t offset) {
      if (sub.count == 0) return;
      count += sub.count;
      min_len = std::min(min_len, sub.min_len + offset);
      max_len = std::max(max_len, sub.max_len + offset);
    }
  };

  GeodesicCounter(const Configuration& c, const Vertex& s, const Vertex& t, const CountLimits& lim)
      : g_(c, s, t), lim_(lim) {
    if (lim.cap < 1) throw Error("count_geodesics: cap must be >= 1");
    slot_.assign(g_.size(), -1);
    visited_.assign(g_.size(), 0);
  }

  GeodesicCount run(Entry* lengths = nullptr) {
    GeodesicCount out;
    out.cap = lim_.cap;
    out.passage_ticks = g_.passage_ticks();
    try {
      Entry e = count_from(g_.source());
      out.value = e.count;
      if (lengths) *lengths = e;
    } catch (const Aborted&) {
      out.overflow = true;
      out.fired = fired_;
      out.lower_bound = partial_;
      out.partial = out.lower_bound > 0;
    }
    out.steps = steps_;
    return out;
  }

  Ticks passage_ticks() const { return g_.passage_ticks(); }

 private:
  bool tight(std::size_t u, const Neighbor& nb) const { return g_.tight(u, nb); }

  void step() {
    if (++steps_ > lim_.step_budget) abort(CountLimit::Steps);
  }

  [[noreturn]] void abort(CountLimit why) {
    fired_ = why;
    partial_ = best_partial();
    throw Aborted{};
  }

  void check_cap(const BigInt& v) {
    if (v > lim_.cap) abort(CountLimit::Cap);
  }

  BigInt best_partial() const {
    BigInt best = 0;
    for (const Entry* e : active_) best = std::max(best, e->count);
    return best;
  }

  const Entry& memo(std::size_t w) {
    if (slot_[w] >= 0 && memo_[std::size_t(slot_[w])].done) return memo_[std::size_t(slot_[w])];
    Entry e = count_from(w);
    e.done = true;
    slot_[w] = int(memo_.size());
    memo_.push_back(std::move(e));
    return memo_.back();
  }

  struct Frame {
    std::size_t v;
    int next;
    std::int64_t depth;
  };

  Entry count_from(std::size_t start) {
    Entry acc;
    active_.push_back(&acc);
    std::vector<Frame> stack;
    auto enter = [&](std::size_t v, std::int64_t depth) {
      step();
      visited_[v] = 1;
      stack.push_back({v, 0, depth});
      if (v == g_.target()) {
        Entry one;
        one.count = 1;
        one.min_len = one.max_len = 0;
        acc.absorb(one, depth);
        stack.back().next = 4;
        check_cap(acc.count);
        return;
      }
      for (int d = 0; d < 4; ++d) {
        const auto nb = neighbor(g_.config(), v, d);
        if (!nb || nb->ticks == 0 || !tight(v, *nb)) continue;
        const Entry& sub = memo(nb->index);
        acc.absorb(sub, depth + 1);
        check_cap(acc.count);
      }
    };
    enter(start, 0);
    while (!stack.empty()) {
      Frame& f = stack.back();
      bool pushed = false;
      while (f.next < 4) {
        const auto nb = neighbor(g_.config(), f.v, f.next++);
        if (!nb || nb->ticks != 0 || visited_[nb->index] || !tight(f.v, *nb)) continue;
        std::uint64_t work = 0;
        const bool live = g_.can_exit(nb->index, visited_, work);
        steps_ += work;
        if (!live) continue;
        enter(nb->index, f.depth + 1);
        pushed = true;
        break;
      }
      if (!pushed) {
        visited_[stack.back().v] = 0;
        stack.pop_back();
      }
    }
    active_.pop_back();
    return acc;
  }

  TightGraph g_;
  CountLimits lim_;
  std::vector<int> slot_;
  std::vector<Entry> memo_;
  std::vector<std::uint8_t> visited_;
  std::vector<const Entry*> active_;
  std::uint64_t steps_ = 0;
  CountLimit fired_ = CountLimit::None;
  BigInt partial_ = 0;
};

}  // namespace detail

inline GeodesicCount count_geodesics_exact(const Configuration& c, const Vertex& s, const Vertex& t,
                                           const CountLimits& lim = {}) {
  return detail::GeodesicCounter(c, s, t, lim).run();
}

inline GeodesicCount count_geodesics_exact(const Configuration& c, const Vertex& s, const Vertex& t,
                                           const BigInt& cap) {
  CountLimits lim;
  lim.cap = cap;
  return count_geodesics_exact(c, s, t, lim);
}

/// Calls f on each optimal self-avoiding path, in E,N,W,S depth-first order,
/// until f returns false or max_paths have been produced. No memoisation.
inline std::size_t for_each_geodesic(const Configuration& c, const Vertex& s, const Vertex& t,
                                     std::size_t max_paths, std::uint64_t step_budget,
                                     const std::function<bool(const LatticePath&)>& f) {
  detail::TightGraph g(c, s, t);
  const LatticeBox& b = c.box();
  std::vector<std::uint8_t> visited(b.vertex_count(), 0);
  std::vector<std::pair<std::size_t, int>> stack{{g.source(), 0}};
  visited[g.source()] = 1;
  std::size_t produced = 0;
  std::uint64_t steps = 0;
  while (!stack.empty() && produced < max_paths && steps < step_budget) {
    auto& [v, next] = stack.back();
    if (v == g.target()) {
      std::vector<Vertex> vs;
      for (const auto& fr : stack) vs.push_back(b.vertex(fr.first));
      ++produced;
      if (!f(LatticePath::path(std::move(vs)))) break;
      visited[v] = 0;
      stack.pop_back();
      continue;
    }
    bool pushed = false;
    while (next < 4) {
      const auto nb = detail::neighbor(c, v, next++);
      if (!nb || visited[nb->index] || !g.tight(v, *nb)) continue;
      ++steps;
      if (nb->ticks == 0 && !g.can_exit(nb->index, visited, steps)) continue;
      visited[nb->index] = 1;
      stack.push_back({nb->index, 0});
      pushed = true;
      break;
    }
    if (!pushed) {
      visited[stack.back().first] = 0;
      stack.pop_back();
    }
  }
  return produced;
}

/// Unpruned oracle result: minimum over all self-avoiding s-t paths and the
/// number and length range of the minimisers.
struct BruteForceGeodesics {
  Ticks passage_ticks = 0;
  BigInt count = 0;
  std::int64_t min_len = 0;
  std::int64_t max_len = 0;
};

inline BruteForceGeodesics bruteforce_geodesics(const Configuration& c, const Vertex& s, const Vertex& t) {
  const LatticeBox& b = c.box();
  if (b.edge_count() > 40) throw Error("count_geodesics_bruteforce: box has more than 40 edges");
  if (!b.contains(s) || !b.contains(t)) throw Error("count_geodesics_bruteforce: endpoint outside box");
  std::unordered_set<Vertex, VertexHash> on_path{s};
  std::optional<Ticks> best;
  BruteForceGeodesics out;
  const std::array<Vertex, 4> moves{Vertex{1, 0}, Vertex{0, 1}, Vertex{-1, 0}, Vertex{0, -1}};
  std::function<void(const Vertex&, Ticks, std::int64_t)> go = [&](const Vertex& v, Ticks cost, std::int64_t len) {
    if (v == t) {
      if (!best || cost < *best) {
        best = cost;
        out.count = 1;
        out.min_len = out.max_len = len;
      } else if (cost == *best) {
        out.count += 1;
        out.min_len = std::min(out.min_len, len);
        out.max_len = std::max(out.max_len, len);
      }
      return;
    }
    for (const auto& m : moves) {
      const Vertex w{v.x + m.x, v.y + m.y};
      if (!b.contains(w) || on_path.contains(w)) continue;
      on_path.insert(w);
      go(w, cost + c.ticks(edge_between(v, w)), len + 1);
      on_path.erase(w);
    }
  };
  go(s, 0, 0);
  if (!best) throw Error("count_geodesics_bruteforce: target unreachable");
  out.passage_ticks = *best;
  return out;
}

inline GeodesicCount count_geodesics_bruteforce(const Configuration& c, const Vertex& s, const Vertex& t) {
  const auto r = bruteforce_geodesics(c, s, t);
  GeodesicCount out;
  out.value = r.count;
  out.passage_ticks = r.passage_ticks;
  return out;
}

namespace detail {

/// Longest optimal path found by a bounded depth-first search that tries
/// zero-weight continuations first.
inline std::optional<std::int64_t> greedy_longest_geodesic(const Configuration& c, const Vertex& s, const Vertex& t,
                                                           std::uint64_t budget) {
  TightGraph g(c, s, t);
  std::vector<std::uint8_t> visited(g.size(), 0);
  struct Frame {
    std::size_t v;
    int next;
  };
  std::vector<Frame> stack{{g.source(), 0}};
  visited[g.source()] = 1;
  std::optional<std::int64_t> best;
  std::uint64_t steps = 0;
  while (!stack.empty() && steps < budget) {
    Frame& f = stack.back();
    if (f.v == g.target()) {
      const auto len = std::int64_t(stack.size()) - 1;
      if (!best || len > *best) best = len;
      visited[f.v] = 0;
      stack.pop_back();
      continue;
    }
    bool pushed = false;
    // next in [0,8): zero-weight moves in E,N,W,S order, then positive ones.
    while (f.next < 8) {
      const int k = f.next++;
      const auto nb = neighbor(c, f.v, k % 4);
      if (!nb || (k < 4) != (nb->ticks == 0) || visited[nb->index] || !g.tight(f.v, *nb)) continue;
      ++steps;
      if (nb->ticks == 0 && !g.can_exit(nb->index, visited, steps)) continue;
      visited[nb->index] = 1;
      stack.push_back({nb->index, 0});
      pushed = true;
      break;
    }
    if (!pushed) {
      visited[stack.back().v] = 0;
      stack.pop_back();
    }
  }
  return best;
}

}  // namespace detail

/// Count and length statistics from one pruned enumeration.
struct GeodesicAnalysis {
  GeodesicCount count;
  GeodesicLengthStats lengths;
};

inline GeodesicAnalysis analyze_geodesics(const Configuration& c, const Vertex& s, const Vertex& t,
                                          const CountLimits& lim = {}, std::size_t samples = 16) {
  GeodesicAnalysis out;
  detail::GeodesicCounter::Entry e;
  out.count = detail::GeodesicCounter(c, s, t, lim).run(&e);
  const std::uint64_t sample_budget = std::min<std::uint64_t>(lim.step_budget, 1'000'000);
  for_each_geodesic(c, s, t, samples, sample_budget, [&](const LatticePath& p) {
    out.lengths.sample_lengths.push_back(std::int64_t(p.length()));
    return true;
  });
  if (out.count.exact()) {
    out.lengths.min_len = e.min_len;
    out.lengths.max_len = e.max_len;
    return out;
  }
  out.lengths.heuristic = true;
  const auto& sl = out.lengths.sample_lengths;
  std::int64_t lo = sl.empty() ? 0 : *std::min_element(sl.begin(), sl.end());
  std::int64_t hi = sl.empty() ? 0 : *std::max_element(sl.begin(), sl.end());
  if (auto g = detail::greedy_longest_geodesic(c, s, t, sample_budget)) {
    if (sl.empty()) lo = *g;
    hi = std::max(hi, *g);
  }
  out.lengths.min_len = lo;
  out.lengths.max_len = hi;
  return out;
}

inline GeodesicLengthStats max_geodesic_length(const Configuration& c, const Vertex& s, const Vertex& t,
                                               const BigInt& cap) {
  CountLimits lim;
  lim.cap = cap;
  return analyze_geodesics(c, s, t, lim).lengths;
}

/// N_n >= 2^kappa witness. Each counted square contributes an independent
/// open detour around one crossing edge of an explicit optimal base path.
struct CountCertificate {
  int event_index = 0;
  std::size_t kappa = 0;
  BigInt lower_bound = 1;
  std::vector<UnitSquare> witness_squares;
  LatticePath crossing;
  LatticePath base_path;
  std::size_t good_count = 0;
  std::size_t accessible_count = 0;
};

struct NotApplicable {
  std::string reason;
};

using CertificateResult = std::variant<CountCertificate, NotApplicable>;

namespace detail {

/// Shortest-path-tree path from the field's source to v, cut at its first
/// vertex in `stop`.
inline std::vector<Vertex> path_to_set(const DistanceField& f, const std::unordered_set<Vertex, VertexHash>& stop) {
  std::optional<Vertex> best;
  Ticks bt = 0;
  for (const auto& v : stop) {
    const Ticks t = *f.ticks_at(v);
    if (!best || t < bt || (t == bt && row_major_less(v, *best))) {
      best = v;
      bt = t;
    }
  }
  auto p = f.path_to(*best);
  for (std::size_t i = 0; i < p.size(); ++i)
    if (stop.contains(p[i])) {
      p.resize(i + 1);
      break;
    }
  return p;
}

/// Circuit vertices from index a forward to index b (inclusive).
inline std::vector<Vertex> circuit_arc(const std::vector<Vertex>& cyc, const Vertex& a, const Vertex& b) {
  const std::size_t L = cyc.size() - 1;
  const std::size_t ia = std::size_t(std::find(cyc.begin(), cyc.begin() + std::ptrdiff_t(L), a) - cyc.begin());
  std::vector<Vertex> out;
  for (std::size_t k = 0; k < L; ++k) {
    const Vertex& v = cyc[(ia + k) % L];
    out.push_back(v);
    if (v == b) return out;
  }
  throw Error("circuit_arc: vertex not on circuit");
}

}  // namespace detail

inline CertificateResult lower_bound_certificate(const Configuration& c, int n, double delta1) {
  std::vector<Annulus> annuli;
  try {
    annuli = annulus_sequence(n, delta1);
  } catch (const Error& e) {
    return NotApplicable{e.what()};
  }
  const LatticeBox& box = c.box();
  if (!box.contains(annuli.back().outer()) || !box.contains(Vertex{n, 0}))
    throw Error("lower_bound_certificate: box must contain the outermost annulus and (n,0)");
  const int k = int(annuli.size());
  for (int m = 2; m + 1 <= k; m += 2) {
    const auto c1 = innermost_circuit(c, annuli[std::size_t(m - 2)]);
    if (!c1) continue;
    const auto c2 = outermost_circuit(c, annuli[std::size_t(m)]);
    if (!c2) continue;
    const LatticeBox rect = event_rectangle(annuli, m);
    const auto beta = lowest_crossing(c, rect);
    if (!beta) continue;

    CountCertificate cert;
    cert.event_index = m;
    cert.crossing = beta->path;
    const auto goods = good_squares(*beta, rect, 1);
    const auto acc = accessible_squares(c, *beta, goods);
    cert.good_count = goods.size();
    cert.accessible_count = acc.size();

    // Base optimal path: geodesic to C1, along C1, beta between the circuits,
    // along C2, geodesic to (n,0).
    const auto& cyc1 = c1->circuit.vertices();
    const auto& cyc2 = c2->circuit.vertices();
    const std::unordered_set<Vertex, VertexHash> on1(cyc1.begin(), cyc1.end());
    const std::unordered_set<Vertex, VertexHash> on2(cyc2.begin(), cyc2.end());
    const auto& bv = beta->path.vertices();
    std::size_t wi = bv.size();
    for (std::size_t i = 0; i < bv.size(); ++i)
      if (on2.contains(bv[i])) {
        wi = i;
        break;
      }
    std::optional<std::size_t> ui;
    for (std::size_t i = 0; i < wi && wi < bv.size(); ++i)
      if (on1.contains(bv[i])) ui = i;
    if (!ui) return NotApplicable{"crossing does not join the circuits"};

    const auto ds = distance_field(c, {{0, 0}});
    const auto dn = distance_field(c, {{n, 0}});
    auto p1 = detail::path_to_set(ds, on1);
    auto p3 = detail::path_to_set(dn, on2);
    std::vector<Vertex> base = p1;
    auto arc1 = detail::circuit_arc(cyc1, p1.back(), bv[*ui]);
    base.insert(base.end(), arc1.begin() + 1, arc1.end());
    base.insert(base.end(), bv.begin() + std::ptrdiff_t(*ui) + 1, bv.begin() + std::ptrdiff_t(wi) + 1);
    auto arc2 = detail::circuit_arc(cyc2, bv[wi], p3.back());
    base.insert(base.end(), arc2.begin() + 1, arc2.end());
    base.insert(base.end(), p3.rbegin() + 1, p3.rend());
    cert.base_path = LatticePath::path(base);
    if (path_passage_ticks(cert.base_path, c) != *ds.ticks_at({n, 0}))
      throw Error("lower_bound_certificate: base path is not optimal");

    std::unordered_set<Edge, EdgeHash> segment;
    for (std::size_t i = *ui; i < wi; ++i) segment.insert(edge_between(bv[i], bv[i + 1]));
    std::unordered_set<Vertex, VertexHash> blocked(base.begin(), base.end());
    std::unordered_set<Edge, EdgeHash> used;
    for (const auto& s : acc) {
      const auto comp = companion_square(*beta, s);
      if (!comp || !segment.contains(comp->crossing_edge) || used.contains(comp->crossing_edge)) continue;
      if (blocked.contains(comp->upper_a) || blocked.contains(comp->upper_b)) continue;
      used.insert(comp->crossing_edge);
      blocked.insert(comp->upper_a);
      blocked.insert(comp->upper_b);
      cert.witness_squares.push_back(s);
    }
    cert.kappa = cert.witness_squares.size();
    cert.lower_bound = BigInt(1) << cert.kappa;
    return cert;
  }
  return NotApplicable{"no event E_m for even m"};
}

}  // namespace fpp
