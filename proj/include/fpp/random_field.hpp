#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fpp/lattice.hpp"

namespace fpp {

/// Exact edge weight in integer ticks of 1/scale.
using Ticks = std::int64_t;

/// Finite atomic distribution of nonnegative edge weights. Atom values must be
/// rationals with a denominator of at most 10^6, so every path sum is exact
/// in integer ticks.
class EdgeDistribution {
 public:
  struct Atom {
    double value;
    double probability;
  };

  explicit EdgeDistribution(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw Error("EdgeDistribution: no atoms");
    double total = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      const auto& a = atoms_[i];
      if (!(a.value >= 0.0) || !std::isfinite(a.value)) throw Error("EdgeDistribution: negative value");
      if (!(a.probability > 0.0)) throw Error("EdgeDistribution: probabilities must be positive");
      if (i > 0 && !(atoms_[i - 1].value < a.value))
        throw Error("EdgeDistribution: values must be sorted and distinct");
      total += a.probability;
    }
    if (std::abs(total - 1.0) > 1e-12) throw Error("EdgeDistribution: probabilities must sum to 1");
    scale_ = find_scale();
    cumulative_.reserve(atoms_.size());
    double c = 0.0;
    for (const auto& a : atoms_) {
      c += a.probability;
      cumulative_.push_back(c);
      ticks_.push_back(std::llround(a.value * double(scale_)));
    }
    cumulative_.back() = 1.0;
  }

  /// {(0,p),(1,1-p)}; degenerate atoms are dropped at p=0 and p=1.
  static EdgeDistribution bernoulli(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error("bernoulli: p must lie in [0,1]");
    if (p == 0.0) return EdgeDistribution({{1.0, 1.0}});
    if (p == 1.0) return EdgeDistribution({{0.0, 1.0}});
    return EdgeDistribution({{0.0, p}, {1.0, 1.0 - p}});
  }

  const std::vector<Atom>& atoms() const { return atoms_; }
  std::int64_t scale() const { return scale_; }
  const std::vector<Ticks>& atom_ticks() const { return ticks_; }

  /// F(0).
  double zero_probability() const { return atoms_.front().value == 0.0 ? atoms_.front().probability : 0.0; }
  double mean() const {
    double m = 0.0;
    for (const auto& a : atoms_) m += a.value * a.probability;
    return m;
  }

  /// True when every atom is 0 or one common positive value, so shortest
  /// paths can use a two-level queue.
  bool two_level() const {
    Ticks positive = 0;
    for (Ticks t : ticks_) {
      if (t == 0) continue;
      if (positive != 0 && t != positive) return false;
      positive = t;
    }
    return true;
  }

  /// Inverse-CDF draw from a uniform in [0,1).
  Ticks draw(double u) const {
    for (std::size_t i = 0; i < cumulative_.size(); ++i)
      if (u < cumulative_[i]) return ticks_[i];
    return ticks_.back();
  }

  double to_value(Ticks t) const { return double(t) / double(scale_); }

 private:
  std::int64_t find_scale() const {
    auto fits = [&](std::int64_t d) {
      for (const auto& a : atoms_) {
        const double s = a.value * double(d);
        if (s > 4e15) return false;
        if (std::abs(s - std::round(s)) > 1e-9 * std::max(1.0, s)) return false;
      }
      return true;
    };
    for (std::int64_t d = 1; d <= 1000; ++d)
      if (fits(d)) return d;
    for (std::int64_t d = 10000; d <= 1000000; d *= 10)
      if (fits(d)) return d;
    throw Error("EdgeDistribution: atom values must be rationals with small denominators");
  }

  std::vector<Atom> atoms_;
  std::vector<double> cumulative_;
  std::vector<Ticks> ticks_;
  std::int64_t scale_ = 1;
};

/// (master_seed, replicate_index) names one independent stream.
struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t replicate_index = 0;
};

namespace detail {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

/// splitmix64 finaliser; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr double to_unit(std::uint64_t u) { return double(u >> 11) * 0x1.0p-53; }

}  // namespace detail

/// Stream key; injective in replicate_index for a fixed master seed.
constexpr std::uint64_t stream_key(const SeedSpec& s) {
  return detail::mix64(s.master_seed + (s.replicate_index + 1) * detail::kGolden);
}

/// Uniform [0,1) variate attached to one edge of the infinite lattice. Weights
/// are keyed by edge coordinates, so nested boxes sampled from the same seed
/// agree on their common edges.
constexpr double edge_uniform(std::uint64_t key, const Edge& e) {
  const std::uint64_t coords =
      (std::uint64_t(std::uint32_t(e.anchor.x)) << 32) | std::uint32_t(e.anchor.y);
  const std::uint64_t salt = e.orientation == Orientation::Horizontal ? 0x5851F42D4C957F2DULL
                                                                      : 0x14057B7EF767814FULL;
  return detail::to_unit(detail::mix64(detail::mix64(key ^ salt) + coords));
}

/// Immutable edge weights on a box.
class Configuration {
 public:
  Configuration(LatticeBox box, EdgeDistribution dist, std::uint64_t seed)
      : box_(box), dist_(std::move(dist)), seed_(seed),
        h_(box.vertex_count(), 0), v_(box.vertex_count(), 0) {}

  const LatticeBox& box() const { return box_; }
  const EdgeDistribution& distribution() const { return dist_; }
  std::uint64_t seed() const { return seed_; }

  Ticks ticks(const Edge& e) const {
    if (!box_.contains(e)) throw Error("Configuration: edge outside box");
    return ticks_unchecked(e);
  }
  double weight(const Edge& e) const { return dist_.to_value(ticks(e)); }
  bool is_open(const Edge& e) const { return ticks(e) == 0; }

  /// Weight of the Horizontal edge at vertex index i (caller guarantees the
  /// edge is in the box).
  Ticks h_ticks(std::size_t i) const { return h_[i]; }
  Ticks v_ticks(std::size_t i) const { return v_[i]; }

  Ticks ticks_unchecked(const Edge& e) const {
    const std::size_t i = box_.index(e.anchor);
    return e.orientation == Orientation::Horizontal ? h_[i] : v_[i];
  }

  /// Copy with one edge reweighted (ticks); for monotonicity tests and fixtures.
  Configuration with_ticks(const Edge& e, Ticks t) const {
    if (!box_.contains(e)) throw Error("Configuration: edge outside box");
    Configuration c = *this;
    c.set(e, t);
    return c;
  }

  /// Deterministic configuration from an explicit weight function on ticks.
  template <class F>
  static Configuration from_function(LatticeBox box, EdgeDistribution dist, F&& f) {
    Configuration c(box, std::move(dist), 0);
    for (const Edge& e : box.edges()) c.set(e, f(e));
    return c;
  }

 private:
  friend Configuration sample_configuration(const LatticeBox&, const EdgeDistribution&, const SeedSpec&);

  void set(const Edge& e, Ticks t) {
    const std::size_t i = box_.index(e.anchor);
    (e.orientation == Orientation::Horizontal ? h_ : v_)[i] = t;
  }

  LatticeBox box_;
  EdgeDistribution dist_;
  std::uint64_t seed_;
  std::vector<Ticks> h_;
  std::vector<Ticks> v_;
};

inline Configuration sample_configuration(const LatticeBox& box, const EdgeDistribution& dist,
                                          const SeedSpec& seed) {
  const std::uint64_t key = stream_key(seed);
  Configuration c(box, dist, key);
  for (int y = box.y_min(); y <= box.y_max(); ++y)
    for (int x = box.x_min(); x <= box.x_max(); ++x) {
      const std::size_t i = box.index({x, y});
      if (x < box.x_max()) c.h_[i] = dist.draw(edge_uniform(key, {Orientation::Horizontal, {x, y}}));
      if (y < box.y_max()) c.v_[i] = dist.draw(edge_uniform(key, {Orientation::Vertical, {x, y}}));
    }
  return c;
}

inline bool is_open(const Configuration& c, const Edge& e) { return c.is_open(e); }

inline double empirical_zero_fraction(const Configuration& c) {
  const auto edges = c.box().edges();
  if (edges.empty()) return 0.0;
  std::size_t open = 0;
  for (const auto& e : edges) open += c.ticks_unchecked(e) == 0;
  return double(open) / double(edges.size());
}

inline Ticks path_passage_ticks(const LatticePath& path, const Configuration& c) {
  Ticks total = 0;
  for (const auto& e : path.edges()) total += c.ticks(e);
  return total;
}

inline double path_passage_time(const LatticePath& path, const Configuration& c) {
  return c.distribution().to_value(path_passage_ticks(path, c));
}

/// Shortest decimal that round-trips.
inline std::string format_real(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

/// Dump: `box x_min x_max y_min y_max`, then `H|V x y weight` per edge in
/// canonical order.
inline void write_configuration(std::ostream& os, const Configuration& c) {
  const auto& b = c.box();
  os << "box " << b.x_min() << ' ' << b.x_max() << ' ' << b.y_min() << ' ' << b.y_max() << '\n';
  for (const auto& e : b.edges())
    os << (e.orientation == Orientation::Horizontal ? 'H' : 'V') << ' ' << e.anchor.x << ' '
       << e.anchor.y << ' ' << format_real(c.weight(e)) << '\n';
}

/// Reads a dump back; weights must be atoms of dist.
inline Configuration read_configuration(std::istream& is, const EdgeDistribution& dist) {
  std::string tag;
  int x0, x1, y0, y1;
  if (!(is >> tag >> x0 >> x1 >> y0 >> y1) || tag != "box") throw Error("configuration dump: bad header");
  const LatticeBox box(x0, x1, y0, y1);
  std::vector<std::pair<Edge, Ticks>> entries;
  char o;
  int x, y;
  double w;
  while (is >> o >> x >> y >> w) {
    const Edge e{o == 'H' ? Orientation::Horizontal : Orientation::Vertical, {x, y}};
    if ((o != 'H' && o != 'V') || !box.contains(e)) throw Error("configuration dump: bad edge line");
    entries.emplace_back(e, std::llround(w * double(dist.scale())));
  }
  if (entries.size() != box.edge_count()) throw Error("configuration dump: wrong edge count");
  std::size_t k = 0;
  return Configuration::from_function(box, dist, [&](const Edge& e) {
    if (entries[k].first != e) throw Error("configuration dump: edges out of canonical order");
    return entries[k++].second;
  });
}

}  // namespace fpp
