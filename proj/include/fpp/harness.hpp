#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "fpp/cluster_stats.hpp"
#include "fpp/critical_geometry.hpp"
#include "fpp/estimators.hpp"
#include "fpp/geodesics.hpp"
#include "fpp/passage.hpp"
#include "fpp/random_field.hpp"

namespace fpp::harness {

inline constexpr const char* kToolVersion = "1.0.0";

class SpecError : public Error {
 public:
  using Error::Error;
};

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> k{"mu",           "count_subcritical", "count_critical",
                                          "crossing_length", "rsw_events",    "cluster_max",
                                          "a0n_growth",   "certificate_sweep", "supercritical_divergence"};
  return k;
}

struct ExperimentSpec {
  std::string kind;
  std::vector<double> p;
  std::vector<int> n;
  int replicates = 0;
  std::uint64_t seed = 0;
  BigInt cap = 1'000'000'000;
  std::uint64_t step_budget = 1'000'000'000;
  double delta1 = 0.25;
  int tile = 32;
  int margin = 1;
  std::vector<int> widths{2, 4, 8};
  bool record_timing = false;
  std::string output;  // not part of the hash
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const char* b = v.data();
  const char* e = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(b, e, out);
  if (ec != std::errc() || ptr != e) throw SpecError("spec: bad value for " + key + ": '" + v + "'");
  return out;
}

template <class T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_floating_point_v<T>) out += format_real(xs[i]);
    else out += std::to_string(xs[i]);
  }
  return out;
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

/// Key-value text, one `key: value` per line, `#` comments.
inline ExperimentSpec parse_spec(const std::string& text) {
  ExperimentSpec s;
  std::set<std::string> seen;
  std::istringstream is(text);
  std::string line;
  bool versioned = false;
  while (std::getline(is, line)) {
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw SpecError("spec: expected 'key: value', got '" + line + "'");
    const std::string key = detail::trim(line.substr(0, colon));
    const std::string val = detail::trim(line.substr(colon + 1));
    if (!seen.insert(key).second) throw SpecError("spec: duplicate key " + key);
    if (key == "spec_version") {
      if (val != "1") throw SpecError("spec: unsupported spec_version " + val);
      versioned = true;
    } else if (key == "kind") {
      s.kind = val;
    } else if (key == "p") {
      for (const auto& x : detail::split_list(val)) s.p.push_back(detail::parse_number<double>(key, x));
    } else if (key == "n") {
      for (const auto& x : detail::split_list(val)) s.n.push_back(detail::parse_number<int>(key, x));
    } else if (key == "replicates") {
      s.replicates = detail::parse_number<int>(key, val);
    } else if (key == "seed") {
      s.seed = detail::parse_number<std::uint64_t>(key, val);
    } else if (key == "cap") {
      if (val.empty() || val.find_first_not_of("0123456789") != std::string::npos)
        throw SpecError("spec: bad value for cap");
      s.cap = BigInt(val);
    } else if (key == "step_budget") {
      s.step_budget = detail::parse_number<std::uint64_t>(key, val);
    } else if (key == "delta1") {
      s.delta1 = detail::parse_number<double>(key, val);
    } else if (key == "tile") {
      s.tile = detail::parse_number<int>(key, val);
    } else if (key == "margin") {
      s.margin = detail::parse_number<int>(key, val);
    } else if (key == "widths") {
      s.widths.clear();
      for (const auto& x : detail::split_list(val)) s.widths.push_back(detail::parse_number<int>(key, x));
    } else if (key == "record_timing") {
      if (val != "true" && val != "false") throw SpecError("spec: record_timing must be true or false");
      s.record_timing = val == "true";
    } else if (key == "output") {
      s.output = val;
    } else {
      throw SpecError("spec: unknown key " + key);
    }
  }
  if (!versioned) throw SpecError("spec: missing spec_version");
  const auto& kinds = experiment_kinds();
  if (std::find(kinds.begin(), kinds.end(), s.kind) == kinds.end()) throw SpecError("spec: unknown kind '" + s.kind + "'");
  if (s.p.empty() || s.n.empty()) throw SpecError("spec: p and n lists are required");
  for (double p : s.p)
    if (!(p >= 0.0 && p <= 1.0)) throw SpecError("spec: p must lie in [0,1]");
  for (int n : s.n)
    if (n < 2 || n > 4096) throw SpecError("spec: n must lie in [2,4096]");
  if (s.replicates < 1 || s.replicates > 1'000'000) throw SpecError("spec: replicates must lie in [1,1e6]");
  if (s.cap < 1) throw SpecError("spec: cap must be >= 1");
  if (s.step_budget < 1) throw SpecError("spec: step_budget must be >= 1");
  if (!(s.delta1 > 0.0 && s.delta1 < 1.0)) throw SpecError("spec: delta1 must lie in (0,1)");
  if (s.tile < 1) throw SpecError("spec: tile must be >= 1");
  if (s.margin < 1 || s.margin > 16) throw SpecError("spec: margin must lie in [1,16]");
  if (s.widths.empty()) throw SpecError("spec: widths must be nonempty");
  for (int w : s.widths)
    if (w < 1 || w > 64) throw SpecError("spec: widths must lie in [1,64]");
  if (s.kind == "rsw_events" || s.kind == "certificate_sweep" || s.kind == "count_critical") {
    for (int n : s.n) {
      if (n < 4) throw SpecError("spec: annulus experiments need n >= 4");
      if (s.kind == "rsw_events") {
        try {
          annulus_sequence(n, s.delta1);
        } catch (const Error& e) {
          throw SpecError(std::string("spec: ") + e.what());
        }
      }
    }
  }
  return s;
}

inline ExperimentSpec load_spec(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw SpecError("spec: cannot read " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_spec(ss.str());
}

/// Fixed-order serialisation of every field except `output`.
inline std::string canonical(const ExperimentSpec& s) {
  std::ostringstream os;
  os << "spec_version: 1\n"
     << "kind: " << s.kind << '\n'
     << "p: " << detail::join(s.p) << '\n'
     << "n: " << detail::join(s.n) << '\n'
     << "replicates: " << s.replicates << '\n'
     << "seed: " << s.seed << '\n'
     << "cap: " << s.cap.str() << '\n'
     << "step_budget: " << s.step_budget << '\n'
     << "delta1: " << format_real(s.delta1) << '\n'
     << "tile: " << s.tile << '\n'
     << "margin: " << s.margin << '\n'
     << "widths: " << detail::join(s.widths) << '\n'
     << "record_timing: " << (s.record_timing ? "true" : "false") << '\n';
  return os.str();
}

inline std::string spec_hash(const ExperimentSpec& s) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(detail::fnv1a64(canonical(s))));
  return buf;
}

struct Cell {
  double p = 0.0;
  int n = 0;
  int width = 0;  // supercritical box half-width multiplier, else 0
  int rep = 0;

  std::string id() const {
    return "p" + format_real(p) + "_n" + std::to_string(n) + "_w" + std::to_string(width) + "_r" + std::to_string(rep);
  }
};

inline std::vector<Cell> enumerate_cells(const ExperimentSpec& s) {
  std::vector<Cell> out;
  const std::vector<int> ws = s.kind == "supercritical_divergence" ? s.widths : std::vector<int>{0};
  for (double p : s.p)
    for (int n : s.n)
      for (int w : ws)
        for (int r = 0; r < s.replicates; ++r) out.push_back({p, n, w, r});
  return out;
}

/// Same stream for every p and box width of one (n, rep): configurations are
/// monotonically coupled in p and nested boxes agree on shared edges.
inline SeedSpec cell_seed(const ExperimentSpec& s, const Cell& c) {
  return {s.seed, (std::uint64_t(std::uint32_t(c.n)) << 32) | std::uint32_t(c.rep)};
}

inline LatticeBox cell_box(const ExperimentSpec& s, const Cell& c) {
  const int n = c.n, m = s.margin;
  if (s.kind == "crossing_length" || s.kind == "cluster_max") return {0, n, 0, n};
  if (s.kind == "rsw_events") return LatticeBox::centered(n);
  if (s.kind == "supercritical_divergence") return LatticeBox::centered(c.width * n);
  return {-m * n, (1 + m) * n, -m * n, m * n};
}

using Json = nlohmann::ordered_json;

namespace detail {

inline Json count_json(const GeodesicCount& g) {
  if (g.exact()) return g.value.str();
  return Json{{"overflow", true},
              {"cap", g.cap.str()},
              {"steps", g.steps},
              {"fired", to_string(g.fired)},
              {"lower_bound", g.lower_bound.str()}};
}

}  // namespace detail

/// One record for one cell. Deterministic unless record_timing is set.
inline Json run_cell(const ExperimentSpec& s, const std::string& hash, const Cell& cell) {
  const auto t0 = std::chrono::steady_clock::now();
  const SeedSpec seed = cell_seed(s, cell);
  const LatticeBox box = cell_box(s, cell);
  const auto dist = EdgeDistribution::bernoulli(cell.p);
  const Configuration c = sample_configuration(box, dist, seed);
  Json r;
  r["spec_hash"] = hash;
  r["kind"] = s.kind;
  r["p"] = cell.p;
  r["n"] = cell.n;
  r["rep"] = cell.rep;
  r["seed"] = stream_key(seed);
  for (const char* k : {"T", "count", "overflow", "max_len", "cross_len", "kappa", "cmax", "event_E"}) r[k] = nullptr;
  CountLimits lim{s.cap, s.step_budget};
  const Vertex origin{0, 0}, target{cell.n, 0};

  if (s.kind == "mu" || s.kind == "a0n_growth") {
    r["T"] = point_passage_time(c, cell.n);
  } else if (s.kind == "count_subcritical" || s.kind == "count_critical" || s.kind == "certificate_sweep" ||
             s.kind == "supercritical_divergence") {
    const auto a = analyze_geodesics(c, origin, target, lim, s.kind == "supercritical_divergence" ? 0 : 16);
    r["T"] = dist.to_value(a.count.passage_ticks);
    r["count"] = detail::count_json(a.count);
    r["overflow"] = a.count.overflow;
    if (s.kind != "supercritical_divergence") r["max_len"] = a.lengths.max_len;
    if (s.kind == "count_critical" || s.kind == "certificate_sweep") {
      const auto cert = lower_bound_certificate(c, cell.n, s.delta1);
      if (const auto* cc = std::get_if<CountCertificate>(&cert)) {
        r["kappa"] = cc->kappa;
        r["event_m"] = cc->event_index;
      } else {
        r["event_m"] = nullptr;
      }
    }
  } else if (s.kind == "crossing_length") {
    if (const auto cr = lowest_crossing(c, box)) r["cross_len"] = cr->path.length();
  } else if (s.kind == "cluster_max") {
    r["cmax"] = largest_cluster_size(c, box);
    const auto tiles = boundary_connected_sizes(c, box, std::min(s.tile, cell.n));
    double mean = 0.0;
    for (auto t : tiles) mean += double(t);
    r["tile_mean"] = mean / double(tiles.size());
  } else if (s.kind == "rsw_events") {
    const auto annuli = annulus_sequence(cell.n, s.delta1);
    Json ev = Json::object();
    for (int i = 2; i + 1 <= int(annuli.size()); ++i) ev[std::to_string(i)] = detect_event_E(c, i, annuli);
    r["event_E"] = ev;
  }
  if (s.kind == "supercritical_divergence") r["width"] = cell.width;
  r["cell"] = cell.id();
  r["box"] = {box.x_min(), box.x_max(), box.y_min(), box.y_max()};
  if (s.record_timing)
    r["wall_ms"] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  else
    r["wall_ms"] = nullptr;
  return r;
}

inline int thread_count() {
  if (const char* e = std::getenv("FPP_THREADS")) {
    const int v = std::atoi(e);
    if (v >= 1) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

struct RunSummary {
  std::size_t total = 0;
  std::size_t skipped = 0;
  std::size_t completed = 0;
  std::size_t failed = 0;
  std::string hash;
  std::vector<std::string> errors;
};

namespace detail {

inline std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Drops a trailing partial line left by an interrupted run.
inline void repair_tail(const std::filesystem::path& file) {
  if (!std::filesystem::exists(file)) return;
  std::string data;
  {
    std::ifstream in(file, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    data = ss.str();
  }
  if (data.empty() || data.back() == '\n') return;
  const auto last = data.rfind('\n');
  std::filesystem::resize_file(file, last == std::string::npos ? 0 : last + 1);
}

inline std::set<std::string> completed_cells(const std::filesystem::path& file, const std::string& hash) {
  std::set<std::string> out;
  std::ifstream in(file);
  std::string line;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("spec_hash") || !j.contains("cell")) continue;
    if (j["spec_hash"] == hash) out.insert(j["cell"].get<std::string>());
  }
  return out;
}

}  // namespace detail

/// Runs every pending cell with a fixed worker pool; a single writer appends
/// records in cell order.
inline RunSummary run(const ExperimentSpec& s, const std::filesystem::path& dir, int threads = thread_count()) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  RunSummary sum;
  sum.hash = spec_hash(s);
  const std::string start = detail::utc_now();
  {
    std::ofstream(dir / "spec.txt") << canonical(s);
  }
  const fs::path records = dir / "records.jsonl";
  detail::repair_tail(records);
  const auto done = detail::completed_cells(records, sum.hash);
  const auto cells = enumerate_cells(s);
  sum.total = cells.size();
  std::vector<Cell> pending;
  for (const auto& c : cells)
    if (!done.contains(c.id())) pending.push_back(c);
  sum.skipped = cells.size() - pending.size();

  std::vector<std::string> lines(pending.size());
  std::vector<std::uint8_t> state(pending.size(), 0);  // 0 pending, 1 ok, 2 failed
  std::mutex mu;
  std::condition_variable cv;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= pending.size()) return;
      std::string line;
      std::uint8_t st = 1;
      try {
        line = run_cell(s, sum.hash, pending[i]).dump();
      } catch (const std::exception& e) {
        line = pending[i].id() + ": " + e.what();
        st = 2;
      }
      {
        std::lock_guard<std::mutex> lk(mu);
        lines[i] = std::move(line);
        state[i] = st;
      }
      cv.notify_all();
    }
  };
  std::vector<std::thread> pool;
  const int nt = std::max(1, std::min<int>(threads, int(std::max<std::size_t>(1, pending.size()))));
  for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
  {
    std::ofstream out(records, std::ios::app);
    for (std::size_t i = 0; i < pending.size(); ++i) {
      std::string line;
      std::uint8_t st;
      {
        std::unique_lock<std::mutex> lk(mu);
        cv.wait(lk, [&] { return state[i] != 0; });
        line = std::move(lines[i]);
        st = state[i];
      }
      if (st == 1) {
        out << line << '\n';
        out.flush();
        ++sum.completed;
      } else {
        ++sum.failed;
        sum.errors.push_back(line);
      }
    }
  }
  for (auto& t : pool) t.join();

  Json manifest;
  manifest["spec"] = canonical(s);
  manifest["spec_hash"] = sum.hash;
  manifest["tool_version"] = kToolVersion;
  manifest["start_time"] = start;
  manifest["end_time"] = detail::utc_now();
  manifest["cells_total"] = sum.total;
  manifest["cells_skipped"] = sum.skipped;
  manifest["cells_completed"] = sum.completed;
  manifest["cells_failed"] = sum.failed;
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
  return sum;
}

// ---------------------------------------------------------------------------
// Aggregation

using Record = nlohmann::json;

struct Results {
  ExperimentSpec spec;
  std::string hash;
  std::vector<Record> records;
};

inline Results load_results(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / "spec.txt") || !std::filesystem::exists(dir / "records.jsonl"))
    throw SpecError("report: no results in " + dir.string());
  Results r;
  r.spec = load_spec(dir / "spec.txt");
  r.hash = spec_hash(r.spec);
  std::ifstream in(dir / "records.jsonl");
  std::string line;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || j.value("spec_hash", "") != r.hash) continue;
    r.records.push_back(std::move(j));
  }
  if (r.records.empty()) throw SpecError("report: no completed cells in " + dir.string());
  return r;
}

/// Natural log of an exact count, or of the best certified lower bound
/// (partial count under overflow, 2^kappa from the certificate).
inline double log_count_bound(const Record& r) {
  double best = 0.0;
  const auto& c = r["count"];
  auto log_dec = [](const std::string& s) { return std::log(BigInt(s).convert_to<double>()); };
  if (c.is_string()) best = log_dec(c.get<std::string>());
  else if (c.is_object()) {
    const auto lb = c["lower_bound"].get<std::string>();
    if (lb != "0") best = log_dec(lb);
  }
  if (r.contains("kappa") && r["kappa"].is_number()) best = std::max(best, r["kappa"].get<double>() * std::log(2.0));
  return best;
}

inline std::map<double, std::map<int, std::vector<const Record*>>> by_p_n(const std::vector<Record>& rs) {
  std::map<double, std::map<int, std::vector<const Record*>>> out;
  for (const auto& r : rs) out[r["p"].get<double>()][r["n"].get<int>()].push_back(&r);
  return out;
}

inline std::map<double, MuEstimate> analyze_mu(const Results& res) {
  std::map<double, MuEstimate> out;
  for (const auto& [p, byn] : by_p_n(res.records)) {
    std::map<int, std::vector<double>> samples;
    for (const auto& [n, rs] : byn)
      for (const auto* r : rs) samples[n].push_back((*r)["T"].get<double>());
    out[p] = estimate_mu(samples, p);
  }
  return out;
}

inline std::map<double, SlopeFit> analyze_subcritical(const Results& res) {
  std::map<double, SlopeFit> out;
  for (const auto& [p, byn] : by_p_n(res.records)) {
    std::map<int, std::vector<std::optional<double>>> samples;
    for (const auto& [n, rs] : byn)
      for (const auto* r : rs) {
        const auto& c = (*r)["count"];
        if (c.is_string()) samples[n].push_back(std::log(BigInt(c.get<std::string>()).convert_to<double>()));
        else samples[n].push_back(std::nullopt);
      }
    out[p] = subcritical_slope(samples);
  }
  return out;
}

struct ExponentAnalysis {
  FitResult fit;
  std::vector<Point> points;
  double censored_fraction = 0.0;
};

/// Weighted power-law fit of per-n means of f(record); records where f gives
/// nullopt are dropped.
template <class F>
ExponentAnalysis exponent_of_means(const std::map<int, std::vector<const Record*>>& byn, F&& f) {
  ExponentAnalysis a;
  std::size_t total = 0, dropped = 0;
  for (const auto& [n, rs] : byn) {
    std::vector<double> xs;
    for (const auto* r : rs) {
      ++total;
      if (auto v = f(*r)) xs.push_back(*v);
      else ++dropped;
    }
    if (xs.empty()) continue;
    const auto s = summarize(xs);
    a.points.push_back({double(n), s.mean, std::max(s.stderr_, 1e-9 * std::abs(s.mean) + 1e-12)});
  }
  a.censored_fraction = total ? double(dropped) / double(total) : 0.0;
  a.fit = fit_power_law_weighted(a.points);
  return a;
}

struct CriticalAnalysis {
  ExponentAnalysis log_count;
  ExponentAnalysis max_len;
  double overflow_fraction = 0.0;
};

inline std::map<double, CriticalAnalysis> analyze_critical(const Results& res) {
  std::map<double, CriticalAnalysis> out;
  for (const auto& [p, byn] : by_p_n(res.records)) {
    CriticalAnalysis a;
    a.log_count = exponent_of_means(byn, [](const Record& r) { return std::optional<double>(log_count_bound(r)); });
    a.max_len = exponent_of_means(byn, [](const Record& r) -> std::optional<double> {
      if (!r["max_len"].is_number()) return std::nullopt;
      return r["max_len"].get<double>();
    });
    std::size_t tot = 0, ov = 0;
    for (const auto& [n, rs] : byn)
      for (const auto* r : rs) {
        ++tot;
        ov += (*r)["overflow"].get<bool>();
      }
    a.overflow_fraction = double(ov) / double(tot);
    out[p] = a;
  }
  return out;
}

inline std::map<double, ExponentAnalysis> analyze_field_exponent(const Results& res, const char* field) {
  std::map<double, ExponentAnalysis> out;
  for (const auto& [p, byn] : by_p_n(res.records))
    out[p] = exponent_of_means(byn, [field](const Record& r) -> std::optional<double> {
      if (!r[field].is_number()) return std::nullopt;
      return r[field].get<double>();
    });
  return out;
}

inline std::map<double, LogGrowthFit> analyze_a0n(const Results& res) {
  std::map<double, LogGrowthFit> out;
  for (const auto& [p, byn] : by_p_n(res.records)) {
    std::vector<Point> pts;
    for (const auto& [n, rs] : byn) {
      std::vector<double> xs;
      for (const auto* r : rs) xs.push_back((*r)["T"].get<double>());
      const auto s = summarize(xs);
      pts.push_back({double(n), s.mean, s.stderr_});
    }
    out[p] = fit_log_growth(pts);
  }
  return out;
}

struct EventRates {
  std::map<int, std::map<int, double>> rate;  // n -> i -> P(E_i)
  double min_rate = 1.0;
};

inline std::map<double, EventRates> analyze_rsw(const Results& res) {
  std::map<double, EventRates> out;
  for (const auto& [p, byn] : by_p_n(res.records)) {
    EventRates e;
    for (const auto& [n, rs] : byn) {
      std::map<int, std::pair<int, int>> hits;
      for (const auto* r : rs)
        for (const auto& [k, v] : (*r)["event_E"].items()) {
          auto& h = hits[std::stoi(k)];
          h.first += v.get<bool>();
          ++h.second;
        }
      for (const auto& [i, h] : hits) {
        e.rate[n][i] = double(h.first) / double(h.second);
        e.min_rate = std::min(e.min_rate, e.rate[n][i]);
      }
    }
    out[p] = e;
  }
  return out;
}

struct CertificateAudit {
  std::size_t instances = 0;
  std::size_t applicable = 0;
  std::size_t both_complete = 0;
  std::size_t violations = 0;
  std::size_t max_kappa = 0;
};

inline CertificateAudit audit_certificates(const Results& res) {
  CertificateAudit a;
  for (const auto& r : res.records) {
    ++a.instances;
    if (!r["kappa"].is_number()) continue;
    ++a.applicable;
    const auto kappa = r["kappa"].get<std::size_t>();
    a.max_kappa = std::max(a.max_kappa, kappa);
    if (!r["count"].is_string()) continue;
    ++a.both_complete;
    if ((BigInt(1) << kappa) > BigInt(r["count"].get<std::string>())) ++a.violations;
  }
  return a;
}

struct DivergenceAnalysis {
  std::map<int, double> overflow_fraction;  // width -> fraction
  std::size_t increasing_steps = 0;
  std::size_t steps = 0;
};

inline std::map<std::pair<double, int>, DivergenceAnalysis> analyze_supercritical(const Results& res) {
  std::map<std::pair<double, int>, std::map<int, std::pair<int, int>>> tally;
  for (const auto& r : res.records) {
    auto& t = tally[{r["p"].get<double>(), r["n"].get<int>()}][r["width"].get<int>()];
    t.first += r["overflow"].get<bool>();
    ++t.second;
  }
  std::map<std::pair<double, int>, DivergenceAnalysis> out;
  for (const auto& [key, byw] : tally) {
    DivergenceAnalysis a;
    std::optional<double> prev;
    for (const auto& [w, t] : byw) {
      const double f = double(t.first) / double(t.second);
      a.overflow_fraction[w] = f;
      if (prev) {
        ++a.steps;
        a.increasing_steps += f > *prev;
      }
      prev = f;
    }
    out[key] = a;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report

struct SummaryRow {
  std::string quantity;
  double p = 0.0;
  double exponent = 0.0;
  double stderr_ = 0.0;
  double r2 = 0.0;
  int n_points = 0;
  std::string verdict;
};

namespace detail {

inline void write_dat(const std::filesystem::path& file, const std::vector<Point>& pts) {
  std::ofstream out(file);
  for (const auto& pt : pts) out << format_real(pt.x) << ' ' << format_real(pt.y) << '\n';
}

inline std::string ptag(double p) { return "p" + format_real(p); }

inline std::string fit_verdict(const FitResult& f, double ref, bool above) {
  const bool ok = above ? f.ci_low() > ref : f.ci_high() < ref;
  return std::string(above ? "exponent>" : "exponent<") + format_real(ref) + (ok ? ":yes" : ":no");
}

}  // namespace detail

/// Aggregates a results directory into summary.csv and .dat plot files;
/// returns the rows and writes verdict lines to `log`.
inline std::vector<SummaryRow> report(const std::filesystem::path& dir, std::ostream& log) {
  const Results res = load_results(dir);
  const std::string& kind = res.spec.kind;
  std::vector<SummaryRow> rows;
  auto from_fit = [](std::string q, double p, const FitResult& f, std::string v) {
    return SummaryRow{std::move(q), p, f.exponent, f.stderr_, f.r_squared, f.n_points, std::move(v)};
  };

  if (kind == "mu") {
    for (const auto& [p, m] : analyze_mu(res)) {
      const bool positive = m.ci_low > 0.0;
      rows.push_back({"mu", p, m.mu_hat, (m.ci_high - m.ci_low) / 3.92, 0.0, int(m.n_grid.size()),
                      positive ? "mu>0" : "mu=0"});
      rows.push_back({"mu_ratio_nmax", p, m.ratio_at_nmax, m.ratio_stderr, 0.0, 1,
                      m.still_decreasing ? "still-decreasing" : "stable"});
      std::vector<Point> pts;
      for (std::size_t i = 0; i < m.n_grid.size(); ++i) pts.push_back({double(m.n_grid[i]), m.ratio_means[i]});
      detail::write_dat(dir / ("mu_ratio_" + detail::ptag(p) + ".dat"), pts);
      log << "phase p=" << format_real(p) << ": mu_hat=" << format_real(m.mu_hat) << " CI=[" << format_real(m.ci_low)
          << ", " << format_real(m.ci_high) << "] -> " << (positive ? "subcritical (mu>0)" : "mu=0") << '\n';
    }
  } else if (kind == "count_subcritical") {
    std::vector<double> ps, slopes;
    for (const auto& [p, s] : analyze_subcritical(res)) {
      const bool pos = !s.degenerate && s.fit.ci_low() > 0.0;
      rows.push_back(from_fit("log_count_slope", p, s.fit, s.degenerate ? "degenerate" : pos ? "slope>0" : "slope>0:no"));
      rows.push_back({"censoring", p, s.censored_fraction, 0.0, 0.0, s.fit.n_points, ""});
      detail::write_dat(dir / ("log_count_" + detail::ptag(p) + ".dat"), s.means);
      ps.push_back(p);
      slopes.push_back(s.fit.exponent);
      log << "subcritical slope p=" << format_real(p) << ": " << format_real(s.fit.exponent) << " CI=["
          << format_real(s.fit.ci_low()) << ", " << format_real(s.fit.ci_high()) << "] r2=" << format_real(s.fit.r_squared)
          << " censored=" << format_real(s.censored_fraction) << (pos ? " -> positive" : " -> not positive") << '\n';
    }
    if (ps.size() >= 2) {
      const auto t = slope_divergence_sweep(ps, slopes);
      rows.push_back({"slope_divergence", ps.back(), slopes.back(), 0.0, 0.0, int(ps.size()),
                      t.increasing ? "increasing" : "non-increasing"});
      std::vector<Point> pts;
      for (const auto& [p, s] : t.rows) pts.push_back({p, s});
      detail::write_dat(dir / "slope_vs_p.dat", pts);
      log << "slope divergence toward p=1/2: " << (t.increasing ? "increasing" : "non-increasing") << '\n';
    }
  } else if (kind == "count_critical") {
    for (const auto& [p, a] : analyze_critical(res)) {
      const bool super = a.log_count.fit.ci_low() > 1.0;
      rows.push_back(from_fit("log_count_exponent", p, a.log_count.fit, detail::fit_verdict(a.log_count.fit, 1.0, true)));
      rows.push_back(from_fit("max_len_exponent", p, a.max_len.fit, detail::fit_verdict(a.max_len.fit, 2.0, false)));
      rows.push_back({"overflow_fraction", p, a.overflow_fraction, 0.0, 0.0, a.log_count.fit.n_points, ""});
      detail::write_dat(dir / ("log_count_" + detail::ptag(p) + ".dat"), a.log_count.points);
      detail::write_dat(dir / ("max_len_" + detail::ptag(p) + ".dat"), a.max_len.points);
      log << "critical superlinearity p=" << format_real(p) << ": b=" << format_real(a.log_count.fit.exponent) << " CI=["
          << format_real(a.log_count.fit.ci_low()) << ", " << format_real(a.log_count.fit.ci_high()) << "] -> "
          << (super ? "superlinear" : "not established") << '\n';
    }
  } else if (kind == "crossing_length" || kind == "cluster_max") {
    const bool cross = kind == "crossing_length";
    for (const auto& [p, a] : analyze_field_exponent(res, cross ? "cross_len" : "cmax")) {
      const auto v = detail::fit_verdict(a.fit, cross ? 1.0 : 2.0, cross);
      rows.push_back(from_fit(cross ? "crossing_length_exponent" : "cmax_exponent", p, a.fit, v));
      detail::write_dat(dir / (std::string(cross ? "cross_len_" : "cmax_") + detail::ptag(p) + ".dat"), a.points);
      log << (cross ? "lowest-crossing length" : "largest cluster") << " exponent p=" << format_real(p) << ": "
          << format_real(a.fit.exponent) << " CI=[" << format_real(a.fit.ci_low()) << ", " << format_real(a.fit.ci_high())
          << "] " << v << '\n';
    }
  } else if (kind == "a0n_growth") {
    for (const auto& [p, g] : analyze_a0n(res)) {
      rows.push_back(from_fit("a0n_log_slope", p, g.log_fit, g.log_preferred ? "log-preferred" : "linear-preferred"));
      rows.push_back(from_fit("a0n_linear_slope", p, g.linear_fit, ""));
      log << "a_{0,n} growth p=" << format_real(p) << ": log r2=" << format_real(g.log_fit.r_squared)
          << " linear r2=" << format_real(g.linear_fit.r_squared) << " -> "
          << (g.log_preferred ? "logarithmic" : "linear") << '\n';
    }
  } else if (kind == "rsw_events") {
    for (const auto& [p, e] : analyze_rsw(res)) {
      std::vector<Point> pts;
      for (const auto& [n, byi] : e.rate) {
        double lo = 1.0;
        for (const auto& [i, r] : byi) lo = std::min(lo, r);
        pts.push_back({double(n), lo});
        rows.push_back({"P_E_min_n" + std::to_string(n), p, lo, 0.0, 0.0, int(byi.size()), lo > 0.01 ? "above-0.01" : "below-0.01"});
      }
      detail::write_dat(dir / ("event_rate_" + detail::ptag(p) + ".dat"), pts);
      log << "RSW events p=" << format_real(p) << ": min P(E_i)=" << format_real(e.min_rate) << '\n';
    }
  } else if (kind == "certificate_sweep") {
    const auto a = audit_certificates(res);
    rows.push_back({"certificate_violations", res.spec.p.front(), double(a.violations), 0.0, 0.0, int(a.both_complete),
                    a.violations == 0 ? "sound" : "violated"});
    rows.push_back({"certificate_applicable", res.spec.p.front(), double(a.applicable) / double(a.instances), 0.0, 0.0,
                    int(a.instances), ""});
    log << "certificate: " << a.applicable << "/" << a.instances << " applicable, " << a.both_complete
        << " checked against exact counts, " << a.violations << " violations\n";
  } else if (kind == "supercritical_divergence") {
    for (const auto& [key, a] : analyze_supercritical(res)) {
      std::vector<Point> pts;
      for (const auto& [w, f] : a.overflow_fraction) pts.push_back({double(w), f});
      detail::write_dat(dir / ("overflow_" + detail::ptag(key.first) + "_n" + std::to_string(key.second) + ".dat"), pts);
      const bool inc = a.steps > 0 && a.increasing_steps == a.steps;
      rows.push_back({"overflow_increase_steps", key.first, double(a.increasing_steps), 0.0, 0.0, int(a.steps),
                      inc ? "increasing" : "not-increasing"});
      log << "supercritical divergence p=" << format_real(key.first) << " n=" << key.second << ": overflow fraction";
      for (const auto& [w, f] : a.overflow_fraction) log << " w" << w << '=' << format_real(f);
      log << " -> " << (inc ? "increasing" : "not increasing") << '\n';
    }
  }

  std::ofstream csv(dir / "summary.csv");
  csv << "quantity,p,exponent,stderr,r2,n_points,verdict\n";
  for (const auto& r : rows)
    csv << r.quantity << ',' << format_real(r.p) << ',' << format_real(r.exponent) << ',' << format_real(r.stderr_) << ','
        << format_real(r.r2) << ',' << r.n_points << ',' << r.verdict << '\n';
  return rows;
}

}  // namespace fpp::harness
