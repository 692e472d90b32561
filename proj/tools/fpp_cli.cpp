// fpp: experiment runner and single-configuration probes.

#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fpp/fpp.hpp"
#include "fpp/harness.hpp"

namespace {

using fpp::harness::Json;

struct Probe {
  std::uint64_t seed = 1;
  std::uint64_t rep = 0;
  double p = 0.5;
  int n = 16;
  std::vector<int> box;  // x0 x1 y0 y1
  std::string cap = "1000000000";
  std::uint64_t steps = 1'000'000'000;
  double delta1 = 0.25;
  int tile = 32;
  bool json = false;
};

void add_probe_flags(CLI::App* sub, Probe& o) {
  sub->add_option("--seed", o.seed, "master seed");
  sub->add_option("--rep", o.rep, "replicate index");
  sub->add_option("--p", o.p, "P(t(e)=0) for Bernoulli{0,1} weights")->check(CLI::Range(0.0, 1.0));
  sub->add_option("--n", o.n, "target (n,0) / scale")->check(CLI::Range(1, 1 << 20));
  sub->add_option("--box", o.box, "x_min x_max y_min y_max")->expected(4);
  sub->add_option("--cap", o.cap, "count cap");
  sub->add_option("--steps", o.steps, "enumeration step budget");
  sub->add_option("--delta1", o.delta1, "annulus exponent")->check(CLI::Range(0.0, 1.0));
  sub->add_option("--tile", o.tile, "sub-square side for C_S");
  sub->add_flag("--json", o.json, "machine-readable output");
}

fpp::LatticeBox probe_box(const Probe& o, fpp::LatticeBox dflt) {
  if (o.box.empty()) return dflt;
  return {o.box[0], o.box[1], o.box[2], o.box[3]};
}

fpp::Configuration probe_config(const Probe& o, const fpp::LatticeBox& b) {
  return fpp::sample_configuration(b, fpp::EdgeDistribution::bernoulli(o.p), {o.seed, o.rep});
}

fpp::LatticeBox default_box(int n) { return {-n, 2 * n, -n, n}; }

Json path_json(const fpp::LatticePath& p) {
  Json a = Json::array();
  for (const auto& v : p.vertices()) a.push_back({v.x, v.y});
  return a;
}

int cmd_time(const Probe& o) {
  const auto c = probe_config(o, probe_box(o, default_box(o.n)));
  const double t = fpp::point_passage_time(c, o.n);
  if (o.json) std::cout << Json{{"n", o.n}, {"p", o.p}, {"T", t}}.dump() << '\n';
  else std::cout << fpp::format_real(t) << '\n';
  return 0;
}

int cmd_count(const Probe& o) {
  const auto c = probe_config(o, probe_box(o, default_box(o.n)));
  fpp::CountLimits lim{fpp::BigInt(o.cap), o.steps};
  const auto a = fpp::analyze_geodesics(c, {0, 0}, {o.n, 0}, lim);
  if (o.json) {
    Json j{{"n", o.n}, {"p", o.p}, {"T", c.distribution().to_value(a.count.passage_ticks)},
           {"count", fpp::harness::detail::count_json(a.count)}, {"overflow", a.count.overflow},
           {"min_len", a.lengths.min_len}, {"max_len", a.lengths.max_len}, {"length_heuristic", a.lengths.heuristic}};
    std::cout << j.dump() << '\n';
  } else if (a.count.overflow) {
    std::cout << "overflow (" << fpp::to_string(a.count.fired) << "), at least " << a.count.lower_bound.str() << '\n';
  } else {
    std::cout << a.count.value.str() << '\n';
  }
  return 0;
}

int cmd_sample(const Probe& o) {
  const auto c = probe_config(o, probe_box(o, {0, o.n, 0, o.n}));
  fpp::write_configuration(std::cout, c);
  return 0;
}

int cmd_crossing(const Probe& o) {
  const auto b = probe_box(o, {0, o.n, 0, o.n});
  const auto c = probe_config(o, b);
  const auto cr = fpp::lowest_crossing(c, b);
  if (o.json) {
    Json j{{"box", {b.x_min(), b.x_max(), b.y_min(), b.y_max()}}, {"crossing", nullptr}};
    if (cr) {
      j["crossing"] = path_json(cr->path);
      j["length"] = cr->path.length();
      j["three_arm"] = fpp::verify_three_arm(c, *cr, b);
    }
    std::cout << j.dump() << '\n';
  } else if (!cr) {
    std::cout << "no open crossing\n";
  } else {
    std::cout << "length " << cr->path.length() << '\n' << fpp::to_vertex_list(cr->path);
  }
  return 0;
}

int cmd_circuits(const Probe& o) {
  const auto annuli = fpp::annulus_sequence(o.n, o.delta1);
  const auto c = probe_config(o, probe_box(o, fpp::LatticeBox::centered(o.n)));
  Json out = Json::array();
  for (std::size_t i = 0; i < annuli.size(); ++i) {
    const auto in = fpp::innermost_circuit(c, annuli[i]);
    const auto outc = fpp::outermost_circuit(c, annuli[i]);
    Json j{{"annulus", i + 1}, {"inner_half_width", annuli[i].inner().x_max()},
           {"outer_half_width", annuli[i].outer().x_max()}};
    j["innermost_length"] = in ? Json(in->circuit.length()) : Json(nullptr);
    j["outermost_length"] = outc ? Json(outc->circuit.length()) : Json(nullptr);
    out.push_back(j);
    if (!o.json)
      std::cout << "A" << i + 1 << " [" << annuli[i].inner().x_max() << ", " << annuli[i].outer().x_max() << "]: "
                << (in ? "innermost " + std::to_string(in->circuit.length()) + ", outermost " +
                             std::to_string(outc->circuit.length())
                       : std::string("no open circuit"))
                << '\n';
  }
  if (o.json) std::cout << out.dump() << '\n';
  return 0;
}

int cmd_clusters(const Probe& o) {
  const auto b = probe_box(o, {0, o.n, 0, o.n});
  const auto c = probe_config(o, b);
  const auto d = fpp::open_clusters(c, b);
  const auto cmax = *std::max_element(d.size_by_id.begin(), d.size_by_id.end());
  const auto tiles = fpp::boundary_connected_sizes(c, b, o.tile);
  if (o.json) {
    std::cout << Json{{"clusters", d.component_count()}, {"cmax", cmax}, {"tile", o.tile}, {"tile_counts", tiles}}.dump()
              << '\n';
  } else {
    std::cout << "clusters " << d.component_count() << "\ncmax " << cmax << "\ntiles";
    for (auto t : tiles) std::cout << ' ' << t;
    std::cout << '\n';
  }
  return 0;
}

int cmd_certify(const Probe& o) {
  const auto c = probe_config(o, probe_box(o, default_box(o.n)));
  const auto r = fpp::lower_bound_certificate(c, o.n, o.delta1);
  if (const auto* na = std::get_if<fpp::NotApplicable>(&r)) {
    if (o.json) std::cout << Json{{"applicable", false}, {"reason", na->reason}}.dump() << '\n';
    else std::cout << "not-applicable\n";
    return 0;
  }
  const auto& cert = std::get<fpp::CountCertificate>(r);
  if (o.json) {
    Json sq = Json::array();
    for (const auto& s : cert.witness_squares) sq.push_back({s.index.x, s.index.y});
    std::cout << Json{{"applicable", true}, {"event_m", cert.event_index}, {"kappa", cert.kappa},
                      {"lower_bound", cert.lower_bound.str()}, {"good", cert.good_count},
                      {"accessible", cert.accessible_count}, {"witness_squares", sq},
                      {"crossing_length", cert.crossing.length()}}
                     .dump()
              << '\n';
  } else {
    std::cout << "kappa " << cert.kappa << "\n2^" << cert.kappa << " = " << cert.lower_bound.str() << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"First-passage percolation lab"};
  app.require_subcommand(1);

  std::string spec_file, out_dir;
  auto* run = app.add_subcommand("run", "execute an experiment spec");
  run->add_option("spec", spec_file, "spec file")->required();
  run->add_option("--out", out_dir, "results directory (overrides the spec's output)");

  std::string report_dir;
  auto* rep = app.add_subcommand("report", "aggregate a results directory");
  rep->add_option("dir", report_dir, "results directory")->required();

  Probe probe;
  std::map<std::string, int (*)(const Probe&)> probes{
      {"sample", cmd_sample},     {"time", cmd_time},         {"count", cmd_count},   {"crossing", cmd_crossing},
      {"circuits", cmd_circuits}, {"clusters", cmd_clusters}, {"certify", cmd_certify}};
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, fn] : probes) {
    subs[name] = app.add_subcommand(name, name + " on one configuration");
    add_probe_flags(subs[name], probe);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) {
      const auto spec = fpp::harness::load_spec(spec_file);
      const std::string dir = out_dir.empty() ? spec.output : out_dir;
      if (dir.empty()) throw fpp::harness::SpecError("run: no output directory (use --out or 'output:')");
      const auto s = fpp::harness::run(spec, dir);
      std::cout << "spec " << s.hash << ": " << s.completed << " run, " << s.skipped << " skipped, " << s.failed
                << " failed of " << s.total << '\n';
      for (const auto& e : s.errors) std::cerr << e << '\n';
      return s.failed ? 3 : 0;
    }
    if (*rep) {
      fpp::harness::report(report_dir, std::cout);
      return 0;
    }
    for (const auto& [name, fn] : probes)
      if (*subs[name]) return fn(probe);
  } catch (const fpp::harness::SpecError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const fpp::Error& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }
  return 0;
}
