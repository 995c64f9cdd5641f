#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hts/collar.hpp"
#include "hts/ergodic.hpp"
#include "hts/geodesic.hpp"
#include "hts/io.hpp"
#include "hts/rectdecomp.hpp"
#include "hts/saddle.hpp"
#include "hts/traintrack.hpp"

namespace hts::cli {

enum ExitCode { ok = 0, domain_error = 1, usage_error = 2 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Identical runs must give identical bytes.
inline std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

inline std::string csv_field(std::string s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

struct LoadedCurve {
  CurveWord word;
  std::optional<std::string> surface;  // path from the file's 'surface' key, resolved against its directory
};

inline LoadedCurve load_curve_file(const std::string& path) {
  auto text = detail::read_file(path);
  auto obj = detail::parse_key_values(text);
  LoadedCurve c{parse_curve(text), std::nullopt};
  if (obj.contains("surface")) {
    if (!obj["surface"].is_string()) throw ParseError("'surface' must be a quoted path");
    c.surface = (std::filesystem::path(path).parent_path() / obj["surface"].get<std::string>()).string();
  }
  return c;
}

// An explicit --surface wins; otherwise every curve must name the same surface file.
inline Surface surface_for(const std::string& flag, const std::vector<LoadedCurve>& curves) {
  if (!flag.empty()) return load_surface(flag);
  std::optional<std::string> path;
  for (const auto& c : curves) {
    if (!c.surface) continue;
    if (path && std::filesystem::weakly_canonical(*path) != std::filesystem::weakly_canonical(*c.surface))
      throw UsageError("curves name different surfaces; pass --surface");
    path = c.surface;
  }
  if (!path) throw UsageError("no surface: pass --surface or add a 'surface' key to the curve file");
  return load_surface(*path);
}

inline FlatGeodesic tightened(const Surface& S, const CurveWord& w) {
  validate_word(S, w);
  return tighten(S, w);
}

// ---------------------------------------------------------------------------------------------
// Subcommands. Each writes its result to out and returns normally or throws.

inline void cmd_build(const std::string& path, std::ostream& out) {
  Surface S = load_surface(path);
  auto m = surface_metrics(S);
  out << "area=" << num(S.area()) << " genus=" << S.genus() << " triangles=" << S.num_triangles()
      << " edges=" << S.num_edges() << " vertices=" << S.num_vertices() << " flips=" << (S.has_flips() ? 1 : 0)
      << "\n";
  for (int v = 0; v < S.num_vertices(); ++v)
    out << "vertex=" << v << " angle=" << num(S.cone_angle(v) / pi) << "pi order=" << S.vertex_order(v)
        << (S.vertex_order(v) == 0 ? " marked" : "") << "\n";
  out << "stratum={";
  auto sig = stratum_signature(S);
  for (std::size_t i = 0; i < sig.size(); ++i) out << (i ? "," : "") << sig[i];
  out << "}\ndiameter=[" << num(m.diameter_lower) << "," << num(m.diameter_upper) << "]\n";
}

inline void cmd_saddles(const Surface& S, double L, std::ostream& out) {
  if (!(L > 0)) throw UsageError("--max-length must be positive");
  out << "v0,v1,holonomy_x,holonomy_y,length\n";
  for (const auto& c : enumerate_saddle_connections(S, L))
    out << c.v0 << "," << c.v1 << "," << num(c.holonomy.x) << "," << num(c.holonomy.y) << "," << num(c.length) << "\n";
}

inline void cmd_tighten(const Surface& S, const CurveWord& w, std::ostream& out) {
  auto g = tightened(S, w);
  auto st = geodesic_stats(g);
  out << "kind=" << (g.kind == GeodesicKind::Cylinder ? "cylinder" : "singular") << " length=" << num(g.length())
      << " re=" << num(st.re) << " im=" << num(st.im) << " connections=" << g.num_connections() << "\n"
      << format_curve(curve_word(S, g));
}

inline void cmd_intersect(const Surface& S, const CurveWord& a, const CurveWord& b, std::ostream& out) {
  auto r = intersection_bounds(S, tightened(S, a), tightened(S, b));
  out << "I=" << r.I << " n=" << r.n << " m=" << r.m << " interval=[" << r.lo << "," << r.hi << "]\n";
}

inline void cmd_rectdecomp(const Surface& S, const CurveWord& w, std::ostream& out) {
  auto D = build_rect_decomposition(S, tightened(S, w), ell_min(S));
  out << "kind,start_triangle,length\n";
  for (const auto& x : D.segments)
    out << (x.horizontal ? "horizontal" : "vertical") << "," << x.seg.start.tri << "," << num(x.seg.length) << "\n";
}

inline void cmd_collar(const Surface& S, const CurveWord& w, double delta, int side, std::ostream& out) {
  Collar C = build_collar(S, tightened(S, w));
  auto B = bump_function(C, delta, side);
  double im = C.im();
  out << "integral=" << num(integrate(B)) << " sobolev=" << num(sobolev_norm(S, B)) << " im=" << num(im);
  // Residuals are nonnegative when the sandwich holds; side 1 needs simple zeros at the ends.
  out << " lower_residual=" << num(im - integrate(bump_function(C, delta, 0)));
  try {
    out << " upper_residual=" << num(integrate(bump_function(C, delta, 1)) - im);
  } catch (const HigherOrderZero&) {
    out << " upper_residual=na";
  }
  out << "\n";
}

struct CsvRow {
  double param = 0, predicted = 0, lo = 0, hi = 0, residual = 0, normalized = 0;
  std::uint64_t seed = 0;
};

inline std::vector<CsvRow> equidist_rows(const Surface& S, double theta, const std::vector<double>& Ts, int bumps,
                                         std::uint64_t seed) {
  auto ser = equidistribution_series(S, theta, Ts, bumps, seed);
  std::vector<CsvRow> rows;
  for (std::size_t i = 0; i < ser.T.size(); ++i)
    rows.push_back({ser.T[i], ser.mean_expected[i], ser.mean_integral[i], ser.mean_integral[i], ser.mean_error[i],
                    ser.mean[i], seed});
  return rows;
}

// Curve words do not see scale, so q_s is normalized to unit area here.
inline CsvRow estimate_row(const Surface& S, double r, const CurveWord& a, const CurveWord& b) {
  Surface qs = normalize_area(S);
  validate_word(qs, a);
  validate_word(qs, b);
  auto e = main_estimate(qs, r, a, b);
  return {r, e.predicted, double(e.lo), double(e.hi), e.residual, e.normalized, 0};
}

inline const char* csv_header(const std::string& param) {
  return param == "T" ? "T,predicted,actual_lo,actual_hi,residual,normalized_residual,seed\n"
                      : "r,predicted,actual_lo,actual_hi,residual,normalized_residual,seed\n";
}

inline void write_row(std::ostream& out, const CsvRow& r) {
  out << num(r.param) << "," << num(r.predicted) << "," << num(r.lo) << "," << num(r.hi) << "," << num(r.residual)
      << "," << num(r.normalized) << "," << r.seed << "\n";
}

inline void cmd_itinerary(const Surface& S, double delta, double T, double dt, double s, double rho, double eps,
                          std::ostream& out, std::ostream& err) {
  if (!(dt > 0 && s > 0 && T > 0 && delta > 0)) throw UsageError("delta, T, dt and s must be positive");
  auto tr = orbit_trace(S, delta, T, dt, s);
  auto it = sample_itinerary(tr, T, rho, s);
  auto chk = validate_itinerary(it, tr, T, rho, eps, s);
  out << "n,time\n";
  for (std::size_t n = 0; n < it.times.size(); ++n) out << n << "," << num(it.times[n]) << "\n";
  err << "N=" << it.N() << " excursion=" << num(excursion_measure(tr)) << " valid=" << (chk.valid() ? 1 : 0);
  for (auto v : chk.violations) err << " violation=" << v.condition << "@" << v.n;
  err << "\n";
}

inline void cmd_traintrack(const Surface& S, std::ostream& out) {
  auto tt = dual_train_track(S);
  auto w = vertical_counting_measure(S, tt);
  out << "record,id,incoming,outgoing0,outgoing1,holonomy_x,holonomy_y,weight\n";
  for (int e = 0; e < tt.num_edges; ++e) {
    Vec2 h = S.edge(S.edge_halves(e)[0]);
    out << "edge," << e << ",,,," << num(h.x) << "," << num(h.y) << "," << num(w[e]) << "\n";
  }
  for (const auto& sw : tt.switches)
    out << "switch," << sw.triangle << "," << sw.incoming << "," << sw.outgoing[0] << "," << sw.outgoing[1] << ",,,\n";
  for (int v = 0; v < S.num_vertices(); ++v) out << "cusps," << v << ",,,,,," << tt.cusps[v] << "\n";
}

// ---------------------------------------------------------------------------------------------
// Batch runs. The config uses the flag names as keys; list values span a grid and every grid
// point becomes one row. Rows run concurrently and are written in grid order.

struct BatchPoint {
  std::size_t index = 0;
  std::string surface;
  double theta = 0, param = 0;
  std::uint64_t seed = 0;
};

inline const char* batch_header =
    "# index: grid position; param: T for equidist, r for estimate; status ok or failed with the error code in "
    "message\n"
    "index,command,surface,theta,param,seed,predicted,actual_lo,actual_hi,residual,normalized_residual,status,"
    "message\n";

inline std::vector<nlohmann::json> as_list(const nlohmann::json& obj, const std::string& key, nlohmann::json fallback) {
  if (!obj.contains(key)) return {fallback};
  const auto& v = obj[key];
  if (v.is_array()) return std::vector<nlohmann::json>(v.begin(), v.end());
  return {v};
}

inline void experiment_batch(const std::string& config_path, std::ostream& out) {
  auto obj = detail::parse_key_values(detail::read_file(config_path));
  auto dir = std::filesystem::path(config_path).parent_path();
  auto rel = [&](const nlohmann::json& j) {
    if (!j.is_string()) throw ParseError("paths must be quoted strings");
    return (dir / j.get<std::string>()).string();
  };
  if (!obj.contains("command") || !obj["command"].is_string()) throw ParseError("batch config needs 'command'");
  std::string command = obj["command"].get<std::string>();
  if (command != "equidist" && command != "estimate") throw UsageError("batch supports equidist and estimate");
  bool eq = command == "equidist";
  const char* pkey = eq ? "T" : "r";
  if (!obj.contains(pkey)) throw ParseError(std::string("batch config needs '") + pkey + "'");

  std::vector<BatchPoint> grid;
  for (const auto& s : as_list(obj, "surface", nullptr))
    for (const auto& th : as_list(obj, "theta", 0.0))
      for (const auto& sd : as_list(obj, "seed", 0))
        for (const auto& p : as_list(obj, pkey, nullptr)) {
          if (!sd.is_number_unsigned() && !(sd.is_number_integer() && sd.get<long long>() >= 0))
            throw ParseError("seed must be a nonnegative integer");
          grid.push_back({grid.size(), s.is_null() ? std::string() : rel(s), detail::finite_number(th),
                          detail::finite_number(p), sd.get<std::uint64_t>()});
        }
  int bumps = obj.contains("bumps") ? detail::index_value(obj["bumps"]) : 10;
  std::optional<CurveWord> alpha, beta;
  if (!eq) {
    if (!obj.contains("alpha") || !obj.contains("beta")) throw ParseError("estimate batch needs 'alpha' and 'beta'");
    alpha = load_curve(rel(obj["alpha"]));
    beta = load_curve(rel(obj["beta"]));
  }

  auto run = [&](const BatchPoint& g) {
    std::ostringstream row;
    row << g.index << "," << command << "," << csv_field(g.surface) << "," << num(g.theta) << "," << num(g.param) << ","
        << g.seed << ",";
    try {
      if (g.surface.empty()) throw ParseError("no surface");
      Surface S = load_surface(g.surface);
      CsvRow r = eq ? equidist_rows(S, g.theta, {g.param}, bumps, g.seed).front() : estimate_row(S, g.param, *alpha, *beta);
      row << num(r.predicted) << "," << num(r.lo) << "," << num(r.hi) << "," << num(r.residual) << ","
          << num(r.normalized) << ",ok,\n";
    } catch (const Error& e) {
      row << ",,,,,failed," << csv_field(e.code() + ": " + e.what()) << "\n";
    }
    return row.str();
  };
  std::vector<std::future<std::string>> rows;
  for (const auto& g : grid) rows.push_back(std::async(std::launch::async, run, g));
  out << batch_header;
  for (auto& r : rows) out << r.get();
}

// ---------------------------------------------------------------------------------------------

inline int run_command(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Computations on half-translation surfaces", "hts"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  std::string surface, curve, curve2, config, output;
  double max_length = 0, delta = 0.01, theta = 0;
  int side = 0, bumps = 10;
  std::uint64_t seed = 0;
  std::vector<double> Ts, rs;
  double T = 5, dt = 0.01, s = 1, rho = 0.1, eps = 0.5;
  std::string alpha, beta;

  auto* build = app.add_subcommand("build", "Validate a surface file and print its cone data");
  build->add_option("surface", surface, "Surface file")->required();

  auto* saddles = app.add_subcommand("saddles", "List saddle connections up to a length as CSV");
  saddles->add_option("--surface", surface, "Surface file")->required();
  saddles->add_option("--max-length", max_length, "Length bound")->required();

  auto* tight = app.add_subcommand("tighten", "Flat geodesic representative of a curve");
  tight->add_option("curve", curve, "Curve file")->required();
  tight->add_option("--surface", surface, "Surface file (default: the curve's own)");

  auto* inter = app.add_subcommand("intersect", "Transverse count and two-sided bounds for a curve pair");
  inter->add_option("a", curve, "First curve file")->required();
  inter->add_option("b", curve2, "Second curve file")->required();
  inter->add_option("--surface", surface, "Surface file (default: the curves' own)");

  auto* rect = app.add_subcommand("rectdecomp", "Rectangular decomposition segments as CSV");
  rect->add_option("curve", curve, "Curve file")->required();
  rect->add_option("--surface", surface, "Surface file (default: the curve's own)");

  auto* col = app.add_subcommand("collar", "Bump function integral, Sobolev norm and sandwich residuals");
  col->add_option("curve", curve, "Curve file")->required();
  col->add_option("--surface", surface, "Surface file (default: the curve's own)");
  col->add_option("--delta", delta, "Taper length")->capture_default_str();
  col->add_option("--side", side, "0 or 1")->check(CLI::IsMember({0, 1}))->capture_default_str();

  auto* equi = app.add_subcommand("equidist", "Equidistribution errors of long horizontal segments as CSV");
  equi->add_option("--surface", surface, "Surface file")->required();
  equi->add_option("--theta", theta, "Rotation angle")->capture_default_str();
  equi->add_option("--T", Ts, "Log segment lengths, comma separated")->delimiter(',')->required();
  equi->add_option("--bumps", bumps, "Number of bump functions")->check(CLI::PositiveNumber)->capture_default_str();
  equi->add_option("--seed", seed, "Seed for segment start points")->capture_default_str();

  auto* est = app.add_subcommand("estimate", "Predicted versus certified intersection number as CSV");
  est->add_option("--qs", surface, "Surface file, normalized to unit area")->required();
  est->add_option("--r", rs, "Flow times, comma separated")->delimiter(',')->required();
  est->add_option("--alpha", alpha, "Curve file")->required();
  est->add_option("--beta", beta, "Curve file")->required();

  auto* itin = app.add_subcommand("itinerary", "Sampled return times along the flow orbit as CSV");
  itin->add_option("--surface", surface, "Surface file")->required();
  itin->add_option("--delta", delta, "Threshold on the shortest saddle connection")->capture_default_str();
  itin->add_option("--T", T, "Time horizon")->capture_default_str();
  itin->add_option("--dt", dt, "Trace resolution")->capture_default_str();
  itin->add_option("--s", s, "Window length")->capture_default_str();
  itin->add_option("--rho", rho, "Start fraction")->capture_default_str();
  itin->add_option("--eps", eps, "Slack")->capture_default_str();

  auto* track = app.add_subcommand("traintrack", "Dual train track and vertical weights as CSV");
  track->add_option("--surface", surface, "Surface file")->required();

  auto* batch = app.add_subcommand("batch", "Run an experiment config and write one CSV row per grid point");
  batch->add_option("config", config, "Config file")->required();
  batch->add_option("-o,--output", output, "Output CSV (default: stdout)");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return ok;
  } catch (const CLI::ParseError& e) {
    err << "usage: " << e.what() << "\n";
    return usage_error;
  }

  auto curves = [&](std::vector<std::string> paths) {
    std::vector<LoadedCurve> cs;
    for (const auto& p : paths) cs.push_back(load_curve_file(p));
    return cs;
  };
  try {
    if (*build) {
      cmd_build(surface, out);
    } else if (*saddles) {
      cmd_saddles(load_surface(surface), max_length, out);
    } else if (*tight) {
      auto cs = curves({curve});
      cmd_tighten(surface_for(surface, cs), cs[0].word, out);
    } else if (*inter) {
      auto cs = curves({curve, curve2});
      cmd_intersect(surface_for(surface, cs), cs[0].word, cs[1].word, out);
    } else if (*rect) {
      auto cs = curves({curve});
      cmd_rectdecomp(surface_for(surface, cs), cs[0].word, out);
    } else if (*col) {
      auto cs = curves({curve});
      cmd_collar(surface_for(surface, cs), cs[0].word, delta, side, out);
    } else if (*equi) {
      auto rows = equidist_rows(load_surface(surface), theta, Ts, bumps, seed);
      out << csv_header("T");
      for (const auto& r : rows) write_row(out, r);
    } else if (*est) {
      Surface S = load_surface(surface);
      auto a = load_curve(alpha), b = load_curve(beta);
      std::vector<CsvRow> rows;
      for (double r : rs) rows.push_back(estimate_row(S, r, a, b));
      out << csv_header("r");
      for (const auto& r : rows) write_row(out, r);
    } else if (*itin) {
      cmd_itinerary(load_surface(surface), delta, T, dt, s, rho, eps, out, err);
    } else if (*track) {
      cmd_traintrack(load_surface(surface), out);
    } else if (*batch) {
      if (output.empty()) {
        experiment_batch(config, out);
      } else {
        std::ostringstream buf;
        experiment_batch(config, buf);
        std::ofstream f(output);
        if (!f) throw ParseError("cannot write " + output);
        f << buf.str();
      }
    }
  } catch (const UsageError& e) {
    err << "usage: " << e.what() << "\n";
    return usage_error;
  } catch (const Error& e) {
    err << "error: " << e.code() << ": " << e.what() << "\n";
    return domain_error;
  }
  return ok;
}

}  // namespace hts::cli
