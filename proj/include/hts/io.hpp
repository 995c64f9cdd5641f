#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hts/surface.hpp"

namespace hts {

namespace detail {

// Turns "key: value" text (values may continue over following lines) into a JSON object.
inline nlohmann::json parse_key_values(const std::string& text) {
  nlohmann::json obj = nlohmann::json::object();
  std::istringstream in(text);
  std::string line, key, value;
  auto flush = [&] {
    if (key.empty()) return;
    try {
      obj[key] = nlohmann::json::parse(value);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("value of '" + key + "': " + e.what());
    }
    key.clear();
    value.clear();
  };
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto colon = line.find(':');
    bool starts_key = colon != std::string::npos && std::isalpha(static_cast<unsigned char>(line[first]));
    if (starts_key) {
      std::string k = line.substr(first, colon - first);
      while (!k.empty() && std::isspace(static_cast<unsigned char>(k.back()))) k.pop_back();
      bool ident = !k.empty();
      for (char ch : k) ident = ident && (std::isalnum(static_cast<unsigned char>(ch)) || ch == '_');
      if (ident) {
        flush();
        key = k;
        value = line.substr(colon + 1);
        continue;
      }
    }
    if (key.empty()) throw ParseError("text outside a 'key: value' entry: " + line);
    value += "\n" + line;
  }
  flush();
  return obj;
}

inline double finite_number(const nlohmann::json& j) {
  if (!j.is_number()) throw ParseError("expected a number, got " + j.dump());
  double x = j.get<double>();
  if (!std::isfinite(x)) throw ParseError("non-finite number");
  return x;
}

inline int index_value(const nlohmann::json& j) {
  if (!j.is_number_integer()) throw ParseError("expected an integer index, got " + j.dump());
  return j.get<int>();
}

inline Vec2 vec_value(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw ParseError("expected [x,y], got " + j.dump());
  return {finite_number(j[0]), finite_number(j[1])};
}

inline HalfEdge half_edge_value(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw ParseError("expected [triangle,edge], got " + j.dump());
  return {index_value(j[0]), index_value(j[1])};
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace detail

inline SurfaceSpec parse_surface_spec(const std::string& text) {
  auto obj = detail::parse_key_values(text);
  if (!obj.contains("triangles") || !obj.contains("gluings")) throw ParseError("surface needs 'triangles' and 'gluings'");
  SurfaceSpec spec;
  for (const auto& tri : obj["triangles"]) {
    if (!tri.is_array() || tri.size() != 3) throw ParseError("triangle needs three edge vectors");
    spec.triangles.push_back({detail::vec_value(tri[0]), detail::vec_value(tri[1]), detail::vec_value(tri[2])});
  }
  for (const auto& g : obj["gluings"]) {
    if (!g.is_array() || g.size() != 3 || !g[2].is_boolean()) throw ParseError("gluing must be [[ti,ei],[tj,ej],flip]");
    spec.gluings.push_back({detail::half_edge_value(g[0]), detail::half_edge_value(g[1]), g[2].get<bool>()});
  }
  return spec;
}

inline Surface parse_surface(const std::string& text) { return Surface(parse_surface_spec(text)); }
inline Surface load_surface(const std::string& path) { return parse_surface(detail::read_file(path)); }

inline std::string format_surface(const Surface& S) {
  std::ostringstream os;
  os.precision(17);
  os << "triangles: [";
  for (int t = 0; t < S.num_triangles(); ++t) {
    os << (t ? ",\n  " : "") << '[';
    for (int i = 0; i < 3; ++i) os << (i ? "," : "") << '[' << S.triangle(t)[i].x << ',' << S.triangle(t)[i].y << ']';
    os << ']';
  }
  os << "]\ngluings: [";
  const auto& gs = S.spec().gluings;
  for (std::size_t g = 0; g < gs.size(); ++g)
    os << (g ? ",\n  " : "") << "[[" << gs[g].a.tri << ',' << gs[g].a.edge << "],[" << gs[g].b.tri << ','
       << gs[g].b.edge << "]," << (gs[g].flip ? "true" : "false") << ']';
  os << "]\n";
  return os.str();
}

// A curve word lists, cyclically, the half-edges through which the curve leaves each triangle.
using CurveWord = std::vector<HalfEdge>;

inline CurveWord parse_curve(const std::string& text) {
  auto obj = detail::parse_key_values(text);
  if (!obj.contains("curve")) throw ParseError("curve file needs 'curve'");
  CurveWord w;
  for (const auto& h : obj["curve"]) w.push_back(detail::half_edge_value(h));
  return w;
}

inline CurveWord load_curve(const std::string& path) { return parse_curve(detail::read_file(path)); }

inline std::string format_curve(const CurveWord& w) {
  std::ostringstream os;
  os << "curve: [";
  for (std::size_t i = 0; i < w.size(); ++i) os << (i ? "," : "") << '[' << w[i].tri << ',' << w[i].edge << ']';
  os << "]\n";
  return os.str();
}

}  // namespace hts
