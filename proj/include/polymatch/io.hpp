#pragma once

// JSON Lines polygon records, the versioned JSON index file and the match
// records printed by the command-line tool. Numbers are written with 17
// significant digits so doubles round-trip exactly.

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "polymatch/complex_geometry.hpp"
#include "polymatch/error.hpp"
#include "polymatch/invariants.hpp"
#include "polymatch/matcher.hpp"
#include "polymatch/poly_index.hpp"

namespace polymatch::io {

using nlohmann::json;

inline constexpr const char* kIndexFormatName = "polymatch-index";

/// Malformed input record; `line` is 1-based, 0 when not line oriented.
class InputError : public std::runtime_error {
 public:
  InputError(std::size_t line, const std::string& what)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

inline std::string format_double(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_json(std::ostream& os, const json& j) {
  switch (j.type()) {
    case json::value_t::object: {
      os << '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ',';
        first = false;
        os << json(it.key()).dump() << ':';
        write_json(os, it.value());
      }
      os << '}';
      break;
    }
    case json::value_t::array: {
      os << '[';
      bool first = true;
      for (const auto& v : j) {
        if (!first) os << ',';
        first = false;
        write_json(os, v);
      }
      os << ']';
      break;
    }
    case json::value_t::number_float: os << format_double(j.get<double>()); break;
    default: os << j.dump(); break;
  }
}

inline std::string to_string(const json& j) {
  std::ostringstream os;
  write_json(os, j);
  return os.str();
}

inline json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

inline Complex complex_from(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw std::invalid_argument("expected a [x, y] number pair");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

inline json polygon_json(const Polygon& p) {
  json verts = json::array();
  for (const Complex& z : p.vertices) verts.push_back(complex_json(z));
  return {{"id", p.id}, {"vertices", verts}};
}

inline Polygon polygon_from(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("record is not an object");
  if (!j.contains("id") || !j["id"].is_string()) throw std::invalid_argument("record needs a string 'id'");
  if (!j.contains("vertices") || !j["vertices"].is_array()) throw std::invalid_argument("record needs 'vertices'");
  std::vector<Complex> pts;
  for (const auto& v : j["vertices"]) pts.push_back(complex_from(v));
  return Polygon(j["id"].get<std::string>(), std::move(pts));
}

inline Polygon parse_polygon_record(const std::string& line, std::size_t line_no = 0) {
  try {
    return polygon_from(json::parse(line));
  } catch (const json::exception& e) {
    throw InputError(line_no, std::string("malformed JSON: ") + e.what());
  } catch (const Error& e) {
    throw InputError(line_no, e.what());
  } catch (const std::invalid_argument& e) {
    throw InputError(line_no, e.what());
  }
}

/// One PolygonRecord per non-blank line.
inline std::vector<Polygon> read_polygons_jsonl(std::istream& in) {
  std::vector<Polygon> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(parse_polygon_record(line, line_no));
  }
  return out;
}

inline void write_polygons_jsonl(std::ostream& os, const std::vector<Polygon>& polys) {
  for (const Polygon& p : polys) {
    write_json(os, polygon_json(p));
    os << '\n';
  }
}

inline const char* kind_tag(InvariantValue::Kind k) {
  switch (k) {
    case InvariantValue::Kind::Finite: return "F";
    case InvariantValue::Kind::Infinity: return "I";
    case InvariantValue::Kind::Undefined: return "U";
  }
  return "U";
}

inline InvariantValue::Kind kind_from(const json& j) {
  const std::string t = j.get<std::string>();
  if (t == "F") return InvariantValue::Kind::Finite;
  if (t == "I") return InvariantValue::Kind::Infinity;
  if (t == "U") return InvariantValue::Kind::Undefined;
  throw std::invalid_argument("unknown value kind '" + t + "'");
}

inline json transform_json(const AffineMap& f) {
  return {{"alpha", complex_json(f.alpha)}, {"beta", complex_json(f.beta)}, {"gamma", complex_json(f.gamma)}};
}

inline json match_json(const std::string& query_id, const MatchResult& r) {
  return {{"query_id", query_id},
          {"match_id", r.candidate_id},
          {"shift", r.shift},
          {"transform", transform_json(r.transform)},
          {"residual", r.residual}};
}

inline json pair_match_json(const std::string& query_id, const std::string& query2_id, const PairMatch& r) {
  return {{"query_id", query_id},
          {"query2_id", query2_id},
          {"match_ids", json::array({r.first.candidate_id, r.second.candidate_id})},
          {"shifts", json::array({r.first.shift, r.second.shift})},
          {"transform", transform_json(r.first.transform)},
          {"residual", r.residual}};
}

inline json snapshot_json(const IndexSnapshot& s) {
  json polys = json::array();
  for (const Polygon& p : s.polygons) polys.push_back(polygon_json(p));
  json sigs = json::array();
  for (std::size_t slot = 0; slot < s.j_set.size(); ++slot) {
    json entries = json::array();
    for (const Signature& sig : s.signatures[slot]) {
      entries.push_back(json::array({kind_tag(sig.kind), sig.reciprocal ? 1 : 0, sig.chart_value.real(),
                                     sig.chart_value.imag()}));
    }
    sigs.push_back({{"j", s.j_set[slot]}, {"entries", entries}});
  }
  json planar = json::array();
  for (const InvariantValue& v : s.planar_phi) {
    const Complex z = v.is_finite() ? v.value() : Complex{};
    planar.push_back(json::array({kind_tag(v.kind()), z.real(), z.imag()}));
  }
  return {{"format", kIndexFormatName},
          {"format_version", s.format_version},
          {"n", s.n},
          {"j_set", s.j_set},
          {"cell", s.cell},
          {"polygons", polys},
          {"signatures", sigs},
          {"planar", {{"j", s.j_set.empty() ? 0 : s.j_set.front()}, {"points", planar}}}};
}

inline IndexSnapshot snapshot_from(const json& j) {
  try {
    if (!j.is_object() || j.value("format", "") != std::string(kIndexFormatName)) {
      throw std::invalid_argument("not a polymatch index file");
    }
    IndexSnapshot s;
    s.format_version = j.at("format_version").get<int>();
    s.n = j.at("n").get<int>();
    if (s.n < 3) throw std::invalid_argument("index n must be at least 3");
    s.j_set = j.at("j_set").get<std::vector<int>>();
    s.cell = j.at("cell").get<double>();
    for (const auto& p : j.at("polygons")) s.polygons.push_back(polygon_from(p));
    for (const auto& table : j.at("signatures")) {
      std::vector<Signature> entries;
      const int jj = table.at("j").get<int>();
      for (const auto& e : table.at("entries")) {
        Signature sig;
        sig.n = s.n;
        sig.j = jj;
        sig.kind = kind_from(e.at(0));
        sig.reciprocal = e.at(1).get<int>() != 0;
        sig.chart_value = {e.at(2).get<double>(), e.at(3).get<double>()};
        entries.push_back(sig);
      }
      s.signatures.push_back(std::move(entries));
    }
    for (const auto& e : j.at("planar").at("points")) {
      const auto kind = kind_from(e.at(0));
      if (kind == InvariantValue::Kind::Finite) {
        s.planar_phi.push_back(InvariantValue::finite({e.at(1).get<double>(), e.at(2).get<double>()}));
      } else if (kind == InvariantValue::Kind::Infinity) {
        s.planar_phi.push_back(InvariantValue::infinity());
      } else {
        s.planar_phi.push_back(InvariantValue::undefined());
      }
    }
    return s;
  } catch (const json::exception& e) {
    throw InputError(0, std::string("malformed index file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw InputError(0, std::string("malformed index file: ") + e.what());
  }
}

inline void save_index(std::ostream& os, const PolygonIndex& index) {
  write_json(os, snapshot_json(index.snapshot()));
  os << '\n';
}

inline PolygonIndex load_index(std::istream& in, double check_fraction = 0.01) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(0, std::string("malformed index file: ") + e.what());
  }
  return PolygonIndex::restore(snapshot_from(j), check_fraction);
}

}  // namespace polymatch::io
