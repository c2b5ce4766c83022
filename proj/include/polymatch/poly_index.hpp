#pragma once

// Collection index over the cyclic-shift signatures phi_{n,j}^n and the
// primary invariant phi_{n,j0}:
//   * query_similarity       unknown similarity, hashed signature cells
//   * query_known_affine     known f, annulus search in a kd-tree over phi
//   * query_pair             unknown affine f shared by two query polygons
//   * multi_signature_filter intersection of per-j candidate lists

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <iterator>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "polymatch/complex_geometry.hpp"
#include "polymatch/error.hpp"
#include "polymatch/invariants.hpp"
#include "polymatch/kd_tree.hpp"
#include "polymatch/matcher.hpp"

namespace polymatch {

inline constexpr double kDefaultCell = 1e-6;
inline constexpr int kIndexFormatVersion = 1;

struct ProbeStats {
  std::size_t bucket_probes = 0;
  std::size_t kd_nodes = 0;
  std::size_t points_tested = 0;
};

struct CandidateSet {
  std::vector<std::string> ids;
  std::vector<MatchResult> verified;
  ProbeStats stats;
};

struct PairMatch {
  MatchResult first;   // W  ~ f(shift(Z_l))
  MatchResult second;  // W' ~ f(shift(Z_l'))
  double residual = 0.0;
};

struct PairCandidateSet {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::vector<PairMatch> verified;
  ProbeStats stats;
};

/// Euclidean shape of {xi : |xi - zeta| = k |1 - conj(zeta) xi|}.
struct ApollonianQueryCircle {
  enum class Kind { Circle, Line, Plane };
  Kind kind = Kind::Circle;
  Complex center{};
  double radius = 0.0;
  // Line: {xi : Re(conj(normal) xi) = offset}.
  Complex normal{};
  double offset = 0.0;
};

inline ApollonianQueryCircle pseudo_hyperbolic_circle(const RiemannPoint& zeta, double k) {
  ApollonianQueryCircle out;
  if (zeta.is_infinite()) {
    // d(inf, xi) = 1/|xi|.
    out.radius = k > 0.0 ? 1.0 / k : HUGE_VAL;
    return out;
  }
  const Complex z = zeta.value();
  const double k2 = k * k;
  const double a = 1.0 - k2 * std::norm(z);
  const double lin = 1.0 - k2;
  if (std::abs(a) <= 1e-14) {
    if (std::abs(lin) <= 1e-14) {
      out.kind = ApollonianQueryCircle::Kind::Plane;
      return out;
    }
    out.kind = ApollonianQueryCircle::Kind::Line;
    out.normal = z / std::abs(z);
    out.offset = (std::norm(z) - k2) / (2.0 * lin * std::abs(z));
    return out;
  }
  // a|xi - c|^2 = a|c|^2 - (|zeta|^2 - k^2) with c = (1 - k^2) zeta / a.
  out.center = lin * z / a;
  out.radius = std::sqrt(std::max(0.0, std::norm(out.center) - (std::norm(z) - k2) / a));
  return out;
}

/// Distinct values lambda_n^{2 j l} * zeta over shifts l. A shift of Z by l
/// multiplies phi_{n,j}(Z) by lambda_n^{-2jl}, so a known-affine match of a
/// shifted candidate lies on the circle around one of these points.
inline std::vector<RiemannPoint> rotation_orbit(const RiemannPoint& zeta, int n, int j) {
  if (zeta.is_infinite()) return {zeta};
  const int order = n / std::gcd(n, 2 * j);
  std::vector<RiemannPoint> out;
  out.reserve(static_cast<std::size_t>(order));
  for (int l = 0; l < order; ++l) out.emplace_back(root_of_unity(2LL * j * l, n) * zeta.value());
  return out;
}

/// Candidate predicate for known-affine queries.
inline bool known_affine_hit(const InvariantValue& phi, std::span<const RiemannPoint> orbit, double k, double tol) {
  if (phi.is_undefined()) return false;
  const RiemannPoint p = phi.point();
  for (const RiemannPoint& u : orbit) {
    const double d = pseudo_hyperbolic_distance(p, u);
    if (std::isfinite(d) && std::abs(d - k) <= tol) return true;
  }
  return false;
}

/// Pair-query eta values d(phi, u) for u in the orbit; empty when phi is undefined.
inline std::vector<double> eta_values(const InvariantValue& phi, std::span<const RiemannPoint> orbit) {
  std::vector<double> out;
  if (phi.is_undefined()) return out;
  const RiemannPoint p = phi.point();
  out.reserve(orbit.size());
  for (const RiemannPoint& u : orbit) out.push_back(pseudo_hyperbolic_distance(p, u));
  return out;
}

inline bool eta_close(double a, double b, double tol) {
  if (std::isinf(a) || std::isinf(b)) return std::isinf(a) && std::isinf(b);
  return std::abs(a - b) <= tol;
}

/// Structural dump of a PolygonIndex. Signatures and invariants are stored,
/// and re-derivable from the polygons as a consistency check.
struct IndexSnapshot {
  int format_version = kIndexFormatVersion;
  int n = 0;
  std::vector<int> j_set;
  double cell = kDefaultCell;
  std::vector<Polygon> polygons;
  std::vector<std::vector<Signature>> signatures;  // [j slot][polygon]
  std::vector<InvariantValue> planar_phi;          // phi_{n,j_set[0]} per polygon
};

class PolygonIndex {
 public:
  static PolygonIndex build(std::vector<Polygon> collection, std::vector<int> j_set, double cell = kDefaultCell) {
    if (j_set.empty()) throw Error(ErrorCode::EmptyJSet, "j_set is empty");
    if (collection.empty()) throw Error(ErrorCode::EmptyCollection, "collection is empty");
    validate_cell(cell);
    const std::size_t n = collection.front().size();
    for (const Polygon& p : collection) {
      if (p.size() != n) {
        throw Error(ErrorCode::MixedSizes, "polygon '" + p.id + "' has " + std::to_string(p.size()) +
                                               " vertices, expected " + std::to_string(n));
      }
    }
    validate_j_set(j_set, n);

    IndexSnapshot snap;
    snap.n = static_cast<int>(n);
    snap.j_set = std::move(j_set);
    snap.cell = cell;
    snap.signatures.resize(snap.j_set.size());
    for (std::size_t s = 0; s < snap.j_set.size(); ++s) {
      snap.signatures[s].reserve(collection.size());
      for (const Polygon& p : collection) snap.signatures[s].push_back(signature(p, snap.j_set[s]));
    }
    snap.planar_phi.reserve(collection.size());
    for (const Polygon& p : collection) snap.planar_phi.push_back(phi_nj(p, snap.j_set.front()));
    snap.polygons = std::move(collection);
    return PolygonIndex(std::move(snap));
  }

  /// Rebuilds from a dump. A deterministic stride covering `check_fraction`
  /// of the polygons (at least one) has its invariants recomputed and must
  /// agree with the stored ones within 1e-12 chordal.
  static PolygonIndex restore(IndexSnapshot snap, double check_fraction = 0.01) {
    if (snap.format_version != kIndexFormatVersion) {
      throw Error(ErrorCode::IntegrityFailure, "unsupported index format version " +
                                                   std::to_string(snap.format_version));
    }
    if (snap.polygons.empty()) throw Error(ErrorCode::EmptyCollection, "snapshot has no polygons");
    if (snap.j_set.empty()) throw Error(ErrorCode::EmptyJSet, "snapshot j_set is empty");
    if (snap.n < 3) throw Error(ErrorCode::IntegrityFailure, "snapshot n must be at least 3");
    validate_cell(snap.cell);
    validate_j_set(snap.j_set, static_cast<std::size_t>(snap.n));
    const std::size_t m = snap.polygons.size();
    if (snap.signatures.size() != snap.j_set.size() || snap.planar_phi.size() != m) {
      throw Error(ErrorCode::IntegrityFailure, "snapshot table sizes disagree");
    }
    for (const auto& table : snap.signatures) {
      if (table.size() != m) throw Error(ErrorCode::IntegrityFailure, "signature table has wrong length");
    }
    for (const Polygon& p : snap.polygons) {
      if (p.size() != static_cast<std::size_t>(snap.n)) {
        throw Error(ErrorCode::IntegrityFailure, "polygon '" + p.id + "' does not have n vertices");
      }
    }
    const double fraction = std::clamp(check_fraction, 0.0, 1.0);
    const std::size_t stride =
        fraction > 0.0 ? std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(1.0 / fraction))) : m;
    for (std::size_t i = 0; i < m; i += stride) {
      const Polygon& p = snap.polygons[i];
      for (std::size_t s = 0; s < snap.j_set.size(); ++s) {
        const Signature fresh = signature(p, snap.j_set[s]);
        const Signature& stored = snap.signatures[s][i];
        if (!same_value(fresh, stored)) {
          throw Error(ErrorCode::IntegrityFailure, "stored signature of '" + p.id + "' does not match");
        }
      }
      const InvariantValue fresh_phi = phi_nj(p, snap.j_set.front());
      if (!same_value(fresh_phi, snap.planar_phi[i])) {
        throw Error(ErrorCode::IntegrityFailure, "stored invariant of '" + p.id + "' does not match");
      }
    }
    return PolygonIndex(std::move(snap));
  }

  const IndexSnapshot& snapshot() const { return data_; }

  int n() const { return data_.n; }
  const std::vector<int>& j_set() const { return data_.j_set; }
  int primary_j() const { return data_.j_set.front(); }
  double cell() const { return data_.cell; }
  /// Signatures within this chordal distance are candidates of each other.
  double match_radius() const { return data_.cell / 2.0; }
  std::size_t size() const { return data_.polygons.size(); }
  const Polygon& polygon(std::size_t i) const { return data_.polygons[i]; }
  const std::vector<Polygon>& polygons() const { return data_.polygons; }
  const Signature& signature_of(std::size_t i, std::size_t j_slot) const { return data_.signatures[j_slot][i]; }
  const InvariantValue& phi_of(std::size_t i) const { return data_.planar_phi[i]; }
  std::size_t planar_size() const { return planar_.size(); }

  std::optional<std::size_t> find(const std::string& id) const {
    const auto it = by_id_.find(id);
    if (it == by_id_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t j_slot(int j) const {
    const auto it = std::find(data_.j_set.begin(), data_.j_set.end(), j);
    if (it == data_.j_set.end()) throw Error(ErrorCode::BadJ, "j=" + std::to_string(j) + " is not indexed");
    return static_cast<std::size_t>(it - data_.j_set.begin());
  }

  /// Bucket size -> number of buckets, for one j. Infinity and Undefined
  /// buckets are reported when nonempty.
  std::map<std::size_t, std::size_t> occupancy(std::size_t slot) const {
    std::map<std::size_t, std::size_t> hist;
    for (const auto& [key, ids] : tables_[slot].cells) ++hist[ids.size()];
    if (!tables_[slot].infinity.empty()) ++hist[tables_[slot].infinity.size()];
    if (!tables_[slot].undefined.empty()) ++hist[tables_[slot].undefined.size()];
    return hist;
  }

  /// Raw similarity candidates for one indexed j: same signature kind and,
  /// for finite signatures, chordal distance <= match_radius(). Sorted by
  /// collection position.
  std::vector<std::uint32_t> signature_candidates(const Polygon& w, int j, ProbeStats* stats = nullptr) const {
    check_query_size(w);
    const std::size_t slot = j_slot(j);
    const Table& table = tables_[slot];
    const Signature sig = signature(w, j);
    std::vector<std::uint32_t> out;
    if (sig.kind == Signature::Kind::Infinity || sig.kind == Signature::Kind::Undefined) {
      if (stats) ++stats->bucket_probes;
      out = sig.kind == Signature::Kind::Infinity ? table.infinity : table.undefined;
      return out;
    }
    const CellKey centre = cell_key(sig.folded());
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        if (stats) ++stats->bucket_probes;
        const auto it = table.cells.find({centre.x + dx, centre.y + dy});
        if (it == table.cells.end()) continue;
        for (std::uint32_t id : it->second) {
          if (chordal_distance(sig, data_.signatures[slot][id]) <= match_radius()) out.push_back(id);
        }
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  CandidateSet query_similarity(const Polygon& w, double tol) const { return query_similarity(w, primary_j(), tol); }

  CandidateSet query_similarity(const Polygon& w, int j, double tol) const {
    CandidateSet out;
    const auto raw = signature_candidates(w, j, &out.stats);
    verify_similarity_candidates(w, raw, tol, out);
    return out;
  }

  CandidateSet multi_signature_filter(const Polygon& w, double tol) const {
    return multi_signature_filter(w, std::span<const int>(data_.j_set), tol);
  }

  /// Intersection of the per-j candidate lists over `js` (a subset of the
  /// indexed j values), then similarity verification.
  CandidateSet multi_signature_filter(const Polygon& w, std::span<const int> js, double tol) const {
    if (js.size() < 2) throw Error(ErrorCode::NeedsMultipleJ, "multi-signature filtering needs at least two j");
    CandidateSet out;
    std::vector<std::uint32_t> survivors = signature_candidates(w, js[0], &out.stats);
    for (std::size_t s = 1; s < js.size(); ++s) {
      const auto next = signature_candidates(w, js[s], &out.stats);
      std::vector<std::uint32_t> merged;
      std::set_intersection(survivors.begin(), survivors.end(), next.begin(), next.end(),
                            std::back_inserter(merged));
      survivors = std::move(merged);
    }
    verify_similarity_candidates(w, survivors, tol, out);
    return out;
  }

  /// Candidates Z with |d(phi(Z), u) - |beta/alpha|| <= tol for some u in the
  /// rotation orbit of phi(W), verified as W = f(shift(Z)).
  CandidateSet query_known_affine(const Polygon& w, const AffineMap& f, double tol) const {
    check_query_size(w);
    f.validate();
    CandidateSet out;
    const auto raw = known_affine_candidates(w, f, tol, &out.stats);
    for (std::uint32_t id : raw) {
      out.ids.push_back(data_.polygons[id].id);
      if (auto r = verify_known_affine(w, data_.polygons[id], f, tol)) out.verified.push_back(std::move(*r));
    }
    sort_results(out.verified);
    return out;
  }

  std::vector<std::uint32_t> known_affine_candidates(const Polygon& w, const AffineMap& f, double tol,
                                                     ProbeStats* stats = nullptr) const {
    check_query_size(w);
    const double k = affine_ratio(f);
    const InvariantValue zeta = phi_nj(w, primary_j());
    std::vector<std::uint32_t> out;
    if (zeta.is_undefined()) {
      // The null set is preserved by invertible affine maps.
      if (stats) ++stats->bucket_probes;
      return undefined_phi_;
    }
    const std::vector<RiemannPoint> orbit = rotation_orbit(zeta.point(), n(), primary_j());
    if (stats) ++stats->bucket_probes;
    for (std::uint32_t id : infinite_phi_) {
      if (known_affine_hit(data_.planar_phi[id], orbit, k, tol)) out.push_back(id);
    }
    KdQueryStats kd;
    planar_.query([&](const Box& box) { return annulus_may_intersect(box, orbit, k - tol, k + tol); },
                  [&](const PlanarKdTree::Entry& e) {
                    if (known_affine_hit(data_.planar_phi[e.id], orbit, k, tol)) out.push_back(e.id);
                  },
                  &kd);
    if (stats) {
      stats->kd_nodes += kd.nodes_visited;
      stats->points_tested += kd.points_tested;
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Pairs (l, l') whose eta values agree within tol, found by 1-d hashing of
  /// the eta' values, then verified by solving f from Z_l -> W and checking
  /// W' = f(shift(Z_l')).
  PairCandidateSet query_pair(const Polygon& w, const Polygon& w2, double tol) const {
    const auto raw = pair_candidates(w, w2, tol);
    PairCandidateSet out;
    out.stats = raw.second;
    for (const auto& [l, l2] : raw.first) {
      const Polygon& z = data_.polygons[l];
      const Polygon& z2 = data_.polygons[l2];
      out.pairs.emplace_back(z.id, z2.id);
      std::vector<MatchResult> firsts;
      try {
        firsts = affine_matches(w, z, tol);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::AllTriplesCollinear) throw;
        continue;
      }
      std::optional<PairMatch> best;
      for (const MatchResult& first : firsts) {
        if (!first.transform.is_valid()) continue;
        if (auto second = verify_known_affine(w2, z2, first.transform, tol)) {
          PairMatch pm{first, *second, std::max(first.residual, second->residual)};
          if (!best || pm.residual < best->residual) best = std::move(pm);
        }
      }
      if (best) out.verified.push_back(std::move(*best));
    }
    std::stable_sort(out.verified.begin(), out.verified.end(), [](const PairMatch& a, const PairMatch& b) {
      if (a.residual != b.residual) return a.residual < b.residual;
      if (a.first.candidate_id != b.first.candidate_id) return a.first.candidate_id < b.first.candidate_id;
      return a.second.candidate_id < b.second.candidate_id;
    });
    return out;
  }

  /// Raw candidate pairs of collection positions, sorted.
  std::pair<std::vector<std::pair<std::uint32_t, std::uint32_t>>, ProbeStats> pair_candidates(
      const Polygon& w, const Polygon& w2, double tol) const {
    check_query_size(w);
    check_query_size(w2);
    if (!(tol > 0.0) || !std::isfinite(tol)) {
      throw Error(ErrorCode::InvalidTolerance, "pair matching needs a positive finite tolerance");
    }
    ProbeStats stats;
    const std::size_t m = size();
    const InvariantValue zeta = phi_nj(w, primary_j());
    const InvariantValue zeta2 = phi_nj(w2, primary_j());
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;

    if (zeta.is_undefined() || zeta2.is_undefined()) {
      // No eta constraint can be formed; pair the null-set bucket with every
      // admissible polygon on the other side.
      auto side = [&](const InvariantValue& z) {
        if (z.is_undefined()) return undefined_phi_;
        std::vector<std::uint32_t> all;
        for (std::uint32_t i = 0; i < m; ++i) {
          if (!data_.planar_phi[i].is_undefined()) all.push_back(i);
        }
        return all;
      };
      const auto left = side(zeta);
      const auto right = side(zeta2);
      for (std::uint32_t a : left) {
        for (std::uint32_t b : right) pairs.emplace_back(a, b);
      }
      return {pairs, stats};
    }

    const auto orbit = rotation_orbit(zeta.point(), n(), primary_j());
    const auto orbit2 = rotation_orbit(zeta2.point(), n(), primary_j());
    std::unordered_map<std::int64_t, std::vector<std::pair<double, std::uint32_t>>> buckets;
    for (std::uint32_t i = 0; i < m; ++i) {
      for (double eta : eta_values(data_.planar_phi[i], orbit2)) buckets[eta_key(eta, tol)].emplace_back(eta, i);
    }
    for (std::uint32_t i = 0; i < m; ++i) {
      for (double eta : eta_values(data_.planar_phi[i], orbit)) {
        const std::int64_t key = eta_key(eta, tol);
        const bool inf = key == kInfKey;
        for (std::int64_t d = inf ? 0 : -1; d <= (inf ? 0 : 1); ++d) {
          ++stats.bucket_probes;
          const auto it = buckets.find(key + d);
          if (it == buckets.end()) continue;
          for (const auto& [eta2, i2] : it->second) {
            if (eta_close(eta, eta2, tol)) pairs.emplace_back(i, i2);
          }
        }
      }
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    return {pairs, stats};
  }

 private:
  struct CellKey {
    std::int64_t x;
    std::int64_t y;
    bool operator==(const CellKey&) const = default;
  };
  struct CellKeyHash {
    std::size_t operator()(const CellKey& k) const noexcept {
      const auto hx = static_cast<std::uint64_t>(k.x) * 0x9E3779B97F4A7C15ULL;
      const auto hy = static_cast<std::uint64_t>(k.y) * 0xC2B2AE3D27D4EB4FULL;
      return static_cast<std::size_t>(hx ^ (hy + 0x165667B19E3779F9ULL + (hx << 6) + (hx >> 2)));
    }
  };
  struct Table {
    std::unordered_map<CellKey, std::vector<std::uint32_t>, CellKeyHash> cells;
    std::vector<std::uint32_t> infinity;
    std::vector<std::uint32_t> undefined;
  };

  static constexpr std::int64_t kInfKey = std::numeric_limits<std::int64_t>::max();
  static constexpr double kKeyClamp = 4.0e18;

  explicit PolygonIndex(IndexSnapshot snap) : data_(std::move(snap)) {
    const std::size_t m = data_.polygons.size();
    for (std::size_t i = 0; i < m; ++i) {
      if (!by_id_.emplace(data_.polygons[i].id, i).second) {
        throw Error(ErrorCode::InvalidPolygon, "duplicate polygon id '" + data_.polygons[i].id + "'");
      }
    }
    tables_.resize(data_.j_set.size());
    for (std::size_t s = 0; s < data_.j_set.size(); ++s) {
      for (std::uint32_t i = 0; i < m; ++i) {
        const Signature& sig = data_.signatures[s][i];
        switch (sig.kind) {
          case Signature::Kind::Finite: tables_[s].cells[cell_key(sig.folded())].push_back(i); break;
          case Signature::Kind::Infinity: tables_[s].infinity.push_back(i); break;
          case Signature::Kind::Undefined: tables_[s].undefined.push_back(i); break;
        }
      }
    }
    std::vector<PlanarKdTree::Entry> entries;
    for (std::uint32_t i = 0; i < m; ++i) {
      const InvariantValue& phi = data_.planar_phi[i];
      if (phi.is_finite()) {
        entries.push_back({phi.value(), i});
      } else if (phi.is_infinite()) {
        infinite_phi_.push_back(i);
      } else {
        undefined_phi_.push_back(i);
      }
    }
    planar_ = PlanarKdTree(std::move(entries));
  }

  static void validate_cell(double cell) {
    if (!(cell > 0.0) || !std::isfinite(cell)) throw Error(ErrorCode::InvalidTolerance, "cell size must be positive");
  }

  static void validate_j_set(const std::vector<int>& j_set, std::size_t n) {
    for (std::size_t a = 0; a < j_set.size(); ++a) {
      check_j(j_set[a], n);
      for (std::size_t b = 0; b < a; ++b) {
        if (j_set[a] == j_set[b]) throw Error(ErrorCode::BadJ, "duplicate j in j_set");
      }
    }
  }

  static bool same_value(const Signature& a, const Signature& b) {
    if (a.kind != b.kind) return false;
    if (a.kind != Signature::Kind::Finite) return true;
    return chordal_distance(a, b) <= 1e-12;
  }

  static bool same_value(const InvariantValue& a, const InvariantValue& b) {
    if (a.kind() != b.kind()) return false;
    if (!a.is_finite()) return true;
    return chordal_distance(a.point(), b.point()) <= 1e-12;
  }

  void check_query_size(const Polygon& w) const {
    if (w.size() != static_cast<std::size_t>(data_.n)) {
      throw Error(ErrorCode::SizeMismatch, "query '" + w.id + "' has " + std::to_string(w.size()) +
                                               " vertices, index has n=" + std::to_string(data_.n));
    }
  }

  static std::int64_t clamp_key(double v) {
    return static_cast<std::int64_t>(std::clamp(std::floor(v), -kKeyClamp, kKeyClamp));
  }

  CellKey cell_key(Complex folded) const {
    return {clamp_key(folded.real() / data_.cell), clamp_key(folded.imag() / data_.cell)};
  }

  static std::int64_t eta_key(double eta, double tol) {
    if (std::isinf(eta)) return kInfKey;
    return clamp_key(eta / tol);
  }

  void verify_similarity_candidates(const Polygon& w, std::span<const std::uint32_t> raw, double tol,
                                    CandidateSet& out) const {
    for (std::uint32_t id : raw) {
      out.ids.push_back(data_.polygons[id].id);
      if (auto r = verify_similarity(w, data_.polygons[id], tol)) out.verified.push_back(std::move(*r));
    }
    sort_results(out.verified);
  }

  static void sort_results(std::vector<MatchResult>& results) {
    std::stable_sort(results.begin(), results.end(), [](const MatchResult& a, const MatchResult& b) {
      if (a.residual != b.residual) return a.residual < b.residual;
      return a.candidate_id < b.candidate_id;
    });
  }

  // Range of a x^2 + b x over [lo, hi].
  static std::pair<double, double> quad_range(double a, double b, double lo, double hi) {
    auto g = [&](double x) { return a * x * x + b * x; };
    double mn = std::min(g(lo), g(hi));
    double mx = std::max(g(lo), g(hi));
    if (a != 0.0) {
      const double v = -b / (2.0 * a);
      if (v > lo && v < hi) {
        mn = std::min(mn, g(v));
        mx = std::max(mx, g(v));
      }
    }
    return {mn, mx};
  }

  // Range over the box of Q_K(xi) = |xi - u|^2 - K^2 |1 - conj(u) xi|^2,
  // which is <= 0 exactly when d(u, xi) <= K. Q_K separates into x and y parts.
  static std::pair<double, double> q_range(const Box& box, Complex u, double kk) {
    const double a = 1.0 - kk * kk * std::norm(u);
    const double lin = -2.0 * (1.0 - kk * kk);
    const auto [xmn, xmx] = quad_range(a, lin * u.real(), box.xmin, box.xmax);
    const auto [ymn, ymx] = quad_range(a, lin * u.imag(), box.ymin, box.ymax);
    const double c = std::norm(u) - kk * kk;
    return {xmn + ymn + c, xmx + ymx + c};
  }

  // Conservative: false only if no point of the box has k_lo <= d(u, xi) <= k_hi
  // for any u in the orbit.
  static bool annulus_may_intersect(const Box& box, std::span<const RiemannPoint> orbit, double k_lo, double k_hi) {
    const double reach = std::max({std::abs(box.xmin), std::abs(box.xmax), std::abs(box.ymin), std::abs(box.ymax)});
    for (const RiemannPoint& u : orbit) {
      if (u.is_infinite()) {
        // d(inf, xi) = 1/|xi|.
        const double cx = std::clamp(0.0, box.xmin, box.xmax);
        const double cy = std::clamp(0.0, box.ymin, box.ymax);
        const double min_abs = std::hypot(cx, cy);
        const double max_abs = std::hypot(std::max(std::abs(box.xmin), std::abs(box.xmax)),
                                          std::max(std::abs(box.ymin), std::abs(box.ymax)));
        const double inner = k_hi > 0.0 ? 1.0 / k_hi : HUGE_VAL;
        const double outer = k_lo > 0.0 ? 1.0 / k_lo : HUGE_VAL;
        if (max_abs >= inner * (1.0 - 1e-9) && min_abs <= outer * (1.0 + 1e-9)) return true;
        continue;
      }
      const Complex z = u.value();
      const double slack = 1e-9 * (1.0 + std::norm(z) + k_hi * k_hi) * (1.0 + reach * reach) *
                           (1.0 + k_hi * k_hi * (1.0 + std::norm(z)));
      if (q_range(box, z, k_hi).first > slack) continue;
      if (k_lo > 0.0 && q_range(box, z, k_lo).second < -slack) continue;
      return true;
    }
    return false;
  }

  IndexSnapshot data_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::vector<Table> tables_;
  PlanarKdTree planar_;
  std::vector<std::uint32_t> infinite_phi_;
  std::vector<std::uint32_t> undefined_phi_;
};

inline PolygonIndex build_index(std::vector<Polygon> collection, std::vector<int> j_set, double cell = kDefaultCell) {
  return PolygonIndex::build(std::move(collection), std::move(j_set), cell);
}

}  // namespace polymatch
