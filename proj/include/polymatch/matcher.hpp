#pragma once

// Exact match verification between a query polygon W and a candidate Z:
// resolve the cyclic shift, solve the transform, check every vertex.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "polymatch/complex_geometry.hpp"
#include "polymatch/error.hpp"

namespace polymatch {

/// W_k ~ transform(Z_{k+shift}) for all k, with residual measured as
/// max_k |w_k - transform(z_{k+shift})| / diameter(W).
struct MatchResult {
  std::string candidate_id;
  std::size_t shift = 0;
  AffineMap transform;
  double residual = 0.0;
};

/// Normalized-area floor for picking an affine anchor triple.
inline constexpr double kAnchorAreaFloor = 1e-9;

namespace detail {

inline void check_sizes(const Polygon& w, const Polygon& z) {
  if (w.size() != z.size()) {
    throw Error(ErrorCode::SizeMismatch, "polygons have " + std::to_string(w.size()) + " and " +
                                             std::to_string(z.size()) + " vertices");
  }
}

inline double residual_scale(const Polygon& w) {
  const double d = diameter(w);
  return d > 0.0 ? d : 1.0;
}

template <class Map>
double shifted_residual(const Polygon& w, const Polygon& z, std::size_t shift, const Map& f, double scale) {
  double worst = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    worst = std::max(worst, std::abs(w[k] - f(z.at_shift(k, shift))));
  }
  return worst / scale;
}

// Minimal residual, then minimal shift.
inline bool better(const MatchResult& a, const MatchResult& b) {
  if (a.residual != b.residual) return a.residual < b.residual;
  return a.shift < b.shift;
}

inline std::optional<MatchResult> best_of(std::vector<MatchResult> passing) {
  if (passing.empty()) return std::nullopt;
  return *std::min_element(passing.begin(), passing.end(), better);
}

inline bool well_separated(Complex a, Complex b, Complex c) {
  const double d2 = triangle_diameter2(a, b, c);
  return d2 > 0.0 && std::abs(signed_area2(a, b, c)) > kAnchorAreaFloor * d2;
}

// Anchor triple in the shifted ordering: the first consecutive triple with
// normalized area above the floor, otherwise any such triple.
inline std::optional<std::array<std::size_t, 3>> anchor_triple(const Polygon& z, std::size_t shift) {
  const std::size_t n = z.size();
  for (std::size_t k = 0; k < n; ++k) {
    const std::array<std::size_t, 3> t{k, (k + 1) % n, (k + 2) % n};
    if (well_separated(z.at_shift(t[0], shift), z.at_shift(t[1], shift), z.at_shift(t[2], shift))) return t;
  }
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      for (std::size_t c = b + 1; c < n; ++c) {
        if (well_separated(z.at_shift(a, shift), z.at_shift(b, shift), z.at_shift(c, shift))) {
          return std::array<std::size_t, 3>{a, b, c};
        }
      }
    }
  }
  return std::nullopt;
}

}  // namespace detail

/// Every shift at which an affine map solved from an anchor triple carries
/// shift(Z) onto W within tol.
inline std::vector<MatchResult> affine_matches(const Polygon& w, const Polygon& z, double tol) {
  detail::check_sizes(w, z);
  const double scale = detail::residual_scale(w);
  std::vector<MatchResult> out;
  for (std::size_t shift = 0; shift < z.size(); ++shift) {
    const auto triple = detail::anchor_triple(z, shift);
    if (!triple) {
      throw Error(ErrorCode::AllTriplesCollinear, "polygon '" + z.id + "' has no non-collinear vertex triple");
    }
    const auto& t = *triple;
    AffineMap f;
    try {
      f = solve_affine(z.at_shift(t[0], shift), w[t[0]], z.at_shift(t[1], shift), w[t[1]],
                       z.at_shift(t[2], shift), w[t[2]]);
    } catch (const Error&) {
      continue;
    }
    const double res = detail::shifted_residual(w, z, shift, f, scale);
    if (res <= tol) out.push_back({z.id, shift, f, res});
  }
  return out;
}

/// Similarity match with anchors at the diameter-realizing vertices of Z.
inline std::optional<MatchResult> verify_similarity(const Polygon& w, const Polygon& z, double tol) {
  detail::check_sizes(w, z);
  const std::size_t n = z.size();
  const auto [p, q] = diameter_pair(std::span<const Complex>(z.vertices));
  if (z[p] == z[q]) return std::nullopt;
  const double scale = detail::residual_scale(w);
  std::vector<MatchResult> passing;
  for (std::size_t shift = 0; shift < n; ++shift) {
    // Original vertex p sits at position p - shift of the shifted ordering.
    const std::size_t wp = (p + n - shift) % n;
    const std::size_t wq = (q + n - shift) % n;
    const SimilarityMap s = solve_similarity(z[p], w[wp], z[q], w[wq]);
    const double res = detail::shifted_residual(w, z, shift, s, scale);
    if (res <= tol) passing.push_back({z.id, shift, s.to_affine(), res});
  }
  return detail::best_of(std::move(passing));
}

inline std::optional<MatchResult> verify_affine(const Polygon& w, const Polygon& z, double tol) {
  return detail::best_of(affine_matches(w, z, tol));
}

/// W = f(shift(Z)) for the given f over all shifts; nothing is solved.
inline std::optional<MatchResult> verify_known_affine(const Polygon& w, const Polygon& z, const AffineMap& f,
                                                      double tol) {
  detail::check_sizes(w, z);
  const double scale = detail::residual_scale(w);
  std::vector<MatchResult> passing;
  for (std::size_t shift = 0; shift < z.size(); ++shift) {
    const double res = detail::shifted_residual(w, z, shift, f, scale);
    if (res <= tol) passing.push_back({z.id, shift, f, res});
  }
  return detail::best_of(std::move(passing));
}

}  // namespace polymatch
