#pragma once

// Synthetic collections with planted transformed copies, for benchmarks and
// end-to-end tests.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "polymatch/complex_geometry.hpp"
#include "polymatch/error.hpp"
#include "polymatch/triangle_noise.hpp"

namespace polymatch::gen {

enum class PlantKind { Similarity, Affine, AffineNoise };

struct PlantSpec {
  PlantKind kind = PlantKind::Similarity;
  std::size_t count = 0;
  double noise_radius = 0.0;  // AffineNoise only
};

struct PlantTruth {
  std::string id;
  std::string source_id;
  PlantKind kind;
  std::size_t shift;
  AffineMap transform;
  double noise_radius;
};

struct Dataset {
  std::vector<Polygon> polygons;  // base records followed by plants
  std::vector<PlantTruth> truth;
};

inline const char* to_string(PlantKind k) {
  switch (k) {
    case PlantKind::Similarity: return "similarity";
    case PlantKind::Affine: return "affine";
    case PlantKind::AffineNoise: return "affine-noise";
  }
  return "?";
}

/// "similarity:3", "affine:2", "affine-noise:r=0.01:2".
inline PlantSpec parse_plant(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
  auto count_of = [&](const std::string& s) {
    std::size_t pos = 0;
    long long v = -1;
    try {
      v = std::stoll(s, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != s.size() || v < 0) throw Error(ErrorCode::InvalidTolerance, "bad plant count '" + s + "'");
    return static_cast<std::size_t>(v);
  };
  PlantSpec spec;
  if (parts.size() == 2 && parts[0] == "similarity") {
    spec.kind = PlantKind::Similarity;
    spec.count = count_of(parts[1]);
  } else if (parts.size() == 2 && parts[0] == "affine") {
    spec.kind = PlantKind::Affine;
    spec.count = count_of(parts[1]);
  } else if (parts.size() == 3 && parts[0] == "affine-noise" && parts[1].rfind("r=", 0) == 0) {
    spec.kind = PlantKind::AffineNoise;
    std::size_t pos = 0;
    const std::string rv = parts[1].substr(2);
    try {
      spec.noise_radius = std::stod(rv, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != rv.size() || !(spec.noise_radius > 0.0 && spec.noise_radius < kMaxNoiseRadius)) {
      throw Error(ErrorCode::ROutOfRange, "bad noise radius in '" + text + "'");
    }
    spec.count = count_of(parts[2]);
  } else {
    throw Error(ErrorCode::InvalidTolerance, "unrecognized plant spec '" + text + "'");
  }
  return spec;
}

template <class Rng>
Polygon random_polygon(Rng& rng, std::size_t n, const std::string& id) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Complex> v(n);
  for (Complex& z : v) z = {unit(rng), unit(rng)};
  return Polygon(id, std::move(v));
}

template <class Rng>
SimilarityMap random_similarity(Rng& rng) {
  std::uniform_real_distribution<double> scale(0.5, 2.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> offset(-1.0, 1.0);
  return {std::polar(scale(rng), angle(rng)), {offset(rng), offset(rng)}};
}

/// Orientation-preserving with |beta| <= |alpha| / 2.
template <class Rng>
AffineMap random_affine(Rng& rng) {
  std::uniform_real_distribution<double> ratio(0.0, 0.5);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  const SimilarityMap s = random_similarity(rng);
  return {s.alpha, std::polar(std::abs(s.alpha) * ratio(rng), angle(rng)), s.gamma};
}

/// Vertex noise of radius r. Triangles get the vertex-ellipse model (the
/// image of U_r under the equilateral-to-triangle map); larger polygons get
/// isotropic disc noise of radius r * diameter / sqrt(3).
template <class Rng>
Polygon add_noise(Rng& rng, const Polygon& target, double r, const std::string& id) {
  std::vector<Complex> v = target.vertices;
  if (target.size() == 3) {
    const AffineMap g = equilateral_to_triangle(v[0], v[1], v[2]);
    for (Complex& z : v) {
      const Complex d = sample_disk(rng, r);
      z += g.alpha * d + g.beta * std::conj(d);
    }
  } else {
    const double radius = r * diameter(target) / std::sqrt(3.0);
    for (Complex& z : v) z += sample_disk(rng, radius);
  }
  return Polygon(id, std::move(v));
}

inline Dataset generate(std::size_t count, std::size_t n, std::uint64_t seed, const std::vector<PlantSpec>& plants) {
  if (count < 1) throw Error(ErrorCode::EmptyCollection, "count must be at least 1");
  if (n < 3) throw Error(ErrorCode::InvalidPolygon, "n must be at least 3");
  std::mt19937_64 rng(seed);
  Dataset out;
  out.polygons.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.polygons.push_back(random_polygon(rng, n, "poly-" + std::to_string(i)));

  std::uniform_int_distribution<std::size_t> pick(0, count - 1);
  std::uniform_int_distribution<std::size_t> pick_shift(0, n - 1);
  std::size_t serial = 0;
  for (const PlantSpec& spec : plants) {
    for (std::size_t c = 0; c < spec.count; ++c, ++serial) {
      const Polygon& source = out.polygons[pick(rng)];
      const std::size_t shift = pick_shift(rng);
      const AffineMap f = spec.kind == PlantKind::Similarity ? random_similarity(rng).to_affine() : random_affine(rng);
      const std::string id = std::string("plant-") + to_string(spec.kind) + "-" + std::to_string(serial);
      Polygon img = apply_affine_polygon(f, source.shifted(shift), "");
      img.id = id;
      if (spec.kind == PlantKind::AffineNoise) img = add_noise(rng, img, spec.noise_radius, id);
      out.truth.push_back({id, source.id, spec.kind, shift, f, spec.noise_radius});
      out.polygons.push_back(std::move(img));
    }
  }
  return out;
}

}  // namespace polymatch::gen
