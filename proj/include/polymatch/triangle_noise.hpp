#pragma once

// Noise regions for triangle matching under bounded vertex perturbation.
//
// A triangle (z1, z2, z3) is normalized to (0, 1, tau) with
// tau = (z3 - z1)/(z2 - z1), and phi_{3,1} = M(tau) for the Moebius map
// M(tau) = (lambda^2 + tau)/(lambda + tau), lambda = e^{2 pi i/3}.
// Perturbations of the equilateral triangle (lambda, lambda^2, 1) inside the
// polydisc U_r are bounded in closed form; a general triangle inherits the
// bound through the affine map taking the equilateral triangle onto it.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "polymatch/complex_geometry.hpp"
#include "polymatch/error.hpp"
#include "polymatch/invariants.hpp"

namespace polymatch {

inline const double kSqrt3 = std::numbers::sqrt3;
/// Upper end (exclusive) of the admissible perturbation radius.
inline const double kMaxNoiseRadius = std::numbers::sqrt3 / 6.0;

inline void check_noise_radius(double r) {
  if (!(r > 0.0 && r < kMaxNoiseRadius)) {
    throw Error(ErrorCode::ROutOfRange, "r must lie in (0, sqrt(3)/6)");
  }
}

/// As r approaches sqrt(3)/6 the ellipse center runs off toward 1/2 and the
/// regions stop being informative.
inline bool near_noise_limit(double r) { return r >= 0.95 * kMaxNoiseRadius; }

/// Open ellipse E_center(major, minor, angle); axis values are full lengths.
struct Ellipse {
  Complex center{};
  double major_axis_length = 0.0;
  double minor_axis_length = 0.0;
  double angle = 0.0;  // major axis vs. real axis, in [0, pi)

  static Ellipse make(Complex center, double axis1, double axis2, double angle) {
    Ellipse e{center, std::abs(axis1), std::abs(axis2), angle};
    if (e.minor_axis_length > e.major_axis_length) {
      std::swap(e.major_axis_length, e.minor_axis_length);
      e.angle += std::numbers::pi / 2.0;
    }
    e.angle = std::fmod(e.angle, std::numbers::pi);
    if (e.angle < 0.0) e.angle += std::numbers::pi;
    return e;
  }

  bool is_segment(double thickness = 1e-12) const {
    return minor_axis_length <= thickness * major_axis_length;
  }

  Complex boundary_point(double t) const {
    const Complex local{0.5 * major_axis_length * std::cos(t), 0.5 * minor_axis_length * std::sin(t)};
    return center + std::polar(1.0, angle) * local;
  }

  /// Interior membership. A segment-like ellipse (minor below
  /// thickness * major) is given a band of half-width thickness * major.
  bool contains(Complex p, double thickness = 1e-12) const {
    const Complex local = (p - center) * std::polar(1.0, -angle);
    const double a = 0.5 * major_axis_length;
    if (a == 0.0) return false;
    if (is_segment(thickness)) {
      return std::abs(local.real()) < a && std::abs(local.imag()) <= thickness * major_axis_length;
    }
    const double b = 0.5 * minor_axis_length;
    const double u = local.real() / a;
    const double v = local.imag() / b;
    return u * u + v * v < 1.0;
  }
};

struct Disk {
  Complex center{};
  double radius = 0.0;

  bool contains(Complex p) const { return std::abs(p - center) <= radius; }
};

struct NoiseRegion {
  Ellipse tau_ellipse;
  Disk phi_bound_disk;
};

/// Normalized apex tau = (z3 - z1)/(z2 - z1) of (0, 1, tau).
inline RiemannPoint tau(Complex z1, Complex z2, Complex z3) {
  if (z1 == z2) throw Error(ErrorCode::CoincidentBase, "z1 = z2");
  return (z3 - z1) / (z2 - z1);
}

inline RiemannPoint moebius_M(const RiemannPoint& t) {
  if (t.is_infinite()) return Complex{1.0, 0.0};
  const Complex den = kLambda3 + t.value();
  if (den == Complex{}) return RiemannPoint::infinity();
  return (kLambda3 * kLambda3 + t.value()) / den;
}

inline RiemannPoint moebius_M_inverse(const RiemannPoint& xi) {
  if (xi.is_infinite()) return -kLambda3;
  const Complex den = xi.value() - 1.0;
  if (den == Complex{}) return RiemannPoint::infinity();
  return (kLambda3 * kLambda3 - kLambda3 * xi.value()) / den;
}

/// Order-3 map 1/(1 - tau); relabels the vertices of (0, 1, tau) cyclically.
inline RiemannPoint rotation_R(const RiemannPoint& t) {
  if (t.is_infinite()) return Complex{};
  const Complex den = 1.0 - t.value();
  if (den == Complex{}) return RiemannPoint::infinity();
  return 1.0 / den;
}

inline void check_triangle(Complex z1, Complex z2, Complex z3, bool require_positive = true) {
  const Orientation o = orientation(z1, z2, z3);
  if (o == Orientation::Degenerate) throw Error(ErrorCode::DegenerateTriangle, "triangle is degenerate");
  if (require_positive && o == Orientation::Negative) {
    throw Error(ErrorCode::NegativeOrientation, "triangle is negatively oriented");
  }
}

/// phi_{3,1}(z1, z2, z3) equals M(tau(z1, z2, z3)) within 1e-10 chordal.
inline bool phi_equals_M_of_tau_check(Complex z1, Complex z2, Complex z3) {
  check_triangle(z1, z2, z3, false);
  const InvariantValue phi = phi_nj(Polygon("t", {z1, z2, z3}), 1);
  if (phi.is_undefined()) return false;
  return chordal_distance(phi.point(), moebius_M(tau(z1, z2, z3))) <= 1e-10;
}

/// Bound on |phi| over U_r:
///   sqrt((A - B) / (A + B)),  A = 9 - 4 sqrt3 r + 12 r^2,
///   B = (3 + 2 sqrt3 r) sqrt(9 - 20 sqrt3 r + 12 r^2).
/// Since A^2 - B^2 = 768 r^2 this equals 16 sqrt3 r / (A + B), which is the
/// form evaluated here (no cancellation for small r).
inline double equilateral_bound(double r) {
  check_noise_radius(r);
  const double a = 9.0 - 4.0 * kSqrt3 * r + 12.0 * r * r;
  const double b = (3.0 + 2.0 * kSqrt3 * r) * std::sqrt(9.0 - 20.0 * kSqrt3 * r + 12.0 * r * r);
  return 16.0 * kSqrt3 * r / (a + b);
}

/// Two-term expansion (8 sqrt3 / 9) r + (32/27) r^2 of equilateral_bound.
inline double taylor_bound(double r) { return 8.0 * kSqrt3 / 9.0 * r + 32.0 / 27.0 * r * r; }

/// Edge-ratio bounds K1 < |z_j - z_k| / |z_j - z_l| < K2 on U_r and the real
/// diameters of the Apollonius circles {tau : |tau - 1| = K |tau|}.
/// The circle for K2 spans [x1, x2]; the circle for K1 spans [x3, x4].
struct ApolloniusCircles {
  double k1, k2;
  double x1, x2, x3, x4;

  /// Center and radius of {tau : |tau - 1| = K |tau|}, K != 1.
  static Disk circle(double k) {
    const double xa = 1.0 / (1.0 + k);
    const double xb = 1.0 / (1.0 - k);
    return {Complex{(xa + xb) / 2.0, 0.0}, std::abs(xb - xa) / 2.0};
  }
};

inline ApolloniusCircles apollonius_circles(double r) {
  check_noise_radius(r);
  ApolloniusCircles c{};
  c.k1 = (kSqrt3 - 2.0 * r) / (kSqrt3 + 2.0 * r);
  c.k2 = 1.0 / c.k1;
  c.x1 = (2.0 * r - kSqrt3) / (4.0 * r);
  c.x2 = (kSqrt3 - 2.0 * r) / (2.0 * kSqrt3);
  c.x3 = (kSqrt3 + 2.0 * r) / (2.0 * kSqrt3);
  c.x4 = (kSqrt3 + 2.0 * r) / (4.0 * r);
  return c;
}

/// Circle through the hexagon vertices zeta, R(zeta), R^2(zeta); it has the
/// segment [zeta, xi] as a diameter and contains every tau of U_r.
struct HexagonCircle {
  Complex zeta;
  Complex xi;
  Complex center;
  double radius;
};

inline HexagonCircle hexagon_circle(double r) {
  check_noise_radius(r);
  const double s = std::sqrt(9.0 - 20.0 * kSqrt3 * r + 12.0 * r * r);
  const double p = kSqrt3 + 2.0 * r;
  HexagonCircle h{};
  h.zeta = {0.5, s / (2.0 * p)};
  h.xi = {0.5, 3.0 * p / (2.0 * s)};
  h.center = (h.zeta + h.xi) / 2.0;
  h.radius = 8.0 * kSqrt3 * r / (p * s);
  return h;
}

/// The affine map taking (lambda, lambda^2, 1) onto (z1, z2, z3).
inline AffineMap equilateral_to_triangle(Complex z1, Complex z2, Complex z3) {
  const Complex l = kLambda3;
  const Complex l2 = kLambda3 * kLambda3;
  return {(l2 * z1 + l * z2 + z3) / 3.0, (l * z1 + l2 * z2 + z3) / 3.0, (z1 + z2 + z3) / 3.0};
}

/// Polar forms a e^{i phi1}, b e^{i phi2} of the linear coefficients above.
struct NoiseCoefficients {
  double a;
  double phi1;
  double b;
  double phi2;  // reported 0 when b vanishes
};

inline NoiseCoefficients triangle_noise_coefficients(Complex z1, Complex z2, Complex z3) {
  check_triangle(z1, z2, z3);
  const AffineMap g = equilateral_to_triangle(z1, z2, z3);
  NoiseCoefficients c{std::abs(g.alpha), std::arg(g.alpha), std::abs(g.beta), 0.0};
  if (c.b > 1e-14 * c.a) {
    c.phi2 = std::arg(g.beta);
  } else {
    c.b = 0.0;
  }
  return c;
}

/// Images of the U_r discs under the equilateral-to-triangle map: ellipses
/// E_{z_j}(2r(a+b), 2r|a-b|, (phi1+phi2)/2).
inline std::array<Ellipse, 3> vertex_ellipses(Complex z1, Complex z2, Complex z3, double r) {
  check_noise_radius(r);
  const NoiseCoefficients c = triangle_noise_coefficients(z1, z2, z3);
  const double major = 2.0 * r * (c.a + c.b);
  const double minor = 2.0 * r * std::abs(c.a - c.b);
  const double theta = (c.phi1 + c.phi2) / 2.0;
  return {Ellipse::make(z1, major, minor, theta), Ellipse::make(z2, major, minor, theta),
          Ellipse::make(z3, major, minor, theta)};
}

/// Ellipse bounding tau for triangles with vertices in the vertex ellipses:
/// E_w(2 sqrt3 rho (a+b)/|z2-z1|, 2 sqrt3 rho |a-b|/|z2-z1|, (phi1+phi2)/2 - arg(z2-z1)).
inline Ellipse tau_region(Complex z1, Complex z2, Complex z3, double r) {
  check_noise_radius(r);
  const NoiseCoefficients c = triangle_noise_coefficients(z1, z2, z3);
  const double rho = hexagon_circle(r).radius;
  const double s = std::sqrt(9.0 - 20.0 * kSqrt3 * r + 12.0 * r * r);
  const Complex base = z2 - z1;
  const Complex w = 0.5 - kSqrt3 * (z1 + z2 - 2.0 * z3) * (9.0 + 12.0 * r * r - 4.0 * kSqrt3 * r) /
                              (6.0 * base * (kSqrt3 + 2.0 * r) * s);
  const double len = std::abs(base);
  return Ellipse::make(w, 2.0 * kSqrt3 * rho * (c.a + c.b) / len, 2.0 * kSqrt3 * rho * std::abs(c.a - c.b) / len,
                       (c.phi1 + c.phi2) / 2.0 - std::arg(base));
}

/// Action h(tau) = (alpha tau + beta conj(tau)) / (alpha + beta) induced on the
/// apex of (0, 1, tau) by f: (f(0), f(1), f(tau)) is similar to (0, 1, h(tau)).
inline Complex apex_action(const AffineMap& f, Complex t) {
  return (f.alpha * t + f.beta * std::conj(t)) / (f.alpha + f.beta);
}

/// Composite taking (0, 1, -lambda^2) to (lambda, lambda^2, 1) and then onto
/// (z1, z2, z3); its apex action carries the hexagon circle to tau_region.
inline AffineMap apex_reduction_map(Complex z1, Complex z2, Complex z3) {
  const Complex l = kLambda3;
  const Complex l2 = kLambda3 * kLambda3;
  const AffineMap to_equilateral{l2 - l, Complex{}, l};
  return equilateral_to_triangle(z1, z2, z3).compose(to_equilateral);
}

/// Smallest disk enclosing the points (randomized incremental construction
/// with a fixed shuffle seed, so results are deterministic).
inline Disk smallest_enclosing_disk(std::span<const Complex> points) {
  if (points.empty()) return {};
  std::vector<Complex> pts(points.begin(), points.end());
  std::mt19937_64 shuffle_rng(0x5EEDULL);
  std::shuffle(pts.begin(), pts.end(), shuffle_rng);

  auto from_two = [](Complex a, Complex b) { return Disk{(a + b) / 2.0, std::abs(a - b) / 2.0}; };
  auto from_three = [&](Complex a, Complex b, Complex c) {
    const Complex ab = b - a;
    const Complex ac = c - a;
    const double d = 2.0 * (ab.real() * ac.imag() - ab.imag() * ac.real());
    if (d == 0.0) {
      Disk best = from_two(a, b);
      for (const Disk& cand : {from_two(a, c), from_two(b, c)}) {
        if (cand.radius > best.radius) best = cand;
      }
      return best;
    }
    const double nb = std::norm(ab);
    const double nc = std::norm(ac);
    const Complex off{(ac.imag() * nb - ab.imag() * nc) / d, (ab.real() * nc - ac.real() * nb) / d};
    return Disk{a + off, std::abs(off)};
  };
  auto inside = [](const Disk& disk, Complex p) { return std::abs(p - disk.center) <= disk.radius * (1.0 + 1e-14) + 1e-300; };

  Disk disk{pts[0], 0.0};
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (inside(disk, pts[i])) continue;
    disk = {pts[i], 0.0};
    for (std::size_t j = 0; j < i; ++j) {
      if (inside(disk, pts[j])) continue;
      disk = from_two(pts[i], pts[j]);
      for (std::size_t k = 0; k < j; ++k) {
        if (!inside(disk, pts[k])) disk = from_three(pts[i], pts[j], pts[k]);
      }
    }
  }
  // Guard against rounding in the circumcircle construction.
  for (const Complex& p : pts) disk.radius = std::max(disk.radius, std::abs(p - disk.center));
  return disk;
}

/// Disk covering M(tau_region). The ellipse boundary is sampled uniformly in
/// its parameter and mapped through M; the smallest disk enclosing those
/// images is widened by twice the largest excursion of the mid-parameter
/// images beyond it.
inline Disk phi_noise_disk(Complex z1, Complex z2, Complex z3, double r, int samples) {
  if (samples < 16) throw Error(ErrorCode::BadSampleCount, "phi_noise_disk needs at least 16 samples");
  const Ellipse e = tau_region(z1, z2, z3, r);
  // M has its pole at -lambda; the image is unbounded if the closed ellipse reaches it.
  const Complex pole = -kLambda3;
  const Complex local = (pole - e.center) * std::polar(1.0, -e.angle);
  const double pa = 0.5 * e.major_axis_length;
  const double pb = std::max(0.5 * e.minor_axis_length, 1e-300);
  if ((local.real() / pa) * (local.real() / pa) + (local.imag() / pb) * (local.imag() / pb) <= 1.0 + 1e-9) {
    throw Error(ErrorCode::UnboundedImage, "tau region reaches the pole of M");
  }
  const auto count = static_cast<std::size_t>(samples);
  std::vector<Complex> images(count);
  const double step = 2.0 * std::numbers::pi / static_cast<double>(samples);
  for (std::size_t i = 0; i < count; ++i) images[i] = moebius_M(e.boundary_point(step * static_cast<double>(i))).value();
  Disk disk = smallest_enclosing_disk(images);
  // Distance to the center along a finer grid; between grid points it can
  // exceed the larger endpoint by at most h^2/8 max|d''| (doubled below).
  constexpr std::size_t kSub = 16;
  const std::size_t fine = count * kSub;
  const double h = 2.0 * std::numbers::pi / static_cast<double>(fine);
  std::vector<double> dist(fine);
  for (std::size_t i = 0; i < fine; ++i) {
    dist[i] = std::abs(moebius_M(e.boundary_point(h * static_cast<double>(i))).value() - disk.center);
  }
  double top = disk.radius;
  double curvature = 0.0;
  for (std::size_t i = 0; i < fine; ++i) {
    const double second = dist[(i + fine - 1) % fine] - 2.0 * dist[i] + dist[(i + 1) % fine];
    top = std::max(top, dist[i]);
    curvature = std::max(curvature, std::abs(second));
  }
  disk.radius = top + curvature / 4.0;
  return disk;
}

inline NoiseRegion noise_region(Complex z1, Complex z2, Complex z3, double r, int samples) {
  return {tau_region(z1, z2, z3, r), phi_noise_disk(z1, z2, z3, r, samples)};
}

// Monte-Carlo sampling. Every sampler takes the generator explicitly so that
// oracles are reproducible from a seed.

/// Uniform point in the open disk of radius r about 0 (rejection from the square).
template <class Rng>
Complex sample_disk(Rng& rng, double r) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  while (true) {
    const Complex u{unit(rng), unit(rng)};
    if (std::norm(u) < 1.0) return r * u;
  }
}

/// Triangle of U_r: independent uniform perturbations of (lambda, lambda^2, 1).
template <class Rng>
std::array<Complex, 3> sample_polydisc(Rng& rng, double r) {
  return {kLambda3 + sample_disk(rng, r), kLambda3 * kLambda3 + sample_disk(rng, r),
          Complex{1.0, 0.0} + sample_disk(rng, r)};
}

/// Triangle with vertices in the vertex ellipses of (z1, z2, z3): the image of
/// a U_r sample under the equilateral-to-triangle map.
template <class Rng>
std::array<Complex, 3> sample_noisy_triangle(Rng& rng, Complex z1, Complex z2, Complex z3, double r) {
  const AffineMap g = equilateral_to_triangle(z1, z2, z3);
  const auto u = sample_polydisc(rng, r);
  return {g(u[0]), g(u[1]), g(u[2])};
}

/// Largest |phi_{3,1}| over `samples` draws from U_r.
inline double monte_carlo_max_phi(double r, std::size_t samples, std::uint64_t seed) {
  check_noise_radius(r);
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const auto t = sample_polydisc(rng, r);
    const Complex lam2 = kLambda3 * kLambda3;
    const Complex num = kLambda3 * t[0] + lam2 * t[1] + t[2];
    const Complex den = lam2 * t[0] + kLambda3 * t[1] + t[2];
    worst = std::max(worst, std::abs(num / den));
  }
  return worst;
}

/// Empirical (non-rigorous) spread of a signature under vertex noise for
/// general n: each vertex is displaced uniformly within r * diameter(Z).
struct SignatureSpread {
  double max_chordal = 0.0;
  double mean_chordal = 0.0;
};

inline SignatureSpread empirical_signature_spread(const Polygon& poly, int j, double r, std::size_t samples,
                                                  std::uint64_t seed) {
  if (!(r >= 0.0)) throw Error(ErrorCode::ROutOfRange, "noise radius must be non-negative");
  if (samples == 0) throw Error(ErrorCode::BadSampleCount, "need at least one sample");
  const Signature base = signature(poly, j);
  const double radius = r * diameter(poly);
  std::mt19937_64 rng(seed);
  SignatureSpread out;
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    std::vector<Complex> v = poly.vertices;
    for (Complex& z : v) z += sample_disk(rng, radius);
    const Signature noisy = signature(Polygon(poly.id, std::move(v)), j);
    if (noisy.kind == Signature::Kind::Undefined || base.kind == Signature::Kind::Undefined) continue;
    const double d = chordal_distance(base, noisy);
    out.max_chordal = std::max(out.max_chordal, d);
    total += d;
    ++counted;
  }
  out.mean_chordal = counted ? total / static_cast<double>(counted) : 0.0;
  return out;
}

}  // namespace polymatch
