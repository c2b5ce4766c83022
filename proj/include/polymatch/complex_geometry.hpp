#pragma once

// Complex-plane primitives: points, extended-plane values, polygons and
// affine maps f(z) = alpha*z + beta*conj(z) + gamma.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "polymatch/error.hpp"

namespace polymatch {

using Complex = std::complex<double>;

/// Primitive cube root of unity e^{2 pi i / 3}.
inline const Complex kLambda3 = std::polar(1.0, 2.0 * std::numbers::pi / 3.0);

/// e^{2 pi i m / n}, reduced mod n before evaluation so large exponents stay exact.
inline Complex root_of_unity(long long m, int n) {
  long long r = m % n;
  if (r < 0) r += n;
  if (r == 0) return {1.0, 0.0};
  if (2 * r == n) return {-1.0, 0.0};
  if (4 * r == n) return {0.0, 1.0};
  if (4 * r == 3LL * n) return {0.0, -1.0};
  // Symmetric residue keeps the angle within [-pi, pi].
  if (2 * r > n) r -= n;
  return std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(r) / n);
}

inline bool is_finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

/// Point of the extended plane C u {inf}.
class RiemannPoint {
 public:
  RiemannPoint() = default;
  RiemannPoint(Complex z) : value_(z) {}  // NOLINT(google-explicit-constructor)

  static RiemannPoint infinity() {
    RiemannPoint p;
    p.infinite_ = true;
    return p;
  }

  bool is_infinite() const { return infinite_; }
  bool is_finite() const { return !infinite_; }
  Complex value() const { return value_; }

  friend bool operator==(const RiemannPoint& a, const RiemannPoint& b) {
    if (a.infinite_ || b.infinite_) return a.infinite_ == b.infinite_;
    return a.value_ == b.value_;
  }

 private:
  Complex value_{};
  bool infinite_ = false;
};

/// Chordal metric |a-b| / sqrt((1+|a|^2)(1+|b|^2)), extended to infinity.
inline double chordal_distance(const RiemannPoint& a, const RiemannPoint& b) {
  if (a.is_infinite() && b.is_infinite()) return 0.0;
  if (a.is_infinite()) return 1.0 / std::sqrt(1.0 + std::norm(b.value()));
  if (b.is_infinite()) return 1.0 / std::sqrt(1.0 + std::norm(a.value()));
  const Complex x = a.value();
  const Complex y = b.value();
  // Large moduli are compared in the reciprocal chart to avoid overflow.
  if (std::abs(x) > 1.0 && std::abs(y) > 1.0) {
    const Complex u = 1.0 / x;
    const Complex v = 1.0 / y;
    return std::abs(v - u) / std::sqrt((1.0 + std::norm(u)) * (1.0 + std::norm(v)));
  }
  return std::abs(x - y) / std::sqrt((1.0 + std::norm(x)) * (1.0 + std::norm(y)));
}

/// Identified, ordered (cyclic) vertex list. Self-intersections are allowed.
struct Polygon {
  std::string id;
  std::vector<Complex> vertices;

  Polygon() = default;
  Polygon(std::string polygon_id, std::vector<Complex> points)
      : id(std::move(polygon_id)), vertices(std::move(points)) {
    if (vertices.size() < 3) {
      throw Error(ErrorCode::InvalidPolygon, "polygon '" + id + "' has fewer than 3 vertices");
    }
    for (const Complex& z : vertices) {
      if (!polymatch::is_finite(z)) {
        throw Error(ErrorCode::InvalidPolygon, "polygon '" + id + "' has a non-finite vertex");
      }
    }
  }

  std::size_t size() const { return vertices.size(); }
  const Complex& operator[](std::size_t k) const { return vertices[k]; }

  /// Vertex k of the enumeration starting at vertex `shift` (indices mod n).
  const Complex& at_shift(std::size_t k, std::size_t shift) const {
    return vertices[(k + shift) % vertices.size()];
  }

  /// (z_{1+l}, ..., z_{n+l}) with indices mod n.
  Polygon shifted(std::size_t shift) const {
    std::vector<Complex> out(size());
    for (std::size_t k = 0; k < size(); ++k) out[k] = at_shift(k, shift);
    return Polygon(id + "~s" + std::to_string(shift % size()), std::move(out));
  }
};

/// Relative floor on |det f| = ||alpha|^2 - |beta|^2| below which a map is rejected.
inline constexpr double kAffineDetTolerance = 1e-12;

/// f(z) = alpha*z + beta*conj(z) + gamma.
struct AffineMap {
  Complex alpha{1.0, 0.0};
  Complex beta{0.0, 0.0};
  Complex gamma{0.0, 0.0};

  static AffineMap identity() { return {}; }

  double det() const { return std::norm(alpha) - std::norm(beta); }

  bool is_valid() const {
    const double scale = std::norm(alpha) + std::norm(beta);
    return scale > 0.0 && std::abs(det()) > kAffineDetTolerance * scale;
  }

  bool preserves_orientation() const { return std::abs(alpha) > std::abs(beta); }

  void validate() const {
    if (!is_valid()) throw Error(ErrorCode::InvalidAffine, "|alpha|^2 - |beta|^2 is (nearly) zero");
  }

  Complex operator()(Complex z) const { return alpha * z + beta * std::conj(z) + gamma; }

  /// g with g(f(z)) = z.
  AffineMap inverse() const {
    validate();
    // Solving w - gamma = alpha z + beta conj(z) jointly with its conjugate.
    const double d = det();
    AffineMap inv;
    inv.alpha = std::conj(alpha) / d;
    inv.beta = -beta / d;
    inv.gamma = -(inv.alpha * gamma + inv.beta * std::conj(gamma));
    return inv;
  }

  /// (this o inner)(z) = this(inner(z)).
  AffineMap compose(const AffineMap& inner) const {
    AffineMap out;
    out.alpha = alpha * inner.alpha + beta * std::conj(inner.beta);
    out.beta = alpha * inner.beta + beta * std::conj(inner.alpha);
    out.gamma = alpha * inner.gamma + beta * std::conj(inner.gamma) + gamma;
    return out;
  }
};

/// z -> alpha*z + gamma, alpha != 0.
struct SimilarityMap {
  Complex alpha{1.0, 0.0};
  Complex gamma{0.0, 0.0};

  Complex operator()(Complex z) const { return alpha * z + gamma; }
  AffineMap to_affine() const { return {alpha, Complex{}, gamma}; }
};

inline Complex apply_affine(const AffineMap& f, Complex z) { return f(z); }

/// Vertex-wise image; the derived polygon id is `Z.id + suffix`.
inline Polygon apply_affine_polygon(const AffineMap& f, const Polygon& poly,
                                    const std::string& suffix = "~f") {
  std::vector<Complex> out;
  out.reserve(poly.size());
  for (const Complex& z : poly.vertices) out.push_back(f(z));
  return Polygon(poly.id + suffix, std::move(out));
}

inline Polygon apply_similarity_polygon(const SimilarityMap& s, const Polygon& poly,
                                        const std::string& suffix = "~s") {
  return apply_affine_polygon(s.to_affine(), poly, suffix);
}

/// Unique similarity with s(z1) = w1, s(z2) = w2.
inline SimilarityMap solve_similarity(Complex z1, Complex w1, Complex z2, Complex w2) {
  if (z1 == z2) throw Error(ErrorCode::CoincidentPoints, "similarity anchors coincide");
  SimilarityMap s;
  // Pure translations are recovered exactly; complex division would round.
  s.alpha = (w2 - w1) == (z2 - z1) ? Complex{1.0, 0.0} : (w2 - w1) / (z2 - z1);
  s.gamma = w1 - s.alpha * z1;
  return s;
}

/// Twice the signed area of (z1, z2, z3); positive for counter-clockwise order.
inline double signed_area2(Complex z1, Complex z2, Complex z3) {
  return (std::conj(z2 - z1) * (z3 - z1)).imag();
}

inline double triangle_diameter2(Complex z1, Complex z2, Complex z3) {
  return std::max({std::norm(z2 - z1), std::norm(z3 - z2), std::norm(z1 - z3)});
}

/// Scale-free collinearity: 2|area| <= tol * diameter^2.
inline bool is_collinear(Complex z1, Complex z2, Complex z3, double tol = 1e-12) {
  return std::abs(signed_area2(z1, z2, z3)) <= tol * triangle_diameter2(z1, z2, z3);
}

enum class Orientation { Positive, Negative, Degenerate };

inline Orientation orientation(Complex z1, Complex z2, Complex z3, double tol = 1e-12) {
  if (is_collinear(z1, z2, z3, tol)) return Orientation::Degenerate;
  return signed_area2(z1, z2, z3) > 0.0 ? Orientation::Positive : Orientation::Negative;
}

namespace detail {

// Solves m * x = rhs for the 3x3 system by Gaussian elimination with partial
// pivoting; two right-hand sides share the elimination.
inline bool solve3x3(std::array<std::array<double, 3>, 3> m, std::array<double, 3>& b0,
                     std::array<double, 3>& b1) {
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int row = col + 1; row < 3; ++row) {
      if (std::abs(m[row][col]) > std::abs(m[pivot][col])) pivot = row;
    }
    if (m[pivot][col] == 0.0) return false;
    std::swap(m[col], m[pivot]);
    std::swap(b0[col], b0[pivot]);
    std::swap(b1[col], b1[pivot]);
    for (int row = col + 1; row < 3; ++row) {
      const double factor = m[row][col] / m[col][col];
      for (int k = col; k < 3; ++k) m[row][k] -= factor * m[col][k];
      b0[row] -= factor * b0[col];
      b1[row] -= factor * b1[col];
    }
  }
  for (int row = 2; row >= 0; --row) {
    for (int k = row + 1; k < 3; ++k) {
      b0[row] -= m[row][k] * b0[k];
      b1[row] -= m[row][k] * b1[k];
    }
    b0[row] /= m[row][row];
    b1[row] /= m[row][row];
  }
  return true;
}

}  // namespace detail

/// Unique affine map with f(z_k) = w_k for the three correspondences.
///
/// Writing p = Re(alpha+beta), q = Im(beta-alpha), s = Im(alpha+beta),
/// t = Re(alpha-beta), the real and imaginary parts of w decouple into two
/// real systems sharing the matrix rows (x_k, y_k, 1).
inline AffineMap solve_affine(std::span<const Complex, 3> source, std::span<const Complex, 3> target) {
  if (is_collinear(source[0], source[1], source[2])) {
    throw Error(ErrorCode::CollinearSource, "affine source triple is collinear");
  }
  // Centering on the first vertex keeps the system well scaled.
  const Complex origin = source[0];
  std::array<std::array<double, 3>, 3> m{};
  std::array<double, 3> re{};
  std::array<double, 3> im{};
  for (int k = 0; k < 3; ++k) {
    const Complex z = source[k] - origin;
    m[k] = {z.real(), z.imag(), 1.0};
    re[k] = target[k].real();
    im[k] = target[k].imag();
  }
  if (!detail::solve3x3(m, re, im)) {
    throw Error(ErrorCode::CollinearSource, "affine system is singular");
  }
  const double p = re[0], q = re[1];
  const double s = im[0], t = im[1];
  AffineMap f;
  f.alpha = {(p + t) / 2.0, (s - q) / 2.0};
  f.beta = {(p - t) / 2.0, (s + q) / 2.0};
  // Undo the centering: f(z) = g(z - origin).
  f.gamma = Complex{re[2], im[2]} - f.alpha * origin - f.beta * std::conj(origin);
  return f;
}

inline AffineMap solve_affine(Complex z1, Complex w1, Complex z2, Complex w2, Complex z3, Complex w3) {
  const std::array<Complex, 3> src{z1, z2, z3};
  const std::array<Complex, 3> dst{w1, w2, w3};
  return solve_affine(std::span<const Complex, 3>(src), std::span<const Complex, 3>(dst));
}

/// Indices (p, q) of a farthest vertex pair; the first pair found wins ties.
inline std::pair<std::size_t, std::size_t> diameter_pair(std::span<const Complex> pts) {
  std::pair<std::size_t, std::size_t> best{0, pts.size() > 1 ? 1 : 0};
  double best_d = -1.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t k = i + 1; k < pts.size(); ++k) {
      const double d = std::norm(pts[i] - pts[k]);
      if (d > best_d) {
        best_d = d;
        best = {i, k};
      }
    }
  }
  return best;
}

inline double diameter(std::span<const Complex> pts) {
  const auto [p, q] = diameter_pair(pts);
  return std::abs(pts[p] - pts[q]);
}

inline double diameter(const Polygon& poly) { return diameter(std::span<const Complex>(poly.vertices)); }

}  // namespace polymatch
