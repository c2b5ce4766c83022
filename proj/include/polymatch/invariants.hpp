#pragma once

// Similarity invariants phi_{n,j} and phi_p, the cyclic-shift signature
// phi_{n,j}^n and the pseudo-hyperbolic quantity that affine maps preserve.

#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "polymatch/complex_geometry.hpp"
#include "polymatch/error.hpp"

namespace polymatch {

/// A numerator or denominator sum is treated as zero below this multiple of sum_k |z_k|.
inline constexpr double kVanishingTolerance = 1e-12;

/// Value of an invariant on the extended plane, or Undefined on the null set
/// where numerator and denominator both vanish.
class InvariantValue {
 public:
  enum class Kind { Finite, Infinity, Undefined };

  static InvariantValue finite(Complex z) { return InvariantValue(Kind::Finite, z); }
  static InvariantValue infinity() { return InvariantValue(Kind::Infinity, {}); }
  static InvariantValue undefined() { return InvariantValue(Kind::Undefined, {}); }

  Kind kind() const { return kind_; }
  bool is_finite() const { return kind_ == Kind::Finite; }
  bool is_infinite() const { return kind_ == Kind::Infinity; }
  bool is_undefined() const { return kind_ == Kind::Undefined; }

  /// Only meaningful for finite values.
  Complex value() const { return value_; }

  RiemannPoint point() const {
    if (kind_ == Kind::Undefined) throw Error(ErrorCode::UndefinedOperand, "invariant is undefined");
    return kind_ == Kind::Infinity ? RiemannPoint::infinity() : RiemannPoint(value_);
  }

 private:
  InvariantValue(Kind kind, Complex z) : kind_(kind), value_(z) {}

  Kind kind_;
  Complex value_;
};

/// Numerator and denominator sums of phi_{n,j}.
struct FourierPair {
  Complex numerator;
  Complex denominator;
  double scale;  // sum_k |z_k|, the reference for the vanishing test
};

inline void check_j(int j, std::size_t n) {
  if (j < 1 || static_cast<std::size_t>(j) > n - 1) {
    throw Error(ErrorCode::BadJ, "j=" + std::to_string(j) + " outside [1, " + std::to_string(n - 1) + "]");
  }
}

/// Sums over k = 1..n of lambda_n^{jk} z_k and lambda_n^{-jk} z_k.
inline FourierPair fourier_pair(const Polygon& poly, int j) {
  const int n = static_cast<int>(poly.size());
  check_j(j, poly.size());
  FourierPair out{{}, {}, 0.0};
  for (int k = 1; k <= n; ++k) {
    const Complex z = poly[static_cast<std::size_t>(k - 1)];
    const long long e = static_cast<long long>(j) * k;
    out.numerator += root_of_unity(e, n) * z;
    out.denominator += root_of_unity(-e, n) * z;
    out.scale += std::abs(z);
  }
  return out;
}

inline InvariantValue ratio_invariant(Complex numerator, Complex denominator, double scale) {
  const double eps = kVanishingTolerance * scale;
  const bool num_zero = std::abs(numerator) <= eps;
  const bool den_zero = std::abs(denominator) <= eps;
  if (den_zero) return num_zero ? InvariantValue::undefined() : InvariantValue::infinity();
  if (num_zero) return InvariantValue::finite({0.0, 0.0});
  return InvariantValue::finite(numerator / denominator);
}

/// phi_{n,j}(Z) = (sum lambda_n^{jk} z_k) / (sum lambda_n^{-jk} z_k).
inline InvariantValue phi_nj(const Polygon& poly, int j) {
  const FourierPair s = fourier_pair(poly, j);
  return ratio_invariant(s.numerator, s.denominator, s.scale);
}

/// phi_p(Z) for a permutation p of {1..n} given as its values p(1), ..., p(n).
inline InvariantValue phi_perm(const Polygon& poly, std::span<const int> perm) {
  const int n = static_cast<int>(poly.size());
  if (perm.size() != poly.size()) throw Error(ErrorCode::BadPermutation, "permutation has wrong length");
  std::vector<bool> seen(poly.size(), false);
  for (int v : perm) {
    if (v < 1 || v > n || seen[static_cast<std::size_t>(v - 1)]) {
      throw Error(ErrorCode::BadPermutation, "not a bijection on {1..n}");
    }
    seen[static_cast<std::size_t>(v - 1)] = true;
  }
  Complex num{}, den{};
  double scale = 0.0;
  for (std::size_t k = 0; k < poly.size(); ++k) {
    num += root_of_unity(perm[k], n) * poly[k];
    den += root_of_unity(-perm[k], n) * poly[k];
    scale += std::abs(poly[k]);
  }
  return ratio_invariant(num, den, scale);
}

/// z^n by repeated squaring.
inline Complex complex_pow(Complex z, unsigned n) {
  Complex result{1.0, 0.0};
  Complex base = z;
  while (n > 0) {
    if (n & 1U) result *= base;
    base *= base;
    n >>= 1U;
  }
  return result;
}

/// sigma = phi_{n,j}(Z)^n, invariant under cyclic shifts of Z.
///
/// Finite values are held in one of two charts so that the stored coordinate
/// always lies in the closed unit disk: the value chart holds sigma when
/// |phi| <= 1, the reciprocal chart holds 1/sigma otherwise.
struct Signature {
  using Kind = InvariantValue::Kind;

  int n = 0;
  int j = 0;
  Kind kind = Kind::Finite;
  bool reciprocal = false;
  Complex chart_value{};

  bool is_finite() const { return kind == Kind::Finite; }

  RiemannPoint point() const {
    if (kind == Kind::Undefined) throw Error(ErrorCode::UndefinedOperand, "signature is undefined");
    if (kind == Kind::Infinity) return RiemannPoint::infinity();
    if (!reciprocal) return chart_value;
    if (chart_value == Complex{}) return RiemannPoint::infinity();
    return 1.0 / chart_value;
  }

  /// Coordinate inside the unit disk used for cell quantization. The
  /// reciprocal chart is conjugated so both charts agree on |sigma| = 1;
  /// this is the fold sigma -> sigma/|sigma|^2 of the outer region, which is
  /// 1-Lipschitz for the chordal metric.
  Complex folded() const { return reciprocal ? std::conj(chart_value) : chart_value; }
};

inline Signature signature_from_phi(const InvariantValue& phi, int n, int j) {
  Signature sig;
  sig.n = n;
  sig.j = j;
  sig.kind = phi.kind();
  if (!phi.is_finite()) return sig;
  const Complex v = phi.value();
  const auto power = static_cast<unsigned>(n);
  if (std::abs(v) <= 1.0) {
    sig.chart_value = complex_pow(v, power);
  } else {
    sig.reciprocal = true;
    sig.chart_value = complex_pow(1.0 / v, power);
  }
  return sig;
}

inline Signature signature(const Polygon& poly, int j) {
  return signature_from_phi(phi_nj(poly, j), static_cast<int>(poly.size()), j);
}

/// Chordal distance between two finite or infinite signatures, evaluated from
/// the chart coordinates without leaving the unit disk.
inline double chordal_distance(const Signature& a, const Signature& b) {
  using Kind = Signature::Kind;
  if (a.kind == Kind::Undefined || b.kind == Kind::Undefined) {
    throw Error(ErrorCode::UndefinedOperand, "chordal distance of an undefined signature");
  }
  if (a.kind == Kind::Infinity || b.kind == Kind::Infinity) return chordal_distance(a.point(), b.point());
  const Complex u = a.chart_value;
  const Complex v = b.chart_value;
  const double denom = std::sqrt((1.0 + std::norm(u)) * (1.0 + std::norm(v)));
  if (a.reciprocal == b.reciprocal) return std::abs(u - v) / denom;
  // One value chart, one reciprocal: |1/u - v| scaled becomes |1 - u v|.
  return std::abs(1.0 - u * v) / denom;
}

/// |b - a| / |1 - conj(a) b|, with the continuous extension 1/|a| when b is
/// infinite. Returns +inf when only the denominator vanishes. No metric axioms
/// are assumed off the unit disk.
inline double pseudo_hyperbolic_distance(const RiemannPoint& a, const RiemannPoint& b) {
  if (a.is_infinite() && b.is_infinite()) return 0.0;
  if (a.is_infinite() || b.is_infinite()) {
    const double m = std::abs(a.is_infinite() ? b.value() : a.value());
    return m == 0.0 ? HUGE_VAL : 1.0 / m;
  }
  const Complex x = a.value();
  const Complex y = b.value();
  const double num = std::abs(y - x);
  const double den = std::abs(1.0 - std::conj(x) * y);
  if (num == 0.0) return 0.0;
  if (den == 0.0) return HUGE_VAL;
  return num / den;
}

inline double pseudo_hyperbolic_distance(const InvariantValue& a, const InvariantValue& b) {
  if (a.is_undefined() || b.is_undefined()) {
    throw Error(ErrorCode::UndefinedOperand, "pseudo-hyperbolic distance of an undefined invariant");
  }
  return pseudo_hyperbolic_distance(a.point(), b.point());
}

/// |beta| / |alpha|, the value every polygon's invariant pair exhibits under f.
inline double affine_ratio(const AffineMap& f) {
  if (f.alpha == Complex{}) throw Error(ErrorCode::ZeroAlpha, "alpha is zero");
  return std::abs(f.beta) / std::abs(f.alpha);
}

}  // namespace polymatch
