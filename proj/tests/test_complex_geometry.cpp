#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "polymatch/complex_geometry.hpp"

using namespace polymatch;

namespace {

void expect_near(Complex a, Complex b, double tol) {
  EXPECT_NEAR(a.real(), b.real(), tol);
  EXPECT_NEAR(a.imag(), b.imag(), tol);
}

}  // namespace

TEST(Polygon, RejectsShortAndNonFinite) {
  EXPECT_THROW(Polygon("p", {{0, 0}, {1, 0}}), Error);
  try {
    Polygon("p", {{0, 0}, {1, 0}, {std::nan(""), 0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidPolygon);
  }
  EXPECT_NO_THROW(Polygon("p", {{0, 0}, {1, 0}, {2, 0}}));
}

TEST(Polygon, ShiftVertexOrder) {
  const Polygon z("z", {{0, 0}, {1, 0}, {0, 1}, {1, 1}});
  const Polygon s = z.shifted(1);
  EXPECT_EQ(s[0], z[1]);
  EXPECT_EQ(s[3], z[0]);
  EXPECT_EQ(z.shifted(4).vertices, z.vertices);
  EXPECT_EQ(z.shifted(2).shifted(2).vertices, z.vertices);
}

TEST(RootOfUnity, ExactQuarterTurnsAndAgreesWithTrig) {
  EXPECT_EQ(root_of_unity(1, 4), Complex(0, 1));
  EXPECT_EQ(root_of_unity(-1, 4), Complex(0, -1));
  EXPECT_EQ(root_of_unity(6, 12), Complex(-1, 0));
  EXPECT_EQ(root_of_unity(0, 7), Complex(1, 0));
  for (int n = 3; n <= 32; ++n) {
    for (long long m = -2 * n; m <= 2 * n; ++m) {
      const auto ref = oracle::unit_root(static_cast<long double>(m) / n);
      expect_near(root_of_unity(m, n), Complex(double(ref.real()), double(ref.imag())), 2e-15);
    }
  }
}

TEST(ChordalDistance, MatchesStereographicChord) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> e(-8, 8), a(0, 6.283185307179586);
  for (int i = 0; i < 2000; ++i) {
    const Complex x = std::polar(std::pow(10.0, e(rng)), a(rng));
    const Complex y = std::polar(std::pow(10.0, e(rng)), a(rng));
    EXPECT_NEAR(chordal_distance(x, y), oracle::chordal(x, y), 1e-12);
    EXPECT_NEAR(chordal_distance(x, RiemannPoint::infinity()), oracle::chordal(x, std::nullopt), 1e-12);
  }
  EXPECT_EQ(chordal_distance(RiemannPoint::infinity(), RiemannPoint::infinity()), 0.0);
  EXPECT_NEAR(chordal_distance(Complex{0, 0}, RiemannPoint::infinity()), 1.0, 1e-15);
}

TEST(AffineMap, DeterminantAndValidity) {
  const AffineMap f{{2, 0}, {1, 0}, {0, 0}};
  EXPECT_DOUBLE_EQ(f.det(), 3.0);
  EXPECT_TRUE(f.is_valid());
  EXPECT_TRUE(f.preserves_orientation());
  const AffineMap g{{1, 0}, {0, 1}, {0, 0}};
  EXPECT_FALSE(g.is_valid());
  EXPECT_THROW(g.validate(), Error);
  const AffineMap flip{{0, 0}, {1, 0}, {0, 0}};
  EXPECT_TRUE(flip.is_valid());
  EXPECT_FALSE(flip.preserves_orientation());
}

TEST(AffineMap, AgreesWithMatrixForm) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    const AffineMap f = oracle::random_affine(rng, i % 2 == 1);
    const auto m = oracle::to_matrix(f);
    EXPECT_NEAR(f.det(), oracle::det(m), 1e-12 * (1 + std::abs(f.det())));
    for (const Complex& z : oracle::random_vertices(rng, 4)) expect_near(f(z), oracle::apply(m, z), 1e-12);
  }
}

TEST(AffineMap, InverseAndCompose) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    const AffineMap f = oracle::random_affine(rng, i % 3 == 0);
    const AffineMap g = oracle::random_affine(rng, i % 5 == 0);
    const AffineMap fi = f.inverse();
    const AffineMap fg = f.compose(g);
    for (const Complex& z : oracle::random_vertices(rng, 3)) {
      expect_near(fi(f(z)), z, 1e-10);
      expect_near(f(fi(z)), z, 1e-10);
      expect_near(fg(z), f(g(z)), 1e-10);
    }
  }
  EXPECT_THROW(AffineMap({1, 0}, {1, 0}, {0, 0}).inverse(), Error);
}

TEST(SolveSimilarity, RecoversMap) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const SimilarityMap s = oracle::random_similarity(rng, -1, 1);
    const auto v = oracle::random_vertices(rng, 3);
    const SimilarityMap t = solve_similarity(v[0], s(v[0]), v[1], s(v[1]));
    expect_near(t(v[2]), s(v[2]), 1e-9 * (1 + std::abs(s(v[2]))));
  }
  EXPECT_THROW(solve_similarity({1, 1}, {0, 0}, {1, 1}, {2, 2}), Error);
}

TEST(SolveAffine, RecoversRandomMaps) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 500; ++i) {
    const AffineMap f = oracle::random_affine(rng, i % 2 == 0);
    const auto v = oracle::random_vertices(rng, 4);
    const AffineMap g = solve_affine(v[0], f(v[0]), v[1], f(v[1]), v[2], f(v[2]));
    expect_near(g(v[3]), f(v[3]), 1e-8);
    expect_near(g.alpha, f.alpha, 1e-7);
    expect_near(g.beta, f.beta, 1e-7);
  }
}

TEST(SolveAffine, UnitTriangleExample) {
  const std::array<Complex, 3> src{Complex{0, 0}, Complex{1, 0}, Complex{0, 1}};
  const std::array<Complex, 3> dst{Complex{1, 1}, Complex{3, 1}, Complex{1, 2}};
  const AffineMap f = solve_affine(src, dst);
  // x -> 2x, y -> y, shifted by 1+i.
  expect_near(f.alpha, {1.5, 0}, 1e-14);
  expect_near(f.beta, {0.5, 0}, 1e-14);
  expect_near(f.gamma, {1, 1}, 1e-14);
}

TEST(SolveAffine, CollinearSourceThrows) {
  try {
    solve_affine({0, 0}, {0, 0}, {1, 1}, {1, 0}, {2, 2}, {0, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CollinearSource);
  }
}

TEST(Orientation, SignsAndDegenerate) {
  EXPECT_EQ(orientation({0, 0}, {1, 0}, {0, 1}), Orientation::Positive);
  EXPECT_EQ(orientation({0, 0}, {0, 1}, {1, 0}), Orientation::Negative);
  EXPECT_EQ(orientation({0, 0}, {1, 1}, {2, 2}), Orientation::Degenerate);
  EXPECT_TRUE(is_collinear({0, 0}, {1, 1}, {2, 2 + 1e-14}));
  EXPECT_FALSE(is_collinear({0, 0}, {1, 1}, {2, 2.1}));
}

TEST(Diameter, BruteForcePair) {
  const std::vector<Complex> pts{{0, 0}, {3, 0}, {1, 1}, {0, 4}};
  const auto [a, b] = diameter_pair(pts);
  EXPECT_EQ(std::min(a, b), 1u);
  EXPECT_EQ(std::max(a, b), 3u);
  EXPECT_DOUBLE_EQ(diameter(pts), 5.0);
}
