#include <gtest/gtest.h>

#include <cmath>

#include "qpt/qmat.hpp"

using namespace qpt;

namespace {

CMatrix random_hermitian(int d, Rng& rng) {
  const CMatrix g = complex_gaussian(d, d, 1.0, rng);
  return 0.5 * (g + g.adjoint());
}

CMatrix pauli_x() {
  CMatrix x(2, 2);
  x << 0, 1, 1, 0;
  return x;
}

}  // namespace

TEST(Eigh, DiagonalInputSorted) {
  CMatrix m = CMatrix::Zero(3, 3);
  m.diagonal() << 3, 1, 2;
  const auto e = eigh(m);
  EXPECT_NEAR(e.values(0), 1, 1e-14);
  EXPECT_NEAR(e.values(1), 2, 1e-14);
  EXPECT_NEAR(e.values(2), 3, 1e-14);
}

TEST(Eigh, PauliX) {
  const auto e = eigh(pauli_x());
  EXPECT_NEAR(e.values(0), -1, 1e-14);
  EXPECT_NEAR(e.values(1), 1, 1e-14);
}

TEST(Eigh, RandomReconstruction) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const CMatrix h = random_hermitian(8, rng);
    const auto e = eigh(h);
    const CMatrix back = e.vectors * e.values.asDiagonal() * e.vectors.adjoint();
    EXPECT_LT((back - h).norm() / h.norm(), 1e-10);
    EXPECT_LT((e.vectors.adjoint() * e.vectors - CMatrix::Identity(8, 8)).norm(), 1e-10);
    for (int i = 1; i < 8; ++i) EXPECT_LE(e.values(i - 1), e.values(i));
  }
}

TEST(Eigh, RejectsNonHermitian) {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 1) = 1.0;
  try {
    eigh(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonHermitian);
  }
}

TEST(MatSqrt, Examples) {
  EXPECT_LT((mat_sqrt(CMatrix::Identity(3, 3)) - CMatrix::Identity(3, 3)).norm(), 1e-14);
  CMatrix m = CMatrix::Zero(2, 2);
  m.diagonal() << 4, 9;
  const CMatrix r = mat_sqrt(m);
  EXPECT_NEAR(r(0, 0).real(), 2, 1e-14);
  EXPECT_NEAR(r(1, 1).real(), 3, 1e-14);
}

TEST(MatSqrt, RankFloorGuard) {
  CMatrix m = CMatrix::Zero(2, 2);
  m.diagonal() << 4, 1e-15;
  try {
    mat_inv_sqrt(m, 1e-12);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RankDeficient);
  }
}

TEST(MatSqrt, NotPsd) {
  CMatrix m = CMatrix::Zero(2, 2);
  m.diagonal() << 1, -0.1;
  try {
    mat_sqrt(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotPSD);
  }
}

TEST(MatSqrt, RandomPsdSquares) {
  Rng rng(11);
  std::uniform_int_distribution<int> dim(1, 16);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = dim(rng);
    const CMatrix g = complex_gaussian(d, d, 1.0, rng);
    const CMatrix p = g * g.adjoint();
    const CMatrix r = mat_sqrt(p);
    EXPECT_LT((r * r - p).norm() / std::max(1.0, p.norm()), 1e-9);
    const CMatrix ir = mat_inv_sqrt(p + CMatrix::Identity(d, d), 1e-12);
    const CMatrix id = ir * (p + CMatrix::Identity(d, d)) * ir;
    EXPECT_LT((id - CMatrix::Identity(d, d)).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(PartialTrace, MaxEntangledMarginal) {
  const CVector phi = max_entangled(2);
  const CMatrix rho = phi * phi.adjoint();
  EXPECT_LT((partial_trace(rho, 2, 2, Keep::First) - CMatrix::Identity(2, 2) / 2.0).norm(), 1e-14);
  EXPECT_LT((partial_trace(rho, 2, 2, Keep::Second) - CMatrix::Identity(2, 2) / 2.0).norm(), 1e-14);
}

TEST(PartialTrace, ProductInput) {
  Rng rng(3);
  const CMatrix a = complex_gaussian(2, 2, 1.0, rng);
  const CMatrix b = complex_gaussian(3, 3, 1.0, rng);
  const CMatrix ab = kron(a, b);
  EXPECT_LT((partial_trace(ab, 2, 3, Keep::First) - a * b.trace()).norm(), 1e-12);
  EXPECT_LT((partial_trace(ab, 2, 3, Keep::Second) - b * a.trace()).norm(), 1e-12);
}

TEST(PartialTrace, RandomStateMarginal) {
  Rng rng(5);
  const CMatrix rho = random_density(6, 6, rng);
  const CMatrix m = partial_trace(rho, 2, 3, Keep::First);
  EXPECT_NEAR(m.trace().real(), 1.0, 1e-12);
  EXPECT_LT(hermitian_residual(m), 1e-12);
}

TEST(PartialTrace, Composes) {
  Rng rng(6);
  const CMatrix rho = random_density(12, 12, rng);
  // keep X from X (x) Y (x) Z in two steps versus one
  const CMatrix xy = partial_trace(rho, 6, 2, Keep::First);
  const CMatrix x1 = partial_trace(xy, 2, 3, Keep::First);
  const CMatrix x2 = partial_trace(rho, 2, 6, Keep::First);
  EXPECT_LT((x1 - x2).norm(), 1e-12);
}

TEST(PartialTrace, DimensionMismatch) {
  EXPECT_THROW(partial_trace(CMatrix::Identity(5, 5), 2, 2, Keep::First), Error);
}

TEST(Fidelity, Examples) {
  Rng rng(1);
  const CMatrix rho = random_density(3, 3, rng);
  EXPECT_NEAR(fidelity(rho, rho), 1.0, 1e-7);
  CMatrix z0 = CMatrix::Zero(2, 2), z1 = CMatrix::Zero(2, 2);
  z0(0, 0) = 1;
  z1(1, 1) = 1;
  EXPECT_NEAR(fidelity(z0, z1), 0.0, 1e-12);
  // pure versus mixed: F = sqrt(<0|rho|0>)
  EXPECT_NEAR(fidelity(CMatrix::Identity(2, 2) / 2.0, z0), std::sqrt(0.5), 1e-12);
  EXPECT_NEAR(purified_distance(rho, rho), 0.0, 1e-3);
  EXPECT_NEAR(purified_distance(z0, z1), 1.0, 1e-12);
  EXPECT_NEAR(purified_distance(CMatrix::Identity(2, 2) / 2.0, z0), std::sqrt(0.5), 1e-12);
}

TEST(Fidelity, RejectsNonState) {
  try {
    fidelity(CMatrix::Identity(2, 2), CMatrix::Identity(2, 2) / 2.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotState);
  }
}

TEST(Fidelity, TraceDistanceBoundsAndSymmetry) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const CMatrix s = random_density(3, 2, rng);
    const CMatrix t = random_density(3, 3, rng);
    const double f = fidelity(s, t);
    EXPECT_NEAR(f, fidelity(t, s), 1e-8);
    const double td = 0.5 * trace_norm(s - t);
    EXPECT_LE(1 - f, td + 1e-9);
    EXPECT_LE(td, std::sqrt(1 - f * f) + 1e-9);
  }
}

TEST(PurifiedDistance, TriangleInequality) {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const CMatrix a = random_density(2, 2, rng);
    const CMatrix b = random_density(2, 2, rng);
    const CMatrix c = random_density(2, 2, rng);
    EXPECT_LE(purified_distance(a, c), purified_distance(a, b) + purified_distance(b, c) + 1e-9);
  }
}

TEST(Norms, Examples) {
  EXPECT_NEAR(trace_norm(CMatrix::Identity(4, 4)), 4.0, 1e-14);
  EXPECT_NEAR(op_norm(CMatrix::Identity(4, 4)), 1.0, 1e-14);
  CMatrix m = CMatrix::Zero(2, 2);
  m.diagonal() << 1, -2;
  EXPECT_NEAR(trace_norm(m), 3.0, 1e-14);
  EXPECT_NEAR(op_norm(m), 2.0, 1e-14);
  const CVector phi = max_entangled(2);
  const CMatrix d = phi * phi.adjoint() - CMatrix::Identity(4, 4) / 4.0;
  // spectrum (3/4, -1/4, -1/4, -1/4)
  EXPECT_NEAR(trace_norm(d), 1.5, 1e-12);
}

TEST(Norms, NonHermitianUsesSingularValues) {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 1) = 2.0;
  EXPECT_NEAR(trace_norm(m), 2.0, 1e-12);
  EXPECT_NEAR(op_norm(m), 2.0, 1e-12);
}

TEST(Haar, Unitary) {
  Rng rng(9);
  for (int d : {1, 2, 5, 16}) EXPECT_LT(unitarity_residual(haar_unitary(d, rng)), 1e-12);
}

TEST(Haar, Deterministic) {
  Rng a(123), b(123);
  EXPECT_EQ(haar_unitary(4, a), haar_unitary(4, b));
}

TEST(Haar, SecondMoment) {
  Rng rng(10);
  const int n = 100000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = std::norm(haar_unitary(4, rng)(0, 0));
    s += x;
    s2 += x * x;
  }
  const double mean = s / n;
  const double sigma = std::sqrt((s2 / n - mean * mean) / n);
  EXPECT_NEAR(mean, 0.25, 3 * sigma);
}

TEST(Haar, LeftInvariance) {
  Rng rng(12);
  const CMatrix v = haar_unitary(3, rng);
  const int n = 40000;
  double m1 = 0, m2 = 0, q1 = 0, q2 = 0;
  for (int i = 0; i < n; ++i) {
    const CMatrix u = haar_unitary(3, rng);
    const double a = std::norm(u(1, 2)), b = std::norm((v * u)(1, 2));
    m1 += a;
    m2 += b;
    q1 += a * a;
    q2 += b * b;
  }
  // E|U_ij|^2 = 1/3, E|U_ij|^4 = 2/(d(d+1)) = 1/6
  const double tol1 = 4 * std::sqrt((1.0 / 6 - 1.0 / 9) / n);
  EXPECT_NEAR(m1 / n, m2 / n, 2 * tol1);
  EXPECT_NEAR(q2 / n, 1.0 / 6, 0.01);
  EXPECT_NEAR(q1 / n, 1.0 / 6, 0.01);
}
