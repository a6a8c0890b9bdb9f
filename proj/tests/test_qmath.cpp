#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "lossqkd/qmath.hpp"
#include "support.hpp"

using namespace lossqkd;
using lossqkd::testing::eigen_eigenvalues;
using lossqkd::testing::random_density;
using lossqkd::testing::random_unitary;
using lossqkd::testing::random_vec;

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
// Frozen from a 30-digit mpmath evaluation.
constexpr double kH2Quarter = 0.81127812445913286391;
constexpr double kHolevoZeroPlus = 0.60087603669285610084;
constexpr double kHelstromZeroPlus = 0.85355339059327376220;

DensityOp pure(cplx a, cplx b) { return DensityOp::pure(ComplexVec{a, b}); }

}  // namespace

TEST(ComplexVec, InnerProductOfZeroAndPlus) {
  const ComplexVec zero{1.0, 0.0};
  const ComplexVec plus{kInvSqrt2, kInvSqrt2};
  const cplx ip = inner_product(zero, plus);
  EXPECT_NEAR(ip.real(), kInvSqrt2, 1e-15);
  EXPECT_EQ(ip.imag(), 0.0);
}

TEST(ComplexVec, InnerProductIsConjugateLinearInFirstArgument) {
  const ComplexVec x{cplx{0.0, 1.0}, 0.0};
  const ComplexVec y{1.0, 0.0};
  EXPECT_EQ(inner_product(x, y), (cplx{0.0, -1.0}));
  EXPECT_EQ(inner_product(y, x), (cplx{0.0, 1.0}));
}

TEST(ComplexVec, SelfInnerProductIsNormSquared) {
  RandomStream rng(11, 0);
  for (int k = 0; k < 200; ++k) {
    const ComplexVec x = random_vec(1 + k % 8, rng);
    const cplx ip = inner_product(x, x);
    EXPECT_NEAR(ip.real(), x.norm_squared(), 1e-12);
    EXPECT_EQ(ip.imag(), 0.0);
  }
}

TEST(ComplexVec, DimensionMismatchThrows) {
  EXPECT_THROW(inner_product(ComplexVec(2), ComplexVec(3)), invalid_input);
  ComplexVec a(2);
  EXPECT_THROW(a += ComplexVec(3), invalid_input);
  EXPECT_THROW(ComplexVec::basis(2, 2), invalid_input);
}

TEST(Eigensolver, MatchesIndependentSolverOnRandomHermitian) {
  RandomStream rng(12, 0);
  for (std::size_t d = 1; d <= 8; ++d) {
    for (int rep = 0; rep < 10; ++rep) {
      Matrix m(d);
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) m(i, j) = lossqkd::testing::gaussian_cplx(rng);
      m = 0.5 * (m + m.adjoint());
      const auto ours = eigvalsh(m);
      const auto ref = eigen_eigenvalues(m);
      ASSERT_EQ(ours.size(), ref.size());
      for (std::size_t k = 0; k < d; ++k) EXPECT_NEAR(ours[k], ref[k], 1e-10);
    }
  }
}

TEST(Eigensolver, EigenpairResidualIsSmall) {
  RandomStream rng(13, 0);
  for (std::size_t d = 2; d <= 8; ++d) {
    Matrix m(d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) m(i, j) = lossqkd::testing::gaussian_cplx(rng);
    m = 0.5 * (m + m.adjoint());
    const EigenSystem es = eigh(m);
    for (std::size_t k = 0; k < d; ++k) {
      const ComplexVec r = m.apply(es.vectors[k]) - es.values[k] * es.vectors[k];
      EXPECT_LE(r.norm(), 1e-10);
      EXPECT_NEAR(es.vectors[k].norm(), 1.0, 1e-12);
    }
    for (std::size_t k = 1; k < d; ++k) EXPECT_LE(es.values[k - 1], es.values[k]);
  }
}

TEST(Eigensolver, DegenerateSpectrum) {
  const auto v = eigvalsh(Matrix::identity(5));
  for (double x : v) EXPECT_NEAR(x, 1.0, 1e-15);
  const auto w = eigvalsh(Matrix::diagonal({3.0, -1.0, 3.0}));
  EXPECT_NEAR(w[0], -1.0, 1e-15);
  EXPECT_NEAR(w[1], 3.0, 1e-15);
  EXPECT_NEAR(w[2], 3.0, 1e-15);
}

TEST(DensityOp, RejectsInvalidMatrices) {
  EXPECT_THROW(DensityOp(Matrix::diagonal({0.5, 0.4})), invalid_input);     // trace
  EXPECT_THROW(DensityOp(Matrix::diagonal({1.2, -0.2})), invalid_input);    // negative
  EXPECT_THROW(DensityOp(Matrix{{0.5, 0.1}, {0.0, 0.5}}), invalid_input);   // not Hermitian
  EXPECT_THROW(DensityOp(Matrix(0)), invalid_input);
}

TEST(DensityOp, TolerancesAreConfigurable) {
  const Matrix m = Matrix::diagonal({0.5, 0.5 + 1e-9});
  EXPECT_THROW(DensityOp{m}, invalid_input);
  EXPECT_NO_THROW(DensityOp(m, Tolerances{1e-12, 1e-8, 1e-12}));
}

TEST(DensityOp, EigenvaluesSumToOne) {
  RandomStream rng(14, 0);
  for (int k = 0; k < 100; ++k) {
    const std::size_t d = 2 + static_cast<std::size_t>(k % 7);
    const DensityOp rho = random_density(d, 1 + static_cast<std::size_t>(k % 3), rng);
    double s = 0.0;
    for (double l : rho.eigenvalues()) s += l;
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Entropy, BinaryEntropyValues) {
  EXPECT_NEAR(binary_entropy(0.25), kH2Quarter, 1e-14);
  EXPECT_EQ(binary_entropy(0.0), 0.0);
  EXPECT_EQ(binary_entropy(1.0), 0.0);
  EXPECT_NEAR(binary_entropy(0.5), 1.0, 1e-15);
}

TEST(Entropy, PureAndMaximallyMixed) {
  EXPECT_NEAR(vn_entropy(pure(kInvSqrt2, kInvSqrt2)), 0.0, 1e-12);
  EXPECT_NEAR(vn_entropy(DensityOp(Matrix::diagonal({0.25, 0.25, 0.25, 0.25}))), 2.0, 1e-14);
}

TEST(Entropy, TinyNegativeEigenvaluesAreClamped) {
  const DensityOp rho(Matrix::diagonal({1.0 + 5e-13, -5e-13}));
  const double s = vn_entropy(rho);
  EXPECT_FALSE(std::isnan(s));
  EXPECT_NEAR(s, 0.0, 1e-11);
}

TEST(Entropy, UnitaryInvariance) {
  RandomStream rng(15, 0);
  for (int k = 0; k < 50; ++k) {
    const std::size_t d = 2 + static_cast<std::size_t>(k % 7);
    const DensityOp rho = random_density(d, 1 + static_cast<std::size_t>(k % d), rng);
    const Matrix u = random_unitary(d, rng);
    Matrix rotated = u * rho.matrix() * u.adjoint();
    rotated = 0.5 * (rotated + rotated.adjoint());
    EXPECT_NEAR(vn_entropy(DensityOp(rotated, Tolerances{1e-12, 1e-11, 1e-12})), vn_entropy(rho), 1e-10);
  }
}

TEST(Holevo, ZeroAndPlus) {
  EXPECT_NEAR(holevo_bound(pure(1.0, 0.0), pure(kInvSqrt2, kInvSqrt2), 0.5), kHolevoZeroPlus, 1e-12);
}

TEST(Holevo, AgreesWithIndependentSpectrum) {
  // chi from eigenvalues computed by a different solver.
  RandomStream rng(16, 0);
  for (int k = 0; k < 40; ++k) {
    const std::size_t d = 2 + static_cast<std::size_t>(k % 5);
    const DensityOp r0 = random_density(d, 2, rng);
    const DensityOp r1 = random_density(d, 1 + static_cast<std::size_t>(k % 3), rng);
    const double p0 = rng.uniform();
    auto s = [](const Matrix& m) {
      double acc = 0.0;
      for (double l : eigen_eigenvalues(m)) acc += entropy_term(std::max(l, 0.0));
      return acc;
    };
    const double ref = s(p0 * r0.matrix() + (1 - p0) * r1.matrix()) - p0 * s(r0.matrix()) - (1 - p0) * s(r1.matrix());
    EXPECT_NEAR(holevo_bound(r0, r1, p0), ref, 1e-10);
  }
}

TEST(Holevo, BoundedByMixtureEntropy) {
  RandomStream rng(17, 0);
  for (int k = 0; k < 100; ++k) {
    const std::size_t d = 2 + static_cast<std::size_t>(k % 5);
    const DensityOp r0 = random_density(d, 1 + static_cast<std::size_t>(k % 3), rng);
    const DensityOp r1 = random_density(d, 1 + static_cast<std::size_t>((k + 1) % 3), rng);
    const double p0 = rng.uniform();
    const double chi = holevo_bound(r0, r1, p0);
    const DensityOp mix(p0 * r0.matrix() + (1 - p0) * r1.matrix());
    EXPECT_GE(chi, 0.0);
    EXPECT_LE(chi, vn_entropy(mix) + 1e-12);
  }
}

TEST(Holevo, IdenticalStatesCarryNothing) {
  const DensityOp r = pure(0.6, cplx{0.0, 0.8});
  EXPECT_NEAR(holevo_bound(r, r, 0.3), 0.0, 1e-12);
}

TEST(Helstrom, ZeroAndPlus) {
  EXPECT_NEAR(helstrom_prob(pure(1.0, 0.0), pure(kInvSqrt2, kInvSqrt2), 0.5), kHelstromZeroPlus, 1e-12);
}

TEST(Helstrom, OrthogonalAndIdentical) {
  EXPECT_NEAR(helstrom_prob(pure(1.0, 0.0), pure(0.0, 1.0), 0.5), 1.0, 1e-15);
  EXPECT_NEAR(helstrom_prob(pure(1.0, 0.0), pure(1.0, 0.0), 0.7), 0.7, 1e-15);
}

TEST(Helstrom, PureStateFormula) {
  // 1/2 (1 + sqrt(1 - 4 p0 p1 |<a|b>|^2)) for pure states.
  RandomStream rng(18, 0);
  for (int k = 0; k < 100; ++k) {
    const ComplexVec a = lossqkd::testing::random_unit(3, rng);
    const ComplexVec b = lossqkd::testing::random_unit(3, rng);
    const double p0 = rng.uniform();
    const double ref = 0.5 * (1.0 + std::sqrt(1.0 - 4.0 * p0 * (1 - p0) * std::norm(inner_product(a, b))));
    EXPECT_NEAR(helstrom_prob(DensityOp::pure(a), DensityOp::pure(b), p0), ref, 1e-10);
  }
}

TEST(TraceDistance, QubitPair) {
  // Pure states: sqrt(1 - |<a|b>|^2).
  EXPECT_NEAR(trace_distance(pure(1.0, 0.0), pure(kInvSqrt2, kInvSqrt2)), kInvSqrt2, 1e-12);
  EXPECT_THROW(trace_distance(pure(1.0, 0.0), DensityOp(Matrix::diagonal({1.0, 0.0, 0.0}))), invalid_input);
}

TEST(BinaryEnsemble, RejectsBadPrior) {
  EXPECT_THROW(holevo_bound(pure(1.0, 0.0), pure(0.0, 1.0), 1.5), invalid_input);
  EXPECT_THROW(helstrom_prob(pure(1.0, 0.0), pure(0.0, 1.0), -0.1), invalid_input);
}
