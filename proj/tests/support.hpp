// Shared helpers for the test suites: random objects, a constructive sampler
// of feasible attacks that does not go through the search code, and a few
// brute-force oracles.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Dense>

#include "lossqkd/attack.hpp"
#include "lossqkd/random.hpp"

namespace lossqkd::testing {

inline cplx gaussian_cplx(RandomStream& rng) { return {rng.normal(), rng.normal()}; }

inline ComplexVec random_vec(std::size_t d, RandomStream& rng) {
  ComplexVec v(d);
  for (std::size_t i = 0; i < d; ++i) v[i] = gaussian_cplx(rng);
  return v;
}

inline ComplexVec random_unit(std::size_t d, RandomStream& rng) {
  ComplexVec v = random_vec(d, rng);
  return v / v.norm();
}

/// Unit vector orthogonal to `u` (Gram-Schmidt on a random draw).
inline ComplexVec random_unit_orthogonal(const ComplexVec& u, RandomStream& rng) {
  ComplexVec v = random_vec(u.dim(), rng);
  v -= inner_product(u, v) * u;
  return v / v.norm();
}

/// Haar-ish unitary from the QR of a complex Gaussian matrix.
inline Matrix random_unitary(std::size_t d, RandomStream& rng) {
  Eigen::MatrixXcd g(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) g(i, j) = gaussian_cplx(rng);
  const Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
  const Eigen::MatrixXcd q = qr.householderQ();
  Matrix u(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) u(i, j) = q(i, j);
  return u;
}

/// Random density operator of rank `rank` (sum of Gaussian projectors).
inline DensityOp random_density(std::size_t d, std::size_t rank, RandomStream& rng) {
  Matrix m(d);
  for (std::size_t k = 0; k < rank; ++k) m += Matrix::projector(random_vec(d, rng));
  m *= cplx{1.0 / m.trace().real(), 0.0};
  return DensityOp(0.5 * (m + m.adjoint()));
}

inline ComplexVec top_half(const ComplexVec& v, std::size_t d) {
  ComplexVec out(d);
  for (std::size_t i = 0; i < d; ++i) out[i] = v[i];
  return out;
}
inline ComplexVec bottom_half(const ComplexVec& v, std::size_t d) {
  ComplexVec out(d);
  for (std::size_t i = 0; i < d; ++i) out[i] = v[d + i];
  return out;
}

/// Feasible attack built directly from the constraint structure:
/// no-count kets sqrt(1-eta) u and sqrt(1-eta)(i y u + sqrt(1-y^2) v),
/// in-plane pair sqrt(eta) p and sqrt(eta)(-i s p + sqrt(1-s^2) q) with
/// s = (1-eta) y / eta, so every inner product cancels. `six_state` forces y = 0.
inline ProbeKets sample_feasible_attack(double eta, std::size_t d_e, bool six_state, RandomStream& rng) {
  const double y_max = std::min(1.0, eta / (1.0 - eta));
  const double y = six_state ? 0.0 : (2.0 * rng.uniform() - 1.0) * y_max;
  const double s = (1.0 - eta) * y / eta;

  const ComplexVec u = random_unit(d_e, rng);
  const ComplexVec v = random_unit_orthogonal(u, rng);
  const ComplexVec p = random_unit(2 * d_e, rng);
  const ComplexVec q = random_unit_orthogonal(p, rng);

  const double loss = 1.0 - eta;
  const ComplexVec nc0 = std::sqrt(loss) * u;
  const ComplexVec nc1 = std::sqrt(loss) * (cplx{0.0, y} * u + std::sqrt(1.0 - y * y) * v);
  const ComplexVec w0 = std::sqrt(eta) * p;
  const ComplexVec w1 = std::sqrt(eta) * (cplx{0.0, -s} * p + std::sqrt(std::max(0.0, 1.0 - s * s)) * q);

  ProbeKets pk(eta, d_e);
  pk.phi(BobOutcome::Bit0, 0) = top_half(w0, d_e);
  pk.phi(BobOutcome::Bit1, 0) = bottom_half(w0, d_e);
  pk.phi(BobOutcome::Bit0, 1) = top_half(w1, d_e);
  pk.phi(BobOutcome::Bit1, 1) = bottom_half(w1, d_e);
  pk.phi(BobOutcome::NoCount, 0) = nc0;
  pk.phi(BobOutcome::NoCount, 1) = nc1;
  return pk;
}

/// Same unitary applied to all six kets.
inline ProbeKets rotate_probe(const ProbeKets& pk, const Matrix& u) {
  ProbeKets out(pk.eta(), pk.d_e());
  for (auto i : {BobOutcome::Bit0, BobOutcome::Bit1, BobOutcome::NoCount})
    for (int b = 0; b < 2; ++b) out.phi(i, b) = u.apply(pk.phi(i, b));
  return out;
}

/// Eigenvalues from Eigen's self-adjoint solver, ascending.
inline std::vector<double> eigen_eigenvalues(const Matrix& m) {
  const auto n = static_cast<Eigen::Index>(m.dim());
  Eigen::MatrixXcd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = m(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a, Eigen::EigenvaluesOnly);
  return {es.eigenvalues().data(), es.eigenvalues().data() + n};
}

/// Best equal-prior zero-error discrimination of two qubit states by direct
/// search over 3-outcome POVMs. Zero error forces the conclusive elements to
/// be a|psi1-perp><psi1-perp| and b|psi0-perp><psi0-perp| (rank one in two
/// dimensions); the search scans a, finds the largest b that keeps the
/// inconclusive element I - M0 - M1 positive semidefinite by bisection, and
/// polishes the best scan point by golden section.
inline double brute_force_usd(const ComplexVec& psi0, const ComplexVec& psi1) {
  const ComplexVec perp0{-std::conj(psi0[1]), std::conj(psi0[0])};
  const ComplexVec perp1{-std::conj(psi1[1]), std::conj(psi1[0])};
  const double g0 = std::norm(inner_product(perp1, psi0));
  const double g1 = std::norm(inner_product(perp0, psi1));
  auto feasible = [&](double a, double b) {
    const Matrix rest = Matrix::identity(2) - a * Matrix::projector(perp1) - b * Matrix::projector(perp0);
    const double tr = (rest(0, 0) + rest(1, 1)).real();
    const double det = (rest(0, 0) * rest(1, 1) - rest(0, 1) * rest(1, 0)).real();
    return 0.5 * tr - std::sqrt(std::max(0.0, 0.25 * tr * tr - det)) >= -1e-14;
  };
  auto largest = [](auto&& ok) {
    double lo = 0.0, hi = 1.0;
    while (ok(2.0 * hi) && hi < 1e6) hi *= 2.0;
    hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (ok(mid) ? lo : hi) = mid;
    }
    return lo;
  };
  const double a_max = largest([&](double a) { return feasible(a, 0.0); });
  auto success = [&](double a) {
    const double b = largest([&](double bb) { return feasible(a, bb); });
    return 0.5 * (a * g0 + b * g1);
  };
  constexpr int kScan = 2000;
  int best_i = 0;
  double best = success(0.0);
  for (int i = 1; i <= kScan; ++i) {
    const double p = success(a_max * i / kScan);
    if (p > best) {
      best = p;
      best_i = i;
    }
  }
  double lo = a_max * std::max(0, best_i - 1) / kScan, hi = a_max * std::min(kScan, best_i + 1) / kScan;
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 100; ++it) {
    const double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
    if (success(x1) < success(x2)) {
      lo = x1;
    } else {
      hi = x2;
    }
  }
  return std::max(best, success(0.5 * (lo + hi)));
}

}  // namespace lossqkd::testing
