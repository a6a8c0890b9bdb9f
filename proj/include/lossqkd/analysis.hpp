// Post-selected security quantities of a filtered identical individual attack:
// error rates per basis and what Eve's probe holds about the sifted key bit.
#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "lossqkd/attack.hpp"
#include "lossqkd/qmath.hpp"
#include "lossqkd/states.hpp"

namespace lossqkd {

struct TradeoffPoint {
  double qber_z = 0.0;
  double qber_x = 0.0;
  std::optional<double> qber_y;
  double d_avg = 0.0;
  double i_holevo = 0.0;   ///< bits, averaged over sifted bases
  double p_guess = 0.5;    ///< Helstrom guessing probability, averaged over sifted bases
  double x = 0.0;          ///< Im of the no-count deficit
};

namespace detail {

inline void require_basis_allowed(const FilteredAttack& fa, Basis basis) {
  if (basis == Basis::Y && !fa.six_state_consistent)
    throw invalid_input("Y basis requested for an attack that is only four-state feasible");
}

/// Post-selected probe ket for Bob finding `outcome` when Alice sent `input`.
inline ComplexVec conditional_probe(const FilteredAttack& fa, const SignalState& input,
                                    const SignalState& outcome) {
  return std::conj(outcome.a()) * fa.image(0, input.a(), input.b()) +
         std::conj(outcome.b()) * fa.image(1, input.a(), input.b());
}

}  // namespace detail

/// Average probability that Bob finds the basis partner of the state Alice sent.
inline double qber(const FilteredAttack& fa, Basis basis) {
  detail::require_basis_allowed(fa, basis);
  const BasisPair bp = standard_basis(basis);
  double err = 0.0;
  for (int bit = 0; bit < 2; ++bit)
    err += detail::conditional_probe(fa, bp.element(bit), bp.element(1 - bit)).norm_squared();
  return 0.5 * err;
}

/// Eve's post-selected probe states for key bits 0 and 1 sent in `basis`.
inline std::pair<DensityOp, DensityOp> eve_states(const FilteredAttack& fa, Basis basis) {
  detail::require_basis_allowed(fa, basis);
  const BasisPair bp = standard_basis(basis);
  const Tolerances tol{1e-12, 4.0 * kFeasibilityTol / fa.eta, 1e-10};
  auto state = [&](const SignalState& s) {
    const ComplexVec k0 = fa.image(0, s.a(), s.b());
    const ComplexVec k1 = fa.image(1, s.a(), s.b());
    return DensityOp(Matrix::projector(k0) + Matrix::projector(k1), tol);
  };
  return {state(bp.bit0), state(bp.bit1)};
}

inline std::vector<Basis> sifted_bases(const ProtocolFamily& family) {
  switch (family.kind()) {
    case FamilyKind::BB84_4: return {Basis::Z, Basis::X};
    case FamilyKind::BB84_6: return {Basis::Z, Basis::X, Basis::Y};
    case FamilyKind::B92: break;
  }
  throw invalid_input("tradeoff analysis is defined for the BB84 families only");
}

/// Assembles the tradeoff point of an already filtered attack. `basis_weights`
/// (one per sifted basis) defaults to equal weights.
inline TradeoffPoint tradeoff_point(const FilteredAttack& fa, const ProtocolFamily& family,
                                    std::span<const double> basis_weights = {}) {
  const auto bases = sifted_bases(family);
  std::vector<double> w(bases.size(), 1.0 / static_cast<double>(bases.size()));
  if (!basis_weights.empty()) {
    if (basis_weights.size() != bases.size()) throw invalid_input("tradeoff_point: one weight per basis");
    double total = 0.0;
    for (double v : basis_weights) {
      if (!(v >= 0.0)) throw invalid_input("tradeoff_point: negative basis weight");
      total += v;
    }
    if (!(total > 0.0)) throw invalid_input("tradeoff_point: weights sum to zero");
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = basis_weights[k] / total;
  }

  TradeoffPoint pt;
  pt.d_avg = 0.0;
  pt.i_holevo = 0.0;
  pt.p_guess = 0.0;
  for (std::size_t k = 0; k < bases.size(); ++k) {
    const double q = qber(fa, bases[k]);
    switch (bases[k]) {
      case Basis::Z: pt.qber_z = q; break;
      case Basis::X: pt.qber_x = q; break;
      case Basis::Y: pt.qber_y = q; break;
    }
    const auto [rho0, rho1] = eve_states(fa, bases[k]);
    pt.d_avg += w[k] * q;
    pt.i_holevo += w[k] * holevo_bound(rho0, rho1, 0.5);
    pt.p_guess += w[k] * helstrom_prob(rho0, rho1, 0.5);
  }
  pt.x = fa.x;
  return pt;
}

/// Checks feasibility for `family`, filters, and assembles the tradeoff point.
inline TradeoffPoint tradeoff_point(const ProbeKets& pk, const ProtocolFamily& family,
                                    std::span<const double> basis_weights = {},
                                    double tol = kFeasibilityTol) {
  const auto report = check_feasibility(pk, family);
  if (!report.ok(tol)) throw infeasible_attack("tradeoff_point: attack is infeasible: " + report.describe());
  return tradeoff_point(filter_no_count(pk, tol), family, basis_weights);
}

}  // namespace lossqkd
