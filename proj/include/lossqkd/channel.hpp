// Transmission loss and detector inefficiency. The two are distinct: the
// loss map acts on the state in the channel, detector thinning deletes
// already-formed outcomes independently of anything upstream.
#pragma once

#include <variant>

#include "lossqkd/qmath.hpp"
#include "lossqkd/random.hpp"
#include "lossqkd/states.hpp"

namespace lossqkd {

namespace detail {
inline void require_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) throw invalid_input(std::string(what) + " must lie in [0,1]");
}
}  // namespace detail

struct LossChannel {
  double eta = 1.0;

  explicit LossChannel(double transmittance) : eta(transmittance) {
    detail::require_probability(eta, "transmittance");
  }
};

/// Perfect detectors (p_det = 1) unless stated otherwise.
struct DetectorModel {
  double p_det = 1.0;

  DetectorModel() = default;
  explicit DetectorModel(double efficiency) : p_det(efficiency) {
    detail::require_probability(p_det, "detection efficiency");
  }
};

/// rho -> eta rho (+) (1 - eta)|nc><nc|, from the signal space into the receiver space.
inline DensityOp apply_loss_map(const DensityOp& rho, double eta) {
  detail::require_probability(eta, "transmittance");
  if (rho.dim() != 2) throw invalid_input("apply_loss_map: input must be a qubit state");
  Matrix out(kReceiverDim);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) out(i, j) = eta * rho(i, j);
  out(kNoCountIndex, kNoCountIndex) = 1.0 - eta;
  Tolerances tol = rho.tolerances();
  tol.trace = std::max(tol.trace, 4e-16);
  return DensityOp(std::move(out), tol);
}

inline DensityOp apply_loss_map(const DensityOp& rho, const LossChannel& ch) {
  return apply_loss_map(rho, ch.eta);
}

struct Delivered {
  SignalState state;
};
struct Lost {};
using TransmissionEvent = std::variant<Delivered, Lost>;

/// One use of the no-eavesdropper channel: the state arrives with probability eta.
inline TransmissionEvent sample_transmission(const SignalState& state, double eta, RandomStream& rng) {
  detail::require_probability(eta, "transmittance");
  if (rng.bernoulli(eta)) return Delivered{state};
  return Lost{};
}

/// Bit outcomes survive with probability p_det; NoCount passes through.
inline BobOutcome detector_thin(BobOutcome outcome, double p_det, RandomStream& rng) {
  detail::require_probability(p_det, "detection efficiency");
  if (outcome == BobOutcome::NoCount) return outcome;
  return rng.bernoulli(p_det) ? outcome : BobOutcome::NoCount;
}

}  // namespace lossqkd
