// Signal states, protocol families and the receiver's outcome space.
#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lossqkd/qmath.hpp"

namespace lossqkd {

enum class StateLabel { Z0, Z1, Xp, Xm, YL, YR, B92a, B92b };

enum class Basis { Z, X, Y };

enum class FamilyKind { BB84_4, BB84_6, B92 };

/// Receiver outcome; index order (Bit0, Bit1, NoCount) is the fixed H_B order.
enum class BobOutcome { Bit0 = 0, Bit1 = 1, NoCount = 2 };

inline constexpr std::size_t kReceiverDim = 3;
inline constexpr std::size_t kNoCountIndex = 2;

inline std::string_view to_string(StateLabel l) {
  switch (l) {
    case StateLabel::Z0: return "Z0";
    case StateLabel::Z1: return "Z1";
    case StateLabel::Xp: return "Xp";
    case StateLabel::Xm: return "Xm";
    case StateLabel::YL: return "YL";
    case StateLabel::YR: return "YR";
    case StateLabel::B92a: return "B92a";
    case StateLabel::B92b: return "B92b";
  }
  return "?";
}

inline StateLabel state_label_from_string(std::string_view s) {
  for (auto l : {StateLabel::Z0, StateLabel::Z1, StateLabel::Xp, StateLabel::Xm, StateLabel::YL,
                 StateLabel::YR, StateLabel::B92a, StateLabel::B92b})
    if (to_string(l) == s) return l;
  throw invalid_input("unknown state label: " + std::string(s));
}

inline std::string_view to_string(Basis b) {
  switch (b) {
    case Basis::Z: return "Z";
    case Basis::X: return "X";
    case Basis::Y: return "Y";
  }
  return "?";
}

inline std::string_view to_string(BobOutcome o) {
  switch (o) {
    case BobOutcome::Bit0: return "0";
    case BobOutcome::Bit1: return "1";
    case BobOutcome::NoCount: return "nc";
  }
  return "?";
}

inline std::string_view to_string(FamilyKind k) {
  switch (k) {
    case FamilyKind::BB84_4: return "bb84-4";
    case FamilyKind::BB84_6: return "bb84-6";
    case FamilyKind::B92: return "b92";
  }
  return "?";
}

inline FamilyKind family_kind_from_string(std::string_view s) {
  for (auto k : {FamilyKind::BB84_4, FamilyKind::BB84_6, FamilyKind::B92})
    if (to_string(k) == s) return k;
  throw invalid_input("unknown protocol family: " + std::string(s));
}

/// Normalized qubit state a|0> + b|1>.
class SignalState {
public:
  SignalState(StateLabel label, cplx a, cplx b, double tol = 1e-12) : label_(label), a_(a), b_(b) {
    if (std::abs(std::norm(a) + std::norm(b) - 1.0) > tol)
      throw invalid_input("SignalState: amplitudes are not normalized");
  }

  static SignalState standard(StateLabel label) {
    constexpr double r = std::numbers::sqrt2 / 2.0;
    switch (label) {
      case StateLabel::Z0: return {label, 1.0, 0.0};
      case StateLabel::Z1: return {label, 0.0, 1.0};
      case StateLabel::Xp: return {label, r, r};
      case StateLabel::Xm: return {label, r, -r};
      case StateLabel::YL: return {label, r, cplx{0.0, r}};
      case StateLabel::YR: return {label, r, cplx{0.0, -r}};
      default: throw invalid_input("no standard amplitudes for a B92 placeholder label");
    }
  }

  StateLabel label() const noexcept { return label_; }
  cplx a() const noexcept { return a_; }
  cplx b() const noexcept { return b_; }
  ComplexVec ket() const { return ComplexVec{a_, b_}; }
  /// Embedding into the receiver space (Bit0, Bit1, NoCount).
  ComplexVec receiver_ket() const { return ComplexVec{a_, b_, 0.0}; }

  /// State orthogonal to this one, with the same label.
  SignalState orthogonal() const { return {label_, -std::conj(b_), std::conj(a_)}; }

private:
  StateLabel label_;
  cplx a_;
  cplx b_;
};

inline cplx overlap(const SignalState& x, const SignalState& y) {
  return inner_product(x.ket(), y.ket());
}

/// A measurement basis: element 0 encodes bit 0, element 1 encodes bit 1.
struct BasisPair {
  Basis name;
  SignalState bit0;
  SignalState bit1;
  const SignalState& element(int bit) const { return bit == 0 ? bit0 : bit1; }
};

inline BasisPair standard_basis(Basis b) {
  switch (b) {
    case Basis::Z:
      return {b, SignalState::standard(StateLabel::Z0), SignalState::standard(StateLabel::Z1)};
    case Basis::X:
      return {b, SignalState::standard(StateLabel::Xp), SignalState::standard(StateLabel::Xm)};
    case Basis::Y:
      return {b, SignalState::standard(StateLabel::YL), SignalState::standard(StateLabel::YR)};
  }
  throw invalid_input("unknown basis");
}

class ProtocolFamily {
public:
  static ProtocolFamily bb84_4() {
    return ProtocolFamily(FamilyKind::BB84_4, {standard_basis(Basis::Z), standard_basis(Basis::X)});
  }
  static ProtocolFamily bb84_6() {
    return ProtocolFamily(FamilyKind::BB84_6, {standard_basis(Basis::Z), standard_basis(Basis::X),
                                               standard_basis(Basis::Y)});
  }
  /// B92 with signal states `bit0` and `bit1`. Bob measures in {bit0, bit0-perp}
  /// (reported as basis Z) or {bit1, bit1-perp} (reported as basis X).
  static ProtocolFamily b92(const SignalState& bit0 = SignalState::standard(StateLabel::Z0),
                            const SignalState& bit1 = SignalState::standard(StateLabel::Xp)) {
    const double c = std::abs(overlap(bit0, bit1));
    if (!(c > 1e-12 && c < 1.0 - 1e-12))
      throw invalid_input("B92 signal states must be nonorthogonal and distinct");
    ProtocolFamily f(FamilyKind::B92, {BasisPair{Basis::Z, bit0, bit0.orthogonal()},
                                       BasisPair{Basis::X, bit1, bit1.orthogonal()}});
    f.signals_ = {bit0, bit1};
    return f;
  }
  static ProtocolFamily from_kind(FamilyKind k) {
    switch (k) {
      case FamilyKind::BB84_4: return bb84_4();
      case FamilyKind::BB84_6: return bb84_6();
      case FamilyKind::B92: return b92();
    }
    throw invalid_input("unknown family kind");
  }

  FamilyKind kind() const noexcept { return kind_; }
  const std::vector<BasisPair>& bases() const noexcept { return bases_; }
  const std::vector<SignalState>& signals() const noexcept { return signals_; }

  /// Alice's basis index and key bit for signal `index`.
  int basis_of_signal(std::size_t index) const {
    return kind_ == FamilyKind::B92 ? -1 : static_cast<int>(index / 2);
  }
  int bit_of_signal(std::size_t index) const { return static_cast<int>(index % 2); }

private:
  ProtocolFamily(FamilyKind kind, std::vector<BasisPair> bases) : kind_(kind), bases_(std::move(bases)) {
    for (const auto& bp : bases_) {
      signals_.push_back(bp.bit0);
      signals_.push_back(bp.bit1);
    }
  }

  FamilyKind kind_;
  std::vector<BasisPair> bases_;
  std::vector<SignalState> signals_;
};

/// Signal set in canonical order: Z0, Z1, Xp, Xm (, YL, YR); B92 gives its pair.
inline std::vector<SignalState> signal_states(const ProtocolFamily& family) { return family.signals(); }

/// Bloch vector (x, y, z) of a normalized state.
inline std::array<double, 3> bloch_vector(const SignalState& s) {
  const cplx ab = std::conj(s.a()) * s.b();
  return {2.0 * ab.real(), 2.0 * ab.imag(), std::norm(s.a()) - std::norm(s.b())};
}

}  // namespace lossqkd
