// Eavesdropper strategies.
//
// Identical individual attacks are described by the six unnormalized probe
// kets phi[i][b]: the probe state that multiplies receiver outcome |i> when
// Alice's input is |b>. Measure-and-resend strategies (PrsAttack) are a
// POVM on the signal plus a per-outcome resend/block policy.
#pragma once

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "lossqkd/qmath.hpp"
#include "lossqkd/random.hpp"
#include "lossqkd/states.hpp"

namespace lossqkd {

/// Residual tolerance under which an attack counts as feasible.
inline constexpr double kFeasibilityTol = 1e-8;
/// Default tolerance for the isometry check.
inline constexpr double kIsometryTol = 1e-10;

inline constexpr std::size_t kMinProbeDim = 2;
inline constexpr std::size_t kMaxProbeDim = 8;

/// Thrown when an operation requires a feasible attack and gets one that is not.
class infeasible_attack : public invalid_input {
public:
  using invalid_input::invalid_input;
};

// ---------------------------------------------------------------------------
// Probe kets

class ProbeKets {
public:
  /// All six kets zero.
  ProbeKets(double eta, std::size_t d_e) : eta_(eta), d_e_(d_e) {
    validate_header();
    for (auto& row : phi_)
      for (auto& k : row) k = ComplexVec(d_e);
  }

  /// kets[i][b] for i in (Bit0, Bit1, NoCount), b in {0, 1}.
  ProbeKets(double eta, std::size_t d_e, std::array<std::array<ComplexVec, 2>, 3> kets)
      : eta_(eta), d_e_(d_e), phi_(std::move(kets)) {
    validate_header();
    for (const auto& row : phi_)
      for (const auto& k : row)
        if (k.dim() != d_e_) throw invalid_input("ProbeKets: every ket must have dimension d_e");
  }

  double eta() const noexcept { return eta_; }
  std::size_t d_e() const noexcept { return d_e_; }

  const ComplexVec& phi(BobOutcome i, int b) const { return phi_.at(index(i)).at(bit(b)); }
  ComplexVec& phi(BobOutcome i, int b) { return phi_.at(index(i)).at(bit(b)); }
  const ComplexVec& no_count(int b) const { return phi(BobOutcome::NoCount, b); }

  /// Probe ket multiplying receiver outcome i for input a|0> + b|1>.
  ComplexVec image(BobOutcome i, cplx a, cplx b) const { return a * phi(i, 0) + b * phi(i, 1); }

private:
  void validate_header() const {
    if (!(eta_ >= 0.0 && eta_ <= 1.0)) throw invalid_input("ProbeKets: eta must lie in [0,1]");
    if (d_e_ < kMinProbeDim || d_e_ > kMaxProbeDim)
      throw invalid_input("ProbeKets: probe dimension must lie in [2,8]");
  }
  static std::size_t index(BobOutcome i) { return static_cast<std::size_t>(i); }
  static std::size_t bit(int b) {
    if (b != 0 && b != 1) throw invalid_input("ProbeKets: input bit must be 0 or 1");
    return static_cast<std::size_t>(b);
  }

  double eta_;
  std::size_t d_e_;
  std::array<std::array<ComplexVec, 2>, 3> phi_;
};

// ---------------------------------------------------------------------------
// Constraint residuals

struct IsometryResiduals {
  std::array<double, 2> r_norm{};  ///< |sum_i ||phi_i^b||^2 - 1|
  double r_ip = 0.0;               ///< |sum_i <phi_i^0|phi_i^1>|

  double max() const noexcept { return std::max({r_norm[0], r_norm[1], r_ip}); }
  bool ok(double tol = kIsometryTol) const noexcept { return max() <= tol; }
};

struct ThroughputResiduals {
  std::array<double, 2> norm{};   ///< |‖phi_nc^b‖^2 - (1 - eta)|
  double re_ip = 0.0;             ///< |Re <phi_nc^0|phi_nc^1>|
  std::optional<double> im_ip;    ///< |Im <phi_nc^0|phi_nc^1>|, six-state only

  double max() const noexcept {
    return std::max({norm[0], norm[1], re_ip, im_ip.value_or(0.0)});
  }
  bool ok(double tol = kFeasibilityTol) const noexcept { return max() <= tol; }
};

inline IsometryResiduals check_isometry(const ProbeKets& pk) {
  IsometryResiduals r;
  cplx ip{0.0, 0.0};
  for (auto i : {BobOutcome::Bit0, BobOutcome::Bit1, BobOutcome::NoCount}) {
    ip += inner_product(pk.phi(i, 0), pk.phi(i, 1));
  }
  for (int b = 0; b < 2; ++b) {
    double n = 0.0;
    for (auto i : {BobOutcome::Bit0, BobOutcome::Bit1, BobOutcome::NoCount}) n += pk.phi(i, b).norm_squared();
    r.r_norm[static_cast<std::size_t>(b)] = std::abs(n - 1.0);
  }
  r.r_ip = std::abs(ip);
  return r;
}

/// Equal signal throughput for every state of a BB84 family.
inline ThroughputResiduals check_equal_throughput(const ProbeKets& pk, const ProtocolFamily& family) {
  if (family.kind() == FamilyKind::B92)
    throw invalid_input("check_equal_throughput: defined for the BB84 families only");
  ThroughputResiduals r;
  for (int b = 0; b < 2; ++b)
    r.norm[static_cast<std::size_t>(b)] = std::abs(pk.no_count(b).norm_squared() - (1.0 - pk.eta()));
  const cplx ip = inner_product(pk.no_count(0), pk.no_count(1));
  r.re_ip = std::abs(ip.real());
  if (family.kind() == FamilyKind::BB84_6) r.im_ip = std::abs(ip.imag());
  return r;
}

struct FeasibilityReport {
  IsometryResiduals isometry;
  ThroughputResiduals throughput;

  double max() const noexcept { return std::max(isometry.max(), throughput.max()); }
  bool ok(double tol = kFeasibilityTol) const noexcept { return max() <= tol; }
  std::string describe() const {
    std::ostringstream os;
    os << "norm0=" << isometry.r_norm[0] << " norm1=" << isometry.r_norm[1] << " ip=" << isometry.r_ip
       << " nc_norm0=" << throughput.norm[0] << " nc_norm1=" << throughput.norm[1]
       << " nc_re_ip=" << throughput.re_ip;
    if (throughput.im_ip) os << " nc_im_ip=" << *throughput.im_ip;
    return os.str();
  }
};

inline FeasibilityReport check_feasibility(const ProbeKets& pk, const ProtocolFamily& family) {
  return {check_isometry(pk), check_equal_throughput(pk, family)};
}

/// 1 - ||a phi_nc^0 + b phi_nc^1||^2 for psi = a|0> + b|1>.
inline double throughput_of(const ProbeKets& pk, const SignalState& psi) {
  return 1.0 - pk.image(BobOutcome::NoCount, psi.a(), psi.b()).norm_squared();
}

// ---------------------------------------------------------------------------
// No-count filtering

/// Post-selected probe kets phi/sqrt(eta) for the in-signal-space outcomes,
/// plus the no-count deficit <phi^_nc^0|phi^_nc^1> = iX.
struct FilteredAttack {
  double eta = 1.0;
  std::array<std::array<ComplexVec, 2>, 2> hatted;  ///< hatted[i][b], i in {Bit0, Bit1}
  cplx deficit{0.0, 0.0};
  double x = 0.0;
  /// Deficit vanishes, so the Y basis is consistent with equal throughput.
  bool six_state_consistent = false;

  const ComplexVec& ket(int i, int b) const {
    return hatted.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(b));
  }
  /// Post-selected probe ket for receiver outcome i and input a|0> + b|1>.
  ComplexVec image(int i, cplx a, cplx b) const { return a * ket(i, 0) + b * ket(i, 1); }
};

/// Discards no-count events and renormalizes by the throughput. Requires a
/// four-state-feasible attack (isometry, equal norms, Re deficit = 0).
inline FilteredAttack filter_no_count(const ProbeKets& pk, double tol = kFeasibilityTol) {
  if (pk.eta() <= 0.0) throw invalid_input("filter_no_count: zero throughput leaves nothing to filter");
  const auto report = check_feasibility(pk, ProtocolFamily::bb84_4());
  if (!report.ok(tol)) throw infeasible_attack("filter_no_count: attack is infeasible: " + report.describe());

  FilteredAttack fa;
  fa.eta = pk.eta();
  const double scale = 1.0 / std::sqrt(pk.eta());
  for (int i = 0; i < 2; ++i)
    for (int b = 0; b < 2; ++b)
      fa.hatted[static_cast<std::size_t>(i)][static_cast<std::size_t>(b)] =
          scale * pk.phi(static_cast<BobOutcome>(i), b);
  fa.deficit = inner_product(pk.no_count(0), pk.no_count(1)) / pk.eta();
  fa.x = fa.deficit.imag();

  cplx in_plane = inner_product(fa.ket(0, 0), fa.ket(0, 1)) + inner_product(fa.ket(1, 0), fa.ket(1, 1));
  if (std::abs(in_plane + fa.deficit) > tol / pk.eta())
    throw infeasible_attack("filter_no_count: post-selected inner products do not cancel the deficit");
  fa.six_state_consistent = std::abs(fa.deficit) <= tol / pk.eta();
  return fa;
}

// ---------------------------------------------------------------------------
// Reference constructions

/// Loss realized by a which-path environment: the signal either passes
/// untouched or the probe records its loss in orthogonal kets.
inline ProbeKets passive_loss_attack(double eta, std::size_t d_e = 6) {
  if (d_e < 3) throw invalid_input("passive_loss_attack: needs d_e >= 3");
  ProbeKets pk(eta, d_e);
  const double s = std::sqrt(eta);
  const double l = std::sqrt(1.0 - eta);
  pk.phi(BobOutcome::Bit0, 0) = s * ComplexVec::basis(d_e, 0);
  pk.phi(BobOutcome::Bit1, 1) = s * ComplexVec::basis(d_e, 0);
  pk.phi(BobOutcome::NoCount, 0) = l * ComplexVec::basis(d_e, 1);
  pk.phi(BobOutcome::NoCount, 1) = l * ComplexVec::basis(d_e, 2);
  return pk;
}

/// Four-state-feasible attack with deficit iX. The no-count kets carry the
/// inner product i*eta*X and the in-plane kets cancel it.
/// Requires |eta X| <= 1 - eta and |X| <= 1.
inline ProbeKets imaginary_deficit_attack(double eta, double x, std::size_t d_e = 4) {
  if (d_e < 4) throw invalid_input("imaginary_deficit_attack: needs d_e >= 4");
  if (!(eta > 0.0 && eta < 1.0)) throw invalid_input("imaginary_deficit_attack: eta must lie in (0,1)");
  const double loss = 1.0 - eta;
  const double cross = eta * x;
  if (std::abs(cross) > loss || std::abs(x) > 1.0)
    throw invalid_input("imaginary_deficit_attack: |X| too large for this throughput");
  const auto e = [d_e](std::size_t k) { return ComplexVec::basis(d_e, k); };
  ProbeKets pk(eta, d_e);
  pk.phi(BobOutcome::NoCount, 0) = std::sqrt(loss) * e(2);
  pk.phi(BobOutcome::NoCount, 1) =
      cplx{0.0, cross / std::sqrt(loss)} * e(2) + std::sqrt(loss - cross * cross / loss) * e(3);
  pk.phi(BobOutcome::Bit0, 0) = std::sqrt(eta) * e(0);
  pk.phi(BobOutcome::Bit0, 1) = cplx{0.0, -cross / std::sqrt(eta)} * e(0);
  pk.phi(BobOutcome::Bit1, 1) = std::sqrt(eta - eta * x * x) * e(1);
  return pk;
}

// ---------------------------------------------------------------------------
// Probabilistic re-send attacks

struct Resend {
  DensityOp state;
  double probability = 1.0;  ///< resend with this probability, otherwise block
};
struct Block {};
using PrsAction = std::variant<Resend, Block>;

struct PovmElement {
  std::string tag;
  Matrix op;
  std::optional<int> guess;  ///< Eve's inferred key bit for this outcome, if any
};

class PrsAttack {
public:
  PrsAttack(std::vector<PovmElement> measurement, std::map<std::string, PrsAction> policy,
            double tol = 1e-10)
      : measurement_(std::move(measurement)), policy_(std::move(policy)) {
    if (measurement_.empty()) throw invalid_input("PrsAttack: empty measurement");
    const std::size_t dim = measurement_.front().op.dim();
    Matrix sum(dim);
    for (const auto& el : measurement_) {
      if (el.op.dim() != dim) throw invalid_input("PrsAttack: POVM elements differ in dimension");
      if (el.op.hermiticity_defect() > tol) throw invalid_input("PrsAttack: POVM element not Hermitian");
      if (eigvalsh(el.op).front() < -tol) throw invalid_input("PrsAttack: POVM element not PSD");
      sum += el.op;
      auto it = policy_.find(el.tag);
      if (it == policy_.end()) throw invalid_input("PrsAttack: no policy for outcome " + el.tag);
      if (const auto* r = std::get_if<Resend>(&it->second)) {
        if (r->state.dim() != dim) throw invalid_input("PrsAttack: resend state has wrong dimension");
        if (!(r->probability >= 0.0 && r->probability <= 1.0))
          throw invalid_input("PrsAttack: resend probability outside [0,1]");
      }
      actions_.push_back(&it->second);
    }
    if ((sum - Matrix::identity(dim)).max_abs() > tol)
      throw invalid_input("PrsAttack: POVM elements do not sum to the identity");
  }

  PrsAttack(const PrsAttack& o) : PrsAttack(o.measurement_, o.policy_) {}
  PrsAttack& operator=(const PrsAttack& o) {
    if (this != &o) *this = PrsAttack(o);
    return *this;
  }
  PrsAttack(PrsAttack&&) noexcept = default;
  PrsAttack& operator=(PrsAttack&&) noexcept = default;

  const std::vector<PovmElement>& measurement() const noexcept { return measurement_; }
  const std::map<std::string, PrsAction>& policy() const noexcept { return policy_; }
  const PrsAction& action(std::size_t outcome) const { return *actions_.at(outcome); }

  /// <psi|M_k|psi> for every element.
  std::vector<double> outcome_probabilities(const SignalState& psi) const {
    std::vector<double> p;
    p.reserve(measurement_.size());
    const auto ket = psi.ket();
    for (const auto& el : measurement_) p.push_back(std::max(0.0, el.op.expectation(ket).real()));
    return p;
  }

private:
  std::vector<PovmElement> measurement_;
  std::map<std::string, PrsAction> policy_;
  std::vector<const PrsAction*> actions_;  // parallel to measurement_; points into policy_
};

struct PrsResult {
  std::size_t outcome = 0;             ///< index into the measurement
  const DensityOp* delivered = nullptr;  ///< nullptr: Bob receives the no-count state
};

inline PrsResult apply_prs(const PrsAttack& attack, const SignalState& psi, RandomStream& rng) {
  const auto probs = attack.outcome_probabilities(psi);
  double total = 0.0;
  for (double p : probs) total += p;
  double u = rng.uniform() * total;
  std::size_t k = 0;
  for (; k + 1 < probs.size(); ++k) {
    if (u < probs[k]) break;
    u -= probs[k];
  }
  // Never land on a zero-probability element through rounding.
  while (probs[k] <= 0.0 && k > 0) --k;

  PrsResult res;
  res.outcome = k;
  if (const auto* r = std::get_if<Resend>(&attack.action(k))) {
    if (r->probability >= 1.0 || rng.bernoulli(r->probability)) res.delivered = &r->state;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Unambiguous state discrimination intercept-resend

/// What Eve does with inconclusive results when the line transmits more than
/// her conclusive rate.
enum class UsdFill {
  Block,               ///< deliver fewer signals than the line would
  GuessOnInconclusive  ///< resend the equal mixture of the pair to make up throughput
};

struct UsdReport {
  double overlap = 0.0;                ///< c = |<psi0|psi1>|
  double threshold = 0.0;              ///< eta* = 1 - c
  double conclusive_probability = 0.0; ///< 1 - c for either input
  double resend_probability = 1.0;     ///< applied to conclusive outcomes
  double fill_probability = 0.0;       ///< applied to inconclusive outcomes
  double delivered_fraction = 0.0;     ///< expected fraction of sent signals reaching Bob
  double shortfall = 0.0;              ///< eta - delivered fraction (>= 0)
  double known_fraction = 0.0;         ///< fraction of delivered signals Eve identified
  bool full_break = false;             ///< eta <= eta*: throughput matched with zero error
};

struct UsdAttack {
  PrsAttack attack;
  UsdReport report;
};

inline constexpr const char* kUsdConclusive0 = "conclusive-0";
inline constexpr const char* kUsdConclusive1 = "conclusive-1";
inline constexpr const char* kUsdInconclusive = "inconclusive";

/// Threshold bookkeeping for a USD intercept-resend on a pair with overlap c.
inline UsdReport usd_report(double c, double eta, UsdFill fill = UsdFill::Block) {
  if (!(c >= 0.0 && c < 1.0)) throw invalid_input("usd: overlap must lie in [0,1)");
  if (!(eta >= 0.0 && eta <= 1.0)) throw invalid_input("usd: transmittance must lie in [0,1]");
  UsdReport r;
  r.overlap = c;
  r.threshold = 1.0 - c;
  r.conclusive_probability = 1.0 - c;
  r.full_break = eta <= r.threshold;
  if (r.full_break) {
    r.resend_probability = r.conclusive_probability > 0.0 ? eta / r.conclusive_probability : 0.0;
    r.delivered_fraction = eta;
    r.known_fraction = 1.0;
  } else {
    r.resend_probability = 1.0;
    if (fill == UsdFill::GuessOnInconclusive && c > 0.0) {
      r.fill_probability = std::min(1.0, (eta - r.conclusive_probability) / c);
      r.delivered_fraction = r.conclusive_probability + c * r.fill_probability;
    } else {
      r.delivered_fraction = r.conclusive_probability;
    }
    r.known_fraction = r.delivered_fraction > 0.0 ? r.conclusive_probability / r.delivered_fraction : 0.0;
  }
  r.shortfall = std::max(0.0, eta - r.delivered_fraction);
  return r;
}

/// Optimal equal-prior USD measurement on {psi0, psi1}: conclusive results are
/// resent as the identified state, inconclusive ones are blocked (or filled
/// with the pair mixture), and conclusive resends are thinned so the
/// delivered fraction equals eta when eta <= 1 - c.
inline UsdAttack usd_intercept_resend(const SignalState& psi0, const SignalState& psi1, double eta,
                                      UsdFill fill = UsdFill::Block) {
  const double c = std::abs(overlap(psi0, psi1));
  if (c >= 1.0 - 1e-12) throw invalid_input("usd: identical states cannot be discriminated");
  const UsdReport report = usd_report(c, eta, fill);

  const ComplexVec perp0 = psi0.orthogonal().ket();
  const ComplexVec perp1 = psi1.orthogonal().ket();
  const double w = 1.0 / (1.0 + c);
  Matrix m0 = w * Matrix::projector(perp1);  // excludes psi1, so the input was psi0
  Matrix m1 = w * Matrix::projector(perp0);
  Matrix m_fail = Matrix::identity(2) - m0 - m1;

  std::vector<PovmElement> povm{{kUsdConclusive0, std::move(m0), 0},
                                {kUsdConclusive1, std::move(m1), 1},
                                {kUsdInconclusive, std::move(m_fail), std::nullopt}};
  std::map<std::string, PrsAction> policy;
  policy.emplace(kUsdConclusive0, Resend{DensityOp::pure(psi0.ket()), report.resend_probability});
  policy.emplace(kUsdConclusive1, Resend{DensityOp::pure(psi1.ket()), report.resend_probability});
  if (report.fill_probability > 0.0) {
    const Matrix mix = 0.5 * (Matrix::projector(psi0.ket()) + Matrix::projector(psi1.ket()));
    policy.emplace(kUsdInconclusive, Resend{DensityOp(mix), report.fill_probability});
  } else {
    policy.emplace(kUsdInconclusive, Block{});
  }
  return {PrsAttack(std::move(povm), std::move(policy)), report};
}

}  // namespace lossqkd
