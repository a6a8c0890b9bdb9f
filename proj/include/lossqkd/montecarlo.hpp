// Round-by-round protocol simulation with an optional eavesdropper.
//
// Round r draws everything from RandomStream(seed, r), so a report is a pure
// function of the configuration and rounds can be evaluated in any order.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lossqkd/attack.hpp"
#include "lossqkd/channel.hpp"
#include "lossqkd/random.hpp"
#include "lossqkd/states.hpp"

namespace lossqkd {

struct NoAttack {};
using AttackModel = std::variant<NoAttack, ProbeKets, PrsAttack>;

struct SimConfig {
  ProtocolFamily family = ProtocolFamily::bb84_4();
  std::uint64_t n_rounds = 1;
  double eta = 1.0;
  AttackModel attack = NoAttack{};
  double p_det = 1.0;
  /// PRS deliveries bypass the lossy line when true; otherwise they still
  /// cross it with transmittance eta.
  bool line_replacement = false;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_rounds < 1) throw invalid_input("SimConfig: n_rounds must be at least 1");
    detail::require_probability(eta, "transmittance");
    detail::require_probability(p_det, "detection efficiency");
    if (std::holds_alternative<ProbeKets>(attack) && family.kind() == FamilyKind::B92)
      throw invalid_input("SimConfig: probe-ket attacks are defined for the BB84 families only");
    if (const auto* prs = std::get_if<PrsAttack>(&attack))
      if (prs->measurement().front().op.dim() != 2)
        throw invalid_input("SimConfig: PRS measurement must act on the qubit signal space");
  }
};

struct StateStats {
  std::string label;
  std::uint64_t sent = 0;
  std::uint64_t detected = 0;
  double eta_hat = 0.0;
  double eta_se = 0.0;  ///< binomial standard error of eta_hat
};

struct BasisStats {
  std::string basis;
  std::uint64_t sifted = 0;
  std::uint64_t errors = 0;
  double qber_hat = 0.0;
};

struct SimReport {
  std::string family;
  std::uint64_t n_rounds = 0;
  std::uint64_t seed = 0;
  std::vector<StateStats> states;
  std::vector<BasisStats> bases;  ///< Alice's basis for BB84, Bob's basis for B92
  std::uint64_t detected = 0;
  double detected_fraction = 0.0;
  std::uint64_t sifted_count = 0;
  std::uint64_t error_count = 0;
  double qber_hat = 0.0;
  /// Fraction of sifted bits whose Eve record matches Alice's bit; only
  /// defined for measure-and-resend attacks.
  std::optional<double> eve_accuracy;
  std::uint64_t eve_correct = 0;
};

struct RoundRecord {
  std::uint64_t round = 0;
  std::string_view state;
  int alice_basis = -1;  ///< -1 for B92
  int alice_bit = 0;
  int bob_basis = 0;
  BobOutcome outcome = BobOutcome::NoCount;
  bool sifted = false;
  bool error = false;
  std::string_view eve_tag;
};

using RoundSink = std::function<void(const RoundRecord&)>;

inline constexpr const char* kRoundCsvHeader =
    "round,state,alice_basis,alice_bit,bob_basis,outcome,sifted,error,eve_tag";

namespace detail {

inline BobOutcome sample_outcome(double p0, double p1, double pnc, RandomStream& rng) {
  // Weights at rounding-noise level are exact zeros of the underlying model.
  const double floor = 1e-14 * (p0 + p1 + pnc);
  if (p0 <= floor) p0 = 0.0;
  if (p1 <= floor) p1 = 0.0;
  if (pnc <= floor) pnc = 0.0;
  const double total = p0 + p1 + pnc;
  if (!(total > 0.0)) return BobOutcome::NoCount;
  const double u = rng.uniform() * total;
  if (u < p0) return BobOutcome::Bit0;
  if (p1 > 0.0 && (u < p0 + p1 || pnc == 0.0)) return BobOutcome::Bit1;
  if (pnc == 0.0) return BobOutcome::Bit0;
  return BobOutcome::NoCount;
}

inline double binomial_se(double p, double n) { return n > 0 ? std::sqrt(p * (1.0 - p) / n) : 0.0; }

}  // namespace detail

inline SimReport run_protocol(const SimConfig& cfg, const RoundSink& sink = {}) {
  cfg.validate();
  const ProtocolFamily& fam = cfg.family;
  const auto& signals = fam.signals();
  const auto& bases = fam.bases();
  const bool b92 = fam.kind() == FamilyKind::B92;
  const auto* iia = std::get_if<ProbeKets>(&cfg.attack);
  const auto* prs = std::get_if<PrsAttack>(&cfg.attack);

  std::vector<std::uint64_t> sent(signals.size(), 0);
  std::vector<std::uint64_t> detected(signals.size(), 0);
  std::vector<std::uint64_t> sifted(bases.size(), 0);
  std::vector<std::uint64_t> errors(bases.size(), 0);
  std::uint64_t eve_correct = 0;

  for (std::uint64_t r = 0; r < cfg.n_rounds; ++r) {
    RandomStream rng(cfg.seed, r);
    const std::size_t si = rng.below(signals.size());
    const std::size_t bob_basis = rng.below(bases.size());
    const SignalState& psi = signals[si];
    const BasisPair& meas = bases[bob_basis];
    const int alice_bit = b92 ? static_cast<int>(si) : fam.bit_of_signal(si);
    const int alice_basis = fam.basis_of_signal(si);

    double p0 = 0.0, p1 = 0.0, pnc = 0.0;
    std::string_view eve_tag;
    std::optional<int> eve_guess;
    if (iia) {
      const ComplexVec img0 = iia->image(BobOutcome::Bit0, psi.a(), psi.b());
      const ComplexVec img1 = iia->image(BobOutcome::Bit1, psi.a(), psi.b());
      auto weight = [&](const SignalState& t) {
        return (std::conj(t.a()) * img0 + std::conj(t.b()) * img1).norm_squared();
      };
      p0 = weight(meas.bit0);
      p1 = weight(meas.bit1);
      pnc = iia->image(BobOutcome::NoCount, psi.a(), psi.b()).norm_squared();
    } else if (prs) {
      const PrsResult res = apply_prs(*prs, psi, rng);
      const PovmElement& el = prs->measurement()[res.outcome];
      eve_tag = el.tag;
      eve_guess = el.guess;
      const bool arrives = res.delivered && (cfg.line_replacement || rng.bernoulli(cfg.eta));
      if (arrives) {
        p0 = res.delivered->expectation(meas.bit0.ket());
        p1 = res.delivered->expectation(meas.bit1.ket());
      } else {
        pnc = 1.0;
      }
    } else {
      const TransmissionEvent ev = sample_transmission(psi, cfg.eta, rng);
      if (std::holds_alternative<Delivered>(ev)) {
        p0 = std::norm(overlap(meas.bit0, psi));
        p1 = std::norm(overlap(meas.bit1, psi));
      } else {
        pnc = 1.0;
      }
    }

    BobOutcome outcome = detail::sample_outcome(p0, p1, pnc, rng);
    outcome = detector_thin(outcome, cfg.p_det, rng);

    ++sent[si];
    bool is_sifted = false;
    bool is_error = false;
    std::size_t stat_basis = bob_basis;
    if (outcome != BobOutcome::NoCount) {
      ++detected[si];
      const int bob_bit = static_cast<int>(outcome);
      if (b92) {
        // Finding the partner of one signal state rules that state out.
        if (bob_bit == 1) {
          is_sifted = true;
          const int inferred = bob_basis == 0 ? 1 : 0;
          is_error = inferred != alice_bit;
        }
      } else if (static_cast<int>(bob_basis) == alice_basis) {
        is_sifted = true;
        is_error = bob_bit != alice_bit;
      }
    }
    if (!b92 && alice_basis >= 0) stat_basis = static_cast<std::size_t>(alice_basis);
    if (is_sifted) {
      ++sifted[stat_basis];
      if (is_error) ++errors[stat_basis];
      if (eve_guess && *eve_guess == alice_bit) ++eve_correct;
    }

    if (sink) {
      sink(RoundRecord{r, to_string(psi.label()), alice_basis, alice_bit, static_cast<int>(bob_basis),
                       outcome, is_sifted, is_error, eve_tag});
    }
  }

  SimReport rep;
  rep.family = std::string(to_string(fam.kind()));
  rep.n_rounds = cfg.n_rounds;
  rep.seed = cfg.seed;
  for (std::size_t s = 0; s < signals.size(); ++s) {
    StateStats st;
    st.label = std::string(to_string(signals[s].label()));
    st.sent = sent[s];
    st.detected = detected[s];
    st.eta_hat = sent[s] ? static_cast<double>(detected[s]) / static_cast<double>(sent[s]) : 0.0;
    st.eta_se = detail::binomial_se(st.eta_hat, static_cast<double>(sent[s]));
    rep.detected += detected[s];
    rep.states.push_back(std::move(st));
  }
  for (std::size_t b = 0; b < bases.size(); ++b) {
    BasisStats bs;
    bs.basis = std::string(to_string(bases[b].name));
    bs.sifted = sifted[b];
    bs.errors = errors[b];
    bs.qber_hat = sifted[b] ? static_cast<double>(errors[b]) / static_cast<double>(sifted[b]) : 0.0;
    rep.sifted_count += sifted[b];
    rep.error_count += errors[b];
    rep.bases.push_back(std::move(bs));
  }
  rep.detected_fraction = static_cast<double>(rep.detected) / static_cast<double>(cfg.n_rounds);
  rep.qber_hat = rep.sifted_count ? static_cast<double>(rep.error_count) / static_cast<double>(rep.sifted_count)
                                  : 0.0;
  if (prs) {
    rep.eve_correct = eve_correct;
    rep.eve_accuracy = rep.sifted_count ? static_cast<double>(eve_correct) / static_cast<double>(rep.sifted_count)
                                        : std::numeric_limits<double>::quiet_NaN();
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Throughput uniformity

struct StateZScore {
  std::string label;
  double z = 0.0;
  bool excluded = false;  ///< no signals of this state were sent
};

struct UniformityResult {
  double pooled = 0.0;
  std::vector<StateZScore> scores;
  bool uniform = true;
  double max_abs_z = 0.0;
};

/// z-score of every state's detected fraction against the pooled fraction;
/// uniform iff every |z| <= z_limit.
inline UniformityResult uniformity_check(const SimReport& report, double z_limit = 3.0) {
  UniformityResult res;
  std::uint64_t total_sent = 0;
  std::uint64_t total_detected = 0;
  for (const auto& s : report.states) {
    total_sent += s.sent;
    total_detected += s.detected;
  }
  if (total_sent == 0) throw invalid_input("uniformity_check: nothing was sent");
  res.pooled = static_cast<double>(total_detected) / static_cast<double>(total_sent);
  for (const auto& s : report.states) {
    StateZScore sc{s.label, 0.0, s.sent == 0};
    if (!sc.excluded) {
      const double se = detail::binomial_se(res.pooled, static_cast<double>(s.sent));
      const double diff = s.eta_hat - res.pooled;
      if (se > 0.0) {
        sc.z = diff / se;
      } else if (diff != 0.0) {
        sc.z = diff > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
      }
      res.max_abs_z = std::max(res.max_abs_z, std::abs(sc.z));
      if (std::abs(sc.z) > z_limit) res.uniform = false;
    }
    res.scores.push_back(std::move(sc));
  }
  return res;
}

}  // namespace lossqkd
