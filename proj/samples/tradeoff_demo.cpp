// Walks through the library on a lossy line with eta = 0.5: the passive loss
// attack, an attack with a nonzero no-count deficit, and a short search for
// the strongest attack at a few disturbance levels.

#include <cstdio>

#include "lossqkd/analysis.hpp"
#include "lossqkd/montecarlo.hpp"
#include "lossqkd/search.hpp"

using namespace lossqkd;

int main() {
  const double eta = 0.5;
  const ProtocolFamily four = ProtocolFamily::bb84_4();

  const TradeoffPoint passive = tradeoff_point(passive_loss_attack(eta), four);
  std::printf("passive loss:   qber_z %.4f  qber_x %.4f  holevo %.4f\n", passive.qber_z, passive.qber_x,
              passive.i_holevo);

  const ProbeKets witness = imaginary_deficit_attack(eta, 0.3);
  const TradeoffPoint w = tradeoff_point(witness, four);
  std::printf("deficit X=0.3:  qber_z %.4f  qber_x %.4f  holevo %.4f  X %.2f\n", w.qber_z, w.qber_x, w.i_holevo,
              w.x);
  std::printf("  throughput of YL %.3f, YR %.3f (six-state protocol would notice)\n",
              throughput_of(witness, SignalState::standard(StateLabel::YL)),
              throughput_of(witness, SignalState::standard(StateLabel::YR)));

  SimConfig sim;
  sim.n_rounds = 200000;
  sim.eta = eta;
  sim.attack = witness;
  sim.seed = 1;
  const SimReport r = run_protocol(sim);
  std::printf("  simulated %llu rounds: qber_z %.4f, detected %.4f\n", static_cast<unsigned long long>(r.n_rounds),
              r.bases[0].qber_hat, r.detected_fraction);

  SearchSpec spec;
  spec.eta = eta;
  spec.d_e = 4;
  spec.budget = 4000;
  spec.seed = 1;
  std::printf("\n  D      holevo   p_guess\n");
  for (const auto& row : sweep_tradeoff(spec, {0.0, 0.02, 0.05, 0.1})) {
    std::printf("  %.2f   %.5f  %.5f%s\n", row.qber_cap, row.result.point.i_holevo, row.result.point.p_guess,
                row.result.feasible ? "" : "  (infeasible)");
  }
  return 0;
}
