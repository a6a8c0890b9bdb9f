#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "lossqkd/analysis.hpp"
#include "lossqkd/montecarlo.hpp"
#include "support.hpp"

using namespace lossqkd;

namespace {

SimConfig base_config(std::uint64_t rounds, double eta, std::uint64_t seed) {
  SimConfig c;
  c.n_rounds = rounds;
  c.eta = eta;
  c.seed = seed;
  return c;
}

bool same_report(const SimReport& a, const SimReport& b) {
  if (a.states.size() != b.states.size() || a.bases.size() != b.bases.size()) return false;
  for (std::size_t i = 0; i < a.states.size(); ++i)
    if (a.states[i].sent != b.states[i].sent || a.states[i].detected != b.states[i].detected) return false;
  for (std::size_t i = 0; i < a.bases.size(); ++i)
    if (a.bases[i].sifted != b.bases[i].sifted || a.bases[i].errors != b.bases[i].errors) return false;
  return a.detected == b.detected && a.qber_hat == b.qber_hat && a.eve_correct == b.eve_correct;
}

}  // namespace

TEST(Simulation, NoEavesdropperNoErrors) {
  const SimReport r = run_protocol(base_config(20000, 0.5, 1));
  EXPECT_EQ(r.error_count, 0u);
  EXPECT_NEAR(r.detected_fraction, 0.5, 3.0 * std::sqrt(0.25 / 20000));
  EXPECT_NEAR(static_cast<double>(r.sifted_count) / r.detected, 0.5, 0.02);
  EXPECT_FALSE(r.eve_accuracy.has_value());
}

TEST(Simulation, Reproducible) {
  SimConfig c = base_config(5000, 0.5, 2);
  c.attack = imaginary_deficit_attack(0.5, 0.3);
  EXPECT_TRUE(same_report(run_protocol(c), run_protocol(c)));
  SimConfig d = c;
  d.seed = 3;
  EXPECT_FALSE(same_report(run_protocol(c), run_protocol(d)));
}

TEST(Simulation, RoundSinkSeesEveryRound) {
  std::uint64_t n = 0, sifted = 0;
  const SimReport r = run_protocol(base_config(1000, 0.7, 4), [&](const RoundRecord& rec) {
    EXPECT_EQ(rec.round, n);
    ++n;
    sifted += rec.sifted;
  });
  EXPECT_EQ(n, 1000u);
  EXPECT_EQ(sifted, r.sifted_count);
}

TEST(Simulation, ValidatesConfig) {
  EXPECT_THROW(run_protocol(base_config(0, 0.5, 0)), invalid_input);
  EXPECT_THROW(run_protocol(base_config(10, 1.5, 0)), invalid_input);
  SimConfig c = base_config(10, 0.5, 0);
  c.family = ProtocolFamily::b92();
  c.attack = passive_loss_attack(0.5);
  EXPECT_THROW(run_protocol(c), invalid_input);
}

TEST(Simulation, DetectorEfficiencyScalesDetections) {
  SimConfig c = base_config(40000, 0.8, 5);
  c.p_det = 0.5;
  const SimReport r = run_protocol(c);
  EXPECT_NEAR(r.detected_fraction, 0.4, 3.0 * std::sqrt(0.24 / 40000));
}

TEST(Simulation, FeasibleAttackKeepsThroughputUniform) {
  RandomStream rng(51, 0);
  for (int k = 0; k < 4; ++k) {
    SimConfig c = base_config(40000, 0.4, 60 + static_cast<std::uint64_t>(k));
    c.family = k % 2 ? ProtocolFamily::bb84_6() : ProtocolFamily::bb84_4();
    c.attack = lossqkd::testing::sample_feasible_attack(0.4, 4, k % 2 == 1, rng);
    const SimReport r = run_protocol(c);
    for (const auto& s : r.states) EXPECT_NEAR(s.eta_hat, 0.4, 3.5 * std::sqrt(0.24 / s.sent)) << s.label;
    EXPECT_TRUE(uniformity_check(r, 3.5).uniform);
  }
}

TEST(Simulation, AnalyticQberCalibration) {
  // |qber_hat - qber| <= 3 sigma in at least 99% of seeds (at most one miss in 100).
  const ProbeKets pk = imaginary_deficit_attack(0.5, 0.3);
  const double q = qber(filter_no_count(pk), Basis::Z);
  int misses = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SimConfig c = base_config(4000, 0.5, 1000 + seed);
    c.attack = pk;
    const SimReport r = run_protocol(c);
    const auto& z = r.bases[0];
    const double sigma = std::sqrt(q * (1 - q) / static_cast<double>(z.sifted));
    if (std::abs(z.qber_hat - q) > 3.0 * sigma) ++misses;
  }
  EXPECT_LE(misses, 1);
}

TEST(Simulation, UsdBelowThresholdHasNoErrors) {
  const auto fam = ProtocolFamily::b92();
  SimConfig c = base_config(20000, 0.25, 7);
  c.family = fam;
  c.attack = usd_intercept_resend(fam.signals()[0], fam.signals()[1], 0.25).attack;
  c.line_replacement = true;
  const SimReport r = run_protocol(c);
  EXPECT_EQ(r.error_count, 0u);
  ASSERT_TRUE(r.eve_accuracy.has_value());
  EXPECT_EQ(*r.eve_accuracy, 1.0);
  EXPECT_NEAR(r.detected_fraction, 0.25, 3.0 * std::sqrt(0.25 * 0.75 / 20000));
}

TEST(Simulation, UsdWithoutLineReplacementLosesTwice) {
  const auto fam = ProtocolFamily::b92();
  SimConfig c = base_config(20000, 0.25, 8);
  c.family = fam;
  c.attack = usd_intercept_resend(fam.signals()[0], fam.signals()[1], 0.25).attack;
  const SimReport r = run_protocol(c);
  EXPECT_NEAR(r.detected_fraction, 0.0625, 3.0 * std::sqrt(0.0625 * 0.9375 / 20000));
}

TEST(Simulation, B92WithoutEavesdropper) {
  // Conclusive fraction of detected rounds is (1 - c^2)/2 for the default pair.
  SimConfig c = base_config(40000, 1.0, 9);
  c.family = ProtocolFamily::b92();
  const SimReport r = run_protocol(c);
  EXPECT_EQ(r.error_count, 0u);
  EXPECT_NEAR(static_cast<double>(r.sifted_count) / r.detected, 0.25, 3.0 * std::sqrt(0.25 * 0.75 / 40000));
}

TEST(Uniformity, FlagsUnequalThroughput) {
  SimReport r;
  r.states = {{"Z0", 10000, 5000, 0.5, 0.005}, {"Z1", 10000, 5000, 0.5, 0.005}, {"Xp", 10000, 4000, 0.4, 0.005}};
  const UniformityResult u = uniformity_check(r);
  EXPECT_FALSE(u.uniform);
  EXPECT_GT(u.max_abs_z, 3.0);
  r.states = {{"Z0", 0, 0, 0.0, 0.0}};
  EXPECT_THROW(uniformity_check(r), invalid_input);
}
