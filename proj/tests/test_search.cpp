#include <gtest/gtest.h>

#include <cmath>

#include "lossqkd/search.hpp"
#include "support.hpp"

using namespace lossqkd;

namespace {

SearchSpec small_spec(double cap, XMode mode, std::uint64_t budget = 3000) {
  SearchSpec s;
  s.eta = 0.5;
  s.d_e = 4;
  s.qber_cap = cap;
  s.x_mode = mode;
  s.budget = budget;
  s.restarts = 4;
  s.seed = 9;
  return s;
}

}  // namespace

TEST(GramObjective, MatchesTradeoffPoint) {
  RandomStream rng(61, 0);
  for (int k = 0; k < 60; ++k) {
    const bool six = k % 3 == 0;
    const ProtocolFamily fam = six ? ProtocolFamily::bb84_6() : ProtocolFamily::bb84_4();
    const FilteredAttack fa =
        filter_no_count(lossqkd::testing::sample_feasible_attack(0.3 + 0.5 * rng.uniform(), 2 + k % 7, six, rng));
    const TradeoffPoint p = tradeoff_point(fa, fam);
    const auto bases = sifted_bases(fam);
    EXPECT_NEAR(search_detail::gram_objective(fa, bases, Objective::Holevo), p.i_holevo, 1e-9);
    EXPECT_NEAR(search_detail::gram_objective(fa, bases, Objective::Helstrom), p.p_guess, 1e-9);
    EXPECT_NEAR(search_detail::disturbance(fa, bases), p.d_avg, 1e-12);
  }
}

TEST(Repair, AlwaysProducesFeasibleAttacks) {
  RandomStream rng(62, 0);
  for (int k = 0; k < 200; ++k) {
    const std::size_t d = 2 + static_cast<std::size_t>(k % 7);
    std::array<ComplexVec, 4> cols;
    for (auto& c : cols) c = lossqkd::testing::random_vec(d, rng);
    const double eta = 0.05 + 0.95 * rng.uniform();
    const bool zero = k % 2 == 0;
    const auto rep = search_detail::repair(cols, eta, zero);
    const ProtocolFamily fam = zero ? ProtocolFamily::bb84_6() : ProtocolFamily::bb84_4();
    EXPECT_LE(check_feasibility(rep.kets, fam).max(), 1e-12);
    const FilteredAttack fa = filter_no_count(rep.kets);
    EXPECT_NEAR(fa.x, rep.filtered.x, 1e-12);
    if (zero) {
      EXPECT_LE(std::abs(fa.deficit), 1e-12);
    }
  }
}

TEST(Search, ValidatesSpec) {
  SearchSpec s = small_spec(0.05, XMode::Free);
  s.family = ProtocolFamily::b92();
  EXPECT_THROW(optimize_attack(s), invalid_input);
  s = small_spec(0.6, XMode::Free);
  EXPECT_THROW(optimize_attack(s), invalid_input);
  s = small_spec(0.05, XMode::Free, 0);
  EXPECT_THROW(optimize_attack(s), invalid_input);
  s = small_spec(0.05, XMode::Free);
  s.initial = passive_loss_attack(0.5, 6);
  EXPECT_THROW(optimize_attack(s), invalid_input);
}

TEST(Search, BudgetOfOneStillReturnsAFeasiblePoint) {
  const SearchResult r = optimize_attack(small_spec(0.05, XMode::Free, 1));
  EXPECT_LE(r.evaluations, 2u);
  EXPECT_TRUE(r.feasible);
  EXPECT_LE(r.point.d_avg, 0.05 + 1e-8);
}

TEST(Search, ZeroCapFindsNoInformation) {
  const SearchResult r = optimize_attack(small_spec(0.0, XMode::Zero));
  EXPECT_TRUE(r.feasible);
  EXPECT_LE(r.point.i_holevo, 1e-6);
  EXPECT_LE(r.point.d_avg, 1e-8);
}

TEST(Search, ResultIsFeasibleAndRespectsCap) {
  for (XMode mode : {XMode::Zero, XMode::Free}) {
    const SearchResult r = optimize_attack(small_spec(0.05, mode));
    ASSERT_TRUE(r.feasible);
    EXPECT_TRUE(check_isometry(r.best).ok(1e-8));
    EXPECT_TRUE(check_equal_throughput(r.best, ProtocolFamily::bb84_4()).ok(1e-8));
    EXPECT_LE(r.point.d_avg, 0.05 + 1e-8);
    if (mode == XMode::Zero) {
      EXPECT_LE(std::abs(r.point.x), 1e-8);
    }
    EXPECT_EQ(r.objective, r.point.i_holevo);
  }
}

TEST(Search, ReachesBinaryEntropyOfTheCap) {
  // The best attack at disturbance D leaks h(D); frozen from an independent
  // SLSQP search (0.2863969571 at D = 0.05).
  const SearchResult r = optimize_attack(small_spec(0.05, XMode::Zero, 8000));
  EXPECT_NEAR(r.point.i_holevo, 0.2863969571, 1e-6);
}

TEST(Search, HelstromObjective) {
  // Optimum 1/2 + sqrt(D(1 - D)) at D = 0.05.
  SearchSpec s = small_spec(0.05, XMode::Zero, 8000);
  s.objective = Objective::Helstrom;
  const SearchResult r = optimize_attack(s);
  ASSERT_TRUE(r.feasible);
  EXPECT_NEAR(r.point.p_guess, 0.5 + std::sqrt(0.05 * 0.95), 1e-6);
}

TEST(Search, SixStateResultsHaveNoDeficit) {
  SearchSpec s = small_spec(0.05, XMode::Free);
  s.family = ProtocolFamily::bb84_6();
  const SearchResult r = optimize_attack(s);
  ASSERT_TRUE(r.feasible);
  EXPECT_LE(std::abs(filter_no_count(r.best).deficit), 1e-8);
  EXPECT_TRUE(check_feasibility(r.best, s.family).ok(1e-8));
}

TEST(Search, Deterministic) {
  const SearchSpec s = small_spec(0.03, XMode::Free, 2000);
  const SearchResult a = optimize_attack(s);
  const SearchResult b = optimize_attack(s);
  EXPECT_EQ(a.objective, b.objective);
  EXPECT_EQ(a.evaluations, b.evaluations);
  EXPECT_EQ(a.restart, b.restart);
  for (auto i : {BobOutcome::Bit0, BobOutcome::Bit1, BobOutcome::NoCount})
    for (int bit = 0; bit < 2; ++bit) EXPECT_EQ(a.best.phi(i, bit), b.best.phi(i, bit));
}

TEST(Sweep, MonotoneAndFreeDominatesZero) {
  const std::vector<double> grid{0.0, 0.02, 0.06, 0.1};
  const auto zero = sweep_tradeoff(small_spec(0.0, XMode::Zero), grid);
  const auto free = sweep_tradeoff(small_spec(0.0, XMode::Free), grid);
  ASSERT_EQ(zero.size(), grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    ASSERT_TRUE(zero[k].result.feasible);
    ASSERT_TRUE(free[k].result.feasible);
    EXPECT_GE(free[k].result.objective, zero[k].result.objective - 1e-6);
    if (k > 0) {
      EXPECT_GE(zero[k].result.objective, zero[k - 1].result.objective - 1e-6);
      EXPECT_GE(free[k].result.objective, free[k - 1].result.objective - 1e-6);
    }
  }
}

TEST(Sweep, RejectsDescendingGrid) {
  EXPECT_THROW(sweep_tradeoff(small_spec(0.0, XMode::Zero), {0.1, 0.05}), invalid_input);
}

TEST(Sampling, NoZeroDisturbanceAttackLeaksInformation) {
  // Dense sampling of the feasible set: pull every sample toward the passive
  // attack until the disturbance is below 1e-8 and record what it leaks.
  RandomStream rng(63, 0);
  const ProtocolFamily fam = ProtocolFamily::bb84_4();
  double worst = 0.0;
  for (int k = 0; k < 300; ++k) {
    const ProbeKets pk = lossqkd::testing::sample_feasible_attack(0.5, 4, true, rng);
    // Blend the in-plane kets with the passive ones and repair the blend.
    const FilteredAttack fa = filter_no_count(pk);
    const FilteredAttack passive = filter_no_count(passive_loss_attack(0.5, 4));
    double lo = 0.0, hi = 1.0;
    FilteredAttack mix = passive;
    for (int it = 0; it < 80; ++it) {
      const double t = 0.5 * (lo + hi);
      std::array<ComplexVec, 4> cols;
      for (int i = 0; i < 2; ++i)
        for (int b = 0; b < 2; ++b)
          cols[static_cast<std::size_t>(2 * b + i)] = std::sqrt(1 - t) * passive.ket(i, b) + std::sqrt(t) * fa.ket(i, b);
      const FilteredAttack m = search_detail::repair(cols, 0.5, true).filtered;
      if (search_detail::disturbance(m, sifted_bases(fam)) <= 1e-8) {
        lo = t;
        mix = m;
      } else {
        hi = t;
      }
    }
    worst = std::max(worst, tradeoff_point(mix, fam).i_holevo);
  }
  EXPECT_LE(worst, 1e-6);
}
