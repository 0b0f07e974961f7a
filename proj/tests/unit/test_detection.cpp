#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "qdwdm/detection.hpp"
#include "qdwdm/spdc_source.hpp"
#include "../support/frozen.hpp"

using namespace qdwdm;

namespace {

const TwoPhotonState kIdeal{0.5, 0.5, 0.5, 0.0};

RunConfig paper_run(double duration = 1.0) {
  RunConfig cfg;
  cfg.pair_rate = pair_rate(SourceSpec{}, 204.0, 2.0);
  cfg.duration_s = duration;
  cfg.seed = 99;
  return cfg;
}

}  // namespace

TEST(LossBudget, ArmTotals) {
  const LossBudget b;
  EXPECT_EQ(b.signal_total_db(), 7.97);
  EXPECT_EQ(b.idler_total_db(), 9.32);
  EXPECT_NEAR(arm_transmittance(b, Arm::signal), 0.1596, 1e-4);
  EXPECT_NEAR(arm_transmittance(b, Arm::idler), 0.1169, 1e-4);
  EXPECT_EQ(db_to_transmittance(0.0), 1.0);
}

TEST(DutyCycle, Examples) {
  EXPECT_NEAR(duty_cycle(default_trigger_detector()), 0.0666, 1e-15);
  DetectorSpec d{0.1, 2.5, 0.0, TriggerMode::external_clock, 10.0};
  EXPECT_NEAR(duty_cycle(d), 0.025, 1e-15);
  d.gate_width_ns = 0.0;
  EXPECT_EQ(duty_cycle(d), 0.0);
  EXPECT_THROW(duty_cycle(default_partner_detector()), ModeError);
}

TEST(ExpectedRates, MatchIndependentBudget) {
  const auto r = expected_rates(kIdeal, paper_run(), std::nullopt);
  EXPECT_NEAR(r.singles_1, frozen::kSingles, 1e-9 * frozen::kSingles);
  EXPECT_NEAR(r.dark_singles_1, frozen::kDarkSingles, 1e-9 * frozen::kDarkSingles);
  EXPECT_NEAR(r.coincidences, frozen::kCoincidencesOpen, 1e-9 * frozen::kCoincidencesOpen);
}

TEST(AccidentalRate, Examples) {
  const auto partner = default_partner_detector();
  EXPECT_EQ(accidental_rate(0.0, 1e4, partner), 0.0);
  auto wide = partner;
  wide.gate_width_ns *= 2;
  EXPECT_NEAR(accidental_rate(9000.0, 3e4, wide), 2 * accidental_rate(9000.0, 3e4, partner), 1e-12);
  const auto r = expected_rates(kIdeal, paper_run(), AnalyzerSetting{0.0, 90.0});
  EXPECT_NEAR(r.accidentals, 0.4, 0.2);
  EXPECT_THROW(accidental_rate(-1.0, 0.0, partner), DomainError);
}

TEST(SimulateRun, PaperSinglesAndDarkFloor) {
  const auto t = simulate_run(kIdeal, paper_run(), {std::nullopt});
  EXPECT_NEAR(t.singles_1(), 9000.0, 1800.0);
  RunConfig dark = paper_run();
  dark.pair_rate = 0.0;
  const auto d = simulate_run(kIdeal, dark, {std::nullopt});
  EXPECT_NEAR(d.singles_1(), 400.0, 5 * std::sqrt(400.0));
}

TEST(SimulateRun, ZeroPairRateLeavesOnlyAccidentals) {
  RunConfig cfg = paper_run(20.0);
  cfg.pair_rate = 0.0;
  const auto t = simulate_run(kIdeal, cfg, {std::nullopt});
  const double expected = t.accidentals_estimate();
  EXPECT_NEAR(t.coincidences(), expected, 4 * std::sqrt(expected) + 1);
}

TEST(SimulateRun, MisalignedDelayRemovesTruePairs) {
  RunConfig cfg = paper_run();
  cfg.link.delay_offset_ns = 3.0;
  const auto g = gate_probabilities(kIdeal, cfg, std::nullopt);
  EXPECT_EQ(g.partner_given_photon, 0.0);
  const auto r = expected_rates(kIdeal, cfg, std::nullopt);
  EXPECT_NEAR(r.coincidences, r.accidentals, 1e-3 * r.accidentals);
}

TEST(SimulateRun, DeterministicAndThreadIndependent) {
  RunConfig cfg = paper_run(0.5);
  cfg.gates_per_block = 1 << 20;
  const std::vector<Projection> settings{std::nullopt, AnalyzerSetting{0, 90}, AnalyzerSetting{45, 45}};
  cfg.threads = 1;
  const auto a = simulate_run(kIdeal, cfg, settings);
  const auto b = simulate_run(kIdeal, cfg, settings);
  cfg.threads = 7;
  const auto c = simulate_run(kIdeal, cfg, settings);
  for (std::size_t i = 0; i < settings.size(); ++i) {
    EXPECT_EQ(a.entries[i].singles_1, b.entries[i].singles_1);
    EXPECT_EQ(a.entries[i].coincidences, b.entries[i].coincidences);
    EXPECT_EQ(a.entries[i].singles_1, c.entries[i].singles_1);
    EXPECT_EQ(a.entries[i].coincidences, c.entries[i].coincidences);
  }
  cfg.seed += 1;
  const auto d = simulate_run(kIdeal, cfg, settings);
  EXPECT_NE(a.entries[0].singles_1, d.entries[0].singles_1);
}

TEST(SimulateRun, ShardMergeIsExact) {
  RunConfig cfg = paper_run();
  cfg.gates_per_block = 1 << 18;
  const std::uint64_t blocks = 6;
  cfg.duration_s = static_cast<double>(blocks * cfg.gates_per_block) / 66.6e6;
  ASSERT_EQ(gate_count(cfg), blocks * cfg.gates_per_block);
  const std::vector<Projection> settings{AnalyzerSetting{0, 90}, AnalyzerSetting{22.5, 67.5}};
  const auto whole = simulate_run(kIdeal, cfg, settings);

  RunConfig half = cfg;
  half.duration_s = cfg.duration_s / 2;
  ASSERT_EQ(gate_count(half), 3 * cfg.gates_per_block);
  Tally merged;
  merged.merge(simulate_run(kIdeal, half, settings));
  half.first_block = 3;
  merged.merge(simulate_run(kIdeal, half, settings));
  for (std::size_t i = 0; i < settings.size(); ++i) {
    EXPECT_EQ(merged.entries[i].singles_1, whole.entries[i].singles_1);
    EXPECT_EQ(merged.entries[i].coincidences, whole.entries[i].coincidences);
    EXPECT_DOUBLE_EQ(merged.entries[i].duration_s, whole.entries[i].duration_s);
  }
  Tally other;
  other.merge(simulate_run(kIdeal, half, {std::nullopt}));
  EXPECT_THROW(merged.merge(other), DomainError);
}

TEST(SimulateRun, ConvergesToAnalyticOverRandomStates) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0), ang(0.0, 180.0);
  RunConfig cfg = paper_run(0.1);  // 6.66e6 gates
  cfg.pair_rate *= 20;             // more counts per gate, same physics
  for (int k = 0; k < 12; ++k) {
    TwoPhotonState s;
    const double f = u(rng);
    s.p_hv = f;
    s.p_vh = 1 - f;
    s.coherence = u(rng) * std::sqrt(s.p_hv * s.p_vh);
    s.phase_rad = u(rng) * 3;
    cfg.link.depolarization = 0.1 * u(rng);
    cfg.seed = 1000 + k;
    std::vector<Projection> settings;
    for (int j = 0; j < 4; ++j) settings.push_back(AnalyzerSetting{ang(rng), ang(rng)});
    const auto mc = simulate_run(s, cfg, settings);
    const auto ex = expected_tally(s, cfg, settings);
    for (std::size_t j = 0; j < settings.size(); ++j) {
      const auto& m = mc.entries[j];
      const auto& e = ex.entries[j];
      EXPECT_GE(m.gates, 1e6);
      EXPECT_LE(m.coincidences, m.singles_1);
      EXPECT_GE(m.coincidences, 0.0);
      // coincidence fraction per trigger click: binomial given singles
      const double p = e.coincidences / e.singles_1;
      const double frac = m.coincidences / m.singles_1;
      EXPECT_NEAR(frac, p, 3.5 * std::sqrt(p * (1 - p) / m.singles_1) + 1e-12);
      EXPECT_NEAR(m.singles_1, e.singles_1, 4 * std::sqrt(e.singles_1));
    }
  }
}

TEST(SimulateRun, MoreLossFewerCoincidences) {
  const auto base = expected_rates(kIdeal, paper_run(), AnalyzerSetting{0, 90}).coincidences;
  double LossBudget::*fields[] = {&LossBudget::filtering_db,   &LossBudget::fiber_coupling_db,
                                  &LossBudget::dwdm_insertion_db, &LossBudget::analyzer_1_db,
                                  &LossBudget::analyzer_2_db,  &LossBudget::retarder_db};
  for (auto f : fields) {
    RunConfig cfg = paper_run();
    cfg.budget.*f += 0.5;
    EXPECT_LT(expected_rates(kIdeal, cfg, AnalyzerSetting{0, 90}).coincidences, base);
  }
}

TEST(SimulateRun, RejectsBadConfig) {
  RunConfig cfg = paper_run();
  cfg.duration_s = 0.0;
  EXPECT_THROW(simulate_run(kIdeal, cfg, {std::nullopt}), DomainError);
  cfg = paper_run();
  cfg.trigger.trigger_mode = TriggerMode::triggered_by_partner;
  EXPECT_THROW(simulate_run(kIdeal, cfg, {std::nullopt}), ModeError);
  cfg = paper_run();
  cfg.pair_rate = -1;
  EXPECT_THROW(simulate_run(kIdeal, cfg, {std::nullopt}), DomainError);
}

TEST(EffectiveState, DepolarizationKeepsCompleteness) {
  const LinkModel link{2.0, 0.0, 0.2, 0.8};
  const EffectiveState eff(TwoPhotonState{0.45, 0.55, 0.4, 0.3}, link);
  for (double a : {0.0, 17.0, 45.0})
    for (double b : {3.0, 60.0}) {
      const double sum = eff.probability({a, b}) + eff.probability({a, b + 90}) + eff.probability({a + 90, b}) +
                         eff.probability({a + 90, b + 90});
      EXPECT_NEAR(sum, 1.0, 1e-12);
      EXPECT_NEAR(eff.signal_marginal(a), eff.probability({a, b}) + eff.probability({a, b + 90}), 1e-12);
    }
}

TEST(CalibrateLink, HitsTargetVisibilities) {
  const auto cfg = paper_run();
  const auto link = calibrate_link(kIdeal, cfg, 0.9605, 0.9077);
  RunConfig c = cfg;
  c.link = link;
  EXPECT_NEAR(expected_visibility(kIdeal, c, 0.0), 0.9605, 1e-6);
  EXPECT_NEAR(expected_visibility(kIdeal, c, 45.0), 0.9077, 1e-6);
  EXPECT_GT(link.depolarization, 0.0);
  EXPECT_LT(link.coherence_factor, 1.0);
  EXPECT_THROW(calibrate_link(kIdeal, cfg, 0.999, 0.9), DomainError);
}
