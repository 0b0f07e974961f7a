#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "qdwdm/analysis.hpp"
#include "qdwdm/spdc_source.hpp"
#include "../support/frozen.hpp"
#include "../support/oracles.hpp"

using namespace qdwdm;

namespace {

const TwoPhotonState kIdeal{0.5, 0.5, 0.5, 0.0};

CountTable exact_counts(const TwoPhotonState& s, const ChshSettings& settings, double scale = 1e6) {
  CountTable t;
  for (const auto& a : settings.schedule()) t.add(a, scale * coincidence_probability(s, a));
  return t;
}

}  // namespace

TEST(Correlation, Examples) {
  const auto perfect = correlation_E(100, 100, 0, 0);
  EXPECT_EQ(perfect.value, 1.0);
  EXPECT_EQ(perfect.sigma, 0.0);
  EXPECT_EQ(correlation_E(50, 50, 50, 50).value, 0.0);
  EXPECT_THROW(correlation_E(0, 0, 0, 0), IncompleteDataError);
  EXPECT_THROW(correlation_E(-1, 2, 0, 0), DomainError);
}

TEST(Correlation, IdealStateAtCanonicalAngles) {
  const double a = -22.5, b = -45.0;
  const auto e = correlation_E(coincidence_probability(kIdeal, {a, b}), coincidence_probability(kIdeal, {a + 90, b + 90}),
                               coincidence_probability(kIdeal, {a, b + 90}), coincidence_probability(kIdeal, {a + 90, b}));
  EXPECT_NEAR(std::abs(e.value), std::sqrt(2.0) / 2, 1e-12);
}

TEST(Correlation, SigmaMatchesNumericalPropagation) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(1.0, 500.0);
  for (int i = 0; i < 200; ++i) {
    const double c[4] = {u(rng), u(rng), u(rng), u(rng)};
    const auto e = correlation_E(c[0], c[1], c[2], c[3]);
    EXPECT_GE(e.value, -1.0);
    EXPECT_LE(e.value, 1.0);
    EXPECT_GE(e.sigma, 0.0);
    double var = 0.0;
    for (int k = 0; k < 4; ++k) {
      double up[4] = {c[0], c[1], c[2], c[3]}, dn[4] = {c[0], c[1], c[2], c[3]};
      const double h = 1e-4 * c[k];
      up[k] += h;
      dn[k] -= h;
      const double d = (correlation_E(up[0], up[1], up[2], up[3]).value -
                        correlation_E(dn[0], dn[1], dn[2], dn[3]).value) / (2 * h);
      var += d * d * c[k];
    }
    EXPECT_NEAR(e.sigma, std::sqrt(var), 1e-6 * e.sigma + 1e-12);
  }
}

TEST(Chsh, DefaultSignsAreTheMaximisingPattern) {
  const ChshSettings settings;
  std::array<double, 4> e{};
  const auto terms = settings.terms();
  for (std::size_t k = 0; k < 4; ++k) {
    const auto [a, b] = terms[k];
    e[k] = -std::cos(2 * deg_to_rad(a)) * std::cos(2 * deg_to_rad(b)) +
           std::sin(2 * deg_to_rad(a)) * std::sin(2 * deg_to_rad(b));
  }
  EXPECT_EQ(oracle::best_signs(e), signs(SignConvention::tsirelson));
}

TEST(Chsh, IdealStateReachesTsirelson) {
  const auto r = chsh_S(exact_counts(kIdeal, {}), {});
  EXPECT_NEAR(r.s, 2 * std::sqrt(2.0), 1e-9);
  const auto plus = chsh_S(exact_counts(kIdeal, {}), {}, SignConvention::printed_all_plus);
  EXPECT_NEAR(plus.s, -std::sqrt(2.0), 1e-9);
}

TEST(Chsh, BoundedOnValidStates) {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(0.0, 1.0), ang(-90.0, 90.0);
  for (int i = 0; i < 500; ++i) {
    const double f = u(rng);
    TwoPhotonState s{f, 1 - f, 0.0, u(rng) * 6};
    s.coherence = u(rng) * std::sqrt(s.p_hv * s.p_vh);
    const ChshSettings set{ang(rng), ang(rng), ang(rng), ang(rng)};
    for (auto c : {SignConvention::tsirelson, SignConvention::printed_all_plus}) {
      const auto r = chsh_S(exact_counts(s, set), set, c);
      // the all-plus combination is not a Bell expression and may exceed it
      if (c == SignConvention::tsirelson) EXPECT_LE(std::abs(r.s), 2 * std::sqrt(2.0) + 1e-9);
      for (const auto& t : r.terms) {
        EXPECT_GE(t.e.value, -1.0 - 1e-12);
        EXPECT_LE(t.e.value, 1.0 + 1e-12);
      }
    }
  }
}

TEST(Chsh, SeparableStateStaysClassical) {
  const TwoPhotonState separable{0.5, 0.5, 0.0, 0.0};
  EXPECT_LE(std::abs(chsh_S(exact_counts(separable, {}), {}).s), 2.0);
}

TEST(Chsh, ScaleInvariantWithShrinkingSigma) {
  const TwoPhotonState s{0.5, 0.5, 0.45, 0.0};
  const auto a = chsh_S(exact_counts(s, {}, 1e3), {});
  const auto b = chsh_S(exact_counts(s, {}, 4e3), {});
  EXPECT_NEAR(a.s, b.s, 1e-12);
  EXPECT_NEAR(b.sigma, a.sigma / 2, 1e-12);
}

TEST(Chsh, MissingSettingIsIncomplete) {
  CountTable t = exact_counts(kIdeal, {});
  CountTable partial;
  const auto sched = ChshSettings{}.schedule();
  for (std::size_t i = 1; i < sched.size(); ++i) partial.add(sched[i], t.at(sched[i]));
  EXPECT_THROW(chsh_S(partial, {}), IncompleteDataError);
}

TEST(CountTable, AnglesWrapModulo180) {
  CountTable t;
  t.add({-22.5, -45.0}, 3.0);
  EXPECT_EQ(t.at({157.5, 135.0}), 3.0);
  EXPECT_EQ(t.at({337.5, 315.0}), 3.0);
  t.add({157.5, 135.0}, 1.0);
  EXPECT_EQ(t.at({-22.5, -45.0}), 4.0);
  EXPECT_EQ(t.size(), 1u);
  t.add({0.0, 90.0}, 1.0);
  EXPECT_TRUE(t.contains({180.0, -90.0}));
  EXPECT_FALSE(t.contains({1.0, 90.0}));
}

TEST(Visibility, RecoversNoiselessModel) {
  std::vector<CurvePoint> curve;
  for (int i = 0; i <= 36; ++i) {
    const double t = i * 10.0;
    curve.push_back({t, 500.0 * (1 - 0.9077 * std::cos(2 * deg_to_rad(t - 30.0)))});
  }
  const auto fit = visibility_from_curve(curve);
  EXPECT_NEAR(fit.visibility, 0.9077, 1e-4);
  EXPECT_NEAR(fit.offset, 500.0, 1e-6);
  EXPECT_NEAR(std::fmod(fit.phase_deg + 360.0, 180.0), 120.0, 1e-6);
  EXPECT_GT(fit.sigma, 0.0);

  std::vector<CurvePoint> scaled = curve;
  for (auto& p : scaled) p.count *= 7.0;
  EXPECT_NEAR(visibility_from_curve(scaled).visibility, fit.visibility, 1e-9);
}

TEST(Visibility, FloorIsSubtracted) {
  std::vector<CurvePoint> curve;
  for (int i = 0; i < 19; ++i)
    curve.push_back({i * 20.0, 12.0 + 300.0 * (1 + std::cos(2 * deg_to_rad(i * 20.0)))});
  EXPECT_NEAR(visibility_from_curve(curve, 12.0).visibility, 1.0, 1e-9);
  EXPECT_LT(visibility_from_curve(curve).visibility, 0.97);
}

TEST(Visibility, ConstantCurveHasZeroVisibility) {
  std::vector<CurvePoint> curve;
  for (int i = 0; i < 19; ++i) curve.push_back({i * 20.0, 250.0});
  EXPECT_NEAR(visibility_from_curve(curve).visibility, 0.0, 1e-12);
}

TEST(Visibility, RejectsShortOrNarrowCurves) {
  std::vector<CurvePoint> few;
  for (int i = 0; i < 7; ++i) few.push_back({i * 30.0, 10.0});
  EXPECT_THROW(visibility_from_curve(few), FitError);
  std::vector<CurvePoint> narrow;
  for (int i = 0; i < 10; ++i) narrow.push_back({i * 10.0, 10.0 + i});
  EXPECT_THROW(visibility_from_curve(narrow), FitError);
  std::vector<CurvePoint> zeros;
  for (int i = 0; i < 10; ++i) zeros.push_back({i * 20.0, 0.0});
  EXPECT_THROW(visibility_from_curve(zeros), FitError);
}

TEST(GenerationRate, PaperEstimate) {
  const LossBudget b;
  const double r = estimate_generation_rate(45.0, b, 0.15, 0.08, 0.066, 204.0, 2.0);
  EXPECT_NEAR(r, frozen::kEstimate, 1e-9 * frozen::kEstimate);
  EXPECT_NEAR(r, 7.4e3, 0.02 * 7.4e3);
  EXPECT_NEAR(estimate_generation_rate(90.0, b, 0.15, 0.08, 0.066, 204.0, 2.0), 2 * r, 1e-9 * r);
  EXPECT_THROW(estimate_generation_rate(45.0, b, 0.0, 0.08, 0.066, 204.0, 2.0), DomainError);
  EXPECT_THROW(estimate_generation_rate(45.0, b, 0.15, 0.08, 0.0, 204.0, 2.0), DomainError);
}

TEST(GenerationRate, ClosedLoopThroughSimulation) {
  // With one trigger photon per pair and no dark counts the forward chain is
  // exactly the estimate's model.
  RunConfig cfg;
  cfg.pair_rate = pair_rate(SourceSpec{}, 204.0, 2.0);
  cfg.link.trigger_photons_per_pair = 1.0;
  cfg.trigger.dark_rate_per_ns = 0.0;
  cfg.partner.dark_rate_per_ns = 0.0;
  cfg.duration_s = 30.0;
  cfg.seed = 5;
  const TwoPhotonState ideal{0.5, 0.5, 0.5, 0.0};
  const auto t = simulate_run(ideal, cfg, {std::nullopt});
  const auto& e = t.entries.front();
  const double net = (e.coincidences - e.accidentals_estimate) / e.duration_s;
  const double est = estimate_generation_rate(net, cfg.budget, cfg.trigger.efficiency, cfg.partner.efficiency,
                                              duty_cycle(cfg.trigger), 204.0, 2.0);
  const double rel_sigma = std::sqrt(e.coincidences) / (e.coincidences - e.accidentals_estimate);
  EXPECT_NEAR(est, 7.4e3, 3 * rel_sigma * 7.4e3 + 0.01 * 7.4e3);
}
