#pragma once

// Monte-Carlo model of the gated two-detector coincidence measurement.
//
// Detector 1 runs on an external clock. Every gate it clicks on a pair photon
// (Poisson arrivals) or on a dark count. A click opens a delayed gate on
// detector 2, which clicks on the heralded partner, on an uncorrelated photon
// or on a dark count. Gates are grouped into fixed-size blocks; each block
// draws from its own random stream derived from (seed, setting, block), so a
// run can be split across threads or across separate invocations and merged
// by addition with bit-identical results.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "qdwdm/errors.hpp"
#include "qdwdm/polarization_state.hpp"
#include "qdwdm/units.hpp"

namespace qdwdm {

enum class TriggerMode { external_clock, triggered_by_partner };

struct DetectorSpec {
  double efficiency = 0.15;
  double gate_width_ns = 1.0;
  double dark_rate_per_ns = 6e-6;
  TriggerMode trigger_mode = TriggerMode::external_clock;
  double trigger_rate_mhz = 66.6;  // external_clock only

  bool operator==(const DetectorSpec&) const = default;
};

/// APD1: externally clocked at 66.6 MHz, 1 ns gate, 15 %.
inline DetectorSpec default_trigger_detector() { return {0.15, 1.0, 6e-6, TriggerMode::external_clock, 66.6}; }

/// APD2: gated by APD1 clicks, 2.5 ns gate, 8 %.
inline DetectorSpec default_partner_detector() {
  return {0.08, 2.5, 6.5e-6, TriggerMode::triggered_by_partner, 0.0};
}

inline void validate(const DetectorSpec& d) {
  if (!(d.efficiency >= 0.0 && d.efficiency <= 1.0)) throw DomainError("detector efficiency must lie in [0, 1]");
  if (!(d.dark_rate_per_ns >= 0.0)) throw DomainError("dark rate must be non-negative");
  if (!(d.gate_width_ns > 0.0)) throw DomainError("gate width must be positive");
  if (d.trigger_mode == TriggerMode::external_clock && !(d.trigger_rate_mhz > 0.0))
    throw DomainError("external clock rate must be positive");
}

/// Fraction of time an externally clocked detector is open.
inline double duty_cycle(const DetectorSpec& d) {
  if (d.trigger_mode != TriggerMode::external_clock)
    throw ModeError("duty cycle is undefined for a partner-triggered detector");
  return d.trigger_rate_mhz * 1e6 * d.gate_width_ns * 1e-9;
}

enum class Arm { signal, idler };

struct LossBudget {
  double filtering_db = 1.67;
  double fiber_coupling_db = 4.68;
  double dwdm_insertion_db = 0.76;
  double analyzer_1_db = 0.86;
  double analyzer_2_db = 1.16;
  double retarder_db = 1.05;

  double signal_total_db() const { return filtering_db + fiber_coupling_db + dwdm_insertion_db + analyzer_1_db; }
  double idler_total_db() const {
    return filtering_db + fiber_coupling_db + dwdm_insertion_db + analyzer_2_db + retarder_db;
  }
  double total_db(Arm arm) const { return arm == Arm::signal ? signal_total_db() : idler_total_db(); }

  bool operator==(const LossBudget&) const = default;
};

inline double arm_transmittance(const LossBudget& budget, Arm arm) {
  return db_to_transmittance(budget.total_db(arm));
}

/// Link parameters that are not part of the two-photon state.
struct LinkModel {
  // Trigger-channel photons per generated pair. Detector 1 sees both
  // polarization outputs of its channel; 1/k of its pair clicks herald a
  // partner routed to detector 2.
  double trigger_photons_per_pair = 2.0;
  // Residual misalignment of detector 2's gate relative to the partner photon.
  double delay_offset_ns = 0.0;
  // White-noise fraction mixed into the polarization state by the fibre
  // analyzers and retarder.
  double depolarization = 0.0;
  // Multiplies the state coherence (residual phase jitter, spatial mismatch).
  double coherence_factor = 1.0;

  bool operator==(const LinkModel&) const = default;
};

inline void validate(const LinkModel& link) {
  if (!(link.trigger_photons_per_pair >= 1.0)) throw DomainError("trigger photons per pair must be >= 1");
  if (!(link.depolarization >= 0.0 && link.depolarization <= 1.0))
    throw DomainError("depolarization must lie in [0, 1]");
  if (!(link.coherence_factor >= 0.0)) throw DomainError("coherence factor must be >= 0");
}

/// State seen by the analyzers: coherence scaled, then white noise mixed in.
class EffectiveState {
 public:
  EffectiveState(const TwoPhotonState& state, const LinkModel& link) : state_(state), p_(link.depolarization) {
    state_.coherence = std::min(state.coherence * link.coherence_factor, std::sqrt(state.p_hv * state.p_vh));
  }

  const TwoPhotonState& state() const { return state_; }

  double probability(const AnalyzerSetting& a) const {
    return (1.0 - p_) * coincidence_probability(state_, a) + p_ * state_.population() / 4.0;
  }
  double signal_marginal(double theta1_deg) const {
    return (1.0 - p_) * qdwdm::signal_marginal(state_, theta1_deg) + p_ * state_.population() / 2.0;
  }
  double idler_marginal(double theta2_deg) const {
    return (1.0 - p_) * qdwdm::idler_marginal(state_, theta2_deg) + p_ * state_.population() / 2.0;
  }

 private:
  TwoPhotonState state_;
  double p_;
};

/// Analyzer configuration for one run segment; nullopt means analyzers removed.
using Projection = std::optional<AnalyzerSetting>;

struct RunConfig {
  double pair_rate = 0.0;  // pairs / s entering the channel pair
  LossBudget budget;
  DetectorSpec trigger = default_trigger_detector();
  DetectorSpec partner = default_partner_detector();
  LinkModel link;
  double duration_s = 1.0;  // per analyzer setting
  std::uint64_t seed = 1;
  std::uint64_t gates_per_block = std::uint64_t{1} << 22;
  std::uint64_t first_block = 0;
  unsigned threads = 0;  // 0: hardware concurrency
};

/// Per-gate event probabilities for one analyzer setting.
struct GateProbabilities {
  double photon_1 = 0.0;              // >= 1 pair photon at detector 1
  double dark_1 = 0.0;
  double click_1 = 0.0;
  double photon_given_click = 0.0;
  double partner_given_photon = 0.0;  // heralded partner detected at detector 2
  double background_2 = 0.0;          // uncorrelated photon or dark count in detector 2's gate
  double uncorrelated_rate_2 = 0.0;   // photons / s reaching detector 2 outside the heralded partner

  double coincidence_given_click() const {
    return 1.0 - (1.0 - photon_given_click * partner_given_photon) * (1.0 - background_2);
  }
};

inline GateProbabilities gate_probabilities(const TwoPhotonState& state, const RunConfig& cfg,
                                            const Projection& projection) {
  const auto& d1 = cfg.trigger;
  const auto& d2 = cfg.partner;
  const EffectiveState eff(state, cfg.link);
  const double alpha_s = arm_transmittance(cfg.budget, Arm::signal);
  const double alpha_i = arm_transmittance(cfg.budget, Arm::idler);
  const double k = cfg.link.trigger_photons_per_pair;

  GateProbabilities g;
  const double mu1 = k * cfg.pair_rate * alpha_s * d1.efficiency * d1.gate_width_ns * 1e-9;
  g.photon_1 = -std::expm1(-mu1);
  g.dark_1 = -std::expm1(-d1.dark_rate_per_ns * d1.gate_width_ns);
  g.click_1 = 1.0 - (1.0 - g.photon_1) * (1.0 - g.dark_1);
  g.photon_given_click = g.click_1 > 0.0 ? g.photon_1 / g.click_1 : 0.0;

  double conditional = 1.0;
  double idler_pass = 1.0;
  if (projection) {
    const double m1 = eff.signal_marginal(projection->theta1_deg);
    conditional = m1 > 0.0 ? std::clamp(eff.probability(*projection) / m1, 0.0, 1.0) : 0.0;
    idler_pass = eff.idler_marginal(projection->theta2_deg);
  }
  const double alignment = std::max(0.0, 1.0 - std::abs(cfg.link.delay_offset_ns) / d2.gate_width_ns);
  g.partner_given_photon = alpha_i * d2.efficiency * alignment * conditional / k;

  g.uncorrelated_rate_2 = cfg.pair_rate * alpha_i * d2.efficiency * idler_pass;
  g.background_2 = -std::expm1(-(g.uncorrelated_rate_2 * 1e-9 + d2.dark_rate_per_ns) * d2.gate_width_ns);
  return g;
}

/// Linear accidental-coincidence estimate from the trigger singles rate.
inline double accidental_rate(double singles_1_rate, double uncorrelated_rate_2, const DetectorSpec& partner) {
  if (singles_1_rate < 0.0 || uncorrelated_rate_2 < 0.0) throw DomainError("rates must be non-negative");
  return singles_1_rate * (uncorrelated_rate_2 * partner.gate_width_ns * 1e-9 +
                           partner.dark_rate_per_ns * partner.gate_width_ns);
}

struct ExpectedRates {
  double singles_1 = 0.0;      // s^-1
  double coincidences = 0.0;   // s^-1
  double accidentals = 0.0;    // s^-1, linear estimate
  double dark_singles_1 = 0.0; // s^-1, dark-only clicks of detector 1
};

inline ExpectedRates expected_rates(const TwoPhotonState& state, const RunConfig& cfg, const Projection& projection) {
  const auto g = gate_probabilities(state, cfg, projection);
  const double gate_rate = cfg.trigger.trigger_rate_mhz * 1e6;
  ExpectedRates r;
  r.singles_1 = gate_rate * g.click_1;
  r.coincidences = r.singles_1 * g.coincidence_given_click();
  r.accidentals = accidental_rate(r.singles_1, g.uncorrelated_rate_2, cfg.partner);
  r.dark_singles_1 = gate_rate * g.dark_1 * (1.0 - g.photon_1);
  return r;
}

struct SettingTally {
  Projection setting;
  double duration_s = 0.0;
  double gates = 0.0;
  // Counts are integers stored as double so analytic (expected) tallies share the type.
  double singles_1 = 0.0;
  double singles_2 = 0.0;
  double coincidences = 0.0;
  double accidentals_estimate = 0.0;
};

struct Tally {
  std::vector<SettingTally> entries;

  double singles_1() const { return sum(&SettingTally::singles_1); }
  double singles_2() const { return sum(&SettingTally::singles_2); }
  double coincidences() const { return sum(&SettingTally::coincidences); }
  double accidentals_estimate() const { return sum(&SettingTally::accidentals_estimate); }
  double duration_s() const { return sum(&SettingTally::duration_s); }

  /// Adds counts of a run over the same settings (e.g. another time shard).
  void merge(const Tally& other) {
    if (entries.empty()) {
      entries = other.entries;
      return;
    }
    if (other.entries.size() != entries.size()) throw DomainError("cannot merge tallies over different settings");
    for (std::size_t i = 0; i < entries.size(); ++i) {
      auto& a = entries[i];
      const auto& b = other.entries[i];
      if (a.setting != b.setting) throw DomainError("cannot merge tallies over different settings");
      a.duration_s += b.duration_s;
      a.gates += b.gates;
      a.singles_1 += b.singles_1;
      a.singles_2 += b.singles_2;
      a.coincidences += b.coincidences;
      a.accidentals_estimate += b.accidentals_estimate;
    }
  }

 private:
  double sum(double SettingTally::*field) const {
    double s = 0.0;
    for (const auto& e : entries) s += e.*field;
    return s;
  }
};

namespace detail {

struct BlockCounts {
  std::uint64_t singles_1 = 0;
  std::uint64_t coincidences = 0;
};

inline BlockCounts simulate_block(const GateProbabilities& g, std::uint64_t gates, std::uint64_t seed,
                                  std::uint64_t setting_index, std::uint64_t block) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(setting_index), static_cast<std::uint32_t>(block),
                    static_cast<std::uint32_t>(block >> 32)};
  std::mt19937_64 rng(seq);
  auto binomial = [&rng](std::uint64_t n, double p) -> std::uint64_t {
    if (n == 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    return std::binomial_distribution<std::uint64_t>(n, p)(rng);
  };
  // Thinning a binomial gate sequence gate by gate and in aggregate gives the
  // same joint distribution of the counts below.
  BlockCounts c;
  c.singles_1 = binomial(gates, g.click_1);
  const auto with_photon = binomial(c.singles_1, g.photon_given_click);
  const auto partner = binomial(with_photon, g.partner_given_photon);
  const auto background = binomial(c.singles_1 - partner, g.background_2);
  c.coincidences = partner + background;
  return c;
}

}  // namespace detail

inline void validate(const RunConfig& cfg) {
  validate(cfg.trigger);
  validate(cfg.partner);
  validate(cfg.link);
  if (cfg.trigger.trigger_mode != TriggerMode::external_clock)
    throw ModeError("detector 1 must run on an external clock");
  if (!(cfg.pair_rate >= 0.0)) throw DomainError("pair rate must be non-negative");
  if (!(cfg.duration_s > 0.0)) throw DomainError("duration must be positive");
  if (cfg.gates_per_block == 0) throw DomainError("gates per block must be positive");
}

inline std::uint64_t gate_count(const RunConfig& cfg) {
  return static_cast<std::uint64_t>(std::llround(cfg.duration_s * cfg.trigger.trigger_rate_mhz * 1e6));
}

/// Runs every projection for cfg.duration_s. Deterministic in (inputs, seed);
/// independent of the thread count.
inline Tally simulate_run(const TwoPhotonState& state, const RunConfig& cfg, const std::vector<Projection>& settings) {
  validate(cfg);
  const std::uint64_t gates = gate_count(cfg);
  const std::uint64_t blocks = (gates + cfg.gates_per_block - 1) / cfg.gates_per_block;

  std::vector<GateProbabilities> probs;
  for (const auto& s : settings) probs.push_back(gate_probabilities(state, cfg, s));

  const std::uint64_t tasks = blocks * settings.size();
  std::vector<detail::BlockCounts> results(tasks);
  std::atomic<std::uint64_t> next{0};
  auto worker = [&] {
    for (std::uint64_t t = next++; t < tasks; t = next++) {
      const std::uint64_t setting = t / blocks, block = t % blocks;
      const std::uint64_t n = std::min(cfg.gates_per_block, gates - block * cfg.gates_per_block);
      results[t] = detail::simulate_block(probs[setting], n, cfg.seed, setting, cfg.first_block + block);
    }
  };
  unsigned threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, std::max<std::uint64_t>(tasks, 1)));
  {
    std::vector<std::jthread> pool;
    for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
  }

  Tally tally;
  for (std::size_t s = 0; s < settings.size(); ++s) {
    SettingTally e;
    e.setting = settings[s];
    e.duration_s = static_cast<double>(gates) / (cfg.trigger.trigger_rate_mhz * 1e6);
    e.gates = static_cast<double>(gates);
    for (std::uint64_t b = 0; b < blocks; ++b) {
      e.singles_1 += static_cast<double>(results[s * blocks + b].singles_1);
      e.coincidences += static_cast<double>(results[s * blocks + b].coincidences);
    }
    e.singles_2 = e.coincidences;
    e.accidentals_estimate = e.duration_s * accidental_rate(e.singles_1 / e.duration_s, probs[s].uncorrelated_rate_2, cfg.partner);
    tally.entries.push_back(e);
  }
  return tally;
}

/// Expected counts of the same measurement, no sampling noise.
inline Tally expected_tally(const TwoPhotonState& state, const RunConfig& cfg, const std::vector<Projection>& settings) {
  validate(cfg);
  Tally tally;
  for (const auto& s : settings) {
    const auto r = expected_rates(state, cfg, s);
    SettingTally e;
    e.setting = s;
    e.duration_s = cfg.duration_s;
    e.gates = cfg.duration_s * cfg.trigger.trigger_rate_mhz * 1e6;
    e.singles_1 = r.singles_1 * cfg.duration_s;
    e.coincidences = r.coincidences * cfg.duration_s;
    e.singles_2 = e.coincidences;
    e.accidentals_estimate = r.accidentals * cfg.duration_s;
    tally.entries.push_back(e);
  }
  return tally;
}

/// Raw fringe visibility of the expected coincidence rate, signal analyzer
/// fixed at theta1, idler scanned over half a turn.
inline double expected_visibility(const TwoPhotonState& state, const RunConfig& cfg, double theta1_deg) {
  double lo = INFINITY, hi = 0.0;
  for (int i = 0; i < 3600; ++i) {
    const double c = expected_rates(state, cfg, AnalyzerSetting{theta1_deg, i * 0.05}).coincidences;
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  return hi + lo > 0.0 ? (hi - lo) / (hi + lo) : 0.0;
}

/// Chooses depolarization and coherence factor so that the expected raw
/// visibilities (including accidentals) equal the targets. The rectilinear
/// fringe does not depend on coherence, so the two solves decouple.
inline LinkModel calibrate_link(const TwoPhotonState& state, RunConfig cfg, double target_rectilinear,
                                double target_diagonal) {
  auto bisect = [](auto&& f, double lo, double hi, double target, bool increasing) {
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      const bool below = f(mid) < target;
      if (below == increasing) lo = mid;
      else hi = mid;
    }
    return 0.5 * (lo + hi);
  };

  cfg.link.depolarization = 0.0;
  cfg.link.coherence_factor = 1.0;
  const double v_rect_max = expected_visibility(state, cfg, 0.0);
  if (target_rectilinear > v_rect_max + 1e-12)
    throw DomainError("rectilinear visibility target exceeds the accidental-limited maximum");
  cfg.link.depolarization = bisect(
      [&](double p) {
        RunConfig c = cfg;
        c.link.depolarization = p;
        return expected_visibility(state, c, 0.0);
      },
      0.0, 1.0, target_rectilinear, false);

  const double bound = std::sqrt(state.p_hv * state.p_vh);
  const double max_factor = state.coherence > 0.0 ? bound / state.coherence : 1.0;
  RunConfig probe = cfg;
  probe.link.coherence_factor = max_factor;
  if (target_diagonal > expected_visibility(state, probe, 45.0) + 1e-12)
    throw DomainError("diagonal visibility target unreachable for this state");
  cfg.link.coherence_factor = bisect(
      [&](double f) {
        RunConfig c = cfg;
        c.link.coherence_factor = f;
        return expected_visibility(state, c, 45.0);
      },
      0.0, max_factor, target_diagonal, true);
  return cfg.link;
}

}  // namespace qdwdm
