#pragma once

// End-to-end pipelines behind the command-line subcommands. Each returns a
// plain-text report and a set of CSV files; nothing here touches the
// filesystem except optional input tallies.

#include <cmath>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qdwdm/analysis.hpp"
#include "qdwdm/csv.hpp"
#include "qdwdm/detection.hpp"
#include "qdwdm/dwdm.hpp"
#include "qdwdm/polarization_state.hpp"
#include "qdwdm/scenario.hpp"
#include "qdwdm/spdc_source.hpp"
#include "qdwdm/tuning.hpp"

namespace qdwdm {

struct CommandOutput {
  std::string report;
  std::vector<std::pair<std::string, std::string>> files;  // (file name, contents)
};

struct CommandOptions {
  bool analytic = false;  // exact probabilities x duration instead of Monte Carlo
};

inline std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

inline std::string sci(double v, int digits) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(digits) << v;
  return os.str();
}

/// Everything needed to measure one channel pair.
struct Prepared {
  ChannelPairTarget target;
  TuningSetting setting;
  ChannelBank bank;
  PairTransmittances transmittances;
  TwoPhotonState state;
  double matched_weight = 0.0;  // t_hv + t_vh at the pair's own operating point
  RunConfig run;
};

inline ChannelBank effective_bank(const Scenario& sc) {
  auto bank = jitter_centers(sc.bank.bank, sc.bank.center_jitter_nm, sc.simulation.seed);
  validate(bank);
  return bank;
}

inline Prepared prepare(const Scenario& sc, const ChannelPairTarget& target,
                        std::optional<TuningSetting> setting = std::nullopt) {
  Prepared p;
  p.target = target;
  p.bank = effective_bank(sc);
  require_adjacent(target, p.bank);
  const auto& spec = sc.source.spec;
  const auto& a = p.bank.channel(target.trigger);
  const auto& b = p.bank.channel(target.partner);

  const auto matched = settings_for_pair(target, p.bank, spec);
  if (!setting && sc.tuning.setting && target == sc.tuning.target) setting = sc.tuning.setting;
  p.setting = setting.value_or(matched);
  validate(p.setting, spec.limits);

  p.transmittances = directed_pair_transmittances(joint_spectrum(p.setting, spec), a, b, p.bank);
  p.state = build_state(p.transmittances, sc.link.residual_phase_rad);
  if (sc.link.compensate_phase) p.state = compensate_phase(p.state);

  const auto matched_t = p.setting == matched
                             ? p.transmittances
                             : directed_pair_transmittances(joint_spectrum(matched, spec), a, b, p.bank);
  p.matched_weight = matched_t.total();

  auto& run = p.run;
  run.pair_rate = pair_rate(spec, sc.tuning.pump_power_mw, sc.tuning.accepted_bandwidth_nm) *
                  p.transmittances.total() / p.matched_weight;
  run.budget = sc.losses;
  run.trigger = sc.trigger;
  run.partner = sc.partner;
  run.link = sc.link.model;
  run.seed = sc.simulation.seed;
  run.gates_per_block = sc.simulation.gates_per_block;
  run.threads = sc.simulation.threads;

  if (sc.link.calibrate_to) {
    // Solved on the matched, phase-compensated state so that detuning still
    // shows up as lost visibility.
    RunConfig ref = run;
    ref.pair_rate = pair_rate(spec, sc.tuning.pump_power_mw, sc.tuning.accepted_bandwidth_nm);
    const auto ref_state = compensate_phase(build_state(matched_t, 0.0));
    const auto link = calibrate_link(ref_state, ref, sc.link.calibrate_to->rectilinear, sc.link.calibrate_to->diagonal);
    run.link.depolarization = link.depolarization;
    run.link.coherence_factor = link.coherence_factor;
  }
  validate(run);
  return p;
}

/// Noiseless counts from the state alone: the heralded coincidence rate
/// without analyzers, distributed over settings as P / (population / 2).
inline Tally analytic_tally(const Prepared& p, double duration_s, const std::vector<Projection>& settings) {
  RunConfig ideal = p.run;
  ideal.link.depolarization = 0.0;
  ideal.link.coherence_factor = 1.0;
  const auto g = gate_probabilities(p.state, ideal, std::nullopt);
  const double rate = ideal.trigger.trigger_rate_mhz * 1e6 * g.photon_1 * g.partner_given_photon;
  Tally t;
  for (const auto& s : settings) {
    SettingTally e;
    e.setting = s;
    e.duration_s = duration_s;
    e.gates = duration_s * ideal.trigger.trigger_rate_mhz * 1e6;
    e.singles_1 = e.gates * g.photon_1;
    const double fraction = s ? coincidence_probability(p.state, *s) / p.state.population() : 1.0;
    e.coincidences = duration_s * rate * fraction;
    e.singles_2 = e.coincidences;
    t.entries.push_back(e);
  }
  return t;
}

inline Tally measure(const Prepared& p, double duration_s, const std::vector<Projection>& settings,
                     const CommandOptions& opts) {
  if (opts.analytic) return analytic_tally(p, duration_s, settings);
  RunConfig cfg = p.run;
  cfg.duration_s = duration_s;
  return simulate_run(p.state, cfg, settings);
}

/// Rewrites tally angles from analysis angles into the schedule's convention.
inline Tally in_convention(Tally t, AngleConvention c) {
  if (c == AngleConvention::analysis) return t;
  for (auto& e : t.entries)
    if (e.setting) e.setting = AnalyzerSetting{e.setting->theta1_deg / 2.0, e.setting->theta2_deg / 2.0};
  return t;
}

inline Tally from_convention(Tally t, AngleConvention c) {
  for (auto& e : t.entries)
    if (e.setting)
      e.setting = AnalyzerSetting{to_analysis_deg(e.setting->theta1_deg, c), to_analysis_deg(e.setting->theta2_deg, c)};
  return t;
}

inline std::string describe(const Prepared& p) {
  std::ostringstream os;
  os << "pair " << p.target.label() << ": pump " << fixed(p.setting.pump_wavelength_nm, 4) << " nm, crystal "
     << fixed(p.setting.crystal_temperature_c, 3) << " C, pair delay "
     << fixed(p.bank.pair_delay_ns(p.target.trigger, p.target.partner), 2) << " ns\n";
  os << "state: p_hv " << fixed(p.state.p_hv, 6) << ", p_vh " << fixed(p.state.p_vh, 6) << ", coherence "
     << fixed(p.state.coherence, 6) << ", phase " << fixed(p.state.phase_rad, 6) << " rad\n";
  os << "link: depolarization " << fixed(p.run.link.depolarization, 6) << ", coherence factor "
     << fixed(p.run.link.coherence_factor, 6) << ", pair rate " << sci(p.run.pair_rate, 4) << " /s\n";
  return os.str();
}

// ---------------------------------------------------------------------------

inline std::vector<double> idler_sweep(const CurveSchedule& c) {
  std::vector<double> out;
  const auto n = static_cast<long>(std::floor((c.idler_stop - c.idler_start) / c.idler_step + 1e-9));
  for (long i = 0; i <= n; ++i) out.push_back(c.idler_start + static_cast<double>(i) * c.idler_step);
  return out;
}

inline CommandOutput cmd_bell_curve(const Scenario& sc, const CommandOptions& opts = {}) {
  const auto p = prepare(sc, sc.tuning.target);
  const auto& c = sc.curve;
  const auto idlers = idler_sweep(c);

  std::vector<Projection> settings;
  for (double s : c.signal)
    for (double i : idlers) settings.push_back(AnalyzerSetting{to_analysis_deg(s, c.angles), to_analysis_deg(i, c.angles)});
  const auto tally = measure(p, c.duration_s, settings, opts);

  CommandOutput out;
  std::ostringstream rep;
  rep << "bell-curve (" << (opts.analytic ? "analytic" : "monte carlo") << ", angles "
      << detail::angles_name(c.angles) << ", " << fixed(c.duration_s, 1) << " s per point)\n";
  rep << describe(p);

  std::ostringstream fits;
  fits << "theta1_deg,visibility,sigma,visibility_net,sigma_net,reduced_chi2\n";
  for (std::size_t k = 0; k < c.signal.size(); ++k) {
    std::vector<CurvePoint> curve;
    double accidentals = 0.0;
    for (std::size_t j = 0; j < idlers.size(); ++j) {
      const auto& e = tally.entries[k * idlers.size() + j];
      curve.push_back({e.setting->theta2_deg, e.coincidences});
      accidentals += e.accidentals_estimate;
    }
    accidentals /= static_cast<double>(idlers.size());
    const auto raw = visibility_from_curve(curve);
    const auto net = visibility_from_curve(curve, accidentals);
    rep << "signal " << fixed(c.signal[k], 2) << ": V = " << fixed(raw.visibility, 4) << " +/- "
        << fixed(raw.sigma, 4) << " (accidental-subtracted " << fixed(net.visibility, 4) << " +/- "
        << fixed(net.sigma, 4) << "), max at idler " << fixed(raw.phase_deg, 2) << " deg analysis\n";
    fits << csv::format_number(c.signal[k]) << ',' << csv::format_number(raw.visibility) << ','
         << csv::format_number(raw.sigma) << ',' << csv::format_number(net.visibility) << ','
         << csv::format_number(net.sigma) << ',' << csv::format_number(raw.reduced_chi2) << '\n';
  }
  out.report = rep.str();
  out.files.emplace_back("bell_curve.csv", csv::write_tally(in_convention(tally, c.angles)));
  out.files.emplace_back("bell_curve_fit.csv", fits.str());
  return out;
}

inline ChshSettings chsh_analysis_settings(const ChshSchedule& s) {
  return {to_analysis_deg(s.settings.theta1_deg, s.angles), to_analysis_deg(s.settings.theta1_prime_deg, s.angles),
          to_analysis_deg(s.settings.theta2_deg, s.angles), to_analysis_deg(s.settings.theta2_prime_deg, s.angles)};
}

/// With `input` set the counts come from that tally (schedule convention)
/// instead of a new measurement.
inline CommandOutput cmd_chsh(const Scenario& sc, const CommandOptions& opts = {},
                              const std::optional<Tally>& input = std::nullopt) {
  const auto& h = sc.chsh;
  const auto settings = chsh_analysis_settings(h);
  CommandOutput out;
  std::ostringstream rep;
  Tally tally;
  if (input) {
    tally = from_convention(*input, h.angles);
    rep << "chsh (input tally, angles " << detail::angles_name(h.angles) << ")\n";
  } else {
    const auto p = prepare(sc, h.target.value_or(sc.tuning.target));
    std::vector<Projection> schedule;
    for (const auto& s : settings.schedule()) schedule.push_back(s);
    tally = measure(p, h.duration_s, schedule, opts);
    rep << "chsh (" << (opts.analytic ? "analytic" : "monte carlo") << ", angles " << detail::angles_name(h.angles)
        << ", " << fixed(h.duration_s, 1) << " s per setting)\n";
    rep << describe(p);
    out.files.emplace_back("chsh.csv", csv::write_tally(in_convention(tally, h.angles)));
  }
  const auto r = chsh_S(CountTable::from_tally(tally), settings, h.convention);
  rep << "sign convention: " << detail::convention_name(h.convention) << "\n";
  for (const auto& t : r.terms)
    rep << (t.sign > 0 ? "+" : "-") << " E(" << fixed(t.theta1_deg, 2) << ", " << fixed(t.theta2_deg, 2)
        << ") = " << fixed(t.e.value, 5) << " +/- " << fixed(t.e.sigma, 5) << "\n";
  rep << "S = " << fixed(r.s, 5) << " +/- " << fixed(r.sigma, 5);
  if (r.sigma > 0.0) rep << " (" << fixed((std::abs(r.s) - 2.0) / r.sigma, 2) << " sigma beyond 2)";
  rep << "\n";
  out.report = rep.str();
  return out;
}

struct SwitchStep {
  SwitchPlan plan;
  IsolationReport isolation;
};

inline SwitchStep switch_step(const Scenario& sc, const ChannelBank& bank, const ChannelPairTarget& from,
                              const ChannelPairTarget& to) {
  SwitchStep s;
  s.plan = switch_plan(from, to, bank, sc.source.spec, sc.tuning.settling_time_s);
  s.isolation = verify_isolation(s.plan.new_setting, to, bank, sc.source.spec, sc.tuning.isolation_threshold,
                                 sc.tuning.degraded_fraction);
  return s;
}

/// Switches from the configured pair to `to`, or walks the sweep (every
/// adjacent pair when the sweep is empty).
inline CommandOutput cmd_switch(const Scenario& sc, const std::optional<ChannelPairTarget>& to = std::nullopt) {
  const auto bank = effective_bank(sc);
  std::vector<ChannelPairTarget> targets;
  if (to) targets.push_back(*to);
  else if (!sc.tuning.sweep.empty()) targets = sc.tuning.sweep;
  else targets = adjacent_pairs(bank);

  CommandOutput out;
  std::ostringstream rep, table;
  table << "from,to,pump_nm,temperature_c,midpoint_nm,visibility_rect,visibility_diag,max_leak_ratio,worst_pair,"
           "isolated\n";
  auto from = sc.tuning.target;
  for (const auto& t : targets) {
    const auto s = switch_step(sc, bank, from, t);
    const auto& pl = s.plan;
    const auto& iso = s.isolation;
    const std::string worst = "C" + std::to_string(iso.worst_pair.first) + "_C" + std::to_string(iso.worst_pair.second);
    rep << pl.from.label() << " -> " << pl.to.label() << (pl.identity ? " (no change)" : "") << ": pump "
        << fixed(pl.new_setting.pump_wavelength_nm, 4) << " nm, crystal " << fixed(pl.new_setting.crystal_temperature_c, 3)
        << " C, centre " << fixed(pl.expected_midpoint_nm, 3) << " nm\n";
    rep << "  forecast V_rect " << fixed(pl.visibility_rectilinear, 4) << ", V_diag "
        << fixed(pl.visibility_diagonal, 4) << ", settle " << fixed(pl.settling_time_s, 1) << " s\n";
    rep << "  isolation: worst " << worst << " at " << sci(iso.max_leak_ratio, 3) << " of intended (threshold "
        << sci(iso.threshold, 1) << "), same-channel " << sci(iso.max_diagonal_ratio, 3) << ": "
        << (iso.passes ? "PASS" : "FAIL") << (iso.degraded ? ", intended pair degraded" : "") << "\n";
    table << pl.from.label() << ',' << pl.to.label() << ',' << csv::format_number(pl.new_setting.pump_wavelength_nm)
          << ',' << csv::format_number(pl.new_setting.crystal_temperature_c) << ','
          << csv::format_number(pl.expected_midpoint_nm) << ',' << csv::format_number(pl.visibility_rectilinear) << ','
          << csv::format_number(pl.visibility_diagonal) << ',' << csv::format_number(iso.max_leak_ratio) << ','
          << worst << ',' << (iso.passes ? 1 : 0) << '\n';
    from = t;
  }
  out.report = rep.str();
  out.files.emplace_back("switch.csv", table.str());
  return out;
}

inline std::string write_matrix(const CrosstalkMatrix& m) {
  std::ostringstream os;
  os << "channel";
  for (int i : m.indices()) os << ',' << i;
  os << '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    os << m.indices()[i];
    for (std::size_t j = 0; j < m.size(); ++j) os << ',' << csv::format_number(m.at(i, j));
    os << '\n';
  }
  return os.str();
}

/// Pair weights over every channel combination at the configured operating
/// point; `emission_fwhm_ghz` overrides the source bandwidth.
inline CommandOutput cmd_crosstalk(Scenario sc, std::optional<double> emission_fwhm_ghz = std::nullopt) {
  if (emission_fwhm_ghz) {
    sc.source.spec.emission_fwhm_ghz = *emission_fwhm_ghz;
    validate(sc.source.spec);
  }
  const auto bank = effective_bank(sc);
  const auto& target = sc.tuning.target;
  const auto setting = sc.tuning.setting.value_or(settings_for_pair(target, bank, sc.source.spec));
  const auto iso = verify_isolation(setting, target, bank, sc.source.spec, sc.tuning.isolation_threshold,
                                    sc.tuning.degraded_fraction);
  CommandOutput out;
  std::ostringstream rep;
  rep << "crosstalk for " << target.label() << " at pump " << fixed(setting.pump_wavelength_nm, 4) << " nm, crystal "
      << fixed(setting.crystal_temperature_c, 3) << " C, emission FWHM " << fixed(sc.source.spec.emission_fwhm_ghz, 1)
      << " GHz\n";
  rep << "intended weight " << sci(iso.intended_weight, 4) << ", worst other pair C" << iso.worst_pair.first << "_C"
      << iso.worst_pair.second << " at " << sci(iso.max_leak_ratio, 3) << " of intended, same-channel "
      << sci(iso.max_diagonal_ratio, 3) << "\n";
  rep << "isolation " << (iso.passes ? "PASS" : "FAIL") << " (threshold " << sci(iso.threshold, 1) << ")\n";
  out.report = rep.str();
  out.files.emplace_back("crosstalk.csv", write_matrix(iso.matrix));
  return out;
}

struct RateReport {
  double estimated_brightness = 0.0;       // from the quoted detected rate
  double simulated_detected_rate = 0.0;    // coincidences minus accidentals, no analyzers
  double simulated_brightness = 0.0;       // the simulated rate pushed back through the estimate
  double singles_1 = 0.0;
  double dark_singles_1 = 0.0;
  double coincidences_open = 0.0;          // expected, analyzers removed
  double matched_rectilinear = 0.0;        // expected, analyzers at the fringe maximum
  double matched_diagonal = 0.0;
  double fringe_average = 0.0;             // expected, averaged over the rectilinear fringe
  double accidentals = 0.0;                // expected, analyzers in place
  double multi_pair_probability = 0.0;     // >= 2 pairs inside one detector-1 gate
  double duty = 0.0;
};

inline RateReport rate_report(const Scenario& sc, const CommandOptions& opts = {}) {
  const auto p = prepare(sc, sc.tuning.target);
  RateReport r;
  r.duty = duty_cycle(sc.trigger);
  r.estimated_brightness = estimate_generation_rate(sc.rate.quoted_detected_rate, sc.losses, sc.trigger.efficiency,
                                                    sc.partner.efficiency, sc.rate.quoted_duty_cycle,
                                                    sc.tuning.pump_power_mw, sc.tuning.accepted_bandwidth_nm);
  const auto open = expected_rates(p.state, p.run, std::nullopt);
  r.singles_1 = open.singles_1;
  r.dark_singles_1 = open.dark_singles_1;
  r.coincidences_open = open.coincidences;

  const auto t = measure(p, sc.rate.duration_s, {std::nullopt}, opts);
  const auto& e = t.entries.front();
  r.simulated_detected_rate = (e.coincidences - e.accidentals_estimate) / e.duration_s;
  r.simulated_brightness = estimate_generation_rate(r.simulated_detected_rate, sc.losses, sc.trigger.efficiency,
                                                    sc.partner.efficiency, r.duty, sc.tuning.pump_power_mw,
                                                    sc.tuning.accepted_bandwidth_nm);

  r.matched_rectilinear = expected_rates(p.state, p.run, AnalyzerSetting{0.0, 90.0}).coincidences;
  r.matched_diagonal = expected_rates(p.state, p.run, AnalyzerSetting{45.0, 45.0}).coincidences;
  r.accidentals = expected_rates(p.state, p.run, AnalyzerSetting{0.0, 90.0}).accidentals;
  double sum = 0.0;
  constexpr int kSteps = 360;
  for (int i = 0; i < kSteps; ++i)
    sum += expected_rates(p.state, p.run, AnalyzerSetting{0.0, 180.0 * i / kSteps}).coincidences;
  r.fringe_average = sum / kSteps;
  const double mu = p.run.pair_rate * sc.trigger.gate_width_ns * 1e-9;
  r.multi_pair_probability = -std::expm1(-mu) - mu * std::exp(-mu);
  return r;
}

inline CommandOutput cmd_rate(const Scenario& sc, const CommandOptions& opts = {}) {
  const auto r = rate_report(sc, opts);
  CommandOutput out;
  std::ostringstream rep, table;
  rep << "rate (" << (opts.analytic ? "analytic" : "monte carlo") << ", " << fixed(sc.rate.duration_s, 1) << " s)\n";
  rep << "generation rate from " << fixed(sc.rate.quoted_detected_rate, 2) << " /s at duty "
      << fixed(sc.rate.quoted_duty_cycle, 4) << ": " << sci(r.estimated_brightness, 4) << " pairs/(s mW nm)\n";
  rep << "simulated net coincidences " << fixed(r.simulated_detected_rate, 3) << " /s at duty " << fixed(r.duty, 4)
      << " -> " << sci(r.simulated_brightness, 4) << " pairs/(s mW nm)\n";
  rep << "detector 1 singles " << fixed(r.singles_1, 1) << " /s (dark " << fixed(r.dark_singles_1, 1) << " /s)\n";
  rep << "coincidences without analyzers " << fixed(r.coincidences_open, 3) << " /s\n";
  rep << "matched analyzers: rectilinear " << fixed(r.matched_rectilinear, 3) << " /s, diagonal "
      << fixed(r.matched_diagonal, 3) << " /s, mean " << fixed(0.5 * (r.matched_rectilinear + r.matched_diagonal), 3)
      << " /s\n";
  rep << "fringe average " << fixed(r.fringe_average, 3) << " /s, accidentals " << fixed(r.accidentals, 4) << " /s\n";
  rep << "multi-pair probability per gate " << sci(r.multi_pair_probability, 3) << "\n";

  table << "quantity,value\n";
  const std::pair<const char*, double> rows[] = {
      {"estimated_brightness", r.estimated_brightness},
      {"simulated_detected_rate", r.simulated_detected_rate},
      {"simulated_brightness", r.simulated_brightness},
      {"singles_1", r.singles_1},
      {"dark_singles_1", r.dark_singles_1},
      {"coincidences_open", r.coincidences_open},
      {"matched_rectilinear", r.matched_rectilinear},
      {"matched_diagonal", r.matched_diagonal},
      {"fringe_average", r.fringe_average},
      {"accidentals", r.accidentals},
      {"multi_pair_probability", r.multi_pair_probability},
      {"duty_cycle", r.duty},
  };
  for (const auto& [k, v] : rows) table << k << ',' << csv::format_number(v) << '\n';
  out.report = rep.str();
  out.files.emplace_back("rate.csv", table.str());
  return out;
}

inline CommandOutput cmd_calibrate(const Scenario& sc) {
  const auto& spec = sc.source.spec;
  const auto& cal = spec.calibration;
  const auto bank = effective_bank(sc);
  CommandOutput out;
  std::ostringstream rep, pairs;
  rep << "tuning calibration over " << sc.source.calibration_table.size() << " points: T = "
      << fixed(cal.slope_c_per_nm, 6) << " * lambda + " << fixed(cal.intercept_c, 4) << " C\n";
  for (const auto& pt : sc.source.calibration_table)
    rep << "  " << fixed(pt.wavelength_nm, 2) << " nm: measured " << fixed(pt.temperature_c, 2) << " C, fit "
        << fixed(cal(pt.wavelength_nm), 3) << " C, residual " << fixed(pt.temperature_c - cal(pt.wavelength_nm), 4)
        << "\n";
  rep << "max residual " << fixed(cal.max_residual_c, 4) << " C\n";
  pairs << "pair,midpoint_nm,pump_nm,temperature_c,pair_delay_ns\n";
  for (const auto& t : adjacent_pairs(bank)) {
    const auto s = settings_for_pair(t, bank, spec);
    const double mid = pair_midpoint(bank.channel(t.trigger), bank.channel(t.partner));
    rep << t.label() << ": centre " << fixed(mid, 3) << " nm, pump " << fixed(s.pump_wavelength_nm, 4)
        << " nm, crystal " << fixed(s.crystal_temperature_c, 3) << " C, delay "
        << fixed(bank.pair_delay_ns(t.trigger, t.partner), 2) << " ns\n";
    pairs << t.label() << ',' << csv::format_number(mid) << ',' << csv::format_number(s.pump_wavelength_nm) << ','
          << csv::format_number(s.crystal_temperature_c) << ','
          << csv::format_number(bank.pair_delay_ns(t.trigger, t.partner)) << '\n';
  }
  out.report = rep.str();
  out.files.emplace_back("calibration.csv", csv::write_calibration(sc.source.calibration_table));
  out.files.emplace_back("channels.csv", csv::write_channels(bank.channels));
  out.files.emplace_back("pair_settings.csv", pairs.str());
  return out;
}

}  // namespace qdwdm
