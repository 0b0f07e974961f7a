#pragma once

// Channel-pair switching: where to put the pump and the crystal oven so the
// emission centre sits on a chosen adjacent-pair midpoint, and whether the
// other pairs stay dark.

#include <algorithm>
#include <charconv>
#include <string>
#include <utility>
#include <vector>

#include "qdwdm/dwdm.hpp"
#include "qdwdm/errors.hpp"
#include "qdwdm/polarization_state.hpp"
#include "qdwdm/spdc_source.hpp"

namespace qdwdm {

/// The trigger channel feeds detector 1, the partner detector 2.
struct ChannelPairTarget {
  int trigger = 22;
  int partner = 20;

  std::string label() const { return "C" + std::to_string(trigger) + "_C" + std::to_string(partner); }

  /// Accepts "C22_C20", "22_20" or "22,20".
  static ChannelPairTarget parse(std::string_view text) {
    std::vector<int> nums;
    std::size_t i = 0;
    while (i < text.size()) {
      if (text[i] >= '0' && text[i] <= '9') {
        int v = 0;
        auto [ptr, ec] = std::from_chars(text.data() + i, text.data() + text.size(), v);
        if (ec != std::errc()) break;
        nums.push_back(v);
        i = static_cast<std::size_t>(ptr - text.data());
      } else if (text[i] == 'C' || text[i] == 'c' || text[i] == '_' || text[i] == ',' || text[i] == ' ') {
        ++i;
      } else {
        throw DomainError("cannot parse channel pair '" + std::string(text) + "'");
      }
    }
    if (nums.size() != 2) throw DomainError("cannot parse channel pair '" + std::string(text) + "'");
    return {nums[0], nums[1]};
  }

  bool operator==(const ChannelPairTarget&) const = default;
};

inline void require_adjacent(const ChannelPairTarget& target, const ChannelBank& bank) {
  if (!bank.contains(target.trigger) || !bank.contains(target.partner))
    throw AdjacencyError("channel pair " + target.label() + " references a channel outside the bank");
  if (!bank.adjacent(target.trigger, target.partner))
    throw AdjacencyError("channels " + std::to_string(target.trigger) + " and " + std::to_string(target.partner) +
                         " are not adjacent");
}

/// Every adjacent pair of the bank, trigger on the channel whose index is
/// 2 mod 4 (22, 26, 30, 34 on the default grid).
inline std::vector<ChannelPairTarget> adjacent_pairs(const ChannelBank& bank) {
  std::vector<ChannelPairTarget> out;
  for (std::size_t i = 0; i + 1 < bank.channels.size(); ++i) {
    const int a = bank.channels[i].index, b = bank.channels[i + 1].index;
    if ((a / 2) % 2 == 1) out.push_back({a, b});
    else out.push_back({b, a});
  }
  return out;
}

inline TuningSetting settings_for_pair(const ChannelPairTarget& target, const ChannelBank& bank,
                                       const SourceSpec& spec) {
  require_adjacent(target, bank);
  const double midpoint = pair_midpoint(bank.channel(target.trigger), bank.channel(target.partner));
  TuningSetting s{midpoint / 2.0, phase_matching_temperature(midpoint, spec)};
  validate(s, spec.limits);
  return s;
}

struct StateForecast {
  PairTransmittances transmittances;
  TwoPhotonState state;
  double visibility_rectilinear = 0.0;
  double visibility_diagonal = 0.0;
};

/// Spectral model -> state -> ideal-detector visibilities (phase compensated).
inline StateForecast forecast_state(const TuningSetting& setting, const ChannelPairTarget& target,
                                    const ChannelBank& bank, const SourceSpec& spec) {
  const auto spectrum = joint_spectrum(setting, spec);
  StateForecast f;
  f.transmittances = pair_transmittances(spectrum, bank.channel(target.trigger), bank.channel(target.partner), bank);
  f.state = compensate_phase(build_state(f.transmittances, 0.0));
  f.visibility_rectilinear = predicted_visibility(f.state, Basis::rectilinear);
  f.visibility_diagonal = predicted_visibility(f.state, Basis::diagonal);
  return f;
}

struct SwitchPlan {
  ChannelPairTarget from;
  ChannelPairTarget to;
  TuningSetting new_setting;
  double expected_midpoint_nm = 0.0;
  double visibility_rectilinear = 0.0;
  double visibility_diagonal = 0.0;
  double settling_time_s = 0.0;
  bool identity = false;
};

inline SwitchPlan switch_plan(const ChannelPairTarget& current, const ChannelPairTarget& target,
                              const ChannelBank& bank, const SourceSpec& spec, double settling_time_s = 0.0) {
  require_adjacent(current, bank);
  SwitchPlan plan;
  plan.from = current;
  plan.to = target;
  plan.new_setting = settings_for_pair(target, bank, spec);
  plan.expected_midpoint_nm = center_wavelength(plan.new_setting, spec.limits);
  const auto f = forecast_state(plan.new_setting, target, bank, spec);
  plan.visibility_rectilinear = f.visibility_rectilinear;
  plan.visibility_diagonal = f.visibility_diagonal;
  plan.identity = current == target;
  plan.settling_time_s = plan.identity ? 0.0 : settling_time_s;
  return plan;
}

struct IsolationReport {
  ChannelPairTarget intended;
  TuningSetting setting;
  CrosstalkMatrix matrix{{}};
  double intended_weight = 0.0;
  double reference_weight = 0.0;  // intended weight at the pair's own operating point
  double max_leak_ratio = 0.0;    // largest other-pair weight / intended weight
  std::pair<int, int> worst_pair{0, 0};
  double max_diagonal_ratio = 0.0;  // both photons in one channel
  double threshold = 1e-3;
  bool passes = false;
  bool degraded = false;  // intended weight below degraded_fraction of reference
};

inline IsolationReport verify_isolation(const TuningSetting& setting, const ChannelPairTarget& intended,
                                        const ChannelBank& bank, const SourceSpec& spec, double threshold = 1e-3,
                                        double degraded_fraction = 0.5) {
  require_adjacent(intended, bank);
  IsolationReport r;
  r.intended = intended;
  r.setting = setting;
  r.threshold = threshold;
  r.matrix = crosstalk_matrix(joint_spectrum(setting, spec), bank);
  r.intended_weight = r.matrix(intended.trigger, intended.partner);

  const auto reference_setting = settings_for_pair(intended, bank, spec);
  r.reference_weight = reference_setting == setting
                           ? r.intended_weight
                           : crosstalk_matrix(joint_spectrum(reference_setting, spec), bank)(intended.trigger,
                                                                                              intended.partner);

  const auto& idx = r.matrix.indices();
  double worst = 0.0, diag = 0.0;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    diag = std::max(diag, r.matrix.at(i, i));
    for (std::size_t j = i + 1; j < idx.size(); ++j) {
      const bool is_intended = (idx[i] == intended.trigger && idx[j] == intended.partner) ||
                               (idx[j] == intended.trigger && idx[i] == intended.partner);
      if (is_intended) continue;
      if (r.matrix.at(i, j) > worst) {
        worst = r.matrix.at(i, j);
        r.worst_pair = {idx[i], idx[j]};
      }
    }
  }
  r.max_leak_ratio = r.intended_weight > 0.0 ? worst / r.intended_weight : INFINITY;
  r.max_diagonal_ratio = r.intended_weight > 0.0 ? diag / r.intended_weight : INFINITY;
  r.passes = r.intended_weight > 0.0 && r.max_leak_ratio <= threshold;
  r.degraded = r.intended_weight < degraded_fraction * r.reference_weight;
  return r;
}

}  // namespace qdwdm
