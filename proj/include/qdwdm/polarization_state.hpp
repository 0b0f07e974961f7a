#pragma once

// Two-photon polarization state restricted to the {HV, VH} block and its
// projection onto a pair of linear analyzers.

#include <algorithm>
#include <cmath>

#include "qdwdm/dwdm.hpp"
#include "qdwdm/errors.hpp"
#include "qdwdm/units.hpp"

namespace qdwdm {

/// rho = p_hv |HV><HV| + p_vh |VH><VH| + coherence (e^{i phase} |VH><HV| + h.c.)
/// The first label is the signal (trigger) arm.
struct TwoPhotonState {
  double p_hv = 0.5;
  double p_vh = 0.5;
  double coherence = 0.5;
  double phase_rad = 0.0;

  double population() const { return p_hv + p_vh; }
  bool operator==(const TwoPhotonState&) const = default;
};

inline bool is_physical(const TwoPhotonState& s, double tol = 1e-12) {
  return s.p_hv >= 0.0 && s.p_vh >= 0.0 && s.p_hv + s.p_vh <= 1.0 + tol && s.coherence >= 0.0 &&
         s.coherence <= std::sqrt(s.p_hv * s.p_vh) + tol;
}

/// Polarization analysis angles in degrees (not wave-plate angles).
struct AnalyzerSetting {
  double theta1_deg = 0.0;
  double theta2_deg = 0.0;

  bool operator==(const AnalyzerSetting&) const = default;
};

/// A half-wave plate at angle a rotates linear polarization by 2a.
inline double hwp_to_analysis_deg(double hwp_deg) { return 2.0 * hwp_deg; }

inline TwoPhotonState build_state(const PairTransmittances& t, double phase_rad) {
  const double total = t.total();
  if (!(total > 0.0)) throw NoSignalError("no photon pairs reach the selected channel pair");
  const double bound = std::sqrt(t.t_hv * t.t_vh);
  if (t.overlap > bound * (1.0 + 1e-9) + 1e-300)
    throw DomainError("overlap exceeds sqrt(t_hv t_vh)");
  return {t.t_hv / total, t.t_vh / total, std::min(t.overlap, bound) / total, phase_rad};
}

inline TwoPhotonState compensate_phase(TwoPhotonState state) {
  state.phase_rad = 0.0;
  return state;
}

inline double coincidence_probability(const TwoPhotonState& s, const AnalyzerSetting& a) {
  const double t1 = deg_to_rad(a.theta1_deg), t2 = deg_to_rad(a.theta2_deg);
  const double c1 = std::cos(t1), s1 = std::sin(t1), c2 = std::cos(t2), s2 = std::sin(t2);
  return s.p_hv * c1 * c1 * s2 * s2 + s.p_vh * s1 * s1 * c2 * c2 +
         2.0 * s.coherence * std::cos(s.phase_rad) * c1 * s1 * c2 * s2;
}

/// Probability that the signal photon passes its analyzer, whatever the idler does.
inline double signal_marginal(const TwoPhotonState& s, double theta1_deg) {
  const double c = std::cos(deg_to_rad(theta1_deg)), sn = std::sin(deg_to_rad(theta1_deg));
  return s.p_hv * c * c + s.p_vh * sn * sn;
}

inline double idler_marginal(const TwoPhotonState& s, double theta2_deg) {
  const double c = std::cos(deg_to_rad(theta2_deg)), sn = std::sin(deg_to_rad(theta2_deg));
  return s.p_hv * sn * sn + s.p_vh * c * c;
}

enum class Basis { rectilinear, diagonal };

/// Fringe visibility with the signal analyzer at 0 (rectilinear) or 45 deg
/// (diagonal), idler swept.
inline double predicted_visibility(const TwoPhotonState& s, Basis basis) {
  const double n = s.population();
  if (!(n > 0.0)) throw NoSignalError("state has zero population");
  if (basis == Basis::rectilinear) return 1.0;
  return std::min(1.0, 2.0 * s.coherence * std::abs(std::cos(s.phase_rad)) / n);
}

}  // namespace qdwdm
