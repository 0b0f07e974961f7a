#pragma once

// Estimators over coincidence counts: polarization correlation E, CHSH S,
// fringe visibility and back-inference of the pair generation rate.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <sstream>
#include <utility>
#include <vector>

#include "qdwdm/detection.hpp"
#include "qdwdm/errors.hpp"
#include "qdwdm/polarization_state.hpp"

namespace qdwdm {

struct Correlation {
  double value = 0.0;
  double sigma = 0.0;
};

/// E = (C++ + C-- - C+- - C-+) / sum, with first-order Poisson propagation:
/// var E = 4 A B / N^3 for A = C++ + C--, B = C+- + C-+.
inline Correlation correlation_E(double c_pp, double c_mm, double c_pm, double c_mp) {
  if (c_pp < 0 || c_mm < 0 || c_pm < 0 || c_mp < 0) throw DomainError("counts must be non-negative");
  const double a = c_pp + c_mm, b = c_pm + c_mp, n = a + b;
  if (!(n > 0.0)) throw IncompleteDataError("correlation undefined: no coincidences");
  return {(a - b) / n, std::sqrt(4.0 * a * b / (n * n * n))};
}

/// Coincidence counts keyed by analyzer angles modulo 180 degrees.
class CountTable {
 public:
  void add(const AnalyzerSetting& s, double count) { counts_[key(s)] += count; }

  bool contains(const AnalyzerSetting& s) const { return counts_.count(key(s)) != 0; }

  double at(const AnalyzerSetting& s) const {
    const auto it = counts_.find(key(s));
    if (it == counts_.end()) {
      std::ostringstream msg;
      msg << "no counts for analyzer setting (" << s.theta1_deg << ", " << s.theta2_deg << ")";
      throw IncompleteDataError(msg.str());
    }
    return it->second;
  }

  std::size_t size() const { return counts_.size(); }

  static CountTable from_tally(const Tally& tally) {
    CountTable t;
    for (const auto& e : tally.entries)
      if (e.setting) t.add(*e.setting, e.coincidences);
    return t;
  }

 private:
  using Key = std::pair<std::int64_t, std::int64_t>;

  static std::int64_t norm(double deg) {
    double r = std::fmod(deg, 180.0);
    if (r < 0) r += 180.0;
    auto k = static_cast<std::int64_t>(std::llround(r * 1e6));
    return k == 180'000'000 ? 0 : k;
  }
  static Key key(const AnalyzerSetting& s) { return {norm(s.theta1_deg), norm(s.theta2_deg)}; }

  std::map<Key, double> counts_;
};

struct ChshSettings {
  double theta1_deg = -22.5;
  double theta1_prime_deg = 22.5;
  double theta2_deg = -45.0;
  double theta2_prime_deg = 0.0;

  static double perpendicular(double deg) { return deg + 90.0; }

  /// The four (signal, idler) pairs in the order E(t1,t2), E(t1',t2), E(t1,t2'), E(t1',t2').
  std::array<std::pair<double, double>, 4> terms() const {
    return {{{theta1_deg, theta2_deg},
             {theta1_prime_deg, theta2_deg},
             {theta1_deg, theta2_prime_deg},
             {theta1_prime_deg, theta2_prime_deg}}};
  }

  /// Every analyzer combination the estimator reads (16).
  std::vector<AnalyzerSetting> schedule() const {
    std::vector<AnalyzerSetting> out;
    for (const auto& [a, b] : terms())
      for (double t1 : {a, perpendicular(a)})
        for (double t2 : {b, perpendicular(b)}) out.push_back({t1, t2});
    return out;
  }

  bool operator==(const ChshSettings&) const = default;
};

enum class SignConvention {
  printed_all_plus,  // E1 + E2 + E3 + E4
  tsirelson,         // E1 - E2 - E3 - E4: reaches 2 sqrt 2 on the ideal state at the default angles
};

inline std::array<int, 4> signs(SignConvention c) {
  if (c == SignConvention::printed_all_plus) return {1, 1, 1, 1};
  return {1, -1, -1, -1};
}

struct ChshTerm {
  double theta1_deg = 0.0;
  double theta2_deg = 0.0;
  int sign = 1;
  Correlation e;
};

struct ChshResult {
  double s = 0.0;
  double sigma = 0.0;
  std::array<ChshTerm, 4> terms{};
  SignConvention convention = SignConvention::tsirelson;
};

inline ChshResult chsh_S(const CountTable& counts, const ChshSettings& settings,
                         SignConvention convention = SignConvention::tsirelson) {
  ChshResult r;
  r.convention = convention;
  const auto sg = signs(convention);
  const auto pairs = settings.terms();
  double var = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    const auto [a, b] = pairs[k];
    const double ap = ChshSettings::perpendicular(a), bp = ChshSettings::perpendicular(b);
    const auto e = correlation_E(counts.at({a, b}), counts.at({ap, bp}), counts.at({a, bp}), counts.at({ap, b}));
    r.terms[k] = {a, b, sg[k], e};
    r.s += sg[k] * e.value;
    var += e.sigma * e.sigma;
  }
  r.sigma = std::sqrt(var);
  return r;
}

struct CurvePoint {
  double angle_deg = 0.0;  // analysis angle
  double count = 0.0;
};

struct VisibilityFit {
  double visibility = 0.0;
  double sigma = 0.0;
  double offset = 0.0;     // mean level after floor subtraction
  double amplitude = 0.0;  // half peak-to-peak
  double phase_deg = 0.0;  // angle of maximum
  double reduced_chi2 = 0.0;
  std::size_t points = 0;
};

/// Weighted linear least squares of count = B + a cos 2t + b sin 2t
/// (equivalently A (1 - V cos 2(t - t0)) + floor); V = sqrt(a^2 + b^2) / (B - floor).
/// Poisson weights 1 / max(count, 1); sigma from the parameter covariance.
inline VisibilityFit visibility_from_curve(std::span<const CurvePoint> curve, double floor = 0.0) {
  if (curve.size() < 8) throw FitError("visibility fit needs at least 8 points, got " + std::to_string(curve.size()));
  double lo = curve.front().angle_deg, hi = lo;
  for (const auto& p : curve) {
    lo = std::min(lo, p.angle_deg);
    hi = std::max(hi, p.angle_deg);
    if (p.count < 0) throw FitError("negative count in curve");
  }
  if (hi - lo < 180.0 - 1e-9) {
    std::ostringstream msg;
    msg << "curve spans " << hi - lo << " deg of analysis angle; a full fringe needs >= 180";
    throw FitError(msg.str());
  }

  Eigen::Matrix3d normal = Eigen::Matrix3d::Zero();
  Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
  for (const auto& p : curve) {
    const double t = deg_to_rad(2.0 * p.angle_deg);
    const Eigen::Vector3d x(1.0, std::cos(t), std::sin(t));
    const double w = 1.0 / std::max(p.count, 1.0);
    normal += w * x * x.transpose();
    rhs += w * (p.count - floor) * x;
  }
  const Eigen::FullPivLU<Eigen::Matrix3d> lu(normal);
  if (lu.rank() < 3) throw FitError("fringe fit is singular: angles do not constrain the sinusoid");
  const Eigen::Vector3d beta = lu.solve(rhs);
  const Eigen::Matrix3d cov = lu.inverse();

  VisibilityFit fit;
  fit.points = curve.size();
  fit.offset = beta(0);
  if (!(fit.offset > 0.0)) {
    std::ostringstream msg;
    msg << "fringe fit has non-positive mean level " << fit.offset << " (floor " << floor << ")";
    throw FitError(msg.str());
  }
  const double a = beta(1), b = beta(2);
  const double r = std::hypot(a, b);
  fit.amplitude = r;
  fit.visibility = r / fit.offset;
  fit.phase_deg = 0.5 * std::atan2(b, a) * 180.0 / std::numbers::pi;

  Eigen::Vector3d grad;
  if (r > 0.0) grad << -r / (fit.offset * fit.offset), a / (r * fit.offset), b / (r * fit.offset);
  else grad << 0.0, 1.0 / fit.offset, 0.0;
  fit.sigma = std::sqrt(std::max(0.0, grad.dot(cov * grad)));
  if (r == 0.0) fit.sigma = std::sqrt(std::max(0.0, cov(1, 1) + cov(2, 2))) / fit.offset;

  double chi2 = 0.0;
  for (const auto& p : curve) {
    const double t = deg_to_rad(2.0 * p.angle_deg);
    const double model = beta(0) + a * std::cos(t) + b * std::sin(t) + floor;
    chi2 += (p.count - model) * (p.count - model) / std::max(p.count, 1.0);
  }
  fit.reduced_chi2 = curve.size() > 3 ? chi2 / static_cast<double>(curve.size() - 3) : 0.0;
  return fit;
}

/// Pair generation rate per mW per nm implied by a detected coincidence rate:
/// R_detected / (alpha_s alpha_i eta1 eta2 d) / (power * bandwidth).
inline double estimate_generation_rate(double detected_rate, const LossBudget& budget, double eta1, double eta2,
                                       double duty, double pump_power_mw, double bandwidth_nm) {
  const double alpha_s = arm_transmittance(budget, Arm::signal);
  const double alpha_i = arm_transmittance(budget, Arm::idler);
  const double denom = alpha_s * alpha_i * eta1 * eta2 * duty * pump_power_mw * bandwidth_nm;
  if (!(eta1 > 0 && eta2 > 0 && duty > 0 && pump_power_mw > 0 && bandwidth_nm > 0 && denom > 0))
    throw DomainError("generation-rate estimate needs strictly positive efficiencies, duty cycle, power and bandwidth");
  return detected_rate / denom;
}

}  // namespace qdwdm
