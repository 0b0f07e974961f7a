#pragma once

// Type-II SPDC emission model: tuning, joint spectral density and
// absolute pair generation rate.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <sstream>
#include <vector>

#include "qdwdm/errors.hpp"
#include "qdwdm/reference.hpp"
#include "qdwdm/units.hpp"

namespace qdwdm {

struct TuningSetting {
  double pump_wavelength_nm = 780.25;
  double crystal_temperature_c = 23.40;

  bool operator==(const TuningSetting&) const = default;
};

struct TuningLimits {
  double pump_min_nm = 756.0;
  double pump_max_nm = 870.0;
  double temperature_min_c = 15.0;
  double temperature_max_c = 45.0;

  bool operator==(const TuningLimits&) const = default;
};

inline void validate(const TuningSetting& setting, const TuningLimits& limits = {}) {
  if (!(setting.pump_wavelength_nm >= limits.pump_min_nm &&
        setting.pump_wavelength_nm <= limits.pump_max_nm)) {
    std::ostringstream msg;
    msg << "pump wavelength " << setting.pump_wavelength_nm << " nm outside ["
        << limits.pump_min_nm << ", " << limits.pump_max_nm << "] nm";
    throw RangeError(msg.str());
  }
  if (!(setting.crystal_temperature_c >= limits.temperature_min_c &&
        setting.crystal_temperature_c <= limits.temperature_max_c)) {
    std::ostringstream msg;
    msg << "crystal temperature " << setting.crystal_temperature_c << " C outside ["
        << limits.temperature_min_c << ", " << limits.temperature_max_c << "] C";
    throw RangeError(msg.str());
  }
}

struct CalibrationPoint {
  double wavelength_nm = 0.0;
  double temperature_c = 0.0;

  bool operator==(const CalibrationPoint&) const = default;
};

/// Linear map from emission centre wavelength to phase-matching temperature.
struct TuningCalibration {
  double slope_c_per_nm = 0.0;
  double intercept_c = 0.0;
  double min_wavelength_nm = 0.0;
  double max_wavelength_nm = 0.0;
  double max_residual_c = 0.0;
  double extrapolation_margin_nm = 1.0;

  double operator()(double wavelength_nm) const { return slope_c_per_nm * wavelength_nm + intercept_c; }
  bool operator==(const TuningCalibration&) const = default;
};

/// Ordinary least squares T = slope * lambda + intercept. The maximum absolute
/// residual over the input points is part of the result.
inline TuningCalibration calibrate_tuning(std::span<const CalibrationPoint> table) {
  if (table.size() < 2) throw FitError("calibration needs at least two points");
  const double n = static_cast<double>(table.size());
  double mean_x = 0.0, mean_y = 0.0;
  for (const auto& p : table) {
    mean_x += p.wavelength_nm;
    mean_y += p.temperature_c;
  }
  mean_x /= n;
  mean_y /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& p : table) {
    sxx += (p.wavelength_nm - mean_x) * (p.wavelength_nm - mean_x);
    sxy += (p.wavelength_nm - mean_x) * (p.temperature_c - mean_y);
  }
  // Relative test so that a table with one repeated wavelength is caught even
  // at 1e3 nm magnitudes.
  if (!(sxx > 1e-18 * std::max(1.0, mean_x * mean_x) * n))
    throw FitError("calibration wavelengths are all identical; slope undetermined");

  TuningCalibration cal;
  cal.slope_c_per_nm = sxy / sxx;
  cal.intercept_c = mean_y - cal.slope_c_per_nm * mean_x;
  cal.min_wavelength_nm = table.front().wavelength_nm;
  cal.max_wavelength_nm = table.front().wavelength_nm;
  for (const auto& p : table) {
    cal.min_wavelength_nm = std::min(cal.min_wavelength_nm, p.wavelength_nm);
    cal.max_wavelength_nm = std::max(cal.max_wavelength_nm, p.wavelength_nm);
    cal.max_residual_c = std::max(cal.max_residual_c, std::abs(p.temperature_c - cal(p.wavelength_nm)));
  }
  if (!std::isfinite(cal.slope_c_per_nm) || !std::isfinite(cal.max_residual_c))
    throw FitError("calibration fit produced non-finite coefficients");
  return cal;
}

inline std::vector<CalibrationPoint> reference_calibration_table() {
  std::vector<CalibrationPoint> table;
  for (const auto& row : reference::kChannelPairs)
    table.push_back({row.center_wavelength_nm, row.temperature_c});
  return table;
}

enum class Lineshape { gaussian, sinc2 };

struct SourceSpec {
  double emission_fwhm_ghz = reference::kEmissionBandwidthGhz;
  Lineshape lineshape = Lineshape::gaussian;
  double brightness = reference::kBrightness;  // pairs / (s mW nm)
  // H/V centre split per degree of phase-matching error. Not calibrated
  // against measurement.
  double split_ghz_per_c = 20.0;
  TuningCalibration calibration = calibrate_tuning(reference_calibration_table());
  TuningLimits limits;
  std::size_t grid_points = 1024;
  double grid_half_width_fwhm = 3.0;

  bool operator==(const SourceSpec&) const = default;
};

inline void validate(const SourceSpec& spec) {
  if (!(spec.emission_fwhm_ghz > 0.0)) throw DomainError("emission FWHM must be positive");
  if (!(spec.brightness > 0.0)) throw DomainError("brightness must be positive");
  if (!(spec.calibration.slope_c_per_nm < 0.0))
    throw DomainError("tuning calibration must decrease with wavelength");
  if (spec.grid_points < 256) throw DomainError("spectral grid needs at least 256 points");
  if (!(spec.grid_half_width_fwhm >= 3.0))
    throw DomainError("spectral grid half-width must be at least 3 FWHM");
}

/// Degenerate emission centre: 1/lp = 1/ls + 1/li with ls = li gives 2 lp.
inline double center_wavelength(const TuningSetting& setting, const TuningLimits& limits = {}) {
  if (!(setting.pump_wavelength_nm >= limits.pump_min_nm &&
        setting.pump_wavelength_nm <= limits.pump_max_nm)) {
    std::ostringstream msg;
    msg << "pump wavelength " << setting.pump_wavelength_nm << " nm outside laser range";
    throw RangeError(msg.str());
  }
  return 2.0 * setting.pump_wavelength_nm;
}

inline double phase_matching_temperature(double center_nm, const SourceSpec& spec) {
  const auto& cal = spec.calibration;
  if (center_nm < cal.min_wavelength_nm - cal.extrapolation_margin_nm ||
      center_nm > cal.max_wavelength_nm + cal.extrapolation_margin_nm || !std::isfinite(center_nm)) {
    std::ostringstream msg;
    msg << "centre wavelength " << center_nm << " nm beyond calibrated range ["
        << cal.min_wavelength_nm << ", " << cal.max_wavelength_nm << "] +/- "
        << cal.extrapolation_margin_nm << " nm";
    throw RangeError(msg.str());
  }
  return cal(center_nm);
}

/// Lineshape normalized to 1 at zero detuning and 1/2 at +/- fwhm/2.
inline double lineshape_value(Lineshape shape, double detuning_ghz, double fwhm_ghz) {
  switch (shape) {
    case Lineshape::gaussian: {
      const double x = detuning_ghz / fwhm_ghz;
      return std::exp(-4.0 * std::numbers::ln2 * x * x);
    }
    case Lineshape::sinc2: {
      // sin(u)/u = 1/sqrt(2) at u = 1.39155737...
      constexpr double kHalfPowerArg = 1.3915573782515103;
      const double u = 2.0 * kHalfPowerArg * detuning_ghz / fwhm_ghz;
      if (std::abs(u) < 1e-8) return 1.0;
      const double s = std::sin(u) / u;
      return s * s;
    }
  }
  return 0.0;
}

/// Discretized pair density g(delta) over detuning from the degenerate centre
/// frequency. A pair has one photon at nu0 + delta and its partner at
/// nu0 - delta. The H-polarized photon's marginal is g shifted by h_offset,
/// the V marginal by v_offset.
class SpectralAmplitude {
 public:
  SpectralAmplitude(double center_frequency_thz, double half_width_ghz, std::vector<double> values,
                    double h_offset_ghz = 0.0, double v_offset_ghz = 0.0)
      : center_thz_(center_frequency_thz),
        half_width_ghz_(half_width_ghz),
        values_(std::move(values)),
        h_offset_ghz_(h_offset_ghz),
        v_offset_ghz_(v_offset_ghz) {
    if (values_.size() < 2) throw DomainError("spectral grid needs at least two samples");
    if (!(half_width_ghz_ > 0.0)) throw DomainError("spectral grid half-width must be positive");
    step_ghz_ = 2.0 * half_width_ghz_ / static_cast<double>(values_.size() - 1);
    for (double v : values_)
      if (!(v >= 0.0)) throw DomainError("spectral density must be non-negative");
    const double area = trapezoid();
    if (area > 0.0)
      for (double& v : values_) v /= area;
  }

  double center_frequency_thz() const { return center_thz_; }
  double center_wavelength_nm() const { return thz_to_wavelength(center_thz_); }
  double half_width_ghz() const { return half_width_ghz_; }
  double step_ghz() const { return step_ghz_; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double h_offset_ghz() const { return h_offset_ghz_; }
  double v_offset_ghz() const { return v_offset_ghz_; }

  double detuning_ghz(std::size_t i) const {
    return -half_width_ghz_ + static_cast<double>(i) * step_ghz_;
  }

  /// Linear interpolation of g; zero outside the grid.
  double density_at(double detuning_ghz) const {
    const double pos = (detuning_ghz + half_width_ghz_) / step_ghz_;
    if (!(pos >= 0.0) || pos > static_cast<double>(values_.size() - 1)) return 0.0;
    const auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= values_.size()) return values_.back();
    const double f = pos - static_cast<double>(i);
    return values_[i] * (1.0 - f) + values_[i + 1] * f;
  }

  double h_marginal(double detuning_ghz) const { return density_at(detuning_ghz - h_offset_ghz_); }
  double v_marginal(double detuning_ghz) const { return density_at(detuning_ghz - v_offset_ghz_); }

  double integral() const { return trapezoid(); }

  /// Full width at half maximum measured on the interpolated samples.
  double fwhm_ghz() const {
    const auto peak_it = std::max_element(values_.begin(), values_.end());
    if (peak_it == values_.end() || *peak_it <= 0.0) return 0.0;
    const double half = *peak_it / 2.0;
    const auto peak = static_cast<std::size_t>(peak_it - values_.begin());
    auto crossing = [&](std::size_t inner, std::size_t outer) {
      const double f = (values_[inner] - half) / (values_[inner] - values_[outer]);
      return detuning_ghz(inner) + f * (detuning_ghz(outer) - detuning_ghz(inner));
    };
    std::size_t right = peak;
    while (right + 1 < values_.size() && values_[right + 1] > half) ++right;
    std::size_t left = peak;
    while (left > 0 && values_[left - 1] > half) --left;
    if (right + 1 >= values_.size() || left == 0) return 2.0 * half_width_ghz_;
    return crossing(right, right + 1) - crossing(left, left - 1);
  }

 private:
  double trapezoid() const {
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < values_.size(); ++i) sum += values_[i] + values_[i + 1];
    return 0.5 * step_ghz_ * sum;
  }

  double center_thz_;
  double half_width_ghz_;
  std::vector<double> values_;
  double h_offset_ghz_;
  double v_offset_ghz_;
  double step_ghz_ = 0.0;
};

/// Sampled lineshape around an arbitrary centre, with explicit H/V offsets.
inline SpectralAmplitude make_spectrum(double center_frequency_thz, const SourceSpec& spec,
                                       double h_offset_ghz = 0.0, double v_offset_ghz = 0.0) {
  validate(spec);
  const double half_width = spec.grid_half_width_fwhm * spec.emission_fwhm_ghz;
  const double step = 2.0 * half_width / static_cast<double>(spec.grid_points - 1);
  std::vector<double> values(spec.grid_points);
  for (std::size_t i = 0; i < values.size(); ++i)
    values[i] = lineshape_value(spec.lineshape, -half_width + static_cast<double>(i) * step,
                                spec.emission_fwhm_ghz);
  return SpectralAmplitude(center_frequency_thz, half_width, std::move(values), h_offset_ghz,
                           v_offset_ghz);
}

inline SpectralAmplitude joint_spectrum(const TuningSetting& setting, const SourceSpec& spec) {
  validate(setting, spec.limits);
  const double center = center_wavelength(setting, spec.limits);
  const double t_pm = phase_matching_temperature(center, spec);
  const double split = spec.split_ghz_per_c * (setting.crystal_temperature_c - t_pm) / 2.0;
  return make_spectrum(wavelength_to_thz(center), spec, split, -split);
}

/// Pairs per second from brightness [pairs/(s mW nm)].
inline double pair_rate(const SourceSpec& spec, double pump_power_mw, double accepted_bandwidth_nm) {
  if (pump_power_mw < 0.0 || accepted_bandwidth_nm < 0.0)
    throw DomainError("pump power and accepted bandwidth must be non-negative");
  return spec.brightness * pump_power_mw * accepted_bandwidth_nm;
}

}  // namespace qdwdm
