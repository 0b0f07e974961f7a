#pragma once

#include <cmath>
#include <numbers>

namespace qdwdm {

/// Speed of light in nm * THz, so that nu[THz] = kLightSpeed / lambda[nm].
inline constexpr double kLightSpeed = 299792.458;

inline double wavelength_to_thz(double wavelength_nm) { return kLightSpeed / wavelength_nm; }
inline double thz_to_wavelength(double frequency_thz) { return kLightSpeed / frequency_thz; }

/// Bandwidth conversion around a carrier: d nu = c d lambda / lambda^2.
inline double nm_to_ghz_width(double width_nm, double carrier_nm) {
  return 1000.0 * kLightSpeed * width_nm / (carrier_nm * carrier_nm);
}
inline double ghz_to_nm_width(double width_ghz, double carrier_nm) {
  return width_ghz * carrier_nm * carrier_nm / (1000.0 * kLightSpeed);
}

/// Loss in dB to power transmittance.
inline double db_to_transmittance(double loss_db) { return std::pow(10.0, -loss_db / 10.0); }

inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace qdwdm
