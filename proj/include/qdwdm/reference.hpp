#pragma once

#include <array>

namespace qdwdm::reference {

/// Measured operating points for the seven adjacent channel pairs. The
/// trigger channel is listed first and feeds detector 1.
struct PairRecord {
  int trigger_channel;
  int partner_channel;
  double center_wavelength_nm;
  double delay_ns;
  double singles_per_s;
  double temperature_c;
};

inline constexpr std::array<PairRecord, 7> kChannelPairs{{
    {22, 20, 1560.50, 804.4, 9000.0, 23.40},
    {22, 24, 1558.88, 794.8, 8000.0, 25.13},
    {26, 24, 1557.18, 804.2, 9000.0, 27.10},
    {26, 28, 1555.53, 794.5, 7500.0, 29.00},
    {30, 28, 1553.93, 804.2, 9000.0, 31.28},
    {30, 32, 1552.35, 793.9, 12000.0, 33.72},
    {34, 32, 1550.55, 804.2, 12000.0, 36.20},
}};

/// DWDM channel centres for channels 20, 22, ..., 34 (nm, +/- 0.15 nm).
inline constexpr std::array<double, 8> kChannelCenters{1561.25, 1559.75, 1558.00, 1556.35,
                                                       1554.7,  1553.15, 1551.55, 1549.95};
inline constexpr int kFirstChannel = 20;

// Source and link figures for the C22/C20 measurement.
inline constexpr double kPumpPowerMw = 204.0;
inline constexpr double kEmissionBandwidthNm = 2.0;
inline constexpr double kEmissionBandwidthGhz = 246.0;
inline constexpr double kBrightness = 7.4e3;  // pairs / (s mW nm)
inline constexpr double kDetectedCoincidences = 45.0;
inline constexpr double kAverageCoincidences = 34.0;
inline constexpr double kAccidentals = 0.4;
inline constexpr double kTriggerSingles = 9000.0;
inline constexpr double kTriggerDarkCounts = 400.0;
inline constexpr double kVisibilityRectilinear = 0.9605;
inline constexpr double kVisibilityRectilinearSigma = 0.0002;
inline constexpr double kVisibilityDiagonal = 0.9077;
inline constexpr double kVisibilityDiagonalSigma = 0.0007;
inline constexpr double kChshS = 2.63;
inline constexpr double kChshSigma = 0.08;
inline constexpr double kSignalLossDb = 7.97;
inline constexpr double kIdlerLossDb = 9.32;
inline constexpr double kQuotedDutyCycle = 0.066;

}  // namespace qdwdm::reference
