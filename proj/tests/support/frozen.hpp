#pragma once

// Values produced by derive_constants.py (numpy / scipy), frozen.

namespace frozen {

inline constexpr double kSlope = -1.2945328225098678;
inline constexpr double kIntercept = 2043.1277630977354;
inline constexpr double kMaxResidual = 0.4431216989607947;

inline constexpr double kSingles = 10025.765385878605;
inline constexpr double kDarkSingles = 399.5410440282606;
inline constexpr double kCoincidencesOpen = 45.898433252305026;
inline constexpr double kEstimate = 7461.517623570375;

inline constexpr double kWeightC22C20 = 0.39068134951827416;
inline constexpr double kLeakC22C20 = 0.00011192780135418428;     // into C20_C24
inline constexpr double kWeightC22C24 = 0.34293709859142063;
inline constexpr double kLeakC22C24 = 0.03062423329068163;        // into C20_C26
inline constexpr double kLeakC22C24At500 = 0.38078505511360833;
inline constexpr double kWeightC34C32 = 0.36821748665784737;
inline constexpr double kLeakC34C32 = 0.0001131242233603394;      // into C30_C32

}  // namespace frozen
