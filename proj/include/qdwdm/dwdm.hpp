#pragma once

// 200-GHz DWDM model: flat-top channel passbands, insertion loss, path delay,
// and routing of a two-photon spectrum into channel pairs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <vector>

#include "qdwdm/errors.hpp"
#include "qdwdm/reference.hpp"
#include "qdwdm/spdc_source.hpp"
#include "qdwdm/units.hpp"

namespace qdwdm {

struct ChannelSpec {
  int index = 0;
  double center_wavelength_nm = 0.0;
  double passband_fwhm_ghz = 120.0;
  double insertion_loss_db = 0.76;
  double path_delay_ns = 0.0;

  double center_frequency_thz() const { return wavelength_to_thz(center_wavelength_nm); }
  bool operator==(const ChannelSpec&) const = default;
};

struct ChannelBank {
  std::vector<ChannelSpec> channels;  // ordered by index
  int shape_order = 4;                // super-Gaussian order
  double stopband_floor_db = -40.0;   // relative to the channel peak
  double base_delay_ns = 799.5;       // trigger-to-partner delay before path differences

  const ChannelSpec& channel(int index) const {
    for (const auto& ch : channels)
      if (ch.index == index) return ch;
    throw DomainError("channel " + std::to_string(index) + " not in bank");
  }

  bool contains(int index) const {
    return std::any_of(channels.begin(), channels.end(), [&](const auto& c) { return c.index == index; });
  }

  std::size_t position(int index) const {
    for (std::size_t i = 0; i < channels.size(); ++i)
      if (channels[i].index == index) return i;
    throw DomainError("channel " + std::to_string(index) + " not in bank");
  }

  /// Neighbours in the bank ordering (index step of 2 on the even grid).
  bool adjacent(int a, int b) const {
    if (!contains(a) || !contains(b)) return false;
    const auto pa = position(a), pb = position(b);
    return (pa > pb ? pa - pb : pb - pa) == 1;
  }

  /// Delay generator setting that aligns the partner gate with the trigger.
  double pair_delay_ns(int trigger, int partner) const {
    return base_delay_ns + channel(partner).path_delay_ns - channel(trigger).path_delay_ns;
  }

  bool operator==(const ChannelBank&) const = default;
};

/// Eight-channel bank with the measured centres. Path delays follow the
/// add-drop ladder: each later drop position is 4.85 ns shorter.
inline ChannelBank default_channel_bank() {
  ChannelBank bank;
  const auto n = reference::kChannelCenters.size();
  for (std::size_t i = 0; i < n; ++i) {
    ChannelSpec ch;
    ch.index = reference::kFirstChannel + 2 * static_cast<int>(i);
    ch.center_wavelength_nm = reference::kChannelCenters[i];
    ch.path_delay_ns = 4850.0 * static_cast<double>(n - 1 - i) / 1000.0;
    bank.channels.push_back(ch);
  }
  return bank;
}

inline void validate(const ChannelSpec& ch) {
  if (!(ch.center_wavelength_nm >= 1549.0 && ch.center_wavelength_nm <= 1562.0))
    throw RangeError("channel " + std::to_string(ch.index) + " centre outside 1549-1562 nm");
  if (!(ch.passband_fwhm_ghz > 0.0))
    throw DomainError("channel " + std::to_string(ch.index) + " passband must be positive");
  if (!(ch.insertion_loss_db >= 0.0))
    throw DomainError("channel " + std::to_string(ch.index) + " insertion loss must be >= 0");
}

inline void validate(const ChannelBank& bank) {
  if (bank.channels.empty()) throw DomainError("channel bank is empty");
  if (bank.shape_order < 1) throw DomainError("passband shape order must be >= 1");
  if (!(bank.stopband_floor_db <= 0.0)) throw DomainError("stopband floor must be <= 0 dB");
  for (std::size_t i = 0; i < bank.channels.size(); ++i) {
    validate(bank.channels[i]);
    if (i == 0) continue;
    const auto& prev = bank.channels[i - 1];
    const auto& cur = bank.channels[i];
    if (cur.index <= prev.index) throw DomainError("channels must be ordered by index");
    const double spacing = std::abs(cur.center_wavelength_nm - prev.center_wavelength_nm);
    if (spacing < 1.5 - 1e-9 || spacing > 1.8 + 1e-9) {
      std::ostringstream msg;
      msg << "channels " << prev.index << "/" << cur.index << " spaced " << spacing
          << " nm, expected 1.5-1.8 nm";
      throw DomainError(msg.str());
    }
  }
}

/// Offsets every centre by an independent uniform draw in +/- half_range_nm.
inline ChannelBank jitter_centers(ChannelBank bank, double half_range_nm, std::uint64_t seed) {
  if (half_range_nm <= 0.0) return bank;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> offset(-half_range_nm, half_range_nm);
  for (auto& ch : bank.channels) ch.center_wavelength_nm += offset(rng);
  return bank;
}

/// Power transmittance: super-Gaussian exp(-ln2 |2 d / fwhm|^(2 order)) scaled
/// by the insertion loss and floored at the stopband level.
inline double transmission(const ChannelSpec& channel, double frequency_thz, const ChannelBank& bank) {
  const double peak = db_to_transmittance(channel.insertion_loss_db);
  const double x = 2000.0 * (frequency_thz - channel.center_frequency_thz()) / channel.passband_fwhm_ghz;
  const double shape = std::exp(-std::numbers::ln2 * std::pow(std::abs(x), 2.0 * bank.shape_order));
  const double floor = std::pow(10.0, bank.stopband_floor_db / 10.0);
  return peak * std::max(shape, floor);
}

inline double pair_midpoint(const ChannelSpec& a, const ChannelSpec& b) {
  if (a.index == b.index) throw DomainError("pair midpoint of a channel with itself");
  return 0.5 * (a.center_wavelength_nm + b.center_wavelength_nm);
}

/// Spectral weights of the two terms of the pair state after filtering.
struct PairTransmittances {
  double t_hv = 0.0;     // H photon in the first channel, V in the second
  double t_vh = 0.0;     // V photon in the first channel, H in the second
  double overlap = 0.0;  // integral of sqrt(a_hv a_vh): indistinguishability weight

  double total() const { return t_hv + t_vh; }
};

/// The photon at nu0 + delta goes to `first`, its partner at nu0 - delta to
/// `second`. No reordering.
inline PairTransmittances directed_pair_transmittances(const SpectralAmplitude& spectrum,
                                                       const ChannelSpec& first,
                                                       const ChannelSpec& second,
                                                       const ChannelBank& bank) {
  const double nu0 = spectrum.center_frequency_thz();
  const std::size_t n = spectrum.size();
  std::vector<double> a_hv(n), a_vh(n), coh(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = spectrum.detuning_ghz(i);
    const double filt = transmission(first, nu0 + d / 1000.0, bank) *
                        transmission(second, nu0 - d / 1000.0, bank);
    a_hv[i] = spectrum.h_marginal(d) * filt;
    a_vh[i] = spectrum.v_marginal(d) * filt;
    coh[i] = std::sqrt(a_hv[i] * a_vh[i]);
  }
  auto trapz = [&](const std::vector<double>& f) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) s += f[i] + f[i + 1];
    return 0.5 * spectrum.step_ghz() * s;
  };
  return {trapz(a_hv), trapz(a_vh), trapz(coh)};
}

/// As above with the higher-frequency channel placed first.
inline PairTransmittances pair_transmittances(const SpectralAmplitude& spectrum, const ChannelSpec& a,
                                              const ChannelSpec& b, const ChannelBank& bank) {
  if (a.center_frequency_thz() >= b.center_frequency_thz())
    return directed_pair_transmittances(spectrum, a, b, bank);
  return directed_pair_transmittances(spectrum, b, a, bank);
}

/// Symmetric matrix of pair weights t_HV + t_VH over all channel combinations.
class CrosstalkMatrix {
 public:
  explicit CrosstalkMatrix(std::vector<int> indices)
      : indices_(std::move(indices)), weights_(indices_.size() * indices_.size(), 0.0) {}

  std::size_t size() const { return indices_.size(); }
  const std::vector<int>& indices() const { return indices_; }

  double& at(std::size_t i, std::size_t j) { return weights_[i * indices_.size() + j]; }
  double at(std::size_t i, std::size_t j) const { return weights_[i * indices_.size() + j]; }

  double operator()(int channel_i, int channel_j) const { return at(pos(channel_i), pos(channel_j)); }

  double max() const { return *std::max_element(weights_.begin(), weights_.end()); }

 private:
  std::size_t pos(int channel) const {
    for (std::size_t i = 0; i < indices_.size(); ++i)
      if (indices_[i] == channel) return i;
    throw DomainError("channel " + std::to_string(channel) + " not in matrix");
  }

  std::vector<int> indices_;
  std::vector<double> weights_;
};

inline CrosstalkMatrix crosstalk_matrix(const SpectralAmplitude& spectrum, const ChannelBank& bank) {
  std::vector<int> indices;
  for (const auto& ch : bank.channels) indices.push_back(ch.index);
  CrosstalkMatrix m(indices);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    for (std::size_t j = i; j < indices.size(); ++j) {
      const auto t = pair_transmittances(spectrum, bank.channels[i], bank.channels[j], bank);
      m.at(i, j) = m.at(j, i) = t.total();
    }
  }
  return m;
}

}  // namespace qdwdm
