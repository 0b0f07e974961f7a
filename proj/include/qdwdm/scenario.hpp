#pragma once

// Scenario configuration: one JSON document with sections source, bank,
// losses, detectors, link, tuning, schedule and simulation.

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qdwdm/analysis.hpp"
#include "qdwdm/csv.hpp"
#include "qdwdm/detection.hpp"
#include "qdwdm/dwdm.hpp"
#include "qdwdm/errors.hpp"
#include "qdwdm/spdc_source.hpp"
#include "qdwdm/tuning.hpp"

namespace qdwdm {

using Json = nlohmann::ordered_json;

enum class AngleConvention { hwp, analysis };

inline double to_analysis_deg(double angle, AngleConvention c) {
  return c == AngleConvention::hwp ? hwp_to_analysis_deg(angle) : angle;
}

struct VisibilityTargets {
  double rectilinear = reference::kVisibilityRectilinear;
  double diagonal = reference::kVisibilityDiagonal;
  bool operator==(const VisibilityTargets&) const = default;
};

struct LinkConfig {
  LinkModel model;
  // When set, model.depolarization and model.coherence_factor are solved
  // from these raw visibilities at run time.
  std::optional<VisibilityTargets> calibrate_to = VisibilityTargets{};
  double residual_phase_rad = 0.0;
  bool compensate_phase = true;
  bool operator==(const LinkConfig&) const = default;
};

struct SourceConfig {
  SourceSpec spec;
  std::vector<CalibrationPoint> calibration_table = reference_calibration_table();
  std::string calibration_csv;  // when non-empty the table was read from this file
  bool operator==(const SourceConfig&) const = default;
};

struct BankConfig {
  ChannelBank bank = default_channel_bank();
  std::string channels_csv;
  double center_jitter_nm = 0.0;  // uniform +/- offset per channel, drawn from the scenario seed
  bool operator==(const BankConfig&) const = default;
};

struct TuningConfig {
  ChannelPairTarget target{22, 20};
  double pump_power_mw = reference::kPumpPowerMw;
  double accepted_bandwidth_nm = reference::kEmissionBandwidthNm;
  std::optional<TuningSetting> setting;  // explicit override of the pair's operating point
  double settling_time_s = 0.0;
  double isolation_threshold = 1e-3;
  double degraded_fraction = 0.5;
  std::vector<ChannelPairTarget> sweep;
  bool operator==(const TuningConfig&) const = default;
};

struct CurveSchedule {
  AngleConvention angles = AngleConvention::hwp;
  std::vector<double> signal{0.0, 22.5};
  double idler_start = 0.0;
  double idler_stop = 180.0;
  double idler_step = 10.0;
  double duration_s = 30.0;
  bool operator==(const CurveSchedule&) const = default;
};

struct ChshSchedule {
  AngleConvention angles = AngleConvention::analysis;
  std::optional<ChannelPairTarget> target = ChannelPairTarget{34, 32};
  ChshSettings settings;
  double duration_s = 10.0;
  SignConvention convention = SignConvention::tsirelson;
  bool operator==(const ChshSchedule&) const = default;
};

struct RateSchedule {
  double duration_s = 60.0;
  double quoted_detected_rate = reference::kDetectedCoincidences;
  double quoted_duty_cycle = reference::kQuotedDutyCycle;
  bool operator==(const RateSchedule&) const = default;
};

struct SimulationConfig {
  std::uint64_t seed = 20130415;
  unsigned threads = 0;
  std::uint64_t gates_per_block = std::uint64_t{1} << 22;
  bool operator==(const SimulationConfig&) const = default;
};

struct Scenario {
  SourceConfig source;
  BankConfig bank;
  LossBudget losses;
  DetectorSpec trigger = default_trigger_detector();
  DetectorSpec partner = default_partner_detector();
  LinkConfig link;
  TuningConfig tuning;
  CurveSchedule curve;
  ChshSchedule chsh;
  RateSchedule rate;
  SimulationConfig simulation;

  bool operator==(const Scenario&) const = default;
};

inline Scenario paper_defaults() { return Scenario{}; }

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

/// Walks one JSON object, remembering which keys were consumed so leftovers
/// can be reported with their full path.
class ObjectReader {
 public:
  ObjectReader(const Json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError("expected an object", path_.empty() ? "<root>" : path_);
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return obj_.contains(key); }

  const Json& raw(const std::string& key) {
    seen_.insert(key);
    return obj_.at(key);
  }

  template <class T>
  void get(const std::string& key, T& out) {
    if (!obj_.contains(key)) return;
    seen_.insert(key);
    try {
      out = obj_.at(key).template get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("wrong type (") + e.what() + ")", field(key));
    }
  }

  double number(const std::string& key, double fallback) {
    if (!obj_.contains(key)) return fallback;
    seen_.insert(key);
    const auto& v = obj_.at(key);
    if (!v.is_number()) throw ConfigError("expected a number", field(key));
    return v.get<double>();
  }

  ObjectReader child(const std::string& key) {
    seen_.insert(key);
    return ObjectReader(obj_.at(key), field(key));
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("unknown key", field(it.key()));
  }

 private:
  const Json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

inline AngleConvention parse_angles(const std::string& s, const std::string& field) {
  if (s == "hwp") return AngleConvention::hwp;
  if (s == "analysis") return AngleConvention::analysis;
  throw ConfigError("expected 'hwp' or 'analysis', got '" + s + "'", field);
}
inline std::string angles_name(AngleConvention c) { return c == AngleConvention::hwp ? "hwp" : "analysis"; }

inline Lineshape parse_lineshape(const std::string& s, const std::string& field) {
  if (s == "gaussian") return Lineshape::gaussian;
  if (s == "sinc2") return Lineshape::sinc2;
  throw ConfigError("expected 'gaussian' or 'sinc2', got '" + s + "'", field);
}
inline std::string lineshape_name(Lineshape l) { return l == Lineshape::gaussian ? "gaussian" : "sinc2"; }

inline SignConvention parse_convention(const std::string& s, const std::string& field) {
  if (s == "tsirelson") return SignConvention::tsirelson;
  if (s == "printed_all_plus") return SignConvention::printed_all_plus;
  throw ConfigError("expected 'tsirelson' or 'printed_all_plus', got '" + s + "'", field);
}
inline std::string convention_name(SignConvention c) {
  return c == SignConvention::tsirelson ? "tsirelson" : "printed_all_plus";
}

inline TriggerMode parse_mode(const std::string& s, const std::string& field) {
  if (s == "external_clock") return TriggerMode::external_clock;
  if (s == "triggered_by_partner") return TriggerMode::triggered_by_partner;
  throw ConfigError("expected 'external_clock' or 'triggered_by_partner', got '" + s + "'", field);
}
inline std::string mode_name(TriggerMode m) {
  return m == TriggerMode::external_clock ? "external_clock" : "triggered_by_partner";
}

inline ChannelPairTarget parse_pair(const Json& v, const std::string& field) {
  if (!v.is_string()) throw ConfigError("expected a channel pair such as \"C22_C20\"", field);
  try {
    return ChannelPairTarget::parse(v.get<std::string>());
  } catch (const DomainError& e) {
    throw ConfigError(e.what(), field);
  }
}

inline std::string resolve(const std::string& path, const std::string& base_dir) {
  if (path.empty() || base_dir.empty() || std::filesystem::path(path).is_absolute()) return path;
  return (std::filesystem::path(base_dir) / path).string();
}

inline void read_detector(ObjectReader r, DetectorSpec& d) {
  d.efficiency = r.number("efficiency", d.efficiency);
  d.gate_width_ns = r.number("gate_width_ns", d.gate_width_ns);
  d.dark_rate_per_ns = r.number("dark_rate_per_ns", d.dark_rate_per_ns);
  if (r.has("trigger_mode")) {
    std::string m;
    r.get("trigger_mode", m);
    d.trigger_mode = parse_mode(m, r.field("trigger_mode"));
  }
  d.trigger_rate_mhz = r.number("trigger_rate_mhz", d.trigger_rate_mhz);
  r.finish();
}

inline Json write_detector(const DetectorSpec& d) {
  Json j;
  j["efficiency"] = d.efficiency;
  j["gate_width_ns"] = d.gate_width_ns;
  j["dark_rate_per_ns"] = d.dark_rate_per_ns;
  j["trigger_mode"] = mode_name(d.trigger_mode);
  j["trigger_rate_mhz"] = d.trigger_rate_mhz;
  return j;
}

}  // namespace detail

/// Checks cross-references and ranges; throws ConfigError naming the field.
inline void validate(const Scenario& sc) {
  auto wrap = [](const std::string& field, auto&& fn) {
    try {
      fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(e.what(), field);
    }
  };
  wrap("source", [&] { validate(sc.source.spec); });
  wrap("bank", [&] { validate(sc.bank.bank); });
  wrap("detectors.trigger", [&] { validate(sc.trigger); });
  wrap("detectors.partner", [&] { validate(sc.partner); });
  if (sc.trigger.trigger_mode != TriggerMode::external_clock)
    throw ConfigError("detector 1 must use an external clock", "detectors.trigger.trigger_mode");
  wrap("link", [&] { validate(sc.link.model); });
  wrap("tuning.target", [&] { require_adjacent(sc.tuning.target, sc.bank.bank); });
  for (std::size_t i = 0; i < sc.tuning.sweep.size(); ++i)
    wrap("tuning.sweep[" + std::to_string(i) + "]", [&] { require_adjacent(sc.tuning.sweep[i], sc.bank.bank); });
  if (sc.chsh.target) wrap("schedule.chsh.target", [&] { require_adjacent(*sc.chsh.target, sc.bank.bank); });
  if (sc.tuning.setting) wrap("tuning.setting", [&] { validate(*sc.tuning.setting, sc.source.spec.limits); });
  if (!(sc.tuning.pump_power_mw >= 0.0)) throw ConfigError("must be >= 0", "tuning.pump_power_mw");
  if (!(sc.tuning.accepted_bandwidth_nm > 0.0)) throw ConfigError("must be > 0", "tuning.accepted_bandwidth_nm");
  if (!(sc.curve.duration_s > 0.0)) throw ConfigError("must be > 0", "schedule.curve.duration_s");
  if (!(sc.chsh.duration_s > 0.0)) throw ConfigError("must be > 0", "schedule.chsh.duration_s");
  if (!(sc.rate.duration_s > 0.0)) throw ConfigError("must be > 0", "schedule.rate.duration_s");
  if (!(sc.curve.idler_step > 0.0)) throw ConfigError("must be > 0", "schedule.curve.idler_step");
  if (!(sc.curve.idler_stop >= sc.curve.idler_start)) throw ConfigError("must be >= idler_start", "schedule.curve.idler_stop");
  if (sc.curve.signal.empty()) throw ConfigError("needs at least one signal angle", "schedule.curve.signal");
  if (sc.simulation.gates_per_block == 0) throw ConfigError("must be > 0", "simulation.gates_per_block");
  if (sc.link.calibrate_to) {
    const auto& t = *sc.link.calibrate_to;
    if (!(t.rectilinear > 0.0 && t.rectilinear <= 1.0)) throw ConfigError("must lie in (0, 1]", "link.calibrate_to.rectilinear");
    if (!(t.diagonal >= 0.0 && t.diagonal <= 1.0)) throw ConfigError("must lie in [0, 1]", "link.calibrate_to.diagonal");
  }
}

/// Parses a scenario document. Missing keys keep their default values;
/// unknown keys are rejected. Relative CSV paths resolve against base_dir.
inline Scenario parse_scenario(const std::string& text, const std::string& base_dir = {}) {
  Json doc;
  try {
    doc = Json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    // what() already carries line and column
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }

  Scenario sc;
  detail::ObjectReader root(doc, "");

  if (root.has("source")) {
    auto r = root.child("source");
    auto& s = sc.source.spec;
    s.emission_fwhm_ghz = r.number("emission_fwhm_ghz", s.emission_fwhm_ghz);
    if (r.has("lineshape")) {
      std::string l;
      r.get("lineshape", l);
      s.lineshape = detail::parse_lineshape(l, r.field("lineshape"));
    }
    s.brightness = r.number("brightness", s.brightness);
    s.split_ghz_per_c = r.number("split_ghz_per_c", s.split_ghz_per_c);
    r.get("grid_points", s.grid_points);
    s.grid_half_width_fwhm = r.number("grid_half_width_fwhm", s.grid_half_width_fwhm);
    if (r.has("limits")) {
      auto l = r.child("limits");
      s.limits.pump_min_nm = l.number("pump_min_nm", s.limits.pump_min_nm);
      s.limits.pump_max_nm = l.number("pump_max_nm", s.limits.pump_max_nm);
      s.limits.temperature_min_c = l.number("temperature_min_c", s.limits.temperature_min_c);
      s.limits.temperature_max_c = l.number("temperature_max_c", s.limits.temperature_max_c);
      l.finish();
    }
    double margin = s.calibration.extrapolation_margin_nm;
    if (r.has("calibration")) {
      auto c = r.child("calibration");
      margin = c.number("extrapolation_margin_nm", margin);
      if (c.has("csv") && c.has("table")) throw ConfigError("give either csv or table, not both", c.field("csv"));
      if (c.has("csv")) {
        c.get("csv", sc.source.calibration_csv);
        try {
          auto in = csv::open(detail::resolve(sc.source.calibration_csv, base_dir));
          sc.source.calibration_table = csv::read_calibration(in);
        } catch (const ConfigError& e) {
          throw ConfigError(e.what(), c.field("csv"));
        }
      }
      if (c.has("table")) {
        const auto& t = c.raw("table");
        if (!t.is_array()) throw ConfigError("expected [[wavelength_nm, temperature_c], ...]", c.field("table"));
        sc.source.calibration_table.clear();
        for (std::size_t i = 0; i < t.size(); ++i) {
          const auto& row = t[i];
          if (!row.is_array() || row.size() != 2 || !row[0].is_number() || !row[1].is_number())
            throw ConfigError("expected [wavelength_nm, temperature_c]", c.field("table") + "[" + std::to_string(i) + "]");
          sc.source.calibration_table.push_back({row[0].get<double>(), row[1].get<double>()});
        }
      }
      c.finish();
    }
    try {
      s.calibration = calibrate_tuning(sc.source.calibration_table);
    } catch (const FitError& e) {
      throw ConfigError(e.what(), "source.calibration");
    }
    s.calibration.extrapolation_margin_nm = margin;
    r.finish();
  }

  if (root.has("bank")) {
    auto r = root.child("bank");
    auto& b = sc.bank.bank;
    r.get("shape_order", b.shape_order);
    b.stopband_floor_db = r.number("stopband_floor_db", b.stopband_floor_db);
    b.base_delay_ns = r.number("base_delay_ns", b.base_delay_ns);
    sc.bank.center_jitter_nm = r.number("center_jitter_nm", sc.bank.center_jitter_nm);
    if (r.has("csv") && r.has("channels")) throw ConfigError("give either csv or channels, not both", r.field("csv"));
    if (r.has("csv")) {
      r.get("csv", sc.bank.channels_csv);
      try {
        auto in = csv::open(detail::resolve(sc.bank.channels_csv, base_dir));
        b.channels = csv::read_channels(in);
      } catch (const ConfigError& e) {
        throw ConfigError(e.what(), r.field("csv"));
      }
    }
    if (r.has("channels")) {
      const auto& arr = r.raw("channels");
      const std::string field = r.field("channels");
      if (!arr.is_array()) throw ConfigError("expected an array of channels", field);
      b.channels.clear();
      for (std::size_t i = 0; i < arr.size(); ++i) {
        detail::ObjectReader c(arr[i], field + "[" + std::to_string(i) + "]");
        ChannelSpec ch;
        if (!c.has("index") || !c.has("center_nm")) throw ConfigError("channel needs index and center_nm", c.field("index"));
        c.get("index", ch.index);
        ch.center_wavelength_nm = c.number("center_nm", 0.0);
        ch.passband_fwhm_ghz = c.number("fwhm_ghz", ch.passband_fwhm_ghz);
        ch.insertion_loss_db = c.number("loss_db", ch.insertion_loss_db);
        ch.path_delay_ns = c.number("delay_ns", ch.path_delay_ns);
        c.finish();
        b.channels.push_back(ch);
      }
    }
    r.finish();
  }

  if (root.has("losses")) {
    auto r = root.child("losses");
    auto& l = sc.losses;
    l.filtering_db = r.number("filtering_db", l.filtering_db);
    l.fiber_coupling_db = r.number("fiber_coupling_db", l.fiber_coupling_db);
    l.dwdm_insertion_db = r.number("dwdm_insertion_db", l.dwdm_insertion_db);
    l.analyzer_1_db = r.number("analyzer_1_db", l.analyzer_1_db);
    l.analyzer_2_db = r.number("analyzer_2_db", l.analyzer_2_db);
    l.retarder_db = r.number("retarder_db", l.retarder_db);
    r.finish();
  }

  if (root.has("detectors")) {
    auto r = root.child("detectors");
    if (r.has("trigger")) detail::read_detector(r.child("trigger"), sc.trigger);
    if (r.has("partner")) detail::read_detector(r.child("partner"), sc.partner);
    r.finish();
  }

  if (root.has("link")) {
    auto r = root.child("link");
    auto& m = sc.link.model;
    m.trigger_photons_per_pair = r.number("trigger_photons_per_pair", m.trigger_photons_per_pair);
    m.delay_offset_ns = r.number("delay_offset_ns", m.delay_offset_ns);
    m.depolarization = r.number("depolarization", m.depolarization);
    m.coherence_factor = r.number("coherence_factor", m.coherence_factor);
    sc.link.residual_phase_rad = r.number("residual_phase_rad", sc.link.residual_phase_rad);
    r.get("compensate_phase", sc.link.compensate_phase);
    if (r.has("calibrate_to")) {
      const auto& v = r.raw("calibrate_to");
      if (v.is_null()) {
        sc.link.calibrate_to.reset();
      } else {
        detail::ObjectReader c(v, r.field("calibrate_to"));
        VisibilityTargets t;
        t.rectilinear = c.number("rectilinear", t.rectilinear);
        t.diagonal = c.number("diagonal", t.diagonal);
        c.finish();
        sc.link.calibrate_to = t;
      }
    }
    r.finish();
  }

  if (root.has("tuning")) {
    auto r = root.child("tuning");
    auto& t = sc.tuning;
    if (r.has("target")) t.target = detail::parse_pair(r.raw("target"), r.field("target"));
    t.pump_power_mw = r.number("pump_power_mw", t.pump_power_mw);
    t.accepted_bandwidth_nm = r.number("accepted_bandwidth_nm", t.accepted_bandwidth_nm);
    if (r.has("setting")) {
      const auto& v = r.raw("setting");
      if (v.is_null()) {
        t.setting.reset();
      } else {
        detail::ObjectReader s(v, r.field("setting"));
        if (!s.has("pump_nm") || !s.has("temperature_c"))
          throw ConfigError("needs pump_nm and temperature_c", r.field("setting"));
        t.setting = TuningSetting{s.number("pump_nm", 0.0), s.number("temperature_c", 0.0)};
        s.finish();
      }
    }
    t.settling_time_s = r.number("settling_time_s", t.settling_time_s);
    t.isolation_threshold = r.number("isolation_threshold", t.isolation_threshold);
    t.degraded_fraction = r.number("degraded_fraction", t.degraded_fraction);
    if (r.has("sweep")) {
      const auto& arr = r.raw("sweep");
      if (!arr.is_array()) throw ConfigError("expected an array of channel pairs", r.field("sweep"));
      t.sweep.clear();
      for (std::size_t i = 0; i < arr.size(); ++i)
        t.sweep.push_back(detail::parse_pair(arr[i], r.field("sweep") + "[" + std::to_string(i) + "]"));
    }
    r.finish();
  }

  if (root.has("schedule")) {
    auto r = root.child("schedule");
    if (r.has("curve")) {
      auto c = r.child("curve");
      auto& s = sc.curve;
      if (c.has("angles")) {
        std::string a;
        c.get("angles", a);
        s.angles = detail::parse_angles(a, c.field("angles"));
      }
      c.get("signal", s.signal);
      s.idler_start = c.number("idler_start", s.idler_start);
      s.idler_stop = c.number("idler_stop", s.idler_stop);
      s.idler_step = c.number("idler_step", s.idler_step);
      s.duration_s = c.number("duration_s", s.duration_s);
      c.finish();
    }
    if (r.has("chsh")) {
      auto c = r.child("chsh");
      auto& s = sc.chsh;
      if (c.has("angles")) {
        std::string a;
        c.get("angles", a);
        s.angles = detail::parse_angles(a, c.field("angles"));
      }
      if (c.has("target")) {
        const auto& v = c.raw("target");
        if (v.is_null()) s.target.reset();
        else s.target = detail::parse_pair(v, c.field("target"));
      }
      s.settings.theta1_deg = c.number("theta1", s.settings.theta1_deg);
      s.settings.theta1_prime_deg = c.number("theta1_prime", s.settings.theta1_prime_deg);
      s.settings.theta2_deg = c.number("theta2", s.settings.theta2_deg);
      s.settings.theta2_prime_deg = c.number("theta2_prime", s.settings.theta2_prime_deg);
      s.duration_s = c.number("duration_s", s.duration_s);
      if (c.has("sign_convention")) {
        std::string v;
        c.get("sign_convention", v);
        s.convention = detail::parse_convention(v, c.field("sign_convention"));
      }
      c.finish();
    }
    if (r.has("rate")) {
      auto c = r.child("rate");
      sc.rate.duration_s = c.number("duration_s", sc.rate.duration_s);
      sc.rate.quoted_detected_rate = c.number("quoted_detected_rate", sc.rate.quoted_detected_rate);
      sc.rate.quoted_duty_cycle = c.number("quoted_duty_cycle", sc.rate.quoted_duty_cycle);
      c.finish();
    }
    r.finish();
  }

  if (root.has("simulation")) {
    auto r = root.child("simulation");
    r.get("seed", sc.simulation.seed);
    r.get("threads", sc.simulation.threads);
    r.get("gates_per_block", sc.simulation.gates_per_block);
    r.finish();
  }

  root.finish();
  validate(sc);
  return sc;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), std::filesystem::path(path).parent_path().string());
}

/// Full document with every field spelled out.
inline Json to_json(const Scenario& sc) {
  Json j;
  {
    const auto& s = sc.source.spec;
    Json src;
    src["emission_fwhm_ghz"] = s.emission_fwhm_ghz;
    src["lineshape"] = detail::lineshape_name(s.lineshape);
    src["brightness"] = s.brightness;
    src["split_ghz_per_c"] = s.split_ghz_per_c;
    src["grid_points"] = s.grid_points;
    src["grid_half_width_fwhm"] = s.grid_half_width_fwhm;
    src["limits"] = {{"pump_min_nm", s.limits.pump_min_nm},
                     {"pump_max_nm", s.limits.pump_max_nm},
                     {"temperature_min_c", s.limits.temperature_min_c},
                     {"temperature_max_c", s.limits.temperature_max_c}};
    Json cal;
    cal["extrapolation_margin_nm"] = s.calibration.extrapolation_margin_nm;
    if (!sc.source.calibration_csv.empty()) {
      cal["csv"] = sc.source.calibration_csv;
    } else {
      Json table = Json::array();
      for (const auto& p : sc.source.calibration_table) table.push_back({p.wavelength_nm, p.temperature_c});
      cal["table"] = table;
    }
    src["calibration"] = cal;
    j["source"] = src;
  }
  {
    const auto& b = sc.bank.bank;
    Json bank;
    bank["shape_order"] = b.shape_order;
    bank["stopband_floor_db"] = b.stopband_floor_db;
    bank["base_delay_ns"] = b.base_delay_ns;
    bank["center_jitter_nm"] = sc.bank.center_jitter_nm;
    if (!sc.bank.channels_csv.empty()) {
      bank["csv"] = sc.bank.channels_csv;
    } else {
      Json chans = Json::array();
      for (const auto& c : b.channels)
        chans.push_back({{"index", c.index},
                         {"center_nm", c.center_wavelength_nm},
                         {"fwhm_ghz", c.passband_fwhm_ghz},
                         {"loss_db", c.insertion_loss_db},
                         {"delay_ns", c.path_delay_ns}});
      bank["channels"] = chans;
    }
    j["bank"] = bank;
  }
  {
    const auto& l = sc.losses;
    j["losses"] = {{"filtering_db", l.filtering_db},         {"fiber_coupling_db", l.fiber_coupling_db},
                   {"dwdm_insertion_db", l.dwdm_insertion_db}, {"analyzer_1_db", l.analyzer_1_db},
                   {"analyzer_2_db", l.analyzer_2_db},       {"retarder_db", l.retarder_db}};
  }
  j["detectors"] = {{"trigger", detail::write_detector(sc.trigger)}, {"partner", detail::write_detector(sc.partner)}};
  {
    const auto& m = sc.link.model;
    Json link;
    link["trigger_photons_per_pair"] = m.trigger_photons_per_pair;
    link["delay_offset_ns"] = m.delay_offset_ns;
    link["depolarization"] = m.depolarization;
    link["coherence_factor"] = m.coherence_factor;
    link["residual_phase_rad"] = sc.link.residual_phase_rad;
    link["compensate_phase"] = sc.link.compensate_phase;
    if (sc.link.calibrate_to)
      link["calibrate_to"] = {{"rectilinear", sc.link.calibrate_to->rectilinear},
                              {"diagonal", sc.link.calibrate_to->diagonal}};
    else
      link["calibrate_to"] = nullptr;
    j["link"] = link;
  }
  {
    const auto& t = sc.tuning;
    Json tun;
    tun["target"] = t.target.label();
    tun["pump_power_mw"] = t.pump_power_mw;
    tun["accepted_bandwidth_nm"] = t.accepted_bandwidth_nm;
    if (t.setting)
      tun["setting"] = {{"pump_nm", t.setting->pump_wavelength_nm}, {"temperature_c", t.setting->crystal_temperature_c}};
    else
      tun["setting"] = nullptr;
    tun["settling_time_s"] = t.settling_time_s;
    tun["isolation_threshold"] = t.isolation_threshold;
    tun["degraded_fraction"] = t.degraded_fraction;
    Json sweep = Json::array();
    for (const auto& p : t.sweep) sweep.push_back(p.label());
    tun["sweep"] = sweep;
    j["tuning"] = tun;
  }
  {
    Json sched;
    const auto& c = sc.curve;
    sched["curve"] = {{"angles", detail::angles_name(c.angles)}, {"signal", c.signal},
                      {"idler_start", c.idler_start},            {"idler_stop", c.idler_stop},
                      {"idler_step", c.idler_step},              {"duration_s", c.duration_s}};
    const auto& h = sc.chsh;
    Json chsh;
    chsh["angles"] = detail::angles_name(h.angles);
    chsh["target"] = h.target ? Json(h.target->label()) : Json(nullptr);
    chsh["theta1"] = h.settings.theta1_deg;
    chsh["theta1_prime"] = h.settings.theta1_prime_deg;
    chsh["theta2"] = h.settings.theta2_deg;
    chsh["theta2_prime"] = h.settings.theta2_prime_deg;
    chsh["duration_s"] = h.duration_s;
    chsh["sign_convention"] = detail::convention_name(h.convention);
    sched["chsh"] = chsh;
    sched["rate"] = {{"duration_s", sc.rate.duration_s},
                     {"quoted_detected_rate", sc.rate.quoted_detected_rate},
                     {"quoted_duty_cycle", sc.rate.quoted_duty_cycle}};
    j["schedule"] = sched;
  }
  j["simulation"] = {{"seed", sc.simulation.seed},
                     {"threads", sc.simulation.threads},
                     {"gates_per_block", sc.simulation.gates_per_block}};
  return j;
}

inline std::string serialize_scenario(const Scenario& sc) { return to_json(sc).dump(2) + "\n"; }

}  // namespace qdwdm
