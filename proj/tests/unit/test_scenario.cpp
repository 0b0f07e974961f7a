#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "qdwdm/scenario.hpp"

using namespace qdwdm;

namespace {

std::string configs_dir() { return QDWDM_CONFIG_DIR; }

std::string field_of(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<no error>";
}

}  // namespace

TEST(Scenario, RoundTripIsIdentity) {
  const auto a = paper_defaults();
  const auto text = serialize_scenario(a);
  const auto b = parse_scenario(text);
  EXPECT_EQ(a, b);
  EXPECT_EQ(serialize_scenario(b), text);
}

TEST(Scenario, RoundTripOfEditedScenario) {
  auto s = paper_defaults();
  s.source.spec.lineshape = Lineshape::sinc2;
  s.source.spec.emission_fwhm_ghz = 231.7;
  s.bank.center_jitter_nm = 0.05;
  s.link.calibrate_to.reset();
  s.link.model.depolarization = 0.031;
  s.link.residual_phase_rad = 0.7;
  s.tuning.target = {30, 32};
  s.tuning.setting = TuningSetting{776.2, 33.1};
  s.tuning.sweep = {{22, 20}, {34, 32}};
  s.curve.angles = AngleConvention::analysis;
  s.curve.signal = {0.0, 45.0, 90.1};
  s.chsh.target.reset();
  s.chsh.convention = SignConvention::printed_all_plus;
  s.simulation.seed = 18446744073709551615ull;
  const auto back = parse_scenario(serialize_scenario(s));
  EXPECT_EQ(back, s);
}

TEST(Scenario, ShippedDefaultsMatchBuiltIn) {
  EXPECT_EQ(load_scenario(configs_dir() + "/paper-defaults.json"), paper_defaults());
}

TEST(Scenario, CsvInputsMatchBuiltIn) {
  auto s = load_scenario(configs_dir() + "/paper-defaults-csv.json");
  EXPECT_EQ(s.source.calibration_table, paper_defaults().source.calibration_table);
  EXPECT_EQ(s.source.spec, paper_defaults().source.spec);
  EXPECT_EQ(s.bank.bank, paper_defaults().bank.bank);
  EXPECT_EQ(s.source.calibration_csv, "tuning_calibration.csv");
  EXPECT_EQ(parse_scenario(serialize_scenario(s), configs_dir()), s);
}

TEST(Scenario, PartialDocumentKeepsDefaults) {
  const auto s = parse_scenario(R"({"simulation": {"seed": 7}, "schedule": {"chsh": {"duration_s": 20}}})");
  auto expected = paper_defaults();
  expected.simulation.seed = 7;
  expected.chsh.duration_s = 20;
  EXPECT_EQ(s, expected);
}

TEST(Scenario, ErrorsNameTheField) {
  EXPECT_EQ(field_of(R"({"link": {"depolarisation": 0.1}})"), "link.depolarisation");
  EXPECT_EQ(field_of(R"({"extra": 1})"), "extra");
  EXPECT_EQ(field_of(R"({"source": {"brightness": "high"}})"), "source.brightness");
  EXPECT_EQ(field_of(R"({"schedule": {"curve": {"duration_s": 0}}})"), "schedule.curve.duration_s");
  EXPECT_EQ(field_of(R"({"schedule": {"chsh": {"duration_s": -1}}})"), "schedule.chsh.duration_s");
  EXPECT_EQ(field_of(R"({"tuning": {"target": "C20_C26"}})"), "tuning.target");
  EXPECT_EQ(field_of(R"({"tuning": {"sweep": ["C22_C20", "C22_C36"]}})"), "tuning.sweep[1]");
  EXPECT_EQ(field_of(R"({"bank": {"channels": [{"index": 20}]}})"), "bank.channels[0].index");
  EXPECT_EQ(field_of(R"({"source": {"lineshape": "lorentzian"}})"), "source.lineshape");
  EXPECT_EQ(field_of(R"({"source": {"calibration": {"table": [[1550, 30], [1550, 20]]}}})"), "source.calibration");
  EXPECT_EQ(field_of(R"({"detectors": {"trigger": {"efficiency": 1.5}}})"), "detectors.trigger");
  EXPECT_EQ(field_of(R"({"tuning": {"setting": {"pump_nm": 700, "temperature_c": 30}}})"), "tuning.setting");
  EXPECT_EQ(field_of(R"({"bank": {"csv": "does-not-exist.csv"}})"), "bank.csv");
}

TEST(Scenario, SyntaxErrorsCarryLineAndColumn) {
  try {
    parse_scenario("{\n  \"link\": {,}\n}");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(Csv, CalibrationRoundTrip) {
  const auto table = reference_calibration_table();
  std::istringstream in(csv::write_calibration(table));
  EXPECT_EQ(csv::read_calibration(in), table);
}

TEST(Csv, ChannelRoundTripAndHeader) {
  const auto bank = default_channel_bank();
  const auto text = csv::write_channels(bank.channels);
  EXPECT_EQ(text.substr(0, text.find('\n')), "index,center_nm,fwhm_ghz,loss_db,delay_ns");
  std::istringstream in(text);
  EXPECT_EQ(csv::read_channels(in), bank.channels);
}

TEST(Csv, TallyRoundTrip) {
  Tally t;
  SettingTally a;
  a.setting = AnalyzerSetting{-22.5, 45.0};
  a.coincidences = 1234;
  a.duration_s = 10;
  SettingTally b;
  b.coincidences = 77.125;
  b.duration_s = 30;
  t.entries = {a, b};
  const auto text = csv::write_tally(t);
  EXPECT_EQ(text, "theta1_deg,theta2_deg,coincidences,duration_s\n-22.5,45,1234,10\nnone,none,77.125,30\n");
  std::istringstream in(text);
  const auto back = csv::read_tally(in);
  ASSERT_EQ(back.entries.size(), 2u);
  EXPECT_EQ(back.entries[0].setting, a.setting);
  EXPECT_EQ(back.entries[1].setting, std::nullopt);
  EXPECT_EQ(back.entries[1].coincidences, 77.125);
}

TEST(Csv, Diagnostics) {
  std::istringstream wrong_header("wavelength,temperature\n1550,30\n");
  EXPECT_THROW(csv::read_calibration(wrong_header), ConfigError);
  std::istringstream bad_number("wavelength_nm,temperature_c\n1550,3o\n");
  try {
    csv::read_calibration(bad_number);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  std::istringstream short_row("index,center_nm,fwhm_ghz,loss_db,delay_ns\n20,1561.25,120\n");
  EXPECT_THROW(csv::read_channels(short_row), ConfigError);
  std::istringstream negative("theta1_deg,theta2_deg,coincidences,duration_s\n0,0,-3,1\n");
  EXPECT_THROW(csv::read_tally(negative), ConfigError);
}
