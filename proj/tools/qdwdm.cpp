// qdwdm: command-line front end for the channel-pair entanglement simulator.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "qdwdm/qdwdm.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

// Re-expresses the schedule angles in another convention without changing
// the physical settings.
void convert_angles(qdwdm::Scenario& sc, qdwdm::AngleConvention to) {
  auto scale = [](qdwdm::AngleConvention from, qdwdm::AngleConvention to) {
    if (from == to) return 1.0;
    return to == qdwdm::AngleConvention::hwp ? 0.5 : 2.0;
  };
  const double c = scale(sc.curve.angles, to);
  for (auto& s : sc.curve.signal) s *= c;
  sc.curve.idler_start *= c;
  sc.curve.idler_stop *= c;
  sc.curve.idler_step *= c;
  sc.curve.angles = to;

  const double h = scale(sc.chsh.angles, to);
  sc.chsh.settings.theta1_deg *= h;
  sc.chsh.settings.theta1_prime_deg *= h;
  sc.chsh.settings.theta2_deg *= h;
  sc.chsh.settings.theta2_prime_deg *= h;
  sc.chsh.angles = to;
}

void write_files(const qdwdm::CommandOutput& out, const std::string& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, contents] : out.files) {
    const auto path = std::filesystem::path(dir) / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw qdwdm::Error("cannot write '" + path.string() + "'");
    f << contents;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Switchable polarization-entangled pair distribution through a DWDM channel bank"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::string angles;
  bool analytic = false;
  app.add_option("--config", config_path, "Scenario JSON (built-in defaults when omitted)");
  app.add_option("--seed", seed, "Override the simulation seed");
  app.add_option("--out", out_dir, "Directory for CSV output")->capture_default_str();
  app.add_option("--angles", angles, "Angle convention of schedules and CSV angles")
      ->check(CLI::IsMember({"hwp", "analysis"}));
  app.add_flag("--analytic", analytic, "Exact probabilities x duration instead of Monte Carlo");

  auto* bell = app.add_subcommand("bell-curve", "Coincidence fringes and fitted visibilities");
  auto* chsh = app.add_subcommand("chsh", "CHSH parameter from the 16 analyzer combinations");
  std::string tally_path;
  chsh->add_option("--tally", tally_path, "Evaluate an existing tally CSV instead of measuring");
  auto* sw = app.add_subcommand("switch", "Retune to another channel pair and check isolation");
  std::string to_pair;
  sw->add_option("--to", to_pair, "Target pair, e.g. C26_C24 (default: the configured sweep)");
  auto* xt = app.add_subcommand("crosstalk", "Pair weights over all channel combinations");
  std::optional<double> fwhm;
  xt->add_option("--emission-fwhm-ghz", fwhm, "Override the emission bandwidth");
  auto* rate = app.add_subcommand("rate", "Generation-rate estimate and detection budget");
  auto* cal = app.add_subcommand("calibrate", "Tuning calibration and per-pair settings");
  auto* cfg = app.add_subcommand("config", "Print the effective scenario as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  qdwdm::Scenario sc;
  try {
    sc = config_path.empty() ? qdwdm::paper_defaults() : qdwdm::load_scenario(config_path);
    if (seed) sc.simulation.seed = *seed;
    if (!angles.empty()) convert_angles(sc, qdwdm::detail::parse_angles(angles, "--angles"));
  } catch (const qdwdm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  const qdwdm::CommandOptions opts{analytic};
  try {
    qdwdm::CommandOutput out;
    if (*bell) {
      out = qdwdm::cmd_bell_curve(sc, opts);
    } else if (*chsh) {
      std::optional<qdwdm::Tally> input;
      if (!tally_path.empty()) {
        auto in = qdwdm::csv::open(tally_path);
        input = qdwdm::csv::read_tally(in);
      }
      out = qdwdm::cmd_chsh(sc, opts, input);
    } else if (*sw) {
      std::optional<qdwdm::ChannelPairTarget> to;
      if (!to_pair.empty()) to = qdwdm::ChannelPairTarget::parse(to_pair);
      out = qdwdm::cmd_switch(sc, to);
    } else if (*xt) {
      out = qdwdm::cmd_crosstalk(sc, fwhm);
    } else if (*rate) {
      out = qdwdm::cmd_rate(sc, opts);
    } else if (*cal) {
      out = qdwdm::cmd_calibrate(sc);
    } else if (*cfg) {
      std::cout << qdwdm::serialize_scenario(sc);
      return 0;
    }
    std::cout << out.report;
    write_files(out, out_dir);
  } catch (const qdwdm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
