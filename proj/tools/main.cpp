#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "recipes.hpp"

namespace {

const std::map<std::string, std::string> kAbout{
    {"sweep", "throughput of one disk across a frequency sweep"},
    {"volume-curve", "throughput against attack level, lab or open water"},
    {"positions", "throughput by speaker position inside the enclosure"},
    {"angle", "throughput by incidence angle"},
    {"hdfs-cascade", "replication cluster with one underwater RAID-5 node"},
    {"db-latency", "normalized database latency against attack level"},
    {"vm-migration", "VM placement and stranding on an attacked host"},
    {"snia-replay", "replay MSR-style traces against a RAID-5 array"},
    {"cache-bench", "latency of a cached disk by workload and attack"},
    {"fem-attenuation", "excitation attenuation through a wall stack"},
    {"detect-profile", "build per-disk detector profiles"},
    {"detect-eval", "true and false positive rates of the detector"},
    {"run", "run a scenario file and write its logs"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"udcsim: acoustic fault injection against simulated storage clusters"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", std::string(UDCSIM_VERSION_STRING));

  udc::cli::Options opts;
  std::string out = "out";
  std::string scenario;
  std::string calibration;
  std::string profiles;
  std::uint64_t seed = 0;
  int trials = 0;

  std::string chosen;
  for (const auto& name : udc::cli::subcommand_names()) {
    const auto about = kAbout.find(name);
    auto* sub = app.add_subcommand(name, about == kAbout.end() ? "" : about->second);
    sub->add_option("--scenario", scenario, "scenario or recipe parameter file (JSON)");
    sub->add_option("--out", out, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "master seed override");
    sub->add_option("--calibration", calibration, "calibration file (JSON)");
    sub->add_option("--trials", trials, "trial count override")->check(CLI::PositiveNumber);
    sub->add_flag("--quiet", opts.quiet, "suppress progress output");
    if (name == "detect-eval") sub->add_option("--profiles", profiles, "profile store from detect-profile");
    sub->callback([&chosen, name] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  opts.out = out;
  auto* sub = app.get_subcommand(chosen);
  if (!scenario.empty()) opts.scenario = scenario;
  if (!calibration.empty()) opts.calibration = calibration;
  if (!profiles.empty()) opts.profiles = profiles;
  if (sub->count("--seed")) opts.seed = seed;
  if (sub->count("--trials")) opts.trials = trials;
  return udc::cli::run_subcommand(chosen, opts);
}
