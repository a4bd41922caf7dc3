#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "spincav/config.hpp"
#include "spincav/errors.hpp"
#include "spincav/io.hpp"
#include "spincav/oracle_check.hpp"
#include "spincav/relaxation_analysis.hpp"
#include "spincav/spectra_engine.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spincav;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitConvergence = 3;

struct CommonOptions {
  std::string config_path;
  std::string preset;
  std::string output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<double> db_offset;
  std::optional<double> max_failure_fraction;
  std::string trace;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("-c,--config", o.config_path, "JSON run configuration");
  cmd->add_option("-p,--preset", o.preset, "start from a named preset");
  cmd->add_option("-o,--output-dir", o.output_dir, "output directory (overrides SPINCAV_OUTPUT_DIR)");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("-j,--threads", o.threads, "worker threads");
  cmd->add_option("--db-offset", o.db_offset, "dB calibration offset added to reported levels");
  cmd->add_option("--max-failure-fraction", o.max_failure_fraction,
                  "fraction of failed cells tolerated before exit code 3");
}

RunConfig resolve(const CommonOptions& o) {
  json user = json::object();
  if (!o.config_path.empty()) {
    std::string text;
    try {
      text = read_file(o.config_path);
    } catch (const SpincavError& e) {
      throw ConfigError(e.what());
    }
    try {
      user = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError("malformed JSON in " + o.config_path + ": " + e.what());
    }
    if (!user.is_object()) throw ConfigError("config must be a JSON object");
  }
  if (!o.preset.empty()) user["preset"] = o.preset;
  if (!o.output_dir.empty()) {
    user["output_dir"] = o.output_dir;
  } else if (const char* env = std::getenv("SPINCAV_OUTPUT_DIR"); env && *env) {
    user["output_dir"] = env;
  }
  if (o.seed) user["seed"] = *o.seed;
  if (o.threads) user["threads"] = *o.threads;
  if (o.db_offset) user["db_offset"] = *o.db_offset;
  if (o.max_failure_fraction) user["max_failure_fraction"] = *o.max_failure_fraction;
  if (!o.trace.empty()) {
    if (user.contains("recovery") && !user["recovery"].is_object())
      throw ConfigError("'recovery' must be an object");
    user["recovery"]["trace_csv"] = o.trace;
  }
  return load_config(user);
}

// Collects outputs in memory and writes them only once the run has finished.
class Outputs {
 public:
  Outputs(const RunConfig& rc, std::string command) : dir_(rc.output_dir) {
    manifest_.command = std::move(command);
    config_text_ = rc.resolved.dump(2) + "\n";
    manifest_.config_hash = git_blob_sha1(config_text_);
    add("config.resolved.json", config_text_);
  }

  void add(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }

  void add_map(const SpectrumMap& map, const std::string& stem) {
    const std::string csv = spectrum_csv(map);
    add(stem + ".csv", csv);
    add(stem + ".json", spectrum_sidecar(map, stem + ".csv", csv).dump(2) + "\n");
    add("plot_" + stem + ".py", plot_script(stem, map));
    manifest_.add_map(map);
  }

  RunManifest& manifest() { return manifest_; }

  fs::path commit(double wall_time_s) {
    for (const auto& [name, content] : files_) {
      atomic_write(dir_ / name, content);
      manifest_.outputs.push_back(name);
    }
    manifest_.wall_time_s = wall_time_s;
    const fs::path path = dir_ / "manifest.json";
    atomic_write(path, manifest_.to_json().dump(2) + "\n");
    return path;
  }

 private:
  static std::string plot_script(const std::string& stem, const SpectrumMap& map) {
    const std::string label = map.quantity == "raman" ? "Raman |signal| (dB)" : "|S21| (dB)";
    return "import csv\n"
           "import matplotlib.pyplot as plt\n"
           "import numpy as np\n\n"
           "rows = list(csv.DictReader(open('" + stem + ".csv')))\n"
           "a1 = np.unique([float(r['axis1']) for r in rows])\n"
           "a2 = np.unique([float(r['axis2']) for r in rows])\n"
           "z = np.array([float(r['db']) for r in rows]).reshape(len(a2), len(a1))\n"
           "plt.pcolormesh(a1, a2, z, shading='auto')\n"
           "plt.xlabel('" + map.grid.axis1.name + " (" + map.grid.axis1.unit + ")')\n"
           "plt.ylabel('" + map.grid.axis2.name + " (" + map.grid.axis2.unit + ")')\n"
           "plt.colorbar(label='" + label + "')\n"
           "plt.savefig('" + stem + ".png', dpi=150)\n";
  }

  fs::path dir_;
  RunManifest manifest_;
  std::string config_text_;
  std::vector<std::pair<std::string, std::string>> files_;
};

int finish(Outputs& out, double max_fraction, std::chrono::steady_clock::time_point t0) {
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const fs::path manifest = out.commit(wall);
  const RunManifest& m = out.manifest();
  std::cout << "wrote " << manifest.string() << " (" << m.outputs.size() << " outputs, " << m.failed_cells
            << "/" << m.cells << " failed cells)\n";
  const double frac = m.cells ? static_cast<double>(m.failed_cells) / m.cells : 0.0;
  if (frac > max_fraction) {
    std::cerr << "spincav: failure fraction " << frac << " exceeds " << max_fraction << "\n";
    return kExitConvergence;
  }
  return kExitOk;
}

MapOptions map_options(const RunConfig& rc) { return {rc.alternate, rc.threads, rc.db_offset}; }

int cmd_transmission(const RunConfig& rc) {
  const auto t0 = std::chrono::steady_clock::now();
  Outputs out(rc, "transmission");
  const SpectrumMap map = transmission_map(rc.model, rc.field_t.values, rc.drive_hz.values, map_options(rc));
  out.add_map(map, "transmission");
  return finish(out, rc.max_failure_fraction, t0);
}

int cmd_raman(const RunConfig& rc) {
  const auto t0 = std::chrono::steady_clock::now();
  Outputs out(rc, "raman");
  const SpectrumMap map =
      rc.raman_axis == "laser"
          ? raman_map_freq_laser(rc.model, rc.drive_hz.values, rc.laser_hz.values, map_options(rc))
          : raman_map_field(rc.model, rc.drive_hz.values, rc.field_t.values, map_options(rc));
  out.add_map(map, "raman");
  return finish(out, rc.max_failure_fraction, t0);
}

SpectrumMap recovery_map(const RecoveryRun& run, const RunConfig& rc) {
  SpectrumMap m;
  m.quantity = "s21";
  m.grid.axis1 = {"drive_frequency", "Hz", run.spectra.front().frequency_hz};
  m.grid.axis2 = {"time", "s", {}};
  for (const TransmissionSpectrum& s : run.spectra) {
    m.grid.axis2.values.push_back(s.time_s);
    m.values.insert(m.values.end(), s.s21.begin(), s.s21.end());
  }
  m.converged.assign(m.values.size(), 1);
  m.status.assign(m.values.size(), "converged");
  m.iterations.assign(m.values.size(), 0);
  m.db_offset = rc.db_offset;
  m.provenance = {{"params", to_json(rc.model)}, {"quantity", "s21"}, {"recovery", rc.resolved["recovery"]}};
  return m;
}

int cmd_t1(const RunConfig& rc) {
  const auto t0 = std::chrono::steady_clock::now();
  Outputs out(rc, "t1");
  FitSettings fs = rc.recovery.fit;
  fs.seed = rc.seed;
  RecoveryTrace trace;
  std::size_t unresolved = 0;
  if (!rc.recovery.trace_csv.empty()) {
    try {
      trace = trace_from_csv(read_file(rc.recovery.trace_csv));
    } catch (const SpincavError& e) {
      throw ConfigError(std::string("trace: ") + e.what());
    }
  } else {
    RecoveryCoupling coupling{rc.model, grid_values(rc.resolved["recovery"]["drive_hz"], "recovery.drive_hz")};
    RecoveryModel model = rc.recovery.model;
    model.boltzmann = boltzmann_factor(rc.model.spin_frequency_hz(rc.model.field_t), rc.model.temperature);
    const RecoveryRun run = simulate_recovery(model, coupling, rc.recovery.schedule, {rc.recovery.noise, rc.seed});
    const TraceExtraction ex = extract_trace(run, rc.recovery.extract);
    trace = ex.trace;
    unresolved = ex.unresolved_times.size();
    SpectrumMap spectra = recovery_map(run, rc);
    out.add_map(spectra, "recovery_spectra");
    out.add("recovery_trace.csv", trace_to_csv(trace));
    out.manifest().extra["unresolved_times"] = ex.unresolved_times;
  }
  json report;
  try {
    const T1Fit fit = fit_t1(trace, fs);
    report = to_json(fit);
    report["status"] = "converged";
  } catch (const SpincavError& e) {
    report = {{"status", "fit_failed"}, {"message", e.what()}, {"points", trace.times.size()}};
    ++out.manifest().failed_cells;
  }
  report["injected_t1_s"] = rc.recovery.trace_csv.empty() ? json(rc.recovery.model.t1) : json(nullptr);
  report["unresolved_spectra"] = unresolved;
  out.add("t1_fit.json", report.dump(2) + "\n");
  ++out.manifest().cells;
  std::cout << "T1 fit: " << report.dump() << "\n";
  const int code = finish(out, rc.max_failure_fraction, t0);
  return report["status"] == "converged" ? code : kExitConvergence;
}

int cmd_oracle(const RunConfig& rc) {
  const auto t0 = std::chrono::steady_clock::now();
  Outputs out(rc, "oracle-check");
  const OracleCheckReport rep = run_oracle_check(rc.oracle_check, rc.seed);
  out.add("oracle_check.json", rep.to_json().dump(2) + "\n");
  out.manifest().cells = rep.cases.size();
  out.manifest().failed_cells = rep.cases.size() - rep.passed;
  out.manifest().status_counts["pass"] = rep.passed;
  out.manifest().status_counts["fail"] = rep.cases.size() - rep.passed;
  std::cout << "oracle check: " << rep.passed << "/" << rep.cases.size() << " passed, max rho diff "
            << rep.max_rho_diff << ", max beta rel " << rep.max_beta_rel << "\n";
  return finish(out, rc.max_failure_fraction, t0);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Driven spin-ensemble cavity simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  CommonOptions opt;
  auto* transmission = app.add_subcommand("transmission", "cavity transmission map over drive and field");
  auto* raman = app.add_subcommand("raman", "Raman heterodyne map over drive and field or laser");
  auto* t1 = app.add_subcommand("t1", "saturation recovery simulation and T1 fit");
  auto* oracle = app.add_subcommand("oracle-check", "compare steady states with time-domain integration");
  for (auto* c : {transmission, raman, t1, oracle}) add_common(c, opt);
  t1->add_option("--trace", opt.trace, "fit this recovery trace CSV instead of simulating");

  auto* presets = app.add_subcommand("presets", "inspect built-in presets");
  presets->require_subcommand(1);
  auto* list = presets->add_subcommand("list", "list preset names");
  auto* show = presets->add_subcommand("show", "print the full config of a preset");
  std::string show_name;
  show->add_option("name", show_name)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (list->parsed()) {
      for (const PresetInfo& p : preset_catalog()) std::cout << p.name << "\t" << p.description << "\n";
      return kExitOk;
    }
    if (show->parsed()) {
      std::cout << preset_json(show_name).dump(2) << "\n";
      return kExitOk;
    }
    const RunConfig rc = resolve(opt);
    if (transmission->parsed()) return cmd_transmission(rc);
    if (raman->parsed()) return cmd_raman(rc);
    if (t1->parsed()) return cmd_t1(rc);
    if (oracle->parsed()) return cmd_oracle(rc);
  } catch (const ConfigError& e) {
    std::cerr << "spincav: config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "spincav: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
