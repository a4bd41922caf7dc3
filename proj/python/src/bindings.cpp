#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "spincav/config.hpp"
#include "spincav/errors.hpp"
#include "spincav/io.hpp"
#include "spincav/oracle_check.hpp"
#include "spincav/relaxation_analysis.hpp"
#include "spincav/spectra_engine.hpp"

namespace py = pybind11;
using namespace spincav;

namespace {

py::dict map_dict(const SpectrumMap& m) {
  const std::size_t n1 = m.grid.axis1.values.size(), n2 = m.grid.axis2.values.size();
  py::array_t<std::complex<double>> values({n2, n1});
  py::array_t<bool> converged({n2, n1});
  auto v = values.mutable_unchecked<2>();
  auto c = converged.mutable_unchecked<2>();
  for (std::size_t j2 = 0; j2 < n2; ++j2) {
    for (std::size_t j1 = 0; j1 < n1; ++j1) {
      v(j2, j1) = m.values[j2 * n1 + j1];
      c(j2, j1) = m.converged[j2 * n1 + j1] != 0;
    }
  }
  py::dict d;
  d["quantity"] = m.quantity;
  d["axis1_name"] = m.grid.axis1.name;
  d["axis2_name"] = m.grid.axis2.name;
  d["axis1"] = m.grid.axis1.values;
  d["axis2"] = m.grid.axis2.values;
  d["values"] = values;
  d["converged"] = converged;
  d["status"] = m.status;
  d["csv"] = spectrum_csv(m);
  return d;
}

MapOptions options(const RunConfig& rc) { return {rc.alternate, rc.threads, rc.db_offset}; }

RunConfig parse(const std::string& text) { return load_config_text(text); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "spin-ensemble cavity simulator core";
  m.attr("__version__") = kToolVersion;

  // Translators run newest first, so the derived type goes last.
  py::register_exception<SpincavError>(m, "SpincavError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("presets", [] {
    std::vector<std::pair<std::string, std::string>> out;
    for (const PresetInfo& p : preset_catalog()) out.emplace_back(p.name, p.description);
    return out;
  });
  m.def("preset_json", [](const std::string& name) { return preset_json(name).dump(); });
  m.def("resolve_config", [](const std::string& text) { return parse(text).resolved.dump(); },
        "merge a config over its preset and return the resolved document");

  m.def("transmission_map", [](const std::string& text) {
    const RunConfig rc = parse(text);
    py::gil_scoped_release release;
    SpectrumMap map = transmission_map(rc.model, rc.field_t.values, rc.drive_hz.values, options(rc));
    py::gil_scoped_acquire acquire;
    return map_dict(map);
  });
  m.def("raman_map", [](const std::string& text) {
    const RunConfig rc = parse(text);
    py::gil_scoped_release release;
    SpectrumMap map = rc.raman_axis == "laser"
                          ? raman_map_freq_laser(rc.model, rc.drive_hz.values, rc.laser_hz.values, options(rc))
                          : raman_map_field(rc.model, rc.drive_hz.values, rc.field_t.values, options(rc));
    py::gil_scoped_acquire acquire;
    return map_dict(map);
  });

  m.def("thermal_populations", [](double f_hz, double temperature) {
    const Populations p = thermal_populations(f_hz, {temperature});
    py::dict d;
    d["p_lower"] = p.p_lower;
    d["p_upper"] = p.p_upper;
    d["difference"] = p.difference();
    d["diff_rel_lower"] = p.diff_rel_lower;
    return d;
  });
  m.def("zeeman_frequencies", [](double field_t, const std::string& cooldown) {
    ZeemanModel z;
    if (cooldown == "ground") {
      z = ZeemanModel::ground_state_cooldown();
    } else if (cooldown == "excited") {
      z = ZeemanModel::excited_state_cooldown();
    } else {
      throw ConfigError("cooldown must be ground or excited");
    }
    const ZeemanLines l = zeeman_frequencies(z, field_t);
    py::dict d;
    d["f_spin_ground"] = l.f_spin_ground;
    d["f_spin_excited"] = l.f_spin_excited;
    std::vector<double> opt;
    for (const OpticalTransition& t : l.optical) opt.push_back(t.frequency_hz);
    d["optical"] = opt;
    return d;
  }, py::arg("field_t"), py::arg("cooldown") = "ground");

  m.def("fit_t1", [](std::vector<double> times, std::vector<double> splittings, int bootstrap, std::uint64_t seed) {
    RecoveryTrace tr{std::move(times), std::move(splittings), {}};
    FitSettings s;
    s.bootstrap = bootstrap;
    s.seed = seed;
    return to_json(fit_t1(tr, s)).dump();
  }, py::arg("times"), py::arg("splittings_hz"), py::arg("bootstrap") = 200, py::arg("seed") = 7);

  m.def("oracle_check", [](int instances, std::uint64_t seed) {
    OracleCheckConfig c;
    c.instances = instances;
    return run_oracle_check(c, seed).to_json().dump();
  }, py::arg("instances") = 5, py::arg("seed") = 1);

  m.def("git_blob_sha1", [](const py::bytes& data) { return git_blob_sha1(std::string(data)); });
}
