#include <cmath>

#include "doctest.h"
#include "spincav/config.hpp"
#include "spincav/constants.hpp"
#include "spincav/spectra_engine.hpp"

using namespace spincav;

TEST_SUITE("spectra-engine") {
  TEST_CASE("empty cavity map is a Lorentzian") {
    ModelParams p = load_preset("ground_state_epr").model;
    p.n_ions = 0.0;
    std::vector<double> drive;
    for (int i = 0; i <= 40; ++i) drive.push_back(5010e6 + 0.5e6 * i);
    const SpectrumMap m = transmission_map(p, {p.field_t}, drive);
    const double g = p.cavity.total_linewidth();
    for (std::size_t i = 0; i < drive.size(); ++i) {
      const double d = angular(drive[i]) - p.cavity.omega_c;
      const double expect = p.cavity.gamma_c1 * p.cavity.gamma_c2 / (0.25 * g * g + d * d);
      CHECK(std::norm(m.values[i]) == doctest::Approx(expect).epsilon(1e-12));
    }
    CHECK(m.failures() == 0);
  }

  TEST_CASE("branch separation on a synthetic map") {
    SpectrumMap m;
    m.grid.axis1 = {"drive", "Hz", {}};
    m.grid.axis2 = {"row", "", {0.0, 1.0}};
    for (int i = 0; i <= 400; ++i) m.grid.axis1.values.push_back(i * 0.25);
    for (double half : {20.0, 30.0}) {
      for (double x : m.grid.axis1.values) {
        const double a = x - 50.0 + half, b = x - 50.0 - half;
        m.values.push_back(Complex(1.0 / (1.0 + a * a) + 1.0 / (1.0 + b * b), 0.0));
        m.converged.push_back(1);
      }
    }
    const BranchReport r = branch_separation(m);
    REQUIRE(r.resolved_rows == 2);
    CHECK(r.min_row == 0);
    CHECK(r.min_separation == doctest::Approx(40.0).epsilon(1e-3));
    CHECK(r.rows[1].separation == doctest::Approx(60.0).epsilon(1e-3));
  }

  TEST_CASE("threading does not change the map") {
    ModelParams p = load_preset("ground_state_epr").model;
    p.probe_power_dbm = -30.0;
    const double fs = p.field_t;
    std::vector<double> drive;
    for (int i = 0; i < 9; ++i) drive.push_back(5000e6 + 5e6 * i);
    MapOptions a, b;
    b.threads = 2;
    const SpectrumMap m1 = transmission_map(p, {0.998 * fs, fs}, drive, a);
    const SpectrumMap m2 = transmission_map(p, {0.998 * fs, fs}, drive, b);
    REQUIRE(m1.values.size() == m2.values.size());
    for (std::size_t i = 0; i < m1.values.size(); ++i) CHECK(m1.values[i] == m2.values[i]);
  }

  TEST_CASE("absorption area matches the sampled spectrum") {
    const ZeemanModel z;
    const double field = 0.05;
    const Populations pops = thermal_populations(5e9, {0.5});
    const std::array<double, 4> widths{270e6, 410e6, 150e6, 200e6};
    const std::array<double, 4> amps{1.0, 0.8, 0.6, 1.2};
    const ZeemanLines l = zeeman_frequencies(z, field);
    std::vector<double> nu;
    const double lo = l.optical[3].frequency_hz - 5e9, step = 1e6;
    for (int i = 0; i < 20000; ++i) nu.push_back(lo + i * step);
    const AbsorptionSpectrum s = absorption_spectrum(z, field, pops, widths, amps, nu);
    double area = 0.0;
    for (double od : s.optical_depth) area += od * step;
    CHECK(area == doctest::Approx(absorption_area(pops, widths, amps)).epsilon(1e-6));
    CHECK(s.transmission[0] == doctest::Approx(std::exp(-s.optical_depth[0])));
  }

  TEST_CASE("no pump, no Raman output") {
    ModelParams p = load_preset("ground_low_power").model;
    p.pump_rabi = 0.0;
    const double fs = p.spin_frequency_hz(p.field_t);
    const SpectrumMap m = raman_map_field(p, {fs - 5e6, fs, fs + 5e6}, {p.field_t});
    for (const Complex& v : m.values) CHECK(std::abs(v) == 0.0);
    CHECK(std::isinf(m.db(1)));
  }

  TEST_CASE("transitions from the emptier ground level give the stronger Raman signal") {
    const ModelParams p = load_preset("ground_low_power").model;
    const double fs = p.spin_frequency_hz(p.field_t);
    const ZeemanLines l = zeeman_frequencies(p.zeeman, p.field_t);
    double r[4];
    for (int i = 0; i < 4; ++i)
      r[i] = std::abs(raman_at(p, p.field_t, fs, l.optical[i].frequency_hz, Complex(1e3, 0.0)));
    CHECK(std::min(r[2], r[3]) > std::max(r[0], r[1]));
  }

  TEST_CASE("grid validation") {
    SweepGrid g;
    CHECK_THROWS(g.validate());
  }
}
