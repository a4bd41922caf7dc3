#include <cmath>

#include "doctest.h"
#include "spincav/constants.hpp"
#include "spincav/errors.hpp"
#include "spincav/physical_model.hpp"

using namespace spincav;

TEST_SUITE("physical-model") {
  TEST_CASE("zeeman lines follow the g-factors") {
    const ZeemanModel z = ZeemanModel::ground_state_cooldown();
    const double b = 0.04;
    const ZeemanLines l = zeeman_frequencies(z, b);
    const double mub_h = 9.2740100783e-24 / 6.62607015e-34;
    CHECK(l.f_spin_ground == doctest::Approx(8.84 * mub_h * b).epsilon(1e-14));
    CHECK(l.f_spin_excited == doctest::Approx(10.0 * mub_h * b).epsilon(1e-14));
    // Outer optical lines differ by the summed optical g-factors.
    const double outer = l.optical[0].frequency_hz - l.optical[3].frequency_hz;
    CHECK(outer == doctest::Approx((1.72 + 1.28) * mub_h * b).epsilon(1e-6));
    const double inner = l.optical[2].frequency_hz - l.optical[1].frequency_hz;
    CHECK(inner == doctest::Approx((1.28 - 1.72) * mub_h * b).epsilon(1e-6));
    CHECK(l.optical[0].ground == GroundLevel::A);
    CHECK(l.optical[3].excited == ExcitedLevel::C);
  }

  TEST_CASE("field for splitting inverts the zeeman map") {
    const double b = field_for_splitting(8.84, 5020e6);
    CHECK(zeeman_frequencies(ZeemanModel{}, b).f_spin_ground == doctest::Approx(5020e6).epsilon(1e-13));
    CHECK_THROWS_AS(zeeman_frequencies(ZeemanModel{}, -1.0), InvalidParameter);
  }

  TEST_CASE("thermal populations") {
    const double x = 6.62607015e-34 * 4.7e9 / (1.380649e-23 * 4.0);
    const Populations p = thermal_populations(4.7e9, {4.0});
    CHECK(p.diff_rel_lower == doctest::Approx(-std::expm1(-x)).epsilon(1e-12));
    CHECK(p.difference() == doctest::Approx(std::tanh(0.5 * x)).epsilon(1e-12));
    CHECK(p.p_lower + p.p_upper == doctest::Approx(1.0));
    CHECK_THROWS_AS(thermal_populations(5e9, {0.0}), InvalidParameter);
    CHECK(boltzmann_factor(5e9, 0.0) == 0.0);
  }

  TEST_CASE("dBm conversion") {
    const double f = 5e9;
    const double a = input_amplitude_from_dbm(-30.0, f);
    CHECK(a * a == doctest::Approx(1e-6 / (6.62607015e-34 * f)).epsilon(1e-12));
    const double lossy = input_amplitude_from_dbm(-30.0, f, 10.0);
    CHECK(lossy * lossy == doctest::Approx(1e-7 / (6.62607015e-34 * f)).epsilon(1e-12));
    CHECK(dbm_from_input_amplitude(lossy, f, 10.0) == doctest::Approx(-30.0).epsilon(1e-12));
  }

  TEST_CASE("collective coupling") {
    IonModel ion;
    ion.g_mu = 3.0;
    EnsembleParams ens;
    ens.n_ions = 1e6;
    Populations pops;
    pops.p_lower = 0.7;
    pops.p_upper = 0.3;
    CHECK(collective_coupling(ion, ens, pops) == doctest::Approx(3.0 * std::sqrt(4e5)));
    pops.p_lower = 0.3;
    pops.p_upper = 0.7;
    CHECK(collective_coupling(ion, ens, pops) == 0.0);
  }

  TEST_CASE("validation rejects negative rates") {
    CavityParams c{angular(5e9), 1.0, 1.0, -1.0};
    CHECK_THROWS_AS(c.validate(), InvalidParameter);
    IonModel ion;
    ion.gamma_spin = -1.0;
    CHECK_THROWS_AS(ion.validate(), InvalidParameter);
    EnsembleParams e;
    e.corr = 2.0;
    CHECK_THROWS_AS(e.validate(), InvalidParameter);
  }
}
