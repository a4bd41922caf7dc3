#include <cmath>
#include <random>

#include "doctest.h"
#include "spincav/oracle_check.hpp"
#include "spincav/oracle_integrator.hpp"

using namespace spincav;

TEST_SUITE("oracle-integrator") {
  TEST_CASE("single ion relaxes to the kernel state") {
    IonModel ion;
    ion.gamma_opt = 2e4;
    ion.gamma_spin = 1e4;
    ion.gamma_phi2 = 3e4;
    ion.gamma_phi3 = 1e4;
    const Generator L = generator_parts(ion, Complex(2e4, 1e4), 3e4, 0.6).at({1e4, -2e4});
    Vector9c rho0 = Vector9c::Zero();
    rho0(vec_index(0, 0)) = 1.0;
    const AtomOracleResult r = evolve_atom(L, rho0, 1e-4);
    REQUIRE(r.settled);
    CHECK((r.rho - steady_state_vector(L)).cwiseAbs().maxCoeff() < 1e-6);
  }

  TEST_CASE("empty ensemble reaches the bare cavity field") {
    const CavityParams cav{1e9, 1e5, 1e5, 5e4};
    EnsembleContext ctx;
    ctx.ion.gamma_spin = 1e4;
    ctx.drive.beta_in = Complex(10.0, 0.0);
    ctx.drive.omega_drive = 1e9 + 3e4;
    const DiscreteEnsemble none(ctx, {});
    const OracleResult r = evolve_to_steady(cav, none);
    const Complex expect = std::sqrt(cav.gamma_c1) * ctx.drive.beta_in / Complex(1.25e5, -3e4);
    CHECK(std::abs(r.beta - expect) < 1e-6 * std::abs(expect));
  }

  TEST_CASE("randomized instances agree with the fixed point") {
    std::mt19937_64 rng(99);
    const OracleCheckConfig cfg;
    for (int i = 0; i < 5; ++i) {
      const OracleCase c = check_instance(random_instance(rng), cfg, i);
      CAPTURE(c.message);
      CHECK(c.pass);
      CHECK(c.rho_diff < 1e-6);
    }
  }

  TEST_CASE("settled runs settle monotonically") {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 3; ++i) {
      OracleInstance inst = random_instance(rng);
      const DiscreteEnsemble ens(inst.context, hermite_grid(inst.context.distribution(), 3, 2));
      const OracleResult r = evolve_ensemble(inst.cavity, ens);
      if (!r.settled) continue;
      // Final decade: t from t_end / 10 to t_end.
      for (std::size_t k = 0; k + 1 < r.history.size(); ++k)
        if (r.history[k].t >= 0.1 * r.time) CHECK(r.history[k + 1].metric <= r.history[k].metric);
    }
  }

  TEST_CASE("fixed point stability") {
    std::mt19937_64 rng(5);
    OracleInstance inst = random_instance(rng);
    EnsembleContext& ctx = inst.context;
    ctx.drive.omega_pump = 0.0;
    DiscreteEnsemble ens(ctx, hermite_grid(ctx.distribution(), 3, 1));
    const FieldSolution fp = solve_field(inst.cavity, ctx.drive, ens);
    REQUIRE(fp.converged());
    CHECK(linear_growth_rate(inst.cavity, ens, fp.beta) < 0.0);
  }

  TEST_CASE("slowest rate") {
    const CavityParams cav{1e9, 1e6, 1e6, 0.0};
    IonModel ion;
    ion.gamma_spin = 30.0;
    ion.gamma_opt = 1e3;
    CHECK(slowest_rate(cav, ion) == doctest::Approx(30.0));
  }
}
