#include <cmath>
#include <random>

#include "doctest.h"
#include "spincav/atom_steady_state.hpp"
#include "spincav/errors.hpp"

using namespace spincav;

namespace {

IonModel test_ion(Scheme s, PumpedLevel p) {
  IonModel ion;
  ion.scheme = s;
  ion.pumped = p;
  ion.g_mu = 1.0;
  ion.gamma_opt = 3e4;
  ion.gamma_spin = 2e3;
  ion.gamma_phi2 = 5e4;
  ion.gamma_phi3 = 1e5;
  return ion;
}

}  // namespace

TEST_SUITE("atom-steady-state") {
  TEST_CASE("pump-free state matches the two-level Bloch solution") {
    const IonModel ion = test_ion(Scheme::Lambda, PumpedLevel::Upper);
    const double b = 0.4;
    const double gdown = ion.gamma_spin, gup = ion.gamma_spin * b;
    const double g1 = gdown + gup, g2 = 0.5 * g1 + ion.gamma_phi2;
    const double w0 = (gdown - gup) / (gdown + gup);
    for (double om : {1e2, 3e4, 1e6}) {
      for (double d2 : {0.0, 4e4, -2e5}) {
        const Complex omega(om * 0.6, om * 0.8);
        const Vector9c v = steady_state_vector(generator_parts(ion, omega, 0.0, b).at({d2, 0.0}));
        const double den = g2 * g2 + d2 * d2;
        const double w = w0 / (1.0 + std::norm(omega) * g2 / (g1 * den));
        const Complex rho21 = Complex(0.0, -0.5) * omega * w / Complex(g2, -d2);
        CAPTURE(om);
        CAPTURE(d2);
        CHECK(std::abs(v(vec_index(1, 0)) - rho21) < 1e-10 * std::abs(rho21) + 1e-15);
        CHECK(std::real(v(vec_index(0, 0)) - v(vec_index(1, 1))) == doctest::Approx(w).epsilon(1e-10));
        CHECK(std::abs(v(vec_index(2, 2))) < 1e-14);
      }
    }
  }

  TEST_CASE("steady state is a physical density matrix") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (Scheme s : {Scheme::Lambda, Scheme::Vee}) {
      for (PumpedLevel p : {PumpedLevel::Upper, PumpedLevel::Lower}) {
        for (int k = 0; k < 20; ++k) {
          const IonModel ion = test_ion(s, p);
          const GeneratorParts parts = generator_parts(ion, Complex(3e4 * u(rng), 3e4 * u(rng)),
                                                       5e4 * std::abs(u(rng)), 0.5 + 0.4 * u(rng));
          const DensityMatrix3 r = steady_state(parts.at({1e5 * u(rng), 1e5 * u(rng)}));
          CHECK(r.trace_error() < 1e-12);
          CHECK(r.hermiticity_error() < 1e-12);
          CHECK(r.min_eigenvalue() > -1e-12);
        }
      }
    }
  }

  TEST_CASE("pump-free block solve equals the full solve") {
    const IonModel ion = test_ion(Scheme::Lambda, PumpedLevel::Upper);
    const GeneratorParts parts = generator_parts(ion, Complex(2e4, -1e4), 0.0, 0.3);
    for (double d2 : {-1e5, 0.0, 3e4}) {
      const Vector9c a = steady_state_pump_free(parts, d2);
      const Vector9c b = steady_state_vector(parts.at({d2, 0.0}));
      CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  TEST_CASE("optical average matches brute-force integration over delta3") {
    for (Scheme s : {Scheme::Lambda, Scheme::Vee}) {
      const IonModel ion = test_ion(s, PumpedLevel::Upper);
      const GeneratorParts parts = generator_parts(ion, Complex(1e4, 0.0), 4e4, 0.5);
      const double d2 = 2e4, mean3 = 1e4, sd3 = 3e5;
      const auto avg = steady_state_optical_average(parts, d2, mean3, sd3);
      REQUIRE(avg.has_value());
      const int n = 200001;
      const double lo = mean3 - 10 * sd3, h = 20 * sd3 / (n - 1);
      Vector9c acc = Vector9c::Zero();
      for (int i = 0; i < n; ++i) {
        const double x = lo + i * h;
        const double wt = (i == 0 || i == n - 1) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        const double dens = std::exp(-0.5 * (x - mean3) * (x - mean3) / (sd3 * sd3));
        acc += wt * dens * steady_state_vector(parts.at({d2, x}));
      }
      acc *= h / 3.0 / (sd3 * std::sqrt(2.0 * 3.141592653589793));
      CHECK((*avg - acc).cwiseAbs().maxCoeff() < 1e-8);
    }
  }

  // Conjugation also flips both Rabi signs; the unitary diag(1, -1, 1) undoes
  // that and negates rho_21, so sigma_mu maps to -conj(sigma_mu).
  TEST_CASE("conjugation symmetry") {
    for (Scheme sc : {Scheme::Lambda, Scheme::Vee}) {
      const IonModel ion = test_ion(sc, PumpedLevel::Upper);
      const Complex beta(2e4, 7e3);
      const Vector9c a = steady_state_vector(generator_parts(ion, beta, 3e4, 0.5).at({2e4, -5e4}));
      const Vector9c b = steady_state_vector(generator_parts(ion, std::conj(beta), 3e4, 0.5).at({-2e4, 5e4}));
      CHECK(std::abs(a(vec_index(1, 0)) + std::conj(b(vec_index(1, 0)))) < 1e-13);
    }
  }

  TEST_CASE("linear response by finite differences") {
    const IonModel ion = test_ion(Scheme::Lambda, PumpedLevel::Upper);
    const double b = 0.3, d2 = 3e4, h = 1e-2;
    const double g1 = ion.gamma_spin * (1.0 + b), g2 = 0.5 * g1 + ion.gamma_phi2;
    const double w0 = (1.0 - b) / (1.0 + b);
    const Complex exact = Complex(0.0, -0.5) * w0 / Complex(g2, -d2);
    const Complex fd = (steady_state_vector(generator_parts(ion, h, 0.0, b).at({d2, 0.0}))(vec_index(1, 0)) -
                        steady_state_vector(generator_parts(ion, -h, 0.0, b).at({d2, 0.0}))(vec_index(1, 0))) /
                       (2.0 * h);
    CHECK(std::abs(fd - exact) < 1e-6 * std::abs(exact));
  }

  TEST_CASE("optical output needs both drives") {
    const IonModel ion = test_ion(Scheme::Lambda, PumpedLevel::Upper);
    const LevelLayout l = LevelLayout::of(ion);
    auto out = [&](Complex om, double op) {
      return std::abs(coherences(steady_state_vector(generator_parts(ion, om, op, 0.5).at({1e4, 2e4})), l).sigma_13);
    };
    const double both = out(1e3, 1e3);
    CHECK(both > 0.0);
    CHECK(out(0.0, 1e3) < 1e-12 * both);
    CHECK(out(1e3, 0.0) < 1e-12 * both);
    // Bilinear at weak drives.
    CHECK(out(2e3, 1e3) == doctest::Approx(2.0 * both).epsilon(1e-4));
  }

  TEST_CASE("resonant saturation removes the coherence") {
    const IonModel ion = test_ion(Scheme::Lambda, PumpedLevel::Upper);
    const double weak = std::abs(steady_state_vector(generator_parts(ion, 1e5, 0.0, 0.5).at({0.0, 0.0}))(vec_index(1, 0)));
    const double strong = std::abs(steady_state_vector(generator_parts(ion, 1e10, 0.0, 0.5).at({0.0, 0.0}))(vec_index(1, 0)));
    CHECK(strong < 1e-3 * weak);
  }

  TEST_CASE("zero-rate generator is singular") {
    IonModel ion;
    ion.g_mu = 1.0;
    CHECK_THROWS_AS(steady_state(generator_parts(ion, Complex(0.0, 0.0), 0.0, 0.0).at({0.0, 0.0})),
                    SingularGenerator);
  }

  TEST_CASE("level layout") {
    IonModel ion;
    const LevelLayout l = LevelLayout::of(ion);
    CHECK(l.pumped == 1);
    CHECK(l.output_index() == vec_index(2, 0));
    ion.scheme = Scheme::Vee;
    ion.pumped = PumpedLevel::Lower;
    const LevelLayout v = LevelLayout::of(ion);
    CHECK(v.output_index() == vec_index(1, 2));
    CHECK(v.two_photon_delta3(5.0) == doctest::Approx(-5.0));
  }
}
