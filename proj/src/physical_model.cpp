#include "spincav/physical_model.hpp"

#include <cmath>

#include "spincav/constants.hpp"
#include "spincav/errors.hpp"

namespace spincav {

void CavityParams::validate() const {
  if (!(gamma_c1 > 0.0 && gamma_c2 > 0.0 && gamma_i >= 0.0)) {
    throw InvalidParameter("cavity: port rates must be > 0 and intrinsic loss >= 0");
  }
  if (!(total_linewidth() < omega_c)) {
    throw InvalidParameter("cavity: total linewidth must be below the resonance frequency");
  }
}

void IonModel::validate(bool thermal_equilibration) const {
  for (double r : {g_mu, gamma_opt, gamma_spin, gamma_phi2, gamma_phi3}) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidParameter("ion: rates must be finite and >= 0");
  }
  if (thermal_equilibration && !(gamma_spin > 0.0)) {
    throw InvalidParameter("ion: gamma_spin must be > 0 when thermal equilibration is simulated");
  }
  if (!(branching_lower >= 0.0 && branching_lower <= 1.0)) {
    throw InvalidParameter("ion: branching_lower must lie in [0, 1]");
  }
}

void EnsembleParams::validate() const {
  if (!(n_ions > 0.0)) throw InvalidParameter("ensemble: n_ions must be > 0");
  if (!(sigma_spin > 0.0 && sigma_opt > 0.0)) throw InvalidParameter("ensemble: widths must be > 0");
  if (!(std::abs(corr) < 1.0)) throw InvalidParameter("ensemble: |corr| must be < 1");
}

double input_amplitude_from_dbm(double power_dbm, double drive_hz, double insertion_loss_db) {
  if (!(drive_hz > 0.0)) throw InvalidParameter("drive frequency must be > 0");
  const double watts = 1e-3 * std::pow(10.0, (power_dbm - insertion_loss_db) / 10.0);
  return std::sqrt(watts / (kPlanck * drive_hz));
}

double dbm_from_input_amplitude(double amplitude, double drive_hz, double insertion_loss_db) {
  const double watts = amplitude * amplitude * kPlanck * drive_hz;
  return 10.0 * std::log10(watts / 1e-3) + insertion_loss_db;
}

ZeemanModel ZeemanModel::ground_state_cooldown() { return ZeemanModel{}; }

ZeemanModel ZeemanModel::excited_state_cooldown() {
  ZeemanModel z;
  z.g_opt_ground = 1.50;
  z.g_opt_excited = 1.45;
  return z;
}

void ZeemanModel::validate() const {
  if (!(g_spin_ground > 0.0 && g_spin_excited > 0.0 && g_opt_ground > 0.0 && g_opt_excited > 0.0)) {
    throw InvalidParameter("zeeman: g-factors must be > 0");
  }
}

ZeemanLines zeeman_frequencies(const ZeemanModel& z, double field_t) {
  if (!(field_t >= 0.0)) throw InvalidParameter("zeeman: field must be >= 0");
  const double mu_b_over_h = kBohrMagneton / kPlanck;
  ZeemanLines out;
  out.f_spin_ground = z.g_spin_ground * mu_b_over_h * field_t;
  out.f_spin_excited = z.g_spin_excited * mu_b_over_h * field_t;
  const double half_g = 0.5 * z.g_opt_ground * mu_b_over_h * field_t;
  const double half_e = 0.5 * z.g_opt_excited * mu_b_over_h * field_t;
  // Ground level energies -/+ half_g (a, b); excited -/+ half_e (c, d).
  out.optical[0] = {z.f_opt0_hz + half_e + half_g, GroundLevel::A, ExcitedLevel::D};
  out.optical[1] = {z.f_opt0_hz - half_e + half_g, GroundLevel::A, ExcitedLevel::C};
  out.optical[2] = {z.f_opt0_hz + half_e - half_g, GroundLevel::B, ExcitedLevel::D};
  out.optical[3] = {z.f_opt0_hz - half_e - half_g, GroundLevel::B, ExcitedLevel::C};
  return out;
}

double field_for_splitting(double g, double f_hz) {
  return f_hz * kPlanck / (g * kBohrMagneton);
}

double boltzmann_factor(double f_hz, double temperature) {
  if (temperature == 0.0) return 0.0;
  return std::exp(-kPlanck * f_hz / (kBoltzmann * temperature));
}

Populations thermal_populations(double f_hz, const ThermalState& t) {
  if (!(t.temperature > 0.0)) throw InvalidParameter("thermal: temperature must be > 0");
  if (!(f_hz > 0.0)) throw InvalidParameter("thermal: transition frequency must be > 0");
  const double x = kPlanck * f_hz / (kBoltzmann * t.temperature);
  const double r = std::exp(-x);
  Populations p;
  p.p_lower = 1.0 / (1.0 + r);
  p.p_upper = r / (1.0 + r);
  p.diff_rel_lower = -std::expm1(-x);
  return p;
}

double collective_coupling(const IonModel& ion, const EnsembleParams& ens, const Populations& pops) {
  const double n_eff = ens.n_ions * pops.difference();
  if (!(n_eff > 0.0)) return 0.0;
  return std::sqrt(n_eff) * ion.g_mu;
}

std::string to_string(Scheme s) { return s == Scheme::Lambda ? "lambda" : "vee"; }
std::string to_string(PumpedLevel p) { return p == PumpedLevel::Upper ? "upper" : "lower"; }

}  // namespace spincav
