#pragma once

#include <array>
#include <complex>
#include <string>

namespace spincav {

using Complex = std::complex<double>;

// All rates and frequencies in these structs are angular (rad/s) unless the
// member name ends in _hz. Population decay and dephasing rates are plain
// rates (1/s) and enter the master equation unscaled.

struct CavityParams {
  double omega_c = 0.0;   // resonance
  double gamma_c1 = 0.0;  // input port coupling
  double gamma_c2 = 0.0;  // output port coupling
  double gamma_i = 0.0;   // intrinsic loss

  double total_linewidth() const { return gamma_c1 + gamma_c2 + gamma_i; }
  void validate() const;
};

enum class Scheme { Lambda, Vee };

// Which microwave level the optical pump addresses. Lambda: level 3 is the
// optical excited state above the ground doublet {1, 2}. Vee: levels {1, 2}
// are the excited doublet and level 3 is the ground level below them.
enum class PumpedLevel { Upper, Lower };

struct IonModel {
  Scheme scheme = Scheme::Lambda;
  PumpedLevel pumped = PumpedLevel::Upper;
  double g_mu = 0.0;        // single-ion microwave coupling, rad/s
  double g_o = 1.0;         // optical coupling, arbitrary units
  double gamma_opt = 0.0;   // optical population decay, 1/s
  double gamma_spin = 0.0;  // downward spin relaxation 1/T1, 1/s
  double gamma_phi2 = 0.0;  // pure dephasing of level 2, 1/s
  double gamma_phi3 = 0.0;  // pure dephasing of level 3, 1/s
  double branching_lower = 0.5;  // Lambda only: fraction of optical decay into level 1

  void validate(bool thermal_equilibration = true) const;
};

struct EnsembleParams {
  double n_ions = 0.0;
  double sigma_spin = 0.0;  // std of the spin detuning, rad/s
  double sigma_opt = 0.0;   // std of the optical detuning, rad/s
  double corr = 0.0;        // correlation of spin and optical detunings

  void validate() const;
};

struct DriveState {
  Complex beta_in{0.0, 0.0};  // sqrt(photons/s)
  double omega_drive = 0.0;   // microwave drive frequency
  double omega_pump = 0.0;    // optical pump Rabi frequency
  double omega_laser = 0.0;   // optical pump frequency
};

// |beta_in|^2 = P / (h f). `insertion_loss_db` is subtracted from the
// source power before conversion.
double input_amplitude_from_dbm(double power_dbm, double drive_hz,
                                double insertion_loss_db = 0.0);
double dbm_from_input_amplitude(double amplitude, double drive_hz,
                                double insertion_loss_db = 0.0);

enum class GroundLevel { A, B };    // a lower, b upper
enum class ExcitedLevel { C, D };   // c lower, d upper

struct OpticalTransition {
  double frequency_hz = 0.0;
  GroundLevel ground = GroundLevel::A;
  ExcitedLevel excited = ExcitedLevel::C;
};

// Site-1 zero-field optical line, 1536.4753 nm in vacuum.
inline constexpr double kSiteOneLineHz = 299792458.0 / 1536.4753e-9;

struct ZeemanModel {
  double g_spin_ground = 8.84;
  double g_spin_excited = 10.0;
  double g_opt_ground = 1.72;
  double g_opt_excited = 1.28;
  double f_opt0_hz = kSiteOneLineHz;

  // Optical g-factors measured in the two cooldowns.
  static ZeemanModel ground_state_cooldown();
  static ZeemanModel excited_state_cooldown();

  void validate() const;
};

struct ZeemanLines {
  double f_spin_ground = 0.0;   // Hz
  double f_spin_excited = 0.0;  // Hz
  // Transitions 1..4: a->d, a->c, b->d, b->c.
  std::array<OpticalTransition, 4> optical{};
};

ZeemanLines zeeman_frequencies(const ZeemanModel& z, double field_t);

// Field at which a doublet with the given g-factor splits by `f_hz`.
double field_for_splitting(double g, double f_hz);

struct ThermalState {
  double temperature = 0.0;  // K
};

struct Populations {
  double p_lower = 0.5;
  double p_upper = 0.5;
  // (p_lower - p_upper) / p_lower = 1 - exp(-h f / k T).
  double diff_rel_lower = 0.0;

  // p_lower - p_upper = tanh(h f / 2 k T).
  double difference() const { return p_lower - p_upper; }
};

Populations thermal_populations(double f_hz, const ThermalState& t);

// exp(-h f / k T); 0 when the temperature is exactly zero.
double boltzmann_factor(double f_hz, double temperature);

// sqrt(N (p_lower - p_upper)) g_mu, clamped at zero for inverted ensembles.
// Returned in rad/s like g_mu.
double collective_coupling(const IonModel& ion, const EnsembleParams& ens,
                           const Populations& pops);

std::string to_string(Scheme s);
std::string to_string(PumpedLevel p);

}  // namespace spincav
