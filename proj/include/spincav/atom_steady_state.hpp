#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>

#include "spincav/physical_model.hpp"

namespace spincav {

using Matrix3c = Eigen::Matrix3cd;
using Generator = Eigen::Matrix<Complex, 9, 9>;
using Vector9c = Eigen::Matrix<Complex, 9, 1>;

// rho_jk sits at vec index 3 j + k (row-major vectorization).
constexpr int vec_index(int j, int k) { return 3 * j + k; }

struct AtomDetunings {
  double delta2 = 0.0;  // microwave drive minus the ion's spin transition
  double delta3 = 0.0;  // optical pump minus the ion's pumped optical transition
};

struct DensityMatrix3 {
  Matrix3c rho = Matrix3c::Zero();

  double trace_error() const;
  double hermiticity_error() const;
  double min_eigenvalue() const;
};

struct Coherences {
  Complex sigma_mu{0.0, 0.0};  // <|1><2|> = rho_21
  Complex sigma_13{0.0, 0.0};  // output-transition lowering operator
};

// Level bookkeeping for one scheme. Frame energies are
//   E1 = 0, E2 = -delta2, E3 = E_pumped + s3 * delta3
// with s3 = -1 when level 3 lies above the pumped level (Lambda) and +1
// when it lies below (Vee).
struct LevelLayout {
  int pumped = 1;          // 0-based index of the microwave level tied to level 3
  int output_partner = 0;  // the other microwave level
  double s3 = -1.0;

  static LevelLayout of(const IonModel& ion);

  // Vec index of the output coherence that feeds the optical field.
  int output_index() const;
  // delta3 at which the output transition is resonant for a given delta2.
  double two_photon_delta3(double delta2) const;
};

// L = fixed + delta2 * diag(d2) + delta3 * diag(d3). The detuning terms are
// diagonal in the vectorized basis, so per-ion generators are cheap to form.
struct GeneratorParts {
  Generator fixed = Generator::Zero();
  Vector9c d2 = Vector9c::Zero();
  Vector9c d3 = Vector9c::Zero();
  LevelLayout layout;

  Generator at(const AtomDetunings& d) const;
};

// omega_mu = 2 g_mu beta; omega_p is the (real) pump Rabi frequency;
// boltzmann = exp(-h f_spin / k T) sets the upward spin rate.
GeneratorParts generator_parts(const IonModel& ion, Complex omega_mu, double omega_p,
                               double boltzmann);

Generator build_generator(const IonModel& ion, const AtomDetunings& d, Complex beta,
                          const DriveState& drive, const ThermalState& t,
                          double spin_frequency_hz);

// Solves L rho = 0 with the rho_11 row replaced by the trace constraint.
// Throws SingularGenerator when the kernel is not one-dimensional.
DensityMatrix3 steady_state(const Generator& L);

// Same solve without the conditioning check, returning the vectorized state.
Vector9c steady_state_vector(const Generator& L);

// Steady state with the optical pump off. Level 3 then only exchanges
// population, so the 5x5 block of populations and the 1-2 coherences is
// solved alone and the remaining coherences vanish.
Vector9c steady_state_pump_free(const GeneratorParts& parts, double delta2);

// Steady state averaged over delta3 ~ N(mean, std) at fixed delta2, computed
// exactly from the pole expansion of the rational dependence on delta3.
// Returns nullopt when the expansion is too ill-conditioned to trust.
std::optional<Vector9c> steady_state_optical_average(const GeneratorParts& parts, double delta2,
                                                     double mean3, double std3);

Coherences coherences(const DensityMatrix3& rho, const IonModel& ion = IonModel{});
Coherences coherences(const Vector9c& rho, const LevelLayout& layout);

DensityMatrix3 to_matrix(const Vector9c& v);

// Decay rate of the rho_21 coherence and total population exchange rate of
// the microwave pair, read off the generator diagonal.
double spin_coherence_decay(const GeneratorParts& parts);
double spin_population_rate(const GeneratorParts& parts);
// Decay rate of the pumped optical coherence.
double optical_coherence_decay(const GeneratorParts& parts);

}  // namespace spincav
