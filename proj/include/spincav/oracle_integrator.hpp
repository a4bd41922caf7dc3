#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spincav/atom_steady_state.hpp"
#include "spincav/cavity_field_solver.hpp"
#include "spincav/ensemble_integrator.hpp"

namespace spincav {

struct OracleConfig {
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  double stop_tol = 1e-8;      // relative change per chunk of 1 / gamma_min
  double max_horizon = 0.0;    // seconds; 0 means 2000 chunks
  std::string trajectory_csv;  // debug dump when non-empty
};

struct MetricSample {
  double t = 0.0;
  double metric = 0.0;
};

struct OracleResult {
  Complex beta{0.0, 0.0};
  std::vector<Vector9c> rho;
  Complex s_mu{0.0, 0.0};
  bool settled = false;
  double time = 0.0;
  double chunk = 0.0;
  std::vector<MetricSample> history;
};

// Smallest nonzero relaxation rate among cavity and ion rates.
double slowest_rate(const CavityParams& cav, const IonModel& ion);

// Cavity amplitude ODE coupled to one master equation per ensemble node.
// Node weights are used exactly as given, so the same DiscreteEnsemble fed to
// the fixed-point solver makes the two answers directly comparable.
OracleResult evolve_ensemble(const CavityParams& cav, const DiscreteEnsemble& ensemble,
                             const OracleConfig& config = {},
                             std::optional<Complex> beta0 = std::nullopt);

// Throws NoSteadyState when the stop criterion is not met by the horizon.
OracleResult evolve_to_steady(const CavityParams& cav, const DiscreteEnsemble& ensemble,
                              const OracleConfig& config = {},
                              std::optional<Complex> beta0 = std::nullopt);

// Largest real part of the Jacobian spectrum of the coupled equations at the
// fixed point `beta` (nodes at their steady states), on the Hermitian,
// unit-trace subspace. Positive means the fixed point is unstable.
double linear_growth_rate(const CavityParams& cav, const DiscreteEnsemble& ensemble, Complex beta);

// Single ion under a fixed generator.
struct AtomOracleResult {
  Vector9c rho = Vector9c::Zero();
  bool settled = false;
  double time = 0.0;
  std::vector<MetricSample> history;
};

AtomOracleResult evolve_atom(const Generator& L, const Vector9c& rho0, double chunk,
                             const OracleConfig& config = {});

}  // namespace spincav
