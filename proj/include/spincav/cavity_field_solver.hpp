#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spincav/ensemble_integrator.hpp"
#include "spincav/physical_model.hpp"

namespace spincav {

struct SolverSettings {
  double tol = 1e-8;
  int max_iterations = 500;
  int damped_iterations = 25;  // damped steps before Newton takes over
  double min_damping = 1e-3;
  double multistable_rel = 1e-4;
  bool try_all_seeds = true;
  bool linear_shortcut = true;
  double linear_tol = 1e-10;
  bool refine = true;
};

enum class SolveStatus { Converged, MultistableSuspected, NoConvergence, QuadratureNotConverged };

std::string to_string(SolveStatus s);

struct FieldSolution {
  Complex beta{0.0, 0.0};
  Complex beta_out{0.0, 0.0};
  Complex raman_out{0.0, 0.0};
  Complex s_mu{0.0, 0.0};
  int iterations = 0;
  double residual = 0.0;  // |F(beta) - beta| / max(|beta|, |beta_linear|)
  SolveStatus status = SolveStatus::NoConvergence;
  std::string seed;
  bool linear_regime = false;
  std::vector<Complex> alternatives;  // other fixed points reached from other seeds
  QuadratureReport quadrature;
  std::string message;

  // A fixed point was found (possibly one of several).
  bool converged() const {
    return status == SolveStatus::Converged || status == SolveStatus::MultistableSuspected;
  }
};

// gamma_tot / 2 - i (omega_drive - omega_c)
Complex cavity_denominator(const CavityParams& cav, const DriveState& drive);

// beta = (-i S + sqrt(gamma_c1) beta_in) / (gamma_tot / 2 - i delta)
Complex linear_beta(const CavityParams& cav, const DriveState& drive, Complex s_mu);

// Largest intracavity amplitude a passive ensemble allows.
double passive_bound(const CavityParams& cav, const DriveState& drive);

// Non-throwing solve; the status field carries any failure.
FieldSolution solve_field(const CavityParams& cav, const DriveState& drive, SourceModel& model,
                          const SolverSettings& settings = {},
                          std::optional<Complex> warm_start = std::nullopt);

// Throws NoConvergence, MultistableSuspected or QuadratureNotConverged.
FieldSolution solve_self_consistent(const CavityParams& cav, const DriveState& drive,
                                    SourceModel& model, const SolverSettings& settings = {},
                                    std::optional<Complex> warm_start = std::nullopt);

FieldSolution solve_self_consistent(const CavityParams& cav, const EnsembleContext& ctx,
                                    const QuadratureSettings& quad = {},
                                    const SolverSettings& settings = {},
                                    std::optional<Complex> warm_start = std::nullopt);

struct CavityOutputs {
  Complex s21{0.0, 0.0};
  Complex raman{0.0, 0.0};
};

CavityOutputs outputs(const FieldSolution& sol, const CavityParams& cav, const DriveState& drive);

}  // namespace spincav
