#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

#include "spincav/atom_steady_state.hpp"
#include "spincav/physical_model.hpp"
#include "spincav/quadrature.hpp"

namespace spincav {

struct QuadratureSettings {
  int inner_nodes = 401;     // uniform Simpson nodes across each resonance window (odd)
  int hermite_nodes = 33;    // used when no resonance window meets the distribution
  int tail_order = 6;        // Gauss-Legendre order per graded tail panel
  double rel_tol = 1e-3;
  int max_level = 4;         // each level doubles every node count
  double support_sigmas = 8.0;
  double window_homogeneous = 10.0;
  double window_rabi = 5.0;
  // Optical axis, used only on the numeric route.
  int optical_inner_nodes = 97;
  int optical_tail_order = 6;
  bool analytic_optical = true;
};

// Bivariate Gaussian over (delta2, delta3) in angular units.
struct InhomogeneousDistribution {
  double center2 = 0.0;
  double center3 = 0.0;
  double sigma2 = 0.0;
  double sigma3 = 0.0;
  double corr = 0.0;

  double density(double delta2, double delta3) const;
  double conditional_mean3(double delta2) const;
  double conditional_sigma3() const;
};

struct SourceTerms {
  Complex s_mu{0.0, 0.0};
  Complex s_opt{0.0, 0.0};
};

struct QuadratureReport {
  int level = 0;
  std::vector<std::size_t> nodes_per_level;
  std::vector<double> error_per_level;  // change against the next level
  double window_lo = 0.0;
  double window_hi = 0.0;
  bool windowed = false;
  double error_estimate = 0.0;
  bool converged = false;
  std::size_t optical_fallbacks = 0;
};

// Everything that fixes an ensemble except the intracavity amplitude.
struct EnsembleContext {
  IonModel ion;
  EnsembleParams ens;
  DriveState drive;
  double spin_center = 0.0;     // ensemble-center microwave transition, rad/s
  double optical_center = 0.0;  // ensemble-center pumped optical transition, rad/s
  double boltzmann = 0.0;       // exp(-h f_spin / k T)
  double population_weight = 1.0;

  InhomogeneousDistribution distribution() const;
};

// Rule for integral f(x) N(x; center, sigma) dx; weights include the density.
struct AxisRule {
  std::vector<double> x;
  std::vector<double> w;
  double window_lo = 0.0;
  double window_hi = 0.0;
  bool windowed = false;
};

struct AxisLayout {
  int inner_nodes = 401;
  int hermite_nodes = 33;
  int tail_order = 6;
  double support_sigmas = 8.0;
};

AxisRule build_axis_rule(double center, double sigma, const std::vector<double>& resonances,
                         double half_width, const AxisLayout& layout, int level);

// Source of the collective terms S(beta) seen by the cavity solver.
class SourceModel {
 public:
  virtual ~SourceModel() = default;
  // Freeze the quadrature layout for amplitudes near `beta_design`.
  virtual void prepare(Complex beta_design) = 0;
  // Amplitude the current layout was designed for.
  virtual double design_amplitude() const = 0;
  // Amplitude well inside the linear-response regime.
  virtual double weak_amplitude() const = 0;
  // Evaluation on the frozen layout at the working level.
  virtual SourceTerms evaluate(Complex beta, bool with_optical) const = 0;
  // Adaptive refinement at `beta`; may raise the working level.
  virtual SourceTerms refine(Complex beta) = 0;
  virtual QuadratureReport report() const = 0;
};

class EnsembleIntegrator final : public SourceModel {
 public:
  EnsembleIntegrator(EnsembleContext ctx, QuadratureSettings settings = {});

  void prepare(Complex beta_design) override;
  double design_amplitude() const override { return design_amplitude_; }
  double weak_amplitude() const override;
  SourceTerms evaluate(Complex beta, bool with_optical = true) const override;
  SourceTerms refine(Complex beta) override;
  QuadratureReport report() const override { return report_; }

  // Integration at an explicit level, bypassing the adaptive loop.
  SourceTerms evaluate_at_level(Complex beta, int level, bool with_optical = true) const;
  // Levels 0 and 1 only; the estimate is always recorded, never thrown.
  SourceTerms refine_once(Complex beta);

  // Adaptive integration with a fresh layout designed for `beta`.
  SourceTerms integrate(Complex beta);

  // Force the nested numeric quadrature over delta3 (reference route).
  void set_numeric_optical(bool on) { numeric_optical_ = on; }

  const EnsembleContext& context() const { return ctx_; }
  double spin_window_half_width(Complex beta) const;
  double optical_window_half_width(Complex beta) const;
  std::size_t node_count(int level) const;

 private:
  struct Sums {
    Complex mu{0.0, 0.0};
    Complex opt{0.0, 0.0};
    double abs_mu = 0.0;
    double abs_opt = 0.0;
  };
  const AxisRule& rule(int level) const;
  Sums sums(Complex beta, int level, bool with_optical) const;
  SourceTerms scale(const Sums& s) const;
  double relative_change(const Sums& coarse, const Sums& fine) const;

  EnsembleContext ctx_;
  QuadratureSettings settings_;
  double design_amplitude_ = 0.0;
  int working_level_ = 0;
  bool numeric_optical_ = false;
  mutable std::vector<std::unique_ptr<AxisRule>> rules_;
  QuadratureReport report_;
};

// Discrete ensemble of ion classes with explicit weights; disables quadrature.
struct DiscreteNode {
  double delta2 = 0.0;
  double delta3 = 0.0;
  double weight = 0.0;
};

class DiscreteEnsemble final : public SourceModel {
 public:
  DiscreteEnsemble(EnsembleContext ctx, std::vector<DiscreteNode> nodes);

  void prepare(Complex beta_design) override { design_ = std::abs(beta_design); }
  double design_amplitude() const override { return design_; }
  double weak_amplitude() const override;
  SourceTerms evaluate(Complex beta, bool with_optical = true) const override;
  SourceTerms refine(Complex beta) override { return evaluate(beta, true); }
  QuadratureReport report() const override;

  const std::vector<DiscreteNode>& nodes() const { return nodes_; }
  const EnsembleContext& context() const { return ctx_; }

 private:
  EnsembleContext ctx_;
  std::vector<DiscreteNode> nodes_;
  double design_ = 0.0;
};

// Amplitude at which the ion's Rabi frequency is 1e-5 of its unsaturated
// spin linewidth.
double weak_amplitude_for(const EnsembleContext& ctx);

// Tensor Gauss-Hermite grid over the (uncorrelated) distribution.
std::vector<DiscreteNode> hermite_grid(const InhomogeneousDistribution& dist, int n2, int n3);

// One-shot adaptive integration of the collective source terms.
SourceTerms integrate_sources(const EnsembleContext& ctx, Complex beta,
                              const QuadratureSettings& settings = {},
                              QuadratureReport* report = nullptr);

}  // namespace spincav
