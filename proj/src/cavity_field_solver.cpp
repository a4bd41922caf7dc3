#include "spincav/cavity_field_solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "spincav/errors.hpp"

namespace spincav {
namespace {

using namespace std::complex_literals;

struct Run {
  Complex beta{0.0, 0.0};
  bool ok = false;
  int iterations = 0;
  double residual = 0.0;
};

class FixedPoint {
 public:
  FixedPoint(const CavityParams& cav, const DriveState& drive, SourceModel& model,
             const SolverSettings& s)
      : model_(model), settings_(s) {
    den_ = cavity_denominator(cav, drive);
    a_ = std::sqrt(cav.gamma_c1) * drive.beta_in;
  }

  Complex map(Complex beta) const {
    ++evaluations;
    return (-1i * model_.evaluate(beta, false).s_mu + a_) / den_;
  }
  Complex residual(Complex beta) const { return map(beta) - beta; }

  Complex from_chi(Complex chi) const { return a_ / (den_ + 1i * chi); }

  void set_reference(double r) { reference_ = r; }
  double scale(Complex beta) const { return std::max(std::abs(beta), reference_); }
  bool done(Complex beta, Complex r) const {
    const double s = scale(beta);
    return std::abs(r) <= settings_.tol * s || (s == 0.0 && std::abs(r) == 0.0);
  }

  Run run(Complex beta, bool newton = false) const {
    Run out;
    Complex r = residual(beta);
    int it = 1;
    double lambda = 1.0;
    int stall = 0;
    while (true) {
      if (done(beta, r)) {
        out = {beta, true, it, relative(beta, r)};
        return out;
      }
      if (it >= settings_.max_iterations) break;
      if (!newton) {
        const Complex bn = beta + lambda * r;
        const Complex rn = residual(bn);
        ++it;
        if (std::abs(rn) < std::abs(r)) {
          stall = std::abs(rn) > 0.9 * std::abs(r) ? stall + 1 : 0;
          beta = bn;
          r = rn;
          lambda = std::min(1.0, 1.5 * lambda);
        } else {
          lambda *= 0.5;
          ++stall;
        }
        if (lambda < settings_.min_damping || stall >= 4 || it > settings_.damped_iterations) {
          newton = true;
        }
        continue;
      }
      const double h = 1e-7 * std::max(scale(beta), 1e-300);
      const Complex jr = (residual(beta + h) - r) / h;
      const Complex ji = (residual(beta + 1i * h) - r) / h;
      it += 2;
      Eigen::Matrix2d J;
      J << jr.real(), ji.real(), jr.imag(), ji.imag();
      const Eigen::Vector2d rhs(-r.real(), -r.imag());
      const Eigen::FullPivLU<Eigen::Matrix2d> lu(J);
      if (!lu.isInvertible()) break;
      const Eigen::Vector2d dx = lu.solve(rhs);
      const Complex step(dx(0), dx(1));
      double t = 1.0;
      bool accepted = false;
      while (t >= 1.0 / 1024.0 && it < settings_.max_iterations) {
        const Complex bn = beta + t * step;
        const Complex rn = residual(bn);
        ++it;
        if (std::abs(rn) < (1.0 - 1e-4 * t) * std::abs(r) || done(bn, rn)) {
          beta = bn;
          r = rn;
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      if (!accepted) break;
    }
    out = {beta, false, it, relative(beta, r)};
    return out;
  }

  // Fixed points on the ray beta = a / (den + i chi(|beta|)), using the phase
  // covariance of the source. Roots of x |den + i chi(x)| - |a| are bracketed
  // on a log grid and bisected.
  std::vector<Complex> amplitude_roots(double lo, double hi, int per_decade) const {
    std::vector<Complex> roots;
    if (!(hi > lo && lo > 0.0) || std::abs(a_) == 0.0) return roots;
    auto chi = [&](double x) { return model_.evaluate(Complex(x, 0.0), false).s_mu / x; };
    auto f = [&](double x) { ++evaluations; return x * std::abs(den_ + 1i * chi(x)) - std::abs(a_); };
    const int n = std::max(2, static_cast<int>(std::ceil(std::log10(hi / lo) * per_decade)));
    double x0 = lo;
    double f0 = f(x0);
    for (int k = 1; k <= n; ++k) {
      const double x1 = lo * std::pow(hi / lo, static_cast<double>(k) / n);
      const double f1 = f(x1);
      if ((f0 <= 0.0) != (f1 <= 0.0)) {
        double a = x0, b = x1, fa = f0;
        for (int it = 0; it < 60 && (b - a) > 1e-12 * b; ++it) {
          const double m = 0.5 * (a + b);
          const double fm = f(m);
          if ((fa <= 0.0) == (fm <= 0.0)) {
            a = m;
            fa = fm;
          } else {
            b = m;
          }
        }
        const double x = 0.5 * (a + b);
        roots.push_back(a_ / (den_ + 1i * chi(x)));
      }
      x0 = x1;
      f0 = f1;
    }
    return roots;
  }

  double relative(Complex beta, Complex r) const {
    const double s = scale(beta);
    return s > 0.0 ? std::abs(r) / s : std::abs(r);
  }

  mutable long evaluations = 0;

 private:
  SourceModel& model_;
  SolverSettings settings_;
  Complex den_;
  Complex a_;
  double reference_ = 0.0;
};

bool distinct(Complex a, Complex b, double rel) {
  const double s = std::max(std::abs(a), std::abs(b));
  return std::abs(a - b) > rel * s;
}

}  // namespace

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged:
      return "converged";
    case SolveStatus::MultistableSuspected:
      return "multistable_suspected";
    case SolveStatus::NoConvergence:
      return "no_convergence";
    case SolveStatus::QuadratureNotConverged:
      return "quadrature_not_converged";
  }
  return "unknown";
}

Complex cavity_denominator(const CavityParams& cav, const DriveState& drive) {
  return 0.5 * cav.total_linewidth() - 1i * (drive.omega_drive - cav.omega_c);
}

Complex linear_beta(const CavityParams& cav, const DriveState& drive, Complex s_mu) {
  return (-1i * s_mu + std::sqrt(cav.gamma_c1) * drive.beta_in) / cavity_denominator(cav, drive);
}

double passive_bound(const CavityParams& cav, const DriveState& drive) {
  return 2.0 * std::sqrt(cav.gamma_c1) * std::abs(drive.beta_in) / cav.total_linewidth();
}

FieldSolution solve_field(const CavityParams& cav, const DriveState& drive, SourceModel& model,
                          const SolverSettings& settings, std::optional<Complex> warm_start) {
  cav.validate();
  FieldSolution sol;
  FixedPoint fp(cav, drive, model, settings);
  const double bmax = passive_bound(cav, drive);
  const double weak = model.weak_amplitude();

  model.prepare(Complex(bmax, 0.0));
  const Complex chi_weak = model.evaluate(Complex(weak, 0.0), false).s_mu / weak;
  const Complex beta_lin = fp.from_chi(chi_weak);
  fp.set_reference(std::abs(beta_lin));

  Run best;
  bool have = false;
  bool single_seed = !settings.try_all_seeds;
  if (settings.linear_shortcut) {
    const double probe = std::max(bmax, weak);
    const Complex chi_max = model.evaluate(Complex(probe, 0.0), false).s_mu / probe;
    const double ref = std::max(std::abs(chi_weak), std::abs(cavity_denominator(cav, drive)));
    const double spread = std::abs(chi_max - chi_weak);
    // Fixed points can then differ by at most about spread / ref relative.
    if (spread <= 0.1 * settings.multistable_rel * ref) single_seed = true;
    if (spread <= settings.linear_tol * ref) {
      best = {beta_lin, true, 1, 0.0};
      have = true;
      sol.seed = "linear";
      sol.linear_regime = true;
    }
  }

  // Both sources are linear in beta here, so the refined rule only rescales chi.
  if (sol.linear_regime) {
    SourceTerms terms{chi_weak * beta_lin, Complex{0.0, 0.0}};
    Complex beta = beta_lin;
    bool with_terms = false;
    if (settings.refine) {
      try {
        const SourceTerms fine = model.refine(Complex(weak, 0.0));
        const Complex chi = fine.s_mu / weak;
        beta = fp.from_chi(chi);
        terms = {chi * beta, fine.s_opt / weak * beta};
        with_terms = true;
      } catch (const QuadratureNotConverged& e) {
        sol.status = SolveStatus::QuadratureNotConverged;
        sol.message = e.what();
      }
    }
    if (!with_terms) terms = model.evaluate(beta, true);
    sol.beta = beta;
    sol.s_mu = terms.s_mu;
    sol.raman_out = terms.s_opt;
    sol.beta_out = std::sqrt(cav.gamma_c2) * beta;
    sol.iterations = 1;
    sol.residual = fp.relative(beta, linear_beta(cav, drive, terms.s_mu) - beta);
    sol.quadrature = model.report();
    if (sol.message.empty()) sol.status = SolveStatus::Converged;
    return sol;
  }

  if (!have) {
    struct Seed {
      std::string name;
      Complex beta;
    };
    std::vector<Seed> seeds;
    if (warm_start && !single_seed) seeds.push_back({"warm", *warm_start});
    seeds.push_back({"linear", beta_lin});
    seeds.push_back({"zero", Complex(0.0, 0.0)});

    std::vector<std::pair<std::string, Run>> found;
    int total_iterations = 0;
    for (const Seed& s : seeds) {
      const Run r = fp.run(s.beta, single_seed);
      total_iterations += r.iterations;
      if (r.ok) found.emplace_back(s.name, r);
      if (single_seed && r.ok) break;
    }
    if (found.empty()) {
      const double hi = 4.0 * std::max(bmax, weak);
      const double lo = std::min(weak, 1e-3 * hi);
      for (const Complex& b0 : fp.amplitude_roots(lo, hi, 12)) {
        const Run r = fp.run(b0);
        total_iterations += r.iterations;
        if (r.ok) found.emplace_back("amplitude_scan", r);
      }
      if (warm_start && found.size() > 1) {
        std::stable_sort(found.begin(), found.end(), [&](const auto& x, const auto& y) {
          return std::abs(x.second.beta - *warm_start) < std::abs(y.second.beta - *warm_start);
        });
      }
    }
    if (found.empty()) {
      sol.status = SolveStatus::NoConvergence;
      sol.iterations = total_iterations;
      sol.message = "no seed reached a fixed point";
      return sol;
    }
    best = found.front().second;
    best.iterations = total_iterations;
    sol.seed = found.front().first;
    for (std::size_t i = 1; i < found.size(); ++i) {
      const Complex b = found[i].second.beta;
      if (!distinct(b, best.beta, settings.multistable_rel)) continue;
      bool seen = false;
      for (const Complex& a : sol.alternatives) seen = seen || !distinct(a, b, settings.multistable_rel);
      if (!seen) sol.alternatives.push_back(b);
    }
    have = true;

    // Redesign the layout when the solution sits far below the design amplitude.
    if (std::abs(best.beta) < 0.25 * model.design_amplitude()) {
      model.prepare(best.beta);
      const Run r = fp.run(best.beta);
      if (r.ok) {
        best.beta = r.beta;
        best.residual = r.residual;
        best.iterations += r.iterations;
        for (Complex& a : sol.alternatives) {
          const Run ra = fp.run(a);
          if (ra.ok) a = ra.beta;
        }
      }
    }
  }

  if (settings.refine) {
    try {
      const int before = model.report().level;
      model.refine(best.beta);
      const QuadratureReport rep = model.report();
      if (rep.level != before) {
        const Run r = fp.run(best.beta);
        best.iterations += r.iterations;
        if (r.ok) {
          best.beta = r.beta;
          best.residual = r.residual;
        } else {
          sol.status = SolveStatus::NoConvergence;
          sol.message = "fixed point lost after quadrature refinement";
        }
      }
    } catch (const QuadratureNotConverged& e) {
      sol.status = SolveStatus::QuadratureNotConverged;
      sol.message = e.what();
    }
  }

  const SourceTerms final = model.evaluate(best.beta, true);
  sol.beta = best.beta;
  sol.s_mu = final.s_mu;
  sol.raman_out = final.s_opt;
  sol.beta_out = std::sqrt(cav.gamma_c2) * best.beta;
  sol.iterations = best.iterations;
  sol.residual = fp.relative(best.beta, linear_beta(cav, drive, final.s_mu) - best.beta);
  sol.quadrature = model.report();
  if (sol.message.empty()) {
    sol.status = sol.alternatives.empty() ? SolveStatus::Converged : SolveStatus::MultistableSuspected;
    if (!sol.alternatives.empty()) sol.message = "seeds reached distinct fixed points";
  }
  return sol;
}

FieldSolution solve_self_consistent(const CavityParams& cav, const DriveState& drive,
                                    SourceModel& model, const SolverSettings& settings,
                                    std::optional<Complex> warm_start) {
  FieldSolution sol = solve_field(cav, drive, model, settings, warm_start);
  switch (sol.status) {
    case SolveStatus::Converged:
      return sol;
    case SolveStatus::MultistableSuspected:
      throw MultistableSuspected("solve_self_consistent: " + sol.message);
    case SolveStatus::QuadratureNotConverged:
      throw QuadratureNotConverged("solve_self_consistent: " + sol.message);
    case SolveStatus::NoConvergence:
      break;
  }
  throw NoConvergence("solve_self_consistent: " + sol.message);
}

FieldSolution solve_self_consistent(const CavityParams& cav, const EnsembleContext& ctx,
                                    const QuadratureSettings& quad, const SolverSettings& settings,
                                    std::optional<Complex> warm_start) {
  EnsembleIntegrator model(ctx, quad);
  return solve_self_consistent(cav, ctx.drive, model, settings, warm_start);
}

CavityOutputs outputs(const FieldSolution& sol, const CavityParams& cav, const DriveState& drive) {
  CavityOutputs out;
  if (std::abs(drive.beta_in) > 0.0) out.s21 = std::sqrt(cav.gamma_c2) * sol.beta / drive.beta_in;
  out.raman = sol.raman_out;
  return out;
}

}  // namespace spincav
