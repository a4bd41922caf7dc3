#include "spincav/ensemble_integrator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "spincav/errors.hpp"

namespace spincav {
namespace {

double gaussian_density(double x, double center, double sigma) {
  const double u = (x - center) / sigma;
  return std::exp(-0.5 * u * u) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

double homogeneous_width(double coherence_decay, double population_rate, double rabi) {
  if (population_rate > 0.0 && coherence_decay > 0.0) {
    return coherence_decay * std::sqrt(1.0 + rabi * rabi / (population_rate * coherence_decay));
  }
  return coherence_decay + rabi;
}

void append_simpson(AxisRule& r, double a, double b, int n, double center, double sigma) {
  const double h = (b - a) / (n - 1);
  for (int i = 0; i < n; ++i) {
    const double x = a + i * h;
    const double c = (i == 0 || i == n - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    r.x.push_back(x);
    r.w.push_back(c * h / 3.0 * gaussian_density(x, center, sigma));
  }
}

void append_legendre(AxisRule& r, double a, double b, int order, double center, double sigma) {
  const QuadratureRule1D& gl = gauss_legendre(order);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (std::size_t i = 0; i < gl.size(); ++i) {
    const double x = mid + half * gl.nodes[i];
    r.x.push_back(x);
    r.w.push_back(half * gl.weights[i] * gaussian_density(x, center, sigma));
  }
}

}  // namespace

double InhomogeneousDistribution::density(double delta2, double delta3) const {
  const double u = (delta2 - center2) / sigma2;
  const double v = (delta3 - center3) / sigma3;
  const double one_m = 1.0 - corr * corr;
  const double q = (u * u - 2.0 * corr * u * v + v * v) / one_m;
  return std::exp(-0.5 * q) / (2.0 * std::numbers::pi * sigma2 * sigma3 * std::sqrt(one_m));
}

double InhomogeneousDistribution::conditional_mean3(double delta2) const {
  if (sigma2 == 0.0) return center3;
  return center3 + corr * sigma3 / sigma2 * (delta2 - center2);
}

double InhomogeneousDistribution::conditional_sigma3() const {
  return sigma3 * std::sqrt(1.0 - corr * corr);
}

InhomogeneousDistribution EnsembleContext::distribution() const {
  InhomogeneousDistribution d;
  d.center2 = drive.omega_drive - spin_center;
  d.center3 = drive.omega_laser - optical_center;
  d.sigma2 = ens.sigma_spin;
  d.sigma3 = ens.sigma_opt;
  d.corr = ens.corr;
  return d;
}

double weak_amplitude_for(const EnsembleContext& ctx) {
  if (ctx.ion.g_mu == 0.0) return 1.0;
  const GeneratorParts parts = generator_parts(ctx.ion, 0.0, ctx.drive.omega_pump, ctx.boltzmann);
  const double w = std::max(spin_coherence_decay(parts), 1e-300);
  return 1e-5 * w / (2.0 * std::abs(ctx.ion.g_mu));
}

AxisRule build_axis_rule(double center, double sigma, const std::vector<double>& resonances,
                         double half_width, const AxisLayout& layout, int level) {
  AxisRule r;
  if (!(sigma > 0.0)) {
    r.x = {center};
    r.w = {1.0};
    return r;
  }
  if (layout.inner_nodes < 3 || layout.inner_nodes % 2 == 0) {
    throw InvalidParameter("quadrature: inner node count must be odd and >= 3");
  }
  const int mult = 1 << level;
  const double lo = center - layout.support_sigmas * sigma;
  const double hi = center + layout.support_sigmas * sigma;

  std::vector<std::pair<double, double>> windows;
  for (double res : resonances) {
    const double a = std::max(lo, res - half_width);
    const double b = std::min(hi, res + half_width);
    if (a < b) windows.emplace_back(a, b);
  }
  if (windows.empty()) {
    const QuadratureRule1D& gh = gauss_hermite(layout.hermite_nodes * mult);
    for (std::size_t i = 0; i < gh.size(); ++i) {
      r.x.push_back(center + std::numbers::sqrt2 * sigma * gh.nodes[i]);
      r.w.push_back(gh.weights[i] / std::sqrt(std::numbers::pi));
    }
    return r;
  }
  std::sort(windows.begin(), windows.end());
  std::vector<std::pair<double, double>> merged{windows.front()};
  for (std::size_t i = 1; i < windows.size(); ++i) {
    if (windows[i].first <= merged.back().second) {
      merged.back().second = std::max(merged.back().second, windows[i].second);
    } else {
      merged.push_back(windows[i]);
    }
  }
  r.windowed = true;
  r.window_lo = merged.front().first;
  r.window_hi = merged.back().second;

  const int inner = (layout.inner_nodes - 1) * mult + 1;
  for (const auto& [a, b] : merged) append_simpson(r, a, b, inner, center, sigma);

  std::vector<std::pair<double, double>> gaps;
  if (lo < merged.front().first) gaps.emplace_back(lo, merged.front().first);
  for (std::size_t i = 0; i + 1 < merged.size(); ++i) gaps.emplace_back(merged[i].second, merged[i + 1].first);
  if (merged.back().second < hi) gaps.emplace_back(merged.back().second, hi);

  const int order = layout.tail_order * mult;
  const int n_sig = static_cast<int>(std::ceil(layout.support_sigmas));
  for (const auto& [a, b] : gaps) {
    std::vector<double> cuts{a, b};
    for (double res : resonances) {
      for (int m = 0; m < 64; ++m) {
        const double step = half_width * std::ldexp(1.0, m);
        const double left = res - step;
        const double right = res + step;
        if (left > a && left < b) cuts.push_back(left);
        if (right > a && right < b) cuts.push_back(right);
        if (step > hi - lo) break;
      }
    }
    for (int j = -n_sig; j <= n_sig; ++j) {
      const double x = center + j * sigma;
      if (x > a && x < b) cuts.push_back(x);
    }
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      if (cuts[i + 1] - cuts[i] <= 0.0) continue;
      append_legendre(r, cuts[i], cuts[i + 1], order, center, sigma);
    }
  }
  return r;
}

EnsembleIntegrator::EnsembleIntegrator(EnsembleContext ctx, QuadratureSettings settings)
    : ctx_(std::move(ctx)), settings_(settings) {
  if (settings_.max_level < 1) throw InvalidParameter("quadrature: max_level must be >= 1");
  prepare(Complex{0.0, 0.0});
}

double EnsembleIntegrator::spin_window_half_width(Complex beta) const {
  const double rabi = 2.0 * ctx_.ion.g_mu * std::abs(beta);
  const GeneratorParts parts = generator_parts(ctx_.ion, rabi, ctx_.drive.omega_pump, ctx_.boltzmann);
  const double w = homogeneous_width(spin_coherence_decay(parts), spin_population_rate(parts), rabi);
  return std::max({settings_.window_homogeneous * w, settings_.window_rabi * rabi,
                   settings_.window_rabi * ctx_.drive.omega_pump});
}

double EnsembleIntegrator::optical_window_half_width(Complex beta) const {
  const double rabi = 2.0 * ctx_.ion.g_mu * std::abs(beta);
  const double pump = ctx_.drive.omega_pump;
  const GeneratorParts parts = generator_parts(ctx_.ion, rabi, pump, ctx_.boltzmann);
  const double g = optical_coherence_decay(parts);
  const double w = std::sqrt(g * g + pump * pump);
  return std::max({settings_.window_homogeneous * w, settings_.window_rabi * rabi,
                   settings_.window_rabi * pump});
}

double EnsembleIntegrator::weak_amplitude() const { return weak_amplitude_for(ctx_); }

void EnsembleIntegrator::prepare(Complex beta_design) {
  design_amplitude_ = std::abs(beta_design);
  rules_.clear();
}

const AxisRule& EnsembleIntegrator::rule(int level) const {
  if (rules_.size() <= static_cast<std::size_t>(level)) rules_.resize(level + 1);
  if (!rules_[level]) {
    const InhomogeneousDistribution dist = ctx_.distribution();
    AxisLayout layout{settings_.inner_nodes, settings_.hermite_nodes, settings_.tail_order,
                      settings_.support_sigmas};
    const double hw = spin_window_half_width(design_amplitude_);
    rules_[level] = std::make_unique<AxisRule>(
        build_axis_rule(dist.center2, dist.sigma2, {0.0}, hw, layout, level));
  }
  return *rules_[level];
}

std::size_t EnsembleIntegrator::node_count(int level) const { return rule(level).x.size(); }

EnsembleIntegrator::Sums EnsembleIntegrator::sums(Complex beta, int level, bool) const {
  const AxisRule& r = rule(level);
  const InhomogeneousDistribution dist = ctx_.distribution();
  const double pump = ctx_.drive.omega_pump;
  const GeneratorParts parts = generator_parts(ctx_.ion, 2.0 * ctx_.ion.g_mu * beta, pump, ctx_.boltzmann);
  const int out_idx = parts.layout.output_index();
  const int mu_idx = vec_index(1, 0);

  std::vector<Complex> mu(r.x.size());
  std::vector<Complex> opt(r.x.size());
  std::vector<double> abs_mu(r.x.size());
  std::vector<double> abs_opt(r.x.size());

  AxisLayout optical_layout{settings_.optical_inner_nodes, settings_.hermite_nodes,
                            settings_.optical_tail_order, settings_.support_sigmas};
  const double hw3 = pump != 0.0 ? optical_window_half_width(design_amplitude_) : 0.0;
  const double s3 = dist.conditional_sigma3();

  for (std::size_t i = 0; i < r.x.size(); ++i) {
    const double d2 = r.x[i];
    Vector9c x;
    if (pump == 0.0) {
      x = steady_state_pump_free(parts, d2);
    } else {
      const double m3 = dist.conditional_mean3(d2);
      std::optional<Vector9c> avg;
      if (settings_.analytic_optical && !numeric_optical_) {
        avg = steady_state_optical_average(parts, d2, m3, s3);
      }
      if (avg) {
        x = *avg;
      } else {
        const AxisRule r3 = build_axis_rule(m3, s3, {0.0, parts.layout.two_photon_delta3(d2)}, hw3,
                                            optical_layout, level);
        x.setZero();
        for (std::size_t j = 0; j < r3.x.size(); ++j) {
          x += r3.w[j] * steady_state_vector(parts.at({d2, r3.x[j]}));
        }
      }
    }
    mu[i] = r.w[i] * x(mu_idx);
    opt[i] = r.w[i] * x(out_idx);
    abs_mu[i] = std::abs(mu[i]);
    abs_opt[i] = std::abs(opt[i]);
  }
  return {pairwise_sum(std::span<const Complex>(mu)), pairwise_sum(std::span<const Complex>(opt)),
          pairwise_sum(std::span<const double>(abs_mu)), pairwise_sum(std::span<const double>(abs_opt))};
}

SourceTerms EnsembleIntegrator::scale(const Sums& s) const {
  const double n = ctx_.ens.n_ions * ctx_.population_weight;
  return {n * ctx_.ion.g_mu * s.mu, n * ctx_.ion.g_o * s.opt};
}

double EnsembleIntegrator::relative_change(const Sums& coarse, const Sums& fine) const {
  auto rel = [](Complex c, Complex f, double abs_f) {
    const double floor = std::max(std::abs(f), 1e-2 * abs_f);
    if (floor == 0.0) return 0.0;
    return std::abs(f - c) / floor;
  };
  return std::max(rel(coarse.mu, fine.mu, fine.abs_mu), rel(coarse.opt, fine.opt, fine.abs_opt));
}

SourceTerms EnsembleIntegrator::evaluate(Complex beta, bool with_optical) const {
  return scale(sums(beta, working_level_, with_optical));
}

SourceTerms EnsembleIntegrator::evaluate_at_level(Complex beta, int level, bool with_optical) const {
  return scale(sums(beta, level, with_optical));
}

SourceTerms EnsembleIntegrator::refine(Complex beta) {
  report_ = QuadratureReport{};
  int level = working_level_;
  Sums coarse = sums(beta, level, true);
  report_.nodes_per_level.push_back(node_count(level));
  while (true) {
    if (level + 1 > settings_.max_level) {
      report_.converged = false;
      report_.level = level;
      throw QuadratureNotConverged("ensemble quadrature: doubling still changes the sources by " +
                                   std::to_string(report_.error_estimate));
    }
    const Sums fine = sums(beta, level + 1, true);
    const double err = relative_change(coarse, fine);
    report_.nodes_per_level.push_back(node_count(level + 1));
    report_.error_per_level.push_back(err);
    report_.error_estimate = err;
    const AxisRule& r = rule(level + 1);
    report_.windowed = r.windowed;
    report_.window_lo = r.window_lo;
    report_.window_hi = r.window_hi;
    if (err <= settings_.rel_tol) {
      working_level_ = level;
      report_.level = level;
      report_.converged = true;
      return scale(fine);
    }
    coarse = fine;
    ++level;
  }
}

SourceTerms EnsembleIntegrator::refine_once(Complex beta) {
  report_ = QuadratureReport{};
  const Sums coarse = sums(beta, 0, true);
  const Sums fine = sums(beta, 1, true);
  report_.nodes_per_level = {node_count(0), node_count(1)};
  report_.error_estimate = relative_change(coarse, fine);
  report_.error_per_level = {report_.error_estimate};
  report_.converged = report_.error_estimate <= settings_.rel_tol;
  const AxisRule& r = rule(1);
  report_.windowed = r.windowed;
  report_.window_lo = r.window_lo;
  report_.window_hi = r.window_hi;
  return scale(fine);
}

SourceTerms EnsembleIntegrator::integrate(Complex beta) {
  prepare(beta);
  working_level_ = 0;
  return refine(beta);
}

DiscreteEnsemble::DiscreteEnsemble(EnsembleContext ctx, std::vector<DiscreteNode> nodes)
    : ctx_(std::move(ctx)), nodes_(std::move(nodes)) {}

SourceTerms DiscreteEnsemble::evaluate(Complex beta, bool) const {
  const GeneratorParts parts =
      generator_parts(ctx_.ion, 2.0 * ctx_.ion.g_mu * beta, ctx_.drive.omega_pump, ctx_.boltzmann);
  const int out_idx = parts.layout.output_index();
  std::vector<Complex> mu(nodes_.size());
  std::vector<Complex> opt(nodes_.size());
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    const Vector9c x = steady_state_vector(parts.at({nodes_[k].delta2, nodes_[k].delta3}));
    mu[k] = nodes_[k].weight * x(vec_index(1, 0));
    opt[k] = nodes_[k].weight * x(out_idx);
  }
  const double n = ctx_.ens.n_ions * ctx_.population_weight;
  return {n * ctx_.ion.g_mu * pairwise_sum(std::span<const Complex>(mu)),
          n * ctx_.ion.g_o * pairwise_sum(std::span<const Complex>(opt))};
}

double DiscreteEnsemble::weak_amplitude() const { return weak_amplitude_for(ctx_); }

QuadratureReport DiscreteEnsemble::report() const {
  QuadratureReport r;
  r.nodes_per_level = {nodes_.size()};
  r.converged = true;
  return r;
}

std::vector<DiscreteNode> hermite_grid(const InhomogeneousDistribution& dist, int n2, int n3) {
  const QuadratureRule1D& g2 = gauss_hermite(n2);
  const QuadratureRule1D& g3 = gauss_hermite(n3);
  const double root = std::sqrt(1.0 - dist.corr * dist.corr);
  std::vector<DiscreteNode> out;
  out.reserve(g2.size() * g3.size());
  for (std::size_t i = 0; i < g2.size(); ++i) {
    const double z2 = std::numbers::sqrt2 * g2.nodes[i];
    for (std::size_t j = 0; j < g3.size(); ++j) {
      const double z3 = std::numbers::sqrt2 * g3.nodes[j];
      DiscreteNode n;
      n.delta2 = dist.center2 + dist.sigma2 * z2;
      n.delta3 = dist.center3 + dist.sigma3 * (dist.corr * z2 + root * z3);
      n.weight = g2.weights[i] * g3.weights[j] / std::numbers::pi;
      out.push_back(n);
    }
  }
  return out;
}

SourceTerms integrate_sources(const EnsembleContext& ctx, Complex beta,
                              const QuadratureSettings& settings, QuadratureReport* report) {
  EnsembleIntegrator integ(ctx, settings);
  SourceTerms s;
  try {
    s = integ.integrate(beta);
  } catch (...) {
    if (report) *report = integ.report();
    throw;
  }
  if (report) *report = integ.report();
  return s;
}

}  // namespace spincav
