#include "spincav/oracle_integrator.hpp"

#include <algorithm>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <cstdio>
#include <Eigen/Eigenvalues>
#include <fstream>

#include "spincav/errors.hpp"

namespace spincav {
namespace {

namespace ode = boost::numeric::odeint;
using namespace std::complex_literals;
using State = std::vector<Complex>;

double max_abs_diff(const State& a, const State& b, std::size_t from, std::size_t to) {
  double m = 0.0;
  for (std::size_t i = from; i < to; ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Settled when the change per chunk is small and, judging by the decay
// ratio of successive changes, so is everything still to come.
bool settled_after(const std::vector<MetricSample>& h, double tol) {
  if (h.size() < 3) return false;
  const double m = h.back().metric;
  if (m == 0.0) return true;
  if (!(m < tol)) return false;
  const double q = m / h[h.size() - 2].metric;
  if (!(q < 1.0)) return false;
  return m * q / (1.0 - q) < tol;
}

void dump(const std::string& path, const std::vector<double>& t, const std::vector<Complex>& beta,
          const std::vector<MetricSample>& history) {
  if (path.empty()) return;
  std::ofstream f(path, std::ios::binary);
  f << "t_s,re_beta,im_beta,metric\n";
  char buf[160];
  std::size_t k = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    while (k + 1 < history.size() && history[k].t < t[i]) ++k;
    const double m = history.empty() ? 0.0 : history[k].metric;
    std::snprintf(buf, sizeof buf, "%.12e,%.12e,%.12e,%.6e\n", t[i], beta[i].real(), beta[i].imag(), m);
    f << buf;
  }
}

// Cavity amplitude plus one vectorized density matrix per node:
// x = [beta, rho_0, rho_1, ...].
struct CoupledSystem {
  const EnsembleContext& ctx;
  const std::vector<DiscreteNode>& nodes;
  std::size_t n;
  Generator m1, m2;  // L(Omega) = L0 + Omega M1 + conj(Omega) M2
  std::vector<Generator> base;
  Complex den, a;
  double scale;

  CoupledSystem(const CavityParams& cav, const DiscreteEnsemble& ensemble)
      : ctx(ensemble.context()), nodes(ensemble.nodes()), n(nodes.size()) {
    const GeneratorParts p0 = generator_parts(ctx.ion, 0.0, ctx.drive.omega_pump, ctx.boltzmann);
    const Generator g1 = generator_parts(ctx.ion, 1.0, ctx.drive.omega_pump, ctx.boltzmann).fixed - p0.fixed;
    const Generator gi = generator_parts(ctx.ion, 1i, ctx.drive.omega_pump, ctx.boltzmann).fixed - p0.fixed;
    m1 = 0.5 * (g1 - 1i * gi);
    m2 = 0.5 * (g1 + 1i * gi);
    base.resize(n);
    for (std::size_t k = 0; k < n; ++k) base[k] = p0.at({nodes[k].delta2, nodes[k].delta3});
    den = cavity_denominator(cav, ctx.drive);
    a = std::sqrt(cav.gamma_c1) * ctx.drive.beta_in;
    scale = ctx.ens.n_ions * ctx.population_weight * ctx.ion.g_mu;
  }

  Complex source(const State& x) const {
    std::vector<Complex> terms(n);
    for (std::size_t k = 0; k < n; ++k) terms[k] = nodes[k].weight * x[1 + 9 * k + vec_index(1, 0)];
    return scale * pairwise_sum(std::span<const Complex>(terms));
  }

  void operator()(const State& x, State& dx, double) const {
    const Complex beta = x[0];
    dx[0] = -den * beta - 1i * source(x) + a;
    const Complex omega = 2.0 * ctx.ion.g_mu * beta;
    const Generator lmu = omega * m1 + std::conj(omega) * m2;
    for (std::size_t k = 0; k < n; ++k) {
      Eigen::Map<const Vector9c> r(&x[1 + 9 * k]);
      Eigen::Map<Vector9c> d(&dx[1 + 9 * k]);
      d.noalias() = base[k] * r + lmu * r;
    }
  }
};

}  // namespace

double slowest_rate(const CavityParams& cav, const IonModel& ion) {
  double m = 0.5 * cav.total_linewidth();
  for (double r : {ion.gamma_opt, ion.gamma_spin, ion.gamma_phi2, ion.gamma_phi3})
    if (r > 0.0) m = std::min(m, r);
  return m;
}

OracleResult evolve_ensemble(const CavityParams& cav, const DiscreteEnsemble& ensemble,
                             const OracleConfig& config, std::optional<Complex> beta0) {
  cav.validate();
  const CoupledSystem sys(cav, ensemble);
  const EnsembleContext& ctx = sys.ctx;
  const std::size_t n = sys.n;
  const std::vector<Generator>& base = sys.base;
  auto rhs = std::cref(sys);

  State x(1 + 9 * n);
  x[0] = beta0.value_or(Complex(0.0, 0.0));
  for (std::size_t k = 0; k < n; ++k) {
    const Vector9c r0 = steady_state_vector(base[k]);
    for (int i = 0; i < 9; ++i) x[1 + 9 * k + i] = r0(i);
  }

  OracleResult out;
  out.chunk = 1.0 / slowest_rate(cav, ctx.ion);
  const double horizon = config.max_horizon > 0.0 ? config.max_horizon : 2000.0 * out.chunk;
  auto stepper = ode::make_controlled(config.abs_tol, config.rel_tol, ode::runge_kutta_dopri5<State>());

  std::vector<double> ts;
  std::vector<Complex> bs;
  const bool record = !config.trajectory_csv.empty();
  auto observer = [&](const State& s, double t) {
    if (record) {
      ts.push_back(t);
      bs.push_back(s[0]);
    }
  };

  double t = 0.0;
  State prev = x;
  double dt = out.chunk * 1e-3;
  const long chunks = std::max(1L, std::lround(std::ceil(horizon / out.chunk)));
  for (long i = 1; i <= chunks; ++i) {
    const double t_next = i * out.chunk;
    ode::integrate_adaptive(stepper, rhs, x, t, t_next, dt, observer);
    t = t_next;
    const double db = std::abs(x[0] - prev[0]) / std::max(std::abs(x[0]), 1e-300);
    const double dr = max_abs_diff(x, prev, 1, x.size());
    out.history.push_back({t, std::max(std::abs(x[0]) > 0.0 ? db : 0.0, dr)});
    prev = x;
    if (settled_after(out.history, config.stop_tol)) {
      out.settled = true;
      break;
    }
  }
  out.time = t;
  out.beta = x[0];
  out.s_mu = sys.source(x);
  out.rho.resize(n);
  for (std::size_t k = 0; k < n; ++k)
    for (int i = 0; i < 9; ++i) out.rho[k](i) = x[1 + 9 * k + i];
  dump(config.trajectory_csv, ts, bs, out.history);
  return out;
}

OracleResult evolve_to_steady(const CavityParams& cav, const DiscreteEnsemble& ensemble,
                              const OracleConfig& config, std::optional<Complex> beta0) {
  OracleResult r = evolve_ensemble(cav, ensemble, config, beta0);
  if (!r.settled) {
    throw NoSteadyState("oracle: trajectory did not settle within " + std::to_string(r.time) + " s");
  }
  return r;
}

AtomOracleResult evolve_atom(const Generator& L, const Vector9c& rho0, double chunk,
                             const OracleConfig& config) {
  if (!(chunk > 0.0)) throw InvalidParameter("oracle: chunk must be > 0");
  auto rhs = [&](const State& x, State& dx, double) {
    Eigen::Map<const Vector9c> r(x.data());
    Eigen::Map<Vector9c> d(dx.data());
    d.noalias() = L * r;
  };
  State x(rho0.data(), rho0.data() + 9);
  AtomOracleResult out;
  const double horizon = config.max_horizon > 0.0 ? config.max_horizon : 2000.0 * chunk;
  auto stepper = ode::make_controlled(config.abs_tol, config.rel_tol, ode::runge_kutta_dopri5<State>());
  double t = 0.0;
  double dt = chunk * 1e-3;
  State prev = x;
  const long chunks = std::max(1L, std::lround(std::ceil(horizon / chunk)));
  for (long i = 1; i <= chunks; ++i) {
    const double t_next = i * chunk;
    ode::integrate_adaptive(stepper, rhs, x, t, t_next, dt);
    t = t_next;
    out.history.push_back({t, max_abs_diff(x, prev, 0, 9)});
    prev = x;
    if (settled_after(out.history, config.stop_tol)) {
      out.settled = true;
      break;
    }
  }
  out.time = t;
  for (int i = 0; i < 9; ++i) out.rho(i) = x[i];
  return out;
}

double linear_growth_rate(const CavityParams& cav, const DiscreteEnsemble& ensemble, Complex beta) {
  cav.validate();
  const CoupledSystem sys(cav, ensemble);
  const std::size_t n = sys.n;
  const GeneratorParts parts =
      generator_parts(sys.ctx.ion, 2.0 * sys.ctx.ion.g_mu * beta, sys.ctx.drive.omega_pump, sys.ctx.boltzmann);
  State x0(1 + 9 * n);
  x0[0] = beta;
  for (std::size_t k = 0; k < n; ++k) {
    const Vector9c r = steady_state_vector(parts.at({sys.nodes[k].delta2, sys.nodes[k].delta3}));
    for (int i = 0; i < 9; ++i) x0[1 + 9 * k + i] = r(i);
  }
  // Real coordinates: re/im beta, then per node rho_11, rho_22 and the real
  // and imaginary parts of rho_01, rho_02, rho_12. rho_00 follows from the trace.
  const std::size_t dim = 2 + 8 * n;
  auto embed = [&](const Eigen::VectorXd& y) {
    State x = x0;
    x[0] += Complex(y(0), y(1));
    for (std::size_t k = 0; k < n; ++k) {
      const double* q = &y(2 + 8 * k);
      Complex* r = &x[1 + 9 * k];
      r[vec_index(1, 1)] += q[0];
      r[vec_index(2, 2)] += q[1];
      r[vec_index(0, 0)] -= q[0] + q[1];
      const int off[3][2] = {{0, 1}, {0, 2}, {1, 2}};
      for (int c = 0; c < 3; ++c) {
        const Complex v(q[2 + 2 * c], q[3 + 2 * c]);
        r[vec_index(off[c][0], off[c][1])] += v;
        r[vec_index(off[c][1], off[c][0])] += std::conj(v);
      }
    }
    return x;
  };
  auto project = [&](const State& dx) {
    Eigen::VectorXd y(dim);
    y(0) = dx[0].real();
    y(1) = dx[0].imag();
    for (std::size_t k = 0; k < n; ++k) {
      const Complex* r = &dx[1 + 9 * k];
      double* q = &y(2 + 8 * k);
      q[0] = r[vec_index(1, 1)].real();
      q[1] = r[vec_index(2, 2)].real();
      const int off[3][2] = {{0, 1}, {0, 2}, {1, 2}};
      for (int c = 0; c < 3; ++c) {
        q[2 + 2 * c] = r[vec_index(off[c][0], off[c][1])].real();
        q[3 + 2 * c] = r[vec_index(off[c][0], off[c][1])].imag();
      }
    }
    return y;
  };
  // The vector field is affine along each coordinate, so central differences are exact.
  Eigen::MatrixXd jac(dim, dim);
  State fp(x0.size()), fm(x0.size());
  for (std::size_t j = 0; j < dim; ++j) {
    const double h = j < 2 ? std::max(std::abs(beta), 1.0) : 1.0;
    Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
    e(j) = h;
    sys(embed(e), fp, 0.0);
    sys(embed(-e), fm, 0.0);
    jac.col(j) = (project(fp) - project(fm)) / (2.0 * h);
  }
  Eigen::EigenSolver<Eigen::MatrixXd> eig(jac, false);
  return eig.eigenvalues().real().maxCoeff();
}

}  // namespace spincav
