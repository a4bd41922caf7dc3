#include "spincav/oracle_check.hpp"

#include <algorithm>
#include <cmath>

#include "spincav/errors.hpp"

namespace spincav {
namespace {

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  return u(rng);
}

}  // namespace

OracleInstance random_instance(std::mt19937_64& rng) {
  OracleInstance inst;
  CavityParams& cav = inst.cavity;
  cav.omega_c = 1e9;
  cav.gamma_c1 = log_uniform(rng, 1e5, 1e6);
  cav.gamma_c2 = log_uniform(rng, 1e5, 1e6);
  cav.gamma_i = log_uniform(rng, 1e4, 1e6);
  const double kappa = cav.total_linewidth();

  EnsembleContext& ctx = inst.context;
  ctx.ion.scheme = uniform(rng, 0.0, 1.0) < 0.5 ? Scheme::Lambda : Scheme::Vee;
  ctx.ion.pumped = uniform(rng, 0.0, 1.0) < 0.5 ? PumpedLevel::Upper : PumpedLevel::Lower;
  ctx.ion.g_mu = 1.0;
  ctx.ion.g_o = 1.0;
  ctx.ion.gamma_opt = log_uniform(rng, 1e4, 1e6);
  ctx.ion.gamma_spin = log_uniform(rng, 1e4, 1e6);
  ctx.ion.gamma_phi2 = log_uniform(rng, 1e4, 1e6);
  ctx.ion.gamma_phi3 = log_uniform(rng, 1e4, 1e6);
  ctx.ion.branching_lower = uniform(rng, 0.2, 0.8);
  ctx.boltzmann = uniform(rng, 0.1, 0.9);
  ctx.ens.sigma_spin = log_uniform(rng, 1e4, 1e6);
  ctx.ens.sigma_opt = log_uniform(rng, 1e4, 1e6);
  ctx.ens.corr = uniform(rng, -0.5, 0.5);
  ctx.spin_center = cav.omega_c + uniform(rng, -1.0, 1.0) * kappa;
  ctx.optical_center = 0.0;
  ctx.drive.omega_drive = cav.omega_c + uniform(rng, -0.5, 0.5) * kappa;
  ctx.drive.omega_pump = uniform(rng, 0.0, 1.0) < 0.2 ? 0.0 : log_uniform(rng, 1e3, 1e6);
  ctx.drive.omega_laser = uniform(rng, -1.0, 1.0) * ctx.ens.sigma_opt;
  ctx.population_weight = 1.0;

  const double up = ctx.ion.gamma_spin * ctx.boltzmann;
  const double pop = ctx.ion.gamma_spin + up;
  const double coh = 0.5 * pop + ctx.ion.gamma_phi2;
  const double diff = (1.0 - ctx.boltzmann) / (1.0 + ctx.boltzmann);
  inst.cooperativity = log_uniform(rng, 0.1, 10.0);
  ctx.ens.n_ions = inst.cooperativity * kappa * (coh + ctx.ens.sigma_spin) /
                   (4.0 * ctx.ion.g_mu * ctx.ion.g_mu * diff);
  inst.saturation = log_uniform(rng, 0.1, 10.0);
  const double rabi_sat = std::sqrt(pop * coh);
  // bare intracavity |beta| = 2 sqrt(gamma_c1) |beta_in| / kappa, Rabi = 2 g beta
  ctx.drive.beta_in = inst.saturation * rabi_sat * kappa / (4.0 * ctx.ion.g_mu * std::sqrt(cav.gamma_c1));
  return inst;
}

OracleCase check_instance(const OracleInstance& inst, const OracleCheckConfig& cfg, int index) {
  OracleCase c;
  c.index = index;
  c.cooperativity = inst.cooperativity;
  c.saturation = inst.saturation;
  const EnsembleContext& ctx = inst.context;
  DiscreteEnsemble ensemble(ctx, hermite_grid(ctx.distribution(), cfg.spin_nodes, cfg.optical_nodes));
  const FieldSolution fp = solve_field(inst.cavity, ctx.drive, ensemble, SolverSettings{});
  c.solver_status = to_string(fp.status);

  OracleResult orc;
  try {
    orc = evolve_to_steady(inst.cavity, ensemble, cfg.oracle);
    c.oracle_settled = true;
  } catch (const NoSteadyState& e) {
    c.message = e.what();
    if (fp.converged()) {
      c.growth_rate = linear_growth_rate(inst.cavity, ensemble, fp.beta);
      c.no_steady_state = c.growth_rate > 0.0;
      if (c.no_steady_state) c.message += "; fixed point unstable";
    }
    return c;
  }
  const GeneratorParts parts =
      generator_parts(ctx.ion, 2.0 * ctx.ion.g_mu * orc.beta, ctx.drive.omega_pump, ctx.boltzmann);
  const auto& nodes = ensemble.nodes();
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const Vector9c ss = steady_state_vector(parts.at({nodes[k].delta2, nodes[k].delta3}));
    c.rho_diff = std::max(c.rho_diff, (ss - orc.rho[k]).cwiseAbs().maxCoeff());
  }
  const double scale = std::max(std::abs(orc.beta), 1e-300);
  c.beta_rel = std::abs(fp.beta - orc.beta) / scale;
  const bool flagged = fp.status == SolveStatus::MultistableSuspected;
  const bool beta_ok = fp.converged() && c.beta_rel < cfg.beta_tol;
  c.pass = c.rho_diff < cfg.rho_tol && (beta_ok || flagged);
  if (!c.pass) {
    c.message = c.rho_diff >= cfg.rho_tol ? "steady state differs from the time-domain state"
                                          : "fixed point differs from the time-domain amplitude";
  }
  return c;
}

OracleCheckReport run_oracle_check(const OracleCheckConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  OracleCheckReport rep;
  for (int i = 0; static_cast<int>(rep.cases.size()) < cfg.instances && i < 4 * cfg.instances; ++i) {
    const OracleInstance inst = random_instance(rng);
    const OracleCase c = check_instance(inst, cfg, i);
    if (c.no_steady_state) {
      rep.replaced.push_back(c);
      continue;
    }
    rep.max_rho_diff = std::max(rep.max_rho_diff, c.rho_diff);
    if (c.solver_status == to_string(SolveStatus::MultistableSuspected)) {
      ++rep.multistable;
    } else {
      rep.max_beta_rel = std::max(rep.max_beta_rel, c.beta_rel);
    }
    if (c.pass) ++rep.passed;
    rep.cases.push_back(c);
  }
  return rep;
}

nlohmann::json OracleCheckReport::to_json() const {
  nlohmann::json j;
  j["instances"] = cases.size();
  j["passed"] = passed;
  j["multistable_flagged"] = multistable;
  j["max_rho_diff"] = max_rho_diff;
  j["max_beta_rel"] = max_beta_rel;
  auto row = [](const OracleCase& c) {
    return nlohmann::json{{"index", c.index},
                          {"rho_diff", c.rho_diff},
                          {"beta_rel", c.beta_rel},
                          {"solver_status", c.solver_status},
                          {"oracle_settled", c.oracle_settled},
                          {"pass", c.pass},
                          {"cooperativity", c.cooperativity},
                          {"saturation", c.saturation},
                          {"growth_rate", c.growth_rate},
                          {"message", c.message}};
  };
  nlohmann::json arr = nlohmann::json::array(), rep = nlohmann::json::array();
  for (const OracleCase& c : cases) arr.push_back(row(c));
  for (const OracleCase& c : replaced) rep.push_back(row(c));
  j["cases"] = arr;
  j["replaced_no_steady_state"] = rep;
  return j;
}

}  // namespace spincav
