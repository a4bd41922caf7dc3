#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "spincav/config.hpp"
#include "spincav/oracle_integrator.hpp"

namespace spincav {

struct OracleInstance {
  CavityParams cavity;
  EnsembleContext context;
  double cooperativity = 0.0;
  double saturation = 0.0;  // bare-cavity Rabi frequency over the saturation Rabi frequency
};

// Log-uniform rates in [1e4, 1e6] 1/s, cooperativity in [0.1, 10] and drive
// saturation in [0.1, 10].
OracleInstance random_instance(std::mt19937_64& rng);

struct OracleCase {
  int index = 0;
  double rho_diff = 0.0;  // max over nodes and entries
  double beta_rel = 0.0;
  std::string solver_status;
  bool oracle_settled = false;
  bool pass = false;
  std::string message;
  // The oracle does not settle and the fixed point is linearly unstable:
  // the instance has no steady state to compare.
  bool no_steady_state = false;
  double growth_rate = 0.0;  // largest Jacobian real part at the fixed point, 1/s
  double cooperativity = 0.0;
  double saturation = 0.0;
};

struct OracleCheckReport {
  std::vector<OracleCase> cases;     // instances with a steady state
  std::vector<OracleCase> replaced;  // draws without one, replaced by fresh draws
  double max_rho_diff = 0.0;
  double max_beta_rel = 0.0;  // over cases without a multistability flag
  std::size_t passed = 0;
  std::size_t multistable = 0;

  bool all_pass() const { return passed == cases.size(); }
  nlohmann::json to_json() const;
};

OracleCase check_instance(const OracleInstance& inst, const OracleCheckConfig& cfg, int index = 0);
// Draws until `cfg.instances` instances with a steady state have been checked
// (at most 4x as many draws in total).
OracleCheckReport run_oracle_check(const OracleCheckConfig& cfg, std::uint64_t seed);

}  // namespace spincav
