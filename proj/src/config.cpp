#include "spincav/config.hpp"

#include <cmath>
#include <set>

#include "spincav/constants.hpp"
#include "spincav/errors.hpp"

namespace spincav {
namespace {

using nlohmann::json;

const std::set<std::string> kLeafObjects = {"grid.drive_hz", "grid.field_t", "grid.laser_hz",
                                            "recovery.drive_hz"};

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

const json& at(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError("missing key '" + join(path, key) + "'");
  return j.at(key);
}

double num(const json& j, const std::string& key, const std::string& path) {
  const json& v = at(j, key, path);
  if (!v.is_number()) throw ConfigError("'" + join(path, key) + "' must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError("'" + join(path, key) + "' must be finite");
  return x;
}

int integer(const json& j, const std::string& key, const std::string& path) {
  const json& v = at(j, key, path);
  if (!v.is_number_integer()) throw ConfigError("'" + join(path, key) + "' must be an integer");
  return v.get<int>();
}

bool boolean(const json& j, const std::string& key, const std::string& path) {
  const json& v = at(j, key, path);
  if (!v.is_boolean()) throw ConfigError("'" + join(path, key) + "' must be a boolean");
  return v.get<bool>();
}

std::string str(const json& j, const std::string& key, const std::string& path) {
  const json& v = at(j, key, path);
  if (!v.is_string()) throw ConfigError("'" + join(path, key) + "' must be a string");
  return v.get<std::string>();
}

template <std::size_t N>
std::array<double, N> num_array(const json& j, const std::string& key, const std::string& path) {
  const json& v = at(j, key, path);
  if (!v.is_array() || v.size() != N)
    throw ConfigError("'" + join(path, key) + "' must be an array of " + std::to_string(N) + " numbers");
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    if (!v[i].is_number()) throw ConfigError("'" + join(path, key) + "' must hold numbers");
    out[i] = v[i].get<double>();
  }
  return out;
}

void merge_into(json& base, const json& user, const std::string& path) {
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string p = join(path, it.key());
    if (base.contains(it.key()) && base[it.key()].is_object() && it.value().is_object() &&
        !kLeafObjects.count(p)) {
      merge_into(base[it.key()], it.value(), p);
    } else {
      base[it.key()] = it.value();
    }
  }
}

json grid(double start, double stop, int points) {
  return {{"start", start}, {"stop", stop}, {"points", points}};
}

json field_grid(double g, double f_lo, double f_hi, int points) {
  return grid(field_for_splitting(g, f_lo), field_for_splitting(g, f_hi), points);
}

json schedule_json(const ProbeSchedule& s) {
  json segs = json::array();
  for (const ScheduleSegment& seg : s.segments) {
    segs.push_back({{"kind", to_string(seg.kind)},
                    {"duration_s", seg.duration_s},
                    {"power_dbm", seg.power_dbm},
                    {"interval_s", seg.interval_s}});
  }
  return {{"low_power_dbm", s.low_power_dbm}, {"segments", segs}};
}

// Shared ground-state physics: 5020 MHz cavity, Er ensemble with a 3 MHz
// spin line and 37 MHz collective coupling at 150 mK.
ModelParams ground_model(double temperature, double probe_dbm) {
  ModelParams p;
  p.scheme = Scheme::Lambda;
  p.cavity = {angular(5020e6), angular(1.5e6), angular(1.5e6), angular(1.0e6)};
  p.zeeman = ZeemanModel::ground_state_cooldown();
  p.n_ions = 1e15;
  const double diff = thermal_populations(5020e6, {0.15}).difference();
  p.ion.g_mu = angular(37e6) / std::sqrt(p.n_ions * diff);
  p.ion.g_o = 1.0;
  p.ion.gamma_opt = 1e3;
  p.ion.gamma_spin = 150.0;
  p.ion.gamma_phi2 = 1e7;
  p.ion.gamma_phi3 = 1e6;
  p.ion.branching_lower = 0.5;
  p.sigma_spin = angular(3e6);
  p.sigma_opt = {angular(270e6), angular(410e6), angular(150e6), angular(200e6)};
  p.corr = 0.0;
  p.temperature = temperature;
  p.probe_power_dbm = probe_dbm;
  p.insertion_loss_db = 25.0;
  p.field_t = field_for_splitting(p.zeeman.g_spin_ground, 5020e6);
  p.laser_hz = zeeman_frequencies(p.zeeman, p.field_t).optical[3].frequency_hz;
  p.pump_rabi = angular(1e5);
  return p;
}

ModelParams excited_model() {
  ModelParams p = ground_model(0.15, -35.0);
  p.scheme = Scheme::Vee;
  p.cavity.omega_c = angular(4732e6);
  p.zeeman = ZeemanModel::excited_state_cooldown();
  p.ion.g_mu *= p.zeeman.g_spin_excited / p.zeeman.g_spin_ground;
  p.field_t = field_for_splitting(p.zeeman.g_spin_excited, 4732e6);
  p.laser_hz = zeeman_frequencies(p.zeeman, p.field_t).optical[0].frequency_hz;
  p.pump_rabi = angular(1e3);
  p.pump_back_action = true;
  return p;
}

json laser_grid(const ModelParams& p, int points) {
  const ZeemanLines lines = zeeman_frequencies(p.zeeman, p.field_t);
  double lo = lines.optical[0].frequency_hz, hi = lo;
  for (const OpticalTransition& t : lines.optical) {
    lo = std::min(lo, t.frequency_hz);
    hi = std::max(hi, t.frequency_hz);
  }
  return grid(lo - 1e9, hi + 1e9, points);
}

json base_document(Scenario scenario, const std::string& name, const ModelParams& p, json drive,
                   json field, json laser) {
  json j;
  j["scenario"] = to_string(scenario);
  j["preset"] = name;
  j["model"] = model_to_json(p);
  j["grid"] = {{"drive_hz", std::move(drive)},
               {"field_t", std::move(field)},
               {"laser_hz", std::move(laser)},
               {"alternate", false}};
  j["raman"] = {{"axis2", "field"}};
  j["recovery"] = {{"t1_s", 10.0},
                   {"n0", 0.0},
                   {"detailed_balance", false},
                   {"noise", 0.05},
                   {"drive_hz", grid(4970e6, 5070e6, 401)},
                   {"schedule", schedule_json(ProbeSchedule::standard(60.0, 1.0, -60.0, 5.0))},
                   {"extract", {{"smooth_half", 2}, {"min_prominence_db", 1.0}}},
                   {"fit", {{"bootstrap", 200}, {"confidence", 0.95}}},
                   {"trace_csv", ""}};
  j["oracle_check"] = {{"instances", 20},
                       {"spin_nodes", 5},
                       {"optical_nodes", 3},
                       {"rho_tol", 1e-6},
                       {"beta_tol", 1e-5},
                       {"rel_tol", 1e-9},
                       {"abs_tol", 1e-12},
                       {"stop_tol", 1e-8}};
  j["output_dir"] = "spincav_out";
  j["db_offset"] = 0.0;
  j["seed"] = 1;
  j["threads"] = 1;
  j["max_failure_fraction"] = 0.0;
  return j;
}

}  // namespace

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::GroundState:
      return "ground_state";
    case Scenario::ExcitedState:
      return "excited_state";
    case Scenario::Custom:
      return "custom";
  }
  return "custom";
}

Scenario scenario_from_string(const std::string& s) {
  if (s == "ground_state") return Scenario::GroundState;
  if (s == "excited_state") return Scenario::ExcitedState;
  if (s == "custom") return Scenario::Custom;
  throw ConfigError("scenario must be ground_state, excited_state or custom, got '" + s + "'");
}

const std::vector<PresetInfo>& preset_catalog() {
  static const std::vector<PresetInfo> c = {
      {"ground_state_epr", "ground doublet at 150 mK, weak-probe transmission map across the 5020 MHz crossing"},
      {"ground_low_power", "ground doublet at 670 mK, -15 dBm drive, Raman map with laser on transition 4"},
      {"ground_high_power", "ground doublet at 1.7 K, drive 8 dB above ground_low_power"},
      {"excited_state", "excited doublet on the 4732 MHz cavity at 150 mK, weak pump on transition 1"},
  };
  return c;
}

json preset_json(const std::string& name) {
  const double g = ZeemanModel{}.g_spin_ground;
  if (name == "ground_state_epr") {
    const ModelParams p = ground_model(0.15, -90.0);
    return base_document(Scenario::GroundState, name, p, grid(4970e6, 5070e6, 101),
                         field_grid(g, 4970e6, 5070e6, 101), laser_grid(p, 201));
  }
  if (name == "ground_low_power" || name == "ground_high_power") {
    const bool high = name == "ground_high_power";
    const ModelParams p = ground_model(high ? 1.7 : 0.67, high ? -7.0 : -15.0);
    return base_document(Scenario::GroundState, name, p, grid(4990e6, 5050e6, 61),
                         field_grid(g, 4990e6, 5050e6, 31), laser_grid(p, 201));
  }
  if (name == "excited_state") {
    const ModelParams p = excited_model();
    const double ge = p.zeeman.g_spin_excited;
    return base_document(Scenario::ExcitedState, name, p, grid(4712e6, 4752e6, 41),
                         field_grid(ge, 4712e6, 4752e6, 21), laser_grid(p, 201));
  }
  throw ConfigError("unknown preset '" + name + "'");
}

void check_keys(const json& doc, const json& shape, const std::string& path) {
  if (!doc.is_object()) throw ConfigError("'" + (path.empty() ? std::string("<root>") : path) + "' must be an object");
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string p = join(path, it.key());
    if (!shape.contains(it.key())) throw ConfigError("unknown key '" + p + "'");
    const json& s = shape.at(it.key());
    if (s.is_object() && !kLeafObjects.count(p)) check_keys(it.value(), s, p);
  }
}

std::vector<double> grid_values(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError("'" + path + "' must be an object");
  if (j.contains("values")) {
    check_keys(j, json{{"values", 0}}, path);
    const json& v = j.at("values");
    if (!v.is_array() || v.empty()) throw ConfigError("'" + path + ".values' must be a non-empty array");
    std::vector<double> out;
    for (const json& x : v) {
      if (!x.is_number()) throw ConfigError("'" + path + ".values' must hold numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }
  check_keys(j, json{{"start", 0}, {"stop", 0}, {"points", 0}}, path);
  const double a = num(j, "start", path), b = num(j, "stop", path);
  const int n = integer(j, "points", path);
  if (n < 1) throw ConfigError("'" + path + ".points' must be >= 1");
  if (n == 1 && a != b) throw ConfigError("'" + path + "' with one point needs start == stop");
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
  return out;
}

json model_to_json(const ModelParams& p) { return to_json(p); }

ModelParams model_from_json(const json& j) {
  ModelParams p;
  const std::string m = "model";
  const std::string scheme = str(j, "scheme", m);
  if (scheme == "lambda") {
    p.scheme = Scheme::Lambda;
  } else if (scheme == "vee") {
    p.scheme = Scheme::Vee;
  } else {
    throw ConfigError("'model.scheme' must be lambda or vee");
  }
  const json& c = at(j, "cavity", m);
  const std::string cp = "model.cavity";
  p.cavity = {angular(num(c, "frequency_hz", cp)), angular(num(c, "gamma_c1_hz", cp)),
              angular(num(c, "gamma_c2_hz", cp)), angular(num(c, "gamma_i_hz", cp))};
  const json& z = at(j, "zeeman", m);
  const std::string zp = "model.zeeman";
  p.zeeman.g_spin_ground = num(z, "g_spin_ground", zp);
  p.zeeman.g_spin_excited = num(z, "g_spin_excited", zp);
  p.zeeman.g_opt_ground = num(z, "g_opt_ground", zp);
  p.zeeman.g_opt_excited = num(z, "g_opt_excited", zp);
  p.zeeman.f_opt0_hz = num(z, "f_opt0_hz", zp);
  const json& ion = at(j, "ion", m);
  const std::string ip = "model.ion";
  p.ion.g_mu = angular(num(ion, "g_mu_hz", ip));
  p.ion.g_o = num(ion, "g_o", ip);
  p.ion.gamma_opt = num(ion, "gamma_opt_per_s", ip);
  p.ion.gamma_spin = num(ion, "gamma_spin_per_s", ip);
  p.ion.gamma_phi2 = num(ion, "gamma_phi2_per_s", ip);
  p.ion.gamma_phi3 = num(ion, "gamma_phi3_per_s", ip);
  p.ion.branching_lower = num(ion, "branching_lower", ip);
  p.ion.scheme = p.scheme;
  const json& e = at(j, "ensemble", m);
  const std::string ep = "model.ensemble";
  p.n_ions = num(e, "n_ions", ep);
  p.sigma_spin = angular(num(e, "sigma_spin_hz", ep));
  const auto so = num_array<4>(e, "sigma_opt_hz", ep);
  for (int i = 0; i < 4; ++i) p.sigma_opt[i] = angular(so[i]);
  p.corr = num(e, "corr", ep);
  p.temperature = num(j, "temperature_k", m);
  const json& d = at(j, "drive", m);
  const std::string dp = "model.drive";
  p.probe_power_dbm = num(d, "probe_power_dbm", dp);
  p.insertion_loss_db = num(d, "insertion_loss_db", dp);
  p.pump_rabi = angular(num(d, "pump_rabi_hz", dp));
  p.laser_hz = num(d, "laser_hz", dp);
  p.field_t = num(d, "field_t", dp);
  const json& tr = at(d, "transitions", dp);
  if (!tr.is_array() || tr.size() != 4) throw ConfigError("'model.drive.transitions' must be 4 booleans");
  for (int i = 0; i < 4; ++i) {
    if (!tr[i].is_boolean()) throw ConfigError("'model.drive.transitions' must be 4 booleans");
    p.transitions[i] = tr[i].get<bool>();
  }
  p.pump_back_action = boolean(d, "pump_back_action", dp);
  const json& q = at(j, "quadrature", m);
  const std::string qp = "model.quadrature";
  p.quadrature.inner_nodes = integer(q, "inner_nodes", qp);
  p.quadrature.hermite_nodes = integer(q, "hermite_nodes", qp);
  p.quadrature.tail_order = integer(q, "tail_order", qp);
  p.quadrature.rel_tol = num(q, "rel_tol", qp);
  p.quadrature.max_level = integer(q, "max_level", qp);
  p.quadrature.support_sigmas = num(q, "support_sigmas", qp);
  p.quadrature.window_homogeneous = num(q, "window_homogeneous", qp);
  p.quadrature.window_rabi = num(q, "window_rabi", qp);
  p.quadrature.optical_inner_nodes = integer(q, "optical_inner_nodes", qp);
  p.quadrature.optical_tail_order = integer(q, "optical_tail_order", qp);
  p.quadrature.analytic_optical = boolean(q, "analytic_optical", qp);
  if (p.quadrature.inner_nodes < 3 || p.quadrature.inner_nodes % 2 == 0)
    throw ConfigError("'model.quadrature.inner_nodes' must be odd and >= 3");
  if (p.quadrature.optical_inner_nodes < 3 || p.quadrature.optical_inner_nodes % 2 == 0)
    throw ConfigError("'model.quadrature.optical_inner_nodes' must be odd and >= 3");
  if (p.quadrature.hermite_nodes < 1 || p.quadrature.tail_order < 1 || p.quadrature.optical_tail_order < 1)
    throw ConfigError("quadrature node counts must be >= 1");
  if (p.quadrature.max_level < 0 || p.quadrature.max_level > 8)
    throw ConfigError("'model.quadrature.max_level' must be in [0, 8]");
  if (!(p.quadrature.rel_tol > 0.0)) throw ConfigError("'model.quadrature.rel_tol' must be > 0");
  const json& s = at(j, "solver", m);
  const std::string sp = "model.solver";
  p.solver.tol = num(s, "tol", sp);
  p.solver.max_iterations = integer(s, "max_iterations", sp);
  p.solver.damped_iterations = integer(s, "damped_iterations", sp);
  p.solver.min_damping = num(s, "min_damping", sp);
  p.solver.multistable_rel = num(s, "multistable_rel", sp);
  p.solver.try_all_seeds = boolean(s, "try_all_seeds", sp);
  p.solver.linear_shortcut = boolean(s, "linear_shortcut", sp);
  p.solver.linear_tol = num(s, "linear_tol", sp);
  p.solver.refine = boolean(s, "refine", sp);
  if (!(p.solver.tol > 0.0) || p.solver.max_iterations < 1)
    throw ConfigError("'model.solver' needs tol > 0 and max_iterations >= 1");
  try {
    p.validate();
  } catch (const InvalidParameter& ex) {
    throw ConfigError(ex.what());
  }
  return p;
}

RunConfig load_config(const json& user) {
  if (!user.is_object()) throw ConfigError("config must be a JSON object");
  std::string name;
  if (user.contains("preset")) {
    if (!user.at("preset").is_string()) throw ConfigError("'preset' must be a string");
    name = user.at("preset").get<std::string>();
  } else if (user.contains("scenario") && user.at("scenario") == "excited_state") {
    name = "excited_state";
  } else {
    name = "ground_state_epr";
  }
  json doc = preset_json(name);
  check_keys(user, doc);
  merge_into(doc, user, "");

  RunConfig rc;
  rc.scenario = scenario_from_string(str(doc, "scenario", ""));
  rc.preset = name;
  rc.model = model_from_json(at(doc, "model", ""));
  if (rc.scenario == Scenario::GroundState && rc.model.scheme != Scheme::Lambda)
    throw ConfigError("scenario ground_state needs model.scheme lambda");
  if (rc.scenario == Scenario::ExcitedState && rc.model.scheme != Scheme::Vee)
    throw ConfigError("scenario excited_state needs model.scheme vee");

  const json& g = at(doc, "grid", "");
  rc.drive_hz.values = grid_values(at(g, "drive_hz", "grid"), "grid.drive_hz");
  rc.field_t.values = grid_values(at(g, "field_t", "grid"), "grid.field_t");
  rc.laser_hz.values = grid_values(at(g, "laser_hz", "grid"), "grid.laser_hz");
  rc.alternate = boolean(g, "alternate", "grid");
  for (double b : rc.field_t.values)
    if (!(b >= 0.0)) throw ConfigError("'grid.field_t' values must be >= 0");
  for (double f : rc.drive_hz.values)
    if (!(f > 0.0)) throw ConfigError("'grid.drive_hz' values must be > 0");

  rc.raman_axis = str(at(doc, "raman", ""), "axis2", "raman");
  if (rc.raman_axis != "field" && rc.raman_axis != "laser")
    throw ConfigError("'raman.axis2' must be field or laser");

  const json& r = at(doc, "recovery", "");
  rc.recovery.model.t1 = num(r, "t1_s", "recovery");
  rc.recovery.model.n0 = num(r, "n0", "recovery");
  rc.recovery.model.detailed_balance = boolean(r, "detailed_balance", "recovery");
  rc.recovery.noise = num(r, "noise", "recovery");
  if (!(rc.recovery.noise >= 0.0)) throw ConfigError("'recovery.noise' must be >= 0");
  const json& sch = at(r, "schedule", "recovery");
  check_keys(sch, json{{"low_power_dbm", 0}, {"segments", 0}}, "recovery.schedule");
  rc.recovery.schedule.low_power_dbm = num(sch, "low_power_dbm", "recovery.schedule");
  const json& segs = at(sch, "segments", "recovery.schedule");
  if (!segs.is_array()) throw ConfigError("'recovery.schedule.segments' must be an array");
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const std::string sp = "recovery.schedule.segments[" + std::to_string(i) + "]";
    check_keys(segs[i], json{{"kind", 0}, {"duration_s", 0}, {"power_dbm", 0}, {"interval_s", 0}}, sp);
    ScheduleSegment seg;
    try {
      seg.kind = segment_kind_from_string(str(segs[i], "kind", sp));
    } catch (const InvalidParameter& ex) {
      throw ConfigError(ex.what());
    }
    seg.duration_s = num(segs[i], "duration_s", sp);
    seg.power_dbm = num(segs[i], "power_dbm", sp);
    if (segs[i].contains("interval_s")) seg.interval_s = num(segs[i], "interval_s", sp);
    rc.recovery.schedule.segments.push_back(seg);
  }
  const json& ex = at(r, "extract", "recovery");
  check_keys(ex, json{{"smooth_half", 0}, {"min_prominence_db", 0}}, "recovery.extract");
  rc.recovery.extract.smooth_half = integer(ex, "smooth_half", "recovery.extract");
  rc.recovery.extract.min_prominence_db = num(ex, "min_prominence_db", "recovery.extract");
  const json& fit = at(r, "fit", "recovery");
  rc.recovery.fit.bootstrap = integer(fit, "bootstrap", "recovery.fit");
  rc.recovery.fit.confidence = num(fit, "confidence", "recovery.fit");
  if (!(rc.recovery.fit.confidence > 0.0 && rc.recovery.fit.confidence < 1.0))
    throw ConfigError("'recovery.fit.confidence' must be in (0, 1)");
  rc.recovery.trace_csv = str(r, "trace_csv", "recovery");
  try {
    rc.recovery.model.validate();
    rc.recovery.schedule.validate();
  } catch (const InvalidParameter& e) {
    throw ConfigError(e.what());
  }

  const json& o = at(doc, "oracle_check", "");
  const std::string op = "oracle_check";
  rc.oracle_check.instances = integer(o, "instances", op);
  rc.oracle_check.spin_nodes = integer(o, "spin_nodes", op);
  rc.oracle_check.optical_nodes = integer(o, "optical_nodes", op);
  rc.oracle_check.rho_tol = num(o, "rho_tol", op);
  rc.oracle_check.beta_tol = num(o, "beta_tol", op);
  rc.oracle_check.oracle.rel_tol = num(o, "rel_tol", op);
  rc.oracle_check.oracle.abs_tol = num(o, "abs_tol", op);
  rc.oracle_check.oracle.stop_tol = num(o, "stop_tol", op);
  if (rc.oracle_check.instances < 1 || rc.oracle_check.spin_nodes < 1 || rc.oracle_check.optical_nodes < 1)
    throw ConfigError("'oracle_check' counts must be >= 1");

  rc.output_dir = str(doc, "output_dir", "");
  if (rc.output_dir.empty()) throw ConfigError("'output_dir' must not be empty");
  rc.db_offset = num(doc, "db_offset", "");
  const json& seed = at(doc, "seed", "");
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0))
    throw ConfigError("'seed' must be a non-negative integer");
  rc.seed = seed.get<std::uint64_t>();
  rc.threads = integer(doc, "threads", "");
  if (rc.threads < 1) throw ConfigError("'threads' must be >= 1");
  rc.max_failure_fraction = num(doc, "max_failure_fraction", "");
  if (!(rc.max_failure_fraction >= 0.0 && rc.max_failure_fraction <= 1.0))
    throw ConfigError("'max_failure_fraction' must be in [0, 1]");
  rc.resolved = doc;
  return rc;
}

RunConfig load_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  return load_config(j);
}

RunConfig load_preset(const std::string& name) { return load_config(json{{"preset", name}}); }

}  // namespace spincav
