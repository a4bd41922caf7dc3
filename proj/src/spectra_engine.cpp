#include "spincav/spectra_engine.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <cmath>
#include <numbers>
#include <thread>

#include "spincav/constants.hpp"
#include "spincav/errors.hpp"
#include "spincav/peaks.hpp"

namespace spincav {
namespace {

DriveState drive_state(const ModelParams& p, double drive_hz, double laser_hz, double pump) {
  DriveState d;
  d.beta_in = p.beta_in(drive_hz);
  d.omega_drive = angular(drive_hz);
  d.omega_pump = pump;
  d.omega_laser = angular(laser_hz);
  return d;
}

bool needs_feedback(const ModelParams& p) {
  return p.pump_rabi > 0.0 && (p.scheme == Scheme::Vee || p.pump_back_action);
}

void merge_report(QuadratureReport& into, const QuadratureReport& r, bool first) {
  if (first) {
    into = r;
    return;
  }
  into.level = std::max(into.level, r.level);
  into.error_estimate = std::max(into.error_estimate, r.error_estimate);
  into.converged = into.converged && r.converged;
  into.optical_fallbacks += r.optical_fallbacks;
}

template <class Fn>
void for_rows(std::size_t rows, int threads, Fn&& fn) {
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(rows)));
  if (n == 1) {
    for (std::size_t r = 0; r < rows; ++r) fn(r);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(n);
  for (int t = 0; t < n; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t r = next++; r < rows; r = next++) fn(r);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

SpectrumMap make_map(const Axis& a1, const Axis& a2, const std::string& quantity, const MapOptions& opt,
                     const ModelParams& p) {
  SpectrumMap m;
  m.grid.axis1 = a1;
  m.grid.axis2 = a2;
  m.grid.alternate = opt.alternate;
  m.grid.validate();
  m.quantity = quantity;
  const std::size_t n = m.grid.size();
  m.values.assign(n, Complex{0.0, 0.0});
  m.converged.assign(n, 0);
  m.status.assign(n, "");
  m.iterations.assign(n, 0);
  m.db_offset = opt.db_offset;
  m.provenance["params"] = to_json(p);
  m.provenance["quantity"] = quantity;
  m.provenance["scan"] = {{"fast_axis", a1.name},
                          {"slow_axis", a2.name},
                          {"direction", opt.alternate ? "alternating" : "unidirectional"}};
  m.provenance["db_offset"] = opt.db_offset;
  return m;
}

std::vector<std::size_t> row_order(std::size_t n1, std::size_t row, bool alternate) {
  std::vector<std::size_t> order(n1);
  for (std::size_t i = 0; i < n1; ++i) order[i] = i;
  if (alternate && row % 2 == 1) std::reverse(order.begin(), order.end());
  return order;
}

void store(SpectrumMap& m, std::size_t idx, const CellResult& c, bool raman) {
  m.values[idx] = raman ? c.raman : c.s21;
  m.converged[idx] = c.converged ? 1 : 0;
  m.status[idx] = to_string(c.solution.status);
  m.iterations[idx] = c.solution.iterations;
}

}  // namespace

void ModelParams::validate() const {
  cavity.validate();
  ion.validate(true);
  zeeman.validate();
  if (!(n_ions >= 0.0)) throw InvalidParameter("model: n_ions must be >= 0");
  if (!(sigma_spin >= 0.0)) throw InvalidParameter("model: sigma_spin must be >= 0");
  for (double s : sigma_opt)
    if (!(s >= 0.0)) throw InvalidParameter("model: optical widths must be >= 0");
  if (!(std::abs(corr) < 1.0)) throw InvalidParameter("model: |corr| must be < 1");
  if (!(temperature > 0.0)) throw InvalidParameter("model: temperature must be > 0");
  if (!(pump_rabi >= 0.0)) throw InvalidParameter("model: pump Rabi frequency must be >= 0");
  if (!(field_t >= 0.0)) throw InvalidParameter("model: field must be >= 0");
}

double ModelParams::spin_frequency_hz(double field) const {
  const ZeemanLines lines = zeeman_frequencies(zeeman, field);
  return scheme == Scheme::Lambda ? lines.f_spin_ground : lines.f_spin_excited;
}

double ModelParams::beta_in(double drive_hz) const {
  return input_amplitude_from_dbm(probe_power_dbm, drive_hz, insertion_loss_db);
}

nlohmann::json to_json(const ModelParams& p) {
  nlohmann::json j;
  j["scheme"] = to_string(p.scheme);
  j["cavity"] = {{"frequency_hz", ordinary(p.cavity.omega_c)},
                 {"gamma_c1_hz", ordinary(p.cavity.gamma_c1)},
                 {"gamma_c2_hz", ordinary(p.cavity.gamma_c2)},
                 {"gamma_i_hz", ordinary(p.cavity.gamma_i)}};
  j["zeeman"] = {{"g_spin_ground", p.zeeman.g_spin_ground},
                 {"g_spin_excited", p.zeeman.g_spin_excited},
                 {"g_opt_ground", p.zeeman.g_opt_ground},
                 {"g_opt_excited", p.zeeman.g_opt_excited},
                 {"f_opt0_hz", p.zeeman.f_opt0_hz}};
  j["ion"] = {{"g_mu_hz", ordinary(p.ion.g_mu)},
              {"g_o", p.ion.g_o},
              {"gamma_opt_per_s", p.ion.gamma_opt},
              {"gamma_spin_per_s", p.ion.gamma_spin},
              {"gamma_phi2_per_s", p.ion.gamma_phi2},
              {"gamma_phi3_per_s", p.ion.gamma_phi3},
              {"branching_lower", p.ion.branching_lower}};
  std::vector<double> sig;
  for (double s : p.sigma_opt) sig.push_back(ordinary(s));
  j["ensemble"] = {{"n_ions", p.n_ions},
                   {"sigma_spin_hz", ordinary(p.sigma_spin)},
                   {"sigma_opt_hz", sig},
                   {"corr", p.corr}};
  j["temperature_k"] = p.temperature;
  j["drive"] = {{"probe_power_dbm", p.probe_power_dbm},
                {"insertion_loss_db", p.insertion_loss_db},
                {"pump_rabi_hz", ordinary(p.pump_rabi)},
                {"laser_hz", p.laser_hz},
                {"field_t", p.field_t},
                {"transitions", std::vector<bool>(p.transitions.begin(), p.transitions.end())},
                {"pump_back_action", p.pump_back_action}};
  const QuadratureSettings& q = p.quadrature;
  j["quadrature"] = {{"inner_nodes", q.inner_nodes},
                     {"hermite_nodes", q.hermite_nodes},
                     {"tail_order", q.tail_order},
                     {"rel_tol", q.rel_tol},
                     {"max_level", q.max_level},
                     {"support_sigmas", q.support_sigmas},
                     {"window_homogeneous", q.window_homogeneous},
                     {"window_rabi", q.window_rabi},
                     {"optical_inner_nodes", q.optical_inner_nodes},
                     {"optical_tail_order", q.optical_tail_order},
                     {"analytic_optical", q.analytic_optical}};
  const SolverSettings& s = p.solver;
  j["solver"] = {{"tol", s.tol},
                 {"max_iterations", s.max_iterations},
                 {"damped_iterations", s.damped_iterations},
                 {"min_damping", s.min_damping},
                 {"multistable_rel", s.multistable_rel},
                 {"try_all_seeds", s.try_all_seeds},
                 {"linear_shortcut", s.linear_shortcut},
                 {"linear_tol", s.linear_tol},
                 {"refine", s.refine}};
  return j;
}

std::optional<EnsembleContext> base_context(const ModelParams& p, double field, double drive_hz) {
  if (p.scheme != Scheme::Lambda) return std::nullopt;
  const ZeemanLines lines = zeeman_frequencies(p.zeeman, field);
  EnsembleContext ctx;
  ctx.ion = p.ion;
  ctx.ion.scheme = Scheme::Lambda;
  ctx.ion.pumped = PumpedLevel::Upper;
  ctx.ens = {p.n_ions, p.sigma_spin, p.sigma_opt[0], p.corr};
  ctx.drive = drive_state(p, drive_hz, p.laser_hz, 0.0);
  ctx.spin_center = angular(lines.f_spin_ground);
  ctx.optical_center = ctx.drive.omega_laser;
  ctx.boltzmann = boltzmann_factor(lines.f_spin_ground, p.temperature);
  ctx.population_weight = 1.0;
  return ctx;
}

std::vector<EnsembleContext> pumped_contexts(const ModelParams& p, double field, double drive_hz,
                                             double laser_hz) {
  std::vector<EnsembleContext> out;
  if (!(p.pump_rabi > 0.0)) return out;
  const ZeemanLines lines = zeeman_frequencies(p.zeeman, field);
  const double f_spin = p.scheme == Scheme::Lambda ? lines.f_spin_ground : lines.f_spin_excited;
  Populations ground;
  if (p.scheme == Scheme::Vee) {
    ground = lines.f_spin_ground > 0.0 ? thermal_populations(lines.f_spin_ground, {p.temperature})
                                       : Populations{};
  }
  for (int i = 0; i < 4; ++i) {
    if (!p.transitions[i]) continue;
    const OpticalTransition& tr = lines.optical[i];
    EnsembleContext ctx;
    ctx.ion = p.ion;
    ctx.ion.scheme = p.scheme;
    if (p.scheme == Scheme::Lambda) {
      ctx.ion.pumped = tr.ground == GroundLevel::B ? PumpedLevel::Upper : PumpedLevel::Lower;
      ctx.population_weight = 1.0;
    } else {
      ctx.ion.pumped = tr.excited == ExcitedLevel::D ? PumpedLevel::Upper : PumpedLevel::Lower;
      ctx.population_weight = tr.ground == GroundLevel::A ? ground.p_lower : ground.p_upper;
    }
    ctx.ens = {p.n_ions, p.sigma_spin, p.sigma_opt[i], p.corr};
    ctx.drive = drive_state(p, drive_hz, laser_hz, p.pump_rabi);
    ctx.spin_center = angular(f_spin);
    ctx.optical_center = angular(tr.frequency_hz);
    ctx.boltzmann = boltzmann_factor(f_spin, p.temperature);
    out.push_back(ctx);
  }
  return out;
}

CompositeSource::CompositeSource(const ModelParams& p, double field, double drive_hz, double laser_hz)
    : lambda_(p.scheme == Scheme::Lambda) {
  if (auto ctx = base_context(p, field, drive_hz)) {
    base_ = std::make_unique<EnsembleIntegrator>(*ctx, p.quadrature);
  }
  for (const EnsembleContext& ctx : pumped_contexts(p, field, drive_hz, laser_hz)) {
    pumped_.push_back(std::make_unique<EnsembleIntegrator>(ctx, p.quadrature));
  }
  feedback_ = !pumped_.empty() && (!lambda_ || p.pump_back_action);
}

void CompositeSource::prepare(Complex beta_design) {
  if (base_) base_->prepare(beta_design);
  for (auto& m : pumped_) m->prepare(beta_design);
}

double CompositeSource::design_amplitude() const {
  if (base_) return base_->design_amplitude();
  return pumped_.empty() ? 0.0 : pumped_.front()->design_amplitude();
}

double CompositeSource::weak_amplitude() const {
  double w = base_ ? base_->weak_amplitude() : 0.0;
  for (const auto& m : pumped_) w = w == 0.0 ? m->weak_amplitude() : std::min(w, m->weak_amplitude());
  return w == 0.0 ? 1.0 : w;
}

SourceTerms CompositeSource::evaluate(Complex beta, bool with_optical) const {
  SourceTerms out;
  Complex sb{0.0, 0.0};
  if (base_) sb = base_->evaluate(beta).s_mu;
  out.s_mu = sb;
  if (feedback_ || with_optical) {
    for (const auto& m : pumped_) {
      const SourceTerms t = m->evaluate(beta);
      if (feedback_) out.s_mu += t.s_mu - (lambda_ ? sb : Complex{0.0, 0.0});
      if (with_optical) out.s_opt += t.s_opt;
    }
  }
  return out;
}

SourceTerms CompositeSource::refine(Complex beta) {
  bool first = true;
  std::exception_ptr error;
  auto run = [&](EnsembleIntegrator& m) {
    try {
      m.refine(beta);
    } catch (const QuadratureNotConverged&) {
      if (!error) error = std::current_exception();
    }
    merge_report(report_, m.report(), first);
    first = false;
  };
  if (base_) run(*base_);
  for (auto& m : pumped_) run(*m);
  if (first) {
    report_ = QuadratureReport{};
    report_.converged = true;
  }
  if (error) std::rethrow_exception(error);
  return evaluate(beta, true);
}

Complex raman_at(const ModelParams& p, double field, double drive_hz, double laser_hz, Complex beta,
                 bool* converged) {
  Complex total{0.0, 0.0};
  bool ok = true;
  for (const EnsembleContext& ctx : pumped_contexts(p, field, drive_hz, laser_hz)) {
    EnsembleIntegrator m(ctx, p.quadrature);
    try {
      total += m.integrate(beta).s_opt;
    } catch (const QuadratureNotConverged&) {
      ok = false;
      total += m.evaluate_at_level(beta, p.quadrature.max_level).s_opt;
    }
  }
  if (converged) *converged = ok;
  return total;
}

CellResult solve_cell(const ModelParams& p, double field, double drive_hz, double laser_hz,
                      bool want_raman, std::optional<Complex> warm) {
  CellResult r;
  const DriveState drive = drive_state(p, drive_hz, laser_hz, p.pump_rabi);
  if (needs_feedback(p)) {
    CompositeSource src(p, field, drive_hz, laser_hz);
    r.solution = solve_field(p.cavity, drive, src, p.solver, warm);
    r.raman = r.solution.raman_out;
    r.converged = r.solution.converged();
  } else {
    ModelParams q = p;
    q.pump_rabi = 0.0;
    CompositeSource src(q, field, drive_hz, laser_hz);
    r.solution = solve_field(p.cavity, drive, src, p.solver, warm);
    r.converged = r.solution.converged();
    if (want_raman && p.pump_rabi > 0.0 && r.converged) {
      bool ok = true;
      r.raman = raman_at(p, field, drive_hz, laser_hz, r.solution.beta, &ok);
      r.solution.raman_out = r.raman;
      r.converged = ok;
    }
  }
  r.s21 = outputs(r.solution, p.cavity, drive).s21;
  return r;
}

void SweepGrid::validate() const {
  for (const Axis* a : {&axis1, &axis2}) {
    if (a->values.empty()) throw InvalidParameter("grid: axis '" + a->name + "' is empty");
    for (std::size_t i = 1; i < a->values.size(); ++i) {
      if (!(a->values[i] > a->values[i - 1])) {
        throw InvalidParameter("grid: axis '" + a->name + "' must be strictly increasing");
      }
    }
  }
}

double SpectrumMap::db(std::size_t index) const {
  return 20.0 * std::log10(std::abs(values[index])) + db_offset;
}

std::size_t SpectrumMap::failures() const {
  return static_cast<std::size_t>(std::count(converged.begin(), converged.end(), 0));
}

SpectrumMap transmission_map(const ModelParams& p, const std::vector<double>& fields,
                             const std::vector<double>& drive_hz, const MapOptions& opt) {
  p.validate();
  SpectrumMap m = make_map({"drive_frequency", "Hz", drive_hz}, {"field", "T", fields}, "s21", opt, p);
  const std::size_t n1 = drive_hz.size();
  for_rows(fields.size(), opt.threads, [&](std::size_t j2) {
    std::optional<Complex> warm;
    for (std::size_t j1 : row_order(n1, j2, opt.alternate)) {
      const CellResult c = solve_cell(p, fields[j2], drive_hz[j1], p.laser_hz, false, warm);
      store(m, j2 * n1 + j1, c, false);
      warm = c.converged ? std::optional<Complex>(c.solution.beta) : std::nullopt;
    }
  });
  return m;
}

SpectrumMap raman_map_field(const ModelParams& p, const std::vector<double>& drive_hz,
                            const std::vector<double>& fields, const MapOptions& opt) {
  p.validate();
  SpectrumMap m = make_map({"drive_frequency", "Hz", drive_hz}, {"field", "T", fields}, "raman", opt, p);
  const std::size_t n1 = drive_hz.size();
  for_rows(fields.size(), opt.threads, [&](std::size_t j2) {
    std::optional<Complex> warm;
    for (std::size_t j1 : row_order(n1, j2, opt.alternate)) {
      const CellResult c = solve_cell(p, fields[j2], drive_hz[j1], p.laser_hz, true, warm);
      store(m, j2 * n1 + j1, c, true);
      warm = c.converged ? std::optional<Complex>(c.solution.beta) : std::nullopt;
    }
  });
  return m;
}

SpectrumMap raman_map_freq_laser(const ModelParams& p, const std::vector<double>& drive_hz,
                                 const std::vector<double>& laser_hz, const MapOptions& opt) {
  p.validate();
  SpectrumMap m =
      make_map({"drive_frequency", "Hz", drive_hz}, {"laser_frequency", "Hz", laser_hz}, "raman", opt, p);
  const std::size_t n1 = drive_hz.size();
  if (!needs_feedback(p)) {
    // The intracavity field does not see the pump, so one solve per drive
    // frequency serves every laser row.
    std::vector<CellResult> column(n1);
    std::optional<Complex> warm;
    for (std::size_t j1 = 0; j1 < n1; ++j1) {
      column[j1] = solve_cell(p, p.field_t, drive_hz[j1], p.laser_hz, false, warm);
      warm = column[j1].converged ? std::optional<Complex>(column[j1].solution.beta) : std::nullopt;
    }
    for_rows(laser_hz.size(), opt.threads, [&](std::size_t j2) {
      for (std::size_t j1 = 0; j1 < n1; ++j1) {
        CellResult c = column[j1];
        if (c.converged && p.pump_rabi > 0.0) {
          bool ok = true;
          c.raman = raman_at(p, p.field_t, drive_hz[j1], laser_hz[j2], c.solution.beta, &ok);
          c.converged = ok;
        }
        store(m, j2 * n1 + j1, c, true);
      }
    });
    return m;
  }
  for_rows(laser_hz.size(), opt.threads, [&](std::size_t j2) {
    std::optional<Complex> warm;
    for (std::size_t j1 : row_order(n1, j2, opt.alternate)) {
      const CellResult c = solve_cell(p, p.field_t, drive_hz[j1], laser_hz[j2], true, warm);
      store(m, j2 * n1 + j1, c, true);
      warm = c.converged ? std::optional<Complex>(c.solution.beta) : std::nullopt;
    }
  });
  return m;
}

AbsorptionSpectrum absorption_spectrum(const ZeemanModel& z, double field, const Populations& pops,
                                       const std::array<double, 4>& widths_hz,
                                       const std::array<double, 4>& amplitudes,
                                       const std::vector<double>& laser_hz) {
  for (double w : widths_hz)
    if (!(w > 0.0)) throw InvalidParameter("absorption: widths must be > 0");
  const ZeemanLines lines = zeeman_frequencies(z, field);
  AbsorptionSpectrum out;
  out.frequency_hz = laser_hz;
  for (double nu : laser_hz) {
    double od = 0.0;
    for (int i = 0; i < 4; ++i) {
      const OpticalTransition& tr = lines.optical[i];
      const double pop = tr.ground == GroundLevel::A ? pops.p_lower : pops.p_upper;
      const double u = (nu - tr.frequency_hz) / widths_hz[i];
      od += amplitudes[i] * pop * std::exp(-0.5 * u * u);
    }
    out.optical_depth.push_back(od);
    out.transmission.push_back(std::exp(-od));
  }
  return out;
}

double absorption_area(const Populations& pops, const std::array<double, 4>& widths_hz,
                       const std::array<double, 4>& amplitudes) {
  // Transitions 1, 2 start in a; 3, 4 in b.
  const double pop[4] = {pops.p_lower, pops.p_lower, pops.p_upper, pops.p_upper};
  double s = 0.0;
  for (int i = 0; i < 4; ++i) s += amplitudes[i] * pop[i] * widths_hz[i] * std::sqrt(2.0 * std::numbers::pi);
  return s;
}

DarkLineReport dark_line_probe(const ModelParams& p, const std::vector<double>& powers_dbm,
                               const DarkLineSettings& s) {
  p.validate();
  DarkLineReport rep;
  rep.field_t = p.field_t;
  rep.f_spin_hz = p.spin_frequency_hz(p.field_t);
  const double sigma_hz = ordinary(p.sigma_spin);
  const double g = p.scheme == Scheme::Lambda ? p.zeeman.g_spin_ground : p.zeeman.g_spin_excited;
  for (double power : powers_dbm) {
    ModelParams q = p;
    q.probe_power_dbm = power;
    DarkLineRow row;
    row.power_dbm = power;
    const CellResult minus = solve_cell(q, p.field_t, rep.f_spin_hz - sigma_hz, p.laser_hz, true);
    const CellResult center = solve_cell(q, p.field_t, rep.f_spin_hz, p.laser_hz, true, minus.solution.beta);
    const CellResult plus = solve_cell(q, p.field_t, rep.f_spin_hz + sigma_hz, p.laser_hz, true, center.solution.beta);
    row.raman_minus = std::abs(minus.raman);
    row.raman_center = std::abs(center.raman);
    row.raman_plus = std::abs(plus.raman);
    row.dark_line = row.raman_center < std::min(row.raman_minus, row.raman_plus);
    for (double off : s.spin_offsets_hz) {
      PeakTrack t;
      t.f_spin_hz = rep.f_spin_hz + off;
      t.field_t = field_for_splitting(g, t.f_spin_hz);
      std::vector<double> f(s.points);
      std::vector<double> y(s.points);
      std::optional<Complex> warm;
      for (int i = 0; i < s.points; ++i) {
        f[i] = t.f_spin_hz - s.span_hz + 2.0 * s.span_hz * i / (s.points - 1);
        const CellResult c = solve_cell(q, t.field_t, f[i], p.laser_hz, false, warm);
        y[i] = std::norm(c.s21);
        warm = c.solution.beta;
      }
      double best = std::numeric_limits<double>::infinity();
      for (const Peak& pk : local_maxima(f, y)) {
        if (std::abs(pk.position - t.f_spin_hz) < best) {
          best = std::abs(pk.position - t.f_spin_hz);
          t.peak_hz = pk.position;
          t.found = true;
        }
      }
      row.tracks.push_back(t);
    }
    rep.rows.push_back(row);
  }
  return rep;
}

nlohmann::json to_json(const DarkLineReport& r) {
  nlohmann::json j;
  j["field_t"] = r.field_t;
  j["f_spin_hz"] = r.f_spin_hz;
  j["rows"] = nlohmann::json::array();
  for (const DarkLineRow& row : r.rows) {
    nlohmann::json jr = {{"power_dbm", row.power_dbm},
                         {"raman_center", row.raman_center},
                         {"raman_minus", row.raman_minus},
                         {"raman_plus", row.raman_plus},
                         {"dark_line", row.dark_line}};
    jr["tracks"] = nlohmann::json::array();
    for (const PeakTrack& t : row.tracks) {
      jr["tracks"].push_back({{"field_t", t.field_t},
                              {"f_spin_hz", t.f_spin_hz},
                              {"peak_hz", t.peak_hz},
                              {"found", t.found}});
    }
    j["rows"].push_back(jr);
  }
  return j;
}

BranchReport branch_separation(const SpectrumMap& map, double min_prominence_db) {
  BranchReport rep;
  rep.min_separation = std::numeric_limits<double>::quiet_NaN();
  const auto& a1 = map.grid.axis1.values;
  const std::size_t n1 = a1.size();
  for (std::size_t j2 = 0; j2 < map.grid.axis2.values.size(); ++j2) {
    RowBranches row;
    row.axis2 = map.grid.axis2.values[j2];
    std::vector<double> y(n1);
    for (std::size_t j1 = 0; j1 < n1; ++j1) y[j1] = 20.0 * std::log10(std::abs(map.values[j2 * n1 + j1]));
    std::vector<Peak> peaks;
    for (const Peak& pk : local_maxima(a1, y))
      if (pk.prominence >= min_prominence_db) peaks.push_back(pk);
    if (peaks.size() >= 2) {
      std::partial_sort(peaks.begin(), peaks.begin() + 2, peaks.end(),
                        [](const Peak& a, const Peak& b) { return a.prominence > b.prominence; });
      row.lower = std::min(peaks[0].position, peaks[1].position);
      row.upper = std::max(peaks[0].position, peaks[1].position);
      row.separation = row.upper - row.lower;
      row.resolved = true;
      ++rep.resolved_rows;
      if (!(row.separation >= rep.min_separation)) {
        rep.min_separation = row.separation;
        rep.min_row = j2;
      }
    }
    rep.rows.push_back(row);
  }
  return rep;
}

nlohmann::json BranchReport::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const RowBranches& r : rows) {
    rows_json.push_back({{"axis2", r.axis2},
                         {"resolved", r.resolved},
                         {"lower", r.lower},
                         {"upper", r.upper},
                         {"separation", r.separation}});
  }
  nlohmann::json j = {{"resolved_rows", resolved_rows}, {"rows", rows_json}};
  if (resolved_rows) {
    j["min_separation"] = min_separation;
    j["min_row"] = min_row;
  } else {
    j["min_separation"] = nullptr;
  }
  return j;
}

}  // namespace spincav
