// Acceptance checks AC1..AC8. One PASS/FAIL line per criterion; exit status 1
// when any criterion fails. `--only AC1,AC4` restricts the run.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "spincav/config.hpp"
#include "spincav/constants.hpp"
#include "spincav/ensemble_integrator.hpp"
#include "spincav/errors.hpp"
#include "spincav/oracle_check.hpp"
#include "spincav/peaks.hpp"
#include "spincav/relaxation_analysis.hpp"
#include "spincav/spectra_engine.hpp"

using namespace spincav;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
  return v;
}

// Field at which the model's spin transition sits at `f_hz`.
double field_at(const ModelParams& p, double f_hz) {
  return p.field_t * f_hz / p.spin_frequency_hz(p.field_t);
}

// 1. Weak-probe avoided crossing on the full 101 x 101 grid.
Outcome ac1() {
  const RunConfig rc = load_preset("ground_state_epr");
  MapOptions opt;
  opt.alternate = rc.alternate;
  const auto t0 = std::chrono::steady_clock::now();
  const SpectrumMap map = transmission_map(rc.model, rc.field_t.values, rc.drive_hz.values, opt);
  const double wall = seconds_since(t0);
  const BranchReport br = branch_separation(map);
  const double sep = br.min_separation / 1e6;
  const bool ok = std::abs(sep - 74.0) <= 0.02 * 74.0 && wall < 120.0;
  return {ok, fmt("grid %zux%zu, min branch separation %.2f MHz (target 74 +- 2%%), runtime %.1f s (< 120 s), "
                  "%zu failed cells",
                  rc.drive_hz.values.size(), rc.field_t.values.size(), sep, wall, map.failures())};
}

// 2. Relative population difference at 4.7 GHz and 4 K.
Outcome ac2() {
  const double x = thermal_populations(4.7e9, {4.0}).diff_rel_lower;
  const double vs17 = std::abs(x - 1.0 / 17.0) / (1.0 / 17.0);
  const bool ok = std::abs(x - 0.055) <= 0.001 && vs17 <= 0.10;
  return {ok, fmt("1 - exp(-hf/kT) = %.5f (target 0.055 +- 0.001), %.1f%% from 1/17 (<= 10%%)", x, 100.0 * vs17)};
}

// 3. Fixed point against the time-domain oracle on 100 random instances.
Outcome ac3() {
  OracleCheckConfig cfg = load_preset("ground_state_epr").oracle_check;
  cfg.instances = 100;
  const OracleCheckReport r = run_oracle_check(cfg, 1);
  return {r.cases.size() == 100 && r.all_pass() && r.max_rho_diff < 1e-6,
          fmt("%zu/%zu instances pass, max |rho - rho_oracle| %.2e (< 1e-6), max beta rel %.2e (< 1e-5), "
              "%zu flagged multistable; %zu draws without a steady state replaced (oracle limit cycle, "
              "unstable fixed point)",
              r.passed, r.cases.size(), r.max_rho_diff, r.max_beta_rel, r.multistable, r.replaced.size())};
}

// 4a. Dressed-state branches in the low-power Raman map.
Outcome ac4a() {
  const ModelParams p = load_preset("ground_low_power").model;
  const double fc = ordinary(p.cavity.omega_c);
  std::vector<double> fields;
  for (double off : linspace(-6e6, 6e6, 7)) fields.push_back(field_at(p, fc + off));
  const std::vector<double> drive = linspace(fc - 25e6, fc + 25e6, 51);
  const SpectrumMap m = raman_map_field(p, drive, fields);
  const BranchReport br = branch_separation(m);
  const double sep = br.min_separation / 1e6;
  const bool ok = std::isfinite(sep) && std::abs(sep - 28.0) <= 0.2 * 28.0 && br.resolved_rows == fields.size();
  return {ok, fmt("min Raman branch separation %.2f MHz (target 28 +- 20%%), %zu/%zu rows with two branches",
                  sep, br.resolved_rows, fields.size())};
}

// 4b. High power: one branch and a dark line at the inhomogeneous line center.
Outcome ac4b() {
  const ModelParams p = load_preset("ground_high_power").model;
  const double fs = p.spin_frequency_hz(p.field_t);
  const double sigma = ordinary(p.sigma_spin);
  const std::vector<double> drive = linspace(fs - 20e6, fs + 20e6, 81);  // 0.5 MHz steps
  const SpectrumMap raman = raman_map_field(p, drive, {p.field_t});
  const SpectrumMap trans = transmission_map(p, {p.field_t}, drive);
  auto mag = [&](double f) {
    const std::size_t i = static_cast<std::size_t>(std::lround((f - drive.front()) / (drive[1] - drive[0])));
    return std::abs(raman.values[i]);
  };
  const double rc = mag(fs), rm = mag(fs - sigma), rp = mag(fs + sigma);
  const BranchReport br = branch_separation(trans);
  const bool collapsed = br.resolved_rows == 0;
  const bool dark = rc < rm && rc < rp;
  return {collapsed && dark,
          fmt("transmission branches %s; |raman| at center %.3e vs %.3e / %.3e at -/+ sigma_spin (dark line %s)",
              collapsed ? "collapsed" : "still split", rc, rm, rp, dark ? "present" : "absent")};
}

// 4c. High-power transmission peak follows the bare spin line across the crossing.
Outcome ac4c() {
  const ModelParams p = load_preset("ground_high_power").model;
  const double fc = ordinary(p.cavity.omega_c);
  const double width = ordinary(p.cavity.total_linewidth());
  const std::vector<double> offsets{-15e6, -8e6, -4e6, 0.0, 4e6, 8e6, 15e6};
  std::vector<double> fields;
  for (double off : offsets) fields.push_back(field_at(p, fc + off));
  const std::vector<double> drive = linspace(fc - 30e6, fc + 30e6, 121);
  const SpectrumMap m = transmission_map(p, fields, drive);
  const std::size_t n1 = drive.size();
  double worst = 0.0;
  std::ostringstream rows;
  for (std::size_t r = 0; r < fields.size(); ++r) {
    std::vector<double> db(n1);
    for (std::size_t i = 0; i < n1; ++i) db[i] = m.db(r * n1 + i);
    const double fs = fc + offsets[r];
    double best = std::numeric_limits<double>::infinity();
    for (const Peak& pk : local_maxima(drive, db))
      if (std::abs(pk.position - fs) < std::abs(best - fs)) best = pk.position;
    const double miss = std::abs(best - fs);
    worst = std::max(worst, miss);
    rows << fmt(" %+.0f:%.1f", offsets[r] / 1e6, (best - fc) / 1e6);
  }
  return {worst <= width,
          fmt("worst |peak - f_spin| %.2f MHz (<= linewidth %.2f MHz); spin offset:peak offset MHz%s", worst / 1e6,
              width / 1e6, rows.str().c_str())};
}

// 5. Excited doublet: no strong coupling, four Raman spots.
Outcome ac5() {
  const ModelParams p = load_preset("excited_state").model;
  const double fc = ordinary(p.cavity.omega_c);
  const double width = ordinary(p.cavity.total_linewidth());
  // Pulling is largest with the spin line about a linewidth off the cavity.
  std::vector<double> fields;
  for (double off : {-6e6, -3e6, 0.0, 3e6, 6e6}) fields.push_back(field_at(p, fc + off));
  const std::vector<double> drive = linspace(fc - 10e6, fc + 10e6, 41);
  const SpectrumMap t = transmission_map(p, fields, drive);
  const std::size_t n1 = drive.size();
  double pull = 0.0;
  for (std::size_t r = 0; r < fields.size(); ++r) {
    std::size_t imax = 0;
    for (std::size_t i = 1; i < n1; ++i)
      if (t.db(r * n1 + i) > t.db(r * n1 + imax)) imax = i;
    double peak = drive[imax];
    if (imax > 0 && imax + 1 < n1)
      peak += parabolic_offset(t.db(r * n1 + imax - 1), t.db(r * n1 + imax), t.db(r * n1 + imax + 1)) *
              (drive[1] - drive[0]);
    pull = std::max(pull, std::abs(peak - fc));
  }
  const bool single = branch_separation(t).resolved_rows == 0;

  const ZeemanLines lines = zeeman_frequencies(p.zeeman, p.field_t);
  const double fs = p.spin_frequency_hz(p.field_t);
  double lo = lines.optical[0].frequency_hz, hi = lo;
  for (const auto& l : lines.optical) {
    lo = std::min(lo, l.frequency_hz);
    hi = std::max(hi, l.frequency_hz);
  }
  const double background = std::max(std::abs(solve_cell(p, p.field_t, fs, lo - 2e9, true).raman),
                                     std::abs(solve_cell(p, p.field_t, fs, hi + 2e9, true).raman));
  double weakest = std::numeric_limits<double>::infinity();
  std::ostringstream spots;
  for (int i = 0; i < 4; ++i) {
    const double r = std::abs(solve_cell(p, p.field_t, fs, lines.optical[i].frequency_hz, true).raman);
    const double contrast = 20.0 * std::log10(r / background);
    weakest = std::min(weakest, contrast);
    spots << fmt(" %d:%.1f", i + 1, contrast);
  }
  const bool ok = pull < 0.1 * width && single && weakest >= 20.0;
  return {ok, fmt("max pulling %.3f MHz over spin offsets -6..6 MHz (< %.2f MHz), %s; Raman spot contrast over background dB%s (>= 20 dB each)",
                  pull / 1e6, 0.1 * width / 1e6, single ? "single resonance" : "split resonance",
                  spots.str().c_str())};
}

// 6. Saturation recovery with 5% noise, fitted back.
Outcome ac6() {
  const RunConfig rc = load_preset("ground_state_epr");
  RecoveryCoupling coupling{rc.model, grid_values(rc.resolved["recovery"]["drive_hz"], "recovery.drive_hz")};
  bool ok = true;
  std::ostringstream out;
  for (double n0 : {0.0, 0.25, 0.5, 0.75}) {
    RecoveryModel model = rc.recovery.model;
    model.t1 = 10.0;
    model.n0 = n0;
    const RecoveryRun run = simulate_recovery(model, coupling, rc.recovery.schedule, {0.05, 1});
    const TraceExtraction ex = extract_trace(run, rc.recovery.extract);
    try {
      const T1Fit fit = fit_t1(ex.trace, rc.recovery.fit);
      const double tol = n0 == 0.0 ? 0.5 : 3.0;
      ok = ok && std::abs(fit.t1 - 10.0) <= tol;
      out << fmt(" n0=%.2f:%.2fs", n0, fit.t1);
    } catch (const SpincavError& e) {
      ok = false;
      out << fmt(" n0=%.2f:fit failed (%s)", n0, e.what());
    }
  }
  return {ok, fmt("injected T1 10 s, 5%% noise; fitted T1 by initial population%s (full saturation 10 +- 0.5 s, "
                  "all depths 10 +- 3 s)",
                  out.str().c_str())};
}

// Composite Simpson over +-9 sigma_spin in delta2 with the exact Gaussian average over delta3.
Complex dense_reference(const EnsembleContext& ctx, Complex beta, int n, bool pumped) {
  const InhomogeneousDistribution d = ctx.distribution();
  const GeneratorParts parts =
      generator_parts(ctx.ion, 2.0 * ctx.ion.g_mu * beta, ctx.drive.omega_pump, ctx.boltzmann);
  const double lo = d.center2 - 9.0 * d.sigma2, h = 18.0 * d.sigma2 / (n - 1);
  std::vector<Complex> terms(n);
  for (int i = 0; i < n; ++i) {
    const double x = lo + i * h;
    const double z = (x - d.center2) / d.sigma2;
    const double wt = ((i == 0 || i == n - 1) ? 1.0 : (i % 2 ? 4.0 : 2.0)) * h / 3.0 * std::exp(-0.5 * z * z) /
                      (d.sigma2 * std::sqrt(2.0 * std::numbers::pi));
    Vector9c rho;
    if (pumped) {
      const auto avg = steady_state_optical_average(parts, x, d.conditional_mean3(x), d.conditional_sigma3());
      if (!avg) throw SpincavError("reference: optical average unavailable");
      rho = *avg;
    } else {
      rho = steady_state_vector(parts.at({x, d.center3}));
    }
    terms[i] = wt * rho(vec_index(1, 0));
  }
  return ctx.ens.n_ions * ctx.population_weight * ctx.ion.g_mu * pairwise_sum(std::span<const Complex>(terms));
}

// Amplitude whose Rabi frequency equals sqrt(Gamma1 Gamma2) of the spin pair.
double saturation_amplitude(const EnsembleContext& ctx) {
  const GeneratorParts parts = generator_parts(ctx.ion, 0.0, ctx.drive.omega_pump, ctx.boltzmann);
  return std::sqrt(spin_population_rate(parts) * spin_coherence_decay(parts)) / (2.0 * ctx.ion.g_mu);
}

// 7. Adaptive quadrature against a dense reference. Half the points use the
// preset ensemble, half a homogeneous line three orders narrower than sigma_spin.
Outcome ac7() {
  const int nodes = 200001;
  struct Point {
    EnsembleContext ctx;
    double amp;
    bool pumped;
  };
  std::vector<Point> pts;
  for (double gamma_phi2 : {0.0, 1e4}) {
    ModelParams epr = load_preset("ground_state_epr").model;
    ModelParams low = load_preset("ground_low_power").model;
    if (gamma_phi2 > 0.0) epr.ion.gamma_phi2 = low.ion.gamma_phi2 = gamma_phi2;
    const double f = ordinary(epr.cavity.omega_c) + (gamma_phi2 > 0.0 ? 2.5e6 : 0.0);
    const EnsembleContext base = *base_context(epr, epr.field_t, f);
    const EnsembleContext pc = pumped_contexts(low, low.field_t, f, low.laser_hz).back();
    for (double rel : {1e-2, 1e-1, 1.0, 1e1, 1e2}) {
      pts.push_back({base, rel * saturation_amplitude(base), false});
      pts.push_back({pc, rel * saturation_amplitude(pc), true});
    }
  }
  double worst = 0.0;
  for (const Point& pt : pts) {
    const Complex beta(pt.amp, 0.0);
    const Complex ref = dense_reference(pt.ctx, beta, nodes, pt.pumped);
    EnsembleIntegrator adaptive(pt.ctx);
    const Complex got = adaptive.integrate(beta).s_mu;
    worst = std::max(worst, std::abs(got - ref) / std::abs(ref));
  }
  return {worst < 5e-3, fmt("%zu points from 0.01 to 100 x saturation, pumped and pump-free, broad and narrow "
                            "homogeneous lines; worst relative deviation %.2e from a %d-node reference (< 5e-3)",
                            pts.size(), worst, nodes)};
}

// 8. Empty cavity.
Outcome ac8() {
  ModelParams p = load_preset("ground_state_epr").model;
  p.n_ions = 0.0;
  const double fc = ordinary(p.cavity.omega_c);
  auto power = [&](double f) { return std::norm(solve_cell(p, p.field_t, f, p.laser_hz, false).s21); };
  const double peak = power(fc);
  auto half = [&](double a, double b) {
    for (int k = 0; k < 200; ++k) {
      const double m = 0.5 * (a + b);
      ((power(m) > 0.5 * peak) == (power(a) > 0.5 * peak) ? a : b) = m;
    }
    return 0.5 * (a + b);
  };
  const double width = ordinary(p.cavity.total_linewidth());
  const double fwhm = half(fc, fc + 5 * width) - half(fc - 5 * width, fc);
  const double rel = std::abs(fwhm - width) / width;

  ModelParams m = p;
  m.cavity.gamma_c2 = m.cavity.gamma_c1;
  m.cavity.gamma_i = 0.0;
  const double unit = std::norm(solve_cell(m, m.field_t, fc, m.laser_hz, false).s21);
  return {rel <= 1e-9 && std::abs(unit - 1.0) <= 1e-12,
          fmt("FWHM %.9f MHz vs gamma_tot %.9f MHz (rel %.1e <= 1e-9); matched lossless peak |s21|^2 = %.15f",
              fwhm / 1e6, width / 1e6, rel, unit)};
}

// 4. The three nonlinear signatures, reported together.
Outcome ac4() {
  bool ok = true;
  std::string detail;
  for (const auto& [tag, fn] : {std::pair{"(a)", ac4a}, std::pair{"(b)", ac4b}, std::pair{"(c)", ac4c}}) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    ok = ok && o.pass;
    detail += fmt("%s%s %s: %s", detail.empty() ? "" : " | ", tag, o.pass ? "pass" : "fail", o.detail.c_str());
  }
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<std::string> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string tok; std::getline(ss, tok, ',');) only.insert(tok);
    }
  }
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"AC1", ac1}, {"AC2", ac2}, {"AC3", ac3}, {"AC4", ac4}, {"AC5", ac5}, {"AC6", ac6}, {"AC7", ac7}, {"AC8", ac8}};
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    if (!only.empty() && !only.count(name)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%-5s %s  %s  [%.1f s]\n", name.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
