#include "spincav/relaxation_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include "spincav/constants.hpp"
#include "spincav/errors.hpp"
#include "spincav/peaks.hpp"

namespace spincav {
namespace {

struct RecoveryResidual {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;

  const std::vector<double>* t = nullptr;
  std::vector<double> y;
  std::vector<double> w;

  int inputs() const { return 3; }
  int values() const { return static_cast<int>(y.size()); }

  // x = (A, t0, ln T1)
  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& f) const {
    const double t1 = std::exp(x(2));
    for (std::size_t i = 0; i < y.size(); ++i) {
      f(i) = w[i] * (y[i] - recovery_curve((*t)[i], x(0), x(1), t1));
    }
    return 0;
  }
};

bool fit_once(RecoveryResidual& fn, Eigen::VectorXd& x) {
  Eigen::NumericalDiff<RecoveryResidual> nd(fn);
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<RecoveryResidual>> lm(nd);
  lm.parameters.xtol = 1e-12;
  lm.parameters.ftol = 1e-12;
  lm.parameters.maxfev = 4000;
  const auto status = lm.minimize(x);
  using namespace Eigen::LevenbergMarquardtSpace;
  if (status == ImproperInputParameters || status == TooManyFunctionEvaluation) return false;
  return x.allFinite();
}

double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * (v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

}  // namespace

void RecoveryModel::validate() const {
  if (!(t1 > 0.0)) throw InvalidParameter("recovery: t1 must be > 0");
  if (!(n0 >= 0.0 && n0 <= n_eq)) throw InvalidParameter("recovery: need 0 <= n0 <= n_eq");
  if (!(boltzmann >= 0.0 && boltzmann <= 1.0)) throw InvalidParameter("recovery: boltzmann factor must lie in [0, 1]");
}

double RecoveryModel::rate() const { return (detailed_balance ? 1.0 + boltzmann : 1.0) / t1; }

double RecoveryModel::population(double t) const {
  if (t <= 0.0) return n0;
  const double e = std::exp(-rate() * t);
  return n_eq * (1.0 - e) + n0 * e;
}

std::string to_string(ScheduleSegment::Kind k) {
  switch (k) {
    case ScheduleSegment::Kind::Saturate:
      return "saturate";
    case ScheduleSegment::Kind::Control:
      return "control";
    case ScheduleSegment::Kind::Wait:
      return "wait";
    case ScheduleSegment::Kind::Probe:
      return "probe";
  }
  return "probe";
}

ScheduleSegment::Kind segment_kind_from_string(const std::string& s) {
  if (s == "saturate") return ScheduleSegment::Kind::Saturate;
  if (s == "control") return ScheduleSegment::Kind::Control;
  if (s == "wait") return ScheduleSegment::Kind::Wait;
  if (s == "probe") return ScheduleSegment::Kind::Probe;
  throw InvalidParameter("schedule: unknown segment kind '" + s + "'");
}

void ProbeSchedule::validate() const {
  if (segments.empty()) throw InvalidParameter("schedule: no segments");
  bool low_probe = false;
  for (const ScheduleSegment& s : segments) {
    if (!(s.duration_s >= 0.0)) throw InvalidParameter("schedule: durations must be >= 0");
    if (s.kind != ScheduleSegment::Kind::Probe) continue;
    if (!(s.interval_s > 0.0)) throw InvalidParameter("schedule: probe interval must be > 0");
    if (s.power_dbm > low_power_dbm) {
      throw InvalidParameter("schedule: probe segment above the low-power limit");
    }
    if (s.duration_s > 0.0) low_probe = true;
  }
  if (!low_probe) throw InvalidParameter("schedule: no low-power probe section");
}

std::vector<double> ProbeSchedule::probe_times() const {
  double zero = 0.0;
  double cursor = 0.0;
  for (const ScheduleSegment& s : segments) {
    cursor += s.duration_s;
    if (s.kind == ScheduleSegment::Kind::Saturate) zero = cursor;
  }
  std::vector<double> out;
  cursor = 0.0;
  for (const ScheduleSegment& s : segments) {
    if (s.kind == ScheduleSegment::Kind::Probe && cursor >= zero) {
      const long n = static_cast<long>(std::floor(s.duration_s / s.interval_s + 1e-9));
      for (long k = 0; k <= n; ++k) out.push_back(cursor + k * s.interval_s - zero);
    }
    cursor += s.duration_s;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

ProbeSchedule ProbeSchedule::standard(double probe_span_s, double interval_s, double probe_dbm,
                                      double saturate_dbm) {
  ProbeSchedule s;
  s.low_power_dbm = probe_dbm;
  s.segments = {{ScheduleSegment::Kind::Saturate, 5.0, saturate_dbm, 1.0},
                {ScheduleSegment::Kind::Control, 0.5, saturate_dbm, 1.0},
                {ScheduleSegment::Kind::Wait, 0.0, probe_dbm, 1.0},
                {ScheduleSegment::Kind::Probe, probe_span_s, probe_dbm, interval_s}};
  return s;
}

std::vector<double> TransmissionSpectrum::db() const {
  std::vector<double> out;
  out.reserve(s21.size());
  for (const Complex& c : s21) out.push_back(20.0 * std::log10(std::abs(c)));
  return out;
}

std::vector<Complex> equilibrium_susceptibility(const ModelParams& p, double field,
                                                const std::vector<double>& drive_hz) {
  std::vector<Complex> chi;
  chi.reserve(drive_hz.size());
  for (double f : drive_hz) {
    const std::optional<EnsembleContext> ctx = base_context(p, field, f);
    if (!ctx || p.n_ions == 0.0 || p.ion.g_mu == 0.0) {
      chi.emplace_back(0.0, 0.0);
      continue;
    }
    EnsembleIntegrator m(*ctx, p.quadrature);
    const double w = m.weak_amplitude();
    chi.push_back(m.integrate(Complex(w, 0.0)).s_mu / w);
  }
  return chi;
}

RecoveryRun simulate_recovery(const RecoveryModel& model, const RecoveryCoupling& coupling,
                              const ProbeSchedule& schedule, const RecoverySettings& settings) {
  model.validate();
  schedule.validate();
  const ModelParams& p = coupling.params;
  p.validate();
  if (!(settings.noise >= 0.0)) throw InvalidParameter("recovery: noise must be >= 0");

  RecoveryRun run;
  run.chi_eq = equilibrium_susceptibility(p, p.field_t, coupling.drive_hz);
  std::mt19937_64 rng(settings.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double ports = std::sqrt(p.cavity.gamma_c1 * p.cavity.gamma_c2);

  for (double t : schedule.probe_times()) {
    const double n = model.population(t);
    TransmissionSpectrum s;
    s.time_s = t;
    s.frequency_hz = coupling.drive_hz;
    double peak = 0.0;
    for (std::size_t i = 0; i < coupling.drive_hz.size(); ++i) {
      DriveState d;
      d.omega_drive = angular(coupling.drive_hz[i]);
      const Complex chi = run.chi_eq[i] * n;
      s.s21.push_back(ports / (cavity_denominator(p.cavity, d) + Complex(0.0, 1.0) * chi));
      peak = std::max(peak, std::abs(s.s21.back()));
    }
    if (settings.noise > 0.0) {
      const double sd = settings.noise * peak / std::sqrt(2.0);
      for (Complex& c : s.s21) c += Complex(sd * normal(rng), sd * normal(rng));
    }
    run.populations.push_back(n);
    run.spectra.push_back(std::move(s));
  }
  return run;
}

Splitting extract_splitting(const std::vector<double>& frequency_hz, const std::vector<double>& db,
                            const ExtractSettings& s) {
  if (frequency_hz.size() != db.size() || db.size() < 3) {
    throw InvalidParameter("extract_splitting: need matching axes with at least 3 samples");
  }
  const std::vector<double> y = moving_average(db, s.smooth_half);
  std::vector<Peak> peaks;
  for (const Peak& pk : local_maxima(frequency_hz, y))
    if (pk.prominence >= s.min_prominence_db) peaks.push_back(pk);
  if (peaks.size() < 2) throw PeaksUnresolved("extract_splitting: fewer than two resolved maxima");
  std::partial_sort(peaks.begin(), peaks.begin() + 2, peaks.end(),
                    [](const Peak& a, const Peak& b) { return a.value > b.value; });
  Splitting out;
  out.lower_hz = std::min(peaks[0].position, peaks[1].position);
  out.upper_hz = std::max(peaks[0].position, peaks[1].position);
  out.splitting_hz = out.upper_hz - out.lower_hz;
  return out;
}

Splitting extract_splitting(const TransmissionSpectrum& spectrum, const ExtractSettings& s) {
  return extract_splitting(spectrum.frequency_hz, spectrum.db(), s);
}

void RecoveryTrace::validate() const {
  if (times.size() != splittings.size() || (!sigmas.empty() && sigmas.size() != times.size())) {
    throw InvalidParameter("trace: column lengths differ");
  }
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw InvalidParameter("trace: times must be strictly increasing");
  }
}

TraceExtraction extract_trace(const RecoveryRun& run, const ExtractSettings& s) {
  TraceExtraction out;
  for (const TransmissionSpectrum& spec : run.spectra) {
    try {
      const Splitting sp = extract_splitting(spec, s);
      out.trace.times.push_back(spec.time_s);
      out.trace.splittings.push_back(sp.splitting_hz);
    } catch (const PeaksUnresolved&) {
      out.unresolved_times.push_back(spec.time_s);
    }
  }
  return out;
}

double recovery_curve(double t, double amplitude, double t0, double t1) {
  const double u = (t - t0) / t1;
  if (u <= 0.0) return 0.0;
  return amplitude * std::sqrt(-std::expm1(-u));
}

T1Fit fit_t1(const RecoveryTrace& trace, const FitSettings& s) {
  trace.validate();
  const std::size_t n = trace.times.size();
  if (n < 5) throw InvalidParameter("fit_t1: need at least 5 points");

  RecoveryResidual fn;
  fn.t = &trace.times;
  fn.y = trace.splittings;
  fn.w.assign(n, 1.0);
  bool weighted = !trace.sigmas.empty();
  for (double sg : trace.sigmas) weighted = weighted && std::isfinite(sg) && sg > 0.0;
  if (weighted)
    for (std::size_t i = 0; i < n; ++i) fn.w[i] = 1.0 / trace.sigmas[i];

  const double ymax = *std::max_element(fn.y.begin(), fn.y.end());
  if (!(ymax > 0.0)) throw FitDiverged("fit_t1: splittings are not positive");
  const double a0 = 1.02 * ymax;
  double st = 0.0;
  double stt = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = fn.y[i] / a0;
    if (r <= 0.0 || r >= 1.0 || trace.times[i] <= 0.0) continue;
    const double z = -std::log1p(-r * r);
    st += trace.times[i] * z;
    stt += trace.times[i] * trace.times[i];
  }
  double t1_0 = st > 0.0 ? stt / st : 0.5 * (trace.times.back() - trace.times.front());
  if (!(t1_0 > 0.0) || !std::isfinite(t1_0)) t1_0 = 1.0;

  Eigen::VectorXd x(3);
  x << a0, std::min(0.0, trace.times.front() - 1e-3 * t1_0), std::log(t1_0);
  if (!fit_once(fn, x)) throw FitDiverged("fit_t1: least squares did not converge");

  T1Fit out;
  out.amplitude = x(0);
  out.t0 = x(1);
  out.t1 = std::exp(x(2));
  if (!(out.t1 > 0.0) || !std::isfinite(out.t1) || !(out.amplitude > 0.0)) {
    throw FitDiverged("fit_t1: non-physical parameters");
  }
  if (trace.times.back() - trace.times.front() < out.t1) {
    throw FitDiverged("fit_t1: trace spans less than one fitted T1");
  }
  std::vector<double> resid(n);
  std::vector<double> fitted(n);
  out.rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    fitted[i] = recovery_curve(trace.times[i], out.amplitude, out.t0, out.t1);
    resid[i] = fn.w[i] * (fn.y[i] - fitted[i]);
    out.rss += resid[i] * resid[i];
  }
  out.points = n;
  out.seed = s.seed;

  std::vector<double> samples;
  std::mt19937_64 rng(s.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  for (int b = 0; b < s.bootstrap; ++b) {
    RecoveryResidual bf = fn;
    for (std::size_t i = 0; i < n; ++i) bf.y[i] = fitted[i] + resid[pick(rng)] / fn.w[i];
    Eigen::VectorXd xb = x;
    if (fit_once(bf, xb) && std::isfinite(std::exp(xb(2)))) samples.push_back(std::exp(xb(2)));
  }
  out.bootstrap = static_cast<int>(samples.size());
  if (samples.size() >= 2) {
    out.ci_low = percentile(samples, 0.5 * (1.0 - s.confidence));
    out.ci_high = percentile(samples, 0.5 * (1.0 + s.confidence));
  } else {
    out.ci_low = out.ci_high = out.t1;
  }
  return out;
}

nlohmann::json to_json(const T1Fit& f) {
  return {{"t1_s", f.t1},          {"ci_low_s", f.ci_low}, {"ci_high_s", f.ci_high},
          {"amplitude_hz", f.amplitude}, {"t0_s", f.t0}, {"rss", f.rss},
          {"points", f.points},    {"bootstrap_samples", f.bootstrap}, {"seed", f.seed}};
}

std::string trace_to_csv(const RecoveryTrace& trace) {
  trace.validate();
  std::string out = "t_s,splitting_hz,sigma_hz\n";
  char buf[128];
  for (std::size_t i = 0; i < trace.times.size(); ++i) {
    const double sg = trace.sigmas.empty() ? std::numeric_limits<double>::quiet_NaN() : trace.sigmas[i];
    if (std::isfinite(sg)) {
      std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g\n", trace.times[i], trace.splittings[i], sg);
    } else {
      std::snprintf(buf, sizeof buf, "%.10g,%.10g,\n", trace.times[i], trace.splittings[i]);
    }
    out += buf;
  }
  return out;
}

RecoveryTrace trace_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InvalidParameter("trace csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t_s,splitting_hz,sigma_hz") throw InvalidParameter("trace csv: unexpected header '" + line + "'");
  RecoveryTrace t;
  bool any_sigma = false;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
    if (line.back() == ',') cols.emplace_back();
    if (cols.size() != 3) throw InvalidParameter("trace csv: row " + std::to_string(row) + " needs 3 columns");
    auto num = [&](const std::string& v) {
      char* end = nullptr;
      const double d = std::strtod(v.c_str(), &end);
      if (v.empty() || end != v.c_str() + v.size()) {
        throw InvalidParameter("trace csv: bad number '" + v + "' in row " + std::to_string(row));
      }
      return d;
    };
    t.times.push_back(num(cols[0]));
    t.splittings.push_back(num(cols[1]));
    if (cols[2].empty()) {
      t.sigmas.push_back(std::numeric_limits<double>::quiet_NaN());
    } else {
      t.sigmas.push_back(num(cols[2]));
      any_sigma = true;
    }
  }
  if (!any_sigma) t.sigmas.clear();
  t.validate();
  return t;
}

}  // namespace spincav
