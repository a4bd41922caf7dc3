#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "spincav/spectra_engine.hpp"

namespace spincav {

// Population difference after saturation, in units of the thermal
// equilibrium difference.
struct RecoveryModel {
  double t1 = 10.0;
  double n_eq = 1.0;
  double n0 = 0.0;
  // Recover at (1 + exp(-hf/kT)) / T1 instead of 1 / T1.
  bool detailed_balance = false;
  double boltzmann = 0.0;

  void validate() const;
  double population(double t) const;
  double rate() const;
};

struct ScheduleSegment {
  enum class Kind { Saturate, Control, Wait, Probe };
  Kind kind = Kind::Probe;
  double duration_s = 0.0;
  double power_dbm = 0.0;
  double interval_s = 1.0;  // probe only: time between sweeps
};

// Four-part protocol. Time zero is the end of the last saturating segment.
struct ProbeSchedule {
  std::vector<ScheduleSegment> segments;
  double low_power_dbm = -60.0;  // probe segments must not exceed this

  void validate() const;
  std::vector<double> probe_times() const;
  static ProbeSchedule standard(double probe_span_s, double interval_s, double probe_dbm,
                                double saturate_dbm);
};

std::string to_string(ScheduleSegment::Kind k);
ScheduleSegment::Kind segment_kind_from_string(const std::string& s);

struct TransmissionSpectrum {
  double time_s = 0.0;
  std::vector<double> frequency_hz;
  std::vector<Complex> s21;

  std::vector<double> db() const;
};

struct RecoveryCoupling {
  ModelParams params;           // field_t sets the operating point
  std::vector<double> drive_hz;  // probe sweep
};

struct RecoverySettings {
  double noise = 0.0;  // std of complex noise relative to the spectrum maximum
  std::uint64_t seed = 1;
};

struct RecoveryRun {
  std::vector<TransmissionSpectrum> spectra;
  std::vector<double> populations;
  std::vector<Complex> chi_eq;  // equilibrium linear susceptibility per drive frequency
};

// Linear weak-probe susceptibility of the thermal ensemble, S_mu = chi beta.
std::vector<Complex> equilibrium_susceptibility(const ModelParams& p, double field,
                                                const std::vector<double>& drive_hz);

RecoveryRun simulate_recovery(const RecoveryModel& model, const RecoveryCoupling& coupling,
                              const ProbeSchedule& schedule, const RecoverySettings& settings = {});

struct ExtractSettings {
  int smooth_half = 2;
  double min_prominence_db = 1.0;
};

struct Splitting {
  double lower_hz = 0.0;
  double upper_hz = 0.0;
  double splitting_hz = 0.0;
};

// Throws PeaksUnresolved when fewer than two prominent maxima exist.
Splitting extract_splitting(const std::vector<double>& frequency_hz, const std::vector<double>& db,
                            const ExtractSettings& s = {});
Splitting extract_splitting(const TransmissionSpectrum& spectrum, const ExtractSettings& s = {});

struct RecoveryTrace {
  std::vector<double> times;
  std::vector<double> splittings;  // Hz
  std::vector<double> sigmas;      // Hz; empty or NaN when unknown

  void validate() const;
};

struct TraceExtraction {
  RecoveryTrace trace;
  std::vector<double> unresolved_times;
};

TraceExtraction extract_trace(const RecoveryRun& run, const ExtractSettings& s = {});

struct FitSettings {
  int bootstrap = 200;
  double confidence = 0.95;
  std::uint64_t seed = 7;
};

struct T1Fit {
  double t1 = 0.0;
  double amplitude = 0.0;
  double t0 = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double rss = 0.0;
  std::size_t points = 0;
  int bootstrap = 0;
  std::uint64_t seed = 0;
};

// delta f(t) = A sqrt(1 - exp(-(t - t0) / T1)). Throws FitDiverged.
T1Fit fit_t1(const RecoveryTrace& trace, const FitSettings& s = {});

double recovery_curve(double t, double amplitude, double t0, double t1);

nlohmann::json to_json(const T1Fit& f);

std::string trace_to_csv(const RecoveryTrace& trace);
RecoveryTrace trace_from_csv(const std::string& text);

}  // namespace spincav
