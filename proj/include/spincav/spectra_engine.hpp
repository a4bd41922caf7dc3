#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "spincav/cavity_field_solver.hpp"
#include "spincav/ensemble_integrator.hpp"
#include "spincav/physical_model.hpp"

namespace spincav {

// Full parameter set of one simulated experiment. Rates are angular except
// where the name ends in _hz.
struct ModelParams {
  CavityParams cavity;
  Scheme scheme = Scheme::Lambda;
  ZeemanModel zeeman;
  IonModel ion;  // scheme and pumped level are set per optical transition
  double n_ions = 0.0;
  double sigma_spin = 0.0;
  std::array<double, 4> sigma_opt{};  // per optical transition
  double corr = 0.0;
  double temperature = 0.15;
  double probe_power_dbm = -60.0;  // at the source
  double insertion_loss_db = 0.0;
  double pump_rabi = 0.0;
  double laser_hz = 0.0;
  double field_t = 0.0;
  std::array<bool, 4> transitions{true, true, true, true};
  bool pump_back_action = false;  // Lambda only; Vee always feeds the pumped response back
  QuadratureSettings quadrature;
  SolverSettings solver;

  void validate() const;
  double spin_frequency_hz(double field) const;
  double beta_in(double drive_hz) const;
};

nlohmann::json to_json(const ModelParams& p);

// Contexts for the four three-level subsystems addressed by the pump, and the
// pump-free microwave ensemble (Lambda only).
std::optional<EnsembleContext> base_context(const ModelParams& p, double field, double drive_hz);
std::vector<EnsembleContext> pumped_contexts(const ModelParams& p, double field, double drive_hz,
                                             double laser_hz);

// S_mu = S_base + sum_i (S_i - S_base) with back-action, S_base otherwise; s_opt
// sums the pumped subsystems.
class CompositeSource final : public SourceModel {
 public:
  CompositeSource(const ModelParams& p, double field, double drive_hz, double laser_hz);

  void prepare(Complex beta_design) override;
  double design_amplitude() const override;
  double weak_amplitude() const override;
  SourceTerms evaluate(Complex beta, bool with_optical = true) const override;
  SourceTerms refine(Complex beta) override;
  QuadratureReport report() const override { return report_; }

  bool feeds_back() const { return feedback_; }

 private:
  std::unique_ptr<EnsembleIntegrator> base_;
  std::vector<std::unique_ptr<EnsembleIntegrator>> pumped_;
  bool feedback_ = false;
  bool lambda_ = true;
  QuadratureReport report_;
};

struct CellResult {
  FieldSolution solution;
  Complex s21{0.0, 0.0};
  Complex raman{0.0, 0.0};
  bool converged = false;
};

// One sweep point: the cavity solve plus, when `want_raman`, the optical output.
CellResult solve_cell(const ModelParams& p, double field, double drive_hz, double laser_hz,
                      bool want_raman, std::optional<Complex> warm = std::nullopt);

// Optical output at a fixed intracavity amplitude, for pumps without back-action.
Complex raman_at(const ModelParams& p, double field, double drive_hz, double laser_hz, Complex beta,
                 bool* converged = nullptr);

struct Axis {
  std::string name;
  std::string unit;
  std::vector<double> values;
};

struct SweepGrid {
  Axis axis1;  // fast axis
  Axis axis2;  // slow axis
  bool alternate = false;  // reverse the fast axis on every other row

  void validate() const;
  std::size_t size() const { return axis1.values.size() * axis2.values.size(); }
};

struct SpectrumMap {
  SweepGrid grid;
  std::string quantity;  // "s21" or "raman"
  std::vector<Complex> values;  // index j2 * n1 + j1
  std::vector<char> converged;  // 1 when the cell solve succeeded
  std::vector<std::string> status;
  std::vector<int> iterations;
  double db_offset = 0.0;
  nlohmann::json provenance;

  Complex at(std::size_t j1, std::size_t j2) const { return values[j2 * grid.axis1.values.size() + j1]; }
  double db(std::size_t index) const;
  std::size_t failures() const;
};

struct MapOptions {
  bool alternate = false;
  int threads = 1;
  double db_offset = 0.0;
};

SpectrumMap transmission_map(const ModelParams& p, const std::vector<double>& fields,
                             const std::vector<double>& drive_hz, const MapOptions& opt = {});

SpectrumMap raman_map_freq_laser(const ModelParams& p, const std::vector<double>& drive_hz,
                                 const std::vector<double>& laser_hz, const MapOptions& opt = {});

SpectrumMap raman_map_field(const ModelParams& p, const std::vector<double>& drive_hz,
                            const std::vector<double>& fields, const MapOptions& opt = {});

struct RowBranches {
  double axis2 = 0.0;
  bool resolved = false;
  double lower = 0.0;  // axis1 positions of the two most prominent maxima
  double upper = 0.0;
  double separation = 0.0;
};

struct BranchReport {
  std::vector<RowBranches> rows;
  std::size_t resolved_rows = 0;
  std::size_t min_row = 0;
  double min_separation = 0.0;  // NaN when no row resolves two branches

  nlohmann::json to_json() const;
};

// Two most prominent maxima of the dB trace of every slow-axis row.
BranchReport branch_separation(const SpectrumMap& map, double min_prominence_db = 1.0);

struct AbsorptionSpectrum {
  std::vector<double> frequency_hz;
  std::vector<double> optical_depth;
  std::vector<double> transmission;
};

// alpha L = sum_i a_i p_origin,i exp(-(nu - nu_i)^2 / 2 sigma_i^2)
AbsorptionSpectrum absorption_spectrum(const ZeemanModel& z, double field, const Populations& pops,
                                       const std::array<double, 4>& widths_hz,
                                       const std::array<double, 4>& amplitudes,
                                       const std::vector<double>& laser_hz);

// Exact integral of the optical depth over frequency.
double absorption_area(const Populations& pops, const std::array<double, 4>& widths_hz,
                       const std::array<double, 4>& amplitudes);

struct PeakTrack {
  double field_t = 0.0;
  double f_spin_hz = 0.0;
  double peak_hz = 0.0;  // transmission maximum nearest the bare spin line
  bool found = false;
};

struct DarkLineRow {
  double power_dbm = 0.0;
  double raman_center = 0.0;  // |raman| with the drive on the spin line center
  double raman_minus = 0.0;   // drive at center - sigma_spin
  double raman_plus = 0.0;    // drive at center + sigma_spin
  bool dark_line = false;
  std::vector<PeakTrack> tracks;
};

struct DarkLineSettings {
  std::vector<double> spin_offsets_hz{-30e6, -15e6, 15e6, 30e6};
  double span_hz = 20e6;
  int points = 81;
};

struct DarkLineReport {
  double field_t = 0.0;
  double f_spin_hz = 0.0;
  std::vector<DarkLineRow> rows;
};

DarkLineReport dark_line_probe(const ModelParams& p, const std::vector<double>& powers_dbm,
                               const DarkLineSettings& s = {});

nlohmann::json to_json(const DarkLineReport& r);

}  // namespace spincav
