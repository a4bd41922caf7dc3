#include "spincav/atom_steady_state.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "spincav/constants.hpp"
#include "spincav/errors.hpp"
#include "spincav/faddeeva.hpp"

namespace spincav {
namespace {

using namespace std::complex_literals;

Matrix3c ket_bra(int j, int k) {
  Matrix3c m = Matrix3c::Zero();
  m(j, k) = 1.0;
  return m;
}

Generator kron(const Matrix3c& a, const Matrix3c& b) {
  Generator out;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out.block<3, 3>(3 * i, 3 * j) = a(i, j) * b;
  return out;
}

void add_commutator(Generator& L, const Matrix3c& H) {
  const Matrix3c id = Matrix3c::Identity();
  L += -1i * (kron(H, id) - kron(id, H.transpose()));
}

// D[C] rho = C rho C^dag - {C^dag C, rho} / 2, scaled by `rate`.
void add_dissipator(Generator& L, const Matrix3c& C, double rate) {
  if (rate == 0.0) return;
  const Matrix3c id = Matrix3c::Identity();
  const Matrix3c cdc = C.adjoint() * C;
  L += rate * (kron(C, C.conjugate()) - 0.5 * kron(cdc, id) - 0.5 * kron(id, cdc.transpose()));
}

void replace_trace_row(Generator& A) {
  A.row(0).setZero();
  for (int j = 0; j < 3; ++j) A(0, vec_index(j, j)) = 1.0;
}

constexpr int kP[4] = {vec_index(0, 2), vec_index(1, 2), vec_index(2, 0), vec_index(2, 1)};
constexpr int kQ[5] = {vec_index(0, 0), vec_index(0, 1), vec_index(1, 0), vec_index(1, 1),
                       vec_index(2, 2)};

}  // namespace

double DensityMatrix3::trace_error() const { return std::abs(rho.trace() - 1.0); }

double DensityMatrix3::hermiticity_error() const {
  return (rho - rho.adjoint()).cwiseAbs().maxCoeff();
}

double DensityMatrix3::min_eigenvalue() const {
  const Matrix3c h = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix3c> eig(h, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

LevelLayout LevelLayout::of(const IonModel& ion) {
  LevelLayout l;
  l.pumped = ion.pumped == PumpedLevel::Upper ? 1 : 0;
  l.output_partner = 1 - l.pumped;
  l.s3 = ion.scheme == Scheme::Lambda ? -1.0 : 1.0;
  return l;
}

int LevelLayout::output_index() const {
  // Lowering operator of the output transition. Lambda: |q><3| -> rho_3q.
  // Vee: |3><q| -> rho_q3.
  return s3 < 0.0 ? vec_index(2, output_partner) : vec_index(output_partner, 2);
}

double LevelLayout::two_photon_delta3(double delta2) const {
  // E3 = E_p + s3 d3 must equal E_q, with E = {0, -delta2}.
  const double e_p = pumped == 1 ? -delta2 : 0.0;
  const double e_q = output_partner == 1 ? -delta2 : 0.0;
  return (e_q - e_p) / s3;
}

Generator GeneratorParts::at(const AtomDetunings& d) const {
  Generator L = fixed;
  L.diagonal() += d.delta2 * d2 + d.delta3 * d3;
  return L;
}

GeneratorParts generator_parts(const IonModel& ion, Complex omega_mu, double omega_p,
                               double boltzmann) {
  GeneratorParts parts;
  parts.layout = LevelLayout::of(ion);
  const int p = parts.layout.pumped;

  Matrix3c H = Matrix3c::Zero();
  H(1, 0) = 0.5 * omega_mu;
  H(0, 1) = 0.5 * std::conj(omega_mu);
  H(2, p) = 0.5 * omega_p;
  H(p, 2) = 0.5 * omega_p;
  add_commutator(parts.fixed, H);

  if (ion.scheme == Scheme::Lambda) {
    add_dissipator(parts.fixed, ket_bra(0, 2), ion.gamma_opt * ion.branching_lower);
    add_dissipator(parts.fixed, ket_bra(1, 2), ion.gamma_opt * (1.0 - ion.branching_lower));
  } else {
    add_dissipator(parts.fixed, ket_bra(2, 0), ion.gamma_opt);
    add_dissipator(parts.fixed, ket_bra(2, 1), ion.gamma_opt);
  }
  add_dissipator(parts.fixed, ket_bra(0, 1), ion.gamma_spin);
  add_dissipator(parts.fixed, ket_bra(1, 0), ion.gamma_spin * boltzmann);
  add_dissipator(parts.fixed, ket_bra(1, 1), 2.0 * ion.gamma_phi2);
  add_dissipator(parts.fixed, ket_bra(2, 2), 2.0 * ion.gamma_phi3);

  const double de2[3] = {0.0, -1.0, p == 1 ? -1.0 : 0.0};
  const double de3[3] = {0.0, 0.0, parts.layout.s3};
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) {
      parts.d2(vec_index(j, k)) = -1i * (de2[j] - de2[k]);
      parts.d3(vec_index(j, k)) = -1i * (de3[j] - de3[k]);
    }
  return parts;
}

Generator build_generator(const IonModel& ion, const AtomDetunings& d, Complex beta,
                          const DriveState& drive, const ThermalState& t,
                          double spin_frequency_hz) {
  const Complex omega_mu = 2.0 * ion.g_mu * beta;
  const double r = boltzmann_factor(spin_frequency_hz, t.temperature);
  return generator_parts(ion, omega_mu, drive.omega_pump, r).at(d);
}

Vector9c steady_state_vector(const Generator& L) {
  Generator A = L;
  replace_trace_row(A);
  Vector9c b = Vector9c::Zero();
  b(0) = 1.0;
  return A.partialPivLu().solve(b);
}

DensityMatrix3 steady_state(const Generator& L) {
  Generator A = L;
  replace_trace_row(A);
  for (int i = 0; i < 9; ++i) {
    const double m = A.row(i).cwiseAbs().maxCoeff();
    if (!(m > 0.0)) throw SingularGenerator("steady_state: generator has an empty row");
    A.row(i) /= m;
  }
  // The trace row has unit entries, so its right-hand side is unchanged.
  Vector9c b = Vector9c::Zero();
  b(0) = 1.0;
  Eigen::PartialPivLU<Generator> lu(A);
  if (!(lu.rcond() > 1e-14)) throw SingularGenerator("steady_state: kernel is not one-dimensional");
  const Vector9c x = lu.solve(b);
  if (!x.allFinite()) throw SingularGenerator("steady_state: non-finite solution");
  return to_matrix(x);
}

Vector9c steady_state_pump_free(const GeneratorParts& parts, double delta2) {
  Eigen::Matrix<Complex, 5, 5> a;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) a(i, j) = parts.fixed(kQ[i], kQ[j]) + (i == j ? delta2 * parts.d2(kQ[i]) : 0.0);
  a.row(0).setZero();
  a(0, 0) = 1.0;
  a(0, 3) = 1.0;
  a(0, 4) = 1.0;
  Eigen::Matrix<Complex, 5, 1> b = Eigen::Matrix<Complex, 5, 1>::Zero();
  b(0) = 1.0;
  const Eigen::Matrix<Complex, 5, 1> xq = a.partialPivLu().solve(b);
  Vector9c out = Vector9c::Zero();
  for (int i = 0; i < 5; ++i) out(kQ[i]) = xq(i);
  return out;
}

std::optional<Vector9c> steady_state_optical_average(const GeneratorParts& parts, double delta2,
                                                     double mean3, double std3) {
  Generator A = parts.fixed;
  A.diagonal() += delta2 * parts.d2;
  replace_trace_row(A);

  Eigen::Matrix<Complex, 5, 5> aqq;
  Eigen::Matrix<Complex, 5, 4> aqp;
  Eigen::Matrix<Complex, 4, 5> apq;
  Eigen::Matrix4cd app;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) aqq(i, j) = A(kQ[i], kQ[j]);
    for (int j = 0; j < 4; ++j) aqp(i, j) = A(kQ[i], kP[j]);
  }
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 5; ++j) apq(i, j) = A(kP[i], kQ[j]);
    for (int j = 0; j < 4; ++j) app(i, j) = A(kP[i], kP[j]);
  }
  Eigen::Matrix<Complex, 5, 5> rhs;
  rhs.col(0).setZero();
  rhs(0, 0) = 1.0;
  rhs.rightCols<4>() = aqp;
  const Eigen::Matrix<Complex, 5, 5> sol = aqq.partialPivLu().solve(rhs);
  const Eigen::Matrix<Complex, 5, 1> y0 = sol.col(0);
  const Eigen::Matrix<Complex, 5, 4> Y = sol.rightCols<4>();

  const Eigen::Matrix4cd M = app - apq * Y;
  const Eigen::Vector4cd r = -apq * y0;
  Eigen::Vector4cd dinv;
  for (int i = 0; i < 4; ++i) dinv(i) = 1.0 / parts.d3(kP[i]);
  const Eigen::Matrix4cd K = dinv.asDiagonal() * M;
  const Eigen::Vector4cd c = dinv.asDiagonal() * r;

  Vector9c out = Vector9c::Zero();
  Eigen::Vector4cd xp_mean = Eigen::Vector4cd::Zero();
  if (c.cwiseAbs().maxCoeff() > 0.0) {
    Eigen::ComplexEigenSolver<Eigen::Matrix4cd> eig(K);
    if (eig.info() != Eigen::Success) return std::nullopt;
    const Eigen::Matrix4cd& V = eig.eigenvectors();
    const Eigen::Matrix4cd Vinv = V.inverse();
    const double cond = V.cwiseAbs().rowwise().sum().maxCoeff() *
                        Vinv.cwiseAbs().rowwise().sum().maxCoeff();
    if (!(cond < 1e9)) return std::nullopt;
    const Eigen::Vector4cd a = Vinv * c;
    for (int k = 0; k < 4; ++k) {
      const Complex lambda = eig.eigenvalues()(k);
      if (std3 > 0.0 && lambda.imag() == 0.0) return std::nullopt;
      xp_mean += V.col(k) * (a(k) * gaussian_cauchy_transform(mean3, std3, -lambda));
    }
  }
  const Eigen::Matrix<Complex, 5, 1> xq_mean = y0 - Y * xp_mean;
  for (int i = 0; i < 5; ++i) out(kQ[i]) = xq_mean(i);
  for (int i = 0; i < 4; ++i) out(kP[i]) = xp_mean(i);
  if (!out.allFinite()) return std::nullopt;
  return out;
}

DensityMatrix3 to_matrix(const Vector9c& v) {
  DensityMatrix3 d;
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) d.rho(j, k) = v(vec_index(j, k));
  return d;
}

Coherences coherences(const Vector9c& rho, const LevelLayout& layout) {
  return {rho(vec_index(1, 0)), rho(layout.output_index())};
}

Coherences coherences(const DensityMatrix3& rho, const IonModel& ion) {
  const LevelLayout layout = LevelLayout::of(ion);
  Vector9c v;
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) v(vec_index(j, k)) = rho.rho(j, k);
  return coherences(v, layout);
}

double spin_coherence_decay(const GeneratorParts& parts) {
  return -parts.fixed(vec_index(1, 0), vec_index(1, 0)).real();
}

double spin_population_rate(const GeneratorParts& parts) {
  return -parts.fixed(vec_index(0, 0), vec_index(0, 0)).real() -
         parts.fixed(vec_index(1, 1), vec_index(1, 1)).real();
}

double optical_coherence_decay(const GeneratorParts& parts) {
  const int p = parts.layout.pumped;
  return -parts.fixed(vec_index(2, p), vec_index(2, p)).real();
}

}  // namespace spincav
