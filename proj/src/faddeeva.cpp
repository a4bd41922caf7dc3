#include "spincav/faddeeva.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace spincav {
namespace {

constexpr int kTerms = 40;

struct WeidemanCoefficients {
  double L = 0.0;
  std::array<double, kTerms> a{};  // a[n-1] multiplies Z^(n-1)

  WeidemanCoefficients() {
    const int M = 2 * kTerms;
    const int M2 = 2 * M;
    L = std::sqrt(kTerms / std::sqrt(2.0));
    std::array<double, 2 * M> shifted{};
    for (int i = 0; i < 2 * M; ++i) {
      const int k = i < M ? i : i - 2 * M;
      if (k == -M) continue;
      const double theta = k * std::numbers::pi / M;
      const double t = L * std::tan(0.5 * theta);
      shifted[i] = std::exp(-t * t) * (L * L + t * t);
    }
    for (int n = 1; n <= kTerms; ++n) {
      double acc = 0.0;
      for (int i = 0; i < 2 * M; ++i) {
        acc += shifted[i] * std::cos(std::numbers::pi * n * i / M);
      }
      a[n - 1] = acc / M2;
    }
  }
};

const WeidemanCoefficients& coefficients() {
  static const WeidemanCoefficients c;
  return c;
}

std::complex<double> upper_half_plane(std::complex<double> z) {
  using namespace std::complex_literals;
  const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);
  if (std::abs(z) > 100.0) {
    // Asymptotic series, four terms.
    const std::complex<double> z2 = z * z;
    const std::complex<double> inv2 = 1.0 / (2.0 * z2);
    const std::complex<double> series = 1.0 + inv2 * (1.0 + 3.0 * inv2 * (1.0 + 5.0 * inv2));
    return 1i * inv_sqrt_pi / z * series;
  }
  const auto& c = coefficients();
  const std::complex<double> denom = c.L - 1i * z;
  const std::complex<double> Z = (c.L + 1i * z) / denom;
  std::complex<double> p = 0.0;
  for (int n = kTerms - 1; n >= 0; --n) p = p * Z + c.a[n];
  return 2.0 * p / (denom * denom) + inv_sqrt_pi / denom;
}

}  // namespace

std::complex<double> faddeeva_w(std::complex<double> z) {
  if (z.imag() >= 0.0) return upper_half_plane(z);
  return 2.0 * std::exp(-z * z) - upper_half_plane(-z);
}

std::complex<double> gaussian_cauchy_transform(double mean, double std, std::complex<double> z) {
  using namespace std::complex_literals;
  if (std == 0.0) return 1.0 / (mean - z);
  const double scale = std * std::numbers::sqrt2;
  const double pref = std::sqrt(std::numbers::pi) / scale;
  const std::complex<double> zeta = (z - mean) / scale;
  if (zeta.imag() >= 0.0) return 1i * pref * upper_half_plane(zeta);
  return std::conj(1i * pref * upper_half_plane(std::conj(zeta)));
}

}  // namespace spincav
