#pragma once

#include <complex>

namespace spincav {

// Faddeeva function w(z) = exp(-z^2) erfc(-i z), Weideman's rational
// expansion in the upper half plane, reflection formula below.
std::complex<double> faddeeva_w(std::complex<double> z);

// Integral of N(x; mean, std) / (x - z) over the real line, Im z != 0.
// std == 0 gives 1 / (mean - z).
std::complex<double> gaussian_cauchy_transform(double mean, double std, std::complex<double> z);

}  // namespace spincav
