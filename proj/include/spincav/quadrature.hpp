#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace spincav {

struct QuadratureRule1D {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

// Gauss-Legendre on [-1, 1]. Cached, thread-safe.
const QuadratureRule1D& gauss_legendre(int n);

// Gauss-Hermite for the weight exp(-x^2). Cached, thread-safe.
const QuadratureRule1D& gauss_hermite(int n);

// Fixed-tree pairwise summation; the result depends only on the input order.
double pairwise_sum(std::span<const double> values);
std::complex<double> pairwise_sum(std::span<const std::complex<double>> values);

}  // namespace spincav
