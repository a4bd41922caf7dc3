#include "spincav/quadrature.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "spincav/errors.hpp"

namespace spincav {
namespace {

// Golub-Welsch: nodes are eigenvalues of the Jacobi matrix, weights are
// mu0 times the squared first eigenvector components.
QuadratureRule1D golub_welsch(int n, bool hermite) {
  if (n < 1) throw InvalidParameter("quadrature order must be >= 1");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = hermite ? std::sqrt(0.5 * k) : k / std::sqrt(4.0 * k * k - 1.0);
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  const double mu0 = hermite ? std::sqrt(std::numbers::pi) : 2.0;
  QuadratureRule1D rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int k = 0; k < n; ++k) {
    rule.nodes[k] = eig.eigenvalues()(k);
    const double v = eig.eigenvectors()(0, k);
    rule.weights[k] = mu0 * v * v;
  }
  // Symmetrize to remove eigen-solver jitter.
  for (int k = 0; k < n / 2; ++k) {
    const int j = n - 1 - k;
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[k]);
    const double w = 0.5 * (rule.weights[j] + rule.weights[k]);
    rule.nodes[k] = -x;
    rule.nodes[j] = x;
    rule.weights[k] = w;
    rule.weights[j] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

const QuadratureRule1D& cached(int n, bool hermite) {
  static std::mutex mutex;
  static std::map<std::pair<int, bool>, QuadratureRule1D> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find({n, hermite});
  if (it == cache.end()) it = cache.emplace(std::pair{n, hermite}, golub_welsch(n, hermite)).first;
  return it->second;
}

template <typename T>
T pairwise(std::span<const T> v) {
  if (v.size() <= 8) {
    T acc{};
    for (const T& x : v) acc += x;
    return acc;
  }
  const std::size_t half = v.size() / 2;
  return pairwise(v.first(half)) + pairwise(v.subspan(half));
}

}  // namespace

const QuadratureRule1D& gauss_legendre(int n) { return cached(n, false); }
const QuadratureRule1D& gauss_hermite(int n) { return cached(n, true); }

double pairwise_sum(std::span<const double> values) { return pairwise(values); }
std::complex<double> pairwise_sum(std::span<const std::complex<double>> values) {
  return pairwise(values);
}

}  // namespace spincav
