#include "spincav/peaks.hpp"

#include <algorithm>
#include <cmath>

namespace spincav {

double parabolic_offset(double y0, double y1, double y2) {
  const double denom = y0 - 2.0 * y1 + y2;
  if (!(denom < 0.0)) return 0.0;
  return std::clamp(0.5 * (y0 - y2) / denom, -0.5, 0.5);
}

std::vector<Peak> local_maxima(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<Peak> out;
  const std::size_t n = y.size();
  if (n < 3 || x.size() != n) return out;
  const double dx = (x.back() - x.front()) / static_cast<double>(n - 1);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!std::isfinite(y[i - 1]) || !std::isfinite(y[i]) || !std::isfinite(y[i + 1])) continue;
    if (!(y[i] > y[i - 1] && y[i] >= y[i + 1])) continue;
    // Plateaus count once, at their left edge.
    Peak p;
    p.index = i;
    const double off = parabolic_offset(y[i - 1], y[i], y[i + 1]);
    p.position = x[i] + off * dx;
    p.value = y[i] - 0.25 * (y[i - 1] - y[i + 1]) * off;
    double left = y[i];
    for (std::size_t j = i; j-- > 0;) {
      if (std::isfinite(y[j])) left = std::min(left, y[j]);
      if (y[j] > y[i]) break;
    }
    double right = y[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::isfinite(y[j])) right = std::min(right, y[j]);
      if (y[j] > y[i]) break;
    }
    p.prominence = y[i] - std::max(left, right);
    out.push_back(p);
  }
  return out;
}

std::vector<double> moving_average(const std::vector<double>& y, int half) {
  if (half <= 0) return y;
  const int n = static_cast<int>(y.size());
  std::vector<double> out(y.size());
  for (int i = 0; i < n; ++i) {
    const int a = std::max(0, i - half);
    const int b = std::min(n - 1, i + half);
    double s = 0.0;
    for (int j = a; j <= b; ++j) s += y[j];
    out[i] = s / (b - a + 1);
  }
  return out;
}

}  // namespace spincav
