#pragma once

#include <cstddef>
#include <vector>

namespace spincav {

struct Peak {
  std::size_t index = 0;  // grid index of the sampled maximum
  double position = 0.0;  // refined by a 3-point parabola
  double value = 0.0;
  double prominence = 0.0;
};

// Vertex of the parabola through three equally spaced samples, as an offset
// in units of the spacing from the middle sample (clamped to [-0.5, 0.5]).
double parabolic_offset(double y0, double y1, double y2);

// Interior local maxima of y(x), x equally spaced and increasing.
std::vector<Peak> local_maxima(const std::vector<double>& x, const std::vector<double>& y);

// Centered moving average over 2 * half + 1 samples, shrinking at the edges.
std::vector<double> moving_average(const std::vector<double>& y, int half);

}  // namespace spincav
