#pragma once

#include <cstddef>
#include <vector>

namespace omx2d {

struct Extremum {
  std::size_t index = 0;
  double x = 0.0;
  double y = 0.0;
  double prominence = 0.0;
};

/// Interior local maxima whose topographic prominence is at least
/// `min_prominence`. A flat top counts once, at its left end.
std::vector<Extremum> local_maxima(const std::vector<double>& x, const std::vector<double>& y,
                                   double min_prominence = 0.0);
std::vector<Extremum> local_minima(const std::vector<double>& x, const std::vector<double>& y,
                                   double min_prominence = 0.0);

/// Full width of the dip at `index` measured at half depth between y[index]
/// and `reference`, with linear interpolation of both crossings.
/// Throws invalid-input if the curve never climbs back to half depth.
double width_at_half_depth(const std::vector<double>& x, const std::vector<double>& y, std::size_t index,
                           double reference);

}  // namespace omx2d
