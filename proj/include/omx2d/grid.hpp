#pragma once

#include <vector>

namespace omx2d {

/// n evenly spaced points from start to stop inclusive (n >= 2, or n == 1 giving {start}).
std::vector<double> linspace(double start, double stop, int n);

/// n points evenly spaced in log10 from start to stop (both > 0).
std::vector<double> logspace(double start, double stop, int n);

/// Linear base grid of `n` points on [lo, hi], refined around each center:
/// points center +- width * 10^(k / per_decade) for k = 0 .. per_decade * decades,
/// plus the center itself. Sorted, duplicates removed, clipped to [lo, hi].
std::vector<double> resonance_grid(double lo, double hi, int n, const std::vector<double>& centers,
                                   double width, int per_decade = 10, int decades = 4);

}  // namespace omx2d
