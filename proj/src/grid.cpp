#include "omx2d/grid.hpp"

#include <algorithm>
#include <cmath>

#include "omx2d/errors.hpp"

namespace omx2d {

std::vector<double> linspace(double start, double stop, int n) {
  if (!std::isfinite(start) || !std::isfinite(stop)) throw Error(ErrorKind::invalid_input, "linspace: bounds must be finite");
  if (n < 1) throw Error(ErrorKind::invalid_input, "linspace: need at least one point");
  if (n == 1) return {start};
  std::vector<double> x(n);
  const double step = (stop - start) / (n - 1);
  for (int i = 0; i < n; ++i) x[i] = start + step * i;
  x.back() = stop;
  return x;
}

std::vector<double> logspace(double start, double stop, int n) {
  if (!(start > 0.0) || !(stop > 0.0)) throw Error(ErrorKind::invalid_input, "logspace: bounds must be positive");
  auto e = linspace(std::log10(start), std::log10(stop), n);
  for (double& v : e) v = std::pow(10.0, v);
  e.front() = start;
  if (n > 1) e.back() = stop;
  return e;
}

std::vector<double> resonance_grid(double lo, double hi, int n, const std::vector<double>& centers, double width,
                                   int per_decade, int decades) {
  if (!(hi > lo)) throw Error(ErrorKind::invalid_input, "resonance_grid: need lo < hi");
  if (!(width > 0.0)) throw Error(ErrorKind::invalid_input, "resonance_grid: width must be positive");
  if (per_decade < 1 || decades < 0) throw Error(ErrorKind::invalid_input, "resonance_grid: bad refinement");
  std::vector<double> x = linspace(lo, hi, std::max(n, 2));
  for (double c : centers) {
    x.push_back(c);
    for (int k = 0; k <= per_decade * decades; ++k) {
      const double d = width * std::pow(10.0, static_cast<double>(k) / per_decade);
      x.push_back(c - d);
      x.push_back(c + d);
    }
  }
  x.erase(std::remove_if(x.begin(), x.end(), [&](double v) { return v < lo || v > hi; }), x.end());
  std::sort(x.begin(), x.end());
  x.erase(std::unique(x.begin(), x.end()), x.end());
  return x;
}

}  // namespace omx2d
