#include "omx2d/features.hpp"

#include <algorithm>
#include <cmath>

#include "omx2d/errors.hpp"

namespace omx2d {

namespace {

void check(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw Error(ErrorKind::invalid_input, "features: x and y differ in length");
}

}  // namespace

std::vector<Extremum> local_maxima(const std::vector<double>& x, const std::vector<double>& y,
                                   double min_prominence) {
  check(x, y);
  const std::size_t n = y.size();
  std::vector<Extremum> out;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(y[i] > y[i - 1])) continue;
    std::size_t j = i;
    while (j + 1 < n && y[j + 1] == y[i]) ++j;
    if (j + 1 >= n || !(y[j + 1] < y[i])) continue;

    // lowest point on each side before reaching higher ground (or the end)
    double left = y[i];
    for (std::size_t k = i; k-- > 0;) {
      if (y[k] > y[i]) break;
      left = std::min(left, y[k]);
    }
    double right = y[i];
    for (std::size_t k = j + 1; k < n; ++k) {
      if (y[k] > y[i]) break;
      right = std::min(right, y[k]);
    }
    const double prominence = y[i] - std::max(left, right);
    if (prominence >= min_prominence) out.push_back({i, x[i], y[i], prominence});
    i = j;
  }
  return out;
}

std::vector<Extremum> local_minima(const std::vector<double>& x, const std::vector<double>& y,
                                   double min_prominence) {
  std::vector<double> neg(y.size());
  std::transform(y.begin(), y.end(), neg.begin(), [](double v) { return -v; });
  auto out = local_maxima(x, neg, min_prominence);
  for (auto& e : out) e.y = -e.y;
  return out;
}

double width_at_half_depth(const std::vector<double>& x, const std::vector<double>& y, std::size_t index,
                           double reference) {
  check(x, y);
  if (index >= y.size()) throw Error(ErrorKind::invalid_input, "width_at_half_depth: index out of range");
  const double level = 0.5 * (reference + y[index]);
  auto crossing = [&](std::size_t a, std::size_t b) {
    const double t = (level - y[a]) / (y[b] - y[a]);
    return x[a] + t * (x[b] - x[a]);
  };
  std::size_t l = index;
  while (l > 0 && y[l - 1] < level) --l;
  std::size_t r = index;
  while (r + 1 < y.size() && y[r + 1] < level) ++r;
  if (l == 0 || r + 1 >= y.size()) {
    throw Error(ErrorKind::invalid_input, "width_at_half_depth: dip does not recover to half depth inside the grid");
  }
  return crossing(r, r + 1) - crossing(l - 1, l);
}

}  // namespace omx2d
