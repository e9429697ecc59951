#pragma once

#include <functional>
#include <vector>

namespace omx2d {

struct QuadratureOptions {
  double abs_tol = 1e-5;
  double rel_tol = 0.0;
  int max_panels = 50000;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;  // sum of panel error estimates
  int panels = 0;
  long evaluations = 0;
};

/// Global adaptive Gauss-Kronrod (7/15) on [a, b]. Breakpoints inside (a, b)
/// seed the initial panels; the panel with the largest error is bisected
/// until the summed error is below max(abs_tol, rel_tol |value|).
/// Throws IntegrationError with the worst panel when max_panels is reached.
/// No global state: safe to call concurrently.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const std::vector<double>& breakpoints = {}, const QuadratureOptions& options = {});

/// Integral over the whole real line. [-W, W] is handled directly with the
/// breakpoints; the two tails are mapped onto (0, 1] by x = W / s.
QuadratureResult integrate_real_line(const std::function<double(double)>& f, double half_width,
                                     const std::vector<double>& breakpoints = {},
                                     const QuadratureOptions& options = {});

}  // namespace omx2d
