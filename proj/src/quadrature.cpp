#include "omx2d/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "omx2d/errors.hpp"

namespace omx2d {

namespace {

// QUADPACK qk15 nodes and weights
constexpr double xgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                           0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                           0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                           0.207784955007898467600689403773245, 0.0};
constexpr double wgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                           0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                           0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                           0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double wg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                          0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

// one integration variable per piece: x = map(t), weight map'(t)
struct Piece {
  enum Kind { plain, upper_tail, lower_tail } kind = plain;
  double w = 0.0;  // tail anchor
};

struct Panel {
  double lo, hi, value, error;
  int piece;
  bool operator<(const Panel& other) const { return error < other.error; }
};

class Integrator {
 public:
  Integrator(const std::function<double(double)>& f, std::vector<Piece> pieces) : f_(f), pieces_(std::move(pieces)) {}

  Panel panel(double lo, double hi, int piece) {
    const double center = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    const double fc = eval(center, piece);
    double kronrod = fc * wgk[7];
    double gauss = fc * wg[3];
    for (int j = 0; j < 7; ++j) {
      const double dx = half * xgk[j];
      const double sum = eval(center - dx, piece) + eval(center + dx, piece);
      kronrod += wgk[j] * sum;
      if (j % 2 == 1) gauss += wg[j / 2] * sum;
    }
    return {lo, hi, kronrod * half, std::abs((kronrod - gauss) * half), piece};
  }

  long evaluations() const { return evaluations_; }

 private:
  double eval(double t, int piece) {
    ++evaluations_;
    const Piece& p = pieces_[piece];
    double v;
    switch (p.kind) {
      case Piece::plain: v = f_(t); break;
      case Piece::upper_tail: v = f_(p.w / t) * p.w / (t * t); break;
      default: v = f_(-p.w / t) * p.w / (t * t); break;
    }
    if (!std::isfinite(v)) {
      throw Error(ErrorKind::integration_failure, "quadrature: integrand is not finite");
    }
    return v;
  }

  const std::function<double(double)>& f_;
  std::vector<Piece> pieces_;
  long evaluations_ = 0;
};

struct Interval {
  double lo, hi;
  int piece;
};

QuadratureResult run(const std::function<double(double)>& f, std::vector<Piece> pieces,
                     const std::vector<Interval>& seeds, const QuadratureOptions& options) {
  Integrator integrator(f, std::move(pieces));
  std::priority_queue<Panel> queue;
  double value = 0.0, error = 0.0;
  for (const auto& s : seeds) {
    if (!(s.hi > s.lo)) continue;
    Panel p = integrator.panel(s.lo, s.hi, s.piece);
    value += p.value;
    error += p.error;
    queue.push(p);
  }
  // panels too narrow to split any further
  double frozen_error = 0.0;
  auto target = [&] { return std::max(options.abs_tol, options.rel_tol * std::abs(value)); };
  while (!queue.empty() && error > target()) {
    if (static_cast<int>(queue.size()) >= options.max_panels) {
      const Panel& worst = queue.top();
      throw IntegrationError("quadrature: panel budget exhausted", worst.lo, worst.hi, worst.error);
    }
    Panel worst = queue.top();
    queue.pop();
    const double mid = 0.5 * (worst.lo + worst.hi);
    if (!(mid > worst.lo && mid < worst.hi) || (worst.hi - worst.lo) < 1e-13 * std::max(std::abs(worst.lo), std::abs(worst.hi))) {
      frozen_error += worst.error;
      if (frozen_error > target()) {
        throw IntegrationError("quadrature: roundoff limits the achievable accuracy", worst.lo, worst.hi, worst.error);
      }
      continue;
    }
    const Panel left = integrator.panel(worst.lo, mid, worst.piece);
    const Panel right = integrator.panel(mid, worst.hi, worst.piece);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    queue.push(left);
    queue.push(right);
  }

  // re-sum for a value free of running-sum drift
  QuadratureResult r;
  r.panels = static_cast<int>(queue.size());
  std::vector<Panel> all;
  all.reserve(queue.size());
  while (!queue.empty()) {
    all.push_back(queue.top());
    queue.pop();
  }
  std::sort(all.begin(), all.end(), [](const Panel& a, const Panel& b) {
    return a.piece != b.piece ? a.piece < b.piece : a.lo < b.lo;
  });
  for (const auto& p : all) {
    r.value += p.value;
    r.error += p.error;
  }
  r.error += frozen_error;
  r.evaluations = integrator.evaluations();
  return r;
}

std::vector<double> cut_points(double a, double b, const std::vector<double>& breakpoints) {
  std::vector<double> cuts{a};
  for (double x : breakpoints) {
    if (x > a && x < b && std::isfinite(x)) cuts.push_back(x);
  }
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  return cuts;
}

}  // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const std::vector<double>& breakpoints, const QuadratureOptions& options) {
  if (!std::isfinite(a) || !std::isfinite(b) || !(b > a)) {
    throw Error(ErrorKind::invalid_input, "integrate: need finite a < b");
  }
  const auto cuts = cut_points(a, b, breakpoints);
  std::vector<Interval> seeds;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) seeds.push_back({cuts[i], cuts[i + 1], 0});
  return run(f, {Piece{}}, seeds, options);
}

QuadratureResult integrate_real_line(const std::function<double(double)>& f, double half_width,
                                     const std::vector<double>& breakpoints, const QuadratureOptions& options) {
  if (!(half_width > 0.0) || !std::isfinite(half_width)) {
    throw Error(ErrorKind::invalid_input, "integrate_real_line: half width must be positive");
  }
  const auto cuts = cut_points(-half_width, half_width, breakpoints);
  std::vector<Interval> seeds;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) seeds.push_back({cuts[i], cuts[i + 1], 0});
  // tails: s in (0, 1], with a few seed panels graded toward s = 0
  for (int piece : {1, 2}) {
    double hi = 1.0;
    for (int k = 0; k < 6; ++k) {
      seeds.push_back({0.25 * hi, hi, piece});
      hi *= 0.25;
    }
    seeds.push_back({0.0, hi, piece});
  }
  std::vector<Piece> pieces{Piece{}, Piece{Piece::upper_tail, half_width}, Piece{Piece::lower_tail, half_width}};
  return run(f, std::move(pieces), seeds, options);
}

}  // namespace omx2d
