#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "exwave/errors.hpp"

namespace exwave {

// |w|^p with the w = 0 case pinned to 0 (pow would be fine there too, but the
// guard keeps the intent explicit and dodges exp(p*log 0)).  Integer powers
// take the cheap path: these sit in the innermost wave-step loops.
inline double pow_abs(double w, double p) {
  if (w == 0.0) return 0.0;
  const double a = std::abs(w);
  if (p == 2.0) return a * a;
  if (p == 3.0) return a * a * a;
  return std::pow(a, p);
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

inline LineFit least_squares_line(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size(), errc::invalid_argument, "fit needs matching sample counts");
  const std::size_t m = x.size();
  require(m >= 2, errc::insufficient_points, "fit needs at least two samples");
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  require(sxx > 0.0, errc::insufficient_points, "fit abscissae are degenerate");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

// Log-log power-law fit; every sample must be strictly positive.
inline LineFit log_log_fit(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i] > 0.0 && y[i] > 0.0, errc::invalid_argument, "log-log fit needs positive samples");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  return least_squares_line(lx, ly);
}

}  // namespace exwave
