#include "kgscat/decay.hpp"

#include <cmath>
#include <limits>

namespace kgscat {

namespace {

// slope/intercept/R^2 of y against x
struct LineFit {
  double slope = 0, intercept = 0, r2 = 0;
};

LineFit line_fit(const std::vector<double>& x, const std::vector<double>& y) {
  int n = int(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  double den = n * sxx - sx * sx;
  LineFit f;
  f.slope = (n * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / n;
  double ss_res = 0, mean = sy / n, ss_tot = 0;
  for (int i = 0; i < n; ++i) {
    double yi = f.intercept + f.slope * x[i];
    ss_res += (y[i] - yi) * (y[i] - yi);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  f.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return f;
}

}  // namespace

DecayFit fit_time_decay(const std::vector<std::pair<double, double>>& values, int window_begin,
                        int window_end) {
  require(window_begin >= 0 && window_end <= int(values.size()) && window_begin < window_end,
          errc::invalid_data, "decay fit window out of range");
  int n = window_end - window_begin;
  require(n >= 4, errc::insufficient_samples, "decay fit needs at least 4 samples");

  DecayFit out;
  out.window_begin = window_begin;
  out.window_end = window_end;

  double vmax = 0;
  for (int i = window_begin; i < window_end; ++i)
    vmax = std::max(vmax, std::abs(values[i].second));
  if (vmax <= kExactFloor) {
    out.exact = true;
    out.exponent = std::numeric_limits<double>::infinity();
    out.sentinel_inf = true;
    out.r_squared = 1.0;
    return out;
  }

  std::vector<double> lx, ly;
  lx.reserve(n);
  ly.reserve(n);
  for (int i = window_begin; i < window_end; ++i) {
    double t = values[i].first, g = values[i].second;
    require(g > 0, errc::invalid_data, "decay fit requires positive values");
    lx.push_back(0.5 * std::log1p(t * t));  // log <t>
    ly.push_back(std::log(g));
  }
  LineFit f = line_fit(lx, ly);
  out.exponent = -f.slope;
  out.prefactor = std::exp(f.intercept);
  out.r_squared = f.r2;
  return out;
}

DecayFit fit_time_decay(const std::vector<std::pair<double, double>>& values) {
  return fit_time_decay(values, 0, int(values.size()));
}

DecayFit entry_decay_fit(const Mat& A, const ModeBasis& b, int n_lo, int n_hi, double p_max) {
  require(A.rows() == b.N && A.cols() == b.N, errc::invalid_data,
          "operator dimension != basis dimension");
  require(0 <= n_lo && n_lo < n_hi && n_hi <= b.K, errc::invalid_data,
          "shell window out of range");

  DecayFit out;
  out.window_begin = n_lo;
  out.window_end = n_hi + 1;

  std::vector<double> shell(n_hi + 1, 0.0);
  for (int r = 0; r < b.N; ++r)
    for (int c = 0; c < b.N; ++c) {
      int n = std::max(std::abs(b.mode(r)), std::abs(b.mode(c)));
      if (n <= n_hi) shell[n] = std::max(shell[n], std::abs(A(r, c)));
    }

  double smax = 0;
  for (int n = n_lo; n <= n_hi; ++n) smax = std::max(smax, shell[n]);
  if (smax <= kExactFloor) {
    out.exact = true;
    out.sentinel_inf = true;
    out.exponent = std::numeric_limits<double>::infinity();
    out.r_squared = 1.0;
    return out;
  }

  std::vector<double> lx, ly;
  for (int n = n_lo; n <= n_hi; ++n) {
    double s = std::max(shell[n], 1e-300);
    lx.push_back(std::log(1.0 + 2.0 * n));
    ly.push_back(std::log(s));
  }
  require(int(lx.size()) >= 3, errc::insufficient_samples, "shell window too small");
  LineFit f = line_fit(lx, ly);
  out.exponent = -f.slope;
  out.prefactor = std::exp(f.intercept);
  out.r_squared = f.r2;

  bool super_poly = out.exponent > p_max;
  // Super-polynomial decay shows up as a steepening log-log slope; a single
  // line then under-reports the order. Compare half-window slopes.
  int nshell = int(lx.size());
  if (!super_poly && out.exponent > 0.5 && nshell >= 6) {
    int half = nshell / 2;
    LineFit f1 = line_fit({lx.begin(), lx.begin() + half + 1}, {ly.begin(), ly.begin() + half + 1});
    LineFit f2 = line_fit({lx.begin() + half, lx.end()}, {ly.begin() + half, ly.end()});
    double drop = shell[n_lo] / std::max(shell[n_hi], 1e-300);
    if (f1.slope < 0 && f2.slope < 1.3 * f1.slope && drop > 10) super_poly = true;
  }
  if (super_poly) {
    out.sentinel_inf = true;
    out.exponent = std::numeric_limits<double>::infinity();
  }
  return out;
}

}  // namespace kgscat
