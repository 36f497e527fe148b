#pragma once

#include <utility>
#include <vector>

#include "kgscat/basis.hpp"

namespace kgscat {

// Result of a power-law fit g ~ C * s^{-gamma} on a log-log scale. `exact`
// flags data at the numerical floor (no decay to measure); `sentinel_inf`
// flags super-polynomial decay (fit slope exceeds p_max or R^2 collapses
// while values keep shrinking).
struct DecayFit {
  double exponent = 0;
  double prefactor = 0;
  double r_squared = 0;
  int window_begin = 0;
  int window_end = 0;  // exclusive
  bool exact = false;
  bool sentinel_inf = false;
};

inline constexpr double kExactFloor = 1e-12;

// Least-squares fit of log g against log <t> over [window_begin, window_end).
// Requires g > 0 on the window and at least 4 samples.
DecayFit fit_time_decay(const std::vector<std::pair<double, double>>& values, int window_begin,
                        int window_end);
DecayFit fit_time_decay(const std::vector<std::pair<double, double>>& values);

// Entry-decay exponent of an operator in the mode basis: shell maxima
// s_n = max { |A_{jk}| : max(|j|,|k|) = n } fitted as C (1+|j|+|k|)^{-p}
// over shells n in [n_lo, n_hi]. p_max is the largest exponent considered
// resolvable; steeper (or all-zero) windows return the +inf sentinel.
DecayFit entry_decay_fit(const Mat& A, const ModeBasis& b, int n_lo, int n_hi,
                         double p_max = 16.0);

}  // namespace kgscat
