#pragma once

#include <array>
#include <cmath>
#include <complex>

#include "kgscat/errors.hpp"

namespace kgscat {

// Truncated Taylor jet of a function of t: coefficients c[k] = f^(k)(t0)/k!.
// Coefficient profiles are closed-form in t, so evaluating them on jets gives
// exact time derivatives; the scattering pipeline uses this to avoid the
// noise-floor of repeated finite differencing.
template <typename T, int MaxOrder = 8>
struct Jet {
  static constexpr int cap = MaxOrder + 1;
  std::array<T, cap> c{};
  int depth = MaxOrder;  // orders 0..depth are valid

  Jet() = default;
  explicit Jet(T value, int d = MaxOrder) : depth(d) { c[0] = value; }

  static Jet variable(double t, int d = MaxOrder) {
    Jet j(T(t), d);
    if (d >= 1) j.c[1] = T(1);
    return j;
  }

  T value() const { return c[0]; }
  // f^(k)(t0), not the Taylor coefficient.
  T derivative(int k) const {
    double fact = 1;
    for (int i = 2; i <= k; ++i) fact *= i;
    return c[k] * fact;
  }

  // Jet of f': one order of depth is consumed.
  Jet d() const {
    Jet r;
    r.depth = depth - 1;
    for (int k = 0; k <= r.depth; ++k) r.c[k] = c[k + 1] * T(k + 1);
    return r;
  }

  Jet operator-() const {
    Jet r = *this;
    for (auto& x : r.c) x = -x;
    return r;
  }

  friend Jet operator+(const Jet& a, const Jet& b) {
    Jet r;
    r.depth = std::min(a.depth, b.depth);
    for (int k = 0; k <= r.depth; ++k) r.c[k] = a.c[k] + b.c[k];
    return r;
  }
  friend Jet operator-(const Jet& a, const Jet& b) { return a + (-b); }
  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r;
    r.depth = std::min(a.depth, b.depth);
    for (int k = 0; k <= r.depth; ++k) {
      T s{};
      for (int i = 0; i <= k; ++i) s += a.c[i] * b.c[k - i];
      r.c[k] = s;
    }
    return r;
  }
  friend Jet operator+(const Jet& a, T s) { Jet r = a; r.c[0] += s; return r; }
  friend Jet operator+(T s, const Jet& a) { return a + s; }
  friend Jet operator-(const Jet& a, T s) { Jet r = a; r.c[0] -= s; return r; }
  friend Jet operator-(T s, const Jet& a) { return (-a) + s; }
  friend Jet operator*(const Jet& a, T s) {
    Jet r = a;
    for (auto& x : r.c) x *= s;
    return r;
  }
  friend Jet operator*(T s, const Jet& a) { return a * s; }
  friend Jet operator/(const Jet& a, T s) { return a * (T(1) / s); }

  friend Jet operator/(const Jet& a, const Jet& b) { return a * inverse(b); }

  friend Jet inverse(const Jet& a) {
    Jet r;
    r.depth = a.depth;
    r.c[0] = T(1) / a.c[0];
    for (int k = 1; k <= r.depth; ++k) {
      T s{};
      for (int i = 1; i <= k; ++i) s += a.c[i] * r.c[k - i];
      r.c[k] = -s / a.c[0];
    }
    return r;
  }

  friend Jet sqrt(const Jet& a) {
    Jet r;
    r.depth = a.depth;
    using std::sqrt;
    r.c[0] = sqrt(a.c[0]);
    for (int k = 1; k <= r.depth; ++k) {
      T s{};
      for (int i = 1; i < k; ++i) s += r.c[i] * r.c[k - i];
      r.c[k] = (a.c[k] - s) / (T(2) * r.c[0]);
    }
    return r;
  }

  friend Jet exp(const Jet& a) {
    Jet r;
    r.depth = a.depth;
    using std::exp;
    r.c[0] = exp(a.c[0]);
    // r' = a' r  =>  (k+1) r_{k+1} = sum_{i} (i+1) a_{i+1} r_{k-i}
    for (int k = 0; k < r.depth; ++k) {
      T s{};
      for (int i = 0; i <= k; ++i) s += T(i + 1) * a.c[i + 1] * r.c[k - i];
      r.c[k + 1] = s / T(k + 1);
    }
    return r;
  }

  friend Jet log(const Jet& a) {
    Jet r;
    r.depth = a.depth;
    using std::log;
    r.c[0] = log(a.c[0]);
    // a r' = a'  =>  (k+1) a_0 r_{k+1} = (k+1) a_{k+1} - sum_{i=1..k} i r_i a_{k+1-i}
    for (int k = 0; k < r.depth; ++k) {
      T s = T(k + 1) * a.c[k + 1];
      for (int i = 1; i <= k; ++i) s -= T(i) * r.c[i] * a.c[k + 1 - i];
      r.c[k + 1] = s / (T(k + 1) * a.c[0]);
    }
    return r;
  }

  friend Jet pow(const Jet& a, double p) { return exp(log(a) * T(p)); }

  friend void sincos(const Jet& a, Jet& s, Jet& c) {
    using std::cos;
    using std::sin;
    s.depth = a.depth;
    c.depth = a.depth;
    s.c[0] = sin(a.c[0]);
    c.c[0] = cos(a.c[0]);
    for (int k = 0; k < a.depth; ++k) {
      T ds{}, dc{};
      for (int i = 0; i <= k; ++i) {
        ds += T(i + 1) * a.c[i + 1] * c.c[k - i];
        dc -= T(i + 1) * a.c[i + 1] * s.c[k - i];
      }
      s.c[k + 1] = ds / T(k + 1);
      c.c[k + 1] = dc / T(k + 1);
    }
  }

  friend Jet real(const Jet& a) {
    if constexpr (std::is_same_v<T, std::complex<double>>) {
      Jet r;
      r.depth = a.depth;
      for (int k = 0; k <= a.depth; ++k) r.c[k] = T(a.c[k].real(), 0.0);
      return r;
    } else {
      return a;
    }
  }

  friend Jet conj(const Jet& a) {
    if constexpr (std::is_same_v<T, std::complex<double>>) {
      Jet r;
      r.depth = a.depth;
      for (int k = 0; k <= a.depth; ++k) r.c[k] = std::conj(a.c[k]);
      return r;
    } else {
      return a;
    }
  }
};

using RJet = Jet<double>;
using CJet = Jet<std::complex<double>>;

inline CJet complexify(const RJet& a) {
  CJet r;
  r.depth = a.depth;
  for (int k = 0; k <= a.depth; ++k) r.c[k] = std::complex<double>(a.c[k], 0.0);
  return r;
}

}  // namespace kgscat
