#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>

#include "kgscat/frame.hpp"

namespace kgscat {

struct EvolutionOptions {
  enum class Method { adaptive, rk4_fixed };
  Method method = Method::adaptive;
  double rtol = 1e-9;
  double atol = 1e-12;
  double dt_fixed = 1e-3;
};

// Provider of the ODE right-hand side d/dt U = iH(t) U. Generators between
// nodes are obtained by C^1 cubic Hermite interpolation of the stored family
// (values + nodal derivatives).
class Generator {
 public:
  virtual ~Generator() = default;
  virtual int dim() const = 0;
  virtual void apply_iH(double t, const Mat& in, Mat& out) const = 0;
  virtual double span_lo() const = 0;
  virtual double span_hi() const = 0;
};

// H(t) = [[0, I], [a(t), i r(t)]] on Cauchy-data pairs.
class ModelGenerator : public Generator {
 public:
  explicit ModelGenerator(const ModelCoefficients& mc);
  int dim() const override { return 2 * N_; }
  void apply_iH(double t, const Mat& in, Mat& out) const override;
  double span_lo() const override { return grid_.t_min; }
  double span_hi() const override { return grid_.t_max; }

 private:
  int N_;
  TimeGrid grid_;
  OpFamily a0_, a1_, r0_, r1_;
};

// Generic square operator family (used for H_ad, H_d blocks).
class FamilyGenerator : public Generator {
 public:
  FamilyGenerator(OpFamily H, OpFamily dH);
  explicit FamilyGenerator(const OpFamily& H);  // derivative by stencils
  int dim() const override { return int(H_.mats[0].rows()); }
  void apply_iH(double t, const Mat& in, Mat& out) const override;
  double span_lo() const override { return H_.grid.t_min; }
  double span_hi() const override { return H_.grid.t_max; }

 private:
  OpFamily H_, dH_;
};

// U(t, s) for the given generator.
Mat evolve(const Generator& gen, double t, double s, const EvolutionOptions& opts);
// One anchored path: U(ts[i], anchor) for each requested time.
std::vector<Mat> evolve_path(const Generator& gen, double anchor, const std::vector<double>& ts,
                             const EvolutionOptions& opts);
// Action on Cauchy data (or any column block).
Mat evolve_apply(const Generator& gen, double t, double s, const Mat& data,
                 const EvolutionOptions& opts);

// || U^dag (W_t + W_t) q U - (W_s + W_s) q || / || (W_s + W_s) q ||
double check_symplectic(const Mat& U, const Mat& q, const Weight& Wt, const Weight& Ws);

// Evolution generated by the diagonal part H_d: block-diagonal by
// construction; returns diag(U_plus, U_minus).
Mat evolve_diag(const DiagFrame& frame, double t, double s, const EvolutionOptions& opts);

// D(t,s) = U(t,s) - T(t) U_d(t,s) T^{-1}(s); smoothing diagnostics per block.
struct InteractionGapReport {
  double norm = 0;
  double worst_exponent = 0;
  double worst_r2 = 1;
  bool pass = false;
  std::array<SmoothingReport, 4> blocks;
};
InteractionGapReport interaction_gap(const ModelCoefficients& model, const DiagFrame& frame,
                                     double t, double s, const EvolutionOptions& opts,
                                     double p_threshold = 4.0, double r2_threshold = 0.9);

struct SplitEvolution {
  Mat plus, minus;
};
// U^{+-}(t,s) = U(t,t0) c^{+-}_ref(t0) U(t0,s), from precomputed legs.
SplitEvolution split_evolution(const Mat& U_t_t0, const Mat& U_t0_s, const Mat& cref_plus,
                               const Mat& cref_minus);

// Adaptive embedded Dormand-Prince 5(4) on a matrix-valued state; steps land
// exactly on t1. Deterministic for fixed inputs.
template <class MatT, class Rhs>
void dp45_integrate_t(Rhs&& rhs, double t0, double t1, MatT& y, double rtol, double atol) {
  if (t0 == t1) return;
  static const double c[7] = {0, 1. / 5, 3. / 10, 4. / 5, 8. / 9, 1., 1.};
  static const double a[7][6] = {
      {},
      {1. / 5},
      {3. / 40, 9. / 40},
      {44. / 45, -56. / 15, 32. / 9},
      {19372. / 6561, -25360. / 2187, 64448. / 6561, -212. / 729},
      {9017. / 3168, -355. / 33, 46732. / 5247, 49. / 176, -5103. / 18656},
      {35. / 384, 0., 500. / 1113, 125. / 192, -2187. / 6784, 11. / 84}};
  static const double e[7] = {35. / 384 - 5179. / 57600,      0.,
                              500. / 1113 - 7571. / 16695,    125. / 192 - 393. / 640,
                              -2187. / 6784 + 92097. / 339200, 11. / 84 - 187. / 2100,
                              -1. / 40};

  double dir = t1 > t0 ? 1.0 : -1.0;
  double t = t0;
  double h = dir * std::min(0.01, std::abs(t1 - t0));
  MatT k[7], ytmp, yerr, y5;
  for (auto& m : k) m = y;
  ytmp = y;
  yerr = y;
  y5 = y;
  rhs(t, y, k[0]);
  long guard = 0;
  while ((t1 - t) * dir > 1e-14 * std::max(1.0, std::abs(t1))) {
    if (std::abs(h) > std::abs(t1 - t)) h = t1 - t;
    for (int s = 1; s < 7; ++s) {
      ytmp = y;
      for (int j = 0; j < s; ++j)
        if (a[s][j] != 0.0) ytmp.noalias() += (h * a[s][j]) * k[j];
      rhs(t + c[s] * h, ytmp, k[s]);
    }
    // the 5th-order solution is the last stage's argument (FSAL pair)
    y5 = y;
    for (int j = 0; j < 6; ++j)
      if (a[6][j] != 0.0) y5.noalias() += (h * a[6][j]) * k[j];
    yerr.setZero();
    for (int j = 0; j < 7; ++j)
      if (e[j] != 0.0) yerr.noalias() += (h * e[j]) * k[j];
    double sc = atol + rtol * std::max(y.norm(), y5.norm());
    double err = yerr.norm() / sc;
    if (err <= 1.0) {
      t += h;
      y.swap(y5);
      k[0].swap(k[6]);
    }
    double fac = err > 0 ? 0.9 * std::pow(err, -0.2) : 5.0;
    h *= std::clamp(fac, 0.2, 5.0);
    require(std::abs(h) > 1e-13 * std::max(1.0, std::abs(t)), errc::integration_failure,
            "evolution step size underflow");
    require(++guard < 100000000, errc::integration_failure, "evolution stalled");
  }
}

void dp45_integrate(const std::function<void(double, const Mat&, Mat&)>& rhs, double t0, double t1,
                    Mat& y, double rtol, double atol);
void rk4_integrate(const std::function<void(double, const Mat&, Mat&)>& rhs, double t0, double t1,
                   Mat& y, double dt);

}  // namespace kgscat
