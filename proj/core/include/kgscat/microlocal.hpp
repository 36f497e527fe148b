#pragma once

#include "kgscat/states.hpp"

namespace kgscat {

struct PhasePoint {
  double x = 0;
  double k = 0;
};

// Characteristic flow of +-sqrt(h^{xx}(t,x)) |k| on the cotangent circle.
PhasePoint hamiltonian_flow(const ModelCoefficients& model, PhasePoint p0, int sign, double t,
                            double s, double tol = 1e-10);

struct Wavepacket {
  PhasePoint center;
  double sigma = 0;
  int sign = +1;
  double t_launch = 0;
  Vec data;        // 2N Cauchy datum, unit weighted norm, in ran c^{sign}_ref
  double leakage;  // weighted norm of the complementary projection
};

Wavepacket make_wavepacket(const ModeBasis& basis, const DiagFrame& frame,
                           const ModelCoefficients& model, PhasePoint p0, double sigma, int sign,
                           double t_launch);

struct PropagationReport {
  PhasePoint predicted;
  double x_center = 0, k_mean = 0, spread = 0;
  double dx = 0, dk = 0;
  double leakage_final = 0;
  bool pass = false;
  // per-sample rows (t, x_center, k_mean, leakage) for CSV export
  std::vector<std::array<double, 4>> track;
};

// Evolves the packet with the split evolution of its frequency sign, then
// compares the measured phase-space center against the characteristic flow.
// `flow_sign` lets the caller request the wrong-sign comparison on purpose.
PropagationReport propagation_test(const ModelCoefficients& model, const DiagFrame& frame,
                                   const Wavepacket& wp, double t_final,
                                   const EvolutionOptions& opts, int flow_sign = 0,
                                   int n_track = 5);

// circular helpers
double circle_distance(double a, double b, double L);
double circular_mean(const RVec& density, const RVec& xs, double L);

}  // namespace kgscat
