#pragma once

#include <vector>

#include "kgscat/basis.hpp"

namespace kgscat {

// Reported norms over a family exclude this many nodes at each end, where the
// one-sided differentiation stencils degrade.
inline constexpr int kGridTrim = 4;

struct TimeGrid {
  double t_min = 0, t_max = 0;
  int n_nodes = 0;
  double dt = 0;
  std::vector<double> nodes;

  double node(int i) const { return nodes[i]; }
  // nearest node index
  int index_near(double t) const;
  // largest i with nodes[i] <= t (clamped to [0, n_nodes-2])
  int cell_of(double t) const;
  bool contains(double t) const { return t >= t_min - 1e-12 && t <= t_max + 1e-12; }
};

TimeGrid make_grid(double t_min, double t_max, int n_nodes);

// 4th-order differentiation weights on a uniform grid: central stencils on
// interior nodes, one-sided 5-point stencils at the first/last two nodes.
// Returns the 5 stencil offsets and weights for node i.
struct Stencil {
  int offsets[5];
  double w[5];
};
Stencil derivative_stencil(int i, int n_nodes, double dt);

// Time-indexed family of operators on a shared basis.
struct OpFamily {
  TimeGrid grid;
  std::vector<Mat> mats;

  const Mat& at(int i) const { return mats[i]; }
  int size() const { return grid.n_nodes; }
  Mat derivative_at(int i) const;
  OpFamily time_derivative() const;
};

OpFamily constant_family(const TimeGrid& g, const Mat& m);

// Scalar-valued family (per-mode curves, profiles); same stencils.
struct ScalarFamily {
  TimeGrid grid;
  std::vector<cplx> values;

  cplx at(int i) const { return values[i]; }
  cplx derivative_at(int i) const;
};

// Piecewise-cubic Hermite interpolation on a uniform grid given nodal values
// and nodal derivatives. C^1, local, O(dt^4) for smooth data.
double hermite_weights(const TimeGrid& g, double t, int& i0, double w_val[2], double w_der[2]);

}  // namespace kgscat
