#include "kgscat/timegrid.hpp"

#include <algorithm>
#include <cmath>

namespace kgscat {

TimeGrid make_grid(double t_min, double t_max, int n_nodes) {
  require(t_min < t_max, errc::invalid_config, "time grid needs t_min < t_max");
  require(n_nodes >= 9, errc::invalid_config, "time grid needs at least 9 nodes");
  TimeGrid g;
  g.t_min = t_min;
  g.t_max = t_max;
  g.n_nodes = n_nodes;
  g.dt = (t_max - t_min) / (n_nodes - 1);
  g.nodes.resize(n_nodes);
  for (int i = 0; i < n_nodes; ++i) g.nodes[i] = t_min + i * g.dt;
  g.nodes.back() = t_max;
  return g;
}

int TimeGrid::index_near(double t) const {
  int i = int(std::lround((t - t_min) / dt));
  return std::clamp(i, 0, n_nodes - 1);
}

int TimeGrid::cell_of(double t) const {
  int i = int(std::floor((t - t_min) / dt));
  return std::clamp(i, 0, n_nodes - 2);
}

Stencil derivative_stencil(int i, int n_nodes, double dt) {
  Stencil s;
  auto set = [&](std::initializer_list<int> off, std::initializer_list<double> w) {
    int k = 0;
    for (int o : off) s.offsets[k++] = o;
    k = 0;
    for (double x : w) s.w[k++] = x / (12.0 * dt);
  };
  if (i == 0)
    set({0, 1, 2, 3, 4}, {-25, 48, -36, 16, -3});
  else if (i == 1)
    set({-1, 0, 1, 2, 3}, {-3, -10, 18, -6, 1});
  else if (i == n_nodes - 2)
    set({-3, -2, -1, 0, 1}, {-1, 6, -18, 10, 3});
  else if (i == n_nodes - 1)
    set({-4, -3, -2, -1, 0}, {3, -16, 36, -48, 25});
  else
    set({-2, -1, 0, 1, 2}, {1, -8, 0, 8, -1});
  return s;
}

Mat OpFamily::derivative_at(int i) const {
  Stencil s = derivative_stencil(i, grid.n_nodes, grid.dt);
  Mat d = Mat::Zero(mats[i].rows(), mats[i].cols());
  for (int k = 0; k < 5; ++k) d += s.w[k] * mats[i + s.offsets[k]];
  return d;
}

OpFamily OpFamily::time_derivative() const {
  OpFamily out;
  out.grid = grid;
  out.mats.resize(mats.size());
  for (int i = 0; i < grid.n_nodes; ++i) out.mats[i] = derivative_at(i);
  return out;
}

OpFamily constant_family(const TimeGrid& g, const Mat& m) {
  OpFamily f;
  f.grid = g;
  f.mats.assign(g.n_nodes, m);
  return f;
}

cplx ScalarFamily::derivative_at(int i) const {
  Stencil s = derivative_stencil(i, grid.n_nodes, grid.dt);
  cplx d = 0;
  for (int k = 0; k < 5; ++k) d += s.w[k] * values[i + s.offsets[k]];
  return d;
}

double hermite_weights(const TimeGrid& g, double t, int& i0, double w_val[2], double w_der[2]) {
  i0 = g.cell_of(t);
  double h = g.dt;
  double u = (t - g.nodes[i0]) / h;
  double u2 = u * u, u3 = u2 * u;
  w_val[0] = 2 * u3 - 3 * u2 + 1;
  w_val[1] = -2 * u3 + 3 * u2;
  w_der[0] = (u3 - 2 * u2 + u) * h;
  w_der[1] = (u3 - u2) * h;
  return u;
}

}  // namespace kgscat
