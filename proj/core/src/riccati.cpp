#include "kgscat/riccati.hpp"

namespace kgscat {

namespace {

const cplx kI(0.0, 1.0);

struct EpsFamilies {
  OpFamily eps, eps_inv;
};

EpsFamilies eps_families(const ModelCoefficients& model) {
  EpsFamilies out;
  out.eps.grid = model.grid;
  out.eps_inv.grid = model.grid;
  out.eps.mats.resize(model.grid.n_nodes);
  out.eps_inv.mats.resize(model.grid.n_nodes);
  for (int i = 0; i < model.grid.n_nodes; ++i) {
    WeightedEig e = weighted_eig(model.a_at(i), model.weight_at(i));
    require(e.evals.minCoeff() >= kPositivityFloor, errc::not_positive,
            "a(t) lost positivity at node " + std::to_string(i));
    out.eps.mats[i] = apply_spectral(e, [](double x) { return std::sqrt(x); });
    out.eps_inv.mats[i] = apply_spectral(e, [](double x) { return 1.0 / std::sqrt(x); });
  }
  return out;
}

double trimmed_sup_norm(const OpFamily& f) {
  double s = 0;
  for (int i = kGridTrim; i < f.grid.n_nodes - kGridTrim; ++i)
    s = std::max(s, f.at(i).cwiseAbs().maxCoeff());
  return s;
}

}  // namespace

OpFamily initial_term(const ModelCoefficients& model) {
  EpsFamilies ef = eps_families(model);
  OpFamily a0;
  a0.grid = model.grid;
  a0.mats.resize(model.grid.n_nodes);
  for (int i = 0; i < model.grid.n_nodes; ++i) {
    Mat deps = ef.eps.derivative_at(i);
    Mat r = model.r_op_at(i);
    a0.mats[i] = (kI / 2.0) * (ef.eps_inv.at(i) * deps + ef.eps_inv.at(i) * r * ef.eps.at(i));
  }
  return a0;
}

RiccatiSolution riccati_iterate(const ModelCoefficients& model, const RiccatiOptions& opts) {
  require(opts.n_max >= 1, errc::invalid_config, "riccati iteration needs n_max >= 1");
  RiccatiSolution sol;
  sol.grid = model.grid;
  sol.basis = model.basis;
  sol.gap_floor = opts.gap_floor;
  int n = model.grid.n_nodes;

  EpsFamilies ef = eps_families(model);
  sol.eps = ef.eps;
  sol.eps_inv = ef.eps_inv;

  std::vector<Mat> r_ops(n);
  for (int i = 0; i < n; ++i) r_ops[i] = model.r_op_at(i);

  OpFamily a0;
  a0.grid = model.grid;
  a0.mats.resize(n);
  for (int i = 0; i < n; ++i) {
    Mat deps = sol.eps.derivative_at(i);
    a0.mats[i] = (kI / 2.0) * (sol.eps_inv.at(i) * deps + sol.eps_inv.at(i) * r_ops[i] * sol.eps.at(i));
  }

  int probe = model.grid.index_near(0.0);
  int shell_lo = opts.fit_shell_lo > 0 ? opts.fit_shell_lo : std::max(1, model.basis.K / 8);
  int shell_hi = opts.fit_shell_hi > 0 ? opts.fit_shell_hi : model.basis.K / 2;

  OpFamily c = a0;
  double prev_sup = trimmed_sup_norm(c);
  for (int it = 1; it <= opts.n_max; ++it) {
    OpFamily cnew;
    cnew.grid = model.grid;
    cnew.mats.resize(n);
    OpFamily dc = c.time_derivative();
    for (int i = 0; i < n; ++i) {
      const Mat& ci = c.at(i);
      Mat F = 0.5 * sol.eps_inv.at(i) *
              (kI * dc.at(i) + sol.eps.at(i) * ci - ci * sol.eps.at(i) + kI * r_ops[i] * ci -
               ci * ci);
      cnew.mats[i] = a0.at(i) + F;
    }
    OpFamily diff;
    diff.grid = model.grid;
    diff.mats.resize(n);
    for (int i = 0; i < n; ++i) diff.mats[i] = cnew.at(i) - c.at(i);
    double inc = trimmed_sup_norm(diff);
    sol.increment_norms.push_back(inc);
    sol.increment_fits.push_back(
        entry_decay_fit(diff.at(probe), model.basis, shell_lo, shell_hi));

    double sup = trimmed_sup_norm(cnew);
    require(sup <= 10.0 * std::max(prev_sup, 1e-30) + 1e-12, errc::iteration_diverged,
            "riccati iterate grew more than tenfold");
    prev_sup = sup;
    c = std::move(cnew);
    sol.n_iter = it;
    if (opts.tol > 0 && inc <= opts.tol) break;
  }

  sol.b.grid = model.grid;
  sol.b.mats.resize(n);
  sol.b_minus.grid = model.grid;
  sol.b_minus.mats.resize(n);
  for (int i = 0; i < n; ++i) {
    sol.b.mats[i] = sol.eps.at(i) + c.at(i);
    sol.b_minus.mats[i] = -weighted_adjoint(sol.b.at(i), model.weight_at(i));
  }
  return sol;
}

void enforce_gap(RiccatiSolution& sol, const ModelCoefficients& model, double floor) {
  int n = sol.grid.n_nodes;
  sol.gap_floor = floor;
  for (int i = 0; i < n; ++i) {
    const Weight& W = model.weight_at(i);
    Mat gap = sol.b.at(i) - sol.b_minus.at(i);
    WeightedEig eg = weighted_eig(gap, W);
    WeightedEig ee = weighted_eig(2.0 * sol.eps.at(i), W);
    double floorval = floor * ee.evals.minCoeff();
    if (eg.evals.minCoeff() >= floorval) continue;

    Eigen::VectorXd clamped = eg.evals.cwiseMax(floorval);
    Mat delta = eg.P * (clamped - eg.evals).asDiagonal() * eg.Pinv;
    sol.b.mats[i] += 0.5 * delta;
    sol.b_minus.mats[i] -= 0.5 * delta;
    sol.clamp_activated = true;
    SmoothingReport rep = smoothing_order(delta, model.basis, 2);
    sol.clamp_report = rep;
    bool ok = rep.entry_fit.sentinel_inf ||
              (rep.entry_fit.exponent >= 4.0 && rep.entry_fit.r_squared >= 0.8);
    require(ok, errc::gap_repair_failed,
            "gap clamp perturbation is not numerically smoothing at node " + std::to_string(i));
  }
}

ResidualReport riccati_residual(RiccatiSolution& sol, const ModelCoefficients& model,
                                double fit_t_lo, double fit_t_hi) {
  int n = sol.grid.n_nodes;
  sol.res_plus.grid = sol.grid;
  sol.res_minus.grid = sol.grid;
  sol.res_plus.mats.resize(n);
  sol.res_minus.mats.resize(n);
  OpFamily db = sol.b.time_derivative();
  OpFamily dbm = sol.b_minus.time_derivative();
  for (int i = 0; i < n; ++i) {
    Mat a = model.a_at(i);
    Mat r = model.r_op_at(i);
    const Mat& bp = sol.b.at(i);
    const Mat& bm = sol.b_minus.at(i);
    sol.res_plus.mats[i] = kI * db.at(i) - bp * bp + a + kI * r * bp;
    sol.res_minus.mats[i] = kI * dbm.at(i) - bm * bm + a + kI * r * bm;
  }

  ResidualReport rep;
  std::vector<std::pair<double, double>> vals;
  for (int i = kGridTrim; i < n - kGridTrim; ++i) {
    double t = sol.grid.node(i);
    if (t < fit_t_lo || t > fit_t_hi) continue;
    vals.push_back({t, op_norm(sol.res_plus.at(i)) + 1e-300});
  }
  double vmax = 0;
  for (auto& v : vals) vmax = std::max(vmax, v.second);
  if (vals.size() < 4 || vmax <= kExactFloor) {
    rep.time_decay.exact = vmax <= kExactFloor;
    rep.time_decay.sentinel_inf = rep.time_decay.exact;
    rep.time_decay.exponent = std::numeric_limits<double>::infinity();
    rep.time_decay.r_squared = 1.0;
  } else {
    // thin out so the fit is not dominated by dense early samples
    std::vector<std::pair<double, double>> thin;
    int stride = std::max<size_t>(1, vals.size() / 48);
    for (size_t i = 0; i < vals.size(); i += stride) thin.push_back(vals[i]);
    rep.time_decay = fit_time_decay(thin);
  }
  rep.smoothing = smoothing_order(sol.res_plus.at(sol.grid.index_near(0.0)), model.basis);
  return rep;
}

}  // namespace kgscat
