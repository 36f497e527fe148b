#include "kgscat/pipeline.hpp"

#include <fstream>
#include <iostream>
#include <random>

#include <json.hpp>

#include "kgscat/version.hpp"

namespace kgscat {

using nlohmann::json;

struct Pipeline::ReportDoc {
  json j;
  std::ofstream log;
};

namespace {

json fit_json(const DecayFit& f) {
  json j;
  j["exponent"] = std::isfinite(f.exponent) ? f.exponent : 1e9;
  j["prefactor"] = f.prefactor;
  j["r_squared"] = f.r_squared;
  j["exact"] = f.exact;
  j["sentinel_inf"] = f.sentinel_inf;
  return j;
}

json smoothing_json(const SmoothingReport& s) {
  json j;
  j["s_m"] = s.s_m;
  j["entry_fit"] = fit_json(s.entry_fit);
  j["numerically_smoothing"] = s.numerically_smoothing;
  return j;
}

void dump_matrix_csv(const std::filesystem::path& file, const Mat& m) {
  std::ofstream os(file);
  os.precision(17);
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      if (c) os << ",";
      os << m(r, c).real() << "," << m(r, c).imag();
    }
    os << "\n";
  }
}

}  // namespace

Pipeline::Pipeline(Config cfg, std::filesystem::path out_dir)
    : cfg_(std::move(cfg)), out_(std::move(out_dir)) {
  hash_ = config_hash(cfg_);
  cache_ = Cache(out_, hash_);
  std::filesystem::create_directories(out_);
  doc_ = std::make_shared<ReportDoc>();
  doc_->log.open(out_ / "run.log", std::ios::app);
  doc_->j["version"] = version_string;
  doc_->j["config_hash"] = hash_;
  doc_->j["scenario"] = cfg_.scenario;
  doc_->j["seed"] = cfg_.seed;
  doc_->j["tolerances"] = {{"rtol", cfg_.rtol}, {"atol", cfg_.atol},
                           {"tol_scale", cfg_.tol_scale}};
  doc_->j["states"] = json::array();
  doc_->j["stages_run"] = json::array();
}

void Pipeline::log(const std::string& line) { doc_->log << line << "\n"; }

const ShiftFlow& Pipeline::flow() {
  if (!flow_) {
    if (!basis_) basis_ = cfg_.mode_basis();
    if (!grid_) grid_ = cfg_.time_grid();
    if (!spec_) spec_ = cfg_.spacetime();
    flow_ = flow_of_shift(*spec_, *grid_, *basis_);
  }
  return *flow_;
}

const ModelCoefficients& Pipeline::model() {
  if (!model_) {
    if (!basis_) basis_ = cfg_.mode_basis();
    if (!grid_) grid_ = cfg_.time_grid();
    if (!spec_) spec_ = cfg_.spacetime();
    ModelCoefficients mc;
    if (cache_.load_model(mc)) {
      log("reduce: loaded cached model");
      model_ = std::move(mc);
    } else {
      log("reduce: building model");
      model_ = reduce_to_model(*spec_, flow(), *basis_, *grid_);
      cache_.store_model(*model_);
    }
  }
  return *model_;
}

const RiccatiSolution& Pipeline::riccati() {
  if (!riccati_) {
    const ModelCoefficients& mc = model();
    RiccatiSolution sol;
    if (cache_.load_riccati(sol, mc.basis)) {
      log("riccati: loaded cached solution");
      riccati_ = std::move(sol);
    } else {
      log("riccati: iterating");
      RiccatiOptions opts;
      opts.n_max = cfg_.riccati_n_max;
      opts.tol = cfg_.riccati_tol;
      opts.gap_floor = cfg_.gap_floor;
      riccati_ = riccati_iterate(mc, opts);
      enforce_gap(*riccati_, mc, cfg_.gap_floor);
      riccati_residual(*riccati_, mc);
      cache_.store_riccati(*riccati_);
    }
  }
  return *riccati_;
}

const DiagFrame& Pipeline::frame() {
  if (!frame_) frame_ = build_frame(riccati(), model());
  return *frame_;
}

void Pipeline::stage_reduce() {
  const ModelCoefficients& mc = model();
  json j;
  j["mass_floor_sq"] = mc.mass_floor_sq;
  j["delta_rate"] = mc.delta_rate;
  j["mu"] = mc.mu;
  j["mu_prime"] = mc.mu_prime;
  j["scalar_damping"] = mc.scalar_damping;
  j["flow_trivial"] = flow().trivial;
  if (mc.grid.t_max >= 10.0) {
    TdReport td = verify_td_decay(mc, 5.0, std::min(40.0, mc.grid.t_max - 1.0));
    j["td"] = {{"exact", td.exact},
               {"a_rate_ok", td.a_rate_ok},
               {"r_rate_ok", td.r_rate_ok},
               {"a_out", fit_json(td.fits["a_out"])},
               {"a_in", fit_json(td.fits["a_in"])},
               {"r", fit_json(td.fits["r"])}};
  }
  doc_->j["reduce"] = j;
}

void Pipeline::stage_powers() {
  const ModelCoefficients& mc = model();
  Weight W = mc.weight_out();
  Mat s1 = sqrt_op(mc.a_out, W);
  Mat s2 = frac_power_quadrature(mc.a_out, W, 0.5, 128);
  Mat q4 = frac_power_quadrature(mc.a_out, W, 0.25, 128);
  json j;
  j["sqrt_vs_quadrature"] = op_norm(s1 - s2) / std::max(1.0, op_norm(s1));
  j["quarter_power_composition"] = op_norm(q4 * q4 * q4 * q4 - mc.a_out) / op_norm(mc.a_out);
  doc_->j["powers"] = j;
}

void Pipeline::stage_riccati() {
  const RiccatiSolution& sol = riccati();
  RiccatiSolution& mut = *riccati_;
  ResidualReport rep = riccati_residual(mut, model(), 5.0, std::min(40.0, cfg_.t_max - 1.0));
  json j;
  j["n_iter"] = sol.n_iter;
  j["increment_norms"] = sol.increment_norms;
  json fits = json::array();
  for (const auto& f : sol.increment_fits) fits.push_back(fit_json(f));
  j["increment_entry_fits"] = fits;
  j["clamp_activated"] = sol.clamp_activated;
  j["residual_time_decay"] = fit_json(rep.time_decay);
  j["residual_smoothing"] = smoothing_json(rep.smoothing);
  doc_->j["riccati"] = j;
}

void Pipeline::stage_frame() {
  const DiagFrame& f = frame();
  json j;
  j["symplectic_frame_residual"] = check_symplectic_frame(f, model());
  if (model().basis.N * model().grid.n_nodes <= 70 * 600)
    j["factorization_probe"] = check_factorization(riccati(), model(), 3, cfg_.seed);
  doc_->j["frame"] = j;
}

void Pipeline::stage_evolve() {
  const ModelCoefficients& mc = model();
  ModelGenerator gen(mc);
  EvolutionOptions opts = cfg_.evolution_options();
  std::mt19937_64 rng(cfg_.seed);
  double lo = std::max(mc.grid.t_min, -8.0), hi = std::min(mc.grid.t_max, 8.0);
  std::uniform_real_distribution<double> unif(lo, hi);
  Mat q = q_matrix(mc.basis.N);
  double worst_symp = 0, worst_group = 0;
  int pairs = 5;
  for (int p = 0; p < pairs; ++p) {
    double t = unif(rng), s = unif(rng), m = unif(rng);
    Mat Uts = evolve(gen, t, s, opts);
    worst_symp = std::max(worst_symp,
                          check_symplectic(Uts, q, mc.weight_at(mc.grid.index_near(t)),
                                           mc.weight_at(mc.grid.index_near(s))));
    Mat Utm = evolve(gen, t, m, opts);
    Mat Ums = evolve(gen, m, s, opts);
    worst_group = std::max(worst_group, op_norm(Utm * Ums - Uts) / op_norm(Uts));
  }
  json j;
  j["symplectic_residual"] = worst_symp;
  j["group_law_residual"] = worst_group;
  doc_->j["evolve"] = j;
}

void Pipeline::state_entry(const Covariances& cov, const StateReport& sr,
                           const ConvergenceTrace* trace, const HadamardReport* had) {
  json e;
  e["tag"] = tag_name(cov.tag);
  e["t_anchor"] = cov.t_anchor;
  e["residuals"] = {{"complementarity", sr.complementarity},
                    {"idempotency", std::max(sr.idempotency_plus, sr.idempotency_minus)},
                    {"min_eig_lambda_plus", sr.min_eig_lambda_plus},
                    {"min_eig_lambda_minus", sr.min_eig_lambda_minus}};
  e["pass"] = sr.pass;
  if (trace) {
    e["convergence"] = {{"gamma", std::isfinite(trace->fit.exponent) ? trace->fit.exponent : 1e9},
                        {"r_squared", trace->fit.r_squared},
                        {"samples", trace->times.size()},
                        {"tail_fraction", trace->tail_fraction},
                        {"boundary_term_norm", trace->boundary_term_norm},
                        {"route_discrepancy", trace->route_discrepancy}};
  }
  if (had) {
    json p = json::array();
    for (const auto& b : had->blocks)
      p.push_back(std::isfinite(b.entry_fit.exponent) ? b.entry_fit.exponent : 1e9);
    e["smoothing"] = {{"p_per_block", p},
                      {"window", {had->blocks[0].entry_fit.window_begin,
                                  had->blocks[0].entry_fit.window_end - 1}},
                      {"pass", had->pass},
                      {"used_precise_difference", had->used_precise_difference}};
  }
  doc_->j["states"].push_back(e);
}

void Pipeline::stage_state(const std::string& which) {
  const ModelCoefficients& mc = model();
  const DiagFrame& f = frame();
  int i0 = mc.grid.index_near(0.0);
  const Weight& W0 = mc.weight_at(i0);
  double tols = cfg_.tol_scale;

  if (which.empty() || which == "vac") {
    Covariances vac = vacuum_covariances(cfg_.direction == "in" ? mc.a_in : mc.a_out, mc.basis,
                                         cfg_.direction == "in" ? mc.weight_in()
                                                                : mc.weight_out());
    StateReport sr = validate_state(vac, mc.basis,
                                    cfg_.direction == "in" ? mc.weight_in() : mc.weight_out(),
                                    1e-8 * tols, 1e-8 * tols, 1e-8 * tols);
    state_entry(vac, sr, nullptr, nullptr);
  }
  if (which.empty() || which == "ref" || which == "out" || which == "in") {
    ref_cov_ = reference_covariances(f, mc, 0.0);
    StateReport sr = validate_state(*ref_cov_, mc.basis, W0, 1e-8 * tols, 1e-8 * tols, 1e-8 * tols);
    if (which.empty() || which == "ref") state_entry(*ref_cov_, sr, nullptr, nullptr);
  }
  if (which.empty() || which == "out" || which == "in") {
    ScatteringOptions sopts;
    sopts.out_direction = which == "in" ? false : cfg_.direction != "in";
    sopts.sample_times = geometric_samples(mc.grid, cfg_.samples.from, cfg_.samples.to,
                                           cfg_.samples.count, !sopts.out_direction);
    sopts.rtol = cfg_.rtol * tols;
    sopts.atol = cfg_.atol * tols;
    sopts.mode_n_max = cfg_.mode_n_max;
    sopts.gap_floor = cfg_.gap_floor / 2.0;
    sopts.allow_mode_path = cfg_.allow_mode_path;
    ScatteringResult res = scattering_covariances(mc, f, sopts);
    scat_cov_ = res.cov;
    scat_trace_ = res.trace;
    log(std::string("state: scattering via ") + (res.used_mode_path ? "mode" : "dense") +
        " path");
    StateReport sr = validate_state(res.cov, mc.basis, W0, 1e-6 * tols, 1e-6 * tols, 1e-6 * tols);
    HadamardReport had = hadamard_difference(res.cov, *ref_cov_, mc.basis);
    state_entry(res.cov, sr, &res.trace, &had);

    std::ofstream trace_csv(out_ / "trace.csv");
    trace_csv.precision(17);
    trace_csv << "t,increment\n";
    for (size_t k = 0; k + 1 < res.trace.times.size(); ++k)
      trace_csv << res.trace.times[k + 1] << "," << res.trace.increments[k] << "\n";
    dump_matrix_csv(out_ / "c_plus.csv", res.cov.c_plus);
  }
}

void Pipeline::stage_converge() { stage_state(cfg_.direction); }

void Pipeline::stage_microlocal() {
  const ModelCoefficients& mc = model();
  const DiagFrame& f = frame();
  PhasePoint p0{mc.basis.L / 2.0, cfg_.wp_k0};
  Wavepacket wp = make_wavepacket(mc.basis, f, mc, p0, cfg_.wp_sigma, cfg_.wp_sign,
                                  cfg_.wp_t_launch);
  PropagationReport rep =
      propagation_test(mc, f, wp, cfg_.wp_t_final, cfg_.evolution_options());
  json j;
  j["leakage_launch"] = wp.leakage;
  j["leakage_final"] = rep.leakage_final;
  j["dx"] = rep.dx;
  j["dk"] = rep.dk;
  j["spread"] = rep.spread;
  j["pass"] = rep.pass;
  doc_->j["microlocal"] = j;

  std::ofstream csv(out_ / "wavepacket.csv");
  csv.precision(17);
  csv << "t,x_center,k_mean,leakage\n";
  for (const auto& row : rep.track)
    csv << row[0] << "," << row[1] << "," << row[2] << "," << row[3] << "\n";
}

void Pipeline::stage_report() {
  std::ofstream os(out_ / "report.json");
  os << doc_->j.dump(2) << "\n";
}

int Pipeline::run(std::vector<std::string> stages) {
  static const std::vector<std::string> order = {"reduce", "powers",  "riccati",    "frame",
                                                 "evolve", "state",   "converge",   "microlocal",
                                                 "report"};
  std::string current = "(setup)";
  try {
    for (const auto& st : order) {
      if (std::find(stages.begin(), stages.end(), st) == stages.end()) continue;
      current = st;
      log("stage: " + st);
      doc_->j["stages_run"].push_back(st);
      if (st == "reduce") stage_reduce();
      else if (st == "powers") stage_powers();
      else if (st == "riccati") stage_riccati();
      else if (st == "frame") stage_frame();
      else if (st == "evolve") stage_evolve();
      else if (st == "state") stage_state();
      else if (st == "converge") stage_converge();
      else if (st == "microlocal") stage_microlocal();
      else if (st == "report") stage_report();
      else fail(errc::invalid_config, "unknown stage '" + st + "'");
    }
  } catch (const Error& e) {
    log("ERROR at stage " + current + ": " + e.what());
    std::cerr << "kgscat: stage " << current << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    log("ERROR at stage " + current + ": " + e.what());
    std::cerr << "kgscat: stage " << current << ": " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace kgscat
