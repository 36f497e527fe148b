#include "kgscat/cache.hpp"

#include <fstream>

namespace kgscat {

namespace {

constexpr uint32_t kMagic = 0x4b475331;  // "KGS1"

void put_u32(std::ostream& os, uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void put_u64(std::ostream& os, uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }
void put_d(std::ostream& os, double v) { os.write(reinterpret_cast<const char*>(&v), 8); }

uint32_t get_u32(std::istream& is) {
  uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
uint64_t get_u64(std::istream& is) {
  uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 8);
  return v;
}
double get_d(std::istream& is) {
  double v = 0;
  is.read(reinterpret_cast<char*>(&v), 8);
  return v;
}

void put_rvec(std::ostream& os, const RVec& v) {
  put_u64(os, v.size());
  os.write(reinterpret_cast<const char*>(v.data()), v.size() * 8);
}
RVec get_rvec(std::istream& is) {
  RVec v(get_u64(is));
  is.read(reinterpret_cast<char*>(v.data()), v.size() * 8);
  return v;
}

void put_mat(std::ostream& os, const Mat& m) {
  put_u64(os, m.rows());
  put_u64(os, m.cols());
  os.write(reinterpret_cast<const char*>(m.data()), m.size() * 16);
}
Mat get_mat(std::istream& is) {
  uint64_t r = get_u64(is), c = get_u64(is);
  Mat m(r, c);
  is.read(reinterpret_cast<char*>(m.data()), m.size() * 16);
  return m;
}

void put_grid(std::ostream& os, const TimeGrid& g) {
  put_d(os, g.t_min);
  put_d(os, g.t_max);
  put_u64(os, g.n_nodes);
}
TimeGrid get_grid(std::istream& is) {
  double lo = get_d(is), hi = get_d(is);
  int n = int(get_u64(is));
  return make_grid(lo, hi, n);
}

void put_family(std::ostream& os, const OpFamily& f) {
  put_grid(os, f.grid);
  put_u64(os, f.mats.size());
  for (const auto& m : f.mats) put_mat(os, m);
}
OpFamily get_family(std::istream& is) {
  OpFamily f;
  f.grid = get_grid(is);
  f.mats.resize(get_u64(is));
  for (auto& m : f.mats) m = get_mat(is);
  return f;
}

}  // namespace

Cache::Cache(std::filesystem::path out_dir, std::string hash)
    : dir_(out_dir / "cache" / hash) {}

bool Cache::load_model(ModelCoefficients& mc) const {
  std::ifstream is(dir_ / "model.bin", std::ios::binary);
  if (!is.good()) return false;
  if (get_u32(is) != kMagic) return false;
  int K = int(get_u64(is));
  double L = get_d(is);
  mc.basis = make_basis(K, L);
  mc.grid = get_grid(is);
  int n = mc.grid.n_nodes;
  auto get_jets = [&](std::vector<std::array<RVec, kJetDepth + 1>>& arr) {
    arr.resize(n);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k <= kJetDepth; ++k) arr[i][k] = get_rvec(is);
  };
  get_jets(mc.ghalf_inv);
  get_jets(mc.pot);
  get_jets(mc.dens);
  get_jets(mc.damp);
  mc.ghalf_inv_out = get_rvec(is);
  mc.pot_out = get_rvec(is);
  mc.dens_out = get_rvec(is);
  mc.ghalf_inv_in = get_rvec(is);
  mc.pot_in = get_rvec(is);
  mc.dens_in = get_rvec(is);
  mc.a_out = get_mat(is);
  mc.a_in = get_mat(is);
  mc.mass_floor_sq = get_d(is);
  mc.delta_rate = get_d(is);
  mc.mu = get_d(is);
  mc.mu_prime = get_d(is);
  mc.scalar_damping = get_u32(is) != 0;
  return is.good();
}

void Cache::store_model(const ModelCoefficients& mc) const {
  std::filesystem::create_directories(dir_);
  std::ofstream os(dir_ / "model.bin", std::ios::binary);
  put_u32(os, kMagic);
  put_u64(os, mc.basis.K);
  put_d(os, mc.basis.L);
  put_grid(os, mc.grid);
  auto put_jets = [&](const std::vector<std::array<RVec, kJetDepth + 1>>& arr) {
    for (const auto& node : arr)
      for (const auto& v : node) put_rvec(os, v);
  };
  put_jets(mc.ghalf_inv);
  put_jets(mc.pot);
  put_jets(mc.dens);
  put_jets(mc.damp);
  put_rvec(os, mc.ghalf_inv_out);
  put_rvec(os, mc.pot_out);
  put_rvec(os, mc.dens_out);
  put_rvec(os, mc.ghalf_inv_in);
  put_rvec(os, mc.pot_in);
  put_rvec(os, mc.dens_in);
  put_mat(os, mc.a_out);
  put_mat(os, mc.a_in);
  put_d(os, mc.mass_floor_sq);
  put_d(os, mc.delta_rate);
  put_d(os, mc.mu);
  put_d(os, mc.mu_prime);
  put_u32(os, mc.scalar_damping ? 1 : 0);
}

bool Cache::load_riccati(RiccatiSolution& sol, const ModeBasis& basis) const {
  std::ifstream is(dir_ / "riccati.bin", std::ios::binary);
  if (!is.good()) return false;
  if (get_u32(is) != kMagic) return false;
  sol.basis = basis;
  sol.eps = get_family(is);
  sol.eps_inv = get_family(is);
  sol.b = get_family(is);
  sol.b_minus = get_family(is);
  sol.res_plus = get_family(is);
  sol.res_minus = get_family(is);
  sol.grid = sol.b.grid;
  sol.n_iter = int(get_u64(is));
  sol.gap_floor = get_d(is);
  sol.clamp_activated = get_u32(is) != 0;
  uint64_t n = get_u64(is);
  sol.increment_norms.resize(n);
  for (auto& v : sol.increment_norms) v = get_d(is);
  return is.good();
}

void Cache::store_riccati(const RiccatiSolution& sol) const {
  std::filesystem::create_directories(dir_);
  std::ofstream os(dir_ / "riccati.bin", std::ios::binary);
  put_u32(os, kMagic);
  put_family(os, sol.eps);
  put_family(os, sol.eps_inv);
  put_family(os, sol.b);
  put_family(os, sol.b_minus);
  put_family(os, sol.res_plus);
  put_family(os, sol.res_minus);
  put_u64(os, sol.n_iter);
  put_d(os, sol.gap_floor);
  put_u32(os, sol.clamp_activated ? 1 : 0);
  put_u64(os, sol.increment_norms.size());
  for (double v : sol.increment_norms) put_d(os, v);
}

}  // namespace kgscat
