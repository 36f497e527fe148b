#pragma once

#include <filesystem>
#include <string>

#include "kgscat/evolution.hpp"

namespace kgscat {

struct SamplesSpec {
  double from = 5.0, to = 40.0;
  int count = 12;
};

struct Config {
  std::string scenario = "scenario";
  int K = 32;
  double L = 2.0 * pi;
  double t_min = -8.0, t_max = 8.0;
  int n_nodes = 201;

  Coefficient c, b, h, V;

  int riccati_n_max = 4;
  double riccati_tol = 0.0;
  double gap_floor = 0.1;

  std::string evolution_method = "adaptive";
  double rtol = 1e-9;
  double atol = 1e-12;
  double dt_fixed = 1e-3;

  std::string direction = "out";
  SamplesSpec samples;
  int mode_n_max = 5;
  bool allow_mode_path = true;

  double wp_k0 = 16.0;
  double wp_sigma = 0.3;
  int wp_sign = 1;
  double wp_t_launch = -4.0;
  double wp_t_final = 4.0;

  double tol_scale = 1.0;
  std::vector<std::string> stages = {"reduce", "powers",  "riccati",    "frame",
                                     "evolve", "state",   "microlocal", "report"};
  unsigned seed = 1;

  // applied overrides (recorded in the hash)
  int k_override = 0;

  SpacetimeSpec spacetime() const;
  EvolutionOptions evolution_options() const;
  TimeGrid time_grid() const { return make_grid(t_min, t_max, n_nodes); }
  ModeBasis mode_basis() const { return make_basis(k_override > 0 ? k_override : K, L); }
};

Config parse_config(const std::string& json_text);
Config load_config(const std::filesystem::path& file);
std::string canonical_dump(const Config& cfg);
// content hash of the canonical dump (+ code version), hex
std::string config_hash(const Config& cfg);

}  // namespace kgscat
