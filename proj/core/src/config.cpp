#include "kgscat/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "kgscat/version.hpp"

namespace kgscat {

using nlohmann::json;

namespace {

[[noreturn]] void bad_field(const std::string& path, const std::string& what) {
  fail(errc::invalid_config, "config field '" + path + "': " + what);
}

TimeProfile parse_profile(const json& j, const std::string& path) {
  TimeProfile p;
  if (!j.is_object()) bad_field(path, "expected an object with a 'kind'");
  std::string kind = j.value("kind", "static");
  if (kind == "static")
    p.kind = TimeProfile::Kind::static_one;
  else if (kind == "step") {
    p.kind = TimeProfile::Kind::step;
    p.left = j.value("left", 0.0);
    p.right = j.value("right", 1.0);
  } else if (kind == "inverse_power") {
    p.kind = TimeProfile::Kind::inverse_power;
    p.delta = j.value("delta", 1.0);
    if (p.delta <= 0) bad_field(path + ".delta", "must be positive");
  } else
    bad_field(path + ".kind", "unknown time profile '" + kind + "'");
  return p;
}

CoeffFactor parse_factor(const json& j, const std::string& path) {
  CoeffFactor f;
  if (!j.is_object() || !j.contains("family")) bad_field(path, "expected {family: ...}");
  std::string fam = j["family"];
  if (fam == "constant") {
    f.family = CoeffFactor::Family::constant;
    f.value = j.value("value", 1.0);
  } else if (fam == "step" || fam == "exp_step") {
    f.family = fam == "step" ? CoeffFactor::Family::step : CoeffFactor::Family::exp_step;
    f.left = j.value("left", 0.0);
    f.right = j.value("right", 1.0);
    f.power = j.value("power", 0.0);
    if (f.power < 0) bad_field(path + ".power", "must be >= 0");
  } else if (fam == "cos_bump") {
    f.family = CoeffFactor::Family::cos_bump;
    f.base = j.value("base", 1.0);
    f.amplitude = j.value("amplitude", 0.0);
    f.mode = j.value("mode", 1);
    if (f.mode < 1) bad_field(path + ".mode", "must be >= 1");
    if (j.contains("time_profile")) f.profile = parse_profile(j["time_profile"], path + ".time_profile");
  } else if (fam == "inverse_power") {
    f.family = CoeffFactor::Family::inverse_power;
    f.base = j.value("base", 1.0);
    f.amplitude = j.value("amplitude", 0.0);
    f.delta = j.value("delta", 1.0);
    if (f.delta <= 0) bad_field(path + ".delta", "must be positive");
  } else
    bad_field(path + ".family", "unknown family '" + fam + "'");
  return f;
}

Coefficient parse_coefficient(const json& j, const std::string& path) {
  Coefficient c;
  if (j.is_number()) {
    CoeffFactor f;
    f.family = CoeffFactor::Family::constant;
    f.value = j.get<double>();
    c.factors.push_back(f);
    return c;
  }
  if (!j.is_array()) bad_field(path, "expected a number or an array of factors");
  for (size_t i = 0; i < j.size(); ++i)
    c.factors.push_back(parse_factor(j[i], path + "[" + std::to_string(i) + "]"));
  if (c.factors.empty()) bad_field(path, "needs at least one factor");
  return c;
}

json profile_json(const TimeProfile& p) {
  json j;
  switch (p.kind) {
    case TimeProfile::Kind::static_one:
      j["kind"] = "static";
      break;
    case TimeProfile::Kind::step:
      j["kind"] = "step";
      j["left"] = p.left;
      j["right"] = p.right;
      break;
    case TimeProfile::Kind::inverse_power:
      j["kind"] = "inverse_power";
      j["delta"] = p.delta;
      break;
  }
  return j;
}

json coefficient_json(const Coefficient& c) {
  json arr = json::array();
  for (const auto& f : c.factors) {
    json j;
    switch (f.family) {
      case CoeffFactor::Family::constant:
        j["family"] = "constant";
        j["value"] = f.value;
        break;
      case CoeffFactor::Family::step:
      case CoeffFactor::Family::exp_step:
        j["family"] = f.family == CoeffFactor::Family::step ? "step" : "exp_step";
        j["left"] = f.left;
        j["right"] = f.right;
        j["power"] = f.power;
        break;
      case CoeffFactor::Family::cos_bump:
        j["family"] = "cos_bump";
        j["base"] = f.base;
        j["amplitude"] = f.amplitude;
        j["mode"] = f.mode;
        j["time_profile"] = profile_json(f.profile);
        break;
      case CoeffFactor::Family::inverse_power:
        j["family"] = "inverse_power";
        j["base"] = f.base;
        j["amplitude"] = f.amplitude;
        j["delta"] = f.delta;
        break;
    }
    arr.push_back(j);
  }
  return arr;
}

}  // namespace

SpacetimeSpec Config::spacetime() const {
  SpacetimeSpec s = SpacetimeSpec::from_coefficients(c, b, h, V);
  s.name = scenario;
  return s;
}

EvolutionOptions Config::evolution_options() const {
  EvolutionOptions o;
  o.method = evolution_method == "rk4" ? EvolutionOptions::Method::rk4_fixed
                                       : EvolutionOptions::Method::adaptive;
  o.rtol = rtol * tol_scale;
  o.atol = atol * tol_scale;
  o.dt_fixed = dt_fixed;
  return o;
}

Config parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(errc::invalid_config, std::string("config parse error: ") + e.what());
  }
  Config cfg;
  cfg.scenario = j.value("scenario", cfg.scenario);
  if (j.contains("basis")) {
    cfg.K = j["basis"].value("K", cfg.K);
    cfg.L = j["basis"].value("L", cfg.L);
  }
  if (cfg.K < 1) bad_field("basis.K", "must be >= 1");
  if (cfg.L <= 0) bad_field("basis.L", "must be positive");
  if (j.contains("grid")) {
    cfg.t_min = j["grid"].value("t_min", cfg.t_min);
    cfg.t_max = j["grid"].value("t_max", cfg.t_max);
    cfg.n_nodes = j["grid"].value("n_nodes", cfg.n_nodes);
  }
  if (cfg.t_min >= cfg.t_max) bad_field("grid", "needs t_min < t_max");
  if (cfg.n_nodes < 9) bad_field("grid.n_nodes", "needs at least 9 nodes");

  if (!j.contains("coefficients")) bad_field("coefficients", "missing");
  const json& co = j["coefficients"];
  cfg.c = parse_coefficient(co.value("c", json(1.0)), "coefficients.c");
  cfg.b = parse_coefficient(co.value("b", json(0.0)), "coefficients.b");
  cfg.h = parse_coefficient(co.value("h", json(1.0)), "coefficients.h");
  cfg.V = parse_coefficient(co.value("V", json(1.0)), "coefficients.V");

  if (j.contains("riccati")) {
    cfg.riccati_n_max = j["riccati"].value("n_max", cfg.riccati_n_max);
    cfg.riccati_tol = j["riccati"].value("tol", cfg.riccati_tol);
    cfg.gap_floor = j["riccati"].value("gap_floor", cfg.gap_floor);
  }
  if (cfg.riccati_n_max < 1) bad_field("riccati.n_max", "must be >= 1");

  if (j.contains("evolution")) {
    cfg.evolution_method = j["evolution"].value("method", cfg.evolution_method);
    cfg.rtol = j["evolution"].value("rtol", cfg.rtol);
    cfg.atol = j["evolution"].value("atol", cfg.atol);
    cfg.dt_fixed = j["evolution"].value("dt_fixed", cfg.dt_fixed);
    if (cfg.evolution_method != "adaptive" && cfg.evolution_method != "rk4")
      bad_field("evolution.method", "must be 'adaptive' or 'rk4'");
  }

  if (j.contains("states")) {
    cfg.direction = j["states"].value("direction", cfg.direction);
    if (cfg.direction != "out" && cfg.direction != "in")
      bad_field("states.direction", "must be 'out' or 'in'");
    if (j["states"].contains("samples")) {
      const json& s = j["states"]["samples"];
      cfg.samples.from = s.value("from", cfg.samples.from);
      cfg.samples.to = s.value("to", cfg.samples.to);
      cfg.samples.count = s.value("count", cfg.samples.count);
    }
    cfg.mode_n_max = j["states"].value("mode_n_max", cfg.mode_n_max);
    cfg.allow_mode_path = j["states"].value("allow_mode_path", cfg.allow_mode_path);
  }

  if (j.contains("microlocal")) {
    const json& m = j["microlocal"];
    cfg.wp_k0 = m.value("k0", cfg.wp_k0);
    cfg.wp_sigma = m.value("sigma", cfg.wp_sigma);
    cfg.wp_sign = m.value("sign", cfg.wp_sign);
    cfg.wp_t_launch = m.value("t_launch", cfg.wp_t_launch);
    cfg.wp_t_final = m.value("t_final", cfg.wp_t_final);
  }

  if (j.contains("stages")) {
    cfg.stages.clear();
    for (const auto& s : j["stages"]) cfg.stages.push_back(s.get<std::string>());
  }
  cfg.seed = j.value("seed", cfg.seed);
  cfg.tol_scale = j.value("tol_scale", cfg.tol_scale);
  return cfg;
}

Config load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  require(in.good(), errc::invalid_config, "cannot open config file " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string canonical_dump(const Config& cfg) {
  json j;
  j["scenario"] = cfg.scenario;
  j["basis"] = {{"K", cfg.K}, {"L", cfg.L}};
  j["grid"] = {{"t_min", cfg.t_min}, {"t_max", cfg.t_max}, {"n_nodes", cfg.n_nodes}};
  j["coefficients"] = {{"c", coefficient_json(cfg.c)},
                       {"b", coefficient_json(cfg.b)},
                       {"h", coefficient_json(cfg.h)},
                       {"V", coefficient_json(cfg.V)}};
  j["riccati"] = {{"n_max", cfg.riccati_n_max}, {"tol", cfg.riccati_tol},
                  {"gap_floor", cfg.gap_floor}};
  j["evolution"] = {{"method", cfg.evolution_method},
                    {"rtol", cfg.rtol},
                    {"atol", cfg.atol},
                    {"dt_fixed", cfg.dt_fixed}};
  j["states"] = {{"direction", cfg.direction},
                 {"samples",
                  {{"from", cfg.samples.from}, {"to", cfg.samples.to},
                   {"count", cfg.samples.count}}},
                 {"mode_n_max", cfg.mode_n_max},
                 {"allow_mode_path", cfg.allow_mode_path}};
  j["microlocal"] = {{"k0", cfg.wp_k0},
                     {"sigma", cfg.wp_sigma},
                     {"sign", cfg.wp_sign},
                     {"t_launch", cfg.wp_t_launch},
                     {"t_final", cfg.wp_t_final}};
  j["stages"] = cfg.stages;
  j["seed"] = cfg.seed;
  j["tol_scale"] = cfg.tol_scale;
  j["k_override"] = cfg.k_override;
  return j.dump();
}

std::string config_hash(const Config& cfg) {
  std::string data = canonical_dump(cfg);
  // FNV-1a, doubled for 128 bits of content address
  auto fnv = [](const std::string& s, uint64_t basis_off) {
    uint64_t h = basis_off;
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    return h;
  };
  uint64_t h1 = fnv(data, 14695981039346656037ULL);
  uint64_t h2 = fnv(data + version_string, 0x9e3779b97f4a7c15ULL);
  char buf[33];
  std::snprintf(buf, sizeof(buf), "%016llx%016llx", (unsigned long long)h1,
                (unsigned long long)h2);
  return std::string(buf);
}

}  // namespace kgscat
