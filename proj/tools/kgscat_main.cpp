#include <CLI11.hpp>
#include <iostream>

#include "kgscat/pipeline.hpp"
#include "kgscat/version.hpp"

using namespace kgscat;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::string stages;
  unsigned seed = 0;
  bool seed_set = false;
  int k_override = 0;
  double tol_scale = 0;
};

void add_common(CLI::App* app, CommonArgs& args) {
  app->add_option("--config", args.config_path, "scenario configuration (JSON)")->required();
  app->add_option("--out", args.out_dir, "output directory");
  app->add_option("--stages", args.stages, "comma-separated stage list override");
  app->add_option("--seed", args.seed, "random seed override")->each([&](const std::string&) {
    args.seed_set = true;
  });
  app->add_option("--k-override", args.k_override, "override the mode cutoff K");
  app->add_option("--tol-scale", args.tol_scale, "scale all tolerances");
}

Config make_config(const CommonArgs& args) {
  Config cfg = load_config(args.config_path);
  if (args.seed_set) cfg.seed = args.seed;
  if (args.k_override > 0) cfg.k_override = args.k_override;
  if (args.tol_scale > 0) cfg.tol_scale = args.tol_scale;
  return cfg;
}

std::vector<std::string> split_stages(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else
      cur.push_back(c);
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

int run_stages(const CommonArgs& args, std::vector<std::string> stages) {
  Config cfg = make_config(args);
  if (!args.stages.empty()) stages = split_stages(args.stages);
  Pipeline p(cfg, args.out_dir);
  return p.run(stages);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("kgscat - scattering-state covariances for the Klein-Gordon "
                           "equation on the circle (") +
               version_string + ")"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string which = "out";
  std::string direction = "out";
  std::string samples;

  auto* run = app.add_subcommand("run", "run the configured stages end to end");
  add_common(run, args);

  auto* reduce = app.add_subcommand("reduce", "shift flow + conformal reduction to the model");
  add_common(reduce, args);
  auto* ricc = app.add_subcommand("riccati", "solve the operator Riccati equation");
  add_common(ricc, args);
  auto* fr = app.add_subcommand("frame", "build and check the diagonalization frame");
  add_common(fr, args);
  auto* ev = app.add_subcommand("evolve", "Cauchy evolution conservation checks");
  add_common(ev, args);

  auto* st = app.add_subcommand("state", "construct covariances");
  add_common(st, args);
  st->add_option("--which", which, "vac | ref | in | out");

  auto* cv = app.add_subcommand("converge", "scattering convergence trace");
  add_common(cv, args);
  cv->add_option("--direction", direction, "out | in");
  cv->add_option("--samples", samples, "from:to:count geometric sample ladder");

  auto* wp = app.add_subcommand("wavepacket", "wavepacket propagation test");
  add_common(wp, args);
  auto* va = app.add_subcommand("validate", "validate configured state covariances");
  add_common(va, args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_stages(args, Config{}.stages);
    if (reduce->parsed()) return run_stages(args, {"reduce", "report"});
    if (ricc->parsed()) return run_stages(args, {"reduce", "riccati", "report"});
    if (fr->parsed()) return run_stages(args, {"reduce", "riccati", "frame", "report"});
    if (ev->parsed()) return run_stages(args, {"reduce", "evolve", "report"});
    if (st->parsed()) {
      Config cfg = make_config(args);
      Pipeline p(cfg, args.out_dir);
      int rc = p.run({"reduce"});
      if (rc) return rc;
      try {
        p.stage_state(which);
        p.stage_report();
      } catch (const Error& e) {
        std::cerr << "kgscat: state: " << e.what() << "\n";
        return 1;
      }
      return 0;
    }
    if (cv->parsed()) {
      Config cfg = make_config(args);
      cfg.direction = direction;
      if (!samples.empty()) {
        double from, to;
        int count;
        if (std::sscanf(samples.c_str(), "%lf:%lf:%d", &from, &to, &count) != 3) {
          std::cerr << "kgscat: --samples wants from:to:count\n";
          return 1;
        }
        cfg.samples = {from, to, count};
      }
      Pipeline p(cfg, args.out_dir);
      return p.run({"converge", "report"});
    }
    if (wp->parsed()) return run_stages(args, {"reduce", "riccati", "frame", "microlocal",
                                               "report"});
    if (va->parsed()) return run_stages(args, {"reduce", "riccati", "frame", "state", "report"});
  } catch (const Error& e) {
    std::cerr << "kgscat: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "kgscat: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
