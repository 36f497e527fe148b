#pragma once

#include "kgscat/cache.hpp"
#include "kgscat/config.hpp"
#include "kgscat/microlocal.hpp"

namespace kgscat {

// Configuration-driven orchestration of the pipeline stages with
// content-addressed caching of the expensive artifacts. Produces report.json
// (schema stable, bitwise-reproducible for fixed config + seed), CSV traces,
// and run.log.
class Pipeline {
 public:
  Pipeline(Config cfg, std::filesystem::path out_dir);

  // returns a process exit code; failures are logged with the failing stage
  int run(std::vector<std::string> stages);
  int run() { return run(cfg_.stages); }

  // stage entry points (dependencies rebuilt on demand, cache-backed)
  void stage_reduce();
  void stage_powers();
  void stage_riccati();
  void stage_frame();
  void stage_evolve();
  void stage_state(const std::string& which = "");  // "", vac, ref, in, out
  void stage_converge();
  void stage_microlocal();
  void stage_report();

  const std::string& hash() const { return hash_; }
  const Config& config() const { return cfg_; }

 private:
  const ModelCoefficients& model();
  const RiccatiSolution& riccati();
  const DiagFrame& frame();
  const ShiftFlow& flow();
  void log(const std::string& line);
  void state_entry(const Covariances& cov, const StateReport& sr, const ConvergenceTrace* trace,
                   const HadamardReport* had);

  Config cfg_;
  std::filesystem::path out_;
  std::string hash_;
  Cache cache_;

  std::optional<ModeBasis> basis_;
  std::optional<TimeGrid> grid_;
  std::optional<SpacetimeSpec> spec_;
  std::optional<ShiftFlow> flow_;
  std::optional<ModelCoefficients> model_;
  std::optional<RiccatiSolution> riccati_;
  std::optional<DiagFrame> frame_;
  std::optional<Covariances> ref_cov_;
  std::optional<Covariances> scat_cov_;
  std::optional<ConvergenceTrace> scat_trace_;

 public:
  // report document (nlohmann::json kept out of this header)
  struct ReportDoc;
  std::shared_ptr<ReportDoc> doc_;
};

}  // namespace kgscat
