#pragma once

#include <filesystem>

#include "kgscat/riccati.hpp"

namespace kgscat {

// Content-addressed stage artifacts under <out>/cache/<config-hash>/.
// A missing or corrupt entry just means "rebuild".
class Cache {
 public:
  Cache() = default;
  Cache(std::filesystem::path out_dir, std::string hash);

  const std::filesystem::path& dir() const { return dir_; }

  bool load_model(ModelCoefficients& mc) const;
  void store_model(const ModelCoefficients& mc) const;
  bool load_riccati(RiccatiSolution& sol, const ModeBasis& basis) const;
  void store_riccati(const RiccatiSolution& sol) const;

 private:
  std::filesystem::path dir_;
};

}  // namespace kgscat
