#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "bohm/spinor.hpp"

namespace bohm {

struct ValidationCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool allPassed() const;
  nlohmann::json toJson() const;
};

/// Runs the invariant sweeps of every module with fixed seeds. The algebra
/// argument exists so a deliberately broken algebra can be checked.
ValidationReport runValidation(const DiracAlgebra& algebra = DiracAlgebra::standard(),
                               std::uint64_t seed = 20240611, unsigned threads = 0);

} // namespace bohm
