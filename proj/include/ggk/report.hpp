#pragma once

// Machine-readable outcome of one verification.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace ggk {

struct CheckReport {
  std::string id;
  std::string anchor;
  // "<=" : pass iff max_residual <= tolerance (residual checks).
  // ">=" : pass iff max_residual >= tolerance (lower-bound checks, where the
  //        recorded quantity must stay away from zero).
  std::string comparison = "<=";
  std::vector<double> residuals;
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  uint64_t seed = 0;
  std::string note;
  double wall_time = 0.0;  // kept at 0 so reports are reproducible

  void add(double r) { residuals.push_back(r); }
  // Computes max_residual and pass from the residual list.
  CheckReport& finish();
};

CheckReport make_report(const std::string& id, const std::string& anchor, double tolerance,
                        const std::string& comparison = "<=");

nlohmann::ordered_json to_json(const CheckReport& r);

}  // namespace ggk
