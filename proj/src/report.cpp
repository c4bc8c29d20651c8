#include "ggk/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ggk {

CheckReport& CheckReport::finish() {
  bool finite = true;
  double worst = 0.0;
  for (double r : residuals) {
    if (!std::isfinite(r)) finite = false;
    else worst = std::max(worst, r);
  }
  if (residuals.empty()) finite = false;
  max_residual = finite ? worst : std::numeric_limits<double>::infinity();
  if (comparison == ">=") {
    max_residual = residuals.empty() ? 0.0 : worst;
    pass = finite && max_residual >= tolerance;
  } else {
    pass = finite && max_residual <= tolerance;
  }
  return *this;
}

CheckReport make_report(const std::string& id, const std::string& anchor, double tolerance,
                        const std::string& comparison) {
  CheckReport r;
  r.id = id;
  r.anchor = anchor;
  r.tolerance = tolerance;
  r.comparison = comparison;
  return r;
}

nlohmann::ordered_json to_json(const CheckReport& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["anchor"] = r.anchor;
  j["comparison"] = r.comparison;
  j["max_residual"] = std::isfinite(r.max_residual) ? nlohmann::ordered_json(r.max_residual)
                                                    : nlohmann::ordered_json("inf");
  j["tolerance"] = r.tolerance;
  j["pass"] = r.pass;
  j["samples"] = r.residuals.size();
  j["seed"] = r.seed;
  auto arr = nlohmann::ordered_json::array();
  for (double x : r.residuals) arr.push_back(std::isfinite(x) ? nlohmann::ordered_json(x) : nlohmann::ordered_json("nan"));
  j["residuals"] = arr;
  if (!r.note.empty()) j["note"] = r.note;
  j["wall_time"] = r.wall_time;
  return j;
}

}  // namespace ggk
