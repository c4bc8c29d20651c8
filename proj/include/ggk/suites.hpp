#pragma once

// Verification suites over catalog triples and the report file they produce.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "ggk/profile.hpp"
#include "ggk/report.hpp"
#include "ggk/triple.hpp"

namespace ggk {

class SuiteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SuiteParams {
  int samples = 100;
  uint64_t seed = 1;
  double tol = 0.0;  // > 0 replaces the tolerance of every residual check
  int geodesics = 20;
  int directions = 20;
};

// Kahler, holomorphy, Killing and geodesic-gradient predicates plus the
// pointwise local identities.
std::vector<CheckReport> suite_predicates(const Triple& t, const SuiteParams& p);
// Orthogonal S- and J-invariant splitting V + H^+ + H^- + H with constant
// dimensions matching the critical manifold data.
std::vector<CheckReport> suite_decomposition(const Triple& t, const SuiteParams& p);
// Fields commuting with v along normal geodesics: g(w, w') affine in tau and
// the endpoint laws.
std::vector<CheckReport> suite_affine(const Triple& t, const SuiteParams& p);
// Kernels of Z(xi, xi) on a critical manifold and the case (a)/(b) verdict.
std::vector<CheckReport> suite_dichotomy(const Triple& t, const SuiteParams& p);
// H-component of brackets of sections of V + H^+ + H^-.
std::vector<CheckReport> suite_bracket(const Triple& t, const SuiteParams& p);
// Bundle model identities; for CP triples the identities obtained through Phi.
std::vector<CheckReport> suite_bundle(const Triple& t, const SuiteParams& p);
// pi^-/+ o Phi on the normal sphere at a critical point.
std::vector<CheckReport> suite_immersion(const Triple& t, const SuiteParams& p);
// Integer identities between m, d_+/-, k_+/- and q.
std::vector<CheckReport> dimension_audit(const Triple& t);
// Profile ODE data and the modification towards a second profile.
std::vector<CheckReport> suite_profile(const Triple& t, const SuiteParams& p);
// Flag chains between random flag pairs (W' in W, dim W = k) in C^n.
std::vector<CheckReport> suite_flags(const SuiteParams& p, int n, int k, int pairs);

// Names accepted by run_named_suite, in the order used by "all".
const std::vector<std::string>& suite_names();
// True when the suite applies to the triple.
bool suite_applies(const std::string& name, const Triple& t);
std::vector<CheckReport> run_named_suite(const std::string& name, const Triple& t, const SuiteParams& p);

struct SuiteConfig {
  std::string spec;
  std::string profile_path;  // empty: Fubini-Study profile on [0, 1] with a = 1
  std::string suite = "all";
  SuiteParams params;
};

// Builds the report {meta: {spec, seed, versions}, checks: [...]}.  Throws
// before producing anything when the spec, profile or suite name is invalid.
nlohmann::ordered_json run_suite(const SuiteConfig& c);
bool report_passed(const nlohmann::ordered_json& report);

extern const char* const kVersion;

}  // namespace ggk
