// Acceptance criteria 1-9: one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ggk/suites.hpp"
#include "ggk/verify.hpp"

using namespace ggk;

namespace {

const Profile kFS = fubini_study_profile(0.0, 1.0, 1.0);

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void need(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

const CheckReport* find(const std::vector<CheckReport>& rs, const std::string& id) {
  for (const CheckReport& r : rs)
    if (r.id == id) return &r;
  return nullptr;
}

// Requires the check to exist, pass and stay below bound.
void need_below(Outcome& o, const std::vector<CheckReport>& rs, const std::string& id, double bound,
                const std::string& where) {
  const CheckReport* r = find(rs, id);
  if (!r) return o.need(false, where + " " + id + " missing");
  o.need(r->pass && r->max_residual < bound, where + " " + id + " = " + std::to_string(r->max_residual));
}

void need_above(Outcome& o, const std::vector<CheckReport>& rs, const std::string& id, double bound,
                const std::string& where) {
  const CheckReport* r = find(rs, id);
  if (!r) return o.need(false, where + " " + id + " missing");
  o.need(r->pass && r->max_residual > bound, where + " " + id + " = " + std::to_string(r->max_residual));
}

double worst(const std::vector<CheckReport>& rs, const std::vector<std::string>& ids) {
  double w = 0.0;
  for (const std::string& id : ids)
    if (const CheckReport* r = find(rs, id)) w = std::max(w, r->max_residual);
  return w;
}

SuiteParams params(int samples) {
  SuiteParams p;
  p.samples = samples;
  p.seed = 20240601;
  return p;
}

const std::vector<std::string> kPredicateTriples{"cp:n=2,l=1", "cp:n=3,l=1", "cp:n=3,l=2", "cp:n=4,l=1",
                                                 "cp:n=4,l=2", "cp:n=4,l=3", "gr:n=4,k=2"};

Outcome criterion1() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  double w = 0.0;
  for (const std::string& s : kPredicateTriples) {
    const auto rs = predicate_suite(*make_triple(s, kFS), 100, 1, 1e-6);
    for (const char* id : {"kahler", "holomorphic_v", "killing_u", "geodesic_gradient"}) {
      need_below(o, rs, id, 1e-6, s);
      const CheckReport* r = find(rs, id);
      if (r) o.need(r->residuals.size() == 100, s + " " + id + " sample count");
    }
    w = std::max(w, worst(rs, {"kahler", "holomorphic_v", "killing_u", "geodesic_gradient"}));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.need(secs < 300.0, "runtime " + std::to_string(secs) + " s");
  o.detail << "7 triples x 100 samples, max residual " << w << ", " << secs << " s";
  return o;
}

Outcome criterion2() {
  Outcome o;
  double w = 0.0;
  int checks = 0;
  for (const std::string& s : kPredicateTriples) {
    const auto rs = local_identity_suite(*make_triple(s, kFS), 100, 2, 1e-6);
    for (const CheckReport& r : rs) {
      o.need(r.pass && r.max_residual < 1e-6 && r.residuals.size() == 100, s + " " + r.id);
      w = std::max(w, r.max_residual);
      ++checks;
    }
  }
  o.need(checks > 0, "no local identity checks");
  o.detail << checks << " identity checks, max residual " << w;
  return o;
}

Outcome criterion3() {
  Outcome o;
  const Profile p = fubini_study_profile(0.0, 1.0, 1.0);
  ProfileSolution sol(p, 1, 0.5, 1.0);
  const double dd = std::fabs(sol.delta() - M_PI / std::sqrt(2.0));
  o.need(dd < 1e-8, "delta");
  double rr = 0.0, ff = 0.0;
  for (int i = 1; i < 100; ++i) {
    const double tau = i / 100.0;
    rr = std::max(rr, std::fabs(sol.rho(tau) - std::sqrt((1.0 - tau) / tau)) / std::max(1.0, sol.rho(tau)));
    ff = std::max(ff, std::fabs(sol.fprime_s(tau) - sol.fprime_formula(tau)) / std::max(1.0, sol.fprime_formula(tau)));
  }
  ff = std::max(ff, std::fabs(sol.fprime_formula(1.0 - 1e-9) - sol.fprime_limit()));
  o.need(rr < 1e-7, "rho closed form");
  o.need(ff < 1e-7, "f' formula");
  const auto rs = suite_profile(*make_triple("cp:n=2,l=1", p), params(10));
  for (const char* id : {"profile.validate", "profile_delta", "profile_rho", "profile_fprime"}) need_below(o, rs, id, 1e-7, "suite");
  o.detail << "|delta - pi/sqrt 2| " << dd << ", rho " << rr << ", f' " << ff;
  return o;
}

Outcome criterion4() {
  Outcome o;
  const auto rs = suite_profile(*make_triple("cp:n=2,l=1", kFS), params(10));
  need_below(o, rs, "modification_round_trip", 1e-6, "");
  const CheckReport* g = find(rs, "modification_positivity");
  o.need(g && g->pass && g->max_residual > 0.0, "positivity guards");
  need_below(o, rs, "modification_endpoint_identity", 1e-6, "");
  o.detail << "round trip sup error " << worst(rs, {"modification_round_trip"}) << ", guard margin "
           << (g ? g->max_residual : 0.0);
  return o;
}

Outcome criterion5() {
  Outcome o;
  SuiteParams p = params(20);
  p.geodesics = 20;
  double w = 0.0;
  for (const char* s : {"cp:n=3,l=1", "gr:n=4,k=2"}) {
    const auto rs = suite_affine(*make_triple(s, kFS), p);
    for (const char* id : {"affine_linear", "affine_slope", "affine_ratio", "affine_endpoint_scaling", "affine_endpoint_curvature", "affine_endpoint_derivative"}) {
      need_below(o, rs, id, 1e-5, s);
      const CheckReport* r = find(rs, id);
      if (r) o.need(r->residuals.size() == 20, std::string(s) + " " + id + " geodesic count");
    }
    w = std::max(w, worst(rs, {"affine_linear", "affine_slope", "affine_ratio", "affine_endpoint_scaling", "affine_endpoint_curvature", "affine_endpoint_derivative"}));
  }
  o.detail << "20 normal geodesics per triple, max residual " << w;
  return o;
}

Outcome criterion6() {
  Outcome o;
  SuiteParams p = params(5);
  p.directions = 20;
  for (const char* s : {"cp:n=3,l=1", "cp:n=4,l=2"}) {
    const auto rs = suite_dichotomy(*make_triple(s, kFS), p);
    const CheckReport* c = find(rs, "dichotomy_classification");
    o.need(c && c->note.rfind("case (a)", 0) == 0, std::string(s) + " classification");
    need_below(o, rs, "dichotomy_kernel_spread", 1e-6, s);
    o.detail << s << ": " << (c ? c->note : "?") << "; ";
  }
  const auto rs = suite_dichotomy(*make_triple("gr:n=4,k=2", kFS), p);
  const CheckReport* c = find(rs, "dichotomy_classification");
  const std::string note = c ? c->note : "";
  o.need(note.rfind("case (b)", 0) == 0, "gr classification");
  o.need(note.find("sign +: b") != std::string::npos && note.find("sign -: b") != std::string::npos, "sign symmetry");
  need_above(o, rs, "dichotomy_kernel_separation", 1e-3, "gr");
  need_above(o, rs, "dichotomy_differential_rank", 1e-3, "gr");
  need_below(o, rs, "dichotomy_kernel_image", 1e-6, "gr");
  o.detail << "gr:n=4,k=2: " << note;
  return o;
}

Outcome criterion7() {
  Outcome o;
  const SuiteParams p = params(20);
  double wc = 0.0;
  for (const char* s : {"cp:n=3,l=1", "cp:n=4,l=2"}) {
    const auto rs = suite_bracket(*make_triple(s, kFS), p);
    need_below(o, rs, "bracket_h_component", 1e-4, s);
    wc = std::max(wc, worst(rs, {"bracket_h_component"}));
  }
  const auto rs = suite_bracket(*make_triple("gr:n=4,k=2", kFS), p);
  need_above(o, rs, "bracket_h_component", 1e-2, "gr");
  need_below(o, rs, "bracket_richardson", 1e-6, "gr");
  o.detail << "CP max " << wc << ", Gr(2,4) max " << worst(rs, {"bracket_h_component"}) << ", Richardson drift "
           << worst(rs, {"bracket_richardson"});
  return o;
}

Outcome criterion8() {
  Outcome o;
  const SuiteParams p = params(50);
  const auto b = suite_bundle(*make_triple("bundle:base=cp1,kind=taut", kFS), p);
  need_below(o, b, "bundle_hessian_law", 1e-6, "taut");
  const auto c = suite_bundle(*make_triple("cp:n=3,l=1", kFS), p);
  need_below(o, c, "phi_pullback_horizontal", 1e-6, "cp");
  need_below(o, c, "phi_normal_curvature", 1e-6, "cp");
  o.detail << "Hessian law " << worst(b, {"bundle_hessian_law"}) << ", pullback "
           << worst(c, {"phi_pullback_horizontal"}) << ", normal curvature " << worst(c, {"phi_normal_curvature"});
  return o;
}

Outcome criterion9() {
  Outcome o;
  int audited = 0;
  for (const std::string& s : catalog_entries()) {
    for (const CheckReport& r : dimension_audit(*make_triple(s, kFS))) {
      o.need(r.pass && r.max_residual == 0.0, s + " " + r.id);
      ++audited;
    }
  }
  const auto f = suite_flags(params(1), 4, 2, 1000);
  o.need(f.size() == 1 && f[0].pass && f[0].residuals.size() == 1000, "flag chains");
  o.detail << audited << " audit checks over " << catalog_entries().size() << " entries, flag chains "
           << (f.empty() ? "" : f[0].note);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                       criterion6, criterion7, criterion8, criterion9};
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failed;
    std::cout << "criterion " << i + 1 << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail.str() << "  ("
              << secs << " s)" << std::endl;
  }
  std::cout << criteria.size() - failed << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
