// Command line front end: verification reports, profile solutions, catalog.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "ggk/profile.hpp"
#include "ggk/suites.hpp"
#include "ggk/triple.hpp"

namespace {

// Writes the whole text or nothing.
void write_file(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
    out.flush();
    if (!out) {
      std::remove(tmp.c_str());
      throw std::runtime_error("cannot write " + path);
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw std::runtime_error("cannot write " + path);
  }
}

int run_verify(const ggk::SuiteConfig& c, const std::string& out) {
  const nlohmann::ordered_json rep = ggk::run_suite(c);
  write_file(out, rep.dump(2) + "\n");
  int failed = 0;
  for (const auto& ch : rep["checks"]) {
    const bool ok = ch["pass"].get<bool>();
    if (!ok) ++failed;
    std::cout << (ok ? "PASS " : "FAIL ") << ch["id"].get<std::string>() << "  max " << ch["max_residual"].get<double>()
              << " " << ch["comparison"].get<std::string>() << " " << ch["tolerance"].get<double>() << "\n";
  }
  std::cout << rep["checks"].size() - failed << "/" << rep["checks"].size() << " checks passed\n";
  return ggk::report_passed(rep) ? 0 : 1;
}

int run_profile_solve(const std::string& config, const std::string& out) {
  std::ifstream in(config);
  if (!in) throw std::runtime_error("cannot open profile config " + config);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("profile config is not valid JSON: " + std::string(e.what()));
  }
  const ggk::Profile p = ggk::profile_from_json(j);
  const ggk::CheckReport v = ggk::validate_profile(p);
  if (!v.pass) throw std::runtime_error("profile violates the endpoint conditions");
  const int sign = j.value("sign", 1);
  if (sign != 1 && sign != -1) throw std::runtime_error("sign must be 1 or -1");
  const int rows = j.value("rows", 201);
  if (rows < 1) throw std::runtime_error("rows must be positive");
  const double tau0 = j.value("tau0", 0.5 * (p.tau_minus + p.tau_plus));
  const double rho0 = j.value("rho0", 1.0);
  ggk::ProfileSolution sol(p, sign, tau0, rho0);
  write_file(out, ggk::solution_csv(sol, rows));
  std::cout << "delta " << sol.delta() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geodesic-gradient Kahler triple verification"};
  app.require_subcommand(1);

  ggk::SuiteConfig cfg;
  std::string out;
  auto* verify = app.add_subcommand("verify", "run verification suites on a catalog triple");
  verify->add_option("--triple", cfg.spec, "triple spec, see 'catalog list'")->required();
  verify->add_option("--profile", cfg.profile_path, "profile config (JSON); default Fubini-Study on [0, 1], a = 1");
  verify->add_option("--suite", cfg.suite, "suite name or 'all'")->capture_default_str();
  verify->add_option("--samples", cfg.params.samples, "sample points per check")->capture_default_str();
  verify->add_option("--seed", cfg.params.seed, "random seed")->capture_default_str();
  verify->add_option("--tol", cfg.params.tol, "tolerance override for residual checks (0 keeps defaults)")
      ->capture_default_str();
  verify->add_option("--geodesics", cfg.params.geodesics, "normal geodesics for the affine suite")->capture_default_str();
  verify->add_option("--directions", cfg.params.directions, "normal directions for the dichotomy suite")
      ->capture_default_str();
  verify->add_option("--out", out, "report path")->required();

  auto* profile = app.add_subcommand("profile", "profile ODE tools");
  profile->require_subcommand(1);
  std::string config, csv;
  auto* solve = profile->add_subcommand("solve", "solve the profile ODE and write tau, rho, sigma, f as CSV");
  solve->add_option("--config", config, "profile config (JSON)")->required();
  solve->add_option("--out", csv, "CSV path")->required();

  auto* catalog = app.add_subcommand("catalog", "catalog of triples");
  catalog->require_subcommand(1);
  auto* list = catalog->add_subcommand("list", "list catalog specs");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*verify) return run_verify(cfg, out);
    if (*solve) return run_profile_solve(config, csv);
    if (*list) {
      for (const std::string& s : ggk::catalog_entries()) {
        const ggk::TripleMeta m = ggk::catalog_meta(ggk::parse_spec(s), ggk::fubini_study_profile(0.0, 1.0, 1.0));
        std::cout << s << "  m=" << m.m << " d+=" << m.d_plus << " d-=" << m.d_minus << " q=" << m.q << "\n";
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
