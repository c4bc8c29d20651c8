#include <cmath>

#include "doctest.h"
#include "ggk/profile.hpp"

using namespace ggk;

namespace {

Profile sine_profile() {
  Profile p{0.0, 1.0, 1.0, make_expr_q("2*sin(pi*t)/pi")};
  return p;
}

double sine_match(double t) { return 2.0 / M_PI * std::atan(t / (1.0 - t)); }

}  // namespace

TEST_CASE("fubini-study profile: closed forms for rho, sigma, f") {
  ProfileSolution sol(fubini_study_profile(0.0, 1.0, 1.0), +1);
  CHECK(sol.delta() == doctest::Approx(M_PI / std::sqrt(2.0)).epsilon(1e-10));
  CHECK(sol.rho(0.9) == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
  for (double t : {0.01, 0.2, 0.5, 0.77, 0.999}) {
    CHECK(sol.rho(t) == doctest::Approx(std::sqrt((1 - t) / t)).epsilon(1e-10));
    CHECK(sol.f_tau(t) == doctest::Approx(-std::log(2 * t)).epsilon(1e-9));
    CHECK(sol.fprime_formula(t) == doctest::Approx(t).epsilon(1e-10));
    CHECK(sol.fprime_s(t) == doctest::Approx(t).epsilon(1e-7));
    // d/ds of 1/(1+s) is -tau^2.
    CHECK(sol.fsecond_formula(t) == doctest::Approx(-t * t).epsilon(1e-9));
    CHECK(sol.fsecond_s(t) == doctest::Approx(-t * t).epsilon(1e-6));
    double sig = std::sqrt(2.0) * std::asin(std::sqrt(1 - t));
    CHECK(sol.sigma_tau(t) == doctest::Approx(sig).epsilon(1e-9));
  }
  CHECK(sol.sigma(1.0) == doctest::Approx(sol.delta() / 2).epsilon(1e-10));
  CHECK(sol.fprime_limit() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sol.tau_of_rho(1.0 / 3.0) == doctest::Approx(0.9).epsilon(1e-10));
  CHECK(sol.tau_of_sigma(sol.sigma_tau(0.3)) == doctest::Approx(0.3).epsilon(1e-9));
}

TEST_CASE("profile sign swaps the critical end") {
  ProfileSolution plus(fubini_study_profile(0.0, 1.0, 1.0), +1);
  ProfileSolution minus(fubini_study_profile(0.0, 1.0, 1.0), -1);
  for (double t : {0.1, 0.4, 0.8}) {
    CHECK(minus.rho(t) == doctest::Approx(plus.rho(1 - t)).epsilon(1e-10));
    CHECK(minus.sigma_tau(t) == doctest::Approx(plus.sigma_tau(1 - t)).epsilon(1e-9));
    CHECK(minus.fprime_s(t) == doctest::Approx(minus.fprime_formula(t)).epsilon(1e-7));
  }
  CHECK(minus.fprime_limit() == doctest::Approx(1.0));
}

TEST_CASE("general profile: derivative formulas agree with the solution") {
  Profile p{-1.0, 2.0, 0.5, make_expr_q("(t+1)*(2-t)*(1 + (t+1)*(2-t)/9)/3")};
  REQUIRE(validate_profile(p).pass);
  for (int sign : {+1, -1}) {
    ProfileSolution sol(p, sign, 0.3, 0.7);
    CHECK(sol.rho(0.3) == doctest::Approx(0.7));
    for (double t : {-0.9999, -0.5, 0.1, 1.2, 1.9995}) {
      CHECK(sol.fprime_s(t) == doctest::Approx(sol.fprime_formula(t)).epsilon(1e-6));
      CHECK(sol.fsecond_s(t) == doctest::Approx(sol.fsecond_formula(t)).epsilon(1e-5));
    }
    CHECK(sol.fprime_limit() > 0);
  }
}

TEST_CASE("profile validation") {
  CHECK(validate_profile(fubini_study_profile(0, 1, 1)).pass);
  CHECK(validate_profile(Profile{0, 1, 0.5, make_expr_q("sin(pi*t)/pi")}).pass);
  CHECK_FALSE(validate_profile(Profile{0, 1, 1, make_expr_q("t*(1-t)^2")}).pass);
  CHECK_FALSE(validate_profile(Profile{0, 1, 1, make_expr_q("2*t*(1-t)*(1 - 3*t)")}).pass);
  CHECK(is_fubini_study(fubini_study_profile(0, 1, 1)));
  CHECK_FALSE(is_fubini_study(sine_profile()));
  CHECK_THROWS_AS(make_expr_q("2*t*(1-"), ProfileError);
  CHECK_THROWS_AS(make_expr_q("foo(t)"), ProfileError);
  CHECK_THROWS_AS(ProfileSolution(Profile{0, 1, 1, make_expr_q("t*(1-t)^2")}, +1), ProfileError);
}

TEST_CASE("expression and table profiles carry derivatives") {
  QPtr q = make_expr_q("exp(2*t) - t^3");
  QDerivs d = q->eval(0.5);
  CHECK(d[0] == doctest::Approx(std::exp(1.0) - 0.125));
  CHECK(d[1] == doctest::Approx(2 * std::exp(1.0) - 0.75));
  CHECK(d[2] == doctest::Approx(4 * std::exp(1.0) - 3.0));
  CHECK(d[3] == doctest::Approx(8 * std::exp(1.0) - 6.0));
  CHECK(d[4] == doctest::Approx(16 * std::exp(1.0)));
  std::vector<double> vals;
  for (int i = 0; i <= 400; ++i) vals.push_back(2.0 * (i / 400.0) * (1 - i / 400.0));
  Profile tab{0, 1, 1, make_table_q(0, 1, vals, 2.0, -2.0)};
  CHECK(validate_profile(tab).pass);
  CHECK(tab.Q->eval(0.3)[0] == doctest::Approx(0.42).epsilon(1e-10));
  ProfileSolution sol(tab, +1);
  CHECK(sol.delta() == doctest::Approx(M_PI / std::sqrt(2.0)).epsilon(1e-6));
}

TEST_CASE("profile config parsing") {
  auto j = nlohmann::json::parse(R"({"tau_minus":0,"tau_plus":1,"a":1,"Q":{"kind":"expr","expr":"2*sin(pi*t)/pi"}})");
  Profile p = profile_from_json(j);
  CHECK(p.Q->eval(0.5)[0] == doctest::Approx(2 / M_PI));
  CHECK_THROWS_AS(profile_from_json(nlohmann::json::parse(R"({"tau_minus":0})")), ProfileError);
  CHECK_THROWS_AS(profile_from_json(nlohmann::json::parse(R"({"tau_minus":1,"tau_plus":0,"a":1,"Q":{"kind":"fubini-study"}})")),
                  ProfileError);
}

TEST_CASE("theta functions") {
  GammaFn g1 = [](double t) {
    double u = 1.0 / (1.0 + t);
    return QDerivs{1.0 - u, u * u, -2 * u * u * u, 6 * u * u * u * u, -24 * std::pow(u, 5)};
  };
  GammaFn g2 = [](double t) { return QDerivs{std::sin(t), std::cos(t), -std::sin(t), -std::cos(t), std::sin(t)}; };
  for (double t : {-0.5, -1e-5, 1e-4, 0.3, 1.7}) {
    CHECK(theta_fn(g1, t) == doctest::Approx(t * std::exp(t)).epsilon(1e-11));
    CHECK(theta_fn(g2, t) == doctest::Approx(2 * std::tan(t / 2)).epsilon(1e-11));
  }
}

TEST_CASE("profile matching and modification") {
  Profile fs = fubini_study_profile(0, 1, 1);
  ProfileMatch m(fs, sine_profile());
  for (double t : {1e-4, 0.1, 0.5, 0.62, 0.9, 0.9999}) {
    CHECK(m(t) == doctest::Approx(sine_match(t)).epsilon(1e-10));
    CHECK(m.conjugacy_residual(t) < 1e-8);
  }
  Modification mod(m);
  CHECK(mod.positivity_margin() > 0);
  CHECK(mod.endpoint_margin(-1) > 0);
  CHECK(mod.endpoint_margin(+1) > 0);
  CHECK(mod.endpoint_identity_residual(-1) < 1e-5);
  CHECK(mod.endpoint_identity_residual(+1) < 1e-5);
  CHECK(mod.phi_prime_direct(0.0) == doctest::Approx((2 / M_PI - 1) / 2).epsilon(1e-7));
  for (double t : {0.05, 0.3, 0.5, 0.81, 0.97}) {
    CHECK(std::fabs(mod.qhat_recovered(t) - 2 * std::sin(M_PI * sine_match(t)) / M_PI) < 1e-6);
    CHECK(mod.tau_hat(t) == doctest::Approx(sine_match(t)).epsilon(1e-8));
    // phi'' from the expansion against a difference of phi'.
    double h = 1e-5;
    double fd = (mod.phi_prime_direct(t + h) - mod.phi_prime_direct(t - h)) / (2 * h);
    CHECK(mod.phi(t)[2] == doctest::Approx(fd).epsilon(1e-5));
  }
  CHECK_THROWS_AS(ProfileMatch(fs, fubini_study_profile(0, 2, 1)), ProfileError);
}
