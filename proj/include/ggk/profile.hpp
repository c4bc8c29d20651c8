#pragma once

// Profile data (tau_minus, tau_plus, a, Q) and the scalar ODE machinery built
// on it: rho, sigma, f, delta, the theta functions used to conjugate two
// profiles, and the modification potential phi.

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "ggk/report.hpp"

namespace ggk {

class ProfileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Q and its first four derivatives at tau.
using QDerivs = std::array<double, 5>;

class QFunction {
 public:
  virtual ~QFunction() = default;
  virtual QDerivs eval(double tau) const = 0;
  virtual std::string describe() const = 0;
  double operator()(double tau) const { return eval(tau)[0]; }
};
using QPtr = std::shared_ptr<const QFunction>;

// Q = 2a (tau - tau_minus)(tau_plus - tau) / (tau_plus - tau_minus).
QPtr make_fubini_study_q(double tau_minus, double tau_plus, double a);
// Clamped cubic spline on a uniform grid covering [tau_minus, tau_plus],
// with prescribed endpoint slopes.
QPtr make_table_q(double tau_minus, double tau_plus, const std::vector<double>& values, double slope_left,
                  double slope_right);
// Arithmetic expression in the variable t (alias tau); supports + - * / ^,
// unary minus, pi, and sin cos exp log sqrt.
QPtr make_expr_q(const std::string& expr);
// s * base(tau): rescales a profile function by a constant.
QPtr make_scaled_q(QPtr base, double s);

struct Profile {
  double tau_minus = 0.0;
  double tau_plus = 1.0;
  double a = 1.0;
  QPtr Q;
  double width() const { return tau_plus - tau_minus; }
};

Profile fubini_study_profile(double tau_minus, double tau_plus, double a);
Profile profile_from_json(const nlohmann::json& j);
Profile load_profile(const std::string& path);

// Endpoint values/slopes within 1e-9 and interior positivity on a 1e-3 grid.
CheckReport validate_profile(const Profile& p);
// True when Q agrees with the Fubini-Study law for the same data.
bool is_fubini_study(const Profile& p, double tol = 1e-9);

// Solution of the profile ODEs for one sign (+1 or -1).  rho is anchored by
// rho(tau0) = rho0, f by f(tau0) = 0.
class ProfileSolution {
 public:
  ProfileSolution(Profile p, int sign, double tau0, double rho0);
  ProfileSolution(Profile p, int sign);

  const Profile& profile() const { return p_; }
  int sign() const { return sign_; }

  double log_rho(double tau) const;
  double rho(double tau) const;
  double rho_squared(double tau) const;
  // Inverse of rho; rho in (0, inf).
  double tau_of_rho(double rho) const;
  double tau_of_rho_squared(double s) const;

  // Distance function: sigma -> 0 at the critical end (tau_plus for sign +).
  double sigma_tau(double tau) const;
  double sigma(double rho) const { return sigma_tau(tau_of_rho(rho)); }
  double delta() const { return delta_; }
  double tau_of_sigma(double sigma) const;

  // f up to the gauge f(tau0) = 0.
  double f_tau(double tau) const;
  double f(double rho) const { return f_tau(tau_of_rho(rho)); }
  // d f / d(rho^2) and d^2 f / d(rho^2)^2, computed from the solution.
  double fprime_s(double tau) const;
  double fsecond_s(double tau) const;
  // Closed expressions |tau - tau_e|/(a rho^2) and (Q - 2a|tau - tau_e|)/(2 a^2 rho^4).
  double fprime_formula(double tau) const;
  double fsecond_formula(double tau) const;
  // Limit of f'(rho^2) at the zero section (rho -> 0).
  double fprime_limit() const;

  // Smooth part r = 1/Q - 1/(2a(t - tau_minus)) - 1/(2a(tau_plus - t)).
  double smooth_part(double tau) const;
  // Integral of the smooth part from tau0.
  double smooth_integral(double tau) const;

 private:
  double critical_end() const { return sign_ > 0 ? p_.tau_plus : p_.tau_minus; }
  double integral_inv_sqrt_q(double lo, double hi) const;
  double rho2_over_gap(double tau) const;

  Profile p_;
  int sign_;
  double tau0_, rho0_;
  double delta_ = 0.0;
  double mid_ = 0.0;
  double log_rho_shift_ = 0.0;
};

// theta with gamma theta' = theta, theta(0) = 0 and theta'(0) = 1 for gamma
// with gamma(0) = 0, gamma'(0) = 1.  gamma returns its value and first four
// derivatives; the derivatives at 0 drive the series used near t = 0.
using GammaFn = std::function<QDerivs(double)>;
double theta_fn(const GammaFn& gamma, double t);
// log|theta(t)|, finite for t != 0.
double log_theta_fn(const GammaFn& gamma, double t);

// tau -> tau_hat conjugating Q d/dtau to Qhat d/dtau_hat, fixing the midpoint.
class ProfileMatch {
 public:
  ProfileMatch(Profile p, Profile phat);
  double operator()(double tau) const;
  // Five-point finite-difference derivative of the matched map.
  double derivative(double tau, double h = 1e-3) const;
  // Residual of Qhat(tau_hat) - tau_hat'(tau) Q(tau).
  double conjugacy_residual(double tau) const;
  const Profile& source() const { return p_; }
  const Profile& target() const { return phat_; }

 private:
  double log_theta(const Profile& p, double tau) const;
  Profile p_, phat_;
  double mid_;
};
ProfileMatch match_profiles(const Profile& p, const Profile& phat);

// phi with phi' = (tau_hat - tau)/Q; represented by a Chebyshev expansion of
// phi' so that all derivatives are available.
class Modification {
 public:
  explicit Modification(const ProfileMatch& match, int cheb_order = 48);
  ~Modification();
  Modification(const Modification&) = delete;
  Modification& operator=(const Modification&) = delete;

  // phi' directly from the matched map, with quadratic extrapolation within
  // 1e-3 of the endpoints.
  double phi_prime_direct(double tau) const;
  // phi, phi', phi'', phi''', phi'''' from the Chebyshev representation.
  QDerivs phi(double tau) const;
  // Recovered Qhat(tau_hat(tau)) = tau_hat'(tau) Q(tau).
  double qhat_recovered(double tau) const;
  // tau_hat = tau + Q phi'.
  double tau_hat(double tau) const;
  // min over a grid of 1 + Q' phi' + Q phi''.
  double positivity_margin() const;
  // -/+ 2 a phi'(tau_pm) + 1 at each end (must be positive).
  double endpoint_margin(int sign) const;
  // phi'(tau_pm) versus (tau_hat'(tau_pm) - 1)/(-/+ 2a).
  double endpoint_identity_residual(int sign) const;
  const ProfileMatch& match() const { return match_; }

 private:
  ProfileMatch match_;
  struct Cheb;
  std::unique_ptr<Cheb> cheb_;
};

// CSV rows (tau, rho, sigma, f) on an interior grid.
std::string solution_csv(const ProfileSolution& sol, int rows = 201);

}  // namespace ggk
