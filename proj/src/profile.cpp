#include "ggk/profile.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/tools/roots.hpp>
#include <gsl/gsl_chebyshev.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include "ggk/jet.hpp"

namespace ggk {

namespace {

constexpr double kSeriesBand = 1e-3;

struct GslInit {
  GslInit() { gsl_set_error_handler_off(); }
};
const GslInit gsl_init;

using Fn = std::function<double(double)>;

double gsl_trampoline(double x, void* p) { return (*static_cast<const Fn*>(p))(x); }

double quad(const Fn& f, double lo, double hi) {
  if (lo == hi) return 0.0;
  gsl_integration_workspace* w = gsl_integration_workspace_alloc(2000);
  gsl_function F{&gsl_trampoline, const_cast<Fn*>(&f)};
  double result = 0.0, err = 0.0;
  int status = gsl_integration_qag(&F, lo, hi, 1e-14, 1e-12, 2000, GSL_INTEG_GAUSS31, w, &result, &err);
  gsl_integration_workspace_free(w);
  if (status != GSL_SUCCESS && err > 1e-9 * (1.0 + std::fabs(result)))
    throw ProfileError("quadrature failed: " + std::string(gsl_strerror(status)));
  return result;
}

// Integral of f(x) (x-lo)^alpha (hi-x)^beta over [lo, hi].
double quad_weighted(const Fn& f, double lo, double hi, double alpha, double beta) {
  if (lo == hi) return 0.0;
  gsl_integration_workspace* w = gsl_integration_workspace_alloc(2000);
  gsl_integration_qaws_table* t = gsl_integration_qaws_table_alloc(alpha, beta, 0, 0);
  gsl_function F{&gsl_trampoline, const_cast<Fn*>(&f)};
  double result = 0.0, err = 0.0;
  int status = gsl_integration_qaws(&F, lo, hi, t, 1e-14, 1e-12, 2000, w, &result, &err);
  gsl_integration_qaws_table_free(t);
  gsl_integration_workspace_free(w);
  if (status != GSL_SUCCESS && err > 1e-9 * (1.0 + std::fabs(result)))
    throw ProfileError("weighted quadrature failed: " + std::string(gsl_strerror(status)));
  return result;
}

template <class F>
double solve_monotone(F f, double lo, double hi) {
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0) == (fhi > 0)) return std::fabs(flo) < std::fabs(fhi) ? lo : hi;
  boost::uintmax_t iters = 300;
  auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(52), iters);
  return 0.5 * (r.first + r.second);
}

// ---------------------------------------------------------------- Q kinds

class FubiniStudyQ : public QFunction {
 public:
  FubiniStudyQ(double tm, double tp, double a) : tm_(tm), tp_(tp), c_(2.0 * a / (tp - tm)) {}
  QDerivs eval(double t) const override {
    return {c_ * (t - tm_) * (tp_ - t), c_ * (tp_ + tm_ - 2.0 * t), -2.0 * c_, 0.0, 0.0};
  }
  std::string describe() const override { return "fubini-study"; }

 private:
  double tm_, tp_, c_;
};

class TableQ : public QFunction {
 public:
  TableQ(double tm, double tp, std::vector<double> v, double sl, double sr)
      : tm_(tm), h_((tp - tm) / (v.size() - 1)),
        spline_(v.begin(), v.end(), tm, (tp - tm) / (v.size() - 1), sl, sr) {}
  QDerivs eval(double t) const override {
    const double e = 1e-4 * h_;
    double third = (spline_.double_prime(t + e) - spline_.double_prime(t - e)) / (2.0 * e);
    return {spline_(t), spline_.prime(t), spline_.double_prime(t), third, 0.0};
  }
  std::string describe() const override { return "table"; }

 private:
  double tm_, h_;
  boost::math::interpolators::cardinal_cubic_b_spline<double> spline_;
};

// Recursive-descent parser producing a closure over univariate jets.
class ExprParser {
 public:
  using Node = std::function<Jet(const Jet&)>;
  explicit ExprParser(std::string s) : s_(std::move(s)) {}

  Node parse() {
    Node n = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw ProfileError("expression error at position " + std::to_string(pos_) + ": " + why);
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  Node expr() {
    Node lhs = term();
    for (;;) {
      if (eat('+')) {
        Node r = term();
        lhs = [lhs, r](const Jet& t) { return lhs(t) + r(t); };
      } else if (eat('-')) {
        Node r = term();
        lhs = [lhs, r](const Jet& t) { return lhs(t) - r(t); };
      } else {
        return lhs;
      }
    }
  }
  Node term() {
    Node lhs = power();
    for (;;) {
      if (eat('*')) {
        Node r = power();
        lhs = [lhs, r](const Jet& t) { return lhs(t) * r(t); };
      } else if (eat('/')) {
        Node r = power();
        lhs = [lhs, r](const Jet& t) { return lhs(t) / r(t); };
      } else {
        return lhs;
      }
    }
  }
  Node power() {
    Node base = unary();
    if (!eat('^')) return base;
    size_t at = pos_;
    Node ex = power();
    Jet probe(1, 4, 0.37);
    probe.coeffs()[1] = 1.0;
    Jet e = ex(probe);
    for (int k = 1; k < static_cast<int>(e.coeffs().size()); ++k)
      if (e.coeff(k) != 0.0) {
        pos_ = at;
        fail("exponent must not depend on t");
      }
    const double p = e.value();
    if (p == std::floor(p) && std::fabs(p) <= 16) {
      int n = static_cast<int>(p);
      return [base, n](const Jet& t) {
        Jet b = base(t);
        Jet r = b * 0.0 + 1.0;
        for (int i = 0; i < std::abs(n); ++i) r = r * b;
        return n < 0 ? 1.0 / r : r;
      };
    }
    return [base, p](const Jet& t) { return pow(base(t), p); };
  }
  Node unary() {
    if (eat('-')) {
      Node n = unary();
      return [n](const Jet& t) { return -n(t); };
    }
    if (eat('+')) return unary();
    return primary();
  }
  Node primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    if (eat('(')) {
      Node n = expr();
      if (!eat(')')) fail("missing ')'");
      return n;
    }
    char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      size_t used = 0;
      double v = std::stod(s_.substr(pos_), &used);
      pos_ += used;
      return [v](const Jet& t) { return t * 0.0 + v; };
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      std::string id = s_.substr(start, pos_ - start);
      if (id == "t" || id == "tau") return [](const Jet& t) { return t; };
      if (id == "pi") return [](const Jet& t) { return t * 0.0 + M_PI; };
      Jet (*fn)(const Jet&) = nullptr;
      if (id == "sin") fn = &sin;
      else if (id == "cos") fn = &cos;
      else if (id == "exp") fn = &exp;
      else if (id == "log") fn = &log;
      else if (id == "sqrt") fn = &sqrt;
      else fail("unknown identifier '" + id + "'");
      if (!eat('(')) fail("expected '(' after " + id);
      Node arg = expr();
      if (!eat(')')) fail("missing ')'");
      return [fn, arg](const Jet& t) { return fn(arg(t)); };
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  std::string s_;
  size_t pos_ = 0;
};

class ExprQ : public QFunction {
 public:
  explicit ExprQ(std::string e) : text_(std::move(e)), node_(ExprParser(text_).parse()) {}
  QDerivs eval(double t) const override {
    Jet x(1, 4, t);
    x.coeffs()[1] = 1.0;
    Jet r = node_(x);
    QDerivs d{};
    double fact = 1.0;
    for (int k = 0; k <= 4; ++k) {
      if (k > 0) fact *= k;
      d[k] = r.coeff(k) * fact;
    }
    return d;
  }
  std::string describe() const override { return "expr:" + text_; }

 private:
  std::string text_;
  ExprParser::Node node_;
};

class ScaledQ : public QFunction {
 public:
  ScaledQ(QPtr b, double s) : b_(std::move(b)), s_(s) {}
  QDerivs eval(double t) const override {
    QDerivs d = b_->eval(t);
    for (double& x : d) x *= s_;
    return d;
  }
  std::string describe() const override { return b_->describe() + " (scaled)"; }

 private:
  QPtr b_;
  double s_;
};

// Q(t)/|t - end| near an endpoint, as a cubic in eps = |t - end|, together
// with the coefficients c1, c2, c3 of its non-constant part.
struct EndSeries {
  double lead, c1, c2, c3;
  double h(double e) const { return lead + e * (c1 + e * (c2 + e * c3)); }
  double tail(double e) const { return c1 + e * (c2 + e * c3); }
};

EndSeries lower_series(const Profile& p) {
  QDerivs d = p.Q->eval(p.tau_minus);
  return {2.0 * p.a, d[2] / 2.0, d[3] / 6.0, d[4] / 24.0};
}

EndSeries upper_series(const Profile& p) {
  QDerivs d = p.Q->eval(p.tau_plus);
  return {2.0 * p.a, d[2] / 2.0, -d[3] / 6.0, d[4] / 24.0};
}

}  // namespace

QPtr make_fubini_study_q(double tm, double tp, double a) { return std::make_shared<FubiniStudyQ>(tm, tp, a); }

QPtr make_table_q(double tm, double tp, const std::vector<double>& values, double sl, double sr) {
  if (values.size() < 4) throw ProfileError("table profile needs at least 4 values");
  return std::make_shared<TableQ>(tm, tp, values, sl, sr);
}

QPtr make_expr_q(const std::string& expr) { return std::make_shared<ExprQ>(expr); }

QPtr make_scaled_q(QPtr base, double s) { return std::make_shared<ScaledQ>(std::move(base), s); }

Profile fubini_study_profile(double tm, double tp, double a) {
  if (!(tm < tp) || !(a > 0)) throw ProfileError("profile needs tau_minus < tau_plus and a > 0");
  return Profile{tm, tp, a, make_fubini_study_q(tm, tp, a)};
}

Profile profile_from_json(const nlohmann::json& j) {
  Profile p;
  try {
    p.tau_minus = j.at("tau_minus").get<double>();
    p.tau_plus = j.at("tau_plus").get<double>();
    p.a = j.at("a").get<double>();
    if (!(p.tau_minus < p.tau_plus) || !(p.a > 0)) throw ProfileError("profile needs tau_minus < tau_plus and a > 0");
    const auto& q = j.at("Q");
    std::string kind = q.at("kind").get<std::string>();
    if (kind == "fubini-study") {
      p.Q = make_fubini_study_q(p.tau_minus, p.tau_plus, p.a);
    } else if (kind == "table") {
      p.Q = make_table_q(p.tau_minus, p.tau_plus, q.at("values").get<std::vector<double>>(),
                         q.at("slope_left").get<double>(), q.at("slope_right").get<double>());
    } else if (kind == "expr") {
      p.Q = make_expr_q(q.at("expr").get<std::string>());
      if (q.contains("scale")) p.Q = make_scaled_q(p.Q, q.at("scale").get<double>());
    } else {
      throw ProfileError("unknown Q kind '" + kind + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ProfileError(std::string("malformed profile config: ") + e.what());
  }
  return p;
}

Profile load_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ProfileError("cannot open profile config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ProfileError("profile config is not valid JSON: " + std::string(e.what()));
  }
  return profile_from_json(j);
}

CheckReport validate_profile(const Profile& p) {
  CheckReport r = make_report("profile.validate", "endpoint conditions Q = 0, dQ/dtau = -/+2a; Q > 0 inside", 1e-9);
  QDerivs lo = p.Q->eval(p.tau_minus), hi = p.Q->eval(p.tau_plus);
  r.add(std::fabs(lo[0]));
  r.add(std::fabs(hi[0]));
  r.add(std::fabs(lo[1] - 2.0 * p.a));
  r.add(std::fabs(hi[1] + 2.0 * p.a));
  const int n = static_cast<int>(std::ceil(1.0 / 1e-3));
  double worst = 0.0;
  for (int i = 1; i < n; ++i) {
    double t = p.tau_minus + p.width() * i / n;
    if (!(p.Q->eval(t)[0] > 0.0)) worst = 1.0;
  }
  r.add(worst);
  return r.finish();
}

bool is_fubini_study(const Profile& p, double tol) {
  FubiniStudyQ fs(p.tau_minus, p.tau_plus, p.a);
  for (int i = 0; i <= 64; ++i) {
    double t = p.tau_minus + p.width() * i / 64.0;
    if (std::fabs(p.Q->eval(t)[0] - fs.eval(t)[0]) > tol) return false;
  }
  return true;
}

// ---------------------------------------------------------------- solution

ProfileSolution::ProfileSolution(Profile p, int sign) : ProfileSolution(p, sign, 0.5 * (p.tau_minus + p.tau_plus), 1.0) {}

ProfileSolution::ProfileSolution(Profile p, int sign, double tau0, double rho0)
    : p_(std::move(p)), sign_(sign), tau0_(tau0), rho0_(rho0) {
  if (sign != 1 && sign != -1) throw ProfileError("sign must be +1 or -1");
  if (!(tau0 > p_.tau_minus && tau0 < p_.tau_plus) || !(rho0 > 0)) throw ProfileError("anchor outside (tau_minus, tau_plus) x (0, inf)");
  if (!validate_profile(p_).pass) throw ProfileError("invalid profile");
  mid_ = 0.5 * (p_.tau_minus + p_.tau_plus);
  delta_ = integral_inv_sqrt_q(p_.tau_minus, mid_) + integral_inv_sqrt_q(mid_, p_.tau_plus);
}

double ProfileSolution::smooth_part(double t) const {
  const double a = p_.a;
  const double em = t - p_.tau_minus, ep = p_.tau_plus - t;
  if (em < kSeriesBand) {
    EndSeries s = lower_series(p_);
    return -s.tail(em) / (2.0 * a * s.h(em)) - 1.0 / (2.0 * a * ep);
  }
  if (ep < kSeriesBand) {
    EndSeries s = upper_series(p_);
    return -s.tail(ep) / (2.0 * a * s.h(ep)) - 1.0 / (2.0 * a * em);
  }
  return 1.0 / p_.Q->eval(t)[0] - 1.0 / (2.0 * a * em) - 1.0 / (2.0 * a * ep);
}

double ProfileSolution::smooth_integral(double t) const {
  return quad([this](double s) { return smooth_part(s); }, tau0_, t);
}

double ProfileSolution::log_rho(double t) const {
  const double em = t - p_.tau_minus, ep = p_.tau_plus - t;
  const double em0 = tau0_ - p_.tau_minus, ep0 = p_.tau_plus - tau0_;
  const double s = static_cast<double>(sign_);
  return std::log(rho0_) - s * p_.a * smooth_integral(t) - s * 0.5 * (std::log(em / ep) - std::log(em0 / ep0));
}

double ProfileSolution::rho(double t) const { return std::exp(log_rho(t)); }
double ProfileSolution::rho_squared(double t) const { return std::exp(2.0 * log_rho(t)); }

// rho^2 / |tau - tau_e| with tau_e the critical end; finite at tau_e.
double ProfileSolution::rho2_over_gap(double t) const {
  const double em = t - p_.tau_minus, ep = p_.tau_plus - t;
  const double em0 = tau0_ - p_.tau_minus, ep0 = p_.tau_plus - tau0_;
  const double R = smooth_integral(t);
  if (sign_ > 0) return rho0_ * rho0_ * std::exp(-2.0 * p_.a * R) / (em * ep0 / em0);
  return rho0_ * rho0_ * std::exp(2.0 * p_.a * R) / (ep * em0 / ep0);
}

double ProfileSolution::tau_of_rho(double r) const {
  if (!(r > 0)) throw ProfileError("rho must be positive");
  const double target = std::log(r);
  const double eps = 1e-15 * p_.width();
  return solve_monotone([&](double t) { return log_rho(t) - target; }, p_.tau_minus + eps, p_.tau_plus - eps);
}

double ProfileSolution::tau_of_rho_squared(double s) const { return tau_of_rho(std::sqrt(s)); }

double ProfileSolution::integral_inv_sqrt_q(double lo, double hi) const {
  // Both pieces are anchored at an endpoint, where Q vanishes like a square root
  // weight; the remaining factor 1/sqrt(Q/|t - end|) is smooth.
  auto inv_sqrt_h_lower = [this](double t) {
    const double e = t - p_.tau_minus;
    double h = e < kSeriesBand ? lower_series(p_).h(e) : p_.Q->eval(t)[0] / e;
    return 1.0 / std::sqrt(h);
  };
  auto inv_sqrt_h_upper = [this](double t) {
    const double e = p_.tau_plus - t;
    double h = e < kSeriesBand ? upper_series(p_).h(e) : p_.Q->eval(t)[0] / e;
    return 1.0 / std::sqrt(h);
  };
  auto from_lower = [&](double t) { return quad_weighted(inv_sqrt_h_lower, p_.tau_minus, t, -0.5, 0.0); };
  auto to_upper = [&](double t) { return quad_weighted(inv_sqrt_h_upper, t, p_.tau_plus, 0.0, -0.5); };
  // Integral from tau_minus to t, using whichever anchor is closer.
  auto F = [&](double t) {
    if (t <= p_.tau_minus) return 0.0;
    if (t <= mid_) return from_lower(t);
    double total = delta_ > 0 ? delta_ : from_lower(mid_) + to_upper(mid_);
    if (t >= p_.tau_plus) return total;
    return total - to_upper(t);
  };
  if (delta_ == 0.0) {
    // Only used while delta itself is being computed.
    if (lo == p_.tau_minus && hi == mid_) return from_lower(mid_);
    if (lo == mid_ && hi == p_.tau_plus) return to_upper(mid_);
  }
  return F(hi) - F(lo);
}

double ProfileSolution::sigma_tau(double t) const {
  if (sign_ > 0) return integral_inv_sqrt_q(t, p_.tau_plus);
  return integral_inv_sqrt_q(p_.tau_minus, t);
}

double ProfileSolution::tau_of_sigma(double s) const {
  if (s <= 0) return critical_end();
  if (s >= delta_) return sign_ > 0 ? p_.tau_minus : p_.tau_plus;
  return solve_monotone([&](double t) { return sigma_tau(t) - s; }, p_.tau_minus, p_.tau_plus);
}

double ProfileSolution::f_tau(double t) const {
  const double a = p_.a, D = p_.width();
  if (sign_ > 0) {
    auto smooth = [&](double s) {
      const double em = s - p_.tau_minus, ep = p_.tau_plus - s;
      if (em < kSeriesBand) {
        EndSeries q = lower_series(p_);
        return (2.0 * a + D * q.tail(em)) / (a * q.h(em));
      }
      if (ep < kSeriesBand) return -2.0 / upper_series(p_).h(ep) + (D / a) / em;
      return -2.0 * ep / p_.Q->eval(s)[0] + (D / a) / em;
    };
    return quad(smooth, tau0_, t) - (D / a) * std::log((t - p_.tau_minus) / (tau0_ - p_.tau_minus));
  }
  auto smooth = [&](double s) {
    const double em = s - p_.tau_minus, ep = p_.tau_plus - s;
    if (ep < kSeriesBand) {
      EndSeries q = upper_series(p_);
      return -(2.0 * a + D * q.tail(ep)) / (a * q.h(ep));
    }
    if (em < kSeriesBand) return 2.0 / lower_series(p_).h(em) - (D / a) / ep;
    return 2.0 * em / p_.Q->eval(s)[0] - (D / a) / ep;
  };
  return quad(smooth, tau0_, t) - (D / a) * std::log((p_.tau_plus - t) / (p_.tau_plus - tau0_));
}

double ProfileSolution::fprime_formula(double t) const { return 1.0 / (p_.a * rho2_over_gap(t)); }

double ProfileSolution::fsecond_formula(double t) const {
  const double a = p_.a;
  const double g = rho2_over_gap(t);
  const double e = sign_ > 0 ? p_.tau_plus - t : t - p_.tau_minus;
  double numer_over_e2;
  if (e < kSeriesBand) {
    EndSeries s = sign_ > 0 ? upper_series(p_) : lower_series(p_);
    numer_over_e2 = s.tail(e);
  } else {
    numer_over_e2 = (p_.Q->eval(t)[0] - 2.0 * a * e) / (e * e);
  }
  return numer_over_e2 / (2.0 * a * a * g * g);
}

double ProfileSolution::fprime_limit() const { return fprime_formula(critical_end()); }

double ProfileSolution::fprime_s(double t) const {
  // Five-point stencil in tau, divided by the same stencil of rho^2.
  const double h = 1e-3 * std::min(t - p_.tau_minus, p_.tau_plus - t);
  auto stencil = [&](auto fn) {
    return (-fn(t + 2 * h) + 8 * fn(t + h) - 8 * fn(t - h) + fn(t - 2 * h)) / (12 * h);
  };
  double df = stencil([&](double s) { return f_tau(s); });
  double ds = stencil([&](double s) { return rho_squared(s); });
  return df / ds;
}

double ProfileSolution::fsecond_s(double t) const {
  const double h = 1e-3 * std::min(t - p_.tau_minus, p_.tau_plus - t);
  auto stencil = [&](auto fn) {
    return (-fn(t + 2 * h) + 8 * fn(t + h) - 8 * fn(t - h) + fn(t - 2 * h)) / (12 * h);
  };
  double df = stencil([&](double s) { return fprime_formula(s); });
  double ds = stencil([&](double s) { return rho_squared(s); });
  return df / ds;
}

// ---------------------------------------------------------------- theta

double log_theta_fn(const GammaFn& gamma, double t) {
  if (t == 0.0) throw ProfileError("log theta is singular at 0");
  QDerivs g0 = gamma(0.0);
  if (std::fabs(g0[0]) > 1e-12 || std::fabs(g0[1] - 1.0) > 1e-9)
    throw ProfileError("theta needs gamma(0) = 0 and gamma'(0) = 1");
  auto integrand = [&](double s) {
    if (std::fabs(s) < kSeriesBand) {
      const double e = s * (g0[2] / 2.0 + s * (g0[3] / 6.0 + s * g0[4] / 24.0));
      return -(g0[2] / 2.0 + s * (g0[3] / 6.0 + s * g0[4] / 24.0)) / (1.0 + e);
    }
    return 1.0 / gamma(s)[0] - 1.0 / s;
  };
  return std::log(std::fabs(t)) + quad(integrand, 0.0, t);
}

double theta_fn(const GammaFn& gamma, double t) {
  if (t == 0.0) return 0.0;
  return (t > 0 ? 1.0 : -1.0) * std::exp(log_theta_fn(gamma, t));
}

// ---------------------------------------------------------------- matching

ProfileMatch::ProfileMatch(Profile p, Profile phat) : p_(std::move(p)), phat_(std::move(phat)) {
  if (std::fabs(p_.tau_minus - phat_.tau_minus) > 1e-12 || std::fabs(p_.tau_plus - phat_.tau_plus) > 1e-12 ||
      std::fabs(p_.a - phat_.a) > 1e-12)
    throw ProfileError("matched profiles must share tau_minus, tau_plus and a");
  if (!validate_profile(p_).pass || !validate_profile(phat_).pass) throw ProfileError("invalid profile in matching");
  mid_ = 0.5 * (p_.tau_minus + p_.tau_plus);
}

// log theta normalized to vanish at the midpoint: the lower-half theta uses
// gamma = Q/(2a) in t = tau - tau_minus, the upper-half one gamma = -Q/(2a)
// in t = tau - tau_plus.
double ProfileMatch::log_theta(const Profile& p, double tau) const {
  const double a = p.a;
  if (tau <= mid_) {
    GammaFn g = [&](double t) {
      QDerivs d = p.Q->eval(p.tau_minus + t);
      for (double& x : d) x /= 2.0 * a;
      return d;
    };
    return log_theta_fn(g, tau - p.tau_minus) - log_theta_fn(g, mid_ - p.tau_minus);
  }
  GammaFn g = [&](double t) {
    QDerivs d = p.Q->eval(p.tau_plus + t);
    for (double& x : d) x /= -2.0 * a;
    return d;
  };
  return log_theta_fn(g, tau - p.tau_plus) - log_theta_fn(g, mid_ - p.tau_plus);
}

double ProfileMatch::operator()(double tau) const {
  if (tau <= p_.tau_minus) return p_.tau_minus;
  if (tau >= p_.tau_plus) return p_.tau_plus;
  if (tau == mid_) return mid_;
  const double target = log_theta(p_, tau);
  const double eps = 1e-15 * p_.width();
  if (tau < mid_)
    return solve_monotone([&](double s) { return log_theta(phat_, s) - target; }, p_.tau_minus + eps, mid_);
  return solve_monotone([&](double s) { return log_theta(phat_, s) - target; }, mid_, p_.tau_plus - eps);
}

double ProfileMatch::derivative(double tau, double h) const {
  h = std::min(h, 0.45 * std::min(tau - p_.tau_minus, p_.tau_plus - tau));
  const ProfileMatch& m = *this;
  return (-m(tau + 2 * h) + 8 * m(tau + h) - 8 * m(tau - h) + m(tau - 2 * h)) / (12 * h);
}

double ProfileMatch::conjugacy_residual(double tau) const {
  return std::fabs(phat_.Q->eval((*this)(tau))[0] - derivative(tau) * p_.Q->eval(tau)[0]);
}

ProfileMatch match_profiles(const Profile& p, const Profile& phat) { return ProfileMatch(p, phat); }

// ---------------------------------------------------------------- modification

struct Modification::Cheb {
  gsl_cheb_series* d[5] = {nullptr, nullptr, nullptr, nullptr, nullptr};  // phi, phi', ..., phi''''
  ~Cheb() {
    for (auto* c : d)
      if (c) gsl_cheb_free(c);
  }
};

Modification::Modification(const ProfileMatch& match, int order) : match_(match), cheb_(std::make_unique<Cheb>()) {
  const Profile& p = match_.source();
  Fn fp = [this](double t) { return phi_prime_direct(t); };
  gsl_function F{&gsl_trampoline, &fp};
  cheb_->d[1] = gsl_cheb_alloc(order);
  gsl_cheb_init(cheb_->d[1], &F, p.tau_minus, p.tau_plus);
  cheb_->d[0] = gsl_cheb_alloc(order);
  gsl_cheb_calc_integ(cheb_->d[0], cheb_->d[1]);
  for (int k = 2; k <= 4; ++k) {
    cheb_->d[k] = gsl_cheb_alloc(order);
    gsl_cheb_calc_deriv(cheb_->d[k], cheb_->d[k - 1]);
  }
  if (positivity_margin() <= 0.0 || endpoint_margin(+1) <= 0.0 || endpoint_margin(-1) <= 0.0)
    throw ProfileError("modification rejected: positivity guard violated");
}

Modification::~Modification() = default;

double Modification::phi_prime_direct(double t) const {
  const Profile& p = match_.source();
  auto raw = [&](double s) { return (match_(s) - s) / p.Q->eval(s)[0]; };
  const double em = t - p.tau_minus, ep = p.tau_plus - t;
  if (em < kSeriesBand || ep < kSeriesBand) {
    // Quadratic through three interior points, evaluated at t.
    const double dir = em < kSeriesBand ? 1.0 : -1.0;
    const double end = em < kSeriesBand ? p.tau_minus : p.tau_plus;
    const double x[3] = {kSeriesBand, 1.5 * kSeriesBand, 2.0 * kSeriesBand};
    double y[3];
    for (int i = 0; i < 3; ++i) y[i] = raw(end + dir * x[i]);
    const double e = em < kSeriesBand ? em : ep;
    double r = 0.0;
    for (int i = 0; i < 3; ++i) {
      double li = 1.0;
      for (int j = 0; j < 3; ++j)
        if (j != i) li *= (e - x[j]) / (x[i] - x[j]);
      r += y[i] * li;
    }
    return r;
  }
  return raw(t);
}

QDerivs Modification::phi(double t) const {
  QDerivs d{};
  for (int k = 0; k <= 4; ++k) d[k] = gsl_cheb_eval(cheb_->d[k], t);
  return d;
}

double Modification::qhat_recovered(double t) const { return match_.derivative(t) * match_.source().Q->eval(t)[0]; }

double Modification::tau_hat(double t) const { return t + match_.source().Q->eval(t)[0] * phi(t)[1]; }

double Modification::positivity_margin() const {
  const Profile& p = match_.source();
  double worst = 1e300;
  for (int i = 0; i <= 1000; ++i) {
    double t = p.tau_minus + p.width() * i / 1000.0;
    QDerivs q = p.Q->eval(t);
    QDerivs f = phi(t);
    worst = std::min(worst, 1.0 + q[1] * f[1] + q[0] * f[2]);
  }
  return worst;
}

double Modification::endpoint_margin(int sign) const {
  const Profile& p = match_.source();
  const double t = sign > 0 ? p.tau_plus : p.tau_minus;
  return 1.0 - sign * 2.0 * p.a * phi_prime_direct(t);
}

double Modification::endpoint_identity_residual(int sign) const {
  const Profile& p = match_.source();
  const double end = sign > 0 ? p.tau_plus : p.tau_minus;
  const double h = 1e-3 * p.width();
  const double dir = sign > 0 ? -1.0 : 1.0;
  // Second-order one-sided difference of tau_hat at the endpoint.
  const double d = dir * (-3.0 * end + 4.0 * match_(end + dir * h) - match_(end + 2.0 * dir * h)) / (2.0 * h);
  const double expected = (d - 1.0) / (-sign * 2.0 * p.a);
  return std::fabs(phi_prime_direct(end) - expected);
}

// ---------------------------------------------------------------- export

std::string solution_csv(const ProfileSolution& sol, int rows) {
  const Profile& p = sol.profile();
  std::ostringstream os;
  os.precision(12);
  os << "tau,rho,sigma,f\n";
  for (int i = 1; i <= rows; ++i) {
    double t = p.tau_minus + p.width() * i / (rows + 1.0);
    os << t << ',' << sol.rho(t) << ',' << sol.sigma_tau(t) << ',' << sol.f_tau(t) << '\n';
  }
  return os.str();
}

}  // namespace ggk
