#pragma once

// Truncated multivariate Taylor jets (order <= 4) over real coordinates.
//
// A Jet stores the Taylor coefficients of a scalar at a base point, indexed
// by the canonical rank of each multi-index.  Monomials are ordered by total
// degree and then lexicographically, so the coefficient array of an order-r
// jet is a prefix of the array of an order-s jet for r <= s in the same
// number of variables.  Arithmetic truncates to the smaller order of its
// operands.

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ggk {

constexpr int kMaxJetOrder = 4;
constexpr int kMaxJetMatrix = 8;

class JetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Monomial bookkeeping shared by all jets with the same (nvars, order).
class JetLayout {
 public:
  static const JetLayout& get(int nvars, int order);

  int nvars() const { return nvars_; }
  int order() const { return order_; }
  int size() const { return static_cast<int>(exps_.size()); }
  // Number of monomials of degree <= d.
  int size_upto(int d) const { return degree_end_[d]; }
  int degree(int idx) const { return degree_of_[idx]; }
  const std::vector<uint8_t>& exponents(int idx) const { return exps_[idx]; }
  int index_of(const std::vector<uint8_t>& e) const;
  // Product triples (i, j, k) with deg i + deg j <= order, sorted by deg k.
  struct Triple { int i, j, k; };
  const std::vector<Triple>& products() const { return products_; }
  int products_upto(int d) const { return products_end_[d]; }
  // For each variable, the map idx -> (idx with exponent lowered, factor).
  struct Lower { int target; double factor; };
  const std::vector<Lower>& lower(int var) const { return lower_[var]; }
  // Product of factorials of the exponents of idx.
  double multi_factorial(int idx) const { return mfact_[idx]; }

 private:
  JetLayout(int nvars, int order);
  int nvars_, order_;
  std::vector<std::vector<uint8_t>> exps_;
  std::vector<int> degree_of_;
  std::vector<int> degree_end_;
  std::vector<Triple> products_;
  std::vector<int> products_end_;
  std::vector<std::vector<Lower>> lower_;
  std::vector<double> mfact_;
};

class Jet {
 public:
  Jet() = default;
  Jet(int nvars, int order, double value = 0.0);

  static Jet constant(int nvars, int order, double value) { return Jet(nvars, order, value); }
  static Jet variable(int nvars, int order, int var, double value);

  int nvars() const { return nvars_; }
  int order() const { return order_; }
  bool empty() const { return c_.empty(); }

  double value() const { return c_[0]; }
  // Raw Taylor coefficient of the monomial with the given rank.
  double coeff(int idx) const { return c_[idx]; }
  double& coeff(int idx) { return c_[idx]; }
  const std::vector<double>& coeffs() const { return c_; }
  std::vector<double>& coeffs() { return c_; }

  // Partial derivatives at the base point.
  double d(int i) const;
  double d2(int i, int j) const;
  double partial(const std::vector<int>& vars) const;

  // Exact derivative with respect to one variable; order drops by one.
  Jet derivative(int var) const;
  // Drop coefficients above the given order.
  Jet truncated(int order) const;

  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& operator*=(const Jet& o);
  Jet& operator/=(const Jet& o);
  Jet& operator+=(double s);
  Jet& operator-=(double s);
  Jet& operator*=(double s);
  Jet& operator/=(double s);
  Jet operator-() const;

 private:
  int nvars_ = 0;
  int order_ = 0;
  std::vector<double> c_;
  friend Jet mul(const Jet&, const Jet&);
};

Jet operator+(Jet a, const Jet& b);
Jet operator-(Jet a, const Jet& b);
Jet operator*(const Jet& a, const Jet& b);
Jet operator/(const Jet& a, const Jet& b);
Jet operator+(Jet a, double s);
Jet operator+(double s, Jet a);
Jet operator-(Jet a, double s);
Jet operator-(double s, const Jet& a);
Jet operator*(Jet a, double s);
Jet operator*(double s, Jet a);
Jet operator/(Jet a, double s);
Jet operator/(double s, const Jet& a);

Jet mul(const Jet& a, const Jet& b);
Jet reciprocal(const Jet& a);
Jet log(const Jet& a);
Jet exp(const Jet& a);
Jet sqrt(const Jet& a);
Jet sin(const Jet& a);
Jet cos(const Jet& a);
Jet pow(const Jet& a, double p);

// Composes a univariate function, given by its derivatives f(x0), f'(x0), ...
// at x0 = a.value(), with the jet a.  Missing high derivatives count as zero.
Jet compose(const Jet& a, const std::vector<double>& derivs);

// One jet per coordinate: value = coordinate, unit slope in its own slot.
std::vector<Jet> jet_seed(const std::vector<double>& point, int order);

// Square matrix of jets with elimination-based determinant and inverse.
class JetMatrix {
 public:
  JetMatrix() = default;
  JetMatrix(int rows, int cols, const Jet& fill);
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  Jet& operator()(int i, int j) { return a_[i * cols_ + j]; }
  const Jet& operator()(int i, int j) const { return a_[i * cols_ + j]; }

  Jet det() const;
  JetMatrix inverse() const;
  JetMatrix operator*(const JetMatrix& o) const;

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<Jet> a_;
};

// Complex scalar built from two real jets.
struct CJet {
  Jet re, im;
  CJet() = default;
  CJet(Jet r, Jet i) : re(std::move(r)), im(std::move(i)) {}
  CJet conj() const { return CJet(re, -im); }
};
CJet operator+(const CJet& a, const CJet& b);
CJet operator-(const CJet& a, const CJet& b);
CJet operator*(const CJet& a, const CJet& b);
CJet operator*(const CJet& a, double s);
CJet times_i(const CJet& a);

}  // namespace ggk
