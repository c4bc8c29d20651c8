#include "ggk/jet.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

namespace ggk {

namespace {

void gen_degree(int nvars, int deg, int var, std::vector<uint8_t>& cur,
                std::vector<std::vector<uint8_t>>& out) {
  if (var == nvars - 1) {
    cur[var] = static_cast<uint8_t>(deg);
    out.push_back(cur);
    return;
  }
  for (int e = deg; e >= 0; --e) {
    cur[var] = static_cast<uint8_t>(e);
    gen_degree(nvars, deg - e, var + 1, cur, out);
  }
  cur[var] = 0;
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

void check_compatible(const Jet& a, const Jet& b) {
  if (a.nvars() != b.nvars()) throw JetError("jet variable count mismatch");
}

}  // namespace

JetLayout::JetLayout(int nvars, int order) : nvars_(nvars), order_(order) {
  if (nvars <= 0) throw JetError("jet needs at least one variable");
  if (order < 0 || order > kMaxJetOrder) throw JetError("jet order out of range 0..4");
  std::vector<uint8_t> cur(nvars, 0);
  degree_end_.assign(order + 1, 0);
  for (int d = 0; d <= order; ++d) {
    gen_degree(nvars, d, 0, cur, exps_);
    degree_end_[d] = static_cast<int>(exps_.size());
  }
  degree_of_.resize(exps_.size());
  mfact_.resize(exps_.size());
  for (size_t i = 0; i < exps_.size(); ++i) {
    int d = 0;
    double mf = 1.0;
    for (uint8_t e : exps_[i]) {
      d += e;
      mf *= factorial(e);
    }
    degree_of_[i] = d;
    mfact_[i] = mf;
  }
  std::vector<std::vector<Triple>> by_deg(order + 1);
  std::vector<uint8_t> sum(nvars);
  for (int i = 0; i < size(); ++i) {
    for (int j = 0; j < size(); ++j) {
      int d = degree_of_[i] + degree_of_[j];
      if (d > order) continue;
      for (int v = 0; v < nvars; ++v) sum[v] = exps_[i][v] + exps_[j][v];
      by_deg[d].push_back({i, j, index_of(sum)});
    }
  }
  products_end_.assign(order + 1, 0);
  for (int d = 0; d <= order; ++d) {
    products_.insert(products_.end(), by_deg[d].begin(), by_deg[d].end());
    products_end_[d] = static_cast<int>(products_.size());
  }
  lower_.resize(nvars);
  std::vector<uint8_t> low(nvars);
  for (int v = 0; v < nvars; ++v) {
    lower_[v].assign(exps_.size(), {-1, 0.0});
    for (int i = 0; i < size(); ++i) {
      if (exps_[i][v] == 0) continue;
      low = exps_[i];
      low[v] -= 1;
      lower_[v][i] = {index_of(low), static_cast<double>(exps_[i][v])};
    }
  }
}

int JetLayout::index_of(const std::vector<uint8_t>& e) const {
  int d = 0;
  for (uint8_t x : e) d += x;
  if (d > order_) return -1;
  int lo = d == 0 ? 0 : degree_end_[d - 1];
  int hi = degree_end_[d];
  // Within a degree the exponents are sorted in descending lexicographic order.
  auto first = exps_.begin() + lo, last = exps_.begin() + hi;
  auto it = std::lower_bound(first, last, e, [](const std::vector<uint8_t>& a,
                                                const std::vector<uint8_t>& b) { return a > b; });
  if (it == last || *it != e) return -1;
  return static_cast<int>(it - exps_.begin());
}

const JetLayout& JetLayout::get(int nvars, int order) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::unique_ptr<JetLayout>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(nvars, order);
  auto it = cache.find(key);
  if (it != cache.end()) return *it->second;
  auto* layout = new JetLayout(nvars, order);
  cache.emplace(key, std::unique_ptr<JetLayout>(layout));
  return *layout;
}

Jet::Jet(int nvars, int order, double value) : nvars_(nvars), order_(order) {
  const JetLayout& L = JetLayout::get(nvars, order);
  c_.assign(L.size(), 0.0);
  c_[0] = value;
}

Jet Jet::variable(int nvars, int order, int var, double value) {
  Jet j(nvars, order, value);
  if (order >= 1) j.c_[1 + var] = 1.0;
  return j;
}

double Jet::d(int i) const {
  if (order_ < 1) throw JetError("first derivative needs order >= 1");
  return c_[1 + i];
}

double Jet::d2(int i, int j) const { return partial({i, j}); }

double Jet::partial(const std::vector<int>& vars) const {
  if (static_cast<int>(vars.size()) > order_) throw JetError("derivative exceeds jet order");
  std::vector<uint8_t> e(nvars_, 0);
  for (int v : vars) e[v] += 1;
  const JetLayout& L = JetLayout::get(nvars_, order_);
  int idx = L.index_of(e);
  return c_[idx] * L.multi_factorial(idx);
}

Jet Jet::derivative(int var) const {
  if (order_ < 1) throw JetError("cannot differentiate an order-0 jet");
  Jet r(nvars_, order_ - 1, 0.0);
  const JetLayout& L = JetLayout::get(nvars_, order_);
  const auto& low = L.lower(var);
  for (int i = 0; i < L.size(); ++i) {
    if (low[i].target < 0) continue;
    r.c_[low[i].target] += low[i].factor * c_[i];
  }
  return r;
}

Jet Jet::truncated(int order) const {
  if (order >= order_) return *this;
  Jet r(nvars_, order, 0.0);
  std::copy(c_.begin(), c_.begin() + r.c_.size(), r.c_.begin());
  return r;
}

Jet& Jet::operator+=(const Jet& o) {
  check_compatible(*this, o);
  if (o.order_ < order_) *this = truncated(o.order_);
  for (size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  return *this;
}

Jet& Jet::operator-=(const Jet& o) {
  check_compatible(*this, o);
  if (o.order_ < order_) *this = truncated(o.order_);
  for (size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  return *this;
}

Jet& Jet::operator*=(const Jet& o) { return *this = mul(*this, o); }
Jet& Jet::operator/=(const Jet& o) { return *this = mul(*this, reciprocal(o)); }
Jet& Jet::operator+=(double s) { c_[0] += s; return *this; }
Jet& Jet::operator-=(double s) { c_[0] -= s; return *this; }
Jet& Jet::operator*=(double s) {
  for (double& x : c_) x *= s;
  return *this;
}
Jet& Jet::operator/=(double s) {
  for (double& x : c_) x /= s;
  return *this;
}
Jet Jet::operator-() const {
  Jet r = *this;
  for (double& x : r.c_) x = -x;
  return r;
}

Jet mul(const Jet& a, const Jet& b) {
  check_compatible(a, b);
  int order = std::min(a.order_, b.order_);
  Jet r(a.nvars_, order, 0.0);
  r.c_[0] = 0.0;
  const JetLayout& L = JetLayout::get(a.nvars_, order);
  const auto& P = L.products();
  const int n = L.products_upto(order);
  const double* ac = a.c_.data();
  const double* bc = b.c_.data();
  double* rc = r.c_.data();
  for (int t = 0; t < n; ++t) rc[P[t].k] += ac[P[t].i] * bc[P[t].j];
  return r;
}

Jet operator+(Jet a, const Jet& b) { return a += b; }
Jet operator-(Jet a, const Jet& b) { return a -= b; }
Jet operator*(const Jet& a, const Jet& b) { return mul(a, b); }
Jet operator/(const Jet& a, const Jet& b) { return mul(a, reciprocal(b)); }
Jet operator+(Jet a, double s) { return a += s; }
Jet operator+(double s, Jet a) { return a += s; }
Jet operator-(Jet a, double s) { return a -= s; }
Jet operator-(double s, const Jet& a) { return (-a) += s; }
Jet operator*(Jet a, double s) { return a *= s; }
Jet operator*(double s, Jet a) { return a *= s; }
Jet operator/(Jet a, double s) { return a /= s; }
Jet operator/(double s, const Jet& a) { return reciprocal(a) *= s; }

Jet compose(const Jet& a, const std::vector<double>& derivs) {
  const int n = a.order();
  Jet h = a;
  h.coeffs()[0] = 0.0;
  auto coef = [&](int k) {
    return k < static_cast<int>(derivs.size()) ? derivs[k] / factorial(k) : 0.0;
  };
  Jet r(a.nvars(), n, coef(n));
  for (int k = n - 1; k >= 0; --k) {
    r = mul(r, h);
    r.coeffs()[0] += coef(k);
  }
  return r;
}

Jet reciprocal(const Jet& a) {
  double x = a.value();
  if (x == 0.0) throw JetError("division by a jet with zero value");
  std::vector<double> d(a.order() + 1);
  double p = 1.0 / x;
  for (int k = 0; k <= a.order(); ++k) {
    d[k] = p;
    p *= -(k + 1) / x;
  }
  return compose(a, d);
}

Jet log(const Jet& a) {
  double x = a.value();
  if (!(x > 0.0)) throw JetError("log of a non-positive jet");
  std::vector<double> d(a.order() + 1);
  d[0] = std::log(x);
  double p = 1.0 / x;
  for (int k = 1; k <= a.order(); ++k) {
    d[k] = p;
    p *= -k / x;
  }
  return compose(a, d);
}

Jet exp(const Jet& a) {
  double e = std::exp(a.value());
  return compose(a, std::vector<double>(a.order() + 1, e));
}

Jet pow(const Jet& a, double q) {
  double x = a.value();
  if (x < 0.0 || (x == 0.0 && a.order() > 0)) throw JetError("power of a non-positive jet");
  std::vector<double> d(a.order() + 1);
  double c = 1.0;
  for (int k = 0; k <= a.order(); ++k) {
    d[k] = c * std::pow(x, q - k);
    c *= (q - k);
  }
  return compose(a, d);
}

Jet sqrt(const Jet& a) {
  if (a.value() < 0.0 || (a.value() == 0.0 && a.order() > 0))
    throw JetError("sqrt of a non-positive jet");
  return pow(a, 0.5);
}

Jet sin(const Jet& a) {
  double s = std::sin(a.value()), c = std::cos(a.value());
  std::vector<double> d(a.order() + 1);
  const double cyc[4] = {s, c, -s, -c};
  for (int k = 0; k <= a.order(); ++k) d[k] = cyc[k % 4];
  return compose(a, d);
}

Jet cos(const Jet& a) {
  double s = std::sin(a.value()), c = std::cos(a.value());
  std::vector<double> d(a.order() + 1);
  const double cyc[4] = {c, -s, -c, s};
  for (int k = 0; k <= a.order(); ++k) d[k] = cyc[k % 4];
  return compose(a, d);
}

std::vector<Jet> jet_seed(const std::vector<double>& point, int order) {
  if (order < 0 || order > kMaxJetOrder) throw JetError("jet order out of range 0..4");
  const int n = static_cast<int>(point.size());
  std::vector<Jet> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(Jet::variable(n, order, i, point[i]));
  return out;
}

JetMatrix::JetMatrix(int rows, int cols, const Jet& fill)
    : rows_(rows), cols_(cols), a_(static_cast<size_t>(rows) * cols, fill) {
  if (rows > kMaxJetMatrix || cols > kMaxJetMatrix) throw JetError("jet matrix larger than 8x8");
}

JetMatrix JetMatrix::operator*(const JetMatrix& o) const {
  if (cols_ != o.rows_) throw JetError("jet matrix shape mismatch");
  Jet zero = a_[0] * 0.0;
  JetMatrix r(rows_, o.cols_, zero);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < o.cols_; ++j) {
      Jet s = zero;
      for (int k = 0; k < cols_; ++k) s += (*this)(i, k) * o(k, j);
      r(i, j) = s;
    }
  return r;
}

Jet JetMatrix::det() const {
  if (rows_ != cols_) throw JetError("determinant of a non-square jet matrix");
  const int n = rows_;
  std::vector<Jet> m = a_;
  Jet result = m[0] * 0.0 + 1.0;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    double best = std::fabs(m[col * n + col].value());
    for (int r = col + 1; r < n; ++r) {
      double v = std::fabs(m[r * n + col].value());
      if (v > best) {
        best = v;
        piv = r;
      }
    }
    if (best == 0.0) throw JetError("jet determinant with singular base matrix");
    if (piv != col) {
      for (int c = 0; c < n; ++c) std::swap(m[col * n + c], m[piv * n + c]);
      result = -result;
    }
    const Jet& p = m[col * n + col];
    result *= p;
    Jet inv = reciprocal(p);
    for (int r = col + 1; r < n; ++r) {
      Jet f = m[r * n + col] * inv;
      for (int c = col + 1; c < n; ++c) m[r * n + c] -= f * m[col * n + c];
    }
  }
  return result;
}

JetMatrix JetMatrix::inverse() const {
  if (rows_ != cols_) throw JetError("inverse of a non-square jet matrix");
  const int n = rows_;
  std::vector<Jet> m = a_;
  Jet zero = a_[0] * 0.0;
  JetMatrix inv(n, n, zero);
  for (int i = 0; i < n; ++i) inv(i, i) = zero + 1.0;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    double best = std::fabs(m[col * n + col].value());
    for (int r = col + 1; r < n; ++r) {
      double v = std::fabs(m[r * n + col].value());
      if (v > best) {
        best = v;
        piv = r;
      }
    }
    if (best == 0.0) throw JetError("jet inverse of a singular base matrix");
    if (piv != col) {
      for (int c = 0; c < n; ++c) {
        std::swap(m[col * n + c], m[piv * n + c]);
        std::swap(inv(col, c), inv(piv, c));
      }
    }
    Jet pinv = reciprocal(m[col * n + col]);
    for (int c = 0; c < n; ++c) {
      m[col * n + c] = m[col * n + c] * pinv;
      inv(col, c) = inv(col, c) * pinv;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      Jet f = m[r * n + col];
      for (int c = 0; c < n; ++c) {
        m[r * n + c] -= f * m[col * n + c];
        inv(r, c) -= f * inv(col, c);
      }
    }
  }
  return inv;
}

CJet operator+(const CJet& a, const CJet& b) { return CJet(a.re + b.re, a.im + b.im); }
CJet operator-(const CJet& a, const CJet& b) { return CJet(a.re - b.re, a.im - b.im); }
CJet operator*(const CJet& a, const CJet& b) {
  return CJet(a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re);
}
CJet operator*(const CJet& a, double s) { return CJet(a.re * s, a.im * s); }
CJet times_i(const CJet& a) { return CJet(-a.im, a.re); }

}  // namespace ggk
