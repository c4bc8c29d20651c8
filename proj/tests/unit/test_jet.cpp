#include "doctest.h"

#include <cmath>
#include <random>

#include "ggk/jet.hpp"

using namespace ggk;

TEST_CASE("seed gives unit slope in own slot") {
  auto x = jet_seed({2.0}, 1);
  CHECK(x[0].value() == 2.0);
  CHECK(x[0].d(0) == 1.0);
  auto p = jet_seed({0.0, 0.0}, 2);
  Jet K = p[0] * p[0] + p[1] * p[1];
  CHECK(K.d2(0, 0) == doctest::Approx(2.0));
  CHECK(K.d2(1, 1) == doctest::Approx(2.0));
  CHECK(K.d2(0, 1) == doctest::Approx(0.0));
  CHECK_THROWS_AS(jet_seed({1.0}, 5), JetError);
}

TEST_CASE("exp taylor coefficients at one") {
  auto x = jet_seed({1.0}, 4);
  Jet e = exp(x[0]);
  const double E = std::exp(1.0);
  const double want[5] = {1.0, 1.0, 0.5, 1.0 / 6.0, 1.0 / 24.0};
  for (int i = 0; i < 5; ++i) CHECK(e.coeff(i) == doctest::Approx(E * want[i]).epsilon(1e-14));
}

TEST_CASE("log one plus rho squared") {
  auto r = jet_seed({0.0}, 2);
  Jet l = log(1.0 + r[0] * r[0]);
  CHECK(l.value() == 0.0);
  CHECK(l.partial({0, 0}) == doctest::Approx(2.0));
}

TEST_CASE("field axioms and determinant of scalar matrix") {
  auto x = jet_seed({0.3, -0.7}, 4);
  Jet j = 1.5 + x[0] * x[1] - 2.0 * x[1] * x[1] * x[0];
  Jet q = (j * j) / j;
  for (size_t i = 0; i < j.coeffs().size(); ++i) CHECK(q.coeff(i) == doctest::Approx(j.coeff(i)));
  JetMatrix m(1, 1, j);
  Jet d = m.det();
  for (size_t i = 0; i < j.coeffs().size(); ++i) CHECK(d.coeff(i) == doctest::Approx(j.coeff(i)));
}

TEST_CASE("errors on bad arguments") {
  auto x = jet_seed({0.0}, 2);
  CHECK_THROWS_AS(reciprocal(x[0]), JetError);
  CHECK_THROWS_AS(log(x[0] - 1.0), JetError);
  CHECK_THROWS_AS(sqrt(x[0] - 1.0), JetError);
  Jet y = Jet::variable(2, 1, 0, 1.0);
  CHECK_THROWS_AS(x[0] + y, JetError);
  Jet z(1, 1, 1.0);
  CHECK_THROWS_AS(JetMatrix(9, 9, z), JetError);
}

// Random integer polynomials of degree <= 4 in three variables, differentiated
// symbolically by exponent bookkeeping.
TEST_CASE("jet derivatives agree with symbolic polynomial differentiation") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> coef(-5, 5), ex(0, 2);
  for (int trial = 0; trial < 20; ++trial) {
    struct Mono { int c; int e[3]; };
    std::vector<Mono> poly;
    for (int t = 0; t < 6; ++t) {
      Mono m{coef(rng), {ex(rng), ex(rng), ex(rng)}};
      while (m.e[0] + m.e[1] + m.e[2] > 4) m.e[ex(rng) % 3] = 0;
      poly.push_back(m);
    }
    const double pt[3] = {0.5, -1.25, 2.0};
    auto x = jet_seed({pt[0], pt[1], pt[2]}, 4);
    Jet P(3, 4, 0.0);
    for (auto& m : poly) {
      Jet t(3, 4, static_cast<double>(m.c));
      for (int v = 0; v < 3; ++v)
        for (int k = 0; k < m.e[v]; ++k) t = t * x[v];
      P += t;
    }
    const std::vector<std::vector<int>> probes = {{}, {0}, {1, 2}, {0, 0, 1}, {2, 2, 2, 1}, {0, 1, 2, 2}};
    for (const auto& vars : probes) {
      int d[3] = {0, 0, 0};
      for (int v : vars) d[v]++;
      double want = 0.0;
      for (auto& m : poly) {
        double term = m.c;
        for (int v = 0; v < 3; ++v) {
          if (m.e[v] < d[v]) { term = 0.0; break; }
          for (int k = 0; k < d[v]; ++k) term *= (m.e[v] - k);
          term *= std::pow(pt[v], m.e[v] - d[v]);
        }
        want += term;
      }
      CHECK(P.partial(vars) == doctest::Approx(want).epsilon(1e-12));
    }
    Jet dP = P.derivative(1);
    CHECK(dP.partial({0, 2}) == doctest::Approx(P.partial({0, 1, 2})).epsilon(1e-12));
  }
}

TEST_CASE("matrix inverse and determinant match closed forms") {
  auto x = jet_seed({0.2, 0.4}, 3);
  JetMatrix m(2, 2, Jet(2, 3, 0.0));
  m(0, 0) = 1.0 + x[0] * x[0];
  m(0, 1) = x[0] * x[1];
  m(1, 0) = x[1] - 0.5;
  m(1, 1) = 2.0 + x[1];
  Jet det = m.det();
  Jet want = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  for (size_t i = 0; i < det.coeffs().size(); ++i) CHECK(det.coeff(i) == doctest::Approx(want.coeff(i)));
  JetMatrix prod = m * m.inverse();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (size_t c = 0; c < prod(i, j).coeffs().size(); ++c)
        CHECK(prod(i, j).coeff(c) == doctest::Approx((i == j && c == 0) ? 1.0 : 0.0));
}

TEST_CASE("trig and power compositions") {
  auto x = jet_seed({0.3}, 4);
  Jet s = sin(x[0]), c = cos(x[0]);
  Jet one = s * s + c * c;
  CHECK(one.value() == doctest::Approx(1.0));
  for (int i = 1; i <= 4; ++i) CHECK(one.coeff(i) == doctest::Approx(0.0));
  Jet r = sqrt(x[0]);
  Jet back = r * r;
  for (int i = 0; i <= 4; ++i) CHECK(back.coeff(i) == doctest::Approx(x[0].coeff(i)));
}
