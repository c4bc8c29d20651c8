#pragma once

// Levi-Civita machinery from Kahler potentials: metric jets, Christoffel
// symbols, curvature, gradients and Hessian endomorphisms.
//
// Curvature convention: R(v,w)xi = nabla_w nabla_v xi - nabla_v nabla_w xi
// + nabla_[v,w] xi, the negative of the usual operator.

#include <vector>

#include "ggk/chart.hpp"
#include "ggk/jet.hpp"
#include "ggk/linalg.hpp"

namespace ggk {

struct MetricJet {
  int dim = 0;
  Mat g;
  std::vector<Mat> dg;                // dg[c](a,b) = d_c g_ab
  std::vector<std::vector<Mat>> ddg;  // ddg[c][d](a,b); empty when unavailable
  bool has_second() const { return !ddg.empty(); }
};

// Metric jets from a potential jet K of order >= 3 on 2n real variables.
MetricJet metric_from_potential_jet(const Jet& K);
// order 4 yields second derivatives of g, order 3 only first derivatives.
MetricJet metric_from_potential(const Chart& chart, const Vec& x, int order = 4);

struct ScalarJet {
  double value = 0.0;
  Vec grad;
  Mat hess;
  std::vector<Mat> third;  // third[i](j,k)
};
ScalarJet scalar_jet(const Jet& f);

struct FieldJet {
  Vec value;
  Mat d;                // d(k,j) = d_j X^k
  std::vector<Mat> dd;  // dd[i](k,j) = d_i d_j X^k
};
FieldJet field_jet(const std::vector<Jet>& X);

struct Christoffel {
  int dim = 0;
  std::vector<Mat> G;                 // G[k](i,j) = Gamma^k_ij
  std::vector<std::vector<Mat>> dG;   // dG[l][k](i,j) = d_l Gamma^k_ij
  // Gamma^k_ij a^i b^j.
  Vec contract(const Vec& a, const Vec& b) const;
  // Matrix M(k,j) = Gamma^k_ij a^i, so nabla_a X = dX(a) + M X.
  Mat along(const Vec& a) const;
};
Christoffel christoffel(const MetricJet& m);
// max |d_c g_ab - g(Gamma_c a, b) - g(a, Gamma_c b)|.
double metricity_residual(const MetricJet& m, const Christoffel& G);

class CurvatureTensor {
 public:
  CurvatureTensor() = default;
  CurvatureTensor(int dim, Mat g);
  int dim() const { return n_; }
  // Usual components R^l_{kij}: R_std(d_i,d_j) d_k = R^l_{kij} d_l.
  double& up(int l, int k, int i, int j) { return r_[((l * n_ + k) * n_ + i) * n_ + j]; }
  double up(int l, int k, int i, int j) const { return r_[((l * n_ + k) * n_ + i) * n_ + j]; }
  // Lowered form R_{ijkl} = g(R_std(d_i,d_j) d_k, d_l).
  double low(int i, int j, int k, int l) const;
  // R(v,w)xi in the module's sign convention.
  Vec apply(const Vec& v, const Vec& w, const Vec& xi) const;
  // Matrix of xi -> R(v,w)xi.
  Mat op(const Vec& v, const Vec& w) const;
  double antisymmetry_residual() const;
  double bianchi_residual() const;
  double pair_symmetry_residual() const;

 private:
  int n_ = 0;
  Mat g_;
  std::vector<double> r_;
};
CurvatureTensor curvature(const MetricJet& m, const Christoffel& G);

// Metric dual of df.
Vec gradient(const ScalarJet& f, const MetricJet& m);
// S = nabla grad f as an endomorphism, S(k,j) = nabla_j (grad f)^k.
Mat hessian_endo(const ScalarJet& f, const MetricJet& m, const Christoffel& G);

// Covariant derivatives of a vector field from its partials:
// first(k,j) = nabla_j X^k and second[l](k,j) = (nabla_l nabla X)^k_j.
struct CovariantField {
  Vec value;
  Mat first;
  std::vector<Mat> second;
};
CovariantField covariant_field(const FieldJet& X, const Christoffel& G);

// Everything the verification layer needs at one chart point.
struct PointGeometry {
  Vec x;
  MetricJet m;
  Mat ginv;
  Christoffel G;
  CurvatureTensor R;
  Mat J;
  bool has_fields = false;
  double tau = 0.0, Q = 0.0, psi = 0.0;
  Vec dtau, dQ;  // covectors
  Vec v, u;      // v = grad tau, u = J v
  Mat S, A;      // S = nabla v, A = nabla u = J S
  std::vector<Mat> dS;  // dS[l] = nabla_l S
  bool has_killing = false;
  Vec ugen;
  Mat Agen;
  std::vector<Mat> dAgen;

  double inner(const Vec& a, const Vec& b) const { return a.dot(m.g * b); }
  double norm(const Vec& a) const;
  static Mat along(const std::vector<Mat>& dT, const Vec& w);
};

PointGeometry evaluate_point(const Chart& chart, const Vec& x);

}  // namespace ggk
