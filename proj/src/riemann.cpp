#include "ggk/riemann.hpp"

#include <algorithm>
#include <cmath>

namespace ggk {

MetricJet metric_from_potential_jet(const Jet& K) {
  const int N = K.nvars();
  if (N % 2 != 0) throw GeometryError("potential must live on an even number of real variables");
  if (K.order() < 3) throw GeometryError("metric jets need a potential of order >= 3");
  const int n = N / 2;
  std::vector<Jet> D(N);
  for (int i = 0; i < N; ++i) D[i] = K.derivative(i);
  std::vector<std::vector<Jet>> DD(N, std::vector<Jet>(N));
  for (int i = 0; i < N; ++i)
    for (int j = i; j < N; ++j) {
      DD[i][j] = D[i].derivative(j);
      if (j != i) DD[j][i] = DD[i][j];
    }
  std::vector<std::vector<Jet>> g(N, std::vector<Jet>(N));
  for (int l = 0; l < n; ++l)
    for (int m = 0; m < n; ++m) {
      const int xl = 2 * l, yl = 2 * l + 1, xm = 2 * m, ym = 2 * m + 1;
      Jet same = 0.5 * (DD[xl][xm] + DD[yl][ym]);
      g[xl][xm] = same;
      g[yl][ym] = same;
      g[xl][ym] = 0.5 * (DD[xl][ym] - DD[yl][xm]);
      g[yl][xm] = 0.5 * (DD[xm][yl] - DD[ym][xl]);
    }
  MetricJet m;
  m.dim = N;
  m.g.resize(N, N);
  m.dg.assign(N, Mat::Zero(N, N));
  const bool second = g[0][0].order() >= 2;
  if (second) m.ddg.assign(N, std::vector<Mat>(N, Mat::Zero(N, N)));
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b) {
      const Jet& j = g[a][b];
      m.g(a, b) = j.value();
      for (int c = 0; c < N; ++c) m.dg[c](a, b) = j.d(c);
      if (second)
        for (int c = 0; c < N; ++c)
          for (int d = c; d < N; ++d) {
            double v = j.d2(c, d);
            m.ddg[c][d](a, b) = v;
            m.ddg[d][c](a, b) = v;
          }
    }
  return m;
}

MetricJet metric_from_potential(const Chart& chart, const Vec& x, int order) {
  if (order < 3 || order > 4) throw GeometryError("metric order must be 3 or 4");
  if (x.size() != chart.real_dim()) throw GeometryError("point dimension does not match chart");
  if (!chart.in_domain(x)) throw GeometryError("point outside chart domain");
  std::vector<double> p(x.data(), x.data() + x.size());
  MetricJet m = metric_from_potential_jet(chart.potential(jet_seed(p, order)));
  Eigen::LLT<Mat> llt(m.g);
  if (llt.info() != Eigen::Success) throw GeometryError("potential is not Kahler at this point (indefinite metric)");
  return m;
}

ScalarJet scalar_jet(const Jet& f) {
  const int N = f.nvars();
  ScalarJet s;
  s.value = f.value();
  if (f.order() >= 1) {
    s.grad.resize(N);
    for (int i = 0; i < N; ++i) s.grad(i) = f.d(i);
  }
  if (f.order() >= 2) {
    s.hess.resize(N, N);
    for (int i = 0; i < N; ++i)
      for (int j = i; j < N; ++j) s.hess(i, j) = s.hess(j, i) = f.d2(i, j);
  }
  if (f.order() >= 3) {
    s.third.assign(N, Mat::Zero(N, N));
    for (int i = 0; i < N; ++i)
      for (int j = i; j < N; ++j)
        for (int k = j; k < N; ++k) {
          double v = f.partial({i, j, k});
          s.third[i](j, k) = s.third[i](k, j) = v;
          s.third[j](i, k) = s.third[j](k, i) = v;
          s.third[k](i, j) = s.third[k](j, i) = v;
        }
  }
  return s;
}

FieldJet field_jet(const std::vector<Jet>& X) {
  const int N = static_cast<int>(X.size());
  FieldJet f;
  f.value.resize(N);
  for (int k = 0; k < N; ++k) f.value(k) = X[k].value();
  if (N > 0 && X[0].order() >= 1) {
    f.d.resize(N, N);
    for (int k = 0; k < N; ++k)
      for (int j = 0; j < N; ++j) f.d(k, j) = X[k].d(j);
  }
  if (N > 0 && X[0].order() >= 2) {
    f.dd.assign(N, Mat::Zero(N, N));
    for (int k = 0; k < N; ++k)
      for (int i = 0; i < N; ++i)
        for (int j = i; j < N; ++j) f.dd[i](k, j) = f.dd[j](k, i) = X[k].d2(i, j);
  }
  return f;
}

Vec Christoffel::contract(const Vec& a, const Vec& b) const {
  Vec r(dim);
  for (int k = 0; k < dim; ++k) r(k) = a.dot(G[k] * b);
  return r;
}

Mat Christoffel::along(const Vec& a) const {
  Mat M(dim, dim);
  for (int k = 0; k < dim; ++k) M.row(k) = a.transpose() * G[k];
  return M;
}

Christoffel christoffel(const MetricJet& m) {
  const int N = m.dim;
  Christoffel C;
  C.dim = N;
  Mat gi = m.g.inverse();
  // lowered[mm](i,j) = 1/2 (d_i g_jm + d_j g_im - d_m g_ij)
  std::vector<Mat> lowered(N, Mat::Zero(N, N));
  for (int mm = 0; mm < N; ++mm)
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j)
        lowered[mm](i, j) = 0.5 * (m.dg[i](j, mm) + m.dg[j](i, mm) - m.dg[mm](i, j));
  C.G.assign(N, Mat::Zero(N, N));
  for (int k = 0; k < N; ++k)
    for (int mm = 0; mm < N; ++mm) C.G[k] += gi(k, mm) * lowered[mm];
  if (!m.has_second()) return C;
  C.dG.assign(N, std::vector<Mat>(N, Mat::Zero(N, N)));
  for (int l = 0; l < N; ++l) {
    Mat dgi = -gi * m.dg[l] * gi;
    std::vector<Mat> dlow(N, Mat::Zero(N, N));
    for (int mm = 0; mm < N; ++mm)
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
          dlow[mm](i, j) = 0.5 * (m.ddg[l][i](j, mm) + m.ddg[l][j](i, mm) - m.ddg[l][mm](i, j));
    for (int k = 0; k < N; ++k)
      for (int mm = 0; mm < N; ++mm) C.dG[l][k] += dgi(k, mm) * lowered[mm] + gi(k, mm) * dlow[mm];
  }
  return C;
}

double metricity_residual(const MetricJet& m, const Christoffel& G) {
  const int N = m.dim;
  double worst = 0.0;
  for (int c = 0; c < N; ++c) {
    Mat Gc(N, N);  // Gc(k,a) = Gamma^k_{c a}
    for (int k = 0; k < N; ++k) Gc.row(k) = G.G[k].row(c);
    Mat r = m.dg[c] - Gc.transpose() * m.g - m.g * Gc;
    worst = std::max(worst, r.cwiseAbs().maxCoeff());
  }
  return worst;
}

CurvatureTensor::CurvatureTensor(int dim, Mat g) : n_(dim), g_(std::move(g)), r_(static_cast<size_t>(dim) * dim * dim * dim, 0.0) {}

double CurvatureTensor::low(int i, int j, int k, int l) const {
  double s = 0.0;
  for (int m = 0; m < n_; ++m) s += g_(l, m) * up(m, k, i, j);
  return s;
}

Vec CurvatureTensor::apply(const Vec& v, const Vec& w, const Vec& xi) const { return op(v, w) * xi; }

Mat CurvatureTensor::op(const Vec& v, const Vec& w) const {
  Mat M = Mat::Zero(n_, n_);
  for (int l = 0; l < n_; ++l)
    for (int k = 0; k < n_; ++k) {
      double s = 0.0;
      for (int i = 0; i < n_; ++i) {
        if (v(i) == 0.0) continue;
        for (int j = 0; j < n_; ++j) s += up(l, k, i, j) * v(i) * w(j);
      }
      M(l, k) = -s;
    }
  return M;
}

double CurvatureTensor::antisymmetry_residual() const {
  double worst = 0.0;
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      for (int k = 0; k < n_; ++k)
        for (int l = 0; l < n_; ++l) {
          worst = std::max(worst, std::fabs(low(i, j, k, l) + low(j, i, k, l)));
          worst = std::max(worst, std::fabs(low(i, j, k, l) + low(i, j, l, k)));
        }
  return worst;
}

double CurvatureTensor::bianchi_residual() const {
  double worst = 0.0;
  for (int l = 0; l < n_; ++l)
    for (int k = 0; k < n_; ++k)
      for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j)
          worst = std::max(worst, std::fabs(up(l, k, i, j) + up(l, i, j, k) + up(l, j, k, i)));
  return worst;
}

double CurvatureTensor::pair_symmetry_residual() const {
  double worst = 0.0;
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      for (int k = 0; k < n_; ++k)
        for (int l = 0; l < n_; ++l) worst = std::max(worst, std::fabs(low(i, j, k, l) - low(k, l, i, j)));
  return worst;
}

CurvatureTensor curvature(const MetricJet& m, const Christoffel& G) {
  if (G.dG.empty()) throw GeometryError("curvature needs second derivatives of the metric");
  const int N = m.dim;
  CurvatureTensor R(N, m.g);
  for (int l = 0; l < N; ++l)
    for (int k = 0; k < N; ++k)
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
          double s = G.dG[i][l](j, k) - G.dG[j][l](i, k);
          for (int mm = 0; mm < N; ++mm) s += G.G[l](i, mm) * G.G[mm](j, k) - G.G[l](j, mm) * G.G[mm](i, k);
          R.up(l, k, i, j) = s;
        }
  return R;
}

Vec gradient(const ScalarJet& f, const MetricJet& m) { return m.g.ldlt().solve(f.grad); }

CovariantField covariant_field(const FieldJet& X, const Christoffel& G) {
  const int N = G.dim;
  CovariantField c;
  c.value = X.value;
  // nabla_j X^k = d_j X^k + Gamma^k_{jm} X^m
  c.first = X.d + G.along(X.value);
  if (X.dd.empty() || G.dG.empty()) return c;
  c.second.assign(N, Mat::Zero(N, N));
  for (int l = 0; l < N; ++l) {
    // d_l (nabla_j X^k)
    Mat dfirst(N, N);
    for (int k = 0; k < N; ++k)
      for (int j = 0; j < N; ++j)
        dfirst(k, j) = X.dd[l](k, j) + G.dG[l][k].row(j).dot(X.value) + G.G[k].row(j).dot(X.d.col(l));
    Mat Gl(N, N);  // Gl(k,m) = Gamma^k_{l m}
    for (int k = 0; k < N; ++k) Gl.row(k) = G.G[k].row(l);
    c.second[l] = dfirst + Gl * c.first - c.first * Gl;
  }
  return c;
}

Mat hessian_endo(const ScalarJet& f, const MetricJet& m, const Christoffel& G) {
  const int N = m.dim;
  Mat gi = m.g.inverse();
  FieldJet X;
  X.value = gi * f.grad;
  X.d.resize(N, N);
  for (int j = 0; j < N; ++j) X.d.col(j) = -gi * m.dg[j] * X.value + gi * f.hess.col(j);
  return covariant_field(X, G).first;
}

double PointGeometry::norm(const Vec& a) const { return std::sqrt(std::max(0.0, inner(a, a))); }

Mat PointGeometry::along(const std::vector<Mat>& dT, const Vec& w) {
  Mat M = Mat::Zero(dT[0].rows(), dT[0].cols());
  for (size_t l = 0; l < dT.size(); ++l) M += w(l) * dT[l];
  return M;
}

PointGeometry evaluate_point(const Chart& chart, const Vec& x) {
  PointGeometry P;
  P.x = x;
  const int N = chart.real_dim();
  if (!chart.in_domain(x)) throw GeometryError("point outside chart domain");
  std::vector<double> p(x.data(), x.data() + N);
  std::vector<Jet> seed = jet_seed(p, 4);
  P.m = metric_from_potential_jet(chart.potential(seed));
  Eigen::LLT<Mat> llt(P.m.g);
  if (llt.info() != Eigen::Success) throw GeometryError("potential is not Kahler at this point (indefinite metric)");
  P.ginv = P.m.g.inverse();
  P.G = christoffel(P.m);
  P.R = curvature(P.m, P.G);
  P.J = standard_j(chart.complex_dim());
  if (chart.has_tau()) {
    std::vector<Jet> s3(seed.size());
    for (int i = 0; i < N; ++i) s3[i] = seed[i].truncated(3);
    ScalarJet t = scalar_jet(chart.tau(s3));
    const Mat& gi = P.ginv;
    std::vector<Mat> dgi(N);
    for (int c = 0; c < N; ++c) dgi[c] = -gi * P.m.dg[c] * gi;
    FieldJet V;
    V.value = gi * t.grad;
    V.d.resize(N, N);
    for (int j = 0; j < N; ++j) V.d.col(j) = dgi[j] * t.grad + gi * t.hess.col(j);
    V.dd.assign(N, Mat::Zero(N, N));
    for (int i = 0; i < N; ++i)
      for (int j = i; j < N; ++j) {
        Mat ddgi = gi * P.m.dg[i] * gi * P.m.dg[j] * gi + gi * P.m.dg[j] * gi * P.m.dg[i] * gi -
                   gi * P.m.ddg[i][j] * gi;
        Vec col = ddgi * t.grad + dgi[j] * t.hess.col(i) + dgi[i] * t.hess.col(j) + gi * t.third[i].col(j);
        V.dd[i].col(j) = col;
        V.dd[j].col(i) = col;
      }
    CovariantField cv = covariant_field(V, P.G);
    P.has_fields = true;
    P.tau = t.value;
    P.dtau = t.grad;
    P.v = cv.value;
    P.u = P.J * P.v;
    P.S = cv.first;
    P.A = P.J * P.S;
    P.dS = cv.second;
    P.Q = P.inner(P.v, P.v);
    P.dQ = 2.0 * P.S.transpose() * P.m.g * P.v;
    P.psi = P.Q > 0.0 ? P.inner(P.S * P.v, P.v) / P.Q : 0.0;
  }
  if (chart.has_killing()) {
    std::vector<Jet> s2(seed.size());
    for (int i = 0; i < N; ++i) s2[i] = seed[i].truncated(2);
    CovariantField cu = covariant_field(field_jet(chart.killing(s2)), P.G);
    P.has_killing = true;
    P.ugen = cu.value;
    P.Agen = cu.first;
    P.dAgen = cu.second;
  }
  return P;
}

}  // namespace ggk
