#include "ggk/triple.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <limits>
#include <set>

#include "ggk/geodesic.hpp"

namespace ggk {

namespace {

constexpr double kQMin = 1e-6;

struct CJetMat {
  int r = 0, c = 0;
  std::vector<CJet> e;
  CJetMat(int rows, int cols, const Jet& zero) : r(rows), c(cols), e(rows * cols, CJet(zero, zero)) {}
  CJet& operator()(int i, int j) { return e[i * c + j]; }
  const CJet& operator()(int i, int j) const { return e[i * c + j]; }
};

CJet scale(const CJet& a, cplx z) {
  return CJet(a.re * z.real() - a.im * z.imag(), a.re * z.imag() + a.im * z.real());
}

// [[Re, -Im], [Im, Re]].
JetMatrix realified(const CJetMat& M) {
  JetMatrix R(2 * M.r, 2 * M.c, M(0, 0).re * 0.0);
  for (int i = 0; i < M.r; ++i)
    for (int j = 0; j < M.c; ++j) {
      R(i, j) = M(i, j).re;
      R(i, j + M.c) = -M(i, j).im;
      R(i + M.r, j) = M(i, j).im;
      R(i + M.r, j + M.c) = M(i, j).re;
    }
  return R;
}

// Gram matrix I + Z^* Z.
CJetMat gram(const CJetMat& Z, const Jet& zero) {
  CJetMat G(Z.c, Z.c, zero);
  for (int i = 0; i < Z.c; ++i)
    for (int j = 0; j < Z.c; ++j) {
      CJet acc(zero + (i == j ? 1.0 : 0.0), zero);
      for (int p = 0; p < Z.r; ++p) acc = acc + Z(p, i).conj() * Z(p, j);
      G(i, j) = acc;
    }
  return G;
}

std::vector<double> to_vector(const QDerivs& d) { return std::vector<double>(d.begin(), d.end()); }

// Derivatives of t -> t + Q(t) phi'(t) for the Fubini-Study law Q.
std::vector<double> tau_hat_derivs(const Modification& mod, double t, double tau_minus, double tau_plus, double a) {
  const double D = tau_plus - tau_minus;
  const double q = 2 * a * (t - tau_minus) * (tau_plus - t) / D;
  const double q1 = 2 * a * (tau_plus + tau_minus - 2 * t) / D;
  const double q2 = -4 * a / D;
  QDerivs p = mod.phi(t);
  return {t + q * p[1], 1 + q1 * p[1] + q * p[2], q2 * p[1] + 2 * q1 * p[2] + q * p[3],
          3 * q2 * p[2] + 3 * q1 * p[3] + q * p[4]};
}

CMat embed_rows(const CMat& B, int n, int offset) {
  CMat Y = CMat::Zero(n, B.cols());
  Y.block(offset, 0, B.rows(), B.cols()) = B;
  return Y;
}

CMat random_gaussian(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  CMat B(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) {
      double re = nd(rng);
      double im = nd(rng);
      B(i, j) = cplx(re, im);
    }
  return B;
}

// Orthonormal basis of the part of span(Y) orthogonal to the unit vector w.
CMat complement_in(const CMat& Y, const CVec& w) {
  CMat P = Y - w * (w.adjoint() * Y);
  Eigen::JacobiSVD<CMat> svd(P, Eigen::ComputeThinU);
  return svd.matrixU().leftCols(Y.cols() - 1);
}

TripleMeta grass_meta(int n, int k, int l, const Profile& p, bool modified, const std::string& spec) {
  TripleMeta m;
  m.kind = modified ? "modified" : (k == 1 ? "cp" : "grassmannian");
  m.spec = spec;
  m.compact = true;
  m.m = k * (n - k);
  if (k == 1) {
    m.d_plus = l - 1;
    m.d_minus = n - 1 - l;
  } else {
    m.d_plus = (k - 1) * (n - k);
    m.d_minus = k * (n - 1 - k);
  }
  m.k_plus = m.m - 1 - m.d_plus;
  m.k_minus = m.m - 1 - m.d_minus;
  m.q = m.d_plus + m.d_minus - m.m + 1;
  m.a = p.a;
  m.tau_minus = p.tau_minus;
  m.tau_plus = p.tau_plus;
  return m;
}

TripleMeta bundle_meta(const std::string& base, int rank, int sign, const Profile& p, const std::string& spec) {
  TripleMeta m;
  m.kind = "bundle";
  m.spec = spec;
  m.compact = false;
  const int nb = base == "cp1" ? 1 : 0;
  m.m = nb + rank;
  m.d_plus = sign > 0 ? nb : -1;
  m.d_minus = sign > 0 ? -1 : nb;
  m.k_plus = m.d_plus >= 0 ? m.m - 1 - m.d_plus : -1;
  m.k_minus = m.d_minus >= 0 ? m.m - 1 - m.d_minus : -1;
  m.q = 0;
  m.a = p.a;
  m.tau_minus = p.tau_minus;
  m.tau_plus = p.tau_plus;
  return m;
}

}  // namespace

NormalGeodesic Triple::sample_normal_geodesic(std::mt19937_64&) const {
  throw TripleError("normal geodesic sampling is not available for " + meta_.kind + " triples");
}

// ---------------------------------------------------------------------------
// Frames.

CMat orthonormal_frame(const CMat& B) {
  Eigen::HouseholderQR<CMat> qr(B);
  CMat Q = qr.householderQ() * CMat::Identity(B.rows(), B.cols());
  return Q;
}

double frame_distance(const CMat& A, const CMat& B) {
  if (A.cols() == 0 && B.cols() == 0) return 0.0;
  if (A.cols() != B.cols()) return 1.0;
  CMat R = B - A * (A.adjoint() * B);
  Eigen::JacobiSVD<CMat> svd(R);
  return svd.singularValues()(0);
}

int intersection_dim(const CMat& A, const CMat& B, double tol) {
  if (A.cols() == 0 || B.cols() == 0) return 0;
  Eigen::JacobiSVD<CMat> svd(A.adjoint() * B);
  int d = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > 1.0 - tol) ++d;
  return d;
}

CMat random_unitary(int n, std::mt19937_64& rng) {
  CMat B = random_gaussian(n, n, rng);
  Eigen::HouseholderQR<CMat> qr(B);
  CMat Q = qr.householderQ();
  CMat R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    cplx d = R(j, j);
    if (std::abs(d) > 0) Q.col(j) *= d / std::abs(d);
  }
  return Q;
}

// ---------------------------------------------------------------------------
// Grassmannian charts.

GrassChart::GrassChart(const GrassmannTriple& t, CMat U)
    : n_(t.n()), k_(t.k()), l_(t.l()), c_(t.potential_scale()), a_(t.profile().a),
      tau_minus_(t.profile().tau_minus), width_(t.profile().width()), mod_(t.mod_), U_(std::move(U)) {
  CMat P = CMat::Zero(n_, n_);
  for (int p = 0; p < l_; ++p) P(p, p) = 1.0;
  H_ = U_.adjoint() * P * U_;
}

int GrassChart::complex_dim() const { return k_ * (n_ - k_); }

namespace {
CJetMat z_matrix(const std::vector<Jet>& x, int rows, int cols) {
  CJetMat Z(rows, cols, x[0] * 0.0);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) {
      const int a = i + rows * j;
      Z(i, j) = CJet(x[2 * a], x[2 * a + 1]);
    }
  return Z;
}
}  // namespace

Jet GrassChart::potential(const std::vector<Jet>& x) const {
  const int N = n_ - k_;
  const Jet zero = x[0] * 0.0;
  CJetMat Z = z_matrix(x, N, k_);
  Jet K;
  if (k_ == 1) {
    Jet G = zero + 1.0;
    for (int p = 0; p < N; ++p) G += Z(p, 0).re * Z(p, 0).re + Z(p, 0).im * Z(p, 0).im;
    K = c_ * log(G);
  } else {
    K = (0.5 * c_) * log(realified(gram(Z, zero)).det());
  }
  if (mod_) {
    Jet T = tau_fs(x);
    K += 2.0 * compose(T, to_vector(mod_->phi(T.value())));
  }
  return K;
}

Jet GrassChart::tau_fs(const std::vector<Jet>& x) const {
  const int N = n_ - k_;
  const Jet zero = x[0] * 0.0;
  CJetMat Z = z_matrix(x, N, k_);
  // Rows p < l of Y = U [I; Z].
  CJetMat Y(l_, k_, zero);
  for (int p = 0; p < l_; ++p)
    for (int j = 0; j < k_; ++j) {
      CJet acc(zero + U_(p, j).real(), zero + U_(p, j).imag());
      for (int q = 0; q < N; ++q) acc = acc + scale(Z(q, j), U_(p, k_ + q));
      Y(p, j) = acc;
    }
  CJetMat M(k_, k_, zero);
  for (int i = 0; i < k_; ++i)
    for (int j = 0; j < k_; ++j) {
      CJet acc(zero, zero);
      for (int p = 0; p < l_; ++p) acc = acc + Y(p, i).conj() * Y(p, j);
      M(i, j) = acc;
    }
  CJetMat G = gram(Z, zero);
  if (k_ == 1) return tau_minus_ + width_ * (M(0, 0).re / G(0, 0).re);
  JetMatrix Gi = realified(G).inverse();
  JetMatrix MR = realified(M);
  Jet tr = zero;
  for (int i = 0; i < 2 * k_; ++i)
    for (int j = 0; j < 2 * k_; ++j) tr += Gi(i, j) * MR(j, i);
  return tau_minus_ + (0.5 * width_) * tr;
}

Jet GrassChart::tau(const std::vector<Jet>& x) const {
  Jet T = tau_fs(x);
  if (!mod_) return T;
  const Profile& fs = mod_->match().source();
  return compose(T, tau_hat_derivs(*mod_, T.value(), fs.tau_minus, fs.tau_plus, fs.a));
}

std::vector<Jet> GrassChart::killing(const std::vector<Jet>& x) const {
  const int N = n_ - k_;
  const Jet zero = x[0] * 0.0;
  CJetMat Z = z_matrix(x, N, k_);
  // T = H12 Z (k x k).
  CJetMat T(k_, k_, zero);
  for (int a = 0; a < k_; ++a)
    for (int j = 0; j < k_; ++j) {
      CJet acc(zero, zero);
      for (int b = 0; b < N; ++b) acc = acc + scale(Z(b, j), H_(a, k_ + b));
      T(a, j) = acc;
    }
  std::vector<Jet> out(2 * N * k_, zero);
  for (int j = 0; j < k_; ++j)
    for (int i = 0; i < N; ++i) {
      CJet acc(zero + H_(k_ + i, j).real(), zero + H_(k_ + i, j).imag());
      for (int q = 0; q < N; ++q) acc = acc + scale(Z(q, j), H_(k_ + i, k_ + q));
      for (int a = 0; a < k_; ++a) {
        acc = acc - scale(Z(i, a), H_(a, j));
        acc = acc - Z(i, a) * T(a, j);
      }
      CJet d = times_i(acc) * a_;
      const int al = i + N * j;
      out[2 * al] = d.re;
      out[2 * al + 1] = d.im;
    }
  return out;
}

bool GrassChart::in_domain(const Vec& x) const { return x.allFinite() && x.cwiseAbs().maxCoeff() < 1e3; }

CMat GrassChart::matrix_of(const Vec& x) const {
  CVec z = complexify(x);
  return Eigen::Map<const CMat>(z.data(), n_ - k_, k_);
}

CMat GrassChart::frame(const Vec& x) const {
  CMat Y(n_, k_);
  Y.topRows(k_) = CMat::Identity(k_, k_);
  Y.bottomRows(n_ - k_) = matrix_of(x);
  return orthonormal_frame(U_ * Y);
}

Vec GrassChart::coords(const CMat& Y) const {
  CMat P = U_.adjoint() * Y;
  CMat A = P.topRows(k_);
  Eigen::JacobiSVD<CMat> svd(A);
  const double smin = svd.singularValues().minCoeff();
  if (!(smin > 1e-10 * std::max(1.0, Y.norm()))) throw TripleError("subspace is outside the chart");
  CMat Z = P.bottomRows(n_ - k_) * A.inverse();
  CVec z = Eigen::Map<const CVec>(Z.data(), Z.size());
  return realify(z);
}

Vec GrassChart::transfer(const GrassChart& to, const Vec& x, const Vec& dx) const {
  const int N = n_ - k_;
  CMat Y(n_, k_), dY = CMat::Zero(n_, k_);
  Y.topRows(k_) = CMat::Identity(k_, k_);
  Y.bottomRows(N) = matrix_of(x);
  dY.bottomRows(N) = matrix_of(dx);
  CMat W = to.U_.adjoint() * U_;
  CMat P = W * Y, dP = W * dY;
  CMat Ai = P.topRows(k_).inverse();
  CMat Zp = P.bottomRows(N) * Ai;
  CMat dZ = (dP.bottomRows(N) - Zp * dP.topRows(k_)) * Ai;
  CVec z = Eigen::Map<const CVec>(dZ.data(), dZ.size());
  return realify(z);
}

// ---------------------------------------------------------------------------
// Grassmannian and CP triples.

GrassmannTriple::GrassmannTriple(int n, int k, int l, Profile profile, std::string spec) : n_(n), k_(k), l_(l) {
  if (n < 2 || k < 1 || k >= n || l < 1 || l >= n || (k > 1 && l != 1))
    throw TripleError("unsupported Grassmannian data n=" + std::to_string(n) + " k=" + std::to_string(k) +
                      " l=" + std::to_string(l));
  if (2 * k > kMaxJetMatrix) throw TripleError("Grassmannian size exceeds the matrix-jet cap");
  if (!profile.Q) throw TripleError("profile has no Q");
  CheckReport vr = validate_profile(profile);
  if (!vr.pass) throw TripleError("invalid profile: " + vr.note);
  profile_ = profile;
  const bool fs = is_fubini_study(profile);
  if (!fs) {
    auto mod = std::make_shared<Modification>(
        ProfileMatch(fubini_study_profile(profile.tau_minus, profile.tau_plus, profile.a), profile));
    if (!(mod->positivity_margin() > 0) || !(mod->endpoint_margin(-1) > 0) || !(mod->endpoint_margin(+1) > 0))
      throw TripleError("modification rejected: positivity guard violated");
    mod_ = mod;
  }
  sol_plus_ = std::make_shared<ProfileSolution>(profile, +1);
  sol_minus_ = std::make_shared<ProfileSolution>(profile, -1);
  meta_ = grass_meta(n, k, l, profile, !fs, spec);
}

std::shared_ptr<const GrassChart> GrassmannTriple::chart(const CMat& U) const {
  return std::make_shared<GrassChart>(*this, U);
}

std::shared_ptr<const GrassChart> GrassmannTriple::centered_chart(const CMat& Y) const {
  Eigen::HouseholderQR<CMat> qr(Y);
  CMat U = qr.householderQ();
  return chart(U);
}

double GrassmannTriple::tau_fs(const CMat& Y) const {
  CMat G = Y.adjoint() * Y;
  CMat YL = Y.topRows(l_);
  CMat M = YL.adjoint() * YL;
  return profile_.tau_minus + profile_.width() * (G.inverse() * M).trace().real();
}

double GrassmannTriple::tau_at(const CMat& Y) const {
  double t = tau_fs(Y);
  return mod_ ? mod_->tau_hat(t) : t;
}

CMat GrassmannTriple::random_point(std::mt19937_64& rng) const {
  return orthonormal_frame(random_gaussian(n_, k_, rng));
}

CMat GrassmannTriple::random_critical_point(int sign, std::mt19937_64& rng) const {
  if (sign > 0) {
    if (k_ == 1) return embed_rows(orthonormal_frame(random_gaussian(l_, 1, rng)), n_, 0);
    CMat Y = CMat::Zero(n_, k_);
    Y(0, 0) = 1.0;
    Y.rightCols(k_ - 1) = embed_rows(orthonormal_frame(random_gaussian(n_ - 1, k_ - 1, rng)), n_, 1);
    return Y;
  }
  return embed_rows(orthonormal_frame(random_gaussian(n_ - l_, k_, rng)), n_, l_);
}

CMat GrassmannTriple::project(int sign, const CMat& Y) const {
  CMat Yo = orthonormal_frame(Y);
  if (sign > 0) {
    if (k_ == 1) {
      CVec p = Yo.col(0);
      p.tail(n_ - l_).setZero();
      if (p.norm() < 1e-12) throw TripleError("projection to Sigma+ undefined on Sigma-");
      return p.normalized();
    }
    CVec pe = Yo * Yo.row(0).adjoint();
    if (pe.norm() < 1e-12) throw TripleError("projection to Sigma+ undefined on Sigma-");
    CVec w1 = pe.normalized();
    CMat out(n_, k_);
    out.col(0) = CVec::Unit(n_, 0);
    out.rightCols(k_ - 1) = complement_in(Yo, w1);
    return out;
  }
  CMat P = Yo;
  P.topRows(l_).setZero();
  Eigen::JacobiSVD<CMat> svd(P);
  if (svd.singularValues().minCoeff() < 1e-12) throw TripleError("projection to Sigma- undefined on Sigma+");
  return orthonormal_frame(P);
}

std::pair<CMat, CMat> GrassmannTriple::geodesic_endpoints(const CMat& Y) const {
  CMat Yo = orthonormal_frame(Y);
  CVec w1;
  CMat Wp(n_, k_ - 1);
  if (k_ == 1) {
    w1 = Yo.col(0);
  } else {
    CVec pe = Yo * Yo.row(0).adjoint();
    if (pe.norm() < 1e-12) throw TripleError("point lies on a critical manifold");
    w1 = pe.normalized();
    Wp = complement_in(Yo, w1);
  }
  CVec xi = w1, eta = w1;
  xi.tail(n_ - l_).setZero();
  eta.head(l_).setZero();
  if (xi.norm() < 1e-12 || eta.norm() < 1e-12) throw TripleError("point lies on a critical manifold");
  CMat Yp(n_, k_), Ym(n_, k_);
  Yp.col(0) = xi.normalized();
  Ym.col(0) = eta.normalized();
  if (k_ > 1) {
    Yp.rightCols(k_ - 1) = Wp;
    Ym.rightCols(k_ - 1) = Wp;
  }
  return {Ym, Yp};
}

CMat GrassmannTriple::geodesic_midpoint(const CMat& Y) const {
  auto [Ym, Yp] = geodesic_endpoints(Y);
  CMat M = Yp;
  M.col(0) = (Yp.col(0) + Ym.col(0)) / std::sqrt(2.0);
  return M;
}

CriticalFrame GrassmannTriple::critical_frame(int sign, const CMat& y) const {
  CriticalFrame cf;
  cf.chart = centered_chart(y);
  const int dim = 2 * meta_.m;
  cf.P = evaluate_point(*cf.chart, Vec::Zero(dim));
  Mat gS = cf.P.m.g * cf.P.S;
  gS = 0.5 * (gS + gS.transpose()).eval();
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(gS, cf.P.m.g);
  const double a = profile_.a;
  std::vector<int> tan, nor;
  for (int i = 0; i < dim; ++i) {
    const double lam = es.eigenvalues()(i);
    if (std::fabs(lam) < 0.5 * a)
      tan.push_back(i);
    else if (std::fabs(lam + sign * a) < 0.5 * a)
      nor.push_back(i);
    else
      throw TripleError("point is not critical for the requested sign");
  }
  const int d = sign > 0 ? meta_.d_plus : meta_.d_minus;
  if (static_cast<int>(tan.size()) != 2 * d) throw TripleError("critical manifold dimension mismatch");
  cf.T.resize(dim, tan.size());
  cf.N.resize(dim, nor.size());
  for (size_t i = 0; i < tan.size(); ++i) cf.T.col(i) = es.eigenvectors().col(tan[i]);
  for (size_t i = 0; i < nor.size(); ++i) cf.N.col(i) = es.eigenvectors().col(nor[i]);
  return cf;
}

ChartPoint GrassmannTriple::sample(std::mt19937_64& rng) const {
  const int dim = 2 * meta_.m;
  std::uniform_real_distribution<double> box(-1.5, 1.5);
  for (;;) {
    std::vector<int> idx(n_);
    for (int i = 0; i < n_; ++i) idx[i] = i;
    for (int i = n_ - 1; i > 0; --i) {
      std::uniform_int_distribution<int> pick(0, i);
      std::swap(idx[i], idx[pick(rng)]);
    }
    std::vector<int> chosen(idx.begin(), idx.begin() + k_);
    std::sort(chosen.begin(), chosen.end());
    std::vector<int> rest;
    for (int i = 0; i < n_; ++i)
      if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) rest.push_back(i);
    CMat U = CMat::Zero(n_, n_);
    for (int j = 0; j < k_; ++j) U(chosen[j], j) = 1.0;
    for (int j = 0; j < n_ - k_; ++j) U(rest[j], k_ + j) = 1.0;
    Vec x(dim);
    for (int i = 0; i < dim; ++i) x(i) = box(rng);
    auto ch = chart(U);
    const double t = tau_at(ch->frame(x));
    if ((*profile_.Q)(t) < kQMin) continue;
    return {ch, x};
  }
}

NormalGeodesic GrassmannTriple::sample_normal_geodesic(std::mt19937_64& rng) const {
  for (;;) {
    CMat Y = random_point(rng);
    const double t = tau_at(Y);
    if ((*profile_.Q)(t) < kQMin) continue;
    auto ch = centered_chart(geodesic_midpoint(Y));
    NormalGeodesic ng;
    ng.chart = ch;
    ng.x0 = ch->coords(Y);
    PointGeometry P = evaluate_point(*ch, ng.x0);
    ng.e = P.v / std::sqrt(P.Q);
    ng.t_plus = sol_plus_->sigma_tau(t);
    ng.t_minus = -sol_minus_->sigma_tau(t);
    return ng;
  }
}

CMat GrassmannTriple::phi_map(int sign, const CMat& y, const Vec& xi) const {
  auto ch = centered_chart(y);
  const Vec o = Vec::Zero(2 * meta_.m);
  MetricJet mj = metric_from_potential(*ch, o, 3);
  const double rho = std::sqrt(xi.dot(mj.g * xi));
  if (rho == 0.0) return orthonormal_frame(y);
  const double sigma = solution(sign).sigma(rho);
  Vec x = exp_normal(*ch, o, xi * (sigma / rho));
  return ch->frame(x);
}

std::pair<CMat, Vec> GrassmannTriple::phi_inverse(int sign, const CMat& Y) const {
  CMat y = project(sign, Y);
  auto ch = centered_chart(y);
  Vec z = ch->coords(Y);
  MetricJet mj = metric_from_potential(*ch, Vec::Zero(2 * meta_.m), 3);
  const double r = std::sqrt(z.dot(mj.g * z));
  const double rho = solution(sign).rho(tau_at(Y));
  return {y, z * (rho / r)};
}

// ---------------------------------------------------------------------------
// Hermitian bundles and the Chern connection.

HermitianBundleChart::HermitianBundleChart(int base_dim, int rank, FibreMetricFn gamma)
    : nb_(base_dim), r_(rank), gamma_(std::move(gamma)) {}

ChernData chern_connection(const HermitianBundleChart& b, const Vec& z) {
  const int nb = b.base_dim(), r = b.rank();
  ChernData cd;
  cd.gamma = CMat::Identity(r, r);
  if (nb == 0) return cd;
  std::vector<double> pt(z.data(), z.data() + z.size());
  std::vector<Jet> X = jet_seed(pt, 2);
  std::vector<CJet> G = b.gamma(X);
  cd.dgamma.assign(nb, CMat::Zero(r, r));
  cd.dbar_gamma.assign(nb, CMat::Zero(r, r));
  std::vector<std::vector<CMat>> ddbar(nb, std::vector<CMat>(nb, CMat::Zero(r, r)));
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) {
      const CJet& e = G[i * r + j];
      cd.gamma(i, j) = cplx(e.re.value(), e.im.value());
      for (int l = 0; l < nb; ++l) {
        const int xl = 2 * l, yl = 2 * l + 1;
        const double rx = e.re.d(xl), ry = e.re.d(yl), ix = e.im.d(xl), iy = e.im.d(yl);
        cd.dgamma[l](i, j) = 0.5 * cplx(rx + iy, ix - ry);
        cd.dbar_gamma[l](i, j) = 0.5 * cplx(rx - iy, ix + ry);
        for (int m = 0; m < nb; ++m) {
          const int xm = 2 * m, ym = 2 * m + 1;
          // d_l d_mbar = (1/4)(d_xl - i d_yl)(d_xm + i d_ym).
          auto part = [&](const Jet& f) {
            return cplx(f.d2(xl, xm) + f.d2(yl, ym), f.d2(xl, ym) - f.d2(yl, xm));
          };
          ddbar[l][m](i, j) = 0.25 * (part(e.re) + cplx(0, 1) * part(e.im));
        }
      }
    }
  CMat Gi = cd.gamma.inverse();
  cd.Omega.resize(nb);
  for (int l = 0; l < nb; ++l) cd.Omega[l] = cd.dgamma[l] * Gi;
  cd.R.assign(nb, std::vector<CMat>(nb));
  for (int l = 0; l < nb; ++l)
    for (int m = 0; m < nb; ++m) cd.R[l][m] = ddbar[l][m] - cd.Omega[l] * cd.dbar_gamma[m];
  return cd;
}

double ChernData::rd_form(const Vec& w, const Vec& w2, const CVec& xi) const {
  if (R.empty()) return 0.0;
  CVec a = complexify(w), b = complexify(w2);
  cplx X = 0;
  for (size_t l = 0; l < R.size(); ++l)
    for (size_t m = 0; m < R.size(); ++m) X += a(l) * std::conj(b(m)) * (xi.transpose() * R[l][m] * xi.conjugate())(0);
  return 2.0 * X.imag();
}

cplx ChernData::rd_pair(const Vec& w, const Vec& w2, const CVec& xi, const CVec& eta) const {
  if (R.empty()) return 0.0;
  CVec a = complexify(w), b = complexify(w2);
  cplx X = 0;
  for (size_t l = 0; l < R.size(); ++l)
    for (size_t m = 0; m < R.size(); ++m)
      X += (a(l) * std::conj(b(m)) - b(l) * std::conj(a(m))) * (xi.transpose() * R[l][m] * eta.conjugate())(0);
  return X;
}

CVec ChernData::horizontal_shift(const Vec& w, const CVec& xi) const {
  CVec out = CVec::Zero(xi.size());
  if (Omega.empty()) return out;
  CVec a = complexify(w);
  for (size_t m = 0; m < Omega.size(); ++m) out -= a(m) * (Omega[m].transpose() * xi);
  return out;
}

double ChernData::connection_residual() const {
  double r = 0;
  for (size_t l = 0; l < Omega.size(); ++l) r = std::max(r, (Omega[l] * gamma - dgamma[l]).cwiseAbs().maxCoeff());
  return r;
}

// ---------------------------------------------------------------------------
// Bundle triples.

namespace {

Jet integrate1(const Jet& j) {
  Jet out(1, j.order(), 0.0);
  for (int k = 0; k < j.order(); ++k) out.coeff(k + 1) = j.coeff(k) / (k + 1);
  return out;
}

// Derivatives at s0 of tau(s) and f(s), s = rho^2, for one profile solution.
struct SSeries {
  std::vector<double> tau, f;
};

SSeries s_series(const ProfileSolution& sol, double s0) {
  const Profile& p = sol.profile();
  const double sg = sol.sign();
  const double te = sg > 0 ? p.tau_plus : p.tau_minus;
  const double t0 = sol.tau_of_rho_squared(s0);
  const Jet h = Jet::variable(1, kMaxJetOrder, 0, 0.0);
  const Jet inv = 1.0 / (s0 + h);
  const std::vector<double> qd = to_vector(p.Q->eval(t0));
  Jet T(1, kMaxJetOrder, t0);
  for (int it = 0; it <= kMaxJetOrder; ++it) T = t0 + integrate1((-sg / (2 * p.a)) * compose(T, qd) * inv);
  Jet F = sol.f_tau(t0) + integrate1((sg / p.a) * (te - T) * inv);
  SSeries out;
  double fact = 1;
  for (int k = 0; k <= kMaxJetOrder; ++k) {
    if (k > 0) fact *= k;
    out.tau.push_back(fact * T.coeff(k));
    out.f.push_back(fact * F.coeff(k));
  }
  return out;
}

// s = gamma_{b cbar} xi^b conj(xi^c) with base coordinates first.
Jet norm_squared(const HermitianBundleChart& b, const std::vector<Jet>& x, bool trivial) {
  const int nb = b.base_dim(), r = b.rank();
  const Jet zero = x[0] * 0.0;
  std::vector<CJet> xi;
  for (int i = 0; i < r; ++i) xi.emplace_back(x[2 * nb + 2 * i], x[2 * nb + 2 * i + 1]);
  if (trivial || nb == 0) {
    Jet s = zero;
    for (const CJet& c : xi) s += c.re * c.re + c.im * c.im;
    return s;
  }
  std::vector<Jet> z(x.begin(), x.begin() + 2 * nb);
  std::vector<CJet> G = b.gamma(z);
  Jet s = zero;
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) s += (G[i * r + j] * xi[i] * xi[j].conj()).re;
  return s;
}

class BundleChart : public Chart {
 public:
  BundleChart(int nb, int r, double base_scale, bool trivial, std::shared_ptr<const ProfileSolution> sol,
              std::shared_ptr<const HermitianBundleChart> bundle)
      : nb_(nb), r_(r), c_(base_scale), trivial_(trivial), sol_(std::move(sol)), bundle_(std::move(bundle)) {}
  int complex_dim() const override { return nb_ + r_; }
  Jet potential(const std::vector<Jet>& x) const override {
    Jet s = norm_squared(*bundle_, x, trivial_);
    Jet K = compose(s, s_series(*sol_, s.value()).f);
    if (nb_ == 1) K += c_ * log(1.0 + x[0] * x[0] + x[1] * x[1]);
    return K;
  }
  bool has_tau() const override { return true; }
  Jet tau(const std::vector<Jet>& x) const override {
    Jet s = norm_squared(*bundle_, x, trivial_);
    return compose(s, s_series(*sol_, s.value()).tau);
  }
  bool has_killing() const override { return true; }
  std::vector<Jet> killing(const std::vector<Jet>& x) const override {
    const double k = -sol_->sign() * sol_->profile().a;
    std::vector<Jet> out(x.size(), x[0] * 0.0);
    for (int i = 0; i < r_; ++i) {
      const int o = 2 * nb_ + 2 * i;
      out[o] = -k * x[o + 1];
      out[o + 1] = k * x[o];
    }
    return out;
  }
  bool in_domain(const Vec& x) const override { return x.allFinite() && x.tail(2 * r_).norm() > 1e-7; }

 private:
  int nb_, r_;
  double c_;
  bool trivial_;
  std::shared_ptr<const ProfileSolution> sol_;
  std::shared_ptr<const HermitianBundleChart> bundle_;
};

}  // namespace

BundleTriple::BundleTriple(Base base, Fibre fibre, int rank, Profile profile, int sign, double base_scale,
                           std::string spec)
    : base_(base), fibre_(fibre), rank_(rank), sign_(sign), base_scale_(base_scale) {
  if (rank < 1 || rank > 3) throw TripleError("bundle rank must be in 1..3");
  if (fibre == Fibre::taut && (base != Base::cp1 || rank != 1))
    throw TripleError("the tautological bundle requires base cp1 and rank 1");
  if (sign != 1 && sign != -1) throw TripleError("bundle sign must be +1 or -1");
  if (!(base_scale > 0)) throw TripleError("base scale must be positive");
  if (!profile.Q) throw TripleError("profile has no Q");
  CheckReport vr = validate_profile(profile);
  if (!vr.pass) throw TripleError("invalid profile: " + vr.note);
  profile_ = profile;
  sol_ = std::make_shared<ProfileSolution>(profile, sign);
  const int nb = base_dim();
  const int r = rank;
  const bool taut = fibre == Fibre::taut;
  bundle_ = std::make_shared<HermitianBundleChart>(nb, r, [r, taut](const std::vector<Jet>& z) {
    const Jet zero = z[0] * 0.0;
    std::vector<CJet> G(r * r, CJet(zero, zero));
    for (int i = 0; i < r; ++i) G[i * r + i] = CJet(zero + 1.0, zero);
    if (taut) G[0] = CJet(1.0 + z[0] * z[0] + z[1] * z[1], zero);
    return G;
  });
  chart_ = std::make_shared<BundleChart>(nb, r, base_scale, !taut, sol_, bundle_);
  if (nb == 1) {
    const double c = base_scale;
    base_chart_ = std::make_shared<FunctionChart>(
        1, [c](const std::vector<Jet>& x) { return c * log(1.0 + x[0] * x[0] + x[1] * x[1]); });
  }
  auto bundle = bundle_;
  norm_chart_ = std::make_shared<FunctionChart>(
      nb + r, [bundle, taut](const std::vector<Jet>& x) { return norm_squared(*bundle, x, !taut); });
  const std::string bname = nb == 1 ? "cp1" : "point";
  meta_ = bundle_meta(bname, rank, sign, profile, spec);

  std::mt19937_64 rng(20240601);
  if (!(positivity_margin(rng, 32) > 0)) throw TripleError("bundle metric is not positive-definite");
}

double BundleTriple::rho_squared(const Vec& x) const {
  std::vector<double> pt(x.data(), x.data() + x.size());
  return norm_squared(*bundle_, jet_seed(pt, 0), fibre_ != Fibre::taut).value();
}

Vec BundleTriple::point(const Vec& z, double t, const CVec& dir) const {
  double gam = 1.0;
  if (fibre_ == Fibre::taut) gam = 1.0 + z.squaredNorm();
  const double s = sol_->rho_squared(t);
  CVec xi = dir.normalized() * std::sqrt(s / gam);
  Vec x(2 * base_dim() + 2 * rank_);
  x.head(2 * base_dim()) = z;
  x.tail(2 * rank_) = realify(xi);
  return x;
}

Vec BundleTriple::horizontal_lift(const Vec& x, const Vec& w) const {
  ChernData cd = chern_connection(*bundle_, base_part(x));
  Vec out(x.size());
  out.head(2 * base_dim()) = w;
  out.tail(2 * rank_) = realify(cd.horizontal_shift(w, fibre_part(x)));
  return out;
}

ChartPoint BundleTriple::sample(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> box(-1.5, 1.5);
  const double D = profile_.width();
  std::uniform_real_distribution<double> tt(profile_.tau_minus + 0.02 * D, profile_.tau_plus - 0.02 * D);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (;;) {
    Vec z(2 * base_dim());
    for (int i = 0; i < z.size(); ++i) z(i) = box(rng);
    const double t = tt(rng);
    CVec dir(rank_);
    for (int i = 0; i < rank_; ++i) {
      double re = nd(rng);
      double im = nd(rng);
      dir(i) = cplx(re, im);
    }
    if ((*profile_.Q)(t) < kQMin || dir.norm() < 1e-6) continue;
    return {chart_, point(z, t, dir)};
  }
}

double BundleTriple::positivity_margin(std::mt19937_64& rng, int samples) const {
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    ChartPoint p = sample(rng);
    MetricJet m = metric_from_potential(*p.chart, p.x, 3);
    Eigen::SelfAdjointEigenSolver<Mat> es(m.g);
    worst = std::min(worst, es.eigenvalues().minCoeff());
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Spec strings and the catalog.

namespace {

int parse_int(const std::string& key, const std::string& v) {
  int out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw TripleError("value of '" + key + "' is not an integer: " + v);
  return out;
}

}  // namespace

TripleSpec parse_spec(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw TripleError("spec '" + s + "' lacks a family prefix");
  TripleSpec t;
  t.text = s;
  t.family = s.substr(0, colon);
  std::map<std::string, std::string> kv;
  std::string body = s.substr(colon + 1);
  size_t pos = 0;
  while (pos <= body.size()) {
    size_t end = body.find(',', pos);
    if (end == std::string::npos) end = body.size();
    std::string item = body.substr(pos, end - pos);
    const auto eq = item.find('=');
    if (item.empty() || eq == std::string::npos || eq == 0 || eq + 1 == item.size())
      throw TripleError("malformed entry '" + item + "' in spec '" + s + "'");
    std::string key = item.substr(0, eq);
    if (kv.count(key)) throw TripleError("duplicate key '" + key + "' in spec '" + s + "'");
    kv[key] = item.substr(eq + 1);
    pos = end + 1;
  }
  auto allow = [&](std::set<std::string> keys) {
    for (const auto& [k, v] : kv)
      if (!keys.count(k)) throw TripleError("unknown key '" + k + "' for family " + t.family);
  };
  auto req = [&](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw TripleError("spec '" + s + "' is missing '" + key + "'");
    return parse_int(key, it->second);
  };
  if (t.family == "cp") {
    allow({"n", "l"});
    t.n = req("n");
    t.k = 1;
    t.l = kv.count("l") ? req("l") : 1;
    if (t.n < 2 || t.n > 8) throw TripleError("cp triples need 2 <= n <= 8");
    if (t.l < 1 || t.l > t.n - 1) throw TripleError("cp triples need 1 <= l <= n-1");
  } else if (t.family == "gr") {
    allow({"n", "k"});
    t.n = req("n");
    t.k = req("k");
    t.l = 1;
    if (t.n < 2 || t.n > 6) throw TripleError("gr triples need 2 <= n <= 6");
    if (t.k < 1 || t.k > t.n - 1) throw TripleError("gr triples need 0 < k < n");
    if (2 * t.k > kMaxJetMatrix) throw TripleError("gr triple exceeds the matrix-jet cap");
  } else if (t.family == "bundle") {
    allow({"base", "kind", "rank", "sign"});
    t.base = kv.count("base") ? kv["base"] : "point";
    t.fibre = kv.count("kind") ? kv["kind"] : "trivial";
    t.rank = kv.count("rank") ? req("rank") : 1;
    if (kv.count("sign")) {
      const std::string& v = kv["sign"];
      if (v == "+" || v == "1" || v == "+1" || v == "plus")
        t.sign = 1;
      else if (v == "-" || v == "-1" || v == "minus")
        t.sign = -1;
      else
        throw TripleError("bundle sign must be + or -");
    }
    if (t.base != "point" && t.base != "cp1") throw TripleError("bundle base must be point or cp1");
    if (t.fibre != "trivial" && t.fibre != "taut") throw TripleError("bundle kind must be trivial or taut");
    if (t.fibre == "taut" && (t.base != "cp1" || t.rank != 1))
      throw TripleError("the tautological bundle requires base cp1 and rank 1");
    if (t.rank < 1 || t.rank > 3) throw TripleError("bundle rank must be in 1..3");
  } else {
    throw TripleError("unknown triple family '" + t.family + "'");
  }
  return t;
}

TriplePtr make_triple(const TripleSpec& spec, const Profile& profile) {
  if (spec.family == "cp" || spec.family == "gr")
    return std::make_shared<GrassmannTriple>(spec.n, spec.k, spec.l, profile, spec.text);
  return std::make_shared<BundleTriple>(spec.base == "cp1" ? BundleTriple::Base::cp1 : BundleTriple::Base::point,
                                        spec.fibre == "taut" ? BundleTriple::Fibre::taut : BundleTriple::Fibre::trivial,
                                        spec.rank, profile, spec.sign, 2.0, spec.text);
}

TriplePtr make_triple(const std::string& spec, const Profile& profile) { return make_triple(parse_spec(spec), profile); }

std::shared_ptr<const GrassmannTriple> make_cp_triple(int n, int l, const Profile& profile) {
  return std::make_shared<GrassmannTriple>(n, 1, l, profile,
                                           "cp:n=" + std::to_string(n) + ",l=" + std::to_string(l));
}

std::shared_ptr<const GrassmannTriple> make_grassmannian_triple(int n, int k, const Profile& profile) {
  return std::make_shared<GrassmannTriple>(n, k, 1, profile,
                                           "gr:n=" + std::to_string(n) + ",k=" + std::to_string(k));
}

TripleMeta catalog_meta(const TripleSpec& spec, const Profile& profile) {
  if (spec.family == "bundle") return bundle_meta(spec.base, spec.rank, spec.sign, profile, spec.text);
  return grass_meta(spec.n, spec.k, spec.l, profile, profile.Q && !is_fubini_study(profile), spec.text);
}

std::vector<std::string> catalog_entries() {
  return {"cp:n=2,l=1",
          "cp:n=3,l=1",
          "cp:n=3,l=2",
          "cp:n=4,l=1",
          "cp:n=4,l=2",
          "cp:n=4,l=3",
          "gr:n=3,k=1",
          "gr:n=4,k=2",
          "gr:n=5,k=2",
          "bundle:base=point,kind=trivial",
          "bundle:base=point,kind=trivial,rank=2",
          "bundle:base=cp1,kind=trivial",
          "bundle:base=cp1,kind=taut",
          "bundle:base=cp1,kind=taut,sign=-"};
}

// ---------------------------------------------------------------------------
// Flags.

bool is_flag(const Flag& f, double tol) {
  const int k = static_cast<int>(f.W.cols());
  if (k < 1 || f.Wp.cols() != k - 1 || f.Wp.rows() != f.W.rows()) return false;
  if ((f.W.adjoint() * f.W - CMat::Identity(k, k)).norm() > tol) return false;
  if (k == 1) return true;
  if ((f.Wp.adjoint() * f.Wp - CMat::Identity(k - 1, k - 1)).norm() > tol) return false;
  return (f.Wp - f.W * (f.W.adjoint() * f.Wp)).norm() <= tol;
}

bool flags_adjacent(const Flag& a, const Flag& b, double tol) {
  return frame_distance(a.W, b.W) <= tol || frame_distance(a.Wp, b.Wp) <= tol;
}

namespace {

bool same_flag(const Flag& a, const Flag& b) {
  return frame_distance(a.W, b.W) <= 1e-9 && frame_distance(a.Wp, b.Wp) <= 1e-9;
}

void push_flag(std::vector<Flag>& chain, Flag f) {
  if (chain.empty() || !same_flag(chain.back(), f)) chain.push_back(std::move(f));
}

}  // namespace

std::vector<Flag> flag_chain(const Flag& f0, const Flag& f1) {
  if (!is_flag(f0, 1e-8) || !is_flag(f1, 1e-8)) throw TripleError("flag_chain needs valid flags");
  if (f0.W.cols() != f1.W.cols() || f0.W.rows() != f1.W.rows()) throw TripleError("flags of different type");
  const int k = static_cast<int>(f0.W.cols());
  std::vector<Flag> chain{f0};
  Flag cur = f0;
  for (int step = 0; step <= k && frame_distance(cur.W, f1.W) > 1e-9; ++step) {
    Eigen::JacobiSVD<CMat> svd(cur.W.adjoint() * f1.W, Eigen::ComputeFullU | Eigen::ComputeFullV);
    // Principal vectors of cur.W sorted by decreasing cosine; the first d span cur.W ∩ W.
    CMat P = cur.W * svd.matrixU();
    // Hyperplane of cur.W containing cur.W ∩ W.
    Flag a{cur.W, P.leftCols(k - 1)};
    push_flag(chain, a);
    // Vector of W farthest from cur.W.
    CVec x = f1.W * svd.matrixV().col(k - 1);
    CMat B(cur.W.rows(), k);
    B.leftCols(k - 1) = a.Wp;
    B.col(k - 1) = x;
    Flag b{orthonormal_frame(B), a.Wp};
    push_flag(chain, b);
    cur = b;
  }
  if (frame_distance(cur.W, f1.W) > 1e-9) throw TripleError("flag_chain failed to converge");
  push_flag(chain, f1);
  return chain;
}

Flag random_flag(int n, int k, std::mt19937_64& rng) {
  Flag f;
  f.W = orthonormal_frame(random_gaussian(n, k, rng));
  f.Wp = f.W * random_unitary(k, rng).leftCols(k - 1);
  return f;
}

}  // namespace ggk
