#include "ggk/suites.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "ggk/geodesic.hpp"
#include "ggk/verify.hpp"

namespace ggk {

namespace {

double max_abs(const Mat& M) { return M.size() ? M.cwiseAbs().maxCoeff() : 0.0; }

Mat hcat(std::initializer_list<Mat> blocks) {
  int rows = 0, cols = 0;
  for (const Mat& b : blocks) {
    rows = std::max(rows, static_cast<int>(b.rows()));
    cols += static_cast<int>(b.cols());
  }
  Mat out(rows, cols);
  int c = 0;
  for (const Mat& b : blocks) {
    if (b.cols() == 0) continue;
    out.middleCols(c, b.cols()) = b;
    c += static_cast<int>(b.cols());
  }
  return out;
}

// Residual checks take the suite-wide override when one is given.
CheckReport residual_report(const SuiteParams& p, const std::string& id, const std::string& anchor, double tol) {
  CheckReport r = make_report(id, anchor, p.tol > 0.0 ? p.tol : tol);
  r.seed = p.seed;
  return r;
}

CheckReport bound_report(const SuiteParams& p, const std::string& id, const std::string& anchor, double tol) {
  CheckReport r = make_report(id, anchor, tol, ">=");
  r.seed = p.seed;
  return r;
}

const GrassmannTriple* as_grass(const Triple& t) { return dynamic_cast<const GrassmannTriple*>(&t); }
const BundleTriple* as_bundle(const Triple& t) { return dynamic_cast<const BundleTriple*>(&t); }

// Least-squares line through (x_i, y_i); returns the largest deviation and the slope.
std::pair<double, double> line_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  Mat A(n, 2);
  Vec b(n);
  for (int i = 0; i < n; ++i) {
    A(i, 0) = 1.0;
    A(i, 1) = x[i];
    b(i) = y[i];
  }
  Vec c = A.colPivHouseholderQr().solve(b);
  return {(A * c - b).cwiseAbs().maxCoeff(), c(1)};
}

}  // namespace

// ---------------------------------------------------------------------------
// Affine behaviour along normal geodesics.

namespace {

struct AffineNode {
  double tau, Q;
  Mat G;   // W^T g W
  Mat H;   // W^T g S W / Q
  Mat D;   // Q^(-1/2) S W, the covariant derivative along the unit velocity
  Vec xdot;
  PointGeometry P;
  Mat W;
};

AffineNode affine_node(const Chart& chart, const GradientFlowSample& s) {
  AffineNode n;
  n.P = evaluate_point(chart, s.x);
  n.W = s.W;
  n.tau = n.P.tau;
  n.Q = n.P.Q;
  n.G = s.W.transpose() * n.P.m.g * s.W;
  n.H = s.W.transpose() * n.P.m.g * n.P.S * s.W / n.Q;
  n.D = n.P.S * s.W / std::sqrt(n.Q);
  n.xdot = n.P.v / std::sqrt(n.Q);
  return n;
}

}  // namespace

std::vector<CheckReport> suite_affine(const Triple& t, const SuiteParams& p) {
  const double tol = 1e-5;
  CheckReport lin = residual_report(p, "affine_linear", "g(w, w') is an affine function of tau for w, w' in V-perp commuting with v", tol);
  CheckReport slope = residual_report(p, "affine_slope", "d g(w, w')/d tau = 2 Q^(-1) g(Sw, w')", tol);
  CheckReport drift = residual_report(p, "affine_ratio", "Q^(-1) g(Sw, w') is constant along the geodesic", tol);
  CheckReport h1 = residual_report(p, "affine_endpoint_scaling", "g(w, w') = |tau - tau_-/+| g_y(w_+/-, w'_+/-)/(tau_+ - tau_-) for w in W[tau_-/+]", tol);
  CheckReport h2 = residual_report(p, "affine_endpoint_curvature", "g(w, w') = g_y(w, w') - |tau - tau_+/-| g_y(R_y(w, Jw') xdot, J xdot)/a for families not vanishing at the end", tol);
  CheckReport h3 = residual_report(p, "affine_endpoint_derivative", "g(w, w') = 2|tau - tau_+/-| g_y(nabla w, nabla w')/a for w in W[tau_+/-]", tol);
  CheckReport vd = residual_report(p, "affine_vanish", "w(t_+/-) = 0 for w in W[tau_+/-]", tol);
  CheckReport ve = residual_report(p, "affine_derivative_vanish", "nabla w (t_+/-) = 0 for w in W[c] with c != tau_+/-", tol);
  const TripleMeta& meta = t.meta();
  if (!t.has_normal_geodesics()) {
    std::vector<CheckReport> out{lin, slope, drift, h1, h2, h3, vd, ve};
    for (CheckReport& r : out) {
      r.note = "no normal geodesics";
      r.finish();
    }
    return out;
  }
  const double a = meta.a, width = meta.tau_plus - meta.tau_minus;
  const int K = 30;
  const double s_end = 15.0 / a;
  OdeOptions opt;
  opt.abs_tol = 1e-13;
  opt.rel_tol = 1e-12;
  opt.initial_step = 1e-3;
  std::mt19937_64 rng(p.seed);
  for (int gi = 0; gi < p.geodesics; ++gi) {
    NormalGeodesic ng = t.sample_normal_geodesic(rng);
    FieldContext F0 = field_context(*ng.chart, ng.x0);
    EigenStructure E0 = eigen_structure(F0, meta);
    // Columns grouped as W[tau_-] = H^+, W[tau_+] = H^-, then H.
    const int np = static_cast<int>(E0.h_plus.cols()), nm = static_cast<int>(E0.h_minus.cols()),
              nr = static_cast<int>(E0.h_rest.cols());
    Mat W0 = hcat({E0.h_plus, E0.h_minus, E0.h_rest});
    if (W0.cols() == 0) continue;
    std::vector<double> fwd, bwd;
    for (int k = 1; k <= K; ++k) {
      fwd.push_back(s_end * k / K);
      bwd.push_back(-s_end * k / K);
    }
    std::vector<AffineNode> nodes;
    nodes.push_back(affine_node(*ng.chart, GradientFlowSample{0.0, ng.x0, W0}));
    for (const GradientFlowSample& s : gradient_flow(*ng.chart, ng.x0, W0, fwd, opt))
      nodes.push_back(affine_node(*ng.chart, s));
    const AffineNode end_plus = nodes.back();
    for (const GradientFlowSample& s : gradient_flow(*ng.chart, ng.x0, W0, bwd, opt))
      nodes.push_back(affine_node(*ng.chart, s));
    const AffineNode end_minus = nodes.back();
    const AffineNode& n0 = nodes.front();
    const int n = static_cast<int>(W0.cols());

    std::vector<double> taus;
    for (const AffineNode& nd : nodes) taus.push_back(nd.tau);
    double rl = 0.0, rs = 0.0, rd = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        std::vector<double> ys;
        for (const AffineNode& nd : nodes) ys.push_back(nd.G(i, j));
        auto [dev, sl] = line_fit(taus, ys);
        rl = std::max(rl, dev);
        rs = std::max(rs, std::fabs(sl - 2.0 * 0.5 * (n0.H(i, j) + n0.H(j, i))));
      }
    for (const AffineNode& nd : nodes)
      if (nd.Q >= 1e-6) rd = std::max(rd, max_abs(nd.H - n0.H));
    lin.add(rl);
    slope.add(rs);
    drift.add(rd);

    auto block = [](const Mat& M, int off, int len) { return Mat(M.block(off, off, len, len)); };
    auto cols = [](const Mat& M, int off, int len) { return Mat(M.middleCols(off, len)); };
    // Endpoint values of the families.
    double rvd = 0.0, rve = 0.0;
    if (nm > 0) rvd = std::max(rvd, std::sqrt(max_abs(block(end_plus.G, np, nm))));
    if (np > 0) rvd = std::max(rvd, std::sqrt(max_abs(block(end_minus.G, 0, np))));
    auto dnorm = [](const AffineNode& e, int off, int len) {
      if (len == 0) return 0.0;
      Mat D = e.D.middleCols(off, len);
      return std::sqrt(max_abs(D.transpose() * e.P.m.g * D));
    };
    rve = std::max({rve, dnorm(end_plus, 0, np), dnorm(end_plus, np + nm, nr), dnorm(end_minus, np, nm),
                    dnorm(end_minus, np + nm, nr)});
    vd.add(rvd);
    ve.add(rve);

    // W[tau_-] against the + end and W[tau_+] against the - end.
    double r1 = 0.0, r3 = 0.0, r2 = 0.0;
    for (const AffineNode& nd : nodes) {
      if (np > 0) {
        Mat pred = std::fabs(nd.tau - meta.tau_minus) / width * block(end_plus.G, 0, np);
        r1 = std::max(r1, max_abs(block(nd.G, 0, np) - pred));
      }
      if (nm > 0) {
        Mat pred = std::fabs(nd.tau - meta.tau_plus) / width * block(end_minus.G, np, nm);
        r1 = std::max(r1, max_abs(block(nd.G, np, nm) - pred));
      }
    }
    // W[tau_+/-] against the same end through the limits of nabla w.
    auto dgram = [&](const AffineNode& e, int off, int len) {
      Mat D = cols(e.D, off, len);
      return Mat(D.transpose() * e.P.m.g * D);
    };
    for (const AffineNode& nd : nodes) {
      if (nm > 0) {
        Mat pred = 2.0 / a * std::fabs(nd.tau - meta.tau_plus) * dgram(end_plus, np, nm);
        r3 = std::max(r3, max_abs(block(nd.G, np, nm) - pred));
      }
      if (np > 0) {
        Mat pred = 2.0 / a * std::fabs(nd.tau - meta.tau_minus) * dgram(end_minus, 0, np);
        r3 = std::max(r3, max_abs(block(nd.G, 0, np) - pred));
      }
    }
    // Every family that survives at an end, through the curvature term.
    for (int sgn : {1, -1}) {
      const AffineNode& e = sgn > 0 ? end_plus : end_minus;
      const double te = sgn > 0 ? meta.tau_plus : meta.tau_minus;
      std::vector<int> idx;
      for (int i = sgn > 0 ? 0 : np; i < (sgn > 0 ? np : np + nm); ++i) idx.push_back(i);
      for (int i = np + nm; i < n; ++i) idx.push_back(i);
      const int k = static_cast<int>(idx.size());
      if (k == 0) continue;
      Mat M(k, k), Ge(k, k);
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
          Vec Rx = e.P.R.op(e.W.col(idx[i]), e.P.J * e.W.col(idx[j])) * e.xdot;
          M(i, j) = e.P.inner(Rx, e.P.J * e.xdot);
          Ge(i, j) = e.G(idx[i], idx[j]);
        }
      for (const AffineNode& nd : nodes) {
        Mat Gn(k, k);
        for (int i = 0; i < k; ++i)
          for (int j = 0; j < k; ++j) Gn(i, j) = nd.G(idx[i], idx[j]);
        r2 = std::max(r2, max_abs(Gn - (Ge - std::fabs(nd.tau - te) / a * M)));
      }
    }
    h1.add(r1);
    h2.add(r2);
    h3.add(r3);
  }
  std::vector<CheckReport> out{lin, slope, drift, h1, h2, h3, vd, ve};
  for (CheckReport& r : out) r.finish();
  return out;
}

// ---------------------------------------------------------------------------
// Predicates and pointwise identities.

std::vector<CheckReport> suite_predicates(const Triple& t, const SuiteParams& p) {
  const double tol = p.tol > 0.0 ? p.tol : 1e-6;
  std::vector<CheckReport> out = predicate_suite(t, p.samples, p.seed, tol);
  for (CheckReport& r : local_identity_suite(t, p.samples, p.seed, tol)) out.push_back(r);
  CheckReport curv = residual_report(
      p, "curvature_symmetries",
      "R(v, w) = nabla_w nabla_v - nabla_v nabla_w + nabla_[v,w] is skew, satisfies Bianchi and pair symmetry", 1e-6);
  CheckReport grad = residual_report(p, "gradient_identities", "grad Q = 2 nabla_v v and d_v tau = Q for v = grad tau",
                                     1e-6);
  for (const PointGeometry& P : sample_geometry(t, p.samples, p.seed ^ 0x5bd1e995u)) {
    curv.add(std::max({P.R.antisymmetry_residual(), P.R.bianchi_residual(), P.R.pair_symmetry_residual()}));
    const Vec gq = P.ginv * P.dQ;
    const double scale = std::max(1.0, P.norm(gq));
    grad.add(std::max(P.norm(gq - 2.0 * P.S * P.v) / scale, std::fabs(P.dtau.dot(P.v) - P.Q) / std::max(1.0, P.Q)));
  }
  out.push_back(curv.finish());
  out.push_back(grad.finish());
  return out;
}

// ---------------------------------------------------------------------------
// Splitting of the tangent bundle.

namespace {

// g-orthogonal projector onto the span of a g-orthonormal basis.
Mat projector(const Mat& B, const Mat& g) {
  if (B.cols() == 0) return Mat::Zero(g.rows(), g.cols());
  return B * B.transpose() * g;
}

// Largest g-norm of (I - Pi_B) E B over unit columns of B.
double invariance_residual(const Mat& B, const Mat& E, const Mat& g) {
  if (B.cols() == 0) return 0.0;
  Mat off = (Mat::Identity(g.rows(), g.cols()) - projector(B, g)) * E * B;
  return std::sqrt(std::max(0.0, (off.transpose() * g * off).diagonal().maxCoeff()));
}

// Distance between the spans of two g-orthonormal bases.
double g_subspace_distance(const Mat& A, const Mat& B, const Mat& g) {
  if (A.cols() != B.cols()) return 1.0;
  if (A.cols() == 0) return 0.0;
  Eigen::LLT<Mat> llt(g);
  Mat U = llt.matrixU();
  return subspace_distance(U * A, U * B);
}

}  // namespace

std::vector<CheckReport> suite_decomposition(const Triple& t, const SuiteParams& p) {
  const TripleMeta& meta = t.meta();
  CheckReport orth = residual_report(p, "decomposition_orthogonal",
                                     "TM' = V + H^+ + H^- + H with mutually g-orthogonal summands spanning TM'", 1e-7);
  CheckReport jinv = residual_report(p, "decomposition_j_invariant", "V, H^+, H^- and H are J-invariant", 1e-7);
  CheckReport sinv = residual_report(p, "decomposition_s_invariant", "V, H^+, H^- and H are S-invariant", 1e-7);
  CheckReport dims = make_report("decomposition_dimensions",
                                 "fibre dimensions of H^+, H^-, H are constant and equal k_-/+ and q", 0.0);
  CheckReport sum = make_report("decomposition_dimension_sum", "d_+ + d_- = m - 1 + q", 0.0);
  dims.seed = sum.seed = p.seed;
  std::mt19937_64 rng(p.seed);
  int d0[3] = {-1, -1, -1};
  for (int i = 0; i < p.samples; ++i) {
    ChartPoint cp = t.sample(rng);
    FieldContext F = field_context(*cp.chart, cp.x);
    EigenStructure E = eigen_structure(F, meta);
    const Mat& g = F.P.m.g;
    const Mat Vb = g_orthonormalize(F.Vbasis, g);
    const Mat* parts[4] = {&Vb, &E.h_plus, &E.h_minus, &E.h_rest};
    double ro = 0.0, rj = 0.0, rs = 0.0;
    int total = 0;
    for (int a = 0; a < 4; ++a) {
      total += static_cast<int>(parts[a]->cols());
      for (int b = a + 1; b < 4; ++b)
        if (parts[a]->cols() && parts[b]->cols()) ro = std::max(ro, max_abs(parts[a]->transpose() * g * *parts[b]));
      rj = std::max(rj, invariance_residual(*parts[a], F.P.J, g));
      rs = std::max(rs, invariance_residual(*parts[a], F.P.S, g) / std::max(1.0, F.P.S.norm()));
    }
    if (total != 2 * meta.m) ro = std::max(ro, 1.0);
    orth.add(ro);
    jinv.add(rj);
    sinv.add(rs);
    const int obs[3] = {E.dim_plus(), E.dim_minus(), E.dim_rest()};
    // Compact triples: dim H^- = k_+ and dim H^+ = k_-; otherwise constancy only.
    double rd = 0.0;
    if (meta.compact)
      rd = std::abs(obs[0] - meta.k_minus) + std::abs(obs[1] - meta.k_plus) + std::abs(obs[2] - meta.q);
    for (int c = 0; c < 3; ++c) {
      if (d0[c] < 0) d0[c] = obs[c];
      rd += std::abs(obs[c] - d0[c]);
    }
    dims.add(rd);
    if (meta.compact) sum.add(std::abs(meta.d_plus + meta.d_minus - (meta.m - 1 + obs[2])));
  }
  dims.note = "observed dim H^+, H^-, H = " + std::to_string(d0[0]) + ", " + std::to_string(d0[1]) + ", " +
              std::to_string(d0[2]);
  std::vector<CheckReport> out{orth.finish(), jinv.finish(), sinv.finish(), dims.finish()};
  if (meta.compact) out.push_back(sum.finish());
  return out;
}

// ---------------------------------------------------------------------------
// Kernels of Z on the critical manifolds.

namespace {

// Z(xi, eta) on T_y Sigma in the coefficients of the g-orthonormal basis T,
// with the largest component leaving T in *leak.
Mat z_matrix(const CriticalFrame& cf, double a, double width, const Vec& xi, const Vec& eta, double* leak = nullptr) {
  const PointGeometry& P = cf.P;
  const Mat& T = cf.T;
  const Mat R = P.R.op(xi, P.J * eta);
  Mat Z(T.cols(), T.cols());
  for (int j = 0; j < T.cols(); ++j) {
    Vec z = a * P.inner(xi, eta) * T.col(j) + width * R * P.J * T.col(j);
    Vec c = T.transpose() * P.m.g * z;
    Z.col(j) = c;
    if (leak) *leak = std::max(*leak, P.norm(z - T * c));
  }
  return Z;
}

struct KernelInfo {
  Mat K;  // orthonormal basis in T coefficients
  bool ambiguous = false;
};

KernelInfo kernel_of(const Mat& Z) {
  KernelInfo k;
  if (Z.cols() == 0) {
    k.K = Mat(0, 0);
    return k;
  }
  Vec sv;
  k.K = null_space(Z, 1e-7, &sv);
  const double top = std::max(1.0, sv.maxCoeff());
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) >= 1e-7 * top && sv(i) <= 1e-4 * top) k.ambiguous = true;
  return k;
}

Mat orthonormal_columns(const Mat& B, double rel = 1e-8) {
  if (B.cols() == 0) return B;
  Eigen::JacobiSVD<Mat> svd(B, Eigen::ComputeThinU);
  const Vec& s = svd.singularValues();
  int r = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > rel * s(0)) ++r;
  return svd.matrixU().leftCols(r);
}

Vec random_unit_normal(const CriticalFrame& cf, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Vec c(cf.N.cols());
  for (int i = 0; i < c.size(); ++i) c(i) = nd(rng);
  return cf.N * c.normalized();
}

// Image under d pi^sign of the columns of B (tangent vectors at the origin of
// the chart centered at X), in T coefficients at y.
Mat projected_image(const GrassmannTriple& gt, int sign, const CriticalFrame& cf, const GrassChart& cx, const Mat& B,
                    double h = 1e-5) {
  Mat out(cf.T.cols(), B.cols());
  for (int j = 0; j < B.cols(); ++j) {
    const Vec cp = cf.chart->coords(gt.project(sign, cx.frame(h * B.col(j))));
    const Vec cm = cf.chart->coords(gt.project(sign, cx.frame(-h * B.col(j))));
    out.col(j) = cf.T.transpose() * cf.P.m.g * ((cp - cm) / (2.0 * h));
  }
  return out;
}

// Normal vector of length rho with sigma(rho) = delta/2.
double half_delta_rho(const GrassmannTriple& gt, int sign) {
  const ProfileSolution& sol = gt.solution(sign);
  return sol.rho(sol.tau_of_sigma(0.5 * sol.delta()));
}

Mat kernel_projector(const CriticalFrame& cf, double a, double width, const Vec& xi) {
  const Mat K = kernel_of(z_matrix(cf, a, width, xi, xi)).K;
  return K * K.transpose();
}

struct SignVerdict {
  std::string label;  // "a", "b" or "undecided"
  double spread = 0.0, separation = 1.0, rank_ratio = 0.0;
  bool ambiguous = false;
};

}  // namespace

std::vector<CheckReport> suite_dichotomy(const Triple& t, const SuiteParams& p) {
  const GrassmannTriple* gt = as_grass(t);
  if (!gt) throw SuiteError("the dichotomy suite needs a compact catalog triple");
  const TripleMeta& meta = t.meta();
  const double a = meta.a, width = meta.tau_plus - meta.tau_minus;
  CheckReport pos = residual_report(p, "dichotomy_positivity", "g_y(Z(xi, xi) w, w) >= 0 on T_y Sigma", 1e-8);
  CheckReport sym = residual_report(
      p, "dichotomy_symmetries", "Z(xi, eta) = Z(eta, xi) = Z(J xi, J eta) commutes with J and preserves T_y Sigma", 1e-9);
  CheckReport rank = make_report("dichotomy_constant_rank", "Ker Z(xi, xi) has constant rank k over unit normals", 0.0);
  CheckReport line = residual_report(p, "dichotomy_line_invariance", "Ker Z(xi, xi) depends only on the line C xi", 1e-7);
  CheckReport mu = residual_report(p, "dichotomy_mu_kernel",
                                   "Ker Z(xi, xi) = Ker mu(xi, .) with mu(xi, w) = Z(J xi, .) w + Z(xi, .) J w", 1e-7);
  CheckReport img = residual_report(p, "dichotomy_kernel_image", "Ker Z(xi, xi) = d pi(H_x) at x = Phi(y, xi)", 1e-6);
  rank.seed = p.seed;
  std::mt19937_64 rng(p.seed);
  std::normal_distribution<double> nd;
  SignVerdict verdict[2];
  for (int si = 0; si < 2; ++si) {
    const int sign = si == 0 ? 1 : -1;
    const int d = sign > 0 ? meta.d_plus : meta.d_minus;
    SignVerdict& V = verdict[si];
    if (d <= 0) {
      // A point (or empty) critical manifold has constant kernels.
      V.label = "a";
      continue;
    }
    const CMat y = gt->random_critical_point(sign, rng);
    const CriticalFrame cf = gt->critical_frame(sign, y);
    const Mat JT = cf.T.transpose() * cf.P.m.g * cf.P.J * cf.T;
    const double rho = half_delta_rho(*gt, sign);
    std::vector<Vec> dirs;
    std::vector<Mat> kers;
    int k0 = -1;
    for (int j = 0; j < p.directions; ++j) {
      const Vec xi = random_unit_normal(cf, rng);
      const Vec eta = random_unit_normal(cf, rng);
      const Mat Z = z_matrix(cf, a, width, xi, xi);
      // Positivity on the symmetric part.
      Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (Z + Z.transpose()));
      pos.add(std::max(0.0, -es.eigenvalues().minCoeff()));
      double leak = 0.0;
      const Mat Zxe = z_matrix(cf, a, width, xi, eta, &leak);
      const Mat Zex = z_matrix(cf, a, width, eta, xi, &leak);
      const Mat Zj = z_matrix(cf, a, width, cf.P.J * xi, cf.P.J * eta, &leak);
      sym.add(std::max({max_abs(Zxe - Zex), max_abs(Zxe - Zj), max_abs(JT * Zxe - Zxe * JT), leak}));
      KernelInfo ki = kernel_of(Z);
      if (ki.ambiguous) V.ambiguous = true;
      const int kd = static_cast<int>(ki.K.cols());
      if (k0 < 0) k0 = kd;
      rank.add(std::abs(kd - k0) + (ki.ambiguous ? 1.0 : 0.0));
      // e^{i theta} xi.
      const double th = std::uniform_real_distribution<double>(0.0, 2.0 * M_PI)(rng);
      const Vec xt = std::cos(th) * xi + std::sin(th) * cf.P.J * xi;
      line.add(subspace_distance(ki.K, kernel_of(z_matrix(cf, a, width, xt, xt)).K));
      // Kernel of w -> mu(xi, w) over a basis of N.
      Mat M(cf.T.cols() * cf.N.cols(), cf.T.cols());
      for (int e = 0; e < cf.N.cols(); ++e) {
        const Vec n = cf.N.col(e);
        M.middleRows(e * cf.T.cols(), cf.T.cols()) =
            z_matrix(cf, a, width, cf.P.J * xi, n) + z_matrix(cf, a, width, xi, n) * JT;
      }
      mu.add(subspace_distance(ki.K, kernel_of(M).K));
      // Image of the matching family at x = Phi(y, rho xi).
      if (j < 5) {
        const CMat X = gt->phi_map(sign, y, rho * xi);
        auto cx = gt->centered_chart(X);
        FieldContext F = field_context(*cx, Vec::Zero(2 * meta.m));
        EigenStructure E = eigen_structure(F, meta);
        const Mat& fam = sign > 0 ? E.h_plus : E.h_minus;
        img.add(subspace_distance(ki.K, orthonormal_columns(projected_image(*gt, sign, cf, *cx, fam))));
      }
      dirs.push_back(xi);
      kers.push_back(ki.K);
    }
    double spread = 0.0, sep = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < kers.size(); ++i)
      for (size_t j = i + 1; j < kers.size(); ++j) {
        const double dd = subspace_distance(kers[i], kers[j]);
        spread = std::max(spread, dd);
        sep = std::min(sep, dd);
      }
    V.spread = spread;
    V.separation = sep;
    // Differential of xi -> Ker Z(xi, xi) on the complement of C xi.
    const Vec xi = dirs.front();
    const Mat Nc = g_orthonormalize(
        (Mat::Identity(2 * meta.m, 2 * meta.m) - projector(g_orthonormalize(hcat({xi, cf.P.J * xi}), cf.P.m.g), cf.P.m.g)) *
            cf.N,
        cf.P.m.g);
    const double h = 1e-5;
    Mat D(cf.T.cols() * cf.T.cols(), Nc.cols());
    for (int e = 0; e < Nc.cols(); ++e) {
      Vec xp = xi + h * Nc.col(e), xm = xi - h * Nc.col(e);
      xp /= cf.P.norm(xp);
      xm /= cf.P.norm(xm);
      Mat dP = (kernel_projector(cf, a, width, xp) - kernel_projector(cf, a, width, xm)) / (2.0 * h);
      D.col(e) = Eigen::Map<const Vec>(dP.data(), dP.size());
    }
    if (D.cols() > 0) {
      Eigen::JacobiSVD<Mat> svd(D);
      const Vec& s = svd.singularValues();
      V.rank_ratio = s(0) > 1e-8 ? s(s.size() - 1) / s(0) : 0.0;
    }
    if (V.ambiguous)
      V.label = "undecided";
    else if (spread < 1e-6)
      V.label = "a";
    else if (sep > 1e-3 && V.rank_ratio > 1e-3)
      V.label = "b";
    else
      V.label = "undecided";
  }
  std::vector<CheckReport> out{pos.finish(), sym.finish(), rank.finish(), line.finish(), mu.finish()};
  if (!img.residuals.empty()) out.push_back(img.finish());
  const std::string lab = verdict[0].label == verdict[1].label ? verdict[0].label : "undecided";
  CheckReport cls = make_report("dichotomy_classification",
                                "one and only one case holds: kernels constant (a) or an injective holomorphic map "
                                "of the projectivized normal space (b), the same for both signs",
                                0.0);
  cls.seed = p.seed;
  cls.add(lab == "undecided" ? 1.0 : 0.0);
  cls.note = "case (" + lab + "); sign +: " + verdict[0].label + ", sign -: " + verdict[1].label;
  out.push_back(cls.finish());
  if (lab == "a") {
    CheckReport sp = residual_report(p, "dichotomy_kernel_spread", "case (a): kernels equal over normal directions", 1e-6);
    for (const SignVerdict& v : verdict) sp.add(v.spread);
    out.push_back(sp.finish());
  } else if (lab == "b") {
    CheckReport sp = bound_report(p, "dichotomy_kernel_separation",
                                  "case (b): kernels of distinct lines are separated (injectivity)", 1e-3);
    CheckReport rk = bound_report(p, "dichotomy_differential_rank",
                                  "case (b): the differential of the kernel map has full rank", 1e-3);
    const double smin = std::min(verdict[0].separation, verdict[1].separation);
    const double rmin = std::min(verdict[0].rank_ratio, verdict[1].rank_ratio);
    sp.add(smin);
    rk.add(rmin);
    out.push_back(sp.finish());
    out.push_back(rk.finish());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Integrability of V + H^+ + H^-.

std::vector<CheckReport> suite_bracket(const Triple& t, const SuiteParams& p) {
  const TripleMeta& meta = t.meta();
  const bool expect_open = meta.compact && meta.q > 0;
  CheckReport hc = expect_open
                       ? bound_report(p, "bracket_h_component",
                                      "V + H^+ + H^- is a proper subbundle and cannot be integrable: brackets leave it", 1e-2)
                       : residual_report(p, "bracket_h_component",
                                         "V + H^+ + H^- (the sum of the kernels of d pi^+ and d pi^-) is integrable", 1e-4);
  CheckReport rich = residual_report(p, "bracket_richardson",
                                     "bracket H-component stable between steps 1e-4 and 5e-5", 1e-6);
  std::mt19937_64 rng(p.seed);
  const int samples = std::min(p.samples, 20);
  for (int si = 0; si < samples; ++si) {
    ChartPoint cp = t.sample(rng);
    const Chart& chart = *cp.chart;
    FieldContext F0 = field_context(chart, cp.x);
    EigenStructure E0 = eigen_structure(F0, meta);
    const Mat& g0 = F0.P.m.g;
    const Mat B0 = E0.h_rest;
    if (B0.cols() == 0) {
      hc.add(0.0);
      rich.add(0.0);
      continue;
    }
    const Mat X0 = hcat({g_orthonormalize(F0.Vbasis, g0), E0.h_plus, E0.h_minus});
    auto section = [&](const Vec& x) {
      FieldContext F = field_context(chart, x);
      EigenStructure E = eigen_structure(F, meta);
      return Mat(X0 - projector(E.h_rest, F.P.m.g) * X0);
    };
    const int n = static_cast<int>(cp.x.size()), c = static_cast<int>(X0.cols());
    auto h_component = [&](double h) {
      std::vector<Mat> dX(n);
      for (int k = 0; k < n; ++k) {
        Vec e = Vec::Zero(n);
        e(k) = h;
        dX[k] = (section(cp.x + e) - section(cp.x - e)) / (2.0 * h);
      }
      std::vector<Vec> out;
      for (int i = 0; i < c; ++i)
        for (int j = i + 1; j < c; ++j) {
          Vec br = Vec::Zero(n);
          for (int k = 0; k < n; ++k) br += X0(k, i) * dX[k].col(j) - X0(k, j) * dX[k].col(i);
          out.push_back(B0.transpose() * g0 * br);
        }
      return out;
    };
    const std::vector<Vec> c1 = h_component(1e-4), c2 = h_component(5e-5);
    double m = 0.0, drift = 0.0;
    for (size_t i = 0; i < c1.size(); ++i) {
      const Vec rv = (4.0 * c2[i] - c1[i]) / 3.0;
      m = std::max(m, rv.norm());
      drift = std::max(drift, (c1[i] - c2[i]).norm() / std::max(1.0, c2[i].norm()));
    }
    hc.add(m);
    rich.add(drift);
  }
  hc.finish();
  rich.finish();
  if (!expect_open && meta.q == 0) hc.note = "H = 0: V + H^+ + H^- is the whole tangent bundle";
  return {hc, rich};
}

// ---------------------------------------------------------------------------
// Bundle identities.

namespace {

Vec vertical(const BundleTriple& b, const CVec& eta) {
  Vec x = Vec::Zero(2 * b.base_dim() + 2 * b.rank());
  x.tail(2 * b.rank()) = realify(eta);
  return x;
}

double fibre_inner(const CMat& gamma, const CVec& a, const CVec& b) {
  return (a.transpose() * gamma * b.conjugate())(0).real();
}

// Unit vector of the fibre orthogonal to C xi (fibre metric gamma).
CVec fibre_complement(const CMat& gamma, const CVec& xi, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  CVec e(xi.size());
  for (int i = 0; i < e.size(); ++i) e(i) = cplx(nd(rng), nd(rng));
  const cplx c = (e.transpose() * gamma * xi.conjugate())(0) / (xi.transpose() * gamma * xi.conjugate())(0);
  e -= c * xi;
  return e / std::sqrt(fibre_inner(gamma, e, e));
}

std::vector<CheckReport> bundle_model_checks(const BundleTriple& b, const SuiteParams& p) {
  const TripleMeta& meta = b.meta();
  const Profile& pr = b.profile();
  const double a = pr.a;
  const int sg = b.sign();
  const double te = sg > 0 ? pr.tau_plus : pr.tau_minus;
  const int nb = b.base_dim(), r = b.rank();
  CheckReport geo = residual_report(p, "bundle_fibres_totally_geodesic",
                                    "d_w g(v, v) = 0 for projectable horizontal w, so the fibres are totally geodesic", 1e-6);
  CheckReport vblk = residual_report(
      p, "bundle_vertical_blocks",
      "a^2 rho^2 g = Qhat < , > on the radial plane and a rho^2 g = 2|tau - tau_+/-| < , > on its fibre complement", 1e-6);
  CheckReport hblk = residual_report(
      p, "bundle_horizontal_block",
      "g(w_x, w'_x) = h(w, w') - |tau - tau_+/-| <R^D(w, Jw') xi, i xi>/(a rho^2) with horizontal and vertical orthogonal",
      1e-6);
  CheckReport vf = residual_report(p, "bundle_gradient_field", "vhat = -/+ a xi and uhat = -/+ a i xi", 1e-6);
  CheckReport hess = residual_report(p, "bundle_hessian_law",
                                     "2 g(S w_x, w'_x) = +/- Qhat <R^D(w, Jw') xi, i xi>/(a rho^2) where rho = |xi| > 0", 1e-6);
  CheckReport ddn = residual_report(
      p, "bundle_norm_identities",
      "d rho^2 = 2<xi, .>, i dd-bar rho^2 = 2<J., .> on fibres and d rho^2 ^ J* d rho^2 = -4 rho^2 <J., .> on V", 1e-6);
  CheckReport omega = residual_report(
      p, "bundle_horizontal_curvature_form",
      "i dd-bar rho^2 on the Chern-horizontal space is the pullback of the form <R^D(., .) xi, i xi>", 1e-6);
  CheckReport chern = residual_report(
      p, "bundle_chern_connection",
      "Chern connection Omega = d gamma gamma^-1 with skew-Hermitian, J-invariant curvature R^D", 1e-9);
  std::mt19937_64 rng(p.seed);
  std::normal_distribution<double> nd;
  const Mat Jb = standard_j(std::max(nb, 1));
  for (int i = 0; i < p.samples; ++i) {
    ChartPoint cp = b.sample(rng);
    const Vec& x = cp.x;
    PointGeometry P = evaluate_point(*cp.chart, x);
    const CVec xi = b.fibre_part(x);
    const Vec z = b.base_part(x);
    const ChernData cd = chern_connection(b.bundle(), z);
    const CMat& gam = cd.gamma;
    const double rho2 = b.rho_squared(x);
    const double Qh = (*pr.Q)(P.tau);
    const double gap = std::fabs(P.tau - te);
    const Vec vx = vertical(b, xi), vix = vertical(b, cplx(0, 1) * xi);
    // Vertical blocks.
    double rv = std::max({std::fabs(a * a * rho2 * P.inner(vx, vx) - Qh * rho2),
                          std::fabs(a * a * rho2 * P.inner(vix, vix) - Qh * rho2), std::fabs(P.inner(vx, vix))}) /
                std::max(1.0, Qh * rho2);
    if (r >= 2) {
      const CVec e1 = fibre_complement(gam, xi, rng), e2 = fibre_complement(gam, xi, rng);
      for (const CVec& f : {e1, e2, CVec(cplx(0, 1) * e1)})
        rv = std::max(rv, std::fabs(a * rho2 * P.inner(vertical(b, f), vertical(b, e2)) -
                                    2.0 * gap * fibre_inner(gam, f, e2)) /
                              std::max(1.0, gap));
      rv = std::max(rv, std::fabs(P.inner(vx, vertical(b, e1))));
    }
    vblk.add(rv);
    // Gradient and Killing fields.
    vf.add(std::max(P.norm(P.v + sg * a * vx), P.norm(P.u + sg * a * vix)) / (a * std::sqrt(rho2)));
    // Norm identities on the fibre.
    {
      std::vector<double> pt(x.data(), x.data() + x.size());
      const Jet n2jet = b.norm_chart()->potential(jet_seed(pt, 3));
      const ScalarJet n2 = scalar_jet(n2jet);
      // rho^2 is only semi-definite on flat bundles, so no positivity test here.
      const MetricJet nm = metric_from_potential_jet(n2jet);
      CVec eta(r);
      for (int k = 0; k < r; ++k) eta(k) = cplx(nd(rng), nd(rng));
      CVec eta2(r);
      for (int k = 0; k < r; ++k) eta2(k) = cplx(nd(rng), nd(rng));
      const Vec ve = vertical(b, eta), ve2 = vertical(b, eta2), vie = vertical(b, cplx(0, 1) * eta);
      double rd = std::fabs(n2.grad.dot(ve) - 2.0 * fibre_inner(gam, xi, eta));
      // i dd-bar rho^2 (X, Y) = g_rho2(JX, Y) with J X = i X on fibres.
      rd = std::max(rd, std::fabs(vie.dot(nm.g * ve2) - 2.0 * fibre_inner(gam, cplx(0, 1) * eta, eta2)));
      auto drho = [&](const Vec& X) { return n2.grad.dot(X); };
      const Mat& J = P.J;
      const double wedge = drho(vx) * drho(J * vix) - drho(vix) * drho(J * vx);
      rd = std::max(rd, std::fabs(wedge + 4.0 * rho2 * fibre_inner(gam, cplx(0, 1) * xi, cplx(0, 1) * xi)));
      if (nb > 0) {
        Vec w(2 * nb), w2(2 * nb);
        for (int k = 0; k < 2 * nb; ++k) {
          w(k) = nd(rng);
          w2(k) = nd(rng);
        }
        const Vec hw = b.horizontal_lift(x, w), hw2 = b.horizontal_lift(x, w2);
        rd = std::max(rd, std::fabs(drho(hw)));
        omega.add(std::fabs((J * hw).dot(nm.g * hw2) + cd.rd_form(w, w2, xi)));
      } else {
        omega.add(0.0);
      }
      ddn.add(rd / std::max(1.0, rho2));
    }
    // Horizontal blocks, Hessian law and fibre geodesy.
    if (nb > 0) {
      const MetricJet h = metric_from_potential(*b.base_chart(), z, 3);
      Vec w(2 * nb), w2(2 * nb);
      for (int k = 0; k < 2 * nb; ++k) {
        w(k) = nd(rng);
        w2(k) = nd(rng);
      }
      const Vec hw = b.horizontal_lift(x, w), hw2 = b.horizontal_lift(x, w2);
      const double rdf = cd.rd_form(w, Jb * w2, xi);
      double rh = std::fabs(P.inner(hw, hw2) - (w.dot(h.g * w2) - gap / (a * rho2) * rdf));
      rh = std::max({rh, std::fabs(P.inner(hw, vx)), std::fabs(P.inner(hw, vix))});
      hblk.add(rh);
      hess.add(std::fabs(2.0 * P.inner(P.S * hw, hw2) - sg * Qh / (a * rho2) * rdf));
      geo.add(std::fabs(P.dQ.dot(hw)) / std::max(1.0, w.norm()));
      // Chern connection and curvature symmetries.
      CVec e(r);
      for (int k = 0; k < r; ++k) e(k) = cplx(nd(rng), nd(rng));
      chern.add(std::max({cd.connection_residual(), std::fabs(cd.rd_pair(w, w2, e, e).real()),
                          std::fabs(cd.rd_form(Jb * w, Jb * w2, e) - cd.rd_form(w, w2, e))}));
    } else {
      hblk.add(0.0);
      hess.add(0.0);
      geo.add(0.0);
      chern.add(0.0);
    }
  }
  std::vector<CheckReport> out{geo.finish(), vblk.finish(), hblk.finish(), vf.finish(),
                               hess.finish(), ddn.finish(), omega.finish(), chern.finish()};
  if (nb > 0 && b.fibre() == BundleTriple::Fibre::trivial)
    for (CheckReport& rep : out)
      if (rep.id == "bundle_horizontal_block") rep.note = "flat bundle: the horizontal block is the pullback of h";
  // Boundary sphere of a point base.
  if (nb == 0 && r >= 2) {
    CheckReport sph = residual_report(p, "bundle_sphere_limit",
                                      "g_(t xi)(t eta, t eta) -> 2(tau_+ - tau_-)<eta, eta>/a as t -> infinity", 1e-6);
    std::mt19937_64 rr(p.seed + 7);
    const CMat I = CMat::Identity(r, r);
    for (int k = 0; k < 5; ++k) {
      CVec xi(r);
      for (int j = 0; j < r; ++j) xi(j) = cplx(nd(rr), nd(rr));
      xi.normalize();
      const CVec eta = fibre_complement(I, xi, rr);
      const double T = 1e4;
      const Vec x = vertical(b, T * xi);
      const MetricJet m = metric_from_potential(*b.chart(), x, 3);
      const Vec ve = vertical(b, T * eta);
      sph.add(std::fabs(ve.dot(m.g * ve) - 2.0 * pr.width() / a));
    }
    out.push_back(sph.finish());
  }
  // One-dimensional total space with the Fubini-Study profile: constant curvature.
  if (meta.m == 1 && is_fubini_study(pr)) {
    CheckReport rnd = residual_report(p, "bundle_round_sphere",
                                      "point base with a line fibre and the Fubini-Study profile gives the round sphere",
                                      1e-6);
    std::mt19937_64 rr(p.seed + 11);
    double k0 = 0.0;
    for (int k = 0; k < 10; ++k) {
      ChartPoint cp = b.sample(rr);
      PointGeometry P = evaluate_point(*cp.chart, cp.x);
      const Mat& g = P.m.g;
      const double K = P.R.low(0, 1, 1, 0) / (g(0, 0) * g(1, 1) - g(0, 1) * g(0, 1));
      if (k == 0) k0 = K;
      rnd.add(std::fabs(K - k0) / std::fabs(k0));
    }
    out.push_back(rnd.finish());
  }
  return out;
}

// Identities along Phi on a CP triple.
std::vector<CheckReport> phi_bundle_checks(const GrassmannTriple& gt, const SuiteParams& p) {
  const TripleMeta& meta = gt.meta();
  const double a = meta.a, width = meta.tau_plus - meta.tau_minus;
  CheckReport pull = residual_report(
      p, "phi_pullback_horizontal",
      "for q = 0 the pullback under Phi of g on horizontal lifts is |tau - tau_-/+| h/(tau_+ - tau_-)", 1e-6);
  CheckReport rd = residual_report(p, "phi_normal_curvature",
                                   "normal part of R(w, w') xi = a (tau_+ - tau_-)^-1 g(Jw, w') J xi on the critical manifold",
                                   1e-6);
  std::mt19937_64 rng(p.seed);
  std::normal_distribution<double> nd;
  OdeOptions opt;
  opt.abs_tol = 1e-12;
  opt.rel_tol = 1e-12;
  for (int sign : {1, -1}) {
    const int d = sign > 0 ? meta.d_plus : meta.d_minus;
    if (d <= 0) continue;
    const ProfileSolution& sol = gt.solution(sign);
    const double tother = sign > 0 ? meta.tau_minus : meta.tau_plus;
    const int count = std::max(1, p.samples / 2);
    for (int i = 0; i < count; ++i) {
      const CriticalFrame cf = gt.critical_frame(sign, gt.random_critical_point(sign, rng));
      const PointGeometry& Y = cf.P;
      const Vec xi = random_unit_normal(cf, rng);
      Vec cw(cf.T.cols()), cw2(cf.T.cols());
      for (int k = 0; k < cw.size(); ++k) {
        cw(k) = nd(rng);
        cw2(k) = nd(rng);
      }
      const Vec w = cf.T * cw, w2 = cf.T * cw2;
      // Normal part of R(w, w') xi.
      const Mat Pn = Mat::Identity(Y.x.size(), Y.x.size()) - projector(cf.T, Y.m.g);
      const Vec lhs = Pn * Y.R.op(w, w2) * xi;
      const Vec rhs = a / width * Y.inner(Y.J * w, w2) * (Y.J * xi);
      rd.add(Y.norm(lhs - rhs) / (cw.norm() * cw2.norm()));
      // Horizontal lifts along Phi through Jacobi fields.
      const double sigma = std::uniform_real_distribution<double>(0.15, 0.85)(rng) * sol.delta();
      const Vec o = Vec::Zero(Y.x.size());
      const Vec x = exp_normal(*cf.chart, o, sigma * xi, opt);
      const Vec jw = d_exp_normal(*cf.chart, o, sigma * xi, o, w, opt);
      const Vec jw2 = d_exp_normal(*cf.chart, o, sigma * xi, o, w2, opt);
      const PointGeometry X = evaluate_point(*cf.chart, x);
      const double pred = std::fabs(X.tau - tother) / width * Y.inner(w, w2);
      pull.add(std::fabs(X.inner(jw, jw2) - pred) / (cw.norm() * cw2.norm()));
    }
  }
  std::vector<CheckReport> out;
  if (!pull.residuals.empty()) out.push_back(pull.finish());
  if (!rd.residuals.empty()) out.push_back(rd.finish());
  return out;
}

}  // namespace

std::vector<CheckReport> suite_bundle(const Triple& t, const SuiteParams& p) {
  if (const BundleTriple* b = as_bundle(t)) {
    std::vector<CheckReport> out = predicate_suite(t, p.samples, p.seed, p.tol > 0.0 ? p.tol : 1e-6);
    for (CheckReport& r : out) r.id = "bundle_" + r.id;
    for (CheckReport& r : bundle_model_checks(*b, p)) out.push_back(r);
    return out;
  }
  const GrassmannTriple* gt = as_grass(t);
  if (gt && gt->k() == 1) return phi_bundle_checks(*gt, p);
  throw SuiteError("the bundle suite needs a bundle or CP triple");
}

// ---------------------------------------------------------------------------
// pi^-/+ o Phi on the normal sphere.

std::vector<CheckReport> suite_immersion(const Triple& t, const SuiteParams& p) {
  const GrassmannTriple* gt = as_grass(t);
  if (!gt) throw SuiteError("the immersion suite needs a compact catalog triple");
  const TripleMeta& meta = t.meta();
  const double a = meta.a, width = meta.tau_plus - meta.tau_minus;
  CheckReport line = residual_report(p, "immersion_line_constancy", "pi^-/+(Phi(y, z xi)) does not depend on z", 1e-6);
  CheckReport metric = residual_report(
      p, "immersion_metric", "the induced metric is 2(tau_+ - tau_-)/a times the Fubini-Study metric", 1e-5);
  CheckReport tang = residual_report(p, "immersion_tangent", "the image tangent spaces coincide with d pi^-/+(H^-/+)",
                                     1e-6);
  CheckReport geod = residual_report(p, "immersion_geodesy", "the image is totally geodesic", 1e-5);
  CheckReport jac = residual_report(p, "normal_exponential_differential",
                                    "Jacobi field of a variation of normal geodesics: w_hat(0) = y', nabla w_hat(0) = "
                                    "nabla_y' xi",
                                    1e-6);
  std::mt19937_64 rng(p.seed);
  std::normal_distribution<double> nd;
  OdeOptions opt;
  opt.abs_tol = 1e-13;
  opt.rel_tol = 1e-13;
  const int count = std::max(1, std::min(p.samples, 10));
  for (int sign : {1, -1}) {
    const int d = sign > 0 ? meta.d_plus : meta.d_minus;
    const int other = -sign;
    if (meta.m - d - 1 <= 0) continue;  // projectivized normal space is a point
    for (int i = 0; i < count; ++i) {
      const CMat y = gt->random_critical_point(sign, rng);
      const CriticalFrame cf = gt->critical_frame(sign, y);
      const PointGeometry& Y = cf.P;
      const Vec xi = random_unit_normal(cf, rng);
      // Normal geodesics from y are chart rays of the centered chart.
      auto F = [&](const Vec& e) { return gt->project(other, cf.chart->frame(e / Y.norm(e))); };
      const CMat F0 = F(xi);
      // Constancy along C-lines through Phi itself.
      const double rho = half_delta_rho(*gt, sign);
      for (int k = 0; k < (i < 3 ? 2 : 0); ++k) {
        const double th = std::uniform_real_distribution<double>(0.0, 2.0 * M_PI)(rng);
        const double sc = std::uniform_real_distribution<double>(0.3, 1.5)(rng);
        const Vec zx = sc * rho * (std::cos(th) * xi + std::sin(th) * Y.J * xi);
        line.add(frame_distance(gt->project(other, gt->phi_map(sign, y, zx)), F0));
      }
      // Tangent directions of P(N) at [xi].
      const Mat C = g_orthonormalize(
          (Mat::Identity(Y.x.size(), Y.x.size()) - projector(g_orthonormalize(hcat({xi, Y.J * xi}), Y.m.g), Y.m.g)) *
              cf.N,
          Y.m.g);
      auto cF = gt->centered_chart(F0);
      const MetricJet mF = metric_from_potential(*cF, Vec::Zero(Y.x.size()), 3);
      const double h = 1e-5;
      Mat D(Y.x.size(), C.cols());
      for (int e = 0; e < C.cols(); ++e)
        D.col(e) = (cF->coords(F(xi + h * C.col(e))) - cF->coords(F(xi - h * C.col(e)))) / (2.0 * h);
      metric.add(max_abs(D.transpose() * mF.g * D - 2.0 * width / a * Mat::Identity(C.cols(), C.cols())));
      // d pi(H) at a point of the ray.
      {
        const CMat X = cf.chart->frame(0.7 * xi / Y.norm(xi));
        auto cx = gt->centered_chart(X);
        FieldContext FX = field_context(*cx, Vec::Zero(Y.x.size()));
        EigenStructure E = eigen_structure(FX, meta);
        const Mat& fam = other > 0 ? E.h_plus : E.h_minus;
        Mat img(Y.x.size(), fam.cols());
        for (int j = 0; j < fam.cols(); ++j)
          img.col(j) = (cF->coords(gt->project(other, cx->frame(h * fam.col(j)))) -
                        cF->coords(gt->project(other, cx->frame(-h * fam.col(j))))) /
                       (2.0 * h);
        tang.add(g_subspace_distance(g_orthonormalize(D, mF.g), g_orthonormalize(img, mF.g), mF.g));
      }
      // Great circle through xi maps to a geodesic.
      {
        const Vec eta = C.col(0);
        const double s = 2e-3;
        auto c = [&](double u) { return Vec(cF->coords(F(std::cos(u) * xi + std::sin(u) * eta))); };
        const Vec cm2 = c(-2 * s), cm1 = c(-s), c0 = c(0.0), cp1 = c(s), cp2 = c(2 * s);
        const Vec v1 = (cm2 - 8.0 * cm1 + 8.0 * cp1 - cp2) / (12.0 * s);
        const Vec v2 = (-cm2 + 16.0 * cm1 - 30.0 * c0 + 16.0 * cp1 - cp2) / (12.0 * s * s);
        const Christoffel G = christoffel(mF);
        const Vec acc = v2 + G.contract(v1, v1);
        const double vv = v1.dot(mF.g * v1);
        const Vec perp = acc - (v1.dot(mF.g * acc) / vv) * v1;
        geod.add(std::sqrt(std::max(0.0, perp.dot(mF.g * perp))) / vv);
      }
      // Differential of the normal exponential map against a finite difference.
      if (i < 2) {
        const ProfileSolution& sol = gt->solution(sign);
        const double sigma = 0.5 * sol.delta();
        Vec w = Vec::Zero(Y.x.size());
        if (cf.T.cols() > 0) w = cf.T.col(0);
        Vec eta = C.col(0) * 0.3 + cf.N.col(0) * 0.2;
        const Vec o = Vec::Zero(Y.x.size());
        const Vec X0 = sigma * xi;
        const Vec exact = d_exp_normal(*cf.chart, o, X0, sigma * eta, w, opt);
        const double hh = 1e-4;
        const Christoffel G0 = christoffel(Y.m);
        const Vec dxi = sigma * eta - G0.contract(w, X0);
        const Vec fd = (exp_normal(*cf.chart, hh * w, X0 + hh * dxi, opt) - exp_normal(*cf.chart, -hh * w, X0 - hh * dxi, opt)) /
                       (2.0 * hh);
        jac.add((exact - fd).norm() / std::max(1.0, exact.norm()));
      }
    }
  }
  std::vector<CheckReport> out;
  for (CheckReport* r : {&line, &metric, &tang, &geod, &jac})
    if (!r->residuals.empty()) out.push_back(r->finish());
  return out;
}

// ---------------------------------------------------------------------------
// Dimension audit.

std::vector<CheckReport> dimension_audit(const Triple& t) {
  const TripleMeta& m = t.meta();
  if (!m.compact) {
    const int d = std::max(m.d_plus, m.d_minus);
    CheckReport r = make_report("audit_range", "0 <= d <= m - 1 for the critical manifold", 0.0);
    r.add(d >= 0 && d <= m.m - 1 ? 0.0 : 1.0);
    r.finish();
    r.note = "noncompact: dimension sums skipped; (d, m) = (" + std::to_string(d) + ", " + std::to_string(m.m) + ")";
    return {r};
  }
  CheckReport range = make_report("audit_range", "d_+ + d_- >= m - 1 >= d_+/- >= 0", 0.0);
  CheckReport sum = make_report("audit_dimension_sum", "d_+ + d_- = m - 1 + q with m = 1 + k_+ + k_- + q", 0.0);
  const bool ok = m.d_plus + m.d_minus >= m.m - 1 && m.m - 1 >= m.d_plus && m.m - 1 >= m.d_minus && m.d_plus >= 0 &&
                  m.d_minus >= 0;
  range.add(ok ? 0.0 : 1.0);
  sum.add(std::abs(m.d_plus + m.d_minus - (m.m - 1 + m.q)) + std::abs(m.m - (1 + m.k_plus + m.k_minus + m.q)) +
          std::abs(m.k_plus - (m.m - 1 - m.d_plus)) + std::abs(m.k_minus - (m.m - 1 - m.d_minus)));
  std::vector<CheckReport> out{range.finish(), sum.finish()};
  const GrassmannTriple* gt = as_grass(t);
  if (gt && gt->k() == 1) {
    CheckReport cp = make_report("audit_cp", "d_+ + d_- = m - 1 for every CP triple", 0.0);
    cp.add(std::abs(m.d_plus + m.d_minus - (m.m - 1)) + std::abs(m.q));
    out.push_back(cp.finish());
  } else if (gt) {
    const int n = gt->n(), k = gt->k();
    CheckReport gr = make_report("audit_grassmannian",
                                 "q = (k - 1)(n - 1 - k) and {d_+, d_-} = {(n - k)(k - 1), (n - 1 - k)k}", 0.0);
    const int e1 = (n - k) * (k - 1), e2 = (n - 1 - k) * k;
    const bool dset = (m.d_plus == e1 && m.d_minus == e2) || (m.d_plus == e2 && m.d_minus == e1);
    gr.add(std::abs(m.q - (k - 1) * (n - 1 - k)) + (dset ? 0 : 1) + std::abs(m.m - (n - k) * k));
    out.push_back(gr.finish());
  }
  for (CheckReport& r : out) r.note = "(d_+, d_-, m, q) = (" + std::to_string(m.d_plus) + ", " + std::to_string(m.d_minus) +
                                      ", " + std::to_string(m.m) + ", " + std::to_string(m.q) + ")";
  return out;
}

// ---------------------------------------------------------------------------
// Profile machinery.

namespace {

// Integral of Q^(-1/2) over the interval after tau = tau_- + w (1 - cos th)/2.
double delta_quadrature(const Profile& p) {
  const int n = 4000;
  const double w = p.width();
  auto f = [&](double th) {
    if (th <= 0.0 || th >= M_PI) {
      // Limits from Q ~ 2a(tau - tau_-) and Q ~ 2a(tau_+ - tau).
      return std::sqrt(w / (2.0 * p.a));
    }
    const double tau = p.tau_minus + 0.5 * w * (1.0 - std::cos(th));
    return 0.5 * w * std::sin(th) / std::sqrt((*p.Q)(tau));
  };
  double s = f(0.0) + f(M_PI);
  const double hh = M_PI / n;
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * hh);
  return s * hh / 3.0;
}

std::string number(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace

std::vector<CheckReport> suite_profile(const Triple& t, const SuiteParams& p) {
  const Profile& pr = t.profile();
  const double w = pr.width(), a = pr.a;
  std::vector<CheckReport> out;
  CheckReport val = validate_profile(pr);
  val.seed = p.seed;
  out.push_back(val);
  CheckReport del = residual_report(p, "profile_delta", "delta is the integral of Q^(-1/2) over (tau_-, tau_+)", 1e-8);
  CheckReport rho = residual_report(p, "profile_rho",
                                    is_fubini_study(pr) ? "rho matches sqrt((tau_+ - tau)/(tau - tau_-)) after anchoring"
                                                        : "d log rho/d tau = -/+ a/Q",
                                    1e-7);
  CheckReport fp = residual_report(p, "profile_fprime",
                                   "f'(rho^2) = |tau - tau_+/-|/(a rho^2) including the limit rho -> 0", 1e-7);
  const double dq = delta_quadrature(pr);
  const double mid = 0.5 * (pr.tau_minus + pr.tau_plus);
  for (int sign : {1, -1}) {
    ProfileSolution sol(pr, sign, mid, 1.0);
    del.add(std::fabs(sol.delta() - dq));
    if (is_fubini_study(pr)) del.add(std::fabs(sol.delta() - M_PI * std::sqrt(w / (2.0 * a))));
    for (int i = 1; i < 40; ++i) {
      const double tau = pr.tau_minus + w * i / 40.0;
      if (is_fubini_study(pr)) {
        const double ratio = (pr.tau_plus - tau) / (tau - pr.tau_minus);
        const double closed = std::sqrt(sign > 0 ? ratio : 1.0 / ratio);
        rho.add(std::fabs(sol.rho(tau) - closed) / std::max(1.0, closed));
      } else {
        const double hh = 1e-4 * w;
        const double dl = (sol.log_rho(tau + hh) - sol.log_rho(tau - hh)) / (2.0 * hh);
        rho.add(std::fabs(dl + sign * a / (*pr.Q)(tau)) / std::max(1.0, a / (*pr.Q)(tau)) * 1e-2);
      }
      const double fs = sol.fprime_s(tau), ff = sol.fprime_formula(tau);
      fp.add(std::fabs(fs - ff) / std::max(1.0, std::fabs(ff)));
    }
    // rho -> 0 at the critical end.
    const double te = sign > 0 ? pr.tau_plus : pr.tau_minus;
    const double near = te - sign * 1e-9 * w;
    fp.add(std::fabs(sol.fprime_formula(near) - sol.fprime_limit()) / std::max(1.0, sol.fprime_limit()));
  }
  out.push_back(del.finish());
  out.push_back(rho.finish());
  out.push_back(fp.finish());
  // Modification between the Fubini-Study profile and a sine profile (or the
  // given profile when it is not Fubini-Study).
  Profile src = fubini_study_profile(pr.tau_minus, pr.tau_plus, a);
  Profile dst = pr;
  if (is_fubini_study(pr)) {
    const std::string e = number(2.0 * a * w / M_PI) + "*sin(pi*(t-(" + number(pr.tau_minus) + "))/" + number(w) + ")";
    dst = Profile{pr.tau_minus, pr.tau_plus, a, make_expr_q(e)};
  }
  Modification mod(match_profiles(src, dst));
  CheckReport rt = residual_report(p, "modification_round_trip",
                                   "the modification phi reproduces Qhat(tau_hat) = tau_hat' Q on the clipped interval", 1e-6);
  for (int i = 0; i <= 400; ++i) {
    const double tau = pr.tau_minus + w * (0.005 + 0.99 * i / 400.0);
    rt.add(std::fabs(mod.qhat_recovered(tau) - (*dst.Q)(mod.tau_hat(tau))));
  }
  CheckReport guard = bound_report(p, "modification_positivity",
                                   "1 + Q' phi' + Q phi'' > 0 and 1 -/+ 2a phi'(tau_+/-) > 0", 0.0);
  guard.add(std::min({mod.positivity_margin(), mod.endpoint_margin(1), mod.endpoint_margin(-1)}));
  guard.finish();
  if (guard.max_residual <= 0.0) guard.pass = false;
  CheckReport ends = residual_report(p, "modification_endpoint_identity",
                                     "phi'(tau_+/-) = (tau_hat'(tau_+/-) - 1)/(-/+ 2a)", 1e-6);
  ends.add(std::max(mod.endpoint_identity_residual(1), mod.endpoint_identity_residual(-1)));
  out.push_back(rt.finish());
  out.push_back(guard);
  out.push_back(ends.finish());
  return out;
}

// ---------------------------------------------------------------------------
// Flags.

std::vector<CheckReport> suite_flags(const SuiteParams& p, int n, int k, int pairs) {
  CheckReport r = make_report("flag_chain",
                              "any two flags (W, W') are joined by a chain of flags sharing W or W' at each step", 0.0);
  r.seed = p.seed;
  std::mt19937_64 rng(p.seed);
  int worst_len = 0;
  for (int i = 0; i < pairs; ++i) {
    const Flag a = random_flag(n, k, rng), b = random_flag(n, k, rng);
    const std::vector<Flag> chain = flag_chain(a, b);
    int bad = 0;
    if (chain.empty() || chain.size() > static_cast<size_t>(2 * k * n)) ++bad;
    if (!chain.empty()) {
      if (frame_distance(chain.front().W, a.W) > 1e-9 || frame_distance(chain.front().Wp, a.Wp) > 1e-9) ++bad;
      if (frame_distance(chain.back().W, b.W) > 1e-9 || frame_distance(chain.back().Wp, b.Wp) > 1e-9) ++bad;
      for (size_t j = 0; j < chain.size(); ++j) {
        if (!is_flag(chain[j])) ++bad;
        if (j > 0 && !flags_adjacent(chain[j - 1], chain[j])) ++bad;
      }
    }
    worst_len = std::max(worst_len, static_cast<int>(chain.size()));
    r.add(bad);
  }
  r.note = "longest chain " + std::to_string(worst_len);
  return {r.finish()};
}

// ---------------------------------------------------------------------------
// Dispatch and reports.

const char* const kVersion = "1.0.0";

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"predicates", "decomposition", "affine",  "dichotomy", "bracket",
                                              "bundle",     "immersion",     "audit",   "profile",   "flags"};
  return names;
}

bool suite_applies(const std::string& name, const Triple& t) {
  const GrassmannTriple* gt = as_grass(t);
  if (name == "affine") return t.has_normal_geodesics();
  if (name == "dichotomy" || name == "immersion") return gt != nullptr;
  if (name == "bundle") return as_bundle(t) != nullptr || (gt && gt->k() == 1);
  if (name == "flags") return gt && gt->k() >= 2;
  return std::find(suite_names().begin(), suite_names().end(), name) != suite_names().end();
}

std::vector<CheckReport> run_named_suite(const std::string& name, const Triple& t, const SuiteParams& p) {
  if (std::find(suite_names().begin(), suite_names().end(), name) == suite_names().end())
    throw SuiteError("unknown suite '" + name + "'");
  if (!suite_applies(name, t)) throw SuiteError("suite '" + name + "' does not apply to " + t.meta().spec);
  if (name == "predicates") return suite_predicates(t, p);
  if (name == "decomposition") return suite_decomposition(t, p);
  if (name == "affine") return suite_affine(t, p);
  if (name == "dichotomy") return suite_dichotomy(t, p);
  if (name == "bracket") return suite_bracket(t, p);
  if (name == "bundle") return suite_bundle(t, p);
  if (name == "immersion") return suite_immersion(t, p);
  if (name == "audit") return dimension_audit(t);
  if (name == "profile") return suite_profile(t, p);
  const GrassmannTriple* gt = as_grass(t);
  return suite_flags(p, gt->n(), gt->k(), 1000);
}

nlohmann::ordered_json run_suite(const SuiteConfig& c) {
  if (c.params.samples < 1) throw SuiteError("sample count must be positive");
  if (c.params.tol < 0.0) throw SuiteError("tolerance must be positive");
  const Profile profile = c.profile_path.empty() ? fubini_study_profile(0.0, 1.0, 1.0) : load_profile(c.profile_path);
  const TriplePtr t = make_triple(c.spec, profile);
  std::vector<std::string> names;
  if (c.suite == "all") {
    for (const std::string& n : suite_names())
      if (suite_applies(n, *t)) names.push_back(n);
  } else {
    if (std::find(suite_names().begin(), suite_names().end(), c.suite) == suite_names().end())
      throw SuiteError("unknown suite '" + c.suite + "'");
    if (!suite_applies(c.suite, *t)) throw SuiteError("suite '" + c.suite + "' does not apply to " + c.spec);
    names.push_back(c.suite);
  }
  nlohmann::ordered_json rep;
  rep["meta"]["spec"] = c.spec;
  rep["meta"]["seed"] = c.params.seed;
  rep["meta"]["versions"] = {{"ggk", kVersion},
                             {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                           "." + std::to_string(EIGEN_MINOR_VERSION)},
                             {"report_schema", 1}};
  rep["meta"]["suite"] = c.suite;
  rep["meta"]["samples"] = c.params.samples;
  rep["meta"]["tol_override"] = c.params.tol;
  rep["meta"]["triple"] = {{"kind", t->meta().kind}, {"m", t->meta().m},           {"d_plus", t->meta().d_plus},
                           {"d_minus", t->meta().d_minus}, {"q", t->meta().q},     {"a", t->meta().a},
                           {"tau_minus", t->meta().tau_minus}, {"tau_plus", t->meta().tau_plus}};
  auto checks = nlohmann::ordered_json::array();
  for (const std::string& n : names)
    for (const CheckReport& r : run_named_suite(n, *t, c.params)) {
      nlohmann::ordered_json j;
      j["suite"] = n;
      nlohmann::ordered_json body = to_json(r);
      for (auto it = body.begin(); it != body.end(); ++it) j[it.key()] = it.value();
      checks.push_back(j);
    }
  rep["checks"] = checks;
  rep["passed"] = report_passed(rep);
  return rep;
}

bool report_passed(const nlohmann::ordered_json& report) {
  if (!report.contains("checks") || report["checks"].empty()) return false;
  for (const auto& c : report["checks"])
    if (!c.value("pass", false)) return false;
  return true;
}

}  // namespace ggk
