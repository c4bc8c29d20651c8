#include "ggk/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ggk {

namespace {

double max_abs(const Mat& M) { return M.size() ? M.cwiseAbs().maxCoeff() : 0.0; }

double gnorm(const PointGeometry& P, const Vec& a) { return std::sqrt(std::max(0.0, P.inner(a, a))); }

Vec random_vec(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = nd(rng);
  return v;
}

// Unit vector of V-perp from a coordinate vector.
Vec unit_perp(const FieldContext& F, const Vec& w0) {
  Vec w = F.perp_projector() * w0;
  const double n = gnorm(F.P, w);
  return n > 1e-12 ? Vec(w / n) : Vec(Vec::Zero(w.size()));
}

// Coordinate Jacobian d_j v^k of the gradient field.
Mat coordinate_jacobian(const PointGeometry& P) { return P.S - P.G.along(P.v); }

}  // namespace

Mat FieldContext::perp_projector() const {
  const int N = static_cast<int>(P.v.size());
  Mat Pi = Mat::Identity(N, N);
  if (P.Q <= 0.0) return Pi;
  Pi -= P.v * (P.m.g * P.v).transpose() / P.Q;
  Pi -= P.u * (P.m.g * P.u).transpose() / P.Q;
  return Pi;
}

FieldContext field_context(PointGeometry P) {
  FieldContext F;
  F.P = std::move(P);
  if (!F.P.has_fields) throw GeometryError("field context needs a chart with tau");
  const int N = static_cast<int>(F.P.v.size());
  F.Vbasis.resize(N, 2);
  F.Vbasis.col(0) = F.P.v;
  F.Vbasis.col(1) = F.P.u;
  // V-perp has real dimension N - 2 on M'; keep the dominant directions of the projector.
  const Mat Pi = F.perp_projector();
  Mat G = Pi.transpose() * F.P.m.g * Pi;
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (G + G.transpose()));
  const int k = F.P.Q > 0.0 ? N - 2 : N;
  F.Vperp.resize(N, k);
  for (int c = 0; c < k; ++c) {
    const int i = N - 1 - c;
    F.Vperp.col(c) = Pi * es.eigenvectors().col(i) / std::sqrt(es.eigenvalues()(i));
  }
  return F;
}

FieldContext field_context(const Chart& chart, const Vec& x) { return field_context(evaluate_point(chart, x)); }

Vec gradient_field(const Chart& chart, const Vec& x) {
  MetricJet m = metric_from_potential(chart, x, 3);
  std::vector<double> p(x.data(), x.data() + x.size());
  ScalarJet t = scalar_jet(chart.tau(jet_seed(p, 1)));
  return m.g.ldlt().solve(t.grad);
}

Mat covariant_derivative(const Chart& chart, const JetFieldFn& w, const Vec& x) {
  MetricJet m = metric_from_potential(chart, x, 3);
  Christoffel G = christoffel(m);
  std::vector<double> p(x.data(), x.data() + x.size());
  return covariant_field(field_jet(w(jet_seed(p, 1))), G).first;
}

double KahlerResiduals::worst() const {
  double r = std::max({nabla_j, d_omega, symmetry, j_invariance});
  if (!(min_eigen > 0.0)) r = std::max(r, 1.0 + std::fabs(min_eigen));
  return r;
}

KahlerResiduals kahler_residuals(const MetricJet& m, const Mat& J) {
  KahlerResiduals k;
  const int N = m.dim;
  Christoffel G = christoffel(m);
  for (int a = 0; a < N; ++a) {
    Mat Ga = G.along(Mat::Identity(N, N).col(a));
    k.nabla_j = std::max(k.nabla_j, max_abs(Ga * J - J * Ga));
  }
  // omega(X, Y) = g(JX, Y) has matrix J^T g.
  std::vector<Mat> dO(N);
  for (int c = 0; c < N; ++c) dO[c] = J.transpose() * m.dg[c];
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b)
      for (int c = 0; c < N; ++c)
        k.d_omega = std::max(k.d_omega, std::fabs(dO[a](b, c) + dO[b](c, a) + dO[c](a, b)));
  k.symmetry = max_abs(m.g - m.g.transpose());
  k.j_invariance = max_abs(J.transpose() * m.g * J - m.g);
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m.g + m.g.transpose()), Eigen::EigenvaluesOnly);
  k.min_eigen = es.eigenvalues().minCoeff();
  return k;
}

CheckReport check_kahler(const std::vector<MetricJet>& metrics, const Mat& J, double tol) {
  CheckReport r = make_report("kahler", "closed, J-parallel, symmetric positive-definite Kahler form", tol);
  for (const MetricJet& m : metrics) r.add(kahler_residuals(m, J).worst());
  return r.finish();
}

CheckReport check_kahler(const Chart& chart, const std::vector<Vec>& points, double tol) {
  std::vector<MetricJet> ms;
  for (const Vec& x : points) ms.push_back(metric_from_potential(chart, x, 3));
  return check_kahler(ms, standard_j(chart.complex_dim()), tol);
}

CheckReport check_holomorphic(const std::vector<Mat>& nabla_w, const Mat& J, double tol) {
  CheckReport r = make_report("holomorphic", "a field is holomorphic iff its covariant derivative commutes with J", tol);
  for (const Mat& B : nabla_w) r.add(max_abs(B * J - J * B));
  return r.finish();
}

CheckReport check_killing(const std::vector<Mat>& g, const std::vector<Mat>& nabla_w, double tol) {
  CheckReport r = make_report("killing", "Killing condition: nabla u is g-skew", tol);
  for (size_t i = 0; i < g.size(); ++i) {
    Mat M = g[i] * nabla_w[i];
    r.add(max_abs(M + M.transpose()));
  }
  return r.finish();
}

GeodesicGradientResiduals geodesic_gradient_residuals(const PointGeometry& P) {
  GeodesicGradientResiduals r;
  if (P.Q > 0.0) r.geodesic = gnorm(P, P.S * P.v - P.psi * P.v) / P.Q;
  const double t2 = P.dtau.squaredNorm();
  if (t2 > 0.0) {
    Mat W = P.dQ * P.dtau.transpose();
    r.wedge = max_abs(W - W.transpose()) / t2;
  }
  return r;
}

CheckReport check_geodesic_gradient(const std::vector<PointGeometry>& points, double tol) {
  CheckReport r = make_report("geodesic_gradient", "nabla_v v = psi v and Q is locally a function of tau", tol);
  for (const PointGeometry& P : points) {
    GeodesicGradientResiduals g = geodesic_gradient_residuals(P);
    r.add(std::max(g.geodesic, g.wedge));
  }
  return r.finish();
}

std::vector<PointGeometry> sample_geometry(const Triple& t, int samples, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<PointGeometry> out;
  for (int i = 0; i < samples; ++i) {
    ChartPoint cp = t.sample(rng);
    out.push_back(evaluate_point(*cp.chart, cp.x));
  }
  return out;
}

std::vector<CheckReport> predicate_suite(const Triple& t, int samples, uint64_t seed, double tol) {
  std::vector<PointGeometry> pts = sample_geometry(t, samples, seed);
  std::vector<MetricJet> ms;
  std::vector<Mat> gs, dv, du;
  for (const PointGeometry& P : pts) {
    ms.push_back(P.m);
    gs.push_back(P.m.g);
    dv.push_back(P.S);
    du.push_back(P.Agen);
  }
  const Mat J = pts.front().J;
  std::vector<CheckReport> out;
  out.push_back(check_kahler(ms, J, tol));
  CheckReport hv = check_holomorphic(dv, J, tol);
  hv.id = "holomorphic_v";
  hv.anchor = "v is both geodesic and real-holomorphic";
  out.push_back(hv);
  CheckReport hu = check_holomorphic(du, J, tol);
  hu.id = "holomorphic_u";
  hu.anchor = "Jv is holomorphic whenever v is";
  out.push_back(hu);
  CheckReport ku = check_killing(gs, du, tol);
  ku.id = "killing_u";
  ku.anchor = "u = Jv is a Killing field";
  out.push_back(ku);
  out.push_back(check_geodesic_gradient(pts, tol));
  for (CheckReport& r : out) r.seed = seed;
  return out;
}

Vec projected_section_derivative(const PointGeometry& P, const Vec& w0, const Vec& X) {
  const Vec Gw0 = P.G.along(X) * w0;
  const double Q = P.Q;
  const double a = P.inner(w0, P.v) / Q, b = P.inner(w0, P.u) / Q;
  const double dQX = P.dQ.dot(X);
  const Vec SX = P.S * X, AX = P.A * X;
  const double Xa = (P.inner(Gw0, P.v) + P.inner(w0, SX)) / Q - a * dQX / Q;
  const double Xb = (P.inner(Gw0, P.u) + P.inner(w0, AX)) / Q - b * dQX / Q;
  return Gw0 - Xa * P.v - a * SX - Xb * P.u - b * AX;
}

std::vector<NamedResidual> local_identity_residuals(const FieldContext& F, const Profile& p, const Vec& w0,
                                                    const Vec& w20, const Vec& X) {
  const PointGeometry& P = F.P;
  const Mat& J = P.J;
  const Mat& g = P.m.g;
  const Vec& v = P.v;
  // Independent Killing generator and its derivatives from the chart.
  const Vec& u = P.ugen;
  const Mat& A = P.Agen;
  const double Q = P.Q, psi = P.psi;
  const Vec w = unit_perp(F, w0), w2 = unit_perp(F, w20);
  std::vector<NamedResidual> out;

  const QDerivs qd = p.Q->eval(P.tau);
  out.push_back({"field_norms", std::max({std::fabs(P.inner(u, u) - Q), std::fabs(P.inner(v, v) - Q), std::fabs(Q - qd[0])})});
  out.push_back({"holomorphic_fields", std::max({max_abs(A - J * P.S), max_abs(J * P.S - P.S * J), gnorm(P, u - J * v)})});
  {
    Mat M = g * A;
    double r = std::max({max_abs(M + M.transpose()), gnorm(P, P.S * u - A * v), std::fabs(P.inner(u, v))});
    out.push_back({"killing_commuting", r});
  }
  {
    Mat dA = PointGeometry::along(P.dAgen, w);
    Mat dS = PointGeometry::along(P.dS, w);
    Mat R = P.R.op(u, w);
    Mat RX = P.R.op(u, X);
    out.push_back({"derivative_curvature", std::max({max_abs(dA - R), max_abs(dS + J * R),
                                            max_abs(PointGeometry::along(P.dAgen, X) - RX),
                                            max_abs(PointGeometry::along(P.dS, X) + J * RX)})});
  }
  {
    Mat gS = g * P.S, gJ = g * J, gA = g * A;
    out.push_back({"adjointness", std::max({max_abs(gS - gS.transpose()), max_abs(gJ + gJ.transpose()),
                                          max_abs(gA + gA.transpose())})});
  }
  {
    // Sections w, w2 obtained by projecting constant vectors onto V-perp.
    const double na = gnorm(P, F.perp_projector() * w0), nb = gnorm(P, F.perp_projector() * w20);
    const Vec a0 = na > 1e-12 ? Vec(w0 / na) : Vec(Vec::Zero(w0.size()));
    const Vec b0 = nb > 1e-12 ? Vec(w20 / nb) : Vec(Vec::Zero(w20.size()));
    Vec bracket = projected_section_derivative(P, b0, w) - projected_section_derivative(P, a0, w2);
    out.push_back({"bracket_u_component", std::fabs(P.inner(bracket, u) + 2.0 * P.inner(A * w, w2))});
    // Brackets of v and u with a V-perp section stay in V-perp.
    Vec bv = projected_section_derivative(P, a0, v) - P.S * w;
    Vec bu = projected_section_derivative(P, a0, u) - A * w;
    const double scale = std::sqrt(Q);
    double hflow = std::max({std::fabs(P.inner(bv, v)), std::fabs(P.inner(bv, u)), std::fabs(P.inner(bu, v)),
                             std::fabs(P.inner(bu, u))}) /
                   scale;
    const Mat Pi = F.perp_projector();
    const Mat PV = Mat::Identity(g.rows(), g.cols()) - Pi;
    double hinv = std::max({max_abs(Pi * J * PV), max_abs(Pi * P.S * PV), max_abs(Pi * A * PV),
                            max_abs(PV * J * Pi), max_abs(PV * P.S * Pi), max_abs(PV * A * Pi)});
    out.push_back({"splitting_invariance", std::max(hflow, hinv)});
  }
  {
    const Vec Au = A * u;
    double r = std::max({gnorm(P, P.S * v - psi * v), gnorm(P, Au + psi * v), gnorm(P, P.S * u - psi * u),
                         gnorm(P, A * v - psi * u)});
    out.push_back({"flow_derivatives", r});
  }
  out.push_back({"profile_function", std::max((P.dQ - 2.0 * psi * P.dtau).cwiseAbs().maxCoeff(), std::fabs(2.0 * psi - qd[1]))});
  out.push_back({"q_derivatives", std::max({std::fabs(P.dQ.dot(v) - 2.0 * psi * Q), std::fabs(P.dQ.dot(u)),
                                      std::fabs(P.dtau.dot(u))})});
  {
    Vec lhs = PointGeometry::along(P.dS, v) * w;
    Vec rhs = 2.0 * (psi * P.S * w - P.S * P.S * w);
    out.push_back({"s_transport", gnorm(P, lhs - rhs)});
  }
  {
    Vec r1 = P.R.apply(w, u, u), r2 = P.R.apply(w, v, v), r3 = psi * P.S * w - P.S * P.S * w;
    Vec r4 = 0.5 * P.R.apply(v, u, J * w);
    out.push_back({"jacobi_curvature", std::max({gnorm(P, r1 - r3), gnorm(P, r2 - r3), gnorm(P, r4 - r3)})});
  }
  if (F.Vperp.cols() == 0) {
    out.push_back({"jacobi_bound", 0.0});
  } else {
    Mat B = F.Vperp;
    Mat Ms = B.transpose() * g * P.S * B;
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (Ms + Ms.transpose()), Eigen::EigenvaluesOnly);
    const double lo = Q / (P.tau - p.tau_plus), hi = Q / (P.tau - p.tau_minus);
    double viol = 0.0;
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
      const double l2 = 2.0 * es.eigenvalues()(i);
      viol = std::max({viol, lo - l2, l2 - hi});
    }
    out.push_back({"jacobi_bound", viol});
  }
  return out;
}

std::pair<double, double> transport_law_residuals(const Chart& chart, const Vec& x, const Vec& w0, const Vec& w20,
                                                  double h) {
  FieldContext F = field_context(chart, x);
  const Vec w = unit_perp(F, w0), w2 = unit_perp(F, w20);
  const int N = static_cast<int>(x.size());
  // One RK4 step of the flow of v coupled with its linearization, which
  // pushes w and w2 forward into sections commuting with v.
  auto step = [&](double dt) {
    auto rhs = [&](const Mat& Y) {
      PointGeometry P = evaluate_point(chart, Y.col(0));
      Mat D(N, 3);
      D.col(0) = P.v;
      Mat Jv = coordinate_jacobian(P);
      D.col(1) = Jv * Y.col(1);
      D.col(2) = Jv * Y.col(2);
      return D;
    };
    Mat Y(N, 3);
    Y << x, w, w2;
    Mat k1 = rhs(Y), k2 = rhs(Y + 0.5 * dt * k1), k3 = rhs(Y + 0.5 * dt * k2), k4 = rhs(Y + dt * k3);
    return Mat(Y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
  };
  Mat Yp = step(h), Ym = step(-h);
  PointGeometry Pp = evaluate_point(chart, Yp.col(0)), Pm = evaluate_point(chart, Ym.col(0));
  const PointGeometry& P = F.P;
  const double dg = (Pp.inner(Yp.col(1), Yp.col(2)) - Pm.inner(Ym.col(1), Ym.col(2))) / (2.0 * h);
  const double target = 2.0 * P.inner(P.S * w, w2);
  const double r1 = std::fabs(dg - target) / (1.0 + std::fabs(target));
  auto ratio = [](const PointGeometry& G, const Vec& a, const Vec& b) { return G.inner(G.S * a, b) / G.Q; };
  const double f0 = ratio(P, w, w2);
  const double df = (ratio(Pp, Yp.col(1), Yp.col(2)) - ratio(Pm, Ym.col(1), Ym.col(2))) / (2.0 * h);
  const double r2 = std::fabs(df) / (1.0 + std::fabs(f0));
  return {r1, r2};
}

namespace {

struct IdentityInfo {
  const char* id;
  const char* anchor;
};

const IdentityInfo kIdentities[] = {
    {"field_norms", "|v| = |u| = Q^(1/2) with Q given by the profile"},
    {"holomorphic_fields", "v, u holomorphic and A = JS = SJ"},
    {"killing_commuting", "u = Jv is a Killing field commuting with v and orthogonal to v"},
    {"derivative_curvature", "nabla_X A = R(u, X) and nabla_X S = -J R(u, X)"},
    {"adjointness", "S is self-adjoint, J and A are skew-adjoint"},
    {"bracket_u_component", "g([w, w'], u) = -2 g(Aw, w') for sections of V-perp"},
    {"flow_derivatives", "nabla_v v = psi v = -nabla_u u and nabla_u v = nabla_v u = psi u"},
    {"profile_function", "Q is locally a function of tau and 2 psi = dQ/dtau"},
    {"splitting_invariance", "J, S, A and the flows of u and v leave V and V-perp invariant"},
    {"q_derivatives", "d_v Q = 2 psi Q and d_u Q = d_u tau = 0"},
    {"s_transport", "[nabla_v S] w = 2(psi - S) S w on V-perp"},
    {"jacobi_curvature", "R(w,u)u = R(w,v)v = (psi - S)Sw = R(v,u)Jw/2 on V-perp"},
    {"jacobi_bound", "Q/(tau - tau_+) <= 2S <= Q/(tau - tau_-) on V-perp"},
};

}  // namespace

std::vector<CheckReport> local_identity_suite(const Triple& t, int samples, uint64_t seed, double tol) {
  std::vector<CheckReport> reps;
  for (const IdentityInfo& info : kIdentities) reps.push_back(make_report(std::string("local_") + info.id, info.anchor, tol));
  CheckReport dvg = make_report("local_transport_metric", "d_v g(w, w') = 2 g(Sw, w') for sections commuting with u and v", tol);
  CheckReport dvs = make_report("local_transport_ratio", "d_v [Q^(-1) g(Sw, w')] = 0 for sections commuting with u and v", tol);
  std::mt19937_64 rng(seed);
  for (int i = 0; i < samples; ++i) {
    ChartPoint cp = t.sample(rng);
    FieldContext F = field_context(*cp.chart, cp.x);
    const int N = static_cast<int>(cp.x.size());
    Vec w0 = random_vec(N, rng), w20 = random_vec(N, rng), X = random_vec(N, rng);
    std::vector<NamedResidual> res = local_identity_residuals(F, t.profile(), w0, w20, X);
    for (const NamedResidual& nr : res)
      for (CheckReport& r : reps)
        if (r.id == "local_" + nr.id) r.add(nr.value);
    if (N > 2) {
      auto [r1, r2] = transport_law_residuals(*cp.chart, cp.x, w0, w20);
      dvg.add(r1);
      dvs.add(r2);
    }
  }
  if (!dvg.residuals.empty()) {
    reps.push_back(dvg);
    reps.push_back(dvs);
  }
  for (CheckReport& r : reps) {
    r.seed = seed;
    r.finish();
  }
  return reps;
}

EigenStructure eigen_structure(const FieldContext& F, const TripleMeta& meta, double tol) {
  const PointGeometry& P = F.P;
  EigenStructure E;
  const Mat& B = F.Vperp;
  const int n = static_cast<int>(B.cols());
  E.h_plus.resize(B.rows(), 0);
  E.h_minus.resize(B.rows(), 0);
  E.h_rest.resize(B.rows(), 0);
  if (n == 0) return E;
  Mat Ms = B.transpose() * P.m.g * P.S * B;
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (Ms + Ms.transpose()));
  std::vector<Vec> plus, minus, rest;
  const double scale = std::max(P.Q, 1e-300);
  for (int i = 0; i < n; ++i) {
    EigenPair ep;
    ep.lambda = es.eigenvalues()(i);
    ep.vec = B * es.eigenvectors().col(i);
    ep.infinite = std::fabs(ep.lambda) <= tol * std::max(1.0, meta.a);
    ep.c = ep.infinite ? std::numeric_limits<double>::infinity() : P.tau - P.Q / (2.0 * ep.lambda);
    const double rp = std::fabs(2.0 * (P.tau - meta.tau_plus) * ep.lambda - P.Q) / scale;
    const double rm = std::fabs(2.0 * (P.tau - meta.tau_minus) * ep.lambda - P.Q) / scale;
    if (rm <= tol) {
      ep.label = EigenLabel::h_plus;
      plus.push_back(ep.vec);
    } else if (rp <= tol) {
      ep.label = EigenLabel::h_minus;
      minus.push_back(ep.vec);
    } else {
      ep.label = EigenLabel::h_rest;
      rest.push_back(ep.vec);
    }
    E.pairs.push_back(ep);
  }
  auto stack = [&](const std::vector<Vec>& cols) {
    Mat M(B.rows(), cols.size());
    for (size_t c = 0; c < cols.size(); ++c) M.col(c) = cols[c];
    return M;
  };
  E.h_plus = stack(plus);
  E.h_minus = stack(minus);
  E.h_rest = stack(rest);
  return E;
}

CheckReport track_c_along_geodesic(const Triple& t, const NormalGeodesic& ng, int nodes, double tol) {
  CheckReport r = make_report("track_c", "eigenvalues of S on V-perp follow lambda_c with c constant along the geodesic", tol);
  const TripleMeta& meta = t.meta();
  FieldContext F0 = field_context(*ng.chart, ng.x0);
  EigenStructure E0 = eigen_structure(F0, meta, 1e-6);
  std::vector<double> tp, tm;
  for (int i = 1; i <= nodes; ++i) {
    const double f = 0.05 + 0.9 * i / (nodes + 1.0);
    tp.push_back(f * ng.t_plus);
    tm.push_back(f * ng.t_minus);
  }
  std::vector<FlowSample> samples = integrate_flow(*ng.chart, ng.x0, ng.e, {}, {}, FieldMode::none, tp);
  std::vector<FlowSample> back = integrate_flow(*ng.chart, ng.x0, ng.e, {}, {}, FieldMode::none, tm);
  samples.insert(samples.end(), back.begin(), back.end());
  for (const FlowSample& s : samples) {
    FieldContext F = field_context(*ng.chart, s.x);
    EigenStructure E = eigen_structure(F, meta, 1e-6);
    double worst = 0.0;
    for (const EigenPair& ep : E.pairs) {
      double best = std::numeric_limits<double>::infinity();
      for (const EigenPair& e0 : E0.pairs) {
        if (e0.infinite) best = std::min(best, std::fabs(ep.lambda));
        else if (!ep.infinite) best = std::min(best, std::fabs(ep.c - e0.c) / (1.0 + std::fabs(e0.c)));
      }
      worst = std::max(worst, best);
    }
    r.add(worst);
  }
  return r.finish();
}

}  // namespace ggk
