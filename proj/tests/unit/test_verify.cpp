#include <cmath>
#include <random>

#include "doctest.h"
#include "ggk/verify.hpp"

using namespace ggk;

namespace {

Jet norm2(const std::vector<Jet>& x) {
  Jet r = x[0] * x[0];
  for (size_t i = 1; i < x.size(); ++i) r += x[i] * x[i];
  return r;
}

Vec point(std::initializer_list<double> v) {
  Vec x(static_cast<int>(v.size()));
  int i = 0;
  for (double d : v) x(i++) = d;
  return x;
}

// CP^2 affine chart with tau = (1 + |z2|^2)/(1 + |z|^2): Sigma^+ = {z1 = 0},
// Sigma^- the point at infinity of the z1 axis.
FunctionChart cp2_point_minus() {
  return FunctionChart(
      2, [](const std::vector<Jet>& x) { return log(1.0 + norm2(x)); },
      [](const std::vector<Jet>& x) {
        Jet r2 = x[2] * x[2] + x[3] * x[3];
        return (1.0 + r2) / (1.0 + norm2(x));
      });
}

// Same chart with tau = |z1|^2/(1 + |z|^2): the origin lies on Sigma^-.
FunctionChart cp2_line_minus() {
  return FunctionChart(
      2, [](const std::vector<Jet>& x) { return log(1.0 + norm2(x)); },
      [](const std::vector<Jet>& x) { return (x[0] * x[0] + x[1] * x[1]) / (1.0 + norm2(x)); });
}

TripleMeta unit_meta() {
  TripleMeta m;
  m.m = 2;
  return m;
}

}  // namespace

TEST_CASE("kahler check: flat passes, perturbations fail") {
  FunctionChart flat(2, norm2);
  std::vector<Vec> pts = {point({0.1, 0.2, -0.3, 0.4}), point({1.0, -2.0, 0.5, 0.0})};
  CHECK(check_kahler(flat, pts).pass);
  KahlerResiduals k0 = kahler_residuals(metric_from_potential(flat, pts[0], 3), standard_j(2));
  CHECK(k0.worst() < 1e-14);

  const double eps = 1e-3;
  MetricJet m = metric_from_potential(flat, pts[0], 3);
  m.g(0, 0) += eps;
  KahlerResiduals k1 = kahler_residuals(m, standard_j(2));
  CHECK(k1.j_invariance > 1e-4);
  CHECK_FALSE(check_kahler({m}, standard_j(2)).pass);

  MetricJet m2 = metric_from_potential(flat, pts[0], 3);
  m2.dg[2](0, 0) += eps;
  KahlerResiduals k2 = kahler_residuals(m2, standard_j(2));
  CHECK(k2.nabla_j > 1e-4);
  CHECK(k2.d_omega > 1e-4);
  CHECK_FALSE(check_kahler({m2}, standard_j(2)).pass);

  MetricJet m3 = metric_from_potential(flat, pts[0], 3);
  m3.g = -m3.g;
  CHECK_FALSE(check_kahler({m3}, standard_j(2)).pass);
}

TEST_CASE("holomorphic and killing checks on model fields") {
  FunctionChart flat(1, norm2);
  const Vec x = point({0.3, -0.7});
  const Mat J = standard_j(1);
  auto conj = [](const std::vector<Jet>& p) { return std::vector<Jet>{p[0], -1.0 * p[1]}; };
  auto lin = [](const std::vector<Jet>& p) { return std::vector<Jet>{2.0 * p[0] - p[1], p[0] + 2.0 * p[1]}; };
  auto zero = [](const std::vector<Jet>& p) { return std::vector<Jet>{0.0 * p[0], 0.0 * p[1]}; };
  auto rot = [](const std::vector<Jet>& p) { return std::vector<Jet>{-1.0 * p[1], p[0]}; };
  Mat Bc = covariant_derivative(flat, conj, x);
  Mat Bl = covariant_derivative(flat, lin, x);
  Mat B0 = covariant_derivative(flat, zero, x);
  Mat Br = covariant_derivative(flat, rot, x);
  CHECK_FALSE(check_holomorphic({Bc}, J).pass);
  CHECK(check_holomorphic({Bl}, J).pass);
  CHECK(check_holomorphic({B0}, J).pass);
  const Mat g = 2.0 * Mat::Identity(2, 2);
  CHECK(check_killing({g}, {B0}).pass);
  CHECK(check_killing({g}, {Br}).pass);
  CHECK_FALSE(check_killing({g}, {Bl}).pass);

  // On a catalog triple u is Killing while v is not.
  TriplePtr t = make_triple("cp:n=3,l=1", fubini_study_profile(0.0, 1.0, 1.0));
  std::vector<PointGeometry> pts = sample_geometry(*t, 10, 5);
  std::vector<Mat> gs, S;
  for (const PointGeometry& P : pts) {
    gs.push_back(P.m.g);
    S.push_back(P.S);
  }
  CHECK_FALSE(check_killing(gs, S).pass);
}

TEST_CASE("geodesic-gradient check on model functions") {
  // Re(z) on flat C: v is constant, so both residuals vanish.
  FunctionChart flat(1, norm2, [](const std::vector<Jet>& x) { return x[0]; });
  PointGeometry P = evaluate_point(flat, point({0.4, 1.1}));
  GeodesicGradientResiduals r = geodesic_gradient_residuals(P);
  CHECK(r.geodesic < 1e-14);
  CHECK(r.wedge < 1e-14);

  // tau^3 on CP^1 is still a geodesic gradient but v is not holomorphic.
  FunctionChart cube(
      1, [](const std::vector<Jet>& x) { return log(1.0 + norm2(x)); },
      [](const std::vector<Jet>& x) {
        Jet s = norm2(x) / (1.0 + norm2(x));
        return s * s * s;
      });
  std::vector<PointGeometry> pts;
  std::vector<Mat> dv;
  for (const Vec& x : {point({0.3, 0.2}), point({-0.8, 0.5}), point({1.2, -0.4})}) {
    pts.push_back(evaluate_point(cube, x));
    dv.push_back(pts.back().S);
  }
  CHECK(check_geodesic_gradient(pts).pass);
  CHECK_FALSE(check_holomorphic(dv, standard_j(1)).pass);

  // A non-radial function on flat C^2 fails the wedge condition.
  FunctionChart skew(2, norm2, [](const std::vector<Jet>& x) { return x[0] * x[0] + x[2]; });
  CHECK_FALSE(check_geodesic_gradient({evaluate_point(skew, point({0.5, 0.1, 0.2, 0.3}))}).pass);
}

TEST_CASE("predicate and local identity suites pass on catalog triples") {
  for (const std::string spec : {"cp:n=2,l=1", "cp:n=3,l=1", "gr:n=4,k=2", "bundle:base=cp1,kind=taut"}) {
    TriplePtr t = make_triple(spec, fubini_study_profile(0.0, 1.0, 1.0));
    for (const CheckReport& r : predicate_suite(*t, 6, 2)) {
      INFO(spec << " " << r.id << " " << r.max_residual);
      CHECK(r.pass);
    }
    for (const CheckReport& r : local_identity_suite(*t, 4, 2)) {
      INFO(spec << " " << r.id << " " << r.max_residual);
      CHECK(r.pass);
      CHECK(r.residuals.size() == 4);
    }
  }
}

TEST_CASE("local identities fail for a non-gradient-geodesic function") {
  FunctionChart bad(
      2, [](const std::vector<Jet>& x) { return log(1.0 + norm2(x)); },
      [](const std::vector<Jet>& x) { return (x[0] * x[0] + 0.5 * x[2]) / (1.0 + norm2(x)); },
      [](const std::vector<Jet>& x) { return std::vector<Jet>{-1.0 * x[1], x[0], 0.0 * x[2], 0.0 * x[3]}; });
  FieldContext F = field_context(bad, point({0.3, 0.1, -0.2, 0.4}));
  std::vector<NamedResidual> res =
      local_identity_residuals(F, fubini_study_profile(0.0, 1.0, 1.0), point({1, 0, 0, 1}), point({0, 1, 1, 0}),
                               point({0.2, 0.3, -0.1, 0.5}));
  double worst = 0.0;
  for (const NamedResidual& r : res) worst = std::max(worst, r.value);
  CHECK(worst > 1e-3);
}

TEST_CASE("CP^2 eigenvalue at tau = 1/2 with Sigma^- a point") {
  FunctionChart c = cp2_point_minus();
  FieldContext F = field_context(c, point({1.0, 0.0, 0.0, 0.0}));
  CHECK(F.P.tau == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(F.P.Q == doctest::Approx(0.5).epsilon(1e-12));
  EigenStructure E = eigen_structure(F, unit_meta());
  REQUIRE(E.pairs.size() == 2);
  for (const EigenPair& ep : E.pairs) {
    CHECK(ep.lambda == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::fabs(ep.c) < 1e-12);
    CHECK(ep.label == EigenLabel::h_plus);
  }
  CHECK(E.dim_plus() == 1);
  CHECK(E.dim_minus() == 0);
  CHECK(E.dim_rest() == 0);
  // Away from tau = 1/2 the same subspace follows lambda = 1 - tau.
  FieldContext G = field_context(c, point({0.3, -0.4, 0.2, 0.1}));
  for (const EigenPair& ep : eigen_structure(G, unit_meta()).pairs)
    CHECK(ep.lambda == doctest::Approx(1.0 - G.P.tau).epsilon(1e-12));
}

TEST_CASE("S has eigenvalue +/-a normal to Sigma^-/+") {
  FunctionChart lo = cp2_line_minus();
  PointGeometry P = evaluate_point(lo, point({0, 0, 0, 0}));
  CHECK(P.Q < 1e-15);
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (P.S + P.S.transpose()));
  CHECK(es.eigenvalues()(0) == doctest::Approx(0.0));
  CHECK(es.eigenvalues()(1) == doctest::Approx(0.0));
  CHECK(es.eigenvalues()(2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(es.eigenvalues()(3) == doctest::Approx(1.0).epsilon(1e-12));

  FunctionChart hi = cp2_point_minus();
  PointGeometry H = evaluate_point(hi, point({0, 0, 0, 0}));
  Eigen::SelfAdjointEigenSolver<Mat> eh(0.5 * (H.S + H.S.transpose()));
  CHECK(eh.eigenvalues()(0) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(eh.eigenvalues()(1) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(std::fabs(eh.eigenvalues()(2)) < 1e-12);
  CHECK(std::fabs(eh.eigenvalues()(3)) < 1e-12);

  // Scaling the profile by a scales the critical eigenvalue.
  TriplePtr t = make_triple("cp:n=2,l=1", fubini_study_profile(0.0, 1.0, 2.5));
  std::mt19937_64 rng(4);
  NormalGeodesic ng = t->sample_normal_geodesic(rng);
  auto end = [&](double t_end) {
    return integrate_flow(*ng.chart, ng.x0, ng.e, {}, {}, FieldMode::none, {t_end}).front().x;
  };
  PointGeometry Pm = evaluate_point(*ng.chart, end(ng.t_minus));
  PointGeometry Pp = evaluate_point(*ng.chart, end(ng.t_plus));
  // S is g-self-adjoint, so its coordinate matrix has a real spectrum.
  Eigen::EigenSolver<Mat> sm(Pm.S), sp(Pp.S);
  CHECK(sm.eigenvalues().real().maxCoeff() == doctest::Approx(2.5).epsilon(1e-6));
  CHECK(sp.eigenvalues().real().minCoeff() == doctest::Approx(-2.5).epsilon(1e-6));
}

TEST_CASE("eigen dimensions match the critical manifold data") {
  for (const std::string spec : {"cp:n=4,l=1", "cp:n=4,l=3", "gr:n=4,k=2", "gr:n=5,k=2", "gr:n=6,k=2"}) {
    for (const Profile& p : {fubini_study_profile(0.0, 1.0, 1.0), Profile{0.0, 1.0, 1.0, make_expr_q("2*sin(pi*t)/pi")}}) {
      TriplePtr t = make_triple(spec, p);
      const TripleMeta& m = t->meta();
      std::mt19937_64 rng(8);
      for (int i = 0; i < 3; ++i) {
        ChartPoint cp = t->sample(rng);
        EigenStructure E = eigen_structure(field_context(*cp.chart, cp.x), m);
        INFO(spec);
        CHECK(E.dim_minus() == m.k_plus);
        CHECK(E.dim_plus() == m.k_minus);
        CHECK(E.dim_rest() == m.q);
        CHECK(m.d_plus + m.d_minus == m.m - 1 + m.q);
      }
    }
  }
}

TEST_CASE("constants c are preserved along normal geodesics") {
  for (const std::string spec : {"cp:n=4,l=2", "gr:n=4,k=2"}) {
    TriplePtr t = make_triple(spec, Profile{0.0, 1.0, 1.0, make_expr_q("2*sin(pi*t)/pi")});
    std::mt19937_64 rng(21);
    NormalGeodesic ng = t->sample_normal_geodesic(rng);
    CheckReport r = track_c_along_geodesic(*t, ng, 6);
    INFO(spec << " " << r.max_residual);
    CHECK(r.pass);
    CHECK(r.max_residual < 1e-5);
  }
}

TEST_CASE("two-sided bound on S over V-perp on Gr(2,4)") {
  TriplePtr t = make_triple("gr:n=4,k=2", fubini_study_profile(0.0, 1.0, 1.0));
  std::mt19937_64 rng(99);
  const TripleMeta& m = t->meta();
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    ChartPoint cp = t->sample(rng);
    FieldContext F = field_context(*cp.chart, cp.x);
    const double lo = F.P.Q / (2.0 * (F.P.tau - m.tau_plus)), hi = F.P.Q / (2.0 * (F.P.tau - m.tau_minus));
    for (const EigenPair& ep : eigen_structure(F, m).pairs) {
      worst = std::max(worst, lo - ep.lambda);
      worst = std::max(worst, ep.lambda - hi);
    }
  }
  CHECK(worst < 1e-10);
}
