#include <cmath>
#include <random>

#include "doctest.h"
#include "ggk/geodesic.hpp"
#include "ggk/triple.hpp"

using namespace ggk;

namespace {

Profile fs() { return fubini_study_profile(0.0, 1.0, 1.0); }
Profile sine() { return Profile{0.0, 1.0, 1.0, make_expr_q("2*sin(pi*t)/pi")}; }

std::shared_ptr<const GrassmannTriple> grass(const std::string& spec, const Profile& p) {
  return std::dynamic_pointer_cast<const GrassmannTriple>(make_triple(spec, p));
}

}  // namespace

TEST_CASE("catalog triples satisfy the profile law and u = Jv") {
  std::mt19937_64 rng(11);
  for (const std::string spec : {"cp:n=2,l=1", "cp:n=3,l=1", "cp:n=4,l=2", "gr:n=4,k=2", "bundle:base=point,kind=trivial",
                                 "bundle:base=cp1,kind=taut", "bundle:base=cp1,kind=trivial,sign=-"}) {
    for (const Profile& p : {fs(), Profile{-1.0, 2.0, 0.5, make_fubini_study_q(-1.0, 2.0, 0.5)}}) {
      TriplePtr t = make_triple(spec, p);
      for (int i = 0; i < 4; ++i) {
        ChartPoint cp = t->sample(rng);
        PointGeometry P = evaluate_point(*cp.chart, cp.x);
        CHECK(P.Q == doctest::Approx((*p.Q)(P.tau)).epsilon(1e-10));
        CHECK((P.J * P.v - P.ugen).norm() < 1e-10);
      }
    }
  }
}

TEST_CASE("modified grassmannian triple follows the target profile") {
  std::mt19937_64 rng(12);
  Profile p = sine();
  auto t = grass("gr:n=4,k=2", p);
  CHECK(t->meta().kind == "modified");
  REQUIRE(t->modification() != nullptr);
  for (int i = 0; i < 4; ++i) {
    ChartPoint cp = t->sample(rng);
    PointGeometry P = evaluate_point(*cp.chart, cp.x);
    CHECK(P.Q == doctest::Approx((*p.Q)(P.tau)).epsilon(1e-8));
    auto gc = std::dynamic_pointer_cast<const GrassChart>(cp.chart);
    CHECK(P.tau == doctest::Approx(t->tau_at(gc->frame(cp.x))).epsilon(1e-12));
  }
}

TEST_CASE("closed-form grassmannian tau agrees with the line integral of g(v, .)") {
  auto t = grass("gr:n=4,k=2", fs());
  std::mt19937_64 rng(13);
  // 16-point Gauss-Legendre on [0, 1].
  Eigen::VectorXd nodes(8), weights(8);
  nodes << 0.0950125098376374, 0.2816035507792589, 0.4580167776572274, 0.6178762444026438, 0.7554044083550030,
      0.8656312023878318, 0.9445750230732326, 0.9894009349916499;
  weights << 0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767, 0.1246289712555339,
      0.0951585116824928, 0.0622535239386479, 0.0271524594117541;
  for (int i = 0; i < 3; ++i) {
    ChartPoint cp = t->sample(rng);
    const Vec x = cp.x * 0.5;
    double integral = 0;
    for (int j = 0; j < 8; ++j)
      for (double sgn : {-1.0, 1.0}) {
        const double s = 0.5 + 0.5 * sgn * nodes(j);
        PointGeometry P = evaluate_point(*cp.chart, s * x);
        integral += 0.5 * weights(j) * P.inner(P.v, x);
      }
    auto gc = std::dynamic_pointer_cast<const GrassChart>(cp.chart);
    const double closed = t->tau_at(gc->frame(x)) - t->tau_at(gc->frame(Vec::Zero(x.size())));
    CHECK(integral == doctest::Approx(closed).epsilon(1e-9));
  }
}

TEST_CASE("grassmannian geodesics match the tangent oracle") {
  auto t = grass("gr:n=4,k=2", fs());
  std::mt19937_64 rng(14);
  CMat y = t->random_point(rng);
  auto ch = t->centered_chart(y);
  std::normal_distribution<double> nd;
  Vec v(8);
  for (int i = 0; i < 8; ++i) v(i) = 0.5 * nd(rng);
  GeodesicPath path = geodesic(*ch, Vec::Zero(8), v, 1.0);
  CVec z = complexify(v);
  CMat V = Eigen::Map<const CMat>(z.data(), 2, 2);
  Eigen::JacobiSVD<CMat> svd(V, Eigen::ComputeFullU | Eigen::ComputeFullV);
  for (double s : {0.3, 0.7, 1.0}) {
    Vec tans = svd.singularValues().unaryExpr([s](double x) { return std::tan(x * s); });
    CMat Z = svd.matrixU() * tans.asDiagonal() * svd.matrixV().adjoint();
    CVec zz = Eigen::Map<const CVec>(Z.data(), 4);
    CHECK((path.at(s).x - realify(zz)).norm() < 1e-7);
  }
}

TEST_CASE("projections, midpoints and the normal geodesic endpoints") {
  std::mt19937_64 rng(15);
  for (const std::string spec : {"cp:n=3,l=1", "cp:n=4,l=2", "gr:n=4,k=2"}) {
    auto t = grass(spec, fs());
    for (int sign : {1, -1}) {
      CMat y = t->random_critical_point(sign, rng);
      CHECK(frame_distance(t->project(sign, y), y) < 1e-12);
      CHECK(t->tau_at(y) == doctest::Approx(sign > 0 ? 1.0 : 0.0));
    }
    CMat Y = t->random_point(rng);
    CMat M = t->geodesic_midpoint(Y);
    CHECK(t->tau_at(M) == doctest::Approx(0.5).epsilon(1e-12));
    // Flow-based projection: follow the normal geodesic to its endpoints.
    NormalGeodesic ng = t->sample_normal_geodesic(rng);
    auto gc = std::dynamic_pointer_cast<const GrassChart>(ng.chart);
    CMat Y0 = gc->frame(ng.x0);
    CMat Yp = gc->frame(geodesic(*ng.chart, ng.x0, ng.e, ng.t_plus).nodes().back().x);
    CMat Ym = gc->frame(geodesic(*ng.chart, ng.x0, -ng.e, -ng.t_minus).nodes().back().x);
    CHECK(frame_distance(Yp, t->project(+1, Y0)) < 1e-6);
    CHECK(frame_distance(Ym, t->project(-1, Y0)) < 1e-6);
  }
  // CP triple: W = C(xi + eta) projects to C xi and C eta.
  auto cp = grass("cp:n=3,l=1", fs());
  CMat W(3, 1);
  W << cplx(0.6, 0.2), cplx(0.3, -0.5), cplx(-0.1, 0.4);
  CMat xi = CMat::Zero(3, 1), eta = W;
  xi(0, 0) = W(0, 0);
  eta(0, 0) = 0;
  CHECK(frame_distance(cp->project(+1, W), xi.normalized()) < 1e-12);
  CHECK(frame_distance(cp->project(-1, W), eta.normalized()) < 1e-12);
  // |xi| = |eta| gives the midpoint value of tau.
  CMat E(3, 1);
  E << 1.0, cplx(0, 1) / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  CHECK(cp->tau_at(E.normalized()) == doctest::Approx(0.5));
}

TEST_CASE("phi map: tau, projection and round trip") {
  std::mt19937_64 rng(16);
  std::normal_distribution<double> nd;
  for (const Profile& p : {fs(), sine()})
    for (const std::string spec : {"cp:n=3,l=1", "gr:n=4,k=2"}) {
      auto t = grass(spec, p);
      for (int sign : {1, -1}) {
        CMat y = t->random_critical_point(sign, rng);
        CriticalFrame cf = t->critical_frame(sign, y);
        CHECK(cf.T.cols() == 2 * (sign > 0 ? t->meta().d_plus : t->meta().d_minus));
        Vec c(cf.N.cols());
        for (int i = 0; i < c.size(); ++i) c(i) = nd(rng);
        Vec xi = cf.N * c;
        const double rho = 0.6;
        xi *= rho / std::sqrt(xi.dot(cf.P.m.g * xi));
        CMat X = t->phi_map(sign, y, xi);
        CHECK(t->tau_at(X) == doctest::Approx(t->solution(sign).tau_of_rho(rho)).epsilon(1e-8));
        CHECK(frame_distance(t->project(sign, X), y) < 1e-10);
        auto [y2, xi2] = t->phi_inverse(sign, X);
        Vec back = t->centered_chart(y2)->transfer(*cf.chart, Vec::Zero(xi.size()), xi2);
        CHECK(frame_distance(y2, y) < 1e-10);
        CHECK((back - xi).norm() < 1e-8);
      }
    }
}

TEST_CASE("symmetric profile midpoint on the cp1 triple") {
  auto t = grass("cp:n=2,l=1", fs());
  std::mt19937_64 rng(17);
  CMat y = t->random_critical_point(+1, rng);
  CriticalFrame cf = t->critical_frame(+1, y);
  const ProfileSolution& sol = t->solution(+1);
  // rho with sigma(rho) = delta/2.
  const double rho = sol.rho(sol.tau_of_sigma(sol.delta() / 2));
  Vec xi = cf.N.col(0) * rho;
  CHECK(t->tau_at(t->phi_map(+1, y, xi)) == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("catalog metadata") {
  auto m = catalog_meta(parse_spec("gr:n=4,k=2"), fs());
  CHECK(m.m == 4);
  CHECK(m.d_plus == 2);
  CHECK(m.d_minus == 2);
  CHECK(m.q == 1);
  m = catalog_meta(parse_spec("cp:n=3,l=1"), fs());
  CHECK(m.m == 2);
  CHECK(m.d_plus == 0);
  CHECK(m.d_minus == 1);
  CHECK(m.q == 0);
  CHECK(m.d_plus + m.d_minus == m.m - 1 + m.q);
  auto a = catalog_meta(parse_spec("gr:n=3,k=1"), fs());
  auto b = catalog_meta(parse_spec("cp:n=3,l=1"), fs());
  CHECK(a.m == b.m);
  CHECK(a.d_plus == b.d_plus);
  CHECK(a.d_minus == b.d_minus);
  CHECK(a.q == b.q);
  for (const std::string& e : catalog_entries()) {
    TripleMeta t = catalog_meta(parse_spec(e), fs());
    CHECK(t.m >= 1);
  }
}

TEST_CASE("spec strings") {
  CHECK(parse_spec("cp:n=3,l=1").n == 3);
  CHECK(parse_spec("bundle:base=cp1,kind=taut").fibre == "taut");
  CHECK(parse_spec("bundle:base=cp1,kind=taut,sign=-").sign == -1);
  for (const char* bad : {"cp:n=1", "cp:n=3,l=3", "cp:n=3,l=0", "gr:n=4", "gr:n=4,k=4", "gr:n=7,k=2", "cp", "cp:",
                          "cp:n=3,,l=1", "cp:n=3,n=3", "cp:n=x", "cp:n=3,m=1", "sphere:n=2",
                          "bundle:base=point,kind=taut", "bundle:base=cp2"})
    CHECK_THROWS_AS(parse_spec(bad), TripleError);
}

TEST_CASE("chern connection of the tautological and flat bundles") {
  auto t = std::dynamic_pointer_cast<const BundleTriple>(make_triple("bundle:base=cp1,kind=taut", fs()));
  std::mt19937_64 rng(18);
  std::normal_distribution<double> nd;
  for (int i = 0; i < 5; ++i) {
    Vec z(2);
    z << nd(rng), nd(rng);
    ChernData cd = chern_connection(t->bundle(), z);
    const double r2 = z.squaredNorm();
    // Golden value of the lowered component and of the mixed one.
    CHECK(cd.R[0][0](0, 0).real() == doctest::Approx(1.0 / (1.0 + r2)).epsilon(1e-12));
    CHECK(std::abs(cd.R[0][0](0, 0).imag()) < 1e-14);
    CHECK((cd.R[0][0](0, 0) / cd.gamma(0, 0)).real() == doctest::Approx(1.0 / ((1.0 + r2) * (1.0 + r2))));
    CHECK(cd.connection_residual() < 1e-14);
    CVec xi(1);
    xi << cplx(nd(rng), nd(rng));
    Vec w(2), w2(2);
    w << nd(rng), nd(rng);
    w2 << nd(rng), nd(rng);
    // Skew-Hermitian: (R^D xi, xi) is imaginary.
    CHECK(std::abs(cd.rd_pair(w, w2, xi, xi).real()) < 1e-13);
    // J-invariance of R^D.
    Mat J = standard_j(1);
    CHECK(std::abs(cd.rd_form(J * w, J * w2, xi) - cd.rd_form(w, w2, xi)) < 1e-13);
  }
  auto flat = std::dynamic_pointer_cast<const BundleTriple>(make_triple("bundle:base=cp1,kind=trivial,rank=2", fs()));
  Vec z(2);
  z << 0.3, -0.8;
  ChernData cd = chern_connection(flat->bundle(), z);
  CHECK(cd.Omega[0].norm() == 0.0);
  CHECK(cd.R[0][0].norm() == 0.0);
}

TEST_CASE("bundle horizontal block and the pullback of i dd-bar rho^2") {
  std::mt19937_64 rng(19);
  std::normal_distribution<double> nd;
  auto t = std::dynamic_pointer_cast<const BundleTriple>(make_triple("bundle:base=cp1,kind=taut", fs()));
  Mat J1 = standard_j(1), J2 = standard_j(2);
  for (int i = 0; i < 5; ++i) {
    ChartPoint cp = t->sample(rng);
    PointGeometry P = evaluate_point(*cp.chart, cp.x);
    MetricJet n2 = metric_from_potential(*t->norm_chart(), cp.x, 3);
    MetricJet h = metric_from_potential(*t->base_chart(), t->base_part(cp.x), 3);
    ChernData cd = chern_connection(t->bundle(), t->base_part(cp.x));
    Vec w(2), w2(2);
    w << nd(rng), nd(rng);
    w2 << nd(rng), nd(rng);
    Vec a = t->horizontal_lift(cp.x, w), b = t->horizontal_lift(cp.x, w2);
    const CVec xi = t->fibre_part(cp.x);
    const double fp = t->solution().fprime_formula(P.tau);
    CHECK(P.inner(a, b) == doctest::Approx(w.dot(h.g * w2) - fp * cd.rd_form(w, J1 * w2, xi)).epsilon(1e-9));
    CHECK((J2 * a).dot(n2.g * b) == doctest::Approx(-cd.rd_form(w, w2, xi)).epsilon(1e-9));
    // Horizontal lifts are orthogonal to the fibre.
    Vec vert(4);
    vert << 0, 0, nd(rng), nd(rng);
    CHECK(std::fabs(P.inner(a, vert)) < 1e-10);
  }
}

TEST_CASE("bundle positivity guard") {
  CHECK_THROWS_AS(BundleTriple(BundleTriple::Base::cp1, BundleTriple::Fibre::trivial, 1, fs(), +1, 0.0), TripleError);
  std::mt19937_64 rng(21);
  for (int sign : {1, -1})
    for (double scale : {0.05, 2.0}) {
      BundleTriple t(BundleTriple::Base::cp1, BundleTriple::Fibre::taut, 1, fs(), sign, scale);
      CHECK(t.positivity_margin(rng, 32) > 0);
    }
}

TEST_CASE("flag chains") {
  std::mt19937_64 rng(20);
  Flag f = random_flag(4, 2, rng);
  CHECK(is_flag(f));
  CHECK(flag_chain(f, f).size() == 1);
  Flag g{f.W, f.W * random_unitary(2, rng).leftCols(1)};
  CHECK(flag_chain(f, g).size() == 2);
  for (int i = 0; i < 50; ++i) {
    Flag a = random_flag(4, 2, rng), b = random_flag(4, 2, rng);
    auto chain = flag_chain(a, b);
    CHECK(chain.size() <= static_cast<size_t>(2 * 2 * 4));
    CHECK(frame_distance(chain.front().W, a.W) < 1e-12);
    CHECK(frame_distance(chain.back().Wp, b.Wp) < 1e-12);
    int prev = intersection_dim(a.W, b.W);
    for (size_t j = 1; j < chain.size(); ++j) {
      CHECK(is_flag(chain[j], 1e-9));
      CHECK(flags_adjacent(chain[j - 1], chain[j]));
      if (j % 2 == 0 && j + 1 < chain.size()) {
        int d = intersection_dim(chain[j].W, b.W);
        CHECK(d > prev);
        prev = d;
      }
    }
  }
  Flag bad{f.W, CMat::Random(4, 1)};
  CHECK_THROWS_AS(flag_chain(bad, f), TripleError);
}
