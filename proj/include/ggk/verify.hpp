#pragma once

// Predicates deciding whether (g, J, tau) is a geodesic-gradient Kahler
// triple, pointwise local identities of such triples, and the eigenvalue
// structure of S = nabla v on the orthogonal complement of Span(v, u).

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ggk/chart.hpp"
#include "ggk/geodesic.hpp"
#include "ggk/profile.hpp"
#include "ggk/report.hpp"
#include "ggk/riemann.hpp"
#include "ggk/triple.hpp"

namespace ggk {

// Fields at one point of M' with the splitting V = Span(v, u) and V-perp.
struct FieldContext {
  PointGeometry P;
  Mat Vbasis;  // columns v, u
  Mat Vperp;   // g-orthonormal basis of V-perp
  // g-orthogonal projection onto V-perp.
  Mat perp_projector() const;
};
FieldContext field_context(const Chart& chart, const Vec& x);
FieldContext field_context(PointGeometry P);

// Gradient of tau from low-order jets (no curvature), for flows of v.
Vec gradient_field(const Chart& chart, const Vec& x);
// Covariant derivative matrix nabla w of a chart vector field.
Mat covariant_derivative(const Chart& chart, const JetFieldFn& w, const Vec& x);

struct KahlerResiduals {
  double nabla_j = 0.0;       // max |nabla J|
  double d_omega = 0.0;       // max |d omega|
  double symmetry = 0.0;      // |g - g^T|
  double j_invariance = 0.0;  // |J^T g J - g|
  double min_eigen = 0.0;     // smallest eigenvalue of g
  double worst() const;
};
KahlerResiduals kahler_residuals(const MetricJet& m, const Mat& J);

CheckReport check_kahler(const std::vector<MetricJet>& metrics, const Mat& J, double tol = 1e-10);
CheckReport check_kahler(const Chart& chart, const std::vector<Vec>& points, double tol = 1e-10);
// |[nabla w, J]| for each covariant derivative matrix.
CheckReport check_holomorphic(const std::vector<Mat>& nabla_w, const Mat& J, double tol = 1e-8);
// |g nabla w + (g nabla w)^T| for each (g, nabla w) pair.
CheckReport check_killing(const std::vector<Mat>& g, const std::vector<Mat>& nabla_w, double tol = 1e-8);

struct GeodesicGradientResiduals {
  double geodesic = 0.0;  // |nabla_v v - psi v| / Q
  double wedge = 0.0;     // |dQ ^ dtau| / |dtau|^2
};
GeodesicGradientResiduals geodesic_gradient_residuals(const PointGeometry& P);
CheckReport check_geodesic_gradient(const std::vector<PointGeometry>& points, double tol = 1e-7);

// Samples of M' of a triple (Q >= 1e-6) with the geometry evaluated.
std::vector<PointGeometry> sample_geometry(const Triple& t, int samples, uint64_t seed);

// The four predicate checks (Kahler, v holomorphic, u Killing, geodesic
// gradient) on seeded samples of a triple.
std::vector<CheckReport> predicate_suite(const Triple& t, int samples, uint64_t seed, double tol = 1e-6);

// Covariant derivative nabla_X w of the section w = (g-projection of the
// constant coordinate vector w0 onto V-perp) at the point of P.
Vec projected_section_derivative(const PointGeometry& P, const Vec& w0, const Vec& X);

// Named residuals of the local identities at one point, with unit vectors
// w, w2 of V-perp and an arbitrary vector X.
struct NamedResidual {
  std::string id;
  double value;
};
std::vector<NamedResidual> local_identity_residuals(const FieldContext& F, const Profile& p, const Vec& w0,
                                                    const Vec& w20, const Vec& X);
// Transport laws of V-perp sections commuting with v, checked by finite
// differences along the flow of v: relative residuals of
// d_v g(w, w') = 2 g(Sw, w') and d_v [g(Sw, w')/Q] = 0.
std::pair<double, double> transport_law_residuals(const Chart& chart, const Vec& x, const Vec& w0, const Vec& w20,
                                                  double h = 1e-4);
// One report per local identity over seeded samples.
std::vector<CheckReport> local_identity_suite(const Triple& t, int samples, uint64_t seed, double tol = 1e-6);

// Eigenvalues of S on V-perp with their constants c = tau - Q/(2 lambda).
enum class EigenLabel { h_plus, h_minus, h_rest };
struct EigenPair {
  double lambda = 0.0;
  double c = 0.0;          // +inf when lambda = 0
  bool infinite = false;
  EigenLabel label = EigenLabel::h_rest;
  Vec vec;                 // g-unit eigenvector
};
struct EigenStructure {
  std::vector<EigenPair> pairs;  // ascending in lambda
  Mat h_plus, h_minus, h_rest;   // g-orthonormal bases
  int dim_plus() const { return static_cast<int>(h_plus.cols() / 2); }
  int dim_minus() const { return static_cast<int>(h_minus.cols() / 2); }
  int dim_rest() const { return static_cast<int>(h_rest.cols() / 2); }
};
// Labels: H^-/+ = V-perp ^ Ker[2(tau - tau_+/-) S - Q]; relative threshold tol.
EigenStructure eigen_structure(const FieldContext& F, const TripleMeta& meta, double tol = 1e-6);

// Maximum drift of the constants c along a normal geodesic sampled at the
// given number of interior times.  Zero eigenvalues are tracked as |lambda|.
CheckReport track_c_along_geodesic(const Triple& t, const NormalGeodesic& ng, int nodes, double tol = 1e-5);

}  // namespace ggk
