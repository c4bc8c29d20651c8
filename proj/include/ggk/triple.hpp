#pragma once

// Catalog of geodesic-gradient Kahler triples: CP and Grassmannian triples
// (optionally with a modified profile), vector-bundle triples over a point or
// CP^1, Hermitian bundle charts with their Chern connection, the normal
// geodesic map Phi, and flag chains.

#include <functional>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ggk/chart.hpp"
#include "ggk/linalg.hpp"
#include "ggk/profile.hpp"
#include "ggk/riemann.hpp"

namespace ggk {

class TripleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TripleMeta {
  std::string kind;  // "cp", "grassmannian", "bundle"; "modified-" prefix for non-FS profiles
  std::string spec;
  bool compact = true;
  int m = 0;
  // Complex dimensions of the critical manifolds; -1 when empty.
  int d_plus = 0, d_minus = 0;
  int k_plus = 0, k_minus = 0;  // m - 1 - d_pm
  int q = 0;                    // d_plus + d_minus - m + 1
  double a = 1.0, tau_minus = 0.0, tau_plus = 1.0;
};

struct ChartPoint {
  ChartPtr chart;
  Vec x;
};

// Unit-speed normal geodesic with xdot = v/|v| through x0 at t = 0.  It
// reaches Sigma^- at t_minus < 0 and Sigma^+ at t_plus > 0 inside the chart.
struct NormalGeodesic {
  ChartPtr chart;
  Vec x0;
  Vec e;
  double t_minus = 0.0, t_plus = 0.0;
};

class Triple {
 public:
  virtual ~Triple() = default;
  const TripleMeta& meta() const { return meta_; }
  const Profile& profile() const { return profile_; }
  // Point of M' (Q >= 1e-6) in some chart.
  virtual ChartPoint sample(std::mt19937_64& rng) const = 0;
  virtual bool has_normal_geodesics() const { return false; }
  virtual NormalGeodesic sample_normal_geodesic(std::mt19937_64& rng) const;

 protected:
  TripleMeta meta_;
  Profile profile_;
};
using TriplePtr = std::shared_ptr<const Triple>;

// Affine chart Z -> span U [I; Z] of Gr_k(C^n), Z of size (n-k) x k with
// complex index i + (n-k) j for entry (i, j).  The subspace L is spanned by
// the first l standard basis vectors.
class GrassmannTriple;
class GrassChart : public Chart {
 public:
  GrassChart(const GrassmannTriple& t, CMat U);
  int complex_dim() const override;
  Jet potential(const std::vector<Jet>& x) const override;
  bool has_tau() const override { return true; }
  Jet tau(const std::vector<Jet>& x) const override;
  bool has_killing() const override { return true; }
  std::vector<Jet> killing(const std::vector<Jet>& x) const override;
  bool in_domain(const Vec& x) const override;

  const CMat& unitary() const { return U_; }
  // Orthonormal frame of the subspace with chart coordinates x.
  CMat frame(const Vec& x) const;
  // Chart coordinates of span(Y); throws when the subspace is off the chart.
  Vec coords(const CMat& Y) const;
  // Pushes the tangent vector dx at x to the chart `to`.
  Vec transfer(const GrassChart& to, const Vec& x, const Vec& dx) const;

 private:
  CMat matrix_of(const Vec& x) const;
  Jet tau_fs(const std::vector<Jet>& x) const;
  int n_, k_, l_;
  double c_, a_, tau_minus_, width_;
  std::shared_ptr<const Modification> mod_;
  CMat U_;
  CMat H_;  // U^* P_L U
};

// Tangent and normal data of a critical manifold at the origin of a chart
// centered at y.  T and N are g-orthonormal bases (columns).
struct CriticalFrame {
  std::shared_ptr<const GrassChart> chart;
  PointGeometry P;
  Mat T, N;
};

class GrassmannTriple : public Triple {
 public:
  // k = 1 gives the CP triple of P(C^n) with dim L = l; otherwise l must be 1.
  GrassmannTriple(int n, int k, int l, Profile profile, std::string spec = "");

  int n() const { return n_; }
  int k() const { return k_; }
  int l() const { return l_; }
  // Factor c in the potential c log det(I + Z^* Z).
  double potential_scale() const { return (profile_.tau_plus - profile_.tau_minus) / profile_.a; }
  const Modification* modification() const { return mod_.get(); }
  const ProfileSolution& solution(int sign) const { return sign > 0 ? *sol_plus_ : *sol_minus_; }

  std::shared_ptr<const GrassChart> chart(const CMat& U) const;
  std::shared_ptr<const GrassChart> centered_chart(const CMat& Y) const;

  // tau of the Fubini-Study triple and of this triple at a frame.
  double tau_fs(const CMat& Y) const;
  double tau_at(const CMat& Y) const;

  CMat random_point(std::mt19937_64& rng) const;
  CMat random_critical_point(int sign, std::mt19937_64& rng) const;
  // Closed-form nearest-point projections onto Sigma^+ and Sigma^-.
  CMat project(int sign, const CMat& Y) const;
  // Point of the normal geodesic through Y where tau_fs is the midpoint value.
  CMat geodesic_midpoint(const CMat& Y) const;
  // Endpoints on Sigma^- and Sigma^+ of the normal geodesic through Y.
  std::pair<CMat, CMat> geodesic_endpoints(const CMat& Y) const;
  CriticalFrame critical_frame(int sign, const CMat& y) const;

  ChartPoint sample(std::mt19937_64& rng) const override;
  bool has_normal_geodesics() const override { return true; }
  NormalGeodesic sample_normal_geodesic(std::mt19937_64& rng) const override;

  // Phi = Exp o Delta for the given sign: y is a frame on Sigma^sign and xi a
  // normal vector at the origin of centered_chart(y).  Requires sigma < delta.
  CMat phi_map(int sign, const CMat& y, const Vec& xi) const;
  // Inverse of phi_map by the closed-form projection and the radial chart ray.
  std::pair<CMat, Vec> phi_inverse(int sign, const CMat& Y) const;

 private:
  friend class GrassChart;
  int n_, k_, l_;
  std::shared_ptr<const Modification> mod_;
  std::shared_ptr<ProfileSolution> sol_plus_, sol_minus_;
};

// Span distance between two frames (sine of the largest principal angle).
double frame_distance(const CMat& A, const CMat& B);
// Orthonormal frame for the column span of B.
CMat orthonormal_frame(const CMat& B);
// Dimension of the intersection of two column spans (orthonormal frames).
int intersection_dim(const CMat& A, const CMat& B, double tol = 1e-8);
// Haar-distributed unitary matrix.
CMat random_unitary(int n, std::mt19937_64& rng);

// Hermitian fibre metric gamma_{b cbar}(z) on a trivialized holomorphic
// bundle of rank r over a chart of complex dimension nb.
using FibreMetricFn = std::function<std::vector<CJet>(const std::vector<Jet>&)>;  // row-major r x r
class HermitianBundleChart {
 public:
  HermitianBundleChart(int base_dim, int rank, FibreMetricFn gamma);
  int base_dim() const { return nb_; }
  int rank() const { return r_; }
  std::vector<CJet> gamma(const std::vector<Jet>& z) const { return gamma_(z); }

 private:
  int nb_, r_;
  FibreMetricFn gamma_;
};

// Chern connection data at one base point.  Omega[l](b, d) = Omega_{l b}^d and
// R[l][mu](b, c) = R_{l mubar b cbar}.
struct ChernData {
  CMat gamma;
  std::vector<CMat> Omega;
  std::vector<std::vector<CMat>> R;
  std::vector<CMat> dgamma, dbar_gamma;  // d_l gamma and d_mubar gamma

  // <R^D(w, w') xi, i xi> for real base vectors w, w' and a fibre vector xi.
  double rd_form(const Vec& w, const Vec& w2, const CVec& xi) const;
  // (R^D(w, w') xi, eta) with the Hermitian product of gamma.
  cplx rd_pair(const Vec& w, const Vec& w2, const CVec& xi, const CVec& eta) const;
  // Fibre component of the D-horizontal lift of w at xi.
  CVec horizontal_shift(const Vec& w, const CVec& xi) const;
  // max | Omega gamma - d gamma |.
  double connection_residual() const;
};
ChernData chern_connection(const HermitianBundleChart& b, const Vec& z);

// Total space of a trivial or tautological Hermitian bundle over a point or
// CP^1 with the metric of the potential K_h(z) + f(gamma |xi|^2).  Real
// coordinates are (base, fibre).
class BundleTriple : public Triple {
 public:
  enum class Base { point, cp1 };
  enum class Fibre { trivial, taut };
  BundleTriple(Base base, Fibre fibre, int rank, Profile profile, int sign, double base_scale = 2.0,
               std::string spec = "");

  int sign() const { return sign_; }
  int base_dim() const { return base_ == Base::cp1 ? 1 : 0; }
  int rank() const { return rank_; }
  Base base() const { return base_; }
  Fibre fibre() const { return fibre_; }
  double base_scale() const { return base_scale_; }
  const ProfileSolution& solution() const { return *sol_; }
  const HermitianBundleChart& bundle() const { return *bundle_; }
  ChartPtr chart() const { return chart_; }
  // Chart of the base potential alone (metric h); null over a point.
  ChartPtr base_chart() const { return base_chart_; }
  // Chart whose potential is rho^2 = gamma |xi|^2.
  ChartPtr norm_chart() const { return norm_chart_; }

  // Point with base coordinate z, tau = t and unit fibre direction dir.
  Vec point(const Vec& z, double t, const CVec& dir) const;
  Vec base_part(const Vec& x) const { return x.head(2 * base_dim()); }
  CVec fibre_part(const Vec& x) const { return complexify(x.tail(2 * rank_)); }
  double rho_squared(const Vec& x) const;
  // D-horizontal lift of a base vector to x.
  Vec horizontal_lift(const Vec& x, const Vec& w) const;

  ChartPoint sample(std::mt19937_64& rng) const override;
  // Minimum eigenvalue of the metric over the sampling region.
  double positivity_margin(std::mt19937_64& rng, int samples) const;

 private:
  Base base_;
  Fibre fibre_;
  int rank_, sign_;
  double base_scale_;
  std::shared_ptr<ProfileSolution> sol_;
  std::shared_ptr<HermitianBundleChart> bundle_;
  ChartPtr chart_, base_chart_, norm_chart_;
};

// Parsed catalog spec string.
struct TripleSpec {
  std::string family;  // cp, gr, bundle
  int n = 0, k = 0, l = 0;
  std::string base, fibre;
  int rank = 1, sign = +1;
  std::string text;
};
TripleSpec parse_spec(const std::string& s);
TriplePtr make_triple(const TripleSpec& spec, const Profile& profile);
TriplePtr make_triple(const std::string& spec, const Profile& profile);
std::shared_ptr<const GrassmannTriple> make_cp_triple(int n, int l, const Profile& profile);
std::shared_ptr<const GrassmannTriple> make_grassmannian_triple(int n, int k, const Profile& profile);
// Metadata from the closed-form dimension formulas.
TripleMeta catalog_meta(const TripleSpec& spec, const Profile& profile);
std::vector<std::string> catalog_entries();

// Flags (W, W') with W' a hyperplane in W, as orthonormal frames.
struct Flag {
  CMat W, Wp;
};
bool is_flag(const Flag& f, double tol = 1e-9);
// Adjacent flags share W or share W'.
bool flags_adjacent(const Flag& a, const Flag& b, double tol = 1e-9);
// Chain from f0 to f1 with each consecutive pair adjacent.
std::vector<Flag> flag_chain(const Flag& f0, const Flag& f1);
Flag random_flag(int n, int k, std::mt19937_64& rng);

}  // namespace ggk
