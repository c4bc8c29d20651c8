#pragma once

// Geodesics, parallel transport and Jacobi fields in a single chart,
// integrated with an adaptive Dormand-Prince 5(4) pair.

#include <vector>

#include "ggk/chart.hpp"
#include "ggk/linalg.hpp"

namespace ggk {

struct OdeOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  double initial_step = 1e-3;
};

enum class FieldMode { none, transport, jacobi };

// State along a geodesic at one time.  dw holds covariant derivatives
// nabla_xdot w; for transported fields they vanish.
struct FlowSample {
  double t = 0.0;
  Vec x, xdot;
  std::vector<Vec> w, dw;
};

// Integrates the geodesic with initial data (x0, v0) jointly with the given
// fields and returns samples at the requested times (monotone, first >= 0 or
// <= 0 consistently; t = 0 is the start).  For jacobi mode dw0 holds the
// covariant initial derivatives.
std::vector<FlowSample> integrate_flow(const Chart& chart, const Vec& x0, const Vec& v0,
                                       const std::vector<Vec>& w0, const std::vector<Vec>& dw0,
                                       FieldMode mode, const std::vector<double>& times,
                                       const OdeOptions& opt = {});

class GeodesicPath {
 public:
  GeodesicPath() = default;
  GeodesicPath(const Chart* chart, std::vector<FlowSample> nodes, OdeOptions opt)
      : chart_(chart), nodes_(std::move(nodes)), opt_(opt) {}
  const std::vector<FlowSample>& nodes() const { return nodes_; }
  double t_end() const { return nodes_.back().t; }
  const Vec& start() const { return nodes_.front().x; }
  const Vec& start_velocity() const { return nodes_.front().xdot; }
  // Dense output: re-integrates from the nearest preceding node.
  FlowSample at(double t) const;
  const Chart& chart() const { return *chart_; }

 private:
  const Chart* chart_ = nullptr;
  std::vector<FlowSample> nodes_;
  OdeOptions opt_;
};

// Adaptive geodesic; nodes are the accepted integrator steps.
GeodesicPath geodesic(const Chart& chart, const Vec& x0, const Vec& v0, double t_end,
                      const OdeOptions& opt = {});

// Parallel transport of w0 along the path, sampled at the given times.
std::vector<FlowSample> parallel_transport(const GeodesicPath& path, const Vec& w0,
                                           const std::vector<double>& times);
// Jacobi field with w(0) = w0 and nabla w(0) = dw0.
std::vector<FlowSample> jacobi(const GeodesicPath& path, const Vec& w0, const Vec& dw0,
                               const std::vector<double>& times);

// Geodesic residual |nabla_xdot xdot| at a sample (central finite difference
// of the velocity along the path).
double geodesic_residual(const GeodesicPath& path, double t, double h = 1e-4);

// v = grad tau and its coordinate Jacobian dv(k, j) = d_j v^k.
std::pair<Vec, Mat> gradient_with_jacobian(const Chart& chart, const Vec& x);

// Flow of v in its own parameter s jointly with dW/ds = dv W, which pushes
// the columns of W0 forward into fields commuting with v.
struct GradientFlowSample {
  double s = 0.0;
  Vec x;
  Mat W;
};
std::vector<GradientFlowSample> gradient_flow(const Chart& chart, const Vec& x0, const Mat& W0,
                                              const std::vector<double>& times, const OdeOptions& opt = {});

// Exp(xi) from y, and the Jacobi-field value w_hat(1) along t -> Exp(t xi)
// with w_hat(0) = w and nabla w_hat(0) = eta.
Vec exp_normal(const Chart& chart, const Vec& y, const Vec& xi, const OdeOptions& opt = {});
Vec d_exp_normal(const Chart& chart, const Vec& y, const Vec& xi, const Vec& eta, const Vec& w,
                 const OdeOptions& opt = {});

}  // namespace ggk
