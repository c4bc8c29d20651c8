#include "ggk/geodesic.hpp"

#include <algorithm>
#include <cmath>

#include <boost/numeric/odeint.hpp>

#include "ggk/riemann.hpp"

namespace ggk {

namespace odeint = boost::numeric::odeint;
using State = std::vector<double>;

namespace {

struct FlowSystem {
  const Chart& chart;
  int N;
  int nfields;
  FieldMode mode;

  int field_stride() const { return mode == FieldMode::jacobi ? 2 * N : N; }

  void operator()(const State& s, State& ds, double) const {
    Eigen::Map<const Vec> x(s.data(), N), xd(s.data() + N, N);
    Vec xv = x;
    if (!chart.in_domain(xv)) throw GeometryError("geodesic left the chart domain");
    const int order = mode == FieldMode::jacobi ? 4 : 3;
    Christoffel G = christoffel(metric_from_potential(chart, xv, order));
    Eigen::Map<Vec>(ds.data(), N) = xd;
    Eigen::Map<Vec>(ds.data() + N, N) = -G.contract(xd, xd);
    if (mode == FieldMode::none) return;
    Mat Gx = G.along(xd);
    const int stride = field_stride();
    for (int f = 0; f < nfields; ++f) {
      const double* w = s.data() + 2 * N + f * stride;
      double* dw = ds.data() + 2 * N + f * stride;
      Eigen::Map<const Vec> wv(w, N);
      if (mode == FieldMode::transport) {
        Eigen::Map<Vec>(dw, N) = -Gx * wv;
        continue;
      }
      Eigen::Map<const Vec> wp(w + N, N);
      Vec acc = -2.0 * Gx * wp;
      for (int l = 0; l < N; ++l) {
        if (wv(l) == 0.0) continue;
        for (int k = 0; k < N; ++k) acc(k) -= wv(l) * xd.dot(G.dG[l][k] * xd);
      }
      Eigen::Map<Vec>(dw, N) = wp;
      Eigen::Map<Vec>(dw + N, N) = acc;
    }
  }
};

FlowSample unpack(const FlowSystem& sys, const State& s, double t) {
  const int N = sys.N;
  FlowSample out;
  out.t = t;
  out.x = Eigen::Map<const Vec>(s.data(), N);
  out.xdot = Eigen::Map<const Vec>(s.data() + N, N);
  if (sys.mode == FieldMode::none) return out;
  Christoffel G = christoffel(metric_from_potential(sys.chart, out.x, 3));
  Mat Gx = G.along(out.xdot);
  const int stride = sys.field_stride();
  for (int f = 0; f < sys.nfields; ++f) {
    Vec w = Eigen::Map<const Vec>(s.data() + 2 * N + f * stride, N);
    out.w.push_back(w);
    if (sys.mode == FieldMode::jacobi) {
      Vec wp = Eigen::Map<const Vec>(s.data() + 2 * N + f * stride + N, N);
      out.dw.push_back(wp + Gx * w);
    } else {
      out.dw.push_back(Vec::Zero(N));
    }
  }
  return out;
}

State pack(const FlowSystem& sys, const Vec& x0, const Vec& v0, const std::vector<Vec>& w0,
           const std::vector<Vec>& dw0) {
  const int N = sys.N;
  State s(2 * N + sys.nfields * sys.field_stride(), 0.0);
  Eigen::Map<Vec>(s.data(), N) = x0;
  Eigen::Map<Vec>(s.data() + N, N) = v0;
  if (sys.mode == FieldMode::none) return s;
  Mat Gx;
  if (sys.mode == FieldMode::jacobi) Gx = christoffel(metric_from_potential(sys.chart, x0, 3)).along(v0);
  const int stride = sys.field_stride();
  for (int f = 0; f < sys.nfields; ++f) {
    Eigen::Map<Vec>(s.data() + 2 * N + f * stride, N) = w0[f];
    if (sys.mode == FieldMode::jacobi)
      Eigen::Map<Vec>(s.data() + 2 * N + f * stride + N, N) = dw0[f] - Gx * w0[f];
  }
  return s;
}

}  // namespace

std::vector<FlowSample> integrate_flow(const Chart& chart, const Vec& x0, const Vec& v0,
                                       const std::vector<Vec>& w0, const std::vector<Vec>& dw0,
                                       FieldMode mode, const std::vector<double>& times,
                                       const OdeOptions& opt) {
  const int N = chart.real_dim();
  if (x0.size() != N || v0.size() != N) throw GeometryError("flow initial data has wrong dimension");
  if (mode == FieldMode::jacobi && dw0.size() != w0.size())
    throw GeometryError("jacobi fields need one initial derivative per field");
  FlowSystem sys{chart, N, mode == FieldMode::none ? 0 : static_cast<int>(w0.size()), mode};
  State s = pack(sys, x0, v0, w0, dw0);
  std::vector<double> grid;
  grid.push_back(0.0);
  for (double t : times)
    if (t != 0.0) grid.push_back(t);
  if (grid.size() == 1) return {unpack(sys, s, 0.0)};
  const double dir = grid.back() > 0 ? 1.0 : -1.0;
  for (size_t i = 1; i < grid.size(); ++i)
    if ((grid[i] - grid[i - 1]) * dir <= 0.0) throw GeometryError("flow sample times must be monotone");
  std::vector<std::pair<double, State>> recorded;
  auto stepper = odeint::make_dense_output(opt.abs_tol, opt.rel_tol, odeint::runge_kutta_dopri5<State>());
  odeint::integrate_times(stepper, sys, s, grid.begin(), grid.end(), dir * opt.initial_step,
                          [&](const State& st, double t) { recorded.emplace_back(t, st); });
  std::vector<FlowSample> out;
  for (double t : times) {
    auto it = std::find_if(recorded.begin(), recorded.end(), [&](const auto& r) { return r.first == t; });
    if (it == recorded.end()) it = recorded.begin();
    out.push_back(unpack(sys, it->second, t));
  }
  return out;
}

FlowSample GeodesicPath::at(double t) const {
  size_t best = 0;
  for (size_t i = 0; i < nodes_.size(); ++i) {
    double ti = nodes_[i].t;
    if ((t >= 0 && ti <= t && ti >= nodes_[best].t) || (t < 0 && ti >= t && ti <= nodes_[best].t)) best = i;
  }
  const FlowSample& n = nodes_[best];
  auto s = integrate_flow(*chart_, n.x, n.xdot, {}, {}, FieldMode::none, {t - n.t}, opt_);
  s[0].t = t;
  return s[0];
}

GeodesicPath geodesic(const Chart& chart, const Vec& x0, const Vec& v0, double t_end, const OdeOptions& opt) {
  const int N = chart.real_dim();
  FlowSystem sys{chart, N, 0, FieldMode::none};
  State s = pack(sys, x0, v0, {}, {});
  std::vector<FlowSample> nodes;
  auto stepper = odeint::make_dense_output(opt.abs_tol, opt.rel_tol, odeint::runge_kutta_dopri5<State>());
  const double dir = t_end >= 0 ? 1.0 : -1.0;
  odeint::integrate_adaptive(stepper, sys, s, 0.0, t_end, dir * opt.initial_step,
                             [&](const State& st, double t) { nodes.push_back(unpack(sys, st, t)); });
  return GeodesicPath(&chart, std::move(nodes), opt);
}

std::vector<FlowSample> parallel_transport(const GeodesicPath& path, const Vec& w0,
                                           const std::vector<double>& times) {
  return integrate_flow(path.chart(), path.start(), path.start_velocity(), {w0}, {}, FieldMode::transport, times);
}

std::vector<FlowSample> jacobi(const GeodesicPath& path, const Vec& w0, const Vec& dw0,
                               const std::vector<double>& times) {
  return integrate_flow(path.chart(), path.start(), path.start_velocity(), {w0}, {dw0}, FieldMode::jacobi, times);
}

double geodesic_residual(const GeodesicPath& path, double t, double h) {
  FlowSample a = path.at(t - h), b = path.at(t + h), c = path.at(t);
  Christoffel G = christoffel(metric_from_potential(path.chart(), c.x, 3));
  Vec acc = (b.xdot - a.xdot) / (2.0 * h) + G.contract(c.xdot, c.xdot);
  return acc.norm();
}

std::pair<Vec, Mat> gradient_with_jacobian(const Chart& chart, const Vec& x) {
  const int N = chart.real_dim();
  if (!chart.in_domain(x)) throw GeometryError("gradient flow left the chart domain");
  MetricJet m = metric_from_potential(chart, x, 3);
  std::vector<double> p(x.data(), x.data() + N);
  ScalarJet t = scalar_jet(chart.tau(jet_seed(p, 2)));
  Eigen::LDLT<Mat> ldlt(m.g);
  Vec v = ldlt.solve(t.grad);
  Mat dv(N, N);
  for (int j = 0; j < N; ++j) dv.col(j) = ldlt.solve(t.hess.col(j) - m.dg[j] * v);
  return {v, dv};
}

std::vector<GradientFlowSample> gradient_flow(const Chart& chart, const Vec& x0, const Mat& W0,
                                              const std::vector<double>& times, const OdeOptions& opt) {
  const int N = chart.real_dim();
  const int k = static_cast<int>(W0.cols());
  auto sys = [&](const State& s, State& ds, double) {
    Eigen::Map<const Vec> x(s.data(), N);
    Eigen::Map<const Mat> W(s.data() + N, N, k);
    auto [v, dv] = gradient_with_jacobian(chart, Vec(x));
    ds.resize(s.size());
    Eigen::Map<Vec>(ds.data(), N) = v;
    Eigen::Map<Mat>(ds.data() + N, N, k) = dv * W;
  };
  auto unpack_state = [&](const State& s, double t) {
    GradientFlowSample g;
    g.s = t;
    g.x = Eigen::Map<const Vec>(s.data(), N);
    g.W = Eigen::Map<const Mat>(s.data() + N, N, k);
    return g;
  };
  State s(N + N * k);
  Eigen::Map<Vec>(s.data(), N) = x0;
  Eigen::Map<Mat>(s.data() + N, N, k) = W0;
  std::vector<double> grid{0.0};
  for (double t : times)
    if (t != 0.0) grid.push_back(t);
  std::vector<GradientFlowSample> out;
  if (grid.size() == 1) {
    for (size_t i = 0; i < times.size(); ++i) out.push_back(unpack_state(s, 0.0));
    return out;
  }
  const double dir = grid.back() > 0 ? 1.0 : -1.0;
  for (size_t i = 1; i < grid.size(); ++i)
    if ((grid[i] - grid[i - 1]) * dir <= 0.0) throw GeometryError("flow sample times must be monotone");
  std::vector<std::pair<double, State>> recorded;
  auto stepper = odeint::make_dense_output(opt.abs_tol, opt.rel_tol, odeint::runge_kutta_dopri5<State>());
  odeint::integrate_times(stepper, sys, s, grid.begin(), grid.end(), dir * opt.initial_step,
                          [&](const State& st, double t) { recorded.emplace_back(t, st); });
  for (double t : times) {
    auto it = std::find_if(recorded.begin(), recorded.end(), [&](const auto& r) { return r.first == t; });
    if (it == recorded.end()) it = recorded.begin();
    out.push_back(unpack_state(it->second, t));
  }
  return out;
}

Vec exp_normal(const Chart& chart, const Vec& y, const Vec& xi, const OdeOptions& opt) {
  if (xi.norm() == 0.0) return y;
  return integrate_flow(chart, y, xi, {}, {}, FieldMode::none, {1.0}, opt)[0].x;
}

Vec d_exp_normal(const Chart& chart, const Vec& y, const Vec& xi, const Vec& eta, const Vec& w,
                 const OdeOptions& opt) {
  return integrate_flow(chart, y, xi, {w}, {eta}, FieldMode::jacobi, {1.0}, opt)[0].w[0];
}

}  // namespace ggk
