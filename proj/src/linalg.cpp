#include "ggk/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace ggk {

Mat standard_j(int complex_dim) {
  Mat J = Mat::Zero(2 * complex_dim, 2 * complex_dim);
  for (int a = 0; a < complex_dim; ++a) {
    J(2 * a + 1, 2 * a) = 1.0;
    J(2 * a, 2 * a + 1) = -1.0;
  }
  return J;
}

Vec realify(const CVec& z) {
  Vec x(2 * z.size());
  for (int i = 0; i < z.size(); ++i) {
    x(2 * i) = z(i).real();
    x(2 * i + 1) = z(i).imag();
  }
  return x;
}

CVec complexify(const Vec& x) {
  CVec z(x.size() / 2);
  for (int i = 0; i < z.size(); ++i) z(i) = cplx(x(2 * i), x(2 * i + 1));
  return z;
}

Mat g_orthonormalize(const Mat& B, const Mat& g) {
  if (B.cols() == 0) return B;
  Mat G = B.transpose() * g * B;
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (G + G.transpose()));
  const Vec& ev = es.eigenvalues();
  double top = std::max(ev.maxCoeff(), 1e-300);
  std::vector<int> keep;
  for (int i = 0; i < ev.size(); ++i)
    if (ev(i) > 1e-12 * top) keep.push_back(i);
  Mat out(B.rows(), keep.size());
  for (size_t c = 0; c < keep.size(); ++c)
    out.col(c) = B * es.eigenvectors().col(keep[c]) / std::sqrt(ev(keep[c]));
  return out;
}

double subspace_distance(const Mat& A, const Mat& B) {
  if (A.cols() != B.cols()) return 1.0;
  if (A.cols() == 0) return 0.0;
  // Spectral norm of the projector difference: the sine of the largest
  // principal angle without the cancellation in sqrt(1 - cos^2).
  Mat D = A * A.transpose() - B * B.transpose();
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (D + D.transpose()), Eigen::EigenvaluesOnly);
  return std::min(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
}

Mat null_space(const Mat& M, double rel_tol, Vec* singular_values) {
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullV);
  Vec s = Vec::Zero(M.cols());
  const Vec& sv = svd.singularValues();
  for (int i = 0; i < sv.size(); ++i) s(i) = sv(i);
  if (singular_values) *singular_values = s;
  double top = std::max(1.0, s.size() ? s.maxCoeff() : 0.0);
  std::vector<int> idx;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) < rel_tol * top) idx.push_back(i);
  Mat N(M.cols(), idx.size());
  for (size_t c = 0; c < idx.size(); ++c) N.col(c) = svd.matrixV().col(idx[c]);
  return N;
}

}  // namespace ggk
