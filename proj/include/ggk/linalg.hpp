#pragma once

// Dense linear-algebra aliases and small helpers shared by all modules.

#include <complex>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace ggk {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using cplx = std::complex<double>;

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Standard complex structure on R^{2n} with coordinates (x1, y1, ..., xn, yn).
Mat standard_j(int complex_dim);

// C^n -> R^{2n} with (Re z1, Im z1, ...), and back.
Vec realify(const CVec& z);
CVec complexify(const Vec& x);

// Orthonormal basis of span(cols) complement inside the g-orthogonal frame.
// Returns Q with Q^T g Q = I and columns spanning the same space as B.
Mat g_orthonormalize(const Mat& B, const Mat& g);

// Largest principal angle (sine) between the column spans of two
// Euclidean-orthonormal bases of equal dimension.
double subspace_distance(const Mat& A, const Mat& B);

// Null space of M with singular values below rel_tol * max(sigma, 1).
Mat null_space(const Mat& M, double rel_tol, Vec* singular_values = nullptr);

}  // namespace ggk
