#pragma once

#include <Eigen/Dense>

namespace ensmetric::detail {

/// Flips each column so that its largest-magnitude entry is positive
/// (first such entry on ties).
inline void fix_column_signs(Eigen::MatrixXd& vectors) {
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    Eigen::Index arg = 0;
    vectors.col(c).cwiseAbs().maxCoeff(&arg);
    if (vectors(arg, c) < 0.0) vectors.col(c) *= -1.0;
  }
}

struct SortedEigen {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // matching columns, sign-normalised
};

/// Symmetric eigendecomposition with eigenvalues in descending order.
inline SortedEigen sorted_symmetric_eigen(const Eigen::MatrixXd& a) {
  const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  SortedEigen out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  fix_column_signs(out.vectors);
  return out;
}

}  // namespace ensmetric::detail
