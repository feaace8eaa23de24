#include "tiss/solve.hpp"

#include <cmath>
#include <stdexcept>

namespace tiss {

namespace {

// Relative pivot threshold below which an unregularized system is treated
// as singular.
constexpr double kSingularThreshold = 1e-13;

RVector inverse_sqrt_row_weights(const CMatrix& a) {
  RVector w(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double n2 = a.row(i).squaredNorm();
    w(i) = n2 > 0.0 ? 1.0 / std::sqrt(n2) : 1.0;
  }
  return w;
}

}  // namespace

CMatrix regularized_system(const CMatrix& a, double epsilon) {
  if (a.rows() != a.cols()) throw std::invalid_argument("regularized_system: A must be square");
  const CMatrix an = inverse_sqrt_row_weights(a).asDiagonal() * a;
  CMatrix sys = an.adjoint() * an;
  sys.diagonal().array() += epsilon;
  return sys;
}

CMatrix regularized_solve(const CMatrix& a, const CMatrix& b, double epsilon) {
  const Eigen::Index d = a.rows();
  if (a.cols() != d) throw std::invalid_argument("regularized_solve: A must be square");
  if (b.rows() != d) throw std::invalid_argument("regularized_solve: b has wrong row count");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("regularized_solve: epsilon must be >= 0");
  if (!a.allFinite() || !b.allFinite()) {
    throw DegenerateStateError("regularized_solve: non-finite input");
  }

  const RVector w = inverse_sqrt_row_weights(a);
  const Eigen::Index extra = epsilon > 0.0 ? d : 0;
  CMatrix lhs = CMatrix::Zero(d + extra, d);
  CMatrix rhs = CMatrix::Zero(d + extra, b.cols());
  lhs.topRows(d) = w.asDiagonal() * a;
  rhs.topRows(d) = w.asDiagonal() * b;
  if (extra > 0) lhs.bottomRows(d).diagonal().setConstant(std::sqrt(epsilon));

  Eigen::ColPivHouseholderQR<CMatrix> qr(lhs);
  if (epsilon == 0.0) {
    const auto diag = qr.matrixQR().diagonal().cwiseAbs();
    const double largest = diag.size() > 0 ? diag.maxCoeff() : 0.0;
    if (d > 0 && !(diag.minCoeff() > kSingularThreshold * largest)) {
      throw DegenerateStateError("regularized_solve: singular system with epsilon = 0");
    }
  }
  return qr.solve(rhs);
}

}  // namespace tiss
