#pragma once

#include "tiss/types.hpp"

namespace tiss {

// Row-normalized, diagonally loaded replacement for the square system
// A x = b:
//
//   (A^H D^{-1} A + eps I) x = A^H D^{-1} b,
//
// where D holds the squared row norms of A (all-zero rows get weight 1).
// After normalization the system matrix has trace d + eps * d, so eps acts
// as a relative eigenvalue shift. With eps = 0 the solution equals that of
// A x = b.
//
// The system is solved as the stacked least-squares problem
// min ||D^{-1/2}(A x - b)||^2 + eps ||x||^2 by column-pivoted QR, which has
// the same minimizer as the normal equations above without squaring the
// condition number of A.
//
// Throws DegenerateStateError when eps = 0 and A is numerically singular.
CMatrix regularized_solve(const CMatrix& a, const CMatrix& b, double epsilon);

// The d x d system matrix A^H D^{-1} A + eps I (for inspection and tests).
CMatrix regularized_system(const CMatrix& a, double epsilon);

}  // namespace tiss
