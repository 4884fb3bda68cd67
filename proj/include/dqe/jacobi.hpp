#pragma once

#include <vector>

namespace dqe {

// Eigenvalues of a dense symmetric matrix, sorted ascending.
//
// Cyclic Jacobi rotations; unconditionally convergent for symmetric input.
// Sweeps continue until the off-diagonal Frobenius norm drops below `tol`
// (absolute). `a` is row-major n x n and is consumed as scratch space.
std::vector<double> symmetric_eigenvalues(std::vector<double> a, int n,
                                          double tol = 1e-10);

}  // namespace dqe
