#pragma once

#include <optional>
#include <span>

#include "duellab/matrix.hpp"

namespace duellab::linalg {

// Lower-triangular L with A = L L^T, or nullopt when A is not numerically SPD.
std::optional<Matrix> cholesky(const Matrix& a);

// Solves (L L^T) x = b.
Vector cholesky_solve(const Matrix& l, std::span<const double> b);

// Inverse of an SPD matrix via its Cholesky factor, symmetrized.
std::optional<Matrix> spd_inverse(const Matrix& a);

double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace duellab::linalg
