#pragma once

#include <Eigen/Dense>
#include <string>

namespace umc::diffnet {

// Dense row-major 64-bit matrix used for every representation in the
// project (features, latents, parameters, similarities).
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using Index = Eigen::Index;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

/// Throws ShapeError when `m` is not rows x cols.
void require_shape(const Matrix& m, Index rows, Index cols, const std::string& what);

/// Throws NumericError naming `what` when `m` holds NaN or Inf.
void require_finite(const Matrix& m, const std::string& what);

/// Rows of `m` scaled to unit Euclidean norm; zero rows stay zero.
Matrix normalize_rows(const Matrix& m);

}  // namespace umc::diffnet
