#pragma once

#include "engage/error.hpp"
#include "engage/matrix.hpp"

namespace engage {

struct PcaModel {
  Vector mean;                // input dimension d
  Matrix components;          // k x d, orthonormal rows
  Vector explained_variance;  // k, non-increasing (sample variance, n - 1)

  int input_dim() const { return static_cast<int>(mean.size()); }
  int k() const { return static_cast<int>(components.rows()); }
};

// Eigendecomposition of the sample covariance. Each component's
// largest-magnitude entry is made positive. When the data has fewer than k
// non-degenerate directions, k is reduced and a warning is emitted.
PcaModel fit_pca(const Matrix& points, int k, Warnings* warnings = nullptr);

Vector transform_pca(const PcaModel& model, const Vector& v);
Matrix transform_pca(const PcaModel& model, const Matrix& rows);
Vector inverse_transform_pca(const PcaModel& model, const Vector& projected);

// Throws InvariantViolation when the model is malformed.
void validate(const PcaModel& model, double tol = 1e-6);

}  // namespace engage
