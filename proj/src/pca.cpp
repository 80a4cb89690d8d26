#include "engage/pca.hpp"

#include <cmath>
#include <string>

namespace engage {

PcaModel fit_pca(const Matrix& points, int k, Warnings* warnings) {
  const auto n = points.rows();
  const auto d = points.cols();
  if (n < 2) fail(ErrorKind::TooFewPoints, "PCA needs at least 2 points");
  if (k < 1 || k > d) {
    fail(ErrorKind::InvalidConfig, "PCA target dimension " + std::to_string(k) +
                                       " outside [1, " + std::to_string(d) + "]");
  }
  PcaModel model;
  model.mean = points.colwise().mean().transpose();
  Matrix centered = points.rowwise() - model.mean.transpose();
  Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    fail(ErrorKind::InvariantViolation, "covariance eigendecomposition failed");
  }
  const Eigen::VectorXd& values = solver.eigenvalues();  // ascending
  const Eigen::MatrixXd& vectors = solver.eigenvectors();

  const double top = std::max(values[d - 1], 0.0);
  const double floor = 1e-12 * std::max(1.0, top);
  int usable = 0;
  for (Eigen::Index i = d - 1; i >= 0 && values[i] > floor; --i) ++usable;
  if (usable < 1) fail(ErrorKind::TooFewPoints, "all points are identical");
  if (usable < k) {
    warn(warnings, "RankDeficient: only " + std::to_string(usable) +
                       " non-degenerate directions; PCA dimension reduced from " +
                       std::to_string(k));
    k = usable;
  }

  model.components.resize(k, d);
  model.explained_variance.resize(k);
  for (int j = 0; j < k; ++j) {
    Eigen::VectorXd c = vectors.col(d - 1 - j);
    Eigen::Index arg = 0;
    c.cwiseAbs().maxCoeff(&arg);
    if (c[arg] < 0) c = -c;
    model.components.row(j) = c.transpose();
    model.explained_variance[j] = values[d - 1 - j];
  }
  return model;
}

Vector transform_pca(const PcaModel& model, const Vector& v) {
  if (v.size() != model.mean.size()) {
    fail(ErrorKind::DimensionMismatch, "vector has " + std::to_string(v.size()) +
                                           " dims, PCA expects " +
                                           std::to_string(model.mean.size()));
  }
  return model.components * (v - model.mean);
}

Matrix transform_pca(const PcaModel& model, const Matrix& rows) {
  if (rows.cols() != model.mean.size()) {
    fail(ErrorKind::DimensionMismatch, "rows have " + std::to_string(rows.cols()) +
                                           " dims, PCA expects " +
                                           std::to_string(model.mean.size()));
  }
  Matrix centered = rows.rowwise() - model.mean.transpose();
  return centered * model.components.transpose();
}

Vector inverse_transform_pca(const PcaModel& model, const Vector& projected) {
  if (projected.size() != model.k()) {
    fail(ErrorKind::DimensionMismatch, "projected vector has wrong dimension");
  }
  return model.components.transpose() * projected + model.mean;
}

void validate(const PcaModel& model, double tol) {
  const int k = model.k();
  if (k < 1 || model.components.cols() != model.mean.size() ||
      model.explained_variance.size() != k) {
    fail(ErrorKind::InvariantViolation, "PCA model has inconsistent shapes");
  }
  if (!model.components.allFinite() || !model.mean.allFinite()) {
    fail(ErrorKind::InvariantViolation, "PCA model has non-finite entries");
  }
  Eigen::MatrixXd gram = model.components * model.components.transpose();
  if ((gram - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff() > tol) {
    fail(ErrorKind::InvariantViolation, "PCA components are not orthonormal");
  }
  for (int j = 0; j < k; ++j) {
    if (model.explained_variance[j] < 0 ||
        (j > 0 && model.explained_variance[j] > model.explained_variance[j - 1])) {
      fail(ErrorKind::InvariantViolation, "explained variance not non-increasing");
    }
  }
}

}  // namespace engage
