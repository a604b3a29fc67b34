#pragma once

#include <Eigen/Core>

#include <vector>

#include "trustlab/task_features.hpp"

namespace trustlab {

using LatentPoint = Eigen::VectorXd;

// Low-rank squared-exponential kernel k(x,x') = exp(-(x-x')^T M (x-x'))
// with M = Lambda L Lambda^T. Similarity is computed in the projected
// coordinates z = Lambda^T x, so (x-x')^T M (x-x') = (z-z')^T L (z-z').
class ProjectionKernel {
 public:
  ProjectionKernel(Eigen::MatrixXd projection, Eigen::VectorXd lengthscales);
  // identity lengthscales
  explicit ProjectionKernel(Eigen::MatrixXd projection);

  int feature_dim() const { return static_cast<int>(projection_.rows()); }
  int latent_dim() const { return static_cast<int>(projection_.cols()); }
  const Eigen::MatrixXd& projection() const { return projection_; }
  const Eigen::VectorXd& lengthscales() const { return lengthscales_; }

  LatentPoint project(const FeatureVector& x) const;
  double evaluate(const FeatureVector& x, const FeatureVector& xp) const;
  double evaluate_latent(const LatentPoint& z, const LatentPoint& zp) const;
  Eigen::MatrixXd gram(const std::vector<FeatureVector>& points) const;

 private:
  Eigen::MatrixXd projection_;   // d x k
  Eigen::VectorXd lengthscales_; // k, strictly positive
};

}  // namespace trustlab
