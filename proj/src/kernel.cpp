#include "trustlab/kernel.hpp"

#include <cmath>

namespace trustlab {

ProjectionKernel::ProjectionKernel(Eigen::MatrixXd projection,
                                   Eigen::VectorXd lengthscales)
    : projection_(std::move(projection)), lengthscales_(std::move(lengthscales)) {
  if (lengthscales_.size() != projection_.cols())
    throw Error("lengthscale count must equal latent dimension");
  if ((lengthscales_.array() <= 0.0).any())
    throw Error("lengthscales must be strictly positive");
  if (projection_.cols() > projection_.rows())
    throw Error("latent dimension exceeds feature dimension");
}

ProjectionKernel::ProjectionKernel(Eigen::MatrixXd projection)
    : ProjectionKernel(std::move(projection),
                       Eigen::VectorXd::Ones(projection.cols())) {}

LatentPoint ProjectionKernel::project(const FeatureVector& x) const {
  if (x.size() != projection_.rows())
    throw Error("project: feature dimension mismatch");
  return projection_.transpose() * x;
}

double ProjectionKernel::evaluate_latent(const LatentPoint& z,
                                         const LatentPoint& zp) const {
  const Eigen::VectorXd diff = z - zp;
  return std::exp(-diff.cwiseProduct(lengthscales_).dot(diff));
}

double ProjectionKernel::evaluate(const FeatureVector& x,
                                  const FeatureVector& xp) const {
  return evaluate_latent(project(x), project(xp));
}

Eigen::MatrixXd ProjectionKernel::gram(
    const std::vector<FeatureVector>& points) const {
  if (points.empty()) throw Error("gram: empty point list");
  const int n = static_cast<int>(points.size());
  std::vector<LatentPoint> z;
  z.reserve(points.size());
  for (const auto& p : points) z.push_back(project(p));
  Eigen::MatrixXd g(n, n);
  for (int i = 0; i < n; ++i) {
    g(i, i) = 1.0;
    for (int j = 0; j < i; ++j) g(i, j) = g(j, i) = evaluate_latent(z[i], z[j]);
  }
  return g;
}

}  // namespace trustlab
