#include "trustlab/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace trustlab {

double lg_update(const LgParams& p, double tau_prev, double c_prev,
                 double c_prev2) {
  const Eigen::Vector3d feat(tau_prev, c_prev, c_prev - c_prev2);
  return std::clamp(p.w.dot(feat), kTrustClampLo, kTrustClampHi);
}

double lg_nll(const LgParams& p, double tau_observed, double tau_predicted) {
  if (p.noise_var <= 0.0) throw std::invalid_argument("noise_var must be positive");
  const double d = tau_observed - tau_predicted;
  return 0.5 * d * d / p.noise_var +
         0.5 * std::log(2.0 * std::numbers::pi * p.noise_var);
}

double ct_predict(const CtParams& p) { return p.tau0; }

}  // namespace trustlab
