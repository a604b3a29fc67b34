#pragma once

#include <Eigen/Core>

namespace trustlab {

// OPTIMo-style linear Gaussian update over a single scalar trust value.
struct LgParams {
  Eigen::Vector3d w;  // weights on tau_prev, c_prev, c_prev - c_prev2
  double noise_var = 1.0;
};

struct CtParams {
  double tau0 = 0.5;
};

// Mean prediction w^T [tau_prev, c_prev, c_prev - c_prev2], clamped to
// [1e-4, 1 - 1e-4]. On the first step callers pass c_prev2 = c_prev.
double lg_update(const LgParams& p, double tau_prev, double c_prev,
                 double c_prev2);

// Gaussian log-density diagnostic; the headline NLL uses the shared
// Bernoulli metric.
double lg_nll(const LgParams& p, double tau_observed, double tau_predicted);

double ct_predict(const CtParams& p);

inline constexpr double kTrustClampLo = 1e-4;
inline constexpr double kTrustClampHi = 1.0 - 1e-4;

}  // namespace trustlab
