#pragma once

#include "mvtrack/types.hpp"

#include <Eigen/Dense>

namespace mvtrack {

using StateVector = Eigen::Matrix<double, 8, 1>;
using StateMatrix = Eigen::Matrix<double, 8, 8>;
using MeasurementVector = Eigen::Matrix<double, 4, 1>;
using MeasurementMatrix = Eigen::Matrix<double, 4, 4>;

// Constant-velocity state over (cx, cy, aspect = w / h, height) and their rates.
struct KalmanState {
  StateVector mean = StateVector::Zero();
  StateMatrix covariance = StateMatrix::Identity();

  BoundingBox box() const;
};

// Noise model in the DeepSORT convention: standard deviations proportional to
// the box height. The scale factors multiply the respective noise terms; zero
// disables them.
struct KalmanConfig {
  double std_weight_position = 1.0 / 20.0;
  double std_weight_velocity = 1.0 / 160.0;
  double process_noise_scale = 1.0;
  double measurement_noise_scale = 1.0;
};

// Chi-square 0.95 quantile with 4 degrees of freedom.
inline constexpr double kGateChi2_4dof = 9.4877;

MeasurementVector to_measurement(const BoundingBox& box);

KalmanState kf_init(const BoundingBox& box, const KalmanConfig& cfg = {});
KalmanState kf_predict(const KalmanState& s, const KalmanConfig& cfg = {});
// Throws NumericError when the innovation covariance is singular.
KalmanState kf_update(const KalmanState& s, const BoundingBox& z, const KalmanConfig& cfg = {});

// Projected measurement distribution (mean, innovation covariance).
std::pair<MeasurementVector, MeasurementMatrix> kf_project(const KalmanState& s,
                                                           const KalmanConfig& cfg = {});

// Squared Mahalanobis distance of a measurement from the projected distribution.
double mahalanobis(const KalmanState& s, const MeasurementVector& z, const KalmanConfig& cfg = {});
double mahalanobis(const KalmanState& s, const BoundingBox& z, const KalmanConfig& cfg = {});

}  // namespace mvtrack
