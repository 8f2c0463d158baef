#include "mvtrack/kalman.hpp"

#include "mvtrack/error.hpp"

#include <cmath>

namespace mvtrack {

namespace {

using MeasurementProjection = Eigen::Matrix<double, 4, 8>;

MeasurementProjection projection() {
  MeasurementProjection h = MeasurementProjection::Zero();
  for (int i = 0; i < 4; ++i) h(i, i) = 1.0;
  return h;
}

StateMatrix transition() {
  StateMatrix f = StateMatrix::Identity();
  for (int i = 0; i < 4; ++i) f(i, i + 4) = 1.0;
  return f;
}

MeasurementMatrix measurement_noise(double height, const KalmanConfig& cfg) {
  const double sp = cfg.std_weight_position * height;
  MeasurementVector std_dev(sp, sp, 1e-1, sp);
  return (cfg.measurement_noise_scale * std_dev.array().square()).matrix().asDiagonal();
}

Eigen::LDLT<MeasurementMatrix> factor_innovation(const MeasurementMatrix& s) {
  Eigen::LDLT<MeasurementMatrix> ldlt(s);
  const double scale = std::max(1.0, s.diagonal().cwiseAbs().maxCoeff());
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 1e-14 * scale) {
    throw NumericError("singular innovation covariance (diagonal " +
                       std::to_string(s(0, 0)) + ", " + std::to_string(s(1, 1)) + ", " +
                       std::to_string(s(2, 2)) + ", " + std::to_string(s(3, 3)) + ")");
  }
  return ldlt;
}

}  // namespace

BoundingBox KalmanState::box() const {
  const double h = mean(3);
  const double w = mean(2) * h;
  return BoundingBox{mean(0) - 0.5 * w, mean(1) - 0.5 * h, w, h};
}

MeasurementVector to_measurement(const BoundingBox& box) {
  return MeasurementVector(box.center_x(), box.center_y(), box.width / box.height, box.height);
}

KalmanState kf_init(const BoundingBox& box, const KalmanConfig& cfg) {
  box.validate();
  KalmanState s;
  s.mean.head<4>() = to_measurement(box);
  s.mean.tail<4>().setZero();
  const double h = box.height;
  const double sp = 2.0 * cfg.std_weight_position * h;
  const double sv = 10.0 * cfg.std_weight_velocity * h;
  StateVector std_dev;
  std_dev << sp, sp, 1e-2, sp, sv, sv, 1e-5, sv;
  s.covariance = std_dev.array().square().matrix().asDiagonal();
  return s;
}

KalmanState kf_predict(const KalmanState& s, const KalmanConfig& cfg) {
  const double h = s.mean(3);
  const double sp = cfg.std_weight_position * h;
  const double sv = cfg.std_weight_velocity * h;
  StateVector std_dev;
  std_dev << sp, sp, 1e-2, sp, sv, sv, 1e-5, sv;
  const StateMatrix q = (cfg.process_noise_scale * std_dev.array().square()).matrix().asDiagonal();
  const StateMatrix f = transition();

  KalmanState out;
  out.mean = f * s.mean;
  out.covariance = f * s.covariance * f.transpose() + q;
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  return out;
}

std::pair<MeasurementVector, MeasurementMatrix> kf_project(const KalmanState& s,
                                                           const KalmanConfig& cfg) {
  const MeasurementProjection h = projection();
  MeasurementMatrix innovation = h * s.covariance * h.transpose() + measurement_noise(s.mean(3), cfg);
  return {h * s.mean, 0.5 * (innovation + innovation.transpose())};
}

KalmanState kf_update(const KalmanState& s, const BoundingBox& z, const KalmanConfig& cfg) {
  z.validate();
  const auto [projected_mean, innovation_cov] = kf_project(s, cfg);
  const auto ldlt = factor_innovation(innovation_cov);
  const MeasurementProjection h = projection();

  // K = P H^T S^-1, computed as (S^-1 H P)^T since S and P are symmetric.
  const Eigen::Matrix<double, 8, 4> gain = ldlt.solve(h * s.covariance).transpose();
  const MeasurementVector innovation = to_measurement(z) - projected_mean;

  KalmanState out;
  out.mean = s.mean + gain * innovation;
  // Joseph form keeps the posterior symmetric PSD under rounding.
  const StateMatrix i_kh = StateMatrix::Identity() - gain * h;
  out.covariance = i_kh * s.covariance * i_kh.transpose() +
                   gain * measurement_noise(s.mean(3), cfg) * gain.transpose();
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  return out;
}

double mahalanobis(const KalmanState& s, const MeasurementVector& z, const KalmanConfig& cfg) {
  const auto [projected_mean, innovation_cov] = kf_project(s, cfg);
  const auto ldlt = factor_innovation(innovation_cov);
  const MeasurementVector d = z - projected_mean;
  return std::max(0.0, d.dot(ldlt.solve(d)));
}

double mahalanobis(const KalmanState& s, const BoundingBox& z, const KalmanConfig& cfg) {
  return mahalanobis(s, to_measurement(z), cfg);
}

}  // namespace mvtrack
