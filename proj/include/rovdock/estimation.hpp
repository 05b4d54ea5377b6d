/*
 * Copyright 2026 rovdock contributors. All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "rovdock/geometry.hpp"

namespace rovdock {

// State layout: position (nav frame), Euler angles, body-frame linear
// velocity, body-frame angular rate, body-frame linear acceleration.
enum StateIndex : int {
  SX = 0, SY, SZ,
  SROLL, SPITCH, SYAW,
  SU, SV, SW,
  SP, SQ, SR,
  SAX, SAY, SAZ,
  kStateDim = 15
};

using Vector15 = Eigen::Matrix<double, 15, 1>;
using Matrix15 = Eigen::Matrix<double, 15, 15>;
using Vector6 = Eigen::Matrix<double, 6, 1>;
using Matrix6 = Eigen::Matrix<double, 6, 6>;

/// 15-dimensional vehicle state, navigated either in the tag* frame
/// (docking) or the world frame (homing). Same filter, two instantiations.
struct EkfState15 {
  Vector15 x{Vector15::Zero()};

  Eigen::Vector3d position() const { return x.segment<3>(SX); }
  Eigen::Vector3d euler() const { return x.segment<3>(SROLL); }
  Eigen::Vector3d vel_body() const { return x.segment<3>(SU); }
  Eigen::Vector3d rates() const { return x.segment<3>(SP); }
  Eigen::Vector3d accel_body() const { return x.segment<3>(SAX); }
  double yaw() const { return x(SYAW); }

  void wrap_angles() {
    x(SROLL) = wrap_angle(x(SROLL));
    x(SPITCH) = wrap_angle(x(SPITCH));
    x(SYAW) = wrap_angle(x(SYAW));
  }

  Pose pose(FrameId frame) const {
    return Pose::from_euler(position(), x(SROLL), x(SPITCH), x(SYAW), frame);
  }
};

namespace ekf_detail {

inline Eigen::Matrix3d rot_zyx(double roll, double pitch, double yaw) {
  return (Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

/// Keeps 1/cos(pitch) bounded through the gimbal-lock neighborhood.
inline double safe_cos_pitch(double pitch) {
  double cp = std::cos(pitch);
  double sign = cp >= 0.0 ? 1.0 : -1.0;
  return sign * std::max(std::abs(cp), 0.02);
}

/// Euler-rate matrix mapping body rates to Euler angle rates.
inline Eigen::Matrix3d euler_rate_matrix(double roll, double pitch) {
  double sr = std::sin(roll), cr = std::cos(roll);
  double cp = safe_cos_pitch(pitch);
  double tp = std::sin(pitch) / cp;
  Eigen::Matrix3d t;
  t << 1, sr * tp, cr * tp,
       0, cr, -sr,
       0, sr / cp, cr / cp;
  return t;
}

// Per-angle derivatives of the ZYX rotation, for the prediction Jacobian.
inline Eigen::Matrix3d drot_droll(double roll, double pitch, double yaw) {
  double sr = std::sin(roll), cr = std::cos(roll);
  Eigen::Matrix3d dx;
  dx << 0, 0, 0,
        0, -sr, -cr,
        0, cr, -sr;
  return (Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()))
             .toRotationMatrix() *
         dx;
}

inline Eigen::Matrix3d drot_dpitch(double roll, double pitch, double yaw) {
  double sp = std::sin(pitch), cp = std::cos(pitch);
  Eigen::Matrix3d dy;
  dy << -sp, 0, cp,
        0, 0, 0,
        -cp, 0, -sp;
  return Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix() * dy *
         Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()).toRotationMatrix();
}

inline Eigen::Matrix3d drot_dyaw(double roll, double pitch, double yaw) {
  double sy = std::sin(yaw), cy = std::cos(yaw);
  Eigen::Matrix3d dz;
  dz << -sy, -cy, 0,
        cy, -sy, 0,
        0, 0, 0;
  return dz * (Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
               Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()))
                  .toRotationMatrix();
}

inline Eigen::Matrix3d deuler_rate_droll(double roll, double pitch) {
  double sr = std::sin(roll), cr = std::cos(roll);
  double cp = safe_cos_pitch(pitch);
  double tp = std::sin(pitch) / cp;
  Eigen::Matrix3d d;
  d << 0, cr * tp, -sr * tp,
       0, -sr, -cr,
       0, cr / cp, -sr / cp;
  return d;
}

inline Eigen::Matrix3d deuler_rate_dpitch(double roll, double pitch) {
  double sr = std::sin(roll), cr = std::cos(roll);
  double cp = safe_cos_pitch(pitch), sp = std::sin(pitch);
  double cp2 = cp * cp;
  Eigen::Matrix3d d;
  d << 0, sr / cp2, cr / cp2,
       0, 0, 0,
       0, sr * sp / cp2, cr * sp / cp2;
  return d;
}

}  // namespace ekf_detail

/// Constant-acceleration transition for the linear states, constant-rate
/// for the angular ones (angular acceleration is not in the state).
inline Vector15 ekf_predict_state(const Vector15& x, double dt) {
  using namespace ekf_detail;
  Eigen::Matrix3d r = rot_zyx(x(SROLL), x(SPITCH), x(SYAW));
  Eigen::Matrix3d t = euler_rate_matrix(x(SROLL), x(SPITCH));
  Eigen::Vector3d v = x.segment<3>(SU), a = x.segment<3>(SAX), w = x.segment<3>(SP);

  Vector15 out = x;
  out.segment<3>(SX) += r * (v * dt + 0.5 * a * dt * dt);
  out.segment<3>(SROLL) += t * w * dt;
  out.segment<3>(SU) += a * dt;
  out(SROLL) = wrap_angle(out(SROLL));
  out(SPITCH) = wrap_angle(out(SPITCH));
  out(SYAW) = wrap_angle(out(SYAW));
  return out;
}

inline Matrix15 ekf_jacobian(const Vector15& x, double dt) {
  using namespace ekf_detail;
  double roll = x(SROLL), pitch = x(SPITCH), yaw = x(SYAW);
  Eigen::Matrix3d r = rot_zyx(roll, pitch, yaw);
  Eigen::Matrix3d t = euler_rate_matrix(roll, pitch);
  Eigen::Vector3d v = x.segment<3>(SU), a = x.segment<3>(SAX), w = x.segment<3>(SP);
  Eigen::Vector3d u = v * dt + 0.5 * a * dt * dt;

  Matrix15 f = Matrix15::Identity();
  f.block<3, 1>(SX, SROLL) = drot_droll(roll, pitch, yaw) * u;
  f.block<3, 1>(SX, SPITCH) = drot_dpitch(roll, pitch, yaw) * u;
  f.block<3, 1>(SX, SYAW) = drot_dyaw(roll, pitch, yaw) * u;
  f.block<3, 3>(SX, SU) = r * dt;
  f.block<3, 3>(SX, SAX) = 0.5 * r * dt * dt;
  f.block<3, 1>(SROLL, SROLL) += deuler_rate_droll(roll, pitch) * w * dt;
  f.block<3, 1>(SROLL, SPITCH) += deuler_rate_dpitch(roll, pitch) * w * dt;
  f.block<3, 3>(SROLL, SP) = t * dt;
  f.block<3, 3>(SU, SAX) = Eigen::Matrix3d::Identity() * dt;
  return f;
}

// ---------------------------------------------------------------------------
// Measurement packets
// ---------------------------------------------------------------------------

struct MarkerPosePacket {
  Vector6 pose;  // x y z roll pitch yaw, tag* frame
  Matrix6 cov;
};

struct DvlPacket {
  Eigen::Vector3d vel_body;
  Eigen::Matrix3d cov;
};

struct ImuPacket {
  Eigen::Vector3d rates;
  Eigen::Vector3d accel;
  std::optional<double> heading;
  Eigen::Matrix3d rates_cov;
  Eigen::Matrix3d accel_cov;
  double heading_var = 1e-3;
};

struct DepthPacket {
  double z;
  double var;
};

struct UsblPositionPacket {
  Eigen::Vector2d ne;
  Eigen::Matrix2d cov;
};

/// A timestamped measurement carrying its own noise covariance.
struct MeasurementPacket {
  double t = 0.0;
  std::variant<MarkerPosePacket, DvlPacket, ImuPacket, DepthPacket, UsblPositionPacket>
      data;
};

struct EkfConfig {
  // Process noise spectral densities per state block.
  double q_pos = 1e-6;
  double q_ang = 1e-6;
  double q_vel = 1e-3;
  double q_rate = 5e-3;
  double q_accel = 5e-2;
  bool compass_enabled = true;
  /// Shrinks the camera-derived pose covariance; < 1 places high
  /// confidence in marker measurements so the filter tracks them closely.
  double camera_confidence_scale = 0.25;
  Vector15 initial_cov_diag = (Vector15() << 0.25, 0.25, 0.25, 1e-2, 1e-2, 1e-2,
                               1e-2, 1e-2, 1e-2, 1e-3, 1e-3, 1e-3, 1e-2, 1e-2, 1e-2)
                                  .finished();
};

struct InnovationStats {
  double nis = 0.0;  // innovation squared, S-normalized
  int dim = 0;
};

/// Normalized estimation error squared against ground truth, over a chosen
/// sub-state. Angle residuals are wrapped.
inline double nees(const Vector15& estimate, const Matrix15& cov, const Vector15& truth,
                   const std::vector<int>& indices) {
  int n = static_cast<int>(indices.size());
  Eigen::VectorXd err(n);
  Eigen::MatrixXd p(n, n);
  for (int i = 0; i < n; ++i) {
    double e = estimate(indices[i]) - truth(indices[i]);
    if (indices[i] == SROLL || indices[i] == SPITCH || indices[i] == SYAW)
      e = wrap_angle(e);
    err(i) = e;
    for (int j = 0; j < n; ++j) p(i, j) = cov(indices[i], indices[j]);
  }
  return err.dot(p.ldlt().solve(err));
}

inline double nees(const EkfState15& estimate, const Matrix15& cov,
                   const Vector15& truth) {
  std::vector<int> all(kStateDim);
  for (int i = 0; i < kStateDim; ++i) all[i] = i;
  return nees(estimate.x, cov, truth, all);
}

/// Vertical separation of the vehicle and the station from their known
/// depths; feeds the homing filter when USBL depth is unusable.
inline double derive_vertical_offset(double rov_depth_m, double station_depth_m) {
  return station_depth_m - rov_depth_m;
}

/// The extended Kalman filter of the navigation stack. Joseph-form updates
/// with explicit symmetrization keep the covariance SPD; innovations on
/// angle components are wrapped across the +-pi seam.
class Ekf {
 public:
  explicit Ekf(const EkfConfig& cfg = {}) : cfg_(cfg) {
    cov_ = cfg.initial_cov_diag.asDiagonal();
  }

  void init(const Vector15& x0, double t0) {
    state_.x = x0;
    state_.wrap_angles();
    cov_ = cfg_.initial_cov_diag.asDiagonal();
    last_t_ = t0;
    initialized_ = true;
  }

  bool initialized() const { return initialized_; }
  const EkfState15& state() const { return state_; }
  const Matrix15& covariance() const { return cov_; }
  double last_time() const { return last_t_; }
  int dropped_packets() const { return dropped_; }
  const EkfConfig& config() const { return cfg_; }

  void predict(double dt) {
    if (!(dt > 0.0 && dt <= 0.5))
      throw Error(ErrorCode::NONFINITE_STATE, "predict: dt outside (0, 0.5]");
    if (!state_.x.allFinite())
      throw Error(ErrorCode::NONFINITE_STATE, "predict: non-finite state");
    Matrix15 f = ekf_jacobian(state_.x, dt);
    state_.x = ekf_predict_state(state_.x, dt);
    cov_ = f * cov_ * f.transpose() + process_noise(dt);
    symmetrize();
    last_t_ += dt;
  }

  /// Out-of-sequence packets are dropped (counted, no retrodiction).
  std::optional<InnovationStats> update(const MeasurementPacket& packet) {
    if (packet.t < last_t_ - 1e-9) {
      ++dropped_;
      return std::nullopt;
    }
    return std::visit([&](const auto& m) { return apply(m); }, packet.data);
  }

 private:
  Matrix15 process_noise(double dt) const {
    Vector15 q;
    q << cfg_.q_pos, cfg_.q_pos, cfg_.q_pos, cfg_.q_ang, cfg_.q_ang, cfg_.q_ang,
        cfg_.q_vel, cfg_.q_vel, cfg_.q_vel, cfg_.q_rate, cfg_.q_rate, cfg_.q_rate,
        cfg_.q_accel, cfg_.q_accel, cfg_.q_accel;
    return (q * dt).asDiagonal();
  }

  void symmetrize() { cov_ = 0.5 * (cov_ + cov_.transpose()).eval(); }

  InnovationStats generic_update(const Eigen::VectorXd& innovation,
                                 const Eigen::MatrixXd& h, const Eigen::MatrixXd& r,
                                 const std::vector<int>& angle_rows) {
    Eigen::MatrixXd s = h * cov_ * h.transpose() + r;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(s);
    if (ldlt.info() != Eigen::Success || !s.allFinite() ||
        (ldlt.vectorD().array() <= 0.0).any())
      throw Error(ErrorCode::SINGULAR_INNOVATION, "innovation covariance not SPD");

    Eigen::MatrixXd k = cov_ * h.transpose() * ldlt.solve(
        Eigen::MatrixXd::Identity(s.rows(), s.cols()));
    state_.x += k * innovation;
    state_.wrap_angles();
    Matrix15 ikh = Matrix15::Identity() - k * h;
    cov_ = ikh * cov_ * ikh.transpose() + k * r * k.transpose();
    symmetrize();

    InnovationStats stats;
    stats.dim = static_cast<int>(innovation.size());
    stats.nis = innovation.dot(ldlt.solve(innovation));
    (void)angle_rows;
    return stats;
  }

  InnovationStats apply(const MarkerPosePacket& m) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(6, kStateDim);
    h.block<6, 6>(0, 0).setIdentity();
    Eigen::VectorXd innov(6);
    for (int i = 0; i < 3; ++i) innov(i) = m.pose(i) - state_.x(SX + i);
    for (int i = 3; i < 6; ++i) innov(i) = wrap_angle(m.pose(i) - state_.x(SX + i));
    Eigen::MatrixXd r = m.cov * cfg_.camera_confidence_scale;
    return generic_update(innov, h, r, {3, 4, 5});
  }

  InnovationStats apply(const DvlPacket& m) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3, kStateDim);
    h.block<3, 3>(0, SU).setIdentity();
    Eigen::VectorXd innov = m.vel_body - state_.x.segment<3>(SU);
    return generic_update(innov, h, m.cov, {});
  }

  InnovationStats apply(const ImuPacket& m) {
    bool use_heading = m.heading.has_value() && cfg_.compass_enabled;
    int dim = use_heading ? 7 : 6;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, kStateDim);
    Eigen::VectorXd innov(dim);
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(dim, dim);
    h.block<3, 3>(0, SP).setIdentity();
    h.block<3, 3>(3, SAX).setIdentity();
    innov.segment<3>(0) = m.rates - state_.x.segment<3>(SP);
    innov.segment<3>(3) = m.accel - state_.x.segment<3>(SAX);
    r.block<3, 3>(0, 0) = m.rates_cov;
    r.block<3, 3>(3, 3) = m.accel_cov;
    std::vector<int> angle_rows;
    if (use_heading) {
      h(6, SYAW) = 1.0;
      innov(6) = wrap_angle(*m.heading - state_.x(SYAW));
      r(6, 6) = m.heading_var;
      angle_rows.push_back(6);
    }
    return generic_update(innov, h, r, angle_rows);
  }

  InnovationStats apply(const DepthPacket& m) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(1, kStateDim);
    h(0, SZ) = 1.0;
    Eigen::VectorXd innov(1);
    innov(0) = m.z - state_.x(SZ);
    Eigen::MatrixXd r(1, 1);
    r(0, 0) = m.var;
    return generic_update(innov, h, r, {});
  }

  InnovationStats apply(const UsblPositionPacket& m) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2, kStateDim);
    h(0, SX) = 1.0;
    h(1, SY) = 1.0;
    Eigen::VectorXd innov = m.ne - state_.x.segment<2>(SX);
    return generic_update(innov, h, m.cov, {});
  }

  EkfConfig cfg_;
  EkfState15 state_;
  Matrix15 cov_{Matrix15::Identity()};
  double last_t_ = 0.0;
  bool initialized_ = false;
  int dropped_ = 0;
};

}  // namespace rovdock
