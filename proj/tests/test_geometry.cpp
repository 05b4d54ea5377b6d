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

#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "rovdock/geometry.hpp"

using namespace rovdock;

namespace {

Pose random_pose(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(-10.0, 10.0);
  std::uniform_real_distribution<double> ang(-M_PI, M_PI);
  return Pose::from_euler({pos(rng), pos(rng), pos(rng)}, ang(rng) * 0.5, ang(rng) * 0.45,
                          ang(rng));
}

}  // namespace

TEST_CASE("compose: identity is neutral") {
  std::mt19937_64 rng(7);
  Pose p = random_pose(rng);
  Pose r = compose(Pose::identity(), p);
  CHECK(r.position.isApprox(p.position, 1e-12));
  CHECK(r.orientation.angularDistance(p.orientation) < 1e-12);
}

TEST_CASE("compose: pose with its inverse gives identity") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100; ++i) {
    Pose p = random_pose(rng);
    Pose r = compose(p, invert(p));
    CHECK(r.position.norm() < 1e-9);
    CHECK(r.orientation.angularDistance(Eigen::Quaterniond::Identity()) < 1e-9);
  }
}

TEST_CASE("compose: translate, yaw 90 deg, translate lands at (1,1,0)") {
  // Hand-computed: Rz(90) maps body-x onto NED East, so the second unit
  // translation contributes (0,1,0) on top of the first (1,0,0).
  Pose t1 = Pose::from_euler({1, 0, 0}, 0, 0, 0);
  Pose yaw = Pose::from_euler({0, 0, 0}, 0, 0, M_PI / 2);
  Pose t2 = Pose::from_euler({1, 0, 0}, 0, 0, 0);
  Pose r = compose(compose(t1, yaw), t2);
  CHECK(r.position.isApprox(Eigen::Vector3d(1, 1, 0), 1e-12));
  CHECK(r.yaw() == Catch::Approx(M_PI / 2));
}

TEST_CASE("invert: identity and pure translation") {
  Pose id = invert(Pose::identity());
  CHECK(id.position.norm() == 0.0);
  CHECK(id.orientation.angularDistance(Eigen::Quaterniond::Identity()) == 0.0);

  Pose t = Pose::from_euler({1, 2, 3}, 0, 0, 0);
  Pose ti = invert(t);
  CHECK(ti.position.isApprox(Eigen::Vector3d(-1, -2, -3), 1e-12));
}

TEST_CASE("compose/invert round-trip over 1e4 seeded poses") {
  std::mt19937_64 rng(42);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    Pose p = random_pose(rng);
    Pose r = compose(p, invert(p));
    worst = std::max(worst, r.position.norm());
    worst =
        std::max(worst, r.orientation.angularDistance(Eigen::Quaterniond::Identity()));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("wrap_angle basics and modular oracle") {
  CHECK(wrap_angle(0.0) == 0.0);
  CHECK(wrap_angle(2.0 * M_PI) == Catch::Approx(0.0).margin(1e-12));
  CHECK(wrap_angle(3.5 * M_PI) == Catch::Approx(-0.5 * M_PI));
  CHECK(wrap_angle(M_PI) == Catch::Approx(M_PI));
  CHECK(wrap_angle(-M_PI) == Catch::Approx(M_PI));

  // Independent oracle: subtract 2*pi*k and compare.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int i = 0; i < 10000; ++i) {
    double a = u(rng);
    double w = wrap_angle(a);
    CHECK(w > -M_PI);
    CHECK(w <= M_PI);
    double k = std::round((a - w) / (2.0 * M_PI));
    CHECK(std::abs(a - w - 2.0 * M_PI * k) < 1e-9);
    CHECK(wrap_angle(w) == Catch::Approx(w));  // idempotent
  }
}

TEST_CASE("euler/quaternion round trip preserves heading away from gimbal lock") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> yaw(-M_PI + 1e-6, M_PI);
  std::uniform_real_distribution<double> pitch(-84.0 * M_PI / 180.0, 84.0 * M_PI / 180.0);
  std::uniform_real_distribution<double> roll(-M_PI + 1e-6, M_PI);
  for (int i = 0; i < 5000; ++i) {
    double r = roll(rng), p = pitch(rng), y = yaw(rng);
    Pose pose = Pose::from_euler({0, 0, 0}, r, p, y);
    CHECK(std::abs(wrap_angle(pose.yaw() - y)) < 1e-9);
    CHECK(std::abs(wrap_angle(pose.roll() - r)) < 1e-9);
    CHECK(std::abs(pose.pitch() - p) < 1e-9);
  }
}

TEST_CASE("frame mismatch is reported") {
  Pose p = Pose::identity(FrameId::STATION);
  CHECK_THROWS_AS(require_frame(p, FrameId::TAG_STAR, "test"), Error);
  try {
    require_frame(p, FrameId::TAG_STAR, "test");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FRAME_MISMATCH);
  }
}
