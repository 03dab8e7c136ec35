// Copyright 2026 The iowbc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>

#include "doctest.h"
#include "iowbc/kinematics.hpp"
#include "test_util.hpp"

namespace iowbc {
namespace {

GeneralizedState random_state(const RobotModel& m, RngStream* rng, double range = 1.0) {
  GeneralizedState s = GeneralizedState::neutral(m);
  s.base_pos = Vec2(rng->uniform(-1, 1), rng->uniform(0.3, 1.2));
  s.base_pitch = rng->uniform(-range, range);
  for (int j = 0; j < m.n_i; ++j) {
    const Link& l = m.links[m.interaction_links[j]];
    s.theta_i[j] = rng->uniform(std::max(l.limit_lo, -range), std::min(l.limit_hi, range));
  }
  for (int j = 0; j < m.n_s; ++j) {
    const Link& l = m.links[m.support_links[j]];
    s.theta_s[j] = rng->uniform(std::max(l.limit_lo, -range), std::min(l.limit_hi, range));
  }
  return s;
}

TEST_SUITE("kinematics") {

TEST_CASE("fk zero posture stacks link offsets") {
  const RobotModel m = default_model();
  GeneralizedState s = GeneralizedState::neutral(m);
  s.theta_i.setZero();
  s.theta_s.setZero();
  s.base_pos = Vec2(0.3, 0.8);
  s.base_pitch = 0;
  const FkResult fk = forward_kinematics(m, s);
  for (int i = 0; i < m.n_links(); ++i) {
    Vec2 expect = s.base_pos;
    for (int j = i; j >= 0; j = m.links[j].parent) expect += m.links[j].offset;
    CHECK((fk.p[i] - expect).norm() <= 1e-14);
    CHECK(std::abs(fk.ang[i]) <= 1e-14);
  }
  Vec2 wrist = s.base_pos + m.wrist_offset;
  for (int j = m.wrist_link; j >= 0; j = m.links[j].parent) wrist += m.links[j].offset;
  CHECK((fk.wrist_pos - wrist).norm() < 1e-15);
}

TEST_CASE("fk is equivariant under base translation") {
  const RobotModel m = default_model();
  RngStream rng(91, 1);
  for (int trial = 0; trial < 20; ++trial) {
    GeneralizedState s = random_state(m, &rng);
    const FkResult fk = forward_kinematics(m, s);
    GeneralizedState t = s;
    const Vec2 shift(rng.uniform(-5, 5), rng.uniform(-5, 5));
    t.base_pos += shift;
    const FkResult fk2 = forward_kinematics(m, t);
    for (int i = 0; i < m.n_links(); ++i) {
      CHECK((fk2.p[i] - fk.p[i] - shift).norm() <= 1e-12);
      CHECK((fk2.com[i] - fk.com[i] - shift).norm() <= 1e-12);
      CHECK(fk2.ang[i] == doctest::Approx(fk.ang[i]).epsilon(1e-14));
    }
    CHECK((fk2.wrist_pos - fk.wrist_pos - shift).norm() <= 1e-12);
  }
}

TEST_CASE("fk matches an independent transform stack") {
  const RobotModel m = default_model();
  RngStream rng(92, 1);
  for (int trial = 0; trial < 50; ++trial) {
    const GeneralizedState s = random_state(m, &rng);
    const VecX q = flatten_q(m, s);
    const FkResult fk = forward_kinematics(m, s);
    for (int i = 0; i < m.n_links(); ++i) {
      const Vec2 origin = test::chain_point_oracle(m, q, i, Vec2::Zero());
      const Vec2 com = test::chain_point_oracle(m, q, i, m.links[i].com);
      CHECK((fk.p[i] - origin).norm() <= 1e-12);
      CHECK((fk.com[i] - com).norm() <= 1e-12);
    }
    const Vec2 wrist = test::chain_point_oracle(m, q, m.wrist_link, m.wrist_offset);
    CHECK((fk.wrist_pos - wrist).norm() <= 1e-12);
  }
}

TEST_CASE("wrist jacobian matches central differences") {
  const RobotModel m = default_model();
  RngStream rng(93, 1);
  const double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    GeneralizedState s = random_state(m, &rng);
    const Eigen::Matrix2Xd J = jacobian_wrist(m, s);
    REQUIRE(J.cols() == m.n_i);
    for (int j = 0; j < m.n_i; ++j) {
      GeneralizedState hi = s, lo = s;
      hi.theta_i[j] += h;
      lo.theta_i[j] -= h;
      const Vec2 fd =
          (forward_kinematics(m, hi).wrist_pos - forward_kinematics(m, lo).wrist_pos) /
          (2 * h);
      const double denom = std::max(1.0, fd.norm());
      CHECK((J.col(j) - fd).norm() / denom <= 1e-5);
    }
  }
}

TEST_CASE("wrist jacobian columns are lever arms") {
  const RobotModel m = default_model();
  GeneralizedState s = GeneralizedState::neutral(m);
  s.theta_i.setZero();
  const FkResult fk = forward_kinematics(m, s);
  const Eigen::Matrix2Xd J = jacobian_wrist(m, s);
  // Column j rotates the wrist about joint j: magnitude = distance to the
  // joint, direction perpendicular to the joint-to-wrist vector.
  const Vec2 shoulder = fk.p[m.interaction_links[0]];
  const Vec2 elbow = fk.p[m.interaction_links[1]];
  const Vec2 r0 = fk.wrist_pos - shoulder;
  const Vec2 r1 = fk.wrist_pos - elbow;
  CHECK(J.col(0).norm() == doctest::Approx(r0.norm()).epsilon(1e-12));
  CHECK(J.col(1).norm() == doctest::Approx(r1.norm()).epsilon(1e-12));
  CHECK(std::abs(J.col(0).dot(r0)) <= 1e-12);
  CHECK(std::abs(J.col(1).dot(r1)) <= 1e-12);
}

TEST_CASE("ik round trip on reachable targets") {
  const RobotModel m = default_model();
  RngStream rng(94, 1);
  int worst_iters = 0;
  for (int trial = 0; trial < 500; ++trial) {
    // Sample a reachable wrist pose from a random arm configuration.
    VecX theta(m.n_i);
    for (int j = 0; j < m.n_i; ++j) {
      const Link& l = m.links[m.interaction_links[j]];
      theta[j] = rng.uniform(l.limit_lo + 0.05, l.limit_hi - 0.05);
    }
    WristTarget target;
    target.x_task_base = fk_arm(m, theta);
    VecX init = m.nominal_i;
    const IkResult res = differential_ik(m, init, target);
    REQUIRE(res.converged);
    CHECK((fk_arm(m, res.theta) - target.position()).norm() <= 1e-4);
    for (int j = 0; j < m.n_i; ++j) {
      const Link& l = m.links[m.interaction_links[j]];
      CHECK(res.theta[j] >= l.limit_lo - 1e-12);
      CHECK(res.theta[j] <= l.limit_hi + 1e-12);
    }
    worst_iters = std::max(worst_iters, res.iters);
  }
  CHECK(worst_iters <= 600);
}

TEST_CASE("ik at the solution returns immediately") {
  const RobotModel m = default_model();
  VecX theta = m.nominal_i;
  WristTarget target;
  target.x_task_base = fk_arm(m, theta);
  const IkResult res = differential_ik(m, theta, target);
  CHECK(res.converged);
  CHECK(res.iters <= 1);
  CHECK((res.theta - theta).norm() <= 1e-12);
}

TEST_CASE("ik reports unreachable targets without throwing") {
  const RobotModel m = default_model();
  double reach = 0;
  for (int j : m.interaction_links) reach += m.links[j].offset.norm();
  reach += m.wrist_offset.norm();
  WristTarget target;
  target.x_task_base = Vec2(10 * reach, 0);
  const IkResult res = differential_ik(m, m.nominal_i, target);
  CHECK_FALSE(res.converged);
  CHECK(res.theta.allFinite());
  for (int j = 0; j < m.n_i; ++j) {
    const Link& l = m.links[m.interaction_links[j]];
    CHECK(res.theta[j] >= l.limit_lo - 1e-12);
    CHECK(res.theta[j] <= l.limit_hi + 1e-12);
  }
}

TEST_CASE("ik rejects non-finite input") {
  const RobotModel m = default_model();
  WristTarget target;
  target.x_task_base = Vec2(std::numeric_limits<double>::quiet_NaN(), 0);
  CHECK_THROWS_AS(differential_ik(m, m.nominal_i, target), ConfigError);
}

TEST_CASE("com of a single body sits at the body com") {
  const RobotModel one = test::single_body_model(2.5, 0.04, Vec2(0.1, -0.2));
  GeneralizedState s = GeneralizedState::neutral(one);
  s.base_pos = Vec2(0.4, 0.9);
  s.base_pitch = 0.3;
  const FkResult fk = forward_kinematics(one, s);
  const ComResult com = com_of(one, fk);
  CHECK(com.mass == doctest::Approx(2.5));
  const Vec2 expect = s.base_pos + rot(s.base_pitch) * Vec2(0.1, -0.2);
  CHECK((com.position - expect).norm() <= 1e-14);
}

TEST_CASE("com matches the mass-weighted sum over links") {
  const RobotModel m = default_model();
  RngStream rng(95, 1);
  for (int trial = 0; trial < 25; ++trial) {
    const GeneralizedState s = random_state(m, &rng);
    const FkResult fk = forward_kinematics(m, s);
    const ComResult com = com_of(m, fk);
    Vec2 num = Vec2::Zero();
    double mass = 0;
    for (int i = 0; i < m.n_links(); ++i) {
      num += m.links[i].mass * fk.com[i];
      mass += m.links[i].mass;
    }
    CHECK(com.mass == doctest::Approx(mass).epsilon(1e-14));
    CHECK((com.position - num / mass).norm() <= 1e-12);
  }
}

TEST_CASE("support interval spans both feet plus the sole length") {
  const RobotModel m = default_model();
  const GeneralizedState s = GeneralizedState::neutral(m);
  const FkResult fk = forward_kinematics(m, s);
  const SupportInterval both = support_polygon(m, fk, {true, true});
  REQUIRE(both.any);
  CHECK(both.lo == doctest::Approx(-0.2).epsilon(1e-12));
  CHECK(both.hi == doctest::Approx(0.2).epsilon(1e-12));

  const SupportInterval left = support_polygon(m, fk, {true, false});
  REQUIRE(left.any);
  const double ankle_x = fk.foot_pos[0].x();
  CHECK(left.lo == doctest::Approx(ankle_x - m.foot_half_length));
  CHECK(left.hi == doctest::Approx(ankle_x + m.foot_half_length));
  CHECK(left.hi - left.lo == doctest::Approx(2 * m.foot_half_length));
}

TEST_CASE("support interval equals the union over contact feet") {
  const RobotModel m = default_model();
  RngStream rng(96, 1);
  for (int trial = 0; trial < 40; ++trial) {
    const GeneralizedState s = random_state(m, &rng, 0.6);
    const FkResult fk = forward_kinematics(m, s);
    const std::array<bool, 2> contacts = {rng.uniform(0, 1) < 0.7, rng.uniform(0, 1) < 0.7};
    const SupportInterval si = support_polygon(m, fk, contacts);
    double lo = 1e30, hi = -1e30;
    bool any = false;
    for (int f = 0; f < 2; ++f) {
      if (!contacts[f]) continue;
      any = true;
      lo = std::min(lo, fk.foot_pos[f].x() - m.foot_half_length);
      hi = std::max(hi, fk.foot_pos[f].x() + m.foot_half_length);
    }
    CHECK(si.any == any);
    if (any) {
      CHECK(si.lo == doctest::Approx(lo).epsilon(1e-12));
      CHECK(si.hi == doctest::Approx(hi).epsilon(1e-12));
    }
  }
}

TEST_CASE("adding a contact never shrinks the support") {
  const RobotModel m = default_model();
  RngStream rng(97, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const GeneralizedState s = random_state(m, &rng, 0.6);
    const FkResult fk = forward_kinematics(m, s);
    const SupportInterval left = support_polygon(m, fk, {true, false});
    const SupportInterval both = support_polygon(m, fk, {true, true});
    CHECK(both.lo <= left.lo + 1e-15);
    CHECK(both.hi >= left.hi - 1e-15);
  }
}

TEST_CASE("no contact yields an empty support") {
  const RobotModel m = default_model();
  const FkResult fk = forward_kinematics(m, GeneralizedState::neutral(m));
  const SupportInterval si = support_polygon(m, fk, {false, false});
  CHECK_FALSE(si.any);
  CHECK_FALSE(si.contains(0.0));
}

TEST_CASE("settle_base_height puts the lowest sole point on the ground") {
  const RobotModel m = default_model();
  RngStream rng(98, 1);
  for (int trial = 0; trial < 20; ++trial) {
    GeneralizedState s = random_state(m, &rng, 0.5);
    settle_base_height(m, &s);
    const FkResult fk = forward_kinematics(m, s);
    double lowest = 1e30;
    for (int f = 0; f < 2; ++f) {
      const int li = m.foot_links[f];
      for (double sx : {-m.foot_half_length, m.foot_half_length}) {
        const Vec2 corner = fk.p[li] + fk.R[li] * Vec2(sx, -m.foot_drop);
        lowest = std::min(lowest, corner.y());
      }
    }
    CHECK(std::abs(lowest) <= 1e-9);
  }
}

}  // TEST_SUITE

}  // namespace
}  // namespace iowbc
