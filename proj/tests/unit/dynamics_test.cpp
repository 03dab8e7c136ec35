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
#include "iowbc/dynamics.hpp"
#include "test_util.hpp"

namespace iowbc {
namespace {

VecX random_q(const RobotModel& m, RngStream* rng, double range = 0.8) {
  VecX q(m.nq());
  q[0] = rng->uniform(-1, 1);
  q[1] = rng->uniform(0.4, 1.0);
  q[2] = rng->uniform(-range, range);
  for (int i = 0; i < m.n_links(); ++i) {
    const int dof = m.dof_of_link[i];
    if (dof < 3) continue;
    const Link& l = m.links[i];
    q[dof] = rng->uniform(std::max(l.limit_lo + 0.05, -range), std::min(l.limit_hi - 0.05, range));
  }
  return q;
}

VecX random_qd(const RobotModel& m, RngStream* rng, double scale = 1.0) {
  VecX qd(m.nq());
  for (int i = 0; i < m.nq(); ++i) qd[i] = scale * rng->uniform(-1, 1);
  return qd;
}

TEST_SUITE("dynamics") {

TEST_CASE("free fall of a single body is pure translation") {
  const RobotModel m = test::single_body_model(4.0, 0.08, Vec2(0.15, -0.1));
  VecX q = VecX::Zero(3);
  q[1] = 2.0;
  q[2] = 0.7;
  const VecX qd = VecX::Zero(3);
  const VecX qdd = forward_dynamics(m, q, qd, VecX::Zero(0));
  CHECK(std::abs(qdd[0]) <= 1e-12);
  CHECK(qdd[1] == doctest::Approx(-9.81).epsilon(1e-12));
  CHECK(std::abs(qdd[2]) <= 1e-12);
}

TEST_CASE("zero gravity and zero velocity leave the system at rest") {
  RobotModel m = default_model();
  m.gravity = 0;
  RngStream rng(11, 2);
  for (int trial = 0; trial < 10; ++trial) {
    const VecX q = random_q(m, &rng);
    const VecX qdd = forward_dynamics(m, q, VecX::Zero(m.nq()), VecX::Zero(m.nq() - 3));
    CHECK(qdd.norm() <= 1e-10);
  }
}

TEST_CASE("mass matrix is symmetric positive definite") {
  const RobotModel m = default_model();
  PlanarDynamics dyn(m);
  RngStream rng(12, 2);
  for (int trial = 0; trial < 10; ++trial) {
    const VecX q = random_q(m, &rng);
    const MatX M = dyn.mass_matrix(q);
    CHECK((M - M.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
    Eigen::SelfAdjointEigenSolver<MatX> es(M);
    CHECK(es.eigenvalues().minCoeff() > 0);
  }
}

TEST_CASE("mass matrix reproduces the kinetic energy") {
  const RobotModel m = default_model();
  PlanarDynamics dyn(m);
  RngStream rng(13, 2);
  for (int trial = 0; trial < 20; ++trial) {
    const VecX q = random_q(m, &rng);
    const VecX qd = random_qd(m, &rng);
    const MatX M = dyn.mass_matrix(q);
    const double quad = 0.5 * qd.dot(M * qd);
    const double ke = kinetic_energy(m, q, qd);
    CHECK(quad == doctest::Approx(ke).epsilon(1e-10));
  }
}

TEST_CASE("single pendulum matches the textbook equation") {
  test::PendulumLink seg;
  seg.length = 0.5;
  seg.mass = 1.3;
  seg.com_drop = 0.3;
  seg.inertia = 0.02;
  seg.damping = 0.25;
  const RobotModel m = test::pendulum_model({seg});
  DynOptions opt;
  opt.lock_base = true;
  RngStream rng(14, 2);
  for (int trial = 0; trial < 50; ++trial) {
    const double th = rng.uniform(-2.5, 2.5);
    const double thd = rng.uniform(-4, 4);
    const double tau = rng.uniform(-3, 3);
    VecX q = VecX::Zero(4);
    q[1] = 1.5;
    q[3] = th;
    VecX qd = VecX::Zero(4);
    qd[3] = thd;
    VecX tau_v(1);
    tau_v[0] = tau;
    const VecX qdd = forward_dynamics(m, q, qd, tau_v, {}, opt);
    const double denom = seg.inertia + seg.mass * seg.com_drop * seg.com_drop;
    const double expect =
        (tau - seg.mass * 9.81 * seg.com_drop * std::sin(th) - seg.damping * thd) / denom;
    CHECK(qdd[3] == doctest::Approx(expect).epsilon(1e-10));
    CHECK(qdd.head(3).norm() <= 1e-10);
  }
}

TEST_CASE("double pendulum matches the closed-form dynamics") {
  test::PendulumLink s1, s2;
  s1.length = 0.45;
  s1.mass = 1.1;
  s1.com_drop = 0.22;
  s1.inertia = 0.015;
  s2.length = 0.35;
  s2.mass = 0.7;
  s2.com_drop = 0.17;
  s2.inertia = 0.008;
  const RobotModel m = test::pendulum_model({s1, s2});
  DynOptions opt;
  opt.lock_base = true;
  const double g = 9.81;
  const double L1 = s1.length, c1 = s1.com_drop, c2 = s2.com_drop;
  const double m1 = s1.mass, m2 = s2.mass, I1 = s1.inertia, I2 = s2.inertia;
  RngStream rng(15, 2);
  for (int trial = 0; trial < 50; ++trial) {
    const double q1 = rng.uniform(-2.5, 2.5), q2 = rng.uniform(-2.5, 2.5);
    const double q1d = rng.uniform(-3, 3), q2d = rng.uniform(-3, 3);
    const double t1 = rng.uniform(-2, 2), t2 = rng.uniform(-2, 2);

    Mat2 M;
    M(0, 0) = I1 + I2 + m1 * c1 * c1 + m2 * (L1 * L1 + c2 * c2 + 2 * L1 * c2 * std::cos(q2));
    M(0, 1) = I2 + m2 * (c2 * c2 + L1 * c2 * std::cos(q2));
    M(1, 0) = M(0, 1);
    M(1, 1) = I2 + m2 * c2 * c2;
    const double h = m2 * L1 * c2 * std::sin(q2);
    Vec2 cor(-h * (2 * q1d + q2d) * q2d, h * q1d * q1d);
    Vec2 grav(g * (m1 * c1 * std::sin(q1) + m2 * (L1 * std::sin(q1) + c2 * std::sin(q1 + q2))),
              g * m2 * c2 * std::sin(q1 + q2));
    const Vec2 rhs = Vec2(t1, t2) - cor - grav;
    const Vec2 expect = M.ldlt().solve(rhs);

    VecX q = VecX::Zero(5);
    q[1] = 2.0;
    q[3] = q1;
    q[4] = q2;
    VecX qd = VecX::Zero(5);
    qd[3] = q1d;
    qd[4] = q2d;
    VecX tau(2);
    tau << t1, t2;
    const VecX qdd = forward_dynamics(m, q, qd, tau, {}, opt);
    const double scale = std::max(1.0, expect.norm());
    CHECK(std::abs(qdd[3] - expect[0]) / scale <= 1e-8);
    CHECK(std::abs(qdd[4] - expect[1]) / scale <= 1e-8);
  }
}

TEST_CASE("bias at zero velocity is the gravity load") {
  test::PendulumLink s1, s2;
  s1.length = 0.4;
  s1.mass = 0.9;
  s1.com_drop = 0.2;
  s1.inertia = 0.01;
  s2.length = 0.3;
  s2.mass = 0.5;
  s2.com_drop = 0.15;
  s2.inertia = 0.005;
  const RobotModel m = test::pendulum_model({s1, s2});
  PlanarDynamics dyn(m);
  RngStream rng(16, 2);
  for (int trial = 0; trial < 20; ++trial) {
    VecX q = VecX::Zero(5);
    q[1] = 2.0;
    q[3] = rng.uniform(-2, 2);
    q[4] = rng.uniform(-2, 2);
    const VecX bias = dyn.bias_forces(q, VecX::Zero(5));
    const double g = 9.81;
    const double g1 = g * (s1.mass * s1.com_drop * std::sin(q[3]) +
                           s2.mass * (s1.length * std::sin(q[3]) +
                                      s2.com_drop * std::sin(q[3] + q[4])));
    const double g2 = g * s2.mass * s2.com_drop * std::sin(q[3] + q[4]);
    CHECK(bias[3] == doctest::Approx(g1).epsilon(1e-10));
    CHECK(bias[4] == doctest::Approx(g2).epsilon(1e-10));
  }
}

TEST_CASE("free motion conserves linear and angular momentum rates") {
  RobotModel m = default_model();
  m.gravity = 0;
  for (Link& l : m.links) l.damping = 0;
  DynOptions opt;
  opt.limit_stop_kp = 0;
  opt.limit_stop_kd = 0;
  RngStream rng(17, 2);
  const double h = 1e-7;
  for (int trial = 0; trial < 10; ++trial) {
    const VecX q = random_q(m, &rng, 0.5);
    const VecX qd = random_qd(m, &rng, 0.6);
    const VecX qdd = forward_dynamics(m, q, qd, VecX::Zero(m.nq() - 3), {}, opt);

    auto momentum = [&](const VecX& qq, const VecX& qqd) {
      FkResult fk;
      forward_kinematics(m, qq, &fk);
      std::vector<double> w;
      std::vector<Vec2> vo;
      link_origin_velocities(m, fk, qqd, &w, &vo);
      Vec2 lin = Vec2::Zero();
      double ang = 0;
      for (int i = 0; i < m.n_links(); ++i) {
        const Link& l = m.links[i];
        const Vec2 r = fk.com[i] - fk.p[i];
        const Vec2 v = vo[i] + w[i] * perp(r);
        lin += l.mass * v;
        // z-component of r x v in the x-z plane with y toward the viewer
        ang += l.mass * (fk.com[i].y() * v.x() - fk.com[i].x() * v.y()) + l.inertia * w[i];
      }
      return Eigen::Vector3d(lin.x(), lin.y(), ang);
    };

    const Eigen::Vector3d p0 = momentum(q, qd);
    const Eigen::Vector3d p1 = momentum(q + h * qd, qd + h * qdd);
    CHECK(((p1 - p0) / h).cwiseAbs().maxCoeff() <= 1e-5);
  }
}

TEST_CASE("pack_tau places branch torques at their dofs") {
  const RobotModel m = default_model();
  VecX tau_s(m.n_s), tau_i(m.n_i);
  for (int j = 0; j < m.n_s; ++j) tau_s[j] = 100 + j;
  for (int j = 0; j < m.n_i; ++j) tau_i[j] = 200 + j;
  const VecX flat = pack_tau(m, tau_s, tau_i);
  REQUIRE(flat.size() == m.nq() - 3);
  for (int j = 0; j < m.n_s; ++j) {
    CHECK(flat[m.dof_of_link[m.support_links[j]] - 3] == 100 + j);
  }
  for (int j = 0; j < m.n_i; ++j) {
    CHECK(flat[m.dof_of_link[m.interaction_links[j]] - 3] == 200 + j);
  }
}

TEST_CASE("non-finite input is rejected") {
  const RobotModel m = default_model();
  VecX q = VecX::Zero(m.nq());
  q[1] = 0.6;
  q[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(forward_dynamics(m, q, VecX::Zero(m.nq()), VecX::Zero(m.nq() - 3)),
                  NumericError);
}

TEST_CASE("external force on the base matches newton's law") {
  const RobotModel m = test::single_body_model(2.0, 0.03, Vec2::Zero());
  VecX q = VecX::Zero(3);
  q[1] = 1.0;
  ExternalForce f;
  f.link = 0;
  f.point = Vec2(0, 1.0);
  f.force = Vec2(6.0, 2.0 * 9.81);
  const VecX qdd = forward_dynamics(m, q, VecX::Zero(3), VecX::Zero(0), {f});
  CHECK(qdd[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(std::abs(qdd[1]) <= 1e-12);
  CHECK(std::abs(qdd[2]) <= 1e-12);
}

TEST_CASE("external force off the com adds the matching spin") {
  const RobotModel m = test::single_body_model(2.0, 0.04, Vec2::Zero());
  RobotModel weightless = m;
  weightless.gravity = 0;
  VecX q = VecX::Zero(3);
  q[1] = 1.0;
  ExternalForce f;
  f.link = 0;
  f.point = Vec2(0.3, 1.0);  // lever arm +0.3 in x from the com
  f.force = Vec2(0, 5.0);
  const VecX qdd = forward_dynamics(weightless, q, VecX::Zero(3), VecX::Zero(0), {f});
  CHECK(qdd[1] == doctest::Approx(2.5).epsilon(1e-12));
  // torque about com: r x F with the pitch axis convention of perp()
  const double torque = -0.3 * 5.0;
  CHECK(qdd[2] == doctest::Approx(torque / 0.04).epsilon(1e-12));
}

}  // TEST_SUITE

}  // namespace
}  // namespace iowbc
