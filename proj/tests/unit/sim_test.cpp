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
#include "iowbc/sim.hpp"
#include "test_util.hpp"

namespace iowbc {
namespace {

WorldState standing_world(const RobotModel& m, bool with_object = false) {
  WorldState w;
  w.robot = GeneralizedState::neutral(m);
  w.robot.theta_s = m.nominal_s;
  w.robot.theta_i = m.nominal_i;
  settle_base_height(m, &w.robot);
  w.has_object = with_object;
  return w;
}

TEST_SUITE("sim") {

TEST_CASE("ballistic object drop follows the parabola") {
  const RobotModel m = default_model();
  Sim sim(m);
  SimParams p;
  p.freeze_robot = true;
  WorldState w = standing_world(m, true);
  w.object.pos = Vec2(2.0, 3.0);
  w.object.vel = Vec2(0.4, 0.2);
  w.grasp_attached = false;
  const double z0 = w.object.pos.y(), x0 = w.object.pos.x();
  const double vz0 = w.object.vel.y(), vx0 = w.object.vel.x();
  const double dt = 1e-3;
  const VecX tau_s = VecX::Zero(m.n_s), tau_i = VecX::Zero(m.n_i);
  for (int i = 0; i < 1000; ++i) sim.step(&w, tau_s, tau_i, p, dt);
  const double t = 1.0;
  CHECK(std::abs(w.object.pos.y() - (z0 + vz0 * t - 0.5 * 9.81 * t * t)) <= 1e-4);
  CHECK(std::abs(w.object.pos.x() - (x0 + vx0 * t)) <= 1e-6);
  CHECK(std::abs(w.object.vel.y() - (vz0 - 9.81 * t)) <= 1e-6);
}

TEST_CASE("undamped pendulum keeps its energy for five seconds") {
  test::PendulumLink seg;
  seg.length = 0.6;
  seg.mass = 1.0;
  seg.com_drop = 0.3;
  seg.inertia = 0.03;
  seg.damping = 0;
  const RobotModel m = test::pendulum_model({seg});
  Sim sim(m);
  SimParams p;
  p.lock_base = true;
  WorldState w;
  w.robot = GeneralizedState::neutral(m);
  w.robot.base_pos = Vec2(0, 2.0);
  w.robot.theta_s[0] = 1.2;
  w.has_object = false;
  const VecX tau_s = VecX::Zero(1), tau_i = VecX::Zero(0);

  auto energy = [&](const WorldState& ws) {
    const VecX q = flatten_q(m, ws.robot);
    return kinetic_energy(m, q, ws.robot.qd) + potential_energy(m, q);
  };
  const double e0 = energy(w);
  double worst = 0;
  for (int i = 0; i < 5000; ++i) {
    sim.step(&w, tau_s, tau_i, p, 1e-3);
    worst = std::max(worst, std::abs(energy(w) - e0));
  }
  // Energy scale of the swing: amplitude of the potential well traversal.
  const double scale = seg.mass * 9.81 * seg.com_drop * (1 - std::cos(1.2));
  CHECK(worst / scale <= 0.01);
}

TEST_CASE("grasp forces come in exact action-reaction pairs") {
  const RobotModel m = default_model();
  Sim sim(m);
  SimParams p;
  WorldState w = standing_world(m, true);
  const FkResult fk = forward_kinematics(m, w.robot);
  w.object.pos = fk.wrist_pos - rot(0.0) * w.object.grasp_offset;
  w.object.pos += Vec2(0.01, -0.02);  // preload the spring
  w.grasp_attached = true;
  RngStream rng(21, 3);
  VecX target_s = m.nominal_s, target_i = m.nominal_i;
  for (int tick = 0; tick < 50; ++tick) {
    for (int j = 0; j < m.n_s; ++j) target_s[j] = m.nominal_s[j] + 0.2 * rng.normal();
    for (int j = 0; j < m.n_i; ++j) target_i[j] = m.nominal_i[j] + 0.2 * rng.normal();
    const Sim::TickReport rep = sim.tick(&w, target_s, target_i, 0.0, p, &rng);
    CHECK(rep.max_grasp_residual <= 1e-12);
    if (!w.grasp_attached) break;
  }
}

TEST_CASE("a resting box stays put for ten seconds") {
  const RobotModel m = default_model();
  Sim sim(m);
  SimParams p;
  p.freeze_robot = true;
  WorldState w = standing_world(m, true);
  w.object.mass = 10;
  w.object.inertia = 0.4;
  w.grasp_attached = false;
  w.object.pos = Vec2(1.5, settled_object_height(w.object, p.contact, m.gravity));
  const Vec2 start = w.object.pos;
  const VecX tau_s = VecX::Zero(m.n_s), tau_i = VecX::Zero(m.n_i);
  for (int i = 0; i < 10000; ++i) sim.step(&w, tau_s, tau_i, p, 1e-3);
  CHECK(std::abs(w.object.pos.x() - start.x()) <= 1e-3);
  CHECK(std::abs(w.object.pos.y() - start.y()) <= 1e-3);
  CHECK(w.object.vel.norm() <= 5e-4);
}

TEST_CASE("settled height balances the box weight") {
  ContactParams cp;
  ObjectState o;
  o.mass = 10;
  const double z = settled_object_height(o, cp, kGravity);
  // Two bottom corners at stiffness k each: penetration solves 2 k p = m g.
  const double expect_pen = o.mass * kGravity / (2 * cp.ground_stiffness);
  const double bottom = z - o.half_extents.y();  // com_offset is zero here
  CHECK(bottom == doctest::Approx(-expect_pen).epsilon(1e-9));
}

TEST_CASE("steady sliding decelerates at mu g") {
  const RobotModel m = default_model();
  Sim sim(m);
  SimParams p;
  p.freeze_robot = true;
  p.contact.mu_object_ground = 0.1;
  WorldState w = standing_world(m, true);
  w.grasp_attached = false;
  w.object.mass = 5;
  w.object.pos = Vec2(2.0, settled_object_height(w.object, p.contact, m.gravity));
  w.object.vel = Vec2(0.8, 0);
  const VecX tau_s = VecX::Zero(m.n_s), tau_i = VecX::Zero(m.n_i);
  // Let the vertical transient settle, then time the 0.7 -> 0.4 m/s window.
  while (w.object.vel.x() > 0.7) sim.step(&w, tau_s, tau_i, p, 1e-3);
  double t0 = w.time;
  while (w.object.vel.x() > 0.4) sim.step(&w, tau_s, tau_i, p, 1e-3);
  const double measured = 0.3 / (w.time - t0);
  CHECK(measured == doctest::Approx(0.1 * 9.81).epsilon(0.01));
}

TEST_CASE("a hovering foot feels no ground force") {
  const RobotModel m = default_model();
  WorldState w = standing_world(m, false);
  w.robot.base_pos.y() += 0.001;
  FkResult fk = forward_kinematics(m, w.robot);
  std::vector<double> lw;
  std::vector<Vec2> lv;
  link_origin_velocities(m, fk, w.robot.qd, &lw, &lv);
  ContactEval ev;
  compute_contacts(m, fk, lw, lv, w, SimParams{}, &ev);
  CHECK(ev.foot_normal_force[0] == 0);
  CHECK(ev.foot_normal_force[1] == 0);
  CHECK_FALSE(ev.foot_contact[0]);
  CHECK_FALSE(ev.foot_contact[1]);
  CHECK(ev.on_robot.empty());
}

TEST_CASE("ground normals push up and friction obeys the cone") {
  const RobotModel m = default_model();
  RngStream rng(22, 3);
  SimParams p;
  for (int trial = 0; trial < 40; ++trial) {
    WorldState w = standing_world(m, false);
    w.robot.base_pos.y() += rng.uniform(-0.004, 0.001);
    w.robot.base_pitch = rng.uniform(-0.05, 0.05);
    for (int i = 0; i < w.robot.qd.size(); ++i) w.robot.qd[i] = 0.3 * rng.normal();
    FkResult fk = forward_kinematics(m, w.robot);
    std::vector<double> lw;
    std::vector<Vec2> lv;
    link_origin_velocities(m, fk, w.robot.qd, &lw, &lv);
    ContactEval ev;
    compute_contacts(m, fk, lw, lv, w, p, &ev);
    for (const ExternalForce& f : ev.on_robot) {
      CHECK(f.force.y() >= 0);
      CHECK(std::abs(f.force.x()) <= p.contact.mu_robot * f.force.y() + 1e-9);
    }
  }
}

TEST_CASE("standing ground force carries the robot weight") {
  const RobotModel m = default_model();
  Sim sim(m);
  SimParams p;
  WorldState w = standing_world(m, false);
  RngStream rng(23, 3);
  Sim::TickReport rep;
  for (int tick = 0; tick < 100; ++tick) {
    rep = sim.tick(&w, m.nominal_s, m.nominal_i, 0.0, p, &rng);
  }
  const double weight = m.total_mass() * m.gravity;
  CHECK(rep.ground_force_mean.y() == doctest::Approx(weight).epsilon(0.01));
  CHECK(std::abs(rep.ground_force_mean.x()) <= 0.02 * weight);
}

TEST_CASE("termination flags falls, drops and the grace window") {
  const RobotModel m = default_model();
  WorldState w = standing_world(m, true);
  w.grasp_attached = true;
  CHECK(check_termination(m, w, true) == Termination::kRunning);

  WorldState tipped = w;
  tipped.robot.base_pitch = 1.5;
  CHECK(check_termination(m, tipped, true) == Termination::kFell);

  WorldState low = w;
  low.robot.base_pos.y() = 0.1;
  CHECK(check_termination(m, low, true) == Termination::kFell);

  WorldState dropped = w;
  dropped.grasp_attached = false;
  dropped.grasp_broken_at = 10.0;
  dropped.time = 10.4;
  CHECK(check_termination(m, dropped, true) == Termination::kRunning);
  dropped.time = 10.6;
  CHECK(check_termination(m, dropped, true) == Termination::kDroppedObject);
  CHECK(check_termination(m, dropped, false) == Termination::kRunning);
}

TEST_CASE("domain randomization respects ranges and the seed") {
  DomainRanges r;
  RngStream rng(24, 3);
  double mean_mu = 0;
  const int n = 100000;
  bool latency_seen[3] = {false, false, false};
  for (int i = 0; i < n; ++i) {
    const DomainSample s = randomize(r, &rng);
    CHECK(s.mass_scale >= 0.5);
    CHECK(s.mass_scale <= 1.5);
    CHECK(s.mu_robot >= 0.5);
    CHECK(s.mu_robot <= 1.2);
    CHECK(s.mu_object_ground >= 0.02);
    CHECK(s.mu_object_ground <= 0.15);
    CHECK(s.mu_grasp >= 1.0);
    CHECK(s.mu_grasp <= 1.5);
    CHECK(std::abs(s.com_offset.x()) <= 0.05);
    CHECK(std::abs(s.com_offset.y()) <= 0.05);
    CHECK(s.latency >= 0);
    CHECK(s.latency <= 2);
    CHECK(s.pd_gain_scale >= 0.9);
    CHECK(s.pd_gain_scale <= 1.1);
    latency_seen[s.latency] = true;
    mean_mu += s.mu_robot;
  }
  mean_mu /= n;
  CHECK(std::abs(mean_mu - 0.85) <= 0.01);
  CHECK(latency_seen[0]);
  CHECK(latency_seen[1]);
  CHECK(latency_seen[2]);

  DomainRanges point;
  point.mass_scale_lo = point.mass_scale_hi = 1.2;
  point.mu_robot_lo = point.mu_robot_hi = 0.77;
  point.mu_object_lo = point.mu_object_hi = 0.05;
  point.mu_grasp_lo = point.mu_grasp_hi = 1.1;
  point.com_offset_max = 0;
  point.latency_max = 0;
  point.pd_scale_lo = point.pd_scale_hi = 1.0;
  const DomainSample s = randomize(point, &rng);
  CHECK(s.mass_scale == doctest::Approx(1.2));
  CHECK(s.mu_robot == doctest::Approx(0.77));
  CHECK(s.com_offset.norm() == 0);
  CHECK(s.latency == 0);

  RngStream a(77, 5), b(77, 5);
  for (int i = 0; i < 100; ++i) {
    const DomainSample sa = randomize(r, &a);
    const DomainSample sb = randomize(r, &b);
    CHECK(sa.mass_scale == sb.mass_scale);
    CHECK(sa.mu_robot == sb.mu_robot);
    CHECK(sa.latency == sb.latency);
  }
}

TEST_CASE("impulse schedule samples inside its ranges") {
  ImpulseSchedule sched;
  sched.enabled = true;
  sched.interval_lo = 2.0;
  sched.interval_hi = 4.0;
  sched.mag_lo = 0.0;
  sched.mag_hi = 40.0;
  sched.duration = 0.1;
  ImpulseState st;
  RngStream rng(25, 3);
  double t = 0;
  double last_start = -1;
  int events = 0;
  advance_impulse(&st, sched, &rng, t);
  double prev_next = st.next_time;
  CHECK(prev_next >= 2.0);
  CHECK(prev_next <= 4.0);
  for (int tick = 0; tick < 4000; ++tick) {
    t = tick * 0.02;
    advance_impulse(&st, sched, &rng, t);
    if (st.end_time > t) {
      CHECK(st.force.norm() <= 40.0 + 1e-12);
      if (last_start != st.end_time - sched.duration) {
        last_start = st.end_time - sched.duration;
        ++events;
        const double gap = st.next_time - last_start;
        CHECK(gap >= 2.0 - 1e-9);
        CHECK(gap <= 4.0 + 1e-9);
      }
    }
  }
  CHECK(events >= 15);
  CHECK(events <= 41);
}

TEST_CASE("divergence raises the dedicated error with the last state") {
  const RobotModel m = default_model();
  Sim sim(m);
  SimParams p;
  WorldState w = standing_world(m, false);
  w.robot.qd[0] = 5e3;
  w.robot.qd[1] = 5e3;
  w.robot.qd[2] = 9e3;
  const VecX tau_s = VecX::Zero(m.n_s), tau_i = VecX::Zero(m.n_i);
  bool threw = false;
  try {
    for (int i = 0; i < 200; ++i) sim.step(&w, tau_s, tau_i, p, 1e-3);
  } catch (const SimDivergedError& e) {
    threw = true;
    CHECK(e.last_valid.robot.finite());
  }
  CHECK(threw);
}

}  // TEST_SUITE

}  // namespace
}  // namespace iowbc
