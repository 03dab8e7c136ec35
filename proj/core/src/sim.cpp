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

#include "iowbc/sim.hpp"

#include <cmath>

namespace iowbc {

namespace {

constexpr double kDivergenceSpeed = 1e4;

/// Penalty normal with damping, clamped to pushing only, plus regularized
/// Coulomb friction against the slip velocity.
inline Vec2 ground_force(double pen, double pen_rate, double slip_vx, double mu,
                         const ContactParams& c) {
  double fn = c.ground_stiffness * pen + c.ground_damping * pen_rate;
  if (fn < 0) fn = 0;
  const double ft = -mu * fn * std::tanh(slip_vx / c.v_eps);
  return Vec2(ft, fn);
}

inline Vec2 point_on_object(const ObjectState& o, const Mat2& r, const Vec2& local_from_center) {
  return o.pos + r * (local_from_center - o.com_offset);
}

inline Vec2 object_point_velocity(const ObjectState& o, const Vec2& world_pt) {
  return o.vel + o.pitch_rate * perp(world_pt - o.pos);
}

}  // namespace

void compute_contacts(const RobotModel& model, const FkResult& fk,
                      const std::vector<double>& link_w, const std::vector<Vec2>& link_v,
                      const WorldState& w, const SimParams& p, ContactEval* out) {
  const ContactParams& cp = p.contact;
  out->on_robot.clear();
  out->object_force.setZero();
  out->object_torque = 0;
  out->grasp_force_on_wrist.setZero();
  out->grasp_force_on_object.setZero();
  out->partner_force.setZero();
  out->grasp_broke = false;
  out->foot_contact = {false, false};
  out->foot_normal_force = {0, 0};
  out->ground_force_on_robot.setZero();
  out->slip_speed_sum = 0;
  out->slip_samples = 0;
  out->dampers.clear();

  for (int f = 0; f < 2; ++f) {
    const int li = model.foot_links[f];
    if (li < 0) continue;
    for (const double sx : {-model.foot_half_length, model.foot_half_length}) {
      const Vec2 local(sx, -model.foot_drop);
      const Vec2 pt = fk.p[li] + fk.R[li] * local;
      const double pen = -pt.y();
      if (pen <= 0) continue;
      const Vec2 v = link_v[li] + link_w[li] * perp(pt - fk.p[li]);
      const Vec2 force = ground_force(pen, -v.y(), v.x(), cp.mu_robot, cp);
      if (force.y() > 0) {
        out->foot_contact[f] = true;
        out->foot_normal_force[f] += force.y();
        const double th = std::tanh(v.x() / cp.v_eps);
        out->dampers.push_back(
            {li, pt, cp.mu_robot * force.y() * (1.0 - th * th) / cp.v_eps, cp.ground_damping});
      }
      out->ground_force_on_robot += force;
      out->slip_speed_sum += std::abs(v.x());
      ++out->slip_samples;
      out->on_robot.push_back({li, pt, force});
    }
  }

  if (!w.has_object) return;
  const ObjectState& o = w.object;
  const Mat2 ro = rot(o.pitch);

  for (const double sx : {-o.half_extents.x(), o.half_extents.x()}) {
    const Vec2 pt = point_on_object(o, ro, Vec2(sx, -o.half_extents.y()));
    const double pen = -pt.y();
    if (pen <= 0) continue;
    const Vec2 v = object_point_velocity(o, pt);
    const Vec2 force = ground_force(pen, -v.y(), v.x(), cp.mu_object_ground, cp);
    out->object_force += force;
    out->object_torque += moment(pt - o.pos, force);
  }

  if (w.grasp_attached && model.wrist_link >= 0) {
    const int wl = model.wrist_link;
    const Vec2 pw = fk.wrist_pos;
    const Vec2 vw = link_v[wl] + link_w[wl] * perp(pw - fk.p[wl]);
    const Vec2 pa = point_on_object(o, ro, o.grasp_offset);
    const Vec2 va = object_point_velocity(o, pa);
    const Vec2 d = pa - pw;
    if (d.norm() > cp.grasp_break_distance) {
      out->grasp_broke = true;
    } else {
      Vec2 f_obj = -(cp.grasp_stiffness * d + cp.grasp_damping * (va - vw));
      // Shear cap: the hands can only carry tangential load up to friction
      // against the squeeze (normal component into the object plus preload).
      if (o.grasp_offset.norm() > 1e-9) {
        const Vec2 n = ro * (-o.grasp_offset.normalized());
        const double fn = f_obj.dot(n);
        const Vec2 ft = f_obj - fn * n;
        const double cap = cp.mu_grasp * (std::max(fn, 0.0) + cp.grip_preload);
        const double ft_norm = ft.norm();
        if (ft_norm > cap) f_obj = fn * n + ft * (cap / ft_norm);
      }
      out->grasp_force_on_object = f_obj;
      out->grasp_force_on_wrist = -f_obj;
      out->on_robot.push_back({wl, pw, -f_obj});
      out->dampers.push_back({wl, pw, cp.grasp_damping, cp.grasp_damping});
      out->object_force += f_obj;
      out->object_torque += moment(pa - o.pos, f_obj);
    }
  }

  {
    const PartnerModel& pm = p.partner;
    const Vec2 ph = point_on_object(o, ro, o.handle_offset);
    Vec2 f = Vec2::Zero();
    switch (pm.mode) {
      case PartnerMode::kLoadShare:
        f = Vec2(0, pm.share * o.mass * model.gravity);
        break;
      case PartnerMode::kImpedance: {
        const Vec2 ref(w.partner_ref_x, w.partner_ref_z);
        f = pm.stiffness * (ref - ph) - pm.damping * object_point_velocity(o, ph);
        break;
      }
      case PartnerMode::kDisturbanceSine:
        f = Vec2(pm.sine_amplitude * std::sin(2 * kPi * w.time / pm.sine_period),
                 pm.share * o.mass * model.gravity);
        break;
    }
    const double fn = f.norm();
    if (fn > pm.force_cap) f *= pm.force_cap / fn;
    out->partner_force = f;
    out->object_force += f;
    out->object_torque += moment(ph - o.pos, f);
  }

  // Evaluation pushes and training perturbations land at the com itself, so
  // they feed the force balance without a moment.
  out->object_force += w.impulse.force;
}

Sim::Sim(const RobotModel& model) : model_(&model), dyn_(model) {
  tau_flat_.setZero(model.nq() - 3);
  q_.setZero(model.nq());
  qd_.setZero(model.nq());
  qd_pred_.setZero(model.nq());
  a0_.qdd.setZero(model.nq());
  a1_.qdd.setZero(model.nq());
  cached_.qdd.setZero(model.nq());
}

namespace {

void pack_state(const RobotModel& m, const GeneralizedState& s, VecX* q, VecX* qd) {
  (*q)[0] = s.base_pos.x();
  (*q)[1] = s.base_pos.y();
  (*q)[2] = s.base_pitch;
  for (int k = 0; k < m.n_s; ++k) (*q)[m.dof_of_link[m.support_links[k]]] = s.theta_s[k];
  for (int k = 0; k < m.n_i; ++k) (*q)[m.dof_of_link[m.interaction_links[k]]] = s.theta_i[k];
  *qd = s.qd;
}

void unpack_state(const RobotModel& m, const VecX& q, const VecX& qd, GeneralizedState* s) {
  s->base_pos = Vec2(q[0], q[1]);
  s->base_pitch = q[2];
  for (int k = 0; k < m.n_s; ++k) s->theta_s[k] = q[m.dof_of_link[m.support_links[k]]];
  for (int k = 0; k < m.n_i; ++k) s->theta_i[k] = q[m.dof_of_link[m.interaction_links[k]]];
  s->qd = qd;
}

}  // namespace

void Sim::eval_accel(WorldState* w, const VecX& q, const VecX& qd, bool pd_mode, const VecX& in_s,
                     const VecX& in_i, const SimParams& p, double dt, bool apply_events,
                     TickReport* report, Accel* out) {
  const RobotModel& m = *model_;
  forward_kinematics(m, q, &fk_);
  link_origin_velocities(m, fk_, qd, &w_, &v_);
  compute_contacts(m, fk_, w_, v_, *w, p, &contacts_);

  if (apply_events) {
    if (contacts_.grasp_broke) {
      w->grasp_attached = false;
      w->grasp_broken_at = w->time;
    }
    w->foot_contact = contacts_.foot_contact;
    w->grasp_force_on_object = contacts_.grasp_force_on_object;
    w->partner_force = contacts_.partner_force;
  }
  if (report) {
    const double res = (contacts_.grasp_force_on_wrist + contacts_.grasp_force_on_object).norm();
    if (res > report->max_grasp_residual) report->max_grasp_residual = res;
    report->ground_force_mean += contacts_.ground_force_on_robot;
    if (contacts_.slip_samples > 0) {
      report->slip_speed_mean += contacts_.slip_speed_sum / contacts_.slip_samples;
    }
  }

  // Every velocity-feedback gain acting at the current operating point is
  // collected so the solver can treat it implicitly; a clamped PD torque has
  // no velocity dependence and contributes nothing.
  DynOptions opt;
  opt.lock_base = p.lock_base;
  damping_.setZero(m.nq());
  for (int i = 1; i < m.n_links(); ++i) {
    const Link& l = m.links[i];
    const int d = m.dof_of_link[i];
    damping_[d] = l.damping;
    if (q[d] < l.limit_lo || q[d] > l.limit_hi) damping_[d] += opt.limit_stop_kd;
  }

  auto actuated_torque = [&](const Link& l, int d, double in) {
    if (!pd_mode) return clampd(in, -l.torque_limit, l.torque_limit);
    const double raw = p.pd_gain_scale * (l.kp * (in - q[d]) - l.kd * qd[d]);
    if (std::abs(raw) < l.torque_limit) damping_[d] += p.pd_gain_scale * l.kd;
    return clampd(raw, -l.torque_limit, l.torque_limit);
  };
  for (int k = 0; k < m.n_s; ++k) {
    const int li = m.support_links[k];
    const int d = m.dof_of_link[li];
    tau_flat_[d - 3] = actuated_torque(m.links[li], d, in_s[k]);
  }
  for (int k = 0; k < m.n_i; ++k) {
    const int li = m.interaction_links[k];
    const int d = m.dof_of_link[li];
    tau_flat_[d - 3] = actuated_torque(m.links[li], d, in_i[k]);
  }
  if (report) {
    double pw = 0;
    for (int d = 3; d < m.nq(); ++d) pw += std::max(0.0, tau_flat_[d - 3] * qd[d]);
    report->power_positive += pw;
    report->tau_s_applied.resize(m.n_s);
    for (int k = 0; k < m.n_s; ++k) {
      report->tau_s_applied[k] = tau_flat_[m.dof_of_link[m.support_links[k]] - 3];
    }
  }

  if (p.freeze_robot) {
    out->qdd.setZero(m.nq());
  } else {
    opt.implicit_damping = &damping_;
    opt.point_dampers = &contacts_.dampers;
    opt.implicit_dt = dt;
    dyn_.forward(q, qd, tau_flat_, contacts_.on_robot, opt, &out->qdd);
  }
  if (w->has_object) {
    const ObjectState& o = w->object;
    out->obj_acc = contacts_.object_force / o.mass + Vec2(0, -m.gravity);
    out->obj_alpha = contacts_.object_torque / o.inertia;
  } else {
    out->obj_acc.setZero();
    out->obj_alpha = 0;
  }
}

namespace {

bool same_vec(const VecX& a, const VecX& b) {
  return a.size() == b.size() && (a.array() == b.array()).all();
}

bool same_vec2(const Vec2& a, const Vec2& b) { return a.x() == b.x() && a.y() == b.y(); }

bool same_contact(const ContactParams& a, const ContactParams& b) {
  return a.ground_stiffness == b.ground_stiffness && a.ground_damping == b.ground_damping &&
         a.mu_robot == b.mu_robot && a.mu_object_ground == b.mu_object_ground &&
         a.mu_grasp == b.mu_grasp && a.v_eps == b.v_eps &&
         a.grasp_stiffness == b.grasp_stiffness && a.grasp_damping == b.grasp_damping &&
         a.grasp_break_distance == b.grasp_break_distance && a.grip_preload == b.grip_preload;
}

bool same_partner(const PartnerModel& a, const PartnerModel& b) {
  return a.mode == b.mode && a.share == b.share && a.stiffness == b.stiffness &&
         a.damping == b.damping && a.force_cap == b.force_cap &&
         a.sine_amplitude == b.sine_amplitude && a.sine_period == b.sine_period;
}

bool same_object(const ObjectState& a, const ObjectState& b) {
  return same_vec2(a.pos, b.pos) && a.pitch == b.pitch && same_vec2(a.vel, b.vel) &&
         a.pitch_rate == b.pitch_rate && a.mass == b.mass && a.inertia == b.inertia &&
         same_vec2(a.half_extents, b.half_extents) && same_vec2(a.com_offset, b.com_offset) &&
         same_vec2(a.grasp_offset, b.grasp_offset) && same_vec2(a.handle_offset, b.handle_offset);
}

}  // namespace

bool Sim::cache_matches(const WorldState& w, const VecX& q, const VecX& qd, bool pd_mode,
                        const VecX& in_s, const VecX& in_i, const SimParams& p,
                        double dt) const {
  if (!cache_valid_ || pd_mode != ck_pd_mode_ || dt != ck_dt_) return false;
  if (!same_vec(q, ck_q_) || !same_vec(qd, ck_qd_)) return false;
  if (!same_vec(in_s, ck_in_s_) || !same_vec(in_i, ck_in_i_)) return false;
  if (w.has_object != ck_world_.has_object || w.grasp_attached != ck_world_.grasp_attached) {
    return false;
  }
  if (w.has_object && !same_object(w.object, ck_world_.object)) return false;
  if (!same_vec2(w.impulse.force, ck_world_.impulse.force)) return false;
  if (w.time != ck_world_.time || w.partner_ref_x != ck_world_.partner_ref_x ||
      w.partner_ref_z != ck_world_.partner_ref_z) {
    return false;
  }
  if (p.freeze_robot != ck_params_.freeze_robot || p.lock_base != ck_params_.lock_base ||
      p.pd_gain_scale != ck_params_.pd_gain_scale) {
    return false;
  }
  return same_contact(p.contact, ck_params_.contact) &&
         same_partner(p.partner, ck_params_.partner);
}

void Sim::remember(const WorldState& w, const VecX& q, const VecX& qd, bool pd_mode,
                   const VecX& in_s, const VecX& in_i, const SimParams& p, double dt) {
  cached_ = a1_;
  ck_q_ = q;
  ck_qd_ = qd;
  ck_in_s_ = in_s;
  ck_in_i_ = in_i;
  ck_pd_mode_ = pd_mode;
  ck_dt_ = dt;
  ck_world_ = w;
  ck_params_ = p;
  cache_valid_ = true;
}

void Sim::substep(WorldState* w, const VecX& tau_s, const VecX& tau_i, bool pd_mode,
                  const VecX& target_s, const VecX& target_i, double cmd_vx, const SimParams& p,
                  double dt, TickReport* report) {
  const RobotModel& m = *model_;
  pack_state(m, w->robot, &q_, &qd_);
  const VecX& in_s = pd_mode ? target_s : tau_s;
  const VecX& in_i = pd_mode ? target_i : tau_i;

  // Velocity Verlet. The opening acceleration is the previous substep's
  // closing evaluation whenever the state and inputs are unchanged, which
  // holds throughout a tick; the closing evaluation then reuses the drift's
  // velocity prediction, the usual compromise for damping and friction
  // terms. Free flight integrates exactly and conservative joint motion
  // keeps bounded energy error.
  if (cache_matches(*w, q_, qd_, pd_mode, in_s, in_i, p, dt)) {
    a0_ = cached_;
  } else {
    eval_accel(w, q_, qd_, pd_mode, in_s, in_i, p, dt, false, nullptr, &a0_);
  }

  const double half_dt2 = 0.5 * dt * dt;
  if (!p.freeze_robot) {
    q_ += dt * qd_ + half_dt2 * a0_.qdd;
    qd_pred_ = qd_ + dt * a0_.qdd;
  } else {
    qd_pred_ = qd_;
  }
  Vec2 obj_vel0 = Vec2::Zero();
  double obj_rate0 = 0;
  if (w->has_object) {
    ObjectState& o = w->object;
    obj_vel0 = o.vel;
    obj_rate0 = o.pitch_rate;
    o.pos += dt * o.vel + half_dt2 * a0_.obj_acc;
    o.pitch += dt * o.pitch_rate + half_dt2 * a0_.obj_alpha;
    o.vel += dt * a0_.obj_acc;
    o.pitch_rate += dt * a0_.obj_alpha;
  }
  if (p.partner.mode == PartnerMode::kImpedance) w->partner_ref_x += cmd_vx * dt;
  w->time += dt;

  // The closing evaluation carries the contact bookkeeping and the report
  // samples, one per substep.
  eval_accel(w, q_, qd_pred_, pd_mode, in_s, in_i, p, dt, true, report, &a1_);

  if (!p.freeze_robot) {
    qd_ += dt * 0.5 * (a0_.qdd + a1_.qdd);
    unpack_state(m, q_, qd_, &w->robot);
  }
  if (w->has_object) {
    ObjectState& o = w->object;
    o.vel = obj_vel0 + dt * 0.5 * (a0_.obj_acc + a1_.obj_acc);
    o.pitch_rate = obj_rate0 + dt * 0.5 * (a0_.obj_alpha + a1_.obj_alpha);
  }
  remember(*w, q_, qd_, pd_mode, in_s, in_i, p, dt);
}

void Sim::step(WorldState* w, const VecX& tau_s, const VecX& tau_i, const SimParams& p,
               double dt) {
  WorldState before = *w;
  if (!w->robot.finite() || (w->has_object && !w->object.finite())) {
    throw SimDivergedError(std::move(before));
  }
  try {
    substep(w, tau_s, tau_i, false, tau_s, tau_i, 0, p, dt, nullptr);
  } catch (const NumericError&) {
    throw SimDivergedError(std::move(before));
  }
  if (!w->robot.finite() || !w->robot.qd.allFinite() || w->robot.qd.norm() > kDivergenceSpeed ||
      (w->has_object && !w->object.finite())) {
    throw SimDivergedError(std::move(before));
  }
}

Sim::TickReport Sim::tick(WorldState* w, const VecX& target_s, const VecX& target_i,
                          double cmd_vx, const SimParams& p, RngStream* rng) {
  WorldState before = *w;
  if (!w->robot.finite() || (w->has_object && !w->object.finite())) {
    throw SimDivergedError(std::move(before));
  }
  if (rng) advance_impulse(&w->impulse, p.impulses, rng, w->time);

  TickReport report;
  try {
    for (int k = 0; k < p.substeps; ++k) {
      substep(w, target_s, target_i, true, target_s, target_i, cmd_vx, p, p.dt_physics, &report);
    }
  } catch (const NumericError&) {
    throw SimDivergedError(std::move(before));
  }
  if (!w->robot.finite() || w->robot.qd.norm() > kDivergenceSpeed ||
      (w->has_object && !w->object.finite())) {
    throw SimDivergedError(std::move(before));
  }
  report.power_positive /= std::max(1, p.substeps);
  report.ground_force_mean /= std::max(1, p.substeps);
  report.slip_speed_mean /= std::max(1, p.substeps);
  return report;
}

Termination check_termination(const RobotModel& model, const WorldState& w, bool grasp_required,
                              const TerminationLimits& limits) {
  if (std::abs(w.robot.base_pitch) > limits.max_pitch) return Termination::kFell;
  FkResult fk = forward_kinematics(model, w.robot);
  if (com_of(model, fk).position.y() < limits.min_com_height) return Termination::kFell;
  if (grasp_required && !w.grasp_attached && w.grasp_broken_at >= 0 &&
      w.time - w.grasp_broken_at > limits.drop_grace) {
    return Termination::kDroppedObject;
  }
  return Termination::kRunning;
}

double settled_object_height(const ObjectState& o, const ContactParams& c, double gravity) {
  const double pen = o.mass * gravity / (2 * c.ground_stiffness);
  return o.half_extents.y() + o.com_offset.y() - pen;
}

DomainSample randomize(const DomainRanges& r, RngStream* rng) {
  DomainSample s;
  s.mass_scale = rng->uniform(r.mass_scale_lo, r.mass_scale_hi);
  s.mu_robot = rng->uniform(r.mu_robot_lo, r.mu_robot_hi);
  s.mu_object_ground = rng->uniform(r.mu_object_lo, r.mu_object_hi);
  s.mu_grasp = rng->uniform(r.mu_grasp_lo, r.mu_grasp_hi);
  s.com_offset = Vec2(rng->uniform(-r.com_offset_max, r.com_offset_max),
                      rng->uniform(-r.com_offset_max, r.com_offset_max));
  s.latency = rng->uniform_int(0, r.latency_max);
  s.pd_gain_scale = rng->uniform(r.pd_scale_lo, r.pd_scale_hi);
  return s;
}

void advance_impulse(ImpulseState* st, const ImpulseSchedule& sched, RngStream* rng, double t) {
  if (!sched.enabled) {
    st->force.setZero();
    return;
  }
  if (st->end_time < 0) {
    st->next_time = t + rng->uniform(sched.interval_lo, sched.interval_hi);
    st->end_time = 0;
    return;
  }
  if (t >= st->next_time) {
    const double mag = rng->uniform(sched.mag_lo, sched.mag_hi);
    const double ang = rng->uniform(0, 2 * kPi);
    st->force = mag * Vec2(std::cos(ang), std::sin(ang));
    st->end_time = t + sched.duration;
    st->next_time = st->end_time + rng->uniform(sched.interval_lo, sched.interval_hi);
  } else if (t >= st->end_time) {
    st->force.setZero();
  }
}

}  // namespace iowbc
