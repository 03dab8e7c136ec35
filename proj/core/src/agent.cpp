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

#include "iowbc/agent.hpp"

#include "iowbc/dynamics.hpp"

namespace iowbc {

ObsLayout obs_layout(const RobotModel& model) {
  const int nj = model.n_i + model.n_s;
  ObsLayout lay;
  lay.segments = {
      {"cmd", 11, false},         {"base_euler", 3, true},  {"base_angvel", 3, true},
      {"q", nj, true},            {"qd", nj, true},         {"phase", 2, false},
      {"a_prev", model.n_s, false}, {"theta_s_ref", model.n_s, false},
      {"obj_pose", 3, true},      {"obj_vel", 3, true},
  };
  std::string desc = "obs";
  for (const ObsSegment& s : lay.segments) {
    lay.total += s.size;
    if (s.delayed) lay.state_dim += s.size;
    desc += "|" + s.name + ":" + std::to_string(s.size) + (s.delayed ? "d" : "");
  }
  lay.hash = fnv1a64(desc);
  return lay;
}

namespace {

Vec2 object_center_velocity(const ObjectState& o) {
  // center = pos + R(pitch) * (-com_offset); differentiating R gives the
  // generator [[0,1],[-1,0]], i.e. perp().
  const Mat2 r = rot(o.pitch);
  return o.vel + o.pitch_rate * perp(r * (-o.com_offset));
}

void joint_slices(const RobotModel& model, const GeneralizedState& s, const VecX& qd_flat,
                  VecX* q_out, VecX* qd_out) {
  const int nj = model.n_i + model.n_s;
  q_out->resize(nj);
  qd_out->resize(nj);
  q_out->head(model.n_i) = s.theta_i;
  q_out->tail(model.n_s) = s.theta_s;
  for (int k = 0; k < model.n_i; ++k) {
    (*qd_out)[k] = qd_flat[model.dof_of_link[model.interaction_links[k]]];
  }
  for (int k = 0; k < model.n_s; ++k) {
    (*qd_out)[model.n_i + k] = qd_flat[model.dof_of_link[model.support_links[k]]];
  }
}

}  // namespace

VecX build_state_segment(const RobotModel& model, const WorldState& w, const FkResult& fk) {
  const int nj = model.n_i + model.n_s;
  VecX out(3 + 3 + nj + nj + 3 + 3);
  const GeneralizedState& s = w.robot;
  out[0] = 0;
  out[1] = s.base_pitch;
  out[2] = 0;
  out[3] = 0;
  out[4] = s.qd[2];
  out[5] = 0;
  VecX q, qd;
  joint_slices(model, s, s.qd, &q, &qd);
  out.segment(6, nj) = q;
  out.segment(6 + nj, nj) = qd;
  if (w.has_object) {
    const Mat2 r_wb = rot(s.base_pitch).transpose();   // world -> base
    const Vec2 center = w.object.center();
    const Vec2 dp = r_wb * (center - s.base_pos);
    const Vec2 dv = r_wb * (object_center_velocity(w.object) - Vec2(s.qd[0], s.qd[1]));
    out.segment(6 + 2 * nj, 3) << dp.x(), dp.y(), w.object.pitch - s.base_pitch;
    out.segment(9 + 2 * nj, 3) << dv.x(), dv.y(), w.object.pitch_rate - s.qd[2];
  } else {
    out.tail(6).setZero();
  }
  (void)fk;
  return out;
}

GaitState gait_phase(double time, double period, double cmd_speed) {
  GaitState g;
  if (std::abs(cmd_speed) < 0.05) {
    g.phase_left = g.phase_right = 0.25;
    g.frozen = true;
    return g;
  }
  const double p = std::fmod(time / period, 1.0);
  g.phase_left = p < 0 ? p + 1.0 : p;
  g.phase_right = std::fmod(g.phase_left + 0.5, 1.0);
  g.frozen = false;
  return g;
}

VecX build_observation(const ObsLayout& layout, const HrcCommand& cmd, const VecX& state,
                       const GaitState& gait, const VecX& a_prev, const VecX& theta_s_ref) {
  if (state.size() != layout.state_dim) throw ConfigError("observation: state segment size");
  const int n_s = static_cast<int>(a_prev.size());
  if (theta_s_ref.size() != n_s) throw ConfigError("observation: reference size");
  VecX obs(layout.total);
  const VecX cv = cmd.to_vector();
  const int robot_state = layout.state_dim - 6;
  int at = 0;
  obs.segment(at, 11) = cv;
  at += 11;
  obs.segment(at, robot_state) = state.head(robot_state);
  at += robot_state;
  obs[at++] = std::sin(2 * kPi * gait.phase_left);
  obs[at++] = std::cos(2 * kPi * gait.phase_left);
  obs.segment(at, n_s) = a_prev;
  at += n_s;
  obs.segment(at, n_s) = theta_s_ref;
  at += n_s;
  obs.segment(at, 6) = state.tail(6);
  at += 6;
  if (at != layout.total) throw ConfigError("observation: layout mismatch");
  return obs;
}

VecX build_privileged(const RobotModel& model, const WorldState& w, const DomainSample& dom) {
  (void)model;
  VecX out(kPrivilegedDim);
  Vec2 wrench = Vec2::Zero();
  double torque = 0;
  double mass = 0;
  Vec2 com_off = Vec2::Zero();
  if (w.has_object) {
    mass = w.object.mass;
    com_off = w.object.com_offset;
    wrench = w.partner_force + w.impulse.force;
    const Vec2 handle_world =
        w.object.pos + rot(w.object.pitch) * (w.object.handle_offset - w.object.com_offset);
    torque = moment(handle_world - w.object.pos, w.partner_force);
  }
  out << mass, com_off.x(), com_off.y(), wrench.x(), wrench.y(), torque, dom.mu_robot,
      dom.mu_object_ground, dom.mu_grasp, dom.pd_gain_scale;
  return out;
}

std::uint64_t teacher_layout_hash(const ObsLayout& layout) {
  return fnv1a64("teacher|" + std::to_string(layout.hash) + "|priv:" +
                 std::to_string(kPrivilegedDim));
}

std::uint64_t student_layout_hash(const ObsLayout& layout, int history) {
  return fnv1a64("student|" + std::to_string(layout.hash) + "|hist:" + std::to_string(history));
}

HistoryBuffer::HistoryBuffer(int length, int dim) : length_(length), dim_(dim) {
  if (length < 1 || dim < 1) throw ConfigError("history buffer: bad shape");
  frames_.setZero(dim, length);
}

void HistoryBuffer::reset(const VecX& obs) {
  if (obs.size() != dim_) throw ConfigError("history buffer: frame size");
  frames_.setZero();
  head_ = 0;
  push(obs);
}

void HistoryBuffer::push(const VecX& obs) {
  if (obs.size() != dim_) throw ConfigError("history buffer: frame size");
  frames_.col(head_) = obs;
  head_ = (head_ + 1) % length_;
}

void HistoryBuffer::flatten(VecX* out) const {
  out->resize(dim_ * length_);
  for (int i = 0; i < length_; ++i) {
    out->segment(i * dim_, dim_) = frames_.col((head_ + i) % length_);
  }
}

ActionResult apply_action(const RobotModel& model, const VecX& u, const VecX& theta_s_ref) {
  if (u.size() != model.n_s || theta_s_ref.size() != model.n_s) {
    throw ConfigError("apply_action: dimension mismatch");
  }
  ActionResult res;
  res.a = (kActionScale * u).cwiseMax(-kActionClamp).cwiseMin(kActionClamp);
  res.target_s = theta_s_ref + res.a;
  return res;
}

Vec2 system_velocity(const RobotModel& model, const WorldState& w, const FkResult& fk) {
  std::vector<double> ang;
  std::vector<Vec2> vo;
  link_origin_velocities(model, fk, w.robot.qd, &ang, &vo);
  Vec2 momentum = Vec2::Zero();
  double mass = 0;
  for (int i = 0; i < model.n_links(); ++i) {
    const Link& l = model.links[i];
    const Vec2 v_com = vo[i] + ang[i] * perp(fk.com[i] - fk.p[i]);
    momentum += l.mass * v_com;
    mass += l.mass;
  }
  if (w.has_object) {
    momentum += w.object.mass * w.object.vel;
    mass += w.object.mass;
  }
  return momentum / mass;
}

RewardBreakdown reward(const RewardInputs& in, const RewardParams& p) {
  const RobotModel& m = *in.model;
  const WorldState& w = *in.world;
  const FkResult& fk = *in.fk;
  RewardBreakdown r;

  const double posture_err = (w.robot.theta_s - in.theta_s_ref).squaredNorm();
  const Vec2 v_sys = system_velocity(m, w, fk);
  const Vec2 v_cmd(in.cmd.v_coll[0], 0.0);
  const double vel_err = (v_sys - v_cmd).squaredNorm();
  r.sync = 0.5 * std::exp(-p.sync_posture_scale * posture_err) +
           0.5 * std::exp(-p.sync_velocity_scale * vel_err);

  if (w.has_object) {
    const Vec2 center = w.object.center();
    const double z_ref = in.obj_ref.mode == ObjectRefMode::kCarry
                             ? in.cmd.sigma_base[0] + in.obj_ref.carry_dz
                             : in.obj_ref.ground_z;
    const double ex = (center.x() - w.robot.base_pos.x()) - in.obj_ref.rel_x;
    const double ez = center.y() - z_ref;
    const double ep = w.object.pitch - in.obj_ref.pitch;
    r.obj = std::exp(-p.obj_pose_scale * (ex * ex + ez * ez + ep * ep)) -
            p.obj_vz_weight * w.object.vel.y() * w.object.vel.y();
  }

  const VecX qdd = (w.robot.qd - in.qd_prev) / in.dt;
  r.smooth = -p.accel_weight * qdd.squaredNorm() -
             p.action_rate_weight * (in.a - in.a_prev).squaredNorm() -
             p.power_weight * in.power_positive;

  const double phases[2] = {in.gait.phase_left, in.gait.phase_right};
  for (int leg = 0; leg < 2; ++leg) {
    const double phi = phases[leg];
    if (phi >= 0.5 && !in.gait.frozen) {
      const Mat2& rf = fk.R[m.foot_links[leg]];
      const Vec2 base = fk.foot_pos[leg];
      const Vec2 c0 = base + rf * Vec2(m.foot_half_length, -m.foot_drop);
      const Vec2 c1 = base + rf * Vec2(-m.foot_half_length, -m.foot_drop);
      const double h = std::min(c0.y(), c1.y());
      const double h_star = p.swing_height * std::sin(kPi * (2 * phi - 1));
      const double e = (h - h_star) / p.swing_sigma;
      r.gate += p.swing_weight * std::exp(-e * e);
    } else {
      r.gate += p.stance_weight * (w.foot_contact[leg] ? 1.0 : 0.0);
    }
  }

  r.total = r.sync + r.obj + r.smooth + r.gate;
  return r;
}

bool curriculum_update(const CurriculumConfig& cfg, double mean_reward, CurriculumState* st) {
  if (st->stage >= 3) return false;
  const double threshold = st->stage == 1 ? cfg.threshold_1 : cfg.threshold_2;
  if (std::isfinite(mean_reward) && mean_reward >= threshold) {
    ++st->streak;
    if (st->streak >= cfg.window) {
      ++st->stage;
      st->streak = 0;
      return true;
    }
  } else {
    st->streak = 0;
  }
  return false;
}

StageEnvelope stage_envelope(int stage, const DomainRanges& ranges) {
  StageEnvelope env;
  env.mass_lo = ranges.mass_scale_lo;
  env.mass_hi = ranges.mass_scale_hi;
  if (stage <= 1) {
    env.vmax = 0;
    env.impulses = false;
  } else if (stage == 2) {
    env.vmax = 0.6;
    env.impulses = true;
  } else {
    env.vmax = 1.0;
    env.impulses = true;
    env.mass_hi = ranges.mass_scale_hi + 1.0;
  }
  return env;
}

}  // namespace iowbc
