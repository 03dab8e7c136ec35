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

#ifndef IOWBC_SIM_HPP_
#define IOWBC_SIM_HPP_

#include <vector>

#include "iowbc/dynamics.hpp"
#include "iowbc/model.hpp"

namespace iowbc {

/// Free rigid body coupled to the robot through explicit contact and grasp
/// forces. pos/vel track the center of mass; the geometric offsets
/// (half_extents, grasp, handle) are measured from the box center and
/// com_offset converts between the two.
struct ObjectState {
  Vec2 pos = Vec2::Zero();
  double pitch = 0;
  Vec2 vel = Vec2::Zero();
  double pitch_rate = 0;
  double mass = 1.0;
  double inertia = 0.05;
  Vec2 half_extents = Vec2(0.20, 0.15);
  Vec2 com_offset = Vec2::Zero();     /// com relative to box center, object frame
  Vec2 grasp_offset = Vec2(-0.20, 0.05);
  Vec2 handle_offset = Vec2(0.20, 0.05);

  Vec2 center() const { return pos - rot(pitch) * com_offset; }
  bool finite() const {
    return pos.allFinite() && vel.allFinite() && std::isfinite(pitch) &&
           std::isfinite(pitch_rate);
  }
};

struct ContactParams {
  double ground_stiffness = 2e4;   /// N/m
  double ground_damping = 500;     /// N*s/m
  double mu_robot = 0.8;           /// c_f ~ U(0.5, 1.2)
  double mu_object_ground = 0.08;  /// ~ U(0.02, 0.15), near-frictionless casters
  double mu_grasp = 1.25;          /// ~ U(1.0, 1.5)
  double v_eps = 0.01;             /// tanh friction regularization (m/s)
  double grasp_stiffness = 5e3;
  double grasp_damping = 100;
  double grasp_break_distance = 0.15;
  double grip_preload = 60;        /// squeeze allowance for the grasp shear cap (N)
};

enum class PartnerMode { kLoadShare, kImpedance, kDisturbanceSine };

/// Virtual teammate acting on the object's handle. Load-share carries a
/// weight fraction, impedance pulls the handle toward a reference moving at
/// the commanded speed, disturbance-sine is load-share plus a horizontal
/// sinusoid (imperfect-human stand-in for evaluation stress).
struct PartnerModel {
  PartnerMode mode = PartnerMode::kLoadShare;
  double share = 0.5;        /// fraction of object weight
  double stiffness = 150;    /// impedance (N/m)
  double damping = 60;
  double force_cap = 250;
  double sine_amplitude = 0; /// N
  double sine_period = 1.7;  /// s
};

struct ImpulseSchedule {
  bool enabled = false;
  double interval_lo = 2.0;   /// s between impulses ~ U(lo, hi)
  double interval_hi = 4.0;
  double mag_lo = 0.0;        /// N ~ U(lo, hi)
  double mag_hi = 40.0;
  double duration = 0.1;      /// s
};

struct ImpulseState {
  double next_time = 0;
  double end_time = -1;
  Vec2 force = Vec2::Zero();
};

struct SimParams {
  ContactParams contact;
  PartnerModel partner;
  ImpulseSchedule impulses;
  double dt_physics = 1e-3;
  int substeps = 20;          /// per 50 Hz control tick
  double pd_gain_scale = 1.0;
  bool freeze_robot = false;  /// hold the robot rigid (object-only stepping)
  bool lock_base = false;
};

struct WorldState {
  GeneralizedState robot;
  ObjectState object;
  bool has_object = true;
  double time = 0;
  std::uint64_t rng_stream = 0;   /// informational, set by the owning env
  bool grasp_attached = false;
  double grasp_broken_at = -1;    /// time the grasp last broke, -1 while held
  std::array<bool, 2> foot_contact = {false, false};
  Vec2 grasp_force_on_object = Vec2::Zero();
  Vec2 partner_force = Vec2::Zero();
  ImpulseState impulse;
  double partner_ref_x = 0;
  double partner_ref_z = 0;
};

/// Forces from one contact evaluation.
struct ContactEval {
  std::vector<ExternalForce> on_robot;
  Vec2 object_force = Vec2::Zero();     /// net force on the object (no gravity)
  double object_torque = 0;             /// about the object com
  Vec2 grasp_force_on_wrist = Vec2::Zero();
  Vec2 grasp_force_on_object = Vec2::Zero();
  Vec2 partner_force = Vec2::Zero();
  bool grasp_broke = false;
  std::array<bool, 2> foot_contact = {false, false};
  std::array<double, 2> foot_normal_force = {0, 0};
  Vec2 ground_force_on_robot = Vec2::Zero();
  double slip_speed_sum = 0;            /// sum of |v_x| over penetrating sole corners
  int slip_samples = 0;
  std::vector<PointDamper> dampers;     /// force-velocity slopes for the implicit solve
};

/// Joint-position PD with torque clamp.
inline double joint_pd(const Link& l, double target, double theta, double theta_dot,
                       double gain_scale) {
  const double tau = gain_scale * (l.kp * (target - theta) - l.kd * theta_dot);
  return clampd(tau, -l.torque_limit, l.torque_limit);
}

struct SimDivergedError : NumericError {
  explicit SimDivergedError(WorldState last)
      : NumericError("simulation diverged"), last_valid(std::move(last)) {}
  WorldState last_valid;
};

/// Penalty ground contacts (foot soles, object bottom corners), the
/// breakable grasp spring, partner and impulse forces. Pure function of the
/// inputs; the grasp action-reaction pair is exact by construction.
void compute_contacts(const RobotModel& model, const FkResult& fk,
                      const std::vector<double>& link_w, const std::vector<Vec2>& link_v,
                      const WorldState& w, const SimParams& p, ContactEval* out);

class Sim {
 public:
  explicit Sim(const RobotModel& model);

  /// One physics substep at constant joint torques.
  void step(WorldState* w, const VecX& tau_s, const VecX& tau_i, const SimParams& p, double dt);

  struct TickReport {
    double power_positive = 0;        /// mean over substeps of sum_j max(0, tau_j qd_j)
    double max_grasp_residual = 0;    /// |f_wrist + f_object| worst case
    VecX tau_s_applied;               /// last substep, clamped
    Vec2 ground_force_mean = Vec2::Zero();  /// mean total ground force on the robot
    double slip_speed_mean = 0;       /// mean |tangential velocity| over sole contacts
  };

  /// One control tick: PD torques toward the held targets, re-evaluated
  /// every substep, impulse schedule advanced at the tick boundary.
  TickReport tick(WorldState* w, const VecX& target_s, const VecX& target_i, double cmd_vx,
                  const SimParams& p, RngStream* rng);

  const RobotModel& model() const { return *model_; }

 private:
  struct Accel {
    VecX qdd;
    Vec2 obj_acc = Vec2::Zero();
    double obj_alpha = 0;
  };

  void substep(WorldState* w, const VecX& tau_s, const VecX& tau_i, bool pd_mode,
               const VecX& target_s, const VecX& target_i, double cmd_vx, const SimParams& p,
               double dt, TickReport* report);

  /// One force and dynamics evaluation at (q, qd) against w's object state.
  /// apply_events routes the contact bookkeeping (grasp break, contact
  /// flags, report accumulation) back into the world; the silent form only
  /// fills accelerations.
  void eval_accel(WorldState* w, const VecX& q, const VecX& qd, bool pd_mode, const VecX& in_s,
                  const VecX& in_i, const SimParams& p, double dt, bool apply_events,
                  TickReport* report, Accel* out);

  bool cache_matches(const WorldState& w, const VecX& q, const VecX& qd, bool pd_mode,
                     const VecX& in_s, const VecX& in_i, const SimParams& p, double dt) const;
  void remember(const WorldState& w, const VecX& q, const VecX& qd, bool pd_mode,
                const VecX& in_s, const VecX& in_i, const SimParams& p, double dt);

  const RobotModel* model_;
  PlanarDynamics dyn_;
  FkResult fk_;
  std::vector<double> w_;
  std::vector<Vec2> v_;
  ContactEval contacts_;
  VecX tau_flat_;
  VecX damping_;
  VecX q_, qd_, qd_pred_;
  Accel a0_, a1_;

  /// Trailing-evaluation reuse: the closing force evaluation of one substep
  /// doubles as the opening one of the next, keyed on the exact state and
  /// inputs it was stored under, so velocity Verlet still costs a single
  /// dynamics evaluation per substep in steady state. Time-driven force
  /// terms (impulse window edges, partner sine phase, the impedance
  /// reference) are deliberately outside the key; reusing them one substep
  /// stale changes forces by O(dt).
  bool cache_valid_ = false;
  Accel cached_;
  VecX ck_q_, ck_qd_, ck_in_s_, ck_in_i_;
  bool ck_pd_mode_ = false;
  double ck_dt_ = 0;
  WorldState ck_world_;
  SimParams ck_params_;
};

enum class TaskType { kBalance, kLift, kPush };

enum class Termination { kRunning, kFell, kDroppedObject, kDiverged };

struct TerminationLimits {
  double max_pitch = 1.0;        /// rad
  double min_com_height = 0.3;   /// m
  double drop_grace = 0.5;       /// s of broken grasp before "dropped"
};

/// fell: |pitch| or com height beyond the limits. dropped: grasp broken past
/// the grace period while the task carries the object.
Termination check_termination(const RobotModel& model, const WorldState& w, bool grasp_required,
                              const TerminationLimits& limits = {});

/// Com height of a box resting on the penalty ground at static equilibrium.
double settled_object_height(const ObjectState& o, const ContactParams& c, double gravity);

/// Per-episode domain randomization draw (Table of training ranges).
struct DomainRanges {
  double mass_scale_lo = 0.5, mass_scale_hi = 1.5;
  double mu_robot_lo = 0.5, mu_robot_hi = 1.2;
  double mu_object_lo = 0.02, mu_object_hi = 0.15;
  double mu_grasp_lo = 1.0, mu_grasp_hi = 1.5;
  double com_offset_max = 0.05;       /// m, each axis
  int latency_max = 2;                /// control ticks
  double pd_scale_lo = 0.9, pd_scale_hi = 1.1;
};

struct DomainSample {
  double mass_scale = 1;
  double mu_robot = 0.85;
  double mu_object_ground = 0.085;
  double mu_grasp = 1.25;
  Vec2 com_offset = Vec2::Zero();
  int latency = 0;
  double pd_gain_scale = 1;
};

DomainSample randomize(const DomainRanges& r, RngStream* rng);

void advance_impulse(ImpulseState* st, const ImpulseSchedule& sched, RngStream* rng, double t);

}  // namespace iowbc

#endif  // IOWBC_SIM_HPP_
