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

#ifndef IOWBC_AGENT_HPP_
#define IOWBC_AGENT_HPP_

#include <string>
#include <vector>

#include "iowbc/scenario.hpp"
#include "iowbc/sim.hpp"

namespace iowbc {

/// Observation layout. Segments marked delayed are served from a snapshot
/// taken `latency` control ticks in the past; command-side segments are
/// always current. The layout hash guards checkpoints against silent
/// reordering or resizing.
struct ObsSegment {
  std::string name;
  int size = 0;
  bool delayed = false;
};

struct ObsLayout {
  std::vector<ObsSegment> segments;
  int total = 0;
  int state_dim = 0;   /// summed size of the delayed segments
  std::uint64_t hash = 0;
};

ObsLayout obs_layout(const RobotModel& model);

/// The delayed part: base orientation and rates, joint state, object pose
/// and velocity relative to the base. Everything a state estimator would
/// produce, in one vector so snapshots are cheap to keep.
VecX build_state_segment(const RobotModel& model, const WorldState& w, const FkResult& fk);

struct GaitState {
  double phase_left = 0.25;
  double phase_right = 0.25;
  bool frozen = true;
};

/// Open-loop clock: phase = (t / period) mod 1, right leg half a cycle
/// ahead. Commands slower than 0.05 m/s freeze both legs mid-stance.
GaitState gait_phase(double time, double period, double cmd_speed);

/// Assembles the policy observation. `state` is the (possibly stale)
/// vector from build_state_segment.
VecX build_observation(const ObsLayout& layout, const HrcCommand& cmd, const VecX& state,
                       const GaitState& gait, const VecX& a_prev, const VecX& theta_s_ref);

/// Simulator-side quantities the teacher sees and the student must not:
/// object mass, its com offset, the external wrench on the object
/// (partner plus impulse, torque about the object com), the three friction
/// coefficients, and the PD gain scale.
constexpr int kPrivilegedDim = 10;
VecX build_privileged(const RobotModel& model, const WorldState& w, const DomainSample& dom);

std::uint64_t teacher_layout_hash(const ObsLayout& layout);
std::uint64_t student_layout_hash(const ObsLayout& layout, int history);

/// Fixed-length observation history, oldest first. reset() zeroes the ring
/// and stores the first frame, so an episode starts zero-padded.
class HistoryBuffer {
 public:
  HistoryBuffer(int length, int dim);
  void reset(const VecX& obs);
  void push(const VecX& obs);
  void flatten(VecX* out) const;
  int length() const { return length_; }
  int dim() const { return dim_; }

 private:
  int length_, dim_, head_ = 0;
  MatX frames_;   /// dim x length ring
};

/// Residual action head: u in R^{n_s} from the policy, scaled and clamped
/// to a bounded offset around the kinematic reference.
struct ActionResult {
  VecX a;          /// clamped residual, the quantity fed back as a_prev
  VecX target_s;   /// theta_s_ref + a
};

ActionResult apply_action(const RobotModel& model, const VecX& u, const VecX& theta_s_ref);

constexpr double kActionScale = 0.25;
constexpr double kActionClamp = 0.5;

/// Object pose reference captured at reset. x is stored relative to the
/// base so a translating carry is not penalized; z tracks the commanded
/// height for carried objects and stays at the settled height for ground
/// tasks.
struct ObjectRef {
  double rel_x = 0;        /// object center x minus base x at reset
  double carry_dz = 0;     /// object center z minus commanded com height at reset
  double ground_z = 0;     /// settled center height for ground-mode tasks
  double pitch = 0;
  ObjectRefMode mode = ObjectRefMode::kCarry;
};

struct RewardParams {
  double sync_posture_scale = 1.0;     /// exp(-scale * |theta_s - ref|^2)
  double sync_velocity_scale = 1.0;    /// exp(-scale * |v_sys - v_cmd|^2)
  double obj_pose_scale = 5.0;
  double obj_vz_weight = 0.5;
  double accel_weight = 2.5e-7;
  double action_rate_weight = 0.01;
  double power_weight = 2e-5;
  double swing_weight = 0.3;
  double swing_height = 0.08;
  double swing_sigma = 0.03;
  double stance_weight = 0.15;
  double gait_period = 0.7;
};

struct RewardBreakdown {
  double sync = 0;
  double obj = 0;
  double smooth = 0;
  double gate = 0;
  double total = 0;
};

/// Everything the reward needs from one control tick. qd_prev is the
/// generalized velocity at the previous tick (for the acceleration term),
/// power_positive the per-substep mean of positive actuator power.
struct RewardInputs {
  const RobotModel* model = nullptr;
  const WorldState* world = nullptr;
  const FkResult* fk = nullptr;
  HrcCommand cmd;
  VecX theta_s_ref;
  VecX a;
  VecX a_prev;
  VecX qd_prev;
  double dt = 0.02;
  double power_positive = 0;
  GaitState gait;
  ObjectRef obj_ref;
};

/// Mass-weighted linear velocity of robot plus payload.
Vec2 system_velocity(const RobotModel& model, const WorldState& w, const FkResult& fk);

RewardBreakdown reward(const RewardInputs& in, const RewardParams& p = {});

/// Task difficulty schedule. Promotion needs the rolling mean reward to
/// clear the stage threshold for `window` consecutive checks; the stage
/// never moves down.
struct CurriculumConfig {
  double threshold_1 = 1.1;   /// stage 1 -> 2
  double threshold_2 = 1.3;   /// stage 2 -> 3
  int window = 50;
};

struct CurriculumState {
  int stage = 1;
  int streak = 0;
};

bool curriculum_update(const CurriculumConfig& cfg, double mean_reward, CurriculumState* st);

/// Per-stage command and disturbance envelope used when sampling episodes.
struct StageEnvelope {
  double vmax = 0;
  bool impulses = false;
  double mass_lo = 0.5, mass_hi = 1.5;   /// multiplies the scenario object mass
};

StageEnvelope stage_envelope(int stage, const DomainRanges& ranges);

}  // namespace iowbc

#endif  // IOWBC_AGENT_HPP_
