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

#ifndef IOWBC_MODEL_HPP_
#define IOWBC_MODEL_HPP_

#include <array>
#include <string>
#include <vector>

#include "iowbc/common.hpp"

namespace iowbc {

enum class JointType { kFloatingBase, kRevolute };

/// Kinematic branch of an actuated joint: arm joints drive the load
/// interaction, leg and waist joints carry the body.
enum class Branch { kBase, kInteraction, kSupport };

struct Link {
  std::string name;
  int parent = -1;               // -1 for the root
  JointType joint = JointType::kRevolute;
  Vec2 offset = Vec2::Zero();    /// joint origin in the parent frame
  double mass = 0;
  Vec2 com = Vec2::Zero();       /// in the link frame
  double inertia = 0;            /// about the com
  double limit_lo = -kPi;
  double limit_hi = kPi;
  double torque_limit = 0;
  double kp = 0;                 ///(N*m/rad) position gain of the joint PD
  double kd = 0;
  double damping = 0;            /// passive viscous damping
  Branch branch = Branch::kSupport;
};

/// Planar sagittal rigid-body tree: one floating base (x, z, pitch) plus
/// revolute pitch joints. The default build is a humanoid reduced to the
/// sagittal plane, legs splayed fore/aft at the stance spacing and the two
/// physical arms merged into a single shoulder-elbow chain on the torso.
class RobotModel {
 public:
  std::vector<Link> links;
  int wrist_link = -1;
  Vec2 wrist_offset = Vec2::Zero();       /// in the wrist link frame
  std::array<int, 2> foot_links = {-1, -1};
  double foot_half_length = 0.05;         /// sole extends +-this in x
  double foot_drop = 0.05;                /// sole depth below the ankle
  double gravity = kGravity;
  std::string name = "planar_humanoid";

  VecX nominal_s;   /// standing posture of the support joints
  VecX nominal_i;   /// carry posture of the arm joints

  /// Derived indexing, filled by finalize().
  int n_i = 0;
  int n_s = 0;
  std::vector<int> interaction_links;   /// link indices in theta_I order
  std::vector<int> support_links;       /// link indices in theta_S order
  std::vector<int> dof_of_link;         /// flat velocity index, -1 for root

  int n_links() const { return static_cast<int>(links.size()); }
  int nq() const { return 3 + n_i + n_s; }
  int link_index(const std::string& link_name) const;

  /// Validates the tree and rebuilds the derived index arrays.
  /// Throws ConfigError on a malformed model.
  void finalize();

  double total_mass() const;
};

/// q split by role. qd is flat: [xd, zd, pitch_rate, joint rates in link
/// order], which for the default model is [theta_S rates, theta_I rates].
struct GeneralizedState {
  Vec2 base_pos = Vec2::Zero();
  double base_pitch = 0;
  VecX theta_i;
  VecX theta_s;
  VecX qd;

  static GeneralizedState neutral(const RobotModel& model);
  bool finite() const;
};

/// Packs/unpacks the internal flat layout [x, z, pitch, joints in link order].
VecX flatten_q(const RobotModel& model, const GeneralizedState& s);
void unflatten_q(const RobotModel& model, const VecX& q, GeneralizedState* s);

/// High-level collaborative command, 11 numbers. Planar runs keep v_y,
/// omega_yaw and the lateral wrist offsets at zero; the slots stay in the
/// layout so commands serialize the same way in all builds.
struct HrcCommand {
  Eigen::Vector3d v_coll = Eigen::Vector3d::Zero();     /// (v_x, v_y, omega_yaw)
  Vec2 sigma_base = Vec2(0.64, 0.0);                    /// (com height, torso pitch)
  Eigen::Matrix<double, 6, 1> delta_p = Eigen::Matrix<double, 6, 1>::Zero();

  Eigen::Matrix<double, 11, 1> to_vector() const {
    Eigen::Matrix<double, 11, 1> v;
    v << v_coll, sigma_base, delta_p;
    return v;
  }
  static HrcCommand from_vector(const Eigen::Matrix<double, 11, 1>& v) {
    HrcCommand c;
    c.v_coll = v.segment<3>(0);
    c.sigma_base = v.segment<2>(3);
    c.delta_p = v.segment<6>(5);
    return c;
  }
};

/// Wrist goal for the arm chain, expressed in the arm-root frame (origin at
/// the shoulder joint, axes aligned with the torso). delta_p uses the
/// left-wrist slots (0..2); the right-wrist slots (3..5) are ignored in the
/// merged planar arm but kept in the type.
struct WristTarget {
  Vec2 x_task_base = Vec2::Zero();
  Eigen::Matrix<double, 6, 1> delta_p = Eigen::Matrix<double, 6, 1>::Zero();

  Vec2 position() const {
    return x_task_base + Vec2(delta_p[0], delta_p[2]);
  }
};

/// The built-in planar humanoid (no file needed).
RobotModel default_model();

/// Loads a model from a flat key = value file; see docs/config_reference.md
/// for the key names. Throws ConfigError on malformed input.
RobotModel load_model(const std::string& path);
RobotModel model_from_config(const class Config& cfg);

}  // namespace iowbc

#endif  // IOWBC_MODEL_HPP_
