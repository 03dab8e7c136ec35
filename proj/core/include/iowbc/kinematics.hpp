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

#ifndef IOWBC_KINEMATICS_HPP_
#define IOWBC_KINEMATICS_HPP_

#include <array>

#include "iowbc/model.hpp"

namespace iowbc {

struct FkResult {
  std::vector<Vec2> p;        /// link origin, world
  std::vector<double> ang;    /// link angle, world
  std::vector<Mat2> R;
  std::vector<Vec2> com;      /// link com, world
  Vec2 wrist_pos = Vec2::Zero();
  double wrist_ang = 0;
  std::array<Vec2, 2> foot_pos;    /// ankle frame origins
  std::array<double, 2> foot_ang;
};

void forward_kinematics(const RobotModel& model, const VecX& q, FkResult* out);
FkResult forward_kinematics(const RobotModel& model, const GeneralizedState& s);

struct ComResult {
  Vec2 position = Vec2::Zero();
  double mass = 0;
};
ComResult com_of(const RobotModel& model, const FkResult& fk);

/// d(world wrist position)/d(theta_I), columns in theta_I order.
Eigen::Matrix2Xd jacobian_wrist(const RobotModel& model, const GeneralizedState& s);

/// Arm chain alone, in the arm-root frame (origin at the first interaction
/// joint, axes following the link the arm is mounted on).
Vec2 fk_arm(const RobotModel& model, const VecX& theta_i);
Eigen::Matrix2Xd jacobian_arm(const RobotModel& model, const VecX& theta_i);

struct IkParams {
  double damping = 0.05;     /// damped least squares lambda (scaled down near the goal)
  double step_clamp = 0.2;   /// max |d theta| per iterate (rad)
  double tol = 1e-4;         /// position tolerance (m)
  int max_iters = 100;       /// per descent; limit-trapped starts get retried
};

struct IkResult {
  VecX theta;
  bool converged = false;
  int iters = 0;
  double err = 0;
};

/// Damped least-squares wrist IK on the arm chain. Joint limits are
/// enforced on every iterate. An unreachable target yields
/// converged == false with the closest pose found, never an exception;
/// non-finite inputs throw ConfigError.
IkResult differential_ik(const RobotModel& model, const VecX& theta_init,
                         const WristTarget& target, const IkParams& params = {});

struct SupportInterval {
  double lo = 0;
  double hi = 0;
  bool any = false;
  double center() const { return 0.5 * (lo + hi); }
  bool contains(double x) const { return any && x >= lo && x <= hi; }
};

/// X-interval spanned by the feet currently in contact, each expanded by
/// half the foot length. No contact yields any == false.
SupportInterval support_polygon(const RobotModel& model, const FkResult& fk,
                                const std::array<bool, 2>& in_contact);

/// Shifts base height so the lowest sole point rests exactly on the ground
/// plane. Returns the new base height.
double settle_base_height(const RobotModel& model, GeneralizedState* s);

}  // namespace iowbc

#endif  // IOWBC_KINEMATICS_HPP_
