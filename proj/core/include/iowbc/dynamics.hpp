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

#ifndef IOWBC_DYNAMICS_HPP_
#define IOWBC_DYNAMICS_HPP_

#include <vector>

#include "iowbc/kinematics.hpp"
#include "iowbc/model.hpp"

namespace iowbc {

/// Point force on a link, all in world coordinates.
struct ExternalForce {
  int link = 0;
  Vec2 point = Vec2::Zero();
  Vec2 force = Vec2::Zero();
};

/// Linearized velocity slope of a contact force at `point` on `link`:
/// the force change is -diag(cx, cz) times the point-velocity change.
struct PointDamper {
  int link = 0;
  Vec2 point = Vec2::Zero();
  double cx = 0;
  double cz = 0;
};

struct DynOptions {
  bool lock_base = false;      /// hold the floating base rigid (tests, reductions)
  double limit_stop_kp = 300;  /// joint limit stop stiffness (N*m/rad)
  double limit_stop_kd = 8;

  /// Velocity-feedback terms folded into the solve: dt * gain goes onto the
  /// mass matrix (diagonal per-dof gains, and J^T C J for point dampers), so
  /// stiff damping and the near-rigid stick regime of regularized friction
  /// stay stable at coarse substeps. The reported mass matrix is unaffected.
  /// Null keeps the fully explicit solve.
  const VecX* implicit_damping = nullptr;  /// size nq, entries >= 0
  const std::vector<PointDamper>* point_dampers = nullptr;
  double implicit_dt = 0;
};

// Joint-space dynamics of the planar tree. The mass matrix comes from the
// composite-rigid-body recursion and the bias vector (Coriolis, centrifugal
// and gravity) from a zero-acceleration Newton-Euler sweep, both assembled
// in world-origin planar spatial coordinates so no frame transforms are
// needed. Reusable scratch keeps the per-substep cost allocation free.
class PlanarDynamics {
 public:
  explicit PlanarDynamics(const RobotModel& model);

  /// tau holds actuated joint torques in flat dof order (nq - 3 entries).
  /// Joint damping and limit stops are applied internally. Throws
  /// NumericError on non-finite input or a failed solve.
  void forward(const VecX& q, const VecX& qd, const VecX& tau,
               const std::vector<ExternalForce>& ext, const DynOptions& opt, VecX* qdd);

  const MatX& mass_matrix(const VecX& q);
  const VecX& bias_forces(const VecX& q, const VecX& qd);

  /// FK of the last forward()/mass_matrix() call.
  const FkResult& fk() const { return fk_; }

  const RobotModel& model() const { return *model_; }

 private:
  void refresh_axes(const VecX& q);
  const VecX& bias_impl(const VecX& qd);

  const RobotModel* model_;
  FkResult fk_;
  // per-dof joint axes as planar motion vectors (omega, vx, vz)
  std::vector<Eigen::Vector3d> axis_;
  // composite inertia per link about the world origin: mass, first moment, Io
  std::vector<double> cm_;
  std::vector<Vec2> ch_;
  std::vector<double> cio_;
  std::vector<double> w_;      // link angular velocity
  std::vector<Vec2> a_;        // link origin acceleration (bias pass)
  std::vector<Eigen::Vector3d> fsub_;  // subtree spatial force about origin
  MatX M_;
  VecX bias_;
  VecX rhs_;
  VecX qdd_full_;
  Eigen::LDLT<MatX> ldlt_;
  Eigen::LDLT<MatX> ldlt_joints_;
  MatX Mjj_;
  MatX Msolve_;
};

/// One-call convenience wrapper around PlanarDynamics::forward.
VecX forward_dynamics(const RobotModel& model, const VecX& q, const VecX& qd, const VecX& tau,
                      const std::vector<ExternalForce>& ext = {}, const DynOptions& opt = {});

/// Packs branch torque vectors into flat dof order.
VecX pack_tau(const RobotModel& model, const VecX& tau_s, const VecX& tau_i);

/// Angular velocity and world-frame origin velocity of every link. A point p
/// on link i then moves at vo[i] + w[i] * perp(p - fk.p[i]).
void link_origin_velocities(const RobotModel& model, const FkResult& fk, const VecX& qd,
                            std::vector<double>* w, std::vector<Vec2>* vo);

double kinetic_energy(const RobotModel& model, const VecX& q, const VecX& qd);
double potential_energy(const RobotModel& model, const VecX& q);

/// Mass-weighted mean linear velocity of the robot alone.
Vec2 com_velocity(const RobotModel& model, const VecX& q, const VecX& qd);

}  // namespace iowbc

#endif  // IOWBC_DYNAMICS_HPP_
