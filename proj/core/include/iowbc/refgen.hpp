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

#ifndef IOWBC_REFGEN_HPP_
#define IOWBC_REFGEN_HPP_

#include <string>
#include <utility>
#include <vector>

#include "iowbc/kinematics.hpp"
#include "iowbc/nn.hpp"

namespace iowbc {

/// Closed-form two-link leg inverse kinematics. v is hip origin minus ankle
/// target in world coordinates; angles come back as joint values (hip
/// relative to the base, knee bend >= 0 branch, ankle chosen for a flat
/// foot). Returns false when the target is outside the annulus.
bool analytic_leg_ik(double l1, double l2, const Vec2& v, double base_pitch, double* hip,
                     double* knee, double* ankle);

struct RgSolverWeights {
  double height = 1e4;    /// (com height - H)^2
  double pitch = 1e4;     /// (base pitch - alpha)^2
  double torque = 1e-4;   /// static joint torques
  double nominal = 1.0;   /// distance from the nominal standing posture
  double symmetry = 4.0;  /// left-right joint mismatch, keeps solves unimodal
  double support = 1e6;   /// com x outside the support interval
  double limits = 1e6;    /// joint range and leg reach overruns
};

struct PostureSolution {
  VecX theta_s;
  double base_x = 0;
  double base_z = 0;
  double cost = 0;
  bool feasible = false;
};

/// Static posture fit: feet pinned flat at the stance spacing, arms held at
/// theta_i, legs closed analytically; damped Gauss-Newton over (base x,
/// base z, pitch, waist) from three starts, best feasible kept. Feasible
/// means joint limits hold and the com x lies inside the support interval.
PostureSolution solve_posture(const RobotModel& model, const VecX& theta_i, double h_com,
                              double alpha, const RgSolverWeights& w = {});

struct RgRanges {
  double h_lo = 0.5, h_hi = 0.8;          /// commanded com height (m)
  double alpha_lo = -0.5, alpha_hi = 1.5; /// commanded base pitch (rad)
  /// Wrist-target box in the arm-root frame feeding the arm IK.
  double wrist_x_lo = 0.10, wrist_x_hi = 0.48;
  double wrist_z_lo = -0.48, wrist_z_hi = 0.10;
};

/// Feasible samples only; row i of inputs is (theta_i, h_com, alpha).
struct RgDataset {
  MatX inputs;    /// n x (n_i + 2)
  MatX targets;   /// n x n_s
  VecX cost;
  int n() const { return static_cast<int>(inputs.rows()); }
};

/// Draws inputs uniformly (theta_i via wrist IK), keeps feasible solves.
/// Throws ConfigError when the feasibility yield falls below 10%.
RgDataset generate_rg_dataset(const RobotModel& model, int n, const RgRanges& ranges,
                              std::uint64_t seed);

void save_rg_dataset(const RgDataset& ds, const std::string& path);
RgDataset load_rg_dataset(const std::string& path);

/// The frozen kinematic prior: theta_S^ref = net(theta_I^ref, sigma_base).
struct RgNet {
  MlpNetF net;
  bool frozen = false;
  int n_i = 0;
  int n_s = 0;
};

struct RgTrainConfig {
  int epochs = 300;
  int batch = 128;
  double lr = 1e-3;
  double val_fraction = 0.1;
  std::uint64_t seed = 1;
};

struct RgTrainResult {
  double best_val_mse = 0;                         /// per-joint, rad^2
  std::vector<std::pair<double, double>> curve;    /// (train mse, val mse) per epoch
};

/// Supervised regression, best-validation weights kept, net frozen on
/// return. Throws NumericError if validation goes non-finite and ConfigError
/// on an already frozen net.
RgTrainResult train_rg(const RgDataset& ds, const RobotModel& model, const RgTrainConfig& cfg,
                       RgNet* rg);

/// Single forward pass, output clamped into joint limits. Requires frozen.
VecX rg_infer(const RgNet& rg, const RobotModel& model, const VecX& theta_i, double h_com,
              double alpha);

std::uint64_t rg_layout_hash(const RobotModel& model);

void save_rg(const RgNet& rg, const RobotModel& model, const std::string& path,
             std::uint64_t seed);
RgNet load_rg(const std::string& path, const RobotModel& model);

}  // namespace iowbc

#endif  // IOWBC_REFGEN_HPP_
