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

#ifndef IOWBC_ENV_HPP_
#define IOWBC_ENV_HPP_

#include <memory>
#include <vector>

#include "iowbc/agent.hpp"
#include "iowbc/refgen.hpp"

namespace iowbc {

struct EnvConfig {
  Scenario scenario;
  RewardParams reward;
  TerminationLimits termination;
  double dt_tick = 0.02;
  int substeps_per_tick = 20;
  int history = 25;
  bool wo_rg = false;           /// reference is the fixed nominal posture
  bool train_sampling = false;  /// stage-dependent random commands instead of the timeline
};

struct StepResult {
  double reward = 0;
  RewardBreakdown terms;
  Termination status = Termination::kRunning;
  bool done = false;       /// episode ended this tick; the env has re-reset
  bool truncated = false;  /// time limit hit while still running
  VecX final_obs;          /// terminal observation, for value bootstrapping
  VecX final_priv;
  VecX final_history;      /// flattened history at the terminal tick
};

/// One simulated robot-object episode stream. Deterministic given (seed,
/// index); auto-resets after terminal ticks so it can be stepped forever.
class Environment {
 public:
  Environment(const RobotModel& model, const RgNet* rg, const EnvConfig& cfg, std::uint64_t seed,
              int index);

  void reset(int stage);
  StepResult step(const VecX& u);
  void set_stage(int stage) { stage_ = std::max(stage_, stage); }

  const VecX& obs() const { return obs_; }
  const VecX& privileged() const { return priv_; }
  void history_flat(VecX* out) const { history_.flatten(out); }
  const ObsLayout& layout() const { return layout_; }
  const WorldState& world() const { return world_; }
  const FkResult& fk() const { return fk_; }
  const RobotModel& model() const { return *model_; }
  const HrcCommand& command() const { return cmd_; }
  const VecX& theta_s_ref() const { return theta_s_ref_; }
  const VecX& theta_i_ref() const { return theta_i_ref_; }
  const DomainSample& domain() const { return dom_; }
  const GaitState& gait() const { return gait_; }
  int ticks() const { return ticks_; }
  int stage() const { return stage_; }
  int index() const { return index_; }
  int episode_ticks() const { return cfg_.scenario.episode_ticks; }

 private:
  void refresh_command(bool force);
  void refresh_observation();
  HrcCommand sample_command();
  SimParams sim_params() const;

  const RobotModel* model_;
  const RgNet* rg_;
  EnvConfig cfg_;
  ObsLayout layout_;
  RngStream rng_;
  int index_;
  int stage_ = 1;

  Sim sim_;
  WorldState world_;
  FkResult fk_;
  DomainSample dom_;
  HrcCommand cmd_;
  double next_cmd_time_ = 0;
  VecX theta_i_ref_, theta_s_ref_;
  ObjectRef obj_ref_;
  GaitState gait_;
  VecX a_prev_, qd_prev_;
  int ticks_ = 0;

  std::vector<VecX> snapshots_;   /// delayed-state ring, newest at snap_head_
  int snap_head_ = 0;
  VecX obs_, priv_;
  HistoryBuffer history_;
};

/// A fixed-size batch of independent environments. Stepping is spread over
/// IOWBC_THREADS workers; results do not depend on the thread count.
class EnvSet {
 public:
  EnvSet(const RobotModel& model, const RgNet* rg, const EnvConfig& cfg, std::uint64_t seed,
         int n);

  int size() const { return static_cast<int>(envs_.size()); }
  Environment& env(int i) { return *envs_[i]; }
  const Environment& env(int i) const { return *envs_[i]; }

  void reset_all(int stage);
  void set_stage(int stage);

  /// Teacher inputs: [obs; privileged] as float columns.
  void gather_teacher(MatXf* out) const;
  /// Student inputs: flattened observation history as float columns.
  void gather_history(MatXf* out) const;

  /// Steps every env with its action column. results is resized to n.
  void step_all(const MatX& actions, std::vector<StepResult>* results);

 private:
  std::vector<std::unique_ptr<Environment>> envs_;
  int workers_ = 1;
};

/// Worker count from IOWBC_THREADS, clamped to [1, hard_cap].
int worker_count(int hard_cap);

}  // namespace iowbc

#endif  // IOWBC_ENV_HPP_
