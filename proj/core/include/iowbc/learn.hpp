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

#ifndef IOWBC_LEARN_HPP_
#define IOWBC_LEARN_HPP_

#include <string>
#include <vector>

#include "iowbc/env.hpp"

namespace iowbc {

/// Diagonal-Gaussian actor-critic. log_std is a free parameter vector, not
/// state dependent.
struct GaussianPolicy {
  MlpNetF actor;
  MlpNetF critic;
  VecXf log_std;
  int input_dim = 0;
  int act_dim = 0;
};

constexpr float kLogStdInit = -0.22314355f;   /// log 0.8
constexpr float kLogStdMin = -4.0f;
constexpr float kLogStdMax = 1.0f;

GaussianPolicy make_policy(int input_dim, int act_dim, const std::vector<int>& hidden,
                           RngStream* rng);

/// Batched heads; columns are samples.
void policy_means(const GaussianPolicy& p, const MatXf& x, MatXf* means);
void policy_values(const GaussianPolicy& p, const MatXf& x, VecX* values);

void save_policy(const GaussianPolicy& p, const std::string& path, std::uint64_t layout_hash,
                 std::uint64_t step, std::uint64_t seed);
GaussianPolicy load_policy(const std::string& path, std::uint64_t expected_layout_hash);

struct PpoConfig {
  double gamma = 0.99;
  double lam = 0.95;
  double lr = 2e-4;
  double clip = 0.2;
  double entropy_coef = 0.005;
  double vf_coef = 0.5;
  double grad_clip = 1.0;
  double kl_stop = 0.02;        /// approx-KL early stop per update
  int n_envs = 64;
  int horizon = 24;
  int epochs = 5;
  int minibatches = 4;
  std::vector<int> hidden = {256, 128, 64};
};

/// One on-policy rollout, flattened time-major: column t * n_envs + i.
/// done marks failure terminals (no bootstrap); trunc marks time limits,
/// whose successor value comes from boot_values. last_values bootstraps the
/// final step of each still-running env.
struct RolloutBatch {
  MatXf inputs;
  MatXf actions;
  VecX logp;
  VecX values;
  VecX rewards;
  std::vector<std::uint8_t> done;
  std::vector<std::uint8_t> trunc;
  VecX boot_values;
  VecX last_values;
  int horizon = 0;
  int n_envs = 0;

  /// Per-rollout diagnostics.
  RewardBreakdown term_means;
  int episodes_finished = 0;
  int failures = 0;
};

/// Generalized advantage estimation under the batch's terminal semantics.
void gae(const RolloutBatch& b, double gamma, double lam, VecX* advantages, VecX* returns);

struct UpdateStats {
  double policy_loss = 0;
  double value_loss = 0;
  double entropy = 0;
  double approx_kl = 0;
  double clip_fraction = 0;
  int epochs_run = 0;
  bool nan_aborted = false;
};

/// PPO with persistent Adam state. A non-finite loss aborts the whole
/// update and restores the pre-update parameters.
class PpoLearner {
 public:
  PpoLearner(int input_dim, int act_dim, const PpoConfig& cfg, std::uint64_t seed);

  GaussianPolicy& policy() { return policy_; }
  const GaussianPolicy& policy() const { return policy_; }
  const PpoConfig& config() const { return cfg_; }
  int anomalies() const { return anomalies_; }

  UpdateStats update(const RolloutBatch& batch);

 private:
  PpoConfig cfg_;
  GaussianPolicy policy_;
  AdamState<float> opt_;
  RngStream rng_;
  int anomalies_ = 0;
};

/// Samples actions for every env and steps the set for `horizon` ticks.
/// student_input selects the flattened history as the policy input instead
/// of the teacher's observation + privileged vector.
void collect_rollout(EnvSet* envs, const GaussianPolicy& policy, int horizon, bool student_input,
                     RngStream* action_rng, RolloutBatch* out);

struct TrainRow {
  int update = 0;
  long steps = 0;
  double mean_reward = 0;
  double r_sync = 0, r_obj = 0, r_smooth = 0, r_gate = 0;
  double policy_loss = 0, value_loss = 0, entropy = 0, approx_kl = 0;
  int stage = 1;
  int episodes = 0;
  double wall_seconds = 0;
};

std::string train_log_header();
std::string format_train_row(const TrainRow& row);

struct PolicyTrainConfig {
  PpoConfig ppo;
  CurriculumConfig curriculum;
  EnvConfig env;                /// train_sampling is forced on
  int updates = 1500;
  std::uint64_t seed = 1;
  bool student_input = false;   /// PPO directly on the observation history
  bool deterministic_log = false;   /// zero the wall-time column
  std::string log_path;         /// training curve CSV, empty to skip
  std::string checkpoint_dir;   /// periodic checkpoints, empty to skip
  int checkpoint_every = 250;
};

struct PolicyTrainResult {
  GaussianPolicy policy;
  std::vector<TrainRow> rows;
  int final_stage = 1;
  double final_mean_reward = 0;
  int anomalies = 0;
};

/// PPO training with the stage curriculum. The teacher input is
/// observation + privileged state; with student_input the same procedure
/// optimizes a history-based policy directly (the no-distillation
/// ablation).
PolicyTrainResult train_policy(const RobotModel& model, const RgNet* rg,
                               const PolicyTrainConfig& cfg);

struct DistillConfig {
  EnvConfig env;
  int iterations = 150;
  int horizon = 24;
  int n_envs = 64;
  int epochs_per_iter = 2;
  int batch = 256;
  double lr = 1e-3;
  int buffer_cap = 30000;
  double val_fraction = 0.1;
  std::vector<int> hidden = {256, 128, 64};
  int stage = 3;
  std::uint64_t seed = 1;
  bool deterministic_log = false;
  std::string log_path;
};

struct DistillResult {
  GaussianPolicy student;
  double held_out_kl = 0;   /// mean KL(teacher || student) on held-out states
  std::vector<std::pair<double, double>> curve;   /// (train kl, held-out kl) per iteration
};

/// DAgger-style distillation: the executed action blends teacher and
/// student samples with the teacher share annealed 1 -> 0 over the first
/// half of the iterations; the stored targets are always the teacher's
/// distribution at the visited state.
DistillResult distill_student(const RobotModel& model, const RgNet* rg,
                              const GaussianPolicy& teacher, const DistillConfig& cfg);

}  // namespace iowbc

#endif  // IOWBC_LEARN_HPP_
