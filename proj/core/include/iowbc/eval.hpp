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

#ifndef IOWBC_EVAL_HPP_
#define IOWBC_EVAL_HPP_

#include <map>
#include <string>
#include <vector>

#include "iowbc/env.hpp"
#include "iowbc/learn.hpp"

namespace iowbc {

/// One control-tick sample of an evaluation rollout. State fields are read
/// before the tick executes; the reward terms and status belong to the tick
/// that followed, so a trace of length L covers exactly the L executed ticks.
struct TraceSample {
  int tick = 0;
  double t = 0;
  double base_x = 0, base_z = 0, base_pitch = 0;
  double com_x = 0, com_z = 0;
  double vsys_x = 0, vsys_z = 0;
  double yaw = 0;  /// identically 0 in the planar model, kept for schema parity
  double cmd_vx = 0, cmd_height = 0, cmd_pitch = 0;
  double obj_x = 0, obj_z = 0, obj_pitch = 0;
  bool grasp = false;
  double partner_fx = 0, partner_fz = 0;
  bool contact_l = false, contact_r = false;
  RewardBreakdown terms;
  Termination status = Termination::kRunning;
};

struct RolloutTrace {
  std::vector<TraceSample> samples;
  double dt = 0.02;
  Termination final_status = Termination::kRunning;
  bool completed = false;  /// ran to the episode tick limit without failing

  double episode_seconds() const { return dt * static_cast<double>(samples.size()); }
};

/// Mean absolute command-tracking deviations over one episode, rectangle
/// rule at the control period. e_psi is computed like the others and is
/// identically zero in planar runs; it stays in the schema so reports keep
/// the full four-metric shape.
struct MetricsRecord {
  double e_v = 0;      /// m/s, |system forward speed - commanded|
  double e_psi = 0;    /// rad, base yaw
  double e_alpha = 0;  /// rad, base pitch
  double e_h = 0;      /// m, CoM height
  double norm_error = 0;  /// ||(e_alpha, e_h, e_v, e_psi)||_2
  bool success = false;
  double episode_seconds = 0;
  double mass = 0;
  std::string variant;
  std::uint64_t seed = 0;
  int trial = 0;
};

/// Throws EvalError on an empty trace.
MetricsRecord compute_metrics(const RolloutTrace& trace);

/// Policy ablations evaluated by the sweeps. kTrackingOnly runs the RG
/// prior with the residual forced to zero and loads no checkpoint; kWoRg
/// evaluates its own privileged-input policy with the reference pinned to
/// the nominal posture; the other two run on the flattened history.
enum class VariantKind { kFull, kWoRg, kWoDistill, kTrackingOnly };

VariantKind variant_from_name(const std::string& name);
const char* variant_name(VariantKind kind);

/// A checkpoint prepared for rollouts: the network plus which input layout
/// it consumes. tracking_only leaves `loaded` false.
struct EvalPolicy {
  GaussianPolicy policy;
  bool teacher_input = false;
  bool loaded = false;
};

/// Loads and layout-checks the checkpoint a variant needs. Path may be
/// empty only for kTrackingOnly. Throws IoError naming the variant when the
/// file is missing or its layout does not match the model.
EvalPolicy load_eval_policy(VariantKind kind, const std::string& path, const RobotModel& model,
                            int history);

/// Runs one deterministic episode: mean actions, no domain randomization,
/// commands from the scenario timeline. The environment's wo_rg flag is set
/// from the variant.
RolloutTrace eval_rollout(const RobotModel& model, const RgNet* rg, const Scenario& scenario,
                          const EvalPolicy& policy, VariantKind kind, std::uint64_t seed,
                          const EnvConfig& base_cfg = {});

/// Copies a scenario with the object mass replaced (inertia rescaled with
/// it). Masses below 0.1 kg are clamped up so the unloaded tier keeps a
/// well-conditioned object.
Scenario scenario_with_mass(const Scenario& base, double mass);

/// Load-stress grid: every (mass, variant) cell runs `trials` episodes with
/// seeds seed_base + trial index.
struct SweepSpec {
  Scenario scenario;
  std::vector<double> masses;
  std::vector<std::string> variants;
  int trials = 5;
  std::uint64_t seed_base = 1;
  std::map<std::string, std::string> checkpoints;  /// variant name -> path
};

/// Per-cell aggregate. Mean and std (population form, divide by n) are over
/// all trials including failed episodes; failures are visible separately in
/// the success rate.
struct SweepCell {
  std::string variant;
  double mass = 0;
  int trials = 0;
  double success_rate = 0;
  double e_v_mean = 0, e_v_std = 0;
  double e_psi_mean = 0, e_psi_std = 0;
  double e_alpha_mean = 0, e_alpha_std = 0;
  double e_h_mean = 0, e_h_std = 0;
  double norm_mean = 0, norm_std = 0;
  double episode_seconds_mean = 0;
};

struct SweepResult {
  std::vector<MetricsRecord> records;  /// trial order: variant, mass, trial
  std::vector<SweepCell> cells;
};

/// Runs the whole grid. Cells are distributed over IOWBC_THREADS workers;
/// record order does not depend on the thread count. Missing checkpoints
/// fail before any rollout starts.
SweepResult run_sweep(const RobotModel& model, const RgNet* rg, const SweepSpec& spec,
                      const EnvConfig& base_cfg = {});

/// Recomputes per-cell aggregates from raw records (the report command uses
/// this on a parsed metrics.csv; tests use it to cross-check run_sweep).
std::vector<SweepCell> aggregate_cells(const std::vector<MetricsRecord>& records);

/// metrics.csv schema, one row per trial:
///   variant,mass,seed,trial,e_v,e_psi,e_alpha,e_h,norm_error,success,
///   episode_seconds
/// success is 0/1; numbers use shortest round-trip formatting.
std::string metrics_csv(const std::vector<MetricsRecord>& records);
std::vector<MetricsRecord> metrics_from_csv(const std::string& text);

/// report.csv schema, one row per (variant, mass) cell:
///   variant,mass,trials,success_rate,e_v_mean,e_v_std,e_psi_mean,e_psi_std,
///   e_alpha_mean,e_alpha_std,e_h_mean,e_h_std,norm_mean,norm_std,
///   episode_seconds_mean
std::string report_csv(const std::vector<SweepCell>& cells);

/// trace.csv schema, one row per executed control tick:
///   tick,t,base_x,base_z,base_pitch,com_x,com_z,vsys_x,vsys_z,yaw,cmd_vx,
///   cmd_height,cmd_pitch,obj_x,obj_z,obj_pitch,grasp,partner_fx,partner_fz,
///   contact_l,contact_r,r_sync,r_obj,r_smooth,r_gate,r_total,status
/// status is the Termination enum as an integer, 0 while running.
std::string trace_csv(const RolloutTrace& trace);

/// Self-contained SVG line chart of one metric against mass, one polyline
/// per variant. No external assets.
std::string metric_plot_svg(const std::vector<SweepCell>& cells, const std::string& field,
                            const std::string& title);

/// Markdown summary: one table per variant with the per-mass means plus the
/// success rate.
std::string report_markdown(const std::vector<SweepCell>& cells);

/// On-disk layout every CLI run writes into:
///   root/config.cfg    byte-identical snapshot of the input config
///   root/seeds.txt     seed base and derived per-trial seeds
///   root/checkpoints/  policies produced by training commands
///   root/logs/         training and distillation CSV logs
///   root/metrics.csv, root/report.csv, root/plots/*.svg
struct RunDirectory {
  std::string root;

  /// Creates root and the standard subdirectories.
  static RunDirectory create(const std::string& root);

  std::string path(const std::string& rel) const;
  /// Byte-for-byte copy of the input config into config.cfg.
  void snapshot_config(const std::string& config_text) const;
  void write_seeds(std::uint64_t seed_base, int trials) const;
};

/// Writes metrics.csv, report.csv, plots/ and summary.md under the run
/// directory.
void write_sweep_outputs(const SweepResult& result, const RunDirectory& dir);

}  // namespace iowbc

#endif  // IOWBC_EVAL_HPP_
