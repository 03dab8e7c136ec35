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

// Command line entry point for the whole pipeline: reference-generator data
// and training, teacher PPO, student distillation, ablation training, single
// rollouts, evaluation and load sweeps, and report regeneration. Every
// command reads one flat key = value config (see docs/config_reference.md)
// and writes its artifacts into a run directory.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "iowbc/eval.hpp"

namespace {

using namespace iowbc;

struct CliArgs {
  std::string config_path;
  std::string out_dir = "run";
  std::uint64_t seed = 0;  /// 0 keeps the config/default seed
  int envs = 0;            /// 0 keeps the config value
  bool deterministic = false;
};

std::uint64_t pick_seed(const CliArgs& a, const Config& cfg, const char* key) {
  if (a.seed != 0) return a.seed;
  return static_cast<std::uint64_t>(cfg.get_int(key, 1));
}

std::vector<int> widths_from(const Config& cfg, const std::string& key,
                             const std::vector<int>& fallback) {
  if (!cfg.has(key)) return fallback;
  const VecX v = cfg.get_vector(key);
  std::vector<int> out;
  for (int i = 0; i < v.size(); ++i) {
    const int w = static_cast<int>(v[i]);
    if (w < 1) throw ConfigError(key + " entries must be >= 1");
    out.push_back(w);
  }
  if (out.empty()) throw ConfigError(key + " must name at least one layer");
  return out;
}

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ' ' || c == ',' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

RewardParams reward_from(const Config& cfg) {
  RewardParams p;
  p.sync_posture_scale = cfg.get_double("reward.sync_posture_scale", p.sync_posture_scale);
  p.sync_velocity_scale = cfg.get_double("reward.sync_velocity_scale", p.sync_velocity_scale);
  p.obj_pose_scale = cfg.get_double("reward.obj_pose_scale", p.obj_pose_scale);
  p.obj_vz_weight = cfg.get_double("reward.obj_vz_weight", p.obj_vz_weight);
  p.accel_weight = cfg.get_double("reward.accel_weight", p.accel_weight);
  p.action_rate_weight = cfg.get_double("reward.action_rate_weight", p.action_rate_weight);
  p.power_weight = cfg.get_double("reward.power_weight", p.power_weight);
  p.swing_weight = cfg.get_double("reward.swing_weight", p.swing_weight);
  p.swing_height = cfg.get_double("reward.swing_height", p.swing_height);
  p.swing_sigma = cfg.get_double("reward.swing_sigma", p.swing_sigma);
  p.stance_weight = cfg.get_double("reward.stance_weight", p.stance_weight);
  p.gait_period = cfg.get_double("reward.gait_period", p.gait_period);
  return p;
}

TerminationLimits termination_from(const Config& cfg) {
  TerminationLimits t;
  t.max_pitch = cfg.get_double("termination.max_pitch", t.max_pitch);
  t.min_com_height = cfg.get_double("termination.min_com_height", t.min_com_height);
  t.drop_grace = cfg.get_double("termination.drop_grace", t.drop_grace);
  return t;
}

EnvConfig env_from(const Config& cfg) {
  EnvConfig e;
  e.scenario = scenario_from_config(cfg);
  e.reward = reward_from(cfg);
  e.termination = termination_from(cfg);
  e.dt_tick = cfg.get_double("env.dt_tick", e.dt_tick);
  e.substeps_per_tick = cfg.get_int("env.substeps", e.substeps_per_tick);
  e.history = cfg.get_int("env.history", e.history);
  e.wo_rg = cfg.get_bool("env.wo_rg", false);
  if (e.dt_tick <= 0 || e.substeps_per_tick < 1 || e.history < 1) {
    throw ConfigError("env.dt_tick must be > 0, env.substeps and env.history >= 1");
  }
  return e;
}

PpoConfig ppo_from(const Config& cfg, const CliArgs& a) {
  PpoConfig p;
  p.gamma = cfg.get_double("ppo.gamma", p.gamma);
  p.lam = cfg.get_double("ppo.lam", p.lam);
  p.lr = cfg.get_double("ppo.lr", p.lr);
  p.clip = cfg.get_double("ppo.clip", p.clip);
  p.entropy_coef = cfg.get_double("ppo.entropy_coef", p.entropy_coef);
  p.vf_coef = cfg.get_double("ppo.vf_coef", p.vf_coef);
  p.grad_clip = cfg.get_double("ppo.grad_clip", p.grad_clip);
  p.kl_stop = cfg.get_double("ppo.kl_stop", p.kl_stop);
  p.n_envs = cfg.get_int("ppo.n_envs", p.n_envs);
  p.horizon = cfg.get_int("ppo.horizon", p.horizon);
  p.epochs = cfg.get_int("ppo.epochs", p.epochs);
  p.minibatches = cfg.get_int("ppo.minibatches", p.minibatches);
  p.hidden = widths_from(cfg, "ppo.hidden", p.hidden);
  if (a.envs > 0) p.n_envs = a.envs;
  return p;
}

CurriculumConfig curriculum_from(const Config& cfg) {
  CurriculumConfig c;
  c.threshold_1 = cfg.get_double("curriculum.threshold_1", c.threshold_1);
  c.threshold_2 = cfg.get_double("curriculum.threshold_2", c.threshold_2);
  c.window = cfg.get_int("curriculum.window", c.window);
  return c;
}

RgNet load_rg_for(const Config& cfg, const RunDirectory& dir, const RobotModel& model) {
  const std::string path =
      cfg.get_string("rg.checkpoint", dir.path("checkpoints/rg.ckpt"));
  return load_rg(path, model);
}

int cmd_gen_rg_data(const CliArgs& a, const Config& cfg) {
  const RobotModel model = default_model();
  RgRanges ranges;
  ranges.h_lo = cfg.get_double("rg.h_lo", ranges.h_lo);
  ranges.h_hi = cfg.get_double("rg.h_hi", ranges.h_hi);
  ranges.alpha_lo = cfg.get_double("rg.alpha_lo", ranges.alpha_lo);
  ranges.alpha_hi = cfg.get_double("rg.alpha_hi", ranges.alpha_hi);
  const int samples = cfg.get_int("rg.samples", 5000);
  const std::uint64_t seed = pick_seed(a, cfg, "rg.seed");

  const RunDirectory dir = RunDirectory::create(a.out_dir);
  dir.snapshot_config(cfg.raw_text());
  const RgDataset ds = generate_rg_dataset(model, samples, ranges, seed);
  const std::string path = cfg.get_string("rg.data", dir.path("rg_data.csv"));
  save_rg_dataset(ds, path);
  std::printf("gen-rg-data: %d samples -> %s\n", ds.n(), path.c_str());
  return 0;
}

int cmd_train_rg(const CliArgs& a, const Config& cfg) {
  const RobotModel model = default_model();
  const RunDirectory dir = RunDirectory::create(a.out_dir);
  dir.snapshot_config(cfg.raw_text());

  const std::string data_path = cfg.get_string("rg.data", dir.path("rg_data.csv"));
  const RgDataset ds = load_rg_dataset(data_path);

  RgTrainConfig tc;
  tc.epochs = cfg.get_int("rg.epochs", tc.epochs);
  tc.batch = cfg.get_int("rg.batch", tc.batch);
  tc.lr = cfg.get_double("rg.lr", tc.lr);
  tc.val_fraction = cfg.get_double("rg.val_fraction", tc.val_fraction);
  tc.seed = pick_seed(a, cfg, "rg.seed");

  RgNet rg;
  const RgTrainResult res = train_rg(ds, model, tc, &rg);

  const std::string ckpt = dir.path("checkpoints/rg.ckpt");
  save_rg(rg, model, ckpt, tc.seed);

  std::string log = "epoch,train_mse,val_mse\n";
  for (size_t i = 0; i < res.curve.size(); ++i) {
    log += std::to_string(i + 1) + "," + fmt_double(res.curve[i].first) + "," +
           fmt_double(res.curve[i].second) + "\n";
  }
  write_text_file(dir.path("logs/rg_train.csv"), log);
  std::printf("train-rg: %d samples, best val mse %.6f rad^2 -> %s\n", ds.n(), res.best_val_mse,
              ckpt.c_str());
  return 0;
}

int run_policy_training(const CliArgs& a, const Config& cfg, bool student_input,
                        const char* ckpt_name, const char* log_name) {
  const RobotModel model = default_model();
  const RunDirectory dir = RunDirectory::create(a.out_dir);
  dir.snapshot_config(cfg.raw_text());

  PolicyTrainConfig tc;
  tc.env = env_from(cfg);
  tc.ppo = ppo_from(cfg, a);
  tc.curriculum = curriculum_from(cfg);
  tc.updates = cfg.get_int("train.updates", tc.updates);
  tc.seed = pick_seed(a, cfg, "train.seed");
  tc.student_input = student_input;
  tc.deterministic_log = a.deterministic;
  tc.log_path = dir.path(std::string("logs/") + log_name);
  tc.checkpoint_dir = dir.path("checkpoints");
  tc.checkpoint_every = cfg.get_int("train.checkpoint_every", tc.checkpoint_every);

  RgNet rg;
  const RgNet* rg_ptr = nullptr;
  if (!tc.env.wo_rg) {
    rg = load_rg_for(cfg, dir, model);
    rg_ptr = &rg;
  }

  const PolicyTrainResult res = train_policy(model, rg_ptr, tc);
  const ObsLayout layout = obs_layout(model);
  const std::uint64_t hash = student_input ? student_layout_hash(layout, tc.env.history)
                                           : teacher_layout_hash(layout);
  const std::string ckpt = dir.path(std::string("checkpoints/") + ckpt_name);
  save_policy(res.policy, ckpt, hash, static_cast<std::uint64_t>(tc.updates), tc.seed);
  std::printf("%s: %d updates, final stage %d, mean reward %.3f, %d anomalies -> %s\n",
              student_input ? "train-nodistill" : "train-teacher", tc.updates, res.final_stage,
              res.final_mean_reward, res.anomalies, ckpt.c_str());
  return 0;
}

int cmd_distill(const CliArgs& a, const Config& cfg) {
  const RobotModel model = default_model();
  const RunDirectory dir = RunDirectory::create(a.out_dir);
  dir.snapshot_config(cfg.raw_text());

  DistillConfig dc;
  dc.env = env_from(cfg);
  dc.iterations = cfg.get_int("distill.iterations", dc.iterations);
  dc.horizon = cfg.get_int("distill.horizon", dc.horizon);
  dc.n_envs = a.envs > 0 ? a.envs : cfg.get_int("distill.n_envs", dc.n_envs);
  dc.epochs_per_iter = cfg.get_int("distill.epochs_per_iter", dc.epochs_per_iter);
  dc.batch = cfg.get_int("distill.batch", dc.batch);
  dc.lr = cfg.get_double("distill.lr", dc.lr);
  dc.buffer_cap = cfg.get_int("distill.buffer_cap", dc.buffer_cap);
  dc.val_fraction = cfg.get_double("distill.val_fraction", dc.val_fraction);
  dc.hidden = widths_from(cfg, "distill.hidden", dc.hidden);
  dc.stage = cfg.get_int("distill.stage", dc.stage);
  dc.seed = pick_seed(a, cfg, "distill.seed");
  dc.deterministic_log = a.deterministic;
  dc.log_path = dir.path("logs/distill.csv");

  RgNet rg;
  const RgNet* rg_ptr = nullptr;
  if (!dc.env.wo_rg) {
    rg = load_rg_for(cfg, dir, model);
    rg_ptr = &rg;
  }

  const ObsLayout layout = obs_layout(model);
  const std::string teacher_path =
      cfg.get_string("distill.teacher", dir.path("checkpoints/teacher.ckpt"));
  const GaussianPolicy teacher = load_policy(teacher_path, teacher_layout_hash(layout));

  const DistillResult res = distill_student(model, rg_ptr, teacher, dc);
  const std::string ckpt = dir.path("checkpoints/student.ckpt");
  save_policy(res.student, ckpt, student_layout_hash(layout, dc.env.history),
              static_cast<std::uint64_t>(dc.iterations), dc.seed);
  std::printf("distill: %d iterations, held-out KL %.4f nats -> %s\n", dc.iterations,
              res.held_out_kl, ckpt.c_str());
  return 0;
}

/// Shared by rollout/eval/sweep: resolve variant names to checkpoints from
/// "<section>.ckpt.<variant>" keys, defaulting to the run directory layout.
std::map<std::string, std::string> checkpoint_map(const Config& cfg, const RunDirectory& dir,
                                                  const std::string& section,
                                                  const std::vector<std::string>& variants) {
  std::map<std::string, std::string> out;
  for (const std::string& vn : variants) {
    if (variant_from_name(vn) == VariantKind::kTrackingOnly) continue;
    std::string fallback;
    if (vn == "full") fallback = dir.path("checkpoints/student.ckpt");
    if (vn == "wo_distill") fallback = dir.path("checkpoints/wo_distill.ckpt");
    if (vn == "wo_rg") fallback = dir.path("checkpoints/teacher.ckpt");
    out[vn] = cfg.get_string(section + ".ckpt." + vn, fallback);
  }
  return out;
}

int cmd_rollout(const CliArgs& a, const Config& cfg) {
  const RobotModel model = default_model();
  const RunDirectory dir = RunDirectory::create(a.out_dir);
  dir.snapshot_config(cfg.raw_text());

  EnvConfig env = env_from(cfg);
  const std::string vn = cfg.get_string("rollout.variant", "tracking_only");
  const VariantKind kind = variant_from_name(vn);
  const std::uint64_t seed = pick_seed(a, cfg, "rollout.seed");

  Scenario sc = env.scenario;
  if (cfg.has("rollout.mass")) sc = scenario_with_mass(sc, cfg.get_double("rollout.mass"));

  RgNet rg;
  const RgNet* rg_ptr = nullptr;
  if (kind != VariantKind::kWoRg) {
    rg = load_rg_for(cfg, dir, model);
    rg_ptr = &rg;
  }

  const auto ckpts = checkpoint_map(cfg, dir, "rollout", {vn});
  const std::string ckpt_path = ckpts.count(vn) ? ckpts.at(vn) : std::string();
  const EvalPolicy policy = load_eval_policy(kind, ckpt_path, model, env.history);

  const RolloutTrace trace = eval_rollout(model, rg_ptr, sc, policy, kind, seed, env);
  MetricsRecord m = compute_metrics(trace);
  m.mass = sc.has_object ? sc.object.mass : 0.0;
  m.variant = vn;
  m.seed = seed;

  write_text_file(dir.path("trace.csv"), trace_csv(trace));
  write_text_file(dir.path("metrics.csv"), metrics_csv({m}));
  std::printf("rollout: %s seed %llu, %.1f s, %s, E_v %.4f E_alpha %.4f E_h %.4f\n", vn.c_str(),
              static_cast<unsigned long long>(seed), m.episode_seconds,
              m.success ? "success" : "failed", m.e_v, m.e_alpha, m.e_h);
  return 0;
}

int run_grid(const CliArgs& a, const Config& cfg, const std::string& section,
             const std::vector<double>& default_masses) {
  const RobotModel model = default_model();
  const RunDirectory dir = RunDirectory::create(a.out_dir);
  dir.snapshot_config(cfg.raw_text());

  const EnvConfig env = env_from(cfg);

  SweepSpec spec;
  spec.scenario = env.scenario;
  spec.trials = cfg.get_int(section + ".trials", 5);
  spec.seed_base = pick_seed(a, cfg, (section + ".seed").c_str());
  spec.variants = split_words(cfg.get_string(
      section + ".variants", section == "sweep" ? "full wo_rg wo_distill tracking_only" : "full"));
  if (cfg.has(section + ".masses")) {
    const VecX mv = cfg.get_vector(section + ".masses");
    for (int i = 0; i < mv.size(); ++i) spec.masses.push_back(mv[i]);
  } else if (!default_masses.empty()) {
    spec.masses = default_masses;
  } else {
    spec.masses = {env.scenario.object.mass};
  }
  spec.checkpoints = checkpoint_map(cfg, dir, section, spec.variants);

  RgNet rg;
  const RgNet* rg_ptr = nullptr;
  bool needs_rg = false;
  for (const std::string& vn : spec.variants) {
    needs_rg = needs_rg || variant_from_name(vn) != VariantKind::kWoRg;
  }
  if (needs_rg) {
    rg = load_rg_for(cfg, dir, model);
    rg_ptr = &rg;
  }

  const SweepResult res = run_sweep(model, rg_ptr, spec, env);
  write_sweep_outputs(res, dir);
  dir.write_seeds(spec.seed_base, spec.trials);
  std::printf("%s: %zu cells x %d trials -> %s\n", section.c_str(), res.cells.size(), spec.trials,
              dir.path("report.csv").c_str());
  for (const SweepCell& c : res.cells) {
    std::printf("  %-13s mass %4.1f  success %3.0f%%  E_v %.4f  E_alpha %.4f  E_h %.4f\n",
                c.variant.c_str(), c.mass, c.success_rate * 100.0, c.e_v_mean, c.e_alpha_mean,
                c.e_h_mean);
  }
  return 0;
}

int cmd_report(const std::string& in_dir) {
  const std::string metrics_path = in_dir + "/metrics.csv";
  const std::vector<MetricsRecord> records = metrics_from_csv(read_text_file(metrics_path));
  if (records.empty()) throw IoError("no records in " + metrics_path);
  const std::vector<SweepCell> cells = aggregate_cells(records);

  std::error_code ec;
  std::filesystem::create_directories(in_dir + "/plots", ec);
  SweepResult res;
  res.records = records;
  res.cells = cells;
  RunDirectory dir{in_dir};
  write_text_file(dir.path("report.csv"), report_csv(cells));
  write_text_file(dir.path("summary.md"), report_markdown(cells));
  const struct {
    const char* field;
    const char* file;
    const char* title;
  } plots[] = {
      {"e_v", "plots/E_v_vs_mass.svg", "Linear velocity error E_v (m/s) vs object mass"},
      {"e_psi", "plots/E_psi_vs_mass.svg", "Yaw error E_psi (rad) vs object mass"},
      {"e_alpha", "plots/E_alpha_vs_mass.svg", "Pitch error E_alpha (rad) vs object mass"},
      {"e_h", "plots/E_h_vs_mass.svg", "CoM height error E_h (m) vs object mass"},
      {"norm_error", "plots/norm_error_vs_mass.svg", "Norm tracking error vs object mass"},
      {"success", "plots/success_vs_mass.svg", "Success rate vs object mass"},
  };
  for (const auto& p : plots) {
    write_text_file(dir.path(p.file), metric_plot_svg(cells, p.field, p.title));
  }
  std::printf("report: %zu records, %zu cells -> %s\n", records.size(), cells.size(),
              dir.path("report.csv").c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"iowbc: planar humanoid loco-manipulation pipeline"};
  app.require_subcommand(1);

  CliArgs args;
  std::string report_in;

  auto add_common = [&](CLI::App* sub, bool wants_config) {
    if (wants_config) {
      sub->add_option("--config", args.config_path, "flat key = value config file");
      sub->add_option("--out", args.out_dir, "run directory (created if missing)");
      sub->add_option("--seed", args.seed, "seed override (0 keeps the config value)");
      sub->add_option("--envs", args.envs, "parallel env count override");
      sub->add_flag("--deterministic", args.deterministic,
                    "zero wall-time columns so logs are byte-reproducible");
    }
  };

  CLI::App* c_gen = app.add_subcommand("gen-rg-data", "sample feasible postures for the prior");
  CLI::App* c_trg = app.add_subcommand("train-rg", "fit the reference-generator network");
  CLI::App* c_tea = app.add_subcommand("train-teacher", "PPO on privileged observations");
  CLI::App* c_dis = app.add_subcommand("distill", "KL-distill the teacher into a history student");
  CLI::App* c_nod = app.add_subcommand("train-nodistill", "PPO directly on the history input");
  CLI::App* c_rol = app.add_subcommand("rollout", "one deterministic episode, trace.csv out");
  CLI::App* c_evl = app.add_subcommand("eval", "fixed-condition evaluation of one variant");
  CLI::App* c_swp = app.add_subcommand("sweep", "mass grid across variants, report + plots");
  CLI::App* c_rep = app.add_subcommand("report", "regenerate report artifacts from metrics.csv");
  for (CLI::App* sub : {c_gen, c_trg, c_tea, c_dis, c_nod, c_rol, c_evl, c_swp}) {
    add_common(sub, true);
  }
  c_rep->add_option("--in", report_in, "run directory holding metrics.csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  Config cfg;
  try {
    if (!args.config_path.empty()) {
      cfg = Config::from_file(args.config_path);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }

  try {
    if (c_gen->parsed()) return cmd_gen_rg_data(args, cfg);
    if (c_trg->parsed()) return cmd_train_rg(args, cfg);
    if (c_tea->parsed()) return run_policy_training(args, cfg, false, "teacher.ckpt",
                                                    "teacher_train.csv");
    if (c_nod->parsed()) return run_policy_training(args, cfg, true, "wo_distill.ckpt",
                                                    "wo_distill_train.csv");
    if (c_dis->parsed()) return cmd_distill(args, cfg);
    if (c_rol->parsed()) return cmd_rollout(args, cfg);
    if (c_evl->parsed()) return run_grid(args, cfg, "eval", {});
    if (c_swp->parsed()) return run_grid(args, cfg, "sweep", {});
    if (c_rep->parsed()) return cmd_report(report_in);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
