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

#include "iowbc/env.hpp"

#include <cstdlib>
#include <thread>

namespace iowbc {

Environment::Environment(const RobotModel& model, const RgNet* rg, const EnvConfig& cfg,
                         std::uint64_t seed, int index)
    : model_(&model),
      rg_(rg),
      cfg_(cfg),
      layout_(obs_layout(model)),
      rng_(seed, 100 + static_cast<std::uint64_t>(index)),
      index_(index),
      sim_(model),
      history_(cfg.history, layout_.total) {
  if (!cfg_.wo_rg && (rg_ == nullptr || !rg_->frozen)) {
    throw ConfigError("environment needs a frozen reference generator");
  }
  if (cfg_.scenario.episode_ticks < 1) throw ConfigError("environment: bad episode length");
  snapshots_.resize(cfg_.scenario.ranges.latency_max + 1);
  reset(1);
}

HrcCommand Environment::sample_command() {
  const StageEnvelope env = stage_envelope(stage_, cfg_.scenario.ranges);
  HrcCommand cmd;
  if (env.vmax > 0) {
    double vx = rng_.uniform(-env.vmax / 3, env.vmax);
    if (std::abs(vx) < 0.05) vx = 0;
    cmd.v_coll[0] = vx;
  }
  if (stage_ <= 1) {
    cmd.sigma_base = Vec2(rng_.uniform(0.58, 0.66), rng_.uniform(-0.05, 0.15));
  } else if (stage_ == 2) {
    cmd.sigma_base = Vec2(rng_.uniform(0.54, 0.70), rng_.uniform(-0.2, 0.4));
    cmd.delta_p[0] = rng_.uniform(-0.05, 0.05);
    cmd.delta_p[2] = rng_.uniform(-0.05, 0.05);
  } else {
    cmd.sigma_base = Vec2(rng_.uniform(0.45, 0.80), rng_.uniform(-0.5, 1.0));
    cmd.delta_p[0] = rng_.uniform(-0.12, 0.12);
    cmd.delta_p[2] = rng_.uniform(-0.12, 0.12);
  }
  return cmd;
}

void Environment::refresh_command(bool force) {
  HrcCommand next = cmd_;
  if (cfg_.train_sampling) {
    if (world_.time >= next_cmd_time_) {
      next = sample_command();
      next_cmd_time_ = world_.time + rng_.uniform(2.0, 4.0);
    }
  } else {
    next = cfg_.scenario.command_at(world_.time);
  }
  const bool changed = force || (next.to_vector() - cmd_.to_vector()).cwiseAbs().maxCoeff() > 0;
  if (!changed) return;
  cmd_ = next;

  WristTarget target;
  target.x_task_base = fk_arm(*model_, model_->nominal_i);
  target.delta_p = cmd_.delta_p;
  const VecX warm = theta_i_ref_.size() == model_->n_i ? theta_i_ref_ : model_->nominal_i;
  const IkResult ik = differential_ik(*model_, warm, target);
  theta_i_ref_ = ik.theta;   // best effort: an unreachable offset keeps the clamped solution

  theta_s_ref_ = cfg_.wo_rg
                     ? model_->nominal_s
                     : rg_infer(*rg_, *model_, theta_i_ref_, cmd_.sigma_base[0], cmd_.sigma_base[1]);
}

SimParams Environment::sim_params() const {
  SimParams p;
  p.contact.mu_robot = dom_.mu_robot;
  p.contact.mu_object_ground = dom_.mu_object_ground;
  p.contact.mu_grasp = dom_.mu_grasp;
  p.partner = cfg_.scenario.partner;
  p.impulses = cfg_.scenario.impulses;
  if (cfg_.train_sampling) {
    p.impulses.enabled = p.impulses.enabled && stage_envelope(stage_, cfg_.scenario.ranges).impulses;
  }
  p.dt_physics = cfg_.dt_tick / cfg_.substeps_per_tick;
  p.substeps = cfg_.substeps_per_tick;
  p.pd_gain_scale = dom_.pd_gain_scale;
  return p;
}

void Environment::reset(int stage) {
  stage_ = std::max(1, std::min(3, stage));
  const Scenario& sc = cfg_.scenario;

  dom_ = DomainSample{};
  if (sc.randomize_domain) {
    DomainRanges ranges = sc.ranges;
    if (cfg_.train_sampling) {
      const StageEnvelope env = stage_envelope(stage_, ranges);
      ranges.mass_scale_lo = env.mass_lo;
      ranges.mass_scale_hi = env.mass_hi;
    }
    dom_ = randomize(ranges, &rng_);
  }

  world_ = WorldState{};
  world_.rng_stream = static_cast<std::uint64_t>(index_);
  world_.has_object = sc.has_object;

  cmd_ = HrcCommand{};
  theta_i_ref_.resize(0);
  next_cmd_time_ = 0;
  if (cfg_.train_sampling) {
    cmd_ = sample_command();
    next_cmd_time_ = rng_.uniform(2.0, 4.0);
    // refresh_command(force) below recomputes the references for cmd_.
  }
  refresh_command(true);

  GeneralizedState& s = world_.robot;
  s = GeneralizedState::neutral(*model_);
  s.theta_i = theta_i_ref_;
  s.theta_s = theta_s_ref_;
  s.base_pitch = cmd_.sigma_base[1];
  s.base_pos = Vec2(0, 0.6);
  settle_base_height(*model_, &s);

  forward_kinematics(*model_, flatten_q(*model_, s), &fk_);

  if (sc.has_object) {
    ObjectState& o = world_.object;
    o = sc.object;
    if (sc.randomize_domain) {
      const double scale = dom_.mass_scale;
      o.mass *= scale;
      o.inertia *= scale;
      o.com_offset = dom_.com_offset.cwiseMax(-o.half_extents).cwiseMin(o.half_extents);
    }
    o.pitch = 0;
    o.vel.setZero();
    o.pitch_rate = 0;
    const Vec2 anchor_local = o.grasp_offset - o.com_offset;
    if (sc.ref_mode == ObjectRefMode::kCarry) {
      o.pos = fk_.wrist_pos - anchor_local;
    } else {
      o.pos.y() = settled_object_height(o, sim_params().contact, model_->gravity);
      o.pos.x() = sc.start_attached ? fk_.wrist_pos.x() - anchor_local.x()
                                    : sc.object_start_x + o.com_offset.x();
    }
    world_.grasp_attached = sc.start_attached;
    const Vec2 handle_world = o.pos + (o.handle_offset - o.com_offset);
    world_.partner_ref_x = handle_world.x();
    world_.partner_ref_z = handle_world.y();

    const Vec2 center = o.center();
    obj_ref_.rel_x = center.x() - s.base_pos.x();
    obj_ref_.carry_dz = center.y() - cmd_.sigma_base[0];
    obj_ref_.ground_z = center.y();
    obj_ref_.pitch = 0;
    obj_ref_.mode = sc.ref_mode;
  }

  a_prev_ = VecX::Zero(model_->n_s);
  qd_prev_ = VecX::Zero(model_->nq());
  ticks_ = 0;
  gait_ = gait_phase(0, cfg_.reward.gait_period, std::abs(cmd_.v_coll[0]));

  const VecX seg = build_state_segment(*model_, world_, fk_);
  for (VecX& snap : snapshots_) snap = seg;
  snap_head_ = 0;
  obs_ = build_observation(layout_, cmd_, seg, gait_, a_prev_, theta_s_ref_);
  priv_ = build_privileged(*model_, world_, dom_);
  history_.reset(obs_);
}

void Environment::refresh_observation() {
  const int ring = static_cast<int>(snapshots_.size());
  snap_head_ = (snap_head_ + 1) % ring;
  snapshots_[snap_head_] = build_state_segment(*model_, world_, fk_);
  const int lag = std::min(dom_.latency, ring - 1);
  const VecX& seg = snapshots_[(snap_head_ - lag + ring) % ring];
  obs_ = build_observation(layout_, cmd_, seg, gait_, a_prev_, theta_s_ref_);
  priv_ = build_privileged(*model_, world_, dom_);
  history_.push(obs_);
}

StepResult Environment::step(const VecX& u) {
  StepResult res;
  const ActionResult act = apply_action(*model_, u, theta_s_ref_);
  const SimParams params = sim_params();

  Sim::TickReport rep;
  bool diverged = false;
  try {
    rep = sim_.tick(&world_, act.target_s, theta_i_ref_, cmd_.v_coll[0], params, &rng_);
  } catch (const SimDivergedError& e) {
    world_ = e.last_valid;
    diverged = true;
  }
  ++ticks_;

  forward_kinematics(*model_, flatten_q(*model_, world_.robot), &fk_);
  gait_ = gait_phase(world_.time, cfg_.reward.gait_period, std::abs(cmd_.v_coll[0]));

  if (!diverged) {
    RewardInputs in;
    in.model = model_;
    in.world = &world_;
    in.fk = &fk_;
    in.cmd = cmd_;
    in.theta_s_ref = theta_s_ref_;
    in.a = act.a;
    in.a_prev = a_prev_;
    in.qd_prev = qd_prev_;
    in.dt = cfg_.dt_tick;
    in.power_positive = rep.power_positive;
    in.gait = gait_;
    in.obj_ref = obj_ref_;
    res.terms = reward(in, cfg_.reward);
    res.reward = res.terms.total;
  }

  res.status = diverged ? Termination::kDiverged
                        : check_termination(*model_, world_,
                                            cfg_.scenario.grasp_required && world_.has_object,
                                            cfg_.termination);
  res.truncated = res.status == Termination::kRunning && ticks_ >= cfg_.scenario.episode_ticks;
  res.done = res.truncated || res.status != Termination::kRunning;

  a_prev_ = act.a;
  qd_prev_ = world_.robot.qd;
  refresh_observation();

  if (res.done) {
    res.final_obs = obs_;
    res.final_priv = priv_;
    history_.flatten(&res.final_history);
    reset(stage_);
  } else {
    refresh_command(false);
  }
  return res;
}

EnvSet::EnvSet(const RobotModel& model, const RgNet* rg, const EnvConfig& cfg, std::uint64_t seed,
               int n) {
  if (n < 1) throw ConfigError("env set: need at least one environment");
  envs_.reserve(n);
  for (int i = 0; i < n; ++i) {
    envs_.push_back(std::make_unique<Environment>(model, rg, cfg, seed, i));
  }
  workers_ = worker_count(n);
}

void EnvSet::reset_all(int stage) {
  for (auto& e : envs_) e->reset(stage);
}

void EnvSet::set_stage(int stage) {
  for (auto& e : envs_) e->set_stage(stage);
}

void EnvSet::gather_teacher(MatXf* out) const {
  const int n = size();
  const int obs_dim = envs_[0]->layout().total;
  out->resize(obs_dim + kPrivilegedDim, n);
  for (int i = 0; i < n; ++i) {
    out->col(i).head(obs_dim) = envs_[i]->obs().cast<float>();
    out->col(i).tail(kPrivilegedDim) = envs_[i]->privileged().cast<float>();
  }
}

void EnvSet::gather_history(MatXf* out) const {
  const int n = size();
  VecX flat;
  envs_[0]->history_flat(&flat);
  out->resize(flat.size(), n);
  out->col(0) = flat.cast<float>();
  for (int i = 1; i < n; ++i) {
    envs_[i]->history_flat(&flat);
    out->col(i) = flat.cast<float>();
  }
}

void EnvSet::step_all(const MatX& actions, std::vector<StepResult>* results) {
  const int n = size();
  if (actions.cols() != n) throw ConfigError("env set: action batch size");
  results->assign(n, StepResult{});
  if (workers_ <= 1) {
    for (int i = 0; i < n; ++i) (*results)[i] = envs_[i]->step(actions.col(i));
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers_);
  for (int t = 0; t < workers_; ++t) {
    pool.emplace_back([this, t, n, &actions, results]() {
      for (int i = t; i < n; i += workers_) {
        (*results)[i] = envs_[i]->step(actions.col(i));
      }
    });
  }
  for (std::thread& th : pool) th.join();
}

int worker_count(int hard_cap) {
  int count = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("IOWBC_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) count = static_cast<int>(v);
  }
  return std::max(1, std::min(count, hard_cap));
}

}  // namespace iowbc
