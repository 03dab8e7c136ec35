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

#include "iowbc/learn.hpp"

#include <chrono>
#include <filesystem>
#include <numeric>

#include "iowbc/config.hpp"

namespace iowbc {

GaussianPolicy make_policy(int input_dim, int act_dim, const std::vector<int>& hidden,
                           RngStream* rng) {
  if (input_dim < 1 || act_dim < 1) throw ConfigError("policy: bad dimensions");
  GaussianPolicy p;
  std::vector<int> actor_w = {input_dim};
  actor_w.insert(actor_w.end(), hidden.begin(), hidden.end());
  actor_w.push_back(act_dim);
  p.actor = make_mlp<float>(actor_w, rng, 0.01f);
  std::vector<int> critic_w = {input_dim};
  critic_w.insert(critic_w.end(), hidden.begin(), hidden.end());
  critic_w.push_back(1);
  p.critic = make_mlp<float>(critic_w, rng);
  p.log_std = VecXf::Constant(act_dim, kLogStdInit);
  p.input_dim = input_dim;
  p.act_dim = act_dim;
  return p;
}

void policy_means(const GaussianPolicy& p, const MatXf& x, MatXf* means) {
  *means = mlp_forward(p.actor, x);
}

void policy_values(const GaussianPolicy& p, const MatXf& x, VecX* values) {
  const MatXf v = mlp_forward(p.critic, x);
  *values = v.row(0).transpose().cast<double>();
}

void save_policy(const GaussianPolicy& p, const std::string& path, std::uint64_t layout_hash,
                 std::uint64_t step, std::uint64_t seed) {
  Checkpoint ck;
  ck.obs_layout_hash = layout_hash;
  ck.training_step = step;
  ck.rng_seed = seed;
  append_mlp_tensors(p.actor, "actor", &ck);
  append_mlp_tensors(p.critic, "critic", &ck);
  NamedTensor t;
  t.name = "log_std";
  t.dims = {static_cast<std::uint32_t>(p.log_std.size())};
  t.data.assign(p.log_std.data(), p.log_std.data() + p.log_std.size());
  ck.tensors.push_back(std::move(t));
  save_checkpoint(ck, path);
}

GaussianPolicy load_policy(const std::string& path, std::uint64_t expected_layout_hash) {
  const Checkpoint ck = load_checkpoint(path, expected_layout_hash);
  GaussianPolicy p;
  p.actor = mlp_from_checkpoint(ck, "actor");
  p.critic = mlp_from_checkpoint(ck, "critic");
  const NamedTensor& t = ck.require("log_std");
  p.log_std = Eigen::Map<const VecXf>(t.data.data(), static_cast<int>(t.data.size()));
  p.log_std = p.log_std.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
  p.input_dim = p.actor.input_dim();
  p.act_dim = p.actor.output_dim();
  if (p.critic.input_dim() != p.input_dim || p.critic.output_dim() != 1 ||
      p.log_std.size() != p.act_dim) {
    throw IoError("policy checkpoint is inconsistent: " + path);
  }
  return p;
}

void gae(const RolloutBatch& b, double gamma, double lam, VecX* advantages, VecX* returns) {
  const int T = b.horizon, N = b.n_envs;
  advantages->setZero(T * N);
  returns->setZero(T * N);
  for (int i = 0; i < N; ++i) {
    double acc = 0;
    for (int t = T - 1; t >= 0; --t) {
      const int k = t * N + i;
      const bool failed = b.done[k] != 0;
      const bool cut = b.trunc[k] != 0;
      double v_next;
      if (cut) {
        v_next = b.boot_values[k];
      } else if (t == T - 1) {
        v_next = b.last_values[i];
      } else {
        v_next = b.values[(t + 1) * N + i];
      }
      const double delta = b.rewards[k] + gamma * v_next * (failed ? 0.0 : 1.0) - b.values[k];
      const bool boundary = failed || cut;
      acc = delta + gamma * lam * (boundary ? 0.0 : 1.0) * acc;
      (*advantages)[k] = acc;
      (*returns)[k] = acc + b.values[k];
    }
  }
}

PpoLearner::PpoLearner(int input_dim, int act_dim, const PpoConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), rng_(seed, 31) {
  RngStream init_rng(seed, 37);
  policy_ = make_policy(input_dim, act_dim, cfg.hidden, &init_rng);
  std::vector<std::pair<int, int>> shapes;
  for (const MlpNetF* net : {&policy_.actor, &policy_.critic}) {
    for (int l = 0; l < net->n_layers(); ++l) {
      shapes.emplace_back(net->W[l].rows(), net->W[l].cols());
      shapes.emplace_back(net->b[l].size(), 1);
    }
  }
  shapes.emplace_back(act_dim, 1);
  opt_.init(shapes);
}

namespace {

struct PolicyParamRefs {
  std::vector<Eigen::Map<MatXf>> params;

  explicit PolicyParamRefs(GaussianPolicy* p) {
    for (MlpNetF* net : {&p->actor, &p->critic}) {
      for (int l = 0; l < net->n_layers(); ++l) {
        params.emplace_back(net->W[l].data(), net->W[l].rows(), net->W[l].cols());
        params.emplace_back(net->b[l].data(), net->b[l].size(), 1);
      }
    }
    params.emplace_back(p->log_std.data(), p->log_std.size(), 1);
  }
};

double global_grad_norm(const std::vector<MatXf>& grads) {
  double s = 0;
  for (const MatXf& g : grads) s += static_cast<double>(g.squaredNorm());
  return std::sqrt(s);
}

}  // namespace

UpdateStats PpoLearner::update(const RolloutBatch& batch) {
  UpdateStats stats;
  const int total = batch.horizon * batch.n_envs;
  const int act = policy_.act_dim;
  if (batch.inputs.cols() != total) throw ConfigError("ppo: batch shape mismatch");

  VecX adv, ret;
  gae(batch, cfg_.gamma, cfg_.lam, &adv, &ret);
  const double adv_mean = adv.mean();
  const double adv_std = std::sqrt((adv.array() - adv_mean).square().mean());
  adv = (adv.array() - adv_mean) / (adv_std + 1e-8);

  const GaussianPolicy snapshot = policy_;
  const AdamState<float> opt_snapshot = opt_;

  std::vector<int> perm(total);
  std::iota(perm.begin(), perm.end(), 0);
  const int mb_size = total / cfg_.minibatches;

  MlpWorkspace<float> ws_a, ws_c;
  MlpGrads<float> ga, gc;
  ga.init_like(policy_.actor);
  gc.init_like(policy_.critic);

  double sum_pl = 0, sum_vl = 0, sum_ent = 0, sum_kl = 0, sum_clip = 0;
  int n_mb = 0;
  bool stop = false;

  for (int epoch = 0; epoch < cfg_.epochs && !stop; ++epoch) {
    for (int i = total - 1; i > 0; --i) std::swap(perm[i], perm[rng_.uniform_int(0, i)]);
    for (int mb = 0; mb < cfg_.minibatches && !stop; ++mb) {
      const int lo = mb * mb_size;
      const int hi = mb == cfg_.minibatches - 1 ? total : lo + mb_size;
      const int B = hi - lo;

      MatXf x(batch.inputs.rows(), B), u(act, B);
      VecX adv_b(B), ret_b(B), logp_old(B);
      for (int k = 0; k < B; ++k) {
        const int src = perm[lo + k];
        x.col(k) = batch.inputs.col(src);
        u.col(k) = batch.actions.col(src);
        adv_b[k] = adv[src];
        ret_b[k] = ret[src];
        logp_old[k] = batch.logp[src];
      }

      const MatXf& mean_f = forward_cached(policy_.actor, x, &ws_a);
      const MatXf& val_f = forward_cached(policy_.critic, x, &ws_c);

      const MatX mean = mean_f.cast<double>();
      const VecX log_std = policy_.log_std.cast<double>();
      const VecX sigma = log_std.array().exp();
      const double log_norm = 0.5 * act * std::log(2 * kPi) + log_std.sum();

      MatX z(act, B);
      VecX logp_new(B);
      for (int k = 0; k < B; ++k) {
        z.col(k) = (u.col(k).cast<double>() - mean.col(k)).cwiseQuotient(sigma);
        logp_new[k] = -0.5 * z.col(k).squaredNorm() - log_norm;
      }

      const VecX ratio = (logp_new - logp_old).array().exp();
      double pl = 0, kl = 0, clipped = 0;
      VecX dlogp = VecX::Zero(B);
      for (int k = 0; k < B; ++k) {
        const double r = ratio[k];
        const double a = adv_b[k];
        const double s1 = r * a;
        const double s2 = clampd(r, 1 - cfg_.clip, 1 + cfg_.clip) * a;
        pl -= std::min(s1, s2) / B;
        const bool pass = s1 <= s2;
        if (!pass) clipped += 1;
        if (pass) dlogp[k] = -a * r / B;
        kl += (r - 1.0) - (logp_new[k] - logp_old[k]);
      }
      kl /= B;

      const VecX verr = val_f.row(0).transpose().cast<double>() - ret_b;
      const double vl = verr.squaredNorm() / B;
      const double ent = log_std.sum() + 0.5 * act * std::log(2 * kPi * std::exp(1.0));
      const double loss = pl + cfg_.vf_coef * vl - cfg_.entropy_coef * ent;
      if (!std::isfinite(loss) || !std::isfinite(kl)) {
        policy_ = snapshot;
        opt_ = opt_snapshot;
        ++anomalies_;
        stats.nan_aborted = true;
        stats.epochs_run = epoch;
        return stats;
      }

      // d loss / d mean and d loss / d log_std through the sampled actions.
      MatXf dmean(act, B);
      VecX dlogstd = VecX::Zero(act);
      for (int k = 0; k < B; ++k) {
        const VecX dmu = dlogp[k] * z.col(k).cwiseQuotient(sigma);
        dmean.col(k) = dmu.cast<float>();
        dlogstd += dlogp[k] * (z.col(k).array().square() - 1.0).matrix();
      }
      dlogstd.array() -= cfg_.entropy_coef;

      MatXf dval(1, B);
      dval.row(0) = (2.0 * cfg_.vf_coef / B * verr).transpose().cast<float>();

      for (int l = 0; l < policy_.actor.n_layers(); ++l) {
        ga.dW[l].setZero();
        ga.db[l].setZero();
      }
      for (int l = 0; l < policy_.critic.n_layers(); ++l) {
        gc.dW[l].setZero();
        gc.db[l].setZero();
      }
      mlp_backward(policy_.actor, ws_a, dmean, &ga);
      mlp_backward(policy_.critic, ws_c, dval, &gc);

      std::vector<MatXf> grads;
      for (int l = 0; l < policy_.actor.n_layers(); ++l) {
        grads.push_back(ga.dW[l]);
        grads.push_back(ga.db[l]);
      }
      for (int l = 0; l < policy_.critic.n_layers(); ++l) {
        grads.push_back(gc.dW[l]);
        grads.push_back(gc.db[l]);
      }
      grads.push_back(dlogstd.cast<float>());

      const double norm = global_grad_norm(grads);
      if (norm > cfg_.grad_clip) {
        const float scale = static_cast<float>(cfg_.grad_clip / norm);
        for (MatXf& g : grads) g *= scale;
      }

      PolicyParamRefs refs(&policy_);
      std::vector<const MatXf*> gptr;
      gptr.reserve(grads.size());
      for (const MatXf& g : grads) gptr.push_back(&g);
      AdamConfig ac;
      ac.lr = cfg_.lr;
      adam_step<float>(&refs.params, gptr, &opt_, ac);
      policy_.log_std = policy_.log_std.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);

      sum_pl += pl;
      sum_vl += vl;
      sum_ent += ent;
      sum_kl += kl;
      sum_clip += clipped / B;
      ++n_mb;
      stats.epochs_run = epoch + 1;
      if (kl > cfg_.kl_stop) stop = true;
    }
  }

  if (n_mb > 0) {
    stats.policy_loss = sum_pl / n_mb;
    stats.value_loss = sum_vl / n_mb;
    stats.entropy = sum_ent / n_mb;
    stats.approx_kl = sum_kl / n_mb;
    stats.clip_fraction = sum_clip / n_mb;
  }
  return stats;
}

void collect_rollout(EnvSet* envs, const GaussianPolicy& policy, int horizon, bool student_input,
                     RngStream* action_rng, RolloutBatch* out) {
  const int N = envs->size();
  const int act = policy.act_dim;
  out->horizon = horizon;
  out->n_envs = N;
  out->inputs.resize(policy.input_dim, horizon * N);
  out->actions.resize(act, horizon * N);
  out->logp.resize(horizon * N);
  out->values.resize(horizon * N);
  out->rewards.resize(horizon * N);
  out->done.assign(horizon * N, 0);
  out->trunc.assign(horizon * N, 0);
  out->boot_values.setZero(horizon * N);
  out->term_means = RewardBreakdown{};
  out->episodes_finished = 0;
  out->failures = 0;

  MatXf x, means;
  VecX values;
  MatX actions(act, N);
  std::vector<StepResult> results;
  const VecX sigma = policy.log_std.cast<double>().array().exp();
  const VecX log_std = policy.log_std.cast<double>();

  for (int t = 0; t < horizon; ++t) {
    if (student_input) {
      envs->gather_history(&x);
    } else {
      envs->gather_teacher(&x);
    }
    policy_means(policy, x, &means);
    policy_values(policy, x, &values);

    for (int i = 0; i < N; ++i) {
      const int k = t * N + i;
      out->inputs.col(k) = x.col(i);
      const VecX mu = means.col(i).cast<double>();
      VecX u(act);
      double quad = 0;
      for (int d = 0; d < act; ++d) {
        const double eps = action_rng->normal();
        u[d] = mu[d] + sigma[d] * eps;
        quad += eps * eps;
      }
      out->actions.col(k) = u.cast<float>();
      out->logp[k] = -0.5 * quad - 0.5 * act * std::log(2 * kPi) - log_std.sum();
      out->values[k] = values[i];
      actions.col(i) = u;
    }

    envs->step_all(actions, &results);

    for (int i = 0; i < N; ++i) {
      const int k = t * N + i;
      const StepResult& r = results[i];
      out->rewards[k] = r.reward;
      out->term_means.sync += r.terms.sync;
      out->term_means.obj += r.terms.obj;
      out->term_means.smooth += r.terms.smooth;
      out->term_means.gate += r.terms.gate;
      out->term_means.total += r.terms.total;
      if (r.done) {
        ++out->episodes_finished;
        if (r.truncated) {
          out->trunc[k] = 1;
          MatXf xf(policy.input_dim, 1);
          if (student_input) {
            xf.col(0) = r.final_history.cast<float>();
          } else {
            xf.col(0).head(r.final_obs.size()) = r.final_obs.cast<float>();
            xf.col(0).tail(r.final_priv.size()) = r.final_priv.cast<float>();
          }
          VecX vb;
          policy_values(policy, xf, &vb);
          out->boot_values[k] = vb[0];
        } else {
          out->done[k] = 1;
          ++out->failures;
        }
      }
    }
  }

  if (student_input) {
    envs->gather_history(&x);
  } else {
    envs->gather_teacher(&x);
  }
  policy_values(policy, x, &values);
  out->last_values = values;

  const double inv = 1.0 / (horizon * N);
  out->term_means.sync *= inv;
  out->term_means.obj *= inv;
  out->term_means.smooth *= inv;
  out->term_means.gate *= inv;
  out->term_means.total *= inv;
}

std::string train_log_header() {
  return "update,steps,mean_reward,r_sync,r_obj,r_smooth,r_gate,policy_loss,value_loss,"
         "entropy,approx_kl,stage,episodes,wall_seconds";
}

std::string format_train_row(const TrainRow& r) {
  std::string s;
  s += std::to_string(r.update) + "," + std::to_string(r.steps) + ",";
  s += fmt_double(r.mean_reward) + "," + fmt_double(r.r_sync) + "," + fmt_double(r.r_obj) + ",";
  s += fmt_double(r.r_smooth) + "," + fmt_double(r.r_gate) + ",";
  s += fmt_double(r.policy_loss) + "," + fmt_double(r.value_loss) + ",";
  s += fmt_double(r.entropy) + "," + fmt_double(r.approx_kl) + ",";
  s += std::to_string(r.stage) + "," + std::to_string(r.episodes) + ",";
  s += fmt_double(r.wall_seconds);
  return s;
}

PolicyTrainResult train_policy(const RobotModel& model, const RgNet* rg,
                               const PolicyTrainConfig& cfg) {
  if (cfg.updates < 1) throw ConfigError("train: need at least one update");
  EnvConfig env_cfg = cfg.env;
  env_cfg.train_sampling = true;

  const ObsLayout layout = obs_layout(model);
  const int input_dim = cfg.student_input ? layout.total * env_cfg.history
                                          : layout.total + kPrivilegedDim;
  const std::uint64_t layout_hash = cfg.student_input
                                        ? student_layout_hash(layout, env_cfg.history)
                                        : teacher_layout_hash(layout);

  EnvSet envs(model, rg, env_cfg, cfg.seed, cfg.ppo.n_envs);
  PpoLearner learner(input_dim, model.n_s, cfg.ppo, cfg.seed);
  RngStream action_rng(cfg.seed, 7);
  CurriculumState cur;
  envs.reset_all(cur.stage);

  PolicyTrainResult result;
  RolloutBatch batch;
  std::string log_text = train_log_header() + "\n";
  const auto t_start = std::chrono::steady_clock::now();
  long steps = 0;

  for (int update = 1; update <= cfg.updates; ++update) {
    collect_rollout(&envs, learner.policy(), cfg.ppo.horizon, cfg.student_input, &action_rng,
                    &batch);
    steps += static_cast<long>(cfg.ppo.horizon) * cfg.ppo.n_envs;
    const UpdateStats stats = learner.update(batch);

    const double mean_reward = batch.rewards.mean();
    if (curriculum_update(cfg.curriculum, mean_reward, &cur)) {
      envs.set_stage(cur.stage);
    }

    TrainRow row;
    row.update = update;
    row.steps = steps;
    row.mean_reward = mean_reward;
    row.r_sync = batch.term_means.sync;
    row.r_obj = batch.term_means.obj;
    row.r_smooth = batch.term_means.smooth;
    row.r_gate = batch.term_means.gate;
    row.policy_loss = stats.policy_loss;
    row.value_loss = stats.value_loss;
    row.entropy = stats.entropy;
    row.approx_kl = stats.approx_kl;
    row.stage = cur.stage;
    row.episodes = batch.episodes_finished;
    row.wall_seconds =
        cfg.deterministic_log
            ? 0.0
            : std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    log_text += format_train_row(row) + "\n";
    result.rows.push_back(row);

    if (!cfg.checkpoint_dir.empty() &&
        (update % cfg.checkpoint_every == 0 || update == cfg.updates)) {
      char name[64];
      std::snprintf(name, sizeof name, "/policy_%06d.ckpt", update);
      save_policy(learner.policy(), cfg.checkpoint_dir + name, layout_hash,
                  static_cast<std::uint64_t>(update), cfg.seed);
    }
  }

  if (!cfg.log_path.empty()) write_text_file(cfg.log_path, log_text);
  result.policy = learner.policy();
  result.final_stage = cur.stage;
  result.final_mean_reward = result.rows.empty() ? 0 : result.rows.back().mean_reward;
  result.anomalies = learner.anomalies();
  return result;
}

DistillResult distill_student(const RobotModel& model, const RgNet* rg,
                              const GaussianPolicy& teacher, const DistillConfig& cfg) {
  if (cfg.iterations < 2) throw ConfigError("distill: need at least two iterations");
  EnvConfig env_cfg = cfg.env;
  env_cfg.train_sampling = true;

  const ObsLayout layout = obs_layout(model);
  const int hist_dim = layout.total * env_cfg.history;
  if (teacher.input_dim != layout.total + kPrivilegedDim) {
    throw ConfigError("distill: teacher input does not match the observation layout");
  }

  EnvSet envs(model, rg, env_cfg, cfg.seed, cfg.n_envs);
  envs.reset_all(cfg.stage);
  RngStream rng(cfg.seed, 41);
  RngStream init_rng(cfg.seed, 61);
  GaussianPolicy student = make_policy(hist_dim, model.n_s, cfg.hidden, &init_rng);

  AdamState<float> opt;
  std::vector<std::pair<int, int>> shapes;
  for (int l = 0; l < student.actor.n_layers(); ++l) {
    shapes.emplace_back(student.actor.W[l].rows(), student.actor.W[l].cols());
    shapes.emplace_back(student.actor.b[l].size(), 1);
  }
  shapes.emplace_back(model.n_s, 1);
  opt.init(shapes);
  AdamConfig adam_cfg;
  adam_cfg.lr = cfg.lr;

  const VecX t_logstd = teacher.log_std.cast<double>();
  const VecX t_sigma = t_logstd.array().exp();
  const VecX t_var = t_sigma.array().square();

  const int val_stride = std::max(2, static_cast<int>(std::lround(1.0 / cfg.val_fraction)));
  const int train_cap = cfg.buffer_cap;
  const int val_cap = std::max(64, cfg.buffer_cap / val_stride);
  MatXf buf_x(hist_dim, train_cap), buf_mu(model.n_s, train_cap);
  MatXf val_x(hist_dim, val_cap), val_mu(model.n_s, val_cap);
  int buf_n = 0, buf_head = 0, val_n = 0, val_head = 0;
  long stored = 0;

  MatXf x_hist, x_teach, mu_t, mu_s;
  MatX actions(model.n_s, cfg.n_envs);
  std::vector<StepResult> results;
  MlpWorkspace<float> ws;
  MlpGrads<float> grads;
  grads.init_like(student.actor);

  auto student_kl = [&](const MatXf& xs, const MatXf& mus, int count) {
    // mean over samples of KL(teacher || student), closed form diagonal.
    if (count == 0) return 0.0;
    const MatXf xv = xs.leftCols(count);
    const MatXf pred = mlp_forward(student.actor, xv);
    const VecX s_logstd = student.log_std.cast<double>();
    const VecX s_var = s_logstd.array().exp().square();
    double total = 0;
    for (int k = 0; k < count; ++k) {
      const VecX dmu = (pred.col(k) - mus.col(k)).cast<double>();
      total += (s_logstd - t_logstd).sum() +
               ((t_var.array() + dmu.array().square()) / (2 * s_var.array()) - 0.5).sum();
    }
    return total / count;
  };

  DistillResult result;
  const int anneal = std::max(1, cfg.iterations / 2);
  std::string log_text = "iteration,beta,train_kl,heldout_kl,stored,wall_seconds\n";
  const auto t_start = std::chrono::steady_clock::now();

  for (int it = 0; it < cfg.iterations; ++it) {
    const double beta = it < anneal ? 1.0 - static_cast<double>(it) / anneal : 0.0;

    for (int t = 0; t < cfg.horizon; ++t) {
      envs.gather_history(&x_hist);
      envs.gather_teacher(&x_teach);
      policy_means(teacher, x_teach, &mu_t);
      policy_means(student, x_hist, &mu_s);
      const VecX s_sigma = student.log_std.cast<double>().array().exp();

      for (int i = 0; i < cfg.n_envs; ++i) {
        VecX u_t(model.n_s), u_s(model.n_s);
        for (int d = 0; d < model.n_s; ++d) {
          u_t[d] = mu_t(d, i) + t_sigma[d] * rng.normal();
          u_s[d] = mu_s(d, i) + s_sigma[d] * rng.normal();
        }
        actions.col(i) = beta * u_t + (1 - beta) * u_s;

        if (stored % val_stride == 0) {
          val_x.col(val_head) = x_hist.col(i);
          val_mu.col(val_head) = mu_t.col(i);
          val_head = (val_head + 1) % val_cap;
          val_n = std::min(val_n + 1, val_cap);
        } else {
          buf_x.col(buf_head) = x_hist.col(i);
          buf_mu.col(buf_head) = mu_t.col(i);
          buf_head = (buf_head + 1) % train_cap;
          buf_n = std::min(buf_n + 1, train_cap);
        }
        ++stored;
      }
      envs.step_all(actions, &results);
    }

    double train_kl = 0;
    int train_batches = 0;
    for (int epoch = 0; epoch < cfg.epochs_per_iter; ++epoch) {
      const int batches = std::max(1, buf_n / cfg.batch);
      for (int bidx = 0; bidx < batches; ++bidx) {
        const int B = std::min(cfg.batch, buf_n);
        MatXf xb(hist_dim, B), mub(model.n_s, B);
        for (int k = 0; k < B; ++k) {
          const int src = rng.uniform_int(0, buf_n - 1);
          xb.col(k) = buf_x.col(src);
          mub.col(k) = buf_mu.col(src);
        }
        const MatXf& pred = forward_cached(student.actor, xb, &ws);
        const VecX s_logstd = student.log_std.cast<double>();
        const VecX s_var = s_logstd.array().exp().square();

        double kl = 0;
        MatXf dmean(model.n_s, B);
        VecX dlogstd = VecX::Zero(model.n_s);
        for (int k = 0; k < B; ++k) {
          const VecX dmu = (pred.col(k) - mub.col(k)).cast<double>();
          kl += (s_logstd - t_logstd).sum() +
                ((t_var.array() + dmu.array().square()) / (2 * s_var.array()) - 0.5).sum();
          dmean.col(k) = (dmu.cwiseQuotient(s_var) / B).cast<float>();
          dlogstd += (1.0 - (t_var.array() + dmu.array().square()) / s_var.array()).matrix() / B;
        }
        kl /= B;
        if (!std::isfinite(kl)) throw NumericError("distill: loss diverged");
        train_kl += kl;
        ++train_batches;

        for (int l = 0; l < student.actor.n_layers(); ++l) {
          grads.dW[l].setZero();
          grads.db[l].setZero();
        }
        mlp_backward(student.actor, ws, dmean, &grads);

        std::vector<Eigen::Map<MatXf>> params;
        std::vector<MatXf> gmats;
        for (int l = 0; l < student.actor.n_layers(); ++l) {
          gmats.push_back(grads.dW[l]);
          gmats.push_back(grads.db[l]);
        }
        gmats.push_back(dlogstd.cast<float>());
        for (int l = 0; l < student.actor.n_layers(); ++l) {
          params.emplace_back(student.actor.W[l].data(), student.actor.W[l].rows(),
                              student.actor.W[l].cols());
          params.emplace_back(student.actor.b[l].data(), student.actor.b[l].size(), 1);
        }
        params.emplace_back(student.log_std.data(), student.log_std.size(), 1);
        std::vector<const MatXf*> gptr;
        for (const MatXf& g : gmats) gptr.push_back(&g);
        adam_step<float>(&params, gptr, &opt, adam_cfg);
        student.log_std = student.log_std.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
      }
    }

    const double held = student_kl(val_x, val_mu, val_n);
    result.curve.emplace_back(train_batches ? train_kl / train_batches : 0.0, held);
    const double wall =
        cfg.deterministic_log
            ? 0.0
            : std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    log_text += std::to_string(it) + "," + fmt_double(beta) + "," +
                fmt_double(result.curve.back().first) + "," + fmt_double(held) + "," +
                std::to_string(stored) + "," + fmt_double(wall) + "\n";
  }

  if (!cfg.log_path.empty()) write_text_file(cfg.log_path, log_text);
  result.student = student;
  result.held_out_kl = result.curve.back().second;
  return result;
}

}  // namespace iowbc
