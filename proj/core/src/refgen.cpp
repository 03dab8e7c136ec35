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

#include "iowbc/refgen.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "iowbc/config.hpp"

namespace iowbc {

bool analytic_leg_ik(double l1, double l2, const Vec2& v, double base_pitch, double* hip,
                     double* knee, double* ankle) {
  const double r = v.norm();
  if (r > l1 + l2 || r < std::abs(l1 - l2) || r < 1e-12) return false;
  const double a_v = std::atan2(v.x(), v.y());
  const double cos_g = clampd((l1 * l1 + r * r - l2 * l2) / (2 * l1 * r), -1.0, 1.0);
  const double gamma = std::acos(cos_g);
  const double cos_b = clampd((r * r - l1 * l1 - l2 * l2) / (2 * l1 * l2), -1.0, 1.0);
  const double beta = std::acos(cos_b);
  const double phi1 = a_v - gamma;
  *hip = phi1 - base_pitch;
  *knee = beta;
  *ankle = -(phi1 + beta);
  return true;
}

namespace {

/// Leg chain bookkeeping the posture solver relies on: two thigh-shank-foot
/// chains hanging off the root plus one waist joint.
struct LegLayout {
  struct Leg {
    int thigh, shank, foot;     /// link indices
    int s_hip, s_knee, s_ankle; /// positions within theta_S
  };
  std::array<Leg, 2> legs;
  int waist_link = -1;
  int s_waist = -1;
  double l1 = 0, l2 = 0;
};

LegLayout leg_layout(const RobotModel& m) {
  LegLayout lay;
  auto s_index = [&](int link) {
    for (int k = 0; k < m.n_s; ++k) {
      if (m.support_links[k] == link) return k;
    }
    throw ConfigError("posture solver: leg joint not on the support branch");
  };
  std::vector<bool> in_leg(m.links.size(), false);
  for (int f = 0; f < 2; ++f) {
    const int foot = m.foot_links[f];
    const int shank = m.links[foot].parent;
    const int thigh = shank >= 0 ? m.links[shank].parent : -1;
    if (thigh < 1 || m.links[thigh].parent != 0) {
      throw ConfigError("posture solver expects thigh-shank-foot legs rooted at the base");
    }
    lay.legs[f] = {thigh, shank, foot, s_index(thigh), s_index(shank), s_index(foot)};
    in_leg[thigh] = in_leg[shank] = in_leg[foot] = true;
  }
  for (int k = 0; k < m.n_s; ++k) {
    if (!in_leg[m.support_links[k]]) {
      if (lay.waist_link >= 0) throw ConfigError("posture solver expects a single waist joint");
      lay.waist_link = m.support_links[k];
      lay.s_waist = k;
    }
  }
  if (lay.waist_link < 0) throw ConfigError("posture solver expects a waist joint");
  lay.l1 = m.links[lay.legs[0].shank].offset.norm();
  lay.l2 = m.links[lay.legs[0].foot].offset.norm();
  if (lay.l1 <= 0 || lay.l2 <= 0) throw ConfigError("posture solver: degenerate leg lengths");
  return lay;
}

struct PostureEval {
  VecX residual;
  VecX theta_s;
  VecX q;
  double com_x = 0, com_z = 0;
  double limit_excess = 0;   /// worst joint-range or reach overrun (rad or m)
};

/// Static actuator torques holding posture q with the weight split between
/// the two sole centers by the lever rule about the com.
void static_torques(const RobotModel& m, const FkResult& fk, VecX* tau) {
  const ComResult com = com_of(m, fk);
  const double x_l = fk.p[m.foot_links[0]].x();
  const double x_r = fk.p[m.foot_links[1]].x();
  const double total = com.mass * m.gravity;
  double f_l = 0, f_r = 0;
  if (std::abs(x_l - x_r) > 1e-9) {
    f_l = total * (x_r - com.position.x()) / (x_r - x_l);
    f_r = total - f_l;
  } else {
    f_l = f_r = total / 2;
  }
  // Descendant masses accumulate by a reverse sweep; contact forces act at
  // the sole points below each ankle.
  const int nl = m.n_links();
  std::vector<double> sub_mass(nl), sub_mx(nl);
  for (int i = 0; i < nl; ++i) {
    sub_mass[i] = m.links[i].mass;
    sub_mx[i] = m.links[i].mass * fk.com[i].x();
  }
  for (int i = nl - 1; i >= 1; --i) {
    sub_mass[m.links[i].parent] += sub_mass[i];
    sub_mx[m.links[i].parent] += sub_mx[i];
  }
  std::vector<double> foot_fz(nl, 0.0);
  foot_fz[m.foot_links[0]] = f_l;
  foot_fz[m.foot_links[1]] = f_r;

  tau->setZero(m.nq() - 3);
  for (int j = 1; j < nl; ++j) {
    const double pjx = fk.p[j].x();
    double mom = m.gravity * (sub_mx[j] - sub_mass[j] * pjx);
    // Contact moments from any foot inside this subtree.
    for (int f = 0; f < 2; ++f) {
      const int foot = m.foot_links[f];
      bool inside = false;
      for (int a = foot; a >= 1; a = m.links[a].parent) {
        if (a == j) {
          inside = true;
          break;
        }
      }
      if (inside) mom -= foot_fz[foot] * (fk.p[foot].x() - pjx);
    }
    (*tau)[m.dof_of_link[j] - 3] = -mom;
  }
}

class PostureProblem {
 public:
  PostureProblem(const RobotModel& m, const LegLayout& lay, const VecX& theta_i, double h_com,
                 double alpha, const RgSolverWeights& w)
      : m_(m), lay_(lay), theta_i_(theta_i), h_(h_com), alpha_(alpha), w_(w) {
    support_lo_ = std::min(m.links[lay.legs[0].thigh].offset.x(),
                           m.links[lay.legs[1].thigh].offset.x()) -
                  m.foot_half_length;
    support_hi_ = std::max(m.links[lay.legs[0].thigh].offset.x(),
                           m.links[lay.legs[1].thigh].offset.x()) +
                  m.foot_half_length;
  }

  /// x = (base_x, base_z, pitch, waist)
  void eval(const Eigen::Vector4d& x, PostureEval* out) const {
    const int n_res = 2 + (m_.nq() - 3) + m_.n_s + 3 + 1 + m_.n_s + 2;
    out->residual.setZero(n_res);
    out->theta_s.setZero(m_.n_s);
    out->limit_excess = 0;

    const Vec2 base(x[0], x[1]);
    const double pitch = x[2];
    out->theta_s[lay_.s_waist] = x[3];
    const Mat2 rb = rot(pitch);

    double reach_over[2] = {0, 0};
    for (int f = 0; f < 2; ++f) {
      const auto& leg = lay_.legs[f];
      const Vec2 hip = base + rb * m_.links[leg.thigh].offset;
      const Vec2 ankle_target(m_.links[leg.thigh].offset.x(), m_.foot_drop);
      Vec2 v = hip - ankle_target;
      const double r = v.norm();
      const double r_hi = lay_.l1 + lay_.l2 - 1e-6;
      const double r_lo = std::abs(lay_.l1 - lay_.l2) + 1e-6;
      if (r > r_hi) {
        reach_over[f] = r - r_hi;
        v *= r_hi / r;
      } else if (r < r_lo) {
        reach_over[f] = r_lo - r;
        v *= r_lo / std::max(r, 1e-9);
      }
      double hip_a, knee_a, ankle_a;
      analytic_leg_ik(lay_.l1, lay_.l2, v, pitch, &hip_a, &knee_a, &ankle_a);
      out->theta_s[leg.s_hip] = hip_a;
      out->theta_s[leg.s_knee] = knee_a;
      out->theta_s[leg.s_ankle] = ankle_a;
    }

    GeneralizedState s;
    s.base_pos = base;
    s.base_pitch = pitch;
    s.theta_i = theta_i_;
    s.theta_s = out->theta_s;
    s.qd = VecX::Zero(m_.nq());
    out->q = flatten_q(m_, s);

    FkResult fk;
    forward_kinematics(m_, out->q, &fk);
    const ComResult com = com_of(m_, fk);
    out->com_x = com.position.x();
    out->com_z = com.position.y();

    VecX tau;
    static_torques(m_, fk, &tau);

    int r_i = 0;
    out->residual[r_i++] = std::sqrt(w_.height) * (out->com_z - h_);
    out->residual[r_i++] = std::sqrt(w_.pitch) * (pitch - alpha_);
    for (int k = 0; k < tau.size(); ++k) {
      out->residual[r_i++] = std::sqrt(w_.torque) * tau[k];
    }
    for (int k = 0; k < m_.n_s; ++k) {
      out->residual[r_i++] = std::sqrt(w_.nominal) * (out->theta_s[k] - m_.nominal_s[k]);
    }
    out->residual[r_i++] = std::sqrt(w_.symmetry) *
                           (out->theta_s[lay_.legs[0].s_hip] - out->theta_s[lay_.legs[1].s_hip]);
    out->residual[r_i++] =
        std::sqrt(w_.symmetry) *
        (out->theta_s[lay_.legs[0].s_knee] - out->theta_s[lay_.legs[1].s_knee]);
    out->residual[r_i++] =
        std::sqrt(w_.symmetry) *
        (out->theta_s[lay_.legs[0].s_ankle] - out->theta_s[lay_.legs[1].s_ankle]);
    const double outside = std::max(0.0, out->com_x - support_hi_) +
                           std::max(0.0, support_lo_ - out->com_x);
    out->residual[r_i++] = std::sqrt(w_.support) * outside;
    if (outside > 0) out->limit_excess = std::max(out->limit_excess, outside);
    for (int k = 0; k < m_.n_s; ++k) {
      const Link& l = m_.links[m_.support_links[k]];
      const double over = std::max(0.0, out->theta_s[k] - l.limit_hi) +
                          std::max(0.0, l.limit_lo - out->theta_s[k]);
      out->residual[r_i++] = std::sqrt(w_.limits) * over;
      out->limit_excess = std::max(out->limit_excess, over);
    }
    for (int f = 0; f < 2; ++f) {
      out->residual[r_i++] = std::sqrt(w_.limits) * reach_over[f];
      out->limit_excess = std::max(out->limit_excess, reach_over[f]);
    }
  }

  double support_lo() const { return support_lo_; }
  double support_hi() const { return support_hi_; }

 private:
  const RobotModel& m_;
  const LegLayout& lay_;
  VecX theta_i_;
  double h_, alpha_;
  RgSolverWeights w_;
  double support_lo_ = 0, support_hi_ = 0;
};

}  // namespace

PostureSolution solve_posture(const RobotModel& model, const VecX& theta_i, double h_com,
                              double alpha, const RgSolverWeights& w) {
  if (theta_i.size() != model.n_i || !theta_i.allFinite() || !std::isfinite(h_com) ||
      !std::isfinite(alpha)) {
    throw ConfigError("solve_posture: bad inputs");
  }
  const LegLayout lay = leg_layout(model);
  const PostureProblem prob(model, lay, theta_i, h_com, alpha, w);

  const double z_max = model.foot_drop + lay.l1 + lay.l2 - 5e-3;
  const Link& waist = model.links[lay.waist_link];
  const double waist_comp = clampd(-0.6 * alpha, waist.limit_lo, waist.limit_hi);
  const std::array<Eigen::Vector4d, 4> starts = {
      Eigen::Vector4d(0, std::min(h_com + 0.02, z_max), alpha, 0.02),
      Eigen::Vector4d(0, std::max(0.45, h_com - 0.08), 0.5 * alpha, 0.3),
      Eigen::Vector4d(-0.05, clampd(h_com, 0.45, z_max), alpha, waist_comp),
      Eigen::Vector4d(0, z_max, 0, -0.1)};

  PostureSolution best;
  best.cost = std::numeric_limits<double>::infinity();
  PostureEval ev, ev_trial;

  for (const Eigen::Vector4d& start : starts) {
    Eigen::Vector4d x = start;
    prob.eval(x, &ev);
    double cost = ev.residual.squaredNorm();
    double lambda = 1e-4;
    const double fd = 1e-6;

    for (int it = 0; it < 80; ++it) {
      Eigen::Matrix<double, Eigen::Dynamic, 4> jac(ev.residual.size(), 4);
      for (int d = 0; d < 4; ++d) {
        Eigen::Vector4d xp = x;
        xp[d] += fd;
        prob.eval(xp, &ev_trial);
        jac.col(d) = (ev_trial.residual - ev.residual) / fd;
      }
      const Eigen::Matrix4d jtj = jac.transpose() * jac;
      const Eigen::Vector4d jtr = jac.transpose() * ev.residual;
      bool improved = false;
      for (int tries = 0; tries < 8; ++tries) {
        const Eigen::Vector4d delta =
            (jtj + lambda * Eigen::Matrix4d::Identity()).ldlt().solve(-jtr);
        prob.eval(x + delta, &ev_trial);
        const double trial_cost = ev_trial.residual.squaredNorm();
        if (std::isfinite(trial_cost) && trial_cost < cost) {
          x += delta;
          ev = ev_trial;
          const bool tiny = (cost - trial_cost) < 1e-12 || delta.norm() < 1e-9;
          cost = trial_cost;
          lambda = std::max(lambda * 0.5, 1e-9);
          improved = true;
          if (tiny) it = 80;
          break;
        }
        lambda *= 10;
      }
      if (!improved) break;
    }

    const bool feasible = ev.limit_excess <= 1e-7 && ev.com_x >= prob.support_lo() - 1e-9 &&
                          ev.com_x <= prob.support_hi() + 1e-9;
    const bool better = (feasible && !best.feasible) ||
                        (feasible == best.feasible && cost < best.cost);
    if (better) {
      best.theta_s = ev.theta_s;
      best.base_x = x[0];
      best.base_z = x[1];
      best.cost = cost;
      best.feasible = feasible;
    }
  }

  if (best.theta_s.size() == 0) {
    best.theta_s = ev.theta_s;
    best.base_x = 0;
    best.base_z = z_max;
    best.feasible = false;
  }
  // Snap hairline limit overruns so stored targets satisfy the limits
  // exactly; anything larger was already flagged infeasible.
  for (int k = 0; k < model.n_s; ++k) {
    const Link& l = model.links[model.support_links[k]];
    best.theta_s[k] = clampd(best.theta_s[k], l.limit_lo, l.limit_hi);
  }
  return best;
}

RgDataset generate_rg_dataset(const RobotModel& model, int n, const RgRanges& ranges,
                              std::uint64_t seed) {
  if (n < 1) throw ConfigError("generate_rg_dataset: n must be >= 1");
  if (ranges.h_hi < ranges.h_lo || ranges.alpha_hi < ranges.alpha_lo ||
      ranges.wrist_x_hi < ranges.wrist_x_lo || ranges.wrist_z_hi < ranges.wrist_z_lo) {
    throw ConfigError("generate_rg_dataset: empty range");
  }
  RngStream rng(seed, 17);
  RgDataset ds;
  ds.inputs.resize(n, model.n_i + 2);
  ds.targets.resize(n, model.n_s);
  ds.cost.resize(n);

  const std::int64_t max_attempts = std::max<std::int64_t>(100, 10LL * n);
  int kept = 0;
  for (std::int64_t attempt = 0; attempt < max_attempts && kept < n; ++attempt) {
    WristTarget target;
    target.x_task_base = Vec2(rng.uniform(ranges.wrist_x_lo, ranges.wrist_x_hi),
                              rng.uniform(ranges.wrist_z_lo, ranges.wrist_z_hi));
    const IkResult ik = differential_ik(model, model.nominal_i, target);
    if (!ik.converged) continue;
    const double h = rng.uniform(ranges.h_lo, ranges.h_hi);
    const double alpha = rng.uniform(ranges.alpha_lo, ranges.alpha_hi);
    const PostureSolution sol = solve_posture(model, ik.theta, h, alpha);
    if (!sol.feasible) continue;
    ds.inputs.row(kept).head(model.n_i) = ik.theta.transpose();
    ds.inputs(kept, model.n_i) = h;
    ds.inputs(kept, model.n_i + 1) = alpha;
    ds.targets.row(kept) = sol.theta_s.transpose();
    ds.cost[kept] = sol.cost;
    ++kept;
  }
  if (kept < n) {
    throw ConfigError("rg dataset: feasibility yield below 10%; ranges do not fit the model");
  }
  return ds;
}

void save_rg_dataset(const RgDataset& ds, const std::string& path) {
  const int n_i = static_cast<int>(ds.inputs.cols()) - 2;
  const int n_s = static_cast<int>(ds.targets.cols());
  std::string out;
  for (int k = 0; k < n_i; ++k) out += "theta_i_" + std::to_string(k) + ",";
  out += "h_com,alpha,";
  for (int k = 0; k < n_s; ++k) out += "theta_s_" + std::to_string(k) + ",";
  out += "cost,feasible\n";
  for (int i = 0; i < ds.n(); ++i) {
    for (int k = 0; k < ds.inputs.cols(); ++k) out += fmt_double(ds.inputs(i, k)) + ",";
    for (int k = 0; k < n_s; ++k) out += fmt_double(ds.targets(i, k)) + ",";
    out += fmt_double(ds.cost[i]) + ",1\n";
  }
  write_text_file(path, out);
}

RgDataset load_rg_dataset(const std::string& path) {
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("rg dataset empty: " + path);
  int n_i = 0, n_s = 0;
  {
    std::istringstream hdr(line);
    std::string col;
    while (std::getline(hdr, col, ',')) {
      if (col.rfind("theta_i_", 0) == 0) ++n_i;
      if (col.rfind("theta_s_", 0) == 0) ++n_s;
    }
    if (n_i < 1 || n_s < 1) throw IoError("rg dataset: malformed header: " + path);
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ls, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw IoError("rg dataset: bad number '" + cell + "' in " + path);
      }
    }
    if (static_cast<int>(row.size()) != n_i + 2 + n_s + 2) {
      throw IoError("rg dataset: wrong column count in " + path);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("rg dataset has no samples: " + path);
  RgDataset ds;
  const int n = static_cast<int>(rows.size());
  ds.inputs.resize(n, n_i + 2);
  ds.targets.resize(n, n_s);
  ds.cost.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n_i + 2; ++k) ds.inputs(i, k) = rows[i][k];
    for (int k = 0; k < n_s; ++k) ds.targets(i, k) = rows[i][n_i + 2 + k];
    ds.cost[i] = rows[i][n_i + 2 + n_s];
  }
  return ds;
}

RgTrainResult train_rg(const RgDataset& ds, const RobotModel& model, const RgTrainConfig& cfg,
                       RgNet* rg) {
  if (rg->frozen) throw ConfigError("train_rg: net is frozen");
  if (ds.inputs.cols() != model.n_i + 2 || ds.targets.cols() != model.n_s) {
    throw ConfigError("train_rg: dataset does not match the model");
  }
  if (cfg.epochs < 1 || cfg.batch < 1 || cfg.val_fraction <= 0 || cfg.val_fraction >= 1) {
    throw ConfigError("train_rg: bad training config");
  }
  rg->n_i = model.n_i;
  rg->n_s = model.n_s;
  if (rg->net.widths.empty()) {
    RngStream init_rng(cfg.seed, 23);
    rg->net = make_mlp<float>({model.n_i + 2, 128, 64, model.n_s}, &init_rng);
  }
  if (rg->net.input_dim() != model.n_i + 2 || rg->net.output_dim() != model.n_s) {
    throw ConfigError("train_rg: net dims do not match the model");
  }

  const int n = ds.n();
  const int n_val = std::max(1, static_cast<int>(std::lround(cfg.val_fraction * n)));
  const int n_train = n - n_val;
  if (n_train < 1) throw ConfigError("train_rg: dataset too small to split");

  RngStream rng(cfg.seed, 29);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(0, i)]);

  MatXf x_train(model.n_i + 2, n_train), y_train(model.n_s, n_train);
  MatXf x_val(model.n_i + 2, n_val), y_val(model.n_s, n_val);
  for (int i = 0; i < n_train; ++i) {
    x_train.col(i) = ds.inputs.row(order[i]).transpose().cast<float>();
    y_train.col(i) = ds.targets.row(order[i]).transpose().cast<float>();
  }
  for (int i = 0; i < n_val; ++i) {
    x_val.col(i) = ds.inputs.row(order[n_train + i]).transpose().cast<float>();
    y_val.col(i) = ds.targets.row(order[n_train + i]).transpose().cast<float>();
  }

  // Standardize by train-split statistics; the scalers get folded into the
  // first and last layers before freezing so inference stays a plain pass.
  const VecXf mu_in = x_train.rowwise().mean();
  const VecXf sd_in =
      ((x_train.colwise() - mu_in).rowwise().squaredNorm() / n_train).cwiseSqrt().cwiseMax(1e-6f);
  const VecXf mu_out = y_train.rowwise().mean();
  const VecXf sd_out =
      ((y_train.colwise() - mu_out).rowwise().squaredNorm() / n_train).cwiseSqrt().cwiseMax(1e-6f);
  x_train = sd_in.cwiseInverse().asDiagonal() * (x_train.colwise() - mu_in);
  x_val = sd_in.cwiseInverse().asDiagonal() * (x_val.colwise() - mu_in);
  y_train = sd_out.cwiseInverse().asDiagonal() * (y_train.colwise() - mu_out);

  MlpNetF& net = rg->net;
  MlpGrads<float> grads;
  grads.init_like(net);
  AdamState<float> adam;
  std::vector<std::pair<int, int>> shapes;
  for (int l = 0; l < net.n_layers(); ++l) {
    shapes.emplace_back(net.W[l].rows(), net.W[l].cols());
    shapes.emplace_back(net.b[l].size(), 1);
  }
  adam.init(shapes);
  AdamConfig adam_cfg;
  adam_cfg.lr = cfg.lr;

  MlpWorkspace<float> ws;
  auto val_mse = [&]() {
    // Reported in raw units (rad^2 per joint), not the normalized space.
    MatXf pred = mlp_forward(net, x_val);
    pred = (sd_out.asDiagonal() * pred).colwise() + mu_out;
    return static_cast<double>((pred - y_val).squaredNorm()) / (n_val * model.n_s);
  };

  RgTrainResult result;
  result.best_val_mse = val_mse();
  MlpNetF best = net;
  std::vector<int> batch_order(n_train);
  std::iota(batch_order.begin(), batch_order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    adam_cfg.lr = cfg.lr * (epoch >= (cfg.epochs * 17) / 20  ? 0.09
                            : epoch >= (cfg.epochs * 3) / 5 ? 0.3
                                                            : 1.0);
    for (int i = n_train - 1; i > 0; --i) {
      std::swap(batch_order[i], batch_order[rng.uniform_int(0, i)]);
    }
    double train_sse = 0;
    for (int start = 0; start < n_train; start += cfg.batch) {
      const int bs = std::min(cfg.batch, n_train - start);
      MatXf xb(model.n_i + 2, bs), yb(model.n_s, bs);
      for (int i = 0; i < bs; ++i) {
        xb.col(i) = x_train.col(batch_order[start + i]);
        yb.col(i) = y_train.col(batch_order[start + i]);
      }
      const MatXf& pred = forward_cached(net, xb, &ws);
      const MatXf err = pred - yb;
      train_sse += err.squaredNorm();
      const MatXf dy = err * (2.0f / static_cast<float>(bs * model.n_s));
      for (int l = 0; l < net.n_layers(); ++l) {
        grads.dW[l].setZero();
        grads.db[l].setZero();
      }
      mlp_backward(net, ws, dy, &grads);
      std::vector<Eigen::Map<MatXf>> params;
      std::vector<const MatXf*> gptrs;
      std::vector<MatXf> bgrads;
      bgrads.reserve(net.n_layers());
      for (int l = 0; l < net.n_layers(); ++l) bgrads.emplace_back(grads.db[l]);
      for (int l = 0; l < net.n_layers(); ++l) {
        params.emplace_back(net.W[l].data(), net.W[l].rows(), net.W[l].cols());
        params.emplace_back(net.b[l].data(), net.b[l].size(), 1);
        gptrs.push_back(&grads.dW[l]);
        gptrs.push_back(&bgrads[l]);
      }
      adam_step<float>(&params, gptrs, &adam, adam_cfg);
    }
    const double v = val_mse();
    if (!std::isfinite(v)) throw NumericError("train_rg: validation loss diverged");
    result.curve.emplace_back(train_sse / (n_train * model.n_s), v);
    if (v < result.best_val_mse) {
      result.best_val_mse = v;
      best = net;
    }
  }

  rg->net = best;
  MlpNetF& folded = rg->net;
  folded.W[0] = folded.W[0] * sd_in.cwiseInverse().asDiagonal();
  folded.b[0] -= folded.W[0] * mu_in;
  const int last = folded.n_layers() - 1;
  folded.W[last] = sd_out.asDiagonal() * folded.W[last];
  folded.b[last] = sd_out.cwiseProduct(folded.b[last]) + mu_out;
  rg->frozen = true;
  return result;
}

VecX rg_infer(const RgNet& rg, const RobotModel& model, const VecX& theta_i, double h_com,
              double alpha) {
  if (!rg.frozen) throw ConfigError("rg_infer: net must be frozen first");
  if (theta_i.size() != rg.n_i) throw ConfigError("rg_infer: theta_i dimension mismatch");
  VecXf in(rg.n_i + 2);
  in.head(rg.n_i) = theta_i.cast<float>();
  in[rg.n_i] = static_cast<float>(h_com);
  in[rg.n_i + 1] = static_cast<float>(alpha);
  const VecXf out = mlp_forward(rg.net, in);
  VecX theta_s(rg.n_s);
  for (int k = 0; k < rg.n_s; ++k) {
    const Link& l = model.links[model.support_links[k]];
    theta_s[k] = clampd(out[k], l.limit_lo, l.limit_hi);
  }
  return theta_s;
}

std::uint64_t rg_layout_hash(const RobotModel& model) {
  return fnv1a64("rg|" + std::to_string(model.n_i) + "|" + std::to_string(model.n_s));
}

void save_rg(const RgNet& rg, const RobotModel& model, const std::string& path,
             std::uint64_t seed) {
  Checkpoint ck;
  ck.obs_layout_hash = rg_layout_hash(model);
  ck.rng_seed = seed;
  append_mlp_tensors(rg.net, "rg", &ck);
  save_checkpoint(ck, path);
}

RgNet load_rg(const std::string& path, const RobotModel& model) {
  const Checkpoint ck = load_checkpoint(path, rg_layout_hash(model));
  RgNet rg;
  rg.net = mlp_from_checkpoint(ck, "rg");
  rg.frozen = true;
  rg.n_i = model.n_i;
  rg.n_s = model.n_s;
  if (rg.net.input_dim() != model.n_i + 2 || rg.net.output_dim() != model.n_s) {
    throw IoError("rg checkpoint does not match the model: " + path);
  }
  return rg;
}

}  // namespace iowbc
