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

#include "iowbc/kinematics.hpp"

#include <algorithm>
#include <limits>

namespace iowbc {

void forward_kinematics(const RobotModel& model, const VecX& q, FkResult* out) {
  const int n = model.n_links();
  out->p.resize(n);
  out->ang.resize(n);
  out->R.resize(n);
  out->com.resize(n);

  out->p[0] = Vec2(q[0], q[1]);
  out->ang[0] = q[2];
  out->R[0] = rot(q[2]);
  out->com[0] = out->p[0] + out->R[0] * model.links[0].com;

  for (int i = 1; i < n; ++i) {
    const Link& l = model.links[i];
    const int par = l.parent;
    out->p[i] = out->p[par] + out->R[par] * l.offset;
    out->ang[i] = out->ang[par] + q[model.dof_of_link[i]];
    out->R[i] = rot(out->ang[i]);
    out->com[i] = out->p[i] + out->R[i] * l.com;
  }

  if (model.wrist_link >= 0) {
    out->wrist_pos = out->p[model.wrist_link] + out->R[model.wrist_link] * model.wrist_offset;
    out->wrist_ang = out->ang[model.wrist_link];
  }
  for (int f = 0; f < 2; ++f) {
    const int li = model.foot_links[f];
    if (li >= 0) {
      out->foot_pos[f] = out->p[li];
      out->foot_ang[f] = out->ang[li];
    }
  }
}

FkResult forward_kinematics(const RobotModel& model, const GeneralizedState& s) {
  FkResult fk;
  forward_kinematics(model, flatten_q(model, s), &fk);
  return fk;
}

ComResult com_of(const RobotModel& model, const FkResult& fk) {
  ComResult r;
  Vec2 weighted = Vec2::Zero();
  for (int i = 0; i < model.n_links(); ++i) {
    weighted += model.links[i].mass * fk.com[i];
    r.mass += model.links[i].mass;
  }
  r.position = weighted / r.mass;
  return r;
}

Eigen::Matrix2Xd jacobian_wrist(const RobotModel& model, const GeneralizedState& s) {
  FkResult fk = forward_kinematics(model, s);
  Eigen::Matrix2Xd J(2, model.n_i);
  for (int k = 0; k < model.n_i; ++k) {
    const int li = model.interaction_links[k];
    J.col(k) = perp(fk.wrist_pos - fk.p[li]);
  }
  return J;
}

Vec2 fk_arm(const RobotModel& model, const VecX& theta_i) {
  Vec2 p = Vec2::Zero();
  double ang = 0;
  for (int k = 0; k < model.n_i; ++k) {
    ang += theta_i[k];
    if (k + 1 < model.n_i) {
      p += rot(ang) * model.links[model.interaction_links[k + 1]].offset;
    }
  }
  if (model.n_i > 0) p += rot(ang) * model.wrist_offset;
  return p;
}

Eigen::Matrix2Xd jacobian_arm(const RobotModel& model, const VecX& theta_i) {
  Eigen::Matrix2Xd J(2, model.n_i);
  const Vec2 wrist = fk_arm(model, theta_i);
  // Joint origins in the arm-root frame, rebuilt alongside the chain.
  Vec2 p = Vec2::Zero();
  double ang = 0;
  for (int k = 0; k < model.n_i; ++k) {
    J.col(k) = perp(wrist - p);
    ang += theta_i[k];
    if (k + 1 < model.n_i) {
      p += rot(ang) * model.links[model.interaction_links[k + 1]].offset;
    }
  }
  return J;
}

IkResult differential_ik(const RobotModel& model, const VecX& theta_init,
                         const WristTarget& target, const IkParams& params) {
  if (!theta_init.allFinite() || !target.position().allFinite()) {
    throw ConfigError("differential_ik: non-finite input");
  }
  if (theta_init.size() != model.n_i) {
    throw ConfigError("differential_ik: theta_init size mismatch");
  }
  const Vec2 goal = target.position();
  const double lam2 = params.damping * params.damping;

  // One damped-least-squares descent. The damping shrinks with the
  // remaining error so the terminal phase stays Newton-like even where the
  // arm is near a singular extension; the step clamp covers the far field.
  auto descend = [&](VecX theta, int* iters_used) {
    IkResult r;
    r.theta = std::move(theta);
    for (int k = 0; k < model.n_i; ++k) {
      const Link& l = model.links[model.interaction_links[k]];
      r.theta[k] = clampd(r.theta[k], l.limit_lo, l.limit_hi);
    }
    int it = 0;
    for (; it < params.max_iters; ++it) {
      const Vec2 e = goal - fk_arm(model, r.theta);
      r.err = e.norm();
      if (r.err <= params.tol) {
        r.converged = true;
        break;
      }
      const double lam2_eff = lam2 * std::min(1.0, 10.0 * r.err);
      const Eigen::Matrix2Xd J = jacobian_arm(model, r.theta);
      Mat2 A = J * J.transpose();
      A(0, 0) += lam2_eff;
      A(1, 1) += lam2_eff;
      VecX dtheta = J.transpose() * A.inverse() * e;
      const double step = dtheta.norm();
      if (step > params.step_clamp) dtheta *= params.step_clamp / step;
      for (int k = 0; k < model.n_i; ++k) {
        const Link& l = model.links[model.interaction_links[k]];
        r.theta[k] = clampd(r.theta[k] + dtheta[k], l.limit_lo, l.limit_hi);
      }
    }
    if (!r.converged) r.err = (goal - fk_arm(model, r.theta)).norm();
    *iters_used = it;
    return r;
  };

  int used = 0;
  IkResult res = descend(theta_init, &used);
  res.iters = used;
  if (res.converged) return res;

  // Joint-limit clamping can trap the descent in a wrapped-direction local
  // minimum; retry from a deterministic fan over the first joint.
  const Link& root = model.links[model.interaction_links[0]];
  int total = res.iters;
  for (double frac : {-0.8, -0.4, 0.0, 0.4, 0.8}) {
    VecX seed(model.n_i);
    seed[0] = clampd(frac * (frac < 0 ? -root.limit_lo : root.limit_hi), root.limit_lo,
                     root.limit_hi);
    for (int k = 1; k < model.n_i; ++k) {
      const Link& l = model.links[model.interaction_links[k]];
      seed[k] = 0.5 * (l.limit_lo + l.limit_hi);
    }
    IkResult attempt = descend(seed, &used);
    total += used;
    if (attempt.converged || attempt.err < res.err) res = attempt;
    res.iters = total;
    if (res.converged) return res;
  }
  return res;
}

SupportInterval support_polygon(const RobotModel& model, const FkResult& fk,
                                const std::array<bool, 2>& in_contact) {
  SupportInterval si;
  for (int f = 0; f < 2; ++f) {
    if (model.foot_links[f] < 0 || !in_contact[f]) continue;
    const double x = fk.foot_pos[f].x();
    const double lo = x - model.foot_half_length;
    const double hi = x + model.foot_half_length;
    if (!si.any) {
      si.lo = lo;
      si.hi = hi;
      si.any = true;
    } else {
      si.lo = std::min(si.lo, lo);
      si.hi = std::max(si.hi, hi);
    }
  }
  return si;
}

double settle_base_height(const RobotModel& model, GeneralizedState* s) {
  FkResult fk = forward_kinematics(model, *s);
  double min_z = std::numeric_limits<double>::max();
  for (int f = 0; f < 2; ++f) {
    const int li = model.foot_links[f];
    if (li < 0) continue;
    for (double sx : {-model.foot_half_length, model.foot_half_length}) {
      const Vec2 pt = fk.p[li] + fk.R[li] * Vec2(sx, -model.foot_drop);
      min_z = std::min(min_z, pt.y());
    }
  }
  if (min_z == std::numeric_limits<double>::max()) return s->base_pos.y();
  s->base_pos.y() -= min_z;
  return s->base_pos.y();
}

}  // namespace iowbc
