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

#include "iowbc/dynamics.hpp"

namespace iowbc {

namespace {

/// F = I * S for a planar spatial inertia (m, h, Io) about the world origin.
inline Eigen::Vector3d apply_inertia(double m, const Vec2& h, double io,
                                     const Eigen::Vector3d& s) {
  const Vec2 v(s[1], s[2]);
  const Vec2 ph = perp(h);
  Eigen::Vector3d f;
  f[0] = io * s[0] + ph.dot(v);
  f.tail<2>() = s[0] * ph + m * v;
  return f;
}

inline double dot3(const Eigen::Vector3d& a, const Eigen::Vector3d& b) { return a.dot(b); }

}  // namespace

PlanarDynamics::PlanarDynamics(const RobotModel& model) : model_(&model) {
  const int nl = model.n_links();
  const int nq = model.nq();
  axis_.resize(nq);
  cm_.resize(nl);
  ch_.resize(nl);
  cio_.resize(nl);
  w_.resize(nl);
  a_.resize(nl);
  fsub_.resize(nl);
  M_.setZero(nq, nq);
  bias_.setZero(nq);
  rhs_.setZero(nq);
  qdd_full_.setZero(nq);
  Mjj_.setZero(nq - 3, nq - 3);
}

void PlanarDynamics::refresh_axes(const VecX& q) {
  forward_kinematics(*model_, q, &fk_);
  const Vec2 pb = fk_.p[0];
  axis_[0] = Eigen::Vector3d(0, 1, 0);
  axis_[1] = Eigen::Vector3d(0, 0, 1);
  axis_[2] << 1.0, perp(-pb);
  for (int i = 1; i < model_->n_links(); ++i) {
    const int d = model_->dof_of_link[i];
    axis_[d] << 1.0, perp(-fk_.p[i]);
  }
}

const MatX& PlanarDynamics::mass_matrix(const VecX& q) {
  refresh_axes(q);
  const int nl = model_->n_links();

  for (int i = 0; i < nl; ++i) {
    const Link& l = model_->links[i];
    cm_[i] = l.mass;
    ch_[i] = l.mass * fk_.com[i];
    cio_[i] = l.inertia + l.mass * fk_.com[i].squaredNorm();
  }
  for (int i = nl - 1; i >= 1; --i) {
    const int par = model_->links[i].parent;
    cm_[par] += cm_[i];
    ch_[par] += ch_[i];
    cio_[par] += cio_[i];
  }

  M_.setZero();
  // Base block from the whole-tree composite.
  for (int a = 0; a < 3; ++a) {
    const Eigen::Vector3d f = apply_inertia(cm_[0], ch_[0], cio_[0], axis_[a]);
    for (int b = 0; b <= a; ++b) M_(a, b) = dot3(axis_[b], f);
  }
  // Joint rows, walking each subtree force up the ancestor chain.
  for (int i = 1; i < nl; ++i) {
    const int di = model_->dof_of_link[i];
    const Eigen::Vector3d f = apply_inertia(cm_[i], ch_[i], cio_[i], axis_[di]);
    M_(di, di) = dot3(axis_[di], f);
    int j = model_->links[i].parent;
    while (j > 0) {
      const int dj = model_->dof_of_link[j];
      M_(di, dj) = dot3(axis_[dj], f);
      j = model_->links[j].parent;
    }
    for (int a = 0; a < 3; ++a) M_(di, a) = dot3(axis_[a], f);
  }
  M_.triangularView<Eigen::StrictlyUpper>() = M_.transpose();
  return M_;
}

const VecX& PlanarDynamics::bias_forces(const VecX& q, const VecX& qd) {
  refresh_axes(q);
  return bias_impl(qd);
}

const VecX& PlanarDynamics::bias_impl(const VecX& qd) {
  // Zero-acceleration sweep with the gravity trick: accelerating the base
  // frame upward at g folds gravity into the inertial forces.
  const int nl = model_->n_links();

  w_[0] = qd[2];
  a_[0] = Vec2(0, model_->gravity);
  for (int i = 1; i < nl; ++i) {
    const Link& l = model_->links[i];
    const int par = l.parent;
    const Vec2 r = fk_.R[par] * l.offset;
    w_[i] = w_[par] + qd[model_->dof_of_link[i]];
    a_[i] = a_[par] - w_[par] * w_[par] * r;
  }
  // Base origin is a coordinate point, not a material point: its linear
  // acceleration (0, g) needs no centrifugal term.
  for (int i = 0; i < nl; ++i) {
    const Link& l = model_->links[i];
    const Vec2 s = fk_.R[i] * l.com;
    const Vec2 ac = a_[i] - w_[i] * w_[i] * s;
    const Vec2 f = l.mass * ac;
    fsub_[i] << moment(fk_.com[i], f), f;
  }
  for (int i = nl - 1; i >= 1; --i) {
    fsub_[model_->links[i].parent] += fsub_[i];
  }

  for (int a = 0; a < 3; ++a) bias_[a] = dot3(axis_[a], fsub_[0]);
  for (int i = 1; i < nl; ++i) {
    const int d = model_->dof_of_link[i];
    bias_[d] = dot3(axis_[d], fsub_[i]);
  }
  return bias_;
}

void PlanarDynamics::forward(const VecX& q, const VecX& qd, const VecX& tau,
                             const std::vector<ExternalForce>& ext, const DynOptions& opt,
                             VecX* qdd) {
  if (!q.allFinite() || !qd.allFinite() || !tau.allFinite()) {
    throw NumericError("forward dynamics: non-finite state or torque");
  }
  const int nq = model_->nq();
  mass_matrix(q);
  bias_impl(qd);

  rhs_ = -bias_;
  for (int i = 1; i < model_->n_links(); ++i) {
    const Link& l = model_->links[i];
    const int d = model_->dof_of_link[i];
    double t = tau[d - 3] - l.damping * qd[d];
    if (q[d] < l.limit_lo) {
      t += opt.limit_stop_kp * (l.limit_lo - q[d]) - opt.limit_stop_kd * qd[d];
    } else if (q[d] > l.limit_hi) {
      t += opt.limit_stop_kp * (l.limit_hi - q[d]) - opt.limit_stop_kd * qd[d];
    }
    rhs_[d] += t;
  }

  for (const ExternalForce& e : ext) {
    Eigen::Vector3d fsp;
    fsp << moment(e.point, e.force), e.force;
    int j = e.link;
    while (j > 0) {
      rhs_[model_->dof_of_link[j]] += dot3(axis_[model_->dof_of_link[j]], fsp);
      j = model_->links[j].parent;
    }
    for (int a = 0; a < 3; ++a) rhs_[a] += dot3(axis_[a], fsp);
  }

  Msolve_ = M_;
  if (opt.implicit_dt > 0) {
    if (opt.implicit_damping != nullptr) {
      if (opt.implicit_damping->size() != nq) {
        throw NumericError("forward dynamics: implicit damping size mismatch");
      }
      Msolve_.diagonal() += opt.implicit_dt * *opt.implicit_damping;
    }
    if (opt.point_dampers != nullptr) {
      for (const PointDamper& pd : *opt.point_dampers) {
        // Point Jacobian columns for the dofs this link moves with.
        int nd = 0;
        int dofs[16];
        double jx[16], jz[16];
        auto add_dof = [&](int d) {
          if (nd == 16) throw NumericError("forward dynamics: kinematic chain too deep");
          const Eigen::Vector3d& s = axis_[d];
          dofs[nd] = d;
          jx[nd] = s[1] + s[0] * pd.point.y();
          jz[nd] = s[2] - s[0] * pd.point.x();
          ++nd;
        };
        for (int a = 0; a < 3; ++a) add_dof(a);
        for (int j = pd.link; j > 0; j = model_->links[j].parent) {
          add_dof(model_->dof_of_link[j]);
        }
        for (int a = 0; a < nd; ++a) {
          for (int b = 0; b < nd; ++b) {
            Msolve_(dofs[a], dofs[b]) +=
                opt.implicit_dt * (pd.cx * jx[a] * jx[b] + pd.cz * jz[a] * jz[b]);
          }
        }
      }
    }
  }

  if (opt.lock_base) {
    const int nj = nq - 3;
    Mjj_ = Msolve_.block(3, 3, nj, nj);
    ldlt_joints_.compute(Mjj_);
    if (ldlt_joints_.info() != Eigen::Success) {
      throw NumericError("forward dynamics: mass matrix factorization failed");
    }
    qdd->setZero(nq);
    qdd->tail(nj) = ldlt_joints_.solve(rhs_.tail(nj));
  } else {
    ldlt_.compute(Msolve_);
    if (ldlt_.info() != Eigen::Success) {
      throw NumericError("forward dynamics: mass matrix factorization failed");
    }
    *qdd = ldlt_.solve(rhs_);
  }
  if (!qdd->allFinite()) throw NumericError("forward dynamics: non-finite acceleration");
}

VecX forward_dynamics(const RobotModel& model, const VecX& q, const VecX& qd, const VecX& tau,
                      const std::vector<ExternalForce>& ext, const DynOptions& opt) {
  PlanarDynamics dyn(model);
  VecX qdd;
  dyn.forward(q, qd, tau, ext, opt, &qdd);
  return qdd;
}

VecX pack_tau(const RobotModel& model, const VecX& tau_s, const VecX& tau_i) {
  VecX tau = VecX::Zero(model.nq() - 3);
  for (int k = 0; k < model.n_s; ++k) {
    tau[model.dof_of_link[model.support_links[k]] - 3] = tau_s[k];
  }
  for (int k = 0; k < model.n_i; ++k) {
    tau[model.dof_of_link[model.interaction_links[k]] - 3] = tau_i[k];
  }
  return tau;
}

void link_origin_velocities(const RobotModel& model, const FkResult& fk, const VecX& qd,
                            std::vector<double>* w, std::vector<Vec2>* vo) {
  const int nl = model.n_links();
  w->resize(nl);
  vo->resize(nl);
  (*w)[0] = qd[2];
  (*vo)[0] = Vec2(qd[0], qd[1]);
  for (int i = 1; i < nl; ++i) {
    const int par = model.links[i].parent;
    const Vec2 r = fk.R[par] * model.links[i].offset;
    (*vo)[i] = (*vo)[par] + (*w)[par] * perp(r);
    (*w)[i] = (*w)[par] + qd[model.dof_of_link[i]];
  }
}

namespace {

void link_velocities(const RobotModel& model, const FkResult& fk, const VecX& qd,
                     std::vector<double>* w, std::vector<Vec2>* vc) {
  std::vector<Vec2> vo;
  link_origin_velocities(model, fk, qd, w, &vo);
  vc->resize(model.n_links());
  for (int i = 0; i < model.n_links(); ++i) {
    const Vec2 s = fk.R[i] * model.links[i].com;
    (*vc)[i] = vo[i] + (*w)[i] * perp(s);
  }
}

}  // namespace

double kinetic_energy(const RobotModel& model, const VecX& q, const VecX& qd) {
  FkResult fk;
  forward_kinematics(model, q, &fk);
  std::vector<double> w;
  std::vector<Vec2> vc;
  link_velocities(model, fk, qd, &w, &vc);
  double e = 0;
  for (int i = 0; i < model.n_links(); ++i) {
    const Link& l = model.links[i];
    e += 0.5 * l.mass * vc[i].squaredNorm() + 0.5 * l.inertia * w[i] * w[i];
  }
  return e;
}

double potential_energy(const RobotModel& model, const VecX& q) {
  FkResult fk;
  forward_kinematics(model, q, &fk);
  double e = 0;
  for (int i = 0; i < model.n_links(); ++i) {
    e += model.links[i].mass * model.gravity * fk.com[i].y();
  }
  return e;
}

Vec2 com_velocity(const RobotModel& model, const VecX& q, const VecX& qd) {
  FkResult fk;
  forward_kinematics(model, q, &fk);
  std::vector<double> w;
  std::vector<Vec2> vc;
  link_velocities(model, fk, qd, &w, &vc);
  Vec2 p = Vec2::Zero();
  double m = 0;
  for (int i = 0; i < model.n_links(); ++i) {
    p += model.links[i].mass * vc[i];
    m += model.links[i].mass;
  }
  return p / m;
}

}  // namespace iowbc
