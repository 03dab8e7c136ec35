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

#include "iowbc/model.hpp"

#include <sstream>

#include "iowbc/config.hpp"

namespace iowbc {

int RobotModel::link_index(const std::string& link_name) const {
  for (int i = 0; i < n_links(); ++i) {
    if (links[i].name == link_name) return i;
  }
  throw ConfigError("model '" + name + "' has no link named '" + link_name + "'");
}

void RobotModel::finalize() {
  if (links.empty()) throw ConfigError("model has no links");
  if (links[0].joint != JointType::kFloatingBase || links[0].parent != -1) {
    throw ConfigError("link 0 must be the floating base");
  }
  interaction_links.clear();
  support_links.clear();
  dof_of_link.assign(links.size(), -1);

  int dof = 3;
  for (int i = 0; i < n_links(); ++i) {
    const Link& l = links[i];
    if (i > 0) {
      if (l.joint == JointType::kFloatingBase) {
        throw ConfigError("second floating base at link " + std::to_string(i));
      }
      if (l.parent < 0 || l.parent >= i) {
        throw ConfigError("link " + std::to_string(i) + " has invalid parent " +
                          std::to_string(l.parent));
      }
      if (l.limit_lo >= l.limit_hi) {
        throw ConfigError("link '" + l.name + "' has limit_lo >= limit_hi");
      }
      if (l.torque_limit <= 0) {
        throw ConfigError("link '" + l.name + "' has non-positive torque limit");
      }
      if (l.branch == Branch::kBase) {
        throw ConfigError("link '" + l.name + "': only the root may be branch base");
      }
      dof_of_link[i] = dof++;
      if (l.branch == Branch::kInteraction) interaction_links.push_back(i);
      if (l.branch == Branch::kSupport) support_links.push_back(i);
    }
    if (l.mass <= 0) throw ConfigError("link '" + l.name + "' has non-positive mass");
    if (l.inertia <= 0) throw ConfigError("link '" + l.name + "' has non-positive inertia");
  }
  n_i = static_cast<int>(interaction_links.size());
  n_s = static_cast<int>(support_links.size());

  for (int f : foot_links) {
    if (f >= 0) {
      if (f >= n_links()) throw ConfigError("foot link index out of range");
      for (const Link& l : links) {
        if (l.parent == f) throw ConfigError("foot link '" + links[f].name + "' is not a leaf");
      }
    }
  }
  if (wrist_link >= n_links()) throw ConfigError("wrist link index out of range");
  if (wrist_link >= 0 && links[wrist_link].branch != Branch::kInteraction) {
    throw ConfigError("wrist link must be on the interaction branch");
  }

  if (nominal_s.size() != n_s) nominal_s = VecX::Zero(n_s);
  if (nominal_i.size() != n_i) nominal_i = VecX::Zero(n_i);
}

double RobotModel::total_mass() const {
  double m = 0;
  for (const Link& l : links) m += l.mass;
  return m;
}

GeneralizedState GeneralizedState::neutral(const RobotModel& model) {
  GeneralizedState s;
  s.theta_i = VecX::Zero(model.n_i);
  s.theta_s = VecX::Zero(model.n_s);
  s.qd = VecX::Zero(model.nq());
  return s;
}

bool GeneralizedState::finite() const {
  return base_pos.allFinite() && std::isfinite(base_pitch) && theta_i.allFinite() &&
         theta_s.allFinite() && qd.allFinite();
}

VecX flatten_q(const RobotModel& model, const GeneralizedState& s) {
  VecX q(model.nq());
  q[0] = s.base_pos.x();
  q[1] = s.base_pos.y();
  q[2] = s.base_pitch;
  for (int k = 0; k < model.n_i; ++k) {
    q[model.dof_of_link[model.interaction_links[k]]] = s.theta_i[k];
  }
  for (int k = 0; k < model.n_s; ++k) {
    q[model.dof_of_link[model.support_links[k]]] = s.theta_s[k];
  }
  return q;
}

void unflatten_q(const RobotModel& model, const VecX& q, GeneralizedState* s) {
  s->base_pos = Vec2(q[0], q[1]);
  s->base_pitch = q[2];
  s->theta_i.resize(model.n_i);
  s->theta_s.resize(model.n_s);
  for (int k = 0; k < model.n_i; ++k) {
    s->theta_i[k] = q[model.dof_of_link[model.interaction_links[k]]];
  }
  for (int k = 0; k < model.n_s; ++k) {
    s->theta_s[k] = q[model.dof_of_link[model.support_links[k]]];
  }
}

namespace {

Link make_link(const std::string& name, int parent, Vec2 offset, double mass, Vec2 com,
               double inertia, Branch branch, double lo, double hi, double tau, double kp,
               double kd) {
  Link l;
  l.name = name;
  l.parent = parent;
  l.joint = JointType::kRevolute;
  l.offset = offset;
  l.mass = mass;
  l.com = com;
  l.inertia = inertia;
  l.branch = branch;
  l.limit_lo = lo;
  l.limit_hi = hi;
  l.torque_limit = tau;
  l.kp = kp;
  l.kd = kd;
  l.damping = 0.08;
  return l;
}

}  // namespace

RobotModel default_model() {
  RobotModel m;
  m.name = "planar_humanoid";

  Link base;
  base.name = "pelvis";
  base.parent = -1;
  base.joint = JointType::kFloatingBase;
  base.mass = 9.5;
  base.com = Vec2(0.0, 0.02);
  base.inertia = 0.10;
  base.branch = Branch::kBase;
  base.torque_limit = 1;  // unused on the root
  m.links.push_back(base);

  // Legs splayed at the fixed stance spacing; knee flexion is positive.
  const double hip_x = 0.15;
  for (int side = 0; side < 2; ++side) {
    const std::string sfx = side == 0 ? "_l" : "_r";
    const double sx = side == 0 ? hip_x : -hip_x;
    int thigh = m.n_links();
    m.links.push_back(make_link("thigh" + sfx, 0, Vec2(sx, 0.0), 2.5, Vec2(0, -0.15), 0.030,
                                Branch::kSupport, -2.0, 2.0, 80, 200, 18));
    int shank = m.n_links();
    m.links.push_back(make_link("shank" + sfx, thigh, Vec2(0, -0.30), 1.5, Vec2(0, -0.15), 0.018,
                                Branch::kSupport, -0.1, 2.4, 80, 200, 18));
    int foot = m.n_links();
    m.links.push_back(make_link("foot" + sfx, shank, Vec2(0, -0.30), 0.6, Vec2(0.01, -0.03),
                                0.004, Branch::kSupport, -1.0, 1.0, 40, 60, 5));
    m.foot_links[side] = foot;
  }

  int torso = m.n_links();
  m.links.push_back(make_link("torso", 0, Vec2(0, 0.10), 9.5, Vec2(0, 0.15), 0.12,
                              Branch::kSupport, -0.6, 1.2, 60, 150, 12));
  int upper_arm = m.n_links();
  m.links.push_back(make_link("upper_arm", torso, Vec2(0, 0.30), 1.0, Vec2(0, -0.125), 0.006,
                              Branch::kInteraction, -2.6, 2.6, 60, 90, 9));
  int forearm = m.n_links();
  m.links.push_back(make_link("forearm", upper_arm, Vec2(0, -0.25), 1.0, Vec2(0, -0.125), 0.006,
                              Branch::kInteraction, -2.6, 0.05, 40, 90, 9));

  m.wrist_link = forearm;
  m.wrist_offset = Vec2(0, -0.25);
  m.foot_half_length = 0.05;
  m.foot_drop = 0.05;

  m.nominal_s = VecX(7);
  m.nominal_s << -0.25, 0.5, -0.25, -0.25, 0.5, -0.25, 0.02;
  m.nominal_i = VecX(2);
  m.nominal_i << -0.55, -0.9;

  m.finalize();
  return m;
}

RobotModel model_from_config(const Config& cfg) {
  RobotModel m;
  m.name = cfg.get_string("model.name", "custom");
  m.gravity = cfg.get_double("model.gravity", kGravity);
  const int n = cfg.get_int("model.num_links");
  for (int i = 0; i < n; ++i) {
    const std::string p = "link." + std::to_string(i) + ".";
    Link l;
    l.name = cfg.get_string(p + "name");
    l.parent = cfg.get_int(p + "parent", i == 0 ? -1 : 0);
    const std::string jt = cfg.get_string(p + "joint", i == 0 ? "floating" : "revolute");
    if (jt == "floating") {
      l.joint = JointType::kFloatingBase;
    } else if (jt == "revolute") {
      l.joint = JointType::kRevolute;
    } else {
      throw ConfigError("link " + std::to_string(i) + ": unknown joint type '" + jt + "'");
    }
    VecX off = cfg.get_vector(p + "offset", VecX::Zero(2));
    if (off.size() != 2) throw ConfigError(p + "offset needs 2 numbers");
    l.offset = Vec2(off[0], off[1]);
    l.mass = cfg.get_double(p + "mass");
    VecX com = cfg.get_vector(p + "com", VecX::Zero(2));
    if (com.size() != 2) throw ConfigError(p + "com needs 2 numbers");
    l.com = Vec2(com[0], com[1]);
    l.inertia = cfg.get_double(p + "inertia");
    const std::string br = cfg.get_string(p + "branch", i == 0 ? "base" : "support");
    if (br == "base") {
      l.branch = Branch::kBase;
    } else if (br == "support") {
      l.branch = Branch::kSupport;
    } else if (br == "interaction") {
      l.branch = Branch::kInteraction;
    } else {
      throw ConfigError(p + "branch: unknown value '" + br + "'");
    }
    if (i > 0) {
      VecX lim = cfg.get_vector(p + "limits");
      if (lim.size() != 2) throw ConfigError(p + "limits needs 2 numbers");
      l.limit_lo = lim[0];
      l.limit_hi = lim[1];
      l.torque_limit = cfg.get_double(p + "torque_limit");
      l.kp = cfg.get_double(p + "kp", 0.0);
      l.kd = cfg.get_double(p + "kd", 0.0);
      l.damping = cfg.get_double(p + "damping", 0.0);
    }
    m.links.push_back(l);
  }

  auto find = [&m](const std::string& nm) {
    for (int i = 0; i < m.n_links(); ++i) {
      if (m.links[i].name == nm) return i;
    }
    throw ConfigError("model references unknown link '" + nm + "'");
  };
  if (cfg.has("model.wrist_link")) m.wrist_link = find(cfg.get_string("model.wrist_link"));
  VecX woff = cfg.get_vector("model.wrist_offset", VecX::Zero(2));
  if (woff.size() != 2) throw ConfigError("model.wrist_offset needs 2 numbers");
  m.wrist_offset = Vec2(woff[0], woff[1]);
  if (cfg.has("model.foot_links")) {
    std::istringstream fs(cfg.get_string("model.foot_links"));
    std::string a, b;
    if (!(fs >> a >> b)) throw ConfigError("model.foot_links needs two link names");
    m.foot_links = {find(a), find(b)};
  }
  m.foot_half_length = cfg.get_double("model.foot_half_length", 0.05);
  m.foot_drop = cfg.get_double("model.foot_drop", 0.05);

  m.finalize();
  if (cfg.has("model.nominal_s")) {
    VecX ns = cfg.get_vector("model.nominal_s");
    if (ns.size() != m.n_s) throw ConfigError("model.nominal_s size mismatch");
    m.nominal_s = ns;
  }
  if (cfg.has("model.nominal_i")) {
    VecX ni = cfg.get_vector("model.nominal_i");
    if (ni.size() != m.n_i) throw ConfigError("model.nominal_i size mismatch");
    m.nominal_i = ni;
  }
  return m;
}

RobotModel load_model(const std::string& path) {
  return model_from_config(Config::from_file(path));
}

}  // namespace iowbc
