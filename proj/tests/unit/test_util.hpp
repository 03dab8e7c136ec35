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

#ifndef IOWBC_TESTS_UNIT_TEST_UTIL_HPP_
#define IOWBC_TESTS_UNIT_TEST_UTIL_HPP_

#include <unistd.h>

#include <atomic>
#include <complex>
#include <filesystem>
#include <string>
#include <vector>

#include "iowbc/model.hpp"

namespace iowbc {
namespace test {

/// Unique temp directory, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    const auto base = std::filesystem::temp_directory_path();
    path_ = base / ("iowbc_" + tag + "_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  std::string dir() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

/// One free rigid body, no joints: the floating base alone.
inline RobotModel single_body_model(double mass = 3.0, double inertia = 0.05,
                                    const Vec2& com = Vec2::Zero()) {
  RobotModel m;
  m.name = "single_body";
  Link root;
  root.name = "body";
  root.parent = -1;
  root.joint = JointType::kFloatingBase;
  root.mass = mass;
  root.com = com;
  root.inertia = inertia;
  m.links.push_back(root);
  m.nominal_s.resize(0);
  m.nominal_i.resize(0);
  m.finalize();
  return m;
}

struct PendulumLink {
  double length = 0.4;    /// joint-to-joint offset along -z at zero angle
  double mass = 1.0;
  double com_drop = 0.2;  /// com at (0, -com_drop) in the link frame
  double inertia = 0.01;  /// about the com
  double damping = 0;
};

/// Chain of revolute links hanging from the base; use lock_base for a
/// textbook pendulum. Gains and limits are left wide open.
inline RobotModel pendulum_model(const std::vector<PendulumLink>& chain) {
  RobotModel m;
  m.name = "pendulum";
  Link root;
  root.name = "anchor";
  root.parent = -1;
  root.joint = JointType::kFloatingBase;
  root.mass = 1.0;
  root.inertia = 0.01;
  m.links.push_back(root);
  int parent = 0;
  double drop = 0;
  for (size_t i = 0; i < chain.size(); ++i) {
    Link l;
    l.name = "seg" + std::to_string(i);
    l.parent = parent;
    l.joint = JointType::kRevolute;
    l.offset = Vec2(0, i == 0 ? 0.0 : -chain[i - 1].length);
    l.mass = chain[i].mass;
    l.com = Vec2(0, -chain[i].com_drop);
    l.inertia = chain[i].inertia;
    l.limit_lo = -50;
    l.limit_hi = 50;
    l.torque_limit = 1e6;
    l.damping = chain[i].damping;
    l.branch = Branch::kSupport;
    m.links.push_back(l);
    parent = static_cast<int>(m.links.size()) - 1;
    drop += chain[i].length;
    (void)drop;
  }
  m.nominal_s = VecX::Zero(static_cast<int>(chain.size()));
  m.nominal_i.resize(0);
  m.finalize();
  return m;
}

/// Independent planar transform stack over one kinematic chain using
/// complex arithmetic: returns the world position of `local` on `link`
/// given the full flat q = [x, z, pitch, joints in link order].
inline Vec2 chain_point_oracle(const RobotModel& m, const VecX& q, int link,
                               const Vec2& local) {
  using C = std::complex<double>;
  auto rot_c = [](double a, const C& v) {
    // rot(a) = [[cos a, sin a], [-sin a, cos a]] as a complex multiply
    return C(std::cos(a), -std::sin(a)) * v;
  };
  // Walk up to the root collecting the chain, then fold down from the base.
  std::vector<int> chain;
  for (int i = link; i >= 0; i = m.links[i].parent) chain.push_back(i);
  C pos(q[0], q[1]);
  double ang = q[2];
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    const Link& l = m.links[*it];
    if (l.joint == JointType::kFloatingBase) continue;
    pos += rot_c(ang, C(l.offset.x(), l.offset.y()));
    ang += q[m.dof_of_link[*it]];
  }
  pos += rot_c(ang, C(local.x(), local.y()));
  return Vec2(pos.real(), pos.imag());
}

}  // namespace test
}  // namespace iowbc

#endif  // IOWBC_TESTS_UNIT_TEST_UTIL_HPP_
