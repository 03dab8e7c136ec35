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

#ifndef IOWBC_SCENARIO_HPP_
#define IOWBC_SCENARIO_HPP_

#include <string>
#include <utility>
#include <vector>

#include "iowbc/config.hpp"
#include "iowbc/sim.hpp"

namespace iowbc {

/// Where the object is expected to sit for the pose-keeping reward: carried
/// at the hands or riding on the ground in front of the robot.
enum class ObjectRefMode { kCarry, kGround };

/// One task setup: the object, the virtual partner, perturbations, the
/// command timeline and episode bookkeeping. Loaded from a flat key = value
/// file; built-ins exist for the three task types.
struct Scenario {
  std::string name = "balance";
  TaskType task = TaskType::kBalance;
  int episode_ticks = 480;          /// 50 Hz control ticks
  bool has_object = false;
  bool grasp_required = false;
  bool start_attached = false;
  ObjectRefMode ref_mode = ObjectRefMode::kCarry;
  double object_start_x = 0.45;     /// box center ahead of the base (ground start)
  ObjectState object;               /// nominal; eval sweeps override the mass
  PartnerModel partner;
  ImpulseSchedule impulses;
  DomainRanges ranges;
  bool randomize_domain = true;
  double default_height = 0.62;     /// commanded com height when unscripted
  double default_pitch = 0.0;

  /// Piecewise-constant command timeline, time-sorted.
  std::vector<std::pair<double, HrcCommand>> commands;

  HrcCommand command_at(double t) const;
};

Scenario default_scenario(TaskType task);
Scenario scenario_from_config(const Config& cfg);
Scenario load_scenario(const std::string& path);

TaskType task_from_name(const std::string& name);
const char* task_name(TaskType task);

}  // namespace iowbc

#endif  // IOWBC_SCENARIO_HPP_
