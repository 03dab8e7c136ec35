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

#include "iowbc/scenario.hpp"

#include <algorithm>

namespace iowbc {

HrcCommand Scenario::command_at(double t) const {
  HrcCommand c;
  c.sigma_base = Vec2(default_height, default_pitch);
  for (const auto& [time, cmd] : commands) {
    if (time <= t) c = cmd;
  }
  return c;
}

TaskType task_from_name(const std::string& name) {
  if (name == "balance") return TaskType::kBalance;
  if (name == "lift") return TaskType::kLift;
  if (name == "push") return TaskType::kPush;
  throw ConfigError("unknown task type '" + name + "' (expected balance | lift | push)");
}

const char* task_name(TaskType task) {
  switch (task) {
    case TaskType::kBalance: return "balance";
    case TaskType::kLift: return "lift";
    case TaskType::kPush: return "push";
  }
  return "?";
}

namespace {

PartnerMode partner_mode_from_name(const std::string& name) {
  if (name == "load_share") return PartnerMode::kLoadShare;
  if (name == "impedance") return PartnerMode::kImpedance;
  if (name == "disturbance_sine") return PartnerMode::kDisturbanceSine;
  throw ConfigError("unknown partner mode '" + name + "'");
}

HrcCommand command_entry(const Config& cfg, const std::string& p, const Scenario& sc) {
  HrcCommand c;
  c.v_coll.x() = cfg.get_double(p + "vx", 0.0);
  c.sigma_base = Vec2(cfg.get_double(p + "height", sc.default_height),
                      cfg.get_double(p + "pitch", sc.default_pitch));
  c.delta_p[0] = cfg.get_double(p + "dpx", 0.0);
  c.delta_p[2] = cfg.get_double(p + "dpz", 0.0);
  return c;
}

}  // namespace

Scenario default_scenario(TaskType task) {
  Scenario sc;
  sc.task = task;
  sc.name = task_name(task);
  switch (task) {
    case TaskType::kBalance: {
      sc.has_object = false;
      sc.impulses.enabled = false;
      HrcCommand stand;
      stand.sigma_base = Vec2(sc.default_height, 0);
      sc.commands = {{0.0, stand}};
      break;
    }
    case TaskType::kLift: {
      sc.has_object = true;
      sc.grasp_required = true;
      sc.start_attached = true;
      sc.ref_mode = ObjectRefMode::kCarry;
      sc.object.mass = 4.0;
      sc.object.half_extents = Vec2(0.18, 0.12);
      sc.object.inertia = sc.object.mass *
                          (sc.object.half_extents.squaredNorm()) / 3.0;
      sc.object.grasp_offset = Vec2(-0.18, 0.04);
      sc.object.handle_offset = Vec2(0.18, 0.04);
      sc.partner.mode = PartnerMode::kLoadShare;
      sc.partner.share = 0.5;
      HrcCommand stand;
      stand.sigma_base = Vec2(sc.default_height, 0);
      HrcCommand walk = stand;
      walk.v_coll.x() = 0.35;
      sc.commands = {{0.0, stand}, {2.0, walk}, {8.0, stand}};
      break;
    }
    case TaskType::kPush: {
      sc.has_object = true;
      sc.grasp_required = true;
      sc.start_attached = true;
      sc.ref_mode = ObjectRefMode::kGround;
      sc.object.mass = 8.0;
      sc.object.half_extents = Vec2(0.25, 0.35);
      sc.object.inertia = sc.object.mass *
                          (sc.object.half_extents.squaredNorm()) / 3.0;
      // Hands meet the near face at chest height; the partner works the far
      // side toward the moving reference (pulling its share of the load).
      sc.object.grasp_offset = Vec2(-0.25, 0.20);
      sc.object.handle_offset = Vec2(0.25, 0.20);
      sc.partner.mode = PartnerMode::kImpedance;
      sc.partner.stiffness = 150;
      sc.partner.damping = 60;
      sc.object_start_x = 0.50;
      HrcCommand stand;
      stand.sigma_base = Vec2(sc.default_height, 0);
      HrcCommand push = stand;
      push.v_coll.x() = 0.30;
      sc.commands = {{0.0, stand}, {1.5, push}};
      break;
    }
  }
  return sc;
}

Scenario scenario_from_config(const Config& cfg) {
  Scenario sc = default_scenario(task_from_name(cfg.get_string("scenario.task", "balance")));
  sc.name = cfg.get_string("scenario.name", sc.name);
  sc.episode_ticks = cfg.get_int("scenario.episode_ticks", sc.episode_ticks);
  if (sc.episode_ticks < 1) throw ConfigError("scenario.episode_ticks must be >= 1");
  sc.has_object = cfg.get_bool("scenario.has_object", sc.has_object);
  sc.grasp_required = cfg.get_bool("scenario.grasp_required", sc.grasp_required);
  sc.start_attached = cfg.get_bool("scenario.start_attached", sc.start_attached);
  sc.randomize_domain = cfg.get_bool("scenario.randomize_domain", sc.randomize_domain);
  sc.object_start_x = cfg.get_double("scenario.object_start_x", sc.object_start_x);
  sc.default_height = cfg.get_double("scenario.height", sc.default_height);
  sc.default_pitch = cfg.get_double("scenario.pitch", sc.default_pitch);
  const std::string mode = cfg.get_string("scenario.ref_mode",
                                          sc.ref_mode == ObjectRefMode::kCarry ? "carry"
                                                                               : "ground");
  if (mode == "carry") {
    sc.ref_mode = ObjectRefMode::kCarry;
  } else if (mode == "ground") {
    sc.ref_mode = ObjectRefMode::kGround;
  } else {
    throw ConfigError("unknown scenario.ref_mode '" + mode + "'");
  }

  ObjectState& o = sc.object;
  o.mass = cfg.get_double("object.mass", o.mass);
  if (o.mass <= 0) throw ConfigError("object.mass must be > 0");
  o.half_extents = Vec2(cfg.get_double("object.half_x", o.half_extents.x()),
                        cfg.get_double("object.half_z", o.half_extents.y()));
  o.inertia = cfg.get_double("object.inertia", o.mass * o.half_extents.squaredNorm() / 3.0);
  if (o.inertia <= 0) throw ConfigError("object.inertia must be > 0");
  o.com_offset = Vec2(cfg.get_double("object.com_x", 0.0), cfg.get_double("object.com_z", 0.0));
  o.grasp_offset = Vec2(cfg.get_double("object.grasp_x", o.grasp_offset.x()),
                        cfg.get_double("object.grasp_z", o.grasp_offset.y()));
  o.handle_offset = Vec2(cfg.get_double("object.handle_x", o.handle_offset.x()),
                         cfg.get_double("object.handle_z", o.handle_offset.y()));
  for (const Vec2& off : {o.com_offset, o.grasp_offset, o.handle_offset}) {
    if (std::abs(off.x()) > o.half_extents.x() + 1e-9 ||
        std::abs(off.y()) > o.half_extents.y() + 1e-9) {
      throw ConfigError("object offsets must lie within the half extents");
    }
  }

  PartnerModel& pm = sc.partner;
  if (cfg.has("partner.mode")) pm.mode = partner_mode_from_name(cfg.get_string("partner.mode"));
  pm.share = cfg.get_double("partner.share", pm.share);
  if (pm.share < 0 || pm.share > 1) throw ConfigError("partner.share must be in [0, 1]");
  pm.stiffness = cfg.get_double("partner.stiffness", pm.stiffness);
  pm.damping = cfg.get_double("partner.damping", pm.damping);
  pm.force_cap = cfg.get_double("partner.force_cap", pm.force_cap);
  pm.sine_amplitude = cfg.get_double("partner.sine_amplitude", pm.sine_amplitude);
  pm.sine_period = cfg.get_double("partner.sine_period", pm.sine_period);
  if (pm.stiffness < 0 || pm.damping < 0 || pm.force_cap < 0 || pm.sine_period <= 0) {
    throw ConfigError("partner gains must be >= 0 and sine_period > 0");
  }

  ImpulseSchedule& im = sc.impulses;
  im.enabled = cfg.get_bool("impulse.enabled", im.enabled);
  im.interval_lo = cfg.get_double("impulse.interval_lo", im.interval_lo);
  im.interval_hi = cfg.get_double("impulse.interval_hi", im.interval_hi);
  im.mag_lo = cfg.get_double("impulse.mag_lo", im.mag_lo);
  im.mag_hi = cfg.get_double("impulse.mag_hi", im.mag_hi);
  im.duration = cfg.get_double("impulse.duration", im.duration);
  if (im.interval_lo < im.duration || im.interval_hi < im.interval_lo || im.mag_lo < 0 ||
      im.mag_hi < im.mag_lo) {
    throw ConfigError("impulse schedule: need interval_lo >= duration, ordered ranges, mags >= 0");
  }

  DomainRanges& dr = sc.ranges;
  dr.mass_scale_lo = cfg.get_double("domain.mass_scale_lo", dr.mass_scale_lo);
  dr.mass_scale_hi = cfg.get_double("domain.mass_scale_hi", dr.mass_scale_hi);
  dr.mu_robot_lo = cfg.get_double("domain.mu_robot_lo", dr.mu_robot_lo);
  dr.mu_robot_hi = cfg.get_double("domain.mu_robot_hi", dr.mu_robot_hi);
  dr.mu_object_lo = cfg.get_double("domain.mu_object_lo", dr.mu_object_lo);
  dr.mu_object_hi = cfg.get_double("domain.mu_object_hi", dr.mu_object_hi);
  dr.mu_grasp_lo = cfg.get_double("domain.mu_grasp_lo", dr.mu_grasp_lo);
  dr.mu_grasp_hi = cfg.get_double("domain.mu_grasp_hi", dr.mu_grasp_hi);
  dr.com_offset_max = cfg.get_double("domain.com_offset_max", dr.com_offset_max);
  dr.latency_max = cfg.get_int("domain.latency_max", dr.latency_max);
  dr.pd_scale_lo = cfg.get_double("domain.pd_scale_lo", dr.pd_scale_lo);
  dr.pd_scale_hi = cfg.get_double("domain.pd_scale_hi", dr.pd_scale_hi);
  for (const auto& [lo, hi] : {std::pair{dr.mass_scale_lo, dr.mass_scale_hi},
                               {dr.mu_robot_lo, dr.mu_robot_hi},
                               {dr.mu_object_lo, dr.mu_object_hi},
                               {dr.mu_grasp_lo, dr.mu_grasp_hi},
                               {dr.pd_scale_lo, dr.pd_scale_hi}}) {
    if (hi < lo) throw ConfigError("domain ranges must have hi >= lo");
  }
  if (dr.latency_max < 0 || dr.com_offset_max < 0) {
    throw ConfigError("domain.latency_max and domain.com_offset_max must be >= 0");
  }

  // command.N.* entries override the built-in timeline wholesale.
  std::vector<int> idx;
  for (const std::string& key : cfg.keys_with_prefix("command.")) {
    const size_t dot = key.find('.', 8);
    if (dot == std::string::npos) continue;
    try {
      idx.push_back(std::stoi(key.substr(8, dot - 8)));
    } catch (const std::exception&) {
      throw ConfigError("malformed command key '" + key + "'");
    }
  }
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  if (!idx.empty()) {
    sc.commands.clear();
    for (const int i : idx) {
      const std::string p = "command." + std::to_string(i) + ".";
      const double t = cfg.get_double(p + "time", 0.0);
      sc.commands.emplace_back(t, command_entry(cfg, p, sc));
    }
    std::stable_sort(sc.commands.begin(), sc.commands.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  return scenario_from_config(Config::from_file(path));
}

}  // namespace iowbc
