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

#include "iowbc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <thread>

namespace iowbc {
namespace {

constexpr double kMassFloor = 0.1;

double sq(double v) { return v * v; }

std::string csv_join(const std::vector<std::string>& parts) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ',';
    out += parts[i];
  }
  out += '\n';
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

MetricsRecord compute_metrics(const RolloutTrace& trace) {
  if (trace.samples.empty()) throw NumericError("compute_metrics: empty trace");
  MetricsRecord m;
  const double n = static_cast<double>(trace.samples.size());
  for (const TraceSample& s : trace.samples) {
    m.e_v += std::abs(s.vsys_x - s.cmd_vx);
    m.e_psi += std::abs(s.yaw);
    m.e_alpha += std::abs(s.base_pitch - s.cmd_pitch);
    m.e_h += std::abs(s.com_z - s.cmd_height);
  }
  m.e_v /= n;
  m.e_psi /= n;
  m.e_alpha /= n;
  m.e_h /= n;
  m.norm_error = std::sqrt(sq(m.e_alpha) + sq(m.e_h) + sq(m.e_v) + sq(m.e_psi));
  m.success = trace.completed;
  m.episode_seconds = trace.episode_seconds();
  return m;
}

VariantKind variant_from_name(const std::string& name) {
  if (name == "full") return VariantKind::kFull;
  if (name == "wo_rg") return VariantKind::kWoRg;
  if (name == "wo_distill") return VariantKind::kWoDistill;
  if (name == "tracking_only") return VariantKind::kTrackingOnly;
  throw ConfigError("unknown variant: " + name +
                    " (expected full, wo_rg, wo_distill or tracking_only)");
}

const char* variant_name(VariantKind kind) {
  switch (kind) {
    case VariantKind::kFull: return "full";
    case VariantKind::kWoRg: return "wo_rg";
    case VariantKind::kWoDistill: return "wo_distill";
    case VariantKind::kTrackingOnly: return "tracking_only";
  }
  return "?";
}

EvalPolicy load_eval_policy(VariantKind kind, const std::string& path, const RobotModel& model,
                            int history) {
  EvalPolicy out;
  if (kind == VariantKind::kTrackingOnly) return out;
  if (path.empty()) {
    throw IoError(std::string("no checkpoint configured for variant '") + variant_name(kind) +
                  "'");
  }
  const ObsLayout layout = obs_layout(model);
  out.teacher_input = kind == VariantKind::kWoRg;
  const std::uint64_t expect = out.teacher_input ? teacher_layout_hash(layout)
                                                 : student_layout_hash(layout, history);
  try {
    out.policy = load_policy(path, expect);
  } catch (const IoError& e) {
    throw IoError(std::string("variant '") + variant_name(kind) + "': " + e.what());
  }
  const int want =
      out.teacher_input ? layout.total + kPrivilegedDim : layout.total * history;
  if (out.policy.input_dim != want) {
    throw IoError(std::string("variant '") + variant_name(kind) + "': checkpoint expects input " +
                  std::to_string(out.policy.input_dim) + ", model needs " + std::to_string(want));
  }
  out.loaded = true;
  return out;
}

RolloutTrace eval_rollout(const RobotModel& model, const RgNet* rg, const Scenario& scenario,
                          const EvalPolicy& policy, VariantKind kind, std::uint64_t seed,
                          const EnvConfig& base_cfg) {
  if (kind != VariantKind::kTrackingOnly && !policy.loaded) {
    throw IoError(std::string("variant '") + variant_name(kind) + "': policy not loaded");
  }
  EnvConfig cfg = base_cfg;
  cfg.scenario = scenario;
  cfg.scenario.randomize_domain = false;
  cfg.wo_rg = kind == VariantKind::kWoRg;
  cfg.train_sampling = false;

  Environment env(model, rg, cfg, seed, 0);
  env.reset(1);

  RolloutTrace trace;
  trace.dt = cfg.dt_tick;
  trace.samples.reserve(static_cast<size_t>(cfg.scenario.episode_ticks));

  MatXf x, mu;
  VecX hist;
  VecX u = VecX::Zero(model.n_s);
  for (int tick = 0; tick < cfg.scenario.episode_ticks; ++tick) {
    const WorldState& w = env.world();
    const FkResult& fk = env.fk();
    const HrcCommand& cmd = env.command();

    TraceSample s;
    s.tick = tick;
    s.t = w.time;
    s.base_x = w.robot.base_pos.x();
    s.base_z = w.robot.base_pos.y();
    s.base_pitch = w.robot.base_pitch;
    const ComResult com = com_of(model, fk);
    s.com_x = com.position.x();
    s.com_z = com.position.y();
    const Vec2 vsys = system_velocity(model, w, fk);
    s.vsys_x = vsys.x();
    s.vsys_z = vsys.y();
    s.cmd_vx = cmd.v_coll[0];
    s.cmd_height = cmd.sigma_base[0];
    s.cmd_pitch = cmd.sigma_base[1];
    if (w.has_object) {
      const Vec2 c = w.object.center();
      s.obj_x = c.x();
      s.obj_z = c.y();
      s.obj_pitch = w.object.pitch;
      s.grasp = w.grasp_attached;
    }
    s.partner_fx = w.partner_force.x();
    s.partner_fz = w.partner_force.y();
    s.contact_l = w.foot_contact[0];
    s.contact_r = w.foot_contact[1];

    if (kind == VariantKind::kTrackingOnly) {
      u.setZero();
    } else {
      if (policy.teacher_input) {
        x.resize(env.layout().total + kPrivilegedDim, 1);
        x.col(0).head(env.layout().total) = env.obs().cast<float>();
        x.col(0).tail(kPrivilegedDim) = env.privileged().cast<float>();
      } else {
        env.history_flat(&hist);
        x.resize(hist.size(), 1);
        x.col(0) = hist.cast<float>();
      }
      policy_means(policy.policy, x, &mu);
      u = mu.col(0).cast<double>();
    }

    const StepResult r = env.step(u);
    s.terms = r.terms;
    s.status = r.status;
    trace.samples.push_back(s);
    if (r.done) {
      trace.final_status = r.status;
      trace.completed = r.truncated;
      break;
    }
  }
  return trace;
}

Scenario scenario_with_mass(const Scenario& base, double mass) {
  if (mass < 0) throw ConfigError("object mass must be >= 0");
  Scenario sc = base;
  sc.object.mass = std::max(mass, kMassFloor);
  sc.object.inertia = sc.object.mass * sc.object.half_extents.squaredNorm() / 3.0;
  return sc;
}

SweepResult run_sweep(const RobotModel& model, const RgNet* rg, const SweepSpec& spec,
                      const EnvConfig& base_cfg) {
  if (spec.trials < 1) throw ConfigError("sweep: trials must be >= 1");
  if (spec.masses.empty()) throw ConfigError("sweep: empty mass list");
  if (spec.variants.empty()) throw ConfigError("sweep: empty variant list");
  std::vector<double> masses = spec.masses;
  for (double m : masses) {
    if (m < 0) throw ConfigError("sweep: masses must be >= 0");
  }
  std::sort(masses.begin(), masses.end());

  struct Cell {
    VariantKind kind;
    std::string variant;
    double mass;
  };
  std::vector<Cell> cells;
  std::map<std::string, EvalPolicy> policies;
  for (const std::string& vn : spec.variants) {
    const VariantKind kind = variant_from_name(vn);
    std::string path;
    auto it = spec.checkpoints.find(vn);
    if (it != spec.checkpoints.end()) path = it->second;
    policies[vn] = load_eval_policy(kind, path, model, base_cfg.history);
    for (double m : masses) cells.push_back({kind, vn, m});
  }

  std::vector<std::vector<MetricsRecord>> per_cell(cells.size());
  const int workers = worker_count(static_cast<int>(cells.size()));
  std::vector<std::string> errors(static_cast<size_t>(workers));
  auto run_range = [&](int w) {
    try {
      for (size_t c = static_cast<size_t>(w); c < cells.size();
           c += static_cast<size_t>(workers)) {
        const Cell& cell = cells[c];
        const Scenario sc = scenario_with_mass(spec.scenario, cell.mass);
        for (int trial = 0; trial < spec.trials; ++trial) {
          const std::uint64_t seed = spec.seed_base + static_cast<std::uint64_t>(trial);
          const RolloutTrace trace =
              eval_rollout(model, rg, sc, policies[cell.variant], cell.kind, seed, base_cfg);
          MetricsRecord m = compute_metrics(trace);
          m.mass = cell.mass;
          m.variant = cell.variant;
          m.seed = seed;
          m.trial = trial;
          per_cell[c].push_back(m);
        }
      }
    } catch (const std::exception& e) {
      errors[static_cast<size_t>(w)] = e.what();
    }
  };
  if (workers <= 1) {
    run_range(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(run_range, w);
    for (std::thread& t : pool) t.join();
  }
  for (const std::string& e : errors) {
    if (!e.empty()) throw NumericError("sweep: " + e);
  }

  SweepResult out;
  for (const std::vector<MetricsRecord>& rs : per_cell) {
    out.records.insert(out.records.end(), rs.begin(), rs.end());
  }
  out.cells = aggregate_cells(out.records);
  return out;
}

std::vector<SweepCell> aggregate_cells(const std::vector<MetricsRecord>& records) {
  std::vector<SweepCell> cells;
  auto find = [&](const MetricsRecord& r) -> SweepCell* {
    for (SweepCell& c : cells) {
      if (c.variant == r.variant && c.mass == r.mass) return &c;
    }
    cells.push_back(SweepCell{});
    cells.back().variant = r.variant;
    cells.back().mass = r.mass;
    return &cells.back();
  };
  for (const MetricsRecord& r : records) {
    SweepCell* c = find(r);
    c->trials += 1;
    c->success_rate += r.success ? 1.0 : 0.0;
    c->e_v_mean += r.e_v;
    c->e_psi_mean += r.e_psi;
    c->e_alpha_mean += r.e_alpha;
    c->e_h_mean += r.e_h;
    c->norm_mean += r.norm_error;
    c->episode_seconds_mean += r.episode_seconds;
  }
  for (SweepCell& c : cells) {
    const double n = static_cast<double>(c.trials);
    c.success_rate /= n;
    c.e_v_mean /= n;
    c.e_psi_mean /= n;
    c.e_alpha_mean /= n;
    c.e_h_mean /= n;
    c.norm_mean /= n;
    c.episode_seconds_mean /= n;
  }
  for (const MetricsRecord& r : records) {
    SweepCell* c = find(r);
    c->e_v_std += sq(r.e_v - c->e_v_mean);
    c->e_psi_std += sq(r.e_psi - c->e_psi_mean);
    c->e_alpha_std += sq(r.e_alpha - c->e_alpha_mean);
    c->e_h_std += sq(r.e_h - c->e_h_mean);
    c->norm_std += sq(r.norm_error - c->norm_mean);
  }
  for (SweepCell& c : cells) {
    const double n = static_cast<double>(c.trials);
    c.e_v_std = std::sqrt(c.e_v_std / n);
    c.e_psi_std = std::sqrt(c.e_psi_std / n);
    c.e_alpha_std = std::sqrt(c.e_alpha_std / n);
    c.e_h_std = std::sqrt(c.e_h_std / n);
    c.norm_std = std::sqrt(c.norm_std / n);
  }
  return cells;
}

std::string metrics_csv(const std::vector<MetricsRecord>& records) {
  std::string out =
      "variant,mass,seed,trial,e_v,e_psi,e_alpha,e_h,norm_error,success,episode_seconds\n";
  for (const MetricsRecord& r : records) {
    out += csv_join({r.variant, fmt_double(r.mass), std::to_string(r.seed),
                     std::to_string(r.trial), fmt_double(r.e_v), fmt_double(r.e_psi),
                     fmt_double(r.e_alpha), fmt_double(r.e_h), fmt_double(r.norm_error),
                     r.success ? "1" : "0", fmt_double(r.episode_seconds)});
  }
  return out;
}

std::vector<MetricsRecord> metrics_from_csv(const std::string& text) {
  std::vector<MetricsRecord> out;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.rfind("variant,", 0) == 0) continue;
    }
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 11) throw IoError("metrics.csv: malformed row: " + line);
    MetricsRecord r;
    r.variant = f[0];
    r.mass = std::stod(f[1]);
    r.seed = std::stoull(f[2]);
    r.trial = std::stoi(f[3]);
    r.e_v = std::stod(f[4]);
    r.e_psi = std::stod(f[5]);
    r.e_alpha = std::stod(f[6]);
    r.e_h = std::stod(f[7]);
    r.norm_error = std::stod(f[8]);
    r.success = f[9] == "1";
    r.episode_seconds = std::stod(f[10]);
    out.push_back(r);
  }
  return out;
}

std::string report_csv(const std::vector<SweepCell>& cells) {
  std::string out =
      "variant,mass,trials,success_rate,e_v_mean,e_v_std,e_psi_mean,e_psi_std,"
      "e_alpha_mean,e_alpha_std,e_h_mean,e_h_std,norm_mean,norm_std,episode_seconds_mean\n";
  for (const SweepCell& c : cells) {
    out += csv_join({c.variant, fmt_double(c.mass), std::to_string(c.trials),
                     fmt_double(c.success_rate), fmt_double(c.e_v_mean), fmt_double(c.e_v_std),
                     fmt_double(c.e_psi_mean), fmt_double(c.e_psi_std), fmt_double(c.e_alpha_mean),
                     fmt_double(c.e_alpha_std), fmt_double(c.e_h_mean), fmt_double(c.e_h_std),
                     fmt_double(c.norm_mean), fmt_double(c.norm_std),
                     fmt_double(c.episode_seconds_mean)});
  }
  return out;
}

std::string trace_csv(const RolloutTrace& trace) {
  std::string out =
      "tick,t,base_x,base_z,base_pitch,com_x,com_z,vsys_x,vsys_z,yaw,cmd_vx,cmd_height,"
      "cmd_pitch,obj_x,obj_z,obj_pitch,grasp,partner_fx,partner_fz,contact_l,contact_r,"
      "r_sync,r_obj,r_smooth,r_gate,r_total,status\n";
  for (const TraceSample& s : trace.samples) {
    out += csv_join({std::to_string(s.tick), fmt_double(s.t), fmt_double(s.base_x),
                     fmt_double(s.base_z), fmt_double(s.base_pitch), fmt_double(s.com_x),
                     fmt_double(s.com_z), fmt_double(s.vsys_x), fmt_double(s.vsys_z),
                     fmt_double(s.yaw), fmt_double(s.cmd_vx), fmt_double(s.cmd_height),
                     fmt_double(s.cmd_pitch), fmt_double(s.obj_x), fmt_double(s.obj_z),
                     fmt_double(s.obj_pitch), s.grasp ? "1" : "0", fmt_double(s.partner_fx),
                     fmt_double(s.partner_fz), s.contact_l ? "1" : "0", s.contact_r ? "1" : "0",
                     fmt_double(s.terms.sync), fmt_double(s.terms.obj), fmt_double(s.terms.smooth),
                     fmt_double(s.terms.gate), fmt_double(s.terms.total),
                     std::to_string(static_cast<int>(s.status))});
  }
  return out;
}

namespace {

double cell_field(const SweepCell& c, const std::string& field) {
  if (field == "e_v") return c.e_v_mean;
  if (field == "e_psi") return c.e_psi_mean;
  if (field == "e_alpha") return c.e_alpha_mean;
  if (field == "e_h") return c.e_h_mean;
  if (field == "norm_error") return c.norm_mean;
  if (field == "success") return c.success_rate;
  throw ConfigError("unknown plot field: " + field);
}

std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

std::string metric_plot_svg(const std::vector<SweepCell>& cells, const std::string& field,
                            const std::string& title) {
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b"};
  std::vector<std::string> variants;
  double x_lo = 0, x_hi = 1, y_hi = 0;
  bool any = false;
  for (const SweepCell& c : cells) {
    if (std::find(variants.begin(), variants.end(), c.variant) == variants.end()) {
      variants.push_back(c.variant);
    }
    const double y = cell_field(c, field);
    if (!any) {
      x_lo = x_hi = c.mass;
      any = true;
    } else {
      x_lo = std::min(x_lo, c.mass);
      x_hi = std::max(x_hi, c.mass);
    }
    y_hi = std::max(y_hi, y);
  }
  if (x_hi <= x_lo) x_hi = x_lo + 1;
  if (y_hi <= 0) y_hi = 1;
  y_hi *= 1.1;

  const double w = 640, h = 420;
  const double ml = 70, mr = 150, mt = 40, mb = 50;
  const double pw = w - ml - mr, ph = h - mt - mb;
  auto px = [&](double mass) { return ml + (mass - x_lo) / (x_hi - x_lo) * pw; };
  auto py = [&](double v) { return mt + ph - v / y_hi * ph; };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" "
       "viewBox=\"0 0 640 420\">\n";
  s += "<rect width=\"640\" height=\"420\" fill=\"white\"/>\n";
  s += "<text x=\"" + svg_num(ml) + "\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" "
       "fill=\"#222\">" + title + "</text>\n";
  s += "<line x1=\"" + svg_num(ml) + "\" y1=\"" + svg_num(mt + ph) + "\" x2=\"" +
       svg_num(ml + pw) + "\" y2=\"" + svg_num(mt + ph) + "\" stroke=\"#444\"/>\n";
  s += "<line x1=\"" + svg_num(ml) + "\" y1=\"" + svg_num(mt) + "\" x2=\"" + svg_num(ml) +
       "\" y2=\"" + svg_num(mt + ph) + "\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double v = y_hi * i / 5.0;
    const double y = py(v);
    s += "<line x1=\"" + svg_num(ml - 4) + "\" y1=\"" + svg_num(y) + "\" x2=\"" + svg_num(ml) +
         "\" y2=\"" + svg_num(y) + "\" stroke=\"#444\"/>\n";
    s += "<text x=\"" + svg_num(ml - 8) + "\" y=\"" + svg_num(y + 4) +
         "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#444\" text-anchor=\"end\">" +
         tick_label(v) + "</text>\n";
  }
  std::vector<double> xticks;
  for (const SweepCell& c : cells) {
    if (std::find(xticks.begin(), xticks.end(), c.mass) == xticks.end()) xticks.push_back(c.mass);
  }
  std::sort(xticks.begin(), xticks.end());
  for (double m : xticks) {
    const double x = px(m);
    s += "<line x1=\"" + svg_num(x) + "\" y1=\"" + svg_num(mt + ph) + "\" x2=\"" + svg_num(x) +
         "\" y2=\"" + svg_num(mt + ph + 4) + "\" stroke=\"#444\"/>\n";
    s += "<text x=\"" + svg_num(x) + "\" y=\"" + svg_num(mt + ph + 18) +
         "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#444\" text-anchor=\"middle\">" +
         tick_label(m) + "</text>\n";
  }
  s += "<text x=\"" + svg_num(ml + pw / 2) + "\" y=\"" + svg_num(h - 12) +
       "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#222\" "
       "text-anchor=\"middle\">object mass (kg)</text>\n";

  for (size_t vi = 0; vi < variants.size(); ++vi) {
    const char* color = kColors[vi % 6];
    std::string pts;
    for (const SweepCell& c : cells) {
      if (c.variant != variants[vi]) continue;
      if (!pts.empty()) pts += ' ';
      pts += svg_num(px(c.mass)) + "," + svg_num(py(cell_field(c, field)));
    }
    s += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + color +
         "\" stroke-width=\"2\"/>\n";
    for (const SweepCell& c : cells) {
      if (c.variant != variants[vi]) continue;
      s += "<circle cx=\"" + svg_num(px(c.mass)) + "\" cy=\"" +
           svg_num(py(cell_field(c, field))) + "\" r=\"3\" fill=\"" + color + "\"/>\n";
    }
    const double ly = mt + 14 + 18 * static_cast<double>(vi);
    s += "<line x1=\"" + svg_num(ml + pw + 12) + "\" y1=\"" + svg_num(ly - 4) + "\" x2=\"" +
         svg_num(ml + pw + 34) + "\" y2=\"" + svg_num(ly - 4) + "\" stroke=\"" + color +
         "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + svg_num(ml + pw + 40) + "\" y=\"" + svg_num(ly) +
         "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#222\">" + variants[vi] +
         "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

std::string report_markdown(const std::vector<SweepCell>& cells) {
  std::vector<std::string> variants;
  for (const SweepCell& c : cells) {
    if (std::find(variants.begin(), variants.end(), c.variant) == variants.end()) {
      variants.push_back(c.variant);
    }
  }
  std::string out = "# Sweep report\n";
  char buf[160];
  for (const std::string& vn : variants) {
    out += "\n## " + vn + "\n\n";
    out += "| mass (kg) | E_v (m/s) | E_psi (rad) | E_alpha (rad) | E_h (m) | norm | success |\n";
    out += "|---|---|---|---|---|---|---|\n";
    for (const SweepCell& c : cells) {
      if (c.variant != vn) continue;
      std::snprintf(buf, sizeof buf, "| %.3g | %.4g | %.4g | %.4g | %.4g | %.4g | %.0f%% |\n",
                    c.mass, c.e_v_mean, c.e_psi_mean, c.e_alpha_mean, c.e_h_mean, c.norm_mean,
                    c.success_rate * 100.0);
      out += buf;
    }
  }
  return out;
}

RunDirectory RunDirectory::create(const std::string& root) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(root, ec);
  fs::create_directories(root + "/checkpoints", ec);
  fs::create_directories(root + "/logs", ec);
  fs::create_directories(root + "/plots", ec);
  if (ec) throw IoError("cannot create run directory " + root + ": " + ec.message());
  return RunDirectory{root};
}

std::string RunDirectory::path(const std::string& rel) const { return root + "/" + rel; }

void RunDirectory::snapshot_config(const std::string& config_text) const {
  write_text_file(path("config.cfg"), config_text);
}

void RunDirectory::write_seeds(std::uint64_t seed_base, int trials) const {
  std::string out = "seed_base " + std::to_string(seed_base) + "\n";
  for (int i = 0; i < trials; ++i) {
    out += "trial " + std::to_string(i) + " seed " + std::to_string(seed_base + i) + "\n";
  }
  write_text_file(path("seeds.txt"), out);
}

void write_sweep_outputs(const SweepResult& result, const RunDirectory& dir) {
  write_text_file(dir.path("metrics.csv"), metrics_csv(result.records));
  write_text_file(dir.path("report.csv"), report_csv(result.cells));
  write_text_file(dir.path("summary.md"), report_markdown(result.cells));
  struct Plot {
    const char* field;
    const char* file;
    const char* title;
  };
  static const Plot kPlots[] = {
      {"e_v", "plots/E_v_vs_mass.svg", "Linear velocity error E_v (m/s) vs object mass"},
      {"e_psi", "plots/E_psi_vs_mass.svg", "Yaw error E_psi (rad) vs object mass"},
      {"e_alpha", "plots/E_alpha_vs_mass.svg", "Pitch error E_alpha (rad) vs object mass"},
      {"e_h", "plots/E_h_vs_mass.svg", "CoM height error E_h (m) vs object mass"},
      {"norm_error", "plots/norm_error_vs_mass.svg", "Norm tracking error vs object mass"},
      {"success", "plots/success_vs_mass.svg", "Success rate vs object mass"},
  };
  for (const Plot& p : kPlots) {
    write_text_file(dir.path(p.file), metric_plot_svg(result.cells, p.field, p.title));
  }
}

}  // namespace iowbc
