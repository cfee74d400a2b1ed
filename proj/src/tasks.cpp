#include "kdvctrl/tasks.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "kdvctrl/control.hpp"
#include "kdvctrl/critical_lengths.hpp"
#include "kdvctrl/csv.hpp"
#include "kdvctrl/rng.hpp"
#include "kdvctrl/sobolev.hpp"
#include "kdvctrl/steering.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace kdvctrl {

std::string tool_version() { return "kdvctrl 0.1.0"; }

namespace {

std::string now_iso8601() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

BcFamily parse_family(const Config& c) {
  const std::string f = c.get_string("family", "A");
  if (f == "A") return BcFamily::FamilyA;
  if (f == "B") return BcFamily::FamilyB;
  throw ConfigError("family must be A or B, got `" + f + "`");
}

Channel parse_channel(const std::string& name) {
  for (Channel c : {Channel::LeftValue, Channel::RightValue, Channel::RightSlope,
                    Channel::RightCurvature})
    if (name == channel_name(c)) return c;
  throw ConfigError("unknown channel `" + name +
                    "` (expected left_value, right_value, right_slope, right_curvature)");
}

SpatialGrid grid_of(const Config& c) {
  return build_grid(c.get_double("grid.L", 1.0), int(c.get_int("grid.n_x", 96)));
}

TimeGrid tgrid_of(const Config& c) {
  return build_time_grid(c.get_double("time.T", 1.0), int(c.get_int("time.n_t", 256)));
}

ControlConfig control_config_of(const Config& c) {
  ControlConfig cc;
  cc.family = parse_family(c);
  const auto names = c.has("channels") ? c.get_string_list("channels")
                                       : std::vector<std::string>{"right_slope"};
  for (const auto& n : names) cc.active_channels.push_back(parse_channel(n));
  for (Channel ch : cc.active_channels) {
    const std::string key = std::string("control.smoothing.") + channel_name(ch);
    if (c.has(key)) cc.smoothing[ch] = c.get_double(key);
  }
  cc.regularization_epsilon = c.get_double("control.regularization_epsilon", 0.0);
  cc.filter_kappa = c.get_double("control.filter_kappa", 12.0);
  const std::string mode = c.get_string("control.adjoint_mode", "discrete");
  if (mode == "discrete")
    cc.adjoint_mode = AdjointMode::Discrete;
  else if (mode == "continuous")
    cc.adjoint_mode = AdjointMode::Continuous;
  else
    throw ConfigError("control.adjoint_mode must be discrete or continuous");
  const std::string solve = c.get_string("control.solve_mode", "auto");
  if (solve == "auto")
    cc.solve_mode = GramianSolve::Auto;
  else if (solve == "cg")
    cc.solve_mode = GramianSolve::CG;
  else if (solve == "filtered")
    cc.solve_mode = GramianSolve::FilteredProjection;
  else
    throw ConfigError("control.solve_mode must be auto, cg or filtered");
  cc.validate();
  return cc;
}

/// Smooth seeded profile: low-mode sine/cosine combination with 1/k decay.
Vector seeded_profile(const CounterRng& rng, std::uint64_t base, const SpatialGrid& g,
                      int kmax = 6) {
  Vector v = Vector::Zero(g.n_nodes());
  for (int k = 1; k <= kmax; ++k) {
    const double cs = rng.normal(base + 2 * k) / k;
    const double cc = rng.normal(base + 2 * k + 1) / k;
    for (int i = 0; i < g.n_nodes(); ++i) {
      const double x = g.nodes[i] / g.length_L;
      v(i) += cs * std::sin(k * M_PI * x) + cc * std::cos(k * M_PI * x);
    }
  }
  const Vector w = space_weights(g);
  const double nn = weighted_norm(w, v);
  return nn > 0 ? Vector(v / nn) : v;
}

/// Seeded smooth control signal vanishing at t=0 (compatible start).
Vector seeded_signal(const CounterRng& rng, std::uint64_t base, const TimeGrid& tg, int kmax = 5) {
  Vector s = Vector::Zero(tg.n_samples());
  for (int k = 1; k <= kmax; ++k) {
    const double a = rng.normal(base + 2 * k) / k;
    const double ph = 2.0 * M_PI * rng.uniform(base * 131 + k);
    for (int m = 0; m <= tg.n_t; ++m) {
      const double t = m * tg.dt / tg.horizon_T;
      s(m) += a * std::sin(M_PI * k * t + ph) * t;  // *t: zero at start
    }
  }
  return s;
}

/// Short adjoint burn-in: returns bc-compatible, transient-free terminal data.
Vector prepared_adjoint_state(const SpatialGrid& g, BcFamily family, const CounterRng& rng,
                              std::uint64_t base, int kmax = 3) {
  const Vector raw = seeded_profile(rng, base, g, kmax);
  LinearProblem p;
  p.grid = g;
  p.tgrid = build_time_grid(0.05, 32);
  p.family = family;
  p.initial_state = raw;
  p.direction = Direction::AdjointBackward;
  Vector v = solve_adjoint(p).row(0);
  const Vector w = space_weights(g);
  const double nn = weighted_norm(w, v);
  return nn > 0 ? Vector(v / nn) : v;
}

void write_trajectory_csv(const std::string& path, const StateTrajectory& traj) {
  std::vector<std::string> header{"t"};
  for (int i = 0; i < traj.grid.n_nodes(); ++i) header.push_back("x" + std::to_string(i));
  CsvWriter csv(path, header);
  for (int m = 0; m <= traj.tgrid.n_t; ++m) {
    csv.field(m * traj.tgrid.dt);
    for (int i = 0; i < traj.grid.n_nodes(); ++i) csv.field(traj.samples(m, i));
    csv.end_row();
  }
}

struct TaskOutput {
  std::map<std::string, double> metrics;
  std::vector<std::string> artifacts;
};

TaskOutput task_solve(const Config& c, const std::string& dir) {
  const SpatialGrid g = grid_of(c);
  const TimeGrid tg = tgrid_of(c);
  const BcFamily family = parse_family(c);
  const CounterRng rng(std::uint64_t(c.get_int("seed", 0)));
  const Vector w = space_weights(g);

  LinearProblem p;
  p.grid = g;
  p.tgrid = tg;
  p.family = family;
  p.initial_state = seeded_profile(rng, 1000, g);
  const std::string kind = c.get_string("solve.kind", "linear");
  StateTrajectory traj = kind == "nonlinear"
                             ? solve_forward_nonlinear(p, c.get_double("solve.inner_tol", 1e-12))
                             : solve_forward_linear(p);

  TaskOutput out;
  out.metrics["final_l2"] = weighted_norm(w, traj.final_state());
  out.metrics["sup_l2"] = [&] {
    double s = 0;
    for (int m = 0; m <= tg.n_t; ++m) s = std::max(s, weighted_norm(w, traj.row(m)));
    return s;
  }();
  out.metrics["xt_norm"] = xt_norm(traj);
  const std::string art = dir + "/trajectory.csv";
  write_trajectory_csv(art, traj);
  out.artifacts.push_back(art);
  return out;
}

TaskOutput task_adjoint(const Config& c, const std::string& dir) {
  const SpatialGrid g = grid_of(c);
  const TimeGrid tg = tgrid_of(c);
  const BcFamily family = parse_family(c);
  const CounterRng rng(std::uint64_t(c.get_int("seed", 0)));
  const Vector w = space_weights(g);
  const Vector q = time_weights(tg);

  LinearProblem p;
  p.grid = g;
  p.tgrid = tg;
  p.family = family;
  p.initial_state = prepared_adjoint_state(g, family, rng, 2000);
  p.direction = Direction::AdjointBackward;
  const StateTrajectory traj = solve_adjoint(p);

  // Discrete form of the elementary terminal-state estimate.
  double l2l2 = 0.0;
  for (int m = 0; m <= tg.n_t; ++m) l2l2 += q(m) * std::pow(weighted_norm(w, traj.row(m)), 2);
  const ControlSignal valL = extract_trace(traj, 0, TracePosition::right());
  const ControlSignal slopeL = extract_trace(traj, 1, TracePosition::right());
  const double lhs = std::pow(weighted_norm(w, p.initial_state), 2);
  const double rhs = l2l2 / tg.horizon_T + q.dot(valL.samples.cwiseProduct(valL.samples)) +
                     q.dot(slopeL.samples.cwiseProduct(slopeL.samples));

  TaskOutput out;
  out.metrics["terminal_sq"] = lhs;
  out.metrics["estimate_rhs"] = rhs;
  out.metrics["estimate_ratio"] = lhs / rhs;
  out.metrics["hidden_ratio"] = hidden_regularity_ratio(traj, weighted_norm(w, p.initial_state));
  const std::string art = dir + "/trajectory.csv";
  write_trajectory_csv(art, traj);
  out.artifacts.push_back(art);
  return out;
}

TaskOutput task_gramian(const Config& c, const std::string&) {
  const Gramian gr = assemble_gramian(control_config_of(c), grid_of(c), tgrid_of(c));
  TaskOutput out;
  out.metrics["sigma_min"] = gr.sigma_min_filtered;
  out.metrics["observability_constant"] = observability_constant(gr);
  out.metrics["norm_scale"] = gr.norm_scale;
  if (gr.bilinear.size() != 0) {
    out.metrics["symmetry_defect"] = gr.symmetry_defect;
    out.metrics["min_eigenvalue"] = gr.min_eigenvalue;
  }
  return out;
}

TaskOutput task_control(const Config& c, const std::string& dir) {
  const SpatialGrid g = grid_of(c);
  const TimeGrid tg = tgrid_of(c);
  const CounterRng rng(std::uint64_t(c.get_int("seed", 0)));
  const Gramian gr = assemble_gramian(control_config_of(c), g, tg);
  const Vector w = space_weights(g);

  const double amp = c.get_double("control.amplitude", 0.05);
  const Vector y0 = amp * seeded_profile(rng, 3000, g);
  // Reachable seeded target: reference controls pushed through the solver.
  Vector href = Vector::Zero(gr.map->n_controls());
  const int ns = tg.n_samples();
  for (size_t k = 0; k < gr.config.active_channels.size(); ++k)
    href.segment(long(k) * ns, ns) = amp * seeded_signal(rng, 4000 + 100 * k, tg);
  const Vector yT = gr.map->free_final(y0) + gr.map->apply(href);

  const SynthesisResult res =
      synthesize_control(gr, y0, yT, c.get_double("control.cg_tol", 1e-12));

  TaskOutput out;
  out.metrics["relative_error"] = res.relative_error;
  out.metrics["cg_iterations"] = res.cg_iterations;
  out.metrics["sigma_min"] = res.gramian_sigma_min;
  out.metrics["observability_constant"] = observability_constant(gr);
  for (const auto& sig : res.controls)
    out.metrics[std::string("h_s_norm.") + channel_name(sig.channel)] =
        h_s_norm(sig, sig.sobolev_index);

  std::vector<std::string> header{"t"};
  for (const auto& sig : res.controls) header.push_back(channel_name(sig.channel));
  const std::string art = dir + "/controls.csv";
  CsvWriter csv(art, header);
  for (int m = 0; m <= tg.n_t; ++m) {
    csv.field(m * tg.dt);
    for (const auto& sig : res.controls) csv.field(sig.samples(m));
    csv.end_row();
  }
  out.artifacts.push_back(art);
  return out;
}

TaskOutput task_nonlinear(const Config& c, const std::string& dir) {
  const SpatialGrid g = grid_of(c);
  const TimeGrid tg = tgrid_of(c);
  const CounterRng rng(std::uint64_t(c.get_int("seed", 0)));
  const Gramian gr = assemble_gramian(control_config_of(c), g, tg);
  const Vector w = space_weights(g);

  const double amp = c.get_double("nonlinear.amplitude", 0.01);
  Vector y0(g.n_nodes());
  for (int i = 0; i < g.n_nodes(); ++i)
    y0(i) = amp * std::sin(M_PI * g.nodes[i] / g.length_L);

  // Attainable seeded target through a reference nonlinear run.
  LinearProblem ref;
  ref.grid = g;
  ref.tgrid = tg;
  ref.family = gr.config.family;
  ref.initial_state = y0;
  const auto chans = family_channels(gr.config.family);
  for (Channel ch : gr.config.active_channels) {
    ControlSignal sig = zero_signal(tg, ch);
    sig.samples = 0.5 * amp * seeded_signal(rng, 5000 + 17 * std::uint64_t(static_cast<int>(ch)), tg);
    for (int k = 0; k < 3; ++k)
      if (chans[k] == ch) ref.boundary_data[k] = sig;
  }
  const Vector yT = solve_forward_nonlinear(ref, 1e-13).final_state();

  const SteeringResult sr =
      picard_steer(gr, y0, yT, c.get_double("nonlinear.delta_cap", default_delta_cap(g)),
                   int(c.get_int("nonlinear.max_iter", 10)),
                   c.get_double("nonlinear.tol", 1e-8) * amp,
                   c.get_double("control.cg_tol", 1e-12));

  TaskOutput out;
  out.metrics["relative_error"] = sr.synthesis.relative_error;
  out.metrics["iterations"] = double(sr.history.size());
  out.metrics["converged"] = sr.converged ? 1.0 : 0.0;
  if (sr.history.size() >= 2) out.metrics["contraction_ratio"] = sr.history[1].contraction_ratio;
  out.metrics["target_scale"] = weighted_norm(w, yT);

  const std::string art = dir + "/iterations.csv";
  CsvWriter csv(art, {"iterate_index", "increment_norm", "contraction_ratio", "target_defect"});
  for (const auto& st : sr.history) {
    csv.field(st.iterate_index);
    csv.field(st.increment_norm);
    csv.field(st.contraction_ratio);
    csv.field(st.target_defect);
    csv.end_row();
  }
  out.artifacts.push_back(art);
  return out;
}

TaskOutput task_critlen(const Config& c, const std::string& dir) {
  const std::string set = c.get_string("critlen.set", "S");
  std::vector<CriticalRoot> roots;
  if (set == "S") {
    for (const auto& wtn : enumerate_S(int(c.get_int("critlen.k_max", 3)))) roots.push_back(wtn.root);
  } else if (set == "N" || set == "F") {
    SearchBox box;
    if (c.has("critlen.box")) {
      const auto v = c.get_double_list("critlen.box");
      if (v.size() != 4) throw ConfigError("critlen.box needs 4 numbers re_min,re_max,im_min,im_max");
      box = SearchBox{v[0], v[1], v[2], v[3]};
    }
    roots = find_critical_lengths(set == "N" ? SetTag::N : SetTag::F, box,
                                  int(c.get_int("critlen.seeds_per_axis", 24)),
                                  c.get_double("critlen.tol", 1e-11),
                                  int(c.get_int("critlen.workers", 0)));
  } else {
    throw ConfigError("critlen.set must be S, N or F");
  }

  TaskOutput out;
  out.metrics["n_roots"] = double(roots.size());
  if (!roots.empty()) {
    out.metrics["L_first"] = roots.front().L;
    double mr = 0, ms = 0;
    for (const auto& r : roots) {
      mr = std::max(mr, r.residual_norm);
      ms = std::max(ms, r.certification_sigma / eigen_matrix_scale(r.L, r));
    }
    out.metrics["max_residual"] = mr;
    out.metrics["max_certification_sigma_rel"] = ms;
  }
  const std::string art = dir + "/atlas.csv";
  write_atlas_csv(art, roots);
  out.artifacts.push_back(art);
  return out;
}

TaskOutput task_norms(const Config& c, const std::string&) {
  const TimeGrid tg = tgrid_of(c);
  const CounterRng rng(std::uint64_t(c.get_int("seed", 0)));
  ControlSignal sig = zero_signal(tg, Channel::RightSlope);
  sig.samples = seeded_signal(rng, 6000, tg);

  TaskOutput out;
  out.metrics["h_third"] = h_s_norm(sig, 1.0 / 3.0);
  out.metrics["h_zero"] = h_s_norm(sig, 0.0);
  out.metrics["h_minus_third"] = h_s_norm(sig, -1.0 / 3.0);
  const ControlSignal fwd = apply_delta_power(sig, -1.0 / 3.0);
  const ControlSignal back = apply_delta_power(fwd, 1.0 / 3.0);
  out.metrics["delta_roundtrip_error"] =
      (back.samples - sig.samples).cwiseAbs().maxCoeff() / sig.samples.cwiseAbs().maxCoeff();
  const Vector q = time_weights(tg);
  out.metrics["parseval_error"] =
      std::abs(h_s_norm(sig, 0.0) - weighted_norm(q, sig.samples)) /
      std::max(1e-300, weighted_norm(q, sig.samples));
  return out;
}

TaskOutput dispatch(const Config& c, const std::string& dir) {
  const std::string task = c.get_string("task");
  if (task == "solve") return task_solve(c, dir);
  if (task == "adjoint") return task_adjoint(c, dir);
  if (task == "gramian") return task_gramian(c, dir);
  if (task == "control") return task_control(c, dir);
  if (task == "nonlinear") return task_nonlinear(c, dir);
  if (task == "critlen") return task_critlen(c, dir);
  if (task == "norms") return task_norms(c, dir);
  throw ConfigError("unknown task `" + task +
                    "` (expected solve, adjoint, gramian, control, nonlinear, critlen, sweep, norms)");
}

void persist_manifest(const RunManifest& m, const std::string& dir) {
  json j;
  j["run_id"] = m.run_id;
  j["tool_version"] = m.tool_version;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  j["config"] = m.config_echo;
  j["headline_metrics"] = m.headline_metrics;
  json outs = json::array();
  for (const auto& [path, sum] : m.outputs) outs.push_back({{"path", path}, {"checksum", sum}});
  j["outputs"] = outs;
  std::ofstream out(dir + "/" + m.run_id + ".manifest.json");
  out << j.dump(2) << "\n";
  std::ofstream log(dir + "/manifests.log", std::ios::app);
  log << m.run_id << ' ' << m.finished_at << '\n';
}

}  // namespace

void validate_config(const Config& config) {
  const std::string task = config.get_string("task");
  static const std::vector<std::string> known{
      "task", "seed", "family", "channels", "grid.L", "grid.n_x", "time.T", "time.n_t",
      "solve.kind", "solve.inner_tol",
      "control.cg_tol", "control.adjoint_mode", "control.solve_mode",
      "control.regularization_epsilon", "control.filter_kappa", "control.amplitude",
      "control.smoothing.left_value", "control.smoothing.right_value",
      "control.smoothing.right_slope", "control.smoothing.right_curvature",
      "nonlinear.amplitude", "nonlinear.max_iter", "nonlinear.tol", "nonlinear.delta_cap",
      "critlen.set", "critlen.k_max", "critlen.box", "critlen.seeds_per_axis", "critlen.tol",
      "critlen.workers",
      "sweep.parameter", "sweep.values", "sweep.task", "output.dir"};
  config.check_known_keys(known);
  const std::vector<std::string> tasks{"solve",     "adjoint", "gramian", "control",
                                       "nonlinear", "critlen", "sweep",   "norms"};
  if (std::find(tasks.begin(), tasks.end(), task) == tasks.end())
    throw ConfigError("unknown task `" + task + "`");
  if (task == "sweep") {
    const std::string p = config.get_string("sweep.parameter");
    if (p != "L" && p != "n_x" && p != "amplitude")
      throw ConfigError("sweep.parameter must be L, n_x or amplitude");
    config.get_double_list("sweep.values");
    const std::string base = config.get_string("sweep.task");
    if (base == "sweep" || std::find(tasks.begin(), tasks.end(), base) == tasks.end())
      throw ConfigError("sweep.task must be a non-sweep task");
  }
  // touch typed fields so malformed values fail here with line diagnostics
  if (config.has("grid.n_x")) (void)config.get_int("grid.n_x");
  if (config.has("grid.L")) (void)config.get_double("grid.L");
  if (config.has("time.n_t")) (void)config.get_int("time.n_t");
  if (config.has("time.T")) (void)config.get_double("time.T");
  if (config.has("seed")) (void)config.get_int("seed");
}

RunManifest run_task(const Config& config, const std::string& out_dir) {
  validate_config(config);
  RunManifest m;
  m.config_echo = config.canonical_text();
  m.run_id = fnv1a64_hex(m.config_echo);
  m.tool_version = tool_version();
  m.started_at = now_iso8601();

  const std::string dir = out_dir + "/" + m.run_id;
  fs::create_directories(dir);
  TaskOutput out;
  try {
    out = dispatch(config, dir);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw TaskError(std::string("task `") + config.get_string("task") + "` failed: " + e.what());
  }
  m.headline_metrics = out.metrics;
  for (const auto& path : out.artifacts) m.outputs.emplace_back(path, fnv1a64_hex(read_file(path)));
  m.finished_at = now_iso8601();
  persist_manifest(m, dir);
  return m;
}

RunManifest run_sweep(const Config& base, const std::string& out_dir, int n_workers) {
  validate_config(base);
  if (base.get_string("task") != "sweep") throw ConfigError("run_sweep: task must be `sweep`");
  const std::string parameter = base.get_string("sweep.parameter");
  const auto values = base.get_double_list("sweep.values");
  const std::string inner_task = base.get_string("sweep.task");

  RunManifest m;
  m.config_echo = base.canonical_text();
  m.run_id = fnv1a64_hex(m.config_echo);
  m.tool_version = tool_version();
  m.started_at = now_iso8601();
  const std::string dir = out_dir + "/" + m.run_id;
  fs::create_directories(dir);

  struct Row {
    double value = 0.0;
    std::string status = "ok";
    std::map<std::string, double> metrics;
  };
  std::vector<Row> rows(values.size());

  auto run_one = [&](size_t i) {
    Config c = base;
    c.set("task", inner_task);
    if (parameter == "L")
      c.set("grid.L", format_double(values[i]));
    else if (parameter == "n_x")
      c.set("grid.n_x", std::to_string(long(values[i])));
    else
      c.set(inner_task == "control" ? "control.amplitude" : "nonlinear.amplitude",
            format_double(values[i]));
    rows[i].value = values[i];
    try {
      const RunManifest sub = run_task(c, dir);
      rows[i].metrics = sub.headline_metrics;
    } catch (const std::exception& e) {
      rows[i].status = std::string("error: ") + e.what();
    }
  };

  int workers = n_workers;
  if (workers <= 0) {
    const char* env = std::getenv("KDVCTRL_WORKERS");
    workers = env ? std::max(1, atoi(env)) : 1;
  }
  workers = std::min<int>(workers, int(values.size()));
  if (workers <= 1) {
    for (size_t i = 0; i < values.size(); ++i) run_one(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<size_t> next{0};
    for (int t = 0; t < workers; ++t)
      pool.emplace_back([&] {
        for (size_t i = next.fetch_add(1); i < values.size(); i = next.fetch_add(1)) run_one(i);
      });
    for (auto& t : pool) t.join();
  }

  // union of metric keys, stable order
  std::vector<std::string> keys;
  for (const auto& r : rows)
    for (const auto& [k, v] : r.metrics) {
      (void)v;
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
    }
  std::vector<std::string> header{parameter, "status"};
  header.insert(header.end(), keys.begin(), keys.end());
  const std::string art = dir + "/sweep.csv";
  {
    CsvWriter csv(art, header);
    for (const auto& r : rows) {
      csv.field(r.value);
      csv.field(r.status);
      for (const auto& k : keys) {
        const auto it = r.metrics.find(k);
        csv.field(it == r.metrics.end() ? std::string("") : format_double(it->second));
      }
      csv.end_row();
    }
  }
  m.outputs.emplace_back(art, fnv1a64_hex(read_file(art)));

  for (size_t i = 0; i < rows.size(); ++i) {
    const std::string prefix = "v" + std::to_string(i) + ".";
    m.headline_metrics[prefix + "value"] = rows[i].value;
    m.headline_metrics[prefix + "ok"] = rows[i].status == "ok" ? 1.0 : 0.0;
    for (const auto& [k, v] : rows[i].metrics) m.headline_metrics[prefix + k] = v;
  }
  m.finished_at = now_iso8601();
  persist_manifest(m, dir);
  return m;
}

bool verify_manifest_outputs(const RunManifest& manifest) {
  for (const auto& [path, sum] : manifest.outputs)
    if (fnv1a64_hex(read_file(path)) != sum) return false;
  return true;
}

}  // namespace kdvctrl
