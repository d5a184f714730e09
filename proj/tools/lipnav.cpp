// lipnav command-line tool.
//
// Exit codes: 0 success, 1 run fault (or infeasible plan), 2 usage or input error.

#include <CLI11.hpp>

#include <filesystem>
#include <future>
#include <iostream>

#include "lipnav/io.hpp"

using namespace lipnav;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0, kFault = 1, kUsage = 2;

void write_file(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out << text;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

std::vector<double> parse_list(const std::string& s, std::size_t n, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string cell;
  try {
    while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
  } catch (const std::exception&) {
    throw ParseError(what + " must be " + std::to_string(n) + " comma-separated numbers");
  }
  if (out.size() != n) throw ParseError(what + " must be " + std::to_string(n) + " comma-separated numbers");
  return out;
}

/// Scenario from --scenario, or defaults with --terrain overriding the terrain kind.
Scenario load_scenario(const std::string& path, const std::string& terrain_kind_override) {
  Scenario scn = path.empty() ? Scenario{} : parse_scenario(path);
  if (!terrain_kind_override.empty())
    scn.terrain = parse_scenario_string("terrain: {kind: " + terrain_kind_override + "}\n").terrain;
  return scn;
}

int cmd_gen_terrain(const std::string& scenario, const std::string& kind, const std::string& out_dir) {
  const Scenario scn = load_scenario(scenario, kind);
  const Provenance p = provenance_of(scn);
  const Terrain t = generate_terrain(scn.terrain);
  fs::create_directories(out_dir);
  write_file((fs::path(out_dir) / "terrain.json").string(), dump(terrain_json(t, p)));
  write_file((fs::path(out_dir) / "heightfield.csv").string(), heightfield_csv(t.heightfield, p));
  std::cerr << terrain_kind(t.spec) << ": " << t.polygons.size() << " foothold polygons, heightfield "
            << t.heightfield.nx() << "x" << t.heightfield.ny() << "\n";
  return kOk;
}

int cmd_gen_ref(const std::string& scenario, const std::string& kind, const std::string& cmd_text, int steps,
                double dt, const std::string& out) {
  const Scenario scn = load_scenario(scenario, kind);
  const auto c = parse_list(cmd_text, 3, "--cmd");
  if (steps < 1) throw ValidationError("--steps must be >= 1");
  if (!(dt > 0)) throw ValidationError("--dt must be > 0");
  const Terrain t = generate_terrain(scn.terrain);
  const Pose3 base = Pose3::planar(scn.start.x, scn.start.y, 0.0, scn.start.theta);
  const StepContext ctx = standing_context(base, scn.gait, 1, t, {c[0], c[1], c[2]});
  const auto nominal = rollout_references(ctx, t, scn.gait, steps, false);
  const auto modulated = rollout_references(ctx, t, scn.gait, steps, true);
  write_file(out, references_csv(nominal, modulated, t, dt, provenance_of(scn)));
  auto report = [&](const char* name, const std::vector<StepReference>& refs) {
    int invalid = 0, pen = 0;
    for (const auto& r : refs) {
      invalid += footstep_valid(t, r.footstep_target.xy()) ? 0 : 1;
      pen += swing_penetrations(t, r);
    }
    std::cerr << name << ": " << invalid << " invalid footsteps, " << pen << " swing penetrations\n";
  };
  report("nominal", nominal);
  report("modulated", modulated);
  return kOk;
}

int cmd_plan(const std::string& scenario, const std::string& out) {
  const Scenario scn = parse_scenario(scenario);
  const Plan plan = solve_mpc(scn.start, scn.goal, scn.obstacles, scn.mpc);
  write_file(out, dump(plan_json(plan, provenance_of(scn))));
  std::cerr << "plan: " << to_string(plan.status) << ", objective " << format_number(plan.objective) << "\n";
  return plan.status == SolveStatus::Infeasible ? kFault : kOk;
}

int cmd_render_depth(const std::string& scenario, const std::string& kind, const std::string& pose_text,
                     const std::string& format, const std::string& downsample, bool noise, const std::string& out) {
  const Scenario scn = load_scenario(scenario, kind);
  const Terrain t = generate_terrain(scn.terrain);
  NavState at = scn.start;
  if (!pose_text.empty()) {
    const auto v = parse_list(pose_text, 3, "--pose");
    at = {v[0], v[1], v[2]};
  }
  const MeshInstance ground{std::make_shared<const Mesh>(heightfield_mesh(t.heightfield))};
  std::vector<MeshInstance> dynamic;
  for (const auto& o : scn.obstacles) {
    // Ellipses render as boxes circumscribing them, 1 m tall; halfplanes are not rendered.
    if (const auto* e = std::get_if<EllipseObstacle>(&o)) {
      const double z = t.height_at(e->center.x(), e->center.y());
      dynamic.push_back({std::make_shared<const Mesh>(box_mesh(Vec3(e->semi_axes.x(), e->semi_axes.y(), 0.5))),
                         Eigen::AngleAxisd(e->rotation, Vec3::UnitZ()).toRotationMatrix(),
                         Vec3(e->center.x(), e->center.y(), z + 0.5)});
    }
  }
  const CameraIntrinsics intr;
  const CameraPose cam = torso_camera(at.x, at.y, t.height_at(at.x, at.y), at.theta);
  DepthImage img = raycast_depth(ground, dynamic, cam, intr);
  if (noise) img = apply_noise(img, DepthNoise{0.03, 0.01, scn.seed});
  if (!downsample.empty()) {
    const auto f = parse_list(downsample, 2, "--downsample");
    img = nan_aware_downsample(img, static_cast<int>(f[0]), static_cast<int>(f[1]));
  }
  const Provenance p = provenance_of(scn);
  if (format == "csv") {
    write_file(out, depth_csv(img, p));
  } else {
    if (out.empty() || out == "-") throw ParseError("PFM output needs --out");
    std::ofstream f(out, std::ios::binary);
    write_pfm(f, img);
    write_file(out + ".json", dump({{"meta", meta_json(p)}, {"width", img.width}, {"height", img.height}}));
  }
  return kOk;
}

struct SimOutcome {
  RunSummary summary;
  std::string trace_csv;
  Json summary_json;
};

SimOutcome simulate(const Scenario& scn) {
  const Trace trace = run_scenario(scn);
  const Provenance p = provenance_of(scn);
  SimOutcome o;
  o.summary = summarize(trace);
  o.trace_csv = trace_csv(trace, scn.obstacles.size(), p);
  o.summary_json = summary_json(o.summary, p);
  return o;
}

int cmd_sim(const std::vector<std::string>& scenarios, const std::string& out, const std::string& summary_path,
            const std::string& out_dir) {
  if (scenarios.size() == 1 && out_dir.empty()) {
    const SimOutcome o = simulate(parse_scenario(scenarios[0]));
    write_file(out, o.trace_csv);
    const std::string summary = dump(o.summary_json);
    if (!summary_path.empty()) write_file(summary_path, summary);
    std::cerr << summary;
    return o.summary.status == RunStatus::Fault ? kFault : kOk;
  }
  if (out_dir.empty()) throw ParseError("several scenarios need --out-dir");
  fs::create_directories(out_dir);
  std::vector<Scenario> parsed;
  for (const auto& s : scenarios) parsed.push_back(parse_scenario(s));
  std::vector<std::future<SimOutcome>> jobs;
  for (const auto& scn : parsed) jobs.push_back(std::async(std::launch::async, simulate, scn));
  int code = kOk;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const SimOutcome o = jobs[i].get();
    const std::string stem = fs::path(scenarios[i]).stem().string();
    write_file((fs::path(out_dir) / (stem + ".trace.csv")).string(), o.trace_csv);
    write_file((fs::path(out_dir) / (stem + ".summary.json")).string(), dump(o.summary_json));
    std::cerr << stem << ": " << to_string(o.summary.status) << "\n";
    if (o.summary.status == RunStatus::Fault) code = kFault;
  }
  return code;
}

int cmd_eval(const std::string& trace_path, const std::string& out) {
  std::ifstream in(trace_path);
  if (!in) throw ParseError("cannot open trace '" + trace_path + "'");
  const TraceTable table = read_trace_csv(in);
  const auto [actual, ref] = trace_table_channels(table);
  const auto objectives = default_objectives();
  const TraceEvaluation eval = evaluate_trace(actual, ref, objectives);
  std::ostringstream csv;
  csv << "# config_hash=" << table.meta.config_hash << " seed=" << table.meta.seed << "\n";
  csv << "objective,t,V,V_dot,r_V,r_Vdot,r_total\n";
  Json means = Json::object();
  for (std::size_t k = 0; k < objectives.size(); ++k) {
    double acc = 0.0;
    for (const auto& s : eval.rewards[k]) {
      csv << objectives[k].name;
      for (double v : {s.t, s.V, s.V_dot, s.r_V, s.r_Vdot, s.r_total}) csv << ',' << format_number(v);
      csv << '\n';
      acc += s.r_total;
    }
    means[objectives[k].name] = acc / eval.rewards[k].size();
  }
  write_file(out, csv.str());
  std::cerr << dump({{"meta", meta_json(table.meta)},
                     {"samples", actual.size()},
                     {"mean_reward", means},
                     {"mean_foot_error", eval.mean_foot_error},
                     {"mean_com_error", eval.mean_com_error}});
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lipnav: terrain-aware gait references and SE(2) navigation"};
  app.require_subcommand(1);

  std::string scenario, terrain, out, out_dir = ".", summary, cmd = "0,0,0", pose, format = "pfm", downsample,
                                     trace, batch_dir;
  std::vector<std::string> scenarios;
  int steps = 10;
  double dt = 0.01;
  bool noise = false;

  auto* gen_terrain = app.add_subcommand("gen-terrain", "write terrain.json and heightfield.csv");
  gen_terrain->add_option("--scenario", scenario, "scenario YAML")->check(CLI::ExistingFile);
  gen_terrain->add_option("--terrain", terrain, "terrain kind: flat, slope, stairs, blocks");
  gen_terrain->add_option("--out-dir", out_dir, "output directory");

  auto* gen_ref = app.add_subcommand("gen-ref", "nominal and modulated step references as CSV");
  gen_ref->add_option("--scenario", scenario, "scenario YAML")->check(CLI::ExistingFile);
  gen_ref->add_option("--terrain", terrain, "terrain kind: flat, slope, stairs, blocks");
  gen_ref->add_option("--cmd", cmd, "velocity command vx,vy,wz");
  gen_ref->add_option("--steps", steps, "number of steps");
  gen_ref->add_option("--dt", dt, "sample spacing within a step, s");
  gen_ref->add_option("--out", out, "output CSV (default stdout)");

  auto* plan = app.add_subcommand("plan", "solve one MPC problem from start to goal");
  plan->add_option("--scenario", scenario, "scenario YAML")->required()->check(CLI::ExistingFile);
  plan->add_option("--out", out, "output JSON (default stdout)");

  auto* depth = app.add_subcommand("render-depth", "render the torso depth camera");
  depth->add_option("--scenario", scenario, "scenario YAML")->check(CLI::ExistingFile);
  depth->add_option("--terrain", terrain, "terrain kind: flat, slope, stairs, blocks");
  depth->add_option("--pose", pose, "robot pose x,y,yaw (default scenario start)");
  depth->add_option("--format", format, "pfm or csv")->check(CLI::IsMember({"pfm", "csv"}));
  depth->add_option("--downsample", downsample, "block factors fy,fx");
  depth->add_flag("--noise", noise, "apply the seeded bias-plane and uniform noise");
  depth->add_option("--out", out, "output file");

  auto* sim = app.add_subcommand("sim", "run closed-loop scenarios");
  sim->add_option("--scenario", scenarios, "scenario YAML (repeat for a batch)")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", out, "trace CSV (default stdout)");
  sim->add_option("--summary", summary, "summary JSON");
  sim->add_option("--out-dir", batch_dir, "batch output directory");

  auto* eval = app.add_subcommand("eval", "CLF rewards over a trace");
  eval->add_option("--trace", trace, "trace CSV")->required()->check(CLI::ExistingFile);
  eval->add_option("--out", out, "per-sample rewards CSV (default stdout)");

  if (argc < 2) {
    std::cerr << app.help();
    return kUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*gen_terrain) return cmd_gen_terrain(scenario, terrain, out_dir);
    if (*gen_ref) return cmd_gen_ref(scenario, terrain, cmd, steps, dt, out);
    if (*plan) return cmd_plan(scenario, out);
    if (*depth) return cmd_render_depth(scenario, terrain, pose, format, downsample, noise, out);
    if (*sim) return cmd_sim(scenarios, out, summary, batch_dir);
    if (*eval) return cmd_eval(trace, out);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFault;
  }
  return kUsage;
}
