#pragma once

// Scenario files (YAML) and machine-readable outputs: terrain JSON, heightfield
// CSV, plan JSON, trace CSV, run summary JSON, and PFM depth images. Every
// output carries the scenario's config hash and seed.

#include <yaml-cpp/yaml.h>

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lipnav/depth_sim.hpp"
#include "lipnav/sim_loop.hpp"

namespace lipnav {

using Json = nlohmann::ordered_json;

inline std::string format_number(double v, int digits = 10) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

// ---------------------------------------------------------------------------
// Scenario YAML

namespace yaml_detail {

inline int line_of(const YAML::Node& n) { return n.Mark().is_null() ? -1 : n.Mark().line + 1; }

inline void check_keys(const YAML::Node& node, const std::set<std::string>& allowed, const std::string& section) {
  if (!node.IsMap()) throw ParseError("section '" + section + "' must be a mapping", line_of(node));
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (!allowed.count(key))
      throw ParseError("unknown key '" + key + "' in " + (section.empty() ? "top level" : "'" + section + "'"),
                       line_of(kv.first));
  }
}

template <class T>
void read(const YAML::Node& node, const char* key, T& out, const std::string& section) {
  const YAML::Node v = node[key];
  if (!v) return;
  try {
    out = v.as<T>();
  } catch (const YAML::Exception&) {
    throw ParseError("bad value for '" + section + "." + key + "'", line_of(v));
  }
}

inline void read_vec(const YAML::Node& node, const char* key, double* out, int n, const std::string& section) {
  const YAML::Node v = node[key];
  if (!v) return;
  if (!v.IsSequence() || static_cast<int>(v.size()) != n)
    throw ParseError("'" + section + "." + key + "' must be a list of " + std::to_string(n) + " numbers", line_of(v));
  for (int i = 0; i < n; ++i) {
    try {
      out[i] = v[i].as<double>();
    } catch (const YAML::Exception&) {
      throw ParseError("bad number in '" + section + "." + key + "'", line_of(v[i]));
    }
  }
}

inline void read_nav(const YAML::Node& node, NavState& z, const std::string& section) {
  check_keys(node, {"x", "y", "theta"}, section);
  read(node, "x", z.x, section);
  read(node, "y", z.y, section);
  read(node, "theta", z.theta, section);
}

inline void read_terrain(const YAML::Node& node, TerrainSpec& spec) {
  std::string kind = "flat";
  read(node, "kind", kind, "terrain");
  const std::string s = "terrain";
  std::set<std::string> keys{"kind", "options"};
  if (kind == "flat") {
    FlatSpec f;
    keys.insert({"length", "width", "x_min"});
    check_keys(node, keys, s);
    read(node, "length", f.length, s);
    read(node, "width", f.width, s);
    read(node, "x_min", f.x_min, s);
    spec.shape = f;
  } else if (kind == "slope") {
    SlopeSpec f;
    keys.insert({"grade", "length", "width", "x_min"});
    check_keys(node, keys, s);
    read(node, "grade", f.grade, s);
    read(node, "length", f.length, s);
    read(node, "width", f.width, s);
    read(node, "x_min", f.x_min, s);
    spec.shape = f;
  } else if (kind == "stairs") {
    StairsSpec f;
    keys.insert({"rise", "run", "count", "width", "start", "landing", "x_min"});
    check_keys(node, keys, s);
    read(node, "rise", f.rise, s);
    read(node, "run", f.run, s);
    read(node, "count", f.count, s);
    read(node, "width", f.width, s);
    read(node, "start", f.start, s);
    read(node, "landing", f.landing, s);
    read(node, "x_min", f.x_min, s);
    spec.shape = f;
  } else if (kind == "blocks") {
    BlocksSpec f;
    keys.insert({"block_size", "gap", "jitter", "seed", "rows", "cols", "pit_depth"});
    check_keys(node, keys, s);
    read(node, "block_size", f.block_size, s);
    read(node, "gap", f.gap, s);
    read(node, "jitter", f.jitter, s);
    read(node, "seed", f.seed, s);
    read(node, "rows", f.rows, s);
    read(node, "cols", f.cols, s);
    read(node, "pit_depth", f.pit_depth, s);
    spec.shape = f;
  } else {
    throw ParseError("unknown terrain kind '" + kind + "'", line_of(node["kind"]));
  }
  if (const YAML::Node o = node["options"]) {
    const std::string os = "terrain.options";
    check_keys(o, {"resolution", "edge_inset", "cell_size", "max_radius"}, os);
    read(o, "resolution", spec.options.resolution, os);
    read(o, "edge_inset", spec.options.edge_inset, os);
    read(o, "cell_size", spec.options.cell_size, os);
    read(o, "max_radius", spec.options.max_radius, os);
  }
}

inline Obstacle read_obstacle(const YAML::Node& node) {
  const std::string s = "obstacles[]";
  std::string type;
  read(node, "type", type, s);
  if (type == "ellipse") {
    check_keys(node, {"type", "center", "semi_axes", "rotation"}, s);
    EllipseObstacle e;
    read_vec(node, "center", e.center.data(), 2, s);
    read_vec(node, "semi_axes", e.semi_axes.data(), 2, s);
    read(node, "rotation", e.rotation, s);
    return e;
  }
  if (type == "halfplane") {
    check_keys(node, {"type", "normal", "offset"}, s);
    HalfplaneObstacle h;
    read_vec(node, "normal", h.normal.data(), 2, s);
    read(node, "offset", h.offset, s);
    return h;
  }
  throw ParseError("obstacle type must be 'ellipse' or 'halfplane'", line_of(node));
}

inline void read_box(const YAML::Node& node, InputBox& box) {
  const std::string s = "mpc.bounds";
  check_keys(node, {"v_par", "v_perp", "omega"}, s);
  double b[2];
  b[0] = box.lo.v_par, b[1] = box.hi.v_par;
  read_vec(node, "v_par", b, 2, s);
  box.lo.v_par = b[0], box.hi.v_par = b[1];
  b[0] = box.lo.v_perp, b[1] = box.hi.v_perp;
  read_vec(node, "v_perp", b, 2, s);
  box.lo.v_perp = b[0], box.hi.v_perp = b[1];
  b[0] = box.lo.omega, b[1] = box.hi.omega;
  read_vec(node, "omega", b, 2, s);
  box.lo.omega = b[0], box.hi.omega = b[1];
}

}  // namespace yaml_detail

/// Parses a scenario document. Unknown keys and malformed values raise ParseError
/// with the offending line; invariant violations raise ValidationError.
inline Scenario parse_scenario_string(const std::string& text) {
  using namespace yaml_detail;
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ParseError(e.msg, e.mark.line + 1);
  }
  Scenario scn;
  if (!root || root.IsNull()) {
    scn.validate();
    return scn;
  }
  check_keys(root, {"seed", "max_time", "sim_dt", "replan_steps", "modulate", "start", "goal", "goal_tolerance",
                    "terrain", "obstacles", "gait", "mpc", "tracker", "noise"},
             "");
  read(root, "seed", scn.seed, "");
  read(root, "max_time", scn.max_time, "");
  read(root, "sim_dt", scn.sim_dt, "");
  read(root, "replan_steps", scn.replan_steps, "");
  read(root, "modulate", scn.modulate, "");
  if (const auto n = root["start"]) read_nav(n, scn.start, "start");
  if (const auto n = root["goal"]) read_nav(n, scn.goal, "goal");
  if (const auto n = root["goal_tolerance"]) {
    check_keys(n, {"position", "yaw"}, "goal_tolerance");
    read(n, "position", scn.goal_tol_pos, "goal_tolerance");
    read(n, "yaw", scn.goal_tol_yaw, "goal_tolerance");
  }
  if (const auto n = root["terrain"]) read_terrain(n, scn.terrain);
  if (const auto n = root["obstacles"]) {
    if (!n.IsSequence()) throw ParseError("'obstacles' must be a list", line_of(n));
    for (const auto& o : n) scn.obstacles.push_back(read_obstacle(o));
  }
  if (const auto n = root["gait"]) {
    const std::string s = "gait";
    check_keys(n, {"T", "z0", "w", "z_sw_max", "z_a", "theta_a", "theta_0_left", "theta_0_right", "v_x_max"}, s);
    auto& g = scn.gait;
    read(n, "T", g.T, s);
    read(n, "z0", g.z0, s);
    read(n, "w", g.w, s);
    read(n, "z_sw_max", g.z_sw_max, s);
    read(n, "z_a", g.z_a, s);
    read(n, "theta_a", g.theta_a, s);
    read(n, "theta_0_left", g.theta_0_left, s);
    read(n, "theta_0_right", g.theta_0_right, s);
    read(n, "v_x_max", g.v_x_max, s);
  }
  if (const auto n = root["mpc"]) {
    const std::string s = "mpc";
    check_keys(n, {"N", "dt", "q_xy", "q_theta", "R", "alpha", "delta", "bounds", "tol", "max_iterations",
                   "slack_weight", "slack_weight_l1", "infeasible_slack", "symmetry_break"},
               s);
    auto& m = scn.mpc;
    read(n, "N", m.N, s);
    read(n, "dt", m.dt, s);
    read(n, "q_xy", m.q_xy, s);
    read(n, "q_theta", m.q_theta, s);
    read_vec(n, "R", m.R.data(), 3, s);
    read(n, "alpha", m.alpha, s);
    read(n, "delta", m.delta, s);
    if (const auto b = n["bounds"]) read_box(b, m.box);
    read(n, "tol", m.tol, s);
    read(n, "max_iterations", m.max_iterations, s);
    read(n, "slack_weight", m.slack_weight, s);
    read(n, "slack_weight_l1", m.slack_weight_l1, s);
    read(n, "infeasible_slack", m.infeasible_slack, s);
    read(n, "symmetry_break", m.symmetry_break, s);
  }
  if (const auto n = root["tracker"]) {
    check_keys(n, {"K", "rate"}, "tracker");
    read_vec(n, "K", scn.tracker.K.data(), 3, "tracker");
    read(n, "rate", scn.tracker.rate, "tracker");
  }
  scn.tracker.box = scn.mpc.box;
  if (const auto n = root["noise"]) {
    check_keys(n, {"lag_tau", "velocity_std"}, "noise");
    read(n, "lag_tau", scn.lag_tau, "noise");
    read_vec(n, "velocity_std", scn.noise_std.data(), 3, "noise");
  }
  scn.validate();
  return scn;
}

inline Scenario parse_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario_string(ss.str());
}

inline std::string serialize_scenario(const Scenario& scn) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  auto seq = [&](std::initializer_list<double> v) {
    out << YAML::Flow << YAML::BeginSeq;
    for (double x : v) out << x;
    out << YAML::EndSeq;
  };
  auto nav = [&](const char* key, const NavState& z) {
    out << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginMap << YAML::Key << "x" << YAML::Value << z.x
        << YAML::Key << "y" << YAML::Value << z.y << YAML::Key << "theta" << YAML::Value << z.theta << YAML::EndMap;
  };
  out << YAML::BeginMap;
  out << YAML::Key << "seed" << YAML::Value << scn.seed;
  out << YAML::Key << "max_time" << YAML::Value << scn.max_time;
  out << YAML::Key << "sim_dt" << YAML::Value << scn.sim_dt;
  out << YAML::Key << "replan_steps" << YAML::Value << scn.replan_steps;
  out << YAML::Key << "modulate" << YAML::Value << scn.modulate;
  nav("start", scn.start);
  nav("goal", scn.goal);
  out << YAML::Key << "goal_tolerance" << YAML::Value << YAML::BeginMap << YAML::Key << "position" << YAML::Value
      << scn.goal_tol_pos << YAML::Key << "yaw" << YAML::Value << scn.goal_tol_yaw << YAML::EndMap;

  out << YAML::Key << "terrain" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value << terrain_kind(scn.terrain);
  auto kv = [&](const char* k, auto v) { out << YAML::Key << k << YAML::Value << v; };
  std::visit(
      [&](const auto& sh) {
        using T = std::decay_t<decltype(sh)>;
        if constexpr (std::is_same_v<T, FlatSpec>) {
          kv("length", sh.length), kv("width", sh.width), kv("x_min", sh.x_min);
        } else if constexpr (std::is_same_v<T, SlopeSpec>) {
          kv("grade", sh.grade), kv("length", sh.length), kv("width", sh.width), kv("x_min", sh.x_min);
        } else if constexpr (std::is_same_v<T, StairsSpec>) {
          kv("rise", sh.rise), kv("run", sh.run), kv("count", sh.count), kv("width", sh.width);
          kv("start", sh.start), kv("landing", sh.landing), kv("x_min", sh.x_min);
        } else {
          kv("block_size", sh.block_size), kv("gap", sh.gap), kv("jitter", sh.jitter), kv("seed", sh.seed);
          kv("rows", sh.rows), kv("cols", sh.cols), kv("pit_depth", sh.pit_depth);
        }
      },
      scn.terrain.shape);
  const auto& o = scn.terrain.options;
  out << YAML::Key << "options" << YAML::Value << YAML::BeginMap;
  kv("resolution", o.resolution), kv("edge_inset", o.edge_inset), kv("cell_size", o.cell_size);
  kv("max_radius", o.max_radius);
  out << YAML::EndMap << YAML::EndMap;

  out << YAML::Key << "obstacles" << YAML::Value << YAML::BeginSeq;
  for (const auto& obs : scn.obstacles) {
    out << YAML::BeginMap;
    if (const auto* e = std::get_if<EllipseObstacle>(&obs)) {
      kv("type", "ellipse");
      out << YAML::Key << "center" << YAML::Value;
      seq({e->center.x(), e->center.y()});
      out << YAML::Key << "semi_axes" << YAML::Value;
      seq({e->semi_axes.x(), e->semi_axes.y()});
      kv("rotation", e->rotation);
    } else {
      const auto& h = std::get<HalfplaneObstacle>(obs);
      kv("type", "halfplane");
      out << YAML::Key << "normal" << YAML::Value;
      seq({h.normal.x(), h.normal.y()});
      kv("offset", h.offset);
    }
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  const auto& g = scn.gait;
  out << YAML::Key << "gait" << YAML::Value << YAML::BeginMap;
  kv("T", g.T), kv("z0", g.z0), kv("w", g.w), kv("z_sw_max", g.z_sw_max), kv("z_a", g.z_a);
  kv("theta_a", g.theta_a), kv("theta_0_left", g.theta_0_left), kv("theta_0_right", g.theta_0_right);
  kv("v_x_max", g.v_x_max);
  out << YAML::EndMap;

  const auto& m = scn.mpc;
  out << YAML::Key << "mpc" << YAML::Value << YAML::BeginMap;
  kv("N", m.N), kv("dt", m.dt), kv("q_xy", m.q_xy), kv("q_theta", m.q_theta);
  out << YAML::Key << "R" << YAML::Value;
  seq({m.R.x(), m.R.y(), m.R.z()});
  kv("alpha", m.alpha), kv("delta", m.delta);
  out << YAML::Key << "bounds" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "v_par" << YAML::Value;
  seq({m.box.lo.v_par, m.box.hi.v_par});
  out << YAML::Key << "v_perp" << YAML::Value;
  seq({m.box.lo.v_perp, m.box.hi.v_perp});
  out << YAML::Key << "omega" << YAML::Value;
  seq({m.box.lo.omega, m.box.hi.omega});
  out << YAML::EndMap;
  kv("tol", m.tol), kv("max_iterations", m.max_iterations), kv("slack_weight", m.slack_weight);
  kv("slack_weight_l1", m.slack_weight_l1), kv("infeasible_slack", m.infeasible_slack);
  kv("symmetry_break", m.symmetry_break);
  out << YAML::EndMap;

  out << YAML::Key << "tracker" << YAML::Value << YAML::BeginMap << YAML::Key << "K" << YAML::Value;
  seq({scn.tracker.K.x(), scn.tracker.K.y(), scn.tracker.K.z()});
  kv("rate", scn.tracker.rate);
  out << YAML::EndMap;

  out << YAML::Key << "noise" << YAML::Value << YAML::BeginMap;
  kv("lag_tau", scn.lag_tau);
  out << YAML::Key << "velocity_std" << YAML::Value;
  seq({scn.noise_std.x(), scn.noise_std.y(), scn.noise_std.z()});
  out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

/// FNV-1a over the canonical serialization, as 16 hex digits.
inline std::string config_hash(const Scenario& scn) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : serialize_scenario(scn)) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct Provenance {
  std::string config_hash;
  std::uint64_t seed = 0;
};

inline Provenance provenance_of(const Scenario& scn) { return {config_hash(scn), scn.seed}; }

// ---------------------------------------------------------------------------
// JSON and CSV outputs

inline Json meta_json(const Provenance& p) { return {{"config_hash", p.config_hash}, {"seed", p.seed}}; }

inline Json terrain_json(const Terrain& t, const Provenance& p) {
  Json polys = Json::array();
  for (const auto& poly : t.polygons) {
    Json verts = Json::array();
    for (const auto& v : poly.vertices) verts.push_back({v.x(), v.y(), v.z()});
    polys.push_back({{"id", poly.id},
                     {"vertices", verts},
                     {"normal", {poly.plane_normal.x(), poly.plane_normal.y(), poly.plane_normal.z()}},
                     {"roll", poly.roll},
                     {"pitch", poly.pitch}});
  }
  const auto& hf = t.heightfield;
  return {{"meta", meta_json(p)},
          {"kind", terrain_kind(t.spec)},
          {"heightfield",
           {{"origin", {hf.origin_x(), hf.origin_y()}}, {"resolution", hf.resolution()}, {"nx", hf.nx()},
            {"ny", hf.ny()}}},
          {"polygons", polys}};
}

inline std::string heightfield_csv(const Heightfield& hf, const Provenance& p) {
  std::ostringstream out;
  out << "# config_hash=" << p.config_hash << " seed=" << p.seed << "\n";
  out << "x,y,z\n";
  for (int iy = 0; iy < hf.ny(); ++iy)
    for (int ix = 0; ix < hf.nx(); ++ix)
      out << format_number(hf.sample_x(ix)) << ',' << format_number(hf.sample_y(iy)) << ','
          << format_number(hf.at_index(ix, iy)) << '\n';
  return out.str();
}

inline Json plan_json(const Plan& plan, const Provenance& p) {
  Json states = Json::array(), inputs = Json::array();
  for (const auto& z : plan.states) states.push_back({z.x, z.y, wrap_angle(z.theta)});
  for (const auto& v : plan.inputs) inputs.push_back({v.v_par, v.v_perp, v.omega});
  return {{"meta", meta_json(p)},
          {"status", to_string(plan.status)},
          {"dt", plan.dt},
          {"objective", plan.objective},
          {"max_violation", plan.max_violation},
          {"max_slack", plan.max_slack},
          {"iterations", plan.iterations},
          {"kkt_error", plan.kkt_error},
          {"states", states},
          {"inputs", inputs}};
}

inline Json summary_json(const RunSummary& s, const Provenance& p) {
  auto finite_or_null = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
  return {{"meta", meta_json(p)},
          {"status", to_string(s.status)},
          {"time_to_goal", s.time_to_goal >= 0 ? Json(s.time_to_goal) : Json(nullptr)},
          {"sim_time", s.sim_time},
          {"min_barrier", finite_or_null(s.min_barrier)},
          {"foothold_validity", s.foothold_validity},
          {"steps", s.steps},
          {"replans", s.replans},
          {"swing_penetrations", s.penetrations},
          {"mean_reward_foot", s.mean_reward_foot},
          {"mean_reward_com", s.mean_reward_com},
          {"fault", s.fault}};
}

inline std::vector<std::string> trace_columns(std::size_t n_obstacles) {
  std::vector<std::string> cols{"t",        "x",        "y",        "theta",    "vx",       "vy",       "wz",
                                "cmd_vx",   "cmd_vy",   "cmd_wz",   "plan_id",  "parity",   "phase",    "stance_x",
                                "stance_y", "stance_z", "swing_x",  "swing_y",  "swing_z",  "swing_ref_x",
                                "swing_ref_y", "swing_ref_z", "com_x", "com_y", "com_z",    "com_ref_x",
                                "com_ref_y", "com_ref_z", "h_min"};
  for (std::size_t i = 0; i < n_obstacles; ++i) cols.push_back("h_" + std::to_string(i));
  cols.push_back("events");
  return cols;
}

inline std::string trace_csv(const Trace& trace, std::size_t n_obstacles, const Provenance& p) {
  std::ostringstream out;
  out << "# config_hash=" << p.config_hash << " seed=" << p.seed << "\n";
  const auto cols = trace_columns(n_obstacles);
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& r : trace.rows) {
    std::vector<double> v{r.t,        r.nav.x,          r.nav.y,          r.nav.theta,      r.velocity.vx,
                          r.velocity.vy, r.velocity.wz, r.cmd.vx,         r.cmd.vy,         r.cmd.wz,
                          double(r.plan_id), double(r.stance_parity), r.phase};
    for (const Vec3* w : {&r.stance_foot, &r.swing_foot, &r.swing_ref, &r.com, &r.com_ref})
      v.insert(v.end(), {w->x(), w->y(), w->z()});
    double hmin = std::numeric_limits<double>::quiet_NaN();
    for (double h : r.h) hmin = std::isnan(hmin) ? h : std::min(hmin, h);
    v.push_back(hmin);
    v.insert(v.end(), r.h.begin(), r.h.end());
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << format_number(v[i]);
    out << ',' << r.events << '\n';
  }
  return out.str();
}

struct TraceTable {
  Provenance meta;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return static_cast<int>(i);
    throw ParseError("trace is missing column '" + name + "'");
  }
};

/// Reads the numeric columns of a trace CSV back (events are dropped).
inline TraceTable read_trace_csv(std::istream& in) {
  TraceTable t;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ss(line.substr(1));
      std::string tok;
      while (ss >> tok) {
        if (tok.rfind("config_hash=", 0) == 0) t.meta.config_hash = tok.substr(12);
        if (tok.rfind("seed=", 0) == 0) t.meta.seed = std::stoull(tok.substr(5));
      }
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (t.columns.empty()) {
      t.columns = cells;
      continue;
    }
    if (cells.size() != t.columns.size()) throw ParseError("trace row has wrong number of cells", lineno);
    std::vector<double> row;
    for (std::size_t i = 0; i + 1 < cells.size(); ++i) {
      try {
        row.push_back(cells[i] == "nan" ? std::numeric_limits<double>::quiet_NaN() : std::stod(cells[i]));
      } catch (const std::exception&) {
        throw ParseError("bad number '" + cells[i] + "' in trace", lineno);
      }
    }
    t.rows.push_back(std::move(row));
  }
  if (t.columns.empty()) throw EmptyTrace("trace file has no header");
  return t;
}

/// Actual and reference channels of a trace table.
inline std::pair<std::vector<ChannelSample>, std::vector<ChannelSample>> trace_table_channels(const TraceTable& t) {
  const int ct = t.column("t");
  auto v3 = [&](const std::vector<double>& r, const std::string& p) {
    return Vec3(r[t.column(p + "_x")], r[t.column(p + "_y")], r[t.column(p + "_z")]);
  };
  std::vector<ChannelSample> actual, ref;
  for (const auto& r : t.rows) {
    actual.push_back({r[ct], v3(r, "swing"), v3(r, "com")});
    ref.push_back({r[ct], v3(r, "swing_ref"), v3(r, "com_ref")});
  }
  return {actual, ref};
}

// ---------------------------------------------------------------------------
// Depth images

/// Portable float map, little-endian, rows stored bottom to top.
inline void write_pfm(std::ostream& out, const DepthImage& img) {
  out << "Pf\n" << img.width << ' ' << img.height << "\n-1.0\n";
  for (int v = img.height - 1; v >= 0; --v)
    for (int u = 0; u < img.width; ++u) {
      const float f = static_cast<float>(img.at(u, v));
      unsigned char b[4];
      std::memcpy(b, &f, 4);
      if constexpr (std::endian::native == std::endian::big) std::swap(b[0], b[3]), std::swap(b[1], b[2]);
      out.write(reinterpret_cast<const char*>(b), 4);
    }
}

inline DepthImage read_pfm(std::istream& in) {
  std::string magic;
  int w = 0, h = 0;
  double scale = 0;
  in >> magic >> w >> h >> scale;
  in.get();
  if (magic != "Pf" || w <= 0 || h <= 0) throw ParseError("not a single-channel PFM image");
  DepthImage img(w, h);
  for (int v = h - 1; v >= 0; --v)
    for (int u = 0; u < w; ++u) {
      unsigned char b[4];
      if (!in.read(reinterpret_cast<char*>(b), 4)) throw ParseError("truncated PFM image");
      if ((scale < 0) != (std::endian::native == std::endian::little)) std::swap(b[0], b[3]), std::swap(b[1], b[2]);
      float f;
      std::memcpy(&f, b, 4);
      img.at(u, v) = f;
    }
  return img;
}

inline std::string depth_csv(const DepthImage& img, const Provenance& p) {
  std::ostringstream out;
  out << "# config_hash=" << p.config_hash << " seed=" << p.seed << "\n";
  for (int v = 0; v < img.height; ++v) {
    for (int u = 0; u < img.width; ++u) out << (u ? "," : "") << format_number(img.at(u, v));
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Step references

inline std::string references_csv(const std::vector<StepReference>& nominal, const std::vector<StepReference>& modulated,
                                  const Terrain& terrain, double dt, const Provenance& p) {
  std::ostringstream out;
  out << "# config_hash=" << p.config_hash << " seed=" << p.seed << "\n";
  out << "kind,step,t,parity,com_x,com_y,com_z,com_yaw,swing_x,swing_y,swing_z,swing_roll,swing_pitch,swing_yaw,"
         "target_x,target_y,target_z,target_valid\n";
  auto dump = [&](const char* kind, const std::vector<StepReference>& refs) {
    for (std::size_t k = 0; k < refs.size(); ++k) {
      const auto& r = refs[k];
      const int n = static_cast<int>(std::lround(r.duration / dt));
      const bool valid = footstep_valid(terrain, r.footstep_target.xy());
      for (int i = 0; i <= n; ++i) {
        const double t = i == n ? r.duration : i * dt;
        const Pose3 c = r.com(t), s = r.swing(t);
        out << kind << ',' << k << ',' << format_number(t) << ',' << r.stance_parity;
        for (double v : {c.x, c.y, c.z, c.yaw, s.x, s.y, s.z, s.roll, s.pitch, s.yaw, r.footstep_target.x,
                         r.footstep_target.y, r.footstep_target.z})
          out << ',' << format_number(v);
        out << ',' << (valid ? 1 : 0) << '\n';
      }
    }
  };
  dump("nominal", nominal);
  dump("modulated", modulated);
  return out.str();
}

}  // namespace lipnav
