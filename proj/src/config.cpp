#include "skewopt/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace skewopt {

using nlohmann::json;

namespace {

constexpr std::pair<Command, const char*> kCommands[] = {
    {Command::Solve, "solve"},
    {Command::Optimize, "optimize"},
    {Command::TruncationSweep, "sweep-truncate"},
    {Command::PerforationSweep, "sweep-perforate"},
    {Command::ValidateExample, "validate-example"},
    {Command::CheckFType, "check-ftype"},
};

// Reads the members of one JSON object and rejects whatever was not consumed.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  const json* find(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string name(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void get(const char* key, double& out) {
    if (auto* v = find(key)) {
      if (!v->is_number()) throw ConfigError(name(key) + ": expected a number");
      out = v->get<double>();
    }
  }
  void get(const char* key, int& out) {
    if (auto* v = find(key)) {
      if (!v->is_number_integer()) throw ConfigError(name(key) + ": expected an integer");
      out = v->get<int>();
    }
  }
  void get(const char* key, std::uint64_t& out) {
    if (auto* v = find(key)) {
      if (!v->is_number_unsigned()) throw ConfigError(name(key) + ": expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void get(const char* key, std::string& out) {
    if (auto* v = find(key)) {
      if (!v->is_string()) throw ConfigError(name(key) + ": expected a string");
      out = v->get<std::string>();
    }
  }
  void get(const char* key, std::vector<double>& out) {
    if (auto* v = find(key)) {
      if (!v->is_array()) throw ConfigError(name(key) + ": expected an array of numbers");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number()) throw ConfigError(name(key) + ": expected an array of numbers");
        out.push_back(e.get<double>());
      }
    }
  }
  void get(const char* key, std::optional<double>& out) {
    if (auto* v = find(key)) {
      if (v->is_null()) {
        out.reset();
      } else if (v->is_number()) {
        out = v->get<double>();
      } else {
        throw ConfigError(name(key) + ": expected a number or null");
      }
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("unknown config key '" + name(it.key().c_str()) + "'");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json parse_strict(const std::string& text) {
  // The callback sees every key in document order; one key set per open object.
  std::vector<std::set<std::string>> open;
  std::vector<std::string> path;
  std::string pending;
  auto cb = [&](int, json::parse_event_t ev, json& parsed) {
    switch (ev) {
      case json::parse_event_t::object_start:
        open.emplace_back();
        path.push_back(pending);
        break;
      case json::parse_event_t::object_end:
        open.pop_back();
        path.pop_back();
        break;
      case json::parse_event_t::key: {
        const auto key = parsed.get<std::string>();
        if (!open.back().insert(key).second) {
          std::string full;
          for (const auto& p : path)
            if (!p.empty()) full += p + ".";
          throw ConfigError("duplicate config key '" + full + key + "'");
        }
        pending = key;
        break;
      }
      default:
        break;
    }
    return true;
  };
  try {
    return json::parse(text, cb);
  } catch (const json::parse_error& e) {
    // The library message carries "line L, column C".
    throw ConfigError(std::string("config syntax error: ") + e.what());
  }
}

}  // namespace

const char* to_string(Command c) {
  for (const auto& [cmd, name] : kCommands)
    if (cmd == c) return name;
  return "?";
}

Command command_from_string(const std::string& name) {
  for (const auto& [cmd, n] : kCommands)
    if (name == n) return cmd;
  throw ConfigError("unknown command '" + name + "'");
}

void RunConfig::validate() const {
  const auto& m = mesh_spec;
  if (m.file.empty()) {
    if (m.dim != 2 && m.dim != 3) throw ConfigError("mesh_spec.dim: must be 2 or 3");
    if (static_cast<int>(m.lower.size()) != m.dim || static_cast<int>(m.upper.size()) != m.dim)
      throw ConfigError("mesh_spec.lower/upper: need dim coordinates");
    for (int k = 0; k < m.dim; ++k)
      if (!(m.lower[k] < m.upper[k])) throw ConfigError("mesh_spec.lower/upper: degenerate box");
    if (m.n_per_axis < 1) throw ConfigError("mesh_spec.n_per_axis: must be positive");
  }
  const auto& s = set_spec;
  if (!(s.alpha > 0) || !(s.alpha <= s.beta)) throw ConfigError("set_spec: need 0 < alpha <= beta");
  if (!(s.tv_budget > 0) || !(s.radius > 0)) throw ConfigError("set_spec: tv_budget and radius must be positive");
  const auto& t = tolerances;
  if (!(t.linear_rtol > 0) || t.linear_max_iter < 1 || !(t.tol > 0) || t.max_iter < 0 || t.max_outer < 1)
    throw ConfigError("tolerances: values must be positive");
  if (field_spec.quad_points < 8) throw ConfigError("field_spec.quad_points: must be at least 8");
  if (!(field_spec.zeta > 0)) throw ConfigError("field_spec.zeta: must be positive");

  const auto& eps = schedule_spec.epsilons;
  for (std::size_t k = 0; k < eps.size(); ++k) {
    if (!(eps[k] > 0)) throw ConfigError("schedule_spec.epsilons: values must be positive");
    if (k > 0 && !(eps[k] < eps[k - 1])) throw ConfigError("schedule_spec.epsilons: must be strictly decreasing");
  }
  const bool sweep = command == Command::TruncationSweep || command == Command::PerforationSweep;
  if (sweep && eps.empty()) throw ConfigError("schedule_spec.epsilons: required for " + std::string(to_string(command)));
  if (command == Command::CheckFType && eps.size() < 3)
    throw ConfigError("schedule_spec.epsilons: check-ftype needs at least 3 values");
  if (command == Command::PerforationSweep) {
    if (!schedule_spec.sigma) throw ConfigError("schedule_spec.sigma: required in perforate mode");
    if (!(*schedule_spec.sigma > 0)) throw ConfigError("schedule_spec.sigma: must be positive");
    if (schedule_spec.mode != "perforate") throw ConfigError("schedule_spec.mode: must be 'perforate'");
  }
  if (command == Command::TruncationSweep && schedule_spec.mode != "truncate")
    throw ConfigError("schedule_spec.mode: must be 'truncate'");
  if (schedule_spec.mode != "truncate" && schedule_spec.mode != "perforate")
    throw ConfigError("schedule_spec.mode: expected 'truncate' or 'perforate'");

  static const std::set<std::string> names{"identity", "file", "regression_bounded", "regression_singular",
                                           "ball_astar"};
  if (!names.count(field_spec.name)) throw ConfigError("field_spec.name: unknown field '" + field_spec.name + "'");
  if (field_spec.name == "file" && field_spec.file.empty()) throw ConfigError("field_spec.file: required");
  if (field_spec.source != "manufactured" && field_spec.source != "unit")
    throw ConfigError("field_spec.source: expected 'manufactured' or 'unit'");
}

RunConfig parse_config(const std::string& text) {
  const json j = parse_strict(text);
  RunConfig c;
  ObjectReader root(j, "");
  std::string cmd;
  root.get("command", cmd);
  if (cmd.empty()) throw ConfigError("command: required");
  c.command = command_from_string(cmd);

  if (auto* m = root.find("mesh_spec")) {
    ObjectReader r(*m, "mesh_spec");
    r.get("dim", c.mesh_spec.dim);
    if (c.mesh_spec.dim == 3) {
      c.mesh_spec.lower = {-1.0, -1.0, -1.0};
      c.mesh_spec.upper = {1.0, 1.0, 1.0};
    }
    r.get("lower", c.mesh_spec.lower);
    r.get("upper", c.mesh_spec.upper);
    r.get("n_per_axis", c.mesh_spec.n_per_axis);
    r.get("file", c.mesh_spec.file);
    r.finish();
  }
  if (auto* f = root.find("field_spec")) {
    ObjectReader r(*f, "field_spec");
    r.get("name", c.field_spec.name);
    r.get("file", c.field_spec.file);
    r.get("source", c.field_spec.source);
    r.get("zeta", c.field_spec.zeta);
    r.get("envelope_scale", c.field_spec.envelope_scale);
    r.get("quad_points", c.field_spec.quad_points);
    r.finish();
  }
  if (auto* s = root.find("set_spec")) {
    ObjectReader r(*s, "set_spec");
    r.get("alpha", c.set_spec.alpha);
    r.get("beta", c.set_spec.beta);
    r.get("tv_budget", c.set_spec.tv_budget);
    r.get("radius", c.set_spec.radius);
    r.finish();
  }
  if (auto* s = root.find("schedule_spec")) {
    ObjectReader r(*s, "schedule_spec");
    r.get("epsilons", c.schedule_spec.epsilons);
    r.get("sigma", c.schedule_spec.sigma);
    r.get("mode", c.schedule_spec.mode);
    r.finish();
  }
  root.get("output_dir", c.output_dir);
  root.get("seeds", c.seeds);
  if (auto* t = root.find("tolerances")) {
    ObjectReader r(*t, "tolerances");
    r.get("linear_rtol", c.tolerances.linear_rtol);
    r.get("linear_max_iter", c.tolerances.linear_max_iter);
    r.get("tol", c.tolerances.tol);
    r.get("max_iter", c.tolerances.max_iter);
    r.get("max_outer", c.tolerances.max_outer);
    r.finish();
  }
  root.finish();
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c) {
  json j;
  j["command"] = to_string(c.command);
  j["mesh_spec"] = {{"dim", c.mesh_spec.dim},
                    {"lower", c.mesh_spec.lower},
                    {"upper", c.mesh_spec.upper},
                    {"n_per_axis", c.mesh_spec.n_per_axis},
                    {"file", c.mesh_spec.file}};
  j["field_spec"] = {{"name", c.field_spec.name},
                     {"file", c.field_spec.file},
                     {"source", c.field_spec.source},
                     {"zeta", c.field_spec.zeta},
                     {"envelope_scale", c.field_spec.envelope_scale},
                     {"quad_points", c.field_spec.quad_points}};
  j["set_spec"] = {{"alpha", c.set_spec.alpha},
                   {"beta", c.set_spec.beta},
                   {"tv_budget", c.set_spec.tv_budget},
                   {"radius", c.set_spec.radius}};
  j["schedule_spec"] = {{"epsilons", c.schedule_spec.epsilons},
                        {"sigma", c.schedule_spec.sigma ? json(*c.schedule_spec.sigma) : json(nullptr)},
                        {"mode", c.schedule_spec.mode}};
  j["output_dir"] = c.output_dir;
  j["seeds"] = c.seeds;
  j["tolerances"] = {{"linear_rtol", c.tolerances.linear_rtol},
                     {"linear_max_iter", c.tolerances.linear_max_iter},
                     {"tol", c.tolerances.tol},
                     {"max_iter", c.tolerances.max_iter},
                     {"max_outer", c.tolerances.max_outer}};
  return j.dump(2);
}

}  // namespace skewopt
