#include "warpflow/cli/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "warpflow/errors.hpp"

namespace warpflow::cli {

using nlohmann::json;

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

// Reads the keys of one JSON object and rejects whatever is left unread.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  bool has(const std::string& key) const { return node_.contains(key); }

  template <class T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!node_.contains(key)) return;
    const json& v = node_.at(key);
    const std::string field = name(key);
    if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(field + ": expected a string");
    } else if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError(field + ": expected a number");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(field + ": expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.get<long long>() < 0) throw ConfigError(field + ": must be non-negative");
      }
    } else {
      if (!v.is_array()) throw ConfigError(field + ": expected an array of numbers");
      for (const auto& e : v) {
        if (!e.is_number()) throw ConfigError(field + ": expected an array of numbers");
      }
    }
    out = v.get<T>();
  }

  Section child(const std::string& key) {
    seen_.insert(key);
    if (!node_.contains(key)) return Section(empty(), name(key));
    return Section(node_.at(key), name(key));
  }

  void finish() const {
    for (const auto& [key, value] : node_.items()) {
      if (!seen_.count(key)) {
        throw ConfigError("unknown key '" + name(key) + "' (the schema is strict)");
      }
    }
  }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  static const json& empty() {
    static const json e = json::object();
    return e;
  }
  std::string where() const { return path_.empty() ? "config" : path_; }

  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

void positive(double v, const std::string& field) {
  require(v > 0.0, field + ": must be > 0 (got " + fmt(v) + ")");
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

void read_space(Section s, SpaceConfig& out) {
  s.get("preset", out.preset);
  if (out.preset == "power") {
    s.get("p", out.p);
    s.get("glue", out.glue);
    positive(out.p, s.name("p"));
    positive(out.glue, s.name("glue"));
  } else if (out.preset == "table") {
    s.get("path", out.path);
    require(!out.path.empty(), s.name("path") + ": required for preset 'table'");
    std::string shape;
    s.get("tail_shape", shape);
    if (!shape.empty()) {
      require(shape == "power" || shape == "exponential",
              s.name("tail_shape") + ": expected 'power' or 'exponential'");
      out.tail_shape = shape;
    }
    s.get("tail_exponent", out.tail_exponent);
  } else {
    require(out.preset == "euclidean" || out.preset == "hyperbolic",
            s.name("preset") + ": unknown warp preset '" + out.preset + "'");
  }
  s.finish();
}

void read_phi(Section s, PhiConfig& out) {
  s.get("preset", out.preset);
  if (out.preset == "gaussian") {
    s.get("mu", out.mu);
    positive(out.mu, s.name("mu"));
  } else if (out.preset == "log_power") {
    s.get("a", out.a);
    s.get("b", out.b);
    s.get("c", out.c);
  } else {
    require(out.preset == "none", s.name("preset") + ": unknown phi preset '" + out.preset + "'");
  }
  s.finish();
}

void read_psi(Section s, PsiConfig& out) {
  s.get("preset", out.preset);
  if (out.preset == "z_squared") {
    s.get("a", out.a);
  } else if (out.preset == "table") {
    s.get("path", out.path);
    require(!out.path.empty(), s.name("path") + ": required for preset 'table'");
  } else {
    require(out.preset == "zero", s.name("preset") + ": unknown psi preset '" + out.preset + "'");
  }
  s.finish();
}

void read_initial(Section s, InitialConfig& out) {
  s.get("preset", out.preset);
  s.get("theta0", out.theta0);
  require(out.theta0 > 0.0 && out.theta0 < 3.141592653589793,
          s.name("theta0") + ": must lie in (0, pi)");
  if (out.preset == "fourier") {
    s.get("a", out.a);
    s.get("b", out.b);
  } else {
    require(out.preset == "latitude",
            s.name("preset") + ": unknown initial preset '" + out.preset + "'");
    require(out.theta0 <= 1.5707963267948966,
            s.name("theta0") + ": latitude circles need theta0 in (0, pi/2]");
  }
  s.finish();
}

void read_solver(Section s, SolverConfig& o) {
  s.get("N", o.N);
  require(o.N >= SphericalCurve::kMinNodes, s.name("N") + ": N ≥ 16 required (got " +
                                                std::to_string(o.N) + ")");
  s.get("cfl", o.cfl);
  require(o.cfl > 0.0 && o.cfl <= 0.5, s.name("cfl") + ": must lie in (0, 0.5]");
  s.get("reparam_every", o.reparam_every);
  s.get("embed_check_every", o.embed_check_every);
  s.get("snapshot_every", o.snapshot_every);
  s.get("t_budget", o.t_budget);
  s.get("ttilde_budget", o.ttilde_budget);
  s.get("max_steps", o.max_steps);
  s.get("rtol", o.rtol);
  s.get("atol", o.atol);
  s.get("pole_eps_rel", o.pole_eps_rel);
  s.get("root_eps_rel", o.root_eps_rel);
  s.get("r_max_rel", o.r_max_rel);
  s.get("max_step", o.max_step);
  s.get("root_window", o.root_window);
  s.get("window", o.window);
  s.get("len_eps_rel", o.len_eps_rel);
  s.get("kpsi_eps_rel", o.kpsi_eps_rel);
  s.get("round_tol", o.round_tol);
  s.get("blowup_ratio", o.blowup_ratio);
  s.get("time_match_tol", o.time_match_tol);
  s.finish();

  for (const auto& [value, key] : std::initializer_list<std::pair<double, const char*>>{
           {o.snapshot_every, "snapshot_every"}, {o.t_budget, "t_budget"},
           {o.ttilde_budget, "ttilde_budget"}, {o.rtol, "rtol"}, {o.atol, "atol"},
           {o.pole_eps_rel, "pole_eps_rel"}, {o.root_eps_rel, "root_eps_rel"},
           {o.r_max_rel, "r_max_rel"}, {o.max_step, "max_step"}, {o.len_eps_rel, "len_eps_rel"},
           {o.kpsi_eps_rel, "kpsi_eps_rel"}, {o.round_tol, "round_tol"},
           {o.blowup_ratio, "blowup_ratio"}, {o.time_match_tol, "time_match_tol"}}) {
    positive(value, s.name(key));
  }
  require(o.reparam_every > 0, s.name("reparam_every") + ": must be > 0");
  require(o.embed_check_every > 0, s.name("embed_check_every") + ": must be > 0");
  require(o.max_steps > 0, s.name("max_steps") + ": must be > 0");
  require(o.window > 0, s.name("window") + ": must be > 0");
  require(o.r_max_rel > 1.0, s.name("r_max_rel") + ": must exceed 1");
  require(o.pole_eps_rel < 1.0, s.name("pole_eps_rel") + ": must be below 1");
  require(o.time_match_tol < 1.0, s.name("time_match_tol") + ": must be below 1");
  require(o.snapshot_every <= o.ttilde_budget,
          s.name("snapshot_every") + ": must not exceed ttilde_budget");
}

std::filesystem::path resolve(const RunConfig& cfg, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : cfg.base_dir / path;
}

std::ifstream open_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open table file " + path.string());
  return in;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte);
    std::string what = e.what();
    if (const auto pos = what.find("syntax error"); pos != std::string::npos) what = what.substr(pos);
    throw ConfigError("parse error at line " + std::to_string(line) + ", column " +
                      std::to_string(col) + ": " + what);
  }

  RunConfig cfg;
  cfg.base_dir = base_dir;
  Section top(root, "");
  read_space(top.child("space"), cfg.space);
  Section density = top.child("density");
  read_phi(density.child("phi"), cfg.phi);
  read_psi(density.child("psi"), cfg.psi);
  density.finish();
  read_initial(top.child("initial"), cfg.initial);
  require(root.contains("r0"), "r0: required");
  top.get("r0", cfg.r0);
  positive(cfg.r0, "r0");
  read_solver(top.child("solver"), cfg.solver);
  std::string output = cfg.output.string();
  top.get("output", output);
  cfg.output = output;
  top.finish();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.parent_path().empty() ? "." : path.parent_path());
}

json to_json(const RunConfig& cfg) {
  json space{{"preset", cfg.space.preset}};
  if (cfg.space.preset == "power") {
    space["p"] = cfg.space.p;
    space["glue"] = cfg.space.glue;
  } else if (cfg.space.preset == "table") {
    space["path"] = cfg.space.path;
    if (cfg.space.tail_shape) space["tail_shape"] = *cfg.space.tail_shape;
    space["tail_exponent"] = cfg.space.tail_exponent;
  }
  json phi{{"preset", cfg.phi.preset}};
  if (cfg.phi.preset == "gaussian") phi["mu"] = cfg.phi.mu;
  if (cfg.phi.preset == "log_power") {
    phi["a"] = cfg.phi.a;
    phi["b"] = cfg.phi.b;
    phi["c"] = cfg.phi.c;
  }
  json psi{{"preset", cfg.psi.preset}};
  if (cfg.psi.preset == "z_squared") psi["a"] = cfg.psi.a;
  if (cfg.psi.preset == "table") psi["path"] = cfg.psi.path;
  json initial{{"preset", cfg.initial.preset}, {"theta0", cfg.initial.theta0}};
  if (cfg.initial.preset == "fourier") {
    initial["a"] = cfg.initial.a;
    initial["b"] = cfg.initial.b;
  }
  const auto& o = cfg.solver;
  json solver{{"N", o.N},
              {"cfl", o.cfl},
              {"reparam_every", o.reparam_every},
              {"embed_check_every", o.embed_check_every},
              {"snapshot_every", o.snapshot_every},
              {"t_budget", o.t_budget},
              {"ttilde_budget", o.ttilde_budget},
              {"max_steps", o.max_steps},
              {"rtol", o.rtol},
              {"atol", o.atol},
              {"pole_eps_rel", o.pole_eps_rel},
              {"root_eps_rel", o.root_eps_rel},
              {"r_max_rel", o.r_max_rel},
              {"max_step", o.max_step},
              {"root_window", o.root_window},
              {"window", o.window},
              {"len_eps_rel", o.len_eps_rel},
              {"kpsi_eps_rel", o.kpsi_eps_rel},
              {"round_tol", o.round_tol},
              {"blowup_ratio", o.blowup_ratio},
              {"time_match_tol", o.time_match_tol}};
  return json{{"space", space},
              {"density", {{"phi", phi}, {"psi", psi}}},
              {"initial", initial},
              {"r0", cfg.r0},
              {"solver", solver},
              {"output", cfg.output.string()}};
}

WarpedSpace build_space(const RunConfig& cfg) {
  const auto& s = cfg.space;
  if (s.preset == "euclidean") return WarpedSpace::euclidean();
  if (s.preset == "hyperbolic") return WarpedSpace::hyperbolic();
  if (s.preset == "power") return WarpedSpace::power(s.p, s.glue);
  auto in = open_table(resolve(cfg, s.path));
  std::vector<double> radii, values;
  double r = 0.0, w = 0.0;
  while (in >> r >> w) {
    radii.push_back(r);
    values.push_back(w);
  }
  if (!in.eof()) throw ConfigError("space table " + s.path + ": expected two numeric columns");
  std::optional<WarpTail> tail;
  if (s.tail_shape) {
    tail = WarpTail{*s.tail_shape == "exponential" ? WarpTail::Shape::Exponential
                                                    : WarpTail::Shape::Power,
                    s.tail_exponent};
  }
  return WarpedSpace::tabulated(std::move(radii), std::move(values), tail);
}

DensitySpec build_density(const RunConfig& cfg) {
  DensitySpec d{RadialDensity::none(), AngularDensity::zero()};
  if (cfg.phi.preset == "gaussian") d.radial = RadialDensity::gaussian(cfg.phi.mu);
  if (cfg.phi.preset == "log_power") {
    d.radial = RadialDensity::log_power(cfg.phi.a, cfg.phi.b, cfg.phi.c);
  }
  if (cfg.psi.preset == "z_squared") d.angular = AngularDensity::z_squared(cfg.psi.a);
  if (cfg.psi.preset == "table") {
    auto in = open_table(resolve(cfg, cfg.psi.path));
    std::size_t nt = 0, nl = 0;
    if (!(in >> nt >> nl)) throw ConfigError("psi table " + cfg.psi.path + ": missing header");
    std::vector<double> values;
    double v = 0.0;
    while (in >> v) values.push_back(v);
    if (!in.eof()) throw ConfigError("psi table " + cfg.psi.path + ": non-numeric entry");
    d.angular = AngularDensity::latlon_table(nt, nl, std::move(values));
  }
  return d;
}

SphericalCurve build_initial(const RunConfig& cfg, const WarpedSpace& space) {
  const double rho = space.w(cfg.r0);
  if (cfg.initial.preset == "latitude") {
    return make_latitude_circle(cfg.initial.theta0, cfg.solver.N, rho);
  }
  return make_fourier_curve({cfg.initial.theta0, cfg.initial.a, cfg.initial.b}, cfg.solver.N, rho);
}

Budgets build_budgets(const RunConfig& cfg) {
  return {cfg.solver.t_budget, cfg.solver.ttilde_budget, cfg.solver.max_steps};
}

ComposerOptions build_options(const RunConfig& cfg) {
  const auto& o = cfg.solver;
  ComposerOptions opts;
  opts.radial.rtol = o.rtol;
  opts.radial.atol = o.atol;
  opts.radial.pole_eps_rel = o.pole_eps_rel;
  opts.radial.root_eps_rel = o.root_eps_rel;
  opts.radial.r_max_rel = o.r_max_rel;
  opts.radial.max_step = o.max_step;
  opts.radial.root_window = o.root_window;
  opts.sphere.cfl = o.cfl;
  opts.sphere.reparam_every = o.reparam_every;
  opts.sphere.embed_check_every = o.embed_check_every;
  opts.sphere.singularity = {o.window, o.len_eps_rel, o.kpsi_eps_rel, o.round_tol, o.blowup_ratio};
  opts.snapshot_every = o.snapshot_every;
  opts.time_match_tol = o.time_match_tol;
  return opts;
}

std::filesystem::path output_dir(const RunConfig& cfg) {
  if (const char* env = std::getenv("WARPFLOW_OUT"); env && *env) return env;
  return cfg.output;
}

}  // namespace warpflow::cli
