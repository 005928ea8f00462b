#include "dsim/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "json.hpp"

namespace dsim {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) {
  throw std::invalid_argument("config: " + msg);
}

std::string trimmed(const std::string& text) {
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
  return text.substr(b, e - b);
}

json angles_to_json(const AnglePair& p) {
  return json{{"theta", p.theta}, {"phi", p.phi}};
}

json to_tree(const ExperimentConfig& c) {
  return json{
      {"experiment", to_string(c.experiment)},
      {"spins", {{"two_s1", c.spins.two_s1}, {"two_s2", c.spins.two_s2}}},
      {"rates",
       {{"gamma_mode", c.rates.gamma_mode},
        {"gamma", c.rates.gamma},
        {"omega_d", c.rates.omega_d}}},
      {"geometry",
       {{"u_d", angles_to_json(c.geometry.u_d)},
        {"n1", angles_to_json(c.geometry.n1)},
        {"n2", angles_to_json(c.geometry.n2)}}},
      {"sim",
       {{"dt_initial", c.sim.dt_initial},
        {"t_max", c.sim.t_max},
        {"rel_tol", c.sim.rel_tol},
        {"abs_tol", c.sim.abs_tol},
        {"renorm_each_step", c.sim.renorm_each_step},
        {"sample_stride", c.sim.sample_stride}}},
      {"noise",
       {{"phi0", c.noise.phi0},
        {"theta_grid_size", c.noise.theta_grid_size},
        {"mc_samples", c.noise.mc_samples},
        {"seed", c.noise.seed}}},
      {"basins",
       {{"n_theta", c.basins.n_theta},
        {"n_phi", c.basins.n_phi},
        {"eps", c.basins.eps}}},
      {"flow",
       {{"m", c.flow.m},
        {"perturbation", c.flow.perturbation},
        {"t_max", c.flow.t_max}}},
      {"output", {{"path", c.output.path}, {"format", c.output.format}}},
  };
}

void merge_checked(json& base, const json& patch, const std::string& path) {
  if (!patch.is_object())
    fail("expected an object at " + (path.empty() ? "the top level" : path));
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string child = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) fail("unknown key '" + child + "'");
    json& slot = base[it.key()];
    if (slot.is_object() && it.value().is_object())
      merge_checked(slot, it.value(), child);
    else
      slot = it.value();
  }
}

double num_field(const json& o, const char* key, const std::string& where) {
  const json& j = o.at(key);
  if (!j.is_number()) fail(where + "." + key + " must be a number");
  return j.get<double>();
}

// Accepts genuine JSON integers and floats with no fractional part, so
// values written as 1e7 work for counts.
long long int_field(const json& o, const char* key, const std::string& where) {
  const json& j = o.at(key);
  if (j.is_number_integer()) return j.get<long long>();
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 9.0e18)
      return static_cast<long long>(v);
  }
  fail(where + "." + key + " must be an integer");
}

std::uint64_t uint_field(const json& o, const char* key,
                         const std::string& where) {
  const long long v = int_field(o, key, where);
  if (v < 0) fail(where + "." + key + " must be nonnegative");
  return static_cast<std::uint64_t>(v);
}

bool bool_field(const json& o, const char* key, const std::string& where) {
  const json& j = o.at(key);
  if (!j.is_boolean()) fail(where + "." + key + " must be true or false");
  return j.get<bool>();
}

std::string string_field(const json& o, const char* key,
                         const std::string& where) {
  const json& j = o.at(key);
  if (!j.is_string()) fail(where + "." + key + " must be a string");
  return j.get<std::string>();
}

double angle_value(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return parse_angle(j.get<std::string>());
  fail(where + " must be a number or an angle string");
}

AnglePair angles_field(const json& o, const char* key,
                       const std::string& where) {
  const json& j = o.at(key);
  const std::string at = where + "." + key;
  AnglePair out;
  if (j.is_array()) {
    if (j.size() != 2) fail(at + " must be a [theta, phi] pair");
    out.theta = angle_value(j[0], at + "[0]");
    out.phi = angle_value(j[1], at + "[1]");
    return out;
  }
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it)
      if (it.key() != "theta" && it.key() != "phi")
        fail("unknown key '" + at + "." + it.key() + "'");
    if (!j.contains("theta") || !j.contains("phi"))
      fail(at + " needs both theta and phi");
    out.theta = angle_value(j.at("theta"), at + ".theta");
    out.phi = angle_value(j.at("phi"), at + ".phi");
    return out;
  }
  fail(at + " must be a [theta, phi] pair");
}

ExperimentConfig from_tree(const json& t) {
  ExperimentConfig c;
  c.experiment = experiment_from_string(string_field(t, "experiment", ""));

  const json& sp = t.at("spins");
  c.spins.two_s1 = static_cast<int>(int_field(sp, "two_s1", "spins"));
  c.spins.two_s2 = static_cast<int>(int_field(sp, "two_s2", "spins"));

  const json& ra = t.at("rates");
  c.rates.gamma_mode = string_field(ra, "gamma_mode", "rates");
  c.rates.gamma = num_field(ra, "gamma", "rates");
  c.rates.omega_d = num_field(ra, "omega_d", "rates");

  const json& ge = t.at("geometry");
  c.geometry.u_d = angles_field(ge, "u_d", "geometry");
  c.geometry.n1 = angles_field(ge, "n1", "geometry");
  c.geometry.n2 = angles_field(ge, "n2", "geometry");

  const json& si = t.at("sim");
  c.sim.dt_initial = num_field(si, "dt_initial", "sim");
  c.sim.t_max = num_field(si, "t_max", "sim");
  c.sim.rel_tol = num_field(si, "rel_tol", "sim");
  c.sim.abs_tol = num_field(si, "abs_tol", "sim");
  c.sim.renorm_each_step = bool_field(si, "renorm_each_step", "sim");
  c.sim.sample_stride = static_cast<int>(int_field(si, "sample_stride", "sim"));

  const json& no = t.at("noise");
  c.noise.phi0 = num_field(no, "phi0", "noise");
  c.noise.theta_grid_size =
      static_cast<int>(int_field(no, "theta_grid_size", "noise"));
  c.noise.mc_samples = uint_field(no, "mc_samples", "noise");
  c.noise.seed = uint_field(no, "seed", "noise");

  const json& ba = t.at("basins");
  c.basins.n_theta = static_cast<int>(int_field(ba, "n_theta", "basins"));
  c.basins.n_phi = static_cast<int>(int_field(ba, "n_phi", "basins"));
  c.basins.eps = num_field(ba, "eps", "basins");

  const json& fl = t.at("flow");
  c.flow.m = static_cast<int>(int_field(fl, "m", "flow"));
  c.flow.perturbation = num_field(fl, "perturbation", "flow");
  c.flow.t_max = num_field(fl, "t_max", "flow");

  const json& ou = t.at("output");
  c.output.path = string_field(ou, "path", "output");
  c.output.format = string_field(ou, "format", "output");
  return c;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::trajectory: return "trajectory";
    case ExperimentKind::basins: return "basins";
    case ExperimentKind::noise_curve: return "noise_curve";
    case ExperimentKind::schmidt_flow: return "schmidt_flow";
    case ExperimentKind::validate: return "validate";
  }
  fail("unhandled experiment kind");
}

ExperimentKind experiment_from_string(const std::string& name) {
  std::string s = name;
  for (char& ch : s)
    if (ch == '-') ch = '_';
  if (s == "trajectory") return ExperimentKind::trajectory;
  if (s == "basins") return ExperimentKind::basins;
  if (s == "noise_curve") return ExperimentKind::noise_curve;
  if (s == "schmidt_flow") return ExperimentKind::schmidt_flow;
  if (s == "validate") return ExperimentKind::validate;
  fail("unknown experiment '" + name + "'");
}

double parse_angle(const std::string& text) {
  std::string s = trimmed(text);
  for (char& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  double scale = 1.0;
  if (s.size() >= 2 && s.compare(s.size() - 2, 2, "pi") == 0) {
    scale = kPi;
    s = trimmed(s.substr(0, s.size() - 2));
    if (!s.empty() && s.back() == '*') s = trimmed(s.substr(0, s.size() - 1));
  }
  if (s.empty()) {
    if (scale == 1.0) fail("empty angle literal");
    return scale;
  }
  if (s == "-") return -scale;
  if (s == "+") return scale;
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end != begin + s.size())
    fail("cannot parse angle '" + text + "'");
  return v * scale;
}

void ExperimentConfig::validate() const {
  if (spins.two_s1 < 1) fail("spins.two_s1 must be >= 1");
  if (spins.two_s2 < 1) fail("spins.two_s2 must be >= 1");
  const long long dim = static_cast<long long>(spins.two_s1 + 1) *
                        static_cast<long long>(spins.two_s2 + 1);
  if (dim > kDefaultDimensionCap)
    fail("total dimension " + std::to_string(dim) + " exceeds the cap of " +
         std::to_string(kDefaultDimensionCap));

  if (rates.gamma_mode != "constant" && rates.gamma_mode != "coupling")
    fail("rates.gamma_mode must be 'constant' or 'coupling'");
  if (!std::isfinite(rates.gamma) || rates.gamma < 0.0)
    fail("rates.gamma must be finite and >= 0");
  if (!std::isfinite(rates.omega_d) || rates.omega_d < 0.0)
    fail("rates.omega_d must be finite and >= 0");

  for (const AnglePair* p : {&geometry.u_d, &geometry.n1, &geometry.n2})
    if (!std::isfinite(p->theta) || !std::isfinite(p->phi))
      fail("geometry angles must be finite");

  sim.validate();

  if (!std::isfinite(noise.phi0) || noise.phi0 <= 0.0)
    fail("noise.phi0 must be finite and > 0");
  if (noise.theta_grid_size < 2) fail("noise.theta_grid_size must be >= 2");
  if (noise.mc_samples < 1) fail("noise.mc_samples must be >= 1");

  if (basins.n_theta < 2) fail("basins.n_theta must be >= 2");
  if (basins.n_phi < 2) fail("basins.n_phi must be >= 2");
  if (!(basins.eps > 0.0) || !(basins.eps < 0.5))
    fail("basins.eps must lie in (0, 0.5)");

  if (flow.m < 1) fail("flow.m must be >= 1");
  if (static_cast<long long>(flow.m) * flow.m > kDefaultDimensionCap)
    fail("flow.m squared exceeds the dimension cap");
  if (!std::isfinite(flow.perturbation) || flow.perturbation < 0.0)
    fail("flow.perturbation must be finite and >= 0");
  if (!std::isfinite(flow.t_max) || flow.t_max < 0.0)
    fail("flow.t_max must be finite and >= 0");

  if (output.format != "csv" && output.format != "json")
    fail("output.format must be 'csv' or 'json'");
  if (output.path.empty()) fail("output.path must not be empty");
}

ExperimentConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(e.what());
  }
  json base = to_tree(ExperimentConfig{});
  merge_checked(base, doc, "");
  ExperimentConfig c = from_tree(base);
  c.validate();
  return c;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void apply_override(ExperimentConfig& config, const std::string& key,
                    const std::string& value) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : key) {
    if (ch == '.') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  parts.push_back(cur);
  for (const std::string& p : parts)
    if (p.empty()) fail("bad override key '" + key + "'");

  json t = to_tree(config);
  json* node = &t;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->is_object() || !node->contains(parts[i]))
      fail("unknown key '" + key + "'");
    node = &(*node)[parts[i]];
  }
  if (!node->is_object() || !node->contains(parts.back()))
    fail("unknown key '" + key + "'");
  (*node)[parts.back()] =
      json::accept(value) ? json::parse(value) : json(value);
  config = from_tree(t);
}

std::string to_json(const ExperimentConfig& config, int indent) {
  return to_tree(config).dump(indent);
}

}  // namespace dsim
