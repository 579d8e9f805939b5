#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "orbtrack/errors.hpp"
#include "orbtrack/scenario_runner.hpp"

namespace orbtrack {

using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

StateVector sigmas(double pos, double vel) {
  StateVector s;
  s << pos, pos, pos, vel, vel, vel;
  return s;
}

ScenarioConfig case1() {
  ScenarioConfig c;
  c.name = "case1";
  c.initial_mean << 7800.0, 0.0, 0.0, 0.0, 6.8443 * std::cos(kPi / 4), 6.8443 * std::sin(kPi / 4);
  c.initial_sigmas = sigmas(5.0, 1e-3);
  return c;
}

ScenarioConfig case2() {
  ScenarioConfig c = case1();
  c.name = "case2";
  c.initial_mean << 6800.0, 0.0, 0.0, 0.0, 7.5989 * std::cos(kPi / 30), 7.5989 * std::sin(kPi / 30);
  c.initial_sigmas = sigmas(2.0, 0.2);
  return c;
}

ScenarioConfig propagation(const std::string& name, double sigma_v) {
  ScenarioConfig c = case1();
  c.name = name;
  c.initial_mean << 6600.0 * std::cos(kPi / 12), 0.0, 6600.0 * std::sin(kPi / 12), 0.0, 7.8848, 0.0;
  c.initial_sigmas = sigmas(1.0, sigma_v);
  c.duration = 6000.0;
  return c;
}

// Field access with errors that name the offending key.
class Reader {
 public:
  Reader(const json& object, std::string prefix) : object_(object), prefix_(std::move(prefix)) {
    if (!object_.is_object()) fail("", "expected an object");
  }

  template <typename T>
  void number(const char* key, T& out) {
    const json* v = find(key);
    if (!v) return;
    if constexpr (std::is_integral_v<T>) {
      if (!v->is_number_integer() && !v->is_number_unsigned()) fail(key, "expected an integer");
      if (!v->is_number_unsigned() && v->get<std::int64_t>() < 0 && std::is_unsigned_v<T>) fail(key, "must be non-negative");
      out = v->get<T>();
    } else {
      if (!v->is_number()) fail(key, "expected a number");
      out = v->get<T>();
    }
  }

  void boolean(const char* key, bool& out) {
    const json* v = find(key);
    if (!v) return;
    if (!v->is_boolean()) fail(key, "expected true or false");
    out = v->get<bool>();
  }

  void string(const char* key, std::string& out) {
    const json* v = find(key);
    if (!v) return;
    if (!v->is_string()) fail(key, "expected a string");
    out = v->get<std::string>();
  }

  template <typename Vec>
  void vector(const char* key, Vec& out) {
    const json* v = find(key);
    if (!v) return;
    if (!v->is_array() || v->size() != static_cast<std::size_t>(out.size()))
      fail(key, "expected an array of " + std::to_string(out.size()) + " numbers");
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_number()) fail(key, "expected an array of numbers");
      out(static_cast<Eigen::Index>(i)) = (*v)[i].get<double>();
    }
  }

  void list(const char* key, std::vector<double>& out) {
    const json* v = find(key);
    if (!v) return;
    if (!v->is_array()) fail(key, "expected an array of numbers");
    out.clear();
    for (const auto& e : *v) {
      if (!e.is_number()) fail(key, "expected an array of numbers");
      out.push_back(e.get<double>());
    }
  }

  void matrix2(const char* key, Matrix2& out) {
    const json* v = find(key);
    if (!v) return;
    if (!v->is_array() || v->size() != 2) fail(key, "expected a 2x2 nested array");
    for (int i = 0; i < 2; ++i) {
      const json& row = (*v)[static_cast<std::size_t>(i)];
      if (!row.is_array() || row.size() != 2) fail(key, "expected a 2x2 nested array");
      for (int j = 0; j < 2; ++j) {
        if (!row[static_cast<std::size_t>(j)].is_number()) fail(key, "expected a 2x2 nested array");
        out(i, j) = row[static_cast<std::size_t>(j)].get<double>();
      }
    }
  }

  Reader child(const char* key) {
    const json* v = find(key);
    static const json empty = json::object();
    return Reader(v ? *v : empty, prefix_ + key + ".");
  }

  void finish() const {
    for (const auto& [key, value] : object_.items())
      if (!seen_.count(key)) fail(key, "unknown field");
  }

 private:
  const json* find(const char* key) {
    seen_.insert(key);
    const auto it = object_.find(key);
    return it == object_.end() ? nullptr : &*it;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw Error(ErrorKind::Parse, "field '" + prefix_ + key + "': " + what);
  }

  const json& object_;
  std::string prefix_;
  std::set<std::string> seen_;
};

template <typename Vec>
json to_array(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

std::string line_context(const std::string& text, std::size_t byte) {
  std::size_t line = 1, start = 0;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      start = i + 1;
    }
  }
  std::size_t end = text.find('\n', start);
  if (end == std::string::npos) end = text.size();
  const std::size_t column = byte > start ? byte - start : 1;
  return "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + text.substr(start, end - start);
}

}  // namespace

void ScenarioConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorKind::Configuration, what); };
  validate_state(initial_mean);
  for (int i = 0; i < 6; ++i)
    if (!(initial_sigmas(i) >= 0.0) || !std::isfinite(initial_sigmas(i))) bad("initial_sigmas must be non-negative");
  if (!(duration > 0.0)) bad("duration must be positive");
  if (!(integrator_dt > 0.0)) bad("integrator_dt must be positive");
  if (!(truth_dt > 0.0)) bad("truth_dt must be positive");
  if (!(epoch_dt >= integrator_dt)) bad("epoch_dt must be at least integrator_dt");
  if (particle_count < 2) bad("particle_count must be at least 2");
  if (runs < 1) bad("runs must be at least 1");
  if (pcrb_draws < 1) bad("pcrb_draws must be at least 1");
  if (!(process_noise_scale >= 0.0)) bad("process_noise_scale must be non-negative");
  if (study_particles < 2) bad("study_particles must be at least 2");
  if (study_k_max < 1) bad("study_k_max must be at least 1");
  for (double t : study_times)
    if (!(t >= 0.0)) bad("study_times must be non-negative");
  if (!std::is_sorted(study_times.begin(), study_times.end())) bad("study_times must be ascending");
  if (!std::isfinite(depletion_log_ratio)) bad("depletion_log_ratio must be finite");
  ut_params.validate();
  station.validate();
  drag.validate();
  constants.validate();
}

GaussianBelief ScenarioConfig::initial_belief() const {
  GaussianBelief b;
  b.mean = initial_mean;
  b.cov = initial_sigmas.array().square().matrix().asDiagonal();
  b.t = 0.0;
  return b;
}

MotionModel ScenarioConfig::motion_model() const {
  MotionModel m;
  m.forces = {constants, drag};
  m.dt = integrator_dt;
  if (process_noise_scale > 0.0) m.noise = ProcessNoise::isotropic(process_noise_scale);
  return m;
}

ScenarioSetup ScenarioConfig::setup() const {
  ScenarioSetup s;
  s.tracker.model = motion_model();
  s.tracker.station = station;
  s.tracker.ut = ut_params;
  s.tracker.particle_count = particle_count;
  s.truth_model = motion_model();
  s.truth_model.dt = truth_dt;
  s.epoch_dt = epoch_dt;
  return s;
}

std::vector<std::string> preset_names() { return {"case1", "case2", "prop-high", "prop-low"}; }

bool is_preset(const std::string& name) {
  for (const auto& p : preset_names())
    if (p == name) return true;
  return false;
}

ScenarioConfig preset(const std::string& name) {
  if (name == "case1") return case1();
  if (name == "case2") return case2();
  if (name == "prop-high") return propagation(name, 1.0);
  if (name == "prop-low") return propagation(name, 0.01);
  throw Error(ErrorKind::Configuration, "unknown preset '" + name + "'");
}

ScenarioConfig parse_scenario(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, "malformed JSON at " + line_context(text, e.byte));
  }

  ScenarioConfig c = case1();
  Reader r(doc, "");
  r.string("name", c.name);
  r.vector("initial_mean", c.initial_mean);
  r.vector("initial_sigmas", c.initial_sigmas);
  r.number("duration", c.duration);
  r.number("epoch_dt", c.epoch_dt);
  r.number("integrator_dt", c.integrator_dt);
  r.number("truth_dt", c.truth_dt);
  r.number("particle_count", c.particle_count);
  {
    Reader ut = r.child("ut_params");
    ut.number("alpha", c.ut_params.alpha);
    ut.number("beta", c.ut_params.beta);
    ut.number("kappa", c.ut_params.kappa);
    ut.finish();
  }
  {
    Reader st = r.child("station");
    st.vector("r_station_ecef", c.station.r_station_ecef);
    st.number("omega", c.station.omega);
    st.number("fov_azimuth_halfwidth", c.station.fov_azimuth_halfwidth);
    st.number("fov_polar_halfwidth", c.station.fov_polar_halfwidth);
    st.number("detection_prob", c.station.detection_prob);
    st.matrix2("noise_cov", c.station.noise_cov);
    st.finish();
  }
  {
    Reader d = r.child("drag");
    d.number("area_to_mass", c.drag.area_to_mass);
    d.number("cd", c.drag.cd);
    d.number("rho0", c.drag.rho0);
    d.number("r0", c.drag.r0);
    d.number("scale_height", c.drag.scale_height);
    d.finish();
  }
  {
    Reader k = r.child("constants");
    k.number("mu", c.constants.mu);
    k.number("j2", c.constants.j2);
    k.number("r_eq", c.constants.r_eq);
    k.number("omega_earth", c.constants.omega_earth);
    k.finish();
  }
  r.number("process_noise_scale", c.process_noise_scale);
  r.number("master_seed", c.master_seed);
  r.number("runs", c.runs);
  r.number("pcrb_draws", c.pcrb_draws);
  r.list("study_times", c.study_times);
  r.number("study_particles", c.study_particles);
  r.number("study_k_max", c.study_k_max);
  r.number("depletion_log_ratio", c.depletion_log_ratio);
  r.number("depletion_samples", c.depletion_samples);
  r.boolean("strict_radius_form", c.strict_radius_form);
  r.finish();

  c.validate();
  return c;
}

ScenarioConfig load_scenario(const std::string& path_or_preset) {
  if (is_preset(path_or_preset)) return preset(path_or_preset);
  std::ifstream in(path_or_preset);
  if (!in) throw Error(ErrorKind::Configuration, "cannot open scenario file '" + path_or_preset + "'");
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_scenario(text.str());
  } catch (const Error& e) {
    throw Error(e.kind(), path_or_preset + ": " + e.message());
  }
}

std::string serialize_scenario(const ScenarioConfig& c) {
  json j;
  j["name"] = c.name;
  j["initial_mean"] = to_array(c.initial_mean);
  j["initial_sigmas"] = to_array(c.initial_sigmas);
  j["duration"] = c.duration;
  j["epoch_dt"] = c.epoch_dt;
  j["integrator_dt"] = c.integrator_dt;
  j["truth_dt"] = c.truth_dt;
  j["particle_count"] = c.particle_count;
  j["ut_params"] = {{"alpha", c.ut_params.alpha}, {"beta", c.ut_params.beta}, {"kappa", c.ut_params.kappa}};
  const Matrix2& n = c.station.noise_cov;
  j["station"] = {{"r_station_ecef", to_array(c.station.r_station_ecef)},
                  {"omega", c.station.omega},
                  {"fov_azimuth_halfwidth", c.station.fov_azimuth_halfwidth},
                  {"fov_polar_halfwidth", c.station.fov_polar_halfwidth},
                  {"detection_prob", c.station.detection_prob},
                  {"noise_cov", json::array({json::array({n(0, 0), n(0, 1)}), json::array({n(1, 0), n(1, 1)})})}};
  j["drag"] = {{"area_to_mass", c.drag.area_to_mass},
               {"cd", c.drag.cd},
               {"rho0", c.drag.rho0},
               {"r0", c.drag.r0},
               {"scale_height", c.drag.scale_height}};
  j["constants"] = {{"mu", c.constants.mu},
                    {"j2", c.constants.j2},
                    {"r_eq", c.constants.r_eq},
                    {"omega_earth", c.constants.omega_earth}};
  j["process_noise_scale"] = c.process_noise_scale;
  j["master_seed"] = c.master_seed;
  j["runs"] = c.runs;
  j["pcrb_draws"] = c.pcrb_draws;
  j["study_times"] = c.study_times;
  j["study_particles"] = c.study_particles;
  j["study_k_max"] = c.study_k_max;
  j["depletion_log_ratio"] = c.depletion_log_ratio;
  j["depletion_samples"] = c.depletion_samples;
  j["strict_radius_form"] = c.strict_radius_form;
  return j.dump(2) + "\n";
}

}  // namespace orbtrack
