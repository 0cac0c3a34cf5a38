#include "ffq/runner.hpp"

#include <Eigen/Core>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "ffq/experiments.hpp"
#include "ffq/triangulate.hpp"

#ifndef FFQ_VERSION
#define FFQ_VERSION "0.0.0"
#endif

namespace ffq {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Schema

enum class Type { Number, Integer, Bool, Choice, NumberOrInf, NumberArray, Custom };

using CustomCheck = std::function<void(const json&, const std::string&, std::vector<Diagnostic>&)>;

struct Field {
  std::string name;
  Type type = Type::Number;
  json def;  // null: optional with no default
  double lo = -kInf, hi = kInf;
  bool lo_open = false, hi_open = false;
  std::vector<std::string> choices;
  CustomCheck custom;
};

Field number(std::string n, json def, double lo = -kInf, double hi = kInf, bool lo_open = false,
             bool hi_open = false) {
  Field f;
  f.name = std::move(n);
  f.def = std::move(def);
  f.lo = lo;
  f.hi = hi;
  f.lo_open = lo_open;
  f.hi_open = hi_open;
  return f;
}

Field positive(std::string n, json def) { return number(std::move(n), std::move(def), 0, kInf, true); }
Field nonnegative(std::string n, json def) { return number(std::move(n), std::move(def), 0); }
Field probability(std::string n, json def) { return number(std::move(n), std::move(def), 0, 1); }

Field integer(std::string n, json def, double lo) {
  Field f = number(std::move(n), std::move(def), lo);
  f.type = Type::Integer;
  return f;
}

Field boolean(std::string n, bool def) {
  Field f;
  f.name = std::move(n);
  f.type = Type::Bool;
  f.def = def;
  return f;
}

Field choice(std::string n, std::string def, std::vector<std::string> choices) {
  Field f;
  f.name = std::move(n);
  f.type = Type::Choice;
  f.def = std::move(def);
  f.choices = std::move(choices);
  return f;
}

Field time_or_inf(std::string n) {
  Field f;
  f.name = std::move(n);
  f.type = Type::NumberOrInf;
  f.def = "inf";
  return f;
}

Field number_array(std::string n, json def) {
  Field f;
  f.name = std::move(n);
  f.type = Type::NumberArray;
  f.def = std::move(def);
  return f;
}

Field custom(std::string n, json def, CustomCheck check) {
  Field f;
  f.name = std::move(n);
  f.type = Type::Custom;
  f.def = std::move(def);
  f.custom = std::move(check);
  return f;
}

std::string join(const std::vector<std::string>& v, const std::string& sep = ", ") {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
  return out;
}

std::string range_text(const Field& f) {
  std::ostringstream os;
  os << "must be";
  if (f.lo > -kInf) os << (f.lo_open ? " > " : " >= ") << f.lo;
  if (f.lo > -kInf && f.hi < kInf) os << " and";
  if (f.hi < kInf) os << (f.hi_open ? " < " : " <= ") << f.hi;
  return os.str();
}

bool in_range(const Field& f, double v) {
  if (!std::isfinite(v)) return false;
  if (f.lo_open ? !(v > f.lo) : !(v >= f.lo)) return false;
  if (f.hi_open ? !(v < f.hi) : !(v <= f.hi)) return false;
  return true;
}

void check_value(const Field& f, const json& v, const std::string& path, std::vector<Diagnostic>& d) {
  switch (f.type) {
    case Type::Number:
      if (!v.is_number()) return d.push_back({path, "expected a number"});
      if (!in_range(f, v.get<double>())) d.push_back({path, range_text(f)});
      return;
    case Type::Integer:
      if (!v.is_number_integer()) return d.push_back({path, "expected an integer"});
      if (!in_range(f, v.get<double>())) d.push_back({path, range_text(f)});
      return;
    case Type::Bool:
      if (!v.is_boolean()) d.push_back({path, "expected true or false"});
      return;
    case Type::Choice:
      if (!v.is_string() || std::find(f.choices.begin(), f.choices.end(), v.get<std::string>()) == f.choices.end()) {
        d.push_back({path, "expected one of: " + join(f.choices)});
      }
      return;
    case Type::NumberOrInf:
      if (v.is_string() && v.get<std::string>() == "inf") return;
      if (!v.is_number() || !(v.get<double>() > 0)) d.push_back({path, "expected a positive number or \"inf\""});
      return;
    case Type::NumberArray:
      if (!v.is_array()) return d.push_back({path, "expected an array of numbers"});
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) d.push_back({path + "/" + std::to_string(i), "expected a number"});
      }
      return;
    case Type::Custom:
      f.custom(v, path, d);
      return;
  }
}

void check_section(const json& spec, const std::string& key, const std::vector<Field>& fields,
                   std::vector<Diagnostic>& d) {
  if (!spec.contains(key)) return;
  const json& s = spec.at(key);
  const std::string base = "/" + key;
  if (!s.is_object()) return d.push_back({base, "expected an object"});
  std::vector<std::string> known;
  for (const auto& f : fields) known.push_back(f.name);
  for (const auto& [k, v] : s.items()) {
    auto it = std::find_if(fields.begin(), fields.end(), [&](const Field& f) { return f.name == k; });
    if (it == fields.end()) {
      d.push_back({base + "/" + k, "unknown key" + (known.empty() ? std::string() : "; allowed: " + join(known))});
      continue;
    }
    check_value(*it, v, base + "/" + k, d);
  }
}

json fill_section(const json& spec, const std::string& key, const std::vector<Field>& fields) {
  json out = json::object();
  const json given = spec.contains(key) ? spec.at(key) : json::object();
  for (const auto& f : fields) {
    if (given.contains(f.name)) {
      out[f.name] = given.at(f.name);
    } else if (!f.def.is_null()) {
      out[f.name] = f.def;
    }
  }
  return out;
}

const std::vector<Field>& physics_fields() {
  static const std::vector<Field> f = {
      positive("b0_t", 1.0),
      positive("a_hf_mhz", 114.1),
      number("stark_slope_khz_per_v", 512.0),
      positive("gamma_e_ghz_per_t", 27.97),
      positive("gamma_n_mhz_per_t", 17.23),
  };
  return f;
}

void check_telegraph(const json& v, const std::string& path, std::vector<Diagnostic>& d) {
  if (!v.is_array()) return d.push_back({path, "expected an array of {amplitude_khz, switching_rate_hz}"});
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string p = path + "/" + std::to_string(i);
    if (!v[i].is_object()) {
      d.push_back({p, "expected an object"});
      continue;
    }
    for (const auto& [k, x] : v[i].items()) {
      if (k != "amplitude_khz" && k != "switching_rate_hz") d.push_back({p + "/" + k, "unknown key"});
    }
    if (!v[i].contains("amplitude_khz") || !v[i]["amplitude_khz"].is_number()) {
      d.push_back({p + "/amplitude_khz", "required number"});
    }
    if (!v[i].contains("switching_rate_hz") || !v[i]["switching_rate_hz"].is_number() ||
        !(v[i]["switching_rate_hz"].get<double>() > 0)) {
      d.push_back({p + "/switching_rate_hz", "required number > 0"});
    }
  }
}

void check_spin_config(const json& v, const std::string& path, std::vector<Diagnostic>& d) {
  if (!v.is_array()) return d.push_back({path, "expected an array of +1/-1"});
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number_integer() || std::abs(v[i].get<int>()) != 1) {
      d.push_back({path + "/" + std::to_string(i), "expected +1 or -1"});
    }
  }
}

const std::vector<Field>& environment_fields() {
  static const std::vector<Field> f = {
      time_or_inf("t1e_s"),
      time_or_inf("t1ff_s"),
      time_or_inf("t1n_s"),
      nonnegative("quasi_static_sigma_khz", 0.0),
      custom("telegraph", json::array(), check_telegraph),
      number_array("si29_couplings_khz", json::array()),
      nonnegative("si29_flip_rate_hz", 0.0),
      custom("si29_initial_config", json(), check_spin_config),
      boolean("pirs_enabled", false),
      positive("pirs_attenuation", 1.0),
      nonnegative("nuclear_sigma_khz", 0.0),
      number("gate_depolarizing", 0.0, 0, 0.5),
      positive("edsr_rotation_scale", 1.0),
      nonnegative("shot_interval_s", 0.1),
  };
  return f;
}

const std::vector<Field>& readout_fields() {
  static const std::vector<Field> f = {
      positive("tunnel_out_rate_per_ms", 10.0),
      positive("tunnel_in_rate_per_ms", 5.0),
      positive("detection_window_ms", 0.3),
      probability("blip_miss_probability", 0.0),
      probability("dark_blip_probability", 0.05),
      probability("reload_error", 0.0),
      number("symmetric_fidelity", json(), 0.5, 1),
      integer("n_shots", 20, 1),
      number("threshold", 0.45, 0, 1, false, true),
      choice("transition", "esr2", {"esr1", "esr2"}),
  };
  return f;
}

const std::vector<Field>& evolution_fields() {
  static const std::vector<Field> f = {
      choice("frame", "rotating", {"rotating", "lab"}),
      boolean("rwa", true),
      positive("dt_max_us", json()),
      choice("integrator", "piecewise-exponential", {"piecewise-exponential", "fixed-step-expansion"}),
      positive("secular_window_mhz", 10.0),
      positive("steps_per_period", 50.0),
  };
  return f;
}

void check_point3(const json& v, const std::string& path, std::vector<Diagnostic>& d) {
  if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() || !v[2].is_number()) {
    d.push_back({path, "expected [x, y, z] in nm"});
  }
}

void check_geometry(const json& v, const std::string& path, std::vector<Diagnostic>& d) {
  if (v.is_string()) {
    if (v.get<std::string>() != "reduced") d.push_back({path, "expected \"reduced\" or a geometry object"});
    return;
  }
  try {
    DeviceGeometry::from_json(v);
  } catch (const std::exception& e) {
    d.push_back({path, e.what()});
  }
}

void check_search_box(const json& v, const std::string& path, std::vector<Diagnostic>& d) {
  if (!v.is_object()) return d.push_back({path, "expected {\"min\": [x,y,z], \"max\": [x,y,z]}"});
  for (const auto& [k, x] : v.items()) {
    if (k != "min" && k != "max") d.push_back({path + "/" + k, "unknown key"});
  }
  for (const char* k : {"min", "max"}) {
    if (!v.contains(k)) {
      d.push_back({path + "/" + k, "required"});
    } else {
      check_point3(v[k], path + "/" + k, d);
    }
  }
}

void check_measurements(const json& v, const std::string& path, std::vector<Diagnostic>& d) {
  if (!v.is_array() || v.size() < 2) return d.push_back({path, "expected at least 2 {swept, reference, slope} entries"});
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string p = path + "/" + std::to_string(i);
    if (!v[i].is_object()) {
      d.push_back({p, "expected an object"});
      continue;
    }
    for (const auto& [k, x] : v[i].items()) {
      if (k != "swept" && k != "reference" && k != "slope") d.push_back({p + "/" + k, "unknown key"});
    }
    if (!v[i].contains("swept") || !v[i]["swept"].is_string()) d.push_back({p + "/swept", "required gate name"});
    if (!v[i].contains("reference") || !v[i]["reference"].is_string()) d.push_back({p + "/reference", "required gate name"});
    if (!v[i].contains("slope") || !v[i]["slope"].is_number()) d.push_back({p + "/slope", "required number"});
  }
}

void check_pairs(const json& v, const std::string& path, std::vector<Diagnostic>& d) {
  if (!v.is_array() || v.size() < 2) return d.push_back({path, "expected at least 2 [swept, reference] pairs"});
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_array() || v[i].size() != 2 || !v[i][0].is_string() || !v[i][1].is_string()) {
      d.push_back({path + "/" + std::to_string(i), "expected [swept, reference]"});
    }
  }
}

void check_z_range(const json& v, const std::string& path, std::vector<Diagnostic>& d) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number() ||
      v[0].get<double>() > v[1].get<double>()) {
    d.push_back({path, "expected [z_min, z_max] with z_min <= z_max"});
  }
}

json box_json(const SearchBox& b) {
  return {{"min", {b.min_nm[0], b.min_nm[1], b.min_nm[2]}}, {"max", {b.max_nm[0], b.max_nm[1], b.max_nm[2]}}};
}

json pairs_json(const std::vector<GatePair>& pairs) {
  json out = json::array();
  for (const auto& p : pairs) out.push_back({p.swept, p.reference});
  return out;
}

struct KindInfo {
  std::string summary;
  std::vector<std::string> axes;  // required sweep axes; empty: no sweep
  std::optional<int> default_shots;
  std::vector<Field> parameters;
};

const std::map<std::string, KindInfo>& kinds() {
  static const std::map<std::string, KindInfo> k = [] {
    std::map<std::string, KindInfo> m;
    m["spectrum"] = {"EDSR flip-flop spectrum: nuclear flip fraction vs drive detuning",
                     {"detuning_mhz"},
                     100,
                     {positive("amplitude_v", 0.4), nonnegative("duration_us", 0.0)}};
    m["rabi"] = {"flip-flop Rabi oscillation vs EDSR duration",
                 {"duration_us"},
                 100,
                 {positive("amplitude_v", 0.4), number("detuning_mhz", 0.0)}};
    m["chevron"] = {"noiseless Rabi chevron vs detuning and duration, with the two-level formula",
                    {"detuning_mhz", "duration_us"},
                    std::nullopt,
                    {positive("amplitude_v", 0.4)}};
    m["ramsey"] = {"flip-flop Ramsey decay vs free evolution time",
                   {"tau_us"},
                   200,
                   {positive("amplitude_v", 0.4), number("detuning_mhz", 0.0)}};
    m["hahn"] = {"flip-flop Hahn echo vs total free evolution time",
                 {"tau_us"},
                 200,
                 {positive("amplitude_v", 0.4), number("detuning_mhz", 0.0)}};
    m["t1e"] = {"electron relaxation from (up,Down) vs wait time", {"wait_s"}, 500, {}};
    m["t1ff-pump"] = {"flip-flop relaxation under periodic aESR1 pumping vs wait time",
                      {"wait_s"},
                      2000,
                      {number("inversion_fidelity", 0.98, 0, 1, true, true),
                       number("half_fidelity", 0.5, 0, 1, true, true), positive("pump_period_s", 5.0),
                       positive("trace_duration_s", 30.0)}};
    m["endor-fidelity"] = {"nuclear Up initialization fidelity of the ENDOR sequence",
                           {},
                           10000,
                           {number("pulse_fidelity", 0.99, 0, 1, false, true)}};
    m["rb"] = {"randomized benchmarking of the flip-flop qubit vs Clifford count",
               {"length"},
               100,
               {integer("sequences_per_length", 20, 1), probability("prep_error", 0.0),
                boolean("frequency_check", true), integer("max_remeasure", 20, 0), positive("pi_us", 6.13),
                positive("x_half_us", 3.073), positive("y_half_us", 3.087)}};
    m["calibrate-attenuation"] = {"line attenuation from Rabi/Stark slopes and from Coulomb-peak broadening",
                                  {},
                                  std::nullopt,
                                  {number("rabi_slope_khz_per_v", 32.0), number("stark_slope_khz_per_v", 512.0),
                                   number("k_mw", 0.050), number("k_100hz", 0.46)}};
    m["triangulate"] = {"donor position likelihood from transition slopes over a gate layout",
                        {},
                        std::nullopt,
                        {custom("geometry", "reduced", check_geometry), positive("spacing_nm", 2.0),
                         custom("search_box_nm", box_json(reduced_device_search_box()), check_search_box),
                         custom("measurements", json(), check_measurements),
                         custom("planted_nm", json(), check_point3),
                         custom("pairs", pairs_json(reduced_device_pairs()), check_pairs),
                         nonnegative("slope_noise", 0.0), number("mass", 0.9, 0, 1, true),
                         custom("prior_z_range_nm", json(), check_z_range)}};
    m["si29-monitor"] = {"repeated flip-flop spectra tracking the 29Si-induced line offset",
                         {},
                         std::nullopt,
                         {integer("spectra", 120, 1), positive("span_khz", 600.0), positive("step_khz", 5.0),
                          positive("amplitude_v", 0.1), nonnegative("interval_s", 60.0),
                          positive("cluster_separation_khz", 20.0)}};
    return m;
  }();
  return k;
}

std::vector<double> expand_axis(const json& a) {
  if (a.is_array()) return a.get<std::vector<double>>();
  const double start = a.at("start").get<double>();
  const double stop = a.at("stop").get<double>();
  const int n = a.at("points").get<int>();
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(n == 1 ? start : start + (stop - start) * i / (n - 1));
  return v;
}

void check_axis(const json& a, const std::string& path, std::vector<Diagnostic>& d) {
  if (a.is_array()) {
    if (a.empty()) return d.push_back({path, "sweep axis must be non-empty"});
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!a[i].is_number()) d.push_back({path + "/" + std::to_string(i), "expected a number"});
    }
    return;
  }
  if (!a.is_object()) return d.push_back({path, "expected an array of values or {start, stop, points}"});
  for (const auto& [k, v] : a.items()) {
    if (k != "start" && k != "stop" && k != "points") d.push_back({path + "/" + k, "unknown key"});
  }
  if (!a.contains("start") || !a["start"].is_number()) d.push_back({path + "/start", "required number"});
  if (!a.contains("stop") || !a["stop"].is_number()) d.push_back({path + "/stop", "required number"});
  if (!a.contains("points") || !a["points"].is_number_integer() || a["points"].get<int>() < 1) {
    d.push_back({path + "/points", "required integer >= 1"});
  }
}

void check_kind_specific(const std::string& kind, const json& spec, std::vector<Diagnostic>& d) {
  const KindInfo& info = kinds().at(kind);
  if (spec.contains("shots")) {
    if (!info.default_shots) {
      d.push_back({"/shots", "not used by kind '" + kind + "'"});
    } else if (!spec["shots"].is_number_integer() || spec["shots"].get<long long>() < 1 ||
               spec["shots"].get<long long>() > 100000000) {
      d.push_back({"/shots", "expected an integer in [1, 1e8]"});
    }
  }
  if (info.axes.empty()) {
    if (spec.contains("sweep")) d.push_back({"/sweep", "kind '" + kind + "' takes no sweep"});
  } else if (!spec.contains("sweep")) {
    d.push_back({"/sweep", "required for kind '" + kind + "' (axes: " + join(info.axes) + ")"});
  } else if (!spec["sweep"].is_object()) {
    d.push_back({"/sweep", "expected an object"});
  } else {
    const json& s = spec["sweep"];
    for (const auto& [k, v] : s.items()) {
      if (std::find(info.axes.begin(), info.axes.end(), k) == info.axes.end()) {
        d.push_back({"/sweep/" + k, "unknown axis; allowed: " + join(info.axes)});
      }
    }
    for (const auto& axis : info.axes) {
      const std::string p = "/sweep/" + axis;
      if (!s.contains(axis)) {
        d.push_back({p, "required sweep axis"});
        continue;
      }
      const std::size_t before = d.size();
      check_axis(s[axis], p, d);
      if (d.size() != before) continue;
      const auto values = expand_axis(s[axis]);
      for (std::size_t i = 0; i < values.size(); ++i) {
        const double x = values[i];
        const bool nonneg_axis = axis == "duration_us" || axis == "tau_us" || axis == "wait_s";
        if (nonneg_axis && !(x >= 0)) d.push_back({p, "values must be >= 0"});
        if (axis == "length" && !(x >= 1 && x == std::floor(x))) d.push_back({p, "values must be positive integers"});
        if ((nonneg_axis && !(x >= 0)) || (axis == "length" && !(x >= 1 && x == std::floor(x)))) break;
      }
      if (kind == "t1ff-pump" && values.size() < 3) d.push_back({p, "needs at least 3 wait times for the decay fit"});
      if (kind == "rb" && values.size() < 3) d.push_back({p, "needs at least 3 lengths for the decay fit"});
    }
  }
  check_section(spec, "parameters", info.parameters, d);
  if (kind == "triangulate") {
    const json p = spec.contains("parameters") && spec["parameters"].is_object() ? spec["parameters"] : json::object();
    const bool has_m = p.contains("measurements"), has_r = p.contains("planted_nm");
    if (has_m == has_r) d.push_back({"/parameters", "give exactly one of 'measurements' or 'planted_nm'"});
  }
}

// ---------------------------------------------------------------------------
// Spec -> configuration

double time_value(const json& v) { return v.is_string() ? kInf : v.get<double>(); }

SimulatorConfig simulator_config(const json& spec) {
  SimulatorConfig c;
  const json& ph = spec.at("physics");
  c.params.b0_t = ph.at("b0_t");
  c.params.a_hf_mhz = ph.at("a_hf_mhz");
  c.params.stark_slope_khz_per_v = ph.at("stark_slope_khz_per_v");
  c.constants.gamma_e_ghz_per_t = ph.at("gamma_e_ghz_per_t");
  c.constants.gamma_n_mhz_per_t = ph.at("gamma_n_mhz_per_t");

  const json& en = spec.at("environment");
  c.env.rates = {time_value(en.at("t1e_s")), time_value(en.at("t1ff_s")), time_value(en.at("t1n_s"))};
  c.env.dephasing.quasi_static_sigma_khz = en.at("quasi_static_sigma_khz");
  for (const auto& t : en.at("telegraph")) {
    c.env.dephasing.telegraph.push_back({t.at("amplitude_khz").get<double>(), t.at("switching_rate_hz").get<double>()});
  }
  c.env.si29.couplings_khz = en.at("si29_couplings_khz").get<std::vector<double>>();
  c.env.si29.flip_rate_hz = en.at("si29_flip_rate_hz");
  if (en.contains("si29_initial_config")) c.env.si29.current_config = en.at("si29_initial_config").get<std::vector<int>>();
  c.env.pirs_enabled = en.at("pirs_enabled");
  c.env.pirs_attenuation = en.at("pirs_attenuation");
  c.env.nuclear_sigma_khz = en.at("nuclear_sigma_khz");
  c.env.gate_depolarizing = en.at("gate_depolarizing");
  c.env.edsr_rotation_scale = en.at("edsr_rotation_scale");
  c.env.shot_interval_s = en.at("shot_interval_s");

  const json& ro = spec.at("readout");
  if (ro.contains("symmetric_fidelity")) {
    c.readout = ReadoutParams::symmetric(ro.at("symmetric_fidelity").get<double>());
  } else {
    c.readout.tunnel_out_rate_per_ms = ro.at("tunnel_out_rate_per_ms");
    c.readout.tunnel_in_rate_per_ms = ro.at("tunnel_in_rate_per_ms");
    c.readout.detection_window_ms = ro.at("detection_window_ms");
    c.readout.blip_miss_probability = ro.at("blip_miss_probability");
    c.readout.dark_blip_probability = ro.at("dark_blip_probability");
  }
  c.readout.reload_error = ro.at("reload_error");
  c.nuclear.n_shots = ro.at("n_shots");
  c.nuclear.threshold = ro.at("threshold");
  c.nuclear.transition = ro.at("transition") == "esr1" ? ReadTransition::Esr1 : ReadTransition::Esr2;

  const json& ev = spec.at("evolution");
  c.evolution.frame = ev.at("frame") == "lab" ? Frame::Lab : Frame::Rotating;
  c.evolution.rwa = ev.at("rwa");
  if (ev.contains("dt_max_us")) c.evolution.dt_max_us = ev.at("dt_max_us").get<double>();
  c.evolution.integrator =
      ev.at("integrator") == "fixed-step-expansion" ? Integrator::FixedStepExpansion : Integrator::PiecewiseExponential;
  c.evolution.secular_window_mhz = ev.at("secular_window_mhz");
  c.evolution.steps_per_period = ev.at("steps_per_period");
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Output helpers

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

class Csv {
 public:
  explicit Csv(const std::vector<std::string>& header) { row_strings(header); }
  void row(const std::vector<double>& values) {
    std::vector<std::string> s;
    for (double v : values) s.push_back(num(v));
    row_strings(s);
  }
  void row_strings(const std::vector<std::string>& values) { out_ << join(values, ",") << "\n"; }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(); }

json fit_json(const FitResult& f) {
  json params = json::object(), sigmas = json::object();
  for (std::size_t i = 0; i < f.names.size(); ++i) {
    params[f.names[i]] = finite_or_null(f.params(static_cast<Eigen::Index>(i)));
    sigmas[f.names[i]] = finite_or_null(f.sigma(f.names[i]));
  }
  return {{"model", f.model}, {"parameters", params}, {"sigma", sigmas}, {"converged", f.converged},
          {"warnings", f.warnings}};
}

// Fits on scan data are diagnostics: a failure is reported, not fatal.
template <typename F>
json try_fit(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    return {{"error", e.what()}};
  }
}

std::string scan_csv(const std::string& axis, const std::vector<double>& x, const std::vector<ScanPoint>& pts) {
  Csv csv({"index", axis, "p_measured", "sem", "p_expected", "shots"});
  for (std::size_t i = 0; i < x.size(); ++i) {
    csv.row({static_cast<double>(i), x[i], pts[i].p_measured, pts[i].sem, pts[i].p_expected,
             static_cast<double>(pts[i].shots)});
  }
  return csv.str();
}

Dataset measured(const std::vector<double>& x, const std::vector<ScanPoint>& pts) {
  Dataset d;
  d.x = x;
  for (const auto& p : pts) d.y.push_back(p.p_measured);
  return d;
}

struct Produced {
  std::vector<OutputFile> files;
  json summary = json::object();
};

std::uint64_t seed_of(const json& spec) { return spec.at("seed").get<std::uint64_t>(); }

Produced run_flipflop(const json& spec, FlipFlopScan kind, const std::string& axis, int jobs) {
  const SimulatorConfig c = simulator_config(spec);
  const json& p = spec.at("parameters");
  FlipFlopScanOptions o;
  o.kind = kind;
  o.amplitude_v = p.at("amplitude_v");
  if (p.contains("detuning_mhz")) o.detuning_mhz = p.at("detuning_mhz");
  if (p.contains("duration_us")) o.duration_us = p.at("duration_us");
  const auto x = expand_axis(spec.at("sweep").at(axis));
  const auto pts = run_flipflop_scan(c, o, x, spec.at("shots").get<int>(), seed_of(spec), jobs);
  Produced out;
  out.files.push_back({"data.csv", scan_csv(axis, x, pts)});
  const SpinSystem sys(c.params, c.constants);
  out.summary["rabi_mhz"] = tone_rabi_mhz(sys, Channel::EdsrElectric, o.amplitude_v, Level::UpDown, Level::DownUp);
  out.summary["flipflop_ghz"] = flipflop_frequency_ghz(sys);
  Dataset d = measured(x, pts);
  switch (kind) {
    case FlipFlopScan::Spectrum:
      out.summary["fit"] = try_fit([&] {
        const FitResult f = fit_gaussian_mixture(d, 1);
        json j = fit_json(f);
        j["center_mhz"] = f.value("mu1");
        j["fwhm_mhz"] = fwhm_from_sigma(f.value("sigma1"));
        return j;
      });
      break;
    case FlipFlopScan::Rabi:
      out.summary["fit"] = try_fit([&] {
        const FitResult f = fit_damped_sinusoid(d);
        json j = fit_json(f);
        j["rabi_frequency_mhz"] = f.value("f");
        j["decay_time_us"] = finite_or_null(decay_time(f));
        return j;
      });
      break;
    case FlipFlopScan::Ramsey:
    case FlipFlopScan::Hahn:
      out.summary["fit"] = try_fit([&] {
        const FitResult f = fit_stretched_exp(d);
        json j = fit_json(f);
        j["t2_us"] = f.value("T2");
        j["exponent"] = f.value("beta");
        return j;
      });
      break;
  }
  return out;
}

Produced run_chevron(const json& spec, int jobs) {
  const SimulatorConfig c = simulator_config(spec);
  const auto det = expand_axis(spec.at("sweep").at("detuning_mhz"));
  const auto dur = expand_axis(spec.at("sweep").at("duration_us"));
  const auto g = simulate_chevron(c, det, dur, spec.at("parameters").at("amplitude_v"), jobs);
  Csv csv({"detuning_index", "duration_index", "detuning_mhz", "duration_us", "p_simulated", "p_analytic"});
  for (std::size_t i = 0; i < det.size(); ++i) {
    for (std::size_t j = 0; j < dur.size(); ++j) {
      const std::size_t k = i * dur.size() + j;
      csv.row({static_cast<double>(i), static_cast<double>(j), det[i], dur[j], g.simulated[k], g.analytic[k]});
    }
  }
  Produced out;
  out.files.push_back({"data.csv", csv.str()});
  out.summary = {{"rabi_mhz", g.rabi_mhz}, {"max_abs_error_vs_analytic", g.max_abs_error}};
  return out;
}

Produced run_t1e(const json& spec, int jobs) {
  const SimulatorConfig c = simulator_config(spec);
  const auto w = expand_axis(spec.at("sweep").at("wait_s"));
  const auto pts = run_t1_decay(c, w, spec.at("shots").get<int>(), seed_of(spec), jobs);
  Produced out;
  out.files.push_back({"data.csv", scan_csv("wait_s", w, pts)});
  out.summary["t1_expected_s"] = finite_or_null(combined_t1(c.env.rates));
  out.summary["fit"] = try_fit([&] {
    const FitResult f = fit_exponential(measured(w, pts));
    json j = fit_json(f);
    j["t1_s"] = f.value("tau");
    return j;
  });
  return out;
}

Produced run_pump(const json& spec, int jobs) {
  const SimulatorConfig c = simulator_config(spec);
  const json& p = spec.at("parameters");
  PumpingSchedule s;
  s.inversion_fidelity = p.at("inversion_fidelity");
  s.half_fidelity = p.at("half_fidelity");
  s.period_s = p.at("pump_period_s");
  s.trace_duration_s = p.at("trace_duration_s");
  const auto w = expand_axis(spec.at("sweep").at("wait_s"));
  const PumpDecay d = run_t1ff_pump(c, s, w, spec.at("shots").get<int>(), seed_of(spec), jobs);
  Produced out;
  out.files.push_back({"data.csv", scan_csv("wait_s", w, d.points)});
  Csv trace({"time_s", "up_down_fraction"});
  for (std::size_t i = 0; i < d.trace.times_s.size(); ++i) trace.row({d.trace.times_s[i], d.trace.up_down_fraction[i]});
  out.files.push_back({"trace.csv", trace.str()});
  out.summary = {{"trace", {{"min", d.trace.min}, {"max", d.trace.max}, {"mean", d.trace.mean},
                            {"steady_mean", d.trace.steady_mean}}},
                 {"pulses", {{"half_inversion", d.pulses.half_probability},
                             {"half_duration_us", d.pulses.half.duration_us},
                             {"pump_inversion", d.pulses.pump_probability},
                             {"pump_duration_us", d.pulses.pump.duration_us}}},
                 {"fit", fit_json(d.fit)},
                 {"tau_s", d.tau_s},
                 {"tau_sigma_s", d.tau_sigma_s},
                 {"t1ff_s", d.t1ff_s},
                 {"t1ff_sigma_s", d.t1ff_sigma_s}};
  return out;
}

Produced run_endor(const json& spec, int jobs) {
  const SimulatorConfig c = simulator_config(spec);
  const EndorFidelity f = run_endor_fidelity(c, spec.at("parameters").at("pulse_fidelity"),
                                             spec.at("shots").get<int>(), seed_of(spec), jobs);
  Csv csv({"repetitions", "fidelity", "sem", "p_expected", "aesr2_inversion", "anmr1_inversion"});
  csv.row({static_cast<double>(f.repetitions), f.fidelity, f.sem, f.expected, f.aesr2_probability, f.anmr1_probability});
  Produced out;
  out.files.push_back({"data.csv", csv.str()});
  out.summary = {{"fidelity", f.fidelity}, {"sem", f.sem}, {"p_expected", f.expected}};
  return out;
}

Produced run_rb_kind(const json& spec) {
  const SimulatorConfig c = simulator_config(spec);
  const json& p = spec.at("parameters");
  RbConfig rc;
  rc.lengths.clear();
  for (double m : expand_axis(spec.at("sweep").at("length"))) rc.lengths.push_back(static_cast<int>(m));
  rc.sequences_per_length = p.at("sequences_per_length");
  rc.shots = spec.at("shots");
  rc.prep_error = p.at("prep_error");
  rc.frequency_check = p.at("frequency_check");
  rc.max_remeasure = p.at("max_remeasure");
  rc.durations.pi_us = p.at("pi_us");
  rc.durations.x_half_us = p.at("x_half_us");
  rc.durations.y_half_us = p.at("y_half_us");
  Simulator sim(c, derive_seed(seed_of(spec), "rb-bath"));
  const RbRun run = run_rb(sim, rc, seed_of(spec));
  Csv csv({"index", "length", "survival", "sem", "sequences"});
  for (std::size_t i = 0; i < run.points.size(); ++i) {
    const auto& pt = run.points[i];
    csv.row({static_cast<double>(i), static_cast<double>(pt.m), pt.mean, pt.sem, static_cast<double>(pt.survivals.size())});
  }
  Produced out;
  out.files.push_back({"data.csv", csv.str()});
  out.summary = {{"blocks_measured", run.blocks_measured}, {"blocks_discarded", run.blocks_discarded}};
  out.summary["fit"] = try_fit([&] {
    const RbResult r = fit_rb(run.points);
    json j = fit_json(r.fit);
    j["f_clifford"] = r.f_clifford;
    j["f_clifford_ci95"] = r.f_clifford_ci95;
    j["f_native"] = r.f_native;
    j["f_native_ci95"] = r.f_native_ci95;
    j["gates_per_clifford"] = kNativeGatesPerClifford;
    return j;
  });
  return out;
}

Produced run_attenuation(const json& spec) {
  const json& p = spec.at("parameters");
  const Attenuation a = edsr_attenuation(p.at("rabi_slope_khz_per_v"), p.at("stark_slope_khz_per_v"));
  const Attenuation b = set_attenuation(p.at("k_mw"), p.at("k_100hz"));
  Csv csv({"method", "ratio", "db"});
  csv.row_strings({"rabi-stark", num(a.ratio), num(a.db)});
  csv.row_strings({"coulomb-peak", num(b.ratio), num(b.db)});
  Produced out;
  out.files.push_back({"data.csv", csv.str()});
  out.summary = {{"rabi_stark", {{"ratio", a.ratio}, {"db", finite_or_null(a.db)}, {"unbounded", a.unbounded()}}},
                 {"coulomb_peak", {{"ratio", b.ratio}, {"db", finite_or_null(b.db)}, {"unbounded", b.unbounded()}}},
                 {"difference_db", finite_or_null(a.db - b.db)}};
  return out;
}

Point3 point3(const json& v) { return {v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>()}; }

Produced run_triangulate(const json& spec, int jobs) {
  const json& p = spec.at("parameters");
  const DeviceGeometry g = p.at("geometry").is_string() ? reduced_device_geometry(p.at("spacing_nm"))
                                                         : DeviceGeometry::from_json(p.at("geometry"));
  std::vector<PotentialResponse> responses(g.gates.size());
  parallel_for(g.gates.size(), jobs, [&](std::size_t i) { responses[i] = solve_response(g, g.gates[i].name); });

  std::vector<SlopeMeasurement> ms;
  std::optional<Point3> planted;
  if (p.contains("measurements")) {
    for (const auto& m : p.at("measurements")) {
      ms.push_back({{m.at("swept").get<std::string>(), m.at("reference").get<std::string>()}, m.at("slope").get<double>()});
    }
  } else {
    planted = point3(p.at("planted_nm"));
    Rng rng(derive_seed(seed_of(spec), "slope-noise"));
    const double noise = p.at("slope_noise");
    for (const auto& pr : p.at("pairs")) {
      const GatePair pair{pr.at(0).get<std::string>(), pr.at(1).get<std::string>()};
      const double s = predicted_slope(responses, pair, *planted);
      ms.push_back({pair, s * (1 + noise * rng.normal())});
    }
  }
  const SearchBox box{point3(p.at("search_box_nm").at("min")), point3(p.at("search_box_nm").at("max"))};
  PriorMask prior;
  if (p.contains("prior_z_range_nm")) {
    const double lo = p.at("prior_z_range_nm").at(0), hi = p.at("prior_z_range_nm").at(1);
    prior = [lo, hi](const Point3& r) { return r[2] >= lo && r[2] <= hi; };
  }
  const LikelihoodMap map = likelihood_map(ms, responses, box, prior);
  const CredibleRegion region = argmax_region(map, p.at("mass"));
  std::vector<bool> inside(map.cells.size(), false);
  for (std::size_t c : region.cells) inside[c] = true;
  Csv csv({"x_nm", "y_nm", "z_nm", "probability", "in_region"});
  for (std::size_t c = 0; c < map.cells.size(); ++c) {
    const Point3 r = map.position(c);
    csv.row({r[0], r[1], r[2], map.probability[c], inside[c] ? 1.0 : 0.0});
  }
  Produced out;
  out.files.push_back({"data.csv", csv.str()});
  json meas = json::array();
  for (const auto& m : ms) {
    meas.push_back({{"swept", m.pair.swept}, {"reference", m.pair.reference}, {"slope", m.slope}, {"sigma", m.sigma()}});
  }
  json solver = json::array();
  for (const auto& r : responses) {
    solver.push_back({{"gate", r.gate}, {"iterations", r.iterations}, {"relative_residual", r.relative_residual}});
  }
  json axes = json::object();
  const char* names[3] = {"x", "y", "z"};
  for (int a = 0; a < 3; ++a) axes[names[a]] = {region.axis[a].lo, region.axis[a].hi};
  out.summary = {{"argmax_nm", {region.argmax[0], region.argmax[1], region.argmax[2]}},
                 {"region_cells", region.cells.size()},
                 {"region_mass", region.mass},
                 {"axis_intervals_nm", axes},
                 {"measurements", meas},
                 {"solver", solver},
                 {"grid_nm", g.spacing_nm}};
  if (planted) {
    const double dx = region.argmax[0] - (*planted)[0], dy = region.argmax[1] - (*planted)[1],
                 dz = region.argmax[2] - (*planted)[2];
    out.summary["planted_distance_nm"] = std::sqrt(dx * dx + dy * dy + dz * dz);
    bool covered = false;
    for (std::size_t c : region.cells) {
      const Point3 r = map.position(c);
      covered = covered || (std::abs(r[0] - (*planted)[0]) < 1e-9 && std::abs(r[1] - (*planted)[1]) < 1e-9 &&
                            std::abs(r[2] - (*planted)[2]) < 1e-9);
    }
    out.summary["planted_in_region"] = covered;
  }
  return out;
}

Produced run_si29(const json& spec, int jobs) {
  const SimulatorConfig c = simulator_config(spec);
  const json& p = spec.at("parameters");
  Si29MonitorOptions o;
  o.spectra = p.at("spectra");
  o.span_khz = p.at("span_khz");
  o.step_khz = p.at("step_khz");
  o.amplitude_v = p.at("amplitude_v");
  o.interval_s = p.at("interval_s");
  o.cluster_separation_khz = p.at("cluster_separation_khz");
  const Si29Monitor m = run_si29_monitor(c, o, seed_of(spec), jobs);
  Csv csv({"spectrum", "si29_offset_khz", "fitted_offset_khz"});
  for (std::size_t i = 0; i < m.fitted_offsets_khz.size(); ++i) {
    csv.row({static_cast<double>(i), m.true_offsets_khz[i], m.fitted_offsets_khz[i]});
  }
  Csv clusters({"cluster", "center_khz", "width_khz", "count", "min_khz", "max_khz"});
  json cl = json::array();
  for (std::size_t i = 0; i < m.clusters.size(); ++i) {
    const auto& k = m.clusters[i];
    clusters.row({static_cast<double>(i), k.center, k.width, static_cast<double>(k.count), k.min, k.max});
    cl.push_back(k.center);
  }
  Produced out;
  out.files.push_back({"data.csv", csv.str()});
  out.files.push_back({"clusters.csv", clusters.str()});
  out.summary = {{"cluster_count", m.clusters.size()},
                 {"cluster_centers_khz", cl},
                 {"expected_offsets_khz", si29_offsets_enumerated(c.env.si29.couplings_khz, 1e-6)}};
  return out;
}

}  // namespace

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> k = {"spectrum", "rabi",           "chevron", "ramsey",
                                             "hahn",     "t1e",            "t1ff-pump", "endor-fidelity",
                                             "rb",       "calibrate-attenuation", "triangulate", "si29-monitor"};
  return k;
}

std::string experiment_kind_summary(const std::string& kind) {
  auto it = kinds().find(kind);
  if (it == kinds().end()) throw InvalidArgument("unknown kind '" + kind + "'");
  return it->second.summary;
}

std::vector<Diagnostic> validate_spec(const json& spec) {
  std::vector<Diagnostic> d;
  if (!spec.is_object()) return {{"/", "experiment spec must be a JSON object"}};
  static const std::set<std::string> top = {"kind",      "seed", "physics", "environment", "readout",
                                            "evolution", "sweep", "shots",  "parameters",  "description"};
  for (const auto& [k, v] : spec.items()) {
    if (!top.count(k)) d.push_back({"/" + k, "unknown key; allowed: " + join({top.begin(), top.end()})});
  }
  if (!spec.contains("seed")) {
    d.push_back({"/seed", "required field missing"});
  } else if (!spec["seed"].is_number_integer() || (!spec["seed"].is_number_unsigned() && spec["seed"].get<long long>() < 0)) {
    d.push_back({"/seed", "expected a non-negative integer"});
  }
  if (spec.contains("description") && !spec["description"].is_string()) d.push_back({"/description", "expected a string"});
  check_section(spec, "physics", physics_fields(), d);
  check_section(spec, "environment", environment_fields(), d);
  check_section(spec, "readout", readout_fields(), d);
  check_section(spec, "evolution", evolution_fields(), d);

  if (!spec.contains("kind")) {
    d.push_back({"/kind", "required field missing; allowed kinds: " + join(experiment_kinds())});
    return d;
  }
  if (!spec["kind"].is_string() || !kinds().count(spec["kind"].get<std::string>())) {
    const std::string shown = spec["kind"].is_string() ? "'" + spec["kind"].get<std::string>() + "'" : spec["kind"].dump();
    d.push_back({"/kind", "unknown kind " + shown + "; allowed kinds: " + join(experiment_kinds())});
    return d;
  }
  check_kind_specific(spec["kind"].get<std::string>(), spec, d);

  // Cross-field checks once the fields themselves are well formed.
  if (d.empty()) {
    const json en = fill_section(spec, "environment", environment_fields());
    if (en.contains("si29_initial_config") && en["si29_initial_config"].size() != en["si29_couplings_khz"].size()) {
      d.push_back({"/environment/si29_initial_config", "must have one entry per 29Si coupling"});
    }
  }
  return d;
}

json normalize_spec(const json& spec) {
  const auto d = validate_spec(spec);
  if (!d.empty()) {
    std::string msg = "invalid experiment spec:";
    for (const auto& x : d) msg += "\n  " + x.str();
    throw InvalidArgument(msg);
  }
  const std::string kind = spec.at("kind");
  const KindInfo& info = kinds().at(kind);
  json out = {{"kind", kind}, {"seed", spec.at("seed")}};
  if (spec.contains("description")) out["description"] = spec["description"];
  out["physics"] = fill_section(spec, "physics", physics_fields());
  out["environment"] = fill_section(spec, "environment", environment_fields());
  out["readout"] = fill_section(spec, "readout", readout_fields());
  out["evolution"] = fill_section(spec, "evolution", evolution_fields());
  out["parameters"] = fill_section(spec, "parameters", info.parameters);
  if (!info.axes.empty()) out["sweep"] = spec.at("sweep");
  if (info.default_shots) out["shots"] = spec.contains("shots") ? spec["shots"] : json(*info.default_shots);
  return out;
}

std::string software_version() { return FFQ_VERSION; }

json environment_snapshot() {
  json e;
#if defined(__clang__)
  e["compiler"] = std::string("clang ") + __clang_version__;
#elif defined(__GNUC__)
  e["compiler"] = std::string("gcc ") + __VERSION__;
#else
  e["compiler"] = "unknown";
#endif
  e["cxx_standard"] = static_cast<long>(__cplusplus);
  e["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
               std::to_string(EIGEN_MINOR_VERSION);
  e["json"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
              std::to_string(NLOHMANN_JSON_VERSION_PATCH);
#if defined(__linux__)
  e["platform"] = "linux";
#elif defined(__APPLE__)
  e["platform"] = "macos";
#else
  e["platform"] = "other";
#endif
  return e;
}

RunBundle run_experiment(const json& spec, int jobs) {
  const json n = normalize_spec(spec);
  const std::string kind = n.at("kind");
  Produced p;
  if (kind == "spectrum") p = run_flipflop(n, FlipFlopScan::Spectrum, "detuning_mhz", jobs);
  else if (kind == "rabi") p = run_flipflop(n, FlipFlopScan::Rabi, "duration_us", jobs);
  else if (kind == "ramsey") p = run_flipflop(n, FlipFlopScan::Ramsey, "tau_us", jobs);
  else if (kind == "hahn") p = run_flipflop(n, FlipFlopScan::Hahn, "tau_us", jobs);
  else if (kind == "chevron") p = run_chevron(n, jobs);
  else if (kind == "t1e") p = run_t1e(n, jobs);
  else if (kind == "t1ff-pump") p = run_pump(n, jobs);
  else if (kind == "endor-fidelity") p = run_endor(n, jobs);
  else if (kind == "rb") p = run_rb_kind(n);
  else if (kind == "calibrate-attenuation") p = run_attenuation(n);
  else if (kind == "triangulate") p = run_triangulate(n, jobs);
  else p = run_si29(n, jobs);

  RunBundle b;
  b.files = std::move(p.files);
  json files = json::array();
  for (const auto& f : b.files) files.push_back(f.name);
  b.metadata = {{"software", {{"name", "ffqsim"}, {"version", software_version()}}},
                {"config", n},
                {"environment", environment_snapshot()},
                {"files", files},
                {"summary", p.summary}};
  b.files.push_back({"metadata.json", b.metadata.dump(2) + "\n"});
  return b;
}

void write_bundle(const RunBundle& bundle, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  for (const auto& f : bundle.files) {
    std::ofstream out(directory / f.name, std::ios::binary);
    if (!out) throw Error("cannot write " + (directory / f.name).string());
    out << f.contents;
  }
}

}  // namespace ffq
