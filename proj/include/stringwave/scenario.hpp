// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Scenario files (JSON), run orchestration and output emission.
/// The schema is documented in README.md.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "stringwave/error.hpp"
#include "stringwave/gem.hpp"
#include "stringwave/model.hpp"
#include "stringwave/sem.hpp"

namespace stringwave {

struct Tolerances {
  double imaginary = default_imaginary_tolerance;
  PoleSearchOptions newton;
};

struct Diagnostics {
  bool energy = true;
  std::optional<double> causal_t0; // start of the SEM comparison window
  double probe_start = 1.0;        // time grid of the x = 0 comparison
  double probe_stop = 15.0;
  double probe_step = 0.1;
};

struct Scenario {
  std::string name;
  StringMedium medium{1.0, 1.0};
  ScattererConfig scatterer;
  InitialTag initial;
  GridSpec spatial;
  GridSpec frequency;
  std::vector<double> times;
  std::vector<Method> methods;
  std::optional<std::pair<int, int>> sem_truncation;
  Tolerances tolerances;
  Diagnostics diagnostics;
  std::vector<std::string> defaulted; // fields not present in the file

  bool has(Method m) const { return std::find(methods.begin(), methods.end(), m) != methods.end(); }
};

inline void validate(const Scenario& s) {
  validate(s.scatterer);
  if (s.methods.empty()) throw ValidationError("methods: at least one method is required");
  for (std::size_t i = 0; i < s.methods.size(); ++i)
    for (std::size_t j = i + 1; j < s.methods.size(); ++j)
      if (s.methods[i] == s.methods[j])
        throw ValidationError("methods: '" + method_name(s.methods[i]) + "' listed twice");
  if (s.times.empty()) throw ValidationError("times: at least one snapshot time is required");
  for (double t : s.times)
    if (!std::isfinite(t) || t < 0.0) throw ValidationError("times: snapshot times must be finite and >= 0");
  const bool free = !has_scatterer(s.scatterer);
  if (s.has(Method::Dalembert) && !free)
    throw ValidationError("methods: dalembert requires the free scatterer");
  if (s.has(Method::Dalembert) && !std::holds_alternative<GaussianPacket>(s.initial))
    throw ValidationError("methods: dalembert requires a gaussian initial condition");
  if (s.has(Method::Sem) && free)
    throw ValidationError("methods: sem requires a scatterer (the free string has no resonances)");
  if (s.has(Method::Sem) && std::holds_alternative<MassAnchor>(s.scatterer) && !s.sem_truncation)
    throw ValidationError("sem_truncation: required when sem is used with mass_anchor");
  if (s.sem_truncation && s.sem_truncation->first > s.sem_truncation->second)
    throw ValidationError("sem_truncation: j_min must not exceed j_max");
  if (std::holds_alternative<PointImpulse>(s.initial) && free)
    throw ValidationError("initial: point_impulse needs a point mass to act on");
  if (const auto* g = std::get_if<GaussianPacket>(&s.initial); g && !(g->width > 0.0))
    throw ValidationError("initial.width: must be positive");
  if (!(s.tolerances.imaginary > 0.0)) throw ValidationError("tolerances.imaginary: must be positive");
  if (!(s.tolerances.newton.newton_tolerance > 0.0) || !(s.tolerances.newton.acceptance > 0.0))
    throw ValidationError("tolerances: Newton tolerances must be positive");
  if (s.tolerances.newton.max_iterations < 1)
    throw ValidationError("tolerances.max_iterations: must be >= 1");
  const auto& d = s.diagnostics;
  if (!(d.probe_step > 0.0) || !(d.probe_stop >= d.probe_start) || d.probe_start < 0.0)
    throw ValidationError("diagnostics.probe: need 0 <= start <= stop and step > 0");
  try {
    build_grids(s.spatial, s.frequency, s.scatterer);
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("grids: ") + e.what());
  }
}

namespace detail {

using json = nlohmann::json;

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline void reject_unknown(const json& obj, const std::string& path,
                           std::initializer_list<const char*> known) {
  for (const auto& [key, value] : obj.items()) {
    const bool ok = std::any_of(known.begin(), known.end(), [&](const char* k) { return key == k; });
    if (!ok) throw ValidationError("field '" + join(path, key) + "': unknown field");
  }
}

inline const json& object(const json& parent, const char* key, const std::string& path) {
  const auto full = join(path, key);
  if (!parent.contains(key)) throw ValidationError("field '" + full + "': missing");
  const auto& v = parent.at(key);
  if (!v.is_object()) throw ValidationError("field '" + full + "': expected an object");
  return v;
}

inline double number(const json& v, const std::string& full) {
  if (!v.is_number()) throw ValidationError("field '" + full + "': expected a number");
  return v.get<double>();
}

inline double required_number(const json& parent, const char* key, const std::string& path) {
  const auto full = join(path, key);
  if (!parent.contains(key)) throw ValidationError("field '" + full + "': missing");
  return number(parent.at(key), full);
}

inline double number_or(const json& parent, const char* key, const std::string& path, double fallback,
                        std::vector<std::string>& defaulted) {
  if (!parent.contains(key)) {
    defaulted.push_back(join(path, key));
    return fallback;
  }
  return number(parent.at(key), join(path, key));
}

inline long long integer(const json& v, const std::string& full) {
  if (!v.is_number_integer()) throw ValidationError("field '" + full + "': expected an integer");
  return v.get<long long>();
}

inline std::string text(const json& parent, const char* key, const std::string& path) {
  const auto full = join(path, key);
  if (!parent.contains(key)) throw ValidationError("field '" + full + "': missing");
  if (!parent.at(key).is_string()) throw ValidationError("field '" + full + "': expected a string");
  return parent.at(key).get<std::string>();
}

inline GridSpec grid_spec(const json& parent, const char* key) {
  const auto& g = object(parent, key, "");
  reject_unknown(g, key, {"lower", "upper", "cells"});
  GridSpec spec;
  spec.lower = required_number(g, "lower", key);
  spec.upper = required_number(g, "upper", key);
  const auto full = join(key, "cells");
  if (!g.contains("cells")) throw ValidationError("field '" + full + "': missing");
  const auto n = integer(g.at("cells"), full);
  if (n < 1) throw ValidationError("field '" + full + "': must be >= 1");
  spec.n_cells = static_cast<std::size_t>(n);
  return spec;
}

inline std::vector<double> number_array(const json& v, const std::string& full) {
  if (!v.is_array()) throw ValidationError("field '" + full + "': expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(number(v[i], full + "[" + std::to_string(i) + "]"));
  return out;
}

inline ScattererConfig parse_scatterer(const json& root) {
  const auto& s = object(root, "scatterer", "");
  const auto type = text(s, "type", "scatterer");
  if (type == "free") {
    reject_unknown(s, "scatterer", {"type"});
    return FreeString{};
  }
  if (type == "mass_spring") {
    reject_unknown(s, "scatterer", {"type", "mass", "spring"});
    return MassSpring{required_number(s, "mass", "scatterer"), required_number(s, "spring", "scatterer")};
  }
  if (type == "mass_anchor") {
    reject_unknown(s, "scatterer", {"type", "mass", "offset"});
    return MassAnchor{required_number(s, "mass", "scatterer"), required_number(s, "offset", "scatterer")};
  }
  throw ValidationError("field 'scatterer.type': expected free, mass_spring or mass_anchor, got '" +
                        type + "'");
}

inline InitialTag parse_initial(const json& root, std::vector<std::string>& defaulted) {
  const auto& s = object(root, "initial", "");
  const auto type = text(s, "type", "initial");
  if (type == "gaussian") {
    reject_unknown(s, "initial", {"type", "center", "width", "carrier", "direction"});
    GaussianPacket g;
    g.center = required_number(s, "center", "initial");
    g.width = number_or(s, "width", "initial", 1.0, defaulted);
    g.carrier = number_or(s, "carrier", "initial", 0.0, defaulted);
    std::string dir = "static";
    if (s.contains("direction")) dir = text(s, "direction", "initial");
    else defaulted.push_back("initial.direction");
    if (dir == "left") g.direction = Direction::Left;
    else if (dir == "right") g.direction = Direction::Right;
    else if (dir == "static") g.direction = Direction::Static;
    else throw ValidationError("field 'initial.direction': expected left, right or static");
    return g;
  }
  if (type == "point_impulse") {
    reject_unknown(s, "initial", {"type", "amplitude"});
    return PointImpulse{number_or(s, "amplitude", "initial", 1.0, defaulted)};
  }
  if (type == "custom") {
    reject_unknown(s, "initial", {"type", "displacement", "velocity", "point_displacement",
                                  "point_velocity"});
    CustomSamples c;
    if (!s.contains("displacement")) throw ValidationError("field 'initial.displacement': missing");
    if (!s.contains("velocity")) throw ValidationError("field 'initial.velocity': missing");
    c.displacement = number_array(s.at("displacement"), "initial.displacement");
    c.velocity = number_array(s.at("velocity"), "initial.velocity");
    if (s.contains("point_displacement"))
      c.point_displacement = number(s.at("point_displacement"), "initial.point_displacement");
    if (s.contains("point_velocity"))
      c.point_velocity = number(s.at("point_velocity"), "initial.point_velocity");
    return c;
  }
  throw ValidationError("field 'initial.type': expected gaussian, point_impulse or custom, got '" +
                        type + "'");
}

inline Method parse_method(const json& v, const std::string& full) {
  if (!v.is_string()) throw ValidationError("field '" + full + "': expected a method name");
  const auto name = v.get<std::string>();
  if (name == "gem") return Method::Gem;
  if (name == "sem") return Method::Sem;
  if (name == "dalembert") return Method::Dalembert;
  throw ValidationError("field '" + full + "': unknown method '" + name + "'");
}

inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else ++col;
  }
  return {line, col};
}

} // namespace detail

/// Converts a parsed document; `source` only labels error messages.
inline Scenario scenario_from_json(const nlohmann::json& root, const std::string& source = "scenario") {
  using detail::json;
  if (!root.is_object()) throw ValidationError(source + ": top level must be an object");
  detail::reject_unknown(root, "", {"name", "medium", "scatterer", "initial", "spatial", "frequency",
                                    "times", "methods", "sem_truncation", "tolerances",
                                    "diagnostics"});
  Scenario s;
  auto& defaulted = s.defaulted;
  if (root.contains("name")) s.name = detail::text(root, "name", "");
  else {
    s.name = std::filesystem::path(source).stem().string();
    defaulted.push_back("name");
  }

  const auto& m = detail::object(root, "medium", "");
  detail::reject_unknown(m, "medium", {"density", "tension"});
  try {
    s.medium = StringMedium(detail::number_or(m, "density", "medium", 1.0, defaulted),
                            detail::number_or(m, "tension", "medium", 1.0, defaulted));
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("medium: ") + e.what());
  }
  s.scatterer = detail::parse_scatterer(root);
  try {
    validate(s.scatterer);
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("scatterer: ") + e.what());
  }
  s.initial = detail::parse_initial(root, defaulted);
  s.spatial = detail::grid_spec(root, "spatial");
  s.frequency = detail::grid_spec(root, "frequency");

  if (!root.contains("times")) throw ValidationError("field 'times': missing");
  s.times = detail::number_array(root.at("times"), "times");

  if (!root.contains("methods")) throw ValidationError("field 'methods': missing");
  const auto& methods = root.at("methods");
  if (!methods.is_array()) throw ValidationError("field 'methods': expected an array");
  for (std::size_t i = 0; i < methods.size(); ++i)
    s.methods.push_back(detail::parse_method(methods[i], "methods[" + std::to_string(i) + "]"));

  if (root.contains("sem_truncation")) {
    const auto& tr = root.at("sem_truncation");
    if (!tr.is_array() || tr.size() != 2)
      throw ValidationError("field 'sem_truncation': expected [j_min, j_max]");
    s.sem_truncation = std::pair<int, int>{static_cast<int>(detail::integer(tr[0], "sem_truncation[0]")),
                                           static_cast<int>(detail::integer(tr[1], "sem_truncation[1]"))};
  }

  const json empty = json::object();
  const auto& tol = root.contains("tolerances") ? detail::object(root, "tolerances", "") : empty;
  detail::reject_unknown(tol, "tolerances", {"imaginary", "newton", "acceptance", "max_iterations"});
  s.tolerances.imaginary = detail::number_or(tol, "imaginary", "tolerances", default_imaginary_tolerance, defaulted);
  s.tolerances.newton.newton_tolerance =
      detail::number_or(tol, "newton", "tolerances", PoleSearchOptions{}.newton_tolerance, defaulted);
  s.tolerances.newton.acceptance =
      detail::number_or(tol, "acceptance", "tolerances", PoleSearchOptions{}.acceptance, defaulted);
  if (tol.contains("max_iterations"))
    s.tolerances.newton.max_iterations =
        static_cast<int>(detail::integer(tol.at("max_iterations"), "tolerances.max_iterations"));
  else defaulted.push_back("tolerances.max_iterations");

  const auto& diag = root.contains("diagnostics") ? detail::object(root, "diagnostics", "") : empty;
  detail::reject_unknown(diag, "diagnostics", {"energy", "causal_t0", "probe"});
  if (diag.contains("energy")) {
    if (!diag.at("energy").is_boolean()) throw ValidationError("field 'diagnostics.energy': expected true or false");
    s.diagnostics.energy = diag.at("energy").get<bool>();
  } else defaulted.push_back("diagnostics.energy");
  if (diag.contains("causal_t0"))
    s.diagnostics.causal_t0 = detail::number(diag.at("causal_t0"), "diagnostics.causal_t0");
  else defaulted.push_back("diagnostics.causal_t0");
  const auto& probe = diag.contains("probe") ? detail::object(diag, "probe", "diagnostics") : empty;
  detail::reject_unknown(probe, "diagnostics.probe", {"start", "stop", "step"});
  s.diagnostics.probe_start = detail::number_or(probe, "start", "diagnostics.probe", 1.0, defaulted);
  s.diagnostics.probe_stop = detail::number_or(probe, "stop", "diagnostics.probe", 15.0, defaulted);
  s.diagnostics.probe_step = detail::number_or(probe, "step", "diagnostics.probe", 0.1, defaulted);

  validate(s);
  return s;
}

/// Sets a dotted path ("scatterer.spring=60") in a parsed document. The value is
/// read as JSON when it parses, otherwise taken as a string.
inline void apply_override(nlohmann::json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ValidationError("override '" + assignment + "': expected key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  nlohmann::json* node = &root;
  std::stringstream path(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(path, part, '.')) {
    if (part.empty()) throw ValidationError("override '" + assignment + "': empty path segment");
    parts.push_back(part);
  }
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const bool last = i + 1 == parts.size();
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(parts[i]);
      } catch (const std::exception&) {
        throw ValidationError("override '" + assignment + "': '" + parts[i] + "' is not an index");
      }
      if (idx >= node->size()) throw ValidationError("override '" + assignment + "': index out of range");
      node = &(*node)[idx];
    } else {
      if (!node->is_object()) {
        if (!node->is_null())
          throw ValidationError("override '" + assignment + "': '" + parts[i - 1] + "' is not an object");
        *node = nlohmann::json::object();
      }
      node = &(*node)[parts[i]];
    }
    if (last) *node = value;
  }
}

inline Scenario load_scenario(const std::filesystem::path& path,
                              const std::vector<std::string>& overrides = {}) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path.string() + ": cannot open scenario file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, col] = detail::line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ValidationError(path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) +
                          ": parse error: " + e.what());
  }
  for (const auto& o : overrides) apply_override(root, o);
  try {
    return scenario_from_json(root, path.string());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

struct PoleRow {
  int j = 0;
  cplx omega;
  cplx k;
  double residual = 0.0;
  cplx normalization;
  std::optional<cplx> coefficient;
};

struct TimedValue {
  double time = 0.0;
  std::optional<double> value; // empty when undefined (e.g. empty comparison window)
};

struct Metrics {
  std::optional<double> gem_reconstruction; // relative L2 at t = 0
  std::vector<TimedValue> energy;           // E(t) on the extended grid
  std::optional<double> energy_drift;       // max |E(t) - E(0)| / E(0)
  std::optional<double> causal_t0;
  std::vector<TimedValue> gem_vs_sem;       // relative L2 over |x| < c (t - t0)
  std::optional<double> gem_vs_sem_point;   // max |diff| / max |gem| at x = 0 over the probe times
  std::vector<TimedValue> gem_vs_dalembert; // relative L2 over the grid
};

struct RunReport {
  std::string scenario;
  std::vector<Snapshot> snapshots;
  std::vector<PoleRow> poles;
  bool poles_requested = false;
  Metrics metrics;
  std::vector<std::string> warnings;
  std::vector<std::string> defaulted;
  std::vector<double> probe_times;
  std::vector<double> probe_gem;
  std::vector<double> probe_sem;

  void warn(std::string message) {
    if (std::find(warnings.begin(), warnings.end(), message) == warnings.end())
      warnings.push_back(std::move(message));
  }

  const Snapshot* find(Method m, double t) const {
    for (const auto& s : snapshots)
      if (s.method == m && s.time == t) return &s;
    return nullptr;
  }
};

namespace detail {

/// Runs one stage, prefixing its name onto any module error without changing the type.
template <class F>
auto staged(const char* stage, F&& f) -> decltype(f()) {
  const std::string tag = std::string("[") + stage + "] ";
  try {
    return f();
  } catch (const ImaginaryResidueError& e) {
    throw ImaginaryResidueError(tag + e.what());
  } catch (const NonConvergenceError& e) {
    throw NonConvergenceError(tag + e.what());
  } catch (const PoleHitError& e) {
    throw PoleHitError(tag + e.what());
  } catch (const CotSingularityError& e) {
    throw CotSingularityError(tag + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(tag + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(tag + e.what());
  }
}

inline double l2(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

inline double l2_diff(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

/// Time after which the initial data has finished interacting with x = 0.
inline double default_causal_t0(const InitialTag& tag, const SpatialGrid& grid, double c) {
  if (const auto* g = std::get_if<GaussianPacket>(&tag))
    return (std::abs(g->center) + g->width * std::sqrt(std::log(1000.0))) / c; // envelope at 1e-3
  if (std::holds_alternative<PointImpulse>(tag)) return 0.0;
  const auto& cs = std::get<CustomSamples>(tag);
  double fmax = 0.0, gmax = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    fmax = std::max(fmax, std::abs(cs.displacement[j]));
    gmax = std::max(gmax, std::abs(cs.velocity[j]));
  }
  double reach = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j)
    if (std::abs(cs.displacement[j]) > 1e-3 * fmax || std::abs(cs.velocity[j]) > 1e-3 * gmax)
      reach = std::max(reach, std::abs(grid[j]));
  return reach / c;
}

inline std::vector<double> probe_times(const Diagnostics& d) {
  const auto steps = static_cast<std::size_t>(std::llround((d.probe_stop - d.probe_start) / d.probe_step));
  std::vector<double> out;
  for (std::size_t i = 0; i <= steps; ++i) out.push_back(d.probe_start + static_cast<double>(i) * d.probe_step);
  return out;
}

inline constexpr std::size_t max_extension_cells = 20000;

} // namespace detail

/// Pole table for the scenario's scatterer (no initial data needed).
inline std::vector<ResonanceMode> find_modes(const Scenario& s, RunReport& report) {
  std::vector<ResonanceMode> modes;
  if (const auto* ms = std::get_if<MassSpring>(&s.scatterer)) {
    if (s.sem_truncation) report.warn("sem_truncation is ignored for mass_spring (two resonances)");
    const auto pair = detail::staged("poles", [&] { return poles_mass_spring(s.medium, *ms); });
    modes.assign(pair.begin(), pair.end());
  } else if (const auto* ma = std::get_if<MassAnchor>(&s.scatterer)) {
    if (!s.sem_truncation) throw ValidationError("sem_truncation: required for mass_anchor poles");
    auto search = detail::staged("poles", [&] {
      return poles_anchor(s.medium, *ma, s.sem_truncation->first, s.sem_truncation->second,
                          s.tolerances.newton);
    });
    for (const auto& f : search.failures)
      report.warn("resonance " + std::to_string(f.index) + " not found: " + f.reason);
    for (const auto& [kept, dropped] : search.duplicates)
      report.warn("resonance " + std::to_string(dropped) + " duplicates resonance " + std::to_string(kept) +
                  " and was dropped");
    modes = std::move(search.modes);
  } else {
    throw ValidationError("the free string has no resonances");
  }
  return modes;
}

inline std::vector<PoleRow> pole_rows(std::span<const ResonanceMode> modes) {
  std::vector<PoleRow> rows;
  for (const auto& m : modes) rows.push_back({m.index, m.omega, m.k, m.residual, m.normalization, m.coefficient});
  return rows;
}

inline RunReport run(const Scenario& s) {
  validate(s);
  RunReport report;
  report.scenario = s.name;
  report.defaulted = s.defaulted;
  const auto grids = detail::staged("grids", [&] { return build_grids(s.spatial, s.frequency, s.scatterer); });
  for (const auto& note : grids.notes) report.warn(note);
  const auto& xgrid = grids.spatial;
  const auto ic = detail::staged("initial", [&] { return sample_initial_condition(s.initial, xgrid, s.medium); });
  const double c = s.medium.wave_speed();
  const double tol = s.tolerances.imaginary;

  std::optional<GemOperator> op;
  std::optional<SpectralAmplitudes> amps;
  if (s.has(Method::Gem)) {
    op = detail::staged("gem", [&] { return assemble_operator(xgrid, grids.frequency, s.medium, s.scatterer); });
    amps = detail::staged("gem", [&] { return spectral_amplitudes(ic, *op); });
    for (double t : s.times)
      report.snapshots.push_back(detail::staged("gem", [&] { return evolve_gem(*op, *amps, t, tol); }));

    const auto at0 = detail::staged("gem", [&] { return evolve_gem(*op, *amps, 0.0, tol); });
    const double data_norm = detail::l2(ic.displacement);
    double scale = data_norm;
    if (scale == 0.0) {
      // No displacement to compare with (impulse data): measure against the field it develops.
      scale = detail::l2(at0.displacement);
      for (const auto& snap : report.snapshots)
        if (snap.method == Method::Gem) scale = std::max(scale, detail::l2(snap.displacement));
    }
    const double err = detail::l2_diff(at0.displacement, ic.displacement);
    report.metrics.gem_reconstruction = scale > 0.0 ? err / scale : 0.0;

    if (s.diagnostics.energy) {
      const double t_max = *std::max_element(s.times.begin(), s.times.end());
      const auto extra = static_cast<std::size_t>(std::ceil(c * t_max / xgrid.dx()));
      const bool anchored = xgrid.left_boundary() == LeftBoundary::Anchored;
      const std::size_t left = anchored ? 0 : extra;
      if (left + extra > detail::max_extension_cells) {
        report.warn("energy diagnostic skipped: the extended grid would need more than " +
                    std::to_string(detail::max_extension_cells) + " extra cells");
      } else {
        const auto wide = extend_grid(xgrid, left, extra);
        const auto wide_op = detail::staged("energy", [&] {
          return assemble_operator(wide, grids.frequency, s.medium, s.scatterer);
        });
        std::vector<double> times{0.0};
        for (double t : s.times)
          if (t != 0.0) times.push_back(t);
        std::sort(times.begin(), times.end());
        double e0 = 0.0, drift = 0.0;
        for (double t : times) {
          const auto snap = detail::staged("energy", [&] { return evolve_gem(wide_op, *amps, t, tol); });
          const double e = energy(snap, s.medium, s.scatterer, wide);
          if (t == 0.0) e0 = e;
          else if (e0 > 0.0) drift = std::max(drift, std::abs(e - e0) / e0);
          report.metrics.energy.push_back({t, e});
        }
        report.metrics.energy_drift = drift;
      }
    }
  }

  std::vector<ResonanceMode> modes;
  if (s.has(Method::Sem)) {
    report.poles_requested = true;
    modes = find_modes(s, report);
    const auto warnings = detail::staged("sem", [&] {
      return attach_coefficients(modes, ic, s.medium, s.scatterer, xgrid);
    });
    for (const auto& w : warnings) report.warn(w);
    report.poles = pole_rows(modes);
    for (double t : s.times)
      report.snapshots.push_back(detail::staged("sem", [&] { return evolve_sem(modes, t, xgrid, tol); }));
  }

  if (s.has(Method::Dalembert))
    for (double t : s.times)
      report.snapshots.push_back(detail::staged("dalembert", [&] {
        return dalembert_snapshot(ic, s.medium, s.scatterer, xgrid, t);
      }));

  if (s.has(Method::Gem) && s.has(Method::Sem)) {
    const double t0 = s.diagnostics.causal_t0.value_or(detail::default_causal_t0(s.initial, xgrid, c));
    report.metrics.causal_t0 = t0;
    for (double t : s.times) {
      const auto* g = report.find(Method::Gem, t);
      const auto* m = report.find(Method::Sem, t);
      std::vector<double> a, b;
      for (std::size_t j = 0; j < xgrid.size(); ++j)
        if (std::abs(xgrid[j]) < c * (t - t0)) {
          a.push_back(g->displacement[j]);
          b.push_back(m->displacement[j]);
        }
      TimedValue tv{t, std::nullopt};
      const double norm = detail::l2(a);
      if (!a.empty() && norm > 0.0) tv.value = detail::l2_diff(b, a) / norm;
      report.metrics.gem_vs_sem.push_back(tv);
    }
    report.probe_times = detail::probe_times(s.diagnostics);
    report.probe_gem = detail::staged("probe", [&] {
      return gem_point_series(*op, *amps, *xgrid.j0(), report.probe_times, tol);
    });
    double diff = 0.0, peak = 0.0;
    for (std::size_t i = 0; i < report.probe_times.size(); ++i) {
      const double v = detail::staged("probe", [&] {
        return sem_point_value(modes, 0.0, report.probe_times[i], tol);
      });
      report.probe_sem.push_back(v);
      diff = std::max(diff, std::abs(v - report.probe_gem[i]));
      peak = std::max(peak, std::abs(report.probe_gem[i]));
    }
    if (peak > 0.0) report.metrics.gem_vs_sem_point = diff / peak;
  }

  if (s.has(Method::Gem) && s.has(Method::Dalembert)) {
    for (double t : s.times) {
      const auto* g = report.find(Method::Gem, t);
      const auto* d = report.find(Method::Dalembert, t);
      TimedValue tv{t, std::nullopt};
      const double norm = detail::l2(d->displacement);
      if (norm > 0.0) tv.value = detail::l2_diff(g->displacement, d->displacement) / norm;
      report.metrics.gem_vs_dalembert.push_back(tv);
    }
  }
  return report;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string snapshot_filename(const Snapshot& snap) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", snap.time);
  return method_name(snap.method) + "_t" + buf + ".csv";
}

inline void write_snapshot_csv(std::ostream& out, const Snapshot& snap) {
  const bool with_v = !snap.velocity.empty();
  out << (with_v ? "x,u,v\n" : "x,u\n");
  for (std::size_t j = 0; j < snap.positions.size(); ++j) {
    out << format_double(snap.positions[j]) << ',' << format_double(snap.displacement[j]);
    if (with_v) out << ',' << format_double(snap.velocity[j]);
    out << '\n';
  }
}

inline void write_poles_csv(std::ostream& out, std::span<const PoleRow> rows) {
  out << "j,re_omega,im_omega,re_k,im_k,residual,re_norm,im_norm\n";
  for (const auto& r : rows)
    out << r.j << ',' << format_double(r.omega.real()) << ',' << format_double(r.omega.imag()) << ','
        << format_double(r.k.real()) << ',' << format_double(r.k.imag()) << ',' << format_double(r.residual)
        << ',' << format_double(r.normalization.real()) << ',' << format_double(r.normalization.imag())
        << '\n';
}

inline nlohmann::json report_json(const RunReport& report) {
  using nlohmann::json;
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  auto series = [&](const std::vector<TimedValue>& values) {
    json arr = json::array();
    for (const auto& tv : values) arr.push_back({{"time", tv.time}, {"value", opt(tv.value)}});
    return arr;
  };
  json j;
  j["scenario"] = report.scenario;
  json files = json::array();
  for (const auto& snap : report.snapshots) files.push_back(snapshot_filename(snap));
  j["snapshots"] = files;
  const auto& m = report.metrics;
  j["metrics"] = {{"gem_reconstruction_t0", opt(m.gem_reconstruction)},
                  {"energy", series(m.energy)},
                  {"energy_drift", opt(m.energy_drift)},
                  {"causal_t0", opt(m.causal_t0)},
                  {"gem_vs_sem_window_l2", series(m.gem_vs_sem)},
                  {"gem_vs_sem_point_max", opt(m.gem_vs_sem_point)},
                  {"gem_vs_dalembert_l2", series(m.gem_vs_dalembert)}};
  json poles = json::array();
  for (const auto& r : report.poles) {
    json row = {{"j", r.j},
                {"omega", {r.omega.real(), r.omega.imag()}},
                {"k", {r.k.real(), r.k.imag()}},
                {"residual", r.residual},
                {"normalization", {r.normalization.real(), r.normalization.imag()}}};
    if (r.coefficient) row["coefficient"] = {r.coefficient->real(), r.coefficient->imag()};
    poles.push_back(row);
  }
  j["poles"] = poles;
  j["warnings"] = report.warnings;
  j["defaulted"] = report.defaulted;
  return j;
}

/// Writes snapshot CSVs, poles.csv (when SEM ran) and report.json; returns the paths written.
inline std::vector<std::filesystem::path> emit(const RunReport& report, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
  std::vector<fs::path> written;
  auto open = [&](const fs::path& p) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    written.push_back(p);
    return out;
  };
  for (const auto& snap : report.snapshots) {
    auto out = open(dir / snapshot_filename(snap));
    write_snapshot_csv(out, snap);
  }
  if (report.poles_requested) {
    auto out = open(dir / "poles.csv");
    write_poles_csv(out, report.poles);
  }
  auto out = open(dir / "report.json");
  out << report_json(report).dump(2) << '\n';
  for (const auto& p : written)
    if (!fs::exists(p)) throw std::runtime_error("failed to write " + p.string());
  return written;
}

} // namespace stringwave
