#pragma once

// Experiment configuration and its JSON form.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include <json.hpp>

#include "mra/data.hpp"
#include "mra/error.hpp"
#include "mra/harness/io.hpp"
#include "mra/signal.hpp"

namespace mra::harness {

using json = nlohmann::json;

enum class Method { mca, em, bispectrum, templ, oracle };

inline const char* to_string(Method m) noexcept {
  switch (m) {
    case Method::mca: return "mca";
    case Method::em: return "em";
    case Method::bispectrum: return "bispectrum";
    case Method::templ: return "template";
    default: return "oracle";
  }
}

inline Method parse_method(const std::string& s) {
  if (s == "mca") return Method::mca;
  if (s == "em") return Method::em;
  if (s == "bispectrum") return Method::bispectrum;
  if (s == "template") return Method::templ;
  if (s == "oracle") return Method::oracle;
  throw ConfigError("unknown method '" + s + "'");
}

struct SignalSpec {
  enum class Kind { square, sinusoid, custom } kind = Kind::square;
  std::size_t L = 41;
  std::size_t width = 21;
  double height = 1.0;
  long long k = 1;
  double c = 1.0;
  std::string file;
};

/// Log-spaced values from lo to hi inclusive.
inline std::vector<double> log_space(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    v[i] = std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)));
  }
  return v;
}

inline std::vector<double> default_tau_list() { return log_space(0.03, 4.0, 15); }

struct ExperimentConfig {
  SignalSpec signal;
  std::vector<Method> methods{Method::mca};
  std::vector<double> tauList = default_tau_list();
  std::size_t N = 10000;
  std::size_t runs = 40;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  std::string outputDir = ".";

  // Method knobs beyond the shared tolerance.
  std::size_t maxIter = 5000;
  std::size_t emWarmStartIters = 3000;
  std::size_t emWarmStartBatch = 1000;
  NoiseBias noiseBias = NoiseBias::scaled;
  InitMode initMode = InitMode::sample;
  /// Template for the template method; empty means the clean signal.
  std::string templateFile;
  /// false writes wall_s = 0 so repeated runs are byte-identical.
  bool timing = true;

  // Sample-efficiency search.
  std::vector<double> epsList{0.1};
  std::size_t Nmin = 16;
  std::size_t Nmax = 1 << 17;
  std::size_t replicates = 5;

  void validate() const {
    if (runs < 1) throw ConfigError("runs must be >= 1");
    if (!(tol > 0.0)) throw ConfigError("tol must be > 0");
    if (N < 1) throw ConfigError("N must be >= 1");
    if (methods.empty()) throw ConfigError("at least one method is required");
    if (tauList.empty()) throw ConfigError("tauList must be nonempty");
    for (double t : tauList)
      if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("all tau values must be finite and >= 0");
    for (double e : epsList)
      if (!(e > 0.0)) throw ConfigError("eps values must be > 0");
    if (Nmin < 1 || Nmax < Nmin) throw ConfigError("need 1 <= Nmin <= Nmax");
    if (replicates < 1) throw ConfigError("replicates must be >= 1");
    if (signal.kind != SignalSpec::Kind::custom && signal.L < 2) throw ConfigError("signal length must be >= 2");
    if (signal.kind == SignalSpec::Kind::square && signal.width > signal.L) throw ConfigError("square width exceeds L");
  }
};


inline RealSignal make_signal(const SignalSpec& s) {
  switch (s.kind) {
    case SignalSpec::Kind::square: return square_wave(s.L, s.width, s.height);
    case SignalSpec::Kind::sinusoid: return sinusoid(s.L, s.k, s.c);
    default: return read_signal_csv(s.file);
  }
}

namespace detail {

template <class T>
T get(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ConfigError(std::string("unknown field '") + it.key() + "' in " + where);
  }
}

}  // namespace detail

inline SignalSpec parse_signal(const json& j) {
  if (!j.is_object()) throw ConfigError("signal must be an object");
  detail::check_keys(j, {"type", "L", "width", "height", "k", "c", "file"}, "signal");
  SignalSpec s;
  const auto type = detail::get<std::string>(j, "type", "square");
  if (type == "square") s.kind = SignalSpec::Kind::square;
  else if (type == "sinusoid") s.kind = SignalSpec::Kind::sinusoid;
  else if (type == "custom") s.kind = SignalSpec::Kind::custom;
  else throw ConfigError("unknown signal type '" + type + "'");
  s.L = detail::get<std::size_t>(j, "L", s.L);
  s.width = detail::get<std::size_t>(j, "width", s.width);
  s.height = detail::get<double>(j, "height", s.height);
  s.k = detail::get<long long>(j, "k", s.k);
  s.c = detail::get<double>(j, "c", s.c);
  s.file = detail::get<std::string>(j, "file", s.file);
  if (s.kind == SignalSpec::Kind::custom && s.file.empty()) throw ConfigError("custom signal needs 'file'");
  return s;
}

inline ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  detail::check_keys(j,
                     {"signal", "method", "tauList", "N", "runs", "tol", "seed", "outputDir", "maxIter",
                      "emWarmStartIters", "emWarmStartBatch", "noiseBias", "initMode", "template", "timing",
                      "epsList", "Nmin", "Nmax", "replicates"},
                     "config");
  ExperimentConfig c;
  if (j.contains("signal")) c.signal = parse_signal(j.at("signal"));
  if (j.contains("method")) {
    const auto& m = j.at("method");
    c.methods.clear();
    if (m.is_string()) c.methods.push_back(parse_method(m.get<std::string>()));
    else if (m.is_array())
      for (const auto& e : m) c.methods.push_back(parse_method(e.get<std::string>()));
    else throw ConfigError("method must be a string or an array of strings");
  }
  c.tauList = detail::get<std::vector<double>>(j, "tauList", c.tauList);
  c.N = detail::get<std::size_t>(j, "N", c.N);
  c.runs = detail::get<std::size_t>(j, "runs", c.runs);
  c.tol = detail::get<double>(j, "tol", c.tol);
  c.seed = detail::get<std::uint64_t>(j, "seed", c.seed);
  c.outputDir = detail::get<std::string>(j, "outputDir", c.outputDir);
  c.maxIter = detail::get<std::size_t>(j, "maxIter", c.maxIter);
  c.emWarmStartIters = detail::get<std::size_t>(j, "emWarmStartIters", c.emWarmStartIters);
  c.emWarmStartBatch = detail::get<std::size_t>(j, "emWarmStartBatch", c.emWarmStartBatch);
  const auto bias = detail::get<std::string>(j, "noiseBias", "scaled");
  if (bias == "scaled") c.noiseBias = NoiseBias::scaled;
  else if (bias == "unscaled") c.noiseBias = NoiseBias::unscaled;
  else throw ConfigError("noiseBias must be 'scaled' or 'unscaled'");
  const auto init = detail::get<std::string>(j, "initMode", "sample");
  if (init == "sample") c.initMode = InitMode::sample;
  else if (init == "random-phase") c.initMode = InitMode::random_phase;
  else throw ConfigError("initMode must be 'sample' or 'random-phase'");
  c.templateFile = detail::get<std::string>(j, "template", c.templateFile);
  c.timing = detail::get<bool>(j, "timing", c.timing);
  c.epsList = detail::get<std::vector<double>>(j, "epsList", c.epsList);
  c.Nmin = detail::get<std::size_t>(j, "Nmin", c.Nmin);
  c.Nmax = detail::get<std::size_t>(j, "Nmax", c.Nmax);
  c.replicates = detail::get<std::size_t>(j, "replicates", c.replicates);
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot open config " + p.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("malformed config " + p.string() + ": " + e.what());
  }
  return parse_config(j);
}

inline json to_json(const ExperimentConfig& c) {
  json s;
  switch (c.signal.kind) {
    case SignalSpec::Kind::square:
      s = {{"type", "square"}, {"L", c.signal.L}, {"width", c.signal.width}, {"height", c.signal.height}};
      break;
    case SignalSpec::Kind::sinusoid:
      s = {{"type", "sinusoid"}, {"L", c.signal.L}, {"k", c.signal.k}, {"c", c.signal.c}};
      break;
    default: s = {{"type", "custom"}, {"file", c.signal.file}};
  }
  json m = json::array();
  for (auto x : c.methods) m.push_back(to_string(x));
  return {{"signal", s},
          {"method", m},
          {"tauList", c.tauList},
          {"N", c.N},
          {"runs", c.runs},
          {"tol", c.tol},
          {"seed", c.seed},
          {"outputDir", c.outputDir},
          {"maxIter", c.maxIter},
          {"emWarmStartIters", c.emWarmStartIters},
          {"emWarmStartBatch", c.emWarmStartBatch},
          {"noiseBias", c.noiseBias == NoiseBias::scaled ? "scaled" : "unscaled"},
          {"initMode", c.initMode == InitMode::sample ? "sample" : "random-phase"},
          {"template", c.templateFile},
          {"timing", c.timing},
          {"epsList", c.epsList},
          {"Nmin", c.Nmin},
          {"Nmax", c.Nmax},
          {"replicates", c.replicates}};
}

}  // namespace mra::harness
