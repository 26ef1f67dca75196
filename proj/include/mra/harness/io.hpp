#pragma once

// CSV persistence for signals, sample sets and experiment tables. Every
// floating-point value is written with 17 significant digits so rows parse
// back bit-for-bit.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mra/error.hpp"
#include "mra/landscape.hpp"
#include "mra/signal.hpp"

namespace mra::harness {

inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s) {
  // strtod rather than stod: subnormals must parse instead of throwing.
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw MraError("bad number '" + s + "'");
  return v;
}

inline unsigned long long parse_uint(const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) throw MraError("bad integer '" + s + "'");
  return std::stoull(s);
}

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

namespace detail {
inline std::ofstream open_out(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw MraError("cannot write " + p.string());
  return out;
}

inline std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw MraError("cannot open " + p.string());
  return in;
}

// Lines that are neither blank nor '#' comments.
inline bool next_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line[0] != '#') return true;
  }
  return false;
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Signals

inline void write_signal_row(std::ostream& out, const RealSignal& x, long long id = -1) {
  if (id >= 0) out << id << ',';
  for (std::size_t n = 0; n < x.size(); ++n) out << (n ? "," : "") << fmt(x[n]);
  out << '\n';
}

inline void write_signals_csv(const std::filesystem::path& p, const std::vector<RealSignal>& xs, bool with_id = false) {
  auto out = detail::open_out(p);
  for (std::size_t i = 0; i < xs.size(); ++i) write_signal_row(out, xs[i], with_id ? static_cast<long long>(i) : -1);
}

/// Reads every row as a signal. A leading integer column is taken as an id
/// and dropped when `has_id` is set.
inline std::vector<RealSignal> read_signals_csv(const std::filesystem::path& p, bool has_id = false) {
  auto in = detail::open_in(p);
  std::vector<RealSignal> out;
  std::string line;
  while (detail::next_line(in, line)) {
    auto f = split(line);
    if (has_id) {
      if (f.empty()) throw MraError("missing id column in " + p.string());
      parse_uint(f.front());
      f.erase(f.begin());
    }
    std::vector<double> v;
    v.reserve(f.size());
    for (const auto& s : f) v.push_back(parse_double(s));
    out.emplace_back(std::move(v));
  }
  if (out.empty()) throw MraError("no signals in " + p.string());
  return out;
}

inline RealSignal read_signal_csv(const std::filesystem::path& p, bool has_id = false) {
  return read_signals_csv(p, has_id).front();
}

// ---------------------------------------------------------------------------
// Sample sets

inline void write_samples_csv(const std::filesystem::path& p, const SampleSet& X) {
  auto out = detail::open_out(p);
  out << "L=" << X.length() << ",N=" << X.size() << ",tau=" << fmt(X.tau()) << '\n';
  for (std::size_t i = 0; i < X.size(); ++i) write_signal_row(out, X.signal(i));
}

inline SampleSet read_samples_csv(const std::filesystem::path& p) {
  auto in = detail::open_in(p);
  std::string line;
  if (!detail::next_line(in, line)) throw MraError("empty sample file " + p.string());
  const auto h = split(line);
  if (h.size() != 3 || h[0].rfind("L=", 0) != 0 || h[1].rfind("N=", 0) != 0 || h[2].rfind("tau=", 0) != 0)
    throw MraError("bad sample header '" + line + "'");
  const std::size_t L = parse_uint(h[0].substr(2));
  const std::size_t N = parse_uint(h[1].substr(2));
  const double tau = parse_double(h[2].substr(4));
  std::vector<double> rows;
  rows.reserve(L * N);
  std::size_t count = 0;
  while (detail::next_line(in, line)) {
    const auto f = split(line);
    if (f.size() != L) throw MraError("sample row " + std::to_string(count) + " has wrong length");
    for (const auto& s : f) rows.push_back(parse_double(s));
    ++count;
  }
  if (count != N) throw MraError("sample file declares N=" + std::to_string(N) + " but has " + std::to_string(count));
  return SampleSet(L, tau, std::move(rows));
}

// ---------------------------------------------------------------------------
// Run records

struct RunRecord {
  std::string method;
  double tau = 0.0;
  std::size_t N = 0;
  std::uint64_t seed = 0;
  double nrmse = 0.0;
  std::size_t iterations = 0;
  double wallTimeSeconds = 0.0;
  bool converged = false;

  bool operator==(const RunRecord& o) const {
    auto same = [](double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; };
    return method == o.method && same(tau, o.tau) && N == o.N && seed == o.seed && same(nrmse, o.nrmse) &&
           iterations == o.iterations && same(wallTimeSeconds, o.wallTimeSeconds) && converged == o.converged;
  }
};

inline constexpr const char* kRunsHeader = "method,tau,N,seed,nrmse,iterations,wall_s,converged";

/// Machine description for '#' metadata lines.
inline std::string cpu_model() {
  std::ifstream in("/proc/cpuinfo");
  std::string line;
  while (std::getline(in, line))
    if (line.rfind("model name", 0) == 0) {
      const auto c = line.find(':');
      if (c != std::string::npos) return line.substr(line.find_first_not_of(' ', c + 1));
    }
  return "unknown";
}

inline void write_metadata(std::ostream& out, bool timing) {
  out << "# cpu: " << cpu_model() << '\n';
  out << "# hardware_threads: " << std::thread::hardware_concurrency() << '\n';
  if (timing)
    out << "# timing: steady_clock wall time of the reconstruction call only; data generation excluded\n";
  else
    out << "# timing: disabled (wall_s = 0)\n";
}

inline std::string format_run(const RunRecord& r) {
  return r.method + ',' + fmt(r.tau) + ',' + std::to_string(r.N) + ',' + std::to_string(r.seed) + ',' + fmt(r.nrmse) +
         ',' + std::to_string(r.iterations) + ',' + fmt(r.wallTimeSeconds) + ',' + (r.converged ? "1" : "0");
}

inline RunRecord parse_run(const std::string& line) {
  const auto f = split(line);
  if (f.size() != 8) throw MraError("run row needs 8 fields: '" + line + "'");
  RunRecord r;
  r.method = f[0];
  r.tau = parse_double(f[1]);
  r.N = parse_uint(f[2]);
  r.seed = parse_uint(f[3]);
  r.nrmse = parse_double(f[4]);
  r.iterations = parse_uint(f[5]);
  r.wallTimeSeconds = parse_double(f[6]);
  if (f[7] != "0" && f[7] != "1") throw MraError("converged must be 0 or 1");
  r.converged = f[7] == "1";
  return r;
}

inline void write_runs_csv(const std::filesystem::path& p, const std::vector<RunRecord>& rs, bool timing = true) {
  auto out = detail::open_out(p);
  write_metadata(out, timing);
  out << kRunsHeader << '\n';
  for (const auto& r : rs) out << format_run(r) << '\n';
}

inline std::vector<RunRecord> read_runs_csv(const std::filesystem::path& p) {
  auto in = detail::open_in(p);
  std::string line;
  if (!detail::next_line(in, line) || line != kRunsHeader) throw MraError("bad runs header in " + p.string());
  std::vector<RunRecord> out;
  while (detail::next_line(in, line)) out.push_back(parse_run(line));
  return out;
}

// ---------------------------------------------------------------------------
// Summary

/// Linear-interpolation quantile of unsorted data; NaNs are dropped.
inline double quantile(std::vector<double> v, double q) {
  std::erase_if(v, [](double x) { return std::isnan(x); });
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

struct SummaryRow {
  std::string method;
  double tau = 0.0;
  std::size_t runs = 0;
  std::size_t failures = 0;
  double median = 0.0, p05 = 0.0, p95 = 0.0;
  double medianIterations = 0.0;
  double medianWall = 0.0;
};

/// Groups by (method, tau) in first-appearance order.
inline std::vector<SummaryRow> summarize(const std::vector<RunRecord>& rs) {
  std::vector<SummaryRow> rows;
  std::vector<std::vector<const RunRecord*>> groups;
  for (const auto& r : rs) {
    std::size_t g = 0;
    while (g < rows.size() && !(rows[g].method == r.method && rows[g].tau == r.tau)) ++g;
    if (g == rows.size()) {
      rows.push_back({r.method, r.tau});
      groups.emplace_back();
    }
    groups[g].push_back(&r);
  }
  for (std::size_t g = 0; g < rows.size(); ++g) {
    std::vector<double> e, it, w;
    for (const auto* r : groups[g]) {
      e.push_back(r->nrmse);
      it.push_back(static_cast<double>(r->iterations));
      w.push_back(r->wallTimeSeconds);
      if (std::isnan(r->nrmse)) ++rows[g].failures;
    }
    rows[g].runs = groups[g].size();
    rows[g].median = median(e);
    rows[g].p05 = quantile(e, 0.05);
    rows[g].p95 = quantile(e, 0.95);
    rows[g].medianIterations = median(it);
    rows[g].medianWall = median(w);
  }
  return rows;
}

inline void write_summary_csv(const std::filesystem::path& p, const std::vector<SummaryRow>& rows) {
  auto out = detail::open_out(p);
  out << "method,tau,runs,failures,nrmse_median,nrmse_p05,nrmse_p95,iterations_median,wall_s_median\n";
  for (const auto& r : rows)
    out << r.method << ',' << fmt(r.tau) << ',' << r.runs << ',' << r.failures << ',' << fmt(r.median) << ','
        << fmt(r.p05) << ',' << fmt(r.p95) << ',' << fmt(r.medianIterations) << ',' << fmt(r.medianWall) << '\n';
}

// ---------------------------------------------------------------------------
// Sample efficiency

struct EfficiencyRow {
  std::string method;
  double tau = 0.0;
  double eps = 0.0;
  /// Smallest N found; Nmax when censored.
  std::size_t N = 0;
  /// Median NRMSE at N.
  double nrmse = 0.0;
  bool censored = false;
};

struct SlopeRow {
  std::string method;
  double eps = 0.0;
  double tauLo = 0.0, tauHi = 0.0;
  /// Least-squares slope of log N on log tau over uncensored rows in range.
  double slope = 0.0;
  std::size_t points = 0;
};

inline void write_efficiency_csv(const std::filesystem::path& p, const std::vector<EfficiencyRow>& rows) {
  auto out = detail::open_out(p);
  out << "method,tau,eps,N,nrmse_median,censored\n";
  for (const auto& r : rows)
    out << r.method << ',' << fmt(r.tau) << ',' << fmt(r.eps) << ',' << r.N << ',' << fmt(r.nrmse) << ','
        << (r.censored ? "censored" : "ok") << '\n';
}

inline void write_slopes_csv(const std::filesystem::path& p, const std::vector<SlopeRow>& rows) {
  auto out = detail::open_out(p);
  out << "method,eps,tau_lo,tau_hi,slope,points\n";
  for (const auto& r : rows)
    out << r.method << ',' << fmt(r.eps) << ',' << fmt(r.tauLo) << ',' << fmt(r.tauHi) << ',' << fmt(r.slope) << ','
        << r.points << '\n';
}

// ---------------------------------------------------------------------------
// Landscape grids

inline void write_grid_csv(const std::filesystem::path& p, const TorusGrid& g) {
  auto out = detail::open_out(p);
  out << "phi1,phi2,loss,gradnorm\n";
  const std::size_t R = g.resolution;
  for (std::size_t i = 0; i < R; ++i)
    for (std::size_t j = 0; j < R; ++j)
      out << fmt(g.phase(i)) << ',' << fmt(g.phase(j)) << ',' << fmt(g.loss[i * R + j]) << ','
          << fmt(g.gradNorm[i * R + j]) << '\n';
}

}  // namespace mra::harness
