#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "mra/harness/experiments.hpp"

using namespace mra;
using namespace mra::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("mra_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MRA_CLI_PATH) + " -q " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.signal.L = 11;
  c.signal.width = 5;
  c.methods = {Method::mca, Method::bispectrum, Method::templ, Method::oracle};
  c.tauList = {0.1, 1.0};
  c.N = 500;
  c.runs = 3;
  c.seed = 5;
  c.timing = false;
  c.maxIter = 200;
  return c;
}

}  // namespace

TEST(Config, DefaultsAndStrictParsing) {
  const auto c = parse_config(nlohmann::json::object());
  EXPECT_EQ(c.N, 10000u);
  EXPECT_EQ(c.runs, 40u);
  EXPECT_EQ(c.tauList.size(), 15u);
  EXPECT_NEAR(c.tauList.front(), 0.03, 1e-15);
  EXPECT_NEAR(c.tauList.back(), 4.0, 1e-12);
  EXPECT_THROW(parse_config(nlohmann::json{{"Nn", 3}}), ConfigError);
  EXPECT_THROW(parse_config(nlohmann::json{{"signal", {{"kind", "square"}, {"bogus", 1}}}}), ConfigError);
  EXPECT_THROW(parse_config(nlohmann::json{{"method", "gibbs"}}), ConfigError);
  EXPECT_THROW(parse_config(nlohmann::json{{"N", "many"}}), ConfigError);
  EXPECT_THROW(parse_config(nlohmann::json{{"tauList", {-1.0}}}), ConfigError);
  EXPECT_THROW(parse_config(nlohmann::json::array()), ConfigError);
}

TEST(Config, JsonRoundTrip) {
  auto c = small_config();
  c.epsList = {0.1, 0.05};
  c.noiseBias = NoiseBias::unscaled;
  const auto d = parse_config(to_json(c));
  EXPECT_EQ(to_json(d).dump(), to_json(c).dump());
  EXPECT_EQ(d.methods, c.methods);
  EXPECT_EQ(d.tauList, c.tauList);
}

TEST(CsvIo, RunRowsRoundTrip) {
  const double sub = 4.9406564584124654e-324;
  std::vector<RunRecord> rs{
      {"mca", 0.1, 10000, 18446744073709551615ull, 0.0123456789012345678, 12, 0.5, true},
      {"em", 1.0 / 3.0, 16, 0, std::numeric_limits<double>::quiet_NaN(), 0, 0.0, false},
      {"bispectrum", sub, 7, 3, std::numeric_limits<double>::infinity(), 1, 1e-300, true},
  };
  const auto dir = scratch("runs");
  write_runs_csv(dir / "runs.csv", rs);
  const auto back = read_runs_csv(dir / "runs.csv");
  ASSERT_EQ(back.size(), rs.size());
  for (std::size_t i = 0; i < rs.size(); ++i) EXPECT_TRUE(back[i] == rs[i]) << i;
  EXPECT_EQ(slurp(dir / "runs.csv").find(kRunsHeader) != std::string::npos, true);
  for (const auto& r : rs) EXPECT_TRUE(parse_run(format_run(r)) == r);
}

TEST(CsvIo, SamplesAndSignalsRoundTrip) {
  const auto x = square_wave(9, 4);
  const auto d = generate_samples(x, 0.7, 40, 3);
  const auto dir = scratch("samples");
  write_samples_csv(dir / "s.csv", d.samples);
  const auto back = read_samples_csv(dir / "s.csv");
  ASSERT_EQ(back.size(), 40u);
  EXPECT_DOUBLE_EQ(back.tau(), 0.7);
  for (std::size_t i = 0; i < 40; ++i) ASSERT_EQ(back.signal(i).vector(), d.samples.signal(i).vector());
  const std::vector<RealSignal> xs{x, RealSignal{1e-310, -0.1, 1.0 / 7.0}};
  write_signals_csv(dir / "x.csv", xs, true);
  const auto ys = read_signals_csv(dir / "x.csv", true);
  ASSERT_EQ(ys.size(), 2u);
  EXPECT_EQ(ys[1].vector(), xs[1].vector());
  EXPECT_THROW(read_samples_csv(dir / "missing.csv"), std::exception);
}

TEST(Generate, ShiftHistogramAndPrefix) {
  const auto x = square_wave(41, 21);
  const std::size_t N = 100000, L = 41;
  const auto d = generate_samples(x, 1.0, N, 8);
  std::vector<std::size_t> h(L, 0);
  for (auto r : d.shifts) ++h[r];
  const double p = 1.0 / L, mu = N * p, sd = std::sqrt(N * p * (1 - p));
  for (std::size_t k = 0; k < L; ++k) EXPECT_LE(std::abs(h[k] - mu), 5 * sd) << k;
  const auto a = generate_samples(x, 1.0, 100, 8);
  for (std::size_t i = 0; i < 100; ++i) {
    ASSERT_EQ(a.shifts[i], d.shifts[i]);
    ASSERT_EQ(a.samples.signal(i).vector(), d.samples.signal(i).vector());
  }
  const auto b = generate_samples(x, 1.0, 100, 8);
  EXPECT_EQ(a.samples.signal(99).vector(), b.samples.signal(99).vector());
}

TEST(Benchmark, DeterministicAcrossThreadCounts) {
  const auto cfg = small_config();
  parallel::set_threads(1);
  const auto a = run_benchmark(cfg);
  parallel::set_threads(4);
  const auto b = run_benchmark(cfg);
  parallel::set_threads(0);
  ASSERT_EQ(a.size(), cfg.tauList.size() * cfg.runs * cfg.methods.size());
  const auto dir = scratch("bench");
  write_runs_csv(dir / "a.csv", a, false);
  write_runs_csv(dir / "b.csv", b, false);
  EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
  // Ordering: tau, then run, then method.
  EXPECT_EQ(a[0].method, "mca");
  EXPECT_EQ(a[1].method, "bispectrum");
  EXPECT_EQ(a[4].seed, data_seed(cfg.seed, 0, 1));
  EXPECT_DOUBLE_EQ(a.back().tau, 1.0);
  for (const auto& r : a) EXPECT_EQ(r.wallTimeSeconds, 0.0);
  // All methods of one (tau, run) see the same data.
  EXPECT_EQ(a[0].seed, a[3].seed);
}

TEST(Benchmark, FailureBecomesRow) {
  const auto x = square_wave(11, 5);
  GeneratedData d{generate_samples(x, 0.5, 50, 1).samples, {}};
  const auto r = score_run(Method::oracle, d, x, x, small_config(), 9);
  EXPECT_TRUE(std::isnan(r.nrmse));
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 0u);
  EXPECT_EQ(r.wallTimeSeconds, 0.0);
  EXPECT_EQ(r.seed, 9u);
  const auto s = summarize({r, r});
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].failures, 2u);
  EXPECT_TRUE(std::isnan(s[0].median));
}

TEST(Benchmark, OracleErrorLevel) {
  ExperimentConfig c;
  c.methods = {Method::oracle};
  c.tauList = {1.0};
  c.runs = 40;
  c.timing = false;
  std::vector<double> e;
  for (const auto& r : run_benchmark(c)) e.push_back(r.nrmse);
  // Per-entry error tau / sqrt(N) against a signal of norm sqrt(21).
  const double expect = std::sqrt(41.0 / 1e4) / std::sqrt(21.0);
  EXPECT_NEAR(expect, 0.0140, 5e-4);
  const double m = median(e);
  EXPECT_GE(m, 0.5 * expect);
  EXPECT_LE(m, 2.0 * expect);
}

TEST(Benchmark, MCAFewIterationsAtLowNoise) {
  ExperimentConfig c;
  c.methods = {Method::mca};
  c.tauList = {0.05};
  c.runs = 5;
  c.timing = false;
  for (const auto& r : run_benchmark(c)) {
    EXPECT_TRUE(r.converged);
    EXPECT_LE(r.iterations, 5u);
  }
}

TEST(Summary, Quantiles) {
  EXPECT_DOUBLE_EQ(quantile({5, 1, 3, 2, 4}, 0.25), 2.0);
  EXPECT_DOUBLE_EQ(quantile({1, 2}, 0.5), 1.5);
  EXPECT_DOUBLE_EQ(quantile({1, std::nan(""), 3}, 0.5), 2.0);
  EXPECT_DOUBLE_EQ(quantile({7}, 0.95), 7.0);
  EXPECT_TRUE(std::isnan(quantile({}, 0.5)));
  std::vector<double> v(21);
  for (int i = 0; i <= 20; ++i) v[i] = i;
  EXPECT_DOUBLE_EQ(quantile(v, 0.05), 1.0);
  EXPECT_DOUBLE_EQ(quantile(v, 0.95), 19.0);
  std::vector<RunRecord> rs;
  for (int i = 0; i < 4; ++i) rs.push_back({"mca", 1.0, 10, 0, double(i), 2, 0, true});
  rs.push_back({"em", 1.0, 10, 0, 9.0, 3, 0, true});
  const auto s = summarize(rs);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].method, "mca");
  EXPECT_EQ(s[0].runs, 4u);
  EXPECT_DOUBLE_EQ(s[0].median, 1.5);
}

TEST(Efficiency, OracleSlopeAndCensoring) {
  ExperimentConfig c;
  c.signal.L = 11;
  c.signal.width = 5;
  c.methods = {Method::oracle};
  c.tauList = {0.5, 1.0, 2.0};
  c.epsList = {0.1};
  c.Nmax = 1 << 14;
  c.timing = false;
  const auto rep = sample_efficiency(c);
  ASSERT_EQ(rep.rows.size(), 3u);
  for (const auto& r : rep.rows) {
    EXPECT_FALSE(r.censored);
    EXPECT_LE(r.nrmse, 0.1);
  }
  EXPECT_TRUE(efficiency_monotone(rep.rows, 0));
  ASSERT_EQ(rep.slopes.size(), 3u);
  // Averaging with known shifts needs N proportional to tau^2.
  EXPECT_NEAR(rep.slopes[0].slope, 2.0, 0.3);
  EXPECT_EQ(rep.slopes[0].points, 3u);

  c.epsList = {1e-4};
  c.Nmax = 64;
  c.tauList = {1.0};
  const auto cen = sample_efficiency(c);
  EXPECT_TRUE(cen.rows[0].censored);
  EXPECT_EQ(cen.rows[0].N, 64u);
  EXPECT_TRUE(std::isnan(cen.slopes[0].slope));

  const auto dir = scratch("eff");
  write_efficiency_csv(dir / "e.csv", cen.rows);
  EXPECT_NE(slurp(dir / "e.csv").find("censored"), std::string::npos);
}

TEST(Efficiency, MonotoneCountsInversions) {
  std::vector<EfficiencyRow> rows{{"mca", 0.1, 0.1, 100}, {"mca", 0.2, 0.1, 90}, {"mca", 0.3, 0.1, 200},
                                  {"mca", 0.4, 0.1, 150}};
  EXPECT_FALSE(efficiency_monotone(rows, 1));
  rows.pop_back();
  EXPECT_TRUE(efficiency_monotone(rows, 1));
  EXPECT_FALSE(efficiency_monotone(rows, 0));
}

TEST(Cli, ExitCodesAndOutputs) {
  const auto dir = scratch("cli");
  EXPECT_EQ(run_cli("--bogus"), 2);
  EXPECT_EQ(run_cli(""), 2);
  {
    std::ofstream(dir / "bad.json") << R"({"N": 10, "extra": 1})";
  }
  EXPECT_EQ(run_cli("--config " + (dir / "bad.json").string() + " benchmark"), 2);
  {
    std::ofstream(dir / "neg.json") << R"({"runs": 0})";
  }
  EXPECT_EQ(run_cli("--config " + (dir / "neg.json").string() + " benchmark"), 2);

  const auto d = dir.string();
  ASSERT_EQ(run_cli("--seed 3 --out " + d + " generate --tau 0.2 -N 300"), 0);
  EXPECT_TRUE(fs::exists(dir / "samples.csv"));
  ASSERT_EQ(run_cli("--out " + d + " reconstruct --method mca --input " + d + "/samples.csv --truth " + d +
                    "/signal.csv"),
            0);
  const auto rec = read_signal_csv(dir / "reconstruction.csv");
  EXPECT_LE(nrmse(rec, square_wave(41, 21)), 0.1);
  EXPECT_EQ(run_cli("--out " + d + " reconstruct --method oracle --input " + d + "/samples.csv"), 2);
  EXPECT_EQ(run_cli("--out " + d + " reconstruct --method oracle --input " + d + "/samples.csv --shifts " + d +
                    "/shifts.csv"),
            0);

  {
    std::ofstream(dir / "b.json") << R"({"method": ["mca", "oracle"], "tauList": [0.5], "N": 200, "runs": 2,
      "timing": false, "outputDir": ")" + d + R"(/b1"})";
  }
  ASSERT_EQ(run_cli("--threads 1 --config " + d + "/b.json benchmark"), 0);
  fs::rename(dir / "b1", dir / "b0");
  ASSERT_EQ(run_cli("--threads 3 --config " + d + "/b.json benchmark"), 0);
  EXPECT_EQ(slurp(dir / "b0/runs.csv"), slurp(dir / "b1/runs.csv"));
  EXPECT_EQ(read_runs_csv(dir / "b1/runs.csv").size(), 4u);
  EXPECT_TRUE(fs::exists(dir / "b1/summary.csv"));

  ASSERT_EQ(run_cli("--out " + d + " landscape census --resolution 16 -N 2000"), 0);
  EXPECT_TRUE(fs::exists(dir / "census.json"));
  const auto j = nlohmann::json::parse(slurp(dir / "census.json"));
  EXPECT_EQ(j["euler"].get<long long>(), 0);
}

TEST(Config, DefaultGridAndEmptyList) {
  ExperimentConfig c;
  EXPECT_EQ(c.tauList, default_tau_list());
  c.tauList.clear();
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(parse_config(nlohmann::json{{"tauList", nlohmann::json::array()}}), ConfigError);
}
