// Command-line front end: data generation, reconstruction, sweeps and the
// verification battery. Exit codes: 0 success, 1 check failure or runtime
// error, 2 bad configuration or usage.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "mra/baselines.hpp"
#include "mra/harness/config.hpp"
#include "mra/harness/experiments.hpp"
#include "mra/harness/io.hpp"
#include "mra/landscape.hpp"
#include "mra/mca.hpp"
#include "mra/parallel.hpp"

namespace fs = std::filesystem;
using namespace mra;
using namespace mra::harness;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  unsigned threads = 1;
  std::optional<double> tol;
  std::string config;
  bool quiet = false;
};

ExperimentConfig base_config(const Globals& g) {
  ExperimentConfig c;
  if (!g.config.empty()) c = load_config(g.config);
  if (g.seed) c.seed = *g.seed;
  if (g.tol) c.tol = *g.tol;
  if (g.out != ".") c.outputDir = g.out;
  c.validate();
  return c;
}

void write_json(const fs::path& p, const nlohmann::json& j) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw MraError("cannot write " + p.string());
  out << j.dump(2) << '\n';
}

std::vector<std::size_t> read_shifts(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw MraError("cannot open " + p.string());
  std::vector<std::size_t> s;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') s.push_back(parse_uint(line));
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multireference alignment toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)");
  app.add_option("--tol", g.tol, "Convergence tolerance for iterative methods");
  app.add_option("--config", g.config, "Experiment config JSON")->check(CLI::ExistingFile);
  app.add_flag("-q,--quiet", g.quiet, "No progress output");

  // generate
  auto* gen = app.add_subcommand("generate", "Draw shifted noisy samples of the configured signal");
  double gen_tau = 1.0;
  std::optional<std::size_t> gen_n;
  gen->add_option("--tau", gen_tau, "Noise level")->check(CLI::NonNegativeNumber);
  gen->add_option("-N,--samples", gen_n, "Number of samples (default: config N)");

  // reconstruct
  auto* rec = app.add_subcommand("reconstruct", "Reconstruct a signal from a sample file");
  std::string rec_method = "mca", rec_in, rec_shifts, rec_templ, rec_truth;
  rec->add_option("--method", rec_method, "mca|em|bispectrum|template|oracle")
      ->check(CLI::IsMember({"mca", "em", "bispectrum", "template", "oracle"}));
  rec->add_option("--input", rec_in, "Sample CSV")->required()->check(CLI::ExistingFile);
  rec->add_option("--shifts", rec_shifts, "True shifts, one per line (oracle)")->check(CLI::ExistingFile);
  rec->add_option("--template", rec_templ, "Template signal CSV (template)")->check(CLI::ExistingFile);
  rec->add_option("--truth", rec_truth, "True signal CSV; reports NRMSE")->check(CLI::ExistingFile);

  // benchmark / efficiency
  auto* bench = app.add_subcommand("benchmark", "NRMSE and wall time over the tau grid");
  auto* eff = app.add_subcommand("efficiency", "Samples needed to reach each target error");

  // landscape
  auto* land = app.add_subcommand("landscape", "Loss landscape on the two-torus example");
  land->require_subcommand(1);
  double land_tau = 1.0;
  std::size_t land_n = 100000, land_res = 256, land_m = 1000000, land_smooth = 0;
  auto* grid = land->add_subcommand("grid", "Write the loss grid CSV");
  auto* census = land->add_subcommand("census", "Count critical cells of the loss grid");
  auto* lver = land->add_subcommand("verify", "Check every sign candidate is critical");
  for (auto* s : {grid, census}) {
    s->add_option("--tau", land_tau, "Noise level")->check(CLI::PositiveNumber);
    s->add_option("-N,--samples", land_n, "Samples shared by every grid cell");
    s->add_option("--resolution", land_res, "Cells per axis")->check(CLI::Range(4, 4096));
  }
  census->add_option("--smooth", land_smooth, "Box window before the census (odd, 0 = none)");
  lver->add_option("--tau", land_tau, "Noise level")->check(CLI::PositiveNumber);
  lver->add_option("-M,--mc", land_m, "Monte Carlo draws");

  // verify
  auto* ver = app.add_subcommand("verify", "Run the theory verification battery");
  bool ver_quick = false;
  ver->add_flag("--quick", ver_quick, "Census at resolution 64 instead of 256");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    parallel::set_threads(g.threads);
    const fs::path out = g.out;
    auto log = [&](const std::string& s) {
      if (!g.quiet) std::cerr << s << '\n';
    };

    if (*gen) {
      auto cfg = base_config(g);
      const auto x = make_signal(cfg.signal);
      const auto data = generate_samples(x, gen_tau, gen_n.value_or(cfg.N), cfg.seed);
      write_samples_csv(out / "samples.csv", data.samples);
      write_signals_csv(out / "signal.csv", {x});
      std::ofstream sh(out / "shifts.csv");
      for (auto r : data.shifts) sh << r << '\n';
      log("wrote " + (out / "samples.csv").string());
      return 0;
    }

    if (*rec) {
      auto cfg = base_config(g);
      const Method m = parse_method(rec_method);
      GeneratedData data{read_samples_csv(rec_in), {}};
      if (!rec_shifts.empty()) data.shifts = read_shifts(rec_shifts);
      RealSignal templ;
      if (m == Method::templ) {
        if (rec_templ.empty()) throw ConfigError("template method needs --template");
        templ = read_signal_csv(rec_templ);
      }
      if (m == Method::oracle && rec_shifts.empty()) throw ConfigError("oracle method needs --shifts");
      const auto res = run_method(m, data, templ, cfg, method_seed(cfg.seed, m));
      write_signals_csv(out / "reconstruction.csv", {res.signal});
      nlohmann::json j{{"method", rec_method},
                       {"iterations", res.iterations},
                       {"converged", res.converged},
                       {"wall_s", res.wallTimeSeconds}};
      if (!res.warning.empty()) j["warning"] = res.warning;
      if (!rec_truth.empty()) j["nrmse"] = nrmse(res.signal, read_signal_csv(rec_truth));
      std::cout << j.dump() << '\n';
      return 0;
    }

    if (*bench) {
      auto cfg = base_config(g);
      const fs::path dir = cfg.outputDir;
      const auto rows = run_benchmark(cfg, [&](std::size_t d, std::size_t n) {
        if (!g.quiet) std::cerr << "\rjob " << d << '/' << n << std::flush;
      });
      if (!g.quiet) std::cerr << '\n';
      write_runs_csv(dir / "runs.csv", rows, cfg.timing);
      write_summary_csv(dir / "summary.csv", summarize(rows));
      write_json(dir / "config.json", to_json(cfg));
      log("wrote " + (dir / "runs.csv").string() + " and summary.csv");
      return 0;
    }

    if (*eff) {
      auto cfg = base_config(g);
      const fs::path dir = cfg.outputDir;
      const auto rep = sample_efficiency(cfg, default_slope_ranges(), [&](const EfficiencyRow& r) {
        log(r.method + " tau=" + fmt(r.tau) + " eps=" + fmt(r.eps) + " N=" + std::to_string(r.N) +
            (r.censored ? " (censored)" : ""));
      });
      write_efficiency_csv(dir / "efficiency.csv", rep.rows);
      write_slopes_csv(dir / "slopes.csv", rep.slopes);
      write_json(dir / "config.json", to_json(cfg));
      return 0;
    }

    if (*land) {
      const std::uint64_t seed = g.seed.value_or(7);
      const RealSignal x = two_torus_example();
      if (*lver) {
        const auto c = check_critical(seed, land_m, land_tau);
        write_json(out / "critical.json", c.details);
        std::cout << (c.passed ? "PASS" : "FAIL") << ' ' << c.name << '\n';
        return c.passed ? 0 : 1;
      }
      const auto tg = torus_loss_grid(x, land_tau, land_n, land_res, seed);
      if (*grid) {
        write_grid_csv(out / "grid.csv", tg);
        log("wrote " + (out / "grid.csv").string());
        return 0;
      }
      const auto c = morse_census(tg, land_smooth);
      nlohmann::json j{{"minima", c.minima},       {"saddles", c.saddles},   {"maxima", c.maxima},
                       {"euler", c.euler()},       {"unresolved", c.tieBroken}, {"resolution", land_res},
                       {"smoothing", land_smooth}, {"tau", land_tau},        {"N", land_n}};
      write_json(out / "census.json", j);
      std::cout << j.dump() << '\n';
      return 0;
    }

    if (*ver) {
      VerifyOptions o;
      if (g.seed) o.seed = *g.seed;
      if (ver_quick) o.censusResolution = 64;
      const auto rep = verify_suite(o, [&](const CheckResult& c) {
        log(std::string(c.passed ? "PASS " : (c.hard ? "FAIL " : "WARN ")) + c.name + " (" + fmt(c.seconds) + " s)");
      });
      write_json(out / "verify.json", rep.to_json());
      return rep.passed() ? 0 : 1;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
