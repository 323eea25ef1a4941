#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "polylab/env.hpp"
#include "polylab/error.hpp"
#include "polylab/format.hpp"
#include "polylab/harness.hpp"
#include "polylab/verify.hpp"

using namespace polylab;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct ExperimentFlags {
  std::string config_path;
  std::optional<int> d;
  std::optional<int> n;
  std::optional<double> beta;
  std::optional<std::string> law;
  std::optional<int> reps;
  std::optional<std::uint64_t> seed;
  bool centered = false;
  std::vector<CLI::Option*> inline_options;
};

void add_experiment_flags(CLI::App* cmd, ExperimentFlags& f, const std::string& defaults_note) {
  auto* config = cmd->add_option("--config", f.config_path, "JSON experiment config")->check(CLI::ExistingFile);
  f.inline_options = {
      cmd->add_option("--d", f.d, "lattice dimension" + defaults_note),
      cmd->add_option("--n", f.n, "polymer length"),
      cmd->add_option("--beta", f.beta, "inverse temperature"),
      cmd->add_option("--law", f.law, "environment law: uniform:lo,hi or table:path.csv"),
      cmd->add_option("--reps", f.reps, "number of replications"),
      cmd->add_option("--seed", f.seed, "base seed"),
      cmd->add_flag("--centered", f.centered, "subtract the law mean from every environment value"),
  };
  for (auto* o : f.inline_options) config->excludes(o);
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  return out;
}

// Inline flags override the given base config; a config file replaces it.
ExperimentConfig resolve(const ExperimentFlags& f, ExperimentConfig base, bool require_core) {
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(f.config_path + ": " + e.what());
    }
    auto c = ExperimentConfig::from_json(j);
    c.validate();
    return c;
  }
  if (require_core) {
    if (!f.n) throw ConfigError("--n is required (or --config)");
    if (!f.beta) throw ConfigError("--beta is required (or --config)");
    if (!f.law) throw ConfigError("--law is required (or --config)");
  }
  if (f.d) base.d = *f.d;
  if (f.n) base.n = *f.n;
  if (f.beta) base.beta = *f.beta;
  if (f.law) base.law = LawSpec::parse(*f.law);
  if (f.reps) base.replications = *f.reps;
  if (f.seed) base.base_seed = *f.seed;
  if (f.centered) base.centered = true;
  base.validate();
  return base;
}

struct SimulateFlags {
  ExperimentFlags exp;
  std::string out;
  std::string profiles;
  std::string histogram;
  int bins = 40;
  bool timing = false;
};

int run_simulate(const SimulateFlags& f) {
  ExperimentConfig base;
  base.d = 1;
  base.replications = 1;
  base.base_seed = 0;
  ExperimentConfig cfg = resolve(f.exp, base, true);
  cfg.profiles = !f.profiles.empty();
  cfg.record_timing = f.timing;
  cfg.histogram_bins = f.bins;
  cfg.validate();
  const auto records = run_replications(cfg);
  {
    auto out = open_output(f.out);
    write_report_csv(records, out);
  }
  if (!f.profiles.empty()) {
    auto out = open_output(f.profiles);
    write_profiles_csv(records, out);
  }
  if (!f.histogram.empty()) {
    auto out = open_output(f.histogram);
    const auto rhos = rho_values(records);
    write_histogram_csv(histogram(rhos, cfg.histogram_bins), out);
  }
  std::cout << "wrote " << records.size() << " replications to " << f.out << '\n';
  return 0;
}

struct Figure1Flags {
  ExperimentFlags exp;
  std::string histogram = "figure1_histogram.csv";
  std::string summary = "figure1_summary.json";
  std::string report;
  std::string tail;
  int bins = 40;
};

int run_figure1(const Figure1Flags& f) {
  ExperimentConfig cfg = resolve(f.exp, ExperimentConfig{}, false);
  cfg.histogram_bins = f.bins;
  cfg.validate();
  const auto records = run_replications(cfg);
  const auto rhos = rho_values(records);
  {
    auto out = open_output(f.histogram);
    write_histogram_csv(histogram(rhos, cfg.histogram_bins), out);
  }
  const auto summary = summarize(records);
  nlohmann::ordered_json j = to_json(summary);
  j["config"] = cfg.to_json();
  {
    auto out = open_output(f.summary);
    out << j.dump(2) << '\n';
  }
  if (!f.report.empty()) {
    auto out = open_output(f.report);
    write_report_csv(records, out);
  }
  if (!f.tail.empty()) {
    const std::vector<double> deltas{0.001, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5};
    auto out = open_output(f.tail);
    write_tail_csv(tail_probe(records, deltas, cfg.d, cfg.n), out);
  }
  std::cout << to_json(summary).dump() << '\n';
  return 0;
}

struct ScalingFlags {
  int d = 1;
  std::vector<int> n_grid;
  std::string out;
};

int run_scaling(const ScalingFlags& f) {
  std::vector<int> grid = f.n_grid;
  if (grid.empty()) grid = f.d == 1 ? std::vector<int>{64, 128, 256, 512, 1024} : std::vector<int>{8, 16, 32};
  const auto study = scaling_study(f.d, grid);
  if (!f.out.empty()) {
    auto out = open_output(f.out);
    write_scaling_csv(study, out);
  }
  write_scaling_csv(study, std::cout);
  std::cout << "slope," << format_real(study.slope) << '\n';
  return 0;
}

struct EnvCheckFlags {
  std::string law = "uniform:-1,1";
  std::vector<int> dims{1, 2, 3};
  int grid = 11;
};

int run_env_check(const EnvCheckFlags& f) {
  if (f.grid < 1) throw ConfigError("--grid must be positive");
  const auto law = LawSpec::parse(f.law).build();
  std::cout << "law " << law.name() << " on (" << format_real(law.lo()) << ", " << format_real(law.hi())
            << "), mean " << format_real(law.mean()) << '\n';
  std::cout << "x,h\n";
  for (double x : interior_grid(law, f.grid)) std::cout << format_real(x) << ',' << format_real(law.h(x)) << '\n';
  std::cout << "K," << format_real(poincare_constant(law)) << '\n';
  for (int d : f.dims) std::cout << "kappa(d=" << d << ")," << format_real(kappa(law, d)) << '\n';
  const auto diag = validate_law(law);
  std::cout << "density_integral," << format_real(diag.density_integral) << '\n'
            << "centered_moment," << format_real(diag.centered_moment) << '\n'
            << "min_h," << format_real(diag.min_h) << '\n'
            << "max_abs_h_prime," << format_real(diag.max_abs_h_prime) << '\n';
  for (const auto& p : diag.problems) std::cout << "problem: " << p << '\n';
  std::cout << (diag.ok ? "ok" : "FAILED") << '\n';
  return diag.ok ? 0 : kExitNumerical;
}

struct VerifyFlags {
  std::string report;
  bool perturb = false;
};

int run_verify(const VerifyFlags& f) {
  VerifyOptions options;
  options.perturb_theta = f.perturb;
  const auto report = run_verification(options);
  const std::string text = report.to_json().dump(2);
  if (f.report.empty()) {
    std::cout << text << '\n';
  } else {
    auto out = open_output(f.report);
    out << text << '\n';
  }
  for (const auto& c : report.checks) {
    std::cerr << (c.passed ? "PASS " : "FAIL ") << c.family << '/' << c.name << '\n';
  }
  if (const auto* bad = report.first_failure()) {
    std::cerr << "verify failed: " << bad->family << " (" << bad->name << "): " << bad->detail << '\n';
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"polylab: directed polymers in a random environment"};
  app.require_subcommand(1);

  SimulateFlags sim;
  auto* simulate = app.add_subcommand("simulate", "run replications and write the report CSV");
  add_experiment_flags(simulate, sim.exp, " (default 1)");
  simulate->add_option("--out", sim.out, "report CSV path")->required();
  simulate->add_option("--profiles", sim.profiles, "write per-step alpha, gamma, tau CSV here");
  simulate->add_option("--histogram", sim.histogram, "write a rho histogram CSV here");
  simulate->add_option("--bins", sim.bins, "histogram bins (>= 10)")->capture_default_str();
  simulate->add_flag("--timing", sim.timing, "record runtime_ms (output is then not reproducible)");

  Figure1Flags fig;
  auto* figure1 = app.add_subcommand("figure1", "rho histogram for d=1, n=300, beta=3, Uniform[-1,1], 1000 reps");
  add_experiment_flags(figure1, fig.exp, "");
  figure1->add_option("--histogram", fig.histogram, "histogram CSV path")->capture_default_str();
  figure1->add_option("--summary", fig.summary, "summary JSON path")->capture_default_str();
  figure1->add_option("--out", fig.report, "also write the report CSV here");
  figure1->add_option("--tail", fig.tail, "write the empirical P(rho <= delta) table here");
  figure1->add_option("--bins", fig.bins, "histogram bins (>= 10)")->capture_default_str();

  ScalingFlags sc;
  auto* scaling = app.add_subcommand("scaling", "beta = 0 study of ell against n");
  scaling->add_option("--d", sc.d, "lattice dimension")->capture_default_str();
  scaling->add_option("--n-grid", sc.n_grid, "polymer lengths (default 64..1024 for d=1, 8,16,32 otherwise)")
      ->delimiter(',');
  scaling->add_option("--out", sc.out, "scaling CSV path");

  EnvCheckFlags ec;
  auto* env_check = app.add_subcommand("env-check", "print h on a grid, K, kappa(d) and law diagnostics");
  env_check->add_option("--law", ec.law, "environment law")->capture_default_str();
  env_check->add_option("--dims", ec.dims, "dimensions for kappa")->delimiter(',');
  env_check->add_option("--grid", ec.grid, "number of interior grid points for h")->capture_default_str();

  VerifyFlags vf;
  auto* verify = app.add_subcommand("verify", "run the oracle and property battery");
  verify->add_option("--report", vf.report, "write the JSON check report here instead of stdout");
  verify->add_flag("--inject-theta-perturbation", vf.perturb)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*simulate) return run_simulate(sim);
    if (*figure1) return run_figure1(fig);
    if (*scaling) return run_scaling(sc);
    if (*env_check) return run_env_check(ec);
    if (*verify) return run_verify(vf);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitConfig;
}
