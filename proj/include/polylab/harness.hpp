#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "polylab/engine.hpp"
#include "polylab/functionals.hpp"

namespace polylab {

// "uniform:lo,hi" or "table:path.csv".
struct LawSpec {
  std::string kind = "uniform";
  double lo = -1.0;
  double hi = 1.0;
  std::string table_path;

  static LawSpec parse(std::string_view flag);
  std::string to_flag() const;
  EnvironmentLaw build() const;
};

struct ExperimentConfig {
  int d = 1;
  int n = 300;
  double beta = 3.0;
  LawSpec law;
  int replications = 1000;
  std::uint64_t base_seed = 1;
  bool centered = false;

  bool report_csv = true;
  bool profiles = false;
  int histogram_bins = 40;
  // runtime_ms is wall-clock and breaks byte-identical output; off by default.
  bool record_timing = false;

  void validate() const;
  nlohmann::ordered_json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  PolymerInstance instance(int replication) const;
};

struct ReplicationRecord {
  int replication = 0;
  double rho = 0.0;
  double ell = 0.0;
  double log_partition = 0.0;
  double runtime_ms = 0.0;
  // Filled only when ExperimentConfig::profiles is set.
  std::vector<double> alpha;
  std::vector<double> gamma;
  std::vector<double> tau;
};

// Worker count: hardware concurrency capped by POLYLAB_THREADS when set.
int worker_count();

// Runs every replication, in parallel when threads > 1; records come back in
// index order and do not depend on the thread count. Throws NumericalError
// naming the replication whose record breaks ell^2 <= rho <= ell or the
// 1/(3^d n) floor.
std::vector<ReplicationRecord> run_replications(const ExperimentConfig& config, int threads = 0);

// Same invariants run_replications enforces; throws NumericalError.
void check_record(const ReplicationRecord& record, int d, int n);

struct Histogram {
  std::vector<double> edges;  // bins + 1 edges on [0, 1]
  std::vector<std::size_t> counts;
};

// Fixed-width bins on [0, 1]; the value 1 falls in the last bin.
Histogram histogram(std::span<const double> values, int bins);

struct ScalingRow {
  int n = 0;
  double ell = 0.0;
  double rho = 0.0;
};

struct ScalingStudy {
  int d = 1;
  std::vector<ScalingRow> rows;
  double slope = 0.0;  // least-squares slope of log ell against log n
};

// beta = 0 makes the Gibbs measure the simple random walk, so one instance
// per n suffices.
ScalingStudy scaling_study(int d, std::span<const int> n_grid);

double log_log_slope(std::span<const double> x, std::span<const double> y);

struct TailProbe {
  std::vector<double> delta;
  std::vector<double> probability;  // empirical P(rho <= delta)
  double min_rho = 0.0;
  double floor = 0.0;  // 1 / (3^d n)
};

TailProbe tail_probe(std::span<const ReplicationRecord> records, std::span<const double> delta_grid, int d, int n);

struct Figure1Summary {
  double min_rho = 0.0;
  double max_rho = 0.0;
  double mean_rho = 0.0;
  double p_rho_le_005 = 0.0;
};

Figure1Summary summarize(std::span<const ReplicationRecord> records);
nlohmann::ordered_json to_json(const Figure1Summary& s);

std::vector<double> rho_values(std::span<const ReplicationRecord> records);

// replication,rho,ell,log_partition,runtime_ms
void write_report_csv(std::span<const ReplicationRecord> records, std::ostream& out);
// replication,k,alpha,gamma,tau
void write_profiles_csv(std::span<const ReplicationRecord> records, std::ostream& out);
// bin_lo,bin_hi,count
void write_histogram_csv(const Histogram& h, std::ostream& out);
// n,ell,rho
void write_scaling_csv(const ScalingStudy& s, std::ostream& out);
// delta,probability
void write_tail_csv(const TailProbe& t, std::ostream& out);

}  // namespace polylab
