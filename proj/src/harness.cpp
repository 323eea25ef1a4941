#include "polylab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "polylab/error.hpp"
#include "polylab/format.hpp"

namespace polylab {

LawSpec LawSpec::parse(std::string_view flag) {
  const auto colon = flag.find(':');
  if (colon == std::string_view::npos) throw ConfigError("law flag must be uniform:lo,hi or table:path.csv");
  LawSpec spec;
  spec.kind = std::string(flag.substr(0, colon));
  const std::string rest(flag.substr(colon + 1));
  if (spec.kind == "uniform") {
    const auto comma = rest.find(',');
    if (comma == std::string::npos) throw ConfigError("uniform law needs lo,hi");
    try {
      std::size_t used = 0;
      const std::string a = rest.substr(0, comma);
      const std::string b = rest.substr(comma + 1);
      spec.lo = std::stod(a, &used);
      if (used != a.size()) throw ConfigError("bad lo");
      spec.hi = std::stod(b, &used);
      if (used != b.size()) throw ConfigError("bad hi");
    } catch (const std::exception&) {
      throw ConfigError("uniform law bounds are not numbers: '" + rest + "'");
    }
    if (!(spec.lo < spec.hi)) throw ConfigError("uniform law needs lo < hi");
  } else if (spec.kind == "table") {
    if (rest.empty()) throw ConfigError("table law needs a CSV path");
    spec.table_path = rest;
  } else {
    throw ConfigError("unknown law kind '" + spec.kind + "'");
  }
  return spec;
}

std::string LawSpec::to_flag() const {
  if (kind == "table") return "table:" + table_path;
  return "uniform:" + format_real(lo) + "," + format_real(hi);
}

EnvironmentLaw LawSpec::build() const {
  if (kind == "uniform") return EnvironmentLaw::uniform(lo, hi);
  if (kind == "table") return EnvironmentLaw::from_table_csv(table_path);
  throw ConfigError("unknown law kind '" + kind + "'");
}

void ExperimentConfig::validate() const {
  if (d < 1) throw ConfigError("config: d must be >= 1");
  if (n < 1) throw ConfigError("config: n must be >= 1");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("config: beta must be finite and >= 0");
  if (replications < 1) throw ConfigError("config: replications must be >= 1");
  if (histogram_bins < 10) throw ConfigError("config: histogram bins must be >= 10");
  if (law.kind != "uniform" && law.kind != "table") throw ConfigError("config: unknown law kind");
}

nlohmann::ordered_json ExperimentConfig::to_json() const {
  nlohmann::ordered_json j;
  j["d"] = d;
  j["n"] = n;
  j["beta"] = beta;
  nlohmann::ordered_json l;
  l["kind"] = law.kind;
  if (law.kind == "table") {
    l["path"] = law.table_path;
  } else {
    l["lo"] = law.lo;
    l["hi"] = law.hi;
  }
  j["law"] = l;
  j["replications"] = replications;
  j["base_seed"] = base_seed;
  j["centered"] = centered;
  j["outputs"] = {{"report_csv", report_csv},
                  {"profiles", profiles},
                  {"histogram_bins", histogram_bins},
                  {"record_timing", record_timing}};
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    c.d = j.value("d", c.d);
    c.n = j.at("n").get<int>();
    c.beta = j.at("beta").get<double>();
    if (j.contains("law")) {
      const auto& l = j.at("law");
      if (l.is_string()) {
        c.law = LawSpec::parse(l.get<std::string>());
      } else {
        c.law.kind = l.at("kind").get<std::string>();
        if (c.law.kind == "table") {
          c.law.table_path = l.at("path").get<std::string>();
        } else {
          c.law.lo = l.at("lo").get<double>();
          c.law.hi = l.at("hi").get<double>();
        }
      }
    }
    c.replications = j.value("replications", c.replications);
    c.base_seed = j.value("base_seed", c.base_seed);
    c.centered = j.value("centered", c.centered);
    if (j.contains("outputs")) {
      const auto& o = j.at("outputs");
      c.report_csv = o.value("report_csv", c.report_csv);
      c.profiles = o.value("profiles", c.profiles);
      c.histogram_bins = o.value("histogram_bins", c.histogram_bins);
      c.record_timing = o.value("record_timing", c.record_timing);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

PolymerInstance ExperimentConfig::instance(int replication) const {
  PolymerInstance inst{d, n, beta, law.build(), replication_seed(base_seed, static_cast<std::uint64_t>(replication)),
                       centered};
  return inst;
}

int worker_count() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  if (const char* cap = std::getenv("POLYLAB_THREADS")) {
    const int c = std::atoi(cap);
    if (c >= 1) hw = std::min(hw, c);
  }
  return hw;
}

void check_record(const ReplicationRecord& r, int d, int n) {
  constexpr double slack = 1e-12;
  const double floor = 1.0 / (std::pow(3.0, d) * n);
  std::ostringstream os;
  os.precision(17);
  if (!(r.rho >= floor && r.rho <= 1.0 + slack)) {
    os << "rho=" << r.rho << " outside [" << floor << ", 1]";
  } else if (!(r.ell > 0.0 && r.ell <= 1.0 + slack)) {
    os << "ell=" << r.ell << " outside (0, 1]";
  } else if (!(r.ell * r.ell <= r.rho + slack && r.rho <= r.ell + slack)) {
    os << "ell^2 <= rho <= ell violated (rho=" << r.rho << ", ell=" << r.ell << ")";
  } else if (!std::isfinite(r.log_partition)) {
    os << "log partition is not finite";
  } else {
    return;
  }
  throw NumericalError("replication " + std::to_string(r.replication) + ": " + os.str());
}

namespace {

ReplicationRecord run_one(const ExperimentConfig& config, const EnvironmentLaw& law, int r) {
  const auto start = std::chrono::steady_clock::now();
  PolymerInstance inst{config.d, config.n, config.beta, law,
                       replication_seed(config.base_seed, static_cast<std::uint64_t>(r)), config.centered};
  const ThetaSolution sol = forward_backward(inst);
  LocalizationReport rep = localization_report(sol, inst, config.profiles);
  ReplicationRecord rec;
  rec.replication = r;
  rec.rho = rep.rho;
  rec.ell = rep.ell;
  rec.log_partition = sol.log_partition;
  if (config.profiles) {
    rec.alpha = std::move(rep.alpha_profile);
    rec.gamma = std::move(rep.gamma_profile);
    rec.tau = std::move(rep.tau_profile);
  }
  if (config.record_timing) {
    rec.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  }
  check_record(rec, config.d, config.n);
  return rec;
}

}  // namespace

std::vector<ReplicationRecord> run_replications(const ExperimentConfig& config, int threads) {
  config.validate();
  const EnvironmentLaw law = config.law.build();
  if (threads <= 0) threads = worker_count();
  threads = std::min(threads, config.replications);
  std::vector<ReplicationRecord> out(static_cast<std::size_t>(config.replications));
  if (threads <= 1) {
    for (int r = 0; r < config.replications; ++r) out[static_cast<std::size_t>(r)] = run_one(config, law, r);
    return out;
  }
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::mutex err_mu;
  std::exception_ptr first_error;
  int first_error_index = config.replications;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int r = next.fetch_add(1); r < config.replications && !failed.load(); r = next.fetch_add(1)) {
        try {
          out[static_cast<std::size_t>(r)] = run_one(config, law, r);
        } catch (...) {
          std::lock_guard lock(err_mu);
          if (r < first_error_index) {
            first_error_index = r;
            first_error = std::current_exception();
          }
          failed.store(true);
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

Histogram histogram(std::span<const double> values, int bins) {
  if (bins < 10) throw ConfigError("histogram needs at least 10 bins");
  Histogram h;
  h.edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int i = 0; i <= bins; ++i) h.edges[static_cast<std::size_t>(i)] = static_cast<double>(i) / bins;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("histogram value outside [0, 1]: " + format_real(v));
    auto b = static_cast<std::size_t>(v * bins);
    h.counts[std::min(b, static_cast<std::size_t>(bins) - 1)] += 1;
  }
  return h;
}

double log_log_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("slope fit needs at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

ScalingStudy scaling_study(int d, std::span<const int> n_grid) {
  if (n_grid.size() < 2) throw ConfigError("scaling study needs at least two path lengths");
  ScalingStudy study;
  study.d = d;
  std::vector<double> xs, ys;
  for (int n : n_grid) {
    PolymerInstance inst{d, n, 0.0, EnvironmentLaw::uniform(-1.0, 1.0), 0, false};
    const auto sol = forward_backward(inst);
    const auto e = ell(sol);
    study.rows.push_back({n, e.ell, rho(sol)});
    xs.push_back(n);
    ys.push_back(e.ell);
  }
  study.slope = log_log_slope(xs, ys);
  return study;
}

TailProbe tail_probe(std::span<const ReplicationRecord> records, std::span<const double> delta_grid, int d, int n) {
  if (records.empty()) throw ConfigError("tail probe needs at least one record");
  TailProbe t;
  t.floor = 1.0 / (std::pow(3.0, d) * n);
  t.min_rho = records.front().rho;
  for (const auto& r : records) t.min_rho = std::min(t.min_rho, r.rho);
  std::vector<double> sorted_delta(delta_grid.begin(), delta_grid.end());
  for (double delta : sorted_delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("tail probe deltas must lie in (0, 1)");
    std::size_t hits = 0;
    for (const auto& r : records) hits += r.rho <= delta ? 1 : 0;
    t.delta.push_back(delta);
    t.probability.push_back(static_cast<double>(hits) / static_cast<double>(records.size()));
  }
  return t;
}

std::vector<double> rho_values(std::span<const ReplicationRecord> records) {
  std::vector<double> v;
  v.reserve(records.size());
  for (const auto& r : records) v.push_back(r.rho);
  return v;
}

Figure1Summary summarize(std::span<const ReplicationRecord> records) {
  if (records.empty()) throw ConfigError("summary needs at least one record");
  Figure1Summary s;
  s.min_rho = records.front().rho;
  s.max_rho = records.front().rho;
  std::size_t low = 0;
  for (const auto& r : records) {
    s.min_rho = std::min(s.min_rho, r.rho);
    s.max_rho = std::max(s.max_rho, r.rho);
    s.mean_rho += r.rho;
    low += r.rho <= 0.05 ? 1 : 0;
  }
  s.mean_rho /= static_cast<double>(records.size());
  s.p_rho_le_005 = static_cast<double>(low) / static_cast<double>(records.size());
  return s;
}

nlohmann::ordered_json to_json(const Figure1Summary& s) {
  nlohmann::ordered_json j;
  j["min_rho"] = s.min_rho;
  j["max_rho"] = s.max_rho;
  j["mean_rho"] = s.mean_rho;
  j["p(rho<=0.05)"] = s.p_rho_le_005;
  return j;
}

void write_report_csv(std::span<const ReplicationRecord> records, std::ostream& out) {
  out << "replication,rho,ell,log_partition,runtime_ms\n";
  for (const auto& r : records) {
    out << r.replication << ',' << format_real(r.rho) << ',' << format_real(r.ell) << ','
        << format_real(r.log_partition) << ',' << format_real(r.runtime_ms) << '\n';
  }
}

void write_profiles_csv(std::span<const ReplicationRecord> records, std::ostream& out) {
  out << "replication,k,alpha,gamma,tau\n";
  for (const auto& r : records) {
    for (std::size_t k = 0; k < r.alpha.size(); ++k) {
      out << r.replication << ',' << (k + 1) << ',' << format_real(r.alpha[k]) << ','
          << format_real(k < r.gamma.size() ? r.gamma[k] : 0.0) << ','
          << format_real(k < r.tau.size() ? r.tau[k] : 0.0) << '\n';
    }
  }
}

void write_histogram_csv(const Histogram& h, std::ostream& out) {
  out << "bin_lo,bin_hi,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    out << format_real(h.edges[i]) << ',' << format_real(h.edges[i + 1]) << ',' << h.counts[i] << '\n';
  }
}

void write_scaling_csv(const ScalingStudy& s, std::ostream& out) {
  out << "n,ell,rho\n";
  for (const auto& r : s.rows) out << r.n << ',' << format_real(r.ell) << ',' << format_real(r.rho) << '\n';
}

void write_tail_csv(const TailProbe& t, std::ostream& out) {
  out << "delta,probability\n";
  for (std::size_t i = 0; i < t.delta.size(); ++i) {
    out << format_real(t.delta[i]) << ',' << format_real(t.probability[i]) << '\n';
  }
}

}  // namespace polylab
