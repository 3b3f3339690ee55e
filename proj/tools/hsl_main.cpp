// Command-line surface: configuration resolution (defaults, JSON config
// file, HSL_-prefixed environment, explicit flags), experiment execution,
// and CSV/JSONL/JSON persistence with content digests.

#include <chrono>
#include <csignal>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hsl/acceptance.hpp"
#include "hsl/diagram.hpp"
#include "hsl/errors.hpp"
#include "hsl/field.hpp"
#include "hsl/hermite.hpp"
#include "hsl/io.hpp"
#include "hsl/rates.hpp"
#include "hsl/rng.hpp"
#include "hsl/spectral_graph.hpp"
#include "hsl/sphere.hpp"
#include "hsl/stats.hpp"

namespace {

using hsl::ExperimentConfig;
using nlohmann::json;

// Set by SIGINT/SIGTERM; long-running loops stop at the next degree
// boundary so completed blocks stay on disk.
volatile std::sig_atomic_t g_interrupted = 0;
extern "C" void on_interrupt(int) { g_interrupted = 1; }

std::string iso_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(
      std::chrono::system_clock::now());
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

// Writes payload files and the manifest of result records for one command.
class OutputSink {
 public:
  OutputSink(const ExperimentConfig& cfg, std::string command)
      : dir_(cfg.out_dir), command_(std::move(command)), hash_(hsl::config_hash(cfg)) {
    std::filesystem::create_directories(dir_);
  }

  std::string path(const std::string& leaf) const { return dir_ + "/" + leaf; }

  // Manifest records name payloads by leaf: the manifest sits in the same
  // directory, so archived output stays verifiable after a move.
  void write_text(const std::string& leaf, const std::string& content) {
    const std::string p = path(leaf);
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file " + p);
    out << content;
    out.flush();
    records_.push_back({command_ + "/" + leaf, iso_timestamp(), hash_, leaf,
                        hsl::sha256_hex(content)});
  }

  // Opens a payload for incremental writing; callers flush as blocks
  // complete and call record_file() once the stream is closed.
  std::ofstream open_payload(const std::string& leaf) const {
    const std::string p = path(leaf);
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file " + p);
    return out;
  }

  void record_file(const std::string& leaf) {
    records_.push_back({command_ + "/" + leaf, iso_timestamp(), hash_, leaf,
                        hsl::sha256_file_hex(path(leaf))});
  }

  // The manifest carries the timestamps; payloads stay byte-identical
  // across reruns of the same config and seed.
  void finish() {
    const std::string p = path(command_ + "_manifest.jsonl");
    std::ofstream out(p, std::ios::binary);
    for (const auto& r : records_) out << hsl::record_to_json(r) << "\n";
    std::fprintf(stderr, "%s: wrote %zu payload file(s) + manifest %s\n",
                 command_.c_str(), records_.size(), p.c_str());
  }

  const std::string& config_hash() const { return hash_; }

 private:
  std::string dir_, command_, hash_;
  std::vector<hsl::ResultRecord> records_;
};

std::string fd(double v) { return hsl::format_double(v); }

// ----------------------------------------------------------------- moments

int cmd_moments(const ExperimentConfig& cfg) {
  OutputSink sink(cfg, "moments");
  std::ostringstream csv;
  csv << "d,ell,q,moment,asymptote,ratio\r\n";
  for (const int ell : cfg.ell_list) {
    for (int q = 2; q <= 5; ++q) {
      const double m = hsl::sphere_moment(cfg.d, ell, q);
      const double a = hsl::moment_asymptote(cfg.d, q, ell);
      csv << cfg.d << ',' << ell << ',' << q << ',' << fd(m) << ',' << fd(a) << ','
          << fd(a != 0.0 ? m / a : 0.0) << "\r\n";
    }
  }
  sink.write_text("moments.csv", csv.str());

  json summary;
  summary["command"] = "moments";
  summary["config_hash"] = sink.config_hash();
  summary["d"] = cfg.d;
  summary["ell_list"] = cfg.ell_list;
  sink.write_text("moments_summary.json", summary.dump(2) + "\n");
  sink.finish();
  return 0;
}

// ----------------------------------------------------------------- diagram

void sorted_tuples(int n, int lo, int hi, std::vector<int>& cur,
                   const std::function<void(const std::vector<int>&)>& emit) {
  if (static_cast<int>(cur.size()) == n) {
    emit(cur);
    return;
  }
  const int start = cur.empty() ? lo : cur.back();
  for (int v = start; v <= hi; ++v) {
    cur.push_back(v);
    sorted_tuples(n, lo, hi, cur, emit);
    cur.pop_back();
  }
}

int cmd_diagram(const ExperimentConfig& cfg) {
  OutputSink sink(cfg, "diagram");
  std::ostringstream csv;
  csv << "n,q,kappa_count,identity_ok\r\n";
  bool all_ok = true;
  for (int n = 1; n <= 3; ++n) {
    hsl::WickTable table(n);
    std::vector<int> cur;
    sorted_tuples(n, 1, 4, cur, [&](const std::vector<int>& q) {
      long count = 0;
      // One row has no admissible index arrays; both routes give the empty sum.
      if (n >= 2) hsl::enumerate_A(q, [&](const hsl::DiagramIndex&) { ++count; });
      const hsl::PairPoly lhs =
          (n >= 2) ? hsl::diagram_polynomial(q) : hsl::PairPoly{};
      const bool ok = (lhs == table.hermite_product(q));
      all_ok = all_ok && ok;
      std::string qs;
      for (size_t i = 0; i < q.size(); ++i) qs += (i ? " " : "") + std::to_string(q[i]);
      csv << n << ',' << hsl::csv_field(qs) << ',' << count << ','
          << (ok ? "true" : "false") << "\r\n";
    });
  }
  sink.write_text("diagram.csv", csv.str());

  json summary;
  summary["command"] = "diagram";
  summary["config_hash"] = sink.config_hash();
  summary["identity_ok"] = all_ok;
  sink.write_text("diagram_summary.json", summary.dump(2) + "\n");
  sink.finish();
  return all_ok ? 0 : 1;
}

// ---------------------------------------------------------- graph-integral

int cmd_graph_integral(const ExperimentConfig& cfg) {
  OutputSink sink(cfg, "graph_integral");

  std::vector<int> even_ells;
  for (const int ell : cfg.ell_list)
    if (ell % 2 == 0 && ell >= 4) even_ells.push_back(ell);
  if (even_ells.empty()) {
    std::fprintf(stderr, "graph-integral: need even degrees >= 4 in --ell\n");
    return 2;
  }

  std::ostringstream gaunt;
  gaunt << "case,ell,e1,e2,e3,lhs,rhs_product,ratio\r\n";
  for (const int ell : even_ells) {
    for (int p = 2; p <= 4; ++p)
      for (int q = 2; q <= 4; ++q) {
        const auto g = hsl::gaunt_identity_check(cfg.d, ell, hsl::GauntCase::A1, p, q);
        gaunt << "A1," << ell << ',' << p << ',' << q << ",," << fd(g.lhs) << ','
              << fd(g.rhs_product) << ',' << fd(g.ratio) << "\r\n";
      }
    for (int q1 = 2; q1 <= 4; ++q1)
      for (int q2 = 2; q2 <= 4; ++q2)
        for (int q3 = 1; q3 <= 4; ++q3) {
          const auto g =
              hsl::gaunt_identity_check(cfg.d, ell, hsl::GauntCase::B, q1, q2, q3);
          gaunt << "B," << ell << ',' << q1 << ',' << q2 << ',' << q3 << ','
                << fd(g.lhs) << ',' << fd(g.rhs_product) << ',' << fd(g.ratio) << "\r\n";
        }
    for (int p1 = 2; p1 <= 4; ++p1)
      for (int p2 = 2; p2 <= 4; ++p2)
        for (int p3 = 0; p3 <= 4; ++p3) {
          const auto g =
              hsl::gaunt_identity_check(cfg.d, ell, hsl::GauntCase::C, p1, p2, p3);
          gaunt << "C," << ell << ',' << p1 << ',' << p2 << ',' << p3 << ','
                << fd(g.lhs) << ',' << fd(g.rhs_product) << ',' << fd(g.ratio) << "\r\n";
        }
  }
  sink.write_text("gaunt_ratios.csv", gaunt.str());

  std::ostringstream scan;
  scan << "ell,q1,q2,q3,q4,kappa,R,N,value,scaled,std_error,spectral\r\n";
  for (const int ell : even_ells) {
    const auto rows = hsl::prop_I_scan({ell}, 3, 100000, cfg.seed, cfg.mc_samples);
    for (const auto& row : rows) {
      std::string kap;
      for (size_t i = 0; i < row.kappa_upper.size(); ++i)
        kap += (i ? " " : "") + std::to_string(row.kappa_upper[i]);
      scan << row.ell << ',' << row.q[0] << ',' << row.q[1] << ',' << row.q[2] << ','
           << row.q[3] << ',' << hsl::csv_field(kap) << ',' << row.R << ',' << row.N
           << ',' << fd(row.value) << ',' << fd(row.scaled) << ','
           << fd(row.std_error) << ',' << (row.spectral ? "true" : "false") << "\r\n";
    }
  }
  sink.write_text("quartet_scan.csv", scan.str());

  json summary;
  summary["command"] = "graph-integral";
  summary["config_hash"] = sink.config_hash();
  summary["ell_list"] = even_ells;
  summary["scan_q_max"] = 3;
  sink.write_text("graph_integral_summary.json", summary.dump(2) + "\n");
  sink.finish();
  return 0;
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const ExperimentConfig& cfg) {
  OutputSink sink(cfg, "simulate");
  const hsl::ChaosSpec spec = hsl::make_chaos(cfg);
  const hsl::BackendChoice backend = hsl::backend_choice(cfg);

  std::ofstream lines = sink.open_payload("samples.jsonl");
  json summary;
  summary["command"] = "simulate";
  summary["config_hash"] = sink.config_hash();
  summary["per_ell"] = json::array();
  for (const int ell : cfg.ell_list) {
    if (g_interrupted) {
      summary["interrupted_before_ell"] = ell;
      break;
    }
    const hsl::AnalyticMoments am = hsl::analytic_moments(cfg.d, ell, spec);
    bool want_sigma = (cfg.d == 2);
    std::vector<hsl::StatSample> rows;
    try {
      rows = hsl::run_replicates(cfg.d, ell, spec, cfg.reps, cfg.seed, want_sigma,
                                 cfg.oversample, cfg.threads, backend);
    } catch (const std::domain_error&) {
      if (!want_sigma) throw;  // not the sigma path: a real sampler error
      want_sigma = false;      // sigma-path budget exceeded: drop sigma, keep X
      rows = hsl::run_replicates(cfg.d, ell, spec, cfg.reps, cfg.seed, false,
                                 cfg.oversample, cfg.threads, backend);
    }
    hsl::RunningMoments xacc, sacc;
    for (const hsl::StatSample& s : rows) {
      json rec;
      rec["ell"] = s.ell;
      rec["seed"] = s.seed;
      rec["replicate"] = s.replicate;
      rec["X"] = s.X;
      rec["Xtilde"] = s.Xtilde;
      rec["sigma"] = s.sigma;  // NaN serializes as null when not computed
      lines << rec.dump() << "\n";
      xacc.add(s.X);
      if (want_sigma) sacc.add(s.sigma);
    }
    json per;
    per["ell"] = ell;
    per["analytic_mean"] = am.mean;
    per["analytic_variance"] = am.variance;
    per["analytic_sigma_mean"] = am.sigma_mean;
    per["eta_rate"] = am.eta_rate;
    per["mc_mean_X"] = xacc.mean;
    per["mc_var_X"] = xacc.variance();
    if (want_sigma) {
      per["mc_mean_sigma"] = sacc.mean;
      per["mc_var_sigma"] = sacc.variance();
    }
    summary["per_ell"].push_back(per);
    lines.flush();  // completed degree blocks survive an interrupt
  }
  lines.close();
  sink.record_file("samples.jsonl");
  sink.write_text("simulate_summary.json", summary.dump(2) + "\n");
  sink.finish();
  return g_interrupted ? 130 : 0;
}

// ------------------------------------------------------------------- rates

int cmd_rates(const ExperimentConfig& cfg) {
  OutputSink sink(cfg, "rates");
  const hsl::ChaosSpec spec = hsl::make_chaos(cfg);

  std::ofstream csv = sink.open_payload("rates.csv");
  csv << "ell,n_samples,w1,w1_err,tv_proxy,bandwidth\r\n";
  csv.flush();
  hsl::RateSeries w1_series;
  hsl::RateSeries tv_series;
  for (const int ell : cfg.ell_list) {
    if (g_interrupted) break;
    const auto rows =
        hsl::run_replicates(cfg.d, ell, spec, cfg.reps, cfg.seed, false,
                            cfg.oversample, cfg.threads, hsl::backend_choice(cfg));
    std::vector<double> xt(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) xt[i] = rows[i].Xtilde;

    const double w1 = hsl::wasserstein1_to_gauss(xt);
    // Bootstrap error bar, deterministic in the master seed.
    const int kBoot = 32;
    hsl::RunningMoments boot;
    hsl::RandomStream rs(cfg.seed ^ 0xB007B007ULL, static_cast<uint64_t>(ell));
    for (int b = 0; b < kBoot; ++b) {
      std::vector<double> res(xt.size());
      for (size_t i = 0; i < xt.size(); ++i)
        res[i] = xt[static_cast<size_t>(rs.uniform() * xt.size()) % xt.size()];
      boot.add(hsl::wasserstein1_to_gauss(std::move(res)));
    }
    const double w1_err = std::sqrt(boot.variance());
    const double tv = hsl::smoothed_tv_to_gauss(xt, cfg.bandwidth);

    csv << ell << ',' << rows.size() << ',' << fd(w1) << ',' << fd(w1_err) << ','
        << fd(tv) << ',' << fd(cfg.bandwidth) << "\r\n";
    csv.flush();  // completed degree rows survive an interrupt
    w1_series.points.push_back({ell, w1, w1_err});
    tv_series.points.push_back({ell, tv, 0.0});
  }
  csv.close();
  sink.record_file("rates.csv");

  json fit;
  fit["command"] = "rates";
  fit["config_hash"] = sink.config_hash();
  if (g_interrupted) fit["interrupted"] = true;
  if (w1_series.points.size() >= 4) {
    hsl::rate_fit(w1_series);
    fit["w1"] = {{"slope", w1_series.slope},
                 {"intercept", w1_series.intercept},
                 {"slope_err", w1_series.slope_err},
                 {"theory_slope", hsl::theory_slope_xtilde()}};
    hsl::rate_fit(tv_series);
    fit["tv_proxy"] = {{"slope", tv_series.slope},
                       {"intercept", tv_series.intercept},
                       {"slope_err", tv_series.slope_err}};
  } else {
    fit["note"] = "need at least 4 degrees for a rate fit";
  }
  sink.write_text("rates_fit.json", fit.dump(2) + "\n");
  sink.finish();
  return g_interrupted ? 130 : 0;
}

// ------------------------------------------------------------------ verify

int cmd_verify(const ExperimentConfig& cfg, const std::string& data_dir,
               const std::string& only_csv) {
  OutputSink sink(cfg, "verify");
  std::vector<int> ids;
  if (only_csv.empty()) {
    for (int id = 1; id <= 12; ++id) ids.push_back(id);
  } else {
    ids = hsl::parse_int_list(only_csv);
    for (int id : ids)
      if (id < 1 || id > 12)
        throw std::runtime_error("verify --only: criterion ids run 1..12, got " +
                                 std::to_string(id));
  }
  std::vector<hsl::CriterionResult> results;
  for (int id : ids) {
    if (g_interrupted) break;
    auto part = hsl::run_acceptance({id}, cfg.threads, data_dir);
    for (auto& r : part) {
      std::puts(hsl::format_result_line(r).c_str());
      std::fflush(stdout);
      results.push_back(std::move(r));
    }
  }
  sink.write_text("verify_summary.json", hsl::acceptance_summary_json(results) + "\n");
  sink.finish();
  if (g_interrupted) return 130;
  return hsl::all_pass(results) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random hyperspherical-harmonic functionals: simulation, exact "
               "moment engines, and convergence-rate measurement"};
  app.require_subcommand(1);
  app.fallthrough();  // shared flags may follow the subcommand name

  std::string config_path, out_dir, ell_csv, data_dir;
  uint64_t seed = 0;
  int threads = 0, reps = 0;

  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--seed", seed, "master seed override");
  app.add_option("--threads", threads, "worker thread count override");
  app.add_option("--out", out_dir, "output directory override");
  app.add_option("--ell", ell_csv, "comma-separated degree list override");
  app.add_option("--reps", reps, "replicate count override");

  CLI::App* c_moments = app.add_subcommand("moments", "two-point moment tables vs asymptotes");
  CLI::App* c_diagram = app.add_subcommand("diagram", "joint Hermite moment identity scans");
  CLI::App* c_graph = app.add_subcommand("graph-integral", "convolution constants and quartet scans");
  CLI::App* c_sim = app.add_subcommand("simulate", "field replicates: X, standardized X, sigma");
  CLI::App* c_rates = app.add_subcommand("rates", "distance-to-Gaussian decay and rate fits");
  CLI::App* c_verify = app.add_subcommand("verify", "run the full verification suite");
  c_verify->add_option("--data-dir", data_dir, "directory holding golden reference files");
  std::string only_csv;
  c_verify->add_option("--only", only_csv, "comma-separated criterion ids (default: all 12)");
  CLI::App* c_config = app.add_subcommand("config", "configuration utilities");
  bool print_defaults = false;
  c_config->add_flag("--print-defaults", print_defaults, "dump the default config as JSON");

  CLI11_PARSE(app, argc, argv);

  std::signal(SIGINT, on_interrupt);
  std::signal(SIGTERM, on_interrupt);

  try {
    ExperimentConfig cfg = hsl::default_config();
    if (!config_path.empty()) hsl::apply_config_file(cfg, config_path);
    hsl::apply_env(cfg);
    if (app.count("--seed")) cfg.seed = seed;
    if (app.count("--threads")) cfg.threads = threads;
    if (app.count("--out")) cfg.out_dir = out_dir;
    if (app.count("--ell")) cfg.ell_list = hsl::parse_int_list(ell_csv);
    if (app.count("--reps")) cfg.reps = reps;

    if (c_config->parsed()) {
      if (print_defaults) {
        std::cout << json::parse(hsl::config_to_json(hsl::default_config())).dump(2)
                  << "\n";
        return 0;
      }
      std::cout << json::parse(hsl::config_to_json(cfg)).dump(2) << "\n";
      return 0;
    }
    if (c_moments->parsed()) return cmd_moments(cfg);
    if (c_diagram->parsed()) return cmd_diagram(cfg);
    if (c_graph->parsed()) return cmd_graph_integral(cfg);
    if (c_sim->parsed()) return cmd_simulate(cfg);
    if (c_rates->parsed()) return cmd_rates(cfg);
    if (c_verify->parsed()) return cmd_verify(cfg, data_dir, only_csv);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
