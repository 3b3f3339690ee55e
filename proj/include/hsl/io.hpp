#pragma once

// Experiment configuration and persistence: layered config resolution
// (defaults, then JSON file, then HSL_-prefixed environment, then CLI
// flags), canonical config hashing, SHA-256 digests, RFC-4180 CSV quoting,
// and JSON-lines records.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hsl/hermite.hpp"
#include "hsl/stats.hpp"

namespace hsl {

// FIPS 180-4 SHA-256, hex-encoded.
std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex(const std::string& data);
std::string sha256_file_hex(const std::string& path);  // throws on open failure

// RFC-4180 quoting: a field holding comma, quote, CR, or LF is wrapped in
// double quotes with embedded quotes doubled.
std::string csv_field(const std::string& raw);
std::string csv_join(const std::vector<std::string>& fields);  // no newline

// Shortest decimal form that round-trips the double; "nan"/"inf"/"-inf" for
// the non-finite values. Deterministic, so reruns stay byte-identical.
std::string format_double(double v);

struct ExperimentConfig {
  int d = 2;
  std::vector<int> ell_list{8, 16, 32, 64};
  std::string phi_kind = "exponential";  // exponential | hermite | polynomial
  double phi_t = 0.5;                    // exponential parameter
  int phi_hermite = 2;                   // single-Hermite index
  std::vector<double> phi_poly;          // monomial coefficients
  int phi_q = -1;                        // truncation override, -1 = default
  std::string backend = "auto";          // auto | synthesis | cholesky
  int oversample = 1;
  int reps = 1000;
  long long mc_samples = 1000000;
  std::uint64_t seed = 20240901;
  int threads = 1;
  std::string out_dir = "out";
  double bandwidth = 0.1;                // smoothed-TV proxy kernel width
  std::map<std::string, double> tolerances;  // named overrides
};

ExperimentConfig default_config();

// Overrides from a JSON document; unknown keys and wrong types throw
// std::runtime_error naming the field. The file variant adds the path and,
// for parse errors, the byte offset.
void apply_config_json(ExperimentConfig& cfg, const std::string& text,
                       const std::string& origin);
void apply_config_file(ExperimentConfig& cfg, const std::string& path);
// HSL_D, HSL_ELL, HSL_PHI_KIND, HSL_PHI_T, HSL_PHI_HERMITE, HSL_PHI_POLY,
// HSL_PHI_Q, HSL_BACKEND, HSL_OVERSAMPLE, HSL_REPS, HSL_MC_SAMPLES,
// HSL_SEED, HSL_THREADS, HSL_OUT, HSL_BANDWIDTH.
void apply_env(ExperimentConfig& cfg);

// Canonical form: sorted keys, no insignificant whitespace. The hash is the
// SHA-256 of the canonical form with `threads` and `out_dir` removed (they
// affect execution, never results), hence stable under key reordering and
// across runs that differ only in destination or parallelism.
std::string config_to_json(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);

// Chaos coefficients for the configured test function.
ChaosSpec make_chaos(const ExperimentConfig& cfg);

// Maps cfg.backend ("auto" | "synthesis" | "cholesky"); throws otherwise.
BackendChoice backend_choice(const ExperimentConfig& cfg);

// "8,16,32" -> {8,16,32}; throws std::runtime_error on junk.
std::vector<int> parse_int_list(const std::string& text);
std::vector<double> parse_double_list(const std::string& text);

struct ResultRecord {
  std::string experiment_id;
  std::string timestamp;  // kept out of payloads so reruns are byte-identical
  std::string config_hash;
  std::string payload_path;  // leaf name, relative to the manifest's directory
  std::string payload_sha256;
};
std::string record_to_json(const ResultRecord& r);

}  // namespace hsl
